//! Seeded deterministic RNG (splitmix64) for the randomized verification
//! suites. Hand-rolled so that reports are byte-identical across platforms.

#[derive(Debug, Clone)]
pub struct DetRng {
    state: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in 0..bound (bound > 0); desk-scale bounds, modulo bias is
    /// negligible and determinism is what matters.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}
