use std::fmt::Debug;

use crate::error::Result;

/// Common surface of the coefficient rings the Ore and series layers are
/// generic over: finite fields in a tower over F_q, the polynomial ring
/// A = F_q\[t\], quotients A/(n) and truncated Laurent series over any of them.
///
/// Elements carry their own ring context, so fresh constants are derived from
/// an existing element (`zero_like`, `one_like`) rather than from a ring
/// object. All operations are pure; every value is immutable once built.
pub trait Ring: Clone + PartialEq + Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;

    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    fn is_zero(&self) -> bool;

    /// Equality as far as both sides are known: exact rings compare
    /// strictly, truncated series compare digits below the joint precision.
    /// Identity checks go through this, so results computed along different
    /// precision paths still compare.
    fn agrees(&self, other: &Self) -> bool {
        self == other
    }

    /// Multiplicative inverse, when `self` is a unit of the ring.
    fn inv(&self) -> Result<Self>;

    fn is_unit(&self) -> bool;

    /// Size of the constant field F_q the Ore twist is taken relative to.
    fn q(&self) -> u64;

    /// The q-th power map b -> b^q. This is the twist used by tau: tau b = b^q tau.
    fn frob_q(&self) -> Self;

    /// b -> b^(q^i).
    fn frob_q_iter(&self, i: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..i {
            out = out.frob_q();
        }
        out
    }

    fn pow(&self, mut n: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Scale by a small integer (reduction of n mod p is taken inside).
    fn scale_int(&self, n: i64) -> Self {
        let p = {
            // q = p^e; recover p by trial division (q is a prime power <= 7^4).
            let q = self.q();
            let mut p = 2;
            while !q.is_multiple_of(p) {
                p += 1;
            }
            p
        };
        let r = n.rem_euclid(p as i64) as u64;
        let mut acc = self.zero_like();
        for _ in 0..r {
            acc = acc.add(self);
        }
        acc
    }
}
