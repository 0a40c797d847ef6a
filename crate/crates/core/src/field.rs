//! Finite field towers with exact arithmetic.
//!
//! The base layout is F_p -> F_q = F_p\[z\]/(f) -> F_{q^m} -> F_{q^{mM}}, built
//! as successive extensions. Elements are stored flat: an element of the
//! level-L field is a vector of F_p limbs of length e * d_1 * ... * d_{L-1},
//! read as nested little-endian coordinates. Extensions above F_q are found by
//! a deterministic search for the first irreducible modulus in index order, so
//! all outputs are reproducible.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::Ring;

/// One extension step: `degree` over the previous level, with a monic
/// `modulus` of `degree + 1` coefficients, each a flat element of the
/// previous level (`prev_dim` limbs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub degree: usize,
    pub modulus: Vec<u64>,
    pub prev_dim: usize,
}

/// A tower of field extensions over F_p. `levels[0]` defines F_q over F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tower {
    pub p: u64,
    levels: Vec<Level>,
}

const SMALL_PRIMES: [u64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = 49;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Default moduli in the spirit of Conway polynomial tables, little-endian
/// coefficients over F_p. Verified irreducible and primitive by the test
/// suite.
pub fn default_modulus(p: u64, e: usize) -> Result<Vec<u64>> {
    let coeffs: &[u64] = match (p, e) {
        (2, 1) => &[1, 1],
        (2, 2) => &[1, 1, 1],
        (2, 3) => &[1, 1, 0, 1],
        (2, 4) => &[1, 1, 0, 0, 1],
        (3, 1) => &[1, 1],
        (3, 2) => &[2, 2, 1],
        (3, 3) => &[1, 2, 0, 1],
        (3, 4) => &[2, 0, 0, 2, 1],
        (5, 1) => &[3, 1],
        (5, 2) => &[2, 4, 1],
        (5, 3) => &[3, 3, 0, 1],
        (5, 4) => &[2, 4, 4, 0, 1],
        (7, 1) => &[4, 1],
        (7, 2) => &[3, 6, 1],
        (7, 3) => &[4, 0, 6, 1],
        (7, 4) => &[3, 4, 5, 0, 1],
        _ => return Err(Error::NoDefaultModulus { p, e }),
    };
    Ok(coeffs.to_vec())
}

impl Tower {
    /// The field F_q = F_p\[z\]/(modulus). With `modulus = None` the default
    /// table entry is used.
    pub fn fq(p: u64, e: usize, modulus: Option<Vec<u64>>) -> Result<Arc<Tower>> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if e == 0 {
            return Err(Error::Invalid("extension degree must be >= 1".into()));
        }
        let modulus = match modulus {
            Some(m) => {
                if m.len() != e + 1 || m[e] % p != 1 {
                    return Err(Error::Invalid("modulus must be monic of degree e".into()));
                }
                m.iter().map(|c| c % p).collect()
            }
            None => default_modulus(p, e)?,
        };
        let tower = Tower {
            p,
            levels: vec![Level {
                degree: e,
                modulus,
                prev_dim: 1,
            }],
        };
        if !tower.modulus_irreducible(0) {
            return Err(Error::ReducibleModulus);
        }
        Ok(Arc::new(tower))
    }

    /// Number of extension steps; elements live at levels `1..=top_level()`.
    pub fn top_level(&self) -> usize {
        self.levels.len()
    }

    pub fn q(&self) -> u64 {
        self.p.pow(self.levels[0].degree as u32)
    }

    /// F_p-dimension of the level-`level` field.
    pub fn flat_dim(&self, level: usize) -> usize {
        self.levels[..level]
            .iter()
            .map(|l| l.degree)
            .product::<usize>()
            .max(1)
    }

    /// Number of elements of the level-`level` field.
    pub fn size(&self, level: usize) -> u64 {
        self.p.pow(self.flat_dim(level) as u32)
    }

    pub fn level_degree(&self, level: usize) -> usize {
        self.levels[level - 1].degree
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// True when `self` and `other` agree on all levels up to `level`.
    pub fn compatible_at(&self, other: &Tower, level: usize) -> bool {
        self.p == other.p
            && self.levels.len() >= level
            && other.levels.len() >= level
            && self.levels[..level] == other.levels[..level]
    }

    pub fn zero(self: &Arc<Self>, level: usize) -> FieldElem {
        FieldElem {
            tower: self.clone(),
            level,
            data: vec![0; self.flat_dim(level)],
        }
    }

    pub fn one(self: &Arc<Self>, level: usize) -> FieldElem {
        let mut z = self.zero(level);
        z.data[0] = 1 % self.p;
        z
    }

    /// The generator adjoined at `level` (the class of the variable).
    pub fn generator(self: &Arc<Self>, level: usize) -> FieldElem {
        let mut z = self.zero(level);
        if self.level_degree(level) == 1 {
            // Degree-1 step: the variable reduces to -modulus[0].
            let lvl = &self.levels[level - 1];
            let sub = lvl.prev_dim;
            let neg = self.slice_neg(&lvl.modulus[..sub]);
            z.data[..sub].copy_from_slice(&neg);
        } else {
            z.data[self.flat_dim(level - 1)] = 1;
        }
        z
    }

    pub fn from_u64(self: &Arc<Self>, level: usize, n: u64) -> FieldElem {
        let mut z = self.zero(level);
        z.data[0] = n % self.p;
        z
    }

    /// Canonical enumeration: index -> element, by base-p digits (little-endian).
    pub fn el_from_index(self: &Arc<Self>, level: usize, mut idx: u64) -> FieldElem {
        let dim = self.flat_dim(level);
        let mut data = vec![0; dim];
        for d in data.iter_mut() {
            *d = idx % self.p;
            idx /= self.p;
        }
        FieldElem {
            tower: self.clone(),
            level,
            data,
        }
    }

    pub fn el_to_index(&self, el: &FieldElem) -> u64 {
        let mut idx = 0u64;
        for &d in el.data.iter().rev() {
            idx = idx * self.p + d;
        }
        idx
    }

    pub fn enumerate(self: &Arc<Self>, level: usize) -> impl Iterator<Item = FieldElem> + '_ {
        let n = self.size(level);
        let t = self.clone();
        (0..n).map(move |i| t.el_from_index(level, i))
    }

    /// Extend the tower by the first irreducible monic modulus of `degree`
    /// over the current top field, in canonical index order.
    pub fn extend_deterministic(self: &Arc<Self>, degree: usize) -> Arc<Tower> {
        let top = self.top_level();
        let dim = self.flat_dim(top);
        if degree == 1 {
            // x - 0 suffices (any monic linear polynomial is irreducible).
            let mut modulus = vec![0; 2 * dim];
            modulus[dim] = 1;
            let mut levels = self.levels.clone();
            levels.push(Level {
                degree: 1,
                modulus,
                prev_dim: dim,
            });
            return Arc::new(Tower { p: self.p, levels });
        }
        let field_size = self.size(top);
        let mut idx = 0u64;
        loop {
            // Candidate lower coefficients from the index digits in base q^top.
            let mut rest = idx;
            let mut modulus = Vec::with_capacity((degree + 1) * dim);
            for _ in 0..degree {
                let c = self.el_from_index(top, rest % field_size);
                rest /= field_size;
                modulus.extend_from_slice(&c.data);
            }
            let mut lead = vec![0; dim];
            lead[0] = 1;
            modulus.extend_from_slice(&lead);
            let mut levels = self.levels.clone();
            levels.push(Level {
                degree,
                modulus,
                prev_dim: dim,
            });
            let cand = Tower { p: self.p, levels };
            if cand.modulus_irreducible(cand.levels.len() - 1) {
                return Arc::new(cand);
            }
            idx += 1;
        }
    }

    /// Extend the tower by an explicitly given monic modulus of `degree` over
    /// the current top field: one flat top-field element per coefficient,
    /// low degree first, `degree + 1` of them. Irreducibility is validated.
    pub fn extend_with_modulus(
        self: &Arc<Self>,
        degree: usize,
        coeffs: &[Vec<u64>],
    ) -> Result<Arc<Tower>> {
        let top = self.top_level();
        let dim = self.flat_dim(top);
        if coeffs.len() != degree + 1 {
            return Err(Error::Invalid(format!(
                "tower modulus needs {} coefficients, got {}",
                degree + 1,
                coeffs.len()
            )));
        }
        let mut modulus = Vec::with_capacity((degree + 1) * dim);
        for c in coeffs {
            if c.len() != dim {
                return Err(Error::Invalid(format!(
                    "tower modulus coefficients need {dim} limbs, got {}",
                    c.len()
                )));
            }
            modulus.extend(c.iter().map(|&x| x % self.p));
        }
        let lead = &modulus[degree * dim..];
        let mut monic = vec![0u64; dim];
        monic[0] = 1;
        if lead != monic {
            return Err(Error::Invalid("tower modulus must be monic".into()));
        }
        let mut levels = self.levels.clone();
        levels.push(Level {
            degree,
            modulus,
            prev_dim: dim,
        });
        let cand = Tower { p: self.p, levels };
        if degree > 1 && !cand.modulus_irreducible(cand.levels.len() - 1) {
            return Err(Error::ReducibleModulus);
        }
        Ok(Arc::new(cand))
    }

    // ---- slice arithmetic at level 0 (F_p) ----

    fn p_inv(&self, a: u64) -> u64 {
        // Fermat inverse; p is a small prime.
        let mut acc = 1u64;
        let mut b = a % self.p;
        let mut n = self.p - 2;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * b % self.p;
            }
            b = b * b % self.p;
            n >>= 1;
        }
        acc
    }

    // ---- generic slice arithmetic ----
    // Elements at level L are slices of flat_dim(L) limbs interpreted as
    // polynomials of level_degree(L) coefficients over level L-1.

    pub fn slice_add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn slice_sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x + self.p - y) % self.p)
            .collect()
    }

    pub fn slice_neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|x| (self.p - x) % self.p).collect()
    }

    pub fn slice_is_zero(a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }

    /// Multiply two level-`level` elements.
    pub fn slice_mul(&self, level: usize, a: &[u64], b: &[u64]) -> Vec<u64> {
        if level == 0 {
            return vec![a[0] * b[0] % self.p];
        }
        let lvl = &self.levels[level - 1];
        let d = lvl.degree;
        let sub = lvl.prev_dim;
        // Convolution with 2d-1 coefficient slots.
        let mut buf = vec![0u64; (2 * d - 1) * sub];
        for i in 0..d {
            let ai = &a[i * sub..(i + 1) * sub];
            if Self::slice_is_zero(ai) {
                continue;
            }
            for j in 0..d {
                let bj = &b[j * sub..(j + 1) * sub];
                if Self::slice_is_zero(bj) {
                    continue;
                }
                let prod = self.slice_mul(level - 1, ai, bj);
                let out = &mut buf[(i + j) * sub..(i + j + 1) * sub];
                for (o, v) in out.iter_mut().zip(prod) {
                    *o = (*o + v) % self.p;
                }
            }
        }
        // Reduce by the monic modulus.
        for i in (d..2 * d - 1).rev() {
            let c = buf[i * sub..(i + 1) * sub].to_vec();
            if Self::slice_is_zero(&c) {
                continue;
            }
            for j in 0..d {
                let mj = &lvl.modulus[j * sub..(j + 1) * sub];
                if Self::slice_is_zero(mj) {
                    continue;
                }
                let prod = self.slice_mul(level - 1, &c, mj);
                let out = &mut buf[(i - d + j) * sub..(i - d + j + 1) * sub];
                for (o, v) in out.iter_mut().zip(prod) {
                    *o = (*o + self.p - v % self.p) % self.p;
                }
            }
            for v in buf[i * sub..(i + 1) * sub].iter_mut() {
                *v = 0;
            }
        }
        buf.truncate(d * sub);
        buf
    }

    pub fn slice_pow(&self, level: usize, a: &[u64], mut n: u64) -> Vec<u64> {
        let dim = self.flat_dim(level);
        let mut acc = vec![0u64; dim];
        acc[0] = 1 % self.p;
        let mut base = a.to_vec();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.slice_mul(level, &acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.slice_mul(level, &base, &base);
            }
        }
        acc
    }

    /// Inverse of a nonzero level-`level` element, by extended Euclid against
    /// the modulus at each level down the tower.
    pub fn slice_inv(&self, level: usize, a: &[u64]) -> Result<Vec<u64>> {
        if Self::slice_is_zero(a) {
            return Err(Error::DivisionByZero);
        }
        if level == 0 {
            return Ok(vec![self.p_inv(a[0])]);
        }
        let lvl = &self.levels[level - 1];
        let sub = lvl.prev_dim;
        let chunk = |v: &[u64]| -> Vec<Vec<u64>> { v.chunks(sub).map(|c| c.to_vec()).collect() };
        let mut r0 = chunk(&lvl.modulus);
        let mut r1 = chunk(a);
        trim_poly(&mut r1);
        let mut s0: Vec<Vec<u64>> = vec![];
        let mut s1: Vec<Vec<u64>> = vec![vec![0; sub]];
        s1[0][0] = 1;
        while !r1.is_empty() {
            let (quot, rem) = self.polv_divmod(level - 1, &r0, &r1)?;
            let s_new = self.polv_sub(&s0, &self.polv_mul(level - 1, &quot, &s1));
            r0 = r1;
            r1 = rem;
            s0 = s1;
            s1 = s_new;
        }
        // r0 is a nonzero constant gcd.
        if r0.len() != 1 {
            return Err(Error::DivisionByZero);
        }
        let c_inv = self.slice_inv(level - 1, &r0[0])?;
        let mut out = vec![0u64; self.flat_dim(level)];
        for (i, c) in s0.iter().enumerate() {
            let v = self.slice_mul(level - 1, c, &c_inv);
            out[i * sub..(i + 1) * sub].copy_from_slice(&v);
        }
        Ok(out)
    }

    // ---- polynomials with level-`level` coefficients (Vec of flat slices) ----

    fn polv_mul(&self, level: usize, a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let dim = self.flat_dim(level);
        let mut out = vec![vec![0u64; dim]; a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            if Self::slice_is_zero(ai) {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                let prod = self.slice_mul(level, ai, bj);
                let o = &mut out[i + j];
                for (x, v) in o.iter_mut().zip(prod) {
                    *x = (*x + v) % self.p;
                }
            }
        }
        trim_poly(&mut out);
        out
    }

    fn polv_sub(&self, a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let dim = a.iter().chain(b.iter()).map(|v| v.len()).max().unwrap_or(0);
        let n = a.len().max(b.len());
        let zero = vec![0u64; dim];
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let x = a.get(i).unwrap_or(&zero);
            let y = b.get(i).unwrap_or(&zero);
            out.push(self.slice_sub(x, y));
        }
        trim_poly(&mut out);
        out
    }

    fn polv_divmod(
        &self,
        level: usize,
        a: &[Vec<u64>],
        b: &[Vec<u64>],
    ) -> Result<(Vec<Vec<u64>>, Vec<Vec<u64>>)> {
        let mut bb = b.to_vec();
        trim_poly(&mut bb);
        if bb.is_empty() {
            return Err(Error::DivisionByZero);
        }
        let dim = self.flat_dim(level);
        let lead_inv = self.slice_inv(level, bb.last().unwrap())?;
        let mut rem: Vec<Vec<u64>> = a.to_vec();
        trim_poly(&mut rem);
        if rem.len() < bb.len() {
            return Ok((vec![], rem));
        }
        let mut quot = vec![vec![0u64; dim]; rem.len() - bb.len() + 1];
        while rem.len() >= bb.len() {
            let i = rem.len() - bb.len();
            let c = self.slice_mul(level, rem.last().unwrap(), &lead_inv);
            quot[i] = c.clone();
            for (j, bj) in bb.iter().enumerate() {
                let prod = self.slice_mul(level, &c, bj);
                let o = &mut rem[i + j];
                for (x, v) in o.iter_mut().zip(prod) {
                    *x = (*x + self.p - v % self.p) % self.p;
                }
            }
            trim_poly(&mut rem);
        }
        trim_poly(&mut quot);
        Ok((quot, rem))
    }

    fn polv_powmod(
        &self,
        level: usize,
        base: &[Vec<u64>],
        mut n: u64,
        modulus: &[Vec<u64>],
    ) -> Vec<Vec<u64>> {
        let dim = self.flat_dim(level);
        let mut acc = vec![vec![0u64; dim]];
        acc[0][0] = 1 % self.p;
        let mut b = self
            .polv_divmod(level, base, modulus)
            .expect("monic modulus")
            .1;
        while n > 0 {
            if n & 1 == 1 {
                let prod = self.polv_mul(level, &acc, &b);
                acc = self
                    .polv_divmod(level, &prod, modulus)
                    .expect("monic modulus")
                    .1;
            }
            n >>= 1;
            if n > 0 {
                let sq = self.polv_mul(level, &b, &b);
                b = self
                    .polv_divmod(level, &sq, modulus)
                    .expect("monic modulus")
                    .1;
            }
        }
        acc
    }

    fn polv_gcd_is_const(&self, level: usize, a: &[Vec<u64>], b: &[Vec<u64>]) -> bool {
        let mut r0 = a.to_vec();
        let mut r1 = b.to_vec();
        trim_poly(&mut r0);
        trim_poly(&mut r1);
        while !r1.is_empty() {
            let (_, rem) = self.polv_divmod(level, &r0, &r1).expect("nonzero divisor");
            r0 = r1;
            r1 = rem;
        }
        r0.len() == 1
    }

    /// Frobenius-based irreducibility test for the modulus of `levels[idx]`
    /// over the field below it: x^(Q^d) = x mod f, and for every prime l | d,
    /// gcd(x^(Q^(d/l)) - x, f) = 1, where Q is the size of the coefficient field.
    fn modulus_irreducible(&self, idx: usize) -> bool {
        let level = idx; // coefficient level
        let lvl = &self.levels[idx];
        let d = lvl.degree;
        let sub = lvl.prev_dim;
        let f: Vec<Vec<u64>> = lvl.modulus.chunks(sub).map(|c| c.to_vec()).collect();
        let q_coeff = self.p.pow(self.flat_dim(level) as u32);
        if d == 1 {
            return true;
        }
        let mut x = vec![vec![0u64; sub]; 2];
        x[1][0] = 1;
        // b_j = x^(Q^j) mod f, computed by iterating the Q-power map.
        let mut b = x.clone();
        let mut divisors_checked = true;
        for j in 1..=d {
            b = self.polv_powmod(level, &b, q_coeff, &f);
            if j < d && d.is_multiple_of(j) && is_maximal_proper_divisor(j, d) {
                let diff = self.polv_sub(&b, &x);
                if diff.is_empty() {
                    // x^(Q^j) = x for a proper divisor: reducible (or a subfield).
                    divisors_checked = false;
                } else if !self.polv_gcd_is_const(level, &f, &diff) {
                    divisors_checked = false;
                }
            }
        }
        trim_poly(&mut x);
        let diff = self.polv_sub(&b, &x);
        diff.is_empty() && divisors_checked
    }
}

fn trim_poly(v: &mut Vec<Vec<u64>>) {
    while let Some(last) = v.last() {
        if Tower::slice_is_zero(last) {
            v.pop();
        } else {
            break;
        }
    }
}

/// True when `j = d / l` for some prime `l`.
fn is_maximal_proper_divisor(j: usize, d: usize) -> bool {
    d.is_multiple_of(j) && is_prime((d / j) as u64)
}

/// An element of the level-`level` field of `tower`.
#[derive(Clone)]
pub struct FieldElem {
    pub tower: Arc<Tower>,
    pub level: usize,
    pub data: Vec<u64>,
}

impl FieldElem {
    /// Re-interpret in a tower extending this one, at `target_level >= level`
    /// (constant embedding).
    pub fn lift_to(&self, target: &Arc<Tower>, target_level: usize) -> FieldElem {
        assert!(
            target.compatible_at(&self.tower, self.level),
            "towers disagree below the lift level"
        );
        assert!(target_level >= self.level);
        let mut data = vec![0; target.flat_dim(target_level)];
        data[..self.data.len()].copy_from_slice(&self.data);
        FieldElem {
            tower: target.clone(),
            level: target_level,
            data,
        }
    }

    /// Inverse of `lift_to` when the element actually lies in the subfield.
    pub fn retract_to(&self, level: usize) -> Option<FieldElem> {
        let dim = self.tower.flat_dim(level);
        if self.data[dim..].iter().any(|&x| x != 0) {
            return None;
        }
        Some(FieldElem {
            tower: self.tower.clone(),
            level,
            data: self.data[..dim].to_vec(),
        })
    }

    /// Coordinates over F_q (level-1 chunks).
    pub fn fq_coords(&self) -> Vec<FieldElem> {
        let e = self.tower.flat_dim(1);
        self.data
            .chunks(e)
            .map(|c| FieldElem {
                tower: self.tower.clone(),
                level: 1,
                data: c.to_vec(),
            })
            .collect()
    }

    pub fn from_fq_coords(tower: &Arc<Tower>, level: usize, coords: &[FieldElem]) -> FieldElem {
        let e = tower.flat_dim(1);
        let dim = tower.flat_dim(level);
        assert_eq!(coords.len() * e, dim);
        let mut data = Vec::with_capacity(dim);
        for c in coords {
            assert_eq!(c.level, 1);
            data.extend_from_slice(&c.data);
        }
        FieldElem {
            tower: tower.clone(),
            level,
            data,
        }
    }

    pub fn index(&self) -> u64 {
        self.tower.el_to_index(self)
    }
}

impl PartialEq for FieldElem {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.data == other.data
            && self.tower.compatible_at(&other.tower, self.level)
    }
}

impl Eq for FieldElem {}

impl Hash for FieldElem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tower.p.hash(state);
        self.level.hash(state);
        self.data.hash(state);
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F[L{}]{:?}", self.level, self.data)
    }
}

impl Ring for FieldElem {
    fn zero_like(&self) -> Self {
        self.tower.zero(self.level)
    }

    fn one_like(&self) -> Self {
        self.tower.one(self.level)
    }

    fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.level, rhs.level, "field level mismatch");
        FieldElem {
            tower: self.tower.clone(),
            level: self.level,
            data: self.tower.slice_add(&self.data, &rhs.data),
        }
    }

    fn neg(&self) -> Self {
        FieldElem {
            tower: self.tower.clone(),
            level: self.level,
            data: self.tower.slice_neg(&self.data),
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.level, rhs.level, "field level mismatch");
        FieldElem {
            tower: self.tower.clone(),
            level: self.level,
            data: self.tower.slice_mul(self.level, &self.data, &rhs.data),
        }
    }

    fn is_zero(&self) -> bool {
        Tower::slice_is_zero(&self.data)
    }

    fn inv(&self) -> Result<Self> {
        Ok(FieldElem {
            tower: self.tower.clone(),
            level: self.level,
            data: self.tower.slice_inv(self.level, &self.data)?,
        })
    }

    fn is_unit(&self) -> bool {
        !self.is_zero()
    }

    fn q(&self) -> u64 {
        self.tower.q()
    }

    fn frob_q(&self) -> Self {
        self.pow(self.tower.q())
    }

    fn pow(&self, n: u64) -> Self {
        FieldElem {
            tower: self.tower.clone(),
            level: self.level,
            data: self.tower.slice_pow(self.level, &self.data, n),
        }
    }
}

/// Serializable description of the base field and its optional tower step,
/// mirroring the JSON value encoding.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FieldDesc {
    pub p: u64,
    pub e: usize,
    /// Little-endian coefficients over F_p; `None` selects the default table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
    /// Optional further extension degree m over F_q.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tower: Option<usize>,
    /// Explicit irreducible modulus for the tower step, one flat F_q element
    /// (e limbs over F_p) per coefficient, low degree first, monic, length
    /// m + 1. `None` selects the deterministic search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tower_modulus: Option<Vec<Vec<u64>>>,
}

impl FieldDesc {
    pub fn new(p: u64, e: usize) -> Self {
        FieldDesc {
            p,
            e,
            modulus: None,
            tower: None,
            tower_modulus: None,
        }
    }

    pub fn with_tower(mut self, m: usize) -> Self {
        self.tower = Some(m);
        self
    }

    pub fn with_tower_modulus(mut self, m: usize, modulus: Vec<Vec<u64>>) -> Self {
        self.tower = Some(m);
        self.tower_modulus = Some(modulus);
        self
    }

    /// Build the tower; the element field is the top level.
    pub fn build(&self) -> Result<Arc<Tower>> {
        let base = Tower::fq(self.p, self.e, self.modulus.clone())?;
        match self.tower {
            None => Ok(base),
            Some(m) => {
                if m == 0 {
                    return Err(Error::Invalid("tower degree must be >= 1".into()));
                }
                match &self.tower_modulus {
                    None => Ok(base.extend_deterministic(m)),
                    Some(coeffs) => base.extend_with_modulus(m, coeffs),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_nonzero_orders(t: &Arc<Tower>, level: usize) -> bool {
        // The generator of the default modulus should be primitive.
        let g = t.generator(level);
        let n = t.size(level) - 1;
        let mut seen = std::collections::HashSet::new();
        let mut acc = t.one(level);
        for _ in 0..n {
            acc = acc.mul(&g);
            seen.insert(acc.index());
        }
        seen.len() as u64 == n
    }

    #[test]
    fn default_moduli_are_irreducible_and_primitive() {
        for p in [2u64, 3, 5, 7] {
            for e in 1..=4usize {
                let t = Tower::fq(p, e, None).unwrap();
                assert_eq!(t.size(1), p.pow(e as u32));
                assert!(
                    all_nonzero_orders(&t, 1),
                    "p={p} e={e} generator not primitive"
                );
            }
        }
    }

    #[test]
    fn field_axioms_small() {
        let t = Tower::fq(3, 2, None).unwrap();
        let els: Vec<_> = t.enumerate(1).collect();
        for a in &els {
            for b in &els {
                assert_eq!(a.add(b), b.add(a));
                assert_eq!(a.mul(b), b.mul(a));
                if !b.is_zero() {
                    let binv = b.inv().unwrap();
                    assert_eq!(b.mul(&binv), t.one(1));
                }
            }
        }
        for a in &els {
            for b in &els {
                for c in &els {
                    assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
                    assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)));
                }
            }
        }
    }

    #[test]
    fn frobenius_fixes_prime_field_and_is_additive() {
        let t = Tower::fq(2, 2, None).unwrap().extend_deterministic(3);
        assert_eq!(t.top_level(), 2);
        assert_eq!(t.size(2), 4u64.pow(3));
        for a in t.enumerate(2).take(40) {
            for b in t.enumerate(2).take(20) {
                assert_eq!(a.add(&b).frob_q(), a.frob_q().add(&b.frob_q()));
            }
            // x -> x^q fixes exactly F_q.
            let fixed = a.frob_q() == a;
            let in_fq = a.retract_to(1).is_some();
            assert_eq!(fixed, in_fq, "{a:?}");
        }
    }

    #[test]
    fn lift_and_retract_roundtrip() {
        let base = Tower::fq(3, 1, None).unwrap();
        let ext = base.extend_deterministic(2);
        let a = base.el_from_index(1, 2);
        let lifted = a.lift_to(&ext, 2);
        assert_eq!(lifted.retract_to(1).unwrap().data, a.data);
        let g = ext.generator(2);
        assert!(g.retract_to(1).is_none());
    }

    #[test]
    fn explicit_tower_modulus_is_validated() {
        // F_9 = F_3[w]/(w^2 + 1) explicitly; w^2 - 1 is rejected.
        let desc = FieldDesc::new(3, 1).with_tower_modulus(2, vec![vec![1], vec![0], vec![1]]);
        let t = desc.build().unwrap();
        assert_eq!(t.size(2), 9);
        let w = t.generator(2);
        assert_eq!(w.mul(&w), t.one(2).neg());
        let bad = FieldDesc::new(3, 1).with_tower_modulus(2, vec![vec![2], vec![0], vec![1]]);
        assert!(matches!(bad.build(), Err(Error::ReducibleModulus)));
    }

    #[test]
    fn deterministic_extension_is_stable() {
        let a = Tower::fq(2, 1, None).unwrap().extend_deterministic(2);
        let b = Tower::fq(2, 1, None).unwrap().extend_deterministic(2);
        assert_eq!(*a, *b);
        // F_4 = F_2[w]/(w^2+w+1) is the first irreducible quadratic.
        assert_eq!(a.levels()[1].modulus, vec![1, 1, 1]);
    }
}
