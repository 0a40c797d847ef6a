//! The polynomial ring A = F_q\[t\], in canonical form (no trailing zero
//! coefficient). Coefficients are level-1 field elements stored packed, `e`
//! limbs per degree. Multiplication is schoolbook with a Karatsuba split
//! above a small threshold, which is all that desk-scale precision needs.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldElem, Tower};
use crate::ring::Ring;

#[derive(Clone)]
pub struct Poly {
    pub tower: Arc<Tower>,
    /// Packed coefficients, `e` limbs per degree, low degree first.
    pub coeffs: Vec<u64>,
}

const KARATSUBA_THRESHOLD: usize = 32;

impl Poly {
    pub fn zero(tower: &Arc<Tower>) -> Poly {
        Poly {
            tower: tower.clone(),
            coeffs: vec![],
        }
    }

    pub fn one(tower: &Arc<Tower>) -> Poly {
        Poly::constant(tower.one(1))
    }

    pub fn t(tower: &Arc<Tower>) -> Poly {
        let e = tower.flat_dim(1);
        let mut coeffs = vec![0; 2 * e];
        coeffs[e] = 1;
        Poly {
            tower: tower.clone(),
            coeffs,
        }
    }

    pub fn constant(c: FieldElem) -> Poly {
        assert_eq!(c.level, 1, "constants live in F_q");
        let mut p = Poly {
            tower: c.tower.clone(),
            coeffs: c.data,
        };
        p.normalize();
        p
    }

    /// Build from level-1 field elements, low degree first.
    pub fn from_coeff_elems(tower: &Arc<Tower>, elems: &[FieldElem]) -> Poly {
        let mut coeffs = Vec::new();
        for c in elems {
            assert_eq!(c.level, 1);
            coeffs.extend_from_slice(&c.data);
        }
        let mut p = Poly {
            tower: tower.clone(),
            coeffs,
        };
        p.normalize();
        p
    }

    /// Build from canonical coefficient indices (each an F_q index, see
    /// `Tower::el_from_index`), low degree first.
    pub fn from_indices(tower: &Arc<Tower>, idxs: &[u64]) -> Poly {
        let mut coeffs = Vec::new();
        for &i in idxs {
            coeffs.extend_from_slice(&tower.el_from_index(1, i).data);
        }
        let mut p = Poly {
            tower: tower.clone(),
            coeffs,
        };
        p.normalize();
        p
    }

    fn e(&self) -> usize {
        self.tower.flat_dim(1)
    }

    fn normalize(&mut self) {
        let e = self.e();
        while self.coeffs.len() >= e && self.coeffs[self.coeffs.len() - e..].iter().all(|&x| x == 0)
        {
            self.coeffs.truncate(self.coeffs.len() - e);
        }
    }

    /// Degree, with `None` as the sentinel for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() / self.e() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        let e = self.e();
        if (i + 1) * e <= self.coeffs.len() {
            FieldElem {
                tower: self.tower.clone(),
                level: 1,
                data: self.coeffs[i * e..(i + 1) * e].to_vec(),
            }
        } else {
            self.tower.zero(1)
        }
    }

    pub fn leading_coeff(&self) -> Option<FieldElem> {
        self.degree().map(|d| self.coeff(d))
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff()
            .map(|c| c == self.tower.one(1))
            .unwrap_or(false)
    }

    pub fn coeff_count(&self) -> usize {
        self.coeffs.len() / self.e().max(1)
    }

    /// Multiply by t^k.
    pub fn shift(&self, k: usize) -> Poly {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let e = self.e();
        let mut coeffs = vec![0; k * e];
        coeffs.extend_from_slice(&self.coeffs);
        Poly {
            tower: self.tower.clone(),
            coeffs,
        }
    }

    pub fn scalar_mul(&self, c: &FieldElem) -> Poly {
        assert_eq!(c.level, 1);
        if c.is_zero() {
            return Poly::zero(&self.tower);
        }
        let e = self.e();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for chunk in self.coeffs.chunks(e) {
            coeffs.extend(self.tower.slice_mul(1, chunk, &c.data));
        }
        let mut p = Poly {
            tower: self.tower.clone(),
            coeffs,
        };
        p.normalize();
        p
    }

    fn mul_packed(tower: &Tower, e: usize, a: &[u64], b: &[u64]) -> Vec<u64> {
        let na = a.len() / e;
        let nb = b.len() / e;
        if na == 0 || nb == 0 {
            return vec![];
        }
        if na.min(nb) < KARATSUBA_THRESHOLD {
            let p = tower.p;
            let mut out = vec![0u64; (na + nb - 1) * e];
            if e == 1 {
                for i in 0..na {
                    if a[i] == 0 {
                        continue;
                    }
                    for j in 0..nb {
                        out[i + j] = (out[i + j] + a[i] * b[j]) % p;
                    }
                }
            } else {
                for i in 0..na {
                    let ai = &a[i * e..(i + 1) * e];
                    if Tower::slice_is_zero(ai) {
                        continue;
                    }
                    for j in 0..nb {
                        let bj = &b[j * e..(j + 1) * e];
                        if Tower::slice_is_zero(bj) {
                            continue;
                        }
                        let prod = tower.slice_mul(1, ai, bj);
                        let o = &mut out[(i + j) * e..(i + j + 1) * e];
                        for (x, v) in o.iter_mut().zip(prod) {
                            *x = (*x + v) % p;
                        }
                    }
                }
            }
            return out;
        }
        // Karatsuba split at half the longer operand.
        let half = na.max(nb) / 2;
        let split = |v: &[u64]| -> (Vec<u64>, Vec<u64>) {
            if v.len() <= half * e {
                (v.to_vec(), vec![])
            } else {
                (v[..half * e].to_vec(), v[half * e..].to_vec())
            }
        };
        let (a0, a1) = split(a);
        let (b0, b1) = split(b);
        let p = tower.p;
        let z0 = Self::mul_packed(tower, e, &a0, &b0);
        let z2 = Self::mul_packed(tower, e, &a1, &b1);
        let asum = add_padded(p, &a0, &a1);
        let bsum = add_padded(p, &b0, &b1);
        let z1full = Self::mul_packed(tower, e, &asum, &bsum);
        let z1 = sub_padded(p, &sub_padded(p, &z1full, &z0), &z2);
        let mut out = vec![0u64; (na + nb - 1) * e];
        acc_at(p, &mut out, 0, &z0);
        acc_at(p, &mut out, half * e, &z1);
        acc_at(p, &mut out, 2 * half * e, &z2);
        out
    }

    pub fn divmod(&self, rhs: &Poly) -> Result<(Poly, Poly)> {
        let db = rhs.degree().ok_or(Error::DivisionByZero)?;
        let e = self.e();
        let lead_inv = self.tower.slice_inv(1, &rhs.coeffs[db * e..(db + 1) * e])?;
        let mut rem = self.clone();
        let mut quot_coeffs = vec![0u64; rem.coeffs.len().saturating_sub(db * e)];
        while let Some(da) = rem.degree() {
            if da < db {
                break;
            }
            let i = da - db;
            let c = self
                .tower
                .slice_mul(1, &rem.coeffs[da * e..(da + 1) * e], &lead_inv);
            quot_coeffs[i * e..(i + 1) * e].copy_from_slice(&c);
            let p = self.tower.p;
            for j in 0..=db {
                let bj = &rhs.coeffs[j * e..(j + 1) * e];
                if Tower::slice_is_zero(bj) {
                    continue;
                }
                let prod = self.tower.slice_mul(1, &c, bj);
                let o = &mut rem.coeffs[(i + j) * e..(i + j + 1) * e];
                for (x, v) in o.iter_mut().zip(prod) {
                    *x = (*x + p - v % p) % p;
                }
            }
            rem.normalize();
        }
        let mut quot = Poly {
            tower: self.tower.clone(),
            coeffs: quot_coeffs,
        };
        quot.normalize();
        Ok((quot, rem))
    }

    pub fn rem(&self, rhs: &Poly) -> Result<Poly> {
        Ok(self.divmod(rhs)?.1)
    }

    /// Euclidean gcd, made monic.
    pub fn gcd(&self, rhs: &Poly) -> Poly {
        let mut r0 = self.clone();
        let mut r1 = rhs.clone();
        while !r1.is_zero() {
            let rem = r0.rem(&r1).expect("nonzero divisor");
            r0 = r1;
            r1 = rem;
        }
        r0.make_monic()
    }

    /// Extended gcd: returns (g, s) with s * self = g mod modulus, g monic.
    pub fn xgcd_mod(&self, modulus: &Poly) -> (Poly, Poly) {
        let mut r0 = modulus.clone();
        let mut r1 = self.clone();
        let mut s0 = Poly::zero(&self.tower);
        let mut s1 = Poly::one(&self.tower);
        while !r1.is_zero() {
            let (q, r) = r0.divmod(&r1).expect("nonzero divisor");
            let s = s0.sub(&q.mul(&s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if let Some(lead) = r0.leading_coeff() {
            let li = lead.inv().expect("field");
            (r0.scalar_mul(&li), s0.scalar_mul(&li))
        } else {
            (r0, s0)
        }
    }

    pub fn make_monic(&self) -> Poly {
        match self.leading_coeff() {
            None => self.clone(),
            Some(c) => self.scalar_mul(&c.inv().expect("field")),
        }
    }

    /// Evaluate at an element of any level of a compatible tower.
    pub fn eval(&self, x: &FieldElem) -> FieldElem {
        let mut acc = x.tower.zero(x.level);
        for i in (0..self.coeff_count()).rev() {
            let c = self.coeff(i).lift_to(&x.tower, x.level);
            acc = acc.mul(x).add(&c);
        }
        acc
    }

    pub fn powmod(&self, mut n: u64, modulus: &Poly) -> Result<Poly> {
        let mut acc = Poly::one(&self.tower);
        let mut base = self.rem(modulus)?;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base).rem(modulus)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base).rem(modulus)?;
            }
        }
        Ok(acc)
    }

    /// Irreducibility over F_q by the Frobenius criterion.
    pub fn is_irreducible(&self) -> bool {
        let d = match self.degree() {
            None | Some(0) => return false,
            Some(d) => d,
        };
        if d == 1 {
            return true;
        }
        let q = self.tower.q();
        let t = Poly::t(&self.tower);
        let mut b = t.rem(self).expect("deg >= 2");
        for j in 1..=d {
            b = b.powmod(q, self).expect("monic-ish modulus");
            if j < d && d % j == 0 && (d / j) > 1 && crate::poly::is_prime_usize(d / j) {
                let g = b.sub(&t).gcd(self);
                if g.degree() != Some(0) {
                    return false;
                }
            }
        }
        b == t.rem(self).expect("deg >= 2")
    }
}

pub(crate) fn is_prime_usize(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn add_padded(p: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p)
        .collect()
}

fn sub_padded(p: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0) % p) % p)
        .collect()
}

fn acc_at(p: u64, out: &mut [u64], offset: usize, v: &[u64]) {
    for (i, &x) in v.iter().enumerate() {
        if x != 0 {
            out[offset + i] = (out[offset + i] + x) % p;
        }
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && self.tower.compatible_at(&other.tower, 1)
    }
}

impl Eq for Poly {}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for i in 0..self.coeff_count() {
            let c = self.coeff(i);
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{:?}", c.data)?,
                1 => write!(f, "{:?}*t", c.data)?,
                _ => write!(f, "{:?}*t^{}", c.data, i)?,
            }
        }
        Ok(())
    }
}

impl Ring for Poly {
    fn zero_like(&self) -> Self {
        Poly::zero(&self.tower)
    }

    fn one_like(&self) -> Self {
        Poly::one(&self.tower)
    }

    fn add(&self, rhs: &Self) -> Self {
        let mut out = Poly {
            tower: self.tower.clone(),
            coeffs: add_padded(self.tower.p, &self.coeffs, &rhs.coeffs),
        };
        out.normalize();
        out
    }

    fn neg(&self) -> Self {
        Poly {
            tower: self.tower.clone(),
            coeffs: self.tower.slice_neg(&self.coeffs),
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        let mut out = Poly {
            tower: self.tower.clone(),
            coeffs: Poly::mul_packed(&self.tower, self.e(), &self.coeffs, &rhs.coeffs),
        };
        out.normalize();
        out
    }

    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn inv(&self) -> Result<Self> {
        if self.degree() == Some(0) {
            let c = self.coeff(0).inv()?;
            Ok(Poly::constant(c))
        } else {
            Err(Error::NonUnitLeading)
        }
    }

    fn is_unit(&self) -> bool {
        self.degree() == Some(0)
    }

    fn q(&self) -> u64 {
        self.tower.q()
    }

    /// f -> f^q = f(t^q): spread coefficients to q-multiple degrees
    /// (coefficients are F_q-fixed under the Frobenius).
    fn frob_q(&self) -> Self {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let e = self.e();
        let q = self.tower.q() as usize;
        let n = self.coeff_count();
        let mut coeffs = vec![0; ((n - 1) * q + 1) * e];
        for i in 0..n {
            coeffs[i * q * e..(i * q + 1) * e].copy_from_slice(&self.coeffs[i * e..(i + 1) * e]);
        }
        Poly {
            tower: self.tower.clone(),
            coeffs,
        }
    }
}
