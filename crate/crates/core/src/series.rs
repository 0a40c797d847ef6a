//! Truncated Laurent series with honest precision tracking.
//!
//! A series stores its exact valuation `val`, a precision bound `prec` and the
//! digits for x^val .. x^(prec-1). The leading stored digit is nonzero, except
//! for the tracked zero which keeps `val == prec` as a sentinel and no digits.
//! Operations compute the correct precision of the result from the operands
//! and never report digits at or beyond it; asking for such a digit panics.

use std::fmt;

use crate::error::{Error, Result};
use crate::ring::Ring;

/// Variable tag: `x` almost everywhere, `u` for the ramified quadratic cover
/// with u^2 = x used by the product-formula check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    U,
}

impl Var {
    pub fn as_str(&self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct TruncSeries<C: Ring> {
    pub var: Var,
    /// Exact valuation; equals `prec` for the tracked zero.
    pub val: i64,
    /// Digits are known strictly below this exponent.
    pub prec: i64,
    /// Digits for x^val .. x^(prec-1).
    pub coeffs: Vec<C>,
    /// A zero of the coefficient ring, carrying its context.
    pub proto: C,
}

impl<C: Ring> TruncSeries<C> {
    pub fn zero(proto: &C, var: Var, prec: i64) -> Self {
        TruncSeries {
            var,
            val: prec,
            prec,
            coeffs: vec![],
            proto: proto.zero_like(),
        }
    }

    /// Build from digits starting at `val`; `prec = val + digits.len()`.
    /// Leading zeros are stripped so the valuation is exact.
    pub fn from_digits(var: Var, val: i64, digits: Vec<C>, proto: &C) -> Self {
        let prec = val + digits.len() as i64;
        let mut s = TruncSeries {
            var,
            val,
            prec,
            coeffs: digits,
            proto: proto.zero_like(),
        };
        s.normalize();
        s
    }

    pub fn constant(c: &C, var: Var, prec: i64) -> Self {
        assert!(prec > 0, "constant needs at least one digit");
        let mut digits = vec![c.clone()];
        for _ in 1..prec {
            digits.push(c.zero_like());
        }
        Self::from_digits(var, 0, digits, c)
    }

    /// The monomial x^k with digits known up to `prec`.
    pub fn monomial(proto: &C, var: Var, k: i64, prec: i64) -> Self {
        assert!(prec > k);
        let mut digits = vec![proto.one_like()];
        for _ in (k + 1)..prec {
            digits.push(proto.zero_like());
        }
        Self::from_digits(var, k, digits, proto)
    }

    fn normalize(&mut self) {
        while let Some(first) = self.coeffs.first() {
            if first.is_zero() {
                self.coeffs.remove(0);
                self.val += 1;
            } else {
                break;
            }
        }
        if self.coeffs.is_empty() {
            self.val = self.prec;
        }
    }

    pub fn is_tracked_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Digit of x^k; panics at or beyond the precision.
    pub fn digit(&self, k: i64) -> C {
        assert!(
            k < self.prec,
            "digit x^{k} requested at or beyond precision {}",
            self.prec
        );
        if k < self.val {
            self.proto.zero_like()
        } else {
            self.coeffs[(k - self.val) as usize].clone()
        }
    }

    pub fn known_digit(&self, k: i64) -> Option<C> {
        if k < self.prec {
            Some(self.digit(k))
        } else {
            None
        }
    }

    /// Drop information above `new_prec`.
    pub fn truncated(&self, new_prec: i64) -> Self {
        assert!(new_prec <= self.prec, "cannot invent digits");
        if new_prec <= self.val {
            return Self::zero(&self.proto, self.var, new_prec);
        }
        let keep = (new_prec - self.val) as usize;
        Self::from_digits(
            self.var,
            self.val,
            self.coeffs[..keep].to_vec(),
            &self.proto,
        )
    }

    /// Multiply by x^k.
    pub fn shift(&self, k: i64) -> Self {
        let mut s = self.clone();
        s.val += k;
        s.prec += k;
        s
    }

    /// Equality of all digits below the joint precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let bound = self.prec.min(other.prec);
        let lo = self.val.min(other.val);
        for k in lo..bound {
            if self.digit(k) != other.digit(k) {
                return false;
            }
        }
        true
    }

    /// d/dx, acting on digits by the integer scalar k (the coefficient ring's
    /// own constants pass through untouched).
    pub fn derivative(&self) -> Self {
        if self.is_tracked_zero() {
            return Self::zero(&self.proto, self.var, self.prec - 1);
        }
        let digits: Vec<C> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale_int(self.val + i as i64))
            .collect();
        Self::from_digits(self.var, self.val - 1, digits, &self.proto)
    }

    /// Substitute x -> factor * x (digit k picks up factor^k). `factor` must
    /// be a unit so negative exponents make sense.
    pub fn scale_var(&self, factor: &C) -> Self {
        let finv = factor.inv().expect("scale_var needs a unit factor");
        let pow_signed = |k: i64| -> C {
            if k >= 0 {
                factor.pow(k as u64)
            } else {
                finv.pow((-k) as u64)
            }
        };
        let digits: Vec<C> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.mul(&pow_signed(self.val + i as i64)))
            .collect();
        Self::from_digits(self.var, self.val, digits, &self.proto)
    }

    pub fn map_digits<D: Ring>(&self, proto: &D, f: impl Fn(&C) -> D) -> TruncSeries<D> {
        TruncSeries {
            var: self.var,
            val: self.val,
            prec: self.prec,
            coeffs: self.coeffs.iter().map(&f).collect(),
            proto: proto.zero_like(),
        }
    }

    /// Valuation as `Some(v)` for nonzero series, `None` for the tracked zero.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_tracked_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    pub fn leading(&self) -> Option<&C> {
        self.coeffs.first()
    }

    fn effective_val(&self) -> i64 {
        // In precision formulas the tracked zero behaves as x^prec.
        self.val
    }

    fn check_compat(&self, rhs: &Self) {
        assert_eq!(self.var, rhs.var, "series variable mismatch");
    }
}

impl<C: Ring> fmt::Debug for TruncSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_tracked_zero() {
            return write!(f, "O({}^{})", self.var.as_str(), self.prec);
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c:?})*{}^{}", self.var.as_str(), self.val + i as i64)?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O({}^{})", self.var.as_str(), self.prec)
    }
}

impl<C: Ring> Ring for TruncSeries<C> {
    fn zero_like(&self) -> Self {
        Self::zero(&self.proto, self.var, self.prec)
    }

    fn one_like(&self) -> Self {
        Self::constant(&self.proto.one_like(), self.var, self.prec.max(1))
    }

    fn add(&self, rhs: &Self) -> Self {
        self.check_compat(rhs);
        let prec = self.prec.min(rhs.prec);
        let lo = self.val.min(rhs.val).min(prec);
        let mut digits = Vec::with_capacity((prec - lo) as usize);
        for k in lo..prec {
            digits.push(self.digit(k).add(&rhs.digit(k)));
        }
        Self::from_digits(self.var, lo, digits, &self.proto)
    }

    fn neg(&self) -> Self {
        let mut s = self.clone();
        s.coeffs = s.coeffs.iter().map(|c| c.neg()).collect();
        s
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.check_compat(rhs);
        let va = self.effective_val();
        let vb = rhs.effective_val();
        let prec = (va + rhs.prec).min(vb + self.prec);
        let lo = va + vb;
        if lo >= prec {
            return Self::zero(&self.proto, self.var, prec);
        }
        let mut digits = vec![self.proto.zero_like(); (prec - lo) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ka = self.val + i as i64;
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let k = ka + vb + j as i64;
                if k >= prec {
                    break;
                }
                let slot = (k - lo) as usize;
                digits[slot] = digits[slot].add(&a.mul(b));
            }
        }
        Self::from_digits(self.var, lo, digits, &self.proto)
    }

    fn is_zero(&self) -> bool {
        self.is_tracked_zero()
    }

    fn agrees(&self, other: &Self) -> bool {
        self.agrees_with(other)
    }

    /// Laurent inverse; requires a unit leading digit (so the valuation is
    /// exact and the unit-part inverts).
    fn inv(&self) -> Result<Self> {
        let lead = self.leading().ok_or(Error::NonUnitSeriesLead)?;
        if !lead.is_unit() {
            return Err(Error::NonUnitSeriesLead);
        }
        let lead_inv = lead.inv()?;
        let n = self.coeffs.len();
        // Unit-part recurrence: b_0 = a_0^-1, b_k = -a_0^-1 sum a_j b_{k-j}.
        let mut b = Vec::with_capacity(n);
        b.push(lead_inv.clone());
        for k in 1..n {
            let mut acc = self.proto.zero_like();
            for j in 1..=k {
                let aj = &self.coeffs[j];
                if aj.is_zero() {
                    continue;
                }
                acc = acc.add(&aj.mul(&b[k - j]));
            }
            b.push(acc.mul(&lead_inv).neg());
        }
        Ok(Self::from_digits(self.var, -self.val, b, &self.proto))
    }

    fn is_unit(&self) -> bool {
        self.leading().map(|c| c.is_unit()).unwrap_or(false)
    }

    fn q(&self) -> u64 {
        self.proto.q()
    }

    /// (sum c_k x^k)^q = sum c_k^q x^(qk); the unknown tail only contributes
    /// at exponent q*prec, so the q-th power is known further than the input.
    fn frob_q(&self) -> Self {
        let q = self.q() as i64;
        let prec = self.prec * q;
        if self.is_tracked_zero() {
            return Self::zero(&self.proto, self.var, prec);
        }
        let lo = self.val * q;
        let mut digits = vec![self.proto.zero_like(); (prec - lo) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = (self.val + i as i64) * q;
            digits[(k - lo) as usize] = c.frob_q();
        }
        Self::from_digits(self.var, lo, digits, &self.proto)
    }
}

/// Solve s^(q-1) = u with s = 1 mod x, by a Newton-Hensel iteration using
/// that d/ds(s^(q-1)) = (q-1)s^(q-2) = -s^(q-2) is a unit. `u` must be a unit
/// power series of valuation 0 with constant digit 1.
pub fn series_root_q_minus_1<C: Ring>(u: &TruncSeries<C>) -> Result<TruncSeries<C>> {
    let one = u.proto.one_like();
    if u.valuation() != Some(0) || u.digit(0) != one {
        return Err(Error::ConstantTermNotOne);
    }
    let q = u.q();
    if q == 2 {
        return Ok(u.clone());
    }
    let mut s = TruncSeries::constant(&one, u.var, u.prec);
    for _ in 0..64 {
        let power = s.pow(q - 1);
        if power == *u {
            return Ok(s);
        }
        // s <- s + (s^(q-1) - u) * s^(2-q)
        let corr = power.sub(u).mul(&s.inv()?.pow(q - 2));
        let next = s.add(&corr);
        if next == s {
            return Err(Error::RootFailure);
        }
        s = next;
    }
    Err(Error::RootFailure)
}
