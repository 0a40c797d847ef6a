//! The twisted polynomial ring B{tau} with tau b = b^q tau, over any
//! supported coefficient ring, together with evaluation as additive
//! polynomials and exact kernel computation over finite field towers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldElem, Tower};
use crate::linalg::Mat;
use crate::ring::Ring;

/// sum b_i tau^i. Trailing coefficients that are zero (to stored precision,
/// for series coefficients) are trimmed away by the constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct OrePoly<R: Ring> {
    pub coeffs: Vec<R>,
    pub proto: R,
}

impl<R: Ring> OrePoly<R> {
    pub fn new(coeffs: Vec<R>, proto: &R) -> Self {
        let mut f = OrePoly {
            coeffs,
            proto: proto.zero_like(),
        };
        f.trim();
        f
    }

    pub fn zero(proto: &R) -> Self {
        OrePoly {
            coeffs: vec![],
            proto: proto.zero_like(),
        }
    }

    pub fn constant(c: R) -> Self {
        let proto = c.zero_like();
        OrePoly::new(vec![c], &proto)
    }

    pub fn tau_power(proto: &R, i: usize) -> Self {
        let mut coeffs = vec![proto.zero_like(); i + 1];
        coeffs[i] = proto.one_like();
        OrePoly {
            coeffs,
            proto: proto.zero_like(),
        }
    }

    fn trim(&mut self) {
        while self.coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            self.coeffs.pop();
        }
    }

    pub fn tau_degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> R {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| self.proto.zero_like())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).add(&rhs.coeff(i))).collect();
        OrePoly::new(coeffs, &self.proto)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        OrePoly {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            proto: self.proto.clone(),
        }
    }

    /// Product under the commutation rule tau b = b^q tau:
    /// (a_i tau^i)(b_j tau^j) = a_i b_j^(q^i) tau^(i+j).
    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return OrePoly::zero(&self.proto);
        }
        let n = self.coeffs.len() + rhs.coeffs.len() - 1;
        let mut coeffs = vec![self.proto.zero_like(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let twisted = b.frob_q_iter(i);
                coeffs[i + j] = coeffs[i + j].add(&a.mul(&twisted));
            }
        }
        OrePoly::new(coeffs, &self.proto)
    }

    /// Left multiplication by a ring element (a tau^0 factor).
    pub fn scalar_mul(&self, a: &R) -> Self {
        OrePoly::new(self.coeffs.iter().map(|c| a.mul(c)).collect(), &self.proto)
    }

    /// Evaluate as an additive polynomial: sum b_i pt^(q^i).
    pub fn eval(&self, pt: &R) -> R {
        let mut acc = pt.zero_like();
        let mut frob = pt.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                frob = frob.frob_q();
            }
            if !c.is_zero() {
                acc = acc.add(&c.mul(&frob));
            }
        }
        acc
    }

    pub fn map<S: Ring>(&self, proto: &S, f: impl Fn(&R) -> S) -> OrePoly<S> {
        OrePoly::new(self.coeffs.iter().map(f).collect(), proto)
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut acc = OrePoly::constant(self.proto.one_like());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// True when every coefficient above `d` is zero to stored knowledge.
    pub fn vanishes_above(&self, d: usize) -> bool {
        self.coeffs.iter().skip(d + 1).all(|c| c.is_zero())
    }

    /// Coefficientwise `Ring::agrees`: identity checking that tolerates
    /// operands computed at different precisions.
    pub fn agrees(&self, rhs: &Self) -> bool {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        (0..n).all(|i| self.coeff(i).agrees(&rhs.coeff(i)))
    }

    /// Restrict to tau-degree <= d.
    pub fn truncate_tau(&self, d: usize) -> Self {
        OrePoly::new(
            self.coeffs.iter().take(d + 1).cloned().collect(),
            &self.proto,
        )
    }
}

/// How `additive_kernel` treats an operand with vanishing constant
/// coefficient (an inseparable additive polynomial).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// Demand the full kernel of size q^(tau-degree); inseparable operands
    /// are rejected.
    Full,
    /// Strip the tau-power factor and return the kernel of the separable
    /// part (which equals the kernel of f as a set).
    SeparablePart,
}

/// Kernel of an additive polynomial over the top field of its tower.
#[derive(Debug, Clone)]
pub struct KernelResult {
    /// Smallest extension degree over the input field that splits the kernel.
    pub ext_degree: usize,
    /// Tower extended by that degree; kernel points live at its top level.
    pub tower: Arc<Tower>,
    pub level: usize,
    /// F_q-basis of the kernel.
    pub basis: Vec<FieldElem>,
    /// Every kernel point, enumerated deterministically from the basis.
    pub points: Vec<FieldElem>,
}

/// Find the smallest extension degree M <= maxdeg over which the F_q-linear
/// map pt -> f(pt) attains its full kernel, and return that kernel by exact
/// F_q-linear algebra on the field viewed as an F_q-space.
pub fn additive_kernel(
    f: &OrePoly<FieldElem>,
    maxdeg: usize,
    mode: KernelMode,
) -> Result<KernelResult> {
    if f.is_zero() {
        return Err(Error::Invalid(
            "kernel of the zero map is everything".into(),
        ));
    }
    let s = f.coeffs.iter().position(|c| !c.is_zero()).expect("nonzero");
    if s > 0 && mode == KernelMode::Full {
        return Err(Error::Inseparable);
    }
    // f = g . tau^s with g separable; Ker f = Ker g as a set since tau is
    // injective on fields, recovered through the inverse Frobenius.
    let g = OrePoly::new(f.coeffs[s..].to_vec(), &f.proto);
    let target = g.tau_degree().expect("nonzero");
    let base_tower = f.proto.tower.clone();
    let base_level = f.proto.level;
    assert_eq!(
        base_level,
        base_tower.top_level(),
        "kernel needs the top field"
    );

    let q = base_tower.q();
    let mut best_found = 0usize;
    for m_ext in 1..=maxdeg {
        let tower = base_tower.extend_deterministic(m_ext);
        let level = tower.top_level();
        let kernel = kernel_in_tower(&g, &tower);
        if kernel.len() == target {
            let dim_fq = tower.flat_dim(level) / tower.flat_dim(1);
            let mut basis = kernel;
            if s > 0 {
                // Undo the tau^s factor: y := x^(q^(d-s)) satisfies y^(q^s) = x,
                // an F_q-linear bijection, so remapping the basis remaps the span.
                let d = dim_fq;
                let back = (d - (s % d)) % d;
                basis = basis
                    .into_iter()
                    .map(|x| {
                        let mut y = x;
                        for _ in 0..back {
                            y = y.pow(q);
                        }
                        y
                    })
                    .collect();
            }
            let points = enumerate_span(&tower, &basis);
            return Ok(KernelResult {
                ext_degree: m_ext,
                tower,
                level,
                basis,
                points,
            });
        }
        best_found = best_found.max(kernel.len());
    }
    Err(Error::MaxDegreeExceeded {
        cap: maxdeg,
        found: (q as usize).pow(best_found as u32),
    })
}

/// F_q-basis of the kernel of `f` as an F_q-linear map on the top field of
/// `tower` (the coefficients of `f` are lifted there).
pub fn kernel_in_tower(f: &OrePoly<FieldElem>, tower: &Arc<Tower>) -> Vec<FieldElem> {
    let level = tower.top_level();
    let f_lift = f.map(&tower.zero(level), |c| c.lift_to(tower, level));
    let dim_fq = tower.flat_dim(level) / tower.flat_dim(1);
    let mut cols = Vec::with_capacity(dim_fq);
    for b in 0..dim_fq {
        let mut coords = vec![tower.zero(1); dim_fq];
        coords[b] = tower.one(1);
        let v = FieldElem::from_fq_coords(tower, level, &coords);
        cols.push(f_lift.eval(&v).fq_coords());
    }
    Mat::from_columns(cols)
        .kernel_basis()
        .iter()
        .map(|coords| FieldElem::from_fq_coords(tower, level, coords))
        .collect()
}

/// All F_q-combinations of the basis, in canonical digit order.
pub fn enumerate_span(tower: &Arc<Tower>, basis: &[FieldElem]) -> Vec<FieldElem> {
    let q = tower.q();
    let level = basis.first().map(|b| b.level).unwrap_or(tower.top_level());
    let count = q.pow(basis.len() as u32);
    let mut out = Vec::with_capacity(count as usize);
    for idx in 0..count {
        let mut acc = tower.zero(level);
        let mut rest = idx;
        for b in basis {
            let digit = rest % q;
            rest /= q;
            if digit != 0 {
                let c = tower.el_from_index(1, digit).lift_to(tower, level);
                acc = acc.add(&c.mul(b));
            }
        }
        out.push(acc);
    }
    out
}
