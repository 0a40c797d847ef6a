//! The residue at infinity of K = F_q(t) and the induced perfect pairing on
//! A/(n).
//!
//! Convention: with the uniformizer u = 1/t one has dt = -u^(-2) du, and
//! Res_inf(f dt) is the u^(-1) du coefficient of the expansion. Concretely
//! Res_inf(f dt) = -(coefficient of u^1 in f(1/u)).

use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::linalg::Mat;
use crate::modn::ModElem;
use crate::poly::Poly;
use crate::ring::Ring;
use crate::series::{TruncSeries, Var};

/// Res_inf((a/b) dt) for polynomials a, b with b nonzero; exact.
pub fn residue_at_infinity(a: &Poly, b: &Poly) -> Result<FieldElem> {
    let db = b.degree().ok_or(Error::DivisionByZero)? as i64;
    let fq_zero = a.tower.zero(1);
    if a.is_zero() {
        return Ok(fq_zero);
    }
    let da = a.degree().expect("nonzero") as i64;
    // f(1/u) = u^(db-da) * rev(a)(u) / rev(b)(u); we need its u^1 coefficient,
    // so expand the unit part to degree 1 - (db - da).
    let need = 1 - (db - da);
    if need < 0 {
        return Ok(fq_zero);
    }
    let prec = need + 1;
    let rev = |f: &Poly| -> TruncSeries<FieldElem> {
        let d = f.degree().expect("nonzero");
        let digits: Vec<FieldElem> = (0..=d).rev().map(|i| f.coeff(i)).collect();
        let padded: Vec<FieldElem> = digits
            .into_iter()
            .chain(std::iter::repeat(fq_zero.clone()))
            .take(prec.max(1) as usize)
            .collect();
        TruncSeries::from_digits(Var::U, 0, padded, &fq_zero)
    };
    let unit = rev(a).mul(&rev(b).inv()?);
    let coeff_u1 = unit.known_digit(need).unwrap_or_else(|| fq_zero.clone());
    Ok(coeff_u1.neg())
}

/// The pairing (a, b) -> Res_inf(n^-1 a b dt) on A/(n), computed on the
/// canonical lifts. Well-definedness under change of lift is a tested
/// property, not an assumption.
pub fn residue_pairing(n: &Poly, a: &ModElem, b: &ModElem) -> Result<FieldElem> {
    if a.modulus != *n || b.modulus != *n {
        return Err(Error::MismatchedModuli);
    }
    residue_at_infinity(&a.lift().mul(&b.lift()), n)
}

/// Gram matrix of the residue pairing on the monomial basis 1, t, ..,
/// t^(deg n - 1).
pub fn residue_gram(n: &Poly) -> Result<Mat<FieldElem>> {
    let d = n.degree().ok_or(Error::DivisionByZero)?;
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let ti = Poly::t(&n.tower).pow(i as u64);
            let tj = Poly::t(&n.tower).pow(j as u64);
            data.push(residue_at_infinity(&ti.mul(&tj), n)?);
        }
    }
    Ok(Mat::new(d, d, data))
}

/// Recover the unique beta in A/(n) with ell(a) = Res_inf(n^-1 beta a dt) for
/// all a, from the values of ell on the monomial basis.
pub fn functional_to_modn(n: &Poly, values: &[FieldElem]) -> Result<ModElem> {
    let d = n.degree().ok_or(Error::DivisionByZero)?;
    assert_eq!(values.len(), d);
    let gram = residue_gram(n)?;
    // gram[i][j] = <t^i, t^j>; solve sum_i beta_i <t^i, t^j> = values[j].
    // The Gram matrix is symmetric, so rows vs columns is immaterial.
    let sol = gram.solve(values).ok_or(Error::Invalid(
        "residue pairing failed to be perfect (Gram matrix singular)".into(),
    ))?;
    let mut beta = Poly::zero(&n.tower);
    for (i, c) in sol.iter().enumerate() {
        beta = beta.add(&Poly::constant(c.clone()).shift(i));
    }
    ModElem::new(beta, n.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Tower;
    use std::sync::Arc;

    fn f2() -> Arc<Tower> {
        Tower::fq(2, 1, None).unwrap()
    }

    #[test]
    fn residue_of_one_over_t() {
        // Res_inf(dt/t) = -1 (equals 1 in char 2).
        for p in [2u64, 3, 5] {
            let t = Tower::fq(p, 1, None).unwrap();
            let r = residue_at_infinity(&Poly::one(&t), &Poly::t(&t)).unwrap();
            assert_eq!(r, t.one(1).neg());
        }
    }

    #[test]
    fn residue_of_polynomials_vanishes() {
        let t = Tower::fq(3, 1, None).unwrap();
        let one = Poly::one(&t);
        assert!(residue_at_infinity(&one, &one).unwrap().is_zero());
        assert!(residue_at_infinity(&Poly::t(&t), &one).unwrap().is_zero());
        // Higher powers of t too.
        let t3 = Poly::t(&t).pow(3);
        assert!(residue_at_infinity(&t3, &one).unwrap().is_zero());
    }

    #[test]
    fn pairing_reduces_to_residue_for_n_t() {
        let tw = f2();
        let n = Poly::t(&tw);
        let a = ModElem::one(&n);
        let r = residue_pairing(&n, &a, &a).unwrap();
        assert_eq!(r, residue_at_infinity(&Poly::one(&tw), &n).unwrap());
    }

    #[test]
    fn gram_on_t_squared_is_invertible_2x2() {
        // Oracle: 2x2 determinant by cofactor for n = t^2 over F_2.
        let tw = f2();
        let n = Poly::from_indices(&tw, &[0, 0, 1]);
        let g = residue_gram(&n).unwrap();
        let det = g.at(0, 0).mul(g.at(1, 1)).sub(&g.at(0, 1).mul(g.at(1, 0)));
        assert!(!det.is_zero());
        assert_eq!(g.det(), det);
    }

    #[test]
    fn pairing_is_symmetric() {
        let tw = Tower::fq(3, 1, None).unwrap();
        let n = Poly::from_indices(&tw, &[1, 0, 1]);
        for a in ModElem::enumerate(&n) {
            for b in ModElem::enumerate(&n) {
                assert_eq!(
                    residue_pairing(&n, &a, &b).unwrap(),
                    residue_pairing(&n, &b, &a).unwrap()
                );
            }
        }
    }
}
