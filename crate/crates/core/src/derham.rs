//! Biderivations and the de Rham module of a trivialized rank-2 module, on
//! the basis {tau, tau^2}: the Hodge maps i and pi, the connection nabla_D,
//! the Kodaira-Spencer map and its autoduality twist, and the arithmetic
//! de Rham pairing.

use std::sync::Arc;

use crate::drinfeld::{DrinfeldModule, HStructure, LiftFq};
use crate::error::{Error, Result};
use crate::ore::OrePoly;
use crate::poly::Poly;
use crate::ring::Ring;

/// b_1 tau + b_2 tau^2 in the de Rham coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DRElement<R: Ring> {
    pub b1: R,
    pub b2: R,
}

impl<R: Ring> DRElement<R> {
    pub fn new(b1: R, b2: R) -> Self {
        DRElement { b1, b2 }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        DRElement::new(self.b1.add(&rhs.b1), self.b2.add(&rhs.b2))
    }

    pub fn scale(&self, c: &R) -> Self {
        DRElement::new(c.mul(&self.b1), c.mul(&self.b2))
    }
}

/// A derivation of the base ring, supplied as a black-box coefficient map.
/// `checked` verifies additivity, the Leibniz rule and vanishing on q-th
/// powers on the probe values.
#[derive(Clone)]
pub struct Derivation<R: Ring> {
    apply: Arc<dyn Fn(&R) -> R + Send + Sync>,
}

impl<R: Ring> std::fmt::Debug for Derivation<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Derivation(<map>)")
    }
}

impl<R: Ring> Derivation<R> {
    pub fn new_unchecked(f: impl Fn(&R) -> R + Send + Sync + 'static) -> Self {
        Derivation { apply: Arc::new(f) }
    }

    pub fn checked(f: impl Fn(&R) -> R + Send + Sync + 'static, probes: &[R]) -> Result<Self> {
        for a in probes {
            for b in probes {
                let additive = f(&a.add(b)) == f(a).add(&f(b));
                let leibniz = f(&a.mul(b)) == a.mul(&f(b)).add(&b.mul(&f(a)));
                if !additive || !leibniz {
                    return Err(Error::Invalid("map fails the derivation axioms".into()));
                }
            }
            if !f(&a.frob_q()).is_zero() {
                return Err(Error::Invalid("derivation must kill q-th powers".into()));
            }
        }
        Ok(Derivation { apply: Arc::new(f) })
    }

    pub fn zero() -> Self {
        Derivation::new_unchecked(|b: &R| b.zero_like())
    }

    pub fn apply(&self, b: &R) -> R {
        (self.apply)(b)
    }
}

impl<C: Ring> Derivation<crate::series::TruncSeries<C>> {
    /// d/dx on truncated Laurent series.
    pub fn d_dx() -> Self {
        Derivation::new_unchecked(|s: &crate::series::TruncSeries<C>| s.derivative())
    }
}

/// Target module of a biderivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiderTarget {
    /// The additive group: Phi_a acts as the scalar a(theta).
    Ga,
    /// The Carlitz module.
    Carlitz,
}

fn phi_target<R: Ring + LiftFq>(
    target: BiderTarget,
    e: &DrinfeldModule<R>,
    a: &Poly,
) -> OrePoly<R> {
    match target {
        BiderTarget::Ga => {
            let mut acc = e.theta.zero_like();
            let mut power = e.theta.one_like();
            for i in 0..a.coeff_count() {
                let c = R::lift_fq(&a.coeff(i), &e.theta);
                acc = acc.add(&c.mul(&power));
                power = power.mul(&e.theta);
            }
            OrePoly::constant(acc)
        }
        BiderTarget::Carlitz => DrinfeldModule::carlitz(e.theta.clone()).phi(a),
    }
}

/// Reconstruct delta on any a in A from delta_t by the defining recursion
/// delta_(t^(i+1)) = Phi_t^G delta_(t^i) + delta_t Phi_(t^i)^E and
/// F_q-linearity.
pub fn biderivation_extend<R: Ring + LiftFq>(
    e: &DrinfeldModule<R>,
    target: BiderTarget,
    delta_t: &OrePoly<R>,
    a: &Poly,
) -> OrePoly<R> {
    let proto = e.theta.zero_like();
    let phi_t_g = phi_target(target, e, &Poly::t(&a.tower));
    // delta_(t^i) for i = 0, 1, 2, ...
    let mut deltas = vec![OrePoly::zero(&proto), delta_t.clone()];
    let mut phi_ti_e = OrePoly::constant(e.theta.one_like());
    for _ in 2..=a.degree().unwrap_or(0) {
        phi_ti_e = phi_ti_e.mul(&e.phi_t);
        let prev = deltas.last().expect("nonempty");
        let next = phi_t_g.mul(prev).add(&delta_t.mul(&phi_ti_e));
        deltas.push(next);
    }
    let mut acc = OrePoly::zero(&proto);
    for i in 0..a.coeff_count() {
        let c = a.coeff(i);
        if c.is_zero() {
            continue;
        }
        let scalar = R::lift_fq(&c, &e.theta);
        acc = acc.add(&deltas[i].scalar_mul(&scalar));
    }
    acc
}

/// Verify the cocycle rule delta_(ab) = Phi_a^G delta_b + delta_a Phi_b^E at
/// the pair (a, b), reconstructing delta from delta_t. With `der0` set,
/// delta_t must have no tau^0 term (the Der_0 condition in coordinates).
pub fn biderivation_check<R: Ring + LiftFq>(
    e: &DrinfeldModule<R>,
    target: BiderTarget,
    delta_t: &OrePoly<R>,
    a: &Poly,
    b: &Poly,
    der0: bool,
) -> bool {
    if der0 && !delta_t.coeff(0).is_zero() {
        return false;
    }
    let ab = a.mul(b);
    let lhs = biderivation_extend(e, target, delta_t, &ab);
    let delta_a = biderivation_extend(e, target, delta_t, a);
    let delta_b = biderivation_extend(e, target, delta_t, b);
    let rhs = phi_target(target, e, a)
        .mul(&delta_b)
        .add(&delta_a.mul(&e.phi(b)));
    lhs == rhs
}

/// i(dX) = alpha_1 tau + alpha_2 tau^2: the inner biderivation of the
/// identity map.
pub fn hodge_i<R: Ring>(e: &DrinfeldModule<R>) -> Result<DRElement<R>> {
    if e.rank != 2 {
        return Err(Error::UnsupportedRank(e.rank));
    }
    Ok(DRElement::new(e.alpha(1), e.alpha(2)))
}

/// pi(b_1 tau + b_2 tau^2) = alpha_2^(-1)(alpha_2 b_1 - alpha_1 b_2), the
/// d/dY-coordinate in Lie(E^D).
pub fn hodge_pi<R: Ring>(e: &DrinfeldModule<R>, phi: &DRElement<R>) -> Result<R> {
    if e.rank != 2 {
        return Err(Error::UnsupportedRank(e.rank));
    }
    let a2_inv = e.alpha(2).inv()?;
    Ok(a2_inv.mul(&e.alpha(2).mul(&phi.b1).sub(&e.alpha(1).mul(&phi.b2))))
}

/// The autoduality-twisted projection pr = H^(-1) pi, normalized so that
/// pr(H tau) is the canonical covector (pairs to 1 against dX).
pub fn hodge_pr<R: Ring>(h: &HStructure<R>, phi: &DRElement<R>) -> Result<R> {
    Ok(h.h.inv()?.mul(&hodge_pi(&h.module, phi)?))
}

/// nabla_D in coordinates: D applied to both coefficients.
pub fn nabla<R: Ring>(d: &Derivation<R>, phi: &DRElement<R>) -> DRElement<R> {
    DRElement::new(d.apply(&phi.b1), d.apply(&phi.b2))
}

/// The Kodaira-Spencer coordinate pi(nabla_D(i(dX)))
/// = alpha_2^(-1)(alpha_2 D(alpha_1) - alpha_1 D(alpha_2)).
pub fn kodaira_spencer<R: Ring>(e: &DrinfeldModule<R>, d: &Derivation<R>) -> Result<R> {
    let i_dx = hodge_i(e)?;
    hodge_pi(e, &nabla(d, &i_dx))
}

/// The autoduality-twisted Kodaira-Spencer coordinate H^(-1) KS(D).
pub fn ks_autodual<R: Ring>(h: &HStructure<R>, d: &Derivation<R>) -> Result<R> {
    Ok(h.h.inv()?.mul(&kodaira_spencer(&h.module, d)?))
}

/// The arithmetic de Rham pairing <phi, psi> = (phi_1 psi_2 - psi_1 phi_2)
/// H^(-q): B-bilinear, alternating, perfect.
pub fn derham_pairing<R: Ring>(
    h: &HStructure<R>,
    phi: &DRElement<R>,
    psi: &DRElement<R>,
) -> Result<R> {
    let q = h.h.q();
    let h_pow_q_inv = h.h.pow(q).inv()?;
    let raw = phi.b1.mul(&psi.b2).sub(&psi.b1.mul(&phi.b2));
    Ok(raw.mul(&h_pow_q_inv))
}

/// The Hodge-filtration compatibility: <dX, phi> equals the twisted
/// projection pr(phi) for every phi in a spanning set.
pub fn hodge_compatibility_check<R: Ring>(
    h: &HStructure<R>,
    extra: &[DRElement<R>],
) -> Result<bool> {
    let e = &h.module;
    let dx = hodge_i(e)?;
    let one = e.theta.one_like();
    let zero = e.theta.zero_like();
    let mut span = vec![
        DRElement::new(one.clone(), zero.clone()),
        DRElement::new(zero.clone(), one.clone()),
        dx.clone(),
        DRElement::new(h.h.clone(), zero.clone()),
    ];
    span.extend_from_slice(extra);
    for phi in &span {
        let lhs = derham_pairing(h, &dx, phi)?;
        let rhs = hodge_pr(h, phi)?;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drinfeld::{h_structure_find_field, module_from_indices};
    use crate::field::Tower;
    use crate::series::{TruncSeries, Var};
    use crate::td::{cusp_data, TdEngine};

    #[test]
    fn inner_biderivation_of_identity_is_i_dx() {
        // delta_id: delta_t = Phi_t - theta = a_1 tau + a_2 tau^2.
        let t3 = Tower::fq(3, 1, None).unwrap();
        let e = module_from_indices(&t3, 1, 1, 1, 2).unwrap();
        let delta_t = e.phi_t.sub(&OrePoly::constant(e.theta.clone()));
        assert_eq!(delta_t.coeff(1), e.alpha(1));
        assert_eq!(delta_t.coeff(2), e.alpha(2));
        let t = Poly::t(&t3);
        assert!(biderivation_check(
            &e,
            BiderTarget::Ga,
            &delta_t,
            &t,
            &t,
            true
        ));
        // And against the Carlitz target with a random delta_t.
        let delta2 = OrePoly::new(
            vec![t3.zero(1), t3.el_from_index(1, 2), t3.one(1)],
            &t3.zero(1),
        );
        assert!(biderivation_check(
            &e,
            BiderTarget::Carlitz,
            &delta2,
            &t,
            &t,
            true
        ));
        let tp1 = t.add(&Poly::one(&t3));
        assert!(biderivation_check(
            &e,
            BiderTarget::Carlitz,
            &delta2,
            &tp1,
            &t,
            true
        ));
    }

    #[test]
    fn delta_of_constants_vanishes() {
        let t3 = Tower::fq(3, 1, None).unwrap();
        let e = module_from_indices(&t3, 1, 2, 1, 1).unwrap();
        let delta_t = OrePoly::new(vec![t3.zero(1), t3.one(1)], &t3.zero(1));
        for c in 0..3u64 {
            let cpoly = Poly::from_indices(&t3, &[c]);
            let d = biderivation_extend(&e, BiderTarget::Ga, &delta_t, &cpoly);
            assert!(d.is_zero());
        }
    }

    #[test]
    fn hodge_exactness_in_coordinates() {
        let t3 = Tower::fq(3, 1, None).unwrap();
        let e = module_from_indices(&t3, 1, 2, 2, 1).unwrap();
        // pi o i = 0.
        let idx = hodge_i(&e).unwrap();
        assert!(hodge_pi(&e, &idx).unwrap().is_zero());
        // pi(tau) = 1.
        let tau = DRElement::new(t3.one(1), t3.zero(1));
        assert_eq!(hodge_pi(&e, &tau).unwrap(), t3.one(1));
        // pi surjective, ker pi = im i: phi with pi(phi) = 0 is a multiple of i(dX).
        for b1 in 0..3 {
            for b2 in 0..3 {
                let phi = DRElement::new(t3.el_from_index(1, b1), t3.el_from_index(1, b2));
                if hodge_pi(&e, &phi).unwrap().is_zero() {
                    // phi = c * i(dX) with c = b2 / alpha_2.
                    let c = phi.b2.mul(&e.alpha(2).inv().unwrap());
                    assert_eq!(idx.scale(&c), phi);
                }
            }
        }
    }

    #[test]
    fn derivation_construction_validates_axioms() {
        let t3 = Tower::fq(3, 1, None).unwrap();
        let eng = TdEngine::new(&t3, 10, 2).unwrap();
        let probes = vec![
            eng.a1(),
            eng.a2(),
            eng.module.theta.clone(),
            eng.a1().mul(&eng.a2()),
        ];
        // d/dx passes the probe battery.
        assert!(Derivation::checked(|s: &crate::td::ASeries| s.derivative(), &probes).is_ok());
        // Squaring is not a derivation (fails additivity and Leibniz).
        assert!(Derivation::checked(|s: &crate::td::ASeries| s.mul(s), &probes).is_err());
        // The zero map trivially is one.
        assert!(Derivation::checked(|s: &crate::td::ASeries| s.zero_like(), &probes).is_ok());
    }

    #[test]
    fn nabla_is_a_connection() {
        let t2 = Tower::fq(2, 1, None).unwrap();
        let eng = TdEngine::new(&t2, 10, 2).unwrap();
        let d = Derivation::d_dx();
        let phi = hodge_i(&eng.module).unwrap();
        let b = eng.a2();
        // nabla(b phi) = D(b) phi + b nabla(phi).
        let lhs = nabla(&d, &phi.scale(&b));
        let rhs = phi.scale(&b.derivative()).add(&nabla(&d, &phi).scale(&b));
        assert!(lhs.b1.agrees_with(&rhs.b1));
        assert!(lhs.b2.agrees_with(&rhs.b2));
    }

    #[test]
    fn pi_nabla_i_is_b_linear() {
        // The composite pi o nabla_D o i is B-linear on omega even though
        // nabla_D is not: i(b dX) has coordinates (b a_1, b a_2).
        let t3 = Tower::fq(3, 1, None).unwrap();
        let eng = TdEngine::new(&t3, 12, 2).unwrap();
        let e = &eng.module;
        let d = Derivation::d_dx();
        let ks = kodaira_spencer(e, &d).unwrap();
        let b = eng.a1().mul(&eng.a2()); // an arbitrary base element
        let i_b_dx = hodge_i(e).unwrap().scale(&b);
        let lhs = hodge_pi(e, &nabla(&d, &i_b_dx)).unwrap();
        assert!(lhs.agrees_with(&b.mul(&ks)));
    }

    #[test]
    fn kodaira_spencer_of_td_is_l() {
        for p in [2u64, 3] {
            let tw = Tower::fq(p, 1, None).unwrap();
            let eng = TdEngine::new(&tw, 16, 2).unwrap();
            let data = cusp_data(&eng).unwrap();
            let ks = kodaira_spencer(&eng.module, &Derivation::d_dx()).unwrap();
            assert!(ks.agrees_with(&data.l));
            // KS is B-linear in D: scaling the derivation scales the output.
            let b = eng.a2();
            let bc = b.clone();
            let scaled =
                Derivation::new_unchecked(move |s: &crate::td::ASeries| bc.mul(&s.derivative()));
            let ks_scaled = kodaira_spencer(&eng.module, &scaled).unwrap();
            assert!(ks_scaled.agrees_with(&b.mul(&ks)));
        }
    }

    #[test]
    fn eta_from_nabla_identity() {
        // (nabla_(-x^2 d/dx) + (x^2/a_2)(da_2/dx))(dX) = eta.
        let t2 = Tower::fq(2, 1, None).unwrap();
        let eng = TdEngine::new(&t2, 16, 2).unwrap();
        let data = cusp_data(&eng).unwrap();
        let x2 = TruncSeries::monomial(&Poly::zero(&t2), Var::X, 2, eng.work_prec + 2);
        let dx = hodge_i(&eng.module).unwrap();
        let d = Derivation::d_dx();
        let part1 = nabla(&d, &dx).scale(&x2.neg());
        let factor = x2.mul(&eng.a2().derivative()).mul(&eng.a2().inv().unwrap());
        let part2 = dx.scale(&factor);
        let eta = part1.add(&part2);
        assert!(eta.b1.agrees_with(&data.eta.0));
        assert!(eta.b2.agrees_with(&data.eta.1));
        // pi(eta) = -x^2 l.
        let pi_eta = hodge_pi(
            &eng.module,
            &DRElement::new(data.eta.0.clone(), data.eta.1.clone()),
        )
        .unwrap();
        assert!(pi_eta.agrees_with(&x2.mul(&data.l).neg()));
    }

    #[test]
    fn pairing_normalization_finite_field() {
        // <dX, H tau> = 1 and the Gram matrix on {i(dX), H tau} has unit det.
        let t4 = Tower::fq(2, 1, None).unwrap().extend_deterministic(2);
        for a1 in 0..4 {
            for a2 in 1..4 {
                let e = module_from_indices(&t4, 2, 2, a1, a2).unwrap();
                let h = h_structure_find_field(&e).unwrap().unwrap();
                let dx = hodge_i(&e).unwrap();
                let htau = DRElement::new(h.h.clone(), t4.zero(2));
                let val = derham_pairing(&h, &dx, &htau).unwrap();
                assert_eq!(val, t4.one(2));
                assert!(derham_pairing(&h, &dx, &dx).unwrap().is_zero());
                // Gram det on the basis {i(dX), H tau}.
                let g11 = derham_pairing(&h, &dx, &dx).unwrap();
                let g12 = val.clone();
                let g21 = derham_pairing(&h, &htau, &dx).unwrap();
                let g22 = derham_pairing(&h, &htau, &htau).unwrap();
                let det = g11.mul(&g22).sub(&g12.mul(&g21));
                assert!(det.is_unit());
                assert!(hodge_compatibility_check(&h, &[]).unwrap());
            }
        }
    }

    #[test]
    fn ks_autodual_td_valuation() {
        for p in [2u64, 3] {
            let tw = Tower::fq(p, 1, None).unwrap();
            let eng = TdEngine::new(&tw, 16, 2).unwrap();
            let data = cusp_data(&eng).unwrap();
            let ksv = ks_autodual(&data.h_structure, &Derivation::d_dx()).unwrap();
            assert_eq!(ksv.valuation(), Some(-2));
            // Unit tail: leading coefficient in F_q^x.
            let lead = ksv.leading().unwrap();
            assert!(lead.is_unit() && lead.degree() == Some(0));
            // Consistency: ks_autodual * b_h = l.
            assert!(ksv.mul(&data.bh).agrees_with(&data.l));
            // Scaling H by c in F_q^x scales the output by c^(-1).
            let c = TruncSeries::constant(
                &Poly::constant(tw.el_from_index(1, (p - 1).max(1))),
                Var::X,
                eng.work_prec,
            );
            let hc = HStructure::new(eng.module.clone(), c.mul(&data.h_structure.h)).unwrap();
            let ksv_c = ks_autodual(&hc, &Derivation::d_dx()).unwrap();
            assert!(ksv_c.mul(&c).agrees_with(&ksv));
        }
    }

    #[test]
    fn derham_pairing_of_dx_eta_is_unit() {
        for p in [2u64, 3] {
            let tw = Tower::fq(p, 1, None).unwrap();
            let eng = TdEngine::new(&tw, 16, 2).unwrap();
            let data = cusp_data(&eng).unwrap();
            let dx = DRElement::new(data.dx.0.clone(), data.dx.1.clone());
            let eta = DRElement::new(data.eta.0.clone(), data.eta.1.clone());
            let val = derham_pairing(&data.h_structure, &dx, &eta).unwrap();
            // <dX, eta> = x^2 l a_2 b_h^(-q): valuation 0 with unit head.
            assert_eq!(val.valuation(), Some(0));
            let lead = val.leading().unwrap();
            assert!(lead.is_unit() && lead.degree() == Some(0));
            let x2 = TruncSeries::monomial(&Poly::zero(&tw), Var::X, 2, eng.work_prec + 2);
            let expect = x2
                .mul(&data.l)
                .mul(&data.a2)
                .mul(&data.bh.pow(p).inv().unwrap());
            assert!(val.agrees_with(&expect));
            assert!(hodge_compatibility_check(&data.h_structure, &[dx, eta]).unwrap());
        }
    }
}
