//! The quotient ring A/(n) for a monic modulus n of positive degree.
//! Not assumed reduced or a field: inverses exist exactly for classes coprime
//! to n, which is what the residue-pairing and motive layers rely on.

use std::fmt;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ring::Ring;

#[derive(Clone, PartialEq, Eq)]
pub struct ModElem {
    pub value: Poly,
    pub modulus: Poly,
}

impl ModElem {
    pub fn new(value: Poly, modulus: Poly) -> Result<ModElem> {
        if modulus.degree().map(|d| d == 0).unwrap_or(true) {
            return Err(Error::Invalid("modulus must have positive degree".into()));
        }
        let value = value.rem(&modulus)?;
        Ok(ModElem { value, modulus })
    }

    pub fn zero(modulus: &Poly) -> ModElem {
        ModElem {
            value: Poly::zero(&modulus.tower),
            modulus: modulus.clone(),
        }
    }

    pub fn one(modulus: &Poly) -> ModElem {
        ModElem {
            value: Poly::one(&modulus.tower),
            modulus: modulus.clone(),
        }
    }

    fn assert_same_modulus(&self, rhs: &ModElem) {
        assert_eq!(self.modulus, rhs.modulus, "mismatched moduli");
    }

    /// The canonical lift of degree < deg(n).
    pub fn lift(&self) -> Poly {
        self.value.clone()
    }

    pub fn deg_n(&self) -> usize {
        self.modulus.degree().expect("positive-degree modulus")
    }

    /// Enumerate all residue classes in canonical order.
    pub fn enumerate(modulus: &Poly) -> Vec<ModElem> {
        let d = modulus.degree().expect("positive-degree modulus");
        let q = modulus.tower.q();
        let count = q.pow(d as u32);
        (0..count)
            .map(|mut idx| {
                let mut digits = Vec::with_capacity(d);
                for _ in 0..d {
                    digits.push(idx % q);
                    idx /= q;
                }
                ModElem {
                    value: Poly::from_indices(&modulus.tower, &digits),
                    modulus: modulus.clone(),
                }
            })
            .collect()
    }
}

impl fmt::Debug for ModElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} mod {:?}", self.value, self.modulus)
    }
}

impl Ring for ModElem {
    fn zero_like(&self) -> Self {
        ModElem::zero(&self.modulus)
    }

    fn one_like(&self) -> Self {
        ModElem::one(&self.modulus)
    }

    fn add(&self, rhs: &Self) -> Self {
        self.assert_same_modulus(rhs);
        ModElem {
            value: self.value.add(&rhs.value),
            modulus: self.modulus.clone(),
        }
    }

    fn neg(&self) -> Self {
        ModElem {
            value: self.value.neg(),
            modulus: self.modulus.clone(),
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.assert_same_modulus(rhs);
        ModElem {
            value: self
                .value
                .mul(&rhs.value)
                .rem(&self.modulus)
                .expect("monic modulus"),
            modulus: self.modulus.clone(),
        }
    }

    fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn inv(&self) -> Result<Self> {
        let (g, s) = self.value.xgcd_mod(&self.modulus);
        if g.degree() != Some(0) {
            return Err(Error::NonUnitLeading);
        }
        // xgcd already normalizes g to 1.
        Ok(ModElem {
            value: s.rem(&self.modulus)?,
            modulus: self.modulus.clone(),
        })
    }

    fn is_unit(&self) -> bool {
        self.value.gcd(&self.modulus).degree() == Some(0)
    }

    fn q(&self) -> u64 {
        self.modulus.tower.q()
    }

    fn frob_q(&self) -> Self {
        ModElem {
            value: self
                .value
                .frob_q()
                .rem(&self.modulus)
                .expect("monic modulus"),
            modulus: self.modulus.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Tower;

    #[test]
    fn units_and_zero_divisors_mod_t2() {
        let t2 = Tower::fq(2, 1, None).unwrap();
        let n = Poly::from_indices(&t2, &[0, 0, 1]); // t^2
        let t = ModElem::new(Poly::t(&t2), n.clone()).unwrap();
        assert!(!t.is_unit());
        assert!(t.mul(&t).is_zero());
        let u = ModElem::new(Poly::from_indices(&t2, &[1, 1]), n).unwrap(); // 1 + t
        assert!(u.is_unit());
        assert_eq!(u.mul(&u.inv().unwrap()), u.one_like());
    }

    #[test]
    fn enumerate_counts() {
        let t3 = Tower::fq(3, 1, None).unwrap();
        let n = Poly::from_indices(&t3, &[1, 0, 1]);
        let all = ModElem::enumerate(&n);
        assert_eq!(all.len(), 9);
        let units = all.iter().filter(|x| x.is_unit()).count();
        assert_eq!(units, 8); // t^2+1 irreducible over F_3: all nonzero classes are units
    }
}
