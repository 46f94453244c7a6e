//! Assigned characters of the discriminant `4D` (D square-free) and generic values.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{delta_char, eta_char, jacobi, Sign};
use crate::error::{Error, Result};
use crate::factor::factorize;
use crate::forms::{represented_value_coprime, represented_values, QuadForm, Representation};

/// The character attached to the prime 2, chosen by D mod 8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraCharacter {
    None,
    Delta,
    Eta,
    DeltaEta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSystem {
    #[serde(with = "crate::decimal")]
    pub d: BigUint,
    #[serde(with = "crate::decimal::vec")]
    pub odd_primes: Vec<BigUint>,
    pub extra: ExtraCharacter,
}

impl CharacterSystem {
    /// System for D given its distinct prime factors (trusted, not re-checked for primality).
    pub fn from_primes(primes: &[BigUint]) -> Result<Self> {
        let mut sorted = primes.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != primes.len() {
            return Err(Error::invalid("repeated prime: D is not square-free"));
        }
        let d: BigUint = sorted.iter().product();
        if d < BigUint::from(2u32) {
            return Err(Error::invalid("D must be at least 2"));
        }
        let extra = match (&d % 8u32).to_u32().unwrap() {
            1 | 5 => ExtraCharacter::None,
            3 | 7 => ExtraCharacter::Delta,
            2 => ExtraCharacter::Eta,
            6 => ExtraCharacter::DeltaEta,
            _ => return Err(Error::invalid(format!("D = {d} is divisible by 4"))),
        };
        let odd_primes = sorted.into_iter().filter(|p| p.is_odd()).collect();
        Ok(CharacterSystem { d, odd_primes, extra })
    }

    pub fn len(&self) -> usize {
        self.odd_primes.len() + usize::from(self.extra != ExtraCharacter::None)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Human-readable labels in evaluation order, e.g. `["chi_3", "delta*eta"]`.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self.odd_primes.iter().map(|p| format!("chi_{p}")).collect();
        match self.extra {
            ExtraCharacter::None => {}
            ExtraCharacter::Delta => out.push("delta".into()),
            ExtraCharacter::Eta => out.push("eta".into()),
            ExtraCharacter::DeltaEta => out.push("delta*eta".into()),
        }
        out
    }

    /// Character values at theta, which must be coprime to 2D.
    pub fn evaluate(&self, theta: &BigInt) -> Result<Vec<Sign>> {
        let two_d = BigInt::from(2u32) * BigInt::from(self.d.clone());
        if !theta.gcd(&two_d).is_one() {
            return Err(Error::invalid(format!("{theta} is not coprime to 2*{}", self.d)));
        }
        let mut values = Vec::with_capacity(self.len());
        for p in &self.odd_primes {
            let j = jacobi(theta, &BigInt::from(p.clone()))?;
            values.push(Sign::from_i8(j).ok_or_else(|| Error::Internal(format!("({theta}/{p}) = 0")))?);
        }
        match self.extra {
            ExtraCharacter::None => {}
            ExtraCharacter::Delta => values.push(delta_char(theta)?),
            ExtraCharacter::Eta => values.push(eta_char(theta)?),
            ExtraCharacter::DeltaEta => values.push(delta_char(theta)? * eta_char(theta)?),
        }
        Ok(values)
    }
}

impl fmt::Display for CharacterSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.labels().join(", "))
    }
}

pub fn assigned_characters(d: &BigUint) -> Result<CharacterSystem> {
    if *d < BigUint::from(2u32) {
        return Err(Error::invalid(format!("D must be at least 2, got {d}")));
    }
    let f = factorize(&BigInt::from(d.clone()))?;
    if !f.is_squarefree() {
        return Err(Error::invalid(format!("D = {d} is not square-free")));
    }
    let primes: Vec<BigUint> = f.primes().cloned().collect();
    CharacterSystem::from_primes(&primes)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericValues {
    pub values: Vec<Sign>,
    #[serde(with = "crate::decimal")]
    pub theta: BigInt,
    #[serde(with = "crate::decimal")]
    pub x: BigInt,
    #[serde(with = "crate::decimal")]
    pub y: BigInt,
}

impl GenericValues {
    pub fn is_principal(&self) -> bool {
        self.values.iter().all(|s| s.is_plus())
    }
}

fn check_disc(f: &QuadForm, sys: &CharacterSystem) -> Result<()> {
    if f.discriminant() != BigInt::from(4u32) * BigInt::from(sys.d.clone()) {
        return Err(Error::invalid(format!("form {f} does not have discriminant 4*{}", sys.d)));
    }
    Ok(())
}

pub fn generic_values(f: &QuadForm, sys: &CharacterSystem) -> Result<GenericValues> {
    check_disc(f, sys)?;
    let Representation { theta, x, y } = represented_value_coprime(f, &sys.d)?;
    let values = sys.evaluate(&theta)?;
    Ok(GenericValues { values, theta, x, y })
}

/// Generic values at the first `count` represented values found by the search.
pub fn generic_values_sample(f: &QuadForm, sys: &CharacterSystem, count: usize) -> Result<Vec<GenericValues>> {
    check_disc(f, sys)?;
    represented_values(f, &sys.d)?
        .take(count)
        .map(|Representation { theta, x, y }| Ok(GenericValues { values: sys.evaluate(&theta)?, theta, x, y }))
        .collect()
}

/// Principal-genus test for a form of discriminant 4D with D square-free.
pub fn in_principal_genus(f: &QuadForm) -> Result<bool> {
    let disc = f.discriminant();
    let (q, r) = disc.div_rem(&BigInt::from(4));
    if r != BigInt::from(0) || q < BigInt::from(2) {
        return Err(Error::invalid(format!("form {f} does not have discriminant 4D with D >= 2")));
    }
    let sys = assigned_characters(q.magnitude())?;
    Ok(generic_values(f, &sys)?.is_principal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{enumerate_ambiguous_candidates, identity_form};

    fn sys(d: u64) -> CharacterSystem {
        assigned_characters(&BigUint::from(d)).unwrap()
    }

    fn form(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::new(a, b, c).unwrap()
    }

    #[test]
    fn assigned_character_examples() {
        assert_eq!(sys(6).labels(), ["chi_3", "delta*eta"]);
        assert_eq!(sys(15).labels(), ["chi_3", "chi_5", "delta"]);
        assert_eq!(sys(5).labels(), ["chi_5"]);
        assert_eq!(sys(10).labels(), ["chi_5", "eta"]);
        assert_eq!(sys(2).labels(), ["eta"]);
        assert!(assigned_characters(&BigUint::from(1u32)).is_err());
        assert!(assigned_characters(&BigUint::from(12u32)).is_err());
    }

    #[test]
    fn generic_value_examples() {
        use Sign::*;
        let s = sys(6);
        let g = generic_values(&form(1, 0, -6), &s).unwrap();
        assert_eq!((g.values, g.theta), (vec![Plus, Plus], BigInt::from(1)));
        let g = generic_values(&form(3, 0, -2), &s).unwrap();
        assert_eq!((g.values, g.theta), (vec![Plus, Plus], BigInt::from(1)));
        let g = generic_values(&form(2, 0, -3), &s).unwrap();
        assert_eq!((g.values, g.theta), (vec![Minus, Minus], BigInt::from(5)));
        assert!(generic_values(&form(1, 0, -7), &s).is_err());
    }

    #[test]
    fn principal_genus_examples() {
        assert!(in_principal_genus(&form(1, 0, -6)).unwrap());
        assert!(!in_principal_genus(&form(2, 0, -3)).unwrap());
        assert!(in_principal_genus(&form(1705, 0, -6)).unwrap());
    }

    #[test]
    fn identity_is_principal() {
        for d in 2u64..2000 {
            let Ok(s) = assigned_characters(&BigUint::from(d)) else { continue };
            let id = identity_form(&BigInt::from(4 * d)).unwrap();
            assert!(generic_values(&id, &s).unwrap().is_principal(), "D = {d}");
        }
    }

    #[test]
    fn values_independent_of_theta() {
        for d in 2u64..120 {
            let Ok(s) = assigned_characters(&BigUint::from(d)) else { continue };
            let c = enumerate_ambiguous_candidates(&BigUint::from(d)).unwrap();
            for f in c.all() {
                let sample = generic_values_sample(f, &s, 20).unwrap();
                assert_eq!(sample.len(), 20);
                assert!(sample.iter().all(|g| g.values == sample[0].values), "D = {d}, form {f}");
            }
        }
    }
}
