//! Primitive binary quadratic forms `ax^2 + bxy + cy^2`, the ambiguous-form
//! candidates for discriminant `4D`, and represented values coprime to `2D`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::integer_sqrt;
use crate::error::{Error, Result};
use crate::factor::factorize;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadForm {
    #[serde(with = "crate::decimal")]
    pub a: BigInt,
    #[serde(with = "crate::decimal")]
    pub b: BigInt,
    #[serde(with = "crate::decimal")]
    pub c: BigInt,
}

fn check_discriminant(disc: &BigInt) -> Result<()> {
    let r = disc.mod_floor(&BigInt::from(4));
    if !(r.is_zero() || r.is_one()) {
        return Err(Error::invalid(format!("discriminant {disc} is not 0 or 1 mod 4")));
    }
    if !disc.is_negative() && integer_sqrt(disc.magnitude()).1 {
        return Err(Error::invalid(format!("discriminant {disc} is a perfect square")));
    }
    Ok(())
}

impl QuadForm {
    /// A primitive form with non-square discriminant.
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>) -> Result<Self> {
        let f = QuadForm { a: a.into(), b: b.into(), c: c.into() };
        if !f.a.gcd(&f.b).gcd(&f.c).is_one() {
            return Err(Error::invalid(format!("form {f} is not primitive")));
        }
        check_discriminant(&f.discriminant())?;
        Ok(f)
    }

    pub fn discriminant(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4) * &self.a * &self.c
    }

    pub fn evaluate(&self, x: &BigInt, y: &BigInt) -> BigInt {
        &self.a * x * x + &self.b * x * y + &self.c * y * y
    }

    /// a divides b.
    pub fn is_ambiguous(&self) -> bool {
        !self.a.is_zero() && self.b.is_multiple_of(&self.a)
    }

    /// The form g(x, y) = f(p x + r y, q x + s y).
    fn transform(&self, p: &BigInt, q: &BigInt, r: &BigInt, s: &BigInt) -> QuadForm {
        let a = self.evaluate(p, q);
        let c = self.evaluate(r, s);
        let b = BigInt::from(2) * &self.a * p * r + &self.b * (p * s + q * r) + BigInt::from(2) * &self.c * q * s;
        QuadForm { a, b, c }
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// The principal form (1, 0, -disc/4) or (1, 1, (1 - disc)/4).
pub fn identity_form(disc: &BigInt) -> Result<QuadForm> {
    check_discriminant(disc)?;
    if disc.is_even() {
        QuadForm::new(1, 0, -(disc / 4u32))
    } else {
        QuadForm::new(1, 1, (BigInt::one() - disc) / 4)
    }
}

/// The ambiguous forms that can share the principal class with the identity when
/// the fundamental unit has norm +1, for discriminant 4D.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguousCandidates {
    #[serde(with = "crate::decimal")]
    pub d: BigUint,
    /// (a, 0, -b) with ab = D, a > 1, ascending a.
    pub split: Vec<QuadForm>,
    /// (2a, 2a, (a - b)/2) with ab = D, ascending a; only for D = 3 (mod 4).
    pub half: Vec<QuadForm>,
}

impl AmbiguousCandidates {
    pub fn all(&self) -> impl Iterator<Item = &QuadForm> {
        self.split.iter().chain(self.half.iter())
    }

    pub fn len(&self) -> usize {
        self.split.len() + self.half.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Divisors of a square-free number given its distinct primes, ascending.
pub fn squarefree_divisors(primes: &[BigUint]) -> Vec<BigUint> {
    let mut divs = vec![BigUint::one()];
    for p in primes {
        let more: Vec<BigUint> = divs.iter().map(|d| d * p).collect();
        divs.extend(more);
    }
    divs.sort();
    divs
}

pub fn enumerate_ambiguous_candidates(d: &BigUint) -> Result<AmbiguousCandidates> {
    if *d <= BigUint::one() {
        return Err(Error::invalid(format!("D must exceed 1, got {d}")));
    }
    let f = factorize(&BigInt::from(d.clone()))?;
    if !f.is_squarefree() {
        return Err(Error::invalid(format!("D = {d} is not square-free")));
    }
    let primes: Vec<BigUint> = f.primes().cloned().collect();
    candidates_from_primes(&primes)
}

/// Candidate list for D = product of the given distinct primes.
pub fn candidates_from_primes(primes: &[BigUint]) -> Result<AmbiguousCandidates> {
    let d: BigUint = primes.iter().product();
    if d <= BigUint::one() {
        return Err(Error::invalid("D must exceed 1"));
    }
    let divisors = squarefree_divisors(primes);
    let mut split = Vec::new();
    let mut half = Vec::new();
    let d3mod4 = (&d % 4u32) == BigUint::from(3u32);
    for a in &divisors {
        let b = &d / a;
        let (ai, bi) = (BigInt::from(a.clone()), BigInt::from(b));
        if !a.is_one() {
            split.push(QuadForm::new(ai.clone(), 0, -&bi)?);
        }
        if d3mod4 {
            let two_a = BigInt::from(2) * &ai;
            half.push(QuadForm::new(two_a.clone(), two_a, (&ai - &bi) / 2)?);
        }
    }
    Ok(AmbiguousCandidates { d, split, half })
}

/// A positive value represented by a form at a coprime pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representation {
    #[serde(with = "crate::decimal")]
    pub theta: BigInt,
    #[serde(with = "crate::decimal")]
    pub x: BigInt,
    #[serde(with = "crate::decimal")]
    pub y: BigInt,
}

/// Closed-form evaluation points tried first: they give 4a-b, a-4b, a-b and
/// the (a-b)/2 family on the candidate shapes.
const FAST_POINTS: [(i64, i64); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)];
const ROW_LIMIT: u64 = 1 << 16;
const ROW_WIDTH: i64 = 64;

fn admissible(v: &BigInt, two_d: &BigInt) -> bool {
    v.is_positive() && v.gcd(two_d).is_one()
}

/// Positive represented values coprime to 2D, in search order: the closed-form
/// points, then rows y = 1, 2, ... scanned from the positive root in x.
pub fn represented_values<'a>(f: &'a QuadForm, d: &BigUint) -> Result<impl Iterator<Item = Representation> + 'a> {
    let disc = f.discriminant();
    if disc != BigInt::from(4) * BigInt::from(d.clone()) || d.is_zero() {
        return Err(Error::invalid(format!("form {f} does not have discriminant 4*{d}")));
    }
    let two_d = BigInt::from(2) * BigInt::from(d.clone());

    // Bring the form to one with a > 0; (p q; r s) maps new coordinates back.
    let (g, p, q, r, s) = positive_leading(f)?;

    let fast = FAST_POINTS.iter().filter_map({
        let two_d = two_d.clone();
        move |&(x, y)| {
            let (x, y) = (BigInt::from(x), BigInt::from(y));
            let v = f.evaluate(&x, &y);
            admissible(&v, &two_d).then_some(Representation { theta: v, x, y })
        }
    });

    let rows = (1..=ROW_LIMIT).flat_map(move |y| {
        let y = BigInt::from(y);
        let root = integer_sqrt(&(&disc * &y * &y).magnitude().clone()).0;
        let x0 = (-(&g.b) * &y + BigInt::from(root)).div_floor(&(BigInt::from(2) * &g.a));
        let g = g.clone();
        let two_d = two_d.clone();
        let (p, q, r, s) = (p.clone(), q.clone(), r.clone(), s.clone());
        (-1..=ROW_WIDTH).filter_map(move |dx| {
            let x = &x0 + dx;
            if !x.gcd(&y).is_one() {
                return None;
            }
            let v = g.evaluate(&x, &y);
            if !admissible(&v, &two_d) {
                return None;
            }
            let (ox, oy) = (&p * &x + &r * &y, &q * &x + &s * &y);
            Some(Representation { theta: v, x: ox, y: oy })
        })
    });
    Ok(fast.chain(rows))
}

/// First positive value represented by f with gcd(theta, 2D) = 1, and its witness pair.
pub fn represented_value_coprime(f: &QuadForm, d: &BigUint) -> Result<Representation> {
    represented_values(f, d)?
        .next()
        .ok_or_else(|| Error::RepresentationNotFound { form: f.to_string() })
}

type Unimodular = (QuadForm, BigInt, BigInt, BigInt, BigInt);

/// An equivalent form with positive leading coefficient, plus the matrix
/// (p r; q s) with f(p x + r y, q x + s y) = g(x, y).
fn positive_leading(f: &QuadForm) -> Result<Unimodular> {
    let (one, zero) = (BigInt::one(), BigInt::zero());
    if f.a.is_positive() {
        return Ok((f.clone(), one.clone(), zero.clone(), zero, one));
    }
    if f.c.is_positive() {
        // (x, y) -> (y, -x) keeps determinant 1
        let g = f.transform(&zero, &-one.clone(), &one, &zero);
        return Ok((g, zero.clone(), -one.clone(), one, zero));
    }
    for n in 1i64..2000 {
        for p in -n..=n {
            for q in [n - p.abs(), p.abs() - n] {
                let (pb, qb) = (BigInt::from(p), BigInt::from(q));
                if !pb.gcd(&qb).is_one() || !f.evaluate(&pb, &qb).is_positive() {
                    continue;
                }
                // complete (p, q) to a matrix of determinant 1: p s - q r = 1
                let e = pb.extended_gcd(&qb);
                let (s, r) = (e.x * e.gcd.signum(), -e.y * e.gcd.signum());
                let g = f.transform(&pb, &qb, &r, &s);
                return Ok((g, pb, qb, r, s));
            }
        }
    }
    Err(Error::RepresentationNotFound { form: f.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::new(a, b, c).unwrap()
    }

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn construction_rejects_bad_forms() {
        assert!(QuadForm::new(2, 1, -3).is_err()); // disc 25
        assert!(QuadForm::new(2, 0, -4).is_err()); // not primitive
        assert!(QuadForm::new(1, 1, 1).is_ok()); // disc -3
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(form(1, 0, -6).evaluate(&bi(1), &bi(0)), bi(1));
        assert_eq!(form(3, 0, -2).evaluate(&bi(1), &bi(1)), bi(1));
        assert_eq!(form(2, 2, -7).evaluate(&bi(0), &bi(1)), bi(-7));
    }

    #[test]
    fn ambiguity() {
        assert!(form(3, 0, -2).is_ambiguous());
        assert!(form(2, 2, -7).is_ambiguous());
        assert!(!form(2, 1, -7).is_ambiguous());
    }

    #[test]
    fn identity_examples() {
        assert_eq!(identity_form(&bi(24)).unwrap(), form(1, 0, -6));
        assert_eq!(identity_form(&bi(40920)).unwrap(), form(1, 0, -10230));
        assert_eq!(identity_form(&bi(13)).unwrap(), form(1, 1, -3));
        assert!(identity_form(&bi(16)).is_err());
        assert!(identity_form(&bi(7)).is_err());
    }

    #[test]
    fn candidate_examples() {
        let c = enumerate_ambiguous_candidates(&BigUint::from(6u32)).unwrap();
        assert_eq!(c.split, vec![form(2, 0, -3), form(3, 0, -2), form(6, 0, -1)]);
        assert!(c.half.is_empty());
        let c = enumerate_ambiguous_candidates(&BigUint::from(15u32)).unwrap();
        assert_eq!(c.split, vec![form(3, 0, -5), form(5, 0, -3), form(15, 0, -1)]);
        assert_eq!(c.half, vec![form(2, 2, -7), form(6, 6, -1), form(10, 10, 1), form(30, 30, 7)]);
        let c = enumerate_ambiguous_candidates(&BigUint::from(2u32)).unwrap();
        assert_eq!(c.split, vec![form(2, 0, -1)]);
        assert!(c.half.is_empty());
        assert!(enumerate_ambiguous_candidates(&BigUint::from(12u32)).is_err());
        assert!(enumerate_ambiguous_candidates(&BigUint::from(1u32)).is_err());
    }

    #[test]
    fn candidates_are_well_formed() {
        for d in 2u64..500 {
            let Ok(c) = enumerate_ambiguous_candidates(&BigUint::from(d)) else { continue };
            let tau = 1usize << crate::factor::distinct_primes(d).len();
            assert_eq!(c.split.len(), tau - 1);
            assert_eq!(c.half.len(), if d % 4 == 3 { tau } else { 0 });
            for f in c.all() {
                assert!(f.is_ambiguous());
                assert_eq!(f.discriminant(), bi(4 * d as i64));
            }
        }
    }

    #[test]
    fn represented_value_examples() {
        let six = BigUint::from(6u32);
        let r = represented_value_coprime(&form(3, 0, -2), &six).unwrap();
        assert_eq!((r.theta, r.x, r.y), (bi(1), bi(1), bi(1)));
        let r = represented_value_coprime(&form(2, 0, -3), &six).unwrap();
        assert_eq!((r.theta, r.x, r.y), (bi(5), bi(2), bi(1)));
        let r = represented_value_coprime(&form(6, 6, -1), &BigUint::from(15u32)).unwrap();
        assert_eq!((r.theta, r.x, r.y), (bi(11), bi(1), bi(1)));
        assert!(represented_value_coprime(&form(3, 0, -2), &BigUint::from(7u32)).is_err());
    }

    #[test]
    fn skewed_and_negative_leading_forms() {
        // positive values only near the asymptote
        let d = BigUint::from(2u32 * 158685);
        let f = form(2, 0, -158685);
        let r = represented_value_coprime(&f, &d).unwrap();
        assert_eq!(f.evaluate(&r.x, &r.y), r.theta);
        // a < 0, c > 0 and a < 0, c < 0
        for f in [form(-3, 0, 2), form(-1, 4, -1), form(-5, 9, -3)] {
            let disc = f.discriminant();
            let d = (disc / 4u32).magnitude().clone();
            if f.discriminant() != BigInt::from(4) * BigInt::from(d.clone()) {
                continue;
            }
            let r = represented_value_coprime(&f, &d).unwrap();
            assert_eq!(f.evaluate(&r.x, &r.y), r.theta);
            assert!(r.x.gcd(&r.y).is_one());
        }
    }

    #[test]
    fn represented_values_are_valid() {
        for d in [6u64, 15, 10230, 328335] {
            let db = BigUint::from(d);
            let c = enumerate_ambiguous_candidates(&db).unwrap();
            for f in c.all() {
                for r in represented_values(f, &db).unwrap().take(25) {
                    assert_eq!(f.evaluate(&r.x, &r.y), r.theta);
                    assert!(r.theta.is_positive());
                    assert!(r.x.gcd(&r.y).is_one());
                    assert!(r.theta.gcd(&BigInt::from(2 * d)).is_one());
                }
            }
        }
    }
}
