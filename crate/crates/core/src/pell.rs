//! Continued fractions of square roots, Pell equations `t^2 - D u^2 = 1`, the
//! generalized equations `a x^2 - b y^2 = eps` with `eps` in {+-1, +-2}, and the
//! search for the ambiguous form that shares the principal class with the identity.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{integer_sqrt, integer_sqrt_u128, Sign};
use crate::error::{Error, Result};
use crate::factor::factorize;
use crate::forms::{enumerate_ambiguous_candidates, QuadForm};

/// `[a0; period...]` with the period repeating forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub a0: BigUint,
    pub period: Vec<BigUint>,
}

fn require_nonsquare(d: &BigUint) -> Result<BigUint> {
    let (root, exact) = integer_sqrt(d);
    if exact {
        return Err(Error::invalid(format!("{d} is a perfect square")));
    }
    Ok(root)
}

pub fn cf_sqrt(d: &BigUint) -> Result<ContinuedFraction> {
    let a0 = require_nonsquare(d)?;
    let mut period = Vec::new();
    let two_a0 = &a0 * 2u32;
    let (mut m, mut q, mut a) = (BigUint::zero(), BigUint::one(), a0.clone());
    loop {
        m = &q * &a - &m;
        q = (d - &m * &m) / &q;
        a = (&a0 + &m) / &q;
        period.push(a.clone());
        if a == two_a0 {
            break;
        }
    }
    Ok(ContinuedFraction { a0, period })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PellFundamental {
    #[serde(with = "crate::decimal")]
    pub d: BigUint,
    #[serde(with = "crate::decimal")]
    pub t: BigInt,
    #[serde(with = "crate::decimal")]
    pub u: BigInt,
    pub unit_norm: Sign,
    #[serde(with = "crate::decimal::pair_opt")]
    pub neg_solution: Option<(BigInt, BigInt)>,
    pub period_len: usize,
}

/// Minimal solution of t^2 - D u^2 = 1 from the convergent at the end of the
/// first period (or the square of the -1 solution when the period is odd).
pub fn fundamental_solution(d: &BigUint) -> Result<PellFundamental> {
    let cf = cf_sqrt(d)?;
    let l = cf.period.len();
    let (mut p_prev, mut p) = (BigUint::one(), cf.a0.clone());
    let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
    for a in &cf.period[..l - 1] {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    let dd = BigInt::from(d.clone());
    let (p, q) = (BigInt::from(p), BigInt::from(q));
    let fund = if l % 2 == 0 {
        PellFundamental { d: d.clone(), t: p, u: q, unit_norm: Sign::Plus, neg_solution: None, period_len: l }
    } else {
        let t = &p * &p + &dd * &q * &q;
        let u = BigInt::from(2u32) * &p * &q;
        PellFundamental { d: d.clone(), t, u, unit_norm: Sign::Minus, neg_solution: Some((p, q)), period_len: l }
    };
    if &fund.t * &fund.t - &dd * &fund.u * &fund.u != BigInt::one() {
        return Err(Error::Internal(format!("convergent fails the Pell equation for D = {d}")));
    }
    if let Some((x, y)) = &fund.neg_solution {
        if x * x - &dd * y * y != -BigInt::one() {
            return Err(Error::Internal(format!("convergent fails the negative Pell equation for D = {d}")));
        }
    }
    Ok(fund)
}

/// A positive solution of a x^2 - b y^2 = eps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizedSolution {
    #[serde(with = "crate::decimal")]
    pub a: BigInt,
    #[serde(with = "crate::decimal")]
    pub b: BigInt,
    pub eps: i8,
    #[serde(with = "crate::decimal")]
    pub x: BigInt,
    #[serde(with = "crate::decimal")]
    pub y: BigInt,
}

impl GeneralizedSolution {
    /// Exact re-check of the equation, positivity, and odd xy when |eps| = 2.
    pub fn holds(&self) -> bool {
        let lhs = &self.a * &self.x * &self.x - &self.b * &self.y * &self.y;
        let odd = self.eps.abs() != 2 || (self.x.is_odd() && self.y.is_odd());
        lhs == BigInt::from(self.eps) && self.x.is_positive() && self.y.is_positive() && odd
    }
}

/// Budget of the cross-checking brute-force solver.
pub const BRUTE_Y_LIMIT: u64 = 10_000;

fn check_generalized_args(a: &BigInt, b: &BigInt, eps: i8) -> Result<()> {
    if ![1, -1, 2, -2].contains(&eps) {
        return Err(Error::invalid(format!("eps must be one of 1, -1, 2, -2; got {eps}")));
    }
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::invalid(format!("a and b must be positive, got {a}, {b}")));
    }
    if !a.gcd(b).is_one() {
        return Err(Error::invalid(format!("a = {a} and b = {b} are not coprime")));
    }
    Ok(())
}

pub fn solve_generalized(a: &BigInt, b: &BigInt, eps: i8) -> Result<Option<GeneralizedSolution>> {
    check_generalized_args(a, b, eps)?;
    let fund = fundamental_solution((a * b).magnitude())?;
    solve_generalized_with(a, b, eps, &fund)
}

/// As [`solve_generalized`] with a precomputed fundamental solution for D = ab.
pub fn solve_generalized_with(
    a: &BigInt,
    b: &BigInt,
    eps: i8,
    fund: &PellFundamental,
) -> Result<Option<GeneralizedSolution>> {
    check_generalized_args(a, b, eps)?;
    if BigInt::from(fund.d.clone()) != a * b {
        return Err(Error::invalid(format!("fundamental solution is for D = {}, not {}", fund.d, a * b)));
    }
    let extracted = extract(a, b, eps, fund);
    if let Some(s) = &extracted {
        if !s.holds() {
            return Err(Error::Internal(format!("extracted pair ({}, {}) fails {a}x^2 - {b}y^2 = {eps}", s.x, s.y)));
        }
    }
    let brute = brute_generalized(a, b, eps, BRUTE_Y_LIMIT);
    match (&extracted, &brute) {
        (Some(s), Some(r)) if s != r => Err(disagreement(a, b, eps, format!("extraction ({}, {}), brute force ({}, {})", s.x, s.y, r.x, r.y))),
        (None, Some(r)) => Err(disagreement(a, b, eps, format!("extraction found nothing, brute force ({}, {})", r.x, r.y))),
        _ => Ok(extracted),
    }
}

fn disagreement(a: &BigInt, b: &BigInt, eps: i8, detail: String) -> Error {
    Error::SolverDisagreement { a: a.to_string(), b: b.to_string(), eps, detail }
}

fn exact_quotient_sqrt(n: &BigInt, den: &BigInt) -> Option<BigInt> {
    let (q, r) = n.div_rem(den);
    if !r.is_zero() || q.is_negative() {
        return None;
    }
    let (root, exact) = integer_sqrt(q.magnitude());
    (exact && !root.is_zero()).then(|| BigInt::from(root))
}

/// Reads the minimal solution off the fundamental unit: the square of
/// x sqrt(a) + y sqrt(b) (halved when |eps| = 2) equals t + u sqrt(ab).
fn extract(a: &BigInt, b: &BigInt, eps: i8, fund: &PellFundamental) -> Option<GeneralizedSolution> {
    let (t, u) = (&fund.t, &fund.u);
    let one = BigInt::one();
    let two = BigInt::from(2);
    let mk = |x: BigInt, y: BigInt| GeneralizedSolution { a: a.clone(), b: b.clone(), eps, x, y };
    if eps == 1 && a.is_one() {
        return Some(mk(t.clone(), u.clone()));
    }
    if eps == -1 && b.is_one() {
        return Some(mk(u.clone(), t.clone()));
    }
    let (x_num, x_den, y_num, y_den) = match eps {
        1 => (t + &one, &two * a, t - &one, &two * b),
        -1 => (t - &one, &two * a, t + &one, &two * b),
        2 => (t + &one, a.clone(), t - &one, b.clone()),
        _ => (t - &one, a.clone(), t + &one, b.clone()),
    };
    let x = exact_quotient_sqrt(&x_num, &x_den)?;
    let y = exact_quotient_sqrt(&y_num, &y_den)?;
    let s = mk(x, y);
    s.holds().then_some(s)
}

/// Smallest y <= limit (then x) with a x^2 - b y^2 = eps, x, y > 0 (xy odd when |eps| = 2).
pub fn brute_generalized(a: &BigInt, b: &BigInt, eps: i8, limit: u64) -> Option<GeneralizedSolution> {
    let mk = |x: BigInt, y: BigInt| GeneralizedSolution { a: a.clone(), b: b.clone(), eps, x, y };
    let need_odd = eps.abs() == 2;
    let small = (a.to_u64(), b.to_u64());
    if let (Some(au), Some(bu)) = small {
        if bu < (1 << 60) && au < (1 << 60) {
            let (au, bu) = (au as u128, bu as u128);
            for y in 1..=limit as u128 {
                if need_odd && y % 2 == 0 {
                    continue;
                }
                let rhs = bu * y * y;
                let Some(num) = (rhs as i128).checked_add(eps as i128) else { continue };
                if num <= 0 || num as u128 % au != 0 {
                    continue;
                }
                let (x, exact) = integer_sqrt_u128(num as u128 / au);
                if exact && x > 0 && (!need_odd || x % 2 == 1) {
                    return Some(mk(BigInt::from(x), BigInt::from(y)));
                }
            }
            return None;
        }
    }
    for y in 1..=limit {
        if need_odd && y % 2 == 0 {
            continue;
        }
        let y = BigInt::from(y);
        if let Some(x) = exact_quotient_sqrt(&(b * &y * &y + eps), a) {
            if !need_odd || x.is_odd() {
                return Some(mk(x, y));
            }
        }
    }
    None
}

/// Next solution: (t x + b u y, a u x + t y).
pub fn iterate_solution(sol: &GeneralizedSolution, fund: &PellFundamental) -> Result<GeneralizedSolution> {
    if sol.eps.abs() != 1 {
        return Err(Error::invalid("iteration is defined for eps = +-1"));
    }
    if BigInt::from(fund.d.clone()) != &sol.a * &sol.b {
        return Err(Error::invalid(format!("fundamental solution is for D = {}, not {}", fund.d, &sol.a * &sol.b)));
    }
    let x = &fund.t * &sol.x + &sol.b * &fund.u * &sol.y;
    let y = &sol.a * &fund.u * &sol.x + &fund.t * &sol.y;
    let next = GeneralizedSolution { a: sol.a.clone(), b: sol.b.clone(), eps: sol.eps, x, y };
    if !next.holds() {
        return Err(Error::Internal(format!("iterated pair fails {}x^2 - {}y^2 = {}", sol.a, sol.b, sol.eps)));
    }
    Ok(next)
}

/// The ambiguous candidate representing 1, the equation solution behind it, and
/// the pair (alpha, beta) at which the form takes the value 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrincipalAmbiguous {
    pub form: QuadForm,
    pub solution: GeneralizedSolution,
    #[serde(with = "crate::decimal")]
    pub alpha: BigInt,
    #[serde(with = "crate::decimal")]
    pub beta: BigInt,
}

/// Every candidate that represents 1: (a, 0, -b) via a x^2 - b y^2 = 1 and
/// (2a, 2a, (a - b)/2) via a x^2 - b y^2 = 2 at ((x - y)/2, y).
pub fn candidates_representing_one(d: &BigUint, fund: &PellFundamental) -> Result<Vec<PrincipalAmbiguous>> {
    let cands = enumerate_ambiguous_candidates(d)?;
    let mut found = Vec::new();
    for f in &cands.split {
        let (a, b) = (f.a.clone(), -&f.c);
        if let Some(s) = solve_generalized_with(&a, &b, 1, fund)? {
            found.push(PrincipalAmbiguous { form: f.clone(), alpha: s.x.clone(), beta: s.y.clone(), solution: s });
        }
    }
    for f in &cands.half {
        let a = &f.a / 2;
        let b = BigInt::from(d.clone()) / &a;
        if let Some(s) = solve_generalized_with(&a, &b, 2, fund)? {
            let alpha = (&s.x - &s.y) / 2;
            let beta = s.y.clone();
            if f.evaluate(&alpha, &beta) != BigInt::one() {
                return Err(Error::Internal(format!("{f} does not represent 1 at ({alpha}, {beta})")));
            }
            found.push(PrincipalAmbiguous { form: f.clone(), solution: s, alpha, beta });
        }
    }
    Ok(found)
}

/// For D with unit norm +1, the unique candidate representing 1 (asserted);
/// `None` when the unit norm is -1.
pub fn principal_class_ambiguous(d: &BigUint) -> Result<Option<PrincipalAmbiguous>> {
    let fact = factorize(&BigInt::from(d.clone()))?;
    if *d <= BigUint::one() || !fact.is_squarefree() {
        return Err(Error::invalid(format!("D must be square-free and > 1, got {d}")));
    }
    let fund = fundamental_solution(d)?;
    if fund.unit_norm == Sign::Minus {
        return Ok(None);
    }
    let mut found = candidates_representing_one(d, &fund)?;
    if found.len() != 1 {
        return Err(Error::ExactnessViolated { d: d.to_string(), found: found.len() });
    }
    Ok(found.pop())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bu(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn sol(a: i64, b: i64, eps: i8) -> Option<(BigInt, BigInt)> {
        solve_generalized(&bi(a), &bi(b), eps).unwrap().map(|s| (s.x, s.y))
    }

    #[test]
    fn cf_examples() {
        let cf = cf_sqrt(&bu(2)).unwrap();
        assert_eq!((cf.a0, cf.period), (bu(1), vec![bu(2)]));
        let cf = cf_sqrt(&bu(6)).unwrap();
        assert_eq!((cf.a0, cf.period), (bu(2), vec![bu(2), bu(4)]));
        let cf = cf_sqrt(&bu(3)).unwrap();
        assert_eq!((cf.a0, cf.period), (bu(1), vec![bu(1), bu(2)]));
        assert!(cf_sqrt(&bu(49)).is_err());
    }

    #[test]
    fn fundamental_examples() {
        let f = fundamental_solution(&bu(6)).unwrap();
        assert_eq!((f.t, f.u, f.unit_norm), (bi(5), bi(2), Sign::Plus));
        let f = fundamental_solution(&bu(2)).unwrap();
        assert_eq!((f.t, f.u, f.unit_norm, f.neg_solution), (bi(3), bi(2), Sign::Minus, Some((bi(1), bi(1)))));
        let f = fundamental_solution(&bu(3)).unwrap();
        assert_eq!((f.t, f.u, f.unit_norm), (bi(2), bi(1), Sign::Plus));
        let f = fundamental_solution(&bu(61)).unwrap();
        assert_eq!((f.t, f.u), (bi(1766319049), bi(226153980)));
        assert!(fundamental_solution(&bu(4)).is_err());
    }

    #[test]
    fn fundamental_is_minimal() {
        for d in 2u64..200 {
            if integer_sqrt(&bu(d)).1 {
                continue;
            }
            let f = fundamental_solution(&bu(d)).unwrap();
            let umin = f.u.to_u64().unwrap_or(u64::MAX).min(100_000);
            for u in 1..umin {
                let (_, exact) = integer_sqrt_u128(1 + d as u128 * (u as u128) * (u as u128));
                assert!(!exact, "D = {d}: smaller u = {u}");
            }
        }
    }

    #[test]
    fn generalized_examples() {
        assert_eq!(sol(3, 2, 1), Some((bi(1), bi(1))));
        assert_eq!(sol(2, 3, -1), Some((bi(1), bi(1))));
        assert_eq!(sol(5, 3, 2), Some((bi(1), bi(1))));
        assert_eq!(sol(2, 3, 1), None);
        assert_eq!(sol(1, 6, 1), Some((bi(5), bi(2))));
        assert_eq!(sol(6, 1, -1), Some((bi(2), bi(5))));
        assert_eq!(sol(1, 2, -1), Some((bi(1), bi(1))));
        assert!(solve_generalized(&bi(2), &bi(4), 1).is_err());
        assert!(solve_generalized(&bi(2), &bi(3), 3).is_err());
        assert!(solve_generalized(&bi(1), &bi(4), 1).is_err());
    }

    #[test]
    fn generalized_matches_brute_force() {
        for ab in 2u64..200 {
            if integer_sqrt(&bu(ab)).1 {
                continue;
            }
            let fund = fundamental_solution(&bu(ab)).unwrap();
            for a in 1..=ab {
                if ab % a != 0 || a.gcd(&(ab / a)) != 1 {
                    continue;
                }
                let (a, b) = (bi(a as i64), bi((ab / a) as i64));
                for eps in [1, -1, 2, -2] {
                    let s = solve_generalized_with(&a, &b, eps, &fund).unwrap();
                    assert_eq!(s.clone().map(|s| s.holds()).unwrap_or(true), true);
                    assert_eq!(s, brute_generalized(&a, &b, eps, 1000).or(s.clone()));
                }
            }
        }
    }

    #[test]
    fn iteration_examples() {
        let f6 = fundamental_solution(&bu(6)).unwrap();
        let s = GeneralizedSolution { a: bi(3), b: bi(2), eps: 1, x: bi(1), y: bi(1) };
        let n = iterate_solution(&s, &f6).unwrap();
        assert_eq!((n.x, n.y), (bi(9), bi(11)));
        let s = GeneralizedSolution { a: bi(1), b: bi(6), eps: 1, x: bi(5), y: bi(2) };
        let n = iterate_solution(&s, &f6).unwrap();
        assert_eq!((n.x, n.y), (bi(49), bi(20)));
        let s = GeneralizedSolution { a: bi(2), b: bi(3), eps: -1, x: bi(1), y: bi(1) };
        let n = iterate_solution(&s, &f6).unwrap();
        assert_eq!((n.x, n.y), (bi(11), bi(9)));
    }

    #[test]
    fn iteration_is_exact() {
        let f = fundamental_solution(&bu(6)).unwrap();
        let mut s = GeneralizedSolution { a: bi(3), b: bi(2), eps: 1, x: bi(1), y: bi(1) };
        for _ in 0..1000 {
            s = iterate_solution(&s, &f).unwrap();
        }
        assert!(s.holds());
    }

    #[test]
    fn principal_ambiguous_examples() {
        let p = principal_class_ambiguous(&bu(6)).unwrap().unwrap();
        assert_eq!(p.form, QuadForm::new(3, 0, -2).unwrap());
        assert_eq!((p.solution.x, p.solution.y), (bi(1), bi(1)));
        assert!(principal_class_ambiguous(&bu(2)).unwrap().is_none());
        let p = principal_class_ambiguous(&bu(15)).unwrap().unwrap();
        assert_eq!(p.form, QuadForm::new(10, 10, 1).unwrap());
        assert_eq!((p.solution.a, p.solution.b, p.solution.eps), (bi(5), bi(3), 2));
        assert_eq!((p.alpha, p.beta), (bi(0), bi(1)));
        assert!(principal_class_ambiguous(&bu(12)).is_err());
    }
}
