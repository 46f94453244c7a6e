//! Prime factorization and the Liouville function.
//!
//! Trial division by the primes below 10^6, then Brent's variant of Pollard's
//! rho with a fixed sequence of polynomial constants. The rho phase runs under an
//! iteration budget so that a hard input ends in a distinguishable error instead
//! of an unbounded loop; the budget is counted in iterations, never wall time,
//! so outcomes are reproducible.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, mul_mod, primality, small_prime_table, Sign};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorBudget {
    /// Total Pollard-rho iterations allowed across all composite cofactors.
    pub rho_iterations: u64,
}

impl Default for FactorBudget {
    fn default() -> Self {
        FactorBudget { rho_iterations: 4_000_000 }
    }
}

/// Sign and prime-power decomposition of a nonzero integer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub sign: Sign,
    /// (prime, exponent), primes strictly increasing.
    #[serde(with = "crate::decimal::powers")]
    pub factors: Vec<(BigUint, u32)>,
}

impl Factorization {
    pub fn one() -> Self {
        Factorization { sign: Sign::Plus, factors: Vec::new() }
    }

    fn from_map(sign: Sign, map: BTreeMap<BigUint, u32>) -> Self {
        Factorization { sign, factors: map.into_iter().collect() }
    }

    /// Omega: number of prime factors with multiplicity.
    pub fn omega(&self) -> u64 {
        self.factors.iter().map(|(_, e)| *e as u64).sum()
    }

    pub fn liouville(&self) -> Sign {
        Sign::parity(self.omega())
    }

    pub fn value(&self) -> BigInt {
        let mag = self
            .factors
            .iter()
            .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e));
        match self.sign {
            Sign::Plus => BigInt::from(mag),
            Sign::Minus => -BigInt::from(mag),
        }
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|(_, e)| *e == 1)
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }

    /// Product of two factorizations (exponents add).
    pub fn multiply(&self, other: &Factorization) -> Factorization {
        let mut map: BTreeMap<BigUint, u32> = self.factors.iter().cloned().collect();
        for (p, e) in &other.factors {
            *map.entry(p.clone()).or_insert(0) += e;
        }
        Factorization::from_map(self.sign * other.sign, map)
    }

    pub fn square(&self) -> Factorization {
        Factorization {
            sign: Sign::Plus,
            factors: self.factors.iter().map(|(p, e)| (p.clone(), 2 * e)).collect(),
        }
    }

    /// Checks the invariants: increasing primes, positive exponents, each prime
    /// passes the primality test, and the product reconstructs `n`.
    pub fn reconstructs(&self, n: &BigInt) -> bool {
        let increasing = self.factors.windows(2).all(|w| w[0].0 < w[1].0);
        let all_prime = self.factors.iter().all(|(p, e)| *e > 0 && primality(p).is_prime());
        increasing && all_prime && self.value() == *n
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == Sign::Minus {
            f.write_str("-")?;
        }
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| if *e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        f.write_str(&parts.join(" * "))
    }
}

// ---------------------------------------------------------------------------
// u64 path

fn rho_u64(n: u64, c: u64, max_iter: u64, spent: &mut u64) -> Option<u64> {
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
    let mut x;
    let mut ys;
    let m = 128;
    loop {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            *spent += m.min(r - k);
            let g = q.gcd(&n);
            k += m;
            if g != 1 {
                if g == n {
                    // backtrack one step at a time
                    loop {
                        ys = f(ys);
                        let g = x.abs_diff(ys).gcd(&n);
                        if g != 1 {
                            return if g == n { None } else { Some(g) };
                        }
                    }
                }
                return Some(g);
            }
            if *spent > max_iter {
                return None;
            }
        }
        r *= 2;
    }
}

fn split_u64(n: u64, out: &mut BTreeMap<u64, u32>, budget: u64, spent: &mut u64) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    if is_prime(n) {
        *out.entry(n).or_insert(0) += 1;
        return Ok(());
    }
    let (r, exact) = crate::arith::integer_sqrt_u128(n as u128);
    if exact {
        split_u64(r as u64, out, budget, spent)?;
        return split_u64(r as u64, out, budget, spent);
    }
    for c in 1u64.. {
        if *spent > budget {
            return Err(Error::FactorBudgetExhausted { cofactor: n.to_string() });
        }
        if let Some(d) = rho_u64(n, c, budget, spent) {
            split_u64(d, out, budget, spent)?;
            return split_u64(n / d, out, budget, spent);
        }
    }
    unreachable!()
}

/// Full factorization of a positive u64, as (prime, exponent) pairs.
pub fn factorize_u64(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factorize_u64(0)");
    let mut out = BTreeMap::new();
    for &p in small_prime_table().iter().take(168) {
        if p * p > n {
            break;
        }
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.insert(p, e);
        }
    }
    let mut spent = 0;
    split_u64(n, &mut out, u64::MAX, &mut spent).expect("u64 rho with unbounded budget");
    out.into_iter().collect()
}

// ---------------------------------------------------------------------------
// BigUint path

fn rho_big(n: &BigUint, c: u64, budget: u64, spent: &mut u64) -> Option<BigUint> {
    let c = BigUint::from(c);
    let f = |x: &BigUint| (x * x + &c) % n;
    let mut y = BigUint::from(2u32);
    let mut x;
    let mut ys;
    let mut q = BigUint::one();
    let mut r = 1u64;
    let m = 128u64;
    loop {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r {
            ys = y.clone();
            let steps = m.min(r - k);
            for _ in 0..steps {
                y = f(&y);
                let diff = if x > y { &x - &y } else { &y - &x };
                q = q * diff % n;
            }
            *spent += steps;
            let g = q.gcd(n);
            k += m;
            if !g.is_one() {
                if &g == n {
                    loop {
                        ys = f(&ys);
                        let diff = if x > ys { &x - &ys } else { &ys - &x };
                        let g = diff.gcd(n);
                        if !g.is_one() {
                            return if &g == n { None } else { Some(g) };
                        }
                    }
                }
                return Some(g);
            }
            if *spent > budget {
                return None;
            }
        }
        r *= 2;
    }
}

fn split_big(n: BigUint, out: &mut BTreeMap<BigUint, u32>, budget: u64, spent: &mut u64) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if let Some(small) = n.to_u64() {
        for (p, e) in factorize_u64(small) {
            *out.entry(BigUint::from(p)).or_insert(0) += e;
        }
        return Ok(());
    }
    if primality(&n).is_prime() {
        *out.entry(n).or_insert(0) += 1;
        return Ok(());
    }
    let (r, exact) = crate::arith::integer_sqrt(&n);
    if exact {
        let mut half = BTreeMap::new();
        split_big(r, &mut half, budget, spent)?;
        for (p, e) in half {
            *out.entry(p).or_insert(0) += 2 * e;
        }
        return Ok(());
    }
    for c in 1u64.. {
        if *spent > budget {
            return Err(Error::FactorBudgetExhausted { cofactor: n.to_string() });
        }
        if let Some(d) = rho_big(&n, c, budget, spent) {
            let other = &n / &d;
            split_big(d, out, budget, spent)?;
            return split_big(other, out, budget, spent);
        }
    }
    unreachable!()
}

/// Complete factorization of a nonzero integer with the default budget.
pub fn factorize(n: &BigInt) -> Result<Factorization> {
    factorize_with(n, &FactorBudget::default())
}

pub fn factorize_with(n: &BigInt, budget: &FactorBudget) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::invalid("cannot factor 0"));
    }
    let sign = if n.is_negative() { Sign::Minus } else { Sign::Plus };
    let mut rest = n.magnitude().clone();
    let mut map = BTreeMap::new();
    if let Some(small) = rest.to_u64() {
        for (p, e) in factorize_u64(small) {
            map.insert(BigUint::from(p), e);
        }
        return Ok(Factorization::from_map(sign, map));
    }
    for &p in small_prime_table() {
        if rest.bits() <= 64 {
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            map.insert(pb, e);
        }
    }
    let mut spent = 0;
    split_big(rest, &mut map, budget.rho_iterations, &mut spent)?;
    Ok(Factorization::from_map(sign, map))
}

/// lambda(n) = (-1)^Omega(n) for n >= 1.
pub fn liouville(n: u64) -> Result<Sign> {
    if n == 0 {
        return Err(Error::invalid("the Liouville function is defined for n >= 1"));
    }
    let omega: u64 = factorize_u64(n).iter().map(|(_, e)| *e as u64).sum();
    Ok(Sign::parity(omega))
}

pub fn liouville_big(n: &BigInt) -> Result<Sign> {
    if !n.is_positive() {
        return Err(Error::invalid(format!("the Liouville function is defined for n >= 1, got {n}")));
    }
    Ok(factorize(n)?.liouville())
}

/// Writes n = core * scale^2 with |core| square-free and sign(core) = sign(n).
pub fn squarefree_core(n: i64) -> Result<(i64, u64)> {
    if n == 0 {
        return Err(Error::invalid("square-free core of 0 is undefined"));
    }
    let mut core = 1u64;
    let mut scale = 1u64;
    for (p, e) in factorize_u64(n.unsigned_abs()) {
        if e % 2 == 1 {
            core *= p;
        }
        scale *= p.pow(e / 2);
    }
    let core = core as i64;
    Ok((if n < 0 { -core } else { core }, scale))
}

pub fn is_squarefree(n: u64) -> bool {
    n > 0 && factorize_u64(n).iter().all(|(_, e)| *e == 1)
}

/// Prime factors of a square-free-or-not positive integer in ascending order.
pub fn distinct_primes(n: u64) -> Vec<u64> {
    factorize_u64(n).into_iter().map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fac(n: i64) -> Vec<(u64, u32)> {
        factorize(&BigInt::from(n))
            .unwrap()
            .factors
            .into_iter()
            .map(|(p, e)| (p.to_u64().unwrap(), e))
            .collect()
    }

    #[test]
    fn factorize_examples() {
        let one = factorize(&BigInt::from(1)).unwrap();
        assert_eq!(one.sign, Sign::Plus);
        assert!(one.factors.is_empty());
        assert_eq!(fac(12), vec![(2, 2), (3, 1)]);
        assert_eq!(fac(1705), vec![(5, 1), (11, 1), (31, 1)]);
        let neg = factorize(&BigInt::from(-150)).unwrap();
        assert_eq!(neg.sign, Sign::Minus);
        assert_eq!(neg.value(), BigInt::from(-150));
        assert!(factorize(&BigInt::zero()).is_err());
    }

    #[test]
    fn factorize_large() {
        // (2^61 - 1) * (2^31 - 1) * 1000003^2
        let p61 = (BigUint::one() << 61u32) - 1u32;
        let p31 = BigUint::from(2147483647u64);
        let n = &p61 * &p31 * BigUint::from(1000003u64).pow(2);
        let f = factorize(&BigInt::from(n.clone())).unwrap();
        assert!(f.reconstructs(&BigInt::from(n)));
        assert_eq!(f.omega(), 4);
        // two ~12-digit primes
        let a = BigUint::from(999999000001u64);
        let b = BigUint::from(1000000000039u64);
        let n = &a * &b * 7u32;
        let f = factorize(&BigInt::from(n.clone())).unwrap();
        assert_eq!(f.factors, vec![(BigUint::from(7u32), 1), (a, 1), (b, 1)]);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        // product of two 30-digit primes is out of reach for 10^4 rho steps
        let a: BigUint = "100000000000000000000000000319".parse().unwrap();
        let b: BigUint = "100000000000000000000000001027".parse().unwrap();
        assert!(primality(&a).is_prime() && primality(&b).is_prime());
        let r = factorize_with(&BigInt::from(a * b), &FactorBudget { rho_iterations: 10_000 });
        assert!(matches!(r, Err(Error::FactorBudgetExhausted { .. })));
    }

    #[test]
    fn liouville_examples() {
        assert_eq!(liouville(1).unwrap(), Sign::Plus);
        assert_eq!(liouville(2).unwrap(), Sign::Minus);
        assert_eq!(liouville(12).unwrap(), Sign::Minus);
        assert_eq!(liouville(150).unwrap(), Sign::Plus);
        assert!(liouville(0).is_err());
        assert!(liouville_big(&BigInt::from(-4)).is_err());
    }

    #[test]
    fn squarefree_core_examples() {
        assert_eq!(squarefree_core(6).unwrap(), (6, 1));
        assert_eq!(squarefree_core(18).unwrap(), (2, 3));
        assert_eq!(squarefree_core(-75).unwrap(), (-3, 5));
        assert_eq!(squarefree_core(-9).unwrap(), (-1, 3));
        assert!(squarefree_core(0).is_err());
    }

    proptest! {
        #[test]
        fn factorization_reconstructs(n in 1u64..u64::MAX) {
            let f = factorize(&BigInt::from(n)).unwrap();
            prop_assert!(f.reconstructs(&BigInt::from(n)));
        }

        #[test]
        fn liouville_multiplicative(a in 1u64..1_000_000, b in 1u64..1_000_000) {
            prop_assert_eq!(liouville(a * b).unwrap(), liouville(a).unwrap() * liouville(b).unwrap());
        }

        #[test]
        fn core_recomposes(n in -1_000_000_000i64..1_000_000_000) {
            prop_assume!(n != 0);
            let (core, scale) = squarefree_core(n).unwrap();
            prop_assert_eq!(core * (scale * scale) as i64, n);
            prop_assert!(is_squarefree(core.unsigned_abs()));
        }
    }
}
