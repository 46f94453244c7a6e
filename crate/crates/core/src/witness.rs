//! Sign witnesses for `lambda(n^2 + d)`.
//!
//! `d = core * scale^2` is reduced to its square-free core and a witness `n0`
//! for the core lifts to `n0 * scale`. Constructive streams come from a
//! solution family of `a x^2 - b y^2 = 1` and produce values of the shape
//! `cofactor * k^2` whose sign is `lambda(cofactor)`; the brute-force scan
//! covers the remaining cases and serves as an oracle.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, primes_up_to, sqrt_mod_prime, Sign, DEFAULT_PRIME_CAP};
use crate::construct::{construct_m, construct_prime_pair, MCertificate, PrimePairCertificate};
use crate::error::{Error, Result};
use crate::factor::{distinct_primes, factorize_u64, squarefree_core, Factorization};
use crate::pell::{fundamental_solution, iterate_solution, GeneralizedSolution, PellFundamental};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PellUnit,
    AuxiliaryM,
    PrimeCore,
    NegativePell,
    Scaled,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    SquareCoreFallback,
    PrimeCorePlus,
    PrimeCoreMinus1mod4,
    PrimeCoreMinus3mod4,
    CompositePellUnit,
    CompositeAuxiliaryPlus,
    CompositeAuxiliaryMinus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPlan {
    pub d: i64,
    /// Signed square-free core.
    pub core: i64,
    pub scale: u64,
    pub branch: Branch,
}

pub fn plan(d: i64) -> Result<WitnessPlan> {
    if d == 0 {
        return Err(Error::invalid("d must be nonzero"));
    }
    let (core, scale) = squarefree_core(d)?;
    let d0 = core.unsigned_abs();
    let branch = if d0 == 1 {
        Branch::SquareCoreFallback
    } else if is_prime(d0) {
        match (core > 0, d0 % 4) {
            (true, _) => Branch::PrimeCorePlus,
            (false, 3) => Branch::PrimeCoreMinus3mod4,
            // 2 also has a solvable negative Pell equation (1 - 2 = -1)
            (false, _) => Branch::PrimeCoreMinus1mod4,
        }
    } else if core < 0 {
        Branch::CompositeAuxiliaryMinus
    } else if distinct_primes(d0).len() % 2 == 1 {
        Branch::CompositePellUnit
    } else {
        Branch::CompositeAuxiliaryPlus
    };
    Ok(WitnessPlan { d, core, scale, branch })
}

/// value = factored * square_root^2, with every prime of `factored` known.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEvidence {
    pub factored: Factorization,
    #[serde(with = "crate::decimal")]
    pub square_root: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub d: i64,
    #[serde(with = "crate::decimal")]
    pub n: BigInt,
    #[serde(with = "crate::decimal")]
    pub value: BigInt,
    pub evidence: WitnessEvidence,
    pub lambda: Sign,
    pub provenance: Provenance,
    /// The method that produced the core witness when `provenance` is `scaled`.
    pub origin: Provenance,
    pub verified: bool,
}

impl Witness {
    /// Full factorization of the value, if the evidence has no unfactored square.
    pub fn factorization(&self) -> Option<&Factorization> {
        self.evidence.square_root.is_one().then_some(&self.evidence.factored)
    }

    /// Recomputes n^2 + d and checks the evidence and the sign against it.
    pub fn check(&self) -> bool {
        let value = &self.n * &self.n + BigInt::from(self.d);
        let ev = &self.evidence;
        value == self.value
            && value >= BigInt::one()
            && !ev.square_root.is_zero()
            && ev.factored.sign == Sign::Plus
            && ev.factored.reconstructs(&(&value / (&ev.square_root * &ev.square_root)))
            && ev.factored.value() * &ev.square_root * &ev.square_root == value
            && ev.factored.liouville() == self.lambda
    }
}

fn prime_product(primes: &[BigUint]) -> Factorization {
    let mut map = BTreeMap::new();
    for p in primes {
        *map.entry(p.clone()).or_insert(0u32) += 1;
    }
    Factorization { sign: Sign::Plus, factors: map.into_iter().collect() }
}

fn factor_small(n: u64) -> Factorization {
    Factorization {
        sign: Sign::Plus,
        factors: factorize_u64(n).into_iter().map(|(p, e)| (BigUint::from(p), e)).collect(),
    }
}

/// Absorbs the square part into the factorization when it fits in 64 bits.
fn evidence(factored: Factorization, square_root: BigInt) -> WitnessEvidence {
    if let Some(k) = square_root.to_u64().filter(|&k| k > 0) {
        return WitnessEvidence { factored: factored.multiply(&factor_small(k).square()), square_root: BigInt::one() };
    }
    WitnessEvidence { factored, square_root }
}

fn finish(mut w: Witness) -> Witness {
    w.verified = w.check();
    w
}

pub fn scale_witness(w: &Witness, scale: u64) -> Result<Witness> {
    if !w.verified {
        return Err(Error::invalid("only verified witnesses can be scaled"));
    }
    if scale == 0 {
        return Err(Error::invalid("scale must be positive"));
    }
    if scale == 1 {
        return Ok(w.clone());
    }
    let d = w
        .d
        .checked_mul((scale as i64).checked_mul(scale as i64).ok_or_else(|| Error::invalid("scale overflows"))?)
        .ok_or_else(|| Error::invalid("d * scale^2 overflows"))?;
    let s = BigInt::from(scale);
    let factored = w.evidence.factored.multiply(&factor_small(scale).square());
    Ok(finish(Witness {
        d,
        n: &w.n * &s,
        value: &w.value * &s * &s,
        evidence: WitnessEvidence { factored, square_root: w.evidence.square_root.clone() },
        lambda: w.lambda,
        provenance: Provenance::Scaled,
        origin: w.origin,
        verified: false,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    M(Box<MCertificate>),
    PrimePair(PrimePairCertificate),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessBatch {
    pub plan: WitnessPlan,
    pub sign: Sign,
    pub certificate: Option<Certificate>,
    /// Why the constructive branch was not used, when the scan stands in for it.
    pub fallback: Option<String>,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WitnessOptions {
    pub prime_cap: u64,
    pub brute_bound: u64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions { prime_cap: DEFAULT_PRIME_CAP, brute_bound: 10_000_000 }
    }
}

/// A family of solutions of a x^2 - b y^2 = 1 giving n0 = mult * (x or y) and
/// n0^2 + core = cofactor * k^2 with k the other coordinate.
struct Family {
    sol: GeneralizedSolution,
    fund: PellFundamental,
    mult: BigInt,
    n_from_x: bool,
    cofactor: Vec<BigUint>,
    provenance: Provenance,
}

impl Family {
    fn witnesses(mut self, plan: &WitnessPlan, count: usize) -> Result<Vec<Witness>> {
        let cof = prime_product(&self.cofactor);
        let lambda = cof.liouville();
        let cof_value = cof.value();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let (nx, k) = if self.n_from_x { (&self.sol.x, &self.sol.y) } else { (&self.sol.y, &self.sol.x) };
            let n0 = &self.mult * nx;
            let value = &n0 * &n0 + BigInt::from(plan.core);
            if value != &cof_value * k * k {
                return Err(Error::Internal(format!("n^2 + {} != {} * k^2 for n = {n0}", plan.core, cof_value)));
            }
            let w = finish(Witness {
                d: plan.core,
                n: n0,
                value,
                evidence: evidence(cof.clone(), k.clone()),
                lambda,
                provenance: self.provenance,
                origin: self.provenance,
                verified: false,
            });
            if !w.verified {
                return Err(Error::Internal(format!("constructed witness n = {} fails its own check", w.n)));
            }
            out.push(scale_witness(&w, plan.scale)?);
            self.sol = iterate_solution(&self.sol, &self.fund)?;
        }
        Ok(out)
    }
}

fn big_primes(n: u64) -> Vec<BigUint> {
    distinct_primes(n).into_iter().map(BigUint::from).collect()
}

/// x^2 - d0 y^2 = 1 from the fundamental solution: n0 = d0 y, n0^2 + d0 = d0 x^2.
fn pell_unit_family(d0: u64, provenance: Provenance) -> Result<Family> {
    let fund = fundamental_solution(&BigUint::from(d0))?;
    let sol = GeneralizedSolution { a: BigInt::one(), b: BigInt::from(d0), eps: 1, x: fund.t.clone(), y: fund.u.clone() };
    Ok(Family { sol, fund, mult: BigInt::from(d0), n_from_x: false, cofactor: big_primes(d0), provenance })
}

fn certificate_family(cert: &MCertificate) -> Result<Family> {
    let fund = fundamental_solution(&cert.D)?;
    let mut cofactor = big_primes(cert.d);
    cofactor.extend(cert.constructed_primes().into_iter().map(BigUint::from));
    Ok(Family {
        sol: cert.pell_evidence.clone(),
        fund,
        mult: BigInt::from(cert.d),
        n_from_x: cert.t == Sign::Minus,
        cofactor,
        provenance: Provenance::AuxiliaryM,
    })
}

fn negative_pell_family(p: u64) -> Result<Family> {
    let fund = fundamental_solution(&BigUint::from(p))?;
    let (x, y) = fund
        .neg_solution
        .clone()
        .ok_or_else(|| Error::Internal(format!("x^2 - {p}y^2 = -1 has no solution")))?;
    // p y^2 - x^2 = 1
    let sol = GeneralizedSolution { a: BigInt::from(p), b: BigInt::one(), eps: 1, x: y, y: x };
    Ok(Family { sol, fund, mult: BigInt::from(p), n_from_x: true, cofactor: big_primes(p), provenance: Provenance::NegativePell })
}

fn prime_pair_family(cert: &PrimePairCertificate) -> Result<Family> {
    let fund = fundamental_solution(&(BigUint::from(cert.p) * &cert.m))?;
    Ok(Family {
        sol: cert.evidence.clone(),
        fund,
        mult: BigInt::from(cert.p),
        n_from_x: true,
        cofactor: vec![BigUint::from(cert.p), BigUint::from(cert.e1), BigUint::from(cert.e2)],
        provenance: Provenance::PrimeCore,
    })
}

/// Ascending scan n = 0, 1, ... up to `bound` collecting witnesses of the given sign.
pub fn brute_witnesses(d: i64, sign: Sign, count: usize, bound: u64) -> Result<Vec<Witness>> {
    let mut out = Vec::with_capacity(count);
    for n in 0..=bound {
        if out.len() == count {
            break;
        }
        let v = n as i128 * n as i128 + d as i128;
        if v < 1 {
            continue;
        }
        let v = u64::try_from(v).map_err(|_| Error::invalid(format!("n^2 + d exceeds 64 bits at n = {n}")))?;
        let f = factor_small(v);
        if f.liouville() != sign {
            continue;
        }
        out.push(finish(Witness {
            d,
            n: BigInt::from(n),
            value: BigInt::from(v),
            evidence: WitnessEvidence { factored: f, square_root: BigInt::one() },
            lambda: sign,
            provenance: Provenance::Brute,
            origin: Provenance::Brute,
            verified: false,
        }));
    }
    if out.len() < count {
        return Err(Error::SearchExhausted { cap: bound });
    }
    Ok(out)
}

fn batch(plan: WitnessPlan, sign: Sign, certificate: Option<Certificate>, fallback: Option<String>, witnesses: Vec<Witness>) -> WitnessBatch {
    WitnessBatch { plan, sign, certificate, fallback, witnesses }
}

pub fn minus_witnesses(d: i64, count: usize) -> Result<WitnessBatch> {
    minus_witnesses_with(d, count, &WitnessOptions::default())
}

pub fn minus_witnesses_with(d: i64, count: usize, opts: &WitnessOptions) -> Result<WitnessBatch> {
    let plan = plan(d)?;
    let d0 = plan.core.unsigned_abs();
    let (family, cert) = match plan.branch {
        Branch::SquareCoreFallback => {
            let ws = brute_witnesses(d, Sign::Minus, count, opts.brute_bound)?;
            let why = "square core: no constructive base case".to_string();
            return Ok(batch(plan, Sign::Minus, None, Some(why), ws));
        }
        Branch::PrimeCorePlus => (pell_unit_family(d0, Provenance::PrimeCore)?, None),
        Branch::CompositePellUnit => (pell_unit_family(d0, Provenance::PellUnit)?, None),
        Branch::PrimeCoreMinus1mod4 => (negative_pell_family(d0)?, None),
        Branch::PrimeCoreMinus3mod4 => {
            let cert = construct_prime_pair(d0, opts.prime_cap)?;
            (prime_pair_family(&cert)?, Some(Certificate::PrimePair(cert)))
        }
        Branch::CompositeAuxiliaryPlus | Branch::CompositeAuxiliaryMinus => {
            let t = if plan.core > 0 { Sign::Plus } else { Sign::Minus };
            match construct_m(d0, t, opts.prime_cap) {
                Ok(cert) => (certificate_family(&cert)?, Some(Certificate::M(Box::new(cert)))),
                Err(e @ Error::ConclusionFails { .. }) => {
                    let ws = brute_witnesses(d, Sign::Minus, count, opts.brute_bound)?;
                    return Ok(batch(plan, Sign::Minus, None, Some(e.to_string()), ws));
                }
                Err(e) => return Err(e),
            }
        }
    };
    let ws = family.witnesses(&plan, count)?;
    Ok(batch(plan, Sign::Minus, cert, None, ws))
}

pub fn plus_witnesses(d: i64, count: usize) -> Result<WitnessBatch> {
    plus_witnesses_with(d, count, &WitnessOptions::default())
}

pub fn plus_witnesses_with(d: i64, count: usize, opts: &WitnessOptions) -> Result<WitnessBatch> {
    let plan = plan(d)?;
    if plan.branch == Branch::CompositeAuxiliaryPlus {
        let ws = pell_unit_family(plan.core.unsigned_abs(), Provenance::PellUnit)?.witnesses(&plan, count)?;
        return Ok(batch(plan, Sign::Plus, None, None, ws));
    }
    let ws = brute_witnesses(d, Sign::Plus, count, opts.brute_bound)?;
    let why = "no construction for +1 values on this branch".to_string();
    Ok(batch(plan, Sign::Plus, None, Some(why), ws))
}

/// Exact counts of lambda(n^2 + d) over 0 <= n <= bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignChangeReport {
    pub d: i64,
    pub bound: u64,
    pub count_minus: u64,
    pub count_plus: u64,
    /// n with n^2 + d < 1.
    pub skipped: u64,
    /// Smallest n whose sign differs from the previous counted n.
    pub first_change_n: Option<u64>,
}

/// Sieves Omega(n^2 + d) along the polynomial: for each prime p up to the square
/// root of the largest value, only n in the residue classes of the roots of
/// n^2 = -d (mod p) are divided.
pub fn sign_change_report(d: i64, bound: u64) -> Result<SignChangeReport> {
    if d == 0 {
        return Err(Error::invalid("d must be nonzero"));
    }
    if bound > u32::MAX as u64 {
        return Err(Error::invalid("bound must be below 2^32"));
    }
    let len = bound as usize + 1;
    let mut rem = vec![0u64; len];
    let mut omega = vec![0u32; len];
    let mut skipped = 0;
    let mut max = 1u64;
    for (n, r) in rem.iter_mut().enumerate() {
        let v = n as i128 * n as i128 + d as i128;
        if v >= 1 {
            *r = u64::try_from(v).map_err(|_| Error::invalid("values exceed 64 bits"))?;
            max = max.max(*r);
        } else {
            skipped += 1;
        }
    }
    let limit = crate::arith::integer_sqrt_u128(max as u128).0 as u64;
    for p in primes_up_to(limit) {
        let target = (-(d as i128)).rem_euclid(p as i128) as u64;
        let mut roots = sqrt_mod_prime(target, p);
        roots.dedup();
        for r in roots {
            let mut n = r as usize;
            while n < len {
                let v = &mut rem[n];
                if *v != 0 {
                    while *v % p == 0 {
                        *v /= p;
                        omega[n] += 1;
                    }
                }
                n += p as usize;
            }
        }
    }
    let (mut minus, mut plus) = (0, 0);
    let mut prev = None;
    let mut first_change = None;
    for n in 0..len {
        if rem[n] == 0 {
            continue;
        }
        let total = omega[n] + u32::from(rem[n] > 1);
        let s = Sign::parity(total as u64);
        match s {
            Sign::Minus => minus += 1,
            Sign::Plus => plus += 1,
        }
        if first_change.is_none() && prev.is_some_and(|q| q != s) {
            first_change = Some(n as u64);
        }
        prev = Some(s);
    }
    Ok(SignChangeReport { d, bound, count_minus: minus, count_plus: plus, skipped, first_change_n: first_change })
}
