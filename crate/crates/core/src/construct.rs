//! Construction of the auxiliary integer `M = m_1 ... m_{r-1} e_1 e_2` for a
//! square-free composite `d`, the prime pair `(e_1, e_2)` for a prime
//! `p = 3 (mod 4)`, and independent verification of both kinds of certificate.
//!
//! The primes `p_1, ..., p_r` of `d` are labelled with `p_r = 2` when `d` is even.
//! Every constructed prime must satisfy a table of Legendre-symbol targets
//! `(p_j / slot)`; these are turned into conditions on `slot mod p_j` by
//! [`reciprocal_target`], and the prime is the smallest one in its mod-8 class
//! meeting all of them. The table guarantees that `(M, 0, -d)` (for `t = 1`) or
//! `(d, 0, -M)` (for `t = -1`) lies in the principal genus of discriminant `4dM`;
//! the certificate additionally records that it is the only candidate there and
//! the solution of the corresponding Pell-type equation.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use crate::arith::{crt_merge, is_prime, jacobi_i64, jacobi_u64, primality, two_symbol, ResidueClass, Sign, DEFAULT_PRIME_CAP};
use crate::error::{Error, Result};
use crate::factor::{distinct_primes, factorize, is_squarefree};
use crate::forms::{candidates_from_primes, QuadForm};
use crate::genus::{generic_values, CharacterSystem};
use crate::pell::{fundamental_solution, solve_generalized_with, GeneralizedSolution};

/// A prime being constructed: `M(i)` is `m_i` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    M(usize),
    E1,
    E2,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::M(i) => write!(f, "m{i}"),
            Slot::E1 => f.write_str("e1"),
            Slot::E2 => f.write_str("e2"),
        }
    }
}

/// One table entry: `(top / slot) = target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTarget {
    pub top: u64,
    pub slot: Slot,
    pub target: Sign,
    /// Row `p_r = 2`: forced by the slot's mod-8 class, checked but never imposed.
    pub implied: bool,
}

fn validate_labelling(d_primes: &[u64]) -> Result<()> {
    if d_primes.len() < 2 {
        return Err(Error::invalid("need at least two primes"));
    }
    let distinct: BTreeSet<u64> = d_primes.iter().copied().collect();
    if distinct.len() != d_primes.len() {
        return Err(Error::invalid("primes must be distinct"));
    }
    if let Some(pos) = d_primes.iter().position(|&p| p == 2) {
        if pos != d_primes.len() - 1 {
            return Err(Error::invalid("the prime 2 must be labelled last"));
        }
    }
    if let Some(p) = d_primes.iter().find(|&&p| !is_prime(p)) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    Ok(())
}

/// The symbol table for the labelled primes `p_1..p_r`, column by column.
pub fn symbol_targets(d_primes: &[u64], t: Sign, lambda_d: Sign) -> Result<Vec<SymbolTarget>> {
    validate_labelling(d_primes)?;
    let r = d_primes.len();
    if lambda_d != Sign::parity(r as u64) {
        return Err(Error::invalid(format!("lambda(d) = {lambda_d} but d has {r} prime factors")));
    }
    if lambda_d == Sign::Minus && t == Sign::Plus {
        return Err(Error::invalid("t must be -1 when lambda(d) = -1"));
    }
    let s = -t;
    let mut out = Vec::with_capacity((r + 1) * r);
    let entry = |top: u64, slot, target| SymbolTarget { top, slot, target, implied: top == 2 };
    for i in 1..r {
        for (j, &p) in d_primes.iter().enumerate() {
            let target = if j == 0 || j == i { Sign::Minus } else { Sign::Plus };
            out.push(entry(p, Slot::M(i), target));
        }
    }
    for (j, &p) in d_primes.iter().enumerate() {
        let target = if j == r - 1 { Sign::Plus } else { lambda_d * s };
        out.push(entry(p, Slot::E1, target));
    }
    for (j, &p) in d_primes.iter().enumerate() {
        let target = if j == r - 1 {
            Sign::Minus
        } else if j == 0 {
            t
        } else {
            lambda_d * t
        };
        out.push(entry(p, Slot::E2, target));
    }
    Ok(out)
}

/// Given `(top / bottom) = value` for distinct odd primes, the value of
/// `(bottom / top)`; only the residue of `bottom` mod 4 is needed.
pub fn reciprocal_target(top: u64, bottom_mod4: u64, value: Sign) -> Sign {
    if top % 4 == 3 && bottom_mod4 % 4 == 3 {
        -value
    } else {
        value
    }
}

/// `(slot / q) = eps`, a condition on the residue of the slot prime mod q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolCondition {
    pub q: u64,
    pub eps: Sign,
}

impl SymbolCondition {
    /// The (q - 1)/2 admissible residues mod q.
    pub fn allowed_residues(&self) -> Vec<u64> {
        (1..self.q).filter(|&x| jacobi_u64(x, self.q) == self.eps.to_i8()).collect()
    }

    pub fn admits(&self, p: u64) -> bool {
        jacobi_u64(p % self.q, self.q) == self.eps.to_i8()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueConstraints {
    pub slot: Slot,
    pub base: ResidueClass,
    pub conditions: Vec<SymbolCondition>,
}

impl ResidueConstraints {
    pub fn admits(&self, p: u64) -> bool {
        self.base.contains(p as u128) && self.conditions.iter().all(|c| c.admits(p))
    }

    /// One CRT class: the base class merged with the smallest admissible
    /// residue for every condition.
    pub fn collapse(&self) -> Result<ResidueClass> {
        let mut classes = vec![self.base];
        for c in &self.conditions {
            let r = *c
                .allowed_residues()
                .first()
                .ok_or_else(|| Error::Infeasible { residue: 0, modulus: c.q as u128 })?;
            classes.push(ResidueClass::new(r as u128, c.q as u128)?);
        }
        crt_merge(&classes)
    }

    /// Smallest prime in the base class, outside `exclude`, meeting every condition.
    pub fn smallest_prime(&self, exclude: &BTreeSet<u64>, cap: u64) -> Result<u64> {
        let step = self.base.modulus as u64;
        let mut p = self.base.first_positive() as u64;
        while p <= cap {
            if !exclude.contains(&p) && self.admits(p) && is_prime(p) {
                return Ok(p);
            }
            p += step;
        }
        Err(Error::SearchExhausted { cap })
    }
}

/// What is known when a slot is constructed.
#[derive(Clone, Debug, Default)]
pub struct ConstructionContext {
    pub r: usize,
    pub t: Option<Sign>,
    pub m_primes: Vec<u64>,
    pub e1: Option<u64>,
}

fn slot_class(slot: Slot, ctx: &ConstructionContext) -> Result<u64> {
    Ok(match slot {
        Slot::M(i) if i + 1 == ctx.r => 5,
        Slot::M(_) => 1,
        Slot::E1 => 7,
        Slot::E2 => match ctx.t {
            Some(Sign::Plus) => 3,
            Some(Sign::Minus) => 5,
            None => return Err(Error::invalid("e2 needs t")),
        },
    })
}

pub fn residue_constraints(slot: Slot, targets: &[SymbolTarget], ctx: &ConstructionContext) -> Result<ResidueConstraints> {
    let class8 = slot_class(slot, ctx)?;
    let mut conditions = Vec::new();
    for tg in targets.iter().filter(|tg| tg.slot == slot && !tg.implied) {
        conditions.push(SymbolCondition { q: tg.top, eps: reciprocal_target(tg.top, class8 % 4, tg.target) });
    }
    let earlier_m = match slot {
        Slot::M(i) => &ctx.m_primes[..(i - 1).min(ctx.m_primes.len())],
        _ => &ctx.m_primes[..],
    };
    for &m in earlier_m {
        conditions.push(SymbolCondition { q: m, eps: reciprocal_target(m, class8 % 4, Sign::Plus) });
    }
    if slot == Slot::E2 {
        let e1 = ctx.e1.ok_or_else(|| Error::invalid("e2 needs e1"))?;
        conditions.push(SymbolCondition { q: e1, eps: Sign::Minus });
    }
    if conditions.iter().any(|c| c.q == 2 || c.q % 2 == 0) {
        return Err(Error::invalid("condition modulus must be an odd prime"));
    }
    Ok(ResidueConstraints { slot, base: ResidueClass::new(class8 as u128, 8)?, conditions })
}

/// A labelling that produced primes meeting every table entry, but for which the
/// predicted form was not the only principal-genus candidate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedOrdering {
    pub d_primes: Vec<u64>,
    pub m_primes: Vec<u64>,
    pub e1: u64,
    pub e2: u64,
    pub principal_forms: Vec<QuadForm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct MCertificate {
    #[serde(with = "crate::decimal")]
    pub d: u64,
    pub d_primes: Vec<u64>,
    pub t: Sign,
    pub s: Sign,
    pub lambda_d: Sign,
    pub lambda_m: Sign,
    pub m_primes: Vec<u64>,
    pub e1: u64,
    pub e2: u64,
    #[serde(with = "crate::decimal")]
    pub M: BigUint,
    #[serde(with = "crate::decimal")]
    pub D: BigUint,
    pub predicted_form: QuadForm,
    pub pell_evidence: GeneralizedSolution,
    #[serde(default)]
    pub rejected_orderings: Vec<RejectedOrdering>,
}

impl MCertificate {
    pub fn constructed_primes(&self) -> Vec<u64> {
        let mut v = self.m_primes.clone();
        v.push(self.e1);
        v.push(self.e2);
        v
    }
}

fn predicted_form(d: &BigInt, m: &BigInt, t: Sign) -> Result<QuadForm> {
    match t {
        Sign::Plus => QuadForm::new(m.clone(), 0, -d),
        Sign::Minus => QuadForm::new(d.clone(), 0, -m),
    }
}

/// Candidates of discriminant 4D (D the product of `primes`) in the principal
/// genus, and how many were scanned.
pub fn principal_genus_candidates(primes: &[BigUint]) -> Result<(usize, Vec<QuadForm>)> {
    let sys = CharacterSystem::from_primes(primes)?;
    let cands = candidates_from_primes(primes)?;
    let mut hits = Vec::new();
    for f in cands.all() {
        if generic_values(f, &sys)?.is_principal() {
            hits.push(f.clone());
        }
    }
    Ok((cands.len(), hits))
}

/// The odd primes of d in the order used for p_1, p_2, ..., followed by 2 if d is even.
fn label(odd: &[u64], even: bool) -> Vec<u64> {
    let mut v = odd.to_vec();
    if even {
        v.push(2);
    }
    v
}

fn next_permutation(v: &mut [u64]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else { return false };
    let j = v.iter().rposition(|&x| x > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Constructed primes for one labelling, in construction order m_1.., e1, e2.
pub fn construct_primes(d_primes: &[u64], t: Sign, cap: u64) -> Result<(Vec<u64>, u64, u64)> {
    let r = d_primes.len();
    let lambda_d = Sign::parity(r as u64);
    let targets = symbol_targets(d_primes, t, lambda_d)?;
    let mut ctx = ConstructionContext { r, t: Some(t), ..Default::default() };
    let mut exclude: BTreeSet<u64> = d_primes.iter().copied().collect();
    exclude.insert(2);
    for i in 1..r {
        let p = residue_constraints(Slot::M(i), &targets, &ctx)?.smallest_prime(&exclude, cap)?;
        exclude.insert(p);
        ctx.m_primes.push(p);
    }
    let e1 = residue_constraints(Slot::E1, &targets, &ctx)?.smallest_prime(&exclude, cap)?;
    exclude.insert(e1);
    ctx.e1 = Some(e1);
    let e2 = residue_constraints(Slot::E2, &targets, &ctx)?.smallest_prime(&exclude, cap)?;
    Ok((ctx.m_primes, e1, e2))
}

enum Attempt {
    Certified(Box<MCertificate>),
    Rejected(RejectedOrdering),
}

fn attempt(d: u64, d_primes: &[u64], t: Sign, cap: u64) -> Result<Attempt> {
    let (m_primes, e1, e2) = construct_primes(d_primes, t, cap)?;
    let mut all: Vec<u64> = d_primes.to_vec();
    all.extend(&m_primes);
    all.extend([e1, e2]);
    let big_primes: Vec<BigUint> = all.iter().map(|&p| BigUint::from(p)).collect();
    let m: BigUint = m_primes.iter().chain([&e1, &e2]).map(|&p| BigUint::from(p)).product();
    let dd = BigUint::from(d) * &m;
    let form = predicted_form(&BigInt::from(d), &BigInt::from(m.clone()), t)?;
    let (_, principal) = principal_genus_candidates(&big_primes)?;
    if principal != [form.clone()] {
        return Ok(Attempt::Rejected(RejectedOrdering {
            d_primes: d_primes.to_vec(),
            m_primes,
            e1,
            e2,
            principal_forms: principal,
        }));
    }
    let fund = fundamental_solution(&dd)?;
    let (a, b) = (form.a.clone(), -&form.c);
    let evidence = solve_generalized_with(&a, &b, 1, &fund)?.ok_or_else(|| {
        Error::Internal(format!("{form} is the only principal-genus candidate but {a}x^2 - {b}y^2 = 1 has no solution"))
    })?;
    let r = d_primes.len();
    Ok(Attempt::Certified(Box::new(MCertificate {
        d,
        d_primes: d_primes.to_vec(),
        t,
        s: -t,
        lambda_d: Sign::parity(r as u64),
        lambda_m: Sign::parity(r as u64 + 1),
        m_primes,
        e1,
        e2,
        M: m,
        D: dd,
        predicted_form: form,
        pell_evidence: evidence,
        rejected_orderings: Vec::new(),
    })))
}

fn check_composite_squarefree(d: u64) -> Result<Vec<u64>> {
    if d < 2 || !is_squarefree(d) {
        return Err(Error::invalid(format!("d = {d} must be square-free and greater than 1")));
    }
    let primes = distinct_primes(d);
    if primes.len() < 2 {
        return Err(Error::invalid(format!("d = {d} is prime; use the prime-pair construction")));
    }
    Ok(primes)
}

/// Builds a certificate for (d, t). Labellings of the odd primes are tried in
/// lexicographic order; the first whose predicted form is the unique
/// principal-genus candidate is returned, with the rejected ones recorded.
pub fn construct_m(d: u64, t: Sign, cap: u64) -> Result<MCertificate> {
    let primes = check_composite_squarefree(d)?;
    let lambda_d = Sign::parity(primes.len() as u64);
    if lambda_d == Sign::Minus && t == Sign::Plus {
        return Err(Error::invalid(format!("lambda({d}) = -1 requires t = -1")));
    }
    let even = d % 2 == 0;
    let mut odd: Vec<u64> = primes.into_iter().filter(|&p| p != 2).collect();
    odd.sort_unstable();
    let mut rejected = Vec::new();
    loop {
        match attempt(d, &label(&odd, even), t, cap)? {
            Attempt::Certified(mut cert) => {
                cert.rejected_orderings = rejected;
                return Ok(*cert);
            }
            Attempt::Rejected(r) => rejected.push(r),
        }
        if !next_permutation(&mut odd) {
            break;
        }
    }
    let first = &rejected[0];
    let forms: Vec<String> = first.principal_forms.iter().map(|f| f.to_string()).collect();
    Err(Error::ConclusionFails {
        d,
        t: t.to_i8(),
        attempts: rejected.len(),
        detail: format!(
            "labelling {:?} gives M = {} * {} * {} with principal-genus candidates [{}]",
            first.d_primes,
            first.m_primes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" * "),
            first.e1,
            first.e2,
            forms.join(", ")
        ),
    })
}

// ---------------------------------------------------------------------------
// Prime pairs

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePairCertificate {
    pub p: u64,
    pub e1: u64,
    pub e2: u64,
    #[serde(with = "crate::decimal")]
    pub m: BigUint,
    /// Solves p k^2 - e1 e2 y^2 = 1.
    pub evidence: GeneralizedSolution,
}

pub fn construct_prime_pair(p: u64, cap: u64) -> Result<PrimePairCertificate> {
    if !is_prime(p) || p % 4 != 3 {
        return Err(Error::invalid(format!("{p} is not a prime congruent to 3 mod 4")));
    }
    let exclude: BTreeSet<u64> = [2, p].into();
    // (p/e1) = 1 with both = 3 (mod 4) means (e1/p) = -1
    let c1 = ResidueConstraints {
        slot: Slot::E1,
        base: ResidueClass::new(3, 4)?,
        conditions: vec![SymbolCondition { q: p, eps: reciprocal_target(p, 3, Sign::Plus) }],
    };
    let e1 = c1.smallest_prime(&exclude, cap)?;
    let c2 = ResidueConstraints {
        slot: Slot::E2,
        base: ResidueClass::new(1, 4)?,
        conditions: vec![SymbolCondition { q: p, eps: Sign::Plus }, SymbolCondition { q: e1, eps: Sign::Minus }],
    };
    let mut exclude = exclude;
    exclude.insert(e1);
    let e2 = c2.smallest_prime(&exclude, cap)?;
    let m = BigUint::from(e1) * BigUint::from(e2);
    let dd = BigUint::from(p) * &m;
    let fund = fundamental_solution(&dd)?;
    let evidence = solve_generalized_with(&BigInt::from(p), &BigInt::from(m.clone()), 1, &fund)?
        .ok_or_else(|| Error::Internal(format!("{p}k^2 - {m}y^2 = 1 has no solution")))?;
    Ok(PrimePairCertificate { p, e1, e2, m, evidence })
}

// ---------------------------------------------------------------------------
// Verification

pub const CLAUSES: [&str; 9] = [
    "consistency",
    "constructed_primes",
    "symbol_table",
    "derived_symbols",
    "liouville_sign",
    "unit_norm",
    "principal_genus_uniqueness",
    "pell_evidence",
    "rejected_orderings",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub clauses: Vec<ClauseResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.clauses.iter().filter(|c| !c.passed).map(|c| c.clause.as_str()).collect()
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

/// Outcome of one clause: Ok(detail) on success, Err(reason) on failure.
type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(name: &str, f: impl FnOnce() -> Check) -> ClauseResult {
    match f() {
        Ok(detail) => ClauseResult { clause: name.into(), passed: true, detail },
        Err(detail) => ClauseResult { clause: name.into(), passed: false, detail },
    }
}

fn sym(top: i64, bottom: u64) -> std::result::Result<i8, String> {
    if bottom % 2 == 0 || bottom == 0 {
        return Err(format!("symbol with even bottom {bottom}"));
    }
    Ok(jacobi_i64(top, bottom))
}

fn product(primes: &[u64]) -> BigUint {
    primes.iter().map(|&p| BigUint::from(p)).product()
}

fn check_consistency(c: &MCertificate) -> Check {
    let d = c.d;
    ensure(d >= 2 && is_squarefree(d), || format!("d = {d} is not square-free"))?;
    let mut primes = distinct_primes(d);
    ensure(primes.len() >= 2, || format!("d = {d} is prime"))?;
    let mut labelled = c.d_primes.clone();
    labelled.sort_unstable();
    primes.sort_unstable();
    ensure(labelled == primes, || format!("labelled primes {:?} are not the primes of {d}", c.d_primes))?;
    validate_labelling(&c.d_primes).map_err(|e| e.to_string())?;
    let r = primes.len();
    let lambda = factorize(&BigInt::from(d)).map_err(|e| e.to_string())?.liouville();
    ensure(c.lambda_d == lambda, || format!("lambda_d = {} but lambda({d}) = {lambda}", c.lambda_d))?;
    ensure(c.s == -c.t, || format!("s = {} is not -t", c.s))?;
    ensure(!(lambda == Sign::Minus && c.t == Sign::Plus), || "t = +1 with lambda(d) = -1".into())?;
    ensure(c.m_primes.len() == r - 1, || format!("{} m-primes for r = {r}", c.m_primes.len()))?;
    let m = product(&c.constructed_primes());
    ensure(c.M == m, || format!("M = {} but the constructed primes multiply to {m}", c.M))?;
    ensure(c.D == BigUint::from(d) * &m, || format!("D = {} is not d * M", c.D))?;
    let expected = predicted_form(&BigInt::from(d), &BigInt::from(m), c.t).map_err(|e| e.to_string())?;
    ensure(c.predicted_form == expected, || format!("predicted form {} should be {expected}", c.predicted_form))?;
    Ok(format!("d = {d}, r = {r}, M = {}", c.M))
}

/// Replays every labelling that precedes the certified one and compares it with
/// the recorded rejection.
fn check_rejected(c: &MCertificate) -> Check {
    let even = c.d % 2 == 0;
    let mut odd: Vec<u64> = c.d_primes.iter().copied().filter(|&p| p != 2).collect();
    odd.sort_unstable();
    let mut replayed = Vec::new();
    loop {
        let labelled = label(&odd, even);
        if labelled == c.d_primes {
            break;
        }
        match attempt(c.d, &labelled, c.t, DEFAULT_PRIME_CAP).map_err(|e| e.to_string())? {
            Attempt::Rejected(r) => replayed.push(r),
            Attempt::Certified(_) => return Err(format!("labelling {labelled:?} precedes {:?} and certifies", c.d_primes)),
        }
        ensure(next_permutation(&mut odd), || format!("{:?} is not a labelling of {}", c.d_primes, c.d))?;
    }
    ensure(replayed.len() == c.rejected_orderings.len(), || {
        format!("{} earlier labellings but {} recorded", replayed.len(), c.rejected_orderings.len())
    })?;
    for (want, got) in replayed.iter().zip(&c.rejected_orderings) {
        ensure(want == got, || format!("recorded rejection for {:?} does not replay", got.d_primes))?;
    }
    Ok(format!("{} earlier labellings replayed", replayed.len()))
}

fn check_constructed_primes(c: &MCertificate) -> Check {
    let r = c.d_primes.len();
    let all = c.constructed_primes();
    let distinct: BTreeSet<u64> = all.iter().copied().collect();
    ensure(distinct.len() == all.len(), || format!("constructed primes {all:?} are not distinct"))?;
    for &p in &all {
        ensure(primality(&BigUint::from(p)).is_prime(), || format!("{p} is not prime"))?;
        ensure(p % 2 == 1 && c.d % p != 0, || format!("{p} divides 2d"))?;
    }
    for (i, &m) in c.m_primes.iter().enumerate() {
        let want = if i + 2 == r { 5 } else { 1 };
        ensure(m % 8 == want, || format!("m{} = {m} is not {want} mod 8", i + 1))?;
    }
    ensure(c.e1 % 8 == 7, || format!("e1 = {} is not 7 mod 8", c.e1))?;
    let want = if c.t == Sign::Plus { 3 } else { 5 };
    ensure(c.e2 % 8 == want, || format!("e2 = {} is not 3t = {want} mod 8", c.e2))?;
    Ok(format!("{} primes, distinct, odd, coprime to d, in their mod-8 classes", all.len()))
}

fn slot_value(c: &MCertificate, slot: Slot) -> Option<u64> {
    match slot {
        Slot::M(i) => c.m_primes.get(i - 1).copied(),
        Slot::E1 => Some(c.e1),
        Slot::E2 => Some(c.e2),
    }
}

fn check_symbol_table(c: &MCertificate) -> Check {
    let targets = symbol_targets(&c.d_primes, c.t, c.lambda_d).map_err(|e| e.to_string())?;
    let mut implied = 0;
    for tg in &targets {
        let bottom = slot_value(c, tg.slot).ok_or_else(|| format!("missing prime for {}", tg.slot))?;
        let value = if tg.implied { two_symbol(bottom) } else { sym(tg.top as i64, bottom)? };
        implied += usize::from(tg.implied);
        ensure(value == tg.target.to_i8(), || {
            format!("({}/{} = {bottom}) = {value}, table requires {}", tg.top, tg.slot, tg.target)
        })?;
    }
    for (i, &m) in c.m_primes.iter().enumerate() {
        for (slot, &other) in [(Slot::E1, &c.e1), (Slot::E2, &c.e2)] {
            ensure(sym(m as i64, other)? == 1, || format!("(m{}/{slot}) != 1", i + 1))?;
        }
        for (j, &mj) in c.m_primes.iter().enumerate() {
            if i != j {
                ensure(sym(m as i64, mj)? == 1, || format!("(m{}/m{}) != 1", i + 1, j + 1))?;
            }
        }
    }
    ensure(sym(c.e1 as i64, c.e2)? == c.t.to_i8(), || format!("(e1/e2) != t = {}", c.t))?;
    ensure(sym(c.e2 as i64, c.e1)? == -1, || "(e2/e1) != -1".into())?;
    Ok(format!("{} table entries ({implied} implied by mod-8 classes) and hypothesis symbols hold", targets.len()))
}

fn check_derived_symbols(c: &MCertificate) -> Check {
    let d = c.d as i64;
    for (i, &m) in c.m_primes.iter().enumerate() {
        ensure(sym(d, m)? == 1, || format!("(d/m{}) != 1", i + 1))?;
    }
    for (name, e) in [("e1", c.e1), ("e2", c.e2)] {
        ensure(sym(d, e)? == c.s.to_i8(), || format!("(d/{name}) != s = {}", c.s))?;
    }
    let m = product(&c.constructed_primes());
    let mb = BigInt::from(m);
    for &p in &c.d_primes {
        let v = crate::arith::jacobi(&BigInt::from(p), &mb).map_err(|e| e.to_string())?;
        ensure(v == 1, || format!("({p}/M) = {v}"))?;
    }
    Ok("(d/m_i) = 1, (d/e_i) = s, (p_i/M) = 1".into())
}

fn check_liouville(c: &MCertificate) -> Check {
    let m = product(&c.constructed_primes());
    let lam = factorize(&BigInt::from(m)).map_err(|e| e.to_string())?.liouville();
    let lam_d = factorize(&BigInt::from(c.d)).map_err(|e| e.to_string())?.liouville();
    ensure(c.lambda_m == lam, || format!("lambda_m = {} but lambda(M) = {lam}", c.lambda_m))?;
    ensure(lam == -lam_d, || format!("lambda(M) = {lam}, lambda(d) = {lam_d}"))?;
    Ok(format!("lambda(M) = {lam} = -lambda(d)"))
}

fn recomputed_d(c: &MCertificate) -> BigUint {
    BigUint::from(c.d) * product(&c.constructed_primes())
}

fn check_unit_norm(c: &MCertificate) -> Check {
    let dd = recomputed_d(c);
    let fund = fundamental_solution(&dd).map_err(|e| e.to_string())?;
    ensure(fund.unit_norm == Sign::Plus, || format!("fundamental unit of {dd} has norm -1"))?;
    Ok(format!("unit norm +1 (period {})", fund.period_len))
}

fn check_uniqueness(c: &MCertificate) -> Check {
    let dd = recomputed_d(c);
    let fact = factorize(&BigInt::from(dd.clone())).map_err(|e| e.to_string())?;
    ensure(fact.is_squarefree(), || format!("D = {dd} is not square-free"))?;
    let primes: Vec<BigUint> = fact.primes().cloned().collect();
    let (scanned, hits) = principal_genus_candidates(&primes).map_err(|e| e.to_string())?;
    let names: Vec<String> = hits.iter().map(|f| f.to_string()).collect();
    ensure(hits == [c.predicted_form.clone()], || {
        format!("{scanned} candidates scanned; principal genus holds [{}], predicted {}", names.join(", "), c.predicted_form)
    })?;
    Ok(format!("{scanned} candidates scanned; only {} is in the principal genus", c.predicted_form))
}

fn check_pell(c: &MCertificate) -> Check {
    let ev = &c.pell_evidence;
    let (a, b) = (c.predicted_form.a.clone(), -&c.predicted_form.c);
    ensure(ev.eps == 1 && ev.a == a && ev.b == b, || {
        format!("evidence is for {}x^2 - {}y^2 = {}, expected {a}x^2 - {b}y^2 = 1", ev.a, ev.b, ev.eps)
    })?;
    ensure(ev.holds(), || format!("{}*{}^2 - {}*{}^2 != 1", ev.a, ev.x, ev.b, ev.y))?;
    let m = BigInt::from(product(&c.constructed_primes()));
    let d = BigInt::from(c.d);
    let expected = if c.t == Sign::Plus { (m, d) } else { (d, m) };
    ensure((a, b) == expected, || "evidence does not match the factorization d * M".into())?;
    Ok(format!("x has {} digits", ev.x.to_string().len()))
}

/// Re-derives every claim of a certificate from its raw integers.
pub fn verify_certificate(c: &MCertificate) -> VerificationReport {
    let clauses = vec![
        run("consistency", || check_consistency(c)),
        run("constructed_primes", || check_constructed_primes(c)),
        run("symbol_table", || check_symbol_table(c)),
        run("derived_symbols", || check_derived_symbols(c)),
        run("liouville_sign", || check_liouville(c)),
        run("unit_norm", || check_unit_norm(c)),
        run("principal_genus_uniqueness", || check_uniqueness(c)),
        run("pell_evidence", || check_pell(c)),
        run("rejected_orderings", || check_rejected(c)),
    ];
    VerificationReport { clauses }
}

pub fn verify_prime_pair(c: &PrimePairCertificate) -> VerificationReport {
    let consistency = || -> Check {
        ensure(is_prime(c.p) && c.p % 4 == 3, || format!("p = {} is not a prime = 3 mod 4", c.p))?;
        ensure(is_prime(c.e1) && c.e1 % 4 == 3, || format!("e1 = {} is not a prime = 3 mod 4", c.e1))?;
        ensure(is_prime(c.e2) && c.e2 % 4 == 1, || format!("e2 = {} is not a prime = 1 mod 4", c.e2))?;
        ensure(c.p != c.e1 && c.p != c.e2, || "constructed prime equals p".into())?;
        ensure(c.m == BigUint::from(c.e1) * BigUint::from(c.e2), || format!("m = {} is not e1 * e2", c.m))?;
        Ok(format!("p = {}, m = {}", c.p, c.m))
    };
    let symbols = || -> Check {
        ensure(sym(c.p as i64, c.e1)? == 1, || "(p/e1) != 1".into())?;
        ensure(sym(c.p as i64, c.e2)? == 1, || "(p/e2) != 1".into())?;
        ensure(sym(c.e1 as i64, c.e2)? == -1, || "(e1/e2) != -1".into())?;
        Ok("(p/e1) = (p/e2) = 1, (e1/e2) = -1".into())
    };
    let uniqueness = || -> Check {
        let mut primes = vec![BigUint::from(c.p), BigUint::from(c.e1), BigUint::from(c.e2)];
        primes.sort();
        primes.dedup();
        ensure(primes.len() == 3, || "primes not distinct".into())?;
        let (scanned, hits) = principal_genus_candidates(&primes).map_err(|e| e.to_string())?;
        let want = QuadForm::new(c.p, 0, -BigInt::from(c.m.clone())).map_err(|e| e.to_string())?;
        ensure(hits == [want.clone()], || {
            let names: Vec<String> = hits.iter().map(|f| f.to_string()).collect();
            format!("principal genus holds [{}]", names.join(", "))
        })?;
        Ok(format!("{scanned} candidates scanned; only {want} is in the principal genus"))
    };
    let pell = || -> Check {
        let ev = &c.evidence;
        let want = (BigInt::from(c.p), BigInt::from(c.m.clone()), 1i8);
        ensure((ev.a.clone(), ev.b.clone(), ev.eps) == want, || "evidence is for the wrong equation".into())?;
        ensure(ev.holds(), || "evidence fails its equation".into())?;
        Ok("p k^2 - m y^2 = 1 holds".into())
    };
    VerificationReport {
        clauses: vec![
            run("consistency", consistency),
            run("symbol_table", symbols),
            run("principal_genus_uniqueness", uniqueness),
            run("pell_evidence", pell),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;


    use Sign::{Minus, Plus};

    fn targets_for(primes: &[u64], t: Sign) -> Vec<(u64, Slot, i8, bool)> {
        let lam = Sign::parity(primes.len() as u64);
        symbol_targets(primes, t, lam)
            .unwrap()
            .into_iter()
            .map(|x| (x.top, x.slot, x.target.to_i8(), x.implied))
            .collect()
    }

    #[test]
    fn table_for_six() {
        let t = targets_for(&[3, 2], Plus);
        assert_eq!(
            t,
            vec![
                (3, Slot::M(1), -1, false),
                (2, Slot::M(1), -1, true),
                (3, Slot::E1, -1, false),
                (2, Slot::E1, 1, true),
                (3, Slot::E2, 1, false),
                (2, Slot::E2, -1, true),
            ]
        );
    }

    #[test]
    fn table_for_fifteen() {
        let t = targets_for(&[3, 5], Plus);
        let vals: Vec<i8> = t.iter().map(|x| x.2).collect();
        assert_eq!(vals, vec![-1, -1, -1, 1, 1, -1]);
        assert!(t.iter().all(|x| !x.3));
    }

    #[test]
    fn table_row_two_of_three() {
        let t = targets_for(&[3, 5, 7], Minus);
        let row2: Vec<_> = t.iter().filter(|x| x.0 == 5 && matches!(x.1, Slot::M(_))).collect();
        assert_eq!(row2[0].2, -1); // m1
        assert_eq!(row2[1].2, 1); // m2
    }

    #[test]
    fn table_rejects_bad_inputs() {
        assert!(symbol_targets(&[3, 5], Plus, Minus).is_err());
        assert!(symbol_targets(&[3, 5, 7], Plus, Minus).is_err());
        assert!(symbol_targets(&[2, 3], Plus, Plus).is_err());
        assert!(symbol_targets(&[3], Plus, Minus).is_err());
        assert!(symbol_targets(&[3, 9], Plus, Plus).is_err());
    }

    #[test]
    fn reciprocity_conversion_matches_direct_evaluation() {
        let primes: Vec<u64> = (3..400).filter(|&p| is_prime(p)).collect();
        for &top in &primes {
            for &bottom in &primes {
                if top == bottom {
                    continue;
                }
                let forward = Sign::from_i8(jacobi_u64(top, bottom)).unwrap();
                let back = Sign::from_i8(jacobi_u64(bottom, top)).unwrap();
                assert_eq!(reciprocal_target(top, bottom % 4, forward), back, "{top} {bottom}");
            }
        }
    }

    #[test]
    fn residue_constraint_examples() {
        let targets = symbol_targets(&[3, 2], Plus, Plus).unwrap();
        let mut ctx = ConstructionContext { r: 2, t: Some(Plus), ..Default::default() };
        let c = residue_constraints(Slot::M(1), &targets, &ctx).unwrap();
        assert_eq!(c.collapse().unwrap(), ResidueClass::new(5, 24).unwrap());
        ctx.m_primes.push(5);
        let c = residue_constraints(Slot::E1, &targets, &ctx).unwrap();
        assert_eq!(c.collapse().unwrap(), ResidueClass::new(31, 120).unwrap());
        assert_eq!(c.conditions[1].allowed_residues(), vec![1, 4]);
        ctx.e1 = Some(31);
        let c = residue_constraints(Slot::E2, &targets, &ctx).unwrap();
        assert_eq!(c.base, ResidueClass::new(3, 8).unwrap());
        assert_eq!(c.conditions[0], SymbolCondition { q: 3, eps: Minus });
        assert_eq!(c.conditions[1], SymbolCondition { q: 5, eps: Plus });
        assert_eq!(c.conditions[2], SymbolCondition { q: 31, eps: Minus });
        assert_eq!(c.smallest_prime(&[2, 3, 5, 31].into(), 1000).unwrap(), 11);
    }

    #[test]
    fn six_regression() {
        let c = construct_m(6, Plus, DEFAULT_PRIME_CAP).unwrap();
        assert_eq!((c.m_primes.clone(), c.e1, c.e2), (vec![5], 31, 11));
        assert_eq!(c.M, BigUint::from(1705u32));
        assert_eq!(c.predicted_form, QuadForm::new(1705, 0, -6).unwrap());
        assert_eq!(c.lambda_m, Minus);
        assert_eq!(jacobi_u64(31, 11), 1);
        assert_eq!(jacobi_u64(11, 31), -1);
        let report = verify_certificate(&c);
        assert!(report.passed(), "{report:?}");
        let uniq = report.clause("principal_genus_uniqueness").unwrap();
        assert!(uniq.detail.starts_with("31 candidates"), "{}", uniq.detail);
    }

    #[test]
    fn construct_is_deterministic() {
        let a = serde_json::to_string(&construct_m(10, Plus, DEFAULT_PRIME_CAP).unwrap()).unwrap();
        let b = serde_json::to_string(&construct_m(10, Plus, DEFAULT_PRIME_CAP).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn construct_rejects_bad_inputs() {
        assert!(matches!(construct_m(30, Plus, DEFAULT_PRIME_CAP), Err(Error::InvalidArgument(_))));
        assert!(construct_m(7, Plus, DEFAULT_PRIME_CAP).is_err());
        assert!(construct_m(12, Plus, DEFAULT_PRIME_CAP).is_err());
        assert!(matches!(construct_m(6, Plus, 4), Err(Error::SearchExhausted { .. })));
    }

    #[test]
    fn reordering_rescues_fifteen() {
        let c = construct_m(15, Plus, DEFAULT_PRIME_CAP).unwrap();
        assert_eq!(c.rejected_orderings.len(), 1);
        assert_eq!(c.d_primes, vec![5, 3]);
        assert!(verify_certificate(&c).passed());
    }

    #[test]
    fn tampering_is_caught() {
        let c = construct_m(6, Plus, DEFAULT_PRIME_CAP).unwrap();
        let mut bad = c.clone();
        bad.e2 = 13;
        assert!(verify_certificate(&bad).failures().contains(&"constructed_primes"));
        let mut bad = c.clone();
        bad.lambda_m = Plus;
        assert_eq!(verify_certificate(&bad).failures(), vec!["liouville_sign"]);
        let mut bad = c.clone();
        bad.pell_evidence.x += 1;
        assert_eq!(verify_certificate(&bad).failures(), vec!["pell_evidence"]);
    }

    #[test]
    fn prime_pair_examples() {
        let c = construct_prime_pair(3, DEFAULT_PRIME_CAP).unwrap();
        assert_eq!((c.e1, c.e2, c.m.clone()), (11, 13, BigUint::from(143u32)));
        assert!(verify_prime_pair(&c).passed());
        let c = construct_prime_pair(7, DEFAULT_PRIME_CAP).unwrap();
        assert_eq!((c.e1, c.e2), (3, 29));
        assert!(verify_prime_pair(&c).passed());
        assert!(construct_prime_pair(5, DEFAULT_PRIME_CAP).is_err());
        assert!(construct_prime_pair(15, DEFAULT_PRIME_CAP).is_err());
    }

    #[test]
    fn permutations_are_lexicographic() {
        let mut v = vec![3, 5, 7];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![3, 7, 5]);
        assert_eq!(seen[5], vec![7, 5, 3]);
    }
}
