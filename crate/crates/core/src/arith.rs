//! Exact integer arithmetic: quadratic symbols and characters, residue classes,
//! primality, prime search in residue classes, and integer square roots.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Mul, Neg};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign as BigSign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in {-1, +1}: Liouville values, character values, the flags `t` and `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn from_i8(v: i8) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn to_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// (-1)^k
    pub fn parity(k: u64) -> Sign {
        if k % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn is_plus(self) -> bool {
        self == Sign::Plus
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => f.write_str("+1"),
            Sign::Minus => f.write_str("-1"),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.to_i8())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Sign::from_i8(v).ok_or_else(|| serde::de::Error::custom(format!("expected 1 or -1, got {v}")))
    }
}

// ---------------------------------------------------------------------------
// Quadratic symbols

/// Jacobi symbol (a/n) for odd n >= 1; `jacobi(a, 1) == 1`.
pub fn jacobi(a: &BigInt, n: &BigInt) -> Result<i8> {
    if n.sign() != BigSign::Plus || n.is_even() {
        return Err(Error::invalid(format!("Jacobi modulus must be odd and positive, got {n}")));
    }
    if let Some(small) = n.to_u64() {
        let r = a.mod_floor(&BigInt::from(small)).to_u64().expect("reduced below modulus");
        return Ok(jacobi_u64(r, small));
    }
    let n = n.magnitude().clone();
    let a = a.mod_floor(&BigInt::from(n.clone())).magnitude().clone();
    Ok(jacobi_biguint(a, n))
}

/// Jacobi symbol for an odd positive u64 modulus. Panics in debug builds on even `n`.
pub fn jacobi_u64(a: u64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1, "even Jacobi modulus {n}");
    let mut a = a % n;
    let mut n = n;
    let mut result = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Jacobi symbol with a signed numerator.
pub fn jacobi_i64(a: i64, n: u64) -> i8 {
    let r = (a as i128).rem_euclid(n as i128) as u64;
    jacobi_u64(r, n)
}

fn jacobi_biguint(mut a: BigUint, mut n: BigUint) -> i8 {
    let mut result = 1i8;
    a %= &n;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        a >>= tz;
        let n8 = (&n % 8u32).to_u32().unwrap();
        if tz % 2 == 1 && (n8 == 3 || n8 == 5) {
            result = -result;
        }
        let a4 = (&a % 4u32).to_u32().unwrap();
        if a4 == 3 && n8 % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= &n;
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

fn require_odd(m: &BigInt, what: &str) -> Result<u32> {
    if m.is_even() {
        return Err(Error::invalid(format!("{what} is defined on odd integers, got {m}")));
    }
    Ok(m.mod_floor(&BigInt::from(8)).to_u32().unwrap())
}

/// delta(m) = (-1)^((m-1)/2): -1 iff m = 3 (mod 4).
pub fn delta_char(m: &BigInt) -> Result<Sign> {
    let r = require_odd(m, "delta")?;
    Ok(if r % 4 == 1 { Sign::Plus } else { Sign::Minus })
}

/// eta(m) = (-1)^((m^2-1)/8): +1 iff m = +-1 (mod 8).
pub fn eta_char(m: &BigInt) -> Result<Sign> {
    let r = require_odd(m, "eta")?;
    Ok(if r == 1 || r == 7 { Sign::Plus } else { Sign::Minus })
}

/// (2/p) for an odd prime (or odd positive) p, read off p mod 8.
pub fn two_symbol(p: u64) -> i8 {
    match p % 8 {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

// ---------------------------------------------------------------------------
// Residue classes and CRT

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueClass {
    pub residue: u128,
    pub modulus: u128,
}

impl ResidueClass {
    pub fn new(residue: u128, modulus: u128) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::invalid("residue class modulus must be positive"));
        }
        Ok(ResidueClass { residue: residue % modulus, modulus })
    }

    pub fn contains(&self, x: u128) -> bool {
        x % self.modulus == self.residue
    }

    /// Smallest positive member of the class.
    pub fn first_positive(&self) -> u128 {
        if self.residue == 0 {
            self.modulus
        } else {
            self.residue
        }
    }
}

impl fmt::Display for ResidueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

/// Chinese-remainder merge of classes with pairwise coprime moduli.
pub fn crt_merge(classes: &[ResidueClass]) -> Result<ResidueClass> {
    for (i, x) in classes.iter().enumerate() {
        for y in &classes[i + 1..] {
            if x.modulus.gcd(&y.modulus) != 1 {
                return Err(Error::NonCoprimeModuli { first: x.modulus, second: y.modulus });
            }
        }
    }
    let mut residue = BigInt::zero();
    let mut modulus = BigInt::one();
    for c in classes {
        let m = BigInt::from(c.modulus);
        // residue + modulus * k = c.residue (mod m)
        let inv = mod_inverse(&(&modulus % &m), &m).expect("coprime moduli");
        let k = ((BigInt::from(c.residue) - &residue) * inv).mod_floor(&m);
        residue += &modulus * k;
        modulus *= m;
    }
    let modulus = modulus
        .to_u128()
        .ok_or_else(|| Error::invalid("CRT modulus exceeds 128 bits"))?;
    Ok(ResidueClass { residue: residue.to_u128().unwrap(), modulus })
}

/// Inverse of a modulo m, if gcd(a, m) = 1.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else if m.is_one() {
        Some(BigInt::zero())
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Primality

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primality {
    Composite,
    Prime,
    /// Passed Baillie-PSW above the deterministic Miller-Rabin range.
    ProbablePrime,
}

impl Primality {
    pub fn is_prime(self) -> bool {
        self != Primality::Composite
    }
}

const SMALL_PRIMES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Upper end of the range where Miller-Rabin to the bases 2..41 is a proof.
pub fn deterministic_bound() -> &'static BigUint {
    static BOUND: OnceLock<BigUint> = OnceLock::new();
    BOUND.get_or_init(|| "3317044064679887385961981".parse().unwrap())
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn miller_rabin_u64(n: u64, base: u64) -> bool {
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    let mut x = pow_mod(base, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    SMALL_PRIMES[..12].iter().all(|&b| miller_rabin_u64(n, b))
}

fn miller_rabin_big(n: &BigUint, base: &BigUint) -> bool {
    let one = BigUint::one();
    let n1 = n - &one;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    let mut x = base.modpow(&d, n);
    if x == one || x == n1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == n1 {
            return true;
        }
    }
    false
}

/// Strong Lucas probable-prime test with Selfridge parameters (P = 1).
fn strong_lucas(n: &BigUint) -> bool {
    let (_, exact) = integer_sqrt(n);
    if exact {
        return false;
    }
    let nn = BigInt::from(n.clone());
    let mut dd: i64 = 5;
    loop {
        match jacobi(&BigInt::from(dd), &nn).unwrap() {
            -1 => break,
            0 => {
                if BigInt::from(dd.abs()) != nn {
                    return false;
                }
            }
            _ => {}
        }
        dd = if dd > 0 { -(dd + 2) } else { -dd + 2 };
    }
    let d_big = BigInt::from(dd);
    let q = BigInt::from((1 - dd) / 4);
    let half = |x: BigInt| -> BigInt {
        let x = if x.is_odd() { x + &nn } else { x };
        (x / 2u32).mod_floor(&nn)
    };
    let n1 = n + 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let k = &n1 >> s;
    let (mut u, mut v, mut qk) = (BigInt::one(), BigInt::one(), q.mod_floor(&nn));
    let bits = k.bits();
    for i in (0..bits - 1).rev() {
        u = (&u * &v).mod_floor(&nn);
        v = (&v * &v - &qk - &qk).mod_floor(&nn);
        qk = (&qk * &qk).mod_floor(&nn);
        if k.bit(i) {
            let nu = half(&u + &v);
            let nv = half(&d_big * &u + &v);
            u = nu;
            v = nv;
            qk = (&qk * &q).mod_floor(&nn);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - &qk - &qk).mod_floor(&nn);
        qk = (&qk * &qk).mod_floor(&nn);
        if v.is_zero() {
            return true;
        }
    }
    false
}

/// Primality verdict for arbitrary-size integers: proven below ~3.3e24,
/// Baillie-PSW (flagged probabilistic) above.
pub fn primality(n: &BigUint) -> Primality {
    if let Some(small) = n.to_u64() {
        return if is_prime(small) { Primality::Prime } else { Primality::Composite };
    }
    for &p in &SMALL_PRIMES {
        if (n % p).is_zero() {
            return Primality::Composite;
        }
    }
    if n < deterministic_bound() {
        let ok = SMALL_PRIMES.iter().all(|&b| miller_rabin_big(n, &BigUint::from(b)));
        return if ok { Primality::Prime } else { Primality::Composite };
    }
    if miller_rabin_big(n, &BigUint::from(2u32)) && strong_lucas(n) {
        Primality::ProbablePrime
    } else {
        Primality::Composite
    }
}

pub fn is_prime_big(n: &BigUint) -> bool {
    primality(n).is_prime()
}

/// Primes up to `limit` by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes below 10^6, shared by trial division and the polynomial sieve.
pub fn small_prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| primes_up_to(1_000_000))
}

pub const DEFAULT_PRIME_CAP: u64 = 100_000_000;

/// Smallest prime p = residue (mod modulus) with p not in `exclude` and p <= cap,
/// scanning upward from the smallest positive class member.
pub fn next_prime_in_class(class: &ResidueClass, exclude: &BTreeSet<u64>, cap: u64) -> Result<u64> {
    if class.residue.gcd(&class.modulus) != 1 {
        return Err(Error::Infeasible { residue: class.residue, modulus: class.modulus });
    }
    let mut p = class.first_positive();
    while p <= cap as u128 {
        let q = p as u64;
        if !exclude.contains(&q) && is_prime(q) {
            return Ok(q);
        }
        p += class.modulus;
    }
    Err(Error::SearchExhausted { cap })
}

// ---------------------------------------------------------------------------
// Roots

/// (floor(sqrt(n)), whether n is a perfect square).
pub fn integer_sqrt(n: &BigUint) -> (BigUint, bool) {
    let r = n.sqrt();
    let exact = &r * &r == *n;
    (r, exact)
}

pub fn integer_sqrt_u128(n: u128) -> (u128, bool) {
    if n == 0 {
        return (0, true);
    }
    let mut r = (n as f64).sqrt() as u128;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    (r, r * r == n)
}

/// Square roots of a modulo an odd prime p (Tonelli-Shanks); empty if a is a non-residue.
pub fn sqrt_mod_prime(a: u64, p: u64) -> Vec<u64> {
    let a = a % p;
    if p == 2 {
        return vec![a];
    }
    if a == 0 {
        return vec![0];
    }
    if jacobi_u64(a, p) != 1 {
        return Vec::new();
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let mut z = 2;
    while jacobi_u64(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    let mut roots = vec![r, p - r];
    roots.sort_unstable();
    roots
}

/// gcd of a BigInt with a u64, as u64.
pub fn gcd_big_u64(a: &BigInt, b: u64) -> u64 {
    let r = (a.magnitude() % b).to_u64().unwrap();
    r.gcd(&b)
}

pub fn big(n: impl Into<BigInt>) -> BigInt {
    n.into()
}

pub fn is_positive(n: &BigInt) -> bool {
    n.is_positive()
}
