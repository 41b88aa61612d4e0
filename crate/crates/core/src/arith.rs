//! Prime-field arithmetic and the structure constants of divided-power
//! differential operators of level `m`.
//!
//! Every constant is evaluated as an exact integer or rational and only then
//! reduced modulo `p`; no modular shortcuts are taken. Results are memoized in
//! a process-wide table since the same constants recur constantly in operator
//! products.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The prime field `F_p`. Elements are plain `u64` values in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fp {
    p: u64,
}

impl Fp {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        // keep products inside u64
        if p >= 1 << 31 {
            return Err(Error::Precondition(format!("prime {p} too large")));
        }
        Ok(Fp { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    pub fn reduce_big(&self, x: &BigInt) -> u64 {
        let r = x.mod_floor(&BigInt::from(self.p));
        r.to_u64().expect("residue fits in u64")
    }

    pub fn reduce_biguint(&self, x: &BigUint) -> u64 {
        (x % self.p).to_u64().expect("residue fits in u64")
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.p;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Level of a ring of differential operators: a finite `m` or `Infinity`
/// (Grothendieck's full ring).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Finite(u32),
    Infinity,
}

impl Level {
    fn code(self) -> u32 {
        match self {
            Level::Finite(m) => m,
            Level::Infinity => u32::MAX,
        }
    }
}

impl From<u32> for Level {
    fn from(m: u32) -> Self {
        Level::Finite(m)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(m) => write!(f, "{m}"),
            Level::Infinity => write!(f, "inf"),
        }
    }
}

/// `q_r` in `r = q_r * p^m + l` with `0 <= l < p^m`; zero at infinite level.
pub fn quotient_part(r: u64, m: Level, p: u64) -> u64 {
    match m {
        Level::Infinity => 0,
        Level::Finite(m) => match p.checked_pow(m) {
            Some(pm) => r / pm,
            None => 0,
        },
    }
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// The exact integer `q_{a+b}! / (q_a! q_b!)`.
pub fn brace_exact(a: u64, b: u64, m: Level, p: u64) -> Result<BigUint> {
    let qab = quotient_part(a + b, m, p);
    let qa = quotient_part(a, m, p);
    let qb = quotient_part(b, m, p);
    let num = factorial(qab);
    let den = factorial(qa) * factorial(qb);
    let (q, r) = num.div_rem(&den);
    if !r.is_zero() {
        return Err(Error::IntegralityViolation(format!(
            "brace {{{}, {}}} at level {m} is not integral",
            a + b,
            a
        )));
    }
    Ok(q)
}

/// The exact rational `binom(l1, l2) / brace(l2, l1 - l2)`.
pub fn angle_exact(l1: u64, l2: u64, m: Level, p: u64) -> Result<BigRational> {
    if l2 > l1 {
        return Err(Error::Precondition(format!("angle <{l1}, {l2}> needs l2 <= l1")));
    }
    let binom = BigInt::from(binomial_exact(l1, l2));
    let brace = BigInt::from(brace_exact(l2, l1 - l2, m, p)?);
    Ok(BigRational::new(binom, brace))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Brace,
    Angle,
    QFact,
    GenBinom,
}

type Key = (Kind, u64, u32, i64, u64);

fn cache() -> &'static RwLock<HashMap<Key, u64>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, u64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn memo(key: Key, compute: impl FnOnce() -> Result<u64>) -> Result<u64> {
    if let Some(v) = cache().read().expect("cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = compute()?;
    cache().write().expect("cache poisoned").insert(key, v);
    Ok(v)
}

/// `{a+b over a}` reduced mod p.
pub fn brace_coeff(a: u64, b: u64, m: Level, fp: Fp) -> Result<u64> {
    memo((Kind::Brace, fp.p(), m.code(), a as i64, b), || {
        Ok(fp.reduce_biguint(&brace_exact(a, b, m, fp.p())?))
    })
}

/// `<l1 over l2>` reduced mod p. Fails if the reduced denominator is
/// divisible by p.
pub fn angle_coeff(l1: u64, l2: u64, m: Level, fp: Fp) -> Result<u64> {
    memo((Kind::Angle, fp.p(), m.code(), l1 as i64, l2), || {
        let q = angle_exact(l1, l2, m, fp.p())?;
        rational_mod_p(&q, fp).ok_or_else(|| {
            Error::IntegralityViolation(format!(
                "angle <{l1}, {l2}> at level {m} has denominator divisible by {}",
                fp.p()
            ))
        })
    })
}

/// Reduces a rational with p-free denominator; `None` otherwise.
pub fn rational_mod_p(q: &BigRational, fp: Fp) -> Option<u64> {
    let den = fp.reduce_big(q.denom());
    let inv = fp.inv(den)?;
    Some(fp.mul(fp.reduce_big(q.numer()), inv))
}

/// `q_r!` reduced mod p.
pub fn q_factorial(r: u64, m: Level, fp: Fp) -> u64 {
    memo((Kind::QFact, fp.p(), m.code(), r as i64, 0), || {
        Ok(fp.reduce_biguint(&factorial(quotient_part(r, m, fp.p()))))
    })
    .expect("factorial is infallible")
}

/// `h (h-1) ... (h-r+1) / r!` for any integer `h`, reduced mod p.
pub fn generalized_binomial(h: i64, r: u64, fp: Fp) -> u64 {
    memo((Kind::GenBinom, fp.p(), 0, h, r), || {
        let mut num = BigInt::one();
        for i in 0..r {
            num *= BigInt::from(h) - BigInt::from(i);
        }
        let den = BigInt::from(factorial(r));
        let (q, rem) = num.div_rem(&den);
        debug_assert!(rem.is_zero());
        Ok(fp.reduce_big(&q))
    })
    .expect("binomial is infallible")
}

/// Exact generalized binomial as a signed big integer.
pub fn generalized_binomial_exact(h: i64, r: u64) -> BigInt {
    let mut num = BigInt::one();
    for i in 0..r {
        num *= BigInt::from(h) - BigInt::from(i);
    }
    num / BigInt::from(factorial(r))
}
