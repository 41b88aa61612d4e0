//! Finite-level Tate-module combinatorics: basis tuples, their `S_n` and
//! `delta` quotients, group-invariant classes, Chern-number obstructions and
//! the genus-g count.

use std::collections::HashMap;

use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::One;

use crate::arith::is_prime;
use crate::error::{Error, Result};
use crate::exec::{enumeration_cap, Execution};

/// Default bound on the size of the ambient set `(Z/p^N)^(n*n)`.
pub const DEFAULT_CAP: u128 = 20_000_000;

/// `(Z/p^N Z)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TateLevel {
    pub n: usize,
    pub level: u32,
    pub p: u64,
}

/// `n` vectors of `(Z/p^N)^n`, entries in `0..p^N`.
pub type BTuple = Vec<Vec<u64>>;

impl TateLevel {
    pub fn new(n: usize, level: u32, p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        if n == 0 || level == 0 {
            return Err(Error::Precondition("n and N must be positive".into()));
        }
        Ok(TateLevel { n, level, p })
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.level)
    }

    fn ambient(&self) -> u128 {
        (self.modulus() as u128).saturating_pow((self.n * self.n) as u32)
    }

    fn check_cap(&self) -> Result<()> {
        let cap = enumeration_cap(DEFAULT_CAP);
        let needed = self.ambient();
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        Ok(())
    }

    fn decode(&self, mut idx: u64) -> BTuple {
        let q = self.modulus();
        let mut t = vec![vec![0; self.n]; self.n];
        for b in t.iter_mut() {
            for x in b.iter_mut() {
                *x = idx % q;
                idx /= q;
            }
        }
        t
    }

    /// Whether the tuple is a basis: its determinant is a unit mod `p`.
    pub fn is_basis(&self, t: &BTuple) -> bool {
        let p = self.p;
        let mut m: Vec<Vec<u64>> = t.iter().map(|b| b.iter().map(|x| x % p).collect()).collect();
        let n = self.n;
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| m[r][col] != 0) else { return false };
            m.swap(col, piv);
            let inv = mod_pow(m[col][col], p - 2, p);
            for r in col + 1..n {
                let f = m[r][col] * inv % p;
                if f != 0 {
                    for c in col..n {
                        m[r][c] = (m[r][c] + p * p - f * m[col][c] % p) % p;
                    }
                }
            }
        }
        true
    }

    fn neg(&self, x: u64) -> u64 {
        (self.modulus() - x) % self.modulus()
    }

    /// `(b_1, ..., b_n) -> (-b_1, b_2 - b_1, ..., b_n - b_1)`.
    pub fn delta(&self, t: &BTuple) -> BTuple {
        let q = self.modulus();
        let b1 = &t[0];
        let mut out = vec![b1.iter().map(|&x| self.neg(x)).collect()];
        for b in &t[1..] {
            out.push(b.iter().zip(b1).map(|(&x, &y)| (x + q - y) % q).collect());
        }
        out
    }

    /// Lexicographically smallest reordering.
    pub fn sn_rep(&self, t: &BTuple) -> BTuple {
        let mut s = t.clone();
        s.sort();
        s
    }
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// All basis tuples, in increasing lexicographic order.
pub fn enumerate_b(t: &TateLevel, exec: Execution) -> Result<Vec<BTuple>> {
    t.check_cap()?;
    let found = exec.map_range(t.ambient() as u64, |i| {
        let tup = t.decode(i);
        t.is_basis(&tup).then_some(tup)
    });
    let mut out: Vec<BTuple> = found.into_iter().flatten().collect();
    out.sort();
    Ok(out)
}

/// `|B|` by enumeration, without materializing the tuples.
pub fn count_b(t: &TateLevel, exec: Execution) -> Result<u64> {
    t.check_cap()?;
    let hits = exec.map_range(t.ambient() as u64, |i| t.is_basis(&t.decode(i)) as u64);
    Ok(hits.into_iter().sum())
}

/// `p^(n(N-1) + n(n-1)/2) * prod_{i=1..n} (p^i - 1)`.
pub fn formula_count_b(n: usize, level: u32, p: u64) -> BigUint {
    let n32 = n as u32;
    let e = n32 * (level - 1) + n32 * (n32.saturating_sub(1)) / 2;
    product_part(n32, p) * BigUint::from(p).pow(e)
}

/// `|GL_n(Z/p^N)| = p^(n^2 (N-1) + n(n-1)/2) * prod_{i=1..n} (p^i - 1)`.
pub fn gl_order(n: usize, level: u32, p: u64) -> BigUint {
    let n32 = n as u32;
    let e = n32 * n32 * (level - 1) + n32 * (n32.saturating_sub(1)) / 2;
    product_part(n32, p) * BigUint::from(p).pow(e)
}

fn product_part(n: u32, p: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * (BigUint::from(p).pow(i) - 1u32))
}

/// Sorted `S_n`-orbit representatives.
pub fn sn_classes(t: &TateLevel, tuples: &[BTuple]) -> Vec<BTuple> {
    let mut reps: Vec<BTuple> = tuples.iter().map(|b| t.sn_rep(b)).collect();
    reps.sort();
    reps.dedup();
    reps
}

/// A `delta`-equivalence class of `S_n`-orbits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaClass {
    pub rep: BTuple,
    pub orbits: Vec<BTuple>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Classes of `B / S_n` under the relation generated by `[b] ~ [delta(b)]`,
/// with `delta` applied to every ordering of every orbit.
pub fn delta_classes(t: &TateLevel, tuples: &[BTuple]) -> Vec<DeltaClass> {
    let orbits = sn_classes(t, tuples);
    let index: HashMap<&BTuple, usize> = orbits.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let mut uf = UnionFind((0..orbits.len()).collect());
    for b in tuples {
        let from = index[&t.sn_rep(b)];
        if let Some(&to) = index.get(&t.sn_rep(&t.delta(b))) {
            uf.union(from, to);
        }
    }
    let mut groups: Vec<Vec<BTuple>> = vec![Vec::new(); orbits.len()];
    for (i, b) in orbits.iter().enumerate() {
        let root = uf.find(i);
        groups[root].push(b.clone());
    }
    groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|orbits| DeltaClass { rep: orbits[0].clone(), orbits })
        .collect()
}

/// `|B / S_n| / |delta \ B / S_n|`, which must be `n + 1`.
pub fn quotient_ratio(t: &TateLevel, exec: Execution) -> Result<u64> {
    let b = enumerate_b(t, exec)?;
    let orbits = sn_classes(t, &b).len() as u64;
    let classes = delta_classes(t, &b).len() as u64;
    let expected = t.n as u64 + 1;
    if classes == 0 || !orbits.is_multiple_of(classes) || orbits / classes != expected {
        return Err(Error::RatioViolation { got: format!("{orbits}/{classes}"), expected });
    }
    Ok(expected)
}

/// A finite group of invertible matrices acting on `(Z/p^N)^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAction {
    tate: TateLevel,
    gens: Vec<Vec<Vec<u64>>>,
    order: usize,
}

/// Which quotient of `B` the invariant classes live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quotient {
    Sn,
    Delta,
}

/// The seven cyclic parts `diag(1, zeta)` of the hyperelliptic list, by the
/// order of `zeta`.
pub const HYPERELLIPTIC_ORDERS: [u64; 7] = [2, 2, 3, 3, 4, 4, 6];

impl GroupAction {
    /// Closes the generators under products; errors when the group exceeds
    /// `order_bound` elements or a generator is not invertible.
    pub fn new(tate: &TateLevel, gens: Vec<Vec<Vec<u64>>>, order_bound: usize) -> Result<Self> {
        let q = tate.modulus();
        let n = tate.n;
        let mut reduced = Vec::new();
        for g in gens {
            if g.len() != n || g.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch(format!("group elements must be {n}x{n}")));
            }
            let g: Vec<Vec<u64>> = g.iter().map(|r| r.iter().map(|x| x % q).collect()).collect();
            // columns of g form a basis iff rows do
            if !tate.is_basis(&g) {
                return Err(Error::NonUnit);
            }
            reduced.push(g);
        }
        let id: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u64).collect()).collect();
        let mut seen = vec![id.clone()];
        let mut frontier = vec![id];
        while let Some(x) = frontier.pop() {
            for g in &reduced {
                let y = mat_mul(g, &x, q);
                if !seen.contains(&y) {
                    if seen.len() >= order_bound {
                        return Err(Error::CapExceeded { needed: seen.len() as u128 + 1, cap: order_bound as u128 });
                    }
                    seen.push(y.clone());
                    frontier.push(y);
                }
            }
        }
        Ok(GroupAction { tate: *tate, gens: reduced, order: seen.len() })
    }

    pub fn trivial(tate: &TateLevel) -> Self {
        GroupAction { tate: *tate, gens: Vec::new(), order: 1 }
    }

    /// `diag(1, zeta)` on rank 2 with `zeta` the smallest unit of the given
    /// multiplicative order; `preset` indexes [`HYPERELLIPTIC_ORDERS`].
    pub fn hyperelliptic(tate: &TateLevel, preset: usize) -> Result<Self> {
        if tate.n != 2 {
            return Err(Error::DimensionMismatch("hyperelliptic presets act on rank 2".into()));
        }
        let k = *HYPERELLIPTIC_ORDERS
            .get(preset)
            .ok_or_else(|| Error::Invalid(format!("preset index {preset} out of range 0..7")))?;
        let q = tate.modulus();
        let zeta = (2..q)
            .find(|&z| z % tate.p != 0 && unit_order(z, q) == k)
            .or((k == 2 && q > 2).then_some(q - 1))
            .ok_or_else(|| Error::Precondition(format!("no unit of order {k} modulo {q}")))?;
        GroupAction::new(tate, vec![vec![vec![1, 0], vec![0, zeta]]], 64)
    }

    pub fn generators(&self) -> &[Vec<Vec<u64>>] {
        &self.gens
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn apply(&self, g: &[Vec<u64>], t: &BTuple) -> BTuple {
        let q = self.tate.modulus();
        t.iter()
            .map(|b| g.iter().map(|row| row.iter().zip(b).map(|(x, y)| x * y % q).sum::<u64>() % q).collect())
            .collect()
    }
}

fn unit_order(z: u64, q: u64) -> u64 {
    let mut x = z % q;
    let mut k = 1;
    while x != 1 {
        x = x * z % q;
        k += 1;
        if k > q {
            return 0;
        }
    }
    k
}

fn mat_mul(a: &[Vec<u64>], b: &[Vec<u64>], q: u64) -> Vec<Vec<u64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j] % q).sum::<u64>() % q).collect()).collect()
}

/// Representatives of the classes fixed (setwise) by every generator.
///
/// This is finite-level evidence only: the invariance statements concern the
/// inverse limit over all levels.
pub fn invariant_classes(action: &GroupAction, which: Quotient, exec: Execution) -> Result<Vec<BTuple>> {
    let t = &action.tate;
    let b = enumerate_b(t, exec)?;
    match which {
        Quotient::Sn => {
            let reps = sn_classes(t, &b);
            let fixed = exec.map(reps, |r| {
                action.gens.iter().all(|g| t.sn_rep(&action.apply(g, &r)) == r).then_some(r)
            });
            Ok(fixed.into_iter().flatten().collect())
        }
        Quotient::Delta => {
            let classes = delta_classes(t, &b);
            let mut class_of: HashMap<BTuple, usize> = HashMap::new();
            for (i, c) in classes.iter().enumerate() {
                for o in &c.orbits {
                    class_of.insert(o.clone(), i);
                }
            }
            let fixed = exec.map_range(classes.len() as u64, |i| {
                let c = &classes[i as usize];
                action
                    .gens
                    .iter()
                    .all(|g| class_of.get(&t.sn_rep(&action.apply(g, &c.rep))) == Some(&(i as usize)))
                    .then(|| c.rep.clone())
            });
            Ok(fixed.into_iter().flatten().collect())
        }
    }
}

/// Which vanishing conditions [`chern_obstruction`] tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChernMode {
    /// `c_1^2 - 3 c_2 = 0 mod p^N`.
    Proj,
    /// `c_1 = 0 mod p^N` and `c_2 = 0 mod p^(2N)`.
    Aff { c1: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChernVerdict {
    pub obstructed: bool,
    /// The quantities tested, each with its modulus.
    pub checks: Vec<(String, i64, u128)>,
}

pub fn chern_obstruction(c1sq: i64, c2: i64, p: u64, level: u32, mode: ChernMode) -> ChernVerdict {
    let pn = (p as u128).pow(level);
    let checks = match mode {
        ChernMode::Proj => vec![("c1^2 - 3*c2".to_string(), c1sq - 3 * c2, pn)],
        ChernMode::Aff { c1 } => vec![("c1".to_string(), c1, pn), ("c2".to_string(), c2, pn * pn)],
    };
    let obstructed = checks.iter().any(|(_, v, m)| (*v as i128).rem_euclid(*m as i128) != 0);
    ChernVerdict { obstructed, checks }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceClass {
    pub name: &'static str,
    pub c1sq: i64,
    pub c2: i64,
}

/// Chern numbers per surface class; ruled surfaces over a genus-`g` curve
/// use the given `g`.
pub fn surface_table(ruled_genus: i64) -> Vec<SurfaceClass> {
    let s = |name, c1sq, c2| SurfaceClass { name, c1sq, c2 };
    vec![
        s("P2", 9, 3),
        s("Hirzebruch", 8, 4),
        s("ruled", 8 * (1 - ruled_genus), 4 * (1 - ruled_genus)),
        s("Enriques", 0, 12),
        s("K3", 0, 24),
        s("abelian", 0, 0),
        s("hyperelliptic", 0, 0),
    ]
}

pub fn surface(name: &str, ruled_genus: i64) -> Option<SurfaceClass> {
    surface_table(ruled_genus).into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

/// `(c_1^2, c_2)` of a product of curves of genera `g1`, `g2`.
pub fn product_chern(g1: i64, g2: i64) -> (i64, i64) {
    let x = (1 - g1) * (1 - g2);
    (8 * x, 4 * x)
}

pub fn product_obstructed(g1: i64, g2: i64, p: u64, level: u32) -> bool {
    let x = (1 - g1) as i128 * (1 - g2) as i128;
    x.rem_euclid((p as i128).pow(level)) != 0
}

/// Working precision for [`genus_count`].
pub const GENUS_PRECISION: usize = 256;
pub const GENUS_TOLERANCE: f64 = 1e-6;

/// `(p^(g-1) / 2^(2g-1)) * sum_{theta=1}^{p-1} sin(pi theta / p)^(-(2g-2))`,
/// evaluated in high precision and certified integral.
pub fn genus_count(p: u64, g: u64) -> Result<u64> {
    if p == 2 || !is_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    if g < 2 || p > 50 || g > 5 {
        return Err(Error::Precondition("genus_count needs g >= 2, p <= 50, g <= 5".into()));
    }
    let prec = GENUS_PRECISION;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().map_err(|e| Error::Invalid(format!("{e:?}")))?;
    let pi = cc.pi(prec, rm);
    let pf = BigFloat::from_u64(p, prec);
    let mut sum = BigFloat::from_u64(0, prec);
    for theta in 1..p {
        let x = pi.mul(&BigFloat::from_u64(theta, prec), prec, rm).div(&pf, prec, rm);
        let s = x.sin(prec, rm, &mut cc);
        sum = sum.add(&s.powi((2 * g - 2) as usize, prec, rm).reciprocal(prec, rm), prec, rm);
    }
    let scale = BigFloat::from_u64(p.pow(g as u32 - 1), prec).div(&BigFloat::from_u64(1 << (2 * g - 1), prec), prec, rm);
    let value = sum.mul(&scale, prec, rm);
    let approx: f64 = value
        .format(astro_float::Radix::Dec, rm, &mut cc)
        .map_err(|e| Error::Invalid(format!("{e:?}")))?
        .parse()
        .map_err(|e| Error::Invalid(format!("{e}")))?;
    let k = approx.round();
    let residual = value.sub(&BigFloat::from_u64(k as u64, prec), prec, rm).abs();
    let tol = BigFloat::from_f64(GENUS_TOLERANCE, prec);
    if k < 0.0 || residual.cmp(&tol) != Some(-1) {
        return Err(Error::IntegralityViolation(format!("p = {p}, g = {g}: value {approx}")));
    }
    Ok(k as u64)
}

/// `binom(n+1, l) / (n+1)^l`.
pub fn gunning_coefficient(n: u64, l: u64) -> Result<BigRational> {
    if l == 0 || l > n {
        return Err(Error::Precondition("gunning_coefficient needs 1 <= l <= n".into()));
    }
    let num = binomial(num_bigint::BigInt::from(n + 1), num_bigint::BigInt::from(l));
    let den = num_bigint::BigInt::from(n + 1).pow(l as u32);
    Ok(BigRational::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(n: usize, level: u32, p: u64) -> TateLevel {
        TateLevel::new(n, level, p).unwrap()
    }

    #[test]
    fn counts() {
        for (n, level, p, want) in [(1, 1, 5, 4u64), (2, 1, 3, 48), (1, 2, 3, 6)] {
            let t = tl(n, level, p);
            assert_eq!(enumerate_b(&t, Execution::Sequential).unwrap().len() as u64, want);
            assert_eq!(count_b(&t, Execution::Parallel).unwrap(), want);
            assert_eq!(formula_count_b(n, level, p), BigUint::from(want));
        }
        assert_eq!(count_b(&tl(2, 2, 3), Execution::Parallel).unwrap(), 3888);
        assert_eq!(gl_order(2, 2, 3), BigUint::from(3888u32));
        assert_eq!(formula_count_b(2, 2, 3), BigUint::from(432u32));
    }

    #[test]
    fn quotients() {
        let t = tl(2, 1, 3);
        let b = enumerate_b(&t, Execution::Parallel).unwrap();
        assert_eq!(sn_classes(&t, &b).len(), 24);
        assert_eq!(delta_classes(&t, &b).len(), 8);
        for (n, level, p) in [(2, 1, 3), (1, 1, 5), (2, 1, 5), (1, 2, 3)] {
            assert_eq!(quotient_ratio(&tl(n, level, p), Execution::Parallel).unwrap(), n as u64 + 1);
        }
        let t1 = tl(1, 1, 7);
        let b1 = enumerate_b(&t1, Execution::Sequential).unwrap();
        assert_eq!(delta_classes(&t1, &b1).len(), b1.len() / 2);
        for x in &b {
            assert_eq!(t.delta(&t.delta(x)), *x);
        }
    }

    #[test]
    fn invariants() {
        let t5 = tl(2, 1, 5);
        let z2 = GroupAction::new(&t5, vec![vec![vec![1, 0], vec![0, 4]]], 8).unwrap();
        assert_eq!(z2.order(), 2);
        assert!(!invariant_classes(&z2, Quotient::Sn, Execution::Parallel).unwrap().is_empty());
        let t7 = tl(2, 1, 7);
        let z3 = GroupAction::new(&t7, vec![vec![vec![1, 0], vec![0, 2]]], 8).unwrap();
        assert_eq!(z3.order(), 3);
        assert!(invariant_classes(&z3, Quotient::Delta, Execution::Parallel).unwrap().is_empty());
        let b = enumerate_b(&t7, Execution::Parallel).unwrap();
        let all = delta_classes(&t7, &b).len();
        let triv = GroupAction::trivial(&t7);
        assert_eq!(invariant_classes(&triv, Quotient::Delta, Execution::Sequential).unwrap().len(), all);
        assert_eq!(GroupAction::hyperelliptic(&t7, 2).unwrap().order(), 3);
        assert_eq!(GroupAction::hyperelliptic(&t7, 6).unwrap().order(), 6);
        assert!(GroupAction::hyperelliptic(&t7, 4).is_err());
    }

    #[test]
    fn chern() {
        let k3 = surface("K3", 0).unwrap();
        assert_eq!(k3.c1sq - 3 * k3.c2, -72);
        assert!(chern_obstruction(k3.c1sq, k3.c2, 5, 1, ChernMode::Proj).obstructed);
        assert!(chern_obstruction(8, 4, 7, 1, ChernMode::Proj).obstructed);
        assert!(!chern_obstruction(9, 3, 5, 2, ChernMode::Proj).obstructed);
        let ruled = surface("ruled", 6).unwrap();
        assert_eq!((ruled.c1sq, ruled.c2), (-40, -20));
        assert_eq!(product_chern(2, 3), (16, 8));
        assert!(product_obstructed(2, 3, 5, 1));
        assert!(!product_obstructed(6, 2, 5, 1));
        assert_eq!(product_chern(1, 7), (0, 0));
        assert!(!chern_obstruction(0, 0, 5, 1, ChernMode::Aff { c1: 0 }).obstructed);
        assert!(!chern_obstruction(0, 25, 5, 1, ChernMode::Aff { c1: 0 }).obstructed);
        assert!(chern_obstruction(0, 5, 5, 1, ChernMode::Aff { c1: 0 }).obstructed);
    }

    #[test]
    fn genus_and_gunning() {
        for p in [3u64, 5, 7, 11] {
            assert_eq!(genus_count(p, 2).unwrap(), p * (p * p - 1) / 24);
        }
        assert!(genus_count(2, 2).is_err());
        assert_eq!(gunning_coefficient(2, 2).unwrap(), BigRational::new(1.into(), 3.into()));
        assert_eq!(gunning_coefficient(4, 1).unwrap(), BigRational::one());
    }
}
