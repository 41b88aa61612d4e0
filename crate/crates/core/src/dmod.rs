//! Free modules over a chart with an action of the level-`m` operators,
//! presented by the matrices of the generators `D_i<p^l>`, `l <= m`.
//!
//! The action of an arbitrary operator is derived from the generator
//! matrices: every symbol `D<r>` is, up to a unit, a product of generators,
//! and the factorization used here always peels off the generator of the
//! lowest nonzero base-`p` digit. Whether those derived actions are
//! consistent is exactly what [`DMod::validate`] checks.

use std::collections::HashMap;
use std::sync::Arc;

use crate::arith::{angle_coeff, brace_coeff, Level};
use crate::chart::{Chart, OneForm, RingElem};
use crate::diffop::{apply_basis, multi_brace, sub_indices, DiffOp, MultiIndex};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{unit_vector, vec_is_zero, zero_vector, Matrix, Vector};
use crate::upoly::{kernel, solve_in_hermite, PolyCols, UPoly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DMod {
    chart: Arc<Chart>,
    level: u32,
    rank: usize,
    /// `gens[i][l]` is the matrix of `D_i<p^l>`; column `k` is the image of `e_k`.
    gens: Vec<Vec<Matrix>>,
}

/// Outcome of [`DMod::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    Valid,
    /// `D_var<p^l> * D<op>` acts differently on `e_basis` than the composite
    /// of the two actions.
    Violated { var: String, l: u32, op: MultiIndex, basis: usize },
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }
}

/// Horizontal sections of the underlying connection, as a basis over the
/// subring `F_p[y]` with `y = x^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolBasis {
    chart: Arc<Chart>,
    rank: usize,
    vectors: Vec<Vector>,
    coords: PolyCols,
}

impl SolBasis {
    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Coordinates of a horizontal vector in this basis, as functions of
    /// `y = x^p` written on `target` (a univariate chart).
    pub fn coordinates(&self, w: &[RingElem], target: &Arc<Chart>) -> Option<Vec<RingElem>> {
        let p = self.chart.p();
        let (polys, shift) = to_subring_coords(w, p, self.rank);
        let c = solve_in_hermite(&self.coords, &polys, self.chart.fp())?;
        Some(
            c.iter()
                .map(|u| {
                    let mut e = RingElem::zero(target);
                    for (d, &a) in u.coeffs().iter().enumerate() {
                        e.add_term(vec![d as i64 - shift], a);
                    }
                    e
                })
                .collect(),
        )
    }
}

/// Splits a vector over `F_p[x^(+-1)]` into its coordinates in the basis
/// `x^a e_j` (`0 <= a < p`) over `F_p[y]`, after multiplying by `y^shift`
/// to clear negative powers of `y`. Index of `x^a e_j` is `j * p + a`.
fn to_subring_coords(w: &[RingElem], p: u64, rank: usize) -> (Vec<UPoly>, i64) {
    let p = p as i64;
    let min_y = w
        .iter()
        .flat_map(|f| f.terms().map(|(h, _)| h[0].div_euclid(p)).collect::<Vec<_>>())
        .min()
        .unwrap_or(0);
    let shift = (-min_y).max(0);
    let mut coeffs: Vec<Vec<u64>> = vec![Vec::new(); rank * p as usize];
    for (j, f) in w.iter().enumerate() {
        for (h, c) in f.terms() {
            let a = h[0].rem_euclid(p) as usize;
            let d = (h[0].div_euclid(p) + shift) as usize;
            let slot = &mut coeffs[j * p as usize + a];
            if slot.len() <= d {
                slot.resize(d + 1, 0);
            }
            slot[d] = c;
        }
    }
    (coeffs.into_iter().map(UPoly::from_coeffs).collect(), shift)
}

/// Memo of the derived basis actions `A_r(e_k) = D<r> e_k`.
struct ActionTable<'a> {
    module: &'a DMod,
    cache: HashMap<MultiIndex, Arc<Vec<Vector>>>,
}

impl<'a> ActionTable<'a> {
    fn new(module: &'a DMod) -> Self {
        ActionTable { module, cache: HashMap::new() }
    }

    fn get(&mut self, r: &[u64]) -> Result<Arc<Vec<Vector>>> {
        if let Some(v) = self.cache.get(r) {
            return Ok(v.clone());
        }
        let m = self.module;
        let chart = &m.chart;
        let cols = if r.iter().all(|&x| x == 0) {
            (0..m.rank).map(|k| unit_vector(chart, m.rank, k)).collect()
        } else {
            let p = chart.p();
            let i = r.iter().position(|&x| x > 0).unwrap();
            let ri = r[i];
            let mut j = 0;
            let mut x = ri;
            while j < m.level && x.is_multiple_of(p) {
                x /= p;
                j += 1;
            }
            let pj = p.pow(j);
            let u = angle_coeff(ri, pj, m.level(), chart.fp())?;
            let uinv = chart.fp().inv(u).ok_or_else(|| {
                Error::IntegralityViolation(format!("angle <{ri}, {pj}> is not a unit"))
            })?;
            let mut rest = r.to_vec();
            rest[i] -= pj;
            let prev = self.get(&rest)?;
            let mut cols = Vec::with_capacity(m.rank);
            for v in prev.iter() {
                let w = self.apply_generator(i, j, v)?;
                cols.push(w.iter().map(|e| e.scale(uinv)).collect());
            }
            cols
        };
        let cols = Arc::new(cols);
        self.cache.insert(r.to_vec(), cols.clone());
        Ok(cols)
    }

    /// `D_i<p^j>` on an arbitrary vector, by the Leibniz rule.
    fn apply_generator(&mut self, i: usize, j: u32, v: &[RingElem]) -> Result<Vector> {
        let m = self.module;
        let chart = &m.chart;
        let fp = chart.fp();
        let pj = chart.p().pow(j);
        let n = chart.nvars();
        let b = &m.gens[i][j as usize];
        let mut out = zero_vector(chart, m.rank);
        for (s, g) in v.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            for (row, o) in out.iter_mut().enumerate() {
                let e = b.get(row, s);
                if !e.is_zero() {
                    *o = o.add(&g.mul(e));
                }
            }
            for t in 1..=pj {
                let mut idx = vec![0; n];
                idx[i] = t;
                let dg = apply_basis(&idx, m.level(), g);
                if dg.is_zero() {
                    continue;
                }
                let c = brace_coeff(t, pj - t, m.level(), fp)?;
                if c == 0 {
                    continue;
                }
                let dg = dg.scale(c);
                if t == pj {
                    out[s] = out[s].add(&dg);
                } else {
                    let mut lower = vec![0; n];
                    lower[i] = pj - t;
                    let col = self.get(&lower)?;
                    for (o, e) in out.iter_mut().zip(&col[s]) {
                        if !e.is_zero() {
                            *o = o.add(&dg.mul(e));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn act(&mut self, op: &DiffOp, v: &[RingElem]) -> Result<Vector> {
        let m = self.module;
        let fp = m.chart.fp();
        let mut out = zero_vector(&m.chart, m.rank);
        for (r, f) in op.coeffs() {
            for (k, g) in v.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                for s in sub_indices(r) {
                    let b = multi_brace(r, &s, m.level(), fp)?;
                    if b == 0 {
                        continue;
                    }
                    let ds = apply_basis(&s, m.level(), g);
                    if ds.is_zero() {
                        continue;
                    }
                    let coef = f.mul(&ds).scale(b);
                    let rest: MultiIndex = r.iter().zip(&s).map(|(a, b)| a - b).collect();
                    let col = self.get(&rest)?;
                    for (o, e) in out.iter_mut().zip(&col[k]) {
                        if !e.is_zero() {
                            *o = o.add(&coef.mul(e));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Multi-indices with total order at most `bound`.
fn indices_up_to(n: usize, bound: u64) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u64; n];
    fn rec(k: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<MultiIndex>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[k] = v;
            rec(k + 1, left - v, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, bound, &mut cur, &mut out);
    out.sort_by_key(|r| (r.iter().sum::<u64>(), r.clone()));
    out
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl DMod {
    pub fn new(chart: &Arc<Chart>, level: u32, rank: usize, gens: Vec<Vec<Matrix>>) -> Result<Self> {
        if gens.len() != chart.nvars() {
            return Err(Error::DimensionMismatch(format!(
                "{} variables but actions for {}",
                chart.nvars(),
                gens.len()
            )));
        }
        for per_var in &gens {
            if per_var.len() != level as usize + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "level {level} needs {} generator matrices per variable",
                    level + 1
                )));
            }
            for b in per_var {
                if b.rows() != rank || b.cols() != rank {
                    return Err(Error::DimensionMismatch(format!("generator matrix is not {rank}x{rank}")));
                }
                if b.chart() != chart {
                    return Err(Error::ChartMismatch);
                }
            }
        }
        Ok(DMod { chart: chart.clone(), level, rank, gens })
    }

    /// `O^rank` with every generator acting by the derivative only.
    pub fn trivial(chart: &Arc<Chart>, level: u32, rank: usize) -> Self {
        let gens = (0..chart.nvars())
            .map(|_| (0..=level).map(|_| Matrix::zeros(chart, rank, rank)).collect())
            .collect();
        DMod { chart: chart.clone(), level, rank, gens }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn level(&self) -> Level {
        Level::Finite(self.level)
    }

    pub fn level_number(&self) -> u32 {
        self.level
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Matrix of `D_i<p^l>`.
    pub fn generator_matrix(&self, i: usize, l: u32) -> &Matrix {
        &self.gens[i][l as usize]
    }

    pub fn generator_matrices(&self) -> &[Vec<Matrix>] {
        &self.gens
    }

    /// Restriction to level `m <= level`.
    pub fn truncate(&self, m: u32) -> Result<DMod> {
        if m > self.level {
            return Err(Error::LevelMismatch(m, self.level));
        }
        let gens = self.gens.iter().map(|g| g[..=m as usize].to_vec()).collect();
        Ok(DMod { chart: self.chart.clone(), level: m, rank: self.rank, gens })
    }

    fn check_vector(&self, v: &[RingElem]) -> Result<()> {
        if v.len() != self.rank {
            return Err(Error::DimensionMismatch(format!("vector of length {} for rank {}", v.len(), self.rank)));
        }
        if v.iter().any(|e| e.chart() != &self.chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(())
    }

    /// Action of an arbitrary operator of the same level.
    pub fn act(&self, op: &DiffOp, v: &[RingElem]) -> Result<Vector> {
        if op.chart() != &self.chart {
            return Err(Error::ChartMismatch);
        }
        match op.level() {
            Level::Finite(m) if m == self.level => {}
            Level::Finite(m) => return Err(Error::LevelMismatch(m, self.level)),
            Level::Infinity => return Err(Error::LevelMismatch(u32::MAX, self.level)),
        }
        self.check_vector(v)?;
        ActionTable::new(self).act(op, v)
    }

    /// Action of the generator `D_i<p^l>`.
    pub fn apply_generator(&self, i: usize, l: u32, v: &[RingElem]) -> Result<Vector> {
        if l > self.level || i >= self.chart.nvars() {
            return Err(Error::Precondition(format!("no generator D_{i}<p^{l}> at level {}", self.level)));
        }
        self.check_vector(v)?;
        ActionTable::new(self).apply_generator(i, l, v)
    }

    /// Highest total order of the relations checked by [`DMod::validate`].
    pub fn validation_bound(&self) -> u64 {
        let p = self.chart.p();
        p.pow(self.level + 1) + p.pow(self.level)
    }

    pub fn validate(&self) -> Validation {
        self.validate_with(Execution::default())
    }

    /// Checks `D_i<p^l> (D<r> e_k) = (D_i<p^l> D<r>) e_k` for every
    /// generator, every basis vector and every `|r|` up to
    /// [`DMod::validation_bound`]; reports the first violation.
    pub fn validate_with(&self, exec: Execution) -> Validation {
        let n = self.chart.nvars();
        let p = self.chart.p();
        let bound = self.validation_bound();
        let top = bound + p.pow(self.level);
        let mut table = ActionTable::new(self);
        for r in indices_up_to(n, top) {
            if let Err(e) = table.get(&r) {
                return Validation::Violated { var: format!("{e}"), l: 0, op: r, basis: 0 };
            }
        }
        let cache = table.cache;
        let mut jobs = Vec::new();
        for r in indices_up_to(n, bound) {
            for i in 0..n {
                for l in 0..=self.level {
                    jobs.push((r.clone(), i, l));
                }
            }
        }
        let fp = self.chart.fp();
        let failure = exec.find_first(jobs, |(r, i, l)| {
            let mut table = ActionTable { module: self, cache: cache.clone() };
            let pl = p.pow(l);
            let mut prod = r.clone();
            prod[i] += pl;
            let coef = angle_coeff(prod[i], pl, self.level(), fp).ok()?;
            let composite = table.get(&r).ok()?;
            let target = table.get(&prod).ok()?;
            for k in 0..self.rank {
                let lhs = table.apply_generator(i, l, &composite[k]).ok()?;
                let rhs: Vector = target[k].iter().map(|e| e.scale(coef)).collect();
                if lhs != rhs {
                    return Some(Validation::Violated { var: self.chart.vars()[i].clone(), l, op: r, basis: k });
                }
            }
            None
        });
        failure.unwrap_or(Validation::Valid)
    }

    fn require_valid(&self) -> Result<()> {
        match self.validate() {
            Validation::Valid => Ok(()),
            Validation::Violated { var, l, op, basis } => Err(Error::Invalid(format!(
                "relation for D_{var}<p^{l}> * D<{op:?}> fails on e_{basis}"
            ))),
        }
    }

    /// Classical p-curvature `(D_i<1>)^p` of the underlying connection
    /// (the level-0 truncation), as an `O`-linear matrix.
    pub fn p_curvature(&self, i: usize) -> Result<Matrix> {
        if i >= self.chart.nvars() {
            return Err(Error::Precondition(format!("no variable {i}")));
        }
        let conn = self.truncate(0)?;
        let mut table = ActionTable::new(&conn);
        let p = self.chart.p();
        let mut power = |v: &[RingElem]| -> Result<Vector> {
            let mut v = v.to_vec();
            for _ in 0..p {
                v = table.apply_generator(i, 0, &v)?;
            }
            Ok(v)
        };
        let cols: Vec<Vector> = (0..self.rank)
            .map(|k| power(&unit_vector(&self.chart, self.rank, k)))
            .collect::<Result<_>>()?;
        let psi = Matrix::from_columns(&self.chart, self.rank, &cols);
        for j in 0..self.chart.nvars() {
            let x = RingElem::var(&self.chart, j);
            for (k, col) in cols.iter().enumerate() {
                let mut v = zero_vector(&self.chart, self.rank);
                v[k] = x.clone();
                let lhs = power(&v)?;
                let rhs: Vector = col.iter().map(|e| e.mul(&x)).collect();
                if lhs != rhs {
                    return Err(Error::Invalid("p-curvature failed to be O-linear".into()));
                }
            }
        }
        Ok(psi)
    }

    /// Horizontal sections of the level-0 connection on a univariate chart,
    /// as a Hermite basis over `F_p[x^p]`.
    pub fn sol_level0(&self) -> Result<SolBasis> {
        if self.chart.nvars() != 1 {
            return Err(Error::MultivariateNotSupported);
        }
        if !self.p_curvature(0)?.is_zero() {
            return Err(Error::NotDormant { stage: 0, reason: "p-curvature is nonzero".into() });
        }
        let p = self.chart.p();
        let r = self.rank;
        let x = &self.chart;
        let b = &self.gens[0][0];
        let mut images = Vec::with_capacity(p as usize * r);
        for j in 0..r {
            for a in 0..p as i64 {
                let mono = RingElem::monomial(x, vec![a], 1)?;
                let mut col: Vector = (0..r).map(|s| b.get(s, j).mul(&mono)).collect();
                col[j] = col[j].add(&mono.derive(0));
                images.push(col);
            }
        }
        let shifted: Vec<(Vec<UPoly>, i64)> = images.iter().map(|c| to_subring_coords(c, p, r)).collect();
        let shift = shifted.iter().map(|(_, s)| *s).max().unwrap_or(0);
        let cols: PolyCols = shifted
            .into_iter()
            .map(|(c, s)| c.into_iter().map(|u| u.mul(&UPoly::monomial(1, (shift - s) as usize), x.fp())).collect())
            .collect();
        let ker = kernel(&cols, p as usize * r, x.fp());
        if ker.len() != r {
            return Err(Error::NotDormant {
                stage: 0,
                reason: format!("horizontal sections have rank {} < {r}", ker.len()),
            });
        }
        let mut vectors = Vec::with_capacity(r);
        for c in &ker {
            let mut v = zero_vector(x, r);
            for j in 0..r {
                for a in 0..p as usize {
                    for (d, &coef) in c[j * p as usize + a].coeffs().iter().enumerate() {
                        v[j].add_term(vec![a as i64 + p as i64 * d as i64], coef);
                    }
                }
            }
            vectors.push(v);
        }
        let mut table = ActionTable::new(self);
        for v in &vectors {
            if !vec_is_zero(&table.apply_generator(0, 0, v)?) {
                return Err(Error::Invalid("computed section is not horizontal".into()));
            }
        }
        Ok(SolBasis { chart: x.clone(), rank: r, vectors, coords: ker })
    }

    /// Iterated Cartier descent: the chain of solution bases, one per stage.
    /// Fails with `NotDormant { stage }` at the first stage without a full
    /// set of horizontal sections.
    pub fn dormancy(&self) -> Result<Vec<SolBasis>> {
        self.require_valid()?;
        if self.chart.nvars() != 1 {
            return Err(Error::MultivariateNotSupported);
        }
        let base = self.chart.vars()[0].clone();
        let mut cur = self.clone();
        let mut chain = Vec::new();
        for stage in 0..=self.level as usize {
            let sol = cur.sol_level0().map_err(|e| match e {
                Error::NotDormant { reason, .. } => Error::NotDormant { stage, reason },
                other => other,
            })?;
            if cur.level == 0 {
                chain.push(sol);
                break;
            }
            let y = cur.chart.renamed(vec![format!("{base}_{}", stage + 1)])?;
            let mut table = ActionTable::new(&cur);
            let mut mats = Vec::with_capacity(cur.level as usize);
            for l in 1..=cur.level {
                let mut cols = Vec::with_capacity(cur.rank);
                for s in sol.vectors() {
                    let w = table.apply_generator(0, l, s)?;
                    let c = sol.coordinates(&w, &y).ok_or_else(|| Error::NotDormant {
                        stage,
                        reason: format!("D<p^{l}> does not preserve the horizontal sections"),
                    })?;
                    cols.push(c);
                }
                mats.push(Matrix::from_columns(&y, cur.rank, &cols));
            }
            cur = DMod::new(&y, cur.level - 1, cur.rank, vec![mats])?;
            chain.push(sol);
        }
        Ok(chain)
    }

    /// `dormancy` as a verdict; validation and chart errors still propagate.
    pub fn is_dormant(&self) -> Result<bool> {
        match self.dormancy() {
            Ok(_) => Ok(true),
            Err(Error::NotDormant { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// The canonical action on the Frobenius pullback `O^rank`, written in
    /// the frame `u e_k` with `e_k` horizontal. Level `n - 1`.
    pub fn frobenius_pullback(chart: &Arc<Chart>, rank: usize, n: u32, unit: &RingElem) -> Result<DMod> {
        if n == 0 {
            return Err(Error::Precondition("N must be positive".into()));
        }
        if unit.chart() != chart {
            return Err(Error::ChartMismatch);
        }
        let inv = unit.inverse().ok_or(Error::NonUnit)?;
        let level = n - 1;
        let gens = (0..chart.nvars())
            .map(|i| {
                (0..=level)
                    .map(|l| {
                        let mut r = vec![0; chart.nvars()];
                        r[i] = chart.p().pow(l);
                        let g = apply_basis(&r, Level::Finite(level), unit).mul(&inv);
                        Matrix::scalar(chart, rank, &g)
                    })
                    .collect()
            })
            .collect();
        DMod::new(chart, level, rank, gens)
    }

    /// Pullback along `x -> x^p` with its canonical action: a module of one
    /// level higher whose generator `D<1>` acts by the derivative only.
    pub fn frobenius_lift(&self) -> DMod {
        let p = self.chart.p();
        let gens = self
            .gens
            .iter()
            .map(|per| {
                let mut out = vec![Matrix::zeros(&self.chart, self.rank, self.rank)];
                out.extend(per.iter().map(|b| b.map(|e| e.frobenius(p))));
                out
            })
            .collect();
        DMod { chart: self.chart.clone(), level: self.level + 1, rank: self.rank, gens }
    }

    /// The same module in the frame given by the columns of `g`, which must
    /// be invertible over the chart.
    pub fn gauge(&self, g: &Matrix) -> Result<DMod> {
        if g.rows() != self.rank || g.cols() != self.rank {
            return Err(Error::DimensionMismatch("gauge matrix size".into()));
        }
        let ginv = g.inverse().ok_or(Error::NonUnit)?;
        let mut table = ActionTable::new(self);
        let mut gens = Vec::with_capacity(self.chart.nvars());
        for i in 0..self.chart.nvars() {
            let mut per = Vec::with_capacity(self.level as usize + 1);
            for l in 0..=self.level {
                let cols: Vec<Vector> = (0..self.rank)
                    .map(|k| table.apply_generator(i, l, &g.column(k)).map(|w| ginv.mul_vec(&w)))
                    .collect::<Result<_>>()?;
                per.push(Matrix::from_columns(&self.chart, self.rank, &cols));
            }
            gens.push(per);
        }
        DMod::new(&self.chart, self.level, self.rank, gens)
    }

    fn check_compatible(&self, other: &DMod) -> Result<()> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(())
    }

    /// Divided-power actions `D_i^[t] e_k` for `t <= p^level`; below
    /// `p^(level+1)` the symbols `D<t>` and `D^[t]` agree.
    fn divided_actions(&self, table: &mut ActionTable, i: usize) -> Result<Vec<Arc<Vec<Vector>>>> {
        let top = self.chart.p().pow(self.level);
        (0..=top)
            .map(|t| {
                let mut r = vec![0; self.chart.nvars()];
                r[i] = t;
                table.get(&r)
            })
            .collect()
    }

    pub fn tensor(&self, other: &DMod) -> Result<DMod> {
        self.check_compatible(other)?;
        let (r1, r2) = (self.rank, other.rank);
        let mut t1 = ActionTable::new(self);
        let mut t2 = ActionTable::new(other);
        let mut gens = Vec::new();
        for i in 0..self.chart.nvars() {
            let a1 = self.divided_actions(&mut t1, i)?;
            let a2 = other.divided_actions(&mut t2, i)?;
            let mut per = Vec::new();
            for l in 0..=self.level {
                let pl = self.chart.p().pow(l) as usize;
                let mut cols = Vec::with_capacity(r1 * r2);
                for a in 0..r1 {
                    for b in 0..r2 {
                        let mut col = zero_vector(&self.chart, r1 * r2);
                        for j in 0..=pl {
                            let v = &a1[j][a];
                            let w = &a2[pl - j][b];
                            for (s, vs) in v.iter().enumerate() {
                                if vs.is_zero() {
                                    continue;
                                }
                                for (t, wt) in w.iter().enumerate() {
                                    if !wt.is_zero() {
                                        col[s * r2 + t] = col[s * r2 + t].add(&vs.mul(wt));
                                    }
                                }
                            }
                        }
                        cols.push(col);
                    }
                }
                per.push(Matrix::from_columns(&self.chart, r1 * r2, &cols));
            }
            gens.push(per);
        }
        DMod::new(&self.chart, self.level, r1 * r2, gens)
    }

    /// Dual module in the dual basis: `sum_{a+b=t} <D^[a] e*_k, D^[b] e_j> = 0`
    /// for `t > 0` determines the action on `e*_k`.
    pub fn dual(&self) -> Result<DMod> {
        let mut table = ActionTable::new(self);
        let r = self.rank;
        let mut gens = Vec::new();
        for i in 0..self.chart.nvars() {
            let acts = self.divided_actions(&mut table, i)?;
            let mats: Vec<Matrix> = acts.iter().map(|c| Matrix::from_columns(&self.chart, r, c)).collect();
            // phi_t^T = - sum_{a<t} phi_a^T A_{t-a}
            let mut phi_t: Vec<Matrix> = vec![Matrix::identity(&self.chart, r)];
            for t in 1..mats.len() {
                let mut acc = Matrix::zeros(&self.chart, r, r);
                for a in 0..t {
                    acc = acc.add(&phi_t[a].mul(&mats[t - a]));
                }
                phi_t.push(acc.map(RingElem::neg));
            }
            let per = (0..=self.level).map(|l| phi_t[self.chart.p().pow(l) as usize].transpose()).collect();
            gens.push(per);
        }
        DMod::new(&self.chart, self.level, r, gens)
    }

    /// Top exterior power.
    pub fn det(&self) -> Result<DMod> {
        let mut table = ActionTable::new(self);
        let r = self.rank;
        let mut gens = Vec::new();
        for i in 0..self.chart.nvars() {
            let acts = self.divided_actions(&mut table, i)?;
            let mut per = Vec::new();
            for l in 0..=self.level {
                let pl = self.chart.p().pow(l);
                let mut acc = RingElem::zero(&self.chart);
                for comp in compositions(pl, r) {
                    let cols: Vec<Vector> = comp.iter().enumerate().map(|(k, &j)| acts[j as usize][k].clone()).collect();
                    acc = acc.add(&Matrix::from_columns(&self.chart, r, &cols).det());
                }
                per.push(Matrix::scalar(&self.chart, 1, &acc));
            }
            gens.push(per);
        }
        DMod::new(&self.chart, self.level, 1, gens)
    }

    /// The rank-one connection `d + a` at level 0.
    pub fn invertible_from_form(a: &OneForm) -> DMod {
        let chart = a.chart().clone();
        let gens = a.comps().iter().map(|c| vec![Matrix::scalar(&chart, 1, c)]).collect();
        DMod { chart, level: 0, rank: 1, gens }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank1(c: &Arc<Chart>, level: u32, entries: &[&str]) -> DMod {
        let gens = vec![entries.iter().map(|s| Matrix::scalar(c, 1, &c.parse(s).unwrap())).collect()];
        DMod::new(c, level, 1, gens).unwrap()
    }

    #[test]
    fn validate_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        assert!(DMod::trivial(&c, 1, 2).validate().is_valid());
        let pb = DMod::frobenius_pullback(&c, 1, 2, &c.parse("x").unwrap()).unwrap();
        assert!(pb.validate().is_valid());
        // d + dx/x with D<3> acting by the derivative is the pullback twisted by x
        assert!(rank1(&c, 1, &["x^-1", "0"]).validate().is_valid());
        // d + 1 at level 1 violates (D<1>)^3 = 0
        assert!(!rank1(&c, 1, &["1", "0"]).validate().is_valid());
        assert!(!rank1(&c, 1, &["x", "0"]).validate().is_valid());
    }

    #[test]
    fn act_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        let m = rank1(&c, 0, &["x^-1"]);
        let d = DiffOp::basis(&c, Level::Finite(0), vec![1]);
        assert_eq!(m.act(&d, &[RingElem::one(&c)]).unwrap(), vec![c.parse("x^-1").unwrap()]);
        let v = vec![c.parse("x^2 + 1").unwrap()];
        assert_eq!(m.act(&DiffOp::one(&c, Level::Finite(0)), &v).unwrap(), v);
        let t = DMod::trivial(&c, 1, 2);
        let f = c.parse("x^4 + x").unwrap();
        let d4 = DiffOp::basis(&c, Level::Finite(1), vec![4]);
        let out = t.act(&d4, &[RingElem::zero(&c), f.clone()]).unwrap();
        assert_eq!(out[1], d4.apply(&f).unwrap());
    }

    #[test]
    fn p_curvature_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        assert!(rank1(&c, 0, &["x^-1"]).p_curvature(0).unwrap().is_zero());
        assert_eq!(rank1(&c, 0, &["1"]).p_curvature(0).unwrap(), Matrix::identity(&c, 1));
        assert!(DMod::trivial(&c, 0, 3).p_curvature(0).unwrap().is_zero());
    }

    #[test]
    fn sol_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        let sol = DMod::trivial(&c, 0, 1).sol_level0().unwrap();
        assert_eq!(sol.vectors(), &[vec![RingElem::one(&c)]]);
        let sol = rank1(&c, 0, &["x^-1"]).sol_level0().unwrap();
        assert_eq!(sol.vectors(), &[vec![c.parse("x^2").unwrap()]]);
        assert!(matches!(rank1(&c, 0, &["1"]).sol_level0(), Err(Error::NotDormant { stage: 0, .. })));
    }

    #[test]
    fn dormancy_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        for m in 0..=2 {
            assert_eq!(DMod::trivial(&c, m, 1).dormancy().unwrap().len(), m as usize + 1);
        }
        let pb = DMod::frobenius_pullback(&c, 1, 2, &c.parse("x").unwrap()).unwrap();
        assert!(pb.is_dormant().unwrap());
        let pb2 = DMod::frobenius_pullback(&c, 2, 2, &RingElem::one(&c)).unwrap();
        assert!(pb2.is_dormant().unwrap());
        assert!(matches!(rank1(&c, 1, &["1", "0"]).dormancy(), Err(Error::Invalid(_))));
        // pullback of the non-dormant d + 1 is valid but fails at the second stage
        let lifted = rank1(&c, 0, &["1"]).frobenius_lift();
        assert!(lifted.validate().is_valid());
        assert!(matches!(lifted.dormancy(), Err(Error::NotDormant { stage: 1, .. })));
    }

    #[test]
    fn pullback_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        assert_eq!(DMod::frobenius_pullback(&c, 1, 1, &RingElem::one(&c)).unwrap(), DMod::trivial(&c, 0, 1));
        assert_eq!(DMod::frobenius_pullback(&c, 1, 1, &c.parse("x").unwrap()).unwrap(), rank1(&c, 0, &["x^-1"]));
        assert_eq!(
            DMod::frobenius_pullback(&c, 1, 1, &c.parse("1 + x").unwrap()),
            Err(Error::NonUnit)
        );
    }

    #[test]
    fn tensor_dual_det() {
        let c = Chart::laurent(5, &["x"]).unwrap();
        let m = DMod::new(
            &c,
            0,
            2,
            vec![vec![Matrix::from_rows(
                &c,
                vec![
                    vec![c.parse("x").unwrap(), RingElem::zero(&c)],
                    vec![RingElem::zero(&c), c.parse("2*x^-1").unwrap()],
                ],
            )
            .unwrap()]],
        )
        .unwrap();
        assert_eq!(m.tensor(&DMod::trivial(&c, 0, 1)).unwrap(), m);
        assert_eq!(m.dual().unwrap().dual().unwrap(), m);
        assert_eq!(m.det().unwrap(), rank1(&c, 0, &["x + 2*x^-1"]));
        let pb = DMod::frobenius_pullback(&c, 2, 2, &c.parse("x^2").unwrap()).unwrap();
        assert_eq!(pb.dual().unwrap().dual().unwrap(), pb);
        assert!(pb.tensor(&pb.dual().unwrap()).unwrap().is_dormant().unwrap());
    }

    #[test]
    fn forms_and_katz() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        let form = |s: &str| OneForm::new(vec![c.parse(s).unwrap()]).unwrap();
        assert_eq!(DMod::invertible_from_form(&OneForm::zero(&c)), DMod::trivial(&c, 0, 1));
        let m = DMod::invertible_from_form(&form("x^-1"));
        assert!(m.p_curvature(0).unwrap().is_zero());
        let m = DMod::invertible_from_form(&form("1"));
        assert!(!m.p_curvature(0).unwrap().is_zero());
    }
}
