//! The ring of level-`m` differential operators on a chart, in the basis of
//! divided-power symbols `D<r>` with coefficients on the left.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::arith::{angle_coeff, brace_coeff, generalized_binomial, q_factorial, quotient_part, Fp, Level};
use crate::chart::{Chart, RingElem};
use crate::error::{Error, Result};

pub type MultiIndex = Vec<u64>;

/// `sum_r f_r D<r>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOp {
    chart: Arc<Chart>,
    level: Level,
    coeffs: BTreeMap<MultiIndex, RingElem>,
}

/// All multi-indices `i` with `i <= r` componentwise.
pub(crate) fn sub_indices(r: &[u64]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::with_capacity(r.len())];
    for &ri in r {
        let mut next = Vec::with_capacity(out.len() * (ri as usize + 1));
        for prefix in &out {
            for v in 0..=ri {
                let mut x = prefix.clone();
                x.push(v);
                next.push(x);
            }
        }
        out = next;
    }
    out
}

/// Product over coordinates of `brace(i_k, r_k - i_k)`.
pub(crate) fn multi_brace(r: &[u64], i: &[u64], m: Level, fp: Fp) -> Result<u64> {
    let mut acc = 1;
    for (&rk, &ik) in r.iter().zip(i) {
        acc = fp.mul(acc, brace_coeff(ik, rk - ik, m, fp)?);
        if acc == 0 {
            break;
        }
    }
    Ok(acc)
}

/// Product over coordinates of `angle(a_k + b_k, a_k)`.
pub(crate) fn multi_angle(a: &[u64], b: &[u64], m: Level, fp: Fp) -> Result<u64> {
    let mut acc = 1;
    for (&ak, &bk) in a.iter().zip(b) {
        acc = fp.mul(acc, angle_coeff(ak + bk, ak, m, fp)?);
        if acc == 0 {
            break;
        }
    }
    Ok(acc)
}

/// `D<r>(f)` on a chart element.
pub fn apply_basis(r: &[u64], m: Level, f: &RingElem) -> RingElem {
    let chart = f.chart();
    let fp = chart.fp();
    let qf: u64 = r.iter().fold(1, |acc, &ri| fp.mul(acc, q_factorial(ri, m, fp)));
    if qf == 0 {
        return RingElem::zero(chart);
    }
    let mut out = RingElem::zero(chart);
    for (h, c) in f.terms() {
        let mut coef = fp.mul(c, qf);
        for (k, &rk) in r.iter().enumerate() {
            if coef == 0 {
                break;
            }
            coef = fp.mul(coef, generalized_binomial(h[k], rk, fp));
        }
        if coef != 0 {
            let e: Vec<i64> = h.iter().zip(r).map(|(&hk, &rk)| hk - rk as i64).collect();
            out.add_term(e, coef);
        }
    }
    out
}

impl DiffOp {
    pub fn zero(chart: &Arc<Chart>, level: Level) -> Self {
        DiffOp { chart: chart.clone(), level, coeffs: BTreeMap::new() }
    }

    pub fn one(chart: &Arc<Chart>, level: Level) -> Self {
        Self::term(RingElem::one(chart), vec![0; chart.nvars()], level)
    }

    /// `f D<r>`.
    pub fn term(f: RingElem, r: MultiIndex, level: Level) -> Self {
        let mut op = Self::zero(f.chart(), level);
        assert_eq!(r.len(), f.chart().nvars(), "multi-index length");
        op.add_term(r, f);
        op
    }

    /// `D<r>` with coefficient 1.
    pub fn basis(chart: &Arc<Chart>, level: Level, r: MultiIndex) -> Self {
        Self::term(RingElem::one(chart), r, level)
    }

    /// The generator `D<p^l>` in the `i`-th variable.
    pub fn generator(chart: &Arc<Chart>, level: Level, i: usize, l: u32) -> Self {
        let mut r = vec![0; chart.nvars()];
        r[i] = chart.p().pow(l);
        Self::basis(chart, level, r)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, RingElem> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|r|` with a nonzero coefficient; 0 for the zero operator.
    pub fn order(&self) -> u64 {
        self.coeffs.keys().map(|r| r.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, r: MultiIndex, f: RingElem) {
        if f.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(r.clone()).or_insert_with(|| RingElem::zero(&self.chart));
        *slot = slot.add(&f);
        if slot.is_zero() {
            self.coeffs.remove(&r);
        }
    }

    fn check(&self, other: &DiffOp) -> Result<()> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        if self.level != other.level {
            return Err(level_mismatch(self.level, other.level));
        }
        Ok(())
    }

    pub fn add(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check(other)?;
        let mut out = self.clone();
        for (r, f) in &other.coeffs {
            out.add_term(r.clone(), f.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> DiffOp {
        DiffOp {
            chart: self.chart.clone(),
            level: self.level,
            coeffs: self.coeffs.iter().map(|(r, f)| (r.clone(), f.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &DiffOp) -> Result<DiffOp> {
        self.add(&other.neg())
    }

    /// Left multiplication by a function.
    pub fn left_mul(&self, g: &RingElem) -> DiffOp {
        let mut out = DiffOp::zero(&self.chart, self.level);
        for (r, f) in &self.coeffs {
            out.add_term(r.clone(), g.mul(f));
        }
        out
    }

    /// Applies the operator to a function.
    pub fn apply(&self, f: &RingElem) -> Result<RingElem> {
        if !f.same_chart(&RingElem::zero(&self.chart)) {
            return Err(Error::ChartMismatch);
        }
        let mut out = RingElem::zero(&self.chart);
        for (r, c) in &self.coeffs {
            out = out.add(&c.mul(&apply_basis(r, self.level, f)));
        }
        Ok(out)
    }

    /// Product in left normal form, using
    /// `D<l> g = sum_{i<=l} {l, i} D<i>(g) D<l-i>` and
    /// `D<a> D<b> = <a+b, a> D<a+b>`.
    pub fn mul(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check(other)?;
        let fp = self.chart.fp();
        let m = self.level;
        let mut out = DiffOp::zero(&self.chart, m);
        for (l, f) in &self.coeffs {
            for i in sub_indices(l) {
                let b = multi_brace(l, &i, m, fp)?;
                if b == 0 {
                    continue;
                }
                let rest: MultiIndex = l.iter().zip(&i).map(|(a, b)| a - b).collect();
                for (r, g) in &other.coeffs {
                    let dg = apply_basis(&i, m, g);
                    if dg.is_zero() {
                        continue;
                    }
                    let a = multi_angle(&rest, r, m, fp)?;
                    if a == 0 {
                        continue;
                    }
                    let total: MultiIndex = rest.iter().zip(r).map(|(x, y)| x + y).collect();
                    out.add_term(total, f.mul(&dg).scale(fp.mul(a, b)));
                }
            }
        }
        Ok(out)
    }

    /// The natural map into level `m2 >= m1`:
    /// `D<r>_(m1) -> (q^(m1)_r! / q^(m2)_r!) D<r>_(m2)`.
    pub fn level_map(&self, m2: Level) -> Result<DiffOp> {
        let m1 = self.level;
        let ok = match (m1, m2) {
            (Level::Finite(a), Level::Finite(b)) => a <= b,
            (_, Level::Infinity) => true,
            (Level::Infinity, Level::Finite(_)) => false,
        };
        if !ok {
            return Err(level_mismatch(m1, m2));
        }
        let fp = self.chart.fp();
        let mut out = DiffOp::zero(&self.chart, m2);
        for (r, f) in &self.coeffs {
            let mut ratio = 1;
            for &rk in r {
                let hi = quotient_part(rk, m1, fp.p());
                let lo = quotient_part(rk, m2, fp.p());
                // hi!/lo! is the integer lo+1 .. hi
                for k in lo + 1..=hi {
                    ratio = fp.mul(ratio, k % fp.p());
                }
            }
            out.add_term(r.clone(), f.scale(ratio));
        }
        Ok(out)
    }

    /// Parses `"(f) D<r1,...,rn> + ..."`. A term without `D<..>` has order 0
    /// and a bare `D<..>` has coefficient 1.
    pub fn parse(chart: &Arc<Chart>, level: Level, src: &str) -> Result<DiffOp> {
        let mut out = DiffOp::zero(chart, level);
        for (neg, piece) in split_terms(src)? {
            let piece = piece.trim();
            let (coef_src, r) = match find_d(piece) {
                Some(pos) => {
                    let tail = &piece[pos + 2..];
                    let close = tail.find('>').ok_or_else(|| Error::Parse(format!("unclosed D< in {piece:?}")))?;
                    if !tail[close + 1..].trim().is_empty() {
                        return Err(Error::Parse(format!("text after D<..> in {piece:?}")));
                    }
                    let r: MultiIndex = tail[..close]
                        .split(',')
                        .map(|s| s.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad index in {piece:?}"))))
                        .collect::<Result<_>>()?;
                    let coef = piece[..pos].trim().trim_end_matches('*').trim();
                    (coef, r)
                }
                None => (piece, vec![0; chart.nvars()]),
            };
            if r.len() != chart.nvars() {
                return Err(Error::Parse(format!("D<..> needs {} indices", chart.nvars())));
            }
            let f = if coef_src.is_empty() { RingElem::one(chart) } else { chart.parse(coef_src)? };
            out.add_term(r, if neg { f.neg() } else { f });
        }
        Ok(out)
    }
}

fn level_mismatch(a: Level, b: Level) -> Error {
    let code = |l: Level| match l {
        Level::Finite(m) => m,
        Level::Infinity => u32::MAX,
    };
    Error::LevelMismatch(code(a), code(b))
}

fn find_d(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut depth = 0i32;
    for i in 0..bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'D' if depth == 0 && bytes.get(i + 1) == Some(&b'<') => return Some(i),
            _ => {}
        }
    }
    None
}

/// Splits at top-level `+`/`-`, keeping the sign of each piece.
fn split_terms(src: &str) -> Result<Vec<(bool, String)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut angle = false;
    let mut cur = String::new();
    let mut neg = false;
    let mut prev = ' ';
    for c in src.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '<' => angle = true,
            '>' => angle = false,
            _ => {}
        }
        let split = (c == '+' || c == '-') && depth == 0 && !angle && prev != '^';
        if split {
            if !cur.trim().is_empty() {
                out.push((neg, std::mem::take(&mut cur)));
            } else if (!cur.is_empty() || !out.is_empty() || neg)
                && (neg || !out.is_empty()) {
                    return Err(Error::Parse(format!("dangling sign in {src:?}")));
                }
            cur.clear();
            neg = c == '-';
        } else {
            cur.push(c);
        }
        if !c.is_whitespace() {
            prev = c;
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced parentheses in {src:?}")));
    }
    if cur.trim().is_empty() {
        return Err(Error::Parse(format!("empty operator term in {src:?}")));
    }
    out.push((neg, cur));
    Ok(out)
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(r, c)| {
                let idx: Vec<String> = r.iter().map(u64::to_string).collect();
                format!("({c}) D<{}>", idx.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(p: u64) -> Arc<Chart> {
        Chart::polynomial(p, &["t"]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let c = chart(5);
        let d3 = DiffOp::basis(&c, Level::Finite(0), vec![3]);
        assert_eq!(d3.apply(&c.parse("t^4").unwrap()).unwrap(), c.parse("4*t").unwrap());
        let f = c.parse("t^3 + 2*t + 1").unwrap();
        assert_eq!(DiffOp::one(&c, Level::Finite(0)).apply(&f).unwrap(), f);
        let c = chart(3);
        let t3 = c.parse("t^3").unwrap();
        assert_eq!(DiffOp::basis(&c, Level::Finite(1), vec![3]).apply(&t3).unwrap(), RingElem::one(&c));
        assert!(DiffOp::basis(&c, Level::Finite(0), vec![3]).apply(&t3).unwrap().is_zero());
    }

    #[test]
    fn mul_examples() {
        let c = chart(3);
        let m0 = Level::Finite(0);
        let d1 = DiffOp::basis(&c, m0, vec![1]);
        // <2,1> = 1 at level 0, so the square is D<2> itself
        assert_eq!(d1.mul(&d1).unwrap(), DiffOp::basis(&c, m0, vec![2]));
        let t = DiffOp::term(c.parse("t").unwrap(), vec![0], m0);
        assert_eq!(d1.mul(&t).unwrap(), DiffOp::parse(&c, m0, "(t) D<1> + 1").unwrap());
        let p = DiffOp::parse(&c, m0, "(t^2 + 1) D<2> + t D<1>").unwrap();
        assert_eq!(DiffOp::one(&c, m0).mul(&p).unwrap(), p);
    }

    #[test]
    fn level_map_examples() {
        let c = chart(3);
        let m0 = Level::Finite(0);
        let img = DiffOp::basis(&c, m0, vec![2]).level_map(Level::Finite(1)).unwrap();
        assert_eq!(img, DiffOp::parse(&c, Level::Finite(1), "2 D<2>").unwrap());
        assert!(DiffOp::basis(&c, m0, vec![3]).level_map(Level::Finite(1)).unwrap().is_zero());
        assert_eq!(
            DiffOp::one(&c, m0).level_map(Level::Finite(2)).unwrap(),
            DiffOp::one(&c, Level::Finite(2))
        );
        assert!(DiffOp::one(&c, Level::Finite(2)).level_map(m0).is_err());
    }

    #[test]
    fn order_examples() {
        let c = chart(5);
        let m = Level::Finite(1);
        assert_eq!(DiffOp::basis(&c, m, vec![3]).order(), 3);
        assert_eq!(DiffOp::parse(&c, m, "t^5 D<1> + 1").unwrap().order(), 1);
        assert_eq!(DiffOp::zero(&c, m).order(), 0);
    }

    #[test]
    fn text_round_trip() {
        let c = Chart::laurent(5, &["x", "y"]).unwrap();
        let m = Level::Finite(1);
        let p = DiffOp::parse(&c, m, "(x - y^-2) D<1,0> - 3*x*D<0,4> + D<2,2> + 2").unwrap();
        assert_eq!(DiffOp::parse(&c, m, &p.to_string()).unwrap(), p);
        assert!(DiffOp::parse(&c, m, "D<1>").is_err());
        assert!(DiffOp::parse(&c, m, "x +").is_err());
    }

    #[test]
    fn mismatched_levels_rejected() {
        let c = chart(3);
        let a = DiffOp::one(&c, Level::Finite(0));
        let b = DiffOp::one(&c, Level::Finite(1));
        assert_eq!(a.mul(&b), Err(Error::LevelMismatch(0, 1)));
    }
}
