//! Affine charts over `F_p`: polynomial rings in named variables, some of
//! which may be inverted (Laurent variables).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::arith::{generalized_binomial, Fp};
use crate::error::{Error, Result};

/// A chart `F_p[x_1, ..., x_n]` with selected variables inverted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chart {
    fp: Fp,
    vars: Vec<String>,
    laurent: Vec<bool>,
}

impl Chart {
    pub fn new(fp: Fp, vars: Vec<String>, laurent: Vec<bool>) -> Result<Arc<Chart>> {
        if vars.is_empty() {
            return Err(Error::Precondition("a chart needs at least one variable".into()));
        }
        if vars.len() != laurent.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} variables but {} laurent flags",
                vars.len(),
                laurent.len()
            )));
        }
        for (i, v) in vars.iter().enumerate() {
            if !is_identifier(v) {
                return Err(Error::Parse(format!("bad variable name {v:?}")));
            }
            if vars[..i].contains(v) {
                return Err(Error::Precondition(format!("duplicate variable {v}")));
            }
        }
        Ok(Arc::new(Chart { fp, vars, laurent }))
    }

    /// Polynomial chart in the given variables.
    pub fn polynomial(p: u64, vars: &[&str]) -> Result<Arc<Chart>> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let n = vars.len();
        Chart::new(Fp::new(p)?, vars, vec![false; n])
    }

    /// Chart with every variable inverted.
    pub fn laurent(p: u64, vars: &[&str]) -> Result<Arc<Chart>> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let n = vars.len();
        Chart::new(Fp::new(p)?, vars, vec![true; n])
    }

    pub fn fp(&self) -> Fp {
        self.fp
    }

    pub fn p(&self) -> u64 {
        self.fp.p()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn laurent_flags(&self) -> &[bool] {
        &self.laurent
    }

    pub fn is_laurent(&self, i: usize) -> bool {
        self.laurent[i]
    }

    pub fn has_laurent(&self) -> bool {
        self.laurent.iter().any(|&b| b)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Same chart with the variables renamed.
    pub fn renamed(&self, vars: Vec<String>) -> Result<Arc<Chart>> {
        Chart::new(self.fp, vars, self.laurent.clone())
    }

    pub fn parse(self: &Arc<Self>, src: &str) -> Result<RingElem> {
        Parser::new(self, src)?.parse_all()
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub type Exponent = Vec<i64>;

/// An element of a chart ring, stored as a sparse map from exponent vectors
/// to nonzero coefficients.
#[derive(Clone, Debug)]
pub struct RingElem {
    chart: Arc<Chart>,
    terms: BTreeMap<Exponent, u64>,
}

impl PartialEq for RingElem {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && (Arc::ptr_eq(&self.chart, &other.chart) || self.chart == other.chart)
    }
}

impl Eq for RingElem {}

impl RingElem {
    pub fn zero(chart: &Arc<Chart>) -> Self {
        RingElem { chart: chart.clone(), terms: BTreeMap::new() }
    }

    pub fn one(chart: &Arc<Chart>) -> Self {
        Self::constant(chart, 1)
    }

    pub fn constant(chart: &Arc<Chart>, c: i64) -> Self {
        let c = chart.fp.reduce(c);
        let mut e = Self::zero(chart);
        if c != 0 {
            e.terms.insert(vec![0; chart.nvars()], c);
        }
        e
    }

    pub fn var(chart: &Arc<Chart>, i: usize) -> Self {
        let mut exp = vec![0; chart.nvars()];
        exp[i] = 1;
        let mut e = Self::zero(chart);
        e.terms.insert(exp, 1 % chart.p());
        e
    }

    /// `c * x^exp`; fails on a negative exponent in a non-Laurent variable.
    pub fn monomial(chart: &Arc<Chart>, exp: Exponent, c: i64) -> Result<Self> {
        if exp.len() != chart.nvars() {
            return Err(Error::DimensionMismatch("exponent length".into()));
        }
        if exp.iter().zip(&chart.laurent).any(|(&e, &l)| e < 0 && !l) {
            return Err(Error::LaurentNotSupported);
        }
        let mut e = Self::zero(chart);
        e.add_term(exp, chart.fp.reduce(c));
        Ok(e)
    }

    pub(crate) fn from_terms(chart: &Arc<Chart>, terms: BTreeMap<Exponent, u64>) -> Self {
        let mut e = Self::zero(chart);
        for (k, v) in terms {
            e.add_term(k, v);
        }
        e
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, u64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &[i64]) -> u64 {
        self.terms.get(exp).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn same_chart(&self, other: &RingElem) -> bool {
        Arc::ptr_eq(&self.chart, &other.chart) || self.chart == other.chart
    }

    /// The value if the element is constant.
    pub fn as_constant(&self) -> Option<u64> {
        match self.terms.len() {
            0 => Some(0),
            1 => {
                let (k, &v) = self.terms.iter().next().unwrap();
                k.iter().all(|&e| e == 0).then_some(v)
            }
            _ => None,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|&e| e >= 0))
    }

    pub(crate) fn add_term(&mut self, exp: Exponent, c: u64) {
        if c == 0 {
            return;
        }
        let fp = self.chart.fp;
        match self.terms.entry(exp) {
            Entry::Occupied(mut o) => {
                let v = fp.add(*o.get(), c);
                if v == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
        }
    }

    pub fn add(&self, other: &RingElem) -> RingElem {
        debug_assert!(self.same_chart(other));
        let mut out = self.clone();
        for (k, &v) in &other.terms {
            out.add_term(k.clone(), v);
        }
        out
    }

    pub fn sub(&self, other: &RingElem) -> RingElem {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RingElem {
        let fp = self.chart.fp;
        RingElem {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(k, &v)| (k.clone(), fp.neg(v))).collect(),
        }
    }

    pub fn scale(&self, c: u64) -> RingElem {
        let fp = self.chart.fp;
        let c = c % fp.p();
        if c == 0 {
            return RingElem::zero(&self.chart);
        }
        RingElem {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(k, &v)| (k.clone(), fp.mul(v, c))).collect(),
        }
    }

    pub fn mul(&self, other: &RingElem) -> RingElem {
        debug_assert!(self.same_chart(other));
        let fp = self.chart.fp;
        let mut acc: BTreeMap<Exponent, u64> = BTreeMap::new();
        for (a, &u) in &self.terms {
            for (b, &v) in &other.terms {
                let e: Exponent = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let slot = acc.entry(e).or_insert(0);
                *slot = fp.add(*slot, fp.mul(u, v));
            }
        }
        acc.retain(|_, v| *v != 0);
        RingElem { chart: self.chart.clone(), terms: acc }
    }

    /// Multiplication by `c * x^exp`.
    pub fn mul_monomial(&self, exp: &[i64], c: u64) -> RingElem {
        let fp = self.chart.fp;
        let c = c % fp.p();
        if c == 0 {
            return RingElem::zero(&self.chart);
        }
        RingElem {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, &v)| (k.iter().zip(exp).map(|(x, y)| x + y).collect(), fp.mul(v, c)))
                .collect(),
        }
    }

    pub fn pow(&self, mut n: u64) -> RingElem {
        let mut base = self.clone();
        let mut acc = RingElem::one(&self.chart);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Inverse if the element is a unit, i.e. a nonzero constant times a
    /// monomial in Laurent variables.
    pub fn inverse(&self) -> Option<RingElem> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, &v) = self.terms.iter().next().unwrap();
        if k.iter().zip(&self.chart.laurent).any(|(&e, &l)| e != 0 && !l) {
            return None;
        }
        let inv = self.chart.fp.inv(v)?;
        let mut terms = BTreeMap::new();
        terms.insert(k.iter().map(|e| -e).collect(), inv);
        Some(RingElem { chart: self.chart.clone(), terms })
    }

    pub fn is_unit(&self) -> bool {
        self.inverse().is_some()
    }

    /// Partial derivative in the `i`-th variable.
    pub fn derive(&self, i: usize) -> RingElem {
        let fp = self.chart.fp;
        let mut out = RingElem::zero(&self.chart);
        for (k, &v) in &self.terms {
            let c = fp.mul(v, fp.reduce(k[i]));
            if c != 0 {
                let mut e = k.clone();
                e[i] -= 1;
                out.add_term(e, c);
            }
        }
        out
    }

    /// The divided-power derivative `(d/dx_i)^r / r!`.
    pub fn divided_derivative(&self, i: usize, r: u64) -> RingElem {
        let fp = self.chart.fp;
        let mut out = RingElem::zero(&self.chart);
        for (k, &v) in &self.terms {
            let c = fp.mul(v, generalized_binomial(k[i], r, fp));
            if c != 0 {
                let mut e = k.clone();
                e[i] -= r as i64;
                out.add_term(e, c);
            }
        }
        out
    }

    /// Substitutes `x_i -> x_i^q` in every variable.
    pub fn frobenius(&self, q: u64) -> RingElem {
        RingElem {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, &v)| (k.iter().map(|e| e * q as i64).collect(), v))
                .collect(),
        }
    }

    /// Substitutes `x_i -> x_i^(1/q)`; `None` if some exponent is not divisible by `q`.
    pub fn frobenius_root(&self, q: u64) -> Option<RingElem> {
        let q = q as i64;
        let mut terms = BTreeMap::new();
        for (k, &v) in &self.terms {
            if k.iter().any(|e| e.rem_euclid(q) != 0) {
                return None;
            }
            terms.insert(k.iter().map(|e| e / q).collect(), v);
        }
        Some(RingElem { chart: self.chart.clone(), terms })
    }

    /// Reinterprets the element on another chart with the same number of variables.
    pub fn rebind(&self, chart: &Arc<Chart>) -> RingElem {
        assert_eq!(chart.nvars(), self.chart.nvars(), "rebind needs equal dimension");
        RingElem { chart: chart.clone(), terms: self.terms.clone() }
    }

    /// Smallest exponent of variable `i` (0 for the zero element).
    pub fn min_exponent(&self, i: usize) -> i64 {
        self.terms.keys().map(|k| k[i]).min().unwrap_or(0)
    }

    pub fn max_exponent(&self, i: usize) -> i64 {
        self.terms.keys().map(|k| k[i]).max().unwrap_or(0)
    }

    /// Total degree; `None` for zero.
    pub fn total_degree(&self) -> Option<i64> {
        self.terms.keys().map(|k| k.iter().sum()).max()
    }

    /// Keeps only the terms satisfying `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&[i64]) -> bool) -> RingElem {
        RingElem {
            chart: self.chart.clone(),
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, &v)| (k.clone(), v)).collect(),
        }
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors = Vec::new();
            for (i, &e) in k.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.chart.vars[i].clone()),
                    _ => factors.push(format!("{}^{}", self.chart.vars[i], e)),
                }
            }
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else if c == 1 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{c}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Decomposes a polynomial as `f = sum_a g_a(x^(p^N)) x^a` with `0 <= a_i < p^N`.
/// Each `g_a` is returned in the variables `y_i = x_i^(p^N)`, on the same chart.
pub fn frobenius_decompose(f: &RingElem, n: u32) -> Result<BTreeMap<Vec<u64>, RingElem>> {
    if !f.is_polynomial() {
        return Err(Error::LaurentNotSupported);
    }
    let q = f.chart.p().pow(n) as i64;
    let mut out: BTreeMap<Vec<u64>, RingElem> = BTreeMap::new();
    for (k, &v) in &f.terms {
        let alpha: Vec<u64> = k.iter().map(|e| (e % q) as u64).collect();
        let y: Exponent = k.iter().map(|e| e / q).collect();
        out.entry(alpha).or_insert_with(|| RingElem::zero(&f.chart)).add_term(y, v);
    }
    Ok(out)
}

/// Inverse of [`frobenius_decompose`].
pub fn reassemble(chart: &Arc<Chart>, parts: &BTreeMap<Vec<u64>, RingElem>, n: u32) -> RingElem {
    let q = chart.p().pow(n);
    let mut out = RingElem::zero(chart);
    for (alpha, g) in parts {
        let shift: Vec<i64> = alpha.iter().map(|&a| a as i64).collect();
        out = out.add(&g.frobenius(q).mul_monomial(&shift, 1));
    }
    out
}

/// A 1-form `sum_i f_i dx_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneForm {
    comps: Vec<RingElem>,
}

impl OneForm {
    pub fn new(comps: Vec<RingElem>) -> Result<Self> {
        let first = comps.first().ok_or_else(|| Error::DimensionMismatch("empty form".into()))?;
        if comps.len() != first.chart.nvars() || comps.iter().any(|c| !c.same_chart(first)) {
            return Err(Error::DimensionMismatch("form components do not match the chart".into()));
        }
        Ok(OneForm { comps })
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        OneForm { comps: vec![RingElem::zero(chart); chart.nvars()] }
    }

    /// `df`.
    pub fn d(f: &RingElem) -> Self {
        OneForm { comps: (0..f.chart.nvars()).map(|i| f.derive(i)).collect() }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.comps[0].chart()
    }

    pub fn comps(&self) -> &[RingElem] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &RingElem {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(RingElem::is_zero)
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale_by(&self, g: &RingElem) -> OneForm {
        OneForm { comps: self.comps.iter().map(|a| a.mul(g)).collect() }
    }

    /// The Cartier operator on a univariate chart:
    /// `C(sum a_i x^i dx) = sum_{i = -1 mod p} a_i x^((i+1)/p - 1) dx`.
    pub fn cartier(&self) -> Result<OneForm> {
        if self.comps.len() != 1 {
            return Err(Error::MultivariateNotSupported);
        }
        let a = &self.comps[0];
        let p = a.chart.p() as i64;
        let mut out = RingElem::zero(&a.chart);
        for (k, &v) in &a.terms {
            if (k[0] + 1).rem_euclid(p) == 0 {
                out.add_term(vec![(k[0] + 1) / p - 1], v);
            }
        }
        Ok(OneForm { comps: vec![out] })
    }

    pub fn cartier_invariant(&self) -> Result<bool> {
        Ok(self.cartier()? == *self)
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c})*d{}", c.chart.vars[i]))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Int(chars[start..i].iter().collect()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*^()".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    chart: &'a Arc<Chart>,
    toks: Vec<Tok>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(chart: &'a Arc<Chart>, src: &str) -> Result<Self> {
        Ok(Parser { chart, toks: tokenize(src)?, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<RingElem> {
        if self.toks.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let e = self.expr()?;
        if self.pos != self.toks.len() {
            return Err(Error::Parse(format!("trailing input at token {:?}", self.toks[self.pos])));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<RingElem> {
        let mut acc = if self.eat('-') {
            self.term()?.neg()
        } else {
            self.eat('+');
            self.term()?
        };
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RingElem> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<RingElem> {
        let base = match self.toks.get(self.pos).cloned() {
            Some(Tok::Int(s)) => {
                self.pos += 1;
                let fp = self.chart.fp;
                let r = s.bytes().fold(0u64, |acc, d| (acc * 10 + (d - b'0') as u64) % fp.p());
                RingElem::constant(self.chart, r as i64)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let i = self
                    .chart
                    .var_index(&name)
                    .ok_or_else(|| Error::Parse(format!("unknown variable {name}")))?;
                RingElem::var(self.chart, i)
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                e
            }
            other => return Err(Error::Parse(format!("unexpected token {other:?}"))),
        };
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        let e = match self.toks.get(self.pos).cloned() {
            Some(Tok::Int(s)) => {
                self.pos += 1;
                s.parse::<u64>().map_err(|_| Error::Parse(format!("exponent {s} too large")))?
            }
            other => return Err(Error::Parse(format!("expected exponent, found {other:?}"))),
        };
        if negative {
            let inv = base.inverse().ok_or(Error::LaurentNotSupported)?;
            Ok(inv.pow(e))
        } else {
            Ok(base.pow(e))
        }
    }
}
