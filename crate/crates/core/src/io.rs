//! JSON file formats for modules, candidates and Tango generators.
//!
//! A module file looks like
//! `{"p": 3, "level": 1, "vars": ["x"], "laurent": [true], "rank": 1,
//!   "actions": {"x:0": [["x^-1"]], "x:1": [["0"]]}}`,
//! where `"x:l"` holds the matrix of `D<p^l>` in that variable. Missing
//! entries are zero. Candidate files add `"line"` and, for the affine
//! variant, `"delta"`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::Fp;
use crate::chart::{Chart, RingElem};
use crate::dmod::DMod;
use crate::error::{Error, Result};
use crate::indigenous::{AffineIndigenousCandidate, IndigenousCandidate};
use crate::linalg::{Matrix, Vector};
use crate::tango::TangoCandidate;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub p: u64,
    pub vars: Vec<String>,
    #[serde(default)]
    pub laurent: Vec<bool>,
}

impl ChartSpec {
    pub fn build(&self) -> Result<Arc<Chart>> {
        let flags = if self.laurent.is_empty() { vec![false; self.vars.len()] } else { self.laurent.clone() };
        Chart::new(Fp::new(self.p)?, self.vars.clone(), flags)
    }

    pub fn of(chart: &Chart) -> Self {
        ChartSpec { p: chart.p(), vars: chart.vars().to_vec(), laurent: chart.laurent_flags().to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleFile {
    #[serde(flatten)]
    pub chart: ChartSpec,
    pub level: u32,
    pub rank: usize,
    #[serde(default)]
    pub actions: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateFile {
    #[serde(flatten)]
    pub module: ModuleFile,
    pub line: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangoFile {
    #[serde(flatten)]
    pub chart: ChartSpec,
    #[serde(rename = "N")]
    pub level: u32,
    pub generators: Vec<String>,
}

fn parse_matrix(chart: &Arc<Chart>, rows: &[Vec<String>], rank: usize) -> Result<Matrix> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|s| chart.parse(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let m = Matrix::from_rows(chart, rows)?;
    if m.rows() != rank || m.cols() != rank {
        return Err(Error::DimensionMismatch(format!("expected {rank}x{rank}, got {}x{}", m.rows(), m.cols())));
    }
    Ok(m)
}

pub fn parse_vector(chart: &Arc<Chart>, v: &[String]) -> Result<Vector> {
    v.iter().map(|s| chart.parse(s)).collect()
}

pub fn render_vector(v: &[RingElem]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

pub fn render_matrix(m: &Matrix) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| render_vector(r)).collect()
}

impl ModuleFile {
    pub fn build(&self) -> Result<DMod> {
        let chart = self.chart.build()?;
        self.build_on(&chart)
    }

    fn build_on(&self, chart: &Arc<Chart>) -> Result<DMod> {
        let mut gens: Vec<Vec<Matrix>> =
            vec![vec![Matrix::zeros(chart, self.rank, self.rank); self.level as usize + 1]; chart.nvars()];
        for (key, rows) in &self.actions {
            let (var, l) = key
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("action key {key:?} is not of the form var:l")))?;
            let i = chart.var_index(var).ok_or_else(|| Error::Parse(format!("unknown variable {var:?}")))?;
            let l: usize = l.trim().parse().map_err(|_| Error::Parse(format!("bad level index in {key:?}")))?;
            if l > self.level as usize {
                return Err(Error::LevelMismatch(l as u32, self.level));
            }
            gens[i][l] = parse_matrix(chart, rows, self.rank)?;
        }
        DMod::new(chart, self.level, self.rank, gens)
    }

    pub fn of(m: &DMod) -> Self {
        let chart = m.chart();
        let mut actions = BTreeMap::new();
        for (i, per_var) in m.generator_matrices().iter().enumerate() {
            for (l, mat) in per_var.iter().enumerate() {
                if !mat.is_zero() {
                    actions.insert(format!("{}:{l}", chart.vars()[i]), render_matrix(mat));
                }
            }
        }
        ModuleFile { chart: ChartSpec::of(chart), level: m.level_number(), rank: m.rank(), actions }
    }
}

impl CandidateFile {
    pub fn build(&self) -> Result<IndigenousCandidate> {
        let module = self.module.build()?;
        let line = parse_vector(module.chart(), &self.line)?;
        IndigenousCandidate::new(module, line)
    }

    pub fn build_affine(&self) -> Result<AffineIndigenousCandidate> {
        let module = self.module.build()?;
        let chart = module.chart().clone();
        let line = parse_vector(&chart, &self.line)?;
        let delta = self.delta.as_ref().ok_or_else(|| Error::Parse("affine candidate needs \"delta\"".into()))?;
        AffineIndigenousCandidate::new(module, line, parse_vector(&chart, delta)?)
    }

    pub fn of(c: &IndigenousCandidate) -> Self {
        CandidateFile { module: ModuleFile::of(c.module()), line: render_vector(c.line()), delta: None }
    }

    pub fn of_affine(c: &AffineIndigenousCandidate) -> Self {
        CandidateFile {
            module: ModuleFile::of(c.module()),
            line: render_vector(c.line()),
            delta: Some(render_vector(c.delta())),
        }
    }
}

impl TangoFile {
    pub fn build(&self) -> Result<TangoCandidate> {
        let chart = self.chart.build()?;
        let reps = parse_vector(&chart, &self.generators)?;
        TangoCandidate::new(&chart, self.level, &reps)
    }

    pub fn of(t: &TangoCandidate) -> Self {
        TangoFile {
            chart: ChartSpec::of(t.chart()),
            level: t.level(),
            generators: t.generators().iter().map(|g| g.rep().to_string()).collect(),
        }
    }
}

pub fn from_json<T: for<'de> Deserialize<'de>>(src: &str) -> Result<T> {
    serde_json::from_str(src).map_err(|e| Error::Parse(e.to_string()))
}
