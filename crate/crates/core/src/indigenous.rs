//! Indigenous and affine-indigenous candidates: a module with a marked line
//! `O s`, optionally split by a row vector `delta` with `delta . s = 1`.

use std::sync::Arc;

use crate::chart::{Chart, RingElem};
use crate::dmod::{DMod, Validation};
use crate::error::{Error, Result};
use crate::linalg::{dot, unit_vector, zero_vector, Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndigenousCandidate {
    module: DMod,
    line: Vector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineIndigenousCandidate {
    base: IndigenousCandidate,
    delta: Vector,
}

/// Outcome of the bounded unit-gauge search in [`IndigenousCandidate::is_normalized`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// The determinant matches `theta` after gauging by the monomial `x^gauge`.
    Normalized { gauge: Vec<i64> },
    NotNormalized,
    /// No gauge found within the bound, which was too small to be exhaustive.
    Inconclusive { bound: u64 },
}

fn check_vector(module: &DMod, v: &[RingElem], what: &str) -> Result<()> {
    if v.len() != module.rank() {
        return Err(Error::DimensionMismatch(format!("{what} has length {} for rank {}", v.len(), module.rank())));
    }
    if v.iter().any(|e| e.chart() != module.chart()) {
        return Err(Error::ChartMismatch);
    }
    Ok(())
}

impl IndigenousCandidate {
    pub fn new(module: DMod, line: Vector) -> Result<Self> {
        check_vector(&module, &line, "line")?;
        if !line.iter().any(RingElem::is_unit) {
            return Err(Error::Precondition("the line generator needs a unit coordinate".into()));
        }
        Ok(IndigenousCandidate { module, line })
    }

    pub fn module(&self) -> &DMod {
        &self.module
    }

    pub fn line(&self) -> &[RingElem] {
        &self.line
    }

    /// Columns `s, D_1 s, ..., D_n s` (the generators `D_i<1>`).
    pub fn ks_matrix(&self) -> Result<Matrix> {
        let n = self.module.chart().nvars();
        if self.module.rank() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "rank {} on a chart of dimension {n}; expected {}",
                self.module.rank(),
                n + 1
            )));
        }
        let mut cols = vec![self.line.clone()];
        for i in 0..n {
            cols.push(self.module.apply_generator(i, 0, &self.line)?);
        }
        Ok(Matrix::from_columns(self.module.chart(), n + 1, &cols))
    }

    fn require_valid(&self) -> Result<()> {
        match self.module.validate() {
            Validation::Valid => Ok(()),
            Validation::Violated { var, l, op, basis } => Err(Error::Invalid(format!(
                "relation for D_{var}<p^{l}> * D<{op:?}> fails on e_{basis}"
            ))),
        }
    }

    /// True iff the Kodaira-Spencer matrix has unit determinant.
    pub fn is_indigenous(&self) -> Result<bool> {
        self.require_valid()?;
        Ok(self.ks_matrix()?.det().is_unit())
    }

    /// Tensor the module and the line with a rank-one module.
    pub fn twist(&self, l: &DMod) -> Result<IndigenousCandidate> {
        if l.rank() != 1 {
            return Err(Error::DimensionMismatch("twisting module must have rank 1".into()));
        }
        Ok(IndigenousCandidate { module: self.module.tensor(l)?, line: self.line.clone() })
    }

    /// Compares `det` of the module with `theta` up to a monomial unit gauge
    /// `x^k`, `|k_i| <= bound`, in the Laurent variables. Gauging by `x^k`
    /// only depends on `k mod p^(m+1)`, so a bound of `(p^(m+1) - 1) / 2`
    /// already makes the search exhaustive; `None` picks that bound.
    pub fn is_normalized(&self, theta: &DMod, bound: Option<u64>) -> Result<Normalization> {
        if theta.rank() != 1 {
            return Err(Error::DimensionMismatch("theta must have rank 1".into()));
        }
        let det = self.module.det()?;
        if det.chart() != theta.chart() {
            return Err(Error::ChartMismatch);
        }
        if det.level() != theta.level() {
            return Err(Error::LevelMismatch(det.level_number(), theta.level_number()));
        }
        let chart = det.chart().clone();
        let full = (chart.p().pow(det.level_number() + 1) - 1) / 2;
        let bound = bound.unwrap_or(full);
        let span = bound.min(full) as i64;
        // 0, -1, 1, -2, 2, ...
        let order: Vec<i64> = (0..=span).flat_map(|k| if k == 0 { vec![0] } else { vec![-k, k] }).collect();
        let mut gauges = vec![Vec::new()];
        for i in 0..chart.nvars() {
            let choices = if chart.is_laurent(i) { order.clone() } else { vec![0] };
            gauges = gauges
                .into_iter()
                .flat_map(|prefix: Vec<i64>| {
                    choices.iter().map(move |&k| {
                        let mut v = prefix.clone();
                        v.push(k);
                        v
                    })
                })
                .collect();
        }
        gauges.sort_by_key(|k| k.iter().map(|e| e.abs()).sum::<i64>());
        for k in gauges {
            let u = RingElem::monomial(&chart, k.clone(), 1)?;
            if det.gauge(&Matrix::scalar(&chart, 1, &u))? == *theta {
                return Ok(Normalization::Normalized { gauge: k });
            }
        }
        if bound >= full || !chart.has_laurent() {
            Ok(Normalization::NotNormalized)
        } else {
            Ok(Normalization::Inconclusive { bound })
        }
    }
}

impl AffineIndigenousCandidate {
    pub fn new(module: DMod, line: Vector, delta: Vector) -> Result<Self> {
        let base = IndigenousCandidate::new(module, line)?;
        check_vector(&base.module, &delta, "delta")?;
        Ok(AffineIndigenousCandidate { base, delta })
    }

    /// `O^(n+1)` with the trivial action of level `n_level - 1`,
    /// `s = (1, t_1, ..., t_n)` and `delta` the first projection.
    pub fn trivial_on_affine_chart(chart: &Arc<Chart>, n_level: u32) -> Result<Self> {
        if n_level == 0 {
            return Err(Error::Precondition("N must be positive".into()));
        }
        let n = chart.nvars();
        let module = DMod::trivial(chart, n_level - 1, n + 1);
        let mut line = vec![RingElem::one(chart)];
        line.extend((0..n).map(|i| RingElem::var(chart, i)));
        Self::new(module, line, unit_vector(chart, n + 1, 0))
    }

    pub fn candidate(&self) -> &IndigenousCandidate {
        &self.base
    }

    pub fn module(&self) -> &DMod {
        &self.base.module
    }

    pub fn line(&self) -> &[RingElem] {
        &self.base.line
    }

    pub fn delta(&self) -> &[RingElem] {
        &self.delta
    }

    fn check_split(&self) -> Result<()> {
        let chart = self.base.module.chart();
        if dot(&self.delta, &self.base.line) != RingElem::one(chart) {
            return Err(Error::SplitViolation);
        }
        Ok(())
    }

    /// `Ker(delta)` is stable under every generator. Checked on the
    /// generating set `e_j - delta_j s`.
    pub fn affine_check(&self) -> Result<bool> {
        self.check_split()?;
        if !self.base.is_indigenous()? {
            return Err(Error::Precondition("candidate is not indigenous".into()));
        }
        let m = &self.base.module;
        let chart = m.chart();
        for j in 0..m.rank() {
            let mut k = unit_vector(chart, m.rank(), j);
            for (kk, s) in k.iter_mut().zip(&self.base.line) {
                *kk = kk.sub(&s.mul(&self.delta[j]));
            }
            for i in 0..chart.nvars() {
                for l in 0..=m.level_number() {
                    let w = m.apply_generator(i, l, &k)?;
                    if !dot(&self.delta, &w).is_zero() {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Twist by a rank-one module; `s` and `delta` keep their coordinates.
    pub fn twist(&self, l: &DMod) -> Result<AffineIndigenousCandidate> {
        Ok(AffineIndigenousCandidate { base: self.base.twist(l)?, delta: self.delta.clone() })
    }

    /// Frame `s, v_1, ..., v_n` with `v_j` a basis of `Ker(delta)` built
    /// from the first unit coordinate of `delta`.
    pub fn adapted_frame(&self) -> Result<Matrix> {
        self.check_split()?;
        let m = &self.base.module;
        let chart = m.chart();
        let r = m.rank();
        let j0 = self
            .delta
            .iter()
            .position(RingElem::is_unit)
            .ok_or_else(|| Error::Precondition("delta has no unit coordinate".into()))?;
        let inv = self.delta[j0].inverse().expect("unit");
        let mut cols = vec![self.base.line.clone()];
        for j in (0..r).filter(|&j| j != j0) {
            let mut v = zero_vector(chart, r);
            v[j] = RingElem::one(chart);
            v[j0] = self.delta[j].mul(&inv).neg();
            cols.push(v);
        }
        Ok(Matrix::from_columns(chart, r, &cols))
    }

    /// The module rewritten in [`Self::adapted_frame`]; equal adapted forms
    /// mean isomorphic quadruples.
    pub fn adapted_form(&self) -> Result<DMod> {
        self.base.module.gauge(&self.adapted_frame()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::OneForm;

    #[test]
    fn trivial_candidate_on_the_line() {
        let c = Chart::polynomial(3, &["t"]).unwrap();
        let cand = AffineIndigenousCandidate::trivial_on_affine_chart(&c, 1).unwrap();
        let ks = cand.candidate().ks_matrix().unwrap();
        let expected = Matrix::from_rows(
            &c,
            vec![vec![RingElem::one(&c), RingElem::zero(&c)], vec![c.parse("t").unwrap(), RingElem::one(&c)]],
        )
        .unwrap();
        assert_eq!(ks, expected);
        assert!(cand.candidate().is_indigenous().unwrap());
        assert!(cand.affine_check().unwrap());
        assert!(cand.module().is_dormant().unwrap());
    }

    #[test]
    fn degenerate_line() {
        let c = Chart::polynomial(3, &["t"]).unwrap();
        let cand = IndigenousCandidate::new(DMod::trivial(&c, 0, 2), unit_vector(&c, 2, 0)).unwrap();
        assert_eq!(cand.ks_matrix().unwrap().det(), RingElem::zero(&c));
        assert!(!cand.is_indigenous().unwrap());
    }

    #[test]
    fn second_projection_is_not_a_splitting() {
        let c = Chart::polynomial(3, &["t"]).unwrap();
        let cand = AffineIndigenousCandidate::trivial_on_affine_chart(&c, 1).unwrap();
        let bad = AffineIndigenousCandidate::new(cand.module().clone(), cand.line().to_vec(), unit_vector(&c, 2, 1))
            .unwrap();
        assert_eq!(bad.affine_check(), Err(Error::SplitViolation));
    }

    #[test]
    fn plane_chart() {
        let c = Chart::polynomial(5, &["t1", "t2"]).unwrap();
        let cand = AffineIndigenousCandidate::trivial_on_affine_chart(&c, 1).unwrap();
        let det = cand.candidate().ks_matrix().unwrap().det();
        assert!(det == RingElem::one(&c) || det == RingElem::constant(&c, -1));
        assert!(cand.affine_check().unwrap());
    }

    #[test]
    fn twisting_and_normalization() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        let cand = AffineIndigenousCandidate::trivial_on_affine_chart(&c, 1).unwrap();
        let triv = DMod::trivial(&c, 0, 1);
        assert_eq!(cand.twist(&triv).unwrap(), cand);
        let l = DMod::invertible_from_form(&OneForm::new(vec![c.parse("x^-1").unwrap()]).unwrap());
        let tw = cand.twist(&l).unwrap();
        assert!(tw.candidate().is_indigenous().unwrap());
        assert!(tw.affine_check().unwrap());
        let back = tw.twist(&l.dual().unwrap()).unwrap();
        assert!(back.candidate().is_indigenous().unwrap());
        assert!(back.affine_check().unwrap());

        let base = cand.candidate();
        assert_eq!(base.is_normalized(&triv, None).unwrap(), Normalization::Normalized { gauge: vec![0] });
        // det picks up 2 dx/x, which the unit x gauges away
        let twisted = tw.candidate();
        assert_eq!(twisted.module().det().unwrap(), DMod::invertible_from_form(&OneForm::new(vec![c.parse("2*x^-1").unwrap()]).unwrap()));
        assert_eq!(twisted.is_normalized(&triv, None).unwrap(), Normalization::Normalized { gauge: vec![1] });
        let own = twisted.module().det().unwrap();
        assert_eq!(twisted.is_normalized(&own, None).unwrap(), Normalization::Normalized { gauge: vec![0] });
        assert_eq!(twisted.is_normalized(&triv, Some(0)).unwrap(), Normalization::Inconclusive { bound: 0 });
        let p = Chart::polynomial(3, &["x"]).unwrap();
        let theta = DMod::invertible_from_form(&OneForm::new(vec![p.parse("1").unwrap()]).unwrap());
        let pc = AffineIndigenousCandidate::trivial_on_affine_chart(&p, 1).unwrap();
        assert_eq!(pc.candidate().is_normalized(&theta, None).unwrap(), Normalization::NotNormalized);
    }
}
