//! The chart model of `B^(N) = O / O^(p^N)`, Tango structures, dual affine
//! connections, and the bundle `A_N = F^* F_* O` with its filtration.

use std::sync::Arc;

use crate::arith::{q_factorial, Level};
use crate::chart::{Chart, OneForm, RingElem};
use crate::diffop::DiffOp;
use crate::dmod::DMod;
use crate::error::{Error, Result};
use crate::indigenous::AffineIndigenousCandidate;
use crate::linalg::{unit_vector, Matrix, Vector};

/// A class in `B^(N)`, stored by the representative without monomials whose
/// exponent vector is divisible by `p^N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BSection {
    level: u32,
    rep: RingElem,
}

impl BSection {
    pub fn rep(&self) -> &RingElem {
        &self.rep
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_zero(&self) -> bool {
        self.rep.is_zero()
    }
}

fn pn(chart: &Chart, n: u32) -> i64 {
    chart.p().pow(n) as i64
}

pub fn b_project(f: &RingElem, n: u32) -> Result<BSection> {
    if !f.is_polynomial() {
        return Err(Error::LaurentNotSupported);
    }
    let q = pn(f.chart(), n);
    let rep = f.filter_terms(|e| e.iter().any(|x| x % q != 0));
    Ok(BSection { level: n, rep })
}

/// The differential, well defined on classes since `d` kills `p^N`-th powers.
pub fn gamma(b: &BSection) -> OneForm {
    OneForm::d(&b.rep)
}

/// `n` classes in `B^(N)` on an `n`-dimensional chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangoCandidate {
    chart: Arc<Chart>,
    level: u32,
    gens: Vec<BSection>,
}

/// Verdict of [`dual_affine_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DualVerdict {
    Dual,
    /// A horizontal section whose form is not killed by the Cartier operator.
    NotCartierKilled { section: String },
    NotDormant { stage: usize, reason: String },
}

impl TangoCandidate {
    pub fn new(chart: &Arc<Chart>, level: u32, reps: &[RingElem]) -> Result<Self> {
        if level == 0 {
            return Err(Error::Precondition("N must be positive".into()));
        }
        if reps.len() != chart.nvars() {
            return Err(Error::DimensionMismatch(format!(
                "{} generators on a chart of dimension {}",
                reps.len(),
                chart.nvars()
            )));
        }
        let gens = reps
            .iter()
            .map(|f| {
                if f.chart() != chart {
                    return Err(Error::ChartMismatch);
                }
                b_project(f, level)
            })
            .collect::<Result<Vec<_>>>()?;
        if gens.iter().any(BSection::is_zero) {
            return Err(Error::Precondition("Tango generators must be nonzero in B^(N)".into()));
        }
        Ok(TangoCandidate { chart: chart.clone(), level, gens })
    }

    pub fn parse(chart: &Arc<Chart>, level: u32, gens: &[&str]) -> Result<Self> {
        let reps = gens.iter().map(|s| chart.parse(s)).collect::<Result<Vec<_>>>()?;
        Self::new(chart, level, &reps)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn generators(&self) -> &[BSection] {
        &self.gens
    }

    pub fn jacobian(&self) -> Matrix {
        let n = self.chart.nvars();
        let rows = self.gens.iter().map(|g| (0..n).map(|j| g.rep.derive(j)).collect()).collect();
        Matrix::from_rows(&self.chart, rows).expect("square Jacobian")
    }

    /// The Jacobian of the representatives has unit determinant.
    pub fn verify(&self) -> bool {
        self.jacobian().det().is_unit()
    }

    /// Image in `B^(level)` for a smaller level.
    pub fn truncate(&self, level: u32) -> Result<TangoCandidate> {
        if level == 0 || level >= self.level {
            return Err(Error::Precondition(format!("truncation needs 0 < {level} < {}", self.level)));
        }
        if !self.verify() {
            return Err(Error::Precondition("truncating a non-Tango candidate".into()));
        }
        let reps: Vec<RingElem> = self.gens.iter().map(|g| g.rep.clone()).collect();
        TangoCandidate::new(&self.chart, level, &reps)
    }

    /// Generators of both factors on the product chart.
    pub fn product(&self, other: &TangoCandidate) -> Result<TangoCandidate> {
        if self.chart.p() != other.chart.p() {
            return Err(Error::Precondition("factors live over different primes".into()));
        }
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        let mut vars = self.chart.vars().to_vec();
        vars.extend(other.chart.vars().iter().cloned());
        let mut flags = self.chart.laurent_flags().to_vec();
        flags.extend(other.chart.laurent_flags().iter().copied());
        let chart = Chart::new(self.chart.fp(), vars, flags)?;
        let n1 = self.chart.nvars();
        let n = chart.nvars();
        let embed = |f: &RingElem, offset: usize| {
            let terms = f.terms().map(|(e, c)| {
                let mut full = vec![0; n];
                full[offset..offset + e.len()].copy_from_slice(e);
                (full, c)
            });
            RingElem::from_terms(&chart, terms.collect())
        };
        let mut reps: Vec<RingElem> = self.gens.iter().map(|g| embed(&g.rep, 0)).collect();
        reps.extend(other.gens.iter().map(|g| embed(&g.rep, n1)));
        TangoCandidate::new(&chart, self.level, &reps)
    }

    /// The dormant affine-indigenous module attached to the structure: the
    /// dual of the Frobenius pullback of `O^(N) + sum O^(N) u_i`, with the
    /// evaluation line `s = (1, u_1, ..., u_n)` and the splitting dual to
    /// the inclusion of constants.
    pub fn to_module(&self) -> Result<AffineIndigenousCandidate> {
        if !self.verify() {
            return Err(Error::Precondition("candidate fails Tango verification".into()));
        }
        let n = self.chart.nvars();
        let module = DMod::trivial(&self.chart, self.level - 1, n + 1);
        let mut line = vec![RingElem::one(&self.chart)];
        line.extend(self.gens.iter().map(|g| g.rep.clone()));
        AffineIndigenousCandidate::new(module, line, unit_vector(&self.chart, n + 1, 0))
    }

    /// The rank-one action on `Omega = O dx` whose horizontal sections are
    /// `O^(p^N) du` (univariate).
    pub fn dual_connection(&self) -> Result<DMod> {
        if self.chart.nvars() != 1 {
            return Err(Error::MultivariateNotSupported);
        }
        let du = self.gens[0].rep.derive(0);
        let inv = du.inverse().ok_or(Error::NonUnit)?;
        DMod::frobenius_pullback(&self.chart, 1, self.level, &inv)
    }
}

/// Reads off the dual affine connection of a univariate affine-indigenous
/// candidate: the action on `Ker(delta)`, framed by
/// `k = D s - delta(D s) s`, then dualized.
pub fn extract_dual_connection(c: &AffineIndigenousCandidate) -> Result<DMod> {
    let m = c.module();
    let chart = m.chart();
    if chart.nvars() != 1 || m.rank() != 2 {
        return Err(Error::MultivariateNotSupported);
    }
    let s = c.line();
    let ds = m.apply_generator(0, 0, s)?;
    let coef = crate::linalg::dot(c.delta(), &ds);
    let k: Vector = ds.iter().zip(s).map(|(a, b)| a.sub(&b.mul(&coef))).collect();
    let frame = Matrix::from_columns(chart, 2, &[s.to_vec(), k.clone()]);
    let inv = frame.inverse().ok_or_else(|| Error::Precondition("candidate is not indigenous".into()))?;
    let mut mats = Vec::new();
    for l in 0..=m.level_number() {
        let w = inv.mul_vec(&m.apply_generator(0, l, &k)?);
        if !w[0].is_zero() {
            return Err(Error::Precondition("Ker(delta) is not stable".into()));
        }
        mats.push(Matrix::scalar(chart, 1, &w[1]));
    }
    DMod::new(chart, m.level_number(), 1, vec![mats])?.dual()
}

/// Whether a rank-one action on `Omega = O dx` is a dual affine connection:
/// dormant, with level-0 horizontal sections killed by the Cartier operator.
pub fn dual_affine_check(m: &DMod) -> Result<DualVerdict> {
    if m.chart().nvars() != 1 {
        return Err(Error::MultivariateNotSupported);
    }
    if m.rank() != 1 {
        return Err(Error::DimensionMismatch("a connection on Omega has rank 1".into()));
    }
    let chain = match m.dormancy() {
        Ok(chain) => chain,
        Err(Error::NotDormant { stage, reason }) => return Ok(DualVerdict::NotDormant { stage, reason }),
        Err(e) => return Err(e),
    };
    for v in chain[0].vectors() {
        let form = OneForm::new(vec![v[0].clone()])?;
        if !form.cartier()?.is_zero() {
            return Ok(DualVerdict::NotCartierKilled { section: form.to_string() });
        }
    }
    Ok(DualVerdict::Dual)
}

/// `F^* F_* O` on a univariate chart: rank `p^N`, basis `1 (x) x^a`, with the
/// canonical action of level `N - 1` (the basis is horizontal).
pub fn anl_module(chart: &Arc<Chart>, n: u32) -> Result<DMod> {
    if chart.nvars() != 1 {
        return Err(Error::MultivariateNotSupported);
    }
    if n == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    Ok(DMod::trivial(chart, n - 1, chart.p().pow(n) as usize))
}

/// The section `D = sum_a x^(p^N - 1 - a) (x) x^a`.
pub fn anl_generator(chart: &Arc<Chart>, n: u32) -> Result<Vector> {
    let q = pn(chart, n);
    (0..q).map(|a| RingElem::monomial(chart, vec![q - 1 - a], 1)).collect()
}

/// Columns `D^[j] (D)` for `j < p^N`, computed through the module action.
pub fn kappa_matrix(chart: &Arc<Chart>, n: u32) -> Result<Matrix> {
    let module = anl_module(chart, n)?;
    let d = anl_generator(chart, n)?;
    let level = Level::Finite(n - 1);
    let q = pn(chart, n) as u64;
    let fp = chart.fp();
    let mut cols = Vec::with_capacity(q as usize);
    for j in 0..q {
        // D^[j] = D<j> / q_j!, and q_j < p below p^N
        let inv = fp.inv(q_factorial(j, level, fp)).expect("q_j! is a unit below p^N");
        let op = DiffOp::basis(chart, level, vec![j]);
        cols.push(module.act(&op, &d)?.iter().map(|e| e.scale(inv)).collect());
    }
    Ok(Matrix::from_columns(chart, q as usize, &cols))
}

/// First failure found by [`filtration_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiltrationFailure {
    SingularKappa,
    /// `D<s>` applied to the generator `kappa_r` of `A^i` leaves `A^(i-j)`.
    Containment { i: u64, j: u64, r: u64 },
    /// The graded map `A^i / A^(i+1) -> Omega (x) A^(i-1) / A^i` is not an isomorphism.
    Graded { i: u64 },
}

/// Checks `D_j (A^i) in A^(i-j)` for all `0 <= j <= i <= p^N`, where
/// `A^i` is spanned by `kappa_0, ..., kappa_(p^N - 1 - i)`, and that the
/// graded pieces of the connection are isomorphisms for `i = 1, ..., p - 1`.
pub fn filtration_check(chart: &Arc<Chart>, n: u32) -> Result<Option<FiltrationFailure>> {
    let module = anl_module(chart, n)?;
    let k = kappa_matrix(chart, n)?;
    let Some(kinv) = k.inverse() else { return Ok(Some(FiltrationFailure::SingularKappa)) };
    let q = pn(chart, n) as u64;
    let level = Level::Finite(n - 1);
    // coordinates in the kappa basis of D<s> kappa_r
    let coords = |s: u64, r: u64| -> Result<Vector> {
        let op = DiffOp::basis(chart, level, vec![s]);
        Ok(kinv.mul_vec(&module.act(&op, &k.column(r as usize))?))
    };
    // D<s> for s < j lands in A^(i-s), inside A^(i-j), so s = j suffices
    for i in 0..q {
        for j in 0..=i {
            let top = q - 1 - (i - j);
            for r in 0..q - i {
                let c = coords(j, r)?;
                if c.iter().skip(top as usize + 1).any(|e| !e.is_zero()) {
                    return Ok(Some(FiltrationFailure::Containment { i, j, r }));
                }
            }
        }
    }
    for i in 1..chart.p().min(q) {
        let r = q - 1 - i;
        if !coords(1, r)?[(r + 1) as usize].is_unit() {
            return Ok(Some(FiltrationFailure::Graded { i }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(p: u64) -> Arc<Chart> {
        Chart::polynomial(p, &["t"]).unwrap()
    }

    #[test]
    fn projection_examples() {
        let c = line(3);
        assert_eq!(b_project(&c.parse("t - t^3").unwrap(), 1).unwrap().rep(), &c.parse("t").unwrap());
        assert!(b_project(&c.parse("t^9").unwrap(), 2).unwrap().is_zero());
        assert_eq!(b_project(&c.parse("t").unwrap(), 1).unwrap().rep(), &c.parse("t").unwrap());
    }

    #[test]
    fn gamma_examples() {
        let c = line(3);
        let g = |s: &str, n| gamma(&b_project(&c.parse(s).unwrap(), n).unwrap());
        assert_eq!(g("t", 1), OneForm::d(&c.parse("t").unwrap()));
        assert_eq!(g("t - t^3", 2).comp(0), &RingElem::one(&c));
        assert_eq!(g("t^2", 1).comp(0), &c.parse("2*t").unwrap());
    }

    #[test]
    fn verify_truncate_product() {
        let c = line(3);
        assert!(TangoCandidate::parse(&c, 2, &["t"]).unwrap().verify());
        assert!(!TangoCandidate::parse(&c, 1, &["t^2"]).unwrap().verify());
        let plane = Chart::polynomial(3, &["t1", "t2"]).unwrap();
        assert!(TangoCandidate::parse(&plane, 1, &["t1", "t2"]).unwrap().verify());

        let u = TangoCandidate::parse(&c, 2, &["t - t^3"]).unwrap();
        assert_eq!(u.truncate(1).unwrap(), TangoCandidate::parse(&c, 1, &["t"]).unwrap());

        let c1 = Chart::polynomial(3, &["t1"]).unwrap();
        let c2 = Chart::polynomial(3, &["t2"]).unwrap();
        let a = TangoCandidate::parse(&c1, 2, &["t1 - t1^3"]).unwrap();
        let b = TangoCandidate::parse(&c2, 2, &["t2"]).unwrap();
        let prod = a.product(&b).unwrap();
        assert!(prod.verify());
        assert_eq!(prod.truncate(1).unwrap(), a.truncate(1).unwrap().product(&b.truncate(1).unwrap()).unwrap());
        assert!(a.product(&a).is_err());
    }

    #[test]
    fn reconstruction() {
        let c = line(3);
        let triv = AffineIndigenousCandidate::trivial_on_affine_chart(&c, 1).unwrap();
        assert_eq!(TangoCandidate::parse(&c, 1, &["t"]).unwrap().to_module().unwrap(), triv);
        let u = TangoCandidate::parse(&c, 2, &["t - t^3"]).unwrap();
        let cand = u.to_module().unwrap();
        assert!(cand.candidate().is_indigenous().unwrap());
        assert!(cand.affine_check().unwrap());
        assert!(cand.module().is_dormant().unwrap());
        let triv2 = AffineIndigenousCandidate::trivial_on_affine_chart(&c, 2).unwrap();
        assert_ne!(cand.adapted_form().unwrap(), triv2.adapted_form().unwrap());
        assert!(TangoCandidate::parse(&c, 1, &["t^2"]).unwrap().to_module().is_err());
        assert_eq!(extract_dual_connection(&cand).unwrap(), u.dual_connection().unwrap());
    }

    #[test]
    fn dual_affine_examples() {
        let c = Chart::laurent(3, &["x"]).unwrap();
        assert_eq!(dual_affine_check(&DMod::trivial(&c, 0, 1)).unwrap(), DualVerdict::Dual);
        let log = DMod::invertible_from_form(&OneForm::new(vec![c.parse("x^-1").unwrap()]).unwrap());
        assert!(matches!(dual_affine_check(&log).unwrap(), DualVerdict::NotCartierKilled { .. }));
        let bad = DMod::invertible_from_form(&OneForm::new(vec![c.parse("1").unwrap()]).unwrap());
        assert!(matches!(dual_affine_check(&bad).unwrap(), DualVerdict::NotDormant { stage: 0, .. }));
    }

    #[test]
    fn kappa_examples() {
        let c = line(3);
        assert_eq!(kappa_matrix(&c, 1).unwrap().det(), RingElem::constant(&c, -1));
        assert!(kappa_matrix(&line(5), 1).unwrap().det().is_unit());
        assert!(kappa_matrix(&c, 2).unwrap().det().is_unit());
        for (p, n) in [(3, 1), (5, 1), (3, 2)] {
            assert_eq!(filtration_check(&line(p), n).unwrap(), None);
        }
    }
}
