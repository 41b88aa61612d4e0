//! Frobenius-affine structures on the affine line: etale polynomials modulo
//! `f -> a*f + g(t^(p^N))`, enumerated up to a degree bound.

use std::sync::Arc;

use crate::chart::{Chart, RingElem};
use crate::error::{Error, Result};
use crate::exec::{enumeration_cap, Execution};
use crate::linalg::Matrix;

/// Jacobian determinant of the tuple is a nonzero constant.
pub fn is_etale(fs: &[RingElem]) -> bool {
    let Some(first) = fs.first() else { return false };
    let chart = first.chart();
    if fs.len() != chart.nvars() || fs.iter().any(|f| !f.same_chart(first)) {
        return false;
    }
    let rows = fs.iter().map(|f| (0..fs.len()).map(|j| f.derive(j)).collect()).collect();
    let Ok(jac) = Matrix::from_rows(chart, rows) else { return false };
    matches!(jac.det().as_constant(), Some(c) if c != 0)
}

/// The orbit representative `t + sum c_i t^i` with `p | i`, `p^N` not dividing `i`.
pub fn canonical_rep(f: &RingElem, level: u32) -> Result<RingElem> {
    let chart = f.chart();
    if chart.nvars() != 1 {
        return Err(Error::MultivariateNotSupported);
    }
    if !f.is_polynomial() {
        return Err(Error::LaurentNotSupported);
    }
    if !is_etale(std::slice::from_ref(f)) {
        return Err(Error::Precondition(format!("{f} is not etale")));
    }
    let q = chart.p().pow(level) as i64;
    let kept = f.filter_terms(|e| e[0] % q != 0);
    let lin = kept.coeff(&[1]);
    let inv = chart.fp().inv(lin).ok_or(Error::NonUnit)?;
    Ok(kept.scale(inv))
}

/// `a*f + g(t^(p^N)) + b`, the action of `(a, g, b)` on `f`.
pub fn act(f: &RingElem, level: u32, a: u64, g: &RingElem, b: i64) -> RingElem {
    let chart = f.chart();
    f.scale(a).add(&g.frobenius(chart.p().pow(level))).add(&RingElem::constant(chart, b))
}

/// Indices `i <= d` with `p | i` and `p^N` not dividing `i`.
pub fn free_indices(p: u64, level: u32, degree: u64) -> Vec<u64> {
    let q = p.pow(level);
    (1..=degree).filter(|i| i % p == 0 && i % q != 0).collect()
}

/// `p^#{i <= d : p | i, p^N not dividing i}`.
pub fn closed_form_count(p: u64, level: u32, degree: u64) -> u128 {
    (p as u128).pow(free_indices(p, level, degree).len() as u32)
}

/// Orbits of etale polynomials of degree at most `degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitCount {
    pub count: u64,
    /// Sorted canonical representatives.
    pub representatives: Vec<RingElem>,
}

/// Brute force over `c*t + sum_{p | i <= d} c_i t^i`, cross-checked against
/// the closed form.
pub fn count_orbits(p: u64, level: u32, degree: u64, exec: Execution) -> Result<OrbitCount> {
    if level == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    let chart: Arc<Chart> = Chart::polynomial(p, &["t"])?;
    let slots: Vec<u64> = (1..=degree).filter(|i| i % p == 0).collect();
    let size = (p as u128 - 1) * (p as u128).saturating_pow(slots.len() as u32);
    let cap = enumeration_cap(crate::combin::DEFAULT_CAP);
    if size > cap {
        return Err(Error::CapExceeded { needed: size, cap });
    }
    let reps = exec.map_range(size as u64, |mut idx| {
        let c = idx % (p - 1) + 1;
        idx /= p - 1;
        let mut f = RingElem::monomial(&chart, vec![1], c as i64).expect("polynomial term");
        for &i in &slots {
            let ci = idx % p;
            idx /= p;
            if ci != 0 {
                f = f.add(&RingElem::monomial(&chart, vec![i as i64], ci as i64).expect("polynomial term"));
            }
        }
        canonical_rep(&f, level).expect("generated polynomials are etale")
    });
    let mut reps: Vec<(String, RingElem)> = reps.into_iter().map(|r| (r.to_string(), r)).collect();
    reps.sort_by(|a, b| a.0.cmp(&b.0));
    reps.dedup_by(|a, b| a.0 == b.0);
    let count = reps.len() as u64;
    let expected = closed_form_count(p, level, degree);
    if count as u128 != expected {
        return Err(Error::Invalid(format!("{count} orbits found, closed form gives {expected}")));
    }
    Ok(OrbitCount { count, representatives: reps.into_iter().map(|r| r.1).collect() })
}
