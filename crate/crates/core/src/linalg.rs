//! Dense matrices over a chart ring, with division-free determinants.

use std::fmt;
use std::sync::Arc;

use crate::chart::{Chart, RingElem};
use crate::error::{Error, Result};

pub type Vector = Vec<RingElem>;

pub fn zero_vector(chart: &Arc<Chart>, n: usize) -> Vector {
    vec![RingElem::zero(chart); n]
}

pub fn unit_vector(chart: &Arc<Chart>, n: usize, k: usize) -> Vector {
    let mut v = zero_vector(chart, n);
    v[k] = RingElem::one(chart);
    v
}

pub fn vec_add(a: &[RingElem], b: &[RingElem]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

pub fn vec_sub(a: &[RingElem], b: &[RingElem]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

pub fn vec_scale(a: &[RingElem], g: &RingElem) -> Vector {
    a.iter().map(|x| x.mul(g)).collect()
}

pub fn vec_is_zero(a: &[RingElem]) -> bool {
    a.iter().all(RingElem::is_zero)
}

pub fn dot(a: &[RingElem], b: &[RingElem]) -> RingElem {
    let mut acc = RingElem::zero(a[0].chart());
    for (x, y) in a.iter().zip(b) {
        acc = acc.add(&x.mul(y));
    }
    acc
}

/// Row-major matrix over a chart ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    chart: Arc<Chart>,
    rows: usize,
    cols: usize,
    data: Vec<RingElem>,
}

impl Matrix {
    pub fn zeros(chart: &Arc<Chart>, rows: usize, cols: usize) -> Self {
        Matrix { chart: chart.clone(), rows, cols, data: vec![RingElem::zero(chart); rows * cols] }
    }

    pub fn identity(chart: &Arc<Chart>, n: usize) -> Self {
        let mut m = Self::zeros(chart, n, n);
        for i in 0..n {
            m.set(i, i, RingElem::one(chart));
        }
        m
    }

    pub fn scalar(chart: &Arc<Chart>, n: usize, g: &RingElem) -> Self {
        let mut m = Self::zeros(chart, n, n);
        for i in 0..n {
            m.set(i, i, g.clone());
        }
        m
    }

    pub fn from_rows(chart: &Arc<Chart>, rows: Vec<Vec<RingElem>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix".into()));
        }
        if rows.iter().flatten().any(|e| !e.chart().as_ref().eq(chart.as_ref())) {
            return Err(Error::ChartMismatch);
        }
        Ok(Matrix { chart: chart.clone(), rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_columns(chart: &Arc<Chart>, rows: usize, cols: &[Vector]) -> Self {
        let mut m = Self::zeros(chart, rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, e) in col.iter().enumerate() {
                m.set(i, j, e.clone());
            }
        }
        m
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RingElem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RingElem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vector {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(RingElem::is_zero)
    }

    pub fn map(&self, f: impl Fn(&RingElem) -> RingElem) -> Matrix {
        Matrix { chart: self.chart.clone(), rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect();
        Matrix { chart: self.chart.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect();
        Matrix { chart: self.chart.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Matrix::zeros(&self.chart, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RingElem::zero(&self.chart);
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[RingElem]) -> Vector {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| {
                let mut acc = RingElem::zero(&self.chart);
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc.add(&a.mul(x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(&self.chart, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Determinant by dynamic programming over column subsets; needs no
    /// division, so it works over any chart ring.
    pub fn det(&self) -> RingElem {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return RingElem::one(&self.chart);
        }
        let mut dp: Vec<Option<RingElem>> = vec![None; 1 << n];
        dp[0] = Some(RingElem::one(&self.chart));
        for mask in 0usize..(1 << n) {
            let Some(val) = dp[mask].take() else { continue };
            if val.is_zero() {
                continue;
            }
            let row = mask.count_ones() as usize;
            if row == n {
                dp[mask] = Some(val);
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) != 0 || self.get(row, j).is_zero() {
                    continue;
                }
                let inversions = (mask >> (j + 1)).count_ones();
                let mut term = val.mul(self.get(row, j));
                if inversions % 2 == 1 {
                    term = term.neg();
                }
                let slot = &mut dp[mask | (1 << j)];
                *slot = Some(match slot.take() {
                    Some(s) => s.add(&term),
                    None => term,
                });
            }
        }
        dp[(1 << n) - 1].take().unwrap_or_else(|| RingElem::zero(&self.chart))
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Matrix {
        let mut rows = Vec::with_capacity(self.rows - 1);
        for i in (0..self.rows).filter(|&i| i != skip_row) {
            rows.push((0..self.cols).filter(|&j| j != skip_col).map(|j| self.get(i, j).clone()).collect());
        }
        Matrix::from_rows(&self.chart, rows).expect("minor of a rectangular matrix")
    }

    pub fn adjugate(&self) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(&self.chart, n, n);
        if n == 1 {
            out.set(0, 0, RingElem::one(&self.chart));
            return out;
        }
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(i, j).det();
                out.set(j, i, if (i + j) % 2 == 1 { c.neg() } else { c });
            }
        }
        out
    }

    /// Inverse when the determinant is a unit of the chart ring.
    pub fn inverse(&self) -> Option<Matrix> {
        let d = self.det().inverse()?;
        Some(self.adjugate().map(|e| e.mul(&d)))
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|i| {
                let r: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
                format!("[{}]", r.join(", "))
            })
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(c: &Arc<Chart>, rows: &[&[&str]]) -> Matrix {
        Matrix::from_rows(c, rows.iter().map(|r| r.iter().map(|s| c.parse(s).unwrap()).collect()).collect()).unwrap()
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let c = Chart::polynomial(5, &["t"]).unwrap();
        let m = mat(&c, &[&["t", "1", "2"], &["0", "t^2", "3"], &["1", "1", "t"]]);
        // expansion along the first row
        let expected = c
            .parse("t*(t^2*t - 3) - 1*(0*t - 3*1) + 2*(0*1 - t^2*1)")
            .unwrap();
        assert_eq!(m.det(), expected);
        assert_eq!(m.mul(&m.adjugate()), Matrix::scalar(&c, 3, &expected));
    }

    #[test]
    fn kappa_like_determinant() {
        let c = Chart::polynomial(3, &["x"]).unwrap();
        let m = mat(&c, &[&["x^2", "2*x", "1"], &["x", "1", "0"], &["1", "0", "0"]]);
        assert_eq!(m.det(), RingElem::constant(&c, -1));
        let inv = m.inverse().unwrap();
        assert_eq!(inv.mul(&m), Matrix::identity(&c, 3));
    }
}
