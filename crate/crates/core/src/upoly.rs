//! Univariate polynomials over `F_p` and exact linear algebra over `F_p[y]`:
//! kernels by unimodular column reduction and column Hermite normal form.

use std::cmp::Ordering;

use crate::arith::Fp;

/// Dense polynomial, coefficients from low to high degree, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UPoly {
    c: Vec<u64>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly { c: Vec::new() }
    }

    pub fn constant(a: u64) -> Self {
        Self::from_coeffs(vec![a])
    }

    pub fn monomial(a: u64, d: usize) -> Self {
        let mut c = vec![0; d + 1];
        c[d] = a;
        Self::from_coeffs(c)
    }

    pub fn from_coeffs(mut c: Vec<u64>) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        UPoly { c }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.c.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> u64 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn add(&self, o: &UPoly, fp: Fp) -> UPoly {
        let n = self.c.len().max(o.c.len());
        Self::from_coeffs((0..n).map(|i| fp.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn sub(&self, o: &UPoly, fp: Fp) -> UPoly {
        let n = self.c.len().max(o.c.len());
        Self::from_coeffs((0..n).map(|i| fp.sub(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn scale(&self, a: u64, fp: Fp) -> UPoly {
        Self::from_coeffs(self.c.iter().map(|&x| fp.mul(x, a)).collect())
    }

    pub fn mul(&self, o: &UPoly, fp: Fp) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut c = vec![0; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                c[i + j] = fp.add(c[i + j], fp.mul(a, b));
            }
        }
        Self::from_coeffs(c)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &UPoly, fp: Fp) -> (UPoly, UPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let inv = fp.inv(d.lead()).expect("nonzero leading coefficient");
        let mut r = self.c.clone();
        let mut q = vec![0; self.c.len().saturating_sub(dd)];
        while r.len() > dd {
            let top = r.len() - 1;
            let f = fp.mul(*r.last().unwrap(), inv);
            if f != 0 {
                q[top - dd] = f;
                for (i, &b) in d.c.iter().enumerate() {
                    r[top - dd + i] = fp.sub(r[top - dd + i], fp.mul(f, b));
                }
            }
            r.pop();
            while r.last() == Some(&0) {
                r.pop();
            }
        }
        (Self::from_coeffs(q), Self::from_coeffs(r))
    }

    pub fn monic(&self, fp: Fp) -> UPoly {
        match fp.inv(self.lead()) {
            Some(i) => self.scale(i, fp),
            None => self.clone(),
        }
    }

    /// Pivot preference: lower degree first, then coefficient vectors in
    /// lexicographic order from the top.
    fn pivot_cmp(&self, o: &UPoly) -> Ordering {
        self.c.len().cmp(&o.c.len()).then_with(|| self.c.iter().rev().cmp(o.c.iter().rev()))
    }
}

/// Column-major polynomial matrix helper: `cols[j][i]` is entry `(i, j)`.
pub type PolyCols = Vec<Vec<UPoly>>;

fn axpy_col(target: &mut [UPoly], q: &UPoly, src: &[UPoly], fp: Fp) {
    for (t, s) in target.iter_mut().zip(src) {
        if !s.is_zero() {
            *t = t.sub(&q.mul(s, fp), fp);
        }
    }
}

/// A basis of `{ v in F_p[y]^n : A v = 0 }` where `A` is given by columns
/// (`n` columns of length `rows`). The basis is saturated and returned in
/// column Hermite normal form.
pub fn kernel(a: &PolyCols, rows: usize, fp: Fp) -> PolyCols {
    let n = a.len();
    let mut a: PolyCols = a.clone();
    let mut u: PolyCols = (0..n)
        .map(|j| (0..n).map(|i| if i == j { UPoly::constant(1) } else { UPoly::zero() }).collect())
        .collect();
    let mut active: Vec<usize> = (0..n).collect();
    for i in 0..rows {
        loop {
            let nz: Vec<usize> = active.iter().copied().filter(|&j| !a[j][i].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let piv = *nz
                .iter()
                .min_by(|&&x, &&y| a[x][i].pivot_cmp(&a[y][i]).then(x.cmp(&y)))
                .unwrap();
            if nz.len() == 1 {
                active.retain(|&j| j != piv);
                break;
            }
            for &j in nz.iter().filter(|&&j| j != piv) {
                let (q, _) = a[j][i].divrem(&a[piv][i], fp);
                let (pa, pu) = (a[piv].clone(), u[piv].clone());
                axpy_col(&mut a[j], &q, &pa, fp);
                axpy_col(&mut u[j], &q, &pu, fp);
            }
        }
    }
    let basis: PolyCols = active.iter().map(|&j| u[j].clone()).collect();
    hermite(basis, n, fp)
}

/// Column Hermite normal form of a family of linearly independent columns:
/// pivots in increasing rows, monic, entries to the left of a pivot reduced
/// modulo it.
pub fn hermite(mut cols: PolyCols, rows: usize, fp: Fp) -> PolyCols {
    let k = cols.len();
    let mut done = 0;
    let mut pivot_rows = Vec::new();
    for i in 0..rows {
        if done == k {
            break;
        }
        loop {
            let nz: Vec<usize> = (done..k).filter(|&j| !cols[j][i].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let piv = *nz
                .iter()
                .min_by(|&&x, &&y| cols[x][i].pivot_cmp(&cols[y][i]).then(x.cmp(&y)))
                .unwrap();
            if nz.len() == 1 {
                cols.swap(done, piv);
                let inv = fp.inv(cols[done][i].lead()).expect("nonzero pivot");
                cols[done] = cols[done].iter().map(|e| e.scale(inv, fp)).collect();
                let pc = cols[done].clone();
                for j in 0..done {
                    let (q, _) = cols[j][i].divrem(&pc[i], fp);
                    axpy_col(&mut cols[j], &q, &pc, fp);
                }
                pivot_rows.push(i);
                done += 1;
                break;
            }
            let pc = cols[piv].clone();
            for &j in nz.iter().filter(|&&j| j != piv) {
                let (q, _) = cols[j][i].divrem(&pc[i], fp);
                axpy_col(&mut cols[j], &q, &pc, fp);
            }
        }
    }
    cols
}

/// Row index of the pivot of each column of a Hermite basis.
pub fn pivot_rows(cols: &PolyCols) -> Vec<usize> {
    cols.iter()
        .map(|c| c.iter().position(|e| !e.is_zero()).expect("nonzero column"))
        .collect()
}

/// Coordinates of `w` in a Hermite basis, if `w` lies in its span.
pub fn solve_in_hermite(basis: &PolyCols, w: &[UPoly], fp: Fp) -> Option<Vec<UPoly>> {
    let piv = pivot_rows(basis);
    let mut rest: Vec<UPoly> = w.to_vec();
    let mut coords = Vec::with_capacity(basis.len());
    for (j, &r) in piv.iter().enumerate() {
        let (q, rem) = rest[r].divrem(&basis[j][r], fp);
        if !rem.is_zero() {
            return None;
        }
        axpy_col(&mut rest, &q, &basis[j], fp);
        coords.push(q);
    }
    rest.iter().all(UPoly::is_zero).then_some(coords)
}
