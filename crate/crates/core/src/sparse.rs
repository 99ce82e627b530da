//! Thin helpers around faer's compressed-column matrices.

use std::collections::BTreeMap;

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

pub type SpMat = SparseColMat<usize, f64>;

/// Accumulates entries and sums duplicates in insertion order, so the
/// assembled values do not depend on any hashing or sorting strategy.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    // keyed (col, row) so iteration is already in CSC order
    entries: BTreeMap<(usize, usize), f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        *self.entries.entry((col, row)).or_insert(0.0) += val;
    }

    pub fn build(self) -> SpMat {
        let triplets: Vec<_> = self
            .entries
            .into_iter()
            .map(|((c, r), v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .expect("indices are bounds-checked on insertion")
    }
}

pub fn zeros(nrows: usize, ncols: usize) -> SpMat {
    TripletBuilder::new(nrows, ncols).build()
}

/// `y += alpha * A x`
pub fn mul_add(a: &SpMat, x: &[f64], alpha: f64, y: &mut [f64]) {
    let a = a.as_ref();
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let s = alpha * xj;
        for k in col_ptr[j]..col_ptr[j + 1] {
            y[row_idx[k]] += val[k] * s;
        }
    }
}

/// `y += alpha * A^T x`
pub fn mul_t_add(a: &SpMat, x: &[f64], alpha: f64, y: &mut [f64]) {
    let a = a.as_ref();
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    for (j, yj) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in col_ptr[j]..col_ptr[j + 1] {
            acc += val[k] * x[row_idx[k]];
        }
        *yj += alpha * acc;
    }
}

pub fn to_dense(a: &SpMat) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), a.ncols());
    for t in a.as_ref().triplet_iter() {
        out[(t.row, t.col)] += *t.val;
    }
    out
}

pub fn transpose(a: &SpMat) -> SpMat {
    let mut b = TripletBuilder::new(a.ncols(), a.nrows());
    for t in a.as_ref().triplet_iter() {
        b.add(t.col, t.row, *t.val);
    }
    b.build()
}

pub fn scaled(a: &SpMat, s: f64) -> SpMat {
    let mut b = TripletBuilder::new(a.nrows(), a.ncols());
    for t in a.as_ref().triplet_iter() {
        b.add(t.row, t.col, *t.val * s);
    }
    b.build()
}

pub fn max_abs(a: &SpMat) -> f64 {
    a.as_ref().val().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `max |A - A^T|` over the stored pattern.
pub fn max_asymmetry(a: &SpMat) -> f64 {
    let d = to_dense(a);
    dense_max_asymmetry(&d)
}

pub fn dense_max_asymmetry(d: &Mat<f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..d.ncols() {
        for i in 0..j {
            m = m.max((d[(i, j)] - d[(j, i)]).abs());
        }
    }
    m
}

pub fn dense_max_abs(d: &Mat<f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..d.ncols() {
        for i in 0..d.nrows() {
            m = m.max(d[(i, j)].abs());
        }
    }
    m
}

/// Cholesky factor `A = L L^T` stored row by row over the envelope of the
/// lower triangle. Fill-in stays inside the envelope, so banded FE matrices
/// factor and solve in `O(n b^2)` and `O(n b)`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix; `None` if a pivot is
    /// not positive.
    pub fn new(a: &SpMat) -> Option<Self> {
        let n = a.nrows();
        let mut first: Vec<usize> = (0..n).collect();
        for t in a.as_ref().triplet_iter() {
            if t.col < t.row && *t.val != 0.0 {
                first[t.row] = first[t.row].min(t.col);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i + 1 - first[i]);
        }
        let mut vals = vec![0.0; start[n]];
        for t in a.as_ref().triplet_iter() {
            if t.col <= t.row {
                vals[start[t.row] + t.col - first[t.row]] += *t.val;
            }
        }
        for i in 0..n {
            for j in first[i]..=i {
                let k0 = first[i].max(first[j]);
                let mut s = vals[start[i] + j - first[i]];
                for k in k0..j {
                    s -= vals[start[i] + k - first[i]] * vals[start[j] + k - first[j]];
                }
                if j < i {
                    s /= vals[start[j] + j - first[j]];
                } else {
                    if !(s > 0.0) {
                        return None;
                    }
                    s = s.sqrt();
                }
                vals[start[i] + j - first[i]] = s;
            }
        }
        Some(Self { first, start, vals })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Overwrites `x` with `A^-1 x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let f = self.first[i];
            let mut s = x[i];
            for (k, l) in (f..i).zip(row) {
                s -= l * x[k];
            }
            x[i] = s / row[i - f];
        }
        for i in (0..n).rev() {
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let f = self.first[i];
            x[i] /= row[i - f];
            let xi = x[i];
            for (k, l) in (f..i).zip(row) {
                x[k] -= l * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2, 3);
        b.add(0, 2, 1.5);
        b.add(1, 0, -1.0);
        b.add(0, 2, 0.5);
        let a = b.build();
        let d = to_dense(&a);
        assert_eq!(d[(0, 2)], 2.0);
        assert_eq!(d[(1, 0)], -1.0);
        assert_eq!(a.as_ref().val().len(), 2);

        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 2];
        mul_add(&a, &x, 2.0, &mut y);
        assert_eq!(y, [12.0, -2.0]);

        let mut z = [0.0; 3];
        mul_t_add(&a, &[1.0, 1.0], 1.0, &mut z);
        assert_eq!(z, [-1.0, 0.0, 2.0]);
        assert_eq!(to_dense(&transpose(&a))[(2, 0)], 2.0);
    }

    #[test]
    fn envelope_cholesky_solves() {
        // tridiagonal plus one long-range coupling
        let n = 6;
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 4.0 + i as f64);
            if i > 0 {
                b.add(i, i - 1, -1.0);
                b.add(i - 1, i, -1.0);
            }
        }
        b.add(5, 1, 0.5);
        b.add(1, 5, 0.5);
        let a = b.build();
        let f = EnvelopeCholesky::new(&a).unwrap();
        let x0 = [1.0, -2.0, 0.5, 3.0, 0.0, -1.0];
        let mut x = vec![0.0; n];
        mul_add(&a, &x0, 1.0, &mut x);
        f.solve_in_place(&mut x);
        for (p, q) in x.iter().zip(&x0) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_cholesky_rejects_indefinite() {
        let mut b = TripletBuilder::new(2, 2);
        b.add(0, 0, 1.0);
        b.add(1, 1, -1.0);
        assert!(EnvelopeCholesky::new(&b.build()).is_none());
    }
}
