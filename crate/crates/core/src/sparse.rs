//! Symmetric sparse matrices and a profile (envelope) LDLᵀ factorization.
//!
//! Matrices keep only the lower triangle in CSR form. The factorization
//! works on the row envelope, which stays narrow for the row-by-row node
//! and edge orderings produced by [`crate::mesh`].

use std::io::Write;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn dot_compensated(x: &[f64], y: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    for (a, b) in x.iter().zip(y) {
        s.add(a * b);
    }
    s.value()
}

/// Lower triangle (diagonal included) of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymCsr {
    /// Builds from `(row, col, value)` entries; entries above the diagonal are
    /// mirrored, duplicates summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SymCsr {
        let mut keyed: Vec<(usize, usize, usize)> = triplets
            .iter()
            .enumerate()
            .map(|(k, &(i, j, _))| (i.max(j), i.min(j), k))
            .collect();
        keyed.sort_unstable();
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(keyed.len() / 2);
        let mut vals: Vec<f64> = Vec::with_capacity(keyed.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, k) in keyed {
            assert!(i < n, "row {i} out of range {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += triplets[k].2;
            } else {
                cols.push(j);
                vals.push(triplets[k].2);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymCsr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = (i.max(j), i.min(j));
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &a) in cols.iter().zip(vals) {
                if j == i {
                    acc += a * x[i];
                } else {
                    acc += a * x[j];
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// `|A| |x|`, for rounding-error bounds of [`SymCsr::mul_vec`].
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                y[i] += (a * x[j]).abs();
                if j != i {
                    y[j] += (a * x[i]).abs();
                }
            }
        }
        y
    }

    /// Largest number of stored entries in a row of the full symmetric matrix.
    pub fn max_row_len(&self) -> usize {
        let mut len = vec![0usize; self.n];
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            for &j in cols {
                len[i] += 1;
                if j != i {
                    len[j] += 1;
                }
            }
        }
        len.into_iter().max().unwrap_or(0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y` with compensated accumulation.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = CompensatedSum::default();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                s.add(a * x[i] * y[j]);
                if j != i {
                    s.add(a * x[j] * y[i]);
                }
            }
        }
        s.value()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: f64, other: &SymCsr) -> SymCsr {
        assert_eq!(self.n, other.n);
        let mut trip = Vec::with_capacity(self.nnz_lower() + other.nnz_lower());
        for (m, f) in [(self, 1.0), (other, s)] {
            for i in 0..m.n {
                let (cols, vals) = m.row(i);
                trip.extend(cols.iter().zip(vals).map(|(&j, &a)| (i, j, f * a)));
            }
        }
        SymCsr::from_triplets(self.n, &trip)
    }

    /// Principal submatrix on `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> SymCsr {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &g) in keep.iter().enumerate() {
            pos[g] = k;
        }
        let mut trip = Vec::new();
        for i in 0..self.n {
            if pos[i] == usize::MAX {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                if pos[j] != usize::MAX {
                    trip.push((pos[i], pos[j], a));
                }
            }
        }
        SymCsr::from_triplets(keep.len(), &trip)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                d[(i, j)] = a;
                d[(j, i)] = a;
            }
        }
        d
    }

    /// Row sums of the full (symmetric) matrix.
    pub fn row_sums(&self) -> Vec<f64> {
        self.mul_vec(&vec![1.0; self.n])
    }

    /// Coordinate text dump (1-based, lower triangle, symmetric header).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz_lower())?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, a)?;
            }
        }
        Ok(())
    }
}

/// `A = L D Lᵀ` on the row envelope, no pivoting.
#[derive(Clone, Debug)]
pub struct ProfileLdl {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl ProfileLdl {
    pub fn factor(a: &SymCsr) -> Result<ProfileLdl> {
        let n = a.dim();
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).0.first().copied().unwrap_or(i).min(i))
            .collect();
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut l = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        let mut w = Vec::new();

        for i in 0..n {
            let fi = first[i];
            let width = i - fi;
            w.clear();
            w.resize(width, 0.0);
            let (cols, vals) = a.row(i);
            let mut diag = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v;
                } else {
                    w[j - fi] = v;
                }
            }
            // w_j ← a_ij − Σ_k w_k L_jk   (w_k = L_ik D_k)
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let lj = &l[start[j] + (k0 - fj)..start[j] + (j - fj)];
                    let wi = &w[k0 - fi..j - fi];
                    w[j - fi] -= dot(wi, lj);
                }
            }
            let row = &mut l[start[i]..start[i + 1]];
            let mut di = diag;
            for (k, j) in (fi..i).enumerate() {
                let lij = w[k] / d[j];
                di -= w[k] * lij;
                row[k] = lij;
            }
            if di == 0.0 || !di.is_finite() {
                return Err(Error::Factorization { row: i, pivot: di });
            }
            d[i] = di;
        }
        Ok(ProfileLdl {
            n,
            first,
            start,
            l,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Envelope size (stored off-diagonal entries).
    pub fn envelope(&self) -> usize {
        self.l.len()
    }

    /// Number of `(negative, positive)` pivots; by Sylvester's law this is the
    /// inertia of the factored matrix.
    pub fn inertia(&self) -> (usize, usize) {
        let neg = self.d.iter().filter(|&&v| v < 0.0).count();
        (neg, self.n - neg)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.d.iter().all(|&v| v > 0.0)
    }

    /// Solves in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            b[i] -= dot(row, &b[fi..i]);
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let bi = b[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            for (k, v) in row.iter().enumerate() {
                b[fi + k] -= v * bi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, band: usize, shift: f64, seed: u64) -> SymCsr {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, shift + rng.random::<f64>()));
            for j in i.saturating_sub(band)..i {
                if rng.random::<f64>() < 0.6 {
                    t.push((i, j, rng.random::<f64>() - 0.5));
                }
            }
        }
        SymCsr::from_triplets(n, &t)
    }

    #[test]
    fn triplets_mirror_and_sum() {
        let a = SymCsr::from_triplets(3, &[(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0), (0, 0, 1.0)]);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(2, 2), 5.0);
        assert_eq!(a.get(2, 0), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 5.0]);
    }

    #[test]
    fn ldl_solves_and_counts_inertia() {
        let a = random_banded(60, 7, 3.0, 1);
        let f = ProfileLdl::factor(&a).unwrap();
        assert!(f.is_positive_definite());
        let x: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let y = f.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }

        // inertia against a dense eigen-decomposition
        let shifted = a.add_scaled(-1.0, &SymCsr::from_triplets(60, &(0..60).map(|i| (i, i, 3.5)).collect::<Vec<_>>()));
        let dense = shifted.to_dense().symmetric_eigen();
        let neg = dense.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        assert_eq!(ProfileLdl::factor(&shifted).unwrap().inertia().0, neg);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = SymCsr::from_triplets(2, &[(0, 0, 0.0), (1, 1, 1.0)]);
        assert!(matches!(ProfileLdl::factor(&a), Err(Error::Factorization { row: 0, .. })));
    }

    #[test]
    fn restrict_and_dump() {
        let a = random_banded(10, 3, 2.0, 4);
        let keep = [1, 4, 5, 9];
        let r = a.restrict(&keep);
        for (p, &i) in keep.iter().enumerate() {
            for (q, &j) in keep.iter().enumerate() {
                assert_eq!(r.get(p, q), a.get(i, j));
            }
        }
        let mut buf = Vec::new();
        r.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket"));
        assert_eq!(text.lines().count(), 2 + r.nnz_lower());
    }

    #[test]
    fn compensated_dot_beats_naive() {
        let x = [1e16, 1.0, -1e16, 1.0];
        let y = [1.0; 4];
        assert_eq!(dot_compensated(&x, &y), 2.0);
    }
}
