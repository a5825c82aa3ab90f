//! Square banded matrices with equal lower and upper half-bandwidth, and an LU
//! factorization with partial pivoting that works inside the band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest band entry are treated as zero.
pub const PIVOT_RELATIVE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedMatrix {
    dim: usize,
    half_bandwidth: usize,
    /// Row-major diagonals: entry `(i, j)` lives at `i * width + (j + hb − i)`.
    bands: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(dim: usize, half_bandwidth: usize) -> Self {
        let width = 2 * half_bandwidth + 1;
        BandedMatrix { dim, half_bandwidth, bands: vec![0.0; dim * width] }
    }

    pub fn identity(dim: usize, half_bandwidth: usize) -> Self {
        let mut m = Self::zeros(dim, half_bandwidth);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Extracts the band of a dense matrix; entries outside the band are dropped.
    pub fn from_dense(dense: &[Vec<f64>], half_bandwidth: usize) -> Self {
        let mut m = Self::zeros(dense.len(), half_bandwidth);
        for (i, row) in dense.iter().enumerate() {
            for j in m.row_range(i) {
                m.set(i, j, row[j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    fn width(&self) -> usize {
        2 * self.half_bandwidth + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.half_bandwidth
    }

    /// Columns of row `i` that lie inside the band.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.half_bandwidth)..(i + self.half_bandwidth + 1).min(self.dim)
    }

    fn index(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.half_bandwidth - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.dim || j >= self.dim || !self.in_band(i, j) {
            return 0.0;
        }
        self.bands[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.dim && j < self.dim && self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.index(i, j);
        self.bands[k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.dim && j < self.dim && self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.index(i, j);
        self.bands[k] += value;
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }

    /// `Σ cᵢ·Aᵢ` over matrices of identical shape.
    pub fn linear_combination(terms: &[(f64, &BandedMatrix)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut out = Self::zeros(first.dim, first.half_bandwidth);
        for (c, m) in terms {
            if m.dim != first.dim {
                return Err(Error::DimensionMismatch { expected: first.dim, got: m.dim });
            }
            if m.half_bandwidth != first.half_bandwidth {
                return Err(Error::InvalidArgument("half-bandwidths differ".into()));
            }
            for (o, v) in out.bands.iter_mut().zip(&m.bands) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Banded matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok((0..self.dim)
            .map(|i| self.row_range(i).map(|j| self.bands[self.index(i, j)] * x[j]).sum())
            .collect())
    }

    pub fn factorize(&self) -> Result<BandedLu> {
        BandedLu::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factorize()?.solve(rhs)
    }
}

/// Solves `matrix · y = rhs`.
pub fn solve_banded(matrix: &BandedMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    matrix.solve(rhs)
}

/// LU factors of a banded matrix with row interchanges confined to the band.
///
/// Pivoting widens the upper band of `U` to `2·hb`; `L` keeps `hb` multipliers
/// per column.
#[derive(Debug, Clone)]
pub struct BandedLu {
    dim: usize,
    lower: usize,
    upper: usize,
    /// `U[i][i + d]` at `u[i * (upper + 1) + d]`.
    u: Vec<f64>,
    /// Multipliers of column `k` for rows `k+1 ..= k+lower`.
    l: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn new(matrix: &BandedMatrix) -> Result<Self> {
        let n = matrix.dim;
        let kl = matrix.half_bandwidth;
        let up = 2 * kl;
        let width = kl + up + 1;
        let threshold = PIVOT_RELATIVE_THRESHOLD * matrix.max_abs();

        // row r holds absolute columns r − kl .. r − kl + width
        let mut work = vec![0.0; n * width];
        let slot = |r: usize, c: usize| -> usize { r * width + (c + kl - r) };
        for i in 0..n {
            for j in matrix.row_range(i) {
                work[slot(i, j)] = matrix.get(i, j);
            }
        }

        let mut u = vec![0.0; n * (up + 1)];
        let mut l = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + up).min(n - 1);
            let mut p = k;
            let mut best = work[slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = work[slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > threshold) {
                return Err(Error::Singular { row: k, pivot: best, threshold });
            }
            pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    work.swap(slot(k, c), slot(p, c));
                }
            }
            let pivot = work[slot(k, k)];
            for r in k + 1..=last_row {
                let factor = work[slot(r, k)] / pivot;
                l[k * kl + (r - k - 1)] = factor;
                work[slot(r, k)] = 0.0;
                if factor != 0.0 {
                    for c in k + 1..=last_col {
                        work[slot(r, c)] -= factor * work[slot(k, c)];
                    }
                }
            }
            for c in k..=last_col {
                u[k * (up + 1) + (c - k)] = work[slot(k, c)];
            }
        }
        Ok(BandedLu { dim: n, lower: kl, upper: up, u, l, pivots })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut y = rhs.to_vec();
        self.solve_in_place(&mut y)?;
        Ok(y)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let kl = self.lower;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.l[k * kl + (r - k - 1)] * bk;
            }
        }
        let w = self.upper + 1;
        for i in (0..n).rev() {
            let mut s = b[i];
            for d in 1..=self.upper.min(n - 1 - i) {
                s -= self.u[i * w + d] * b[i + d];
            }
            b[i] = s / self.u[i * w];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Deterministic pseudo-random values for test matrices.
    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn random_band(n: usize, hb: usize, seed: &mut u64, dominant: bool) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, hb);
        for i in 0..n {
            for j in m.row_range(i) {
                m.set(i, j, lcg(seed));
            }
            if dominant {
                m.add(i, i, 2.0 * hb as f64 + 1.0);
            }
        }
        m
    }

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Plain Gaussian elimination with partial pivoting on a dense copy.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity_is_neutral() {
        let id = BandedMatrix::identity(5, 2);
        let v = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(id.apply(&v).unwrap(), v);
        assert_eq!(solve_banded(&id, &v).unwrap(), v);
        assert_eq!(id.apply(&[0.0; 5]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn apply_matches_dense_product() {
        let mut seed = 7;
        for hb in [1, 2] {
            let m = random_band(10, hb, &mut seed, false);
            let x: Vec<f64> = (0..10).map(|_| lcg(&mut seed)).collect();
            let banded = m.apply(&x).unwrap();
            let dense = dense_matvec(&m.to_dense(), &x);
            for (a, b) in banded.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let m = BandedMatrix::identity(4, 1);
        assert_eq!(m.apply(&[1.0; 3]), Err(Error::DimensionMismatch { expected: 4, got: 3 }));
    }

    #[test]
    fn solve_matches_dense_oracle() {
        let mut seed = 11;
        for hb in [1, 2] {
            let m = random_band(12, hb, &mut seed, true);
            let b: Vec<f64> = (0..12).map(|_| lcg(&mut seed)).collect();
            let x = solve_banded(&m, &b).unwrap();
            let oracle = dense_solve(m.to_dense(), b.clone());
            for (a, o) in x.iter().zip(&oracle) {
                assert!((a - o).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap
        let mut m = BandedMatrix::zeros(2, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        assert_eq!(m.solve(&[3.0, 4.0]).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = BandedMatrix::zeros(3, 1);
        m.set(0, 0, 1.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 1.0);
        assert!(matches!(m.solve(&[1.0, 1.0, 1.0]), Err(Error::Singular { row: 1, .. })));
    }

    proptest! {
        #[test]
        fn solve_inverts_apply(seed in any::<u64>(), n in 3usize..40, hb in 1usize..3) {
            let mut s = seed;
            let m = random_band(n, hb, &mut s, true);
            let v: Vec<f64> = (0..n).map(|_| lcg(&mut s)).collect();
            let back = m.solve(&m.apply(&v).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
