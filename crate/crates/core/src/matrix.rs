//! Small dense square matrices.
//!
//! Every interaction matrix in this crate is indexed `[influencer][receiver]`:
//! entry `(j, h)` describes how agent `j` acts on agent `h`. Column `h`
//! therefore collects everything agent `h` receives.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; fails unless the rows form a non-empty square.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Domain("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (j, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::Domain(format!(
                    "row {} has {} entries, expected {n}",
                    j + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for j in 0..self.n {
            for h in 0..self.n {
                t[(h, j)] = self[(j, h)];
            }
        }
        t
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        self.rows()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ M`, i.e. `Mᵀ x`.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|h| (0..self.n).map(|j| x[j] * self[(j, h)]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.vec_mul(&vec![1.0; self.n])
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    /// First negative entry as `(row, col)`.
    pub fn first_negative(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|&x| x < 0.0)
            .map(|p| (p / self.n, p % self.n))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.transpose()) <= tol
    }

    /// Swaps the labels of agents `a` and `b` (rows and columns).
    pub fn permuted(&self, a: usize, b: usize) -> Self {
        let perm = |i: usize| {
            if i == a {
                b
            } else if i == b {
                a
            } else {
                i
            }
        };
        let mut out = Self::zeros(self.n);
        for j in 0..self.n {
            for h in 0..self.n {
                out[(perm(j), perm(h))] = self[(j, h)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.data[row * self.n + col]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut f64 {
        &mut self.data[row * self.n + col]
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.to_rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_rejected() {
        assert!(SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(SquareMatrix::from_rows::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn vec_mul_is_left_multiplication() {
        let m = SquareMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(m.vec_mul(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(m.column_sums(), vec![4.0, 6.0]);
    }

    #[test]
    fn permutation_swaps_labels() {
        let m = SquareMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let p = m.permuted(0, 1);
        assert_eq!(p.to_rows(), vec![vec![4.0, 3.0], vec![2.0, 1.0]]);
        assert_eq!(p.permuted(0, 1), m);
    }

    #[test]
    fn json_is_array_of_rows() {
        let m: SquareMatrix = serde_json::from_str("[[0.1,0.2],[0.3,0.4]]").unwrap();
        assert_eq!(m[(0, 1)], 0.2);
        assert_eq!(serde_json::to_string(&m).unwrap(), "[[0.1,0.2],[0.3,0.4]]");
        assert!(serde_json::from_str::<SquareMatrix>("[[0.1],[0.3,0.4]]").is_err());
    }
}
