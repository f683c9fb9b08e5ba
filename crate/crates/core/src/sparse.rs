//! Compressed-sparse-row complex matrices.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square sparse complex matrix in CSR layout.
///
/// Column indices within a row are sorted and unique; explicit zeros are
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Assembles a matrix from `(row, col, value)` triplets; duplicates are
    /// summed and entries that cancel to zero are dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; dim + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut iter = t.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != ZERO {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        Self { dim, indptr, indices, values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, indptr: vec![0; dim + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, ONE)))
    }

    pub fn from_dense(m: &Array2<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_triplets(
            m.nrows(),
            m.indexed_iter().filter(|(_, v)| **v != ZERO).map(|((r, c), &v)| (r, c, v)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzeros of row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (r, c, v) in self.iter() {
            m[[r, c]] = v;
        }
        m
    }

    fn map_entries(&self, f: impl Fn(usize, usize, C64) -> (usize, usize, C64)) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| f(r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        self.map_entries(|r, c, v| (c, r, v))
    }

    pub fn conj(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.conj()).collect(), ..self.clone() }
    }

    pub fn adjoint(&self) -> Self {
        self.map_entries(|r, c, v| (c, r, v.conj()))
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == ZERO {
            return Self::zeros(self.dim);
        }
        Self { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.iter().chain(other.iter()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut acc = vec![ZERO; self.dim];
        let mut touched = vec![false; self.dim];
        let mut cols = Vec::new();
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &cols {
                triplets.push((r, c, acc[c]));
                acc[c] = ZERO;
                touched[c] = false;
            }
            cols.clear();
        }
        Self::from_triplets(self.dim, triplets)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        Self::from_triplets(
            self.dim * d,
            self.iter().flat_map(|(r, c, a)| other.iter().map(move |(r2, c2, b)| (r * d + r2, c * d + c2, a * b))),
        )
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        let mut y = vec![ZERO; self.dim];
        self.matvec(x, &mut y);
        Ok(y)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).max_abs() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(r, c, _)| r == c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]; 2]) -> SparseOperator {
        SparseOperator::from_triplets(
            2,
            (0..2).flat_map(|r| (0..2).map(move |c| (r, c, C64::new(rows[r][c], 0.0)))),
        )
    }

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let a = SparseOperator::from_triplets(2, [(0, 1, ONE), (0, 1, ONE), (1, 0, ONE), (1, 0, -ONE)]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1), C64::new(2.0, 0.0));
    }

    #[test]
    fn kron_and_mul_match_dense() {
        let a = m(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = m(&[[0.0, 1.0], [1.0, 0.0]]);
        let k = a.kron(&b).to_dense();
        assert_eq!(k[[0, 1]], ONE);
        assert_eq!(k[[2, 1]], C64::new(3.0, 0.0));
        assert_eq!(k[[3, 2]], C64::new(4.0, 0.0));
        let p = a.mul(&b).to_dense();
        assert_eq!(p, a.to_dense().dot(&b.to_dense()));
    }

    #[test]
    fn adjoint_and_matvec() {
        let a = SparseOperator::from_triplets(2, [(0, 1, I), (1, 1, ONE)]);
        let ad = a.adjoint();
        assert_eq!(ad.get(1, 0), -I);
        let y = a.apply(&[ONE, ONE]).unwrap();
        assert_eq!(y, vec![I, ONE]);
        assert!(a.apply(&[ONE]).is_err());
        assert!(!a.is_hermitian(1e-12));
        assert!(a.add(&ad).is_hermitian(1e-12));
    }
}
