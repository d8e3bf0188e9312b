//! The sparse data matrix `A` with `f(x + h) ≤ f(x) + ⟨∇f(x), h⟩ + ½‖Ah‖²`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{EsoError, Result};
use crate::matrix::Matrix;
use crate::sampling::ConflictGraph;

/// `m × n` sparse matrix stored by rows and by columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    m: usize,
    n: usize,
    /// Row `j`: `(i, A_ji)` sorted by `i`; the indices form `J_j`.
    rows: Vec<Vec<(usize, f64)>>,
    /// Column `i`: `(j, A_ji)` sorted by `j`.
    cols: Vec<Vec<(usize, f64)>>,
}

impl DataMatrix {
    /// Build from 0-based `(row, col, value)` triplets. Explicit zeros are
    /// dropped; duplicates are rejected.
    pub fn from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut rows = vec![Vec::new(); m];
        let mut cols = vec![Vec::new(); n];
        for &(j, i, a) in triplets {
            if j >= m || i >= n {
                return Err(EsoError::InvalidData(format!("entry ({j}, {i}) out of range for a {m}x{n} matrix")));
            }
            if !a.is_finite() {
                return Err(EsoError::InvalidData(format!("entry ({j}, {i}) is not finite")));
            }
            if !seen.insert((j, i)) {
                return Err(EsoError::InvalidData(format!("duplicate entry ({j}, {i})")));
            }
            if a != 0.0 {
                rows[j].push((i, a));
                cols[i].push((j, a));
            }
        }
        for r in &mut rows {
            r.sort_unstable_by_key(|e| e.0);
        }
        for c in &mut cols {
            c.sort_unstable_by_key(|e| e.0);
        }
        Ok(Self { m, n, rows, cols })
    }

    pub fn from_dense(a: &Matrix) -> Self {
        let mut trip = Vec::new();
        for j in 0..a.rows() {
            for i in 0..a.cols() {
                if a[(j, i)] != 0.0 {
                    trip.push((j, i, a[(j, i)]));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &trip).expect("dense entries are distinct and in range")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, j: usize) -> &[(usize, f64)] {
        &self.rows[j]
    }

    pub fn col(&self, i: usize) -> &[(usize, f64)] {
        &self.cols[i]
    }

    /// `J_j`.
    pub fn row_support(&self, j: usize) -> Vec<usize> {
        self.rows[j].iter().map(|e| e.0).collect()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows.iter().enumerate().flat_map(|(j, r)| r.iter().map(move |&(i, a)| (j, i, a))).collect()
    }

    /// `w_i = Σ_j A_ji²`.
    pub fn col_sq_norms(&self) -> Vec<f64> {
        self.cols.iter().map(|c| c.iter().map(|e| e.1 * e.1).sum()).collect()
    }

    /// `ω = max_j |J_j|`.
    pub fn omega(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Σ_j |J_j|²`.
    pub fn support_sq_sum(&self) -> usize {
        self.rows.iter().map(|r| r.len() * r.len()).sum()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut a = Matrix::zeros(self.m, self.n);
        for (j, r) in self.rows.iter().enumerate() {
            for &(i, v) in r {
                a[(j, i)] = v;
            }
        }
        a
    }

    /// Dense `AᵀA`, accumulated row by row.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.n, self.n);
        for r in &self.rows {
            for &(i, a) in r {
                for &(k, b) in r {
                    g[(i, k)] += a * b;
                }
            }
        }
        g
    }

    /// `Ax`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(i, a)| a * x[i]).sum()).collect()
    }

    /// `Aᵀy`.
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| c.iter().map(|&(j, a)| a * y[j]).sum()).collect()
    }

    /// `⟨A_{:i}, y⟩`.
    pub fn col_dot(&self, i: usize, y: &[f64]) -> f64 {
        self.cols[i].iter().map(|&(j, a)| a * y[j]).sum()
    }

    /// `[A; √λ I]`, whose Gram matrix is `AᵀA + λI`.
    pub fn with_ridge(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(EsoError::InvalidArgument(format!("ridge parameter {lambda} must be nonnegative")));
        }
        let mut trip = self.triplets();
        if lambda > 0.0 {
            let s = libm::sqrt(lambda);
            trip.extend((0..self.n).map(|i| (self.m + i, i, s)));
            return Self::from_triplets(self.m + self.n, self.n, &trip);
        }
        Ok(self.clone())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let trip: Vec<_> = self.triplets().into_iter().map(|(j, i, a)| (j, i, a * factor)).collect();
        Self::from_triplets(self.m, self.n, &trip).expect("scaling keeps the pattern valid")
    }

    /// Rescale every nonzero column to unit Euclidean norm.
    pub fn normalize_columns(&self) -> Self {
        let norms: Vec<f64> = self.col_sq_norms().into_iter().map(libm::sqrt).collect();
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(j, i, a)| (j, i, if norms[i] > 0.0 { a / norms[i] } else { a }))
            .collect();
        Self::from_triplets(self.m, self.n, &trip).expect("normalizing keeps the pattern valid")
    }

    /// Coordinates sharing a row conflict.
    pub fn conflict_graph(&self) -> ConflictGraph {
        let supports: Vec<Vec<usize>> = (0..self.m).map(|j| self.row_support(j)).collect();
        ConflictGraph::from_supports(self.n, supports.iter().map(Vec::as_slice))
    }
}

/// `f = Σ_t φ_t(M_t x)` with each `φ_t` having a `γ_t`-Lipschitz gradient.
/// [`ComposedFunction::assemble`] returns `A` with `AᵀA = Σ_t γ_t M_tᵀM_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ComposedFunction {
    /// `f = Σ_j f_j` where `f_j` depends only on the coordinates in `C_j`.
    PartialSeparability { n: usize, groups: Vec<(f64, Vec<usize>)> },
    LinearMap { gamma: f64, map: Matrix },
    /// `f = Σ_j φ_j(M_j: x)` with scalar `φ_j`.
    RowWise { gammas: Vec<f64>, map: Matrix },
    General { n: usize, pieces: Vec<(f64, Matrix)> },
}

fn check_gamma(g: f64) -> Result<f64> {
    if g.is_finite() && g > 0.0 {
        Ok(libm::sqrt(g))
    } else {
        Err(EsoError::InvalidArgument(format!("smoothness constant {g} must be positive")))
    }
}

impl ComposedFunction {
    pub fn assemble(&self) -> Result<DataMatrix> {
        match self {
            ComposedFunction::PartialSeparability { n, groups } => {
                let mut d = vec![0.0; *n];
                for (g, set) in groups {
                    check_gamma(*g)?;
                    for &i in set {
                        if i >= *n {
                            return Err(EsoError::DimensionMismatch { expected: *n, got: i + 1 });
                        }
                        d[i] += g;
                    }
                }
                let trip: Vec<_> = d.iter().enumerate().map(|(i, &s)| (i, i, libm::sqrt(s))).collect();
                DataMatrix::from_triplets(*n, *n, &trip)
            }
            ComposedFunction::LinearMap { gamma, map } => Ok(DataMatrix::from_dense(&map.scaled(check_gamma(*gamma)?))),
            ComposedFunction::RowWise { gammas, map } => {
                if gammas.len() != map.rows() {
                    return Err(EsoError::DimensionMismatch { expected: map.rows(), got: gammas.len() });
                }
                let s = gammas.iter().map(|&g| check_gamma(g)).collect::<Result<Vec<_>>>()?;
                Ok(DataMatrix::from_dense(&Matrix::from_fn(map.rows(), map.cols(), |j, i| s[j] * map[(j, i)])))
            }
            ComposedFunction::General { n, pieces } => {
                let mut trip = Vec::new();
                let mut offset = 0;
                for (g, m) in pieces {
                    if m.cols() != *n {
                        return Err(EsoError::DimensionMismatch { expected: *n, got: m.cols() });
                    }
                    let s = check_gamma(*g)?;
                    for j in 0..m.rows() {
                        for i in 0..*n {
                            if m[(j, i)] != 0.0 {
                                trip.push((offset + j, i, s * m[(j, i)]));
                            }
                        }
                    }
                    offset += m.rows();
                }
                DataMatrix::from_triplets(offset, *n, &trip)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> DataMatrix {
        DataMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap()
    }

    #[test]
    fn derived_quantities() {
        let a = example();
        assert_eq!(a.col_sq_norms(), vec![1.0, 5.0, 0.0]);
        assert_eq!(a.omega(), 2);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.support_sq_sum(), 5);
        assert_eq!(a.row_support(0), vec![0, 1]);
        let g = a.gram();
        assert_eq!(g.max_abs_diff(&a.to_dense().gram()), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![3.0, 4.0]);
        assert_eq!(a.tmul_vec(&[1.0, 1.0]), vec![1.0, 3.0, 0.0]);
    }

    #[test]
    fn rejects_bad_triplets() {
        assert!(DataMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(DataMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(DataMatrix::from_triplets(2, 2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn ridge_augments_gram() {
        let a = example();
        let r = a.with_ridge(0.25).unwrap();
        let mut expected = a.gram();
        expected.add_scaled(&Matrix::identity(3), 0.25).unwrap();
        assert!(r.gram().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn assemble_special_cases() {
        let ps = ComposedFunction::PartialSeparability { n: 2, groups: vec![(1.0, vec![0, 1]), (3.0, vec![1])] };
        assert_eq!(ps.assemble().unwrap().to_dense(), Matrix::from_diagonal(&[1.0, 2.0]));

        let lm = ComposedFunction::LinearMap { gamma: 4.0, map: Matrix::identity(3) };
        assert_eq!(lm.assemble().unwrap().to_dense(), Matrix::from_diagonal(&[2.0, 2.0, 2.0]));

        let rw = ComposedFunction::RowWise { gammas: vec![1.0, 4.0], map: Matrix::identity(2) };
        assert_eq!(rw.assemble().unwrap().to_dense(), Matrix::from_diagonal(&[1.0, 2.0]));
    }

    #[test]
    fn assemble_general_matches_weighted_gram_sum() {
        let m1 = Matrix::from_rows(&[vec![1.0, 2.0, 0.0]]).unwrap();
        let m2 = Matrix::from_rows(&[vec![0.0, 1.0, -1.0], vec![3.0, 0.0, 1.0]]).unwrap();
        let f = ComposedFunction::General { n: 3, pieces: vec![(2.0, m1.clone()), (0.5, m2.clone())] };
        let mut expected = m1.gram().scaled(2.0);
        expected.add_scaled(&m2.gram(), 0.5).unwrap();
        assert!(f.assemble().unwrap().gram().max_abs_diff(&expected) < 1e-14);
        let bad = ComposedFunction::General { n: 2, pieces: vec![(1.0, m1)] };
        assert!(bad.assemble().is_err());
    }
}
