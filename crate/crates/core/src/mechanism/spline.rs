//! Cubic smoothing-spline kernel on `[0, 1]` and its low-rank basis.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff for the grid Gram matrix.
pub const EIGEN_TRUNCATION: f64 = 1e-10;

#[inline]
fn k2(x: f64) -> f64 {
    let c = x - 0.5;
    0.5 * (c * c - 1.0 / 12.0)
}

#[inline]
fn k4(x: f64) -> f64 {
    let c2 = (x - 0.5) * (x - 0.5);
    (c2 * c2 - 0.5 * c2 + 7.0 / 240.0) / 24.0
}

/// `R(x, y) = k2(x) k2(y) - k4(|x - y|)` without domain checks.
#[inline]
pub(crate) fn kernel(x: f64, y: f64) -> f64 {
    k2(x) * k2(y) - k4((x - y).abs())
}

/// Reproducing kernel of the cubic smoothing spline's penalized subspace.
///
/// Both arguments must lie in `[0, 1]`.
pub fn kernel_eval(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidInput(format!("kernel arguments ({x}, {y}) outside [0, 1]")));
    }
    Ok(kernel(x, y))
}

/// Low-rank factorization of the kernel on the grid `s_j = j / k`.
///
/// With `Q = U D U^T` the grid Gram matrix, a point `y*` maps to the row
/// `[R(y*, s_1), ..., R(y*, s_k)] U D^{-1/2}`. Eigenvalues below
/// [`EIGEN_TRUNCATION`] times the largest one have their column zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    grid: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// `U D^{-1/2}`, k x k.
    projection: DMatrix<f64>,
}

impl SplineBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("grid size k = {k} must be at least 2")));
        }
        let grid: Vec<f64> = (1..=k).map(|j| j as f64 / k as f64).collect();
        let q = DMatrix::from_fn(k, k, |i, j| kernel(grid[i], grid[j]));
        let eig = SymmetricEigen::new(q);
        let max_ev = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
        if !(max_ev > 0.0) {
            return Err(Error::RankDeficient("grid Gram matrix has no positive eigenvalue".into()));
        }
        let cutoff = EIGEN_TRUNCATION * max_ev;
        let mut projection = eig.eigenvectors.clone();
        for (j, &ev) in eig.eigenvalues.iter().enumerate() {
            let scale = if ev > cutoff { 1.0 / libm::sqrt(ev) } else { 0.0 };
            projection.column_mut(j).scale_mut(scale);
        }
        Ok(SplineBasis {
            grid,
            eigenvalues: eig.eigenvalues.iter().map(|&e| e.max(0.0)).collect(),
            projection,
        })
    }

    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Eigenvalues of the grid Gram matrix, negatives clipped to zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Low-rank basis row for a rescaled point; the point is clamped to `[0, 1]`.
    pub fn row(&self, y_star: f64) -> Vec<f64> {
        let x = y_star.clamp(0.0, 1.0);
        let k = self.k();
        let q: Vec<f64> = self.grid.iter().map(|&s| kernel(x, s)).collect();
        (0..k)
            .map(|j| (0..k).map(|i| q[i] * self.projection[(i, j)]).sum())
            .collect()
    }

    /// `u(y*) = row(y*) . c`.
    pub fn eval(&self, y_star: f64, coeffs: &[f64]) -> f64 {
        self.row(y_star).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// Design matrices for the rescaled points `y_star`.
///
/// `S` has rows `(1, y*_i)`; `R_tilde` has the low-rank kernel rows. Fails
/// when every point is equal, since the linear part is then not identified.
pub fn build_spline_basis(y_star: &[f64], k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if y_star.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("rescaled inputs must lie in [0, 1]".into()));
    }
    let basis = SplineBasis::new(k)?;
    design_matrices(y_star, &basis)
}

/// Same as [`build_spline_basis`] with a prebuilt basis and no range check
/// (points outside `[0, 1]` are clamped for the kernel part only).
pub fn design_matrices(y_star: &[f64], basis: &SplineBasis) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = y_star.len();
    let first = y_star.first().copied().unwrap_or(0.0);
    if n < 2 || y_star.iter().all(|&v| v == first) {
        return Err(Error::RankDeficient("all rescaled inputs are equal".into()));
    }
    let s = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { y_star[i] });
    let k = basis.k();
    let mut r = DMatrix::zeros(n, k);
    for (i, &y) in y_star.iter().enumerate() {
        for (j, v) in basis.row(y).into_iter().enumerate() {
            r[(i, j)] = v;
        }
    }
    Ok((s, r))
}
