//! Spectral bound for reversible finite chains.
//!
//! A chain reversible with respect to `m` is self-adjoint in `L₂(m)`, so
//! `S = D^{1/2} P D^{-1/2}` (with `D = diag(m)`) is symmetric. Its
//! orthonormal eigenvectors `u_j` give eigenfunctions `φ_j = u_j / √m`,
//! orthonormal in `L₂(m)`, and then
//! `4 ‖Pˡ(s, ·) − m‖² ≤ Σ_{j>0} β_j^{2ℓ} φ_j(s)²`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::curve::{params, BoundCurve, BoundKind};
use crate::error::{Error, Result};
use crate::model::TransitionMatrix;

/// Reversibility tolerance on `|m(x)P(x,y) − m(y)P(y,x)|`.
pub const REVERSIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct EigenDecomposition {
    /// Eigenvalues in descending order; `β₀ = 1` for a stochastic matrix.
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[j][x] = φ_j(x)`.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

pub fn numeric_eigendecomposition(matrix: &TransitionMatrix) -> Result<EigenDecomposition> {
    if matrix.is_truncated() {
        return Err(Error::Unsupported(
            "the spectral bound is certified for finite chains only".into(),
        ));
    }
    let residual = matrix.reversibility_residual();
    if residual > REVERSIBILITY_TOL {
        return Err(Error::NotReversible(residual));
    }
    let n = matrix.len();
    let m = &matrix.stationary;
    if m.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("stationary weights must be strictly positive"));
    }
    let root: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = root[i] * matrix.get(i, j) / root[j];
        }
    }
    // symmetrize away the rounding asymmetry
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenfunctions = Vec::with_capacity(n);
    for j in order {
        let col = eig.eigenvectors.column(j);
        let mut phi: Vec<f64> = (0..n).map(|x| col[x] / root[x]).collect();
        // sign convention: largest-magnitude entry positive
        let pivot = phi.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        eigenvalues.push(eig.eigenvalues[j]);
        eigenfunctions.push(phi);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenfunctions,
        stationary: m.clone(),
    })
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `max_{j,k} |Σ_x m(x) φ_j(x) φ_k(x) − δ_jk|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                let g: f64 = (0..n)
                    .map(|x| self.stationary[x] * self.eigenfunctions[j][x] * self.eigenfunctions[k][x])
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// `max_{j,x} |(Pφ_j)(x) − β_j φ_j(x)|`.
    pub fn eigen_residual(&self, matrix: &TransitionMatrix) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for (beta, phi) in self.eigenvalues.iter().zip(&self.eigenfunctions) {
            for x in 0..n {
                let kphi: f64 = matrix.row(x).iter().zip(phi).map(|(p, v)| p * v).sum();
                worst = worst.max((kphi - beta * phi[x]).abs());
            }
        }
        worst
    }

    /// `P(x, y) = m(y) Σ_j β_j φ_j(x) φ_j(y)`.
    pub fn reconstruct(&self, x: usize, y: usize) -> f64 {
        self.stationary[y]
            * self
                .eigenvalues
                .iter()
                .zip(&self.eigenfunctions)
                .map(|(b, phi)| b * phi[x] * phi[y])
                .sum::<f64>()
    }
}

/// `½ √(Σ_{j>0} β_j^{2ℓ} φ_j(s)²)`, capped at 1.
pub fn spectral_bound(eigen: &EigenDecomposition, s: usize, ell: usize) -> f64 {
    let sum: f64 = eigen
        .eigenvalues
        .iter()
        .zip(&eigen.eigenfunctions)
        .skip(1)
        .map(|(b, phi)| b.abs().powi(2 * ell as i32) * phi[s] * phi[s])
        .sum();
    (0.5 * sum.sqrt()).min(1.0)
}

pub fn spectral_bound_curve(eigen: &EigenDecomposition, s: usize, ell_max: usize) -> BoundCurve {
    let values = (0..=ell_max).map(|l| spectral_bound(eigen, s, l)).collect();
    let second = eigen.eigenvalues.get(1).copied().unwrap_or(0.0);
    BoundCurve::new(
        BoundKind::Spectral,
        params([("state", s as f64), ("beta1", second), ("states", eigen.len() as f64)]),
        0,
        values,
    )
}
