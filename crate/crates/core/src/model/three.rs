use crate::error::{Error, Result};

use super::TransitionMatrix;

const NORMALIZATION_TOL: f64 = 1e-9;

/// Finite three-component model with density `f(x₁, x₂, θ)` with respect to
/// `μ₁ × μ₂ × π`.
///
/// The Gibbs sweep updates `θ` given `(x₁, x₂)`, then `x₂` given `(x₁, θ)`,
/// then `x₁` given `(x₂, θ)`; like the two-component sweep it only depends
/// on the data pair `x = (x₁, x₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeComponentModel {
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    pi: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
    h: Vec<f64>,
    h2: Vec<f64>,
}

impl ThreeComponentModel {
    /// `f` is indexed `[x₁][x₂][θ]`.
    pub fn new(mu1: Vec<f64>, mu2: Vec<f64>, pi: Vec<f64>, f: &[Vec<Vec<f64>>]) -> Result<Self> {
        let (n1, n2, nt) = (mu1.len(), mu2.len(), pi.len());
        if n1 == 0 || n2 == 0 || nt == 0 {
            return Err(Error::invalid_model("all three spaces must be nonempty"));
        }
        if f.len() != n1 || f.iter().any(|a| a.len() != n2 || a.iter().any(|b| b.len() != nt)) {
            return Err(Error::invalid_model(format!("f must have shape {n1}x{n2}x{nt}")));
        }
        if mu1.iter().chain(&mu2).chain(&pi).any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid_model("weights must be strictly positive"));
        }
        let flat: Vec<f64> = f.iter().flatten().flatten().copied().collect();
        if flat.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid_model("f must be finite and nonnegative"));
        }
        if (pi.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid_model("pi weights must sum to one"));
        }
        let idx = |i: usize, j: usize, k: usize| (i * n2 + j) * nt + k;
        for k in 0..nt {
            let s: f64 = (0..n1)
                .flat_map(|i| (0..n2).map(move |j| (i, j)))
                .map(|(i, j)| flat[idx(i, j, k)] * mu1[i] * mu2[j])
                .sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::invalid_model(format!(
                    "f(., ., theta_{k}) integrates to {s}; pi must be the theta marginal"
                )));
            }
        }
        let mut m = vec![0.0; n1 * n2];
        let mut h = vec![0.0; n1 * nt];
        let mut h2 = vec![0.0; n2 * nt];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..nt {
                    let v = flat[idx(i, j, k)];
                    m[i * n2 + j] += v * pi[k];
                    h[i * nt + k] += v * mu2[j];
                    h2[j * nt + k] += v * mu1[i];
                }
            }
        }
        if m.iter().chain(&h).chain(&h2).any(|v| *v <= 0.0) {
            return Err(Error::invalid_model("pairwise marginal densities must be strictly positive"));
        }
        Ok(ThreeComponentModel { mu1, mu2, pi, f: flat, m, h, h2 })
    }

    /// Unit data weights, `π` the θ-marginal of the joint masses `p[x₁][x₂][θ]`.
    pub fn from_joint(p: &[Vec<Vec<f64>>]) -> Result<Self> {
        let total: f64 = p.iter().flatten().flatten().sum();
        if !(total > 0.0) {
            return Err(Error::invalid_model("joint table has no mass"));
        }
        let n1 = p.len();
        let n2 = p.first().map_or(0, |a| a.len());
        let nt = p.first().and_then(|a| a.first()).map_or(0, |b| b.len());
        let mut pi = vec![0.0; nt];
        for a in p {
            for b in a {
                for (k, v) in b.iter().enumerate() {
                    if k < nt {
                        pi[k] += v / total;
                    }
                }
            }
        }
        if pi.iter().any(|v| *v <= 0.0) {
            return Err(Error::invalid_model("every theta point needs positive mass"));
        }
        let f: Vec<Vec<Vec<f64>>> = p
            .iter()
            .map(|a| a.iter().map(|b| b.iter().zip(&pi).map(|(v, w)| v / total / w).collect()).collect())
            .collect();
        ThreeComponentModel::new(vec![1.0; n1], vec![1.0; n2], pi, &f)
    }

    /// Same law with `μ₂` scaled by `c` and `f` rescaled to compensate.
    pub fn rescale_mu2(&self, c: f64) -> Result<Self> {
        let (n1, n2, nt) = self.dims();
        let f: Vec<Vec<Vec<f64>>> = (0..n1)
            .map(|i| (0..n2).map(|j| (0..nt).map(|k| self.f(i, j, k) / c).collect()).collect())
            .collect();
        ThreeComponentModel::new(
            self.mu1.clone(),
            self.mu2.iter().map(|w| w * c).collect(),
            self.pi.clone(),
            &f,
        )
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.mu1.len(), self.mu2.len(), self.pi.len())
    }

    #[inline]
    pub fn f(&self, i: usize, j: usize, k: usize) -> f64 {
        let (_, n2, nt) = self.dims();
        self.f[(i * n2 + j) * nt + k]
    }

    /// Density of `(x₁, x₂)` with respect to `μ₁ × μ₂`.
    pub fn m(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.mu2.len() + j]
    }

    /// Density of `(x₁, θ)` with respect to `μ₁ × π`.
    pub fn h(&self, i: usize, k: usize) -> f64 {
        self.h[i * self.pi.len() + k]
    }

    /// Density of `(x₂, θ)` with respect to `μ₂ × π`.
    pub fn h2(&self, j: usize, k: usize) -> f64 {
        self.h2[j * self.pi.len() + k]
    }

    pub fn mu1(&self) -> &[f64] {
        &self.mu1
    }

    pub fn mu2(&self) -> &[f64] {
        &self.mu2
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Transition matrix of the data pair, states ordered `x₁ * n₂ + x₂`.
    pub fn x_chain_matrix(&self) -> Result<TransitionMatrix> {
        let (n1, n2, nt) = self.dims();
        let n = n1 * n2;
        let mut entries = vec![0.0; n * n];
        for i in 0..n1 {
            for j in 0..n2 {
                let row = &mut entries[(i * n2 + j) * n..(i * n2 + j + 1) * n];
                for k in 0..nt {
                    let p_theta = self.f(i, j, k) * self.pi[k] / self.m(i, j);
                    if p_theta == 0.0 {
                        continue;
                    }
                    for j2 in 0..n2 {
                        let p_x2 = self.f(i, j2, k) * self.mu2[j2] / self.h(i, k);
                        if p_x2 == 0.0 {
                            continue;
                        }
                        for i2 in 0..n1 {
                            let p_x1 = self.f(i2, j2, k) * self.mu1[i2] / self.h2(j2, k);
                            row[i2 * n2 + j2] += p_theta * p_x2 * p_x1;
                        }
                    }
                }
            }
        }
        let stationary = (0..n1)
            .flat_map(|i| (0..n2).map(move |j| (i, j)))
            .map(|(i, j)| self.m(i, j) * self.mu1[i] * self.mu2[j])
            .collect();
        TransitionMatrix::new((0..n).map(|s| s as f64).collect(), entries, stationary, vec![0.0; n], 0.0)
    }
}
