use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-9;

/// JSON document describing a custom discrete model.
///
/// `f` is the joint density with respect to `mu × pi`, row-major with one
/// row per x point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteModelConfig {
    pub x_points: Vec<f64>,
    pub theta_points: Vec<f64>,
    pub mu_weights: Vec<f64>,
    pub pi_weights: Vec<f64>,
    pub f: Vec<Vec<f64>>,
}

/// Joint density table over a finite product space.
///
/// Invariants established by [`FiniteModel::new`]: `pi` is the parameter
/// marginal of the joint law, so each column of `f` integrates to one
/// against `mu`, and every data point has positive marginal density.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    pub(crate) x_points: Vec<f64>,
    pub(crate) theta_points: Vec<f64>,
    pub(crate) mu: Vec<f64>,
    pub(crate) pi: Vec<f64>,
    f: Vec<f64>,
    marginal: Vec<f64>,
}

impl FiniteModel {
    pub fn new(config: FiniteModelConfig) -> Result<Self> {
        let FiniteModelConfig {
            x_points,
            theta_points,
            mu_weights,
            pi_weights,
            f,
        } = config;
        let (nx, nt) = (x_points.len(), theta_points.len());
        if nx == 0 || nt == 0 {
            return Err(Error::invalid_model("x_points and theta_points must be nonempty"));
        }
        if mu_weights.len() != nx || pi_weights.len() != nt {
            return Err(Error::invalid_model("weight arrays must match the point arrays"));
        }
        if f.len() != nx || f.iter().any(|row| row.len() != nt) {
            return Err(Error::invalid_model(format!("f must be a {nx}x{nt} matrix")));
        }
        check_points("x_points", &x_points)?;
        check_points("theta_points", &theta_points)?;
        if mu_weights.iter().chain(&pi_weights).any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid_model("mu and pi weights must be strictly positive"));
        }
        if let Some(v) = f.iter().flatten().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid_model(format!("f has a negative or non-finite entry {v}")));
        }
        let pi_total: f64 = pi_weights.iter().sum();
        if (pi_total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid_model(format!("pi weights sum to {pi_total}, expected 1")));
        }
        for t in 0..nt {
            let col: f64 = (0..nx).map(|x| f[x][t] * mu_weights[x]).sum();
            if col == 0.0 {
                return Err(Error::invalid_model(format!("theta point {t} has zero marginal")));
            }
            if (col - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::invalid_model(format!(
                    "f(., theta_{t}) integrates to {col} against mu; pi must be the theta marginal"
                )));
            }
        }
        let marginal: Vec<f64> = f
            .iter()
            .map(|row| row.iter().zip(&pi_weights).map(|(v, p)| v * p).sum())
            .collect();
        if let Some(x) = marginal.iter().position(|m| *m <= 0.0) {
            return Err(Error::invalid_model(format!("x point {x} has zero marginal density")));
        }
        Ok(FiniteModel {
            x_points,
            theta_points,
            mu: mu_weights,
            pi: pi_weights,
            f: f.into_iter().flatten().collect(),
            marginal,
        })
    }

    /// Builds a model from joint probability masses `joint[x][θ]` with unit
    /// μ weights and π the θ-marginal of the table.
    pub fn from_joint(x_points: Vec<f64>, theta_points: Vec<f64>, joint: &[Vec<f64>]) -> Result<Self> {
        let total: f64 = joint.iter().flatten().sum();
        if !(total > 0.0) {
            return Err(Error::invalid_model("joint table has no mass"));
        }
        let nt = theta_points.len();
        let pi: Vec<f64> = (0..nt)
            .map(|t| joint.iter().map(|row| row.get(t).copied().unwrap_or(0.0)).sum::<f64>() / total)
            .collect();
        if pi.iter().any(|p| *p <= 0.0) {
            return Err(Error::invalid_model("every theta point needs positive mass"));
        }
        let f = joint
            .iter()
            .map(|row| row.iter().zip(&pi).map(|(p, w)| p / total / w).collect())
            .collect();
        FiniteModel::new(FiniteModelConfig {
            mu_weights: vec![1.0; x_points.len()],
            x_points,
            theta_points,
            pi_weights: pi,
            f,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: FiniteModelConfig = serde_json::from_str(s)?;
        FiniteModel::new(config)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        FiniteModel::from_json_str(&text)
    }

    pub fn to_config(&self) -> FiniteModelConfig {
        FiniteModelConfig {
            x_points: self.x_points.clone(),
            theta_points: self.theta_points.clone(),
            mu_weights: self.mu.clone(),
            pi_weights: self.pi.clone(),
            f: self.f.chunks(self.nt()).map(|r| r.to_vec()).collect(),
        }
    }

    pub fn nx(&self) -> usize {
        self.x_points.len()
    }

    pub fn nt(&self) -> usize {
        self.theta_points.len()
    }

    pub fn x_points(&self) -> &[f64] {
        &self.x_points
    }

    pub fn theta_points(&self) -> &[f64] {
        &self.theta_points
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    #[inline]
    pub fn f(&self, x: usize, t: usize) -> f64 {
        self.f[x * self.nt() + t]
    }

    pub fn marginal(&self, x: usize) -> f64 {
        self.marginal[x]
    }

    /// Joint probability mass of cell `(x, θ)`.
    pub fn mass(&self, x: usize, t: usize) -> f64 {
        self.f(x, t) * self.mu[x] * self.pi[t]
    }

    /// P(x → x') of the data-coordinate chain.
    pub fn transition(&self, x: usize, y: usize) -> f64 {
        let s: f64 = (0..self.nt())
            .map(|t| self.pi[t] * self.f(x, t) * self.f(y, t))
            .sum();
        s * self.mu[y] / self.marginal[x]
    }
}

fn check_points(name: &str, pts: &[f64]) -> Result<()> {
    if pts.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid_model(format!("{name} must be finite")));
    }
    for (i, p) in pts.iter().enumerate() {
        if pts[..i].contains(p) {
            return Err(Error::invalid_model(format!("{name} has duplicate value {p}")));
        }
    }
    Ok(())
}
