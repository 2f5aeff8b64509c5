use serde::Serialize;

use crate::error::{Error, Result};

/// Options for materializing a data-coordinate transition matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSettings {
    /// Truncation point for countable spaces; chosen from `tail_tolerance`
    /// when absent.
    pub n_max: Option<usize>,
    /// Largest admissible stationary mass outside the materialized states.
    pub tail_tolerance: f64,
}

impl Default for MatrixSettings {
    fn default() -> Self {
        MatrixSettings {
            n_max: None,
            tail_tolerance: 1e-12,
        }
    }
}

impl MatrixSettings {
    pub fn with_n_max(n_max: usize) -> Self {
        MatrixSettings {
            n_max: Some(n_max),
            tail_tolerance: 1.0,
        }
    }
}

/// Row-(sub)stochastic matrix of a marginal chain over the materialized
/// states, with its stationary weights and truncation bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionMatrix {
    /// Values of the materialized states.
    pub states: Vec<f64>,
    entries: Vec<f64>,
    /// Stationary probabilities of the materialized states.
    pub stationary: Vec<f64>,
    /// Upper bound on `P(x → outside)` for each row; zero for finite spaces.
    pub row_tail: Vec<f64>,
    /// Stationary mass outside the materialized states.
    pub tail_bound: f64,
}

impl TransitionMatrix {
    pub fn new(
        states: Vec<f64>,
        entries: Vec<f64>,
        stationary: Vec<f64>,
        row_tail: Vec<f64>,
        tail_bound: f64,
    ) -> Result<Self> {
        let n = states.len();
        if entries.len() != n * n || stationary.len() != n || row_tail.len() != n {
            return Err(Error::invalid_model("transition matrix dimensions disagree"));
        }
        Ok(TransitionMatrix {
            states,
            entries,
            stationary,
            row_tail,
            tail_bound,
        })
    }

    /// Dense stochastic matrix with no truncation, e.g. for hand-made tests.
    pub fn from_rows(rows: &[Vec<f64>], stationary: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let states = (0..n).map(|i| i as f64).collect();
        let entries = rows.iter().flatten().copied().collect();
        TransitionMatrix::new(states, entries, stationary, vec![0.0; n], 0.0)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.tail_bound > 0.0 || self.row_tail.iter().any(|r| *r > 0.0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn state_index(&self, x: f64) -> Result<usize> {
        self.states
            .iter()
            .position(|s| *s == x)
            .ok_or_else(|| Error::domain(format!("{x} is not a materialized state")))
    }

    /// Row vector times matrix.
    pub fn step(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, &k) in out.iter_mut().zip(self.row(i)) {
                *o += p * k;
            }
        }
        out
    }

    /// Largest `|row sum + row tail - 1|`.
    pub fn row_sum_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.row(i).iter().sum::<f64>() + self.row_tail[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|m(x)P(x,y) - m(y)P(y,x)|`.
    pub fn reversibility_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.stationary[i] * self.get(i, j) - self.stationary[j] * self.get(j, i);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Largest `|(mP)(y) - m(y)|`.
    pub fn stationarity_residual(&self) -> f64 {
        self.step(&self.stationary)
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
