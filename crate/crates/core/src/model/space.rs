use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

/// Concrete representation of one coordinate space together with its
/// reference measure (μ for the data coordinate, π for the parameter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpaceRepr {
    /// Finitely many points with strictly positive weights.
    Finite { points: Vec<f64>, weights: Vec<f64> },
    /// `{0, 1, 2, ...}` under counting measure, materialized as `0..=n_max`.
    /// `tail_bound` certifies the stationary mass beyond `n_max`.
    TruncatedCountable { n_max: usize, tail_bound: f64 },
    /// A real interval discretized by a Gauss-type rule whose weights
    /// integrate against the reference measure.
    Real1D(QuadratureRule),
}

impl SpaceRepr {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceRepr::Finite { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(Error::invalid_model(
                        "finite space needs matching, nonempty point and weight arrays",
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::invalid_model("finite space weights must be strictly positive"));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(Error::invalid_model("finite space points must be finite"));
                }
                for (i, p) in points.iter().enumerate() {
                    if points[..i].contains(p) {
                        return Err(Error::invalid_model(format!("duplicate point {p}")));
                    }
                }
                Ok(())
            }
            SpaceRepr::TruncatedCountable { tail_bound, .. } => {
                if !(0.0..1.0).contains(tail_bound) {
                    return Err(Error::invalid_model("tail bound must lie in [0, 1)"));
                }
                Ok(())
            }
            SpaceRepr::Real1D(rule) => rule.validate().map_err(Error::InvalidModel),
        }
    }

    /// Represented points: the finite points, `0..=n_max`, or the quadrature nodes.
    pub fn grid(&self) -> Vec<f64> {
        match self {
            SpaceRepr::Finite { points, .. } => points.clone(),
            SpaceRepr::TruncatedCountable { n_max, .. } => (0..=*n_max).map(|k| k as f64).collect(),
            SpaceRepr::Real1D(rule) => rule.nodes.clone(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, SpaceRepr::Real1D(_))
    }

    /// Index of a discrete point. Countable spaces accept every nonnegative
    /// integer, not only those below `n_max`.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        match self {
            SpaceRepr::Finite { points, .. } => points
                .iter()
                .position(|p| *p == x)
                .ok_or_else(|| Error::domain(format!("{x} is not a point of the finite space"))),
            SpaceRepr::TruncatedCountable { .. } => {
                if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 {
                    Ok(x as usize)
                } else {
                    Err(Error::domain(format!("{x} is not a nonnegative integer")))
                }
            }
            SpaceRepr::Real1D(_) => Err(Error::domain("continuous space has no point index")),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            SpaceRepr::Real1D(rule) => x.is_finite() && rule.contains(x),
            _ => self.index_of(x).is_ok(),
        }
    }
}

/// Subset descriptor over a [`SpaceRepr`]: index sets for discrete spaces,
/// intervals for either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Subset {
    All,
    Indices(Vec<usize>),
    Interval { lo: f64, hi: f64 },
}

impl Subset {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Subset::Interval { lo, hi }
    }

    /// Membership of the point with value `value` and (for discrete
    /// spaces or grids) index `index`.
    pub fn contains(&self, index: usize, value: f64) -> bool {
        match self {
            Subset::All => true,
            Subset::Indices(ix) => ix.contains(&index),
            Subset::Interval { lo, hi } => value >= *lo && value <= *hi,
        }
    }

    pub fn is_empty_descriptor(&self) -> bool {
        match self {
            Subset::All => false,
            Subset::Indices(ix) => ix.is_empty(),
            Subset::Interval { lo, hi } => !(lo <= hi),
        }
    }
}
