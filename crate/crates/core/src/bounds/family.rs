use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{SpaceRepr, Subset, TwoComponentModel};

/// Largest finite parameter space whose subsets are enumerated exhaustively.
pub const MAX_EXHAUSTIVE_THETA: usize = 16;

/// Parameterized family of parameter sets `B` searched by the bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ThetaFamily {
    /// Intervals `[q(δ), q(1 - δ)]` between prior quantiles.
    QuantileIntervals { deltas: Vec<f64> },
    /// Subsets of a finite parameter space: all of them when small,
    /// otherwise the prefixes of a ranking supplied by the caller.
    FiniteSubsets,
}

/// One member of a family together with its scalar parameter (`δ` for
/// quantile intervals, the subset bitmask or prefix length otherwise).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaCandidate {
    pub set: Subset,
    pub param: f64,
}

impl ThetaFamily {
    /// 64 log-spaced `δ` values in `[1e-6, 0.499]`.
    pub fn default_deltas() -> Vec<f64> {
        log_grid(1e-6, 0.499, 64)
    }

    pub fn default_for(model: &TwoComponentModel) -> Self {
        match model.theta_space() {
            SpaceRepr::Finite { .. } => ThetaFamily::FiniteSubsets,
            _ => ThetaFamily::QuantileIntervals {
                deltas: Self::default_deltas(),
            },
        }
    }

    pub fn quantile_interval(model: &TwoComponentModel, delta: f64) -> Result<Subset> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::domain(format!("delta = {delta} outside (0, 1/2)")));
        }
        Ok(Subset::interval(model.prior_quantile(delta)?, model.prior_quantile(1.0 - delta)?))
    }

    /// Materializes the family. `rank` orders finite parameter points from
    /// most to least promising and is only used above the exhaustive limit.
    pub fn candidates(&self, model: &TwoComponentModel, rank: &[usize]) -> Result<Vec<ThetaCandidate>> {
        match self {
            ThetaFamily::QuantileIntervals { deltas } => deltas
                .iter()
                .map(|&d| {
                    Ok(ThetaCandidate {
                        set: Self::quantile_interval(model, d)?,
                        param: d,
                    })
                })
                .collect(),
            ThetaFamily::FiniteSubsets => {
                let nt = match model.theta_space() {
                    SpaceRepr::Finite { points, .. } => points.len(),
                    _ => return Err(Error::Unsupported("subset family needs a finite parameter space".into())),
                };
                Ok(finite_subsets(nt, rank))
            }
        }
    }
}

pub(crate) fn finite_subsets(nt: usize, rank: &[usize]) -> Vec<ThetaCandidate> {
    if nt <= MAX_EXHAUSTIVE_THETA {
        (1u32..(1u32 << nt))
            .map(|mask| ThetaCandidate {
                set: Subset::Indices((0..nt).filter(|t| mask & (1 << t) != 0).collect()),
                param: mask as f64,
            })
            .collect()
    } else {
        (1..=rank.len())
            .map(|k| {
                let mut ix = rank[..k].to_vec();
                ix.sort_unstable();
                ThetaCandidate {
                    set: Subset::Indices(ix),
                    param: k as f64,
                }
            })
            .collect()
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = ThetaFamily::default_deltas();
        assert_eq!(g.len(), 64);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[63] - 0.499).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subsets_enumerated() {
        let c = finite_subsets(3, &[]);
        assert_eq!(c.len(), 7);
        let c = finite_subsets(20, &(0..20).rev().collect::<Vec<_>>());
        assert_eq!(c.len(), 20);
        assert_eq!(c[0].set, Subset::Indices(vec![19]));
    }
}
