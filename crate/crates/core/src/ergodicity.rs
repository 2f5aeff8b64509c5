//! Ergodicity checks for the two-component Gibbs kernel.
//!
//! For finite models ergodicity is decided exactly: after dropping null
//! points, the kernel is ergodic iff the bipartite support graph with an
//! edge `x - θ` whenever `f(x, θ) > 0` is connected. A disconnected graph
//! yields events `A`, `B` (one component) with `P(A × Bᶜ) = P(Aᶜ × B) = 0`.
//! For other models only the rectangle sufficient condition is available,
//! evaluated on the represented grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FiniteModel, SpaceRepr, Subset, TwoComponentModel};

/// Rectangle `A × B` used by the sufficient condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectanglePair {
    pub a: Subset,
    pub b: Subset,
}

impl RectanglePair {
    pub fn new(a: Subset, b: Subset) -> Result<Self> {
        if a.is_empty_descriptor() || b.is_empty_descriptor() {
            return Err(Error::domain("rectangle sides must be nonempty"));
        }
        Ok(RectanglePair { a, b })
    }

    pub fn full() -> Self {
        RectanglePair {
            a: Subset::All,
            b: Subset::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Condition3Failure {
    /// `P(A × B) = 0`.
    NullRectangle,
    /// A point of `A × B` where `f` vanishes.
    ZeroInside { x: f64, theta: f64 },
    /// A point outside `A ∪ B` (in the cylinder sense) where `f > 0`.
    PositiveOutside { x: f64, theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition3Report {
    pub holds: bool,
    pub failure: Option<Condition3Failure>,
    /// True when the check ran over a quadrature grid instead of every point.
    pub grid_certified: bool,
}

fn grid_with_endpoints(space: &SpaceRepr, s: &Subset) -> Vec<f64> {
    let mut g = space.grid();
    if let (SpaceRepr::Real1D(rule), Subset::Interval { lo, hi }) = (space, s) {
        for e in [*lo, *hi] {
            if e.is_finite() && rule.contains(e) {
                g.push(e);
            }
        }
        g.sort_by(f64::total_cmp);
    }
    g
}

fn member(space: &SpaceRepr, s: &Subset, value: f64) -> bool {
    let index = match space {
        SpaceRepr::Real1D(rule) => rule.nodes.iter().position(|n| *n == value).unwrap_or(usize::MAX),
        other => other.index_of(value).unwrap_or(usize::MAX),
    };
    s.contains(index, value)
}

/// Checks `{X ∈ A} ∩ {T ∈ B} ⊂ {f > 0} ⊂ {X ∈ A} ∪ {T ∈ B}` with
/// `P(A × B) > 0`; on failure returns a violating point.
pub fn check_condition_3(model: &TwoComponentModel, pair: &RectanglePair) -> Result<Condition3Report> {
    let xs = grid_with_endpoints(model.x_space(), &pair.a);
    let ts = grid_with_endpoints(model.theta_space(), &pair.b);
    let grid_certified = !model.x_space().is_discrete()
        || !model.theta_space().is_discrete()
        || matches!(model.x_space(), SpaceRepr::TruncatedCountable { .. });
    let report = |failure: Option<Condition3Failure>| Condition3Report {
        holds: failure.is_none(),
        failure,
        grid_certified,
    };
    if !model.rect_has_positive_mass(&pair.a, &pair.b)? {
        return Ok(report(Some(Condition3Failure::NullRectangle)));
    }
    for &x in &xs {
        let in_a = member(model.x_space(), &pair.a, x);
        for &t in &ts {
            let in_b = member(model.theta_space(), &pair.b, t);
            let positive = model.joint_density(x, t)? > 0.0;
            if in_a && in_b && !positive {
                return Ok(report(Some(Condition3Failure::ZeroInside { x, theta: t })));
            }
            if !in_a && !in_b && positive {
                return Ok(report(Some(Condition3Failure::PositiveOutside { x, theta: t })));
            }
        }
    }
    Ok(report(None))
}

/// One connected block of the support graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub x_indices: Vec<usize>,
    pub theta_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub ergodic: bool,
    pub components: Vec<Component>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Exact ergodicity decision for a finite model.
pub fn check_ergodic_finite(model: &FiniteModel) -> ErgodicityReport {
    let (nx, nt) = (model.nx(), model.nt());
    let x_live: Vec<bool> = (0..nx).map(|x| (0..nt).any(|t| model.mass(x, t) > 0.0)).collect();
    let t_live: Vec<bool> = (0..nt).map(|t| (0..nx).any(|x| model.mass(x, t) > 0.0)).collect();
    // nodes 0..nx are data points, nx.. parameter points
    let mut uf = UnionFind::new(nx + nt);
    for x in 0..nx {
        for t in 0..nt {
            if model.mass(x, t) > 0.0 {
                uf.union(x, nx + t);
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut components: Vec<Component> = Vec::new();
    let slot = |uf: &mut UnionFind, node: usize, roots: &mut Vec<usize>, comps: &mut Vec<Component>| {
        let r = uf.find(node);
        match roots.iter().position(|q| *q == r) {
            Some(i) => i,
            None => {
                roots.push(r);
                comps.push(Component {
                    x_indices: vec![],
                    theta_indices: vec![],
                });
                comps.len() - 1
            }
        }
    };
    for x in (0..nx).filter(|x| x_live[*x]) {
        let c = slot(&mut uf, x, &mut roots, &mut components);
        components[c].x_indices.push(x);
    }
    for t in (0..nt).filter(|t| t_live[*t]) {
        let c = slot(&mut uf, nx + t, &mut roots, &mut components);
        components[c].theta_indices.push(t);
    }
    ErgodicityReport {
        ergodic: components.len() == 1,
        components,
    }
}

/// Ergodicity decision for a model whose spaces are finite (or whose
/// parameter space can be replaced by its quadrature nodes).
pub fn check_ergodic(model: &TwoComponentModel) -> Result<ErgodicityReport> {
    Ok(check_ergodic_finite(&model.discretized()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FiniteModelConfig;

    fn block_diagonal() -> FiniteModel {
        FiniteModel::new(FiniteModelConfig {
            x_points: vec![0.0, 1.0],
            theta_points: vec![0.0, 1.0],
            mu_weights: vec![1.0, 1.0],
            pi_weights: vec![0.5, 0.5],
            f: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        })
        .unwrap()
    }

    #[test]
    fn positive_grid_is_ergodic() {
        let m = FiniteModel::from_joint(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0, 2.0],
            &[vec![1.0, 2.0, 3.0], vec![2.0, 2.0, 1.0], vec![1.0, 1.0, 5.0]],
        )
        .unwrap();
        let r = check_ergodic_finite(&m);
        assert!(r.ergodic);
        assert_eq!(r.components.len(), 1);
    }

    #[test]
    fn block_diagonal_decomposes() {
        let r = check_ergodic_finite(&block_diagonal());
        assert!(!r.ergodic);
        assert_eq!(
            r.components,
            vec![
                Component {
                    x_indices: vec![0],
                    theta_indices: vec![0]
                },
                Component {
                    x_indices: vec![1],
                    theta_indices: vec![1]
                },
            ]
        );
    }

    #[test]
    fn discretized_beta_binomial_is_ergodic() {
        let bb = TwoComponentModel::beta_binomial(5).unwrap();
        assert!(check_ergodic(&bb).unwrap().ergodic);
    }

    #[test]
    fn condition_3_full_rectangle_on_beta_binomial() {
        let bb = TwoComponentModel::beta_binomial(7).unwrap();
        let r = check_condition_3(&bb, &RectanglePair::full()).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.grid_certified);
    }

    #[test]
    fn condition_3_fails_on_block_diagonal() {
        let m = TwoComponentModel::finite("diag", block_diagonal());
        let pair = RectanglePair::new(Subset::Indices(vec![0]), Subset::Indices(vec![0])).unwrap();
        let r = check_condition_3(&m, &pair).unwrap();
        assert!(!r.holds);
        assert_eq!(r.failure, Some(Condition3Failure::PositiveOutside { x: 1.0, theta: 1.0 }));
    }

    #[test]
    fn condition_3_null_rectangle() {
        let m = TwoComponentModel::finite("diag", block_diagonal());
        let pair = RectanglePair::new(Subset::Indices(vec![0]), Subset::Indices(vec![1])).unwrap();
        let r = check_condition_3(&m, &pair).unwrap();
        assert_eq!(r.failure, Some(Condition3Failure::NullRectangle));
        let g = TwoComponentModel::gaussian(0.25, 0.25).unwrap();
        let pair = RectanglePair::new(Subset::All, Subset::interval(2.0, 2.0)).unwrap();
        assert_eq!(check_condition_3(&g, &pair).unwrap().failure, Some(Condition3Failure::NullRectangle));
    }

    #[test]
    fn condition_3_zero_inside() {
        // θ = 0 gives f(x, 0) = 0 for x > 0
        let bb = TwoComponentModel::beta_binomial(3).unwrap();
        let pair = RectanglePair::new(Subset::All, Subset::interval(0.0, 0.5)).unwrap();
        let r = check_condition_3(&bb, &pair).unwrap();
        assert!(matches!(r.failure, Some(Condition3Failure::ZeroInside { theta, .. }) if theta == 0.0));
    }

    #[test]
    fn empty_rectangle_rejected() {
        assert!(RectanglePair::new(Subset::Indices(vec![]), Subset::All).is_err());
    }
}
