//! Ground-truth total variation: exact matrix powers for finite and truncated
//! chains, the closed form for the Gaussian data chain, the bivariate
//! sandwich, and Monte Carlo simulation.
//!
//! TV is always the sup-over-events distance, i.e. half the L1 distance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::model::{MatrixSettings, ModelKind, ThreeComponentModel, TransitionMatrix, TwoComponentModel};
use crate::par::Execution;

/// Default precision requested from truncated oracles.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

fn tv_to(dist: &[f64], target: &[f64]) -> f64 {
    0.5 * dist.iter().zip(target).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

fn start_vector(matrix: &TransitionMatrix, x0: f64) -> Result<Vec<f64>> {
    let i = matrix.state_index(x0)?;
    let mut q = vec![0.0; matrix.len()];
    q[i] = 1.0;
    Ok(q)
}

/// `TVₓ(ℓ)` for `ℓ = 0..=ell_max` on a finite chain started at `x0`.
pub fn exact_tv_finite(matrix: &TransitionMatrix, x0: f64, ell_max: usize) -> Result<Vec<f64>> {
    if matrix.is_truncated() {
        return Err(Error::Unsupported(
            "matrix is truncated; use exact_tv_truncated".into(),
        ));
    }
    let mut q = start_vector(matrix, x0)?;
    let mut out = Vec::with_capacity(ell_max + 1);
    out.push(tv_to(&q, &matrix.stationary));
    for _ in 0..ell_max {
        q = matrix.step(&q);
        out.push(tv_to(&q, &matrix.stationary));
    }
    Ok(out)
}

/// Certified enclosure of the TV of a countable chain at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvInterval {
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

impl TvInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// TV of a truncated chain with certified error bars.
///
/// Mass that the materialized rows send outside is tracked exactly (`L`);
/// together with the stationary tail `T` the true distance lies within
/// `(L + T) / 2` of the point estimate.
pub fn exact_tv_truncated(
    matrix: &TransitionMatrix,
    x0: f64,
    ell_max: usize,
    tolerance: f64,
) -> Result<Vec<TvInterval>> {
    let mut q = start_vector(matrix, x0)?;
    let mut leaked = 0.0;
    let mut out = Vec::with_capacity(ell_max + 1);
    for ell in 0..=ell_max {
        if ell > 0 {
            leaked += q.iter().zip(&matrix.row_tail).map(|(p, t)| p * t).sum::<f64>();
            q = matrix.step(&q);
        }
        let half = 0.5 * (leaked + matrix.tail_bound);
        if half > tolerance {
            return Err(Error::Truncation {
                tail: half,
                tolerance,
            });
        }
        let inside: f64 = q.iter().zip(&matrix.stationary).map(|(p, m)| (p - m).abs()).sum();
        let point = (0.5 * (inside + matrix.tail_bound)).min(1.0);
        out.push(TvInterval {
            lower: (point - half).max(0.0),
            point,
            upper: (point + half).min(1.0),
        });
    }
    Ok(out)
}

/// `Φ(b) - Φ(a)` for the standard normal, without cancellation in the tails.
fn normal_mass(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a / s) - erfc(b / s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / s) - erfc(-a / s))
    } else {
        1.0 - 0.5 * (erfc(-a / s) + erfc(b / s))
    }
}

/// TV between `N(m1, v1)` and `N(m2, v2)` from the density crossing points.
pub fn normal_tv(m1: f64, v1: f64, m2: f64, v2: f64) -> Result<f64> {
    if !(v1 > 0.0 && v2 > 0.0 && v1.is_finite() && v2.is_finite() && m1.is_finite() && m2.is_finite()) {
        return Err(Error::domain(format!("degenerate normals N({m1}, {v1}) and N({m2}, {v2})")));
    }
    if (v1 - v2).abs() <= 1e-14 * v1.max(v2) {
        let sd = (0.5 * (v1 + v2)).sqrt();
        return Ok(erf((m1 - m2).abs() / (2.0 * std::f64::consts::SQRT_2 * sd)));
    }
    // ln p1 - ln p2 = A x² + B x + C
    let a = 0.5 / v2 - 0.5 / v1;
    let b = m1 / v1 - m2 / v2;
    let c = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1 - 0.5 * (v1 / v2).ln();
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Numeric {
            what: "normal densities without crossing".into(),
            residual: disc,
        });
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (mut r1, mut r2) = if q == 0.0 {
        let r = (-c / a).sqrt();
        (-r, r)
    } else {
        (q / a, c / q)
    };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let (s1, s2) = (v1.sqrt(), v2.sqrt());
    let p1 = normal_mass((r1 - m1) / s1, (r2 - m1) / s1);
    let p2 = normal_mass((r1 - m2) / s2, (r2 - m2) / s2);
    Ok((p1 - p2).abs().min(1.0))
}

/// TV between the AR(1) law `K^ℓ(x0, ·)` and `N(0, stat_var)`.
pub fn exact_tv_gaussian(a: f64, step_var: f64, stat_var: f64, x0: f64, ell: usize) -> Result<f64> {
    if !(a.abs() < 1.0) {
        return Err(Error::domain(format!("AR coefficient {a} must satisfy |a| < 1")));
    }
    if !(step_var > 0.0 && stat_var > 0.0) {
        return Err(Error::domain("variances must be positive"));
    }
    if !x0.is_finite() {
        return Err(Error::domain("x0 must be finite"));
    }
    if ell == 0 {
        // point mass against an absolutely continuous law
        return Ok(1.0);
    }
    let a_ell = a.powi(ell as i32);
    let var = step_var * (1.0 - a_ell * a_ell) / (1.0 - a * a);
    normal_tv(a_ell * x0, var, 0.0, stat_var)
}

/// How a sandwich was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvMethod {
    FiniteMatrix,
    TruncatedMatrix,
    GaussianClosedForm,
}

impl TvMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TvMethod::FiniteMatrix => "finite-matrix",
            TvMethod::TruncatedMatrix => "truncated-matrix",
            TvMethod::GaussianClosedForm => "gaussian-closed-form",
        }
    }
}

/// Bracket `TVₓ(ℓ) ≤ ‖J^ℓ(x0, ·) - P‖ ≤ TVₓ(ℓ-1)` on the joint chain.
///
/// The data marginal of the joint law is the data chain, and marginalizing
/// contracts TV. Conversely, the joint law at step `ℓ` is the step `ℓ-1`
/// data law pushed through the common kernel `x ↦ (θ', x')`, which also
/// contracts TV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TVSandwich {
    pub x0: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: TvMethod,
    /// Absolute numerical error allowed on every entry.
    pub error_budget: f64,
}

impl TVSandwich {
    fn from_marginal(x0: Vec<f64>, tv: Vec<f64>, method: TvMethod, error_budget: f64) -> Self {
        let mut upper = Vec::with_capacity(tv.len());
        upper.push(1.0);
        upper.extend_from_slice(&tv[..tv.len().saturating_sub(1)]);
        TVSandwich {
            x0,
            lower: tv,
            upper,
            method,
            error_budget,
        }
    }

    pub fn ell_max(&self) -> usize {
        self.lower.len().saturating_sub(1)
    }
}

/// Truncation fine enough that leakage over `ell_max` steps stays within
/// [`TRUNCATION_TOLERANCE`]. Started at `x0`, the step law is at most
/// `1 / m(x0) = 2^{x0+1}` times the stationary law, which bounds the mass
/// sent past the cut at each step.
fn sandwich_truncation(model: &TwoComponentModel, x0: f64, ell_max: usize) -> MatrixSettings {
    let ratio = 2f64.powf((x0 + 1.0).min(60.0));
    let per_step = TRUNCATION_TOLERANCE / ((ell_max as f64 + 2.0) * ratio);
    let own = match model.x_space() {
        crate::model::SpaceRepr::TruncatedCountable { n_max, .. } => *n_max,
        _ => 0,
    };
    MatrixSettings {
        n_max: Some(crate::model::poisson_gamma_n_max(per_step).max(own)),
        tail_tolerance: TRUNCATION_TOLERANCE,
    }
}

/// Sandwich for a two-component model started at data value `x0`.
pub fn bivariate_tv_sandwich(model: &TwoComponentModel, x0: f64, ell_max: usize) -> Result<TVSandwich> {
    match model.kind() {
        ModelKind::Gaussian { .. } => {
            let g = model.gaussian_ar1().expect("gaussian");
            let tv = (0..=ell_max)
                .map(|l| exact_tv_gaussian(g.coef, g.step_var, g.stat_var, x0, l))
                .collect::<Result<Vec<_>>>()?;
            Ok(TVSandwich::from_marginal(vec![x0], tv, TvMethod::GaussianClosedForm, 1e-12))
        }
        ModelKind::PoissonGamma => {
            let matrix = model.x_chain_matrix(sandwich_truncation(model, x0, ell_max))?;
            let iv = exact_tv_truncated(&matrix, x0, ell_max, TRUNCATION_TOLERANCE)?;
            let budget = iv.iter().map(|i| 0.5 * i.width()).fold(0.0, f64::max);
            let tv = iv.iter().map(|i| i.point).collect();
            Ok(TVSandwich::from_marginal(vec![x0], tv, TvMethod::TruncatedMatrix, budget))
        }
        ModelKind::BetaBinomial { .. } | ModelKind::Finite(_) => {
            let matrix = model.x_chain_matrix(MatrixSettings::default())?;
            let tv = exact_tv_finite(&matrix, x0, ell_max)?;
            Ok(TVSandwich::from_marginal(vec![x0], tv, TvMethod::FiniteMatrix, 1e-12))
        }
    }
}

/// Sandwich for a three-component model started at state indices `(i, j)`
/// of `(x₁, x₂)`; the data chain lives on the pairs.
pub fn three_component_tv_sandwich(
    model: &ThreeComponentModel,
    start: (usize, usize),
    ell_max: usize,
) -> Result<TVSandwich> {
    let (n1, n2, _) = model.dims();
    if start.0 >= n1 || start.1 >= n2 {
        return Err(Error::domain(format!("start {start:?} outside the {n1} x {n2} data grid")));
    }
    let matrix = model.x_chain_matrix()?;
    let tv = exact_tv_finite(&matrix, (start.0 * n2 + start.1) as f64, ell_max)?;
    Ok(TVSandwich::from_marginal(
        vec![start.0 as f64, start.1 as f64],
        tv,
        TvMethod::FiniteMatrix,
        1e-12,
    ))
}

/// Mean, variance and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Moments {
    pub fn of(sample: &[f64]) -> Self {
        let n = sample.len() as f64;
        if sample.is_empty() {
            return Moments {
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = sample.iter().sum::<f64>() / n;
        let variance = if sample.len() > 1 {
            sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Moments {
            mean,
            variance,
            std_error: (variance / n).sqrt(),
        }
    }
}

/// Terminal states of independent Gibbs trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub x0: f64,
    pub steps: usize,
    pub seed: u64,
    pub terminal_x: Vec<f64>,
    /// Last parameter draw of each chain; empty when `steps = 0`.
    pub terminal_theta: Vec<f64>,
    pub x: Moments,
    pub theta: Option<Moments>,
}

pub fn simulate_chain(model: &TwoComponentModel, x0: f64, steps: usize, n_chains: usize, seed: u64) -> Result<Simulation> {
    simulate_chain_with(model, x0, steps, n_chains, seed, Execution::default())
}

/// Runs `n_chains` sweeps of length `steps` from `x0`; chain `i` draws from
/// ChaCha8 keyed by `seed` on stream `i`, so output does not depend on `exec`.
pub fn simulate_chain_with(
    model: &TwoComponentModel,
    x0: f64,
    steps: usize,
    n_chains: usize,
    seed: u64,
    exec: Execution,
) -> Result<Simulation> {
    if !model.x_space().contains(x0) && !matches!(model.kind(), ModelKind::Gaussian { .. }) {
        return Err(Error::domain(format!("x0 = {x0} is not a state of {}", model.name())));
    }
    let runs: Vec<Result<(f64, f64)>> = exec.map_range(n_chains, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let (mut x, mut theta) = (x0, f64::NAN);
        for _ in 0..steps {
            (x, theta) = model.gibbs_step(x, &mut rng)?;
        }
        Ok((x, theta))
    });
    let mut terminal_x = Vec::with_capacity(n_chains);
    let mut terminal_theta = Vec::with_capacity(if steps > 0 { n_chains } else { 0 });
    for r in runs {
        let (x, t) = r?;
        terminal_x.push(x);
        if steps > 0 {
            terminal_theta.push(t);
        }
    }
    let x = Moments::of(&terminal_x);
    let theta = (steps > 0).then(|| Moments::of(&terminal_theta));
    Ok(Simulation {
        x0,
        steps,
        seed,
        terminal_x,
        terminal_theta,
        x,
        theta,
    })
}
