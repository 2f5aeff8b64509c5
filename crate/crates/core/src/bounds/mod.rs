//! Analytical convergence bounds and their certificates.
//!
//! * uniform minorization over the whole data space: `(1 - u / sup m)^ℓ`
//! * drift plus minorization on a small set (Rosenthal-type):
//!   `(1 - ε)^{rℓ} + t^ℓ (1 + α/(1-β) + φ(x₀))`
//! * the three-component uniform bound `(1 - v / sup m)^ℓ`
//! * the Beta/Binomial lower and upper bounds driven by `β₁ = 1 - 2/(n+2)`
//! * the spectral bound for reversible finite chains ([`spectral`])

mod curve;
mod family;
pub mod spectral;

pub use curve::{params_hash, BoundCurve, BoundKind};
pub use family::{log_grid, ThetaCandidate, ThetaFamily, MAX_EXHAUSTIVE_THETA};
pub use spectral::{numeric_eigendecomposition, spectral_bound, spectral_bound_curve, EigenDecomposition};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DriftFn, SpaceRepr, Subset, ThreeComponentModel, TwoComponentModel};
use crate::par::Execution;
use curve::params;
pub(crate) use curve::params as curve_params;
use family::finite_subsets;

/// Relative margin by which `d` must exceed `2α/(1-β)`.
pub const D_MARGIN: f64 = 1e-6;

/// Drift condition `Jφ(x) ≤ α + βφ(x)` checked on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCertificate {
    pub phi: DriftFn,
    pub alpha: f64,
    pub beta: f64,
    pub verified_on: Vec<f64>,
    /// Largest `Jφ(x) - α - βφ(x)` seen on the grid (nonpositive up to rounding).
    pub worst_excess: f64,
}

impl DriftCertificate {
    pub fn verify(model: &TwoComponentModel, phi: DriftFn, alpha: f64, beta: f64, grid: &[f64]) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidCertificate(format!("alpha = {alpha} must be nonnegative")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidCertificate(format!("beta = {beta} must lie in (0, 1)")));
        }
        if grid.is_empty() {
            return Err(Error::InvalidCertificate("empty verification grid".into()));
        }
        let mut worst = f64::NEG_INFINITY;
        for &x in grid {
            let lhs = model.drift_expectation(&phi, x)?;
            let rhs = alpha + beta * model.drift_value(&phi, x)?;
            let excess = lhs - rhs;
            if excess > 1e-9 * (1.0 + rhs.abs()) {
                return Err(Error::InvalidCertificate(format!(
                    "drift condition fails at x = {x}: J phi = {lhs} > {rhs}"
                )));
            }
            worst = worst.max(excess);
        }
        Ok(DriftCertificate {
            phi,
            alpha,
            beta,
            verified_on: grid.to_vec(),
            worst_excess: worst,
        })
    }

    /// Verifies the model's closed-form drift constants on its default grid.
    pub fn for_model(model: &TwoComponentModel) -> Result<Self> {
        let (phi, alpha, beta) = model
            .default_drift_constants()
            .ok_or_else(|| Error::CertificateUnavailable(format!("{} has no known drift function", model.name())))?;
        DriftCertificate::verify(model, phi, alpha, beta, &default_drift_grid(model))
    }

    /// `2α / (1 - β)`, the exclusive lower limit for `d`.
    pub fn d_threshold(&self) -> f64 {
        2.0 * self.alpha / (1.0 - self.beta)
    }

    pub fn d_min(&self) -> f64 {
        let th = self.d_threshold();
        if th > 0.0 {
            (1.0 + D_MARGIN) * th
        } else {
            D_MARGIN
        }
    }
}

/// Verification grid: every represented point of a discrete space, or 41
/// points across six stationary standard deviations of a continuous one.
pub fn default_drift_grid(model: &TwoComponentModel) -> Vec<f64> {
    match model.x_space() {
        SpaceRepr::Real1D(_) => {
            let sd = model.gaussian_ar1().map_or(1.0, |g| g.stat_var.sqrt());
            (0..41).map(|i| -6.0 * sd + 12.0 * sd * i as f64 / 40.0).collect()
        }
        s => s.grid(),
    }
}

/// Minorization `J(x, ·) ≥ ε P(· | T ∈ B)` for `x` in the small set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationCertificate {
    pub small_set: Subset,
    pub b: Subset,
    pub epsilon: f64,
    pub d: Option<f64>,
    pub prior_mass: f64,
    pub inf_f: f64,
    pub sup_m: f64,
    /// Extrema were taken over represented grids rather than proven in closed form.
    pub grid_certified: bool,
}

/// Uniform minorization constant `u = π(B) inf_{X×B} f`, maximized over a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformCertificate {
    pub u: f64,
    pub sup_m: f64,
    pub best: Option<ThetaCandidate>,
}

impl UniformCertificate {
    pub fn rho(&self) -> f64 {
        1.0 - self.u / self.sup_m
    }
}

fn u_of(model: &TwoComponentModel, b: &Subset) -> Result<f64> {
    let mass = model.prior_mass(b)?;
    if mass <= 0.0 {
        return Ok(0.0);
    }
    Ok(mass * model.inf_joint_density(&Subset::All, b)?)
}

/// Ranks finite parameter points by `inf_x f(x, θ)`, largest first.
pub(crate) fn rank_theta_by_column_inf(model: &TwoComponentModel) -> Result<Vec<usize>> {
    let SpaceRepr::Finite { points, .. } = model.theta_space() else {
        return Ok(vec![]);
    };
    let mut scored = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        scored.push((model.inf_joint_density(&Subset::All, &Subset::Indices(vec![i]))?, i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|(_, i)| i).collect())
}

pub fn uniform_u(model: &TwoComponentModel, family: &ThetaFamily) -> Result<UniformCertificate> {
    uniform_u_with(model, family, Execution::default())
}

/// Grid maximization of `u(B)` over the family; quantile families get one
/// golden-section refinement of `δ` around the best grid point.
pub fn uniform_u_with(model: &TwoComponentModel, family: &ThetaFamily, exec: Execution) -> Result<UniformCertificate> {
    let sup_m = model.sup_marginal(&Subset::All)?;
    let rank = rank_theta_by_column_inf(model)?;
    let cands = family.candidates(model, &rank)?;
    let scores: Vec<Result<f64>> = exec.map_slice(&cands, |c| u_of(model, &c.set));
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        let s = s?;
        if s > 0.0 && best.is_none_or(|(b, _)| s > b) {
            best = Some((s, i));
        }
    }
    let Some((mut u, i)) = best else {
        return Ok(UniformCertificate { u: 0.0, sup_m, best: None });
    };
    let mut cand = cands[i].clone();
    if let ThetaFamily::QuantileIntervals { deltas } = family {
        let lo = if i > 0 { deltas[i - 1] } else { deltas[i] };
        let hi = if i + 1 < deltas.len() { deltas[i + 1] } else { deltas[i] };
        let score = |d: f64| -> Result<f64> { u_of(model, &ThetaFamily::quantile_interval(model, d)?) };
        let (d, s) = golden_max(score, lo, hi, 200)?;
        if s > u {
            u = s;
            cand = ThetaCandidate {
                set: ThetaFamily::quantile_interval(model, d)?,
                param: d,
            };
        }
    }
    Ok(UniformCertificate {
        u,
        sup_m,
        best: Some(cand),
    })
}

pub(crate) fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..iters {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

fn geometric_curve(kind: BoundKind, u: f64, sup_m: f64, ell_max: usize) -> Result<BoundCurve> {
    if !(sup_m > 0.0 && sup_m.is_finite()) {
        return Err(Error::InvalidCertificate(format!("sup m = {sup_m} must be finite and positive")));
    }
    if !(u >= 0.0) {
        return Err(Error::InvalidCertificate(format!("u = {u} must be nonnegative")));
    }
    if u > sup_m * (1.0 + 1e-12) {
        return Err(Error::InvalidCertificate(format!("u = {u} exceeds sup m = {sup_m}")));
    }
    let rho = (1.0 - u / sup_m).max(0.0);
    let values = (0..=ell_max).map(|l| rho.powi(l as i32)).collect();
    Ok(BoundCurve::new(kind, params([("u", u), ("sup_m", sup_m), ("rho", rho)]), 0, values))
}

/// `(1 - u / sup m)^ℓ` for `ℓ = 0..=ell_max`.
pub fn uniform_bound_curve(u: f64, sup_m: f64, ell_max: usize) -> Result<BoundCurve> {
    geometric_curve(BoundKind::Uniform, u, sup_m, ell_max)
}

/// Contraction factor of the drift/minorization bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RosenthalT {
    pub t: f64,
    pub feasible: bool,
}

/// `t = (1 + 2α + 2βd)^r (1 + 2α + βd)^{1-r} / (1 + d)^{1-r}`.
pub fn rosenthal_t(alpha: f64, beta: f64, d: f64, r: f64) -> Result<RosenthalT> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("alpha = {alpha} must be nonnegative")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta = {beta} outside (0, 1)")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("r = {r} outside (0, 1)")));
    }
    let threshold = 2.0 * alpha / (1.0 - beta);
    if !(d.is_finite() && d > 0.0 && d >= (1.0 + D_MARGIN) * threshold) {
        return Err(Error::domain(format!("d = {d} must exceed 2 alpha / (1 - beta) = {threshold}")));
    }
    let ln_t = r * (1.0 + 2.0 * alpha + 2.0 * beta * d).ln() + (1.0 - r) * (1.0 + 2.0 * alpha + beta * d).ln()
        - (1.0 - r) * (1.0 + d).ln();
    let t = ln_t.exp();
    Ok(RosenthalT { t, feasible: t < 1.0 })
}

/// Raw value of the drift/minorization bound at step `ell`.
pub fn rosenthal_value(epsilon: f64, r: f64, t: f64, psi: f64, ell: usize) -> f64 {
    let l = ell as f64;
    (r * l * (-epsilon).ln_1p()).exp() + (l * t.ln()).exp() * psi
}

/// `(1 - ε)^{rℓ} + t^ℓ (1 + α/(1-β) + φ(x₀))` for `ℓ = 0..=ell_max`.
pub fn rosenthal_bound_curve(
    drift: &DriftCertificate,
    epsilon: f64,
    d: f64,
    r: f64,
    phi_x0: f64,
    ell_max: usize,
) -> Result<BoundCurve> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidCertificate(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    if !(phi_x0 >= 0.0) {
        return Err(Error::domain("drift value at the start must be nonnegative"));
    }
    let rt = rosenthal_t(drift.alpha, drift.beta, d, r)?;
    if !rt.feasible {
        return Err(Error::Infeasible(format!(
            "t = {} >= 1 for r = {r}, d = {d}; use the tuner to search (r, d)",
            rt.t
        )));
    }
    let psi = 1.0 + drift.alpha / (1.0 - drift.beta) + phi_x0;
    let values = (0..=ell_max)
        .map(|l| rosenthal_value(epsilon, r, rt.t, psi, l))
        .collect();
    Ok(BoundCurve::new(
        BoundKind::Rosenthal,
        params([
            ("alpha", drift.alpha),
            ("beta", drift.beta),
            ("epsilon", epsilon),
            ("d", d),
            ("r", r),
            ("t", rt.t),
            ("phi_x0", phi_x0),
        ]),
        0,
        values,
    ))
}

/// `ε = π(B) inf_{A×B} f / sup_A m` on the small set `A = {φ ≤ d}`.
pub fn prop3_epsilon(model: &TwoComponentModel, d: f64, phi: &DriftFn, b: &Subset) -> Result<MinorizationCertificate> {
    let a = model.sublevel_set(phi, d)?;
    if a.is_empty_descriptor() {
        return Err(Error::CertificateUnavailable(format!("small set {{phi <= {d}}} is empty")));
    }
    let prior_mass = model.prior_mass(b)?;
    if !(prior_mass > 0.0) {
        return Err(Error::CertificateUnavailable("pi(B) = 0, so P(A x B) = 0".into()));
    }
    if !model.rect_has_positive_mass(&a, b)? {
        return Err(Error::CertificateUnavailable("P(A x B) = 0".into()));
    }
    let sup_m = model.sup_marginal(&a)?;
    if !sup_m.is_finite() {
        return Err(Error::CertificateUnavailable("sup_A m is infinite".into()));
    }
    let inf_f = model.inf_joint_density(&a, b)?;
    if !(inf_f > 0.0) {
        return Err(Error::CertificateUnavailable("inf_{A x B} f = 0".into()));
    }
    let epsilon = (prior_mass * inf_f / sup_m).min(1.0);
    Ok(MinorizationCertificate {
        grid_certified: !model.x_space().is_discrete() || !model.theta_space().is_discrete(),
        small_set: a,
        b: b.clone(),
        epsilon,
        d: Some(d),
        prior_mass,
        inf_f,
        sup_m,
    })
}

/// Three-component constant
/// `v = μ₂(X₂) sup_B π(B) (inf_{X×B} f)² / sup_{X₁×B} h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop4Certificate {
    pub v: f64,
    pub sup_m: f64,
    pub best: Option<ThetaCandidate>,
}

impl Prop4Certificate {
    pub fn rho(&self) -> f64 {
        1.0 - self.v / self.sup_m
    }

    pub fn curve(&self, ell_max: usize) -> Result<BoundCurve> {
        geometric_curve(BoundKind::Prop4, self.v, self.sup_m, ell_max)
    }
}

pub fn prop4_v(model: &ThreeComponentModel) -> Result<Prop4Certificate> {
    prop4_v_with(model, Execution::default())
}

pub fn prop4_v_with(model: &ThreeComponentModel, exec: Execution) -> Result<Prop4Certificate> {
    let (n1, n2, nt) = model.dims();
    let mu2_total: f64 = model.mu2().iter().sum();
    let mut sup_m: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            sup_m = sup_m.max(model.m(i, j));
        }
    }
    if !sup_m.is_finite() {
        return Err(Error::CertificateUnavailable("m is unbounded".into()));
    }
    let col_inf: Vec<f64> = (0..nt)
        .map(|k| {
            (0..n1)
                .flat_map(|i| (0..n2).map(move |j| (i, j)))
                .map(|(i, j)| model.f(i, j, k))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut rank: Vec<usize> = (0..nt).collect();
    rank.sort_by(|a, b| col_inf[*b].total_cmp(&col_inf[*a]).then(a.cmp(b)));
    let cands = finite_subsets(nt, &rank);
    let score = |c: &ThetaCandidate| -> f64 {
        let Subset::Indices(ix) = &c.set else { return 0.0 };
        let inf = ix.iter().map(|k| col_inf[*k]).fold(f64::INFINITY, f64::min);
        if inf <= 0.0 {
            return 0.0;
        }
        let mass: f64 = ix.iter().map(|k| model.pi()[*k]).sum();
        let sup_h = ix
            .iter()
            .flat_map(|k| (0..n1).map(move |i| (i, *k)))
            .map(|(i, k)| model.h(i, k))
            .fold(0.0, f64::max);
        mu2_total * mass * inf * inf / sup_h
    };
    let scores = exec.map_slice(&cands, score);
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if s > 0.0 && best.is_none_or(|(b, _)| s > b) {
            best = Some((s, i));
        }
    }
    Ok(match best {
        Some((v, i)) => Prop4Certificate {
            v,
            sup_m,
            best: Some(cands[i].clone()),
        },
        None => Prop4Certificate { v: 0.0, sup_m, best: None },
    })
}

/// Beta/Binomial lower and upper bounds started at `x = n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DksBounds {
    pub beta1: f64,
    /// `β₁^ℓ / 2` for `ℓ = 0..=ell_max`.
    pub lower: BoundCurve,
    /// `β₁^{ℓ-1/2} / (1 - β₁^{2ℓ-1})` for `ℓ = 1..=ell_max`.
    pub upper: BoundCurve,
}

pub fn dks_beta_binomial_bounds(n: u64, ell_max: usize) -> Result<DksBounds> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let beta1 = 1.0 - 2.0 / (n as f64 + 2.0);
    let p = params([("n", n as f64), ("beta1", beta1)]);
    let lower = (0..=ell_max).map(|l| 0.5 * beta1.powi(l as i32)).collect();
    let upper = (1..=ell_max)
        .map(|l| {
            let l = l as f64;
            beta1.powf(l - 0.5) / (1.0 - beta1.powf(2.0 * l - 1.0))
        })
        .collect();
    Ok(DksBounds {
        beta1,
        lower: BoundCurve::new(BoundKind::DksLower, p.clone(), 0, lower),
        upper: BoundCurve::new(BoundKind::DksUpper, p, 1, upper),
    })
}

#[cfg(test)]
mod tests;
