//! Two- and three-component Gibbs models, their densities, the Gibbs kernel
//! and the exact transition structure of the data-coordinate chain.
//!
//! Conventions: the joint law has density `f` with respect to `μ × π`,
//! where `π` is the parameter marginal (the prior) and `μ` the reference
//! measure on the data coordinate. One Gibbs sweep from `(x, θ)` first draws
//! `θ' ~ π(· | x)` and then `x' ~ f(·, θ') μ`, so the sweep only depends on
//! `x`.

mod finite;
mod space;
mod three;
mod transition;

pub use finite::{FiniteModel, FiniteModelConfig};
pub use space::{SpaceRepr, Subset};
pub use three::ThreeComponentModel;
pub use transition::{MatrixSettings, TransitionMatrix};

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    folded_normal_mean, ln_beta, ln_choose, ln_factorial, normal_ln_pdf, normal_pdf, std_normal_cdf,
    std_normal_quantile, xlny,
};
use crate::quadrature::QuadratureRule;

/// Quadrature nodes used for continuous parameter spaces.
pub const THETA_NODES: usize = 256;

/// Default stationary tail tolerance for countable data spaces.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Nonnegative drift function `φ` on the data space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftFn {
    /// `φ(x) = x`, for nonnegative data spaces.
    Identity,
    /// `φ(x) = |x|`.
    Abs,
    /// Explicit values indexed by the position of `x` in a finite space.
    Table(Vec<f64>),
}

impl DriftFn {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "identity" | "x" => Some(DriftFn::Identity),
            "abs" | "|x|" => Some(DriftFn::Abs),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DriftFn::Identity => "identity",
            DriftFn::Abs => "abs",
            DriftFn::Table(_) => "table",
        }
    }

    fn eval_at(&self, x: f64, index: Option<usize>) -> Result<f64> {
        match self {
            DriftFn::Identity => Ok(x),
            DriftFn::Abs => Ok(x.abs()),
            DriftFn::Table(values) => index
                .and_then(|i| values.get(i).copied())
                .ok_or_else(|| Error::domain(format!("drift table has no entry for x = {x}"))),
        }
    }
}

/// Coefficients of the Gaussian data chain `x' = a x + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAr1 {
    /// Autoregressive coefficient `a = τ²/(σ²+τ²)`.
    pub coef: f64,
    /// Variance of `x'` given `x`.
    pub step_var: f64,
    /// Stationary variance `σ² + τ²`.
    pub stat_var: f64,
    /// Posterior variance of `θ` given `x`.
    pub post_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Binomial(n, θ) data with a uniform prior on θ.
    BetaBinomial { n: u64 },
    /// Poisson(θ) data with a standard exponential prior.
    PoissonGamma,
    /// `x | θ ~ N(θ, σ²)` with prior `θ ~ N(0, τ²)`.
    Gaussian { sigma2: f64, tau2: f64 },
    Finite(FiniteModel),
}

/// Two-component model: spaces, joint density, prior and optional drift.
#[derive(Debug, Clone)]
pub struct TwoComponentModel {
    name: String,
    x_space: SpaceRepr,
    theta_space: SpaceRepr,
    drift: Option<DriftFn>,
    kind: ModelKind,
}

/// Smallest `n_max` whose geometric stationary tail `2^{-n_max-1}` is below `tol`.
pub fn poisson_gamma_n_max(tol: f64) -> usize {
    let mut n = 0usize;
    while poisson_gamma_tail(n) >= tol && n < 1060 {
        n += 1;
    }
    n
}

fn poisson_gamma_tail(n_max: usize) -> f64 {
    (-((n_max + 1) as f64) * std::f64::consts::LN_2).exp()
}

impl TwoComponentModel {
    pub fn beta_binomial(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid_model("beta-binomial needs n >= 1"));
        }
        Ok(TwoComponentModel {
            name: format!("beta-binomial(n={n})"),
            x_space: SpaceRepr::Finite {
                points: (0..=n).map(|k| k as f64).collect(),
                weights: vec![1.0; n as usize + 1],
            },
            theta_space: SpaceRepr::Real1D(QuadratureRule::gauss_legendre(THETA_NODES, 0.0, 1.0)),
            drift: Some(DriftFn::Identity),
            kind: ModelKind::BetaBinomial { n },
        })
    }

    pub fn poisson_gamma() -> Self {
        Self::poisson_gamma_with_n_max(poisson_gamma_n_max(DEFAULT_TAIL_TOLERANCE))
    }

    pub fn poisson_gamma_with_n_max(n_max: usize) -> Self {
        TwoComponentModel {
            name: "poisson-gamma".into(),
            x_space: SpaceRepr::TruncatedCountable {
                n_max,
                tail_bound: poisson_gamma_tail(n_max),
            },
            theta_space: SpaceRepr::Real1D(QuadratureRule::gauss_laguerre(THETA_NODES).pruned()),
            drift: Some(DriftFn::Identity),
            kind: ModelKind::PoissonGamma,
        }
    }

    pub fn gaussian(sigma2: f64, tau2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && tau2 > 0.0 && sigma2.is_finite() && tau2.is_finite()) {
            return Err(Error::invalid_model("gaussian model needs positive finite variances"));
        }
        let stat = sigma2 + tau2;
        // Lebesgue weights on Hermite nodes scaled to the stationary law.
        let mut x_rule = QuadratureRule::gauss_hermite_normal(THETA_NODES, 0.0, stat).pruned();
        for (w, x) in x_rule.weights.iter_mut().zip(&x_rule.nodes) {
            *w /= normal_pdf(*x, 0.0, stat);
        }
        let x_rule = x_rule.pruned();
        Ok(TwoComponentModel {
            name: format!("gaussian(sigma2={sigma2},tau2={tau2})"),
            x_space: SpaceRepr::Real1D(x_rule),
            theta_space: SpaceRepr::Real1D(
                QuadratureRule::gauss_hermite_normal(THETA_NODES, 0.0, tau2).pruned(),
            ),
            drift: Some(DriftFn::Abs),
            kind: ModelKind::Gaussian { sigma2, tau2 },
        })
    }

    pub fn finite(name: impl Into<String>, model: FiniteModel) -> Self {
        TwoComponentModel {
            name: name.into(),
            x_space: SpaceRepr::Finite {
                points: model.x_points.clone(),
                weights: model.mu.clone(),
            },
            theta_space: SpaceRepr::Finite {
                points: model.theta_points.clone(),
                weights: model.pi.clone(),
            },
            drift: None,
            kind: ModelKind::Finite(model),
        }
    }

    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn x_space(&self) -> &SpaceRepr {
        &self.x_space
    }

    pub fn theta_space(&self) -> &SpaceRepr {
        &self.theta_space
    }

    pub fn drift(&self) -> Option<&DriftFn> {
        self.drift.as_ref()
    }

    pub fn validate(&self) -> Result<()> {
        self.x_space.validate()?;
        self.theta_space.validate()
    }

    pub fn gaussian_ar1(&self) -> Option<GaussianAr1> {
        match self.kind {
            ModelKind::Gaussian { sigma2, tau2 } => {
                let stat = sigma2 + tau2;
                let post_var = sigma2 * tau2 / stat;
                Some(GaussianAr1 {
                    coef: tau2 / stat,
                    step_var: post_var + sigma2,
                    stat_var: stat,
                    post_var,
                })
            }
            _ => None,
        }
    }

    /// Drift constants `(φ, α, β)` with `Jφ ≤ α + βφ`, known in closed form
    /// for the built-in models.
    pub fn default_drift_constants(&self) -> Option<(DriftFn, f64, f64)> {
        match self.kind {
            ModelKind::BetaBinomial { n } => {
                let c = n as f64 / (n as f64 + 2.0);
                Some((DriftFn::Identity, c, c))
            }
            ModelKind::PoissonGamma => Some((DriftFn::Identity, 0.5, 0.5)),
            ModelKind::Gaussian { sigma2, .. } => {
                // E|x'| <= E|θ'| + σ√(2/π) and E|θ'| <= |a x| + sd(θ|x)√(2/π)
                let g = self.gaussian_ar1()?;
                let root = (2.0 / std::f64::consts::PI).sqrt();
                let alpha = sigma2.sqrt() * root + g.post_var.sqrt() * root;
                Some((DriftFn::Abs, alpha, g.coef))
            }
            ModelKind::Finite(_) => None,
        }
    }

    fn x_index(&self, x: f64) -> Result<Option<usize>> {
        match &self.x_space {
            SpaceRepr::Real1D(_) => {
                if x.is_finite() {
                    Ok(None)
                } else {
                    Err(Error::domain(format!("x = {x} is not finite")))
                }
            }
            s => s.index_of(x).map(Some),
        }
    }

    fn check_theta(&self, theta: f64) -> Result<Option<usize>> {
        match (&self.kind, &self.theta_space) {
            (ModelKind::Finite(_), s) => s.index_of(theta).map(Some),
            (ModelKind::BetaBinomial { .. }, _) if (0.0..=1.0).contains(&theta) => Ok(None),
            (ModelKind::PoissonGamma, _) if theta >= 0.0 && theta.is_finite() => Ok(None),
            (ModelKind::Gaussian { .. }, _) if theta.is_finite() => Ok(None),
            _ => Err(Error::domain(format!("theta = {theta} is outside the parameter space"))),
        }
    }

    /// `log f(x, θ)`; `-inf` where the density vanishes.
    pub fn log_joint_density(&self, x: f64, theta: f64) -> Result<f64> {
        let ix = self.x_index(x)?;
        let it = self.check_theta(theta)?;
        Ok(match &self.kind {
            ModelKind::BetaBinomial { n } => {
                let k = ix.expect("discrete") as u64;
                ln_choose(*n, k) + xlny(k as f64, theta) + xlny((*n - k) as f64, 1.0 - theta)
            }
            ModelKind::PoissonGamma => {
                let k = ix.expect("discrete") as u64;
                -theta + xlny(k as f64, theta) - ln_factorial(k)
            }
            ModelKind::Gaussian { sigma2, .. } => normal_ln_pdf(x, theta, *sigma2),
            ModelKind::Finite(m) => m.f(ix.expect("discrete"), it.expect("discrete")).ln(),
        })
    }

    pub fn joint_density(&self, x: f64, theta: f64) -> Result<f64> {
        self.log_joint_density(x, theta).map(f64::exp)
    }

    pub fn log_marginal_density(&self, x: f64) -> Result<f64> {
        let ix = self.x_index(x)?;
        Ok(match &self.kind {
            ModelKind::BetaBinomial { n } => -((*n as f64) + 1.0).ln(),
            ModelKind::PoissonGamma => -(x + 1.0) * std::f64::consts::LN_2,
            ModelKind::Gaussian { sigma2, tau2 } => normal_ln_pdf(x, 0.0, sigma2 + tau2),
            ModelKind::Finite(m) => m.marginal(ix.expect("discrete")).ln(),
        })
    }

    /// `m(x) = ∫ f(x, θ) π(dθ)`.
    pub fn marginal_density(&self, x: f64) -> Result<f64> {
        self.log_marginal_density(x).map(f64::exp)
    }

    /// Posterior density of `θ` given `x` with respect to the prior `π`,
    /// i.e. `f(x, θ) / m(x)`.
    pub fn posterior_density(&self, theta: f64, x: f64) -> Result<f64> {
        Ok((self.log_joint_density(x, theta)? - self.log_marginal_density(x)?).exp())
    }

    /// Mean of `π(· | x)` where available in closed form.
    pub fn posterior_mean(&self, x: f64) -> Result<f64> {
        let ix = self.x_index(x)?;
        Ok(match &self.kind {
            ModelKind::BetaBinomial { n } => (x + 1.0) / (*n as f64 + 2.0),
            ModelKind::PoissonGamma => (x + 1.0) / 2.0,
            ModelKind::Gaussian { .. } => self.gaussian_ar1().expect("gaussian").coef * x,
            ModelKind::Finite(m) => {
                let i = ix.expect("discrete");
                (0..m.nt())
                    .map(|t| m.theta_points[t] * m.pi[t] * m.f(i, t))
                    .sum::<f64>()
                    / m.marginal(i)
            }
        })
    }

    /// Transition probability (discrete spaces) or Lebesgue density
    /// (continuous space) of the data chain from `x` to `y`.
    pub fn x_chain_transition(&self, x: f64, y: f64) -> Result<f64> {
        let ix = self.x_index(x)?;
        let iy = self.x_index(y)?;
        Ok(match &self.kind {
            ModelKind::BetaBinomial { n } => {
                let (a, b) = (ix.unwrap() as f64, iy.unwrap() as f64);
                let n = *n as f64;
                (ln_choose(n as u64, b as u64) + ln_beta(a + b + 1.0, 2.0 * n - a - b + 1.0)
                    - ln_beta(a + 1.0, n - a + 1.0))
                .exp()
            }
            ModelKind::PoissonGamma => poisson_gamma_ln_transition(ix.unwrap(), iy.unwrap()).exp(),
            ModelKind::Gaussian { .. } => {
                let g = self.gaussian_ar1().expect("gaussian");
                normal_pdf(y, g.coef * x, g.step_var)
            }
            ModelKind::Finite(m) => m.transition(ix.unwrap(), iy.unwrap()),
        })
    }

    /// Materializes the data chain over a finite or truncated space.
    pub fn x_chain_matrix(&self, settings: MatrixSettings) -> Result<TransitionMatrix> {
        match &self.kind {
            ModelKind::BetaBinomial { .. } | ModelKind::Finite(_) => {
                let states = self.x_space.grid();
                let n = states.len();
                let mut entries = Vec::with_capacity(n * n);
                for &x in &states {
                    for &y in &states {
                        entries.push(self.x_chain_transition(x, y)?);
                    }
                }
                let stationary: Vec<f64> = match &self.kind {
                    ModelKind::Finite(m) => (0..n).map(|i| m.marginal(i) * m.mu[i]).collect(),
                    _ => vec![1.0 / n as f64; n],
                };
                TransitionMatrix::new(states, entries, stationary, vec![0.0; n], 0.0)
            }
            ModelKind::PoissonGamma => {
                let n_max = match (settings.n_max, &self.x_space) {
                    (Some(n), _) => n,
                    (None, SpaceRepr::TruncatedCountable { n_max, .. }) => *n_max,
                    (None, _) => poisson_gamma_n_max(settings.tail_tolerance),
                };
                let tail = poisson_gamma_tail(n_max);
                if tail > settings.tail_tolerance {
                    return Err(Error::Truncation {
                        tail,
                        tolerance: settings.tail_tolerance,
                    });
                }
                let n = n_max + 1;
                let mut entries = Vec::with_capacity(n * n);
                let mut row_tail = Vec::with_capacity(n);
                for x in 0..n {
                    for y in 0..n {
                        entries.push(poisson_gamma_ln_transition(x, y).exp());
                    }
                    row_tail.push(poisson_gamma_row_tail(x, n_max)?);
                }
                let states = (0..n).map(|k| k as f64).collect();
                let stationary = (0..n).map(|k| (-((k + 1) as f64) * std::f64::consts::LN_2).exp()).collect();
                TransitionMatrix::new(states, entries, stationary, row_tail, tail)
            }
            ModelKind::Gaussian { .. } => Err(Error::Unsupported(
                "the gaussian data chain is continuous; use the closed-form oracle".into(),
            )),
        }
    }

    /// One Gibbs sweep from `x`: returns `(x', θ')`.
    pub fn gibbs_step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<(f64, f64)> {
        let ix = self.x_index(x)?;
        let sampler = |e: rand_distr::BetaError| Error::domain(e.to_string());
        Ok(match &self.kind {
            ModelKind::BetaBinomial { n } => {
                let k = ix.unwrap() as f64;
                let nf = *n as f64;
                let theta = Beta::new(k + 1.0, nf - k + 1.0).map_err(sampler)?.sample(rng);
                let next = Binomial::new(*n, theta)
                    .map_err(|e| Error::domain(e.to_string()))?
                    .sample(rng);
                (next as f64, theta)
            }
            ModelKind::PoissonGamma => {
                let theta = Gamma::new(x + 1.0, 0.5)
                    .map_err(|e| Error::domain(e.to_string()))?
                    .sample(rng);
                let next = if theta > 0.0 {
                    Poisson::new(theta).map_err(|e| Error::domain(e.to_string()))?.sample(rng)
                } else {
                    0.0
                };
                (next, theta)
            }
            ModelKind::Gaussian { sigma2, .. } => {
                let g = self.gaussian_ar1().expect("gaussian");
                let theta = Normal::new(g.coef * x, g.post_var.sqrt())
                    .map_err(|e| Error::domain(e.to_string()))?
                    .sample(rng);
                let next = Normal::new(theta, sigma2.sqrt())
                    .map_err(|e| Error::domain(e.to_string()))?
                    .sample(rng);
                (next, theta)
            }
            ModelKind::Finite(m) => {
                let i = ix.unwrap();
                let t = sample_index(rng, (0..m.nt()).map(|t| m.pi[t] * m.f(i, t)));
                let j = sample_index(rng, (0..m.nx()).map(|j| m.mu[j] * m.f(j, t)));
                (m.x_points[j], m.theta_points[t])
            }
        })
    }

    /// `Jφ(x) = E[φ(x') | x]` for one sweep, by exact summation over the
    /// data chain row or by quadrature over the posterior.
    pub fn drift_expectation(&self, phi: &DriftFn, x: f64) -> Result<f64> {
        let ix = self.x_index(x)?;
        match &self.kind {
            ModelKind::BetaBinomial { .. } | ModelKind::Finite(_) => {
                let grid = self.x_space.grid();
                let mut acc = 0.0;
                for (j, &y) in grid.iter().enumerate() {
                    acc += phi.eval_at(y, Some(j))? * self.x_chain_transition(x, y)?;
                }
                Ok(acc)
            }
            ModelKind::PoissonGamma => {
                if matches!(phi, DriftFn::Table(_)) {
                    return Err(Error::Unsupported("tabulated drift on a countable space".into()));
                }
                let x = ix.unwrap();
                let n_max = match self.x_space {
                    SpaceRepr::TruncatedCountable { n_max, .. } => n_max,
                    _ => unreachable!(),
                };
                let mean = (x as f64 + 1.0) / 2.0;
                let mut acc = 0.0;
                let mut k = 0usize;
                loop {
                    let p = poisson_gamma_ln_transition(x, k).exp();
                    let term = k as f64 * p;
                    acc += term;
                    if k >= n_max && k as f64 > 2.0 * mean + 10.0 {
                        // terms decay at least geometrically past the mode
                        let q = (x + k + 2) as f64 / (3.0 * (k + 2) as f64) * (k + 1) as f64 / k as f64;
                        if q < 1.0 {
                            let residual = term * q / (1.0 - q);
                            if residual <= 1e-15 * (1.0 + acc) {
                                return Ok(acc);
                            }
                        }
                    }
                    k += 1;
                    if k > 10_000_000 {
                        return Err(Error::Numeric {
                            what: "drift summation did not converge".into(),
                            residual: term,
                        });
                    }
                }
            }
            ModelKind::Gaussian { sigma2, .. } => {
                let g = self.gaussian_ar1().expect("gaussian");
                let inner: Box<dyn Fn(f64) -> f64> = match phi {
                    DriftFn::Abs => Box::new(|theta| folded_normal_mean(theta, *sigma2)),
                    DriftFn::Identity => {
                        return Err(Error::domain("x is not nonnegative on the real line"));
                    }
                    DriftFn::Table(_) => {
                        return Err(Error::Unsupported("tabulated drift on a continuous space".into()));
                    }
                };
                let rule = QuadratureRule::gauss_hermite_normal(THETA_NODES, g.coef * x, g.post_var);
                Ok(rule.integrate(inner))
            }
        }
    }

    /// Evaluates `φ` at a data point.
    pub fn drift_value(&self, phi: &DriftFn, x: f64) -> Result<f64> {
        let ix = self.x_index(x)?;
        let v = phi.eval_at(x, ix)?;
        if v < 0.0 {
            return Err(Error::domain(format!("drift function is negative at x = {x}")));
        }
        Ok(v)
    }

    /// Whether the reference measure of the data space is infinite.
    pub fn x_measure_is_infinite(&self) -> bool {
        match &self.x_space {
            SpaceRepr::Finite { .. } => false,
            SpaceRepr::TruncatedCountable { .. } => true,
            SpaceRepr::Real1D(rule) => rule.lower.is_infinite() || rule.upper.is_infinite(),
        }
    }

    /// Prior CDF on a continuous parameter space.
    pub fn prior_cdf(&self, theta: f64) -> Result<f64> {
        match &self.kind {
            ModelKind::BetaBinomial { .. } => Ok(theta.clamp(0.0, 1.0)),
            ModelKind::PoissonGamma => Ok(if theta <= 0.0 { 0.0 } else { -(-theta).exp_m1() }),
            ModelKind::Gaussian { tau2, .. } => Ok(std_normal_cdf(theta / tau2.sqrt())),
            ModelKind::Finite(_) => Err(Error::Unsupported("prior CDF of a finite space".into())),
        }
    }

    pub fn prior_quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        match &self.kind {
            ModelKind::BetaBinomial { .. } => Ok(p),
            ModelKind::PoissonGamma => Ok(-(-p).ln_1p()),
            ModelKind::Gaussian { tau2, .. } => Ok(tau2.sqrt() * std_normal_quantile(p)),
            ModelKind::Finite(_) => Err(Error::Unsupported("prior quantile of a finite space".into())),
        }
    }

    /// `π(B)`.
    pub fn prior_mass(&self, b: &Subset) -> Result<f64> {
        match (&self.theta_space, b) {
            (_, Subset::All) => Ok(1.0),
            (SpaceRepr::Finite { points, weights }, b) => Ok(points
                .iter()
                .zip(weights)
                .enumerate()
                .filter(|(i, (p, _))| b.contains(*i, **p))
                .map(|(_, (_, w))| *w)
                .sum()),
            (SpaceRepr::Real1D(rule), Subset::Indices(ix)) => {
                Ok(ix.iter().filter_map(|i| rule.weights.get(*i)).sum())
            }
            (SpaceRepr::Real1D(_), Subset::Interval { lo, hi }) => {
                if !(lo < hi) {
                    return Ok(0.0);
                }
                if let ModelKind::PoissonGamma = self.kind {
                    let (lo, hi) = (lo.max(0.0), hi.max(0.0));
                    return Ok((-lo).exp() - (-hi).exp());
                }
                Ok(self.prior_cdf(*hi)? - self.prior_cdf(*lo)?)
            }
            (SpaceRepr::TruncatedCountable { .. }, _) => {
                Err(Error::Unsupported("countable parameter spaces".into()))
            }
        }
    }

    fn theta_domain(&self) -> (f64, f64) {
        match &self.kind {
            ModelKind::BetaBinomial { .. } => (0.0, 1.0),
            ModelKind::PoissonGamma => (0.0, f64::INFINITY),
            ModelKind::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModelKind::Finite(m) => m
                .theta_points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(*p), b.max(*p))),
        }
    }

    /// Candidate data values at which an infimum over `a` is attained, or
    /// `None` when `a` is unbounded.
    fn x_candidates(&self, a: &Subset) -> Result<Option<Vec<f64>>> {
        let out = match (&self.x_space, a) {
            (SpaceRepr::Finite { points, .. }, a) => {
                Some(points.iter().enumerate().filter(|(i, p)| a.contains(*i, **p)).map(|(_, p)| *p).collect())
            }
            (SpaceRepr::TruncatedCountable { .. }, Subset::All) => None,
            (SpaceRepr::TruncatedCountable { .. }, Subset::Indices(ix)) => {
                Some(ix.iter().map(|i| *i as f64).collect())
            }
            (SpaceRepr::TruncatedCountable { .. }, Subset::Interval { lo, hi }) => {
                if hi.is_infinite() {
                    None
                } else {
                    let start = lo.max(0.0).ceil() as usize;
                    let end = hi.floor();
                    if end < start as f64 {
                        Some(vec![])
                    } else {
                        Some((start..=end as usize).map(|k| k as f64).collect())
                    }
                }
            }
            (SpaceRepr::Real1D(rule), Subset::All) => {
                if rule.lower.is_finite() && rule.upper.is_finite() {
                    Some(vec![rule.lower, rule.upper])
                } else {
                    None
                }
            }
            (SpaceRepr::Real1D(rule), Subset::Indices(ix)) => {
                Some(ix.iter().filter_map(|i| rule.nodes.get(*i).copied()).collect())
            }
            (SpaceRepr::Real1D(rule), Subset::Interval { lo, hi }) => {
                let (lo, hi) = (lo.max(rule.lower), hi.min(rule.upper));
                if lo.is_infinite() || hi.is_infinite() {
                    None
                } else if lo > hi {
                    Some(vec![])
                } else {
                    Some(vec![lo, hi])
                }
            }
        };
        Ok(out)
    }

    fn theta_candidates(&self, b: &Subset) -> Result<Option<Vec<f64>>> {
        let (dlo, dhi) = self.theta_domain();
        let out = match (&self.theta_space, b) {
            (SpaceRepr::Finite { points, .. }, b) => {
                Some(points.iter().enumerate().filter(|(i, p)| b.contains(*i, **p)).map(|(_, p)| *p).collect())
            }
            (SpaceRepr::Real1D(rule), Subset::Indices(ix)) => {
                Some(ix.iter().filter_map(|i| rule.nodes.get(*i).copied()).collect())
            }
            (SpaceRepr::Real1D(_), b) => {
                let (lo, hi) = match b {
                    Subset::Interval { lo, hi } => (lo.max(dlo), hi.min(dhi)),
                    _ => (dlo, dhi),
                };
                if lo.is_infinite() || hi.is_infinite() {
                    None
                } else if lo > hi {
                    Some(vec![])
                } else {
                    Some(vec![lo, hi])
                }
            }
            (SpaceRepr::TruncatedCountable { .. }, _) => {
                return Err(Error::Unsupported("countable parameter spaces".into()))
            }
        };
        Ok(out)
    }

    /// `inf_{A × B} f`.
    ///
    /// Finite spaces are enumerated. For the built-in families `f` is
    /// log-concave in each coordinate, so over intervals the infimum sits at
    /// a corner; unbounded sets give zero since `f` vanishes at infinity.
    pub fn inf_joint_density(&self, a: &Subset, b: &Subset) -> Result<f64> {
        let (Some(xs), Some(ts)) = (self.x_candidates(a)?, self.theta_candidates(b)?) else {
            return Ok(0.0);
        };
        if xs.is_empty() || ts.is_empty() {
            return Err(Error::domain("infimum over an empty set"));
        }
        let mut inf = f64::INFINITY;
        for &x in &xs {
            for &t in &ts {
                inf = inf.min(self.joint_density(x, t)?);
            }
        }
        Ok(inf)
    }

    /// `sup_A m`.
    pub fn sup_marginal(&self, a: &Subset) -> Result<f64> {
        match &self.kind {
            ModelKind::BetaBinomial { n } => Ok(1.0 / (*n as f64 + 1.0)),
            ModelKind::PoissonGamma => {
                // m is decreasing
                let start = match a {
                    Subset::All => 0.0,
                    Subset::Indices(ix) => ix.iter().min().map(|i| *i as f64).ok_or_else(|| Error::domain("empty set"))?,
                    Subset::Interval { lo, .. } => lo.max(0.0).ceil(),
                };
                self.marginal_density(start)
            }
            ModelKind::Gaussian { .. } => match a {
                Subset::All => self.marginal_density(0.0),
                Subset::Interval { lo, hi } => self.marginal_density(0.0f64.clamp(*lo, *hi)),
                Subset::Indices(_) => {
                    let xs = self.x_candidates(a)?.unwrap_or_default();
                    xs.iter().map(|x| self.marginal_density(*x)).try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
                }
            },
            ModelKind::Finite(m) => {
                let vals: Vec<f64> = (0..m.nx())
                    .filter(|i| a.contains(*i, m.x_points[*i]))
                    .map(|i| m.marginal(i))
                    .collect();
                vals.into_iter().reduce(f64::max).ok_or_else(|| Error::domain("empty set"))
            }
        }
    }

    /// The small set `{x : φ(x) ≤ d}`.
    pub fn sublevel_set(&self, phi: &DriftFn, d: f64) -> Result<Subset> {
        match (&self.x_space, phi) {
            (SpaceRepr::Real1D(_), DriftFn::Abs) => Ok(Subset::interval(-d, d)),
            (SpaceRepr::Real1D(_), _) => Err(Error::Unsupported(format!(
                "sublevel sets of {} on a continuous space",
                phi.name()
            ))),
            (SpaceRepr::TruncatedCountable { .. }, DriftFn::Identity | DriftFn::Abs) => {
                if d < 0.0 {
                    Ok(Subset::Indices(vec![]))
                } else {
                    Ok(Subset::Indices((0..=d.floor() as usize).collect()))
                }
            }
            (SpaceRepr::TruncatedCountable { .. }, DriftFn::Table(_)) => {
                Err(Error::Unsupported("tabulated drift on a countable space".into()))
            }
            (SpaceRepr::Finite { points, .. }, phi) => {
                let mut ix = Vec::new();
                for (i, &p) in points.iter().enumerate() {
                    if phi.eval_at(p, Some(i))? <= d {
                        ix.push(i);
                    }
                }
                Ok(Subset::Indices(ix))
            }
        }
    }

    /// Whether `P(A × B) > 0`. Finite models are summed exactly; the
    /// built-in densities are positive on the interior of their support, so
    /// there the question reduces to `μ(A) > 0` and `π(B) > 0`. Index sets on
    /// a continuous space stand for quadrature cells.
    pub fn rect_has_positive_mass(&self, a: &Subset, b: &Subset) -> Result<bool> {
        if let ModelKind::Finite(m) = &self.kind {
            let mut total = 0.0;
            for i in (0..m.nx()).filter(|i| a.contains(*i, m.x_points[*i])) {
                for t in (0..m.nt()).filter(|t| b.contains(*t, m.theta_points[*t])) {
                    total += m.mass(i, t);
                }
            }
            return Ok(total > 0.0);
        }
        let mu_positive = match (&self.x_space, a) {
            (_, Subset::All) => true,
            (SpaceRepr::Real1D(rule), Subset::Interval { lo, hi }) => lo.max(rule.lower) < hi.min(rule.upper),
            (SpaceRepr::Real1D(rule), Subset::Indices(ix)) => ix.iter().any(|i| *i < rule.len()),
            _ => !self.x_candidates(a)?.map(|v| v.is_empty()).unwrap_or(false),
        };
        Ok(mu_positive && self.prior_mass(b)? > 0.0)
    }

    /// Finite model obtained by replacing a continuous parameter space by
    /// its quadrature nodes. Only defined for finite data spaces.
    pub fn discretized(&self) -> Result<FiniteModel> {
        if let ModelKind::Finite(m) = &self.kind {
            return Ok(m.clone());
        }
        let (SpaceRepr::Finite { points, weights }, SpaceRepr::Real1D(rule)) = (&self.x_space, &self.theta_space) else {
            return Err(Error::Unsupported("discretization needs a finite data space".into()));
        };
        let mut f = Vec::with_capacity(points.len());
        for &x in points {
            let row: Result<Vec<f64>> = rule.nodes.iter().map(|&t| self.joint_density(x, t)).collect();
            f.push(row?);
        }
        let total: f64 = rule.weights.iter().sum();
        // renormalize the node weights to an exact probability vector and
        // each column to integrate to one against mu
        let pi: Vec<f64> = rule.weights.iter().map(|w| w / total).collect();
        for t in 0..rule.len() {
            let col: f64 = f.iter().zip(weights).map(|(row, w)| row[t] * w).sum();
            for row in f.iter_mut() {
                row[t] /= col;
            }
        }
        FiniteModel::new(FiniteModelConfig {
            x_points: points.clone(),
            theta_points: rule.nodes.clone(),
            mu_weights: weights.clone(),
            pi_weights: pi,
            f,
        })
    }
}

/// `log P(x → k)` for the Poisson/Gamma data chain: negative binomial with
/// `x + 1` successes and success probability 2/3.
fn poisson_gamma_ln_transition(x: usize, k: usize) -> f64 {
    ln_choose((x + k) as u64, k as u64)
        + (x as f64 + 1.0) * (2.0f64 / 3.0).ln()
        + k as f64 * (1.0f64 / 3.0).ln()
}

/// Certified upper bound on `P(x → k > n_max)`.
fn poisson_gamma_row_tail(x: usize, n_max: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut k = n_max + 1;
    loop {
        let term = poisson_gamma_ln_transition(x, k).exp();
        sum += term;
        // ratio of consecutive terms, decreasing in k towards 1/3
        let q = (x + k + 1) as f64 / (3.0 * (k + 1) as f64);
        if q < 1.0 && (term == 0.0 || term * q / (1.0 - q) <= 1e-30 * sum.max(1e-300)) {
            return Ok(sum + term * q / (1.0 - q));
        }
        k += 1;
        if k > n_max + 10_000_000 {
            return Err(Error::Numeric {
                what: "row tail summation did not converge".into(),
                residual: term,
            });
        }
    }
}

fn sample_index<R: Rng + ?Sized, I: Iterator<Item = f64> + Clone>(rng: &mut R, weights: I) -> usize {
    let total: f64 = weights.clone().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests;
