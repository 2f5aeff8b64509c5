use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, Gamma as GammaDist};

use super::*;

fn gauss() -> TwoComponentModel {
    TwoComponentModel::gaussian(0.25, 0.25).unwrap()
}

fn theta_rule(m: &TwoComponentModel) -> &QuadratureRule {
    match m.theta_space() {
        SpaceRepr::Real1D(r) => r,
        _ => panic!("continuous theta expected"),
    }
}

#[test]
fn joint_density_examples() {
    let bb = TwoComponentModel::beta_binomial(1).unwrap();
    assert!((bb.log_joint_density(0.0, 0.5).unwrap() - 0.5f64.ln()).abs() < 1e-13);
    let pg = TwoComponentModel::poisson_gamma();
    assert!(pg.log_joint_density(0.0, 0.0).unwrap().abs() < 1e-14);
    // N(0; 0, 1/4) = 1/sqrt(2π/4)
    let v = gauss().joint_density(0.0, 0.0).unwrap();
    assert!((v - 0.797_884_560_802_865_4).abs() < 1e-15);
    // zero density is allowed
    assert_eq!(pg.log_joint_density(1.0, 0.0).unwrap(), f64::NEG_INFINITY);
}

#[test]
fn joint_density_domain_errors() {
    let bb = TwoComponentModel::beta_binomial(3).unwrap();
    assert!(matches!(bb.log_joint_density(4.0, 0.5), Err(Error::Domain(_))));
    assert!(matches!(bb.log_joint_density(1.5, 0.5), Err(Error::Domain(_))));
    assert!(matches!(bb.log_joint_density(1.0, 1.5), Err(Error::Domain(_))));
    let pg = TwoComponentModel::poisson_gamma();
    assert!(pg.log_joint_density(-1.0, 1.0).is_err());
    assert!(pg.log_joint_density(2.0, -0.1).is_err());
    assert!(gauss().log_joint_density(f64::NAN, 0.0).is_err());
}

#[test]
fn marginals_match_quadrature() {
    for n in [1u64, 4, 17] {
        let bb = TwoComponentModel::beta_binomial(n).unwrap();
        for x in 0..=n {
            let x = x as f64;
            let q = theta_rule(&bb).integrate(|t| bb.joint_density(x, t).unwrap());
            let m = bb.marginal_density(x).unwrap();
            assert!((m - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
            assert!((q - m).abs() < 1e-12, "n={n} x={x}: {q} vs {m}");
        }
    }
    let pg = TwoComponentModel::poisson_gamma();
    for x in 0..20 {
        let x = x as f64;
        let m = pg.marginal_density(x).unwrap();
        assert!((m / 2f64.powf(-x - 1.0) - 1.0).abs() < 1e-13);
        let q = theta_rule(&pg).integrate(|t| pg.joint_density(x, t).unwrap());
        assert!((q / m - 1.0).abs() < 1e-9, "x={x}");
    }
    let g = gauss();
    for x in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        let q = theta_rule(&g).integrate(|t| g.joint_density(x, t).unwrap());
        let m = g.marginal_density(x).unwrap();
        assert!((q - m).abs() < 1e-12);
        assert!((m - normal_pdf(x, 0.0, 0.5)).abs() < 1e-15);
    }
}

#[test]
fn posterior_conjugacy() {
    let g = gauss();
    for x in [-2.0, 0.0, 1.5] {
        let mean = theta_rule(&g).integrate(|t| t * g.posterior_density(t, x).unwrap());
        assert!((mean - 2.0 * 0.25 * x).abs() < 1e-10);
        assert!((g.posterior_mean(x).unwrap() - 0.5 * x).abs() < 1e-15);
    }
    let bb = TwoComponentModel::beta_binomial(6).unwrap();
    for x in 0..=6 {
        let beta = statrs::distribution::Beta::new(x as f64 + 1.0, 7.0 - x as f64).unwrap();
        for t in [0.1, 0.4, 0.77] {
            let p = bb.posterior_density(t, x as f64).unwrap();
            assert!((p - beta.pdf(t)).abs() < 1e-11);
        }
    }
    let pg = TwoComponentModel::poisson_gamma();
    for x in [0usize, 3, 11] {
        let gamma = GammaDist::new(x as f64 + 1.0, 2.0).unwrap();
        for t in [0.2, 1.0, 4.5] {
            // density w.r.t. Lebesgue = density w.r.t. π times e^{-θ}
            let p = pg.posterior_density(t, x as f64).unwrap() * (-t as f64).exp();
            assert!((p - gamma.pdf(t)).abs() < 1e-12);
        }
    }
}

#[test]
fn posterior_normalization_on_grid() {
    let models = [
        TwoComponentModel::beta_binomial(1).unwrap(),
        TwoComponentModel::beta_binomial(30).unwrap(),
        TwoComponentModel::poisson_gamma(),
        gauss(),
    ];
    for m in &models {
        let xs: Vec<f64> = match m.kind() {
            ModelKind::BetaBinomial { n } => (0..=*n).map(|k| k as f64).collect(),
            ModelKind::PoissonGamma => (0..=30).map(|k| k as f64).collect(),
            _ => (-8..=8).map(|k| k as f64 * 0.5).collect(),
        };
        for x in xs {
            let z = theta_rule(m).integrate(|t| m.posterior_density(t, x).unwrap());
            assert!((z - 1.0).abs() < 1e-8, "{} x={x}: {z}", m.name());
        }
    }
}

#[test]
fn transition_examples() {
    let bb = TwoComponentModel::beta_binomial(1).unwrap();
    assert!((bb.x_chain_transition(0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-13);

    let pg = TwoComponentModel::poisson_gamma();
    for x in [0usize, 2, 7] {
        let mut total = 0.0;
        for k in 0..400usize {
            let p = pg.x_chain_transition(x as f64, k as f64).unwrap();
            let binom = (ln_choose((x + k) as u64, k as u64)).exp();
            let expect = binom * (2.0f64 / 3.0).powi(x as i32 + 1) * (1.0f64 / 3.0).powi(k as i32);
            if k < 60 {
                assert!((p - expect).abs() <= 1e-13 * expect.max(1e-300), "x={x} k={k}");
            }
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-13);
    }
}

#[test]
fn gaussian_transition_is_posterior_then_likelihood() {
    let g = gauss();
    let ar = g.gaussian_ar1().unwrap();
    assert!((ar.coef - 0.5).abs() < 1e-15);
    assert!((ar.step_var - 0.25 * 1.5).abs() < 1e-15);
    // stationary variance of the AR(1) recursion
    assert!((ar.step_var / (1.0 - ar.coef * ar.coef) - 0.5).abs() < 1e-15);
    for (x, y) in [(0.0, 0.3), (1.2, -0.4), (-2.0, -1.0)] {
        let composed = theta_rule(&g)
            .integrate(|t| g.posterior_density(t, x).unwrap() * normal_pdf(y, t, 0.25));
        assert!((composed - g.x_chain_transition(x, y).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn beta_binomial_matrix_two_states() {
    let bb = TwoComponentModel::beta_binomial(1).unwrap();
    let p = bb.x_chain_matrix(MatrixSettings::default()).unwrap();
    let expect = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((p.get(i, j) - expect[i][j]).abs() < 1e-13);
        }
    }
}

#[test]
fn matrix_invariants_finite_models() {
    let toy = FiniteModel::from_joint(
        vec![0.0, 1.0, 2.0],
        vec![-1.0, 0.0, 1.0],
        &[vec![1.0, 2.0, 3.0], vec![2.0, 2.0, 1.0], vec![1.0, 1.0, 5.0]],
    )
    .unwrap();
    let models = [
        TwoComponentModel::beta_binomial(1).unwrap(),
        TwoComponentModel::beta_binomial(12).unwrap(),
        TwoComponentModel::beta_binomial(40).unwrap(),
        TwoComponentModel::finite("toy", toy),
    ];
    for m in &models {
        let p = m.x_chain_matrix(MatrixSettings::default()).unwrap();
        assert!(p.row_sum_defect() < 1e-12, "{}", m.name());
        assert!(p.reversibility_residual() < 1e-10);
        assert!(p.stationarity_residual() < 1e-10);
    }
}

#[test]
fn poisson_matrix_truncation() {
    let pg = TwoComponentModel::poisson_gamma();
    let p = pg.x_chain_matrix(MatrixSettings::default()).unwrap();
    assert_eq!(p.len(), 40);
    assert!(p.tail_bound < 1e-12);
    assert!(p.row_sum_defect() < 1e-12);
    assert!(p.reversibility_residual() < 1e-10);
    assert!(p.stationarity_residual() < 1e-10);

    let p = pg.x_chain_matrix(MatrixSettings::with_n_max(200)).unwrap();
    // Σ_{x>200} 2^{-x-1} = 2^{-201}
    assert!(p.tail_bound < 1e-60);
    assert!(p.row_sum_defect() < 1e-12);

    let err = pg
        .x_chain_matrix(MatrixSettings {
            n_max: Some(10),
            tail_tolerance: 1e-12,
        })
        .unwrap_err();
    assert!(matches!(err, Error::Truncation { .. }));
    assert!(gauss().x_chain_matrix(MatrixSettings::default()).is_err());
}

#[test]
fn auto_truncation_point() {
    assert_eq!(poisson_gamma_n_max(1e-12), 39);
    assert!(poisson_gamma_tail(39) < 1e-12 && poisson_gamma_tail(38) >= 1e-12);
}

#[test]
fn gibbs_step_is_reproducible() {
    let bb = TwoComponentModel::beta_binomial(10).unwrap();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        (0..5).map(|_| bb.gibbs_step(10.0, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn gibbs_step_poisson_mean() {
    let pg = TwoComponentModel::poisson_gamma();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| pg.gibbs_step(3.0, &mut rng).unwrap().0).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn gibbs_long_run_uniform() {
    let bb = TwoComponentModel::beta_binomial(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut x = 0.0;
    let n = 100_000;
    let mut ones = 0usize;
    for _ in 0..n {
        x = bb.gibbs_step(x, &mut rng).unwrap().0;
        ones += (x == 1.0) as usize;
    }
    let frac = ones as f64 / n as f64;
    // lag-one correlation 1/3 inflates the variance by (1+1/3)/(1-1/3) = 2
    let se = (0.25 * 2.0 / n as f64).sqrt();
    assert!((frac - 0.5).abs() < 4.0 * se, "{frac}");
}

#[test]
fn sampler_matches_transition_rows() {
    let toy = FiniteModel::from_joint(
        vec![0.0, 1.0, 2.0],
        vec![0.0, 1.0],
        &[vec![1.0, 3.0], vec![2.0, 2.0], vec![4.0, 1.0]],
    )
    .unwrap();
    let models = [
        TwoComponentModel::beta_binomial(4).unwrap(),
        TwoComponentModel::finite("toy", toy),
    ];
    let n = 100_000;
    for m in &models {
        let grid = m.x_space().grid();
        let x0 = grid[grid.len() - 1];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut counts = vec![0usize; grid.len()];
        for _ in 0..n {
            let (y, _) = m.gibbs_step(x0, &mut rng).unwrap();
            counts[grid.iter().position(|g| *g == y).unwrap()] += 1;
        }
        for (j, &y) in grid.iter().enumerate() {
            let p = m.x_chain_transition(x0, y).unwrap();
            let freq = counts[j] as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-6);
            assert!((freq - p).abs() < 4.0 * se, "{} y={y}: {freq} vs {p}", m.name());
        }
    }
}

#[test]
fn drift_examples() {
    let pg = TwoComponentModel::poisson_gamma();
    assert!((pg.drift_expectation(&DriftFn::Identity, 3.0).unwrap() - 2.0).abs() < 1e-12);
    assert!((pg.drift_expectation(&DriftFn::Identity, 0.0).unwrap() - 0.5).abs() < 1e-12);

    let g = gauss();
    let (phi, alpha, beta) = g.default_drift_constants().unwrap();
    let sigma = 0.5f64;
    let tau = 0.5f64;
    let root = (2.0 / std::f64::consts::PI).sqrt();
    assert!((alpha - (sigma * root + 2f64.sqrt() * sigma * tau * root)).abs() < 1e-15);
    assert!((beta - 2.0 * tau * tau).abs() < 1e-15);
    for x in [-5.0, -1.0, 0.0, 0.3, 4.0] {
        let v = g.drift_expectation(&phi, x).unwrap();
        assert!(v <= alpha + beta * f64::abs(x) + 1e-8);
        assert!(v > 0.0);
    }
    assert!(g.drift_expectation(&DriftFn::Identity, 0.0).is_err());

    let bb = TwoComponentModel::beta_binomial(8).unwrap();
    let (phi, a, b) = bb.default_drift_constants().unwrap();
    for x in 0..=8 {
        let v = bb.drift_expectation(&phi, x as f64).unwrap();
        assert!((v - (a + b * x as f64)).abs() < 1e-12);
    }
}

#[test]
fn sublevel_sets_and_extrema() {
    let pg = TwoComponentModel::poisson_gamma();
    let a = pg.sublevel_set(&DriftFn::Identity, 4.0).unwrap();
    assert_eq!(a, Subset::Indices(vec![0, 1, 2, 3, 4]));
    assert!((pg.sup_marginal(&a).unwrap() - 0.5).abs() < 1e-16);
    let b = Subset::interval(0.5, 2.0);
    let inf = pg.inf_joint_density(&a, &b).unwrap();
    let brute = (0..=4)
        .flat_map(|x| (0..=1000).map(move |k| (x, 0.5 + 1.5 * k as f64 / 1000.0)))
        .map(|(x, t)| pg.joint_density(x as f64, t).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((inf - brute).abs() < 1e-15);
    // unbounded data space: the infimum vanishes
    assert_eq!(pg.inf_joint_density(&Subset::All, &b).unwrap(), 0.0);

    let g = gauss();
    let a = g.sublevel_set(&DriftFn::Abs, 1.0).unwrap();
    let b = Subset::interval(-1.0, 1.0);
    let inf = g.inf_joint_density(&a, &b).unwrap();
    assert!((inf - normal_pdf(2.0, 0.0, 0.25)).abs() < 1e-15);
    assert!((g.sup_marginal(&a).unwrap() - normal_pdf(0.0, 0.0, 0.5)).abs() < 1e-15);
    assert!((g.sup_marginal(&Subset::interval(1.0, 2.0)).unwrap() - normal_pdf(1.0, 0.0, 0.5)).abs() < 1e-15);
}

#[test]
fn prior_masses() {
    let pg = TwoComponentModel::poisson_gamma();
    let m = pg.prior_mass(&Subset::interval(0.5, 2.0)).unwrap();
    assert!((m - ((-0.5f64).exp() - (-2.0f64).exp())).abs() < 1e-15);
    assert!((pg.prior_quantile(pg.prior_cdf(1.3).unwrap()).unwrap() - 1.3).abs() < 1e-12);
    let g = gauss();
    assert!((g.prior_mass(&Subset::All).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(g.prior_mass(&Subset::interval(1.0, 1.0)).unwrap(), 0.0);
}

#[test]
fn discretized_beta_binomial_is_valid() {
    let bb = TwoComponentModel::beta_binomial(5).unwrap();
    let fm = bb.discretized().unwrap();
    assert_eq!(fm.nx(), 6);
    assert_eq!(fm.nt(), THETA_NODES);
    for x in 0..6 {
        assert!((fm.marginal(x) - 1.0 / 6.0).abs() < 1e-12);
    }
}
