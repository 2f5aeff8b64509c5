use super::*;
use crate::model::{MatrixSettings, TransitionMatrix, TwoComponentModel};

fn bb(n: u64) -> TwoComponentModel {
    TwoComponentModel::beta_binomial(n).unwrap()
}

#[test]
fn uniform_u_beta_binomial_beats_closed_form() {
    for n in [1u64, 2, 5, 10, 20] {
        let m = bb(n);
        let cert = uniform_u(&m, &ThetaFamily::default_for(&m)).unwrap();
        let nf = n as f64;
        let closed = (nf / (2.0 * (nf + 1.0))).powi(n as i32) / (nf + 1.0);
        assert!(cert.u >= closed * (1.0 - 1e-12), "n={n}: {} < {closed}", cert.u);
        // and the supremum over intervals [δ, 1-δ] is exactly the closed form
        assert!(cert.u <= closed * (1.0 + 1e-12));
        let delta = cert.best.unwrap().param;
        assert!((delta - nf / (2.0 * (nf + 1.0))).abs() < 1e-4);
    }
}

#[test]
fn uniform_u_vanishes_on_unbounded_spaces() {
    let pg = TwoComponentModel::poisson_gamma();
    let cert = uniform_u(&pg, &ThetaFamily::default_for(&pg)).unwrap();
    assert_eq!(cert.u, 0.0);
    assert!(cert.best.is_none());
    let g = TwoComponentModel::gaussian(0.25, 0.25).unwrap();
    assert_eq!(uniform_u(&g, &ThetaFamily::default_for(&g)).unwrap().u, 0.0);
}

#[test]
fn uniform_u_zero_density_everywhere() {
    use crate::model::{FiniteModel, FiniteModelConfig};
    let diag = FiniteModel::new(FiniteModelConfig {
        x_points: vec![0.0, 1.0],
        theta_points: vec![0.0, 1.0],
        mu_weights: vec![1.0, 1.0],
        pi_weights: vec![0.5, 0.5],
        f: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    })
    .unwrap();
    let m = TwoComponentModel::finite("diag", diag);
    assert_eq!(uniform_u(&m, &ThetaFamily::FiniteSubsets).unwrap().u, 0.0);
}

#[test]
fn uniform_curve_values() {
    let c = uniform_bound_curve(0.25 * 0.5, 0.5, 3).unwrap();
    assert_eq!(c.values[0], 1.0);
    assert!((c.params["rho"] - 0.75).abs() < 1e-15);
    // n = 10: ρ = 1 - (5/11)^10
    let u = (10.0f64 / 22.0).powi(10) / 11.0;
    let c = uniform_bound_curve(u, 1.0 / 11.0, 2).unwrap();
    assert!((c.params["rho"] - 0.999_623_492_881_416_5).abs() < 1e-15);
    let c = uniform_bound_curve(0.0, 0.3, 4).unwrap();
    assert!(c.values.iter().all(|v| *v == 1.0));
    assert!(matches!(uniform_bound_curve(0.4, 0.3, 4), Err(Error::InvalidCertificate(_))));
}

#[test]
fn rosenthal_t_spot_values() {
    // independent evaluation: 22^0.05 (12/21)^0.95 and sqrt(5 * 3.5) / 2
    let a = rosenthal_t(0.5, 0.5, 20.0, 0.05).unwrap();
    assert!((a.t - 0.685_859_230_359_655_7).abs() < 1e-13);
    assert!(a.feasible);
    let b = rosenthal_t(0.5, 0.5, 3.0, 0.5).unwrap();
    assert!((b.t - 2.091_650_066_335_189).abs() < 1e-13);
    assert!(!b.feasible);
    assert!(matches!(rosenthal_t(0.5, 0.5, 2.0, 0.5), Err(Error::Domain(_))));
    assert!(rosenthal_t(0.5, 0.5, 2.0 * (1.0 + 2e-6), 0.5).is_ok());
    assert!(rosenthal_t(0.5, 1.0, 20.0, 0.5).is_err());
    assert!(rosenthal_t(0.5, 0.5, 20.0, 0.0).is_err());
}

#[test]
fn rosenthal_t_monotone_in_alpha_and_beta() {
    let d = 50.0;
    for r in [0.1, 0.5, 0.9] {
        let mut prev_row: Option<Vec<f64>> = None;
        for ai in 0..10 {
            let alpha = ai as f64 * 0.5;
            let row: Vec<f64> = (1..10)
                .map(|bi| rosenthal_t(alpha, bi as f64 * 0.05, d, r).unwrap().t)
                .collect();
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
            if let Some(prev) = prev_row {
                assert!(prev.iter().zip(&row).all(|(p, q)| p <= q));
            }
            prev_row = Some(row);
        }
    }
}

#[test]
fn rosenthal_curve_behaviour() {
    let pg = TwoComponentModel::poisson_gamma();
    let drift = DriftCertificate::for_model(&pg).unwrap();
    let b = Subset::interval(0.5, 2.0);
    let mc = prop3_epsilon(&pg, 4.0, &drift.phi, &b).unwrap();
    let c = rosenthal_bound_curve(&drift, mc.epsilon, 4.0, 0.05, 0.0, 100_000).unwrap();
    assert!((c.values[0] - 3.0).abs() < 1e-15);
    assert_eq!(c.capped(0), Some(1.0));
    let t = rosenthal_t(0.5, 0.5, 4.0, 0.05).unwrap().t;
    assert!(t < 1.0);
    for l in [100usize, 1000, 100_000] {
        let bound = (1.0 - mc.epsilon).powf(0.05 * l as f64) + t.powi(l as i32) * 2.0;
        assert!((c.values[l] - bound).abs() <= 1e-12 * bound);
    }
    assert!(c.values.windows(2).all(|w| w[1] <= w[0]));
    assert!(c.values[100_000] < 1e-3);
    // d = 20 is valid but B = [1/2, 2] then gives a negligible ε
    let tiny = prop3_epsilon(&pg, 20.0, &drift.phi, &b).unwrap();
    assert!(tiny.epsilon < 1e-20);
    assert!(matches!(
        rosenthal_bound_curve(&drift, mc.epsilon, 3.0, 0.5, 0.0, 5),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn prop3_epsilon_poisson_example() {
    let pg = TwoComponentModel::poisson_gamma();
    let mc = prop3_epsilon(&pg, 4.0, &DriftFn::Identity, &Subset::interval(0.5, 2.0)).unwrap();
    // (e^{-1/2} - e^{-2}) * e^{-1/2} 0.5^4 / 4! / (1/2), evaluated in extended precision
    assert!((mc.epsilon - 0.001_488_512_721_601_789_2).abs() < 1e-15);
    assert_eq!(mc.small_set, Subset::Indices(vec![0, 1, 2, 3, 4]));
}

#[test]
fn prop3_epsilon_gaussian_and_errors() {
    let g = TwoComponentModel::gaussian(0.25, 0.25).unwrap();
    let mc = prop3_epsilon(&g, 1.0, &DriftFn::Abs, &Subset::interval(-1.0, 1.0)).unwrap();
    assert!(mc.epsilon > 0.0 && mc.epsilon <= 1.0);
    assert!(mc.grid_certified);
    let err = prop3_epsilon(&g, 1.0, &DriftFn::Abs, &Subset::interval(1.0, 1.0)).unwrap_err();
    assert!(matches!(err, Error::CertificateUnavailable(_)));
}

#[test]
fn drift_certificate_rejects_wrong_constants() {
    let pg = TwoComponentModel::poisson_gamma();
    let grid: Vec<f64> = (0..=100).map(|x| x as f64).collect();
    assert!(DriftCertificate::verify(&pg, DriftFn::Identity, 0.5, 0.5, &grid).is_ok());
    assert!(DriftCertificate::verify(&pg, DriftFn::Identity, 0.4, 0.5, &grid).is_err());
    assert!(DriftCertificate::verify(&pg, DriftFn::Identity, 0.5, 1.0, &grid).is_err());
    assert!(DriftCertificate::verify(&pg, DriftFn::Identity, 0.5, 0.5, &[]).is_err());
}

#[test]
fn dks_values() {
    let d = dks_beta_binomial_bounds(1, 3).unwrap();
    assert!((d.beta1 - 1.0 / 3.0).abs() < 1e-15);
    assert!((d.lower.value(1).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!((d.upper.value(1).unwrap() - 0.866_025_403_784_438_6).abs() < 1e-15);
    assert_eq!(d.upper.value(0), None);
    let d = dks_beta_binomial_bounds(10, 1).unwrap();
    assert!((d.beta1 - 5.0 / 6.0).abs() < 1e-15);
    assert!(dks_beta_binomial_bounds(0, 1).is_err());
}

#[test]
fn eigen_two_state() {
    let p = bb(1).x_chain_matrix(MatrixSettings::default()).unwrap();
    let e = numeric_eigendecomposition(&p).unwrap();
    assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
    assert!((e.eigenvalues[1] - 1.0 / 3.0).abs() < 1e-14);
    assert!(e.eigenfunctions[0].iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!((e.eigenfunctions[1][1].abs() - 1.0).abs() < 1e-12);
    for l in 1..10 {
        let b = spectral_bound(&e, 1, l);
        assert!((b - 0.5 * 3f64.powi(-(l as i32))).abs() < 1e-14);
    }
}

#[test]
fn eigen_identity_and_errors() {
    let id = TransitionMatrix::from_rows(
        &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        vec![0.2, 0.3, 0.5],
    )
    .unwrap();
    let e = numeric_eigendecomposition(&id).unwrap();
    assert!(e.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-14));

    let cyclic = TransitionMatrix::from_rows(
        &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        vec![1.0 / 3.0; 3],
    )
    .unwrap();
    assert!(matches!(numeric_eigendecomposition(&cyclic), Err(Error::NotReversible(_))));

    let pg = TwoComponentModel::poisson_gamma()
        .x_chain_matrix(MatrixSettings::default())
        .unwrap();
    assert!(matches!(numeric_eigendecomposition(&pg), Err(Error::Unsupported(_))));
}

#[test]
fn eigen_structure_beta_binomial() {
    for n in [2u64, 7, 25] {
        let p = bb(n).x_chain_matrix(MatrixSettings::default()).unwrap();
        let e = numeric_eigendecomposition(&p).unwrap();
        assert!((e.eigenvalues[1] - (1.0 - 2.0 / (n as f64 + 2.0))).abs() < 1e-10);
        assert!(e.orthonormality_residual() < 1e-8);
        assert!(e.eigen_residual(&p) < 1e-8);
        for x in 0..p.len() {
            for y in 0..p.len() {
                assert!((e.reconstruct(x, y) - p.get(x, y)).abs() < 1e-8);
            }
        }
        assert!(spectral_bound(&e, 0, 100_000) < 1e-12);
    }
}

#[test]
fn prop4_toy_enumeration() {
    let t = ThreeComponentModel::from_joint(&[
        vec![vec![0.10, 0.05], vec![0.20, 0.15]],
        vec![vec![0.05, 0.15], vec![0.10, 0.20]],
    ])
    .unwrap();
    let cert = prop4_v(&t).unwrap();
    // brute force over the three nonempty subsets of {θ₀, θ₁}
    let mut best: f64 = 0.0;
    for mask in 1..4u32 {
        let ks: Vec<usize> = (0..2).filter(|k| mask & (1 << k) != 0).collect();
        let mut inf = f64::INFINITY;
        let mut sup_h: f64 = 0.0;
        for &k in &ks {
            for i in 0..2 {
                sup_h = sup_h.max(t.h(i, k));
                for j in 0..2 {
                    inf = inf.min(t.f(i, j, k));
                }
            }
        }
        let mass: f64 = ks.iter().map(|k| t.pi()[*k]).sum();
        best = best.max(2.0 * mass * inf * inf / sup_h);
    }
    assert!((cert.v - best).abs() < 1e-15);
    assert!(cert.rho() < 1.0 && cert.rho() > 0.0);
}

#[test]
fn prop4_zero_cells_and_rescaling() {
    let t = ThreeComponentModel::from_joint(&[
        vec![vec![0.10, 0.0], vec![0.20, 0.15]],
        vec![vec![0.0, 0.15], vec![0.10, 0.30]],
    ])
    .unwrap();
    let cert = prop4_v(&t).unwrap();
    assert_eq!(cert.v, 0.0);
    assert!(cert.curve(5).unwrap().values.iter().all(|v| *v == 1.0));

    let t = ThreeComponentModel::from_joint(&[
        vec![vec![0.10, 0.05], vec![0.20, 0.15]],
        vec![vec![0.05, 0.15], vec![0.10, 0.20]],
    ])
    .unwrap();
    let base = prop4_v(&t).unwrap();
    for c in [0.5, 3.0, 10.0] {
        let scaled = prop4_v(&t.rescale_mu2(c).unwrap()).unwrap();
        assert!((scaled.v - base.v / c).abs() < 1e-14);
        assert!((scaled.rho() - base.rho()).abs() < 1e-14);
    }
}
