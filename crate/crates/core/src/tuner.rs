//! Grid search over the free constants `(r, d, B)` of the drift/minorization
//! bound and over `B` for the uniform bound.
//!
//! Candidates are compared lexicographically on `(objective, d, r)`, so the
//! result is the same whatever the evaluation order.

use std::cmp::Ordering;

use serde::Serialize;

use crate::bounds::{
    log_grid, prop3_epsilon, rank_theta_by_column_inf, rosenthal_t, rosenthal_value, uniform_bound_curve,
    uniform_u_with, BoundCurve, BoundKind, DriftCertificate, ThetaCandidate, ThetaFamily, UniformCertificate,
};
use crate::error::{Error, Result};
use crate::model::TwoComponentModel;
use crate::par::Execution;

/// Longest mixing time the search will certify.
pub const MAX_MIXING_TIME: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Objective {
    /// Minimize the bound at a fixed step count.
    MinBoundAt(usize),
    /// Minimize the first step at which the bound reaches a target.
    MinMixingTime(f64),
}

/// Search space for [`optimize_rosenthal`].
#[derive(Debug, Clone, PartialEq)]
pub struct RosenthalSearch {
    pub d_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub family: ThetaFamily,
    /// Run one coordinate-descent pass around the best grid point.
    pub refine: bool,
    /// Minimum length of the returned curve.
    pub curve_ell_max: usize,
}

impl RosenthalSearch {
    /// 64 log-spaced `d` up to `100 (2α/(1-β) + 1)`, `r = i/64` for
    /// `i = 1..=63`, and the model's default parameter-set family.
    pub fn default_for(model: &TwoComponentModel, drift: &DriftCertificate) -> Self {
        let d_max = 100.0 * (drift.d_threshold() + 1.0);
        RosenthalSearch {
            d_values: log_grid(drift.d_min(), d_max, 64),
            r_values: (1..64).map(|i| i as f64 / 64.0).collect(),
            family: ThetaFamily::default_for(model),
            refine: true,
            curve_ell_max: 100,
        }
    }
}

/// One evaluated `(r, d, B)` candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub r: f64,
    pub d: f64,
    pub b_param: f64,
    pub epsilon: f64,
    pub t: f64,
    /// Bound value, or mixing time as a float (infinite when unreachable).
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RosenthalTuning {
    pub r: f64,
    pub d: f64,
    pub b: ThetaCandidate,
    pub epsilon: f64,
    pub t: f64,
    pub phi_x0: f64,
    pub objective: Objective,
    pub objective_value: f64,
    pub curve: BoundCurve,
    pub trace: Vec<TraceRow>,
}

fn psi(drift: &DriftCertificate, phi_x0: f64) -> f64 {
    1.0 + drift.alpha / (1.0 - drift.beta) + phi_x0
}

/// Smallest `ℓ` with `(1-ε)^{rℓ} + t^ℓ ψ ≤ target`, by doubling then bisection.
fn rosenthal_crossing(epsilon: f64, r: f64, t: f64, psi: f64, target: f64) -> Option<u64> {
    let f = |l: u64| rosenthal_value(epsilon, r, t, psi, l as usize);
    if f(0) <= target {
        return Some(0);
    }
    let mut hi = 1u64;
    while f(hi) > target {
        hi *= 2;
        if hi > MAX_MIXING_TIME {
            return None;
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn objective_value(objective: Objective, epsilon: f64, r: f64, t: f64, psi: f64) -> f64 {
    match objective {
        Objective::MinBoundAt(ell) => rosenthal_value(epsilon, r, t, psi, ell),
        Objective::MinMixingTime(target) => {
            rosenthal_crossing(epsilon, r, t, psi, target).map_or(f64::INFINITY, |l| l as f64)
        }
    }
}

fn better(a: &TraceRow, b: &TraceRow) -> Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then(a.d.total_cmp(&b.d))
        .then(a.r.total_cmp(&b.r))
}

#[derive(Debug, Default)]
struct Infeasibility {
    epsilon_failures: usize,
    first_epsilon_reason: Option<String>,
    t_failures: usize,
    domain_failures: usize,
    smallest_t: f64,
}

struct Scored {
    row: TraceRow,
    b_index: usize,
}

fn evaluate(
    model: &TwoComponentModel,
    drift: &DriftCertificate,
    cands: &[ThetaCandidate],
    d_values: &[f64],
    r_values: &[f64],
    b_indices: &[usize],
    psi: f64,
    objective: Objective,
    exec: Execution,
    report: &mut Infeasibility,
) -> (Vec<TraceRow>, Option<Scored>) {
    let pairs: Vec<(usize, usize)> = d_values
        .iter()
        .enumerate()
        .flat_map(|(i, _)| b_indices.iter().map(move |&k| (i, k)))
        .collect();
    let eps: Vec<Result<f64>> = exec.map_slice(&pairs, |&(i, k)| {
        prop3_epsilon(model, d_values[i], &drift.phi, &cands[k].set).map(|c| c.epsilon)
    });
    let ts: Vec<Result<f64>> = exec.map_range(d_values.len() * r_values.len(), |ix| {
        let (i, j) = (ix / r_values.len(), ix % r_values.len());
        rosenthal_t(drift.alpha, drift.beta, d_values[i], r_values[j]).map(|t| t.t)
    });
    let mut jobs = Vec::new();
    for (p, e) in pairs.iter().zip(&eps) {
        match e {
            Ok(e) if *e > 0.0 => {
                for j in 0..r_values.len() {
                    match &ts[p.0 * r_values.len() + j] {
                        Ok(t) if *t < 1.0 => jobs.push((p.0, p.1, j, *e, *t)),
                        Ok(t) => {
                            report.t_failures += 1;
                            report.smallest_t = report.smallest_t.min(*t);
                        }
                        Err(_) => report.domain_failures += 1,
                    }
                }
            }
            Ok(_) => report.epsilon_failures += 1,
            Err(err) => {
                report.epsilon_failures += 1;
                report.first_epsilon_reason.get_or_insert_with(|| err.to_string());
            }
        }
    }
    let rows: Vec<TraceRow> = exec.map_slice(&jobs, |&(i, k, j, e, t)| TraceRow {
        r: r_values[j],
        d: d_values[i],
        b_param: cands[k].param,
        epsilon: e,
        t,
        objective: objective_value(objective, e, r_values[j], t, psi),
    });
    let mut best: Option<Scored> = None;
    for (row, job) in rows.iter().zip(&jobs) {
        if best.as_ref().is_none_or(|b| better(row, &b.row) == Ordering::Less) {
            best = Some(Scored { row: *row, b_index: job.1 });
        }
    }
    (rows, best)
}

/// Minimizes the drift/minorization bound over `(r, d, B)`.
pub fn optimize_rosenthal(
    model: &TwoComponentModel,
    drift: &DriftCertificate,
    search: &RosenthalSearch,
    x0: f64,
    objective: Objective,
    exec: Execution,
) -> Result<RosenthalTuning> {
    if search.d_values.is_empty() || search.r_values.is_empty() {
        return Err(Error::domain("empty search grid"));
    }
    if let Objective::MinMixingTime(target) = objective {
        if !(target > 0.0) {
            return Err(Error::domain(format!("target TV {target} must be positive")));
        }
    }
    let phi_x0 = model.drift_value(&drift.phi, x0)?;
    let psi = psi(drift, phi_x0);
    let cands = search.family.candidates(model, &rank_theta_by_column_inf(model)?)?;
    let all_b: Vec<usize> = (0..cands.len()).collect();
    let mut report = Infeasibility {
        smallest_t: f64::INFINITY,
        ..Default::default()
    };
    let (mut trace, best) = evaluate(
        model,
        drift,
        &cands,
        &search.d_values,
        &search.r_values,
        &all_b,
        psi,
        objective,
        exec,
        &mut report,
    );
    let Some(mut best) = best.filter(|b| b.row.objective.is_finite()) else {
        return Err(infeasible(&report, search, trace.len()));
    };

    if search.refine {
        let r_step = if search.r_values.len() > 1 {
            (search.r_values[1] - search.r_values[0]).abs()
        } else {
            0.5 * best.row.r.min(1.0 - best.row.r)
        };
        let rs: Vec<f64> = (0..=32)
            .map(|i| best.row.r - r_step + 2.0 * r_step * i as f64 / 32.0)
            .filter(|r| *r > 0.0 && *r < 1.0)
            .collect();
        let mut scratch = Infeasibility::default();
        let (rows, cand) = evaluate(
            model, drift, &cands, &[best.row.d], &rs, &[best.b_index], psi, objective, exec, &mut scratch,
        );
        trace.extend(rows);
        if let Some(c) = cand.filter(|c| better(&c.row, &best.row) == Ordering::Less) {
            best = c;
        }
        let pos = search.d_values.iter().position(|d| *d == best.row.d);
        let (lo, hi) = match pos {
            Some(p) => (
                search.d_values[p.saturating_sub(1)],
                search.d_values[(p + 1).min(search.d_values.len() - 1)],
            ),
            None => (best.row.d, best.row.d),
        };
        if hi > lo {
            let ds = log_grid(lo.max(drift.d_min()), hi, 33);
            let (rows, cand) = evaluate(
                model, drift, &cands, &ds, &[best.row.r], &[best.b_index], psi, objective, exec, &mut scratch,
            );
            trace.extend(rows);
            if let Some(c) = cand.filter(|c| better(&c.row, &best.row) == Ordering::Less) {
                best = c;
            }
        }
    }

    let row = best.row;
    let ell_max = match objective {
        Objective::MinBoundAt(l) => l,
        Objective::MinMixingTime(_) => row.objective as usize,
    }
    .max(search.curve_ell_max);
    let values = (0..=ell_max).map(|l| rosenthal_value(row.epsilon, row.r, row.t, psi, l)).collect();
    let curve = BoundCurve::new(
        BoundKind::Rosenthal,
        crate::bounds::curve_params([
            ("alpha", drift.alpha),
            ("beta", drift.beta),
            ("epsilon", row.epsilon),
            ("d", row.d),
            ("r", row.r),
            ("t", row.t),
            ("phi_x0", phi_x0),
        ]),
        0,
        values,
    );
    Ok(RosenthalTuning {
        r: row.r,
        d: row.d,
        b: cands[best.b_index].clone(),
        epsilon: row.epsilon,
        t: row.t,
        phi_x0,
        objective,
        objective_value: row.objective,
        curve,
        trace,
    })
}

fn infeasible(report: &Infeasibility, search: &RosenthalSearch, feasible_rows: usize) -> Error {
    let mut parts = Vec::new();
    if report.epsilon_failures > 0 {
        parts.push(format!(
            "minorization unavailable for {} (d, B) pairs{}",
            report.epsilon_failures,
            report
                .first_epsilon_reason
                .as_ref()
                .map(|r| format!(" (e.g. {r})"))
                .unwrap_or_default()
        ));
    }
    if report.t_failures > 0 {
        parts.push(format!(
            "t >= 1 for {} (r, d) candidates (smallest t = {})",
            report.t_failures, report.smallest_t
        ));
    }
    if report.domain_failures > 0 {
        parts.push(format!("{} candidates outside the drift domain", report.domain_failures));
    }
    if feasible_rows > 0 {
        parts.push(format!("{feasible_rows} feasible candidates never reach the target"));
    }
    Error::Infeasible(format!(
        "no feasible candidate among {} d x {} r values: {}",
        search.d_values.len(),
        search.r_values.len(),
        if parts.is_empty() { "empty family".into() } else { parts.join("; ") }
    ))
}

/// First crossing of a threshold, with a closed-form estimate for
/// drift/minorization curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingTime {
    pub ell_star: usize,
    /// `max(⌈ln(2/δ) / (r |ln(1-ε)|)⌉, ⌈(ln(2/δ) + ln ψ) / |ln t|⌉)`: both
    /// terms below `δ/2`, hence never below `ell_star`.
    pub closed_form: Option<u64>,
}

/// Smallest `ℓ` with `min(curve[ℓ], 1) ≤ threshold`.
pub fn mixing_time_from_curve(curve: &BoundCurve, threshold: f64) -> Result<MixingTime> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!("threshold {threshold} must be positive")));
    }
    let closed_form = closed_form_mixing_time(curve, threshold);
    for ell in curve.ells() {
        if curve.capped(ell).is_some_and(|v| v <= threshold) {
            return Ok(MixingTime {
                ell_star: ell,
                closed_form,
            });
        }
    }
    let n = curve.values.len();
    let extrapolated = if n >= 2 {
        let (prev, last) = (curve.values[n - 2], curve.values[n - 1]);
        (last > 0.0 && last < prev).then(|| curve.ell_max() as f64 + (threshold / last).ln() / (last / prev).ln())
    } else {
        None
    };
    Err(Error::NotReached {
        threshold,
        ell_max: curve.ell_max(),
        extrapolated,
    })
}

fn closed_form_mixing_time(curve: &BoundCurve, threshold: f64) -> Option<u64> {
    if curve.kind != BoundKind::Rosenthal {
        return None;
    }
    let p = &curve.params;
    let (eps, r, t) = (p["epsilon"], p["r"], p["t"]);
    let psi = 1.0 + p["alpha"] / (1.0 - p["beta"]) + p["phi_x0"];
    let c = (2.0 / threshold).ln();
    let a = c / (r * -(-eps).ln_1p());
    let b = (c + psi.ln()) / -t.ln();
    let l = a.max(b).max(0.0).ceil();
    l.is_finite().then_some(l as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformTuning {
    pub certificate: UniformCertificate,
    pub curve: BoundCurve,
}

/// Maximizes `u` over the family and returns the uniform curve.
pub fn optimize_uniform_b(
    model: &TwoComponentModel,
    family: &ThetaFamily,
    ell_max: usize,
    exec: Execution,
) -> Result<UniformTuning> {
    let certificate = uniform_u_with(model, family, exec)?;
    let curve = uniform_bound_curve(certificate.u, certificate.sup_m, ell_max)?;
    Ok(UniformTuning { certificate, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::uniform_bound_curve;

    #[test]
    fn geometric_crossing() {
        let c = uniform_bound_curve(0.25, 1.0, 40).unwrap();
        assert_eq!(mixing_time_from_curve(&c, 0.01).unwrap().ell_star, 17);
        assert_eq!(mixing_time_from_curve(&c, 1.0).unwrap().ell_star, 0);
        match mixing_time_from_curve(&uniform_bound_curve(0.25, 1.0, 5).unwrap(), 0.01) {
            Err(Error::NotReached { extrapolated: Some(e), .. }) => assert!((e - 16.008).abs() < 0.01),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn crossing_search_matches_scan() {
        for (eps, r, t, psi, target) in [(0.01, 0.3, 0.9, 4.0, 0.01), (0.2, 0.5, 0.5, 1.5, 0.1), (0.5, 0.9, 0.1, 2.0, 0.9)] {
            let l = rosenthal_crossing(eps, r, t, psi, target).unwrap();
            let scan = (0..).find(|&l| rosenthal_value(eps, r, t, psi, l) <= target).unwrap();
            assert_eq!(l as usize, scan);
        }
    }

    #[test]
    fn poisson_tuning() {
        let pg = TwoComponentModel::poisson_gamma();
        let drift = DriftCertificate::for_model(&pg).unwrap();
        let search = RosenthalSearch::default_for(&pg, &drift);
        let res = optimize_rosenthal(&pg, &drift, &search, 0.0, Objective::MinMixingTime(0.01), Execution::default())
            .unwrap();
        assert!(res.t < 1.0 && res.epsilon > 0.0);
        let mt = mixing_time_from_curve(&res.curve, 0.01).unwrap();
        assert_eq!(mt.ell_star as f64, res.objective_value);
        assert!(mt.closed_form.unwrap() >= mt.ell_star as u64);
        assert!(res.trace.iter().all(|row| row.objective >= res.objective_value));
    }

    #[test]
    fn single_infeasible_point() {
        let pg = TwoComponentModel::poisson_gamma();
        let drift = DriftCertificate::for_model(&pg).unwrap();
        let search = RosenthalSearch {
            d_values: vec![3.0],
            r_values: vec![0.5],
            family: ThetaFamily::QuantileIntervals { deltas: vec![0.25] },
            refine: true,
            curve_ell_max: 10,
        };
        match optimize_rosenthal(&pg, &drift, &search, 0.0, Objective::MinBoundAt(10), Execution::Sequential) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("t >= 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic_across_strategies() {
        let g = TwoComponentModel::gaussian(0.25, 0.2).unwrap();
        let drift = DriftCertificate::for_model(&g).unwrap();
        let search = RosenthalSearch::default_for(&g, &drift);
        let a = optimize_rosenthal(&g, &drift, &search, 1.0, Objective::MinBoundAt(200), Execution::Sequential).unwrap();
        let b = optimize_rosenthal(&g, &drift, &search, 1.0, Objective::MinBoundAt(200), Execution::Parallel).unwrap();
        assert_eq!((a.r, a.d, &a.b), (b.r, b.d, &b.b));
        assert!(a.t < 1.0);
    }

    #[test]
    fn uniform_tuning() {
        let m = TwoComponentModel::beta_binomial(10).unwrap();
        let res = optimize_uniform_b(&m, &ThetaFamily::default_for(&m), 10, Execution::default()).unwrap();
        assert!((res.curve.params["rho"] - 0.999_624).abs() < 5e-6);
        let m = TwoComponentModel::beta_binomial(1).unwrap();
        let res = optimize_uniform_b(&m, &ThetaFamily::default_for(&m), 10, Execution::default()).unwrap();
        assert!(res.curve.params["rho"] <= 0.75 + 1e-15);
    }
}
