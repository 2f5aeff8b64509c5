//! Command-line front end.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage error, 3 infeasible
//! bound.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::bounds::{
    dks_beta_binomial_bounds, numeric_eigendecomposition, params_hash, prop3_epsilon, rosenthal_bound_curve,
    spectral_bound_curve, uniform_bound_curve, uniform_u, BoundCurve, DriftCertificate, ThetaFamily,
};
use crate::ergodicity::{check_condition_3, check_ergodic, RectanglePair};
use crate::error::Error;
use crate::model::{DriftFn, FiniteModel, MatrixSettings, ModelKind, TwoComponentModel};
use crate::oracle::{bivariate_tv_sandwich, simulate_chain};
use crate::par::Execution;
use crate::report::{compare_table, curve_table, sandwich_table, trace_table, Cell, Comparison, Format, Report, Table};
use crate::tuner::{mixing_time_from_curve, optimize_rosenthal, Objective, RosenthalSearch};

pub const SEED_ENV: &str = "GIBBS_CERTIFY_SEED";

#[derive(Debug, Parser)]
#[command(name = "gibbs-certify", version, about = "Certified convergence bounds for Gibbs samplers")]
pub struct Cli {
    /// Seed for stochastic commands; echoed in every report.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,

    /// Output format for reports written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    BetaBinomial,
    PoissonGamma,
    Gaussian,
    Finite,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    /// Number of Binomial trials.
    #[arg(long, default_value_t = 10)]
    pub n: u64,
    #[arg(long, default_value_t = 0.25)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.25)]
    pub tau2: f64,
    /// Truncation point of the Poisson data space.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// JSON configuration of a finite model.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in models.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Support-graph ergodicity check and the rectangle sufficient condition.
    CheckErgodicity {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Analytical upper bounds.
    Bound {
        #[command(subcommand)]
        kind: BoundCommand,
    },
    /// Exact TV of the data chain and the joint-chain sandwich.
    Tv {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 20)]
        lmax: usize,
    },
    /// Every applicable bound next to the exact TV sandwich.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 20)]
        lmax: usize,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo trajectories from a fixed start.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        chains: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelAction {
    List,
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// `(1 - u / sup m)^ℓ` with `u` maximized over parameter sets.
    Uniform {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20)]
        lmax: usize,
    },
    /// Drift plus small-set minorization.
    Rosenthal {
        #[command(flatten)]
        model: ModelArgs,
        /// Drift function: identity, abs.
        #[arg(long, default_value = "identity")]
        phi: String,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long, required_unless_present = "auto", requires = "d", conflicts_with = "auto")]
        r: Option<f64>,
        #[arg(long, required_unless_present = "auto", requires = "r", conflicts_with = "auto")]
        d: Option<f64>,
        /// Search (r, d, B) for the smallest mixing time.
        #[arg(long)]
        auto: bool,
        /// Target TV for `--auto`.
        #[arg(long, default_value_t = 0.01)]
        target: f64,
        #[arg(long, default_value_t = 100)]
        lmax: usize,
        /// Write the search trace as CSV.
        #[arg(long, requires = "auto")]
        trace: Option<PathBuf>,
    },
    /// Beta/Binomial lower and upper bounds from the start `x = n`.
    Dks {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 20)]
        lmax: usize,
    },
    /// Eigenfunction bound for reversible finite chains.
    Spectral {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 20)]
        lmax: usize,
    },
}

/// Failure of a CLI invocation.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failed(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(Error::Infeasible(_)) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(e) => write!(f, "{e}"),
        }
    }
}

/// Parses `argv` and runs it, writing reports to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

struct Loaded {
    model: TwoComponentModel,
    label: String,
    params: BTreeMap<String, f64>,
}

fn load_model(args: &ModelArgs) -> Result<Loaded, CliError> {
    let mut params = BTreeMap::new();
    let mut label = String::new();
    let model = match args.model {
        ModelName::BetaBinomial => {
            params.insert("n".into(), args.n as f64);
            TwoComponentModel::beta_binomial(args.n)?
        }
        ModelName::PoissonGamma => match args.nmax {
            Some(n) => {
                params.insert("nmax".into(), n as f64);
                TwoComponentModel::poisson_gamma_with_n_max(n)
            }
            None => TwoComponentModel::poisson_gamma(),
        },
        ModelName::Gaussian => {
            params.insert("sigma2".into(), args.sigma2);
            params.insert("tau2".into(), args.tau2);
            TwoComponentModel::gaussian(args.sigma2, args.tau2)?
        }
        ModelName::Finite => {
            let path = args
                .config
                .as_ref()
                .ok_or_else(|| CliError::Usage("--model finite requires --config FILE".into()))?;
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            let digest = Sha256::digest(text.as_bytes());
            label = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
            TwoComponentModel::finite("finite", FiniteModel::from_json_str(&text)?)
        }
    };
    Ok(Loaded { model, label, params })
}

/// Starts a report with the command, model, seed and parameter hash.
fn header(table: Table, command: &str, seed: u64, loaded: Option<&Loaded>, extra: &[(&str, f64)]) -> Report {
    let mut params = loaded.map(|l| l.params.clone()).unwrap_or_default();
    for (k, v) in extra {
        params.insert((*k).to_string(), *v);
    }
    let label = match loaded {
        Some(l) => format!("{command}:{}:{}", l.model.name(), l.label),
        None => command.to_string(),
    };
    let mut r = Report::new(table);
    r.meta("command", command)
        .meta("seed", seed.to_string())
        .meta("params_hash", params_hash(&label, &params));
    if let Some(l) = loaded {
        r.meta("model", l.model.name());
    }
    for (k, v) in &params {
        r.meta_num(k, *v);
    }
    r
}

fn emit(out: &mut dyn Write, report: &Report, format: Format) -> Result<(), CliError> {
    out.write_all(report.render(format)?.as_bytes()).map_err(Error::from)?;
    Ok(())
}

fn drift_for(model: &TwoComponentModel, phi: &str) -> Result<DriftCertificate, CliError> {
    let phi = DriftFn::parse(phi).ok_or_else(|| CliError::Usage(format!("unknown drift function '{phi}'")))?;
    let (default_phi, alpha, beta) = model
        .default_drift_constants()
        .ok_or_else(|| Error::CertificateUnavailable(format!("{} has no known drift constants", model.name())))?;
    if phi != default_phi {
        return Err(Error::CertificateUnavailable(format!(
            "drift constants are known for phi = {} on {}",
            default_phi.name(),
            model.name()
        ))
        .into());
    }
    Ok(DriftCertificate::verify(model, phi, alpha, beta, &crate::bounds::default_drift_grid(model))?)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let format: Format = cli.format.into();
    let seed = cli.seed;
    match &cli.command {
        Command::Model { action: ModelAction::List } => {
            let mut t = Table::new(&["model", "data", "parameter", "flags"]);
            for (m, x, th, flags) in [
                ("beta-binomial", "Binomial(n, theta)", "Uniform(0, 1)", "--n"),
                ("poisson-gamma", "Poisson(theta)", "Exponential(1)", "--nmax"),
                ("gaussian", "N(theta, sigma2)", "N(0, tau2)", "--sigma2 --tau2"),
                ("finite", "tabulated", "tabulated", "--config"),
            ] {
                t.push(vec![Cell::Text(m.into()), Cell::Text(x.into()), Cell::Text(th.into()), Cell::Text(flags.into())]);
            }
            emit(out, &header(t, "model list", seed, None, &[]), format)
        }
        Command::CheckErgodicity { model } => {
            let l = load_model(model)?;
            let erg = check_ergodic(&l.model)?;
            let c3 = check_condition_3(&l.model, &RectanglePair::full())?;
            let mut t = Table::new(&["component", "x_indices", "theta_indices"]);
            let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            for (i, c) in erg.components.iter().enumerate() {
                t.push(vec![
                    Cell::Int(i as u64),
                    Cell::Text(join(&c.x_indices)),
                    Cell::Text(join(&c.theta_indices)),
                ]);
            }
            let mut r = header(t, "check-ergodicity", seed, Some(&l), &[]);
            r.meta("ergodic", erg.ergodic.to_string())
                .meta("condition3_full_rectangle", c3.holds.to_string())
                .meta("grid_certified", c3.grid_certified.to_string());
            if !matches!(l.model.kind(), ModelKind::Finite(_)) {
                r.meta("support_graph", "quadrature discretization");
            }
            emit(out, &r, format)
        }
        Command::Bound { kind } => bound(kind, seed, format, out),
        Command::Tv { model, x0, lmax } => {
            let l = load_model(model)?;
            let s = bivariate_tv_sandwich(&l.model, *x0, *lmax)?;
            let mut r = header(sandwich_table(&s), "tv", seed, Some(&l), &[("x0", *x0), ("lmax", *lmax as f64)]);
            r.meta("method", s.method.as_str()).meta_num("error_budget", s.error_budget);
            emit(out, &r, format)
        }
        Command::Compare { model, x0, lmax, out: path } => {
            let l = load_model(model)?;
            let report = compare(&l, *x0, *lmax, seed)?;
            match path {
                Some(p) => {
                    std::fs::write(p, report.render(format)?).map_err(Error::from)?;
                    Ok(())
                }
                None => emit(out, &report, format),
            }
        }
        Command::Simulate { model, x0, steps, chains } => {
            let l = load_model(model)?;
            let sim = simulate_chain(&l.model, *x0, *steps, *chains, seed)?;
            let mut t = Table::new(&["coordinate", "mean", "variance", "std_error"]);
            let mut row = |name: &str, m: &crate::oracle::Moments| {
                t.push(vec![Cell::Text(name.into()), Cell::Num(m.mean), Cell::Num(m.variance), Cell::Num(m.std_error)])
            };
            row("x", &sim.x);
            if let Some(th) = &sim.theta {
                row("theta", th);
            }
            let r = header(
                t,
                "simulate",
                seed,
                Some(&l),
                &[("x0", *x0), ("steps", *steps as f64), ("chains", *chains as f64)],
            );
            emit(out, &r, format)
        }
    }
}

fn bound(kind: &BoundCommand, seed: u64, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    match kind {
        BoundCommand::Uniform { model, lmax } => {
            let l = load_model(model)?;
            let cert = uniform_u(&l.model, &ThetaFamily::default_for(&l.model))?;
            let curve = uniform_bound_curve(cert.u, cert.sup_m, *lmax)?;
            let mut r = header(curve_table(&[&curve]), "bound uniform", seed, Some(&l), &[("lmax", *lmax as f64)]);
            r.meta_num("u", cert.u).meta_num("sup_m", cert.sup_m).meta_num("rho", cert.rho());
            if let Some(b) = &cert.best {
                r.meta_num("b_param", b.param);
            }
            emit(out, &r, format)
        }
        BoundCommand::Rosenthal {
            model,
            phi,
            x0,
            r,
            d,
            auto,
            target,
            lmax,
            trace,
        } => {
            let l = load_model(model)?;
            let drift = drift_for(&l.model, phi)?;
            let extra = [("x0", *x0), ("lmax", *lmax as f64)];
            if *auto {
                let mut search = RosenthalSearch::default_for(&l.model, &drift);
                search.curve_ell_max = *lmax;
                let res = optimize_rosenthal(
                    &l.model,
                    &drift,
                    &search,
                    *x0,
                    Objective::MinMixingTime(*target),
                    Execution::default(),
                )?;
                if let Some(p) = trace {
                    let tr = header(trace_table(&res.trace), "bound rosenthal trace", seed, Some(&l), &extra);
                    std::fs::write(p, tr.to_csv()?).map_err(Error::from)?;
                }
                let mt = mixing_time_from_curve(&res.curve, *target)?;
                let mut rep = header(curve_table(&[&res.curve]), "bound rosenthal", seed, Some(&l), &extra);
                rep.meta_num("r", res.r)
                    .meta_num("d", res.d)
                    .meta_num("b_param", res.b.param)
                    .meta_num("epsilon", res.epsilon)
                    .meta_num("t", res.t)
                    .meta_num("target", *target)
                    .meta("mixing_time", mt.ell_star.to_string());
                if let Some(cf) = mt.closed_form {
                    rep.meta("mixing_time_closed_form", cf.to_string());
                }
                emit(out, &rep, format)
            } else {
                let (r, d) = (r.expect("clap enforces --r"), d.expect("clap enforces --d"));
                let (b, mc) = best_b_at(&l.model, &drift, d)?;
                let phi_x0 = l.model.drift_value(&drift.phi, *x0)?;
                let curve = rosenthal_bound_curve(&drift, mc, d, r, phi_x0, *lmax)?;
                let mut rep = header(curve_table(&[&curve]), "bound rosenthal", seed, Some(&l), &extra);
                rep.meta_num("b_param", b).meta_num("epsilon", mc);
                emit(out, &rep, format)
            }
        }
        BoundCommand::Dks { n, lmax } => {
            let dks = dks_beta_binomial_bounds(*n, *lmax)?;
            let mut t = Table::new(&["ell", "dks_lower", "dks_upper"]);
            for ell in 0..=*lmax {
                t.push(vec![
                    Cell::Int(ell as u64),
                    dks.lower.value(ell).into(),
                    dks.upper.value(ell).into(),
                ]);
            }
            let mut r = header(t, "bound dks", seed, None, &[("n", *n as f64), ("lmax", *lmax as f64)]);
            r.meta_num("beta1", dks.beta1);
            emit(out, &r, format)
        }
        BoundCommand::Spectral { model, x0, lmax } => {
            let l = load_model(model)?;
            let matrix = l.model.x_chain_matrix(MatrixSettings::default())?;
            let eig = numeric_eigendecomposition(&matrix)?;
            let s = matrix.state_index(*x0)?;
            let curve = spectral_bound_curve(&eig, s, *lmax);
            let mut r = header(curve_table(&[&curve]), "bound spectral", seed, Some(&l), &[("x0", *x0), ("lmax", *lmax as f64)]);
            r.meta_num("beta1", eig.eigenvalues.get(1).copied().unwrap_or(0.0));
            emit(out, &r, format)
        }
    }
}

/// Parameter set with the largest minorization constant at `d`.
fn best_b_at(model: &TwoComponentModel, drift: &DriftCertificate, d: f64) -> Result<(f64, f64), CliError> {
    let family = ThetaFamily::default_for(model);
    let rank = crate::bounds::rank_theta_by_column_inf(model)?;
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for c in family.candidates(model, &rank)? {
        match prop3_epsilon(model, d, &drift.phi, &c.set) {
            Ok(m) if best.is_none_or(|(_, e)| m.epsilon > e) => best = Some((c.param, m.epsilon)),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        CliError::Failed(last_err.unwrap_or_else(|| Error::CertificateUnavailable("empty parameter family".into())))
    })
}

fn compare(l: &Loaded, x0: f64, lmax: usize, seed: u64) -> Result<Report, CliError> {
    let model = &l.model;
    let sandwich = bivariate_tv_sandwich(model, x0, lmax)?;
    let uniform = uniform_u(model, &ThetaFamily::default_for(model))
        .and_then(|c| uniform_bound_curve(c.u, c.sup_m, lmax))
        .ok();
    let rosenthal = DriftCertificate::for_model(model).ok().and_then(|drift| {
        let mut search = RosenthalSearch::default_for(model, &drift);
        search.curve_ell_max = lmax;
        optimize_rosenthal(model, &drift, &search, x0, Objective::MinBoundAt(lmax), Execution::default())
            .ok()
            .map(|r| r.curve)
    });
    let dks = match model.kind() {
        ModelKind::BetaBinomial { n } if x0 == *n as f64 => Some(dks_beta_binomial_bounds(*n, lmax)?),
        _ => None,
    };
    let spectral: Option<BoundCurve> = match model.kind() {
        ModelKind::BetaBinomial { .. } | ModelKind::Finite(_) => {
            let matrix = model.x_chain_matrix(MatrixSettings::default())?;
            let s = matrix.state_index(x0)?;
            numeric_eigendecomposition(&matrix)
                .ok()
                .map(|e| spectral_bound_curve(&e, s, lmax))
        }
        _ => None,
    };
    let table = compare_table(
        &Comparison {
            sandwich: Some(&sandwich),
            uniform: uniform.as_ref(),
            rosenthal: rosenthal.as_ref(),
            dks_lower: dks.as_ref().map(|d| &d.lower),
            dks_upper: dks.as_ref().map(|d| &d.upper),
            spectral: spectral.as_ref(),
        },
        lmax,
    );
    let mut r = header(table, "compare", seed, Some(l), &[("x0", x0), ("lmax", lmax as f64)]);
    r.meta("tv_method", sandwich.method.as_str()).meta_num("tv_error_budget", sandwich.error_budget);
    for (name, c) in [("uniform", &uniform), ("rosenthal", &rosenthal), ("spectral", &spectral)] {
        if let Some(c) = c {
            r.meta(&format!("{name}_params_hash"), c.params_hash());
        }
    }
    if let Some(d) = &dks {
        r.meta_num("dks_beta1", d.beta1);
    }
    Ok(r)
}
