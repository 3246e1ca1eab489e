//! Command-line entry points: config ingestion, subcommand dispatch, and
//! artifact persistence.
//!
//! ```text
//! ergokit <subcommand> --config <path> --out <dir> [--seed <n>] [--quiet]
//! ```
//!
//! Exit codes: `0` success (the report carries the scientific verdict),
//! `2` config or usage errors (message names the offending field), `3`
//! numerical failures (a partial report with the error is still written).

pub mod config;
mod output;

pub use config::{ConfigError, FieldSpec, GridSpec, ModelConfig, ModelKind, Params, SetSpec};
pub use output::{config_digest, TOOL, VERSION};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use serde_json::json;

use crate::analysis::{
    diffusion_suite, equivalence_suite, skeleton_suite, AnalysisError, DiffusionSuiteParams,
};
use crate::ctmc::{CtmcError, DriftCertificate, IDENTITY_TOL};
use crate::diffusion::{
    drift_condition_check, grid_1d, mc_hitting_functional, mc_lyapunov, DiffusionError,
    FieldCertificate, McConfig,
};
use crate::measures::MeasureError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    DriftCheck,
    ResolventVerify,
    Hitting,
    Lyapunov,
    Skeleton,
    NormCheck,
    Decay,
    Theorem2,
    Equivalence,
    Diffusion,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::DriftCheck => "drift-check",
            Subcommand::ResolventVerify => "resolvent-verify",
            Subcommand::Hitting => "hitting",
            Subcommand::Lyapunov => "lyapunov",
            Subcommand::Skeleton => "skeleton",
            Subcommand::NormCheck => "norm-check",
            Subcommand::Decay => "decay",
            Subcommand::Theorem2 => "theorem2",
            Subcommand::Equivalence => "equivalence",
            Subcommand::Diffusion => "diffusion",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

enum RunError {
    Config(ConfigError),
    Numeric(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<CtmcError> for RunError {
    fn from(e: CtmcError) -> Self {
        RunError::Numeric(e.to_string())
    }
}

impl From<DiffusionError> for RunError {
    fn from(e: DiffusionError) -> Self {
        RunError::Numeric(e.to_string())
    }
}

impl From<AnalysisError> for RunError {
    fn from(e: AnalysisError) -> Self {
        RunError::Numeric(e.to_string())
    }
}

impl From<MeasureError> for RunError {
    fn from(e: MeasureError) -> Self {
        RunError::Numeric(e.to_string())
    }
}

struct Curve {
    filename: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

/// Runs one subcommand against one config, writing artifacts into `out`.
/// Returns the process exit code.
pub fn run(sub: Subcommand, opts: &RunOptions) -> u8 {
    let (config, bytes) = match ModelConfig::load(&opts.config) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("{}: config error: {e}", sub.name());
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&opts.out) {
        eprintln!("{}: cannot create output directory: {e}", sub.name());
        return EXIT_CONFIG;
    }
    let digest = config_digest(&bytes);
    let seed = opts.seed.or(config.params.seed);

    match dispatch(sub, &config, seed) {
        Ok((payload, curves)) => {
            let report_path = opts.out.join(format!("{}_report.json", sub.name()));
            if let Err(e) = output::write_report(&report_path, &digest, sub.name(), seed, payload)
            {
                eprintln!("{}: cannot write report: {e}", sub.name());
                return EXIT_CONFIG;
            }
            for curve in &curves {
                let path = opts.out.join(&curve.filename);
                if let Err(e) = output::write_csv(&path, &digest, &curve.header, &curve.rows) {
                    eprintln!("{}: cannot write {}: {e}", sub.name(), curve.filename);
                    return EXIT_CONFIG;
                }
            }
            if !opts.quiet {
                println!(
                    "{}: wrote {} (+{} curve file(s))",
                    sub.name(),
                    report_path.display(),
                    curves.len()
                );
            }
            EXIT_OK
        }
        Err(RunError::Config(e)) => {
            eprintln!("{}: config error: {e}", sub.name());
            EXIT_CONFIG
        }
        Err(RunError::Numeric(message)) => {
            // partial report so the failure is inspectable
            let report_path = opts.out.join(format!("{}_report.json", sub.name()));
            let _ = output::write_report(
                &report_path,
                &digest,
                sub.name(),
                seed,
                json!({ "error": message }),
            );
            eprintln!("{}: numerical failure: {message}", sub.name());
            EXIT_NUMERIC
        }
    }
}

fn mc_config(params: &Params, seed: Option<u64>) -> McConfig {
    McConfig {
        n_paths: params.n_paths.unwrap_or(10_000),
        dt: params.dt.unwrap_or(1e-2),
        t_cap: params.t_cap.unwrap_or(1e3),
        seed: seed.unwrap_or(0),
    }
}

fn dispatch(
    sub: Subcommand,
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    match sub {
        Subcommand::DriftCheck => drift_check(config, seed),
        Subcommand::ResolventVerify => resolvent_verify(config),
        Subcommand::Hitting => hitting(config, seed),
        Subcommand::Lyapunov => lyapunov(config, seed),
        Subcommand::Skeleton => skeleton(config),
        Subcommand::NormCheck => norm_check(config),
        Subcommand::Decay => decay(config),
        Subcommand::Theorem2 => theorem2(config),
        Subcommand::Equivalence => equivalence(config),
        Subcommand::Diffusion => diffusion(config, seed),
    }
}

fn certificate_spec(config: &ModelConfig) -> Result<(f64, f64), ConfigError> {
    match &config.certificate {
        Some(spec) => Ok((spec.b, spec.delta)),
        None => Err(ConfigError::invalid(
            "certificate",
            "required for this subcommand",
        )),
    }
}

fn drift_check(
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    match config.kind {
        ModelKind::Ctmc => {
            let q = config.require_ctmc("drift-check")?;
            let f = config.weight_table(q.n())?;
            let c = config.state_set(config.set_c.as_ref(), "set_c", q.n())?;
            let v = config.v_table(q.n())?;
            let (b, delta) = certificate_spec(config)?;
            let cert = DriftCertificate::new(v, f, c, b, delta)
                .map_err(|e| ConfigError::invalid("certificate", e.to_string()))?;
            let margins = q.validate_certificate(&cert)?;
            Ok((
                json!({
                    "max_margin": margins.max_margin,
                    "tolerance": margins.tolerance,
                    "valid": margins.valid,
                    "margins": margins.margins,
                }),
                Vec::new(),
            ))
        }
        ModelKind::Diffusion => {
            let model = config.require_diffusion("drift-check")?;
            let v = config.scalar_field(config.v.as_ref(), "v", model.dim())?;
            let f = config.scalar_field(config.f.as_ref(), "f", model.dim())?;
            let c = config.region(config.set_c.as_ref(), "set_c", model.dim())?;
            let (b, delta) = certificate_spec(config)?;
            let grid_spec = config
                .params
                .grid
                .ok_or_else(|| ConfigError::invalid("params.grid", "required for drift-check"))?;
            if model.dim() != 1 {
                return Err(RunError::Config(ConfigError::invalid(
                    "params.grid",
                    "grid drift checks currently cover one-dimensional models",
                )));
            }
            let grid = grid_1d(grid_spec.lo, grid_spec.hi, grid_spec.step);
            let cert = FieldCertificate { v, f, c, b, delta };
            let report = drift_condition_check(&model, &cert, &grid, None)?;
            let _ = seed;
            Ok((
                json!({
                    "max_margin": report.max_margin,
                    "worst_point": report.worst_point,
                    "points_checked": report.points_checked,
                    "tolerance": report.tolerance,
                    "valid": report.valid,
                }),
                Vec::new(),
            ))
        }
    }
}

fn resolvent_verify(config: &ModelConfig) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let q = config.require_ctmc("resolvent-verify")?;
    let g = config
        .params
        .g
        .clone()
        .ok_or_else(|| ConfigError::invalid("params.g", "required for resolvent-verify"))?;
    let h = config
        .params
        .h
        .clone()
        .ok_or_else(|| ConfigError::invalid("params.h", "required for resolvent-verify"))?;
    let equation_residual = q.resolvent_equation_residual(&g, &h)?;
    let generator_residual = q.generator_resolvent_residual(&g)?;
    Ok((
        json!({
            "resolvent_equation_residual": equation_residual,
            "generator_identity_residual": generator_residual,
            "tolerance": IDENTITY_TOL,
            "passed": equation_residual <= IDENTITY_TOL && generator_residual <= IDENTITY_TOL,
        }),
        Vec::new(),
    ))
}

fn target_set(config: &ModelConfig) -> Option<&SetSpec> {
    config.set_b.as_ref().or(config.set_c.as_ref())
}

fn hitting(
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let r = config.params.r.unwrap_or(0.0);
    match config.kind {
        ModelKind::Ctmc => {
            let q = config.require_ctmc("hitting")?;
            let f = config.weight_table(q.n())?;
            let b = config.state_set(target_set(config), "set_b", q.n())?;
            let table = q.hitting_functional(&f, &b, r)?;
            let rows: Vec<Vec<f64>> = table
                .iter()
                .enumerate()
                .map(|(i, v)| vec![i as f64, *v])
                .collect();
            Ok((
                json!({ "r": r, "values": table }),
                vec![Curve {
                    filename: "hitting_functional.csv".into(),
                    header: vec!["state", "g_value"],
                    rows,
                }],
            ))
        }
        ModelKind::Diffusion => {
            let model = config.require_diffusion("hitting")?;
            let f = config.scalar_field(config.f.as_ref(), "f", model.dim())?;
            let region = config.region(target_set(config), "set_b", model.dim())?;
            let x0 = config
                .params
                .x0
                .clone()
                .ok_or_else(|| ConfigError::invalid("params.x0", "required for hitting"))?;
            let cfg = mc_config(&config.params, seed);
            let est = mc_hitting_functional(&model, &f, &region, r, &x0, &cfg)?;
            Ok((
                json!({
                    "r": r,
                    "estimate": est.mean,
                    "std_error": est.std_error,
                    "n_paths": est.n_paths,
                    "censored": est.censored,
                    "t_cap": est.t_cap,
                }),
                Vec::new(),
            ))
        }
    }
}

fn lyapunov(
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    match config.kind {
        ModelKind::Ctmc => {
            let q = config.require_ctmc("lyapunov")?;
            let f = config.weight_table(q.n())?;
            let c = config.state_set(config.set_c.as_ref(), "set_c", q.n())?;
            let cert = q.lyapunov_from_resolvent(&f, &c)?;
            let margins = q.validate_certificate(&cert)?;
            let rows: Vec<Vec<f64>> = cert
                .v
                .iter()
                .enumerate()
                .map(|(i, v)| vec![i as f64, *v])
                .collect();
            Ok((
                json!({
                    "v": cert.v,
                    "b": cert.b,
                    "delta": cert.delta,
                    "max_margin": margins.max_margin,
                    "valid": margins.valid,
                }),
                vec![Curve {
                    filename: "lyapunov.csv".into(),
                    header: vec!["state", "v"],
                    rows,
                }],
            ))
        }
        ModelKind::Diffusion => {
            let model = config.require_diffusion("lyapunov")?;
            let f = config.scalar_field(config.f.as_ref(), "f", model.dim())?;
            let c = config.region(config.set_c.as_ref(), "set_c", model.dim())?;
            let x0 = config
                .params
                .x0
                .clone()
                .ok_or_else(|| ConfigError::invalid("params.x0", "required for lyapunov"))?;
            let cfg = mc_config(&config.params, seed);
            let est = mc_lyapunov(&model, &f, &c, &x0, &cfg)?;
            Ok((
                json!({
                    "estimate": est.mean,
                    "std_error": est.std_error,
                    "n_paths": est.n_paths,
                    "censored": est.censored,
                    "t_cap": est.t_cap,
                }),
                Vec::new(),
            ))
        }
    }
}

fn skeleton(config: &ModelConfig) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let q = config.require_ctmc("skeleton")?;
    let f = config.weight_table(q.n())?;
    let c = config.state_set(config.set_c.as_ref(), "set_c", q.n())?;
    let delta = config.params.delta.unwrap_or(1.0);
    let report = skeleton_suite(&q, &f, delta, &c)?;
    Ok((serde_json::to_value(&report).unwrap(), Vec::new()))
}

fn norm_check(config: &ModelConfig) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let q = config.require_ctmc("norm-check")?;
    let f = config.weight_table(q.n())?;
    let mu_mass = config
        .params
        .mu
        .clone()
        .ok_or_else(|| ConfigError::invalid("params.mu", "required for norm-check"))?;
    let delta = config.params.delta.unwrap_or(1.0);
    let mu = crate::measures::SignedMeasure::new(mu_mass);
    let check = q.norm_equiv_check(&mu, &f, delta)?;
    Ok((
        json!({
            "delta": delta,
            "lhs_f_delta_norm": check.lhs,
            "rhs_integral": check.rhs,
            "quadrature_error": check.quadrature_error,
            "holds": check.lhs >= check.rhs - check.quadrature_error - 1e-9,
        }),
        Vec::new(),
    ))
}

fn decay(config: &ModelConfig) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let q = config.require_ctmc("decay")?;
    let f = config.weight_table(q.n())?;
    let state = config.params.state.unwrap_or(0);
    let t_grid = config
        .params
        .t_grid
        .clone()
        .ok_or_else(|| ConfigError::invalid("params.t_grid", "required for decay"))?;
    let curve = q.fnorm_decay_curve(&f, state, &t_grid)?;
    let rows: Vec<Vec<f64>> = curve
        .times
        .iter()
        .zip(curve.f_norms.iter().zip(&curve.tv))
        .map(|(t, (fv, tv))| vec![*t, *fv, *tv])
        .collect();
    Ok((
        json!({
            "state": state,
            "tv_non_increasing": curve.tv_non_increasing,
            "points": curve.times.len(),
        }),
        vec![Curve {
            filename: "decay_curve.csv".into(),
            header: vec!["t", "f_norm", "tv"],
            rows,
        }],
    ))
}

fn theorem2(config: &ModelConfig) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let q = config.require_ctmc("theorem2")?;
    let f = config.weight_table(q.n())?;
    let v = match &config.v {
        Some(_) => config.v_table(q.n())?,
        None => {
            let c = config.state_set(config.set_c.as_ref(), "set_c", q.n())?;
            q.lyapunov_from_resolvent(&f, &c)?.v
        }
    };
    let t_max = config
        .params
        .t_max
        .ok_or_else(|| ConfigError::invalid("params.t_max", "required for theorem2"))?;
    let pairs: Vec<(usize, usize)> = config
        .params
        .pairs
        .clone()
        .map(|ps| ps.into_iter().map(|[x, y]| (x, y)).collect())
        .unwrap_or_else(|| vec![(0, q.n() - 1)]);
    let bounds = q.theorem2_bound(&f, &v, t_max, &pairs)?;
    let pair_rows: Vec<Vec<f64>> = bounds
        .pairs
        .iter()
        .map(|p| vec![p.x as f64, p.y as f64, p.integral, p.tail, p.ratio])
        .collect();
    Ok((
        json!({
            "gap": bounds.gap,
            "t_max": bounds.t_max,
            "b0_estimate": bounds.b0_estimate,
            "b_estimate": bounds.b_estimate,
            "pairs": bounds.pairs.iter().map(|p| json!({
                "x": p.x, "y": p.y,
                "integral": p.integral, "tail": p.tail, "ratio": p.ratio,
            })).collect::<Vec<_>>(),
            "stations": bounds.stations.iter().map(|s| json!({
                "x": s.x, "integral": s.integral, "tail": s.tail, "ratio": s.ratio,
            })).collect::<Vec<_>>(),
        }),
        vec![Curve {
            filename: "theorem2_pairs.csv".into(),
            header: vec!["x", "y", "integral", "tail", "ratio"],
            rows: pair_rows,
        }],
    ))
}

fn equivalence(config: &ModelConfig) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let q = config.require_ctmc("equivalence")?;
    let f = config.weight_table(q.n())?;
    let c = config.state_set(config.set_c.as_ref(), "set_c", q.n())?;
    let report = equivalence_suite(&q, &f, &c)?;
    Ok((serde_json::to_value(&report).unwrap(), Vec::new()))
}

fn diffusion(
    config: &ModelConfig,
    seed: Option<u64>,
) -> Result<(serde_json::Value, Vec<Curve>), RunError> {
    let model = config.require_diffusion("diffusion")?;
    let f = config.scalar_field(config.f.as_ref(), "f", model.dim())?;
    let v = config.scalar_field(config.v.as_ref(), "v", model.dim())?;
    let c = config.region(config.set_c.as_ref(), "set_c", model.dim())?;
    let (b, delta) = certificate_spec(config)?;
    let grid_spec = config
        .params
        .grid
        .ok_or_else(|| ConfigError::invalid("params.grid", "required for diffusion"))?;
    if model.dim() != 1 {
        return Err(RunError::Config(ConfigError::invalid(
            "params.grid",
            "grid drift checks currently cover one-dimensional models",
        )));
    }
    let x0 = config
        .params
        .x0
        .clone()
        .ok_or_else(|| ConfigError::invalid("params.x0", "required for diffusion"))?;
    let params = DiffusionSuiteParams {
        mc: mc_config(&config.params, seed),
        x0,
        t_end: config.params.t_end.unwrap_or(1_000.0),
        burn_in: config.params.burn_in.unwrap_or(10.0),
        beta: config.params.beta.unwrap_or(2.0),
        t_probe: config
            .params
            .t_probe
            .clone()
            .unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
        reference_value: config.params.reference,
        integral_truncation: config.params.t_max.unwrap_or(50.0),
        delta,
    };
    let grid = grid_1d(grid_spec.lo, grid_spec.hi, grid_spec.step);
    let report = diffusion_suite(&model, &f, &v, &c, b, &grid, &params)?;
    Ok((serde_json::to_value(&report).unwrap(), Vec::new()))
}

// command-line front end

#[derive(Parser)]
#[command(name = TOOL, version = VERSION, about = "Numerical toolkit for drift conditions, resolvents, and weighted-norm convergence of Markov processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON model config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and curve files.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the success summary line.
    #[arg(long)]
    quiet: bool,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Validate a drift certificate (exact on chains, grid-based on SDEs).
    DriftCheck(RunArgs),
    /// Check the resolvent equation and the generator identity.
    ResolventVerify(RunArgs),
    /// Hitting-time functional: exact table or Monte Carlo estimate.
    Hitting(RunArgs),
    /// Lyapunov function from the generalized resolvent, or its MC estimate.
    Lyapunov(RunArgs),
    /// Skeleton-chain suite: sampled drift inequality and minorization.
    Skeleton(RunArgs),
    /// Norm inequality between the sampled chain and the continuous flow.
    NormCheck(RunArgs),
    /// Weighted-norm decay curve toward the stationary distribution.
    Decay(RunArgs),
    /// Integral convergence bounds and their skeleton-sum counterparts.
    Theorem2(RunArgs),
    /// Cross-check the equivalent regularity characterizations.
    Equivalence(RunArgs),
    /// Full diffusion suite: drift check plus estimator consistency.
    Diffusion(RunArgs),
}

fn to_options(args: RunArgs) -> RunOptions {
    let quiet = args.quiet || std::env::var_os("ERGOKIT_QUIET").is_some_and(|v| v == "1");
    RunOptions {
        config: args.config,
        out: args.out,
        seed: args.seed,
        quiet,
    }
}

/// Parses the process arguments and runs; the thin binary delegates here.
pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let (sub, args) = match cli.command {
        Command::DriftCheck(a) => (Subcommand::DriftCheck, a),
        Command::ResolventVerify(a) => (Subcommand::ResolventVerify, a),
        Command::Hitting(a) => (Subcommand::Hitting, a),
        Command::Lyapunov(a) => (Subcommand::Lyapunov, a),
        Command::Skeleton(a) => (Subcommand::Skeleton, a),
        Command::NormCheck(a) => (Subcommand::NormCheck, a),
        Command::Decay(a) => (Subcommand::Decay, a),
        Command::Theorem2(a) => (Subcommand::Theorem2, a),
        Command::Equivalence(a) => (Subcommand::Equivalence, a),
        Command::Diffusion(a) => (Subcommand::Diffusion, a),
    };
    std::process::ExitCode::from(run(sub, &to_options(args)))
}

/// Writes `contents` if the target does not exist yet; used by examples.
pub fn write_example_config(path: &Path, contents: &str) -> std::io::Result<()> {
    if path.exists() {
        return Ok(());
    }
    output::write_atomic(path, contents.as_bytes())
}
