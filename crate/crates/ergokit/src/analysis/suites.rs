//! The four experiment suites. Constants that are suprema over the state
//! space are reported as exact maxima in the finite case; grid and sample
//! maxima in the diffusion case are lower bounds and are labeled as such by
//! their provenance entries.

use serde_json::json;

use crate::ctmc::{RateMatrix, CERTIFICATE_TOL, IDENTITY_TOL};
use crate::diffusion::{
    drift_condition_check, ergodic_average, mc_lyapunov, mc_lyapunov_integral_form, em_probe,
    DiffusionModel, FieldCertificate, McConfig, Region, ScalarField,
};
use crate::measures::{StateSet, Weight};

use super::{digest_inputs, AnalysisError, ExperimentReport};

fn ctmc_digest(q: &RateMatrix, f: &Weight, c: &StateSet, extra: serde_json::Value) -> String {
    let rows: Vec<Vec<f64>> = (0..q.n())
        .map(|i| (0..q.n()).map(|j| q.rate(i, j)).collect())
        .collect();
    digest_inputs(&json!({
        "rates": rows,
        "f": f.values(),
        "c": c.iter().collect::<Vec<_>>(),
        "extra": extra,
    }))
}

/// Cross-checks the equivalent characterizations of weighted regularity on
/// an irreducible finite chain: finiteness of `pi(f)`, self-regularity of
/// `C`, and a valid drift certificate, plus the bound tying the hitting
/// functional to the Lyapunov function.
pub fn equivalence_suite(
    q: &RateMatrix,
    f: &Weight,
    c: &StateSet,
) -> Result<ExperimentReport, AnalysisError> {
    let digest = ctmc_digest(q, f, c, json!({"suite": "equivalence"}));
    let mut report = ExperimentReport::new("equivalence", digest);

    let irreducibility = q.irreducibility_report();
    report.check_true("chain irreducible", irreducibility.irreducible);

    let pi = q.stationary_distribution()?;
    let pi_min = pi.iter().copied().fold(f64::INFINITY, f64::min);
    report.check_true("stationary distribution positive", pi_min > 0.0);

    let pi_f = q.pi_f(f)?;
    report.check_finite("pi(f)", pi_f);

    let g1 = q.hitting_functional(f, c, 1.0)?;
    let self_regular = c.iter().map(|x| g1[x]).fold(0.0f64, f64::max);
    report.check_finite("self-regularity sup_C G_C(.,f;1)", self_regular);

    let cert = q.lyapunov_from_resolvent(f, c)?;
    let margins = q.validate_certificate(&cert)?;
    report.check_leq("drift margins (V3)", margins.max_margin, CERTIFICATE_TOL);
    report.check_leq(
        "drift identity residual",
        q.drift_identity_residual(f, c)?,
        IDENTITY_TOL,
    );

    let b_f = (0..q.n())
        .map(|x| g1[x] / (cert.v[x] + 1.0))
        .fold(0.0f64, f64::max);
    report.check_finite("regularity constant b_f", b_f);

    // V from the resolvent is finite everywhere on an irreducible finite
    // chain, so the sublevel set where it is finite carries full mass.
    let sv_mass: f64 = pi
        .iter()
        .zip(&cert.v)
        .filter(|(_, v)| v.is_finite())
        .map(|(p, _)| p)
        .sum();
    report.check_geq("pi(S_V)", sv_mass, 1.0 - 1e-12);

    report.record("r0", 1.0);
    report.record("b", cert.b);
    report.record("b_f", b_f);
    report.record("pi_f", pi_f);
    report.record("sup_C_G1", self_regular);
    Ok(report.finalize())
}

/// Checks that regularity at `C` transfers: the delayed hitting functional
/// grows at most linearly in the delay, finiteness passes from `C` to each
/// probe set `B`, and the skeleton hitting sums stay within a constant of
/// the continuous functional.
pub fn regularity_transfer_check(
    q: &RateMatrix,
    f: &Weight,
    c: &StateSet,
    b_list: &[StateSet],
    r: f64,
) -> Result<ExperimentReport, AnalysisError> {
    const R0: f64 = 1.0;
    const SKELETON_DELTA: f64 = 1.0;
    let digest = ctmc_digest(q, f, c, json!({"suite": "regularity", "r": r}));
    let mut report = ExperimentReport::new("regularity-transfer", digest);

    let g_r0 = q.hitting_functional(f, c, R0)?;
    let base = r.max(R0);
    let mut r_grid: Vec<f64> = (1..=16).map(|k| base * k as f64 / 8.0).collect();
    r_grid.push(r);
    r_grid.retain(|&v| v > 0.0);

    let mut b_c = 0.0f64;
    for &rho in &r_grid {
        let g_rho = q.hitting_functional(f, c, rho)?;
        for x in 0..q.n() {
            b_c = b_c.max((g_rho[x] - g_r0[x]) / rho);
        }
    }
    report.check_finite("slope constant b_C", b_c);

    let g_r = q.hitting_functional(f, c, r)?;
    let violation = (0..q.n())
        .map(|x| g_r[x] - g_r0[x] - b_c * r)
        .fold(f64::NEG_INFINITY, f64::max);
    report.check_leq("delayed hitting linear bound at r", violation, 1e-9);

    let g_c0 = q.hitting_functional(f, c, 0.0)?;
    let f_delta = q.f_delta(f, SKELETON_DELTA)?;
    for (i, b) in b_list.iter().enumerate() {
        let g_b = q.hitting_functional(f, b, r)?;
        let max_gb = g_b.iter().copied().fold(0.0f64, f64::max);
        report.check_finite(format!("finiteness transfer to B{i}"), max_gb);

        let skeleton_sum = q.skeleton_hitting_sum(SKELETON_DELTA, &f_delta, b)?;
        let c_b = (0..q.n())
            .map(|x| skeleton_sum[x] - g_c0[x])
            .fold(f64::NEG_INFINITY, f64::max);
        report.check_finite(format!("skeleton transfer constant c_B (B{i})"), c_b);
        report.record(format!("c_B_{i}"), c_b);
    }

    report.record("r", r);
    report.record("r0", R0);
    report.record("skeleton_delta", SKELETON_DELTA);
    report.record("b_C", b_c);
    report.record(
        "r_grid",
        serde_json::to_value(&r_grid).unwrap_or(serde_json::Value::Null),
    );
    Ok(report.finalize())
}

/// Builds the sampled-chain Lyapunov function and verifies its drift
/// inequality, the bounded distance to the continuous hitting functional,
/// the minorization constants, and the domination of interval integrals by
/// skeleton norm sums.
pub fn skeleton_suite(
    q: &RateMatrix,
    f: &Weight,
    delta: f64,
    c: &StateSet,
) -> Result<ExperimentReport, AnalysisError> {
    let digest = ctmc_digest(q, f, c, json!({"suite": "skeleton", "delta": delta}));
    let mut report = ExperimentReport::new("skeleton", digest);

    let built = q.construct_skeleton_lyapunov(f, delta, c)?;
    report.check_leq(
        "skeleton drift margins (VDelta3)",
        built.max_margin,
        CERTIFICATE_TOL,
    );
    report.check_finite("sup |V_Delta - G_C(.,f;0)|", built.sup_gap_r0);
    report.check_finite("sup |V_Delta - G_C(.,f;1)|", built.sup_gap_r1);
    report.check_true(
        "minorization epsilon0 positive",
        built.minorization_epsilon > 0.0,
    );
    report.check_leq(
        "minorization inequality residual",
        built.minorization_residual,
        IDENTITY_TOL,
    );

    let f_delta = q.f_delta(f, delta)?;
    let f_delta_min = f_delta.iter().copied().fold(f64::INFINITY, f64::min);
    report.check_geq("min f_Delta", f_delta_min, delta - 1e-12);

    let n = q.n();
    if n >= 2 {
        let pair = q.skeleton_pair_sum(f, delta, 0, n - 1)?;
        report.check_finite("pair skeleton sum", pair.sum);
        report.check_leq(
            "pair sum dominates matched integral",
            pair.matched_integral - pair.sum,
            pair.quadrature_error + 1e-9,
        );
        report.record("pair_sum", pair.sum);
        report.record("pair_integral", pair.matched_integral);
        report.record("pair_terms", pair.terms as u64);
    }
    let station = q.skeleton_station_sum(f, delta, 0)?;
    report.check_finite("stationary skeleton sum", station.sum);
    report.check_leq(
        "stationary sum dominates matched integral",
        station.matched_integral - station.sum,
        station.quadrature_error + 1e-9,
    );

    report.record("delta", delta);
    report.record("sub_unit_delta", built.sub_unit_delta);
    report.record("b", built.b);
    report.record("b0", built.b0);
    report.record("epsilon0", built.minorization_epsilon);
    report.record("k0", built.minorization_k0 as u64);
    report.record("station_sum", station.sum);
    report.record("station_integral", station.matched_integral);
    Ok(report.finalize())
}

/// Monte Carlo parameters for [`diffusion_suite`].
#[derive(Debug, Clone)]
pub struct DiffusionSuiteParams {
    pub mc: McConfig,
    pub x0: Vec<f64>,
    /// Horizon and burn-in for the ergodic average.
    pub t_end: f64,
    pub burn_in: f64,
    /// Rate for the sampled exponential-domination probe.
    pub beta: f64,
    pub t_probe: Vec<f64>,
    /// Known stationary value of `f`, when available.
    pub reference_value: Option<f64>,
    /// Horizon for the integral-form Lyapunov estimator.
    pub integral_truncation: f64,
    /// Certificate rate `delta`.
    pub delta: f64,
}

/// Drift-condition and estimator consistency checks for an SDE model.
pub fn diffusion_suite(
    model: &DiffusionModel,
    f: &ScalarField,
    v: &ScalarField,
    c: &Region,
    b: f64,
    grid: &[Vec<f64>],
    params: &DiffusionSuiteParams,
) -> Result<ExperimentReport, AnalysisError> {
    let digest = digest_inputs(&json!({
        "suite": "diffusion",
        "d": model.dim(),
        "k": model.noise_dim(),
        "b": b,
        "delta": params.delta,
        "x0": params.x0,
        "seed": params.mc.seed,
        "n_paths": params.mc.n_paths,
        "dt": params.mc.dt,
        "grid_points": grid.len(),
    }));
    let mut report = ExperimentReport::new("diffusion", digest);

    let cert = FieldCertificate {
        v: v.clone(),
        f: f.clone(),
        c: c.clone(),
        b,
        delta: params.delta,
    };
    let margins = drift_condition_check(model, &cert, grid, None)?;
    report.check_leq("drift margins on grid", margins.max_margin, margins.tolerance);
    report.record("grid_points", grid.len() as u64);
    report.record("worst_point", serde_json::to_value(&margins.worst_point).unwrap());

    let clock = mc_lyapunov(model, f, c, &params.x0, &params.mc)?;
    let integral = mc_lyapunov_integral_form(
        model,
        f,
        c,
        &params.x0,
        &params.mc,
        params.integral_truncation,
    )?;
    let spread = 3.0 * (clock.std_error + integral.std_error)
        + 0.02 * (1.0 + clock.mean.abs());
    report.check_leq(
        "clock vs integral-form estimator gap",
        (clock.mean - integral.mean).abs(),
        spread,
    );
    report.record("lyapunov_clock_mean", clock.mean);
    report.record("lyapunov_clock_se", clock.std_error);
    report.record("lyapunov_integral_mean", integral.mean);
    report.record("lyapunov_integral_se", integral.std_error);
    report.record("censored_clock_paths", clock.censored as u64);
    report.record("censored_integral_paths", integral.censored as u64);

    let average = ergodic_average(
        model,
        f,
        &params.x0,
        params.t_end,
        params.mc.dt,
        params.burn_in,
        params.mc.seed,
    )?;
    report.record("ergodic_average", average.mean);
    report.record("ergodic_average_se", average.std_error);
    if let Some(reference) = params.reference_value {
        report.check_leq(
            "ergodic average vs reference",
            (average.mean - reference).abs(),
            3.0 * average.std_error + 0.01 * (1.0 + reference.abs()),
        );
        report.record("reference_value", reference);
    } else {
        report.check_finite("ergodic average", average.mean);
    }

    // sampled exponential-domination probe: estimate E[f(Phi_t)] along paths
    // and compare with beta e^{beta t} f(x0)
    let fx0 = f.eval(&params.x0)?;
    let probes = em_probe(model, f, &params.x0, &params.t_probe, &params.mc)?;
    let mut worst_ratio = f64::NEG_INFINITY;
    for (t, (mean, se)) in params.t_probe.iter().zip(&probes) {
        let bound = params.beta * (params.beta * t).exp() * fx0;
        let ratio = (mean - 3.0 * se) / bound;
        worst_ratio = worst_ratio.max(ratio);
    }
    report.check_leq("exponential domination sampled", worst_ratio, 1.0);
    report.record("beta", params.beta);
    report.record(
        "t_probe",
        serde_json::to_value(&params.t_probe).unwrap_or(serde_json::Value::Null),
    );

    report.record("seed", params.mc.seed);
    report.record("dt", params.mc.dt);
    report.record("n_paths", params.mc.n_paths as u64);
    report.record("t_cap", params.mc.t_cap);
    report.record("t_end", params.t_end);
    report.record("burn_in", params.burn_in);
    Ok(report.finalize())
}
