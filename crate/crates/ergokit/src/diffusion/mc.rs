//! Monte Carlo estimators on Euler-Maruyama paths: hitting functionals, the
//! exponential-clock Lyapunov estimator, and ergodic averages with
//! batch-means error bars.
//!
//! Each path draws from its own random stream derived from `(seed, path
//! index)`, so estimates are reproducible and paths can run in parallel.
//! The jump stream is `2i` and auxiliary draws (the exponential clock) use
//! `2i + 1`, which keeps trajectories identical across estimators sharing a
//! seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::{em_step, DiffusionError, DiffusionModel, Region, ScalarField};

/// Sampling parameters shared by the path estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Horizon after which a path is abandoned and flagged as censored.
    pub t_cap: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            dt: 1e-2,
            t_cap: 1e3,
            seed: 0,
        }
    }
}

/// Aggregated Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Paths that hit `t_cap` before stopping; a nonzero count means the
    /// estimate is censored (biased low).
    pub censored: usize,
    pub t_cap: f64,
}

fn aggregate(values: &[(f64, bool)], t_cap: f64) -> Result<McEstimate, DiffusionError> {
    let n = values.len();
    let censored = values.iter().filter(|(_, c)| *c).count();
    if censored == n {
        return Err(DiffusionError::AllPathsCensored { n_paths: n, t_cap });
    }
    let mean = values.iter().map(|(v, _)| v).sum::<f64>() / n as f64;
    let var = values
        .iter()
        .map(|(v, _)| (v - mean).powi(2))
        .sum::<f64>()
        / (n as f64 - 1.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n_paths: n,
        censored,
        t_cap,
    })
}

fn validate(model: &DiffusionModel, x0: &[f64], cfg: &McConfig) -> Result<(), DiffusionError> {
    if x0.len() != model.dim() {
        return Err(DiffusionError::Dimension {
            expected: model.dim(),
            got: x0.len(),
        });
    }
    if cfg.n_paths < 2 {
        return Err(DiffusionError::InvalidParams(format!(
            "need at least 2 paths, got {}",
            cfg.n_paths
        )));
    }
    if cfg.dt <= 0.0 || !cfg.dt.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "step size must be positive, got {}",
            cfg.dt
        )));
    }
    if cfg.t_cap <= 0.0 {
        return Err(DiffusionError::InvalidParams(format!(
            "t_cap must be positive, got {}",
            cfg.t_cap
        )));
    }
    Ok(())
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Estimates `E[int_0^tau f(Phi_t) dt]` with `tau` the first grid time
/// `>= r` at which the state lies in `c`. Hitting between grid points is
/// not interpolated; the integral uses the left-endpoint rule.
pub fn mc_hitting_functional(
    model: &DiffusionModel,
    f: &ScalarField,
    c: &Region,
    r: f64,
    x0: &[f64],
    cfg: &McConfig,
) -> Result<McEstimate, DiffusionError> {
    validate(model, x0, cfg)?;
    if r < 0.0 || !r.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "delay must be nonnegative, got {r}"
        )));
    }
    let values: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool), DiffusionError> {
            let mut rng = stream(cfg.seed, 2 * i as u64);
            let mut x = x0.to_vec();
            let mut t = 0.0;
            let mut acc = 0.0;
            loop {
                if t >= r && c.contains(&x)? {
                    return Ok((acc, false));
                }
                if t >= cfg.t_cap {
                    return Ok((acc, true));
                }
                acc += f.eval(&x)? * cfg.dt;
                em_step(model, &mut x, cfg.dt, &mut rng)?;
                t += cfg.dt;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DiffusionError::Explosion {
                        step: (t / cfg.dt) as usize,
                        time: t,
                    });
                }
            }
        })
        .collect::<Result<_, _>>()?;
    aggregate(&values, cfg.t_cap)
}

/// Estimates the exponential-clock Lyapunov value at `x0`: each path runs
/// until its occupation time of `c` reaches an independent standard
/// exponential draw, and the integral of `f` up to that moment is averaged.
pub fn mc_lyapunov(
    model: &DiffusionModel,
    f: &ScalarField,
    c: &Region,
    x0: &[f64],
    cfg: &McConfig,
) -> Result<McEstimate, DiffusionError> {
    validate(model, x0, cfg)?;
    let values: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool), DiffusionError> {
            let mut rng = stream(cfg.seed, 2 * i as u64);
            let mut clock_rng = stream(cfg.seed, 2 * i as u64 + 1);
            let clock: f64 = Exp::new(1.0).expect("unit rate").sample(&mut clock_rng);
            let mut x = x0.to_vec();
            let mut t = 0.0;
            let mut occupation = 0.0;
            let mut acc = 0.0;
            loop {
                if t >= cfg.t_cap {
                    return Ok((acc, true));
                }
                let fx = f.eval(&x)?;
                if c.contains(&x)? {
                    let remaining = clock - occupation;
                    if remaining <= cfg.dt {
                        // the clock rings inside this step
                        acc += fx * remaining;
                        return Ok((acc, false));
                    }
                    occupation += cfg.dt;
                }
                acc += fx * cfg.dt;
                em_step(model, &mut x, cfg.dt, &mut rng)?;
                t += cfg.dt;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DiffusionError::Explosion {
                        step: (t / cfg.dt) as usize,
                        time: t,
                    });
                }
            }
        })
        .collect::<Result<_, _>>()?;
    aggregate(&values, cfg.t_cap)
}

/// The time-integral form of the same quantity:
/// `E[int_0^T f(Phi_t) exp(-occupation(t)) dt]`, truncated at `t_trunc`.
/// Agrees with [`mc_lyapunov`] in expectation as `t_trunc` grows.
pub fn mc_lyapunov_integral_form(
    model: &DiffusionModel,
    f: &ScalarField,
    c: &Region,
    x0: &[f64],
    cfg: &McConfig,
    t_trunc: f64,
) -> Result<McEstimate, DiffusionError> {
    validate(model, x0, cfg)?;
    if t_trunc <= 0.0 || !t_trunc.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "truncation horizon must be positive, got {t_trunc}"
        )));
    }
    let values: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool), DiffusionError> {
            let mut rng = stream(cfg.seed, 2 * i as u64);
            let mut x = x0.to_vec();
            let mut t = 0.0;
            let mut occupation = 0.0f64;
            let mut acc = 0.0;
            while t < t_trunc {
                acc += f.eval(&x)? * (-occupation).exp() * cfg.dt;
                if c.contains(&x)? {
                    occupation += cfg.dt;
                }
                em_step(model, &mut x, cfg.dt, &mut rng)?;
                t += cfg.dt;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DiffusionError::Explosion {
                        step: (t / cfg.dt) as usize,
                        time: t,
                    });
                }
            }
            Ok((acc, false))
        })
        .collect::<Result<_, _>>()?;
    aggregate(&values, cfg.t_cap)
}

/// Estimates `E_{x0}[f(Phi_t)]` at each probe time by simulating
/// `cfg.n_paths` independent paths; returns `(mean, std_error)` per probe.
pub fn em_probe(
    model: &DiffusionModel,
    f: &ScalarField,
    x0: &[f64],
    t_probe: &[f64],
    cfg: &McConfig,
) -> Result<Vec<(f64, f64)>, DiffusionError> {
    validate(model, x0, cfg)?;
    if t_probe.is_empty() {
        return Err(DiffusionError::InvalidParams(
            "need at least one probe time".into(),
        ));
    }
    let probe_steps: Vec<usize> = t_probe
        .iter()
        .map(|&t| {
            if t < 0.0 || !t.is_finite() {
                Err(DiffusionError::InvalidParams(format!(
                    "probe times must be nonnegative, got {t}"
                )))
            } else {
                Ok((t / cfg.dt).round() as usize)
            }
        })
        .collect::<Result<_, _>>()?;
    let last_step = probe_steps.iter().copied().max().unwrap_or(0);
    let per_path: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>, DiffusionError> {
            let mut rng = stream(cfg.seed, 2 * i as u64);
            let mut x = x0.to_vec();
            let mut values = vec![0.0; probe_steps.len()];
            for (slot, &target) in probe_steps.iter().enumerate() {
                if target == 0 {
                    values[slot] = f.eval(&x)?;
                }
            }
            for step in 1..=last_step {
                em_step(model, &mut x, cfg.dt, &mut rng)?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DiffusionError::Explosion {
                        step,
                        time: step as f64 * cfg.dt,
                    });
                }
                for (slot, &target) in probe_steps.iter().enumerate() {
                    if target == step {
                        values[slot] = f.eval(&x)?;
                    }
                }
            }
            Ok(values)
        })
        .collect::<Result<_, _>>()?;
    let n = per_path.len() as f64;
    let mut out = Vec::with_capacity(probe_steps.len());
    for slot in 0..probe_steps.len() {
        let mean = per_path.iter().map(|v| v[slot]).sum::<f64>() / n;
        let var = per_path
            .iter()
            .map(|v| (v[slot] - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        out.push((mean, (var / n).sqrt()));
    }
    Ok(out)
}

/// Time average with batch-means error bars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub std_error: f64,
    pub batches: usize,
    pub samples: usize,
}

const BATCHES: usize = 32;

/// Time average of `g` over `[burn_in, t_end]` along a single path, with the
/// standard error estimated from [`BATCHES`] batch means.
pub fn ergodic_average(
    model: &DiffusionModel,
    g: &ScalarField,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    burn_in: f64,
    seed: u64,
) -> Result<BatchMeans, DiffusionError> {
    if x0.len() != model.dim() {
        return Err(DiffusionError::Dimension {
            expected: model.dim(),
            got: x0.len(),
        });
    }
    if dt <= 0.0 || !dt.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if !(t_end > burn_in) || burn_in < 0.0 {
        return Err(DiffusionError::InvalidParams(format!(
            "need t_end > burn_in >= 0, got t_end = {t_end}, burn_in = {burn_in}"
        )));
    }
    let total_steps = (t_end / dt).round() as usize;
    let burn_steps = (burn_in / dt).round() as usize;
    let samples = total_steps - burn_steps;
    if samples < 2 * BATCHES {
        return Err(DiffusionError::InvalidParams(format!(
            "only {samples} samples after burn-in; need at least {}",
            2 * BATCHES
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    for step in 1..=burn_steps {
        em_step(model, &mut x, dt, &mut rng)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::Explosion {
                step,
                time: step as f64 * dt,
            });
        }
    }
    let batch_len = samples / BATCHES;
    let used = batch_len * BATCHES;
    let mut batch_means = vec![0.0f64; BATCHES];
    let mut overall = 0.0;
    for k in 0..used {
        let value = g.eval(&x)?;
        if !value.is_finite() {
            return Err(DiffusionError::NonFiniteSample {
                what: "observable",
                time: (burn_steps + k) as f64 * dt,
            });
        }
        overall += value;
        batch_means[k / batch_len] += value;
        em_step(model, &mut x, dt, &mut rng)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::Explosion {
                step: burn_steps + k + 1,
                time: (burn_steps + k + 1) as f64 * dt,
            });
        }
    }
    for bm in &mut batch_means {
        *bm /= batch_len as f64;
    }
    let mean = overall / used as f64;
    let batch_var = batch_means
        .iter()
        .map(|bm| (bm - mean).powi(2))
        .sum::<f64>()
        / (BATCHES as f64 - 1.0);
    Ok(BatchMeans {
        mean,
        std_error: (batch_var / BATCHES as f64).sqrt(),
        batches: BATCHES,
        samples: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_field() -> ScalarField {
        ScalarField::from_fn(1, |_| 1.0)
    }

    #[test]
    fn hitting_from_inside_is_zero() {
        let model = DiffusionModel::ou();
        let c = Region::interval(-1.0, 1.0);
        let cfg = McConfig {
            n_paths: 50,
            dt: 0.01,
            t_cap: 10.0,
            seed: 1,
        };
        let est = mc_hitting_functional(&model, &unit_field(), &c, 0.0, &[0.0], &cfg).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.censored, 0);
    }

    #[test]
    fn delayed_hitting_is_at_least_r() {
        let model = DiffusionModel::ou();
        let c = Region::interval(-1.0, 1.0);
        let cfg = McConfig {
            n_paths: 200,
            dt: 0.01,
            t_cap: 50.0,
            seed: 2,
        };
        let r = 0.5;
        let est = mc_hitting_functional(&model, &unit_field(), &c, r, &[0.0], &cfg).unwrap();
        // f == 1 makes the value the hitting time itself
        assert!(est.mean >= r - 1e-9);
    }

    #[test]
    fn clock_estimate_with_full_space_is_unit_mean() {
        // C covers everything the path can reach, so the occupation time is
        // elapsed time and tilde tau is the exponential clock itself
        let model = DiffusionModel::ou();
        let c = Region::interval(-1e6, 1e6);
        let cfg = McConfig {
            n_paths: 20_000,
            dt: 0.01,
            t_cap: 200.0,
            seed: 3,
        };
        let est = mc_lyapunov(&model, &unit_field(), &c, &[0.0], &cfg).unwrap();
        assert!(
            (est.mean - 1.0).abs() <= 3.0 * est.std_error + 0.02,
            "mean {} (se {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn clock_dominates_hitting_pathwise() {
        let model = DiffusionModel::ou();
        let c = Region::interval(-0.5, 0.5);
        let cfg = McConfig {
            n_paths: 300,
            dt: 0.01,
            t_cap: 100.0,
            seed: 4,
        };
        let hit = mc_hitting_functional(&model, &unit_field(), &c, 0.0, &[2.0], &cfg).unwrap();
        let clock = mc_lyapunov(&model, &unit_field(), &c, &[2.0], &cfg).unwrap();
        // shared jump streams make the comparison meaningful in aggregate
        assert!(clock.mean >= hit.mean);
    }

    #[test]
    fn ergodic_average_of_constant_is_one() {
        let model = DiffusionModel::ou();
        let est = ergodic_average(&model, &unit_field(), &[0.0], 50.0, 0.01, 5.0, 5).unwrap();
        assert_abs_diff_eq!(est.mean, 1.0, epsilon = 1e-12);
        assert_eq!(est.batches, 32);
    }

    #[test]
    fn ou_second_moment_near_one() {
        let model = DiffusionModel::ou();
        let square = ScalarField::from_fn(1, |x| x[0] * x[0]);
        let est = ergodic_average(&model, &square, &[0.0], 2000.0, 0.01, 50.0, 6).unwrap();
        assert!(
            (est.mean - 1.0).abs() <= 3.0 * est.std_error + 0.02,
            "mean {} (se {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn ou_first_moment_near_zero() {
        let model = DiffusionModel::ou();
        let ident = ScalarField::from_fn(1, |x| x[0]);
        let est = ergodic_average(&model, &ident, &[0.0], 2000.0, 0.01, 50.0, 7).unwrap();
        assert!(
            est.mean.abs() <= 3.0 * est.std_error + 0.02,
            "mean {} (se {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn integral_form_matches_clock_form() {
        let model = DiffusionModel::ou();
        let c = Region::interval(-1.0, 1.0);
        let f = ScalarField::from_fn(1, |x| x[0] * x[0] + 1.0);
        let cfg = McConfig {
            n_paths: 8_000,
            dt: 0.02,
            t_cap: 400.0,
            seed: 8,
        };
        let clock = mc_lyapunov(&model, &f, &c, &[0.0], &cfg).unwrap();
        let integral = mc_lyapunov_integral_form(&model, &f, &c, &[0.0], &cfg, 60.0).unwrap();
        let spread = 3.0 * (clock.std_error + integral.std_error) + 0.05;
        assert!(
            (clock.mean - integral.mean).abs() <= spread,
            "clock {} vs integral {} (allowed {spread})",
            clock.mean,
            integral.mean
        );
    }

    #[test]
    fn unreachable_set_censors_every_path() {
        let model = DiffusionModel::ou();
        // an OU path started at 0 will not reach 1e5 within the cap
        let c = Region::interval(1e5, 2e5);
        let cfg = McConfig {
            n_paths: 10,
            dt: 0.1,
            t_cap: 5.0,
            seed: 9,
        };
        let err = mc_hitting_functional(&model, &unit_field(), &c, 0.0, &[0.0], &cfg);
        assert!(matches!(err, Err(DiffusionError::AllPathsCensored { .. })));
    }
}
