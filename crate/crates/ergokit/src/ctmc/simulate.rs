//! Monte Carlo estimators for the finite-state chain. Paths are simulated
//! exactly (exponential holding times, embedded jump chain), so the only
//! error is statistical; these estimators exist to cross-validate the linear
//! algebra and to mirror the diffusion backend's interface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::measures::{StateSet, Weight};

use super::{CtmcError, RateMatrix};

/// One simulated path's contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub value: f64,
    pub censored: bool,
}

/// Aggregated Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Paths that reached `t_cap` before their stopping rule fired. A
    /// nonzero count marks the estimate as censored (biased low).
    pub censored: usize,
    pub t_cap: f64,
}

impl McEstimate {
    fn from_outcomes(outcomes: &[PathOutcome], t_cap: f64) -> Result<Self, CtmcError> {
        let n = outcomes.len();
        let censored = outcomes.iter().filter(|o| o.censored).count();
        if censored == n {
            return Err(CtmcError::AllPathsCensored {
                n_paths: n,
                t_cap,
            });
        }
        let mean = outcomes.iter().map(|o| o.value).sum::<f64>() / n as f64;
        let var = outcomes
            .iter()
            .map(|o| (o.value - mean).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);
        Ok(Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n_paths: n,
            censored,
            t_cap,
        })
    }
}

fn check_mc_inputs(
    q: &RateMatrix,
    f: &Weight,
    set: &StateSet,
    x0: usize,
    n_paths: usize,
) -> Result<(), CtmcError> {
    if f.len() != q.n() || set.n() != q.n() {
        return Err(CtmcError::DimensionMismatch {
            expected: q.n(),
            got: f.len().min(set.n()),
        });
    }
    if set.is_empty() {
        return Err(CtmcError::EmptySet);
    }
    if x0 >= q.n() {
        return Err(CtmcError::DimensionMismatch {
            expected: q.n(),
            got: x0,
        });
    }
    if n_paths < 2 {
        return Err(CtmcError::Precondition(format!(
            "need at least 2 paths, got {n_paths}"
        )));
    }
    Ok(())
}

/// Stream layout: path `i` draws its jump chain from stream `2i` and any
/// auxiliary randomness (the exponential clock) from stream `2i + 1`, so the
/// hitting and clock estimators see identical trajectories per seed.
fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn next_jump<R: Rng>(q: &RateMatrix, x: usize, rng: &mut R) -> usize {
    let total = -q.rate(x, x);
    let mut u: f64 = rng.random_range(0.0..1.0);
    u *= total;
    let mut acc = 0.0;
    let mut last = x;
    for y in 0..q.n() {
        if y == x {
            continue;
        }
        let rate = q.rate(x, y);
        if rate <= 0.0 {
            continue;
        }
        acc += rate;
        last = y;
        if u <= acc {
            return y;
        }
    }
    last
}

/// Per-path samples of `int_0^tau f(Phi_t) dt`, with `tau` the first time
/// `>= r` spent in `B`. Integration along the piecewise-constant path is
/// exact.
pub fn mc_hitting_samples(
    q: &RateMatrix,
    f: &Weight,
    b: &StateSet,
    r: f64,
    x0: usize,
    n_paths: usize,
    t_cap: f64,
    seed: u64,
) -> Result<Vec<PathOutcome>, CtmcError> {
    check_mc_inputs(q, f, b, x0, n_paths)?;
    if r < 0.0 || !r.is_finite() {
        return Err(CtmcError::NegativeTime(r));
    }
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, 2 * i as u64);
            hitting_path(q, f, b, r, x0, t_cap, &mut rng)
        })
        .collect())
}

pub fn mc_hitting_functional(
    q: &RateMatrix,
    f: &Weight,
    b: &StateSet,
    r: f64,
    x0: usize,
    n_paths: usize,
    t_cap: f64,
    seed: u64,
) -> Result<McEstimate, CtmcError> {
    let outcomes = mc_hitting_samples(q, f, b, r, x0, n_paths, t_cap, seed)?;
    McEstimate::from_outcomes(&outcomes, t_cap)
}

fn hitting_path<R: Rng>(
    q: &RateMatrix,
    f: &Weight,
    b: &StateSet,
    r: f64,
    x0: usize,
    t_cap: f64,
    rng: &mut R,
) -> PathOutcome {
    let mut t = 0.0;
    let mut x = x0;
    let mut acc = 0.0;
    loop {
        let rate = -q.rate(x, x);
        let t_next = if rate > 0.0 {
            t + Exp::new(rate).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        };
        if b.contains(x) {
            if t >= r {
                return PathOutcome {
                    value: acc,
                    censored: false,
                };
            }
            if t_next > r {
                // the clock reaches r inside this visit to B
                acc += f.get(x) * (r - t);
                return PathOutcome {
                    value: acc,
                    censored: false,
                };
            }
        }
        let segment_end = t_next.min(t_cap);
        acc += f.get(x) * (segment_end - t);
        t = segment_end;
        if t >= t_cap {
            return PathOutcome {
                value: acc,
                censored: true,
            };
        }
        x = next_jump(q, x, rng);
    }
}

/// Per-path samples of `int_0^{tilde tau} f(Phi_t) dt`, where `tilde tau` is
/// the first time the occupation of `C` reaches an independent standard
/// exponential clock. The mean estimates `(R_{1_C} f)(x0)`.
pub fn mc_lyapunov_samples(
    q: &RateMatrix,
    f: &Weight,
    c: &StateSet,
    x0: usize,
    n_paths: usize,
    t_cap: f64,
    seed: u64,
) -> Result<Vec<PathOutcome>, CtmcError> {
    check_mc_inputs(q, f, c, x0, n_paths)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut path_stream = path_rng(seed, 2 * i as u64);
            let mut clock_stream = path_rng(seed, 2 * i as u64 + 1);
            let clock: f64 = Exp::new(1.0).expect("unit rate").sample(&mut clock_stream);
            lyapunov_path(q, f, c, x0, clock, t_cap, &mut path_stream)
        })
        .collect())
}

pub fn mc_lyapunov(
    q: &RateMatrix,
    f: &Weight,
    c: &StateSet,
    x0: usize,
    n_paths: usize,
    t_cap: f64,
    seed: u64,
) -> Result<McEstimate, CtmcError> {
    let outcomes = mc_lyapunov_samples(q, f, c, x0, n_paths, t_cap, seed)?;
    McEstimate::from_outcomes(&outcomes, t_cap)
}

fn lyapunov_path<R: Rng>(
    q: &RateMatrix,
    f: &Weight,
    c: &StateSet,
    x0: usize,
    clock: f64,
    t_cap: f64,
    rng: &mut R,
) -> PathOutcome {
    let mut t = 0.0;
    let mut x = x0;
    let mut acc = 0.0;
    let mut occupation = 0.0;
    loop {
        let rate = -q.rate(x, x);
        let t_next = if rate > 0.0 {
            t + Exp::new(rate).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        };
        if c.contains(x) {
            let needed = clock - occupation;
            if t + needed <= t_next {
                // the clock rings inside this visit to C
                acc += f.get(x) * needed;
                return PathOutcome {
                    value: acc,
                    censored: false,
                };
            }
        }
        let segment_end = t_next.min(t_cap);
        let segment = segment_end - t;
        acc += f.get(x) * segment;
        if c.contains(x) {
            occupation += segment;
        }
        t = segment_end;
        if t >= t_cap {
            return PathOutcome {
                value: acc,
                censored: true,
            };
        }
        x = next_jump(q, x, rng);
    }
}
