//! Monte Carlo backend for SDE models: Euler-Maruyama simulation, generator
//! evaluation, drift-condition checks on grids, and estimators for hitting
//! functionals, the exponential-clock Lyapunov construction, and ergodic
//! averages.

mod field;
mod generator;
mod mc;

pub use field::{sampled_f_norm, FieldError, Region, SampledSup, ScalarField};
pub use generator::{drift_condition_check, generator_apply, FieldCertificate, GridMarginReport};
pub use mc::{
    em_probe, ergodic_average, mc_hitting_functional, mc_lyapunov, mc_lyapunov_integral_form,
    BatchMeans, McConfig, McEstimate,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dsl::Expr;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("path exploded to a non-finite state at step {step} (t = {time})")]
    Explosion { step: usize, time: f64 },
    #[error("all {n_paths} paths were censored at t_cap = {t_cap}")]
    AllPathsCensored { n_paths: usize, t_cap: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("non-finite {what} at t = {time}")]
    NonFiniteSample { what: &'static str, time: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

type DriftFn = dyn Fn(&[f64]) -> Result<Vec<f64>, FieldError> + Send + Sync;
type DispersionFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>, FieldError> + Send + Sync;

/// An SDE model `dX = u(X) dt + M(X) dB` with state dimension `d` and noise
/// dimension `k`.
#[derive(Clone)]
pub struct DiffusionModel {
    d: usize,
    k: usize,
    drift: Arc<DriftFn>,
    dispersion: Arc<DispersionFn>,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.debug_struct("DiffusionModel")
            .field("d", &self.d)
            .field("k", &self.k)
            .finish()
    }
}

impl DiffusionModel {
    pub fn from_fns<U, M>(d: usize, k: usize, drift: U, dispersion: M) -> Self
    where
        U: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        M: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            d,
            k,
            drift: Arc::new(move |x| Ok(drift(x))),
            dispersion: Arc::new(move |x| Ok(dispersion(x))),
        }
    }

    /// Builds a model from expression tables: one drift expression per
    /// coordinate and a `d x k` table of dispersion expressions.
    pub fn from_exprs(
        d: usize,
        k: usize,
        drift: Vec<Expr>,
        dispersion: Vec<Vec<Expr>>,
    ) -> Result<Self, DiffusionError> {
        if drift.len() != d {
            return Err(DiffusionError::Dimension {
                expected: d,
                got: drift.len(),
            });
        }
        if dispersion.len() != d || dispersion.iter().any(|row| row.len() != k) {
            return Err(DiffusionError::Dimension {
                expected: d * k,
                got: dispersion.iter().map(Vec::len).sum(),
            });
        }
        let drift = Arc::new(drift);
        let dispersion = Arc::new(dispersion);
        let drift_closure = {
            let drift = Arc::clone(&drift);
            move |x: &[f64]| -> Result<Vec<f64>, FieldError> {
                drift
                    .iter()
                    .map(|e| e.evaluate(x).map_err(FieldError::from))
                    .collect()
            }
        };
        let dispersion_closure = {
            let dispersion = Arc::clone(&dispersion);
            move |x: &[f64]| -> Result<DMatrix<f64>, FieldError> {
                let mut out = DMatrix::zeros(dispersion.len(), k);
                for (i, row) in dispersion.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        out[(i, j)] = e.evaluate(x)?;
                    }
                }
                Ok(out)
            }
        };
        Ok(Self {
            d,
            k,
            drift: Arc::new(drift_closure),
            dispersion: Arc::new(dispersion_closure),
        })
    }

    /// Ornstein-Uhlenbeck in one dimension: `dX = -X dt + sqrt(2) dB`, whose
    /// stationary law is standard normal.
    pub fn ou() -> Self {
        Self::from_fns(
            1,
            1,
            |x| vec![-x[0]],
            |_| DMatrix::from_element(1, 1, std::f64::consts::SQRT_2),
        )
    }

    /// Double-well gradient diffusion: `dX = (X - X^3) dt + sqrt(2) dB`.
    pub fn double_well() -> Self {
        Self::from_fns(
            1,
            1,
            |x| vec![x[0] - x[0].powi(3)],
            |_| DMatrix::from_element(1, 1, std::f64::consts::SQRT_2),
        )
    }

    /// Looks up a named built-in model.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ou" => Some(Self::ou()),
            "double-well" => Some(Self::double_well()),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn noise_dim(&self) -> usize {
        self.k
    }

    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        (self.drift)(x)
    }

    pub fn dispersion(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        (self.dispersion)(x)
    }

    /// The diffusion matrix `Sigma(x) = M(x) M(x)^T`.
    pub fn sigma(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        let m = self.dispersion(x)?;
        Ok(&m * m.transpose())
    }
}

/// A discretized sample path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Running occupation time of the tracked set, accumulated by the
    /// left-endpoint rule; empty when no set was supplied.
    pub occupation: Vec<f64>,
}

/// Euler-Maruyama discretization started at `x0`, with Gaussian increments
/// of variance `dt` and a fixed seed. When `c` is given, the running
/// occupation time of `c` is accumulated along the path.
pub fn simulate_path(
    model: &DiffusionModel,
    x0: &[f64],
    dt: f64,
    t_end: f64,
    seed: u64,
    c: Option<&Region>,
) -> Result<PathSample, DiffusionError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(DiffusionError::InvalidParams(format!(
            "horizon must be positive, got {t_end}"
        )));
    }
    if x0.len() != model.dim() {
        return Err(DiffusionError::Dimension {
            expected: model.dim(),
            got: x0.len(),
        });
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    let mut occ = 0.0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut occupation = Vec::new();
    times.push(0.0);
    states.push(x.clone());
    if c.is_some() {
        occupation.reserve(steps + 1);
        occupation.push(0.0);
    }
    for step in 1..=steps {
        if let Some(region) = c {
            if region.contains(&x)? {
                occ += dt;
            }
        }
        em_step(model, &mut x, dt, &mut rng)?;
        let t = step as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::Explosion { step, time: t });
        }
        times.push(t);
        states.push(x.clone());
        if c.is_some() {
            occupation.push(occ);
        }
    }
    Ok(PathSample {
        times,
        states,
        occupation,
    })
}

/// One in-place Euler-Maruyama step.
pub(crate) fn em_step(
    model: &DiffusionModel,
    x: &mut [f64],
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(), DiffusionError> {
    let u = model.drift(x)?;
    let m = model.dispersion(x)?;
    if u.len() != model.dim() {
        return Err(DiffusionError::Dimension {
            expected: model.dim(),
            got: u.len(),
        });
    }
    if m.nrows() != model.dim() || m.ncols() != model.noise_dim() {
        return Err(DiffusionError::Dimension {
            expected: model.dim() * model.noise_dim(),
            got: m.nrows() * m.ncols(),
        });
    }
    let sqrt_dt = dt.sqrt();
    let dw: Vec<f64> = (0..model.noise_dim())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sqrt_dt
        })
        .collect();
    for i in 0..model.dim() {
        let noise: f64 = (0..model.noise_dim()).map(|j| m[(i, j)] * dw[j]).sum();
        x[i] += u[i] * dt + noise;
    }
    Ok(())
}

/// Uniform 1-d grid used by drift checks; includes both endpoints.
pub fn grid_1d(lo: f64, hi: f64, step: f64) -> Vec<Vec<f64>> {
    assert!(step > 0.0 && hi >= lo);
    let count = ((hi - lo) / step).round() as usize;
    (0..=count).map(|k| vec![lo + k as f64 * step]).collect()
}
