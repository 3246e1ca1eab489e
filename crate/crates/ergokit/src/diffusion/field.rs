//! Evaluable scalar fields over `R^d` and closed regions used as target
//! sets. Fields can carry closed-form derivatives; otherwise central
//! differences are used, and the two can be cross-checked.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dsl::{EvalError, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("field evaluation returned a non-finite value ({context})")]
    NonFinite { context: &'static str },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("point has dimension {got}, field expects {expected}")]
    Dimension { expected: usize, got: usize },
}

type EvalFn = dyn Fn(&[f64]) -> Result<f64, FieldError> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Result<Vec<f64>, FieldError> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>, FieldError> + Send + Sync;

/// A scalar function of a point, with optional closed-form gradient and
/// Hessian.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    hess: Option<Arc<HessFn>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("closed_form_gradient", &self.grad.is_some())
            .field("closed_form_hessian", &self.hess.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Arc::new(move |x| {
                let v = f(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(FieldError::NonFinite {
                        context: "scalar field",
                    })
                }
            }),
            grad: None,
            hess: None,
        }
    }

    pub fn from_expr(expr: Expr, dim: usize) -> Self {
        Self {
            dim,
            eval: Arc::new(move |x| Ok(expr.evaluate(x)?)),
            grad: None,
            hess: None,
        }
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(move |x| Ok(grad(x))));
        self
    }

    pub fn with_hessian<H>(mut self, hess: H) -> Self
    where
        H: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(move |x| Ok(hess(x))));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_closed_form_derivatives(&self) -> bool {
        self.grad.is_some() && self.hess.is_some()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, FieldError> {
        self.check_dim(x)?;
        (self.eval)(x)
    }

    /// Gradient: closed form if supplied, otherwise central differences with
    /// step `h`.
    pub fn gradient(&self, x: &[f64], h: f64) -> Result<Vec<f64>, FieldError> {
        self.check_dim(x)?;
        if let Some(grad) = &self.grad {
            return grad(x);
        }
        self.fd_gradient(x, h)
    }

    pub fn fd_gradient(&self, x: &[f64], h: f64) -> Result<Vec<f64>, FieldError> {
        self.check_dim(x)?;
        let mut out = Vec::with_capacity(self.dim);
        let mut point = x.to_vec();
        for i in 0..self.dim {
            point[i] = x[i] + h;
            let fwd = (self.eval)(&point)?;
            point[i] = x[i] - h;
            let bwd = (self.eval)(&point)?;
            point[i] = x[i];
            out.push((fwd - bwd) / (2.0 * h));
        }
        Ok(out)
    }

    /// Hessian: closed form if supplied, otherwise second-order central
    /// differences.
    pub fn hessian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>, FieldError> {
        self.check_dim(x)?;
        if let Some(hess) = &self.hess {
            return hess(x);
        }
        self.fd_hessian(x, h)
    }

    pub fn fd_hessian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>, FieldError> {
        self.check_dim(x)?;
        let d = self.dim;
        let center = (self.eval)(x)?;
        let mut out = DMatrix::zeros(d, d);
        let mut point = x.to_vec();
        for i in 0..d {
            point[i] = x[i] + h;
            let fwd = (self.eval)(&point)?;
            point[i] = x[i] - h;
            let bwd = (self.eval)(&point)?;
            point[i] = x[i];
            out[(i, i)] = (fwd - 2.0 * center + bwd) / (h * h);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let mut corner = |si: f64, sj: f64| -> Result<f64, FieldError> {
                    point[i] = x[i] + si * h;
                    point[j] = x[j] + sj * h;
                    let v = (self.eval)(&point);
                    point[i] = x[i];
                    point[j] = x[j];
                    v
                };
                let value = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                    + corner(-1.0, -1.0)?)
                    / (4.0 * h * h);
                out[(i, j)] = value;
                out[(j, i)] = value;
            }
        }
        Ok(out)
    }

    /// Largest absolute difference between the supplied derivatives and
    /// central differences over the given points. Useful for validating
    /// closed forms.
    pub fn derivative_consistency(&self, points: &[Vec<f64>], h: f64) -> Result<f64, FieldError> {
        let mut worst = 0.0f64;
        for x in points {
            if let Some(grad) = &self.grad {
                let supplied = grad(x)?;
                let fd = self.fd_gradient(x, h)?;
                for (a, b) in supplied.iter().zip(&fd) {
                    worst = worst.max((a - b).abs());
                }
            }
            if let Some(hess) = &self.hess {
                let supplied = hess(x)?;
                let fd = self.fd_hessian(x, h)?;
                worst = worst.max((supplied - fd).amax());
            }
        }
        Ok(worst)
    }
}

/// A closed subset of `R^d` with a decidable membership predicate and a
/// bounding box for sampling. Every constructor yields a closed set (boxes,
/// balls, and sublevel sets of continuous fields), which is recorded rather
/// than verified.
#[derive(Clone)]
pub enum Region {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Sublevel {
        field: ScalarField,
        level: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl fmt::Debug for Region {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Box { lo, hi } => out.debug_struct("Box").field("lo", lo).field("hi", hi).finish(),
            Region::Ball { center, radius } => out
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Region::Sublevel { level, lo, hi, .. } => out
                .debug_struct("Sublevel")
                .field("level", level)
                .field("lo", lo)
                .field("hi", hi)
                .finish(),
        }
    }
}

impl Region {
    /// 1-d interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
            Region::Sublevel { lo, .. } => lo.len(),
        }
    }

    /// All constructors produce closed sets.
    pub fn is_closed(&self) -> bool {
        true
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool, FieldError> {
        match self {
            Region::Box { lo, hi } => {
                if x.len() != lo.len() {
                    return Err(FieldError::Dimension {
                        expected: lo.len(),
                        got: x.len(),
                    });
                }
                Ok(x.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (l, h))| *v >= *l && *v <= *h))
            }
            Region::Ball { center, radius } => {
                if x.len() != center.len() {
                    return Err(FieldError::Dimension {
                        expected: center.len(),
                        got: x.len(),
                    });
                }
                let dist2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(v, c)| (v - c) * (v - c))
                    .sum();
                Ok(dist2 <= radius * radius)
            }
            Region::Sublevel { field, level, .. } => Ok(field.eval(x)? <= *level),
        }
    }

    /// The sampling box: exact for boxes, circumscribed for balls, declared
    /// for sublevel sets.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Region::Sublevel { lo, hi, .. } => (lo.clone(), hi.clone()),
        }
    }
}

/// A sampled supremum: the max of `|g| / f` over the supplied points, which
/// is a lower bound for the true norm. The witness point and sample count
/// are kept so the bound's provenance can be recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSup {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub samples: usize,
}

/// `max over sample of |g(x)| / f(x)`. The continuous analogue of the
/// finite-state function norm, reported as a sample maximum.
pub fn sampled_f_norm(
    g: &ScalarField,
    f: &ScalarField,
    sample: &[Vec<f64>],
) -> Result<SampledSup, FieldError> {
    if sample.is_empty() {
        return Err(FieldError::NonFinite {
            context: "empty sample set for a sampled supremum",
        });
    }
    let mut best = f64::NEG_INFINITY;
    let mut argmax = sample[0].clone();
    for x in sample {
        let ratio = g.eval(x)?.abs() / f.eval(x)?;
        if ratio > best {
            best = ratio;
            argmax = x.clone();
        }
    }
    Ok(SampledSup {
        value: best,
        argmax,
        samples: sample.len(),
    })
}
