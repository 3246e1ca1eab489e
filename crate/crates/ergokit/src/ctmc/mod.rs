//! Exact finite-state backend: a rate matrix `Q` is the generator of a
//! continuous-time Markov chain, and every functional of interest reduces to
//! linear algebra on `Q`.
//!
//! The semigroup is `P^t = exp(tQ)`, the resolvent `(alpha I - Q)^{-1}`, the
//! generalized resolvent `(diag(h) - Q)^{-1}`, and hitting-time functionals
//! solve linear systems on the complement of the target set. Because the
//! evaluations are exact up to rounding, this module doubles as the oracle
//! against which the Monte Carlo backend is validated.

mod bounds;
mod certificate;
mod simulate;
mod skeleton;

pub use bounds::{
    DecayCurve, ErgodicBounds, NormEquivalence, PairIntegral, SkeletonSums, StationIntegral,
};
pub use certificate::{CertificateMargins, DriftCertificate};
pub use simulate::{
    mc_hitting_functional, mc_hitting_samples, mc_lyapunov, mc_lyapunov_samples, McEstimate,
    PathOutcome,
};
pub use skeleton::{Minorization, SkeletonKernel, SkeletonLyapunov};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::measures::{MeasureError, StateSet, Weight};
use crate::numeric;

#[derive(Debug, Error)]
pub enum CtmcError {
    #[error("rate matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("rate matrix must have at least one state")]
    Empty,
    #[error("off-diagonal rate at ({row},{col}) is negative: {value}")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 0")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("rate at ({row},{col}) is not finite")]
    NonFiniteRate { row: usize, col: usize },
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("sampling interval must be positive, got {0}")]
    NonpositiveDelta(f64),
    #[error("chain is reducible: {context}")]
    Reducible { context: &'static str },
    #[error("singular linear system: {context}")]
    SingularSystem { context: &'static str },
    #[error("target set is empty")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("kernel row {row} sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("negative kernel entry {value} at ({row},{col})")]
    NegativeKernelEntry { row: usize, col: usize, value: f64 },
    #[error("horizon {t_max} does not resolve the spectral gap {gap}; increase t_max")]
    TailUnresolved { t_max: f64, gap: f64 },
    #[error("certificate malformed: V is infinite at state {state}, reachable at rate {rate} from state {from} where V is finite")]
    MalformedCertificate { state: usize, from: usize, rate: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("all {n_paths} paths were censored at t_cap = {t_cap}")]
    AllPathsCensored { n_paths: usize, t_cap: f64 },
}

/// Row-sum tolerance accepted by the [`RateMatrix`] constructor.
pub const RATE_ROW_SUM_TOL: f64 = 1e-12;
/// Row-sum tolerance accepted by the [`TransitionKernel`] constructor.
pub const KERNEL_ROW_SUM_TOL: f64 = 1e-10;
/// Tolerance for algebraic identities that hold exactly in real arithmetic.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for quadrature cross-checks.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Margin tolerance below which a drift certificate is accepted.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// The generator of a finite-state continuous-time Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    q: DMatrix<f64>,
}

impl RateMatrix {
    /// Validates and wraps a generator: off-diagonal entries nonnegative and
    /// row sums zero within [`RATE_ROW_SUM_TOL`].
    pub fn new(q: DMatrix<f64>) -> Result<Self, CtmcError> {
        if q.nrows() != q.ncols() {
            return Err(CtmcError::NotSquare {
                rows: q.nrows(),
                cols: q.ncols(),
            });
        }
        if q.nrows() == 0 {
            return Err(CtmcError::Empty);
        }
        for i in 0..q.nrows() {
            let mut sum = 0.0;
            for j in 0..q.ncols() {
                let v = q[(i, j)];
                if !v.is_finite() {
                    return Err(CtmcError::NonFiniteRate { row: i, col: j });
                }
                if i != j && v < 0.0 {
                    return Err(CtmcError::NegativeRate {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if sum.abs() > RATE_ROW_SUM_TOL {
                return Err(CtmcError::RowSumNonzero { row: i, sum });
            }
        }
        Ok(Self { q })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CtmcError> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(CtmcError::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(q)
    }

    /// Builds a generator from nonnegative off-diagonal rates, filling the
    /// diagonal so that rows sum to zero exactly.
    pub fn from_off_diagonal_rates(rates: &DMatrix<f64>) -> Result<Self, CtmcError> {
        let n = rates.nrows();
        let mut q = rates.clone();
        for i in 0..n {
            q[(i, i)] = 0.0;
            let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -row_sum;
        }
        Self::new(q)
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// The generator applied to a function table: `(Qh)(x)`.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>, CtmcError> {
        self.check_len(h.len())?;
        let v = DVector::from_column_slice(h);
        Ok((&self.q * v).iter().copied().collect())
    }

    fn check_len(&self, len: usize) -> Result<(), CtmcError> {
        if len != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    fn check_set(&self, set: &StateSet) -> Result<(), CtmcError> {
        self.check_len(set.n())?;
        if set.is_empty() {
            return Err(CtmcError::EmptySet);
        }
        Ok(())
    }

    /// `P^t = exp(tQ)`.
    pub fn transition_semigroup(&self, t: f64) -> Result<TransitionKernel, CtmcError> {
        if t < 0.0 || !t.is_finite() {
            return Err(CtmcError::NegativeTime(t));
        }
        let p = numeric::expm(&(&self.q * t));
        TransitionKernel::new(p, t)
    }

    /// Strong connectivity of the positive-rate digraph, plus the verdicts
    /// that follow from it on a finite chain.
    pub fn irreducibility_report(&self) -> IrreducibilityReport {
        let n = self.n();
        let mut graph = petgraph::graph::DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.q[(i, j)] > 0.0 {
                    graph.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let sccs = petgraph::algo::tarjan_scc(&graph);
        let irreducible = sccs.len() == 1;
        IrreducibilityReport {
            irreducible,
            communicating_classes: sccs.len(),
            aperiodic: irreducible,
            note: if irreducible {
                "irreducible; P^t has strictly positive entries for every t > 0, so the chain is aperiodic"
            } else {
                "reducible; the positive-rate digraph is not strongly connected"
            },
        }
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducibility_report().irreducible
    }

    /// The unique invariant probability vector of an irreducible chain.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, CtmcError> {
        if !self.is_irreducible() {
            return Err(CtmcError::Reducible {
                context: "stationary distribution is not unique",
            });
        }
        let n = self.n();
        // pi Q = 0 with sum(pi) = 1: replace the last equation of Q^T pi = 0
        // by the normalization row.
        let mut a = self.q.transpose();
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let pi = numeric::solve(&a, &b).ok_or(CtmcError::SingularSystem {
            context: "stationary distribution solve",
        })?;
        Ok(pi.iter().copied().collect())
    }

    /// `pi(f) = sum_x pi(x) f(x)`.
    pub fn pi_f(&self, f: &Weight) -> Result<f64, CtmcError> {
        self.check_len(f.len())?;
        let pi = self.stationary_distribution()?;
        Ok(pi.iter().zip(f.values()).map(|(p, v)| p * v).sum())
    }

    /// The resolvent kernel `R_alpha = (alpha I - Q)^{-1}`.
    pub fn resolvent(&self, alpha: f64) -> Result<DMatrix<f64>, CtmcError> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(CtmcError::Precondition(format!(
                "resolvent parameter must be positive, got {alpha}"
            )));
        }
        let n = self.n();
        let a = DMatrix::identity(n, n) * alpha - &self.q;
        numeric::invert(&a).ok_or(CtmcError::SingularSystem {
            context: "resolvent inverse",
        })
    }

    /// The generalized resolvent `R_h = (diag(h) - Q)^{-1}` for `h >= 0`.
    pub fn generalized_resolvent(&self, h: &[f64]) -> Result<DMatrix<f64>, CtmcError> {
        self.check_len(h.len())?;
        for (i, &v) in h.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(CtmcError::Precondition(format!(
                    "rate function must be nonnegative, got {v} at state {i}"
                )));
            }
        }
        let n = self.n();
        let mut a = -self.q.clone();
        for i in 0..n {
            a[(i, i)] += h[i];
        }
        numeric::invert(&a).ok_or(CtmcError::SingularSystem {
            context: "generalized resolvent inverse (h vanishes on a closed class)",
        })
    }

    /// Max-norm residual of the resolvent equation
    /// `R_h = R_g + R_g I_{g-h} R_h` for `g >= h >= 0`.
    pub fn resolvent_equation_residual(&self, g: &[f64], h: &[f64]) -> Result<f64, CtmcError> {
        self.check_len(g.len())?;
        self.check_len(h.len())?;
        for i in 0..self.n() {
            if g[i] < h[i] {
                return Err(CtmcError::Precondition(format!(
                    "resolvent equation needs g >= h, violated at state {i}: g = {}, h = {}",
                    g[i], h[i]
                )));
            }
        }
        let rg = self.generalized_resolvent(g)?;
        let rh = self.generalized_resolvent(h)?;
        let diag = DMatrix::from_fn(self.n(), self.n(), |i, j| {
            if i == j {
                g[i] - h[i]
            } else {
                0.0
            }
        });
        let residual = &rh - &rg - &rg * diag * &rh;
        Ok(residual.amax())
    }

    /// Max-norm residual of `Q(Rg) - (Rg - g)` with `R` the unit resolvent.
    pub fn generator_resolvent_residual(&self, g: &[f64]) -> Result<f64, CtmcError> {
        self.check_len(g.len())?;
        let r = self.resolvent(1.0)?;
        let gv = DVector::from_column_slice(g);
        let rg = r * gv.clone();
        let residual = &self.q * &rg - (&rg - &gv);
        Ok(residual.amax())
    }

    /// Expected weighted time to the target: `G_B(x, f; r)` is the mean of
    /// `int_0^tau f(Phi_t) dt` where `tau` is the first time `>= r` at which
    /// the chain sits in `B`. For `r = 0` this solves a linear system on the
    /// complement of `B`; for `r > 0` it adds the transient integral up to
    /// `r` and propagates through `P^r`.
    pub fn hitting_functional(
        &self,
        f: &Weight,
        b: &StateSet,
        r: f64,
    ) -> Result<Vec<f64>, CtmcError> {
        self.check_len(f.len())?;
        self.check_set(b)?;
        if r < 0.0 || !r.is_finite() {
            return Err(CtmcError::NegativeTime(r));
        }
        let g0 = self.hitting_from_zero(f.values(), b)?;
        if r == 0.0 {
            return Ok(g0);
        }
        let (pr, transient) =
            numeric::expm_with_integral(&self.q, &DVector::from_column_slice(f.values()), r);
        let g0v = DVector::from_column_slice(&g0);
        let out = transient + pr * g0v;
        Ok(out.iter().copied().collect())
    }

    /// Solves `G = 0` on `B`, `(QG)(x) = -f(x)` off `B`.
    fn hitting_from_zero(&self, f: &[f64], b: &StateSet) -> Result<Vec<f64>, CtmcError> {
        let outside = b.complement();
        let m = outside.len();
        let mut g = vec![0.0; self.n()];
        if m == 0 {
            return Ok(g);
        }
        let sub = DMatrix::from_fn(m, m, |i, j| self.q[(outside[i], outside[j])]);
        let rhs = DVector::from_iterator(m, outside.iter().map(|&i| -f[i]));
        let sol = numeric::solve(&sub, &rhs).ok_or(CtmcError::SingularSystem {
            context: "hitting functional (target unreachable from some state)",
        })?;
        for (k, &i) in outside.iter().enumerate() {
            g[i] = sol[k];
        }
        Ok(g)
    }

    /// Smallest-minorization certificate for `C` at horizon `T`:
    /// `nu_raw(y) = min_{x in C} P^T(x, y)`, `eps = sum_y nu_raw(y)`. The
    /// bound `P^T(x, .) >= eps nu(.)` holds for every `x in C` by
    /// construction; `eps = 0` (empty minorization) is reported, not an error.
    pub fn minorization_certificate(
        &self,
        c: &StateSet,
        t: f64,
    ) -> Result<Minorization, CtmcError> {
        self.check_set(c)?;
        if t <= 0.0 || !t.is_finite() {
            return Err(CtmcError::Precondition(format!(
                "minorization horizon must be positive, got {t}"
            )));
        }
        let p = self.transition_semigroup(t)?;
        let n = self.n();
        let nu_raw: Vec<f64> = (0..n)
            .map(|y| {
                c.iter()
                    .map(|x| p.p()[(x, y)])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let eps: f64 = nu_raw.iter().sum();
        let nu = if eps > 0.0 {
            Some(nu_raw.iter().map(|v| v / eps).collect())
        } else {
            None
        };
        Ok(Minorization {
            epsilon: eps,
            nu,
            t,
        })
    }

    /// Max over the grid and over states of `(P^t f)(x) / (beta e^{beta t} f(x))`.
    /// A value `<= 1` means the exponential domination bound holds on the grid.
    pub fn exponential_domination_check(
        &self,
        f: &Weight,
        beta: f64,
        t_grid: &[f64],
    ) -> Result<DominationReport, CtmcError> {
        self.check_len(f.len())?;
        if beta <= 0.0 {
            return Err(CtmcError::Precondition(format!(
                "domination rate must be positive, got {beta}"
            )));
        }
        let fv = DVector::from_column_slice(f.values());
        let mut worst = (0usize, 0.0f64);
        let mut max_ratio = f64::NEG_INFINITY;
        for &t in t_grid {
            if t < 0.0 {
                return Err(CtmcError::NegativeTime(t));
            }
            let ptf = numeric::expm(&(&self.q * t)) * &fv;
            let bound = beta * (beta * t).exp();
            for x in 0..self.n() {
                let ratio = ptf[x] / (bound * f.get(x));
                if ratio > max_ratio {
                    max_ratio = ratio;
                    worst = (x, t);
                }
            }
        }
        Ok(DominationReport {
            max_ratio,
            holds: max_ratio <= 1.0,
            worst_state: worst.0,
            worst_time: worst.1,
        })
    }
}

/// A row-stochastic kernel together with the horizon it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    p: DMatrix<f64>,
    horizon: f64,
}

impl TransitionKernel {
    pub fn new(p: DMatrix<f64>, horizon: f64) -> Result<Self, CtmcError> {
        for i in 0..p.nrows() {
            let mut sum = 0.0;
            for j in 0..p.ncols() {
                let v = p[(i, j)];
                // exp() can leave entries a hair below zero
                if v < -KERNEL_ROW_SUM_TOL {
                    return Err(CtmcError::NegativeKernelEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > KERNEL_ROW_SUM_TOL {
                return Err(CtmcError::NotStochastic { row: i, sum });
            }
        }
        Ok(Self { p, horizon })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// Row `x` as a probability table.
    pub fn row(&self, x: usize) -> Vec<f64> {
        (0..self.p.ncols()).map(|j| self.p[(x, j)]).collect()
    }

    /// Kernel applied to a function table.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>, CtmcError> {
        if h.len() != self.n() {
            return Err(CtmcError::DimensionMismatch {
                expected: self.n(),
                got: h.len(),
            });
        }
        let v = DVector::from_column_slice(h);
        Ok((&self.p * v).iter().copied().collect())
    }

    pub fn compose(&self, other: &TransitionKernel) -> Result<TransitionKernel, CtmcError> {
        TransitionKernel::new(&self.p * &other.p, self.horizon + other.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IrreducibilityReport {
    pub irreducible: bool,
    pub communicating_classes: usize,
    /// On a finite chain, irreducibility in continuous time already gives
    /// aperiodicity; the flag records that verdict.
    pub aperiodic: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationReport {
    pub max_ratio: f64,
    pub holds: bool,
    pub worst_state: usize,
    pub worst_time: f64,
}

/// Random irreducible generator with off-diagonal rates in `[lo, hi)`.
/// Strictly positive rates keep the chain irreducible by construction.
pub fn random_rate_matrix<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> RateMatrix {
    assert!(n >= 1 && lo > 0.0 && hi > lo);
    let rates = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            rng.random_range(lo..hi)
        }
    });
    RateMatrix::from_off_diagonal_rates(&rates).expect("constructed rows sum to zero")
}

/// The worked two-state example used across tests and docs:
/// `Q = [[-1, 1], [2, -2]]`.
pub fn two_state_example() -> RateMatrix {
    RateMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).expect("valid generator")
}
