//! ergokit: numerical tools for the stability analysis of continuous-time
//! Markov processes.
//!
//! The crate has two backends sharing one vocabulary:
//!
//! - [`ctmc`] treats finite-state chains specified by a rate matrix `Q` as an
//!   exact oracle. Semigroups, resolvents, hitting-time functionals, Lyapunov
//!   constructions, skeleton chains, and weighted-norm convergence curves are
//!   all evaluated by linear algebra, so identities can be checked to near
//!   machine precision.
//! - [`diffusion`] estimates the same functionals for SDE models by
//!   Euler-Maruyama simulation: drift-condition checks on grids, Monte Carlo
//!   hitting functionals, exponential-clock Lyapunov estimators, and ergodic
//!   averages with batch-means error bars.
//!
//! Supporting modules: [`measures`] (weight functions, signed measures, and
//! the two weighted norms), [`dsl`] (a small expression language for defining
//! scalar fields in config files), [`analysis`] (experiment suites producing
//! structured pass/fail reports), and [`cli`] (config ingestion and the
//! `ergokit` command-line entry points).
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --example two_state_chain
//! cargo run --example ou_diffusion
//! ```

pub mod analysis;
pub mod cli;
pub mod ctmc;
pub mod diffusion;
pub mod dsl;
pub mod measures;
pub mod numeric;

pub use ctmc::{DriftCertificate, RateMatrix, TransitionKernel};
pub use diffusion::{DiffusionModel, Region, ScalarField};
pub use dsl::Expr;
pub use measures::{FiniteStateSpace, SignedMeasure, StateSet, Weight};
