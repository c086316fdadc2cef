//! Incremental cubic-regularized Newton optimization for finite sums.
//!
//! The crate minimizes objectives of the form `F(x) = Σ_j π_j f_j(x)` where
//! each component `f_j` is cheap to differentiate twice. The main optimizer,
//! [`singcubic::singcubic_run`], keeps one second-order model per component
//! and refreshes a single component per iteration, so the per-iteration cost
//! does not depend on the number of components. Every step minimizes a
//! cubic-regularized quadratic model with the exact solver in [`subproblem`].
//!
//! Baseline optimizers (sub-sampled cubic regularization, trust-region
//! Newton, SGD and SAGA) live in [`baselines`] and share the trace format in
//! [`trace`], so runs can be compared on a common effective-epoch axis.
//!
//! ```
//! use nalgebra::DVector;
//! use singcubic::data::synth_quadratic;
//! use singcubic::singcubic::{singcubic_run, OptimizerConfig};
//!
//! let (objective, minimizer) = synth_quadratic(20, 3, 7);
//! let cfg = OptimizerConfig { batch_frac: 0.1, max_epochs: 10.0, ..OptimizerConfig::default() };
//! let run = singcubic_run(&objective, &DVector::zeros(3), &cfg).unwrap();
//! assert!((&run.x - &minimizer).norm() < 1e-6);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod objective;
pub mod singcubic;
pub mod subproblem;
pub mod trace;
pub mod trust_region;

pub use error::{ConfigError, DataError, ObjectiveError, RunError, TraceError};
pub use objective::{Evaluation, FiniteSum, Order};
pub use subproblem::{solve_cubic, SubproblemInput, SubproblemResult, SubproblemStatus};
pub use trace::{IterationTrace, RunResult, Termination, TraceRow};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for Hessians and model aggregates.
pub type Matrix = nalgebra::DMatrix<f64>;
