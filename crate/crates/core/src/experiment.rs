//! Experiment configuration, problem construction and run summaries.
//!
//! Configurations are plain `key = value` files; every key matches a
//! command-line flag name without the leading dashes (`algo`, `batch-frac`,
//! ...). Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::baselines::{run_baseline, Algorithm, BaselineConfig, SampleGrowth};
use crate::data::{normalize_labels, read_libsvm_file, synth_quadratic, Dataset, LabelMap};
use crate::error::{ConfigError, DataError, ObjectiveError, RunError};
use crate::linalg::smallest_eigenvalue;
use crate::objective::{FiniteSum, LogisticProblem, Order, Regularizer};
use crate::singcubic::{singcubic_run, OptimizerConfig, Sampling};
use crate::trace::{emit_csv, RunResult, Termination};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Logistic loss with an L2 penalty.
    Convex,
    /// Logistic loss with the rational penalty `α Σ βw²/(1 + βw²)`.
    Nonconvex,
    /// Synthetic `½‖x − a_i‖²` finite sum.
    Quadratic,
}

impl FromStr for ProblemKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "convex" => Ok(Self::Convex),
            "nonconvex" => Ok(Self::Nonconvex),
            "quadratic" => Ok(Self::Quadratic),
            _ => Err(ConfigError::Invalid(format!("unknown problem {s:?} (expected convex, nonconvex or quadratic)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    SingCubic,
    Scr,
    Tr,
    Sgd,
    Saga,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::SingCubic => "singcubic",
            Algo::Scr => "scr",
            Algo::Tr => "tr",
            Algo::Sgd => "sgd",
            Algo::Saga => "saga",
        }
    }
}

impl FromStr for Algo {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "singcubic" => Ok(Self::SingCubic),
            "scr" => Ok(Self::Scr),
            "tr" => Ok(Self::Tr),
            "sgd" => Ok(Self::Sgd),
            "saga" => Ok(Self::Saga),
            _ => Err(ConfigError::Invalid(format!("unknown algorithm {s:?} (expected singcubic, scr, tr, sgd or saga)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    /// Label mapping; inferred from the label values when absent.
    pub labels: Option<LabelMap>,
    pub dim: Option<usize>,
    pub scale_features: bool,
    pub problem: ProblemKind,
    pub alpha: f64,
    pub beta: f64,
    /// Size of the synthetic quadratic problem.
    pub n: usize,
    pub p: usize,
    pub algo: Algo,
    pub epochs: f64,
    pub batch_frac: Option<f64>,
    pub sigma0: Option<f64>,
    pub learning_rate: Option<f64>,
    pub sample_frac: Option<f64>,
    pub sample_growth: Option<f64>,
    pub sampling: Sampling,
    pub eps_tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Write wall-clock times into the trace.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            labels: None,
            dim: None,
            scale_features: false,
            problem: ProblemKind::Convex,
            alpha: 1e-3,
            beta: 1.0,
            n: 50,
            p: 10,
            algo: Algo::SingCubic,
            epochs: 10.0,
            batch_frac: None,
            sigma0: None,
            learning_rate: None,
            sample_frac: None,
            sample_growth: None,
            sampling: Sampling::Cyclic,
            eps_tol: None,
            seed: 1,
            out: None,
            timing: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Invalid(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::Invalid(format!("{key}: expected a boolean, found {value:?}"))),
    }
}

impl ExperimentConfig {
    /// Applies one setting; keys use the command-line spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key.trim() {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "format" if value == "libsvm" => {}
            "format" => return Err(ConfigError::Invalid(format!("unsupported format {value:?}"))),
            "labels" => self.labels = Some(LabelMap::parse(value).map_err(ConfigError::Invalid)?),
            "dim" => self.dim = Some(parse_num("dim", value)?),
            "scale-features" => self.scale_features = parse_bool("scale-features", value)?,
            "problem" => self.problem = value.parse()?,
            "alpha" => self.alpha = parse_num("alpha", value)?,
            "beta" => self.beta = parse_num("beta", value)?,
            "n" => self.n = parse_num("n", value)?,
            "p" => self.p = parse_num("p", value)?,
            "algo" => self.algo = value.parse()?,
            "epochs" => self.epochs = parse_num("epochs", value)?,
            "batch-frac" => self.batch_frac = Some(parse_num("batch-frac", value)?),
            "sigma0" => self.sigma0 = Some(parse_num("sigma0", value)?),
            "lr" => self.learning_rate = Some(parse_num("lr", value)?),
            "sample-frac" => self.sample_frac = Some(parse_num("sample-frac", value)?),
            "sample-growth" => self.sample_growth = Some(parse_num("sample-growth", value)?),
            "sampling" => {
                self.sampling = match value {
                    "cyclic" => Sampling::Cyclic,
                    "random" => Sampling::Random,
                    _ => return Err(ConfigError::Invalid(format!("unknown sampling mode {value:?}"))),
                }
            }
            "eps-tol" => self.eps_tol = Some(parse_num("eps-tol", value)?),
            "seed" => self.seed = parse_num("seed", value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "timing" => self.timing = parse_bool("timing", value)?,
            other => return Err(ConfigError::Invalid(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a configuration file.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|ConfigError::Invalid(m)| ConfigError::Invalid(format!("line {}: {m}", i + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        match (&self.dataset, self.problem) {
            (None, ProblemKind::Convex | ProblemKind::Nonconvex) => return bad("a logistic problem needs --dataset".into()),
            (Some(path), _) if !path.exists() => return bad(format!("dataset {} does not exist", path.display())),
            (Some(_), ProblemKind::Quadratic) => return bad("the quadratic problem is synthetic and takes no dataset".into()),
            _ => {}
        }
        if self.problem == ProblemKind::Quadratic && (self.n == 0 || self.p == 0) {
            return bad("n and p must be positive".into());
        }
        if !(self.epochs >= 0.0 && self.epochs.is_finite()) {
            return bad(format!("epoch budget {} must be non-negative", self.epochs));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("alpha and beta must be non-negative".into());
        }
        self.optimizer_config().validate()?;
        self.baseline_config(Algorithm::Sgd).validate()?;
        Ok(())
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let mut c = OptimizerConfig::experiment();
        c.max_epochs = self.epochs;
        c.seed = self.seed;
        c.sampling = self.sampling;
        if let Some(v) = self.batch_frac {
            c.batch_frac = v;
        }
        if let Some(v) = self.sigma0 {
            c.sigma0 = v;
        }
        if let Some(v) = self.eps_tol {
            c.eps_tol = v;
        }
        c
    }

    pub fn baseline_config(&self, algorithm: Algorithm) -> BaselineConfig {
        let mut c = BaselineConfig::new(algorithm);
        c.max_epochs = self.epochs;
        c.seed = self.seed;
        if let Some(v) = self.batch_frac {
            c.batch_frac = v;
        }
        if let Some(v) = self.sigma0 {
            c.sigma0 = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.sample_frac {
            c.grad_sample_frac = v;
            c.hess_sample_frac = v;
        }
        if let Some(r) = self.sample_growth {
            c.growth = SampleGrowth::Geometric(r);
        }
        if let Some(v) = self.eps_tol {
            c.eps_tol = v;
        }
        c
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<RunError> for ExperimentError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => Self::Config(c),
            RunError::Objective(o) => Self::Objective(o),
        }
    }
}

/// Label mapping implied by the observed label values, if unambiguous.
pub fn infer_label_map(ds: &Dataset) -> Option<LabelMap> {
    let within = |allowed: &[f64]| ds.labels().iter().all(|y| allowed.contains(y));
    if within(&[0.0, 1.0]) {
        Some(LabelMap(vec![(0.0, 0.0), (1.0, 1.0)]))
    } else if within(&[-1.0, 1.0]) {
        Some(LabelMap::signed())
    } else if within(&[1.0, 2.0]) {
        Some(LabelMap::one_two())
    } else {
        None
    }
}

/// Loads, relabels and optionally scales the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, ExperimentError> {
    let path = cfg.dataset.as_ref().ok_or_else(|| ConfigError::Invalid("no dataset configured".into()))?;
    let ds = read_libsvm_file(path, cfg.dim)?;
    let map = match &cfg.labels {
        Some(m) => m.clone(),
        None => infer_label_map(&ds)
            .ok_or_else(|| ConfigError::Invalid("labels are not in {0,1}, {-1,1} or {1,2}; pass --labels".into()))?,
    };
    let mut ds = normalize_labels(ds, &map)?;
    if cfg.scale_features {
        ds.scale_max_abs();
    }
    Ok(ds)
}

/// Builds the configured objective.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<Box<dyn FiniteSum>, ExperimentError> {
    Ok(match cfg.problem {
        ProblemKind::Quadratic => Box::new(synth_quadratic(cfg.n, cfg.p, cfg.seed).0),
        ProblemKind::Convex => Box::new(LogisticProblem::new(load_dataset(cfg)?, Regularizer::l2(cfg.alpha))?),
        ProblemKind::Nonconvex => Box::new(LogisticProblem::new(load_dataset(cfg)?, Regularizer::rational(cfg.alpha, cfg.beta))?),
    })
}

/// Runs one algorithm from the origin.
pub fn run_algorithm<F: FiniteSum + ?Sized>(obj: &F, cfg: &ExperimentConfig) -> Result<RunResult, RunError> {
    let x0 = Vector::zeros(obj.dim());
    match cfg.algo {
        Algo::SingCubic => singcubic_run(obj, &x0, &cfg.optimizer_config()),
        Algo::Scr => run_baseline(obj, &x0, &cfg.baseline_config(Algorithm::Scr)),
        Algo::Tr => run_baseline(obj, &x0, &cfg.baseline_config(Algorithm::Tr)),
        Algo::Sgd => run_baseline(obj, &x0, &cfg.baseline_config(Algorithm::Sgd)),
        Algo::Saga => run_baseline(obj, &x0, &cfg.baseline_config(Algorithm::Saga)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algo: Algo,
    pub termination: Termination,
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// Smallest eigenvalue of the full Hessian at the final point.
    pub min_hessian_eigenvalue: f64,
    pub effective_epochs: f64,
    pub wall_time_s: f64,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let termination = match &self.termination {
            Termination::Converged => "converged".to_string(),
            Termination::BudgetExhausted => "budget".to_string(),
            Termination::IterationLimit => "iteration-limit".to_string(),
            Termination::Diverged(why) => format!("diverged ({why})"),
        };
        writeln!(f, "algo = {}", self.algo.name())?;
        writeln!(f, "termination = {termination}")?;
        writeln!(f, "iterations = {}", self.iterations)?;
        writeln!(f, "objective = {:.16e}", self.objective)?;
        writeln!(f, "grad_norm = {:.6e}", self.grad_norm)?;
        writeln!(f, "min_hessian_eigenvalue = {:.6e}", self.min_hessian_eigenvalue)?;
        writeln!(f, "effective_epochs = {:.6}", self.effective_epochs)?;
        write!(f, "wall_time_s = {:.3}", self.wall_time_s)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub run: RunResult,
    pub summary: Summary,
    pub csv: String,
}

/// Builds the problem, runs the algorithm, writes the trace (also for a
/// diverged run) and summarizes the final point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    let obj = build_problem(cfg)?;
    let start = Instant::now();
    let run = run_algorithm(obj.as_ref(), cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let csv = emit_csv(&run.trace, cfg.timing);
    if let Some(path) = &cfg.out {
        std::fs::write(path, &csv).map_err(|source| ExperimentError::Output { path: path.clone(), source })?;
    }
    let (grad_norm, min_eig) = if run.x.iter().all(|v| v.is_finite()) {
        let e = obj.full(&run.x, Order::Hessian)?;
        (e.gradient().norm(), smallest_eigenvalue(e.hessian()))
    } else {
        (f64::NAN, f64::NAN)
    };
    let last = run.trace.last().expect("traces start with the initial point");
    let summary = Summary {
        algo: cfg.algo,
        termination: run.termination.clone(),
        iterations: last.iter,
        objective: last.objective,
        grad_norm,
        min_hessian_eigenvalue: min_eig,
        effective_epochs: last.effective_epochs,
        wall_time_s,
    };
    Ok(ExperimentOutcome { run, summary, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_file() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file_text("# bundle\nproblem = quadratic\nalgo=sgd\n\nepochs = 2.5\nlabels = -1:0,1:1\n").unwrap();
        assert_eq!(cfg.problem, ProblemKind::Quadratic);
        assert_eq!(cfg.algo, Algo::Sgd);
        assert_eq!(cfg.epochs, 2.5);
        assert_eq!(cfg.labels, Some(LabelMap::signed()));
        let err = cfg.apply_file_text("algo = newton\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        assert!(cfg.apply_file_text("no separator").is_err());
        assert!(cfg.set("colour", "red").is_err());
    }

    #[test]
    fn logistic_requires_existing_dataset() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { dataset: Some("/nonexistent/a9a".into()), ..cfg };
        assert!(cfg.validate().unwrap_err().to_string().contains("does not exist"));
    }

    #[test]
    fn quadratic_experiment_converges() {
        let cfg = ExperimentConfig { problem: ProblemKind::Quadratic, n: 30, p: 4, ..ExperimentConfig::default() };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.summary.grad_norm <= 1e-6, "{}", out.summary);
        assert!((out.summary.min_hessian_eigenvalue - 1.0).abs() < 1e-12);
        assert!(out.csv.starts_with(crate::trace::CSV_HEADER));
        assert!(out.summary.to_string().contains("algo = singcubic"));
    }

    #[test]
    fn label_inference() {
        let ds = |labels: Vec<f64>| Dataset::from_rows(vec![vec![]; labels.len()], labels, 1, "t").unwrap();
        assert_eq!(infer_label_map(&ds(vec![-1.0, 1.0])), Some(LabelMap::signed()));
        assert_eq!(infer_label_map(&ds(vec![2.0, 1.0])), Some(LabelMap::one_two()));
        assert_eq!(infer_label_map(&ds(vec![3.0])), None);
    }
}
