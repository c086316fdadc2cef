//! The incremental cubic-regularized Newton loop.
//!
//! The objective is split into batches `B_j` with weights `π_j = |B_j|/n`.
//! For every batch the store keeps a second-order model taken at an anchor
//! `a_j` (the iterate at which the batch was last refreshed):
//!
//! ```text
//! f_j(x) ≈ f^j + g^jᵀ(x − a_j) + ½(x − a_j)ᵀH^j(x − a_j)
//! ```
//!
//! Their weighted sum is a single quadratic in `x`, represented around the
//! current iterate `x_k` by the aggregates `(c, g, H)`. Refreshing one batch
//! changes the aggregates in `O(p²)` time through the running sums
//! `Σπ_j(g^j − v^j)` and `Σπ_j(f^j − u^j + ½w^j)`, where `u^j = g^jᵀa_j`,
//! `v^j = H^j a_j` and `w^j = a_jᵀH^j a_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::make_batches;
use crate::error::{ConfigError, ObjectiveError, RunError};
use crate::objective::{FiniteSum, Order, Subset};
use crate::subproblem::{solve_cubic, SubproblemInput, SubproblemStatus, DEFAULT_EPS_TOL, DEFAULT_MAX_ITERS};
use crate::trace::{Recorder, RunResult, Termination};
use crate::{Matrix, Vector};

/// Order in which batches are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    Cyclic,
    /// Uniformly random batch each iteration.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Acceptance threshold.
    pub eta1: f64,
    /// Threshold above which `σ` is decreased.
    pub eta2: f64,
    /// Increase factor for `σ`.
    pub gamma1: f64,
    /// Decrease factor for `σ`.
    pub gamma2: f64,
    pub sigma0: f64,
    pub sigma_floor: f64,
    /// Stop once the full gradient norm falls to this value.
    pub eps_g: f64,
    /// Batch size as a fraction of `n`, rounded up.
    pub batch_frac: f64,
    pub max_epochs: f64,
    pub max_iters: Option<usize>,
    pub sampling: Sampling,
    pub seed: u64,
    /// Secular-equation tolerance passed to the subproblem solver.
    pub eps_tol: f64,
    pub subproblem_max_iters: usize,
    /// Record the iterate after every iteration in [`RunResult::iterates`].
    pub keep_iterates: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta1: 0.1,
            eta2: 0.9,
            gamma1: 2.0,
            gamma2: 2.0,
            sigma0: 1.0,
            sigma_floor: 1e-16,
            eps_g: 1e-6,
            batch_frac: 0.001,
            max_epochs: 10.0,
            max_iters: None,
            sampling: Sampling::Cyclic,
            seed: 0,
            eps_tol: DEFAULT_EPS_TOL,
            subproblem_max_iters: DEFAULT_MAX_ITERS,
            keep_iterates: false,
        }
    }
}

impl OptimizerConfig {
    /// Settings used for the logistic-regression benchmarks (`σ0 = 0.01`).
    pub fn experiment() -> Self {
        Self { sigma0: 0.01, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return bad("thresholds must satisfy 0 < eta1 <= eta2 < 1");
        }
        if !(self.gamma1 > 1.0 && self.gamma2 > 1.0) {
            return bad("sigma multipliers must exceed 1");
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) || !(self.sigma_floor > 0.0) {
            return bad("sigma0 and sigma_floor must be positive");
        }
        if !(self.batch_frac > 0.0 && self.batch_frac <= 1.0) {
            return bad("batch_frac must lie in (0, 1]");
        }
        if !(self.max_epochs >= 0.0) || !(self.eps_g >= 0.0) || !(self.eps_tol > 0.0) {
            return bad("max_epochs, eps_g and eps_tol must be non-negative");
        }
        Ok(())
    }
}

/// Stored second-order model of one batch.
#[derive(Debug, Clone)]
pub struct ComponentModel {
    pub indices: Vec<usize>,
    /// `|B_j| / n`.
    pub weight: f64,
    pub value: f64,
    pub grad: Vector,
    pub hess: Matrix,
    pub u: f64,
    pub v: Vector,
    pub w: f64,
    pub anchor: Vector,
}

impl ComponentModel {
    fn evaluate<F: FiniteSum + ?Sized>(obj: &F, indices: Vec<usize>, weight: f64, x: &Vector) -> Result<Self, ObjectiveError> {
        let e = obj.evaluate(Subset::Indices(&indices), x, Order::Hessian)?;
        let grad = e.gradient.expect("gradient requested");
        let hess = e.hessian.expect("Hessian requested");
        let v = &hess * x;
        Ok(Self { u: grad.dot(x), w: x.dot(&v), v, value: e.value, grad, hess, anchor: x.clone(), indices, weight })
    }
}

/// Per-batch models and the aggregate model around the current iterate.
#[derive(Debug, Clone)]
pub struct ModelStore {
    components: Vec<ComponentModel>,
    x: Vector,
    hess: Matrix,
    grad: Vector,
    c: f64,
    /// `Σπ_j(g^j − v^j)`.
    gv_sum: Vector,
    /// `Σπ_j(f^j − u^j + ½w^j)`.
    fuw_sum: f64,
    cursor: usize,
}

/// Builds a store with batches of size `⌈batch_frac·n⌉` evaluated at `x0`.
pub fn init_store<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, batch_frac: f64) -> Result<ModelStore, RunError> {
    let n = obj.n_components();
    if !(batch_frac > 0.0 && batch_frac <= 1.0) {
        return Err(ConfigError::Invalid(format!("batch fraction {batch_frac} gives a batch size outside 1..={n}")).into());
    }
    Ok(ModelStore::new(obj, x0, make_batches(n, batch_frac, None))?)
}

impl ModelStore {
    /// Evaluates every batch at `x0`. Batches must partition the components.
    pub fn new<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, batches: Vec<Vec<usize>>) -> Result<Self, ObjectiveError> {
        let n = obj.n_components() as f64;
        let p = x0.len();
        let components = batches
            .into_iter()
            .map(|b| {
                let weight = b.len() as f64 / n;
                ComponentModel::evaluate(obj, b, weight, x0)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut store = Self {
            components,
            x: x0.clone(),
            hess: Matrix::zeros(p, p),
            grad: Vector::zeros(p),
            c: 0.0,
            gv_sum: Vector::zeros(p),
            fuw_sum: 0.0,
            cursor: 0,
        };
        for comp in &store.components {
            store.hess.zip_apply(&comp.hess, |h, c| *h += comp.weight * c);
            store.gv_sum.axpy(comp.weight, &(&comp.grad - &comp.v), 1.0);
            store.fuw_sum += comp.weight * (comp.value - comp.u + 0.5 * comp.w);
        }
        store.update_linear_terms();
        Ok(store)
    }

    fn update_linear_terms(&mut self) {
        let hx = &self.hess * &self.x;
        self.grad = &self.gv_sum + &hx;
        self.c = self.grad.dot(&self.x) - 0.5 * self.x.dot(&hx) + self.fuw_sum;
    }

    pub fn n_batches(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> &ComponentModel {
        &self.components[j]
    }

    /// Current iterate `x_k`.
    pub fn point(&self) -> &Vector {
        &self.x
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hess
    }

    pub fn gradient(&self) -> &Vector {
        &self.grad
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Next batch in cyclic order.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// `c + gᵀd + ½dᵀHd + (σ/3)‖d‖³`.
    pub fn model_value(&self, d: &Vector, sigma: f64) -> f64 {
        let dn = d.norm();
        self.c + self.grad.dot(d) + 0.5 * d.dot(&(&self.hess * d)) + sigma / 3.0 * dn * dn * dn
    }

    /// Re-evaluates batch `j` at `x_new`, which becomes the current iterate.
    pub fn refresh_component<F: FiniteSum + ?Sized>(&mut self, obj: &F, j: usize, x_new: &Vector) -> Result<(), ObjectiveError> {
        let old = &self.components[j];
        let new = ComponentModel::evaluate(obj, old.indices.clone(), old.weight, x_new)?;
        let pi = old.weight;
        self.hess.zip_zip_apply(&new.hess, &old.hess, |h, a, b| *h += pi * (a - b));
        self.gv_sum.axpy(pi, &((&new.grad - &new.v) - (&old.grad - &old.v)), 1.0);
        self.fuw_sum += pi * ((new.value - new.u + 0.5 * new.w) - (old.value - old.u + 0.5 * old.w));
        self.components[j] = new;
        self.x.copy_from(x_new);
        self.cursor = (j + 1) % self.components.len();
        self.update_linear_terms();
        Ok(())
    }

    /// Recomputes `(H, g, c)` from the anchors directly, bypassing the running sums.
    pub fn rebuild_aggregates(&self) -> (Matrix, Vector, f64) {
        let p = self.x.len();
        let mut h = Matrix::zeros(p, p);
        let mut g = Vector::zeros(p);
        let mut c = 0.0;
        for comp in &self.components {
            let s = &self.x - &comp.anchor;
            let hs = &comp.hess * &s;
            h.zip_apply(&comp.hess, |h, c| *h += comp.weight * c);
            g.axpy(comp.weight, &(&comp.grad + &hs), 1.0);
            c += comp.weight * (comp.value + comp.grad.dot(&s) + 0.5 * s.dot(&hs));
        }
        (h, g, c)
    }

    /// Weighted sum of the stored quadratic batch models at an arbitrary `x`.
    pub fn surrogate_value(&self, x: &Vector) -> f64 {
        self.components
            .iter()
            .map(|comp| {
                let s = x - &comp.anchor;
                comp.weight * (comp.value + comp.grad.dot(&s) + 0.5 * s.dot(&(&comp.hess * &s)))
            })
            .sum()
    }
}

/// Acceptance ratio of a trial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    Ratio(f64),
    /// The predicted decrease was too small to form a ratio.
    Reject,
}

impl Rho {
    /// Numeric value for traces; [`Rho::Reject`] maps to `-inf`.
    pub fn as_f64(self) -> f64 {
        match self {
            Rho::Ratio(r) => r,
            Rho::Reject => f64::NEG_INFINITY,
        }
    }

    pub fn accepts(self, eta1: f64) -> bool {
        matches!(self, Rho::Ratio(r) if r >= eta1)
    }
}

/// `(F_old − F_new) / (F_old − m)`.
pub fn compute_rho(f_old: f64, f_new: f64, model_at_step: f64) -> Rho {
    compute_rho_against(f_old, f_new, model_at_step, f_old)
}

/// `(F_old − F_new) / (reference − m)`, with the predicted decrease measured
/// from `reference`.
pub fn compute_rho_against(f_old: f64, f_new: f64, model_at_step: f64, reference: f64) -> Rho {
    let denom = reference - model_at_step;
    if !(denom > 1e-14 * f_old.abs().max(1.0)) {
        return Rho::Reject;
    }
    Rho::Ratio((f_old - f_new) / denom)
}

/// Largest cubic weight the update rule will produce.
pub const SIGMA_CEILING: f64 = 1.3407807929942596e154;

pub fn update_sigma(rho: Rho, sigma: f64, cfg: &OptimizerConfig) -> f64 {
    let r = rho.as_f64();
    if r >= cfg.eta2 {
        (sigma / cfg.gamma2).max(cfg.sigma_floor)
    } else if r < cfg.eta1 {
        (cfg.gamma1 * sigma).min(SIGMA_CEILING.max(sigma))
    } else {
        sigma
    }
}

/// Runs the optimizer from `x0` until the gradient test, the epoch budget or
/// the iteration limit stops it.
///
/// The full gradient is computed at the start and after every `n_batches`
/// iterations; its cost is not charged to the epoch count.
pub fn singcubic_run<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, cfg: &OptimizerConfig) -> Result<RunResult, RunError> {
    singcubic_run_observed(obj, x0, cfg, |_, _| {})
}

/// [`singcubic_run`] calling `observer(k, store)` after the refresh of every iteration `k`.
pub fn singcubic_run_observed<F, O>(obj: &F, x0: &Vector, cfg: &OptimizerConfig, mut observer: O) -> Result<RunResult, RunError>
where
    F: FiniteSum + ?Sized,
    O: FnMut(usize, &ModelStore),
{
    cfg.validate()?;
    let n = obj.n_components();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(n);
    let mut store = init_store(obj, x0, cfg.batch_frac)?;
    rec.charge(n, n);
    let nb = store.n_batches();

    let mut x = x0.clone();
    let mut f = obj.value(Subset::All, &x)?;
    let mut sigma = cfg.sigma0;
    let mut lambda = 0.0;
    let mut grad_norm = Some(obj.full(&x, Order::Gradient)?.gradient().norm());
    let mut iterates = Vec::new();
    rec.push(0, f, grad_norm, Some(sigma), None, true);

    let mut k = 0usize;
    let termination = loop {
        if !f.is_finite() {
            break Termination::Diverged(format!("objective is {f} at iteration {k}"));
        }
        if grad_norm.is_some_and(|g| g <= cfg.eps_g) {
            break Termination::Converged;
        }
        if rec.epochs() >= cfg.max_epochs {
            break Termination::BudgetExhausted;
        }
        if cfg.max_iters.is_some_and(|m| k >= m) {
            break Termination::IterationLimit;
        }
        k += 1;

        let input = SubproblemInput::new(store.gradient(), store.hessian(), sigma)
            .with_warm_start(lambda)
            .with_tolerance(cfg.eps_tol)
            .with_max_iters(cfg.subproblem_max_iters);
        let sol = solve_cubic(&input, &mut rng);
        let rho = if sol.status == SubproblemStatus::MaxIters {
            Rho::Reject
        } else {
            if sol.d.iter().any(|v| !v.is_finite()) {
                break Termination::Diverged(format!("non-finite step at iteration {k}"));
            }
            lambda = sol.lambda;
            let m = store.model_value(&sol.d, sigma);
            let trial = &x + &sol.d;
            let f_trial = obj.value(Subset::All, &trial)?;
            if !f_trial.is_finite() {
                break Termination::Diverged(format!("objective is {f_trial} at the trial point of iteration {k}"));
            }
            let rho = compute_rho_against(f, f_trial, m, store.constant());
            if rho.accepts(cfg.eta1) {
                x = trial;
                f = f_trial;
            }
            rho
        };
        let accepted = rho.accepts(cfg.eta1);
        let sigma_used = sigma;
        sigma = update_sigma(rho, sigma, cfg);

        let j = match cfg.sampling {
            Sampling::Cyclic => store.cursor(),
            Sampling::Random => rng.random_range(0..nb),
        };
        store.refresh_component(obj, j, &x)?;
        let b = store.component(j).indices.len();
        rec.charge(b, b);
        observer(k, &store);

        grad_norm = if k % nb == 0 { Some(obj.full(&x, Order::Gradient)?.gradient().norm()) } else { None };
        rec.push(k, f, grad_norm, Some(sigma_used), Some(rho.as_f64()), accepted);
        if cfg.keep_iterates {
            iterates.push(x.clone());
        }
    };
    Ok(RunResult { x, trace: rec.trace, termination, iterates })
}
