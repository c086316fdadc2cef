//! Reference optimizers: SGD, SAGA, sub-sampled cubic regularization (SCR)
//! and trust-region Newton (TR).
//!
//! All runners charge one `1/n` epoch per component gradient and per
//! component Hessian evaluation, and emit the same trace rows as
//! [`crate::singcubic::singcubic_run`]. Full objective values and the
//! periodic full-gradient checks are diagnostics and are not charged.
//!
//! For TR the `sigma` trace column holds the trust-region radius.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{batch_size, make_batches};
use crate::error::{ConfigError, ObjectiveError, RunError};
use crate::objective::{FiniteSum, Order, Subset};
use crate::singcubic::{compute_rho, update_sigma, OptimizerConfig};
use crate::subproblem::{cubic_model, solve_cubic, SubproblemInput, SubproblemStatus, DEFAULT_EPS_TOL, DEFAULT_MAX_ITERS};
use crate::trace::{Recorder, RunResult, Termination};
use crate::trust_region::{quadratic_model, solve_trust_region};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Sgd,
    Saga,
    Scr,
    Tr,
}

/// How SCR sample sizes evolve over iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleGrowth {
    Constant,
    /// Multiply both sample sizes by the factor each iteration, capped at `n`.
    Geometric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub algorithm: Algorithm,
    /// Step size for SGD and SAGA.
    pub learning_rate: f64,
    /// Batch fraction for SGD and SAGA.
    pub batch_frac: f64,
    pub sigma0: f64,
    pub sigma_floor: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Multiplier applied to `σ` (or dividing the radius) after a rejection.
    pub increase: f64,
    /// Divisor applied to `σ` (or multiplying the radius) after a very successful step.
    pub decrease: f64,
    pub initial_radius: f64,
    /// SCR gradient sample fraction.
    pub grad_sample_frac: f64,
    /// SCR Hessian sample fraction.
    pub hess_sample_frac: f64,
    pub growth: SampleGrowth,
    pub eps_g: f64,
    pub max_epochs: f64,
    pub max_iters: Option<usize>,
    pub seed: u64,
    pub eps_tol: f64,
    pub subproblem_max_iters: usize,
    pub keep_iterates: bool,
}

impl BaselineConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            learning_rate: if algorithm == Algorithm::Saga { 0.01 } else { 0.1 },
            batch_frac: 0.001,
            sigma0: 0.01,
            sigma_floor: 1e-16,
            eta1: 0.1,
            eta2: 0.9,
            increase: 2.0,
            decrease: 2.0,
            initial_radius: 1.0,
            grad_sample_frac: 0.05,
            hess_sample_frac: 0.05,
            growth: SampleGrowth::Constant,
            eps_g: 1e-6,
            max_epochs: 10.0,
            max_iters: None,
            seed: 0,
            eps_tol: DEFAULT_EPS_TOL,
            subproblem_max_iters: DEFAULT_MAX_ITERS,
            keep_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let frac_ok = |f: f64| f > 0.0 && f <= 1.0;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !frac_ok(self.batch_frac) || !frac_ok(self.grad_sample_frac) || !frac_ok(self.hess_sample_frac) {
            return bad("batch and sample fractions must lie in (0, 1]");
        }
        if !(self.sigma0 > 0.0 && self.sigma_floor > 0.0 && self.initial_radius > 0.0) {
            return bad("sigma0, sigma_floor and initial_radius must be positive");
        }
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return bad("thresholds must satisfy 0 < eta1 <= eta2 < 1");
        }
        if !(self.increase > 1.0 && self.decrease > 1.0) {
            return bad("increase and decrease factors must exceed 1");
        }
        if let SampleGrowth::Geometric(r) = self.growth {
            if !(r >= 1.0) {
                return bad("sample growth factor must be at least 1");
            }
        }
        if !(self.max_epochs >= 0.0 && self.eps_g >= 0.0 && self.eps_tol > 0.0) {
            return bad("max_epochs, eps_g and eps_tol must be non-negative");
        }
        Ok(())
    }

    fn sigma_rule(&self) -> OptimizerConfig {
        OptimizerConfig {
            eta1: self.eta1,
            eta2: self.eta2,
            gamma1: self.increase,
            gamma2: self.decrease,
            sigma_floor: self.sigma_floor,
            ..OptimizerConfig::default()
        }
    }

    fn stop(&self, rec: &Recorder, grad_norm: Option<f64>, k: usize) -> Option<Termination> {
        if grad_norm.is_some_and(|g| g <= self.eps_g) {
            Some(Termination::Converged)
        } else if rec.epochs() >= self.max_epochs {
            Some(Termination::BudgetExhausted)
        } else if self.max_iters.is_some_and(|m| k >= m) {
            Some(Termination::IterationLimit)
        } else {
            None
        }
    }
}

/// Dispatches on [`BaselineConfig::algorithm`].
pub fn run_baseline<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, cfg: &BaselineConfig) -> Result<RunResult, RunError> {
    match cfg.algorithm {
        Algorithm::Sgd => sgd_run(obj, x0, cfg),
        Algorithm::Saga => saga_run(obj, x0, cfg),
        Algorithm::Scr => scr_run(obj, x0, cfg),
        Algorithm::Tr => tr_run(obj, x0, cfg),
    }
}

fn full_grad_norm<F: FiniteSum + ?Sized>(obj: &F, x: &Vector) -> Result<f64, ObjectiveError> {
    Ok(obj.full(x, Order::Gradient)?.gradient().norm())
}

fn non_finite(x: &Vector) -> bool {
    x.iter().any(|v| !v.is_finite())
}

/// Minibatch SGD with batches drawn uniformly with replacement.
pub fn sgd_run<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, cfg: &BaselineConfig) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let n = obj.n_components();
    let b = batch_size(n, cfg.batch_frac);
    let check_every = n.div_ceil(b);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(n);
    let mut x = x0.clone();
    let mut grad_norm = Some(full_grad_norm(obj, &x)?);
    let mut iterates = Vec::new();
    rec.push(0, obj.value(Subset::All, &x)?, grad_norm, None, None, true);
    let mut batch = vec![0usize; b];
    let mut k = 0;
    let termination = loop {
        if let Some(t) = cfg.stop(&rec, grad_norm, k) {
            break t;
        }
        k += 1;
        batch.iter_mut().for_each(|i| *i = rng.random_range(0..n));
        let g = obj.evaluate(Subset::Indices(&batch), &x, Order::Gradient)?.gradient.expect("gradient requested");
        rec.charge(b, 0);
        x.axpy(-cfg.learning_rate, &g, 1.0);
        if non_finite(&x) {
            break Termination::Diverged(format!("non-finite iterate at iteration {k}"));
        }
        let f = obj.value(Subset::All, &x)?;
        if !f.is_finite() {
            break Termination::Diverged(format!("objective is {f} at iteration {k}"));
        }
        grad_norm = if k % check_every == 0 { Some(full_grad_norm(obj, &x)?) } else { None };
        rec.push(k, f, grad_norm, None, None, true);
        if cfg.keep_iterates {
            iterates.push(x.clone());
        }
    };
    Ok(RunResult { x, trace: rec.trace, termination, iterates })
}

/// Gradient table for SAGA over a fixed batch partition.
#[derive(Debug, Clone)]
pub struct SagaState {
    batches: Vec<Vec<usize>>,
    weights: Vec<f64>,
    /// Batch owning each component index.
    owner: Vec<usize>,
    table: Vec<Vector>,
    mean: Vector,
    x: Vector,
    rate: f64,
}

impl SagaState {
    /// Fills the table with batch gradients at `x0`.
    pub fn new<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, batches: Vec<Vec<usize>>, rate: f64) -> Result<Self, ObjectiveError> {
        let n = obj.n_components();
        let mut owner = vec![0; n];
        let mut weights = Vec::with_capacity(batches.len());
        let mut table = Vec::with_capacity(batches.len());
        let mut mean = Vector::zeros(x0.len());
        for (j, b) in batches.iter().enumerate() {
            b.iter().for_each(|&i| owner[i] = j);
            let g = obj.evaluate(Subset::Indices(b), x0, Order::Gradient)?.gradient.expect("gradient requested");
            let w = b.len() as f64 / n as f64;
            mean.axpy(w, &g, 1.0);
            weights.push(w);
            table.push(g);
        }
        Ok(Self { batches, weights, owner, table, mean, x: x0.clone(), rate })
    }

    pub fn point(&self) -> &Vector {
        &self.x
    }

    pub fn table_mean(&self) -> &Vector {
        &self.mean
    }

    pub fn batch_len(&self, j: usize) -> usize {
        self.batches[j].len()
    }

    /// Batch containing a uniformly drawn component, so batch `j` has probability `π_j`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.owner[rng.random_range(0..self.owner.len())]
    }

    /// `x ← x − γ(∇f_j(x) − table_j + mean)`, then `table_j ← ∇f_j(x)` at the old `x`.
    pub fn step<F: FiniteSum + ?Sized>(&mut self, obj: &F, j: usize) -> Result<(), ObjectiveError> {
        let g = obj.evaluate(Subset::Indices(&self.batches[j]), &self.x, Order::Gradient)?.gradient.expect("gradient requested");
        let diff = &g - &self.table[j];
        self.x.axpy(-self.rate, &(&diff + &self.mean), 1.0);
        self.mean.axpy(self.weights[j], &diff, 1.0);
        self.table[j] = g;
        Ok(())
    }

    /// Largest deviation of the maintained mean from a fresh weighted average of the table.
    pub fn table_mean_error(&self) -> f64 {
        let mut fresh = Vector::zeros(self.mean.len());
        for (w, g) in self.weights.iter().zip(&self.table) {
            fresh.axpy(*w, g, 1.0);
        }
        (&fresh - &self.mean).amax()
    }
}

pub fn saga_run<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, cfg: &BaselineConfig) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let n = obj.n_components();
    let batches = make_batches(n, cfg.batch_frac, None);
    let check_every = batches.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(n);
    let mut state = SagaState::new(obj, x0, batches, cfg.learning_rate)?;
    rec.charge(n, 0);
    let mut grad_norm = Some(full_grad_norm(obj, x0)?);
    let mut iterates = Vec::new();
    rec.push(0, obj.value(Subset::All, x0)?, grad_norm, None, None, true);
    let mut k = 0;
    let termination = loop {
        if let Some(t) = cfg.stop(&rec, grad_norm, k) {
            break t;
        }
        k += 1;
        let j = state.sample(&mut rng);
        state.step(obj, j)?;
        rec.charge(state.batch_len(j), 0);
        let x = state.point();
        if non_finite(x) {
            break Termination::Diverged(format!("non-finite iterate at iteration {k}"));
        }
        let f = obj.value(Subset::All, x)?;
        if !f.is_finite() {
            break Termination::Diverged(format!("objective is {f} at iteration {k}"));
        }
        grad_norm = if k % check_every == 0 { Some(full_grad_norm(obj, x)?) } else { None };
        rec.push(k, f, grad_norm, None, None, true);
        if cfg.keep_iterates {
            iterates.push(x.clone());
        }
    };
    Ok(RunResult { x: state.x, trace: rec.trace, termination, iterates })
}

fn sample_size(n: usize, frac: f64, growth: SampleGrowth, k: usize) -> usize {
    let scale = match growth {
        SampleGrowth::Constant => 1.0,
        SampleGrowth::Geometric(r) => r.powi(k.min(i32::MAX as usize) as i32),
    };
    batch_size(n, (frac * scale).min(1.0))
}

fn subset(ix: &Option<Vec<usize>>) -> Subset<'_> {
    match ix {
        Some(v) => Subset::Indices(v),
        None => Subset::All,
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, n: usize, size: usize) -> Option<Vec<usize>> {
    (size < n).then(|| {
        let mut ix = index::sample(rng, n, size).into_vec();
        ix.sort_unstable();
        ix
    })
}

/// Sub-sampled cubic regularization. With both sample fractions equal to 1 it
/// is the adaptive cubic-regularized Newton method and draws no random samples.
pub fn scr_run<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, cfg: &BaselineConfig) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let n = obj.n_components();
    let rule = cfg.sigma_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(n);
    let mut x = x0.clone();
    let mut f = obj.value(Subset::All, &x)?;
    let mut sigma = cfg.sigma0;
    let mut lambda = 0.0;
    let mut grad_norm = Some(full_grad_norm(obj, &x)?);
    let mut iterates = Vec::new();
    rec.push(0, f, grad_norm, Some(sigma), None, true);
    let mut k = 0;
    let termination = loop {
        if let Some(t) = cfg.stop(&rec, grad_norm, k) {
            break t;
        }
        let sg = sample_size(n, cfg.grad_sample_frac, cfg.growth, k);
        let sh = sample_size(n, cfg.hess_sample_frac, cfg.growth, k);
        k += 1;
        let gi = draw(&mut rng, n, sg);
        let hi = draw(&mut rng, n, sh);
        let (g, h) = if gi.is_none() && hi.is_none() {
            let e = obj.evaluate(Subset::All, &x, Order::Hessian)?;
            (e.gradient.expect("gradient requested"), e.hessian.expect("Hessian requested"))
        } else {
            let g = obj.evaluate(subset(&gi), &x, Order::Gradient)?.gradient.expect("gradient requested");
            let h = obj.evaluate(subset(&hi), &x, Order::Hessian)?.hessian.expect("Hessian requested");
            (g, h)
        };
        rec.charge(sg, sh);

        let input = SubproblemInput::new(&g, &h, sigma)
            .with_warm_start(lambda)
            .with_tolerance(cfg.eps_tol)
            .with_max_iters(cfg.subproblem_max_iters);
        let sol = solve_cubic(&input, &mut rng);
        let rho = if sol.status == SubproblemStatus::MaxIters {
            crate::singcubic::Rho::Reject
        } else {
            if non_finite(&sol.d) {
                break Termination::Diverged(format!("non-finite step at iteration {k}"));
            }
            lambda = sol.lambda;
            let m = f + cubic_model(&g, &h, sigma, &sol.d);
            let trial = &x + &sol.d;
            let f_trial = obj.value(Subset::All, &trial)?;
            if !f_trial.is_finite() {
                break Termination::Diverged(format!("objective is {f_trial} at the trial point of iteration {k}"));
            }
            let rho = compute_rho(f, f_trial, m);
            if rho.accepts(cfg.eta1) {
                x = trial;
                f = f_trial;
            }
            rho
        };
        let accepted = rho.accepts(cfg.eta1);
        let sigma_used = sigma;
        sigma = update_sigma(rho, sigma, &rule);
        let check_every = n.div_ceil(sg);
        grad_norm = if k % check_every == 0 { Some(full_grad_norm(obj, &x)?) } else { None };
        rec.push(k, f, grad_norm, Some(sigma_used), Some(rho.as_f64()), accepted);
        if cfg.keep_iterates {
            iterates.push(x.clone());
        }
    };
    Ok(RunResult { x, trace: rec.trace, termination, iterates })
}

/// Trust-region Newton with the full gradient and Hessian. The radius doubles
/// when `ρ ≥ η2` and halves when `ρ < η1`.
pub fn tr_run<F: FiniteSum + ?Sized>(obj: &F, x0: &Vector, cfg: &BaselineConfig) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let n = obj.n_components();
    let mut rec = Recorder::new(n);
    let mut x = x0.clone();
    let mut radius = cfg.initial_radius;
    let mut e = obj.full(&x, Order::Hessian)?;
    rec.charge(n, n);
    let mut grad_norm = Some(e.gradient().norm());
    let mut iterates = Vec::new();
    rec.push(0, e.value, grad_norm, Some(radius), None, true);
    let mut k = 0;
    let termination = loop {
        if let Some(t) = cfg.stop(&rec, grad_norm, k) {
            break t;
        }
        if !(radius > 0.0 && radius.is_finite()) {
            break Termination::Diverged(format!("trust-region radius became {radius}"));
        }
        k += 1;
        let step = solve_trust_region(e.gradient(), e.hessian(), radius, cfg.subproblem_max_iters);
        if non_finite(&step.d) {
            break Termination::Diverged(format!("non-finite step at iteration {k}"));
        }
        let trial = &x + &step.d;
        let f_trial = obj.value(Subset::All, &trial)?;
        if !f_trial.is_finite() {
            break Termination::Diverged(format!("objective is {f_trial} at the trial point of iteration {k}"));
        }
        let rho = compute_rho(e.value, f_trial, e.value + quadratic_model(e.gradient(), e.hessian(), &step.d));
        let accepted = rho.accepts(cfg.eta1);
        let radius_used = radius;
        if rho.as_f64() >= cfg.eta2 {
            radius *= cfg.decrease;
        } else if !accepted {
            radius /= cfg.increase;
        }
        grad_norm = None;
        if accepted {
            x = trial;
            e = obj.full(&x, Order::Hessian)?;
            rec.charge(n, n);
            grad_norm = Some(e.gradient().norm());
        }
        rec.push(k, e.value, grad_norm, Some(radius_used), Some(rho.as_f64()), accepted);
        if cfg.keep_iterates {
            iterates.push(x.clone());
        }
    };
    Ok(RunResult { x, trace: rec.trace, termination, iterates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_binary_classification, synth_quadratic};
    use crate::objective::{LogisticProblem, QuadraticSum, Regularizer};
    use crate::singcubic::singcubic_run;
    use nalgebra::dvector;

    fn one_dim(centers: &[f64]) -> QuadraticSum {
        QuadraticSum::from_centers(&centers.iter().map(|&a| dvector![a]).collect::<Vec<_>>())
    }

    fn logistic() -> LogisticProblem {
        LogisticProblem::new(synth_binary_classification(200, 8, 3, 5), Regularizer::l2(1e-3)).unwrap()
    }

    #[test]
    fn sgd_single_step() {
        let obj = one_dim(&[0.0]);
        let cfg = BaselineConfig { batch_frac: 1.0, max_iters: Some(1), ..BaselineConfig::new(Algorithm::Sgd) };
        let run = sgd_run(&obj, &dvector![1.0], &cfg).unwrap();
        assert!((run.x[0] - 0.9).abs() < 1e-15);
        assert_eq!(run.termination, Termination::IterationLimit);
    }

    #[test]
    fn sgd_fixed_point() {
        let obj = one_dim(&[2.0, 2.0]);
        let cfg = BaselineConfig { batch_frac: 0.5, max_iters: Some(3), ..BaselineConfig::new(Algorithm::Sgd) };
        let run = sgd_run(&obj, &dvector![2.0], &cfg).unwrap();
        assert_eq!(run.x[0], 2.0);
    }

    #[test]
    fn sgd_distance_shrinks_per_epoch() {
        let (obj, xstar) = synth_quadratic(100, 4, 2);
        let cfg = BaselineConfig {
            batch_frac: 0.1,
            max_epochs: 10.0,
            keep_iterates: true,
            seed: 4,
            ..BaselineConfig::new(Algorithm::Sgd)
        };
        let run = sgd_run(&obj, &Vector::from_element(4, 5.0), &cfg).unwrap();
        let dist: Vec<f64> = run.iterates.iter().step_by(10).map(|x| (x - &xstar).norm()).take(5).collect();
        assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
    }

    #[test]
    fn saga_single_component_is_gradient_descent() {
        let obj = one_dim(&[1.0]);
        let cfg = BaselineConfig {
            batch_frac: 1.0,
            max_iters: Some(4),
            learning_rate: 0.5,
            keep_iterates: true,
            ..BaselineConfig::new(Algorithm::Saga)
        };
        let run = saga_run(&obj, &dvector![3.0], &cfg).unwrap();
        let mut x = 3.0;
        for it in &run.iterates {
            x -= 0.5 * (x - 1.0);
            assert!((it[0] - x).abs() < 1e-14);
        }
    }

    #[test]
    fn saga_hand_trace() {
        // f_1 = ½(x + 1)², f_2 = ½(x − 1)², γ = 0.5, x0 = 0, batch order 0, 1, 0
        let obj = one_dim(&[-1.0, 1.0]);
        let mut s = SagaState::new(&obj, &dvector![0.0], vec![vec![0], vec![1]], 0.5).unwrap();
        // table = [1, −1], mean = 0
        s.step(&obj, 0).unwrap(); // g = 1 → x = 0 − 0.5(1 − 1 + 0) = 0
        assert!((s.point()[0] - 0.0).abs() < 1e-15);
        s.step(&obj, 1).unwrap(); // g = −1 → x = 0
        assert!((s.point()[0] - 0.0).abs() < 1e-15);
        // a non-trivial start: x0 = 2, table = [3, 1], mean = 2
        let mut s = SagaState::new(&obj, &dvector![2.0], vec![vec![0], vec![1]], 0.5).unwrap();
        s.step(&obj, 0).unwrap(); // g = 3 → x = 2 − 0.5·2 = 1; table = [3, 1]
        assert!((s.point()[0] - 1.0).abs() < 1e-15);
        s.step(&obj, 1).unwrap(); // g = 0 → x = 1 − 0.5(0 − 1 + 2) = 0.5; table = [3, 0], mean = 1.5
        assert!((s.point()[0] - 0.5).abs() < 1e-15);
        s.step(&obj, 0).unwrap(); // g = 1.5 → x = 0.5 − 0.5(1.5 − 3 + 1.5) = 0.5
        assert!((s.point()[0] - 0.5).abs() < 1e-15);
        assert!((s.table_mean()[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn saga_table_mean_invariant() {
        let obj = logistic();
        let mut s = SagaState::new(&obj, &Vector::zeros(8), make_batches(200, 0.07, None), 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let j = s.sample(&mut rng);
            s.step(&obj, j).unwrap();
            assert!(s.table_mean_error() <= 1e-12);
        }
    }

    #[test]
    fn saga_run_decreases_objective() {
        let obj = logistic();
        let cfg =
            BaselineConfig { batch_frac: 0.05, max_epochs: 5.0, learning_rate: 0.5, ..BaselineConfig::new(Algorithm::Saga) };
        let run = saga_run(&obj, &Vector::zeros(8), &cfg).unwrap();
        let rows = &run.trace.rows;
        assert!(rows.last().unwrap().objective < rows[0].objective);
    }

    #[test]
    fn full_sample_scr_matches_single_batch_singcubic() {
        let (obj, _) = synth_quadratic(30, 5, 6);
        let x0 = Vector::from_element(5, 3.0);
        let cfg = BaselineConfig {
            grad_sample_frac: 1.0,
            hess_sample_frac: 1.0,
            max_epochs: 100.0,
            keep_iterates: true,
            sigma0: 1.0,
            ..BaselineConfig::new(Algorithm::Scr)
        };
        let scr = scr_run(&obj, &x0, &cfg).unwrap();
        let sc_cfg = OptimizerConfig { batch_frac: 1.0, max_epochs: 100.0, keep_iterates: true, ..OptimizerConfig::default() };
        let sc = singcubic_run(&obj, &x0, &sc_cfg).unwrap();
        assert_eq!(scr.iterates.len(), sc.iterates.len());
        for (a, b) in scr.iterates.iter().zip(&sc.iterates) {
            assert!((a - b).amax() <= 1e-12);
        }
    }

    #[test]
    fn scr_is_deterministic_and_monotone() {
        let obj = logistic();
        let cfg = BaselineConfig {
            grad_sample_frac: 0.1,
            hess_sample_frac: 0.1,
            max_epochs: 4.0,
            seed: 8,
            ..BaselineConfig::new(Algorithm::Scr)
        };
        let a = scr_run(&obj, &Vector::zeros(8), &cfg).unwrap();
        let b = scr_run(&obj, &Vector::zeros(8), &cfg).unwrap();
        assert_eq!(
            a.trace.rows.iter().map(|r| r.objective).collect::<Vec<_>>(),
            b.trace.rows.iter().map(|r| r.objective).collect::<Vec<_>>()
        );
        let acc: Vec<f64> = a.trace.accepted_objectives().collect();
        assert!(acc.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn scr_geometric_growth_caps_at_n() {
        assert_eq!(sample_size(100, 0.05, SampleGrowth::Geometric(1.5), 0), 5);
        assert_eq!(sample_size(100, 0.05, SampleGrowth::Geometric(1.5), 2), 12);
        assert_eq!(sample_size(100, 0.05, SampleGrowth::Geometric(1.5), 50), 100);
    }

    #[test]
    fn tr_newton_step_inside_radius() {
        let obj = one_dim(&[0.5, 0.3]);
        let cfg = BaselineConfig { max_iters: Some(1), ..BaselineConfig::new(Algorithm::Tr) };
        let run = tr_run(&obj, &dvector![0.0], &cfg).unwrap();
        assert!((run.x[0] - 0.4).abs() < 1e-15);
        let row = &run.trace.rows[1];
        assert!((row.rho.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(row.sigma, Some(1.0));
        // boundary steps with an exact model double the radius
        let far = one_dim(&[10.0]);
        let run = tr_run(&far, &dvector![0.0], &BaselineConfig { max_iters: Some(2), ..cfg }).unwrap();
        assert_eq!(run.trace.rows[2].sigma, Some(2.0));
        assert!((run.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tr_logistic_descends_within_radius() {
        let obj = logistic();
        let cfg =
            BaselineConfig { initial_radius: 0.05, max_epochs: 20.0, keep_iterates: true, ..BaselineConfig::new(Algorithm::Tr) };
        let run = tr_run(&obj, &Vector::zeros(8), &cfg).unwrap();
        let mut prev = Vector::zeros(8);
        for (row, x) in run.trace.rows[1..].iter().zip(&run.iterates) {
            assert!((x - &prev).norm() <= row.sigma.unwrap() * (1.0 + 1e-8));
            prev = x.clone();
        }
        let acc: Vec<f64> = run.trace.accepted_objectives().collect();
        assert!(acc.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn invalid_rate_is_rejected() {
        let obj = one_dim(&[0.0]);
        let cfg = BaselineConfig { learning_rate: 0.0, ..BaselineConfig::new(Algorithm::Sgd) };
        assert!(matches!(run_baseline(&obj, &dvector![1.0], &cfg), Err(RunError::Config(_))));
    }
}
