//! Exact minimization of the cubic-regularized quadratic model
//!
//! ```text
//! m(d) = gᵀd + ½ dᵀH d + (σ/3)‖d‖³
//! ```
//!
//! The global minimizer satisfies `(H + λI)d = −g`, `H + λI ⪰ 0` and
//! `λ = σ‖d‖`. [`solve_cubic`] brackets `λ` with Gershgorin bounds and runs a
//! Newton-type iteration on the secular function `φ(λ) = 1/‖d(λ)‖ − σ/λ`,
//! using a shifted Cholesky factorization both to solve for `d(λ)` and to
//! detect multipliers for which `H + λI` is not positive definite. Once the
//! bracket collapses without a root (the hard case), the step is completed
//! in the eigenbasis of `H`.

use rand::Rng;

use crate::linalg::{gershgorin_bounds, larger_root, smaller_root, ShiftedCholesky, SortedEigen};
use crate::{Matrix, Vector};

pub use crate::linalg::gershgorin_bounds as gershgorin;

/// Secular tolerance used when none is given.
pub const DEFAULT_EPS_TOL: f64 = 0.1;
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Relative width below which the multiplier bracket counts as collapsed.
const COLLAPSE_RTOL: f64 = 1e-12;

/// Problem data for one subproblem solve.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemInput<'a> {
    pub g: &'a Vector,
    /// Symmetric model Hessian.
    pub h: &'a Matrix,
    /// Cubic weight, `σ > 0`.
    pub sigma: f64,
    /// Multiplier from the previous solve; reused when it lies inside the bracket.
    pub lambda_warm: f64,
    /// Stop once `|φ(λ)| ≤ eps_tol`.
    pub eps_tol: f64,
    pub max_iters: usize,
}

impl<'a> SubproblemInput<'a> {
    pub fn new(g: &'a Vector, h: &'a Matrix, sigma: f64) -> Self {
        Self { g, h, sigma, lambda_warm: 0.0, eps_tol: DEFAULT_EPS_TOL, max_iters: DEFAULT_MAX_ITERS }
    }

    pub fn with_warm_start(mut self, lambda: f64) -> Self {
        self.lambda_warm = lambda;
        self
    }

    pub fn with_tolerance(mut self, eps_tol: f64) -> Self {
        self.eps_tol = eps_tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    /// `|φ(λ)| ≤ eps_tol` with `H + λI` positive definite.
    SecularConverged,
    /// `g` has no component along the bottom eigenspace; `d` was completed with
    /// an eigenvector so that `‖d‖ = λ/σ` exactly.
    HardCase,
    /// `g = 0` and `H ⪰ 0`: the origin is optimal.
    InteriorZero,
    /// Iteration cap reached; `d` is the last iterate and carries no certificate.
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub d: Vector,
    pub lambda: f64,
    pub iters: usize,
    pub status: SubproblemStatus,
}

/// Bracket for the optimal multiplier derived from Gershgorin bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaInterval {
    pub lower: f64,
    pub upper: f64,
    /// Larger root of `x² + G_l x − ‖g‖σ = 0`.
    pub root_lower_bound: f64,
    /// Larger root of `x² + G_u x − ‖g‖σ = 0`.
    pub root_upper_bound: f64,
}

/// `gᵀd + ½dᵀHd + (σ/3)‖d‖³`.
pub fn cubic_model(g: &Vector, h: &Matrix, sigma: f64, d: &Vector) -> f64 {
    g.dot(d) + 0.5 * d.dot(&(h * d)) + sigma / 3.0 * d.norm().powi(3)
}

pub fn lambda_interval(g: &Vector, h: &Matrix, sigma: f64) -> LambdaInterval {
    let (gl, gu) = gershgorin_bounds(h);
    let c = -g.norm() * sigma;
    let lambda_1 = larger_root(1.0, gl, c).expect("discriminant G² + 4‖g‖σ is non-negative");
    let lambda_2 = larger_root(1.0, gu, c).expect("discriminant G² + 4‖g‖σ is non-negative");
    let min_diag = h.diagonal().min();
    LambdaInterval {
        lower: 0f64.max(-min_diag).max(lambda_2),
        upper: 0f64.max(lambda_1),
        root_lower_bound: lambda_1,
        root_upper_bound: lambda_2,
    }
}

/// `φ(λ) = 1/‖d‖ − σ/λ`; `None` when `λ` or `‖d‖` is zero.
pub fn secular_phi(lambda: f64, d_norm: f64, sigma: f64) -> Option<f64> {
    (lambda > 0.0 && d_norm > 0.0).then(|| 1.0 / d_norm - sigma / lambda)
}

/// One secular step: `λ + c` where `c` is the larger root of
/// `(‖w‖²/‖d‖³)c² + (1/‖d‖ + λ‖w‖²/‖d‖³)c + λ/‖d‖ − σ = 0`,
/// with `w = L⁻¹d` from the Cholesky factor of `H + λI`.
///
/// The quadratic linearizes `1/‖d(λ)‖` and keeps `σ/λ` exact; its
/// discriminant `(1/‖d‖ − aλ)² + 4aσ` is positive, so `None` only signals
/// degenerate input.
pub fn secular_update(lambda: f64, d_norm: f64, w_norm: f64, sigma: f64) -> Option<f64> {
    if !(lambda > 0.0 && d_norm > 0.0 && w_norm > 0.0) {
        return None;
    }
    let a = w_norm * w_norm / d_norm.powi(3);
    let b = 1.0 / d_norm + a * lambda;
    let c = lambda / d_norm - sigma;
    larger_root(a, b, c).map(|c_hi| lambda + c_hi)
}

/// Moves `d` along the unit vector `u` onto the sphere `‖d′‖ = λ/σ`, taking
/// the smaller root `α` of `α² + 2uᵀd α + dᵀd − λ²/σ² = 0`.
///
/// Returns `None` when the roots are complex, i.e. `d` lies outside the sphere
/// by more than its distance along `u` can repair.
pub fn hard_case_correction(d: &Vector, u: &Vector, lambda: f64, sigma: f64) -> Option<Vector> {
    move_to_radius(d, u, lambda / sigma)
}

pub(crate) fn move_to_radius(d: &Vector, u: &Vector, radius: f64) -> Option<Vector> {
    let alpha = smaller_root(1.0, 2.0 * u.dot(d), d.dot(d) - radius * radius)?;
    Some(d + u * alpha)
}

fn interpolate(lo: f64, hi: f64) -> f64 {
    (lo * hi).sqrt().max(lo + 0.01 * (hi - lo))
}

fn collapsed(lo: f64, hi: f64) -> bool {
    hi - lo <= COLLAPSE_RTOL * hi.abs()
}

/// Globally minimizes the cubic model.
///
/// `rng` draws the starting multiplier when the warm start falls outside the
/// bracket.
pub fn solve_cubic<R: Rng + ?Sized>(input: &SubproblemInput<'_>, rng: &mut R) -> SubproblemResult {
    let SubproblemInput { g, h, sigma, lambda_warm, eps_tol, max_iters } = *input;
    assert!(sigma > 0.0, "cubic weight must be positive");
    let p = g.len();
    let g_is_zero = g.iter().all(|&x| x == 0.0);

    let bracket = lambda_interval(g, h, sigma);
    let (mut lo, mut hi) = (bracket.lower, bracket.upper);
    let mut lambda = if lo <= lambda_warm && lambda_warm <= hi {
        lambda_warm
    } else if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    };

    let mut d = Vector::zeros(p);
    let mut factor: Option<ShiftedCholesky> = None;
    for iter in 1..=max_iters {
        let positive_definite = if (lo == 0.0 && hi == 0.0) || g_is_zero {
            None
        } else {
            factor.take().or_else(|| ShiftedCholesky::factor(h, lambda))
        };

        let Some(chol) = positive_definite else {
            // λ is not admissible: raise the lower end and re-bracket.
            lo = lo.max(lambda).min(hi);
            lambda = interpolate(lo, hi);
            if collapsed(lo, hi) {
                return finish_in_eigenbasis(g, h, sigma, hi, iter);
            }
            continue;
        };

        d = -chol.solve(g);
        let d_norm = d.norm();
        let phi = secular_phi(lambda, d_norm, sigma).expect("λ > 0 and d ≠ 0 when g ≠ 0");
        if phi.abs() <= eps_tol {
            return SubproblemResult { d, lambda, iters: iter, status: SubproblemStatus::SecularConverged };
        }
        let w_norm = chol.forward(&d).norm();
        let next = secular_update(lambda, d_norm, w_norm, sigma).unwrap_or(lambda);
        if next == lambda {
            // φ cannot be resolved further in floating point.
            return SubproblemResult { d, lambda, iters: iter, status: SubproblemStatus::SecularConverged };
        }

        if phi < 0.0 {
            // ‖d‖ too long: λ is below the root.
            lo = lambda;
            lambda = next;
        } else {
            hi = lambda;
            if next > 0.0 {
                if let Some(next_chol) = ShiftedCholesky::factor(h, next) {
                    lambda = next;
                    factor = Some(next_chol);
                    continue;
                }
            }
            lo = lo.max(next).min(hi);
            lambda = interpolate(lo, hi);
            if collapsed(lo, hi) {
                return finish_in_eigenbasis(g, h, sigma, hi, iter);
            }
        }
    }
    SubproblemResult { d, lambda, iters: max_iters, status: SubproblemStatus::MaxIters }
}

fn finish_in_eigenbasis(g: &Vector, h: &Matrix, sigma: f64, lambda_cap: f64, iters: usize) -> SubproblemResult {
    let eig = SortedEigen::new(h);
    let step = eigen_secular(g, &eig, lambda_cap, |lambda| lambda / sigma);
    let status = if step.hard_case {
        SubproblemStatus::HardCase
    } else if step.d.iter().all(|&x| x == 0.0) {
        SubproblemStatus::InteriorZero
    } else {
        SubproblemStatus::SecularConverged
    };
    SubproblemResult { d: step.d, lambda: step.lambda, iters, status }
}

pub(crate) struct EigenStep {
    pub d: Vector,
    pub lambda: f64,
    pub hard_case: bool,
}

/// Solves `‖d(λ)‖ = radius(λ)` over `λ ≥ max(0, −λ_min(H))` using an explicit
/// eigendecomposition, where `d(λ) = −(H + λI)⁺g` and `radius` is
/// non-decreasing. Falls back to the hard-case completion when no root exists
/// above `−λ_min`.
pub(crate) fn eigen_secular(g: &Vector, eig: &SortedEigen, lambda_cap: f64, radius: impl Fn(f64) -> f64) -> EigenStep {
    let p = g.len();
    let coeffs = eig.vectors.transpose() * g;
    let values = &eig.values;
    let (lambda_min, u_min) = eig.smallest();
    let base = (-lambda_min).max(0.0);
    let scale = values.amax().max(base).max(1.0);
    let null_tol = 64.0 * f64::EPSILON * scale;
    let g_norm = g.norm();

    let step_at = |lambda: f64, floor: f64| -> Vector {
        let mut d = Vector::zeros(p);
        for i in 0..p {
            let shifted = values[i] + lambda;
            if shifted > floor {
                d.axpy(-coeffs[i] / shifted, &eig.vectors.column(i), 1.0);
            }
        }
        d
    };

    let null_weight: f64 = (0..p).filter(|&i| values[i] + base <= null_tol).map(|i| coeffs[i] * coeffs[i]).sum::<f64>().sqrt();
    if null_weight <= 1e-10 * g_norm {
        let d_base = step_at(base, null_tol);
        let r = radius(base);
        if d_base.norm() <= r {
            if base == 0.0 {
                return EigenStep { d: d_base, lambda: 0.0, hard_case: false };
            }
            let d = move_to_radius(&d_base, &u_min, r).expect("d lies inside the sphere");
            return EigenStep { d, lambda: base, hard_case: true };
        }
    }

    // A root exists strictly above `base`; ψ(λ) = ‖d(λ)‖ − radius(λ) is decreasing there.
    let psi = |lambda: f64| step_at(lambda, 0.0).norm() - radius(lambda);
    let mut lo = base;
    let mut hi = lambda_cap.max(base + 1.0);
    while psi(hi) > 0.0 {
        hi = base + 2.0 * (hi - base);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = if lo > base && psi(lo).abs() < psi(hi).abs() { lo } else { hi };
    EigenStep { d: step_at(lambda, 0.0), lambda, hard_case: false }
}
