//! Trust-region subproblem `min gᵀd + ½dᵀHd  s.t. ‖d‖ ≤ Δ` by Moré–Sorensen
//! iteration on `1/‖d(λ)‖ − 1/Δ`.

use crate::linalg::{gershgorin_bounds, ShiftedCholesky, SortedEigen};
use crate::subproblem::eigen_secular;
use crate::{Matrix, Vector};

/// Boundary steps are accepted once `|‖d‖ − Δ| ≤ BOUNDARY_RTOL · Δ`.
const BOUNDARY_RTOL: f64 = 1e-10;
const COLLAPSE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionStep {
    pub d: Vector,
    pub lambda: f64,
    pub iters: usize,
    pub on_boundary: bool,
    pub hard_case: bool,
}

/// Quadratic model `gᵀd + ½dᵀHd`.
pub fn quadratic_model(g: &Vector, h: &Matrix, d: &Vector) -> f64 {
    g.dot(d) + 0.5 * d.dot(&(h * d))
}

pub fn solve_trust_region(g: &Vector, h: &Matrix, radius: f64, max_iters: usize) -> TrustRegionStep {
    assert!(radius > 0.0, "trust-region radius must be positive");
    let g_norm = g.norm();

    if let Some(chol) = ShiftedCholesky::factor(h, 0.0) {
        let d = -chol.solve(g);
        if d.norm() <= radius {
            return TrustRegionStep { d, lambda: 0.0, iters: 1, on_boundary: false, hard_case: false };
        }
    }

    let (gl, gu) = gershgorin_bounds(h);
    let min_diag = h.diagonal().min();
    let mut lo = 0f64.max(-min_diag).max(g_norm / radius - gu);
    let mut hi = 0f64.max(g_norm / radius - gl);
    let mut lambda = if lo > 0.0 { lo } else { 0.01 * hi };

    let eigen_finish = |hi: f64, iters: usize| {
        let eig = SortedEigen::new(h);
        let step = eigen_secular(g, &eig, hi, |_| radius);
        let on_boundary = step.hard_case || step.lambda > 0.0;
        TrustRegionStep { d: step.d, lambda: step.lambda, iters, on_boundary, hard_case: step.hard_case }
    };

    for iter in 1..=max_iters {
        if hi - lo <= COLLAPSE_RTOL * hi.abs() || g_norm == 0.0 {
            return eigen_finish(hi, iter);
        }
        let Some(chol) = ShiftedCholesky::factor(h, lambda) else {
            lo = lo.max(lambda).min(hi);
            lambda = (lo * hi).sqrt().max(lo + 0.01 * (hi - lo));
            continue;
        };
        let d = -chol.solve(g);
        let d_norm = d.norm();
        if (d_norm - radius).abs() <= BOUNDARY_RTOL * radius {
            return TrustRegionStep { d, lambda, iters: iter, on_boundary: true, hard_case: false };
        }
        if d_norm < radius {
            hi = lambda;
        } else {
            lo = lambda;
        }
        let w_norm = chol.forward(&d).norm();
        let next = lambda + (d_norm / w_norm).powi(2) * (d_norm - radius) / radius;
        lambda = if next > lo && next < hi { next } else { (lo * hi).sqrt().max(lo + 0.01 * (hi - lo)) };
    }
    eigen_finish(hi, max_iters)
}
