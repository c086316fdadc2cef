//! Small dense linear-algebra kernels shared by the subproblem solvers.

use nalgebra::SymmetricEigen;

use crate::{Matrix, Vector};

/// Relative pivot tolerance for the shifted Cholesky: `2·sqrt(f64 machine epsilon)`.
pub const PIVOT_EPS: f64 = 2.0 * 1.4901161193847656e-8;

/// Gershgorin interval `[lower, upper]` containing every eigenvalue of `h`.
pub fn gershgorin_bounds(h: &Matrix) -> (f64, f64) {
    let p = h.nrows();
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..p {
        let radius: f64 = (0..p).filter(|&j| j != i).map(|j| h[(i, j)].abs()).sum();
        lower = lower.min(h[(i, i)] - radius);
        upper = upper.max(h[(i, i)] + radius);
    }
    if p == 0 {
        (0.0, 0.0)
    } else {
        (lower, upper)
    }
}

/// Lower-triangular factor `L` with `LLᵀ = H + λI`.
#[derive(Debug, Clone)]
pub struct ShiftedCholesky {
    l: Matrix,
}

impl ShiftedCholesky {
    /// Factors `h + shift·I`.
    ///
    /// Returns `None` when a pivot falls at or below `PIVOT_EPS · trace(h + shift·I)`,
    /// i.e. the shifted matrix is not safely positive definite.
    pub fn factor(h: &Matrix, shift: f64) -> Option<Self> {
        let p = h.nrows();
        let trace = h.trace() + shift * p as f64;
        if !(trace > 0.0) {
            return None;
        }
        let threshold = PIVOT_EPS * trace;
        let mut l = Matrix::zeros(p, p);
        for j in 0..p {
            let mut pivot = h[(j, j)] + shift;
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > threshold) {
                return None;
            }
            let diag = pivot.sqrt();
            l[(j, j)] = diag;
            for i in (j + 1)..p {
                let mut s = h[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / diag;
            }
        }
        Some(Self { l })
    }

    pub fn factor_matrix(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &Vector) -> Vector {
        let p = self.l.nrows();
        let mut y = b.clone();
        for i in 0..p {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &Vector) -> Vector {
        let p = self.l.nrows();
        let mut x = y.clone();
        for i in (0..p).rev() {
            let mut s = x[i];
            for k in (i + 1)..p {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `LLᵀ x = b`.
    pub fn solve(&self, b: &Vector) -> Vector {
        self.backward(&self.forward(b))
    }
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vector,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: Matrix,
}

impl SortedEigen {
    pub fn new(h: &Matrix) -> Self {
        let p = h.nrows();
        let eig = SymmetricEigen::new(h.clone());
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = Vector::from_iterator(p, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = Matrix::zeros(p, p);
        for (col, &i) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(i).into_owned();
            canonicalize_sign(&mut v);
            vectors.set_column(col, &v);
        }
        Self { values, vectors }
    }

    pub fn smallest(&self) -> (f64, Vector) {
        (self.values[0], self.vectors.column(0).into_owned())
    }
}

/// Flips `v` so that its first entry with non-negligible magnitude is positive.
pub fn canonicalize_sign(v: &mut Vector) {
    let scale = v.amax();
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12 * scale) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue(h: &Matrix) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(h.clone()).eigenvalues.min()
}

/// Larger root of `a x² + b x + c = 0`, computed without cancellation.
///
/// Returns `None` for a negative discriminant. `a = 0` degenerates to the linear root.
pub fn larger_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let (lo, hi) = quadratic_roots(a, b, c)?;
    Some(lo.max(hi))
}

/// Smaller root of `a x² + b x + c = 0`.
pub fn smaller_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let (lo, hi) = quadratic_roots(a, b, c)?;
    Some(lo.min(hi))
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        let r = -c / b;
        return Some((r, r));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum_or_one() * disc.sqrt());
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { -b / (2.0 * a) };
    Some((r1.min(r2), r1.max(r2)))
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}
