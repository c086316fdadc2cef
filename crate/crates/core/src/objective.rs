//! Finite-sum objectives: the evaluation trait, regularized logistic
//! regression, synthetic quadratics and a central-difference derivative checker.

use crate::data::Dataset;
use crate::error::ObjectiveError;
use crate::{Matrix, Vector};

/// How many derivatives an evaluation must produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

/// Index set over which an objective is averaged.
#[derive(Debug, Clone, Copy)]
pub enum Subset<'a> {
    All,
    Indices(&'a [usize]),
}

impl Subset<'_> {
    pub fn len(&self, n: usize) -> usize {
        match self {
            Subset::All => n,
            Subset::Indices(ix) => ix.len(),
        }
    }

    pub fn is_empty(&self, n: usize) -> bool {
        self.len(n) == 0
    }

    fn for_each(&self, n: usize, mut f: impl FnMut(usize)) {
        match self {
            Subset::All => (0..n).for_each(f),
            Subset::Indices(ix) => ix.iter().for_each(|&i| f(i)),
        }
    }
}

/// Value and (optionally) derivatives averaged over an index set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Option<Vector>,
    pub hessian: Option<Matrix>,
}

impl Evaluation {
    pub fn gradient(&self) -> &Vector {
        self.gradient.as_ref().expect("evaluation was requested without a gradient")
    }

    pub fn hessian(&self) -> &Matrix {
        self.hessian.as_ref().expect("evaluation was requested without a Hessian")
    }
}

/// An objective `F(w) = (1/n) Σ_i f_i(w)` whose components can be evaluated
/// on arbitrary index sets.
///
/// Implementations are pure functions of `(subset, w)` and must be safe to
/// call concurrently.
pub trait FiniteSum: Sync {
    /// Number of components `n`.
    fn n_components(&self) -> usize;

    /// Parameter dimension `p`.
    fn dim(&self) -> usize;

    /// Mean of the component values (and derivatives up to `order`) over `subset`.
    /// Returned Hessians are exactly symmetric.
    fn evaluate(&self, subset: Subset<'_>, w: &Vector, order: Order) -> Result<Evaluation, ObjectiveError>;

    fn value(&self, subset: Subset<'_>, w: &Vector) -> Result<f64, ObjectiveError> {
        Ok(self.evaluate(subset, w, Order::Value)?.value)
    }

    fn full(&self, w: &Vector, order: Order) -> Result<Evaluation, ObjectiveError> {
        self.evaluate(Subset::All, w, order)
    }
}

/// Checks a subset and a point against the objective's shape.
pub fn validate(subset: Subset<'_>, w: &Vector, n: usize, p: usize) -> Result<(), ObjectiveError> {
    if w.len() != p {
        return Err(ObjectiveError::DimensionMismatch { expected: p, got: w.len() });
    }
    match subset {
        Subset::All if n == 0 => Err(ObjectiveError::EmptySubset),
        Subset::All => Ok(()),
        Subset::Indices([]) => Err(ObjectiveError::EmptySubset),
        Subset::Indices(ix) => match ix.iter().find(|&&i| i >= n) {
            Some(&index) => Err(ObjectiveError::IndexOutOfRange { index, n }),
            None => Ok(()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// `α/2 ‖w‖²`
    L2,
    /// `α Σ_j β w_j² / (1 + β w_j²)`, a bounded nonconvex penalty.
    Rational,
}

/// Separable penalty added once to every evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub alpha: f64,
    pub beta: f64,
}

/// Regularizer value, gradient and diagonal Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerEval {
    pub value: f64,
    pub gradient: Vector,
    pub hessian_diag: Vector,
}

impl Regularizer {
    pub fn l2(alpha: f64) -> Self {
        Self { kind: RegularizerKind::L2, alpha, beta: 1.0 }
    }

    pub fn rational(alpha: f64, beta: f64) -> Self {
        Self { kind: RegularizerKind::Rational, alpha, beta }
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if !(self.alpha >= 0.0) {
            return Err(ObjectiveError::InvalidProblem(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.kind == RegularizerKind::Rational && !(self.beta > 0.0) {
            return Err(ObjectiveError::InvalidProblem(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn eval(&self, w: &Vector) -> RegularizerEval {
        let a = self.alpha;
        match self.kind {
            RegularizerKind::L2 => RegularizerEval {
                value: 0.5 * a * w.norm_squared(),
                gradient: w * a,
                hessian_diag: Vector::from_element(w.len(), a),
            },
            RegularizerKind::Rational => {
                let b = self.beta;
                let mut value = 0.0;
                let mut gradient = Vector::zeros(w.len());
                let mut hessian_diag = Vector::zeros(w.len());
                for (j, &wj) in w.iter().enumerate() {
                    let bw2 = b * wj * wj;
                    let q = 1.0 + bw2;
                    value += a * bw2 / q;
                    gradient[j] = 2.0 * a * b * wj / (q * q);
                    hessian_diag[j] = 2.0 * a * b * (1.0 - 3.0 * bw2) / (q * q * q);
                }
                RegularizerEval { value, gradient, hessian_diag }
            }
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary logistic regression with cross-entropy loss and a separable penalty.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: Dataset,
    regularizer: Regularizer,
}

impl LogisticProblem {
    /// Labels must already be normalized to `{0, 1}`.
    pub fn new(data: Dataset, regularizer: Regularizer) -> Result<Self, ObjectiveError> {
        regularizer.validate()?;
        if let Some(bad) = data.labels().iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(ObjectiveError::InvalidProblem(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(Self { data, regularizer })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }
}

impl FiniteSum for LogisticProblem {
    fn n_components(&self) -> usize {
        self.data.n_rows()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn evaluate(&self, subset: Subset<'_>, w: &Vector, order: Order) -> Result<Evaluation, ObjectiveError> {
        let n = self.n_components();
        let p = self.dim();
        validate(subset, w, n, p)?;
        let labels = self.data.labels();

        let mut loss = 0.0;
        let mut grad = (order >= Order::Gradient).then(|| Vector::zeros(p));
        let mut hess = (order >= Order::Hessian).then(|| Matrix::zeros(p, p));
        subset.for_each(n, |i| {
            let (cols, vals) = self.data.row(i);
            let z: f64 = cols.iter().zip(vals).map(|(&c, &v)| w[c] * v).sum();
            let y = labels[i];
            loss += softplus(z) - y * z;
            if let Some(g) = grad.as_mut() {
                let r = sigmoid(z) - y;
                for (&c, &v) in cols.iter().zip(vals) {
                    g[c] += r * v;
                }
            }
            if let Some(h) = hess.as_mut() {
                let s = sigmoid(z);
                let curv = s * (1.0 - s);
                // upper triangle only; columns within a row are ascending
                for (a, (&ca, &va)) in cols.iter().zip(vals).enumerate() {
                    let ta = curv * va;
                    for (&cb, &vb) in cols[a..].iter().zip(&vals[a..]) {
                        h[(ca, cb)] += ta * vb;
                    }
                }
            }
        });

        let inv = 1.0 / subset.len(n) as f64;
        let reg = self.regularizer.eval(w);
        let value = loss * inv + reg.value;
        let gradient = grad.map(|g| g * inv + &reg.gradient);
        let hessian = hess.map(|mut h| {
            for j in 0..p {
                for i in 0..j {
                    h[(i, j)] *= inv;
                    h[(j, i)] = h[(i, j)];
                }
                h[(j, j)] = h[(j, j)] * inv + reg.hessian_diag[j];
            }
            h
        });
        Ok(Evaluation { value, gradient, hessian })
    }
}

/// `f_i(x) = ½‖x − a_i‖²`; the minimizer of the mean is the mean of the centers.
#[derive(Debug, Clone)]
pub struct QuadraticSum {
    /// Centers `a_i` stored as columns.
    centers: Matrix,
}

impl QuadraticSum {
    pub fn new(centers: Matrix) -> Self {
        Self { centers }
    }

    pub fn from_centers(centers: &[Vector]) -> Self {
        Self { centers: Matrix::from_columns(centers) }
    }

    pub fn centers(&self) -> &Matrix {
        &self.centers
    }

    pub fn minimizer(&self) -> Vector {
        self.centers.column_mean()
    }
}

impl FiniteSum for QuadraticSum {
    fn n_components(&self) -> usize {
        self.centers.ncols()
    }

    fn dim(&self) -> usize {
        self.centers.nrows()
    }

    fn evaluate(&self, subset: Subset<'_>, w: &Vector, order: Order) -> Result<Evaluation, ObjectiveError> {
        let n = self.n_components();
        let p = self.dim();
        validate(subset, w, n, p)?;
        let mut value = 0.0;
        let mut grad = Vector::zeros(p);
        subset.for_each(n, |i| {
            let diff = w - self.centers.column(i);
            value += 0.5 * diff.norm_squared();
            grad += diff;
        });
        let inv = 1.0 / subset.len(n) as f64;
        Ok(Evaluation {
            value: value * inv,
            gradient: (order >= Order::Gradient).then(|| grad * inv),
            hessian: (order >= Order::Hessian).then(|| Matrix::identity(p, p)),
        })
    }
}

/// Outcome of a central-difference derivative check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    /// `‖g_fd − g‖∞ / max(1, ‖g‖∞)`
    pub grad_rel_error: f64,
    /// Same metric over all Hessian entries, from differences of the gradient.
    pub hess_rel_error: f64,
    /// Base step; coordinate `j` is perturbed by `h · (1 + |w_j|)`.
    pub step: f64,
}

/// Compares analytic derivatives at `w` with central differences.
pub fn finite_diff_check<F: FiniteSum + ?Sized>(
    obj: &F,
    subset: Subset<'_>,
    w: &Vector,
    h: f64,
) -> Result<DerivativeReport, ObjectiveError> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let p = obj.dim();
    let at = obj.evaluate(subset, w, Order::Hessian)?;
    let grad = at.gradient();
    let hess = at.hessian();

    let mut grad_fd = Vector::zeros(p);
    let mut hess_fd = Matrix::zeros(p, p);
    for j in 0..p {
        let step = h * (1.0 + w[j].abs());
        let mut plus = w.clone();
        plus[j] += step;
        let mut minus = w.clone();
        minus[j] -= step;
        let ep = obj.evaluate(subset, &plus, Order::Gradient)?;
        let em = obj.evaluate(subset, &minus, Order::Gradient)?;
        grad_fd[j] = (ep.value - em.value) / (2.0 * step);
        hess_fd.set_column(j, &((ep.gradient() - em.gradient()) / (2.0 * step)));
    }
    Ok(DerivativeReport {
        grad_rel_error: (&grad_fd - grad).amax() / grad.amax().max(1.0),
        hess_rel_error: (&hess_fd - hess).amax() / hess.amax().max(1.0),
        step: h,
    })
}
