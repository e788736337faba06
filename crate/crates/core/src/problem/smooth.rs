use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::{check_finite, norm, Interval};
use crate::error::{Error, Result};

/// Convex `f` with Lipschitz gradient. Implementations must be pure.
pub trait SmoothTerm: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: ArrayView1<f64>) -> f64;

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64>;

    fn value_and_gradient(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// Upper bound on the Lipschitz constant of the gradient, if known.
    fn lipschitz_hint(&self) -> Option<f64>;

    /// Interval containing `f` on `B[center, radius]`.
    ///
    /// The default is certified for any convex `f` with a known gradient Lipschitz
    /// bound: convexity gives the lower end, the descent lemma the upper end.
    fn ball_bounds(&self, center: ArrayView1<f64>, radius: f64) -> Option<Interval> {
        let hint = self.lipschitz_hint()?;
        let (value, grad) = self.value_and_gradient(center);
        let slope = norm(grad.view()) * radius;
        Some(Interval::new(
            value - slope,
            value + slope + 0.5 * hint * radius * radius,
        ))
    }

    /// `|b|^2` for the least-squares family, used by the coercivity bound.
    fn data_norm_sq(&self) -> Option<f64> {
        None
    }

    fn describe(&self) -> String;
}

/// `f(x) = |Ax - b|^2`, gradient `2 A^T (Ax - b)`, Lipschitz bound `2 |A|^2`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    a: Array2<f64>,
    b: Array1<f64>,
    operator_norm: f64,
}

impl LeastSquares {
    /// Estimates `|A|` by power iteration and inflates it into an upper bound.
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        let operator_norm = spectral_norm_upper(a.view());
        Self::with_operator_norm(a, b, operator_norm)
    }

    /// Trusts the caller's upper bound on the spectral norm of `A`.
    pub fn with_operator_norm(a: Array2<f64>, b: Array1<f64>, operator_norm: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.ncols() == 0 {
            return Err(Error::invalid("matrix has no columns"));
        }
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix A has a non-finite entry".into()));
        }
        check_finite("vector b", b.view())?;
        if !(operator_norm >= 0.0 && operator_norm.is_finite()) {
            return Err(Error::invalid(format!("operator norm must be finite and nonnegative, got {operator_norm}")));
        }
        Ok(LeastSquares {
            a,
            b,
            operator_norm,
        })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.a.view()
    }

    pub fn data(&self) -> ArrayView1<'_, f64> {
        self.b.view()
    }

    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    fn residual(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.a.dot(&x) - &self.b
    }
}

impl SmoothTerm for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.residual(x);
        r.dot(&r)
    }

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        2.0 * self.a.t().dot(&self.residual(x))
    }

    fn value_and_gradient(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let r = self.residual(x);
        (r.dot(&r), 2.0 * self.a.t().dot(&r))
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(2.0 * self.operator_norm * self.operator_norm)
    }

    fn ball_bounds(&self, center: ArrayView1<f64>, radius: f64) -> Option<Interval> {
        // f(c + d) = f(c) + <f'(c), d> + |Ad|^2 with |Ad|^2 <= |A|^2 r^2, and f >= 0.
        let (value, grad) = self.value_and_gradient(center);
        let slope = norm(grad.view()) * radius;
        let curvature = self.operator_norm * self.operator_norm * radius * radius;
        Some(Interval::new(
            (value - slope).max(0.0),
            value + slope + curvature,
        ))
    }

    fn data_norm_sq(&self) -> Option<f64> {
        Some(self.b.dot(&self.b))
    }

    fn describe(&self) -> String {
        format!("lsq({}x{})", self.a.nrows(), self.a.ncols())
    }
}

const POWER_REL_TOL: f64 = 1e-6;
const POWER_MAX_ITERS: usize = 10_000;
const NORM_INFLATION: f64 = 1.0 + 1e-4;

/// Upper estimate of the spectral norm `|A|`: power iteration on `A^T A` to relative
/// tolerance `1e-6`, inflated by `1 + 1e-4` and capped by the Frobenius norm.
pub fn spectral_norm_upper(a: ArrayView2<f64>) -> f64 {
    let n = a.ncols();
    let frobenius = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0 || frobenius == 0.0 {
        return 0.0;
    }
    // deterministic, non-degenerate start vector
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract());
    let start_norm = norm(v.view());
    v /= start_norm;

    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.t().dot(&a.dot(&v));
        let w_norm = norm(w.view());
        if w_norm == 0.0 {
            break;
        }
        let next = w_norm.sqrt();
        v = w / w_norm;
        let converged = (next - estimate).abs() <= POWER_REL_TOL * next;
        estimate = next;
        if converged {
            break;
        }
    }
    (estimate * NORM_INFLATION).min(frobenius)
}
