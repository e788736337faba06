//! The composite objective `F = f + g` and the concrete terms shipped with the crate.
//!
//! `f` is convex with a Lipschitz gradient ([`SmoothTerm`]); `g` is proper, convex and
//! lower semicontinuous, possibly taking the value `+inf` ([`NonsmoothTerm`]). Every
//! term also reports a *certified* interval containing its values on a closed ball,
//! which is what the error-budget machinery consumes.

mod aux_cost;
mod instance;
mod nonsmooth;
mod smooth;

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

pub use aux_cost::{AuxCost, SquaredNorm, TotalVariation1d};
pub(crate) use instance::standard_normal;
pub use instance::{blur_instance, LsqGenerator, NonsmoothSpec, ProblemInstance};
pub use nonsmooth::{soft_threshold, BoxIndicator, L1Norm, NonsmoothTerm, ZeroTerm};
pub use smooth::{spectral_norm_upper, LeastSquares, SmoothTerm};

/// Closed real interval `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper, "inverted interval [{lower}, {upper}]");
        Interval { lower, upper }
    }

    pub fn point(value: f64) -> Self {
        Interval::new(value, value)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lower + rhs.lower, self.upper + rhs.upper)
    }
}

pub(crate) fn norm(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

pub(crate) fn check_dim(expected: usize, x: ArrayView1<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, x: ArrayView1<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} has a non-finite component")))
    }
}

/// `F = f + g` as a pair of oracle bundles. Cheap to clone; the terms are shared.
#[derive(Clone)]
pub struct Objective {
    f: Arc<dyn SmoothTerm>,
    g: Arc<dyn NonsmoothTerm>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("Objective")
            .field("f", &self.f.describe())
            .field("g", &self.g.describe())
            .finish()
    }
}

impl Objective {
    pub fn new(f: impl SmoothTerm + 'static, g: impl NonsmoothTerm + 'static) -> Self {
        Objective {
            f: Arc::new(f),
            g: Arc::new(g),
        }
    }

    pub fn from_shared(f: Arc<dyn SmoothTerm>, g: Arc<dyn NonsmoothTerm>) -> Self {
        Objective { f, g }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn smooth(&self) -> &dyn SmoothTerm {
        self.f.as_ref()
    }

    pub fn nonsmooth(&self) -> &dyn NonsmoothTerm {
        self.g.as_ref()
    }

    /// Bounded on bounded sets. Indicator terms take `+inf` outside their set, so never.
    pub fn double_bounded(&self) -> bool {
        !self.g.is_indicator()
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.f.lipschitz_hint()
    }

    pub fn describe(&self) -> String {
        format!("{} + {}", self.f.describe(), self.g.describe())
    }

    /// `F(x) = f(x) + g(x)`, `+inf` exactly when `g(x)` is.
    pub fn value(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        let gx = self.g.value(x);
        if gx == f64::INFINITY {
            return f64::INFINITY;
        }
        self.f.value(x) + gx
    }

    /// The quadratic upper model `Q_L(., y)` with `f(y)` and `f'(y)` evaluated once.
    pub fn model(&self, y: ArrayView1<f64>, l: f64) -> Result<QuadraticModel<'_>> {
        check_dim(self.dim(), y)?;
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("step constant L must be positive, got {l}")));
        }
        let (fy, grad) = self.f.value_and_gradient(y);
        Ok(QuadraticModel {
            objective: self,
            y: y.to_owned(),
            fy,
            grad,
            l,
        })
    }

    /// `p_L(y)`: the unique minimizer of `Q_L(., y)`.
    pub fn prox_point(&self, y: ArrayView1<f64>, l: f64) -> Result<Array1<f64>> {
        self.model(y, l)?.prox_point()
    }

    /// `Q_L(x, y) = f(y) + <f'(y), x - y> + L/2 |x - y|^2 + g(x)`.
    pub fn q_upper(&self, x: ArrayView1<f64>, y: ArrayView1<f64>, l: f64) -> Result<f64> {
        let model = self.model(y, l)?;
        check_dim(self.dim(), x)?;
        Ok(model.eval(x))
    }

    /// Certified bounds of `F` on the closed ball `B[center, radius]`; `None` when `F`
    /// may be `+inf` somewhere on the ball.
    pub fn ball_bounds(&self, center: ArrayView1<f64>, radius: f64) -> Result<Option<Interval>> {
        check_dim(self.dim(), center)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        let Some(g_bounds) = self.g.ball_bounds(center, radius) else {
            return Ok(None);
        };
        Ok(self.f.ball_bounds(center, radius).map(|f_bounds| f_bounds + g_bounds))
    }
}

/// `Q_L(., y)` for a fixed `y` and `L`.
#[derive(Debug)]
pub struct QuadraticModel<'a> {
    objective: &'a Objective,
    y: Array1<f64>,
    fy: f64,
    grad: Array1<f64>,
    l: f64,
}

impl QuadraticModel<'_> {
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn f_at_y(&self) -> f64 {
        self.fy
    }

    pub fn gradient_at_y(&self) -> ArrayView1<'_, f64> {
        self.grad.view()
    }

    /// Forward step `y - f'(y)/L`, the point the prox of `g` is applied to.
    pub fn gradient_step(&self) -> Array1<f64> {
        &self.y - &(&self.grad / self.l)
    }

    pub fn with_l(&self, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("step constant L must be positive, got {l}")));
        }
        Ok(QuadraticModel {
            objective: self.objective,
            y: self.y.clone(),
            fy: self.fy,
            grad: self.grad.clone(),
            l,
        })
    }

    pub fn eval(&self, x: ArrayView1<f64>) -> f64 {
        let gx = self.objective.g.value(x);
        if gx == f64::INFINITY {
            return f64::INFINITY;
        }
        let d = &x - &self.y;
        self.fy + self.grad.dot(&d) + 0.5 * self.l * d.dot(&d) + gx
    }

    pub fn prox_point(&self) -> Result<Array1<f64>> {
        let p = self.objective.g.prox(self.gradient_step().view(), 1.0 / self.l);
        check_finite("prox point", p.view())?;
        Ok(p)
    }
}
