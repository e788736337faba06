//! Per-iteration error budgets: the local Lipschitz constant `Lambda_k`, the coercivity
//! radius `mu`, the prox-norm bound `nu_k`, the three `sigma` denominators, and the
//! admissible bound on `|e_k|`.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::problem::{norm, Objective};

/// Tolerance sequence `k -> s_k`, `k >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub enum SSchedule {
    /// `s_k = c k^{-r}`.
    PowerLaw { c: f64, r: f64 },
    /// Explicit `s_2, s_3, ...`; indices past the end read as 0.
    List(Vec<f64>),
}

impl Default for SSchedule {
    fn default() -> Self {
        SSchedule::PowerLaw { c: 1.0, r: 2.0 }
    }
}

impl SSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            SSchedule::PowerLaw { c, r } => {
                if !(*c > 0.0 && c.is_finite() && r.is_finite()) {
                    return Err(Error::invalid(format!("power schedule needs c > 0 and finite r, got c = {c}, r = {r}")));
                }
            }
            SSchedule::List(values) => {
                if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return Err(Error::invalid(format!("schedule values must be finite and nonnegative, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, k: usize) -> f64 {
        debug_assert!(k >= 2, "s_k is defined for k >= 2");
        match self {
            SSchedule::PowerLaw { c, r } => c * (k as f64).powf(-r),
            SSchedule::List(values) => k
                .checked_sub(2)
                .and_then(|i| values.get(i))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// `sum_{j=2}^{k} s_j` (0 for `k < 2`).
    pub fn partial_sum(&self, k: usize) -> f64 {
        (2..=k).map(|j| self.value(j)).sum()
    }

    /// Decay exponent `r` when the schedule is a power law.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            SSchedule::PowerLaw { r, .. } => Some(*r),
            SSchedule::List(_) => None,
        }
    }
}

impl fmt::Display for SSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SSchedule::PowerLaw { c, r } => write!(f, "power {c:.16e} {r:.16e}"),
            SSchedule::List(values) => {
                write!(f, "list")?;
                for v in values {
                    write!(f, " {v:.16e}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SSchedule {
    type Err = Error;

    /// `power c r` or `list v2 v3 ...`.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let reals = |ts: &[&str]| -> Result<Vec<f64>> {
            ts.iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::invalid(format!("bad real `{t}` in schedule"))))
                .collect()
        };
        let schedule = match tokens.split_first() {
            Some((&"power", rest)) if rest.len() == 2 => {
                let v = reals(rest)?;
                SSchedule::PowerLaw { c: v[0], r: v[1] }
            }
            Some((&"list", rest)) => SSchedule::List(reals(rest)?),
            _ => return Err(Error::invalid(format!("schedule must be `power c r` or `list v2 v3 ...`, got `{s}`"))),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaVariant {
    /// Uses the exact prox-point norms `|p_{L_k}(y_k)|`, `|p_{L_{k-1}}(y_{k-1})|`.
    Sigma,
    /// Uses `|x_k - ((t_k - 1)/t_k) x_{k-1}|`; for when the prox point is only approximate.
    SigmaPrime,
    /// Uses the computable bounds `nu_k`, `nu_{k-1}` on the prox-point norms.
    SigmaTilde,
}

impl SigmaVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaVariant::Sigma => "sigma",
            SigmaVariant::SigmaPrime => "sigma_prime",
            SigmaVariant::SigmaTilde => "sigma_tilde",
        }
    }
}

impl FromStr for SigmaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sigma" => Ok(SigmaVariant::Sigma),
            "sigma_prime" => Ok(SigmaVariant::SigmaPrime),
            "sigma_tilde" => Ok(SigmaVariant::SigmaTilde),
            other => Err(Error::invalid(format!("unknown sigma variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetConfig {
    /// Fixed ball radius parameter `s_1 > 0`.
    pub s1: f64,
    /// Upper bound on the norm of the reference point.
    pub mu: f64,
    pub schedule: SSchedule,
    pub variant: SigmaVariant,
}

impl BudgetConfig {
    pub fn new(s1: f64, mu: f64, schedule: SSchedule, variant: SigmaVariant) -> Result<Self> {
        let cfg = BudgetConfig {
            s1,
            mu,
            schedule,
            variant,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s1.is_finite()) {
            return Err(Error::invalid(format!("s1 must be positive, got {}", self.s1)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be finite and nonnegative, got {}", self.mu)));
        }
        self.schedule.validate()
    }
}

/// Budget computation for one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetReport {
    pub bounded: bool,
    pub lambda: f64,
    pub sigma: f64,
    pub budget: f64,
    pub nu: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaReport {
    pub bounded: bool,
    pub lambda: f64,
}

/// `Lambda_k = (M_k - m_k) / s1` from certified bounds on `B[x_k, 2 s1]`.
pub fn lambda_k(objective: &Objective, x_k: ArrayView1<f64>, s1: f64) -> Result<LambdaReport> {
    lambda_on_ball(objective, x_k, 2.0 * s1, s1)
}

/// `(M - m) / s1` with `M`, `m` certified on `B[center, outer_radius]`.
///
/// Any ball containing `B[x_k, 2 s1]` gives a valid (larger) constant; the solver uses
/// `B[p_k, 3 s1]` since `x_k` is not known until the perturbation is chosen.
pub fn lambda_on_ball(
    objective: &Objective,
    center: ArrayView1<f64>,
    outer_radius: f64,
    s1: f64,
) -> Result<LambdaReport> {
    if !(s1 > 0.0 && s1.is_finite()) {
        return Err(Error::invalid(format!("s1 must be positive, got {s1}")));
    }
    match objective.ball_bounds(center, outer_radius)? {
        None => Ok(LambdaReport {
            bounded: false,
            lambda: 0.0,
        }),
        Some(bounds) => {
            let lower = bounds.lower;
            let mut upper = bounds.upper;
            if upper <= lower {
                upper = lower + 1e-12 * (1.0 + lower.abs());
            }
            Ok(LambdaReport {
                bounded: true,
                lambda: (upper - lower) / s1,
            })
        }
    }
}

/// Radius containing every minimizer of `|Ax - b|^2 + lambda |x|_1`: `|b|^2 / min(lambda, 1)`.
pub fn estimate_mu(objective: &Objective) -> Result<f64> {
    let data = objective.smooth().data_norm_sq();
    let lambda = objective.nonsmooth().l1_weight();
    match (data, lambda) {
        (Some(b2), Some(lambda)) if lambda >= 1.0 => Ok(b2),
        (Some(b2), Some(lambda)) if lambda > 0.0 => Ok(b2 / lambda),
        _ => Err(Error::MuUnavailable),
    }
}

/// Computable bound `nu >= |p_L(y)|`: with `c = y - f'(y)/L`,
/// `nu = |c| + sqrt(2 (g(c) - inf g) / L)`.
pub fn nu_k(objective: &Objective, y: ArrayView1<f64>, l: f64) -> Result<f64> {
    let g_lb = objective.nonsmooth().lower_bound();
    if !g_lb.is_finite() {
        return Err(Error::invalid("nu needs a finite lower bound on g"));
    }
    let model = objective.model(y, l)?;
    Ok(nu_from_step(objective, model.gradient_step().view(), l))
}

pub(crate) fn nu_from_step(objective: &Objective, step: ArrayView1<f64>, l: f64) -> f64 {
    let g = objective.nonsmooth();
    let gc = g.value(step);
    if gc == f64::INFINITY {
        return f64::INFINITY;
    }
    norm(step) + (2.0 * (gc - g.lower_bound()) / l).max(0.0).sqrt()
}

/// The norms each sigma variant needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaGeometry {
    Exact { p_norm: f64, p_prev_norm: f64 },
    Shifted { norm: f64 },
    Nu { nu: f64, nu_prev: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaInputs {
    pub t: f64,
    pub l: f64,
    pub lambda: f64,
    pub s1: f64,
    pub mu: f64,
}

/// Evaluates the chosen sigma denominator.
pub fn sigma(variant: SigmaVariant, inputs: &SigmaInputs, geometry: SigmaGeometry) -> Result<f64> {
    let SigmaInputs { t, l, lambda, s1, mu } = *inputs;
    let (middle, ball_terms) = match (variant, geometry) {
        (SigmaVariant::Sigma, SigmaGeometry::Exact { p_norm, p_prev_norm }) => (p_norm + p_prev_norm, 4.0 * s1),
        (SigmaVariant::SigmaPrime, SigmaGeometry::Shifted { norm }) => (norm, 2.0 * s1),
        (SigmaVariant::SigmaTilde, SigmaGeometry::Nu { nu, nu_prev }) => (nu + nu_prev, 4.0 * s1),
        (variant, _) => return Err(Error::MissingGeometry(variant.name())),
    };
    let value = 2.0 * t * t * (lambda / l + middle + ball_terms + mu / t);
    debug_assert!(value.is_nan() || value >= 2.0 * t * t * ball_terms);
    Ok(value)
}

/// `min{s1, s_k / sigma_k}` when `F` is bounded on the ball, else 0.
pub fn admissible_budget(cfg: &BudgetConfig, k: usize, sigma_k: f64, bounded: bool) -> f64 {
    if !bounded {
        return 0.0;
    }
    let s_k = cfg.schedule.value(k);
    if s_k == 0.0 || sigma_k == f64::INFINITY {
        return 0.0;
    }
    cfg.s1.min(s_k / sigma_k)
}
