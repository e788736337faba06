//! Post-run checks over completed traces: bound compliance, budget audits, rate fits
//! and the predicted-rate tables.

use std::fmt;

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::solver::{reference_outside_mu, theoretical_bound};
use crate::trace::Trace;

/// Relative slack applied to recorded norms against their budgets.
const AUDIT_ULPS: f64 = 4.0 * f64::EPSILON;

/// Absolute-plus-relative tolerance `1e-7 (1 + |F_ref|)` for bound compliance.
pub fn compliance_tolerance(f_ref: f64) -> f64 {
    1e-7 * (1.0 + f_ref.abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Compliance {
    /// Fraction of records with `F(x_k) - F_ref <= bound + tol`.
    pub fraction: f64,
    /// Smallest `bound + tol - (F(x_k) - F_ref)`; negative means a violation.
    pub worst_slack: f64,
    pub checked: usize,
    /// The reference point lies outside the `mu`-ball the budgets were certified for.
    pub reference_outside_mu: bool,
}

impl Compliance {
    pub fn all(&self) -> bool {
        self.fraction == 1.0
    }
}

/// Record `k` holds `F(x_k)`, which the bound covers with index `k - 1`.
pub fn check_bound_compliance(trace: &Trace, x_ref: ArrayView1<f64>, f_ref: f64) -> Result<Compliance> {
    if trace.is_empty() {
        return Err(Error::InsufficientData("empty trace".into()));
    }
    let tol = compliance_tolerance(f_ref);
    let mut ok = 0usize;
    let mut worst = f64::INFINITY;
    for r in trace.records() {
        let bound = theoretical_bound(&trace.meta, r.k - 1, x_ref, f_ref)?;
        let slack = bound + tol - (r.f - f_ref);
        if slack >= 0.0 {
            ok += 1;
        }
        worst = worst.min(slack);
    }
    Ok(Compliance {
        fraction: ok as f64 / trace.len() as f64,
        worst_slack: worst,
        checked: trace.len(),
        reference_outside_mu: reference_outside_mu(&trace.meta, x_ref),
    })
}

/// `(k, F(x_k) - F_ref, bound)` for every record.
pub fn bound_series(trace: &Trace, x_ref: ArrayView1<f64>, f_ref: f64) -> Result<Vec<(usize, f64, f64)>> {
    trace
        .records()
        .iter()
        .map(|r| Ok((r.k, r.f - f_ref, theoretical_bound(&trace.meta, r.k - 1, x_ref, f_ref)?)))
        .collect()
}

pub fn bound_csv(trace: &Trace, x_ref: ArrayView1<f64>, f_ref: f64) -> Result<String> {
    let mut out = String::from("k,gap,bound\n");
    for (k, gap, bound) in bound_series(trace, x_ref, f_ref)? {
        out.push_str(&format!("{k},{gap:.16e},{bound:.16e}\n"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetAudit {
    /// Iterations with `|e_k| > budget_k`.
    pub over_budget: Vec<usize>,
    /// Iterations with `|e_k| > s_k / (s1 k^2)`.
    pub over_cap: Vec<usize>,
}

impl BudgetAudit {
    pub fn within_budget(&self) -> bool {
        self.over_budget.is_empty()
    }

    pub fn within_cap(&self) -> bool {
        self.over_cap.is_empty()
    }
}

pub fn budget_audit(trace: &Trace) -> BudgetAudit {
    let meta = &trace.meta;
    let mut audit = BudgetAudit {
        over_budget: Vec::new(),
        over_cap: Vec::new(),
    };
    for r in trace.records() {
        if r.e_norm > r.budget * (1.0 + AUDIT_ULPS) {
            audit.over_budget.push(r.k);
        }
        if r.e_norm > budget_cap(meta.budget.schedule.value(r.k), meta.budget.s1, r.k) * (1.0 + AUDIT_ULPS) {
            audit.over_cap.push(r.k);
        }
    }
    audit
}

/// `s_k / (s1 k^2)`.
pub fn budget_cap(s_k: f64, s1: f64, k: usize) -> f64 {
    let kk = k as f64;
    s_k / (s1 * kk * kk)
}

/// Predicted order of `F(x_k) - F(x_ref)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    InverseSquare,
    LogOverSquare,
    /// `O(1/k^p)`.
    Power(f64),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::InverseSquare => f.write_str("O(1/k^2)"),
            Regime::LogOverSquare => f.write_str("O(ln k/k^2)"),
            Regime::Power(p) if *p == 1.0 => f.write_str("O(1/k)"),
            Regime::Power(p) => write!(f, "O(1/k^{p})"),
        }
    }
}

/// Rate implied by a tolerance schedule `s_k = O(1/k^r)`.
pub fn predicted_regime_r(r: f64) -> Result<Regime> {
    if !(r >= -1.0) {
        return Err(Error::invalid(format!("r must be >= -1, got {r}")));
    }
    Ok(if r > 1.0 {
        Regime::InverseSquare
    } else if r == 1.0 {
        Regime::LogOverSquare
    } else {
        Regime::Power(1.0 + r)
    })
}

/// Rate implied by perturbations with `|e_k| = Theta(1/k^omega)`.
pub fn predicted_regime_omega(omega: f64) -> Result<Regime> {
    if !(omega >= 1.0) {
        return Err(Error::invalid(format!("omega must be >= 1, got {omega}")));
    }
    Ok(if omega > 3.0 {
        Regime::InverseSquare
    } else if omega == 3.0 {
        Regime::LogOverSquare
    } else {
        Regime::Power(omega - 1.0)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Least-squares slope of `log(F(x_k) - F_ref)` against `log k`.
    pub fitted_slope: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
    pub used: usize,
    /// Window points whose gap fell below the positivity floor.
    pub excluded: usize,
    pub compliance: Option<f64>,
    pub predicted_regime: Option<Regime>,
}

/// Earliest iteration admitted into a rate fit.
pub const FIT_MIN_K: usize = 50;
const FIT_MIN_RECORDS: usize = 100;
const FIT_MIN_POINTS: usize = 10;

/// Fits the tail `window_fraction` of the trace (restricted to `k >= 50`).
pub fn fit_rate(trace: &Trace, f_ref: f64, window_fraction: f64) -> Result<RateReport> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::invalid(format!("window fraction must be in (0, 1], got {window_fraction}")));
    }
    let records = trace.records();
    if records.len() < FIT_MIN_RECORDS {
        return Err(Error::InsufficientData(format!(
            "rate fit needs {FIT_MIN_RECORDS} records, trace has {}",
            records.len()
        )));
    }
    let skip = records.len() - ((records.len() as f64 * window_fraction).round() as usize).max(1);
    let window: Vec<_> = records[skip..].iter().filter(|r| r.k >= FIT_MIN_K).collect();
    let floor = 1e-14 * (1.0 + f_ref.abs());
    let points: Vec<(f64, f64)> = window
        .iter()
        .filter(|r| r.f - f_ref > floor)
        .map(|r| ((r.k as f64).ln(), (r.f - f_ref).ln()))
        .collect();
    if points.len() < FIT_MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "only {} usable points in the fit window",
            points.len()
        )));
    }
    let (slope, r_squared) = least_squares_line(&points);
    Ok(RateReport {
        fitted_slope: slope,
        r_squared,
        window: (window.first().map_or(0, |r| r.k), window.last().map_or(0, |r| r.k)),
        used: points.len(),
        excluded: window.len() - points.len(),
        compliance: None,
        predicted_regime: None,
    })
}

/// Fit plus compliance plus the regime implied by the recorded schedule.
pub fn rate_report(
    trace: &Trace,
    x_ref: ArrayView1<f64>,
    f_ref: f64,
    window_fraction: f64,
) -> Result<RateReport> {
    let mut report = fit_rate(trace, f_ref, window_fraction)?;
    report.compliance = Some(check_bound_compliance(trace, x_ref, f_ref)?.fraction);
    report.predicted_regime = trace
        .meta
        .budget
        .schedule
        .exponent()
        .and_then(|r| predicted_regime_r(r).ok());
    Ok(report)
}

/// Returns `(slope, R^2)`.
fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r_squared)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaAudit {
    /// `|e_k| >= c s_k / sigma_k` wherever the budget is `s_k / sigma_k`, and every
    /// `sigma_k` stays below the `O(k^2)` envelope built from running maxima.
    pub lower_ok: bool,
    /// `|e_k| <= s_k / (s1 k^2)` at every iteration.
    pub upper_ok: bool,
    /// Iterations where the lower bound was actually tested.
    pub lower_checked: usize,
}

/// Two-sided check that a saturating run realizes `|e_k| ~ s_k / k^2`.
///
/// Needs the in-memory trace of the run (norms of `p_k` are not serialized).
pub fn theta_audit(trace: &Trace) -> Result<ThetaAudit> {
    let meta = &trace.meta;
    let fill = match meta.strategy_kind() {
        "zero" => None,
        "saturate" => Some(
            meta.strategy_fill()
                .ok_or_else(|| Error::MissingMetadata("saturate fill".into()))?,
        ),
        other => {
            return Err(Error::StrategyMismatch(format!(
                "theta audit needs a saturating or zero strategy, trace used `{other}`"
            )))
        }
    };
    let upper_ok = budget_audit(trace).within_cap();
    let Some(c) = fill else {
        return Ok(ThetaAudit {
            lower_ok: true,
            upper_ok,
            lower_checked: 0,
        });
    };

    let s1 = meta.budget.s1;
    let mut lambda_max = 0.0f64;
    let mut radius_max = meta.x1.dot(&meta.x1).sqrt();
    let mut lower_ok = true;
    let mut checked = 0;
    for r in trace.records() {
        let detail = r
            .detail
            .as_ref()
            .ok_or_else(|| Error::MissingMetadata("theta audit needs an in-memory trace".into()))?;
        lambda_max = lambda_max.max(r.lambda);
        radius_max = radius_max.max(detail.p_norm).max(detail.x_norm);
        if r.e_norm == 0.0 && r.budget == 0.0 {
            continue;
        }
        let s_k = meta.budget.schedule.value(r.k);
        let uncapped = s_k / r.sigma;
        if uncapped >= s1 {
            continue;
        }
        checked += 1;
        let big_m = (4.0 * s1).max(2.0 * meta.budget.mu).max(2.0 * radius_max);
        let kk = r.k as f64;
        let envelope = 2.0 * meta.t2 * meta.t2 * (lambda_max / meta.rho + 1.5 * big_m + 6.0 * s1) * kk * kk;
        let realized = r.e_norm >= c * uncapped * (1.0 - 2.0 * AUDIT_ULPS);
        if !realized || r.sigma > envelope * (1.0 + AUDIT_ULPS) {
            lower_ok = false;
        }
    }
    Ok(ThetaAudit {
        lower_ok,
        upper_ok,
        lower_checked: checked,
    })
}
