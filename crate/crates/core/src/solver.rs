//! The inexact FISTA loop and the post-hoc convergence bound.

use std::sync::Arc;
use std::time::Instant;

use log::{debug, info, warn};
use ndarray::{Array1, ArrayView1};

use crate::budget::{
    admissible_budget, lambda_k, lambda_on_ball, nu_from_step, sigma, BudgetConfig, SigmaGeometry,
    SigmaInputs, SigmaVariant,
};
use crate::error::{Error, Result};
use crate::perturb::PerturbStrategy;
use crate::problem::{check_dim, norm, AuxCost, Objective};
use crate::schedule::{
    backtracking_search, extrapolate, majorizes, momentum_next, tau_rho_bounds, StepSizeRule,
};
use crate::trace::{Diagnostics, Record, RecordDetail, Trace, TraceMeta};

/// Halvings tried before a `sigma_prime` run gives up on a nonzero `e_k`.
const SHIFTED_TRIALS: usize = 60;

/// Starting point `(x_1, y_2, t_2)`. Unset vectors default to zero and `y_2 = x_1`.
#[derive(Clone, Debug)]
pub struct Init {
    pub x1: Option<Array1<f64>>,
    pub y2: Option<Array1<f64>>,
    pub t2: f64,
}

impl Default for Init {
    fn default() -> Self {
        Init {
            x1: None,
            y2: None,
            t2: 1.0,
        }
    }
}

/// A minimizer (or any finite-value point) to measure against.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub point: Array1<f64>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub objective: Objective,
    pub rule: StepSizeRule,
    pub budget: BudgetConfig,
    pub strategy: PerturbStrategy,
    /// Last iteration index `K`; records cover `k = 2..=K`.
    pub iterations: usize,
    pub init: Init,
    pub phi: Vec<Arc<dyn AuxCost>>,
    pub reference: Option<Reference>,
    /// Recompute `Lambda` at `x_k` and check `F(x_k) <= Q(x_k, y_k)` every iteration.
    pub diagnostics: bool,
    /// Test fixture: multiply every `e_k` by this factor after the budget is fixed.
    /// Disables the budget assertion.
    pub fault_scale: Option<f64>,
}

impl RunConfig {
    pub fn new(
        objective: Objective,
        rule: StepSizeRule,
        budget: BudgetConfig,
        strategy: PerturbStrategy,
        iterations: usize,
    ) -> Self {
        RunConfig {
            objective,
            rule,
            budget,
            strategy,
            iterations,
            init: Init::default(),
            phi: Vec::new(),
            reference: None,
            diagnostics: false,
            fault_scale: None,
        }
    }

    pub fn with_phi(mut self, phi: Arc<dyn AuxCost>) -> Self {
        self.phi.push(phi);
        self
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 2 {
            return Err(Error::invalid(format!("K must be >= 2, got {}", self.iterations)));
        }
        self.rule.validate()?;
        self.budget.validate()?;
        self.strategy.validate()?;
        let n = self.objective.dim();
        for v in [&self.init.x1, &self.init.y2].into_iter().flatten() {
            check_dim(n, v.view())?;
        }
        if let Some(r) = &self.reference {
            check_dim(n, r.point.view())?;
        }
        if !(self.init.t2 >= 1.0 && self.init.t2.is_finite()) {
            return Err(Error::invalid(format!("t_2 must be >= 1, got {}", self.init.t2)));
        }
        if let (StepSizeRule::Constant { l }, Some(hint)) = (self.rule, self.objective.lipschitz_hint()) {
            if l < hint {
                return Err(Error::invalid(format!("constant step L = {l:e} is below the Lipschitz bound {hint:e}")));
            }
        }
        if let Some(scale) = self.fault_scale {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::invalid("fault scale must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub final_point: Array1<f64>,
    /// Iterate with the smallest recorded `F`.
    pub best_point: Array1<f64>,
    pub best_value: f64,
    pub reference: Option<Reference>,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let obj = &cfg.objective;
    let n = obj.dim();
    let budget_cfg = &cfg.budget;
    let s1 = budget_cfg.s1;

    let x1 = cfg.init.x1.clone().unwrap_or_else(|| Array1::zeros(n));
    let y2 = cfg.init.y2.clone().unwrap_or_else(|| x1.clone());
    let hint = obj.lipschitz_hint();
    if hint.is_none() {
        warn!("no Lipschitz bound for {}; tau will be the largest L_k observed", obj.describe());
    }
    let bounds = tau_rho_bounds(&cfg.rule, hint);
    let f_x1 = obj.value_unchecked(x1.view());

    let mut trace = Trace::new(TraceMeta {
        objective: obj.describe(),
        dim: n,
        rule: cfg.rule,
        tau: bounds.tau,
        rho: bounds.rho,
        tau_empirical: bounds.empirical,
        l1: cfg.rule.initial_l(),
        budget: budget_cfg.clone(),
        strategy: cfg.strategy.describe(),
        t2: cfg.init.t2,
        x1: x1.clone(),
        y2: y2.clone(),
        f_x1,
        iterations: cfg.iterations,
        phi_names: cfg.phi.iter().map(|p| p.name().to_string()).collect(),
        fault_scale: cfg.fault_scale,
    });

    let mut x_prev = x1.clone();
    let mut y = y2;
    let mut t = cfg.init.t2;
    let mut l_prev = cfg.rule.initial_l();
    let mut l_max = l_prev;
    let mut p_prev_norm = norm(x1.view());
    let mut nu_prev = norm(x1.view());
    let mut best = (x1.clone(), f_x1);

    for k in 2..=cfg.iterations {
        let started = Instant::now();
        let oracle = |e: Error| match e {
            Error::BacktrackingCap { .. } | Error::InvalidParameter(_) => e,
            other => Error::Oracle {
                iteration: k,
                message: other.to_string(),
            },
        };
        let (l, p, trials) = match cfg.rule {
            StepSizeRule::Constant { l } => (l, obj.prox_point(y.view(), l).map_err(oracle)?, 0),
            StepSizeRule::Backtracking { eta, .. } => {
                let out = backtracking_search(obj, y.view(), l_prev, eta).map_err(oracle)?;
                (out.l, out.p, out.trials)
            }
        };
        l_max = l_max.max(l);

        let lam = lambda_on_ball(obj, p.view(), 3.0 * s1, s1)?;
        let inputs = SigmaInputs {
            t,
            l,
            lambda: lam.lambda,
            s1,
            mu: budget_cfg.mu,
        };
        let p_norm = norm(p.view());
        let mut nu = None;
        let (sigma_k, budget, mut e) = match budget_cfg.variant {
            SigmaVariant::Sigma => {
                let geometry = SigmaGeometry::Exact { p_norm, p_prev_norm };
                let s = sigma(SigmaVariant::Sigma, &inputs, geometry)?;
                let b = admissible_budget(budget_cfg, k, s, lam.bounded);
                (s, b, cfg.strategy.make_perturbation(p.view(), b, k))
            }
            SigmaVariant::SigmaTilde => {
                let step = obj.model(y.view(), l).map_err(oracle)?.gradient_step();
                let nu_k = nu_from_step(obj, step.view(), l);
                nu = Some(nu_k);
                let geometry = SigmaGeometry::Nu { nu: nu_k, nu_prev };
                let s = sigma(SigmaVariant::SigmaTilde, &inputs, geometry)?;
                let b = admissible_budget(budget_cfg, k, s, lam.bounded);
                (s, b, cfg.strategy.make_perturbation(p.view(), b, k))
            }
            SigmaVariant::SigmaPrime => shifted_budget(cfg, k, &inputs, lam.bounded, p.view(), x_prev.view())?,
        };
        if let Some(scale) = cfg.fault_scale {
            e *= scale;
        }
        let e_norm = norm(e.view());
        if cfg.fault_scale.is_none() && e_norm > budget * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::BudgetBreach {
                iteration: k,
                e_norm,
                budget,
            });
        }

        let x = &p + &e;
        let f = obj.value_unchecked(x.view());
        if !f.is_finite() {
            if e_norm == 0.0 {
                return Err(Error::Oracle {
                    iteration: k,
                    message: format!("F(x_k) = {f} with e_k = 0: the model or prox is inconsistent"),
                });
            }
            return Err(Error::Divergence { iteration: k });
        }
        let diagnostics = if cfg.diagnostics {
            let model = obj.model(y.view(), l).map_err(oracle)?;
            let d = Diagnostics {
                surrogate_majorizes: majorizes(obj, &model, x.view()),
                lambda_at_iterate: lambda_k(obj, x.view(), s1)?.lambda,
            };
            if !d.surrogate_majorizes {
                info!("k = {k}: F(x_k) > Q(x_k, y_k) although F(p_k) <= Q(p_k, y_k)");
            }
            Some(d)
        } else {
            None
        };
        let phi = cfg.phi.iter().map(|c| c.value(x.view())).collect();
        if f < best.1 || !best.1.is_finite() {
            best = (x.clone(), f);
        }
        trace.push(Record {
            k,
            f,
            e_norm,
            budget,
            sigma: sigma_k,
            lambda: lam.lambda,
            l,
            t,
            phi,
            detail: Some(RecordDetail {
                bounded: lam.bounded,
                p_norm,
                x_norm: norm(x.view()),
                nu,
                backtracking_trials: trials,
                wall: started.elapsed(),
                diagnostics,
            }),
        })?;

        let t_next = momentum_next(t)?;
        y = extrapolate(x.view(), x_prev.view(), t, t_next)?;
        x_prev = x;
        t = t_next;
        l_prev = l;
        p_prev_norm = p_norm;
        if let Some(v) = nu {
            nu_prev = v;
        }
    }
    if trace.meta.tau_empirical {
        trace.meta.tau = l_max;
    }
    debug!("run finished: {} records, best F = {:e}", trace.len(), best.1);

    Ok(RunOutput {
        trace,
        final_point: x_prev,
        best_point: best.0,
        best_value: best.1,
        reference: cfg.reference.clone(),
    })
}

/// `sigma_prime` depends on `x_k` itself: halve the trial magnitude until the realized
/// perturbation fits the budget computed at the perturbed point.
fn shifted_budget(
    cfg: &RunConfig,
    k: usize,
    inputs: &SigmaInputs,
    bounded: bool,
    p: ArrayView1<f64>,
    x_prev: ArrayView1<f64>,
) -> Result<(f64, f64, Array1<f64>)> {
    let beta = (inputs.t - 1.0) / inputs.t;
    let anchor = beta * &x_prev;
    let at = |x: ArrayView1<f64>| -> Result<(f64, f64)> {
        let geometry = SigmaGeometry::Shifted {
            norm: norm((&x - &anchor).view()),
        };
        let s = sigma(SigmaVariant::SigmaPrime, inputs, geometry)?;
        Ok((s, admissible_budget(&cfg.budget, k, s, bounded)))
    };
    let (sigma_p, budget_p) = at(p)?;
    let mut trial = budget_p;
    for _ in 0..SHIFTED_TRIALS {
        if trial <= 0.0 {
            break;
        }
        let e = cfg.strategy.make_perturbation(p, trial, k);
        let x = &p + &e;
        let (s, b) = at(x.view())?;
        if norm(e.view()) <= b {
            return Ok((s, b, e));
        }
        trial *= 0.5;
    }
    Ok((sigma_p, budget_p, Array1::zeros(p.len())))
}

/// Right-hand side of the convergence bound for `F(x_{k+1}) - F(x_ref)`, `k >= 1`.
pub fn theoretical_bound(meta: &TraceMeta, k: usize, x_ref: ArrayView1<f64>, f_ref: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("the bound starts at k = 1"));
    }
    check_dim(meta.dim, x_ref)?;
    let t2 = meta.t2;
    let first = if t2 == 1.0 {
        0.0
    } else {
        (2.0 / meta.l1) * t2 * (t2 - 1.0) * (meta.f_x1 - f_ref)
    };
    let w = t2 * &meta.y2 - (t2 - 1.0) * &meta.x1 - x_ref;
    let dist_sq = w.dot(&w);
    let sum = meta.budget.schedule.partial_sum(k + 1);
    let kk = (k + 1) as f64;
    Ok(2.0 * meta.tau * (first + dist_sq + sum) / (kk * kk))
}

/// True when `x_ref` lies outside the `mu`-ball the budgets were certified for.
pub fn reference_outside_mu(meta: &TraceMeta, x_ref: ArrayView1<f64>) -> bool {
    norm(x_ref) > meta.budget.mu
}

/// Upper estimate of the bound's constant without knowing the minimizer, for
/// objectives with `F >= 0` and minimizers inside the `mu`-ball.
pub fn tau12_upper(meta: &TraceMeta) -> f64 {
    let t2 = meta.t2;
    let first = if t2 == 1.0 {
        0.0
    } else {
        (2.0 / meta.l1) * t2 * (t2 - 1.0) * meta.f_x1
    };
    let anchor = norm((t2 * &meta.y2 - (t2 - 1.0) * &meta.x1).view());
    2.0 * meta.tau * (first + (anchor + meta.budget.mu).powi(2))
}

/// Exact FISTA from the origin; returns the best iterate seen.
///
/// Uses the constant step `L = lipschitz_hint` when available, otherwise backtracking
/// from `L = 1` with `eta = 2`.
pub fn reference_solution(objective: &Objective, iterations: usize) -> Result<Reference> {
    if iterations == 0 {
        return Err(Error::invalid("reference run needs at least one iteration"));
    }
    let n = objective.dim();
    let hint = objective.lipschitz_hint();
    let mut x_prev = Array1::<f64>::zeros(n);
    let mut y = x_prev.clone();
    let mut t = 1.0;
    let mut l = hint.unwrap_or(1.0);
    let mut best = Reference {
        value: objective.value_unchecked(x_prev.view()),
        point: x_prev.clone(),
    };
    for k in 2..=iterations + 1 {
        let x = match hint {
            Some(_) => objective.prox_point(y.view(), l)?,
            None => {
                let out = backtracking_search(objective, y.view(), l, 2.0)?;
                l = out.l;
                out.p
            }
        };
        let f = objective.value_unchecked(x.view());
        if !f.is_finite() {
            return Err(Error::Divergence { iteration: k });
        }
        if f < best.value || !best.value.is_finite() {
            best.value = f;
            best.point.assign(&x);
        }
        let t_next = momentum_next(t)?;
        y = extrapolate(x.view(), x_prev.view(), t, t_next)?;
        x_prev = x;
        t = t_next;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::SSchedule;
    use crate::problem::{L1Norm, LeastSquares, ZeroTerm};
    use ndarray::{array, Array2};

    fn shifted_identity(b: Array1<f64>) -> Objective {
        let n = b.len();
        Objective::new(LeastSquares::with_operator_norm(Array2::eye(n), b, 1.0).unwrap(), ZeroTerm)
    }

    fn exact_budget() -> BudgetConfig {
        BudgetConfig::new(1.0, 10.0, SSchedule::default(), SigmaVariant::Sigma).unwrap()
    }

    #[test]
    fn one_prox_step_solves_the_shifted_identity() {
        let b = array![1.0, -2.0, 0.5];
        let cfg = RunConfig::new(
            shifted_identity(b.clone()),
            StepSizeRule::Constant { l: 2.0 },
            exact_budget(),
            PerturbStrategy::Zero,
            6,
        );
        let out = run(&cfg).unwrap();
        assert_eq!(out.final_point, b);
        assert!(out.trace.records().iter().all(|r| r.f == 0.0 && r.e_norm == 0.0));
        let reference = reference_solution(&cfg.objective, 5).unwrap();
        assert_eq!(reference.point, b);
        assert_eq!(reference.value, 0.0);
    }

    #[test]
    fn one_dimensional_lasso_reference() {
        let f = LeastSquares::with_operator_norm(array![[1.0]], array![2.0], 1.0).unwrap();
        let obj = Objective::new(f, L1Norm::new(1.0).unwrap());
        let r = reference_solution(&obj, 200).unwrap();
        assert!((r.point[0] - 1.5).abs() < 1e-12);
        assert!((r.value - 1.75).abs() < 1e-12);
    }

    #[test]
    fn constant_step_below_hint_is_rejected() {
        let cfg = RunConfig::new(
            shifted_identity(array![1.0]),
            StepSizeRule::Constant { l: 1.0 },
            exact_budget(),
            PerturbStrategy::Zero,
            5,
        );
        assert!(run(&cfg).is_err());
        let mut short = cfg.clone();
        short.rule = StepSizeRule::Constant { l: 2.0 };
        short.iterations = 1;
        assert!(run(&short).is_err());
    }

    #[test]
    fn bound_reduces_to_the_distance_term() {
        let cfg = RunConfig::new(
            shifted_identity(array![3.0, 4.0]),
            StepSizeRule::Constant { l: 2.0 },
            BudgetConfig::new(1.0, 10.0, SSchedule::List(vec![]), SigmaVariant::Sigma).unwrap(),
            PerturbStrategy::Zero,
            3,
        );
        let trace = run(&cfg).unwrap().trace;
        let x_ref = array![3.0, 4.0];
        let b = theoretical_bound(&trace.meta, 4, x_ref.view(), 0.0).unwrap();
        assert_eq!(b, 2.0 * 2.0 * 25.0 / 25.0);
        assert!(!reference_outside_mu(&trace.meta, x_ref.view()));
        assert!(reference_outside_mu(&trace.meta, array![30.0, 0.0].view()));
    }

    #[test]
    fn perturbed_iterates_stay_within_budget() {
        let a = array![[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]];
        let obj = Objective::new(LeastSquares::new(a, array![1.0, 1.0]).unwrap(), L1Norm::new(1.0).unwrap());
        for variant in [SigmaVariant::Sigma, SigmaVariant::SigmaPrime, SigmaVariant::SigmaTilde] {
            let budget = BudgetConfig::new(0.5, 2.0, SSchedule::PowerLaw { c: 1.0, r: 0.0 }, variant).unwrap();
            let strategy = PerturbStrategy::RandomBall { seed: 9, fill: 1.0 };
            let mut cfg = RunConfig::new(obj.clone(), StepSizeRule::Backtracking { l1: 0.1, eta: 2.0 }, budget, strategy, 40);
            cfg.diagnostics = true;
            let trace = run(&cfg).unwrap().trace;
            for r in trace.records() {
                assert!(r.e_norm <= r.budget * (1.0 + 4.0 * f64::EPSILON));
                assert!(r.budget <= 0.5);
            }
            assert!(trace.records().iter().any(|r| r.e_norm > 0.0), "{variant:?}");
        }
    }
}
