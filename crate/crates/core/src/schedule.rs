//! Momentum recursion, extrapolation, and the two step-size engines.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::problem::{check_dim, Objective, QuadraticModel};

/// Default cap on backtracking trials before the run is aborted.
pub const BACKTRACKING_TRIAL_CAP: usize = 200;

/// `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
pub fn momentum_next(t: f64) -> Result<f64> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::invalid(format!("momentum parameter must be >= 1, got {t}")));
    }
    Ok(0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()))
}

/// `(k, t_k)` pair; `k` starts at 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumState {
    pub k: usize,
    pub t: f64,
}

impl MomentumState {
    pub fn new(t2: f64) -> Result<Self> {
        if !(t2 >= 1.0 && t2.is_finite()) {
            return Err(Error::invalid(format!("t_2 must be >= 1, got {t2}")));
        }
        Ok(MomentumState { k: 2, t: t2 })
    }

    pub fn advance(&self) -> MomentumState {
        MomentumState {
            k: self.k + 1,
            t: momentum_next(self.t).expect("t >= 1 is preserved"),
        }
    }
}

/// `y_{k+1} = x_k + ((t_k - 1) / t_{k+1}) (x_k - x_{k-1})`.
pub fn extrapolate(
    x: ArrayView1<f64>,
    x_prev: ArrayView1<f64>,
    t: f64,
    t_next: f64,
) -> Result<Array1<f64>> {
    check_dim(x.len(), x_prev)?;
    if !(t >= 1.0 && t_next >= 1.0) {
        return Err(Error::invalid(format!("momentum parameters must be >= 1, got {t}, {t_next}")));
    }
    let beta = (t - 1.0) / t_next;
    if beta == 0.0 {
        return Ok(x.to_owned());
    }
    Ok(&x + &(beta * (&x - &x_prev)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSizeRule {
    Constant { l: f64 },
    Backtracking { l1: f64, eta: f64 },
}

impl StepSizeRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSizeRule::Constant { l } if !(l > 0.0 && l.is_finite()) => {
                Err(Error::invalid(format!("constant step needs L > 0, got {l}")))
            }
            StepSizeRule::Backtracking { l1, .. } if !(l1 > 0.0 && l1.is_finite()) => {
                Err(Error::invalid(format!("backtracking needs L_1 > 0, got {l1}")))
            }
            StepSizeRule::Backtracking { eta, .. } if !(eta > 1.0 && eta.is_finite()) => {
                Err(Error::invalid(format!("backtracking needs eta > 1, got {eta}")))
            }
            _ => Ok(()),
        }
    }

    /// `L_1`: the constant itself, or the backtracking seed.
    pub fn initial_l(&self) -> f64 {
        match *self {
            StepSizeRule::Constant { l } => l,
            StepSizeRule::Backtracking { l1, .. } => l1,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            StepSizeRule::Constant { l } => format!("constant {l:.16e}"),
            StepSizeRule::Backtracking { l1, eta } => format!("backtrack {l1:.16e} {eta:.16e}"),
        }
    }
}

/// Bounds `rho <= L_k <= tau` valid for the whole run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauRho {
    pub rho: f64,
    pub tau: f64,
    /// No Lipschitz hint was available: `tau` is a placeholder the solver replaces by
    /// the largest `L_k` actually used.
    pub empirical: bool,
}

pub fn tau_rho_bounds(rule: &StepSizeRule, lipschitz_hint: Option<f64>) -> TauRho {
    match (*rule, lipschitz_hint) {
        (StepSizeRule::Constant { l }, _) => TauRho {
            rho: l,
            tau: l,
            empirical: false,
        },
        (StepSizeRule::Backtracking { l1, .. }, Some(hint)) if l1 >= hint => TauRho {
            rho: l1,
            tau: l1,
            empirical: false,
        },
        (StepSizeRule::Backtracking { l1, eta }, Some(hint)) => TauRho {
            rho: l1,
            tau: eta * hint,
            empirical: false,
        },
        (StepSizeRule::Backtracking { l1, .. }, None) => TauRho {
            rho: l1,
            tau: l1,
            empirical: true,
        },
    }
}

/// `F(p) <= Q_L(p, y)` with a round-off allowance of `1e-12 (1 + |Q|)`.
pub fn majorizes(objective: &Objective, model: &QuadraticModel<'_>, p: ArrayView1<f64>) -> bool {
    let q = model.eval(p);
    let f = objective.value_unchecked(p);
    f <= q + 1e-12 * (1.0 + q.abs())
}

#[derive(Clone, Debug)]
pub struct BacktrackOutcome {
    pub l: f64,
    pub p: Array1<f64>,
    /// Number of rejected candidates (`i_k`).
    pub trials: usize,
}

/// Smallest `L = eta^i L_prev` with `F(p_L(y)) <= Q_L(p_L(y), y)`.
pub fn backtracking_search(
    objective: &Objective,
    y: ArrayView1<f64>,
    l_prev: f64,
    eta: f64,
) -> Result<BacktrackOutcome> {
    backtracking_search_capped(objective, y, l_prev, eta, BACKTRACKING_TRIAL_CAP)
}

pub fn backtracking_search_capped(
    objective: &Objective,
    y: ArrayView1<f64>,
    l_prev: f64,
    eta: f64,
    cap: usize,
) -> Result<BacktrackOutcome> {
    if !(eta > 1.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be > 1, got {eta}")));
    }
    let mut model = objective.model(y, l_prev)?;
    let mut l = l_prev;
    for trials in 0..=cap {
        let p = model.prox_point()?;
        let q = model.eval(p.view());
        if !q.is_finite() {
            return Err(Error::NonFinite(format!("Q_L(p_L(y), y) = {q} at L = {l:e}")));
        }
        if majorizes(objective, &model, p.view()) {
            return Ok(BacktrackOutcome { l, p, trials });
        }
        if trials == cap {
            break;
        }
        l *= eta;
        model = model.with_l(l)?;
    }
    Err(Error::BacktrackingCap { cap, last_l: l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LeastSquares, ZeroTerm};
    use ndarray::{array, Array2};

    #[test]
    fn momentum_from_one_is_golden_ratio() {
        let t = momentum_next(1.0).unwrap();
        assert!((t - 1.618_033_988_7).abs() < 1e-10);
        assert!(momentum_next(0.5).is_err());
        assert!(momentum_next(f64::NAN).is_err());
    }

    #[test]
    fn extrapolate_examples() {
        let x = array![2.0, 0.0];
        let x_prev = array![0.0, 0.0];
        assert_eq!(extrapolate(x.view(), x_prev.view(), 2.0, 2.5).unwrap(), array![2.8, 0.0]);
        assert_eq!(extrapolate(x.view(), array![5.0, 5.0].view(), 1.0, 9.0).unwrap(), x);
        assert_eq!(extrapolate(x.view(), x.view(), 3.0, 4.0).unwrap(), x);
        assert!(extrapolate(x.view(), array![1.0].view(), 1.0, 1.0).is_err());
    }

    #[test]
    fn tau_rho_examples() {
        let c = StepSizeRule::Constant { l: 4.0 };
        assert_eq!(tau_rho_bounds(&c, Some(1.0)), TauRho { rho: 4.0, tau: 4.0, empirical: false });
        let bt = StepSizeRule::Backtracking { l1: 1.0, eta: 2.0 };
        assert_eq!(tau_rho_bounds(&bt, Some(3.0)), TauRho { rho: 1.0, tau: 6.0, empirical: false });
        let bt = StepSizeRule::Backtracking { l1: 8.0, eta: 2.0 };
        assert_eq!(tau_rho_bounds(&bt, Some(3.0)), TauRho { rho: 8.0, tau: 8.0, empirical: false });
        assert!(tau_rho_bounds(&bt, None).empirical);
    }

    #[test]
    fn rule_validation() {
        assert!(StepSizeRule::Constant { l: 0.0 }.validate().is_err());
        assert!(StepSizeRule::Backtracking { l1: 1.0, eta: 1.0 }.validate().is_err());
        assert!(StepSizeRule::Backtracking { l1: 1.0, eta: 2.0 }.validate().is_ok());
    }

    fn sq_norm() -> Objective {
        let f = LeastSquares::with_operator_norm(Array2::eye(3), Array1::zeros(3), 1.0).unwrap();
        Objective::new(f, ZeroTerm)
    }

    #[test]
    fn backtracking_accepts_immediately_above_hint() {
        let obj = sq_norm();
        let y = array![1.0, -2.0, 0.5];
        let out = backtracking_search(&obj, y.view(), 3.0, 2.0).unwrap();
        assert_eq!(out.trials, 0);
        assert_eq!(out.l, 3.0);
    }

    #[test]
    fn backtracking_returns_first_passing_l() {
        let obj = sq_norm();
        let y = array![0.3, -1.1, 2.0];
        let out = backtracking_search(&obj, y.view(), 0.5, 2.0).unwrap();
        assert!([0.5, 1.0, 2.0].contains(&out.l), "{}", out.l);
        let model = obj.model(y.view(), out.l).unwrap();
        assert!(majorizes(&obj, &model, out.p.view()));
        if out.trials >= 1 {
            let smaller = obj.model(y.view(), out.l / 2.0).unwrap();
            let p = smaller.prox_point().unwrap();
            assert!(!majorizes(&obj, &smaller, p.view()));
        }
    }

    #[derive(Debug)]
    struct LyingGradient;

    impl crate::problem::SmoothTerm for LyingGradient {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: ArrayView1<f64>) -> f64 {
            x[0] * x[0]
        }
        fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
            // wrong sign: no L ever makes the model a majorant
            array![-2.0 * x[0] - 1.0]
        }
        fn lipschitz_hint(&self) -> Option<f64> {
            None
        }
        fn describe(&self) -> String {
            "liar".into()
        }
    }

    #[test]
    fn backtracking_cap_signals_broken_oracle() {
        let obj = Objective::new(LyingGradient, ZeroTerm);
        let err = backtracking_search_capped(&obj, array![1.0].view(), 1.0, 2.0, 20).unwrap_err();
        assert!(matches!(err, Error::BacktrackingCap { cap: 20, .. }));
    }
}
