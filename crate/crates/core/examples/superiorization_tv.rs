// Spends the error budget on total-variation descent while deblurring a
// piecewise-constant signal, and compares with an unperturbed run.

use std::sync::Arc;

use inexact_fista::budget::{estimate_mu, BudgetConfig, SSchedule, SigmaVariant};
use inexact_fista::perturb::PerturbStrategy;
use inexact_fista::problem::{blur_instance, AuxCost, TotalVariation1d};
use inexact_fista::schedule::StepSizeRule;
use inexact_fista::solver::{run, RunConfig};

/// `(TV of the directed run, TV of the zero run)` at the last iterate.
pub fn run_example() -> inexact_fista::Result<(f64, f64)> {
    let (instance, signal) = blur_instance(100, 3, 0.1)?;
    let objective = instance.to_objective()?;
    let mu = estimate_mu(&objective)?;
    let rule = StepSizeRule::Constant {
        l: objective.lipschitz_hint().expect("least squares"),
    };
    let budget = BudgetConfig::new(1.0, mu, SSchedule::default(), SigmaVariant::Sigma)?;

    let mut tv = [0.0; 2];
    for (slot, strategy) in [PerturbStrategy::directed_tv(1.0), PerturbStrategy::Zero].into_iter().enumerate() {
        let cfg = RunConfig::new(objective.clone(), rule, budget.clone(), strategy, 2000).with_phi(Arc::new(TotalVariation1d));
        let out = run(&cfg)?;
        let last = out.trace.last().expect("records");
        tv[slot] = last.phi[0];
        println!("{:<10} F = {:.10}  TV = {:.10}", out.trace.meta.strategy_kind(), last.f, last.phi[0]);
    }
    println!("TV of the clean signal: {:.4}", TotalVariation1d.value(signal.view()));
    Ok((tv[0], tv[1]))
}

#[allow(dead_code)]
fn main() -> inexact_fista::Result<()> {
    run_example().map(|_| ())
}
