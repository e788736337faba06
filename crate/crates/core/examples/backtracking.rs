// Backtracking from a deliberately small L1: L_k grows by eta until the quadratic
// model majorizes F and never exceeds eta times the Lipschitz constant.

use inexact_fista::budget::{BudgetConfig, SSchedule, SigmaVariant};
use inexact_fista::perturb::PerturbStrategy;
use inexact_fista::problem::LsqGenerator;
use inexact_fista::schedule::StepSizeRule;
use inexact_fista::solver::{run, RunConfig};

/// Returns `(L1, hint, distinct step constants in order)`.
pub fn run_example() -> inexact_fista::Result<(f64, f64, Vec<f64>)> {
    let (instance, _) = LsqGenerator {
        m: 30,
        n: 60,
        seed: 4,
        density: 0.2,
        lambda: 0.5,
    }
    .generate()?;
    let objective = instance.to_objective()?;
    let hint = objective.lipschitz_hint().expect("least squares");
    let l1 = hint / 100.0;
    let rule = StepSizeRule::Backtracking { l1, eta: 2.0 };
    let budget = BudgetConfig::new(1.0, 1.0, SSchedule::default(), SigmaVariant::Sigma)?;
    let out = run(&RunConfig::new(objective, rule, budget, PerturbStrategy::Zero, 300))?;

    println!("L1 = {l1:.4}");
    let mut steps: Vec<f64> = Vec::new();
    for r in out.trace.records() {
        if steps.last() != Some(&r.l) {
            let trials = r.detail.as_ref().map_or(0, |d| d.backtracking_trials);
            println!("k = {:>3}: L = {:.4} after {trials} trials (hint {hint:.4})", r.k, r.l);
            steps.push(r.l);
        }
    }
    println!("tau = {:.4}, rho = {:.4}", out.trace.meta.tau, out.trace.meta.rho);
    Ok((l1, hint, steps))
}

#[allow(dead_code)]
fn main() -> inexact_fista::Result<()> {
    run_example().map(|_| ())
}
