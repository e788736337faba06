// Exact FISTA on a generated sparse regression problem, checked against the
// worst-case bound 2 L |x1 - x*|^2 / (k + 1)^2.

use inexact_fista::analysis::check_bound_compliance;
use inexact_fista::budget::{BudgetConfig, SSchedule, SigmaVariant};
use inexact_fista::perturb::PerturbStrategy;
use inexact_fista::problem::LsqGenerator;
use inexact_fista::schedule::StepSizeRule;
use inexact_fista::solver::{reference_solution, run, RunConfig};

pub fn run_example() -> inexact_fista::Result<f64> {
    let (instance, truth) = LsqGenerator {
        m: 50,
        n: 100,
        seed: 1,
        density: 0.1,
        lambda: 1.0,
    }
    .generate()?;
    let objective = instance.to_objective()?;
    let hint = objective.lipschitz_hint().expect("least squares");

    let budget = BudgetConfig::new(1.0, 1.0, SSchedule::default(), SigmaVariant::Sigma)?;
    let cfg = RunConfig::new(objective.clone(), StepSizeRule::Constant { l: hint }, budget, PerturbStrategy::Zero, 500);
    let out = run(&cfg)?;

    let reference = reference_solution(&objective, 20_000)?;
    let compliance = check_bound_compliance(&out.trace, reference.point.view(), reference.value)?;
    let last = out.trace.last().expect("non-empty trace");
    println!("L = {hint:.4}, {} nonzeros in the planted signal", truth.iter().filter(|v| **v != 0.0).count());
    println!("F(x_500) - F* = {:.3e}", last.f - reference.value);
    println!("bound compliance: {}", compliance.fraction);
    Ok(compliance.fraction)
}

#[allow(dead_code)]
fn main() -> inexact_fista::Result<()> {
    run_example().map(|_| ())
}
