// Writes a trace to disk, reads it back and re-checks the bound from the file
// alone, which is how traces from earlier runs are audited.

use inexact_fista::analysis::{budget_audit, check_bound_compliance};
use inexact_fista::budget::{estimate_mu, BudgetConfig, SSchedule, SigmaVariant};
use inexact_fista::perturb::PerturbStrategy;
use inexact_fista::problem::LsqGenerator;
use inexact_fista::schedule::StepSizeRule;
use inexact_fista::solver::{reference_solution, run, RunConfig};
use inexact_fista::trace::Trace;

/// Returns whether the re-read trace matches the in-memory one.
pub fn run_example() -> inexact_fista::Result<bool> {
    let (instance, _) = LsqGenerator {
        m: 20,
        n: 40,
        seed: 9,
        density: 0.2,
        lambda: 1.0,
    }
    .generate()?;
    let objective = instance.to_objective()?;
    let hint = objective.lipschitz_hint().expect("least squares");
    let budget = BudgetConfig::new(1.0, estimate_mu(&objective)?, SSchedule::default(), SigmaVariant::SigmaTilde)?;
    let strategy = PerturbStrategy::RandomBall { seed: 3, fill: 0.8 };
    let rule = StepSizeRule::Backtracking { l1: hint / 8.0, eta: 2.0 };
    let out = run(&RunConfig::new(objective.clone(), rule, budget, strategy, 200))?;

    let path = std::env::temp_dir().join(format!("inexact-fista-example-{}.trace.csv", std::process::id()));
    out.trace.write(&path)?;
    let back = Trace::read(&path)?;
    std::fs::remove_file(&path)?;

    let reference = reference_solution(&objective, 10_000)?;
    let compliance = check_bound_compliance(&back, reference.point.view(), reference.value)?;
    println!("{} records, {} bytes", back.len(), back.to_text().len());
    println!("budgets respected: {}", budget_audit(&back).within_budget());
    println!("bound compliance from file: {}", compliance.fraction);
    Ok(back.same_content(&out.trace))
}

#[allow(dead_code)]
fn main() -> inexact_fista::Result<()> {
    run_example().map(|_| ())
}
