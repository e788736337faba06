// Prints the certified error budget at a few iterations for each sigma variant,
// with every step perturbed by its full budget.

use inexact_fista::analysis::budget_audit;
use inexact_fista::budget::{estimate_mu, BudgetConfig, SSchedule, SigmaVariant};
use inexact_fista::perturb::PerturbStrategy;
use inexact_fista::problem::LsqGenerator;
use inexact_fista::schedule::StepSizeRule;
use inexact_fista::solver::{run, RunConfig};

/// Budget at the last iteration for sigma, sigma' and sigma~.
pub fn run_example() -> inexact_fista::Result<Vec<(SigmaVariant, f64)>> {
    let (instance, _) = LsqGenerator {
        m: 40,
        n: 80,
        seed: 2,
        density: 0.1,
        lambda: 1.0,
    }
    .generate()?;
    let objective = instance.to_objective()?;
    let mu = estimate_mu(&objective)?;
    let rule = StepSizeRule::Constant {
        l: objective.lipschitz_hint().expect("least squares"),
    };
    let strategy = PerturbStrategy::Saturating {
        fill: 1.0,
        direction_seed: 7,
    };

    let mut last = Vec::new();
    for variant in [SigmaVariant::Sigma, SigmaVariant::SigmaPrime, SigmaVariant::SigmaTilde] {
        let budget = BudgetConfig::new(1.0, mu, SSchedule::PowerLaw { c: 1.0, r: 2.0 }, variant)?;
        let out = run(&RunConfig::new(objective.clone(), rule, budget, strategy.clone(), 400))?;
        assert!(budget_audit(&out.trace).within_budget());
        println!("{}:", variant.name());
        for r in out.trace.records().iter().filter(|r| [2, 10, 100, 400].contains(&r.k)) {
            println!("  k = {:>3}  sigma = {:.3e}  budget = {:.3e}  |e| = {:.3e}", r.k, r.sigma, r.budget, r.e_norm);
        }
        last.push((variant, out.trace.last().expect("records").budget));
    }
    Ok(last)
}

#[allow(dead_code)]
fn main() -> inexact_fista::Result<()> {
    run_example().map(|_| ())
}
