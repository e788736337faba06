//! Invariant suites run over a corpus of small instances (`*.inst` files).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{budget_audit, check_bound_compliance, theta_audit};
use crate::budget::{estimate_mu, lambda_k, BudgetConfig, SSchedule, SigmaVariant};
use crate::error::{Error, Result};
use crate::perturb::PerturbStrategy;
use crate::problem::{norm, NonsmoothSpec, Objective, ProblemInstance};
use crate::schedule::{majorizes, momentum_next, StepSizeRule};
use crate::solver::{reference_solution, run, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// `prox_point` against brute-force grid minimization of `Q_L` (`n <= 3`).
    Prox,
    /// `L(y - p) - f'(y)` is a subgradient of `g` at `p`.
    Optimality,
    /// Descent lemma for `f` with the reported Lipschitz bound.
    Descent,
    /// Forward-backward inequality at accepted steps.
    Fb,
    /// Analytic gradient against central differences.
    Gradient,
    /// `t'(t' - 1) = t^2` and `t_k >= k/2`.
    Momentum,
    /// Budgets, caps, sigma positivity, nu containment and Lambda as a Lipschitz constant.
    Budget,
    /// Convergence-bound compliance of exact and perturbed runs.
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Prox,
        Suite::Optimality,
        Suite::Descent,
        Suite::Fb,
        Suite::Gradient,
        Suite::Momentum,
        Suite::Budget,
        Suite::Bounds,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Prox => "prox",
            Suite::Optimality => "optimality",
            Suite::Descent => "descent",
            Suite::Fb => "fb",
            Suite::Gradient => "gradient",
            Suite::Momentum => "momentum",
            Suite::Budget => "budget",
            Suite::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub instance: ProblemInstance,
    pub objective: Objective,
}

/// Loads every `*.inst` file in `dir`, sorted by name. The first unreadable file
/// aborts the load and is named in the error.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "inst"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InsufficientData(format!("no .inst files in {}", dir.as_ref().display())));
    }
    paths
        .into_iter()
        .map(|path| {
            let named = |e: Error| match e {
                Error::Parse { .. } => e,
                other => Error::invalid(format!("{}: {other}", path.display())),
            };
            let instance = ProblemInstance::read(&path).map_err(named)?;
            let objective = instance.to_objective().map_err(named)?;
            Ok(CorpusEntry {
                path,
                instance,
                objective,
            })
        })
        .collect()
}

pub fn run_suite(suite: Suite, corpus: &[CorpusEntry]) -> SuiteResult {
    let mut result = SuiteResult {
        suite,
        checks: 0,
        failures: Vec::new(),
    };
    if suite == Suite::Momentum {
        momentum(&mut result);
        return result;
    }
    for (index, entry) in corpus.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED ^ ((index as u64) << 8) ^ suite as u64);
        let outcome = match suite {
            Suite::Prox => prox(entry, &mut rng, &mut result),
            Suite::Optimality => optimality(entry, &mut rng, &mut result),
            Suite::Descent => descent(entry, &mut rng, &mut result),
            Suite::Fb => forward_backward(entry, &mut rng, &mut result),
            Suite::Gradient => gradient(entry, &mut rng, &mut result),
            Suite::Budget => budgets(entry, &mut result),
            Suite::Bounds => bounds(entry, &mut result),
            Suite::Momentum => unreachable!(),
        };
        if let Err(e) = outcome {
            result.failures.push(format!("{}: {e}", entry.path.display()));
        }
    }
    result
}

fn fail(result: &mut SuiteResult, entry: &CorpusEntry, message: String) {
    result.failures.push(format!("{}: {message}", entry.path.display()));
}

fn hint(entry: &CorpusEntry) -> Result<f64> {
    entry
        .objective
        .lipschitz_hint()
        .ok_or_else(|| Error::invalid("corpus objectives must report a Lipschitz bound"))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.random_range(lo..hi))
}

/// A point where `g` is finite: inside the box when `g` is a box indicator.
fn feasible_vector(entry: &CorpusEntry, rng: &mut ChaCha8Rng, spread: f64) -> Array1<f64> {
    match entry.instance.g {
        NonsmoothSpec::Box { lo, hi } => random_vector(rng, entry.objective.dim(), lo, hi),
        _ => random_vector(rng, entry.objective.dim(), -spread, spread),
    }
}

const PROX_TRIALS: usize = 8;
const PROX_ARG_TOL: f64 = 2e-3;
const PROX_VALUE_TOL: f64 = 1e-5;

fn prox(entry: &CorpusEntry, rng: &mut ChaCha8Rng, result: &mut SuiteResult) -> Result<()> {
    let n = entry.objective.dim();
    if n > 3 {
        return Ok(());
    }
    let hint = hint(entry)?;
    for _ in 0..PROX_TRIALS {
        let y = random_vector(rng, n, -1.0, 1.0);
        let l = hint * rng.random_range(1.0..2.0);
        let model = entry.objective.model(y.view(), l)?;
        let p = model.prox_point()?;
        let c = model.gradient_step();
        let q = |x: &[f64]| model.eval(Array1::from(x.to_vec()).view());
        let (lo, hi): (Vec<f64>, Vec<f64>) = c
            .iter()
            .map(|&ci| match entry.instance.g {
                NonsmoothSpec::L1 => {
                    let r = entry.instance.lambda / l + 0.3;
                    (ci - r, ci + r)
                }
                NonsmoothSpec::Zero => (ci - 0.3, ci + 0.3),
                NonsmoothSpec::Box { lo, hi } => (ci.min(lo) - 0.3, ci.max(hi) + 0.3),
            })
            .unzip();
        let (grid_best, grid_value) = multiscale_grid_argmin(&q, &lo, &hi);
        result.checks += 1;
        let arg_err = p
            .iter()
            .zip(&grid_best)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let q_p = q(p.as_slice().expect("contiguous"));
        if arg_err > PROX_ARG_TOL || (q_p - grid_value).abs() > PROX_VALUE_TOL {
            fail(
                result,
                entry,
                format!("prox mismatch: |p - grid| = {arg_err:e}, Q(p) = {q_p:e}, Q(grid) = {grid_value:e}"),
            );
        }
    }
    Ok(())
}

/// Grids of spacing 0.1, 0.01, 0.001 anchored at multiples of the spacing, each
/// level searching around the previous level's best point.
fn multiscale_grid_argmin(q: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    let mut best = grid_argmin(q, lo, hi, 10.0);
    for inv_h in [100.0, 1000.0] {
        let half = 20.0 / inv_h;
        let lo: Vec<f64> = best.0.iter().map(|b| b - half).collect();
        let hi: Vec<f64> = best.0.iter().map(|b| b + half).collect();
        let refined = grid_argmin(q, &lo, &hi, inv_h);
        if refined.1 <= best.1 {
            best = refined;
        }
    }
    best
}

fn grid_argmin(q: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], inv_h: f64) -> (Vec<f64>, f64) {
    let ranges: Vec<(i64, i64)> = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| ((l * inv_h).ceil() as i64, (h * inv_h).floor() as i64))
        .collect();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut point = vec![0.0; lo.len()];
    let mut best = (point.clone(), f64::INFINITY);
    loop {
        for (x, i) in point.iter_mut().zip(&idx) {
            *x = *i as f64 / inv_h;
        }
        let v = q(&point);
        if v < best.1 {
            best = (point.clone(), v);
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= ranges[d].1 {
                break;
            }
            idx[d] = ranges[d].0;
            d += 1;
        }
    }
}

const RANDOM_TRIALS: usize = 50;

fn optimality(entry: &CorpusEntry, rng: &mut ChaCha8Rng, result: &mut SuiteResult) -> Result<()> {
    let n = entry.objective.dim();
    let hint = hint(entry)?;
    for _ in 0..RANDOM_TRIALS {
        let y = random_vector(rng, n, -3.0, 3.0);
        let l = hint * rng.random_range(1.0..10.0);
        let model = entry.objective.model(y.view(), l)?;
        let p = model.prox_point()?;
        let residual = l * (&y - &p) - model.gradient_at_y();
        let violation = entry.objective.nonsmooth().subgradient_violation(p.view(), residual.view());
        result.checks += 1;
        if violation > 1e-8 {
            fail(result, entry, format!("prox residual is not a subgradient (violation {violation:e})"));
        }
    }
    Ok(())
}

fn descent(entry: &CorpusEntry, rng: &mut ChaCha8Rng, result: &mut SuiteResult) -> Result<()> {
    let n = entry.objective.dim();
    let f = entry.objective.smooth();
    let hint = hint(entry)?;
    for _ in 0..RANDOM_TRIALS {
        let x = random_vector(rng, n, -5.0, 5.0);
        let y = random_vector(rng, n, -5.0, 5.0);
        let d = &x - &y;
        let upper = f.value(y.view()) + f.gradient(y.view()).dot(&d) + 0.5 * hint * d.dot(&d);
        let fx = f.value(x.view());
        result.checks += 1;
        if fx > upper + 1e-10 * (1.0 + fx.abs()) {
            fail(result, entry, format!("descent lemma fails: f(x) = {fx:e} > {upper:e}"));
        }
    }
    Ok(())
}

fn forward_backward(entry: &CorpusEntry, rng: &mut ChaCha8Rng, result: &mut SuiteResult) -> Result<()> {
    let obj = &entry.objective;
    let n = obj.dim();
    let hint = hint(entry)?;
    for _ in 0..RANDOM_TRIALS {
        let y = random_vector(rng, n, -3.0, 3.0);
        let l = hint * rng.random_range(1.0..4.0);
        let model = obj.model(y.view(), l)?;
        let p = model.prox_point()?;
        if !majorizes(obj, &model, p.view()) {
            fail(result, entry, format!("model is not a majorant at L = {l:e} >= hint"));
            continue;
        }
        for _ in 0..10 {
            let x = feasible_vector(entry, rng, 3.0);
            let lhs = obj.value(x.view())? - obj.value(p.view())?;
            let py = &p - &y;
            let rhs = 0.5 * l * py.dot(&py) + l * py.dot(&(&y - &x));
            result.checks += 1;
            if lhs - rhs < -1e-8 * (1.0 + rhs.abs()) {
                fail(result, entry, format!("forward-backward inequality fails: {lhs:e} < {rhs:e}"));
            }
        }
    }
    Ok(())
}

fn gradient(entry: &CorpusEntry, rng: &mut ChaCha8Rng, result: &mut SuiteResult) -> Result<()> {
    let n = entry.objective.dim();
    let f = entry.objective.smooth();
    let h = 1e-5;
    for _ in 0..RANDOM_TRIALS / 5 {
        let x = random_vector(rng, n, -2.0, 2.0);
        let g = f.gradient(x.view());
        for i in 0..n {
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (f.value(up.view()) - f.value(down.view())) / (2.0 * h);
            result.checks += 1;
            if (fd - g[i]).abs() > 1e-6 * (1.0 + g[i].abs()) {
                fail(result, entry, format!("gradient component {i}: analytic {:e}, finite difference {fd:e}", g[i]));
            }
        }
    }
    Ok(())
}

pub const MOMENTUM_STEPS: usize = 10_000;

fn momentum(result: &mut SuiteResult) {
    let mut t = 1.0f64;
    for k in 2..2 + MOMENTUM_STEPS {
        let next = momentum_next(t).expect("t >= 1");
        let lhs = next * (next - 1.0);
        let rhs = t * t;
        result.checks += 2;
        if (lhs - rhs).abs() > 4.0 * f64::EPSILON * rhs {
            result.failures.push(format!("t'(t'-1) = {lhs:e} vs t^2 = {rhs:e} at k = {k}"));
        }
        if next < 0.5 * (k + 1) as f64 {
            result.failures.push(format!("t_{} = {next} < (k+1)/2", k + 1));
        }
        t = next;
    }
}

/// `mu` for a corpus run: the lasso bound when known, else a ball around the reference.
fn corpus_mu(objective: &Objective, reference_norm: f64) -> f64 {
    estimate_mu(objective).unwrap_or(2.0 * reference_norm + 1.0)
}

const VERIFY_ITERATIONS: usize = 300;
const VERIFY_REFERENCE_ITERATIONS: usize = 20_000;

fn budgets(entry: &CorpusEntry, result: &mut SuiteResult) -> Result<()> {
    let obj = &entry.objective;
    let reference = reference_solution(obj, VERIFY_REFERENCE_ITERATIONS)?;
    let mu = corpus_mu(obj, norm(reference.point.view()));
    let s1 = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0D6E7);
    for variant in [SigmaVariant::Sigma, SigmaVariant::SigmaPrime, SigmaVariant::SigmaTilde] {
        let budget = BudgetConfig::new(s1, mu, SSchedule::PowerLaw { c: 1.0, r: 1.0 }, variant)?;
        let strategy = PerturbStrategy::Saturating {
            fill: 1.0,
            direction_seed: 7,
        };
        let cfg = RunConfig::new(obj.clone(), StepSizeRule::Backtracking { l1: 0.1, eta: 2.0 }, budget, strategy, 120);
        let trace = run(&cfg)?.trace;
        let audit = budget_audit(&trace);
        result.checks += 2 * trace.len();
        if !audit.within_budget() {
            fail(result, entry, format!("{}: over budget at {:?}", variant.name(), audit.over_budget));
        }
        if !audit.within_cap() {
            fail(result, entry, format!("{}: over s_k/(s1 k^2) at {:?}", variant.name(), audit.over_cap));
        }
        if variant == SigmaVariant::Sigma {
            let theta = theta_audit(&trace)?;
            result.checks += 1;
            if !(theta.lower_ok && theta.upper_ok) {
                fail(result, entry, format!("theta audit failed: {theta:?}"));
            }
        }
        for r in trace.records() {
            let floor = match variant {
                SigmaVariant::SigmaPrime => 4.0 * r.t * r.t * s1,
                _ => 8.0 * r.t * r.t * s1,
            };
            result.checks += 1;
            if !(r.sigma >= floor * (1.0 - 1e-12)) {
                fail(result, entry, format!("sigma_{} = {:e} below {floor:e}", r.k, r.sigma));
            }
            let detail = r.detail.as_ref().expect("in-memory trace");
            if let Some(nu) = detail.nu {
                result.checks += 1;
                if detail.p_norm > nu * (1.0 + 1e-12) {
                    fail(result, entry, format!("|p_{}| = {:e} exceeds nu = {nu:e}", r.k, detail.p_norm));
                }
            }
        }
    }

    // Lambda_k is a Lipschitz constant of F on B[x_k, s1].
    let budget = BudgetConfig::new(s1, mu, SSchedule::default(), SigmaVariant::Sigma)?;
    let strategy = PerturbStrategy::RandomBall { seed: 3, fill: 1.0 };
    let out = run(&RunConfig::new(obj.clone(), StepSizeRule::Backtracking { l1: 0.1, eta: 2.0 }, budget, strategy, 20))?;
    let x = out.final_point;
    let lam = lambda_k(obj, x.view(), s1)?;
    if lam.bounded {
        for _ in 0..200 {
            let u = &x + &ball_sample(&mut rng, x.len(), s1);
            let v = &x + &ball_sample(&mut rng, x.len(), s1);
            let (fu, fv) = (obj.value(u.view())?, obj.value(v.view())?);
            let gap = (fu - fv).abs();
            let allowed = lam.lambda * norm((&u - &v).view());
            result.checks += 1;
            if gap > allowed * (1.0 + 1e-8) + 1e-8 * (1.0 + fu.abs()) {
                fail(result, entry, format!("|F(u) - F(v)| = {gap:e} > Lambda |u - v| = {allowed:e}"));
            }
        }
    }
    Ok(())
}

fn ball_sample(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Array1<f64> {
    loop {
        let v = random_vector(rng, n, -radius, radius);
        if norm(v.view()) <= radius {
            return v;
        }
    }
}

fn bounds(entry: &CorpusEntry, result: &mut SuiteResult) -> Result<()> {
    let obj = &entry.objective;
    let reference = reference_solution(obj, VERIFY_REFERENCE_ITERATIONS)?;
    let mu = corpus_mu(obj, norm(reference.point.view()));
    let hint = hint(entry)?;
    let cases = [
        (StepSizeRule::Constant { l: hint }, PerturbStrategy::Zero),
        (
            StepSizeRule::Constant { l: hint },
            PerturbStrategy::Saturating {
                fill: 1.0,
                direction_seed: 1,
            },
        ),
        (
            StepSizeRule::Backtracking { l1: hint / 8.0, eta: 2.0 },
            PerturbStrategy::RandomBall { seed: 2, fill: 1.0 },
        ),
    ];
    for (rule, strategy) in cases {
        let budget = BudgetConfig::new(1.0, mu, SSchedule::default(), SigmaVariant::Sigma)?;
        let label = format!("{} / {}", rule.describe(), strategy.describe());
        let trace = run(&RunConfig::new(obj.clone(), rule, budget, strategy, VERIFY_ITERATIONS))?.trace;
        let compliance = check_bound_compliance(&trace, reference.point.view(), reference.value)?;
        result.checks += compliance.checked;
        if !compliance.all() {
            fail(
                result,
                entry,
                format!("{label}: bound compliance {} (worst slack {:e})", compliance.fraction, compliance.worst_slack),
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn grid_lands_on_box_edges_exactly() {
        let q = |x: &[f64]| (x[0] - 0.3).abs() + (x[1] + 1.7).powi(2);
        let (best, value) = multiscale_grid_argmin(&q, &[-1.0, -2.0], &[1.0, 0.0]);
        assert_eq!(best, vec![0.3, -1.7]);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn momentum_suite_passes() {
        assert!(run_suite(Suite::Momentum, &[]).passed());
    }
}
