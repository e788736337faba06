//! Run-spec files and the `solve`, `sweep` and `verify` commands.
//!
//! A run spec is a plain-text file of `key value` lines (a trailing `:` on the key is
//! optional, `#` starts a comment):
//!
//! ```text
//! problem gen lsq 50 100 1 0.1 1     # or: problem path/to/file.inst | problem gen blur n seed lambda
//! rule constant hint                 # constant <L|hint|hint/d|hint*f> | backtrack <L1> <eta>
//! s1 1
//! mu auto                            # or a number
//! s: power 1 2                       # or: s: list v2 v3 ...
//! sigma: sigma                       # sigma | sigma_prime | sigma_tilde
//! perturb: saturate 1 7              # zero | random <seed> <fill> | saturate <fill> <seed> | directed tv|sqnorm <fill>
//! iters 2000
//! seed 0
//! ```
//!
//! Optional keys: `t2` (default 1), `reference` (iterations of the exact reference
//! run, default 100000), `phi` (auxiliary costs to record: `tv`, `sqnorm`),
//! `bound_csv yes|no`, and `fault_scale` (test fixture multiplying every `e_k`).
//!
//! Exit codes: 0 success, 1 I/O, parse or oracle error, 2 budget breach.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;

use crate::analysis::{
    bound_csv, budget_audit, check_bound_compliance, fit_rate, predicted_regime_r, theta_audit, BudgetAudit,
    Compliance, RateReport, ThetaAudit,
};
use crate::budget::{estimate_mu, BudgetConfig, SSchedule, SigmaVariant};
use crate::error::{Error, Result};
use crate::perturb::PerturbStrategy;
use crate::problem::{blur_instance, AuxCost, LsqGenerator, Objective, ProblemInstance, SquaredNorm, TotalVariation1d};
use crate::schedule::StepSizeRule;
use crate::solver::{reference_solution, run, theoretical_bound, Init, Reference, RunConfig, RunOutput};
use crate::verify::{load_corpus, run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BREACH: i32 = 2;

const DEFAULT_REFERENCE_ITERATIONS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    File(PathBuf),
    Lsq(LsqGenerator),
    Blur { n: usize, seed: u64, lambda: f64 },
}

impl ProblemSource {
    pub fn load(&self) -> Result<ProblemInstance> {
        match self {
            ProblemSource::File(path) => ProblemInstance::read(path),
            ProblemSource::Lsq(generator) => Ok(generator.generate()?.0),
            ProblemSource::Blur { n, seed, lambda } => Ok(blur_instance(*n, *seed, *lambda)?.0),
        }
    }
}

/// A step constant, either literal or relative to the objective's Lipschitz bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepValue {
    Fixed(f64),
    HintTimes(f64),
}

impl StepValue {
    pub fn parse(token: &str) -> Option<Self> {
        if token == "hint" {
            return Some(StepValue::HintTimes(1.0));
        }
        if let Some(d) = token.strip_prefix("hint/") {
            return d.parse::<f64>().ok().filter(|d| *d > 0.0).map(|d| StepValue::HintTimes(1.0 / d));
        }
        if let Some(f) = token.strip_prefix("hint*") {
            return f.parse().ok().map(StepValue::HintTimes);
        }
        token.parse().ok().map(StepValue::Fixed)
    }

    fn resolve(&self, hint: Option<f64>) -> Result<f64> {
        match (*self, hint) {
            (StepValue::Fixed(l), _) => Ok(l),
            (StepValue::HintTimes(f), Some(h)) => Ok(f * h),
            (StepValue::HintTimes(_), None) => Err(Error::invalid("`hint` used but the objective has no Lipschitz bound")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RuleSpec {
    Constant(StepValue),
    Backtrack { l1: StepValue, eta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuSpec {
    Auto,
    Value(f64),
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    /// Output stem, taken from the spec file name.
    pub name: String,
    pub problem: ProblemSource,
    pub rule: RuleSpec,
    pub s1: f64,
    pub mu: MuSpec,
    pub schedule: SSchedule,
    pub sigma: SigmaVariant,
    pub strategy: PerturbStrategy,
    pub iterations: usize,
    pub seed: u64,
    pub t2: f64,
    pub reference_iterations: usize,
    pub phi: Vec<String>,
    pub bound_csv: bool,
    pub fault_scale: Option<f64>,
}

const KEYS: [&str; 14] = [
    "problem",
    "rule",
    "s1",
    "mu",
    "s",
    "sigma",
    "perturb",
    "iters",
    "seed",
    "t2",
    "reference",
    "phi",
    "bound_csv",
    "fault_scale",
];
const REQUIRED: [&str; 3] = ["problem", "rule", "iters"];

impl RunSpec {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        Self::parse(&text, &path.display().to_string(), base, &name)
    }

    /// Relative problem paths resolve against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path, name: &str) -> Result<Self> {
        let mut entries: std::collections::HashMap<&str, (usize, Vec<&str>)> = Default::default();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let key_token = tokens.next().expect("non-empty line");
            let key = key_token.strip_suffix(':').unwrap_or(key_token);
            let Some(key) = KEYS.iter().find(|k| **k == key) else {
                return Err(Error::parse(origin, line_no, format!("unknown key `{key}`")));
            };
            if entries.insert(key, (line_no, tokens.collect())).is_some() {
                return Err(Error::parse(origin, line_no, format!("duplicate key `{key}`")));
            }
        }
        for key in REQUIRED {
            if !entries.contains_key(key) {
                return Err(Error::parse(origin, last_line + 1, format!("missing required key `{key}`")));
            }
        }

        let bad = |key: &str, what: &str| -> Error {
            let line = entries.get(key).map_or(last_line + 1, |e| e.0);
            Error::parse(origin, line, format!("`{key}`: {what}"))
        };
        let single = |key: &str| -> Result<Option<&str>> {
            match entries.get(key) {
                None => Ok(None),
                Some((_, v)) if v.len() == 1 => Ok(Some(v[0])),
                Some(_) => Err(bad(key, "expected exactly one value")),
            }
        };
        let real = |key: &str, default: f64| -> Result<f64> {
            single(key)?.map_or(Ok(default), |t| t.parse().map_err(|_| bad(key, "expected a real")))
        };
        let count = |key: &str, default: u64| -> Result<u64> {
            single(key)?.map_or(Ok(default), |t| t.parse().map_err(|_| bad(key, "expected a nonnegative integer")))
        };

        let problem = {
            let tokens = &entries["problem"].1;
            let num = |i: usize| tokens.get(i).copied().ok_or_else(|| bad("problem", "too few values"));
            match tokens.as_slice() {
                ["gen", "lsq", ..] if tokens.len() == 7 => ProblemSource::Lsq(LsqGenerator {
                    m: num(2)?.parse().map_err(|_| bad("problem", "bad m"))?,
                    n: num(3)?.parse().map_err(|_| bad("problem", "bad n"))?,
                    seed: num(4)?.parse().map_err(|_| bad("problem", "bad seed"))?,
                    density: num(5)?.parse().map_err(|_| bad("problem", "bad density"))?,
                    lambda: num(6)?.parse().map_err(|_| bad("problem", "bad lambda"))?,
                }),
                ["gen", "blur", ..] if tokens.len() == 5 => ProblemSource::Blur {
                    n: num(2)?.parse().map_err(|_| bad("problem", "bad n"))?,
                    seed: num(3)?.parse().map_err(|_| bad("problem", "bad seed"))?,
                    lambda: num(4)?.parse().map_err(|_| bad("problem", "bad lambda"))?,
                },
                ["gen", ..] => return Err(bad("problem", "expected `gen lsq m n seed density lambda` or `gen blur n seed lambda`")),
                [path] => ProblemSource::File(base_dir.join(path)),
                _ => return Err(bad("problem", "expected a path or a generator")),
            }
        };

        let rule = {
            let tokens = &entries["rule"].1;
            let step = |t: &str| StepValue::parse(t).ok_or_else(|| bad("rule", "bad step constant"));
            match tokens.as_slice() {
                ["constant", l] => RuleSpec::Constant(step(l)?),
                ["backtrack", l1, eta] => RuleSpec::Backtrack {
                    l1: step(l1)?,
                    eta: eta.parse().map_err(|_| bad("rule", "bad eta"))?,
                },
                _ => return Err(bad("rule", "expected `constant L` or `backtrack L1 eta`")),
            }
        };

        let mu = match single("mu")? {
            None | Some("auto") => MuSpec::Auto,
            Some(v) => MuSpec::Value(v.parse().map_err(|_| bad("mu", "expected a real or `auto`"))?),
        };
        let schedule = match entries.get("s") {
            None => SSchedule::default(),
            Some((_, v)) => v.join(" ").parse().map_err(|e: Error| bad("s", &e.to_string()))?,
        };
        let sigma = match single("sigma")? {
            None => SigmaVariant::Sigma,
            Some(v) => v.parse().map_err(|e: Error| bad("sigma", &e.to_string()))?,
        };
        let strategy = match entries.get("perturb") {
            None => PerturbStrategy::Zero,
            Some((_, v)) => parse_strategy(v).ok_or_else(|| {
                bad("perturb", "expected zero | random <seed> <fill> | saturate <fill> <seed> | directed tv|sqnorm <fill>")
            })?,
        };
        let phi: Vec<String> = entries
            .get("phi")
            .map(|(_, v)| v.iter().map(|s| s.to_string()).collect())
            .unwrap_or_default();
        for name in &phi {
            if aux_cost(name).is_none() {
                return Err(bad("phi", &format!("unknown cost `{name}`")));
            }
        }
        let bound_csv = match single("bound_csv")? {
            None | Some("no") => false,
            Some("yes") => true,
            Some(_) => return Err(bad("bound_csv", "expected yes or no")),
        };
        let fault_scale = match single("fault_scale")? {
            None => None,
            Some(v) => Some(v.parse().map_err(|_| bad("fault_scale", "expected a real"))?),
        };

        let spec = RunSpec {
            name: name.to_string(),
            problem,
            rule,
            s1: real("s1", 1.0)?,
            mu,
            schedule,
            sigma,
            strategy,
            iterations: count("iters", 0)? as usize,
            seed: count("seed", 0)?,
            t2: real("t2", 1.0)?,
            reference_iterations: count("reference", DEFAULT_REFERENCE_ITERATIONS as u64)? as usize,
            phi,
            bound_csv,
            fault_scale,
        };
        if spec.iterations < 2 {
            return Err(bad("iters", "K must be at least 2"));
        }
        spec.strategy.validate().map_err(|e| bad("perturb", &e.to_string()))?;
        Ok(spec)
    }
}

fn parse_strategy(tokens: &[&str]) -> Option<PerturbStrategy> {
    Some(match tokens {
        ["zero"] => PerturbStrategy::Zero,
        ["random", seed, fill] => PerturbStrategy::RandomBall {
            seed: seed.parse().ok()?,
            fill: fill.parse().ok()?,
        },
        ["saturate", fill, seed] => PerturbStrategy::Saturating {
            fill: fill.parse().ok()?,
            direction_seed: seed.parse().ok()?,
        },
        ["directed", phi, fill] => PerturbStrategy::Directed {
            phi: aux_cost(phi)?,
            fill: fill.parse().ok()?,
        },
        _ => return None,
    })
}

fn aux_cost(name: &str) -> Option<Arc<dyn AuxCost>> {
    match name {
        "tv" => Some(Arc::new(TotalVariation1d)),
        "sqnorm" => Some(Arc::new(SquaredNorm)),
        _ => None,
    }
}

/// The spec resolved against its problem instance.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub instance: ProblemInstance,
    pub objective: Objective,
    pub config: RunConfig,
}

pub fn prepare(spec: &RunSpec) -> Result<Prepared> {
    let instance = spec.problem.load()?;
    let objective = instance.to_objective()?;
    let hint = objective.lipschitz_hint();
    let rule = match spec.rule {
        RuleSpec::Constant(l) => StepSizeRule::Constant { l: l.resolve(hint)? },
        RuleSpec::Backtrack { l1, eta } => StepSizeRule::Backtracking {
            l1: l1.resolve(hint)?,
            eta,
        },
    };
    let mu = match spec.mu {
        MuSpec::Auto => estimate_mu(&objective)?,
        MuSpec::Value(v) => v,
    };
    let budget = BudgetConfig::new(spec.s1, mu, spec.schedule.clone(), spec.sigma)?;
    let strategy = spec.strategy.with_run_seed(spec.seed);
    let mut config = RunConfig::new(objective.clone(), rule, budget, strategy, spec.iterations);
    config.init = Init {
        t2: spec.t2,
        ..Init::default()
    };
    let mut phi_names = spec.phi.clone();
    if let PerturbStrategy::Directed { phi, .. } = &spec.strategy {
        if !phi_names.iter().any(|n| n == phi.name()) {
            phi_names.push(phi.name().to_string());
        }
    }
    for name in &phi_names {
        config.phi.push(aux_cost(name).ok_or_else(|| Error::invalid(format!("unknown cost `{name}`")))?);
    }
    config.fault_scale = spec.fault_scale;
    Ok(Prepared {
        instance,
        objective,
        config,
    })
}

/// Everything `solve` reports about one run.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub output: RunOutput,
    pub reference: Reference,
    pub compliance: Compliance,
    pub audit: BudgetAudit,
    pub theta: Option<ThetaAudit>,
    pub rate: std::result::Result<RateReport, String>,
    /// `phi` values at `x_K` of the same run with the zero strategy (directed runs only).
    pub baseline_phi: Option<Vec<f64>>,
    pub bound_final: f64,
}

impl SolveOutcome {
    pub fn breached(&self) -> bool {
        !self.audit.within_budget()
    }
}

/// Runs the spec; `reference` skips the exact reference run when already known.
pub fn solve(spec: &RunSpec, reference: Option<&Reference>) -> Result<SolveOutcome> {
    let prepared = prepare(spec)?;
    let reference = match reference {
        Some(r) => r.clone(),
        None => reference_solution(&prepared.objective, spec.reference_iterations)?,
    };
    let output = run(&prepared.config.clone().with_reference(reference.clone()))?;
    let trace = &output.trace;
    let compliance = check_bound_compliance(trace, reference.point.view(), reference.value)?;
    let audit = budget_audit(trace);
    let theta = theta_audit(trace).ok();
    let rate = fit_rate(trace, reference.value, 0.5).map_err(|e| e.to_string());
    let baseline_phi = match &prepared.config.strategy {
        PerturbStrategy::Directed { .. } => {
            let mut baseline = prepared.config.clone();
            baseline.strategy = PerturbStrategy::Zero;
            let out = run(&baseline)?;
            out.trace.last().map(|r| r.phi.clone())
        }
        _ => None,
    };
    let last_k = trace.last().map_or(2, |r| r.k);
    let bound_final = theoretical_bound(&trace.meta, last_k - 1, reference.point.view(), reference.value)?;
    Ok(SolveOutcome {
        output,
        reference,
        compliance,
        audit,
        theta,
        rate,
        baseline_phi,
        bound_final,
    })
}

/// `key: value` lines describing a finished run.
pub fn report_text(spec: &RunSpec, outcome: &SolveOutcome) -> String {
    let trace = &outcome.output.trace;
    let meta = &trace.meta;
    let last = trace.last().expect("runs record at least one iteration");
    let mut out = String::new();
    let mut kv = |key: &str, value: String| writeln!(out, "{key}: {value}").unwrap();
    kv("name", spec.name.clone());
    kv("objective", meta.objective.clone());
    kv("rule", meta.rule.describe());
    kv("iterations", meta.iterations.to_string());
    kv("tau", format!("{:.16e}", meta.tau));
    kv("rho", format!("{:.16e}", meta.rho));
    kv("tau_empirical", meta.tau_empirical.to_string());
    kv("mu", format!("{:.16e}", meta.budget.mu));
    kv("s", meta.budget.schedule.to_string());
    kv("sigma", meta.budget.variant.name().into());
    kv("perturb", meta.strategy.clone());
    kv("F_final", format!("{:.16e}", last.f));
    kv("F_best", format!("{:.16e}", outcome.output.best_value));
    kv("F_ref", format!("{:.16e}", outcome.reference.value));
    kv("gap_final", format!("{:.16e}", last.f - outcome.reference.value));
    kv("bound_final", format!("{:.16e}", outcome.bound_final));
    kv("compliance", format!("{}", outcome.compliance.fraction));
    kv("worst_slack", format!("{:.16e}", outcome.compliance.worst_slack));
    kv("reference_outside_mu", outcome.compliance.reference_outside_mu.to_string());
    kv("budget_within", outcome.audit.within_budget().to_string());
    kv("budget_cap_within", outcome.audit.within_cap().to_string());
    if let Some(theta) = outcome.theta {
        kv("theta_lower", theta.lower_ok.to_string());
        kv("theta_upper", theta.upper_ok.to_string());
    }
    match &outcome.rate {
        Ok(rate) => {
            kv("fitted_slope", format!("{:.6}", rate.fitted_slope));
            kv("r_squared", format!("{:.6}", rate.r_squared));
            kv("fit_window", format!("{} {}", rate.window.0, rate.window.1));
            kv("fit_excluded", rate.excluded.to_string());
        }
        Err(reason) => kv("fitted_slope", format!("unavailable ({reason})")),
    }
    if let Some(regime) = meta.budget.schedule.exponent().and_then(|r| predicted_regime_r(r).ok()) {
        kv("predicted_regime", regime.to_string());
    }
    for (name, value) in meta.phi_names.iter().zip(&last.phi) {
        kv(&format!("phi_{name}"), format!("{value:.16e}"));
    }
    if let Some(baseline) = &outcome.baseline_phi {
        for (name, value) in meta.phi_names.iter().zip(baseline) {
            kv(&format!("baseline_phi_{name}"), format!("{value:.16e}"));
        }
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct CliOptions {
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

impl CliOptions {
    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BudgetBreach { .. } => EXIT_BREACH,
        _ => EXIT_ERROR,
    }
}

/// Writes `<name>.trace.csv`, `<name>.report.txt` and optionally `<name>.bound.csv`.
pub fn write_outputs(spec: &RunSpec, outcome: &SolveOutcome, dir: &Path) -> Result<PathBuf> {
    let trace_path = dir.join(format!("{}.trace.csv", spec.name));
    outcome.output.trace.write(&trace_path)?;
    std::fs::write(dir.join(format!("{}.report.txt", spec.name)), report_text(spec, outcome))?;
    if spec.bound_csv {
        let csv = bound_csv(&outcome.output.trace, outcome.reference.point.view(), outcome.reference.value)?;
        std::fs::write(dir.join(format!("{}.bound.csv", spec.name)), csv)?;
    }
    Ok(trace_path)
}

pub fn cmd_solve(spec_path: &Path, opts: &CliOptions) -> i32 {
    let result = (|| -> Result<i32> {
        let spec = RunSpec::read(spec_path)?;
        let dir = opts.out_dir()?;
        let outcome = solve(&spec, None)?;
        let trace_path = write_outputs(&spec, &outcome, &dir)?;
        if !opts.quiet {
            println!(
                "{}: F = {:.10e}, gap = {:.3e}, compliance = {}, trace = {}",
                spec.name,
                outcome.output.trace.last().map_or(f64::NAN, |r| r.f),
                outcome.output.trace.last().map_or(f64::NAN, |r| r.f) - outcome.reference.value,
                outcome.compliance.fraction,
                trace_path.display()
            );
        }
        if outcome.breached() {
            eprintln!("budget breach at iterations {:?}", outcome.audit.over_budget);
            return Ok(EXIT_BREACH);
        }
        Ok(EXIT_OK)
    })();
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

pub const SWEEP_PARAMS: [&str; 4] = ["r", "omega-fill", "seed", "L"];

/// The spec with one parameter replaced. `omega-fill` sets a saturating strategy and
/// the schedule exponent `omega - 2`, so `|e_k|` decays like `1/k^omega`.
pub fn sweep_variant(base: &RunSpec, param: &str, value: &str) -> Result<RunSpec> {
    let mut spec = base.clone();
    let real = || -> Result<f64> {
        value
            .parse()
            .map_err(|_| Error::invalid(format!("`{value}` is not a real")))
    };
    let c = match &base.schedule {
        SSchedule::PowerLaw { c, .. } => *c,
        SSchedule::List(_) => 1.0,
    };
    match param {
        "r" => spec.schedule = SSchedule::PowerLaw { c, r: real()? },
        "omega-fill" => {
            spec.schedule = SSchedule::PowerLaw { c, r: real()? - 2.0 };
            spec.strategy = match &base.strategy {
                s @ PerturbStrategy::Saturating { .. } => s.clone(),
                _ => PerturbStrategy::Saturating {
                    fill: 1.0,
                    direction_seed: 0,
                },
            };
        }
        "seed" => {
            spec.seed = value
                .parse()
                .map_err(|_| Error::invalid(format!("`{value}` is not a seed")))?
        }
        "L" => {
            let l = StepValue::parse(value).ok_or_else(|| Error::invalid(format!("`{value}` is not a step constant")))?;
            spec.rule = match base.rule {
                RuleSpec::Constant(_) => RuleSpec::Constant(l),
                RuleSpec::Backtrack { eta, .. } => RuleSpec::Backtrack { l1: l, eta },
            };
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown sweep parameter `{other}` (expected one of {})",
                SWEEP_PARAMS.join(", ")
            )))
        }
    }
    spec.name = format!("{}-{param}-{value}", base.name);
    Ok(spec)
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: String,
    pub outcome: Result<SolveOutcome>,
}

/// Runs one solve per value concurrently, sharing one reference solution.
pub fn sweep(base: &RunSpec, param: &str, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let variants = values
        .iter()
        .map(|v| sweep_variant(base, param, v))
        .collect::<Result<Vec<_>>>()?;
    let prepared = prepare(base)?;
    let reference = reference_solution(&prepared.objective, base.reference_iterations)?;
    let outcomes: Vec<Result<SolveOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|spec| scope.spawn(|| solve(spec, Some(&reference))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::invalid("sweep worker panicked"))))
            .collect()
    });
    Ok(values
        .iter()
        .cloned()
        .zip(outcomes)
        .map(|(value, outcome)| SweepRow { value, outcome })
        .collect())
}

pub fn sweep_table(param: &str, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:<12} {:>24} {:>12} {:>12} {:>10} {:>10}\n",
        param, "F_final", "gap", "bound", "slope", "compliance"
    );
    for row in rows {
        match &row.outcome {
            Ok(o) => {
                let f = o.output.trace.last().map_or(f64::NAN, |r| r.f);
                let slope = o
                    .rate
                    .as_ref()
                    .map(|r| format!("{:.4}", r.fitted_slope))
                    .unwrap_or_else(|_| "n/a".into());
                writeln!(
                    out,
                    "{:<12} {:>24.16e} {:>12.4e} {:>12.4e} {:>10} {:>10}",
                    row.value,
                    f,
                    f - o.reference.value,
                    o.bound_final,
                    slope,
                    o.compliance.fraction
                )
                .unwrap();
            }
            Err(e) => writeln!(out, "{:<12} failed: {e}", row.value).unwrap(),
        }
    }
    out
}

pub fn cmd_sweep(spec_path: &Path, param: &str, values: &[String], opts: &CliOptions) -> i32 {
    let result = (|| -> Result<i32> {
        let base = RunSpec::read(spec_path)?;
        let dir = opts.out_dir()?;
        let rows = sweep(&base, param, values)?;
        let mut code = EXIT_OK;
        for row in &rows {
            match &row.outcome {
                Ok(outcome) => {
                    let spec = sweep_variant(&base, param, &row.value)?;
                    write_outputs(&spec, outcome, &dir)?;
                    if outcome.breached() {
                        code = code.max(EXIT_BREACH);
                    }
                }
                Err(e) => {
                    eprintln!("{param} = {}: {e}", row.value);
                    code = code.max(exit_code(e));
                }
            }
        }
        let table = sweep_table(param, &rows);
        std::fs::write(dir.join(format!("{}.sweep-{param}.txt", base.name)), &table)?;
        if !opts.quiet {
            print!("{table}");
        }
        info!("sweep over {param} finished with exit code {code}");
        Ok(code)
    })();
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

pub fn cmd_verify(corpus: &Path, suite: Option<&str>, opts: &CliOptions) -> i32 {
    let suites: Vec<Suite> = match suite {
        None => Suite::ALL.to_vec(),
        Some(name) => match name.parse() {
            Ok(s) => vec![s],
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        },
    };
    let entries = match load_corpus(corpus) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let mut all_passed = true;
    for suite in suites {
        let result = run_suite(suite, &entries);
        all_passed &= result.passed();
        if !opts.quiet || !result.passed() {
            println!(
                "{:<11} {} ({} checks)",
                suite.name(),
                if result.passed() { "PASS" } else { "FAIL" },
                result.checks
            );
        }
        for failure in &result.failures {
            println!("    {failure}");
        }
    }
    if all_passed {
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunSpec> {
        RunSpec::parse(text, "t.spec", Path::new("/data"), "t")
    }

    #[test]
    fn full_spec_parses() {
        let spec = parse(
            "problem gen lsq 5 8 3 0.25 1\nrule: backtrack hint/8 2\ns1 0.5\nmu 4\ns: power 2 1\n\
             sigma: sigma_tilde\nperturb: random 4 0.5\niters 30\nseed 9\nphi tv sqnorm\n",
        )
        .unwrap();
        assert_eq!(spec.rule, RuleSpec::Backtrack { l1: StepValue::HintTimes(0.125), eta: 2.0 });
        assert_eq!(spec.mu, MuSpec::Value(4.0));
        assert_eq!(spec.schedule, SSchedule::PowerLaw { c: 2.0, r: 1.0 });
        assert_eq!(spec.sigma, SigmaVariant::SigmaTilde);
        assert_eq!(spec.iterations, 30);
        assert_eq!(spec.phi, vec!["tv", "sqnorm"]);
    }

    #[test]
    fn defaults_and_relative_paths() {
        let spec = parse("problem small.inst\nrule constant 3\niters 5\n").unwrap();
        assert_eq!(spec.problem, ProblemSource::File(PathBuf::from("/data/small.inst")));
        assert_eq!(spec.mu, MuSpec::Auto);
        assert_eq!(spec.schedule, SSchedule::default());
        assert!(spec.strategy.is_zero());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("problem a.inst\nrule constant 1\n").unwrap_err().to_string();
        assert!(err.contains("t.spec:3") && err.contains("iters"), "{err}");
        let err = parse("problem a.inst\ncolour blue\n").unwrap_err().to_string();
        assert!(err.contains("t.spec:2") && err.contains("colour"), "{err}");
        let err = parse("problem a.inst\nrule constant 1\niters 4\nperturb: random 1 2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("t.spec:4"), "{err}");
        assert!(parse("problem a.inst\nrule constant 1\niters 4\niters 5\n").is_err());
    }

    #[test]
    fn sweep_variants() {
        let base = parse("problem a.inst\nrule constant hint\niters 4\ns: power 3 2\n").unwrap();
        let v = sweep_variant(&base, "r", "0").unwrap();
        assert_eq!(v.schedule, SSchedule::PowerLaw { c: 3.0, r: 0.0 });
        let v = sweep_variant(&base, "omega-fill", "4").unwrap();
        assert_eq!(v.schedule, SSchedule::PowerLaw { c: 3.0, r: 2.0 });
        assert!(matches!(v.strategy, PerturbStrategy::Saturating { .. }));
        assert_eq!(sweep_variant(&base, "L", "hint*2").unwrap().rule, RuleSpec::Constant(StepValue::HintTimes(2.0)));
        assert!(sweep_variant(&base, "eta", "2").is_err());
        assert!(sweep(&base, "r", &[]).is_err());
    }
}
