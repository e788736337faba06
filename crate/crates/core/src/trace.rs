//! Append-only run record and its text serialization.
//!
//! The file is a `#`-prefixed metadata header (`# key: value`) followed by one
//! comma-separated record per line, columns `k,F,e_norm,budget,sigma,Lambda,L,t`
//! then one column per configured auxiliary cost. Reals are written with 17
//! significant digits so a parsed trace reproduces every recorded value exactly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use ndarray::Array1;

use crate::budget::{BudgetConfig, SSchedule, SigmaVariant};
use crate::error::{Error, Result};
use crate::schedule::StepSizeRule;

const MAGIC: &str = "# inexact-fista trace v1";
const BASE_COLUMNS: [&str; 8] = ["k", "F", "e_norm", "budget", "sigma", "Lambda", "L", "t"];

/// Run-level constants needed to evaluate the convergence bound after the fact.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceMeta {
    pub objective: String,
    pub dim: usize,
    pub rule: StepSizeRule,
    pub tau: f64,
    pub rho: f64,
    pub tau_empirical: bool,
    /// `L_1`.
    pub l1: f64,
    pub budget: BudgetConfig,
    /// Strategy in run-spec grammar, e.g. `saturate 1 7`.
    pub strategy: String,
    pub t2: f64,
    pub x1: Array1<f64>,
    pub y2: Array1<f64>,
    /// `F(x_1)`, possibly `+inf`.
    pub f_x1: f64,
    pub iterations: usize,
    pub phi_names: Vec<String>,
    /// Set only by fault-injection runs that scale `e_k` past its budget.
    pub fault_scale: Option<f64>,
}

impl TraceMeta {
    pub fn strategy_kind(&self) -> &str {
        self.strategy.split_whitespace().next().unwrap_or("")
    }

    /// Fill parameter of the recorded strategy, if it has one.
    pub fn strategy_fill(&self) -> Option<f64> {
        let tokens: Vec<&str> = self.strategy.split_whitespace().collect();
        match tokens.as_slice() {
            ["random", _, fill] | ["saturate", fill, _] | ["directed", _, fill] => fill.parse().ok(),
            _ => None,
        }
    }
}

/// Values not serialized: useful in-process, absent from parsed traces.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordDetail {
    pub bounded: bool,
    pub p_norm: f64,
    pub x_norm: f64,
    pub nu: Option<f64>,
    pub backtracking_trials: usize,
    pub wall: Duration,
    pub diagnostics: Option<Diagnostics>,
}

/// Optional per-iteration cross-checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// `F(x_k) <= Q_{L_k}(x_k, y_k)`, the check available when only `x_k` is known.
    pub surrogate_majorizes: bool,
    /// `Lambda_k` recomputed on `B[x_k, 2 s1]` after the perturbation is fixed.
    pub lambda_at_iterate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub k: usize,
    /// `F(x_k)`.
    pub f: f64,
    pub e_norm: f64,
    pub budget: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub l: f64,
    pub t: f64,
    pub phi: Vec<f64>,
    pub detail: Option<RecordDetail>,
}

impl Record {
    fn columns_eq(&self, other: &Record) -> bool {
        let bits = |r: &Record| {
            let mut v = vec![r.f, r.e_norm, r.budget, r.sigma, r.lambda, r.l, r.t];
            v.extend(&r.phi);
            v.into_iter().map(f64::to_bits).collect::<Vec<_>>()
        };
        self.k == other.k && bits(self) == bits(other)
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub meta: TraceMeta,
    records: Vec<Record>,
}

impl Trace {
    pub fn new(meta: TraceMeta) -> Self {
        Trace {
            meta,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Appends a record; `k` must exceed the last recorded index.
    pub fn push(&mut self, record: Record) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.k <= last.k {
                return Err(Error::invalid(format!("trace records must increase in k: {} after {}", record.k, last.k)));
            }
        }
        if record.phi.len() != self.meta.phi_names.len() {
            return Err(Error::invalid("record has the wrong number of phi values"));
        }
        self.records.push(record);
        Ok(())
    }

    /// Equality of everything that is serialized.
    pub fn same_content(&self, other: &Trace) -> bool {
        self.meta == other.meta
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| a.columns_eq(b))
    }

    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let mut kv = |key: &str, value: String| {
            writeln!(out, "# {key}: {value}").unwrap();
        };
        kv("objective", m.objective.clone());
        kv("dim", m.dim.to_string());
        kv("rule", m.rule.describe());
        kv("tau", real(m.tau));
        kv("rho", real(m.rho));
        kv("tau_empirical", m.tau_empirical.to_string());
        kv("L1", real(m.l1));
        kv("s1", real(m.budget.s1));
        kv("mu", real(m.budget.mu));
        kv("s", m.budget.schedule.to_string());
        kv("sigma", m.budget.variant.name().to_string());
        kv("perturb", m.strategy.clone());
        kv("t2", real(m.t2));
        kv("F_x1", real(m.f_x1));
        kv("iters", m.iterations.to_string());
        kv("x1", vector(&m.x1));
        kv("y2", vector(&m.y2));
        kv("phi", m.phi_names.join(" "));
        kv(
            "fault_scale",
            m.fault_scale.map(real).unwrap_or_else(|| "none".to_string()),
        );
        let mut columns: Vec<String> = BASE_COLUMNS.iter().map(|c| c.to_string()).collect();
        columns.extend(m.phi_names.iter().map(|p| format!("phi_{p}")));
        kv("columns", columns.join(","));

        let mut text = format!("{MAGIC}\n{out}");
        for r in &self.records {
            let mut fields = vec![
                r.k.to_string(),
                real(r.f),
                real(r.e_norm),
                real(r.budget),
                real(r.sigma),
                real(r.lambda),
                real(r.l),
                real(r.t),
            ];
            fields.extend(r.phi.iter().map(|v| real(*v)));
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        text
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, MAGIC)) => {}
            _ => return Err(Error::parse(origin, 1, "not a trace file")),
        }
        let mut header = std::collections::HashMap::new();
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) = rest
                    .split_once(": ")
                    .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
                    .ok_or_else(|| Error::parse(origin, line_no, "malformed metadata line"))?;
                header.insert(key.to_string(), (line_no, value.to_string()));
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            records.push((line_no, line));
        }

        let get = |key: &str| -> Result<&(usize, String)> {
            header
                .get(key)
                .ok_or_else(|| Error::MissingMetadata(format!("{origin}: `{key}`")))
        };
        let real_of = |key: &str| -> Result<f64> {
            let (line, v) = get(key)?;
            parse_real(v, origin, *line)
        };
        let (rule_line, rule_text) = get("rule")?;
        let rule = parse_rule(rule_text).ok_or_else(|| Error::parse(origin, *rule_line, "bad rule"))?;
        let (s_line, s_text) = get("s")?;
        let schedule: SSchedule = s_text
            .parse()
            .map_err(|e: Error| Error::parse(origin, *s_line, e.to_string()))?;
        let (v_line, v_text) = get("sigma")?;
        let variant: SigmaVariant = v_text
            .parse()
            .map_err(|e: Error| Error::parse(origin, *v_line, e.to_string()))?;
        let (d_line, d_text) = get("dim")?;
        let dim: usize = d_text
            .parse()
            .map_err(|_| Error::parse(origin, *d_line, "bad dim"))?;
        let (i_line, i_text) = get("iters")?;
        let iterations: usize = i_text
            .parse()
            .map_err(|_| Error::parse(origin, *i_line, "bad iters"))?;
        let vector_of = |key: &str| -> Result<Array1<f64>> {
            let (line, v) = get(key)?;
            let values = v
                .split_whitespace()
                .map(|t| parse_real(t, origin, *line))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != dim {
                return Err(Error::parse(origin, *line, format!("`{key}` has {} entries, expected {dim}", values.len())));
            }
            Ok(Array1::from(values))
        };
        let (e_line, e_text) = get("tau_empirical")?;
        let tau_empirical = e_text
            .parse()
            .map_err(|_| Error::parse(origin, *e_line, "bad tau_empirical"))?;
        let fault_scale = match get("fault_scale")?.1.as_str() {
            "none" => None,
            _ => Some(real_of("fault_scale")?),
        };
        let phi_names: Vec<String> = get("phi")?.1.split_whitespace().map(str::to_string).collect();

        let meta = TraceMeta {
            objective: get("objective")?.1.clone(),
            dim,
            rule,
            tau: real_of("tau")?,
            rho: real_of("rho")?,
            tau_empirical,
            l1: real_of("L1")?,
            budget: BudgetConfig {
                s1: real_of("s1")?,
                mu: real_of("mu")?,
                schedule,
                variant,
            },
            strategy: get("perturb")?.1.clone(),
            t2: real_of("t2")?,
            x1: vector_of("x1")?,
            y2: vector_of("y2")?,
            f_x1: real_of("F_x1")?,
            iterations,
            phi_names,
            fault_scale,
        };

        let width = BASE_COLUMNS.len() + meta.phi_names.len();
        let mut trace = Trace::new(meta);
        for (line_no, line) in records {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(Error::parse(origin, line_no, format!("expected {width} columns, found {}", fields.len())));
            }
            let k = fields[0]
                .parse()
                .map_err(|_| Error::parse(origin, line_no, "bad iteration index"))?;
            let v = fields[1..]
                .iter()
                .map(|t| parse_real(t, origin, line_no))
                .collect::<Result<Vec<_>>>()?;
            trace
                .push(Record {
                    k,
                    f: v[0],
                    e_norm: v[1],
                    budget: v[2],
                    sigma: v[3],
                    lambda: v[4],
                    l: v[5],
                    t: v[6],
                    phi: v[7..].to_vec(),
                    detail: None,
                })
                .map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        }
        Ok(trace)
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn vector(v: &Array1<f64>) -> String {
    v.iter().map(|x| real(*x)).collect::<Vec<_>>().join(" ")
}

fn parse_real(token: &str, origin: &str, line: usize) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(origin, line, format!("expected a real, got `{token}`")))
}

fn parse_rule(text: &str) -> Option<StepSizeRule> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.as_slice() {
        ["constant", l] => Some(StepSizeRule::Constant { l: l.parse().ok()? }),
        ["backtrack", l1, eta] => Some(StepSizeRule::Backtracking {
            l1: l1.parse().ok()?,
            eta: eta.parse().ok()?,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn meta() -> TraceMeta {
        TraceMeta {
            objective: "lsq(2x2) + l1(1)".into(),
            dim: 2,
            rule: StepSizeRule::Backtracking { l1: 0.5, eta: 2.0 },
            tau: 4.0,
            rho: 0.5,
            tau_empirical: false,
            l1: 0.5,
            budget: BudgetConfig {
                s1: 1.0,
                mu: 25.0,
                schedule: SSchedule::PowerLaw { c: 1.0, r: 2.0 },
                variant: SigmaVariant::SigmaTilde,
            },
            strategy: "saturate 1.0000000000000000e0 3".into(),
            t2: 1.0,
            x1: array![0.0, 0.1],
            y2: array![0.0, 0.1],
            f_x1: f64::INFINITY,
            iterations: 3,
            phi_names: vec!["tv".into()],
            fault_scale: None,
        }
    }

    fn record(k: usize) -> Record {
        Record {
            k,
            f: 1.0 / 3.0,
            e_norm: 1e-300,
            budget: 0.1 + 0.2,
            sigma: 8.0,
            lambda: 0.0,
            l: 2.0,
            t: 1.618_033_988_749_895,
            phi: vec![std::f64::consts::PI],
            detail: None,
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut trace = Trace::new(meta());
        trace.push(record(2)).unwrap();
        trace.push(record(3)).unwrap();
        let text = trace.to_text();
        let back = Trace::parse(&text, "mem").unwrap();
        assert!(back.same_content(&trace));
        assert_eq!(back.to_text(), text);
        assert_eq!(back.meta.strategy_kind(), "saturate");
        assert_eq!(back.meta.strategy_fill(), Some(1.0));
    }

    #[test]
    fn records_are_append_only_in_k() {
        let mut trace = Trace::new(meta());
        trace.push(record(3)).unwrap();
        assert!(trace.push(record(3)).is_err());
        assert!(trace.push(record(2)).is_err());
    }

    #[test]
    fn parse_reports_missing_metadata_and_bad_rows() {
        assert!(Trace::parse("k,F\n", "x").is_err());
        let mut trace = Trace::new(meta());
        trace.push(record(2)).unwrap();
        let text = trace.to_text().replace("# mu: ", "# nu: ");
        assert!(matches!(Trace::parse(&text, "x"), Err(Error::MissingMetadata(_))));
        let text = format!("{}2,1,2\n", Trace::new(meta()).to_text());
        assert!(Trace::parse(&text, "x").unwrap_err().to_string().contains("columns"));
    }
}
