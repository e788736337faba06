//! Plain-text instance files and seeded instance generators.
//!
//! Instance file grammar (whitespace separated, `#` starts a comment line):
//!
//! ```text
//! n m lambda          header: dimension, number of rows, l1 weight
//! g=l1                optional, at most once; one of `g=l1`, `g=zero`, `g=box lo hi`
//! a11 a12 ... a1n     m rows of A, exactly n reals per line
//! ...
//! b1 b2 ... bm        m reals of b, on one or more lines
//! ```
//!
//! The `g=` line may appear anywhere after the header; the default is `g=l1`.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BoxIndicator, L1Norm, LeastSquares, Objective, ZeroTerm};
use crate::error::{Error, Result};

const GENERATOR_NOISE: f64 = 0.01;

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NonsmoothSpec {
    L1,
    Zero,
    Box { lo: f64, hi: f64 },
}

/// A least-squares instance `|Ax - b|^2 + g(x)` as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub lambda: f64,
    pub g: NonsmoothSpec,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn to_objective(&self) -> Result<Objective> {
        let f = LeastSquares::new(self.a.clone(), self.b.clone())?;
        Ok(match self.g {
            NonsmoothSpec::L1 => Objective::new(f, L1Norm::new(self.lambda)?),
            NonsmoothSpec::Zero => Objective::new(f, ZeroTerm),
            NonsmoothSpec::Box { lo, hi } => Objective::new(f, BoxIndicator::new(lo, hi)?),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses the instance grammar; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, f64)> = None;
        let mut g: Option<NonsmoothSpec> = None;
        let mut rows: Vec<f64> = Vec::new();
        let mut rows_seen = 0;
        let mut b: Vec<f64> = Vec::new();
        let mut last_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("g=") {
                if header.is_none() {
                    return Err(Error::parse(origin, line_no, "`g=` line before the header"));
                }
                if g.is_some() {
                    return Err(Error::parse(origin, line_no, "duplicate `g=` line"));
                }
                g = Some(parse_g(rest, origin, line_no)?);
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let Some((n, m, _)) = header else {
                if tokens.len() != 3 {
                    return Err(Error::parse(origin, line_no, "header must be `n m lambda`"));
                }
                let n = parse_count(tokens[0], "n", origin, line_no)?;
                let m = parse_count(tokens[1], "m", origin, line_no)?;
                let lambda = parse_real(tokens[2], origin, line_no)?;
                if lambda < 0.0 {
                    return Err(Error::parse(origin, line_no, "lambda must be nonnegative"));
                }
                header = Some((n, m, lambda));
                continue;
            };
            if rows_seen < m {
                if tokens.len() != n {
                    return Err(Error::parse(
                        origin,
                        line_no,
                        format!("row {} of A has {} entries, expected {n}", rows_seen + 1, tokens.len()),
                    ));
                }
                for t in tokens {
                    rows.push(parse_real(t, origin, line_no)?);
                }
                rows_seen += 1;
            } else {
                for t in tokens {
                    if b.len() == m {
                        return Err(Error::parse(origin, line_no, format!("more than {m} entries in b")));
                    }
                    b.push(parse_real(t, origin, line_no)?);
                }
            }
        }

        let Some((n, m, lambda)) = header else {
            return Err(Error::parse(origin, last_line.max(1), "missing header `n m lambda`"));
        };
        if rows_seen < m {
            return Err(Error::parse(origin, last_line, format!("expected {m} rows of A, found {rows_seen}")));
        }
        if b.len() != m {
            return Err(Error::parse(origin, last_line, format!("expected {m} entries in b, found {}", b.len())));
        }
        let a = Array2::from_shape_vec((m, n), rows).expect("row count checked");
        Ok(ProblemInstance {
            a,
            b: Array1::from(b),
            lambda,
            g: g.unwrap_or(NonsmoothSpec::L1),
        })
    }

    /// Serializes with 17 significant digits, so `parse(to_text())` is exact.
    pub fn to_text(&self) -> String {
        let (m, n) = self.a.dim();
        let mut out = String::new();
        writeln!(out, "{n} {m} {}", fmt_real(self.lambda)).unwrap();
        match self.g {
            NonsmoothSpec::L1 => out.push_str("g=l1\n"),
            NonsmoothSpec::Zero => out.push_str("g=zero\n"),
            NonsmoothSpec::Box { lo, hi } => {
                writeln!(out, "g=box {} {}", fmt_real(lo), fmt_real(hi)).unwrap()
            }
        }
        for row in self.a.rows() {
            let line: Vec<String> = row.iter().map(|v| fmt_real(*v)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        let line: Vec<String> = self.b.iter().map(|v| fmt_real(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
        out
    }
}

pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_g(rest: &str, origin: &str, line: usize) -> Result<NonsmoothSpec> {
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    match tokens.as_slice() {
        ["l1"] => Ok(NonsmoothSpec::L1),
        ["zero"] => Ok(NonsmoothSpec::Zero),
        ["box", lo, hi] => {
            let lo = parse_real(lo, origin, line)?;
            let hi = parse_real(hi, origin, line)?;
            if lo > hi {
                return Err(Error::parse(origin, line, "box needs lo <= hi"));
            }
            Ok(NonsmoothSpec::Box { lo, hi })
        }
        _ => Err(Error::parse(origin, line, format!("unknown nonsmooth term `g={rest}`"))),
    }
}

fn parse_count(token: &str, what: &str, origin: &str, line: usize) -> Result<usize> {
    match token.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::parse(origin, line, format!("{what} must be a positive integer, got `{token}`"))),
    }
}

fn parse_real(token: &str, origin: &str, line: usize) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(origin, line, format!("expected a finite real, got `{token}`"))),
    }
}

/// Seeded compressed-sensing fixture: `A` i.i.d. standard normal, `b = A x + noise`
/// with `x` sparse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsqGenerator {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub density: f64,
    pub lambda: f64,
}

impl LsqGenerator {
    /// Returns the instance and the planted sparse vector.
    pub fn generate(&self) -> Result<(ProblemInstance, Array1<f64>)> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("generator needs m, n > 0"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::invalid(format!("density must be in (0, 1], got {}", self.density)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let a = Array2::from_shape_simple_fn((self.m, self.n), || standard_normal(&mut rng));
        let nonzeros = ((self.density * self.n as f64).round() as usize).clamp(1, self.n);
        let mut planted = Array1::zeros(self.n);
        for idx in rand::seq::index::sample(&mut rng, self.n, nonzeros) {
            planted[idx] = standard_normal(&mut rng);
        }
        let noise = Array1::from_shape_simple_fn(self.m, || {
            GENERATOR_NOISE * standard_normal(&mut rng)
        });
        let b = a.dot(&planted) + noise;
        Ok((
            ProblemInstance {
                a,
                b,
                lambda: self.lambda,
                g: NonsmoothSpec::L1,
            },
            planted,
        ))
    }
}

/// 1-D deblurring toy: truncated Gaussian blur (width 2, support 9, rows normalized),
/// piecewise-constant signal, small seeded noise, `g = lambda |.|_1`.
pub fn blur_instance(n: usize, seed: u64, lambda: f64) -> Result<(ProblemInstance, Array1<f64>)> {
    if n < 2 {
        return Err(Error::invalid("blur instance needs n >= 2"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    let width = 2.0f64;
    let mut a = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let lo = i.saturating_sub(4);
        let hi = (i + 4).min(n - 1);
        for j in lo..=hi {
            let d = i as f64 - j as f64;
            a[[i, j]] = (-0.5 * d * d / (width * width)).exp();
        }
        let s = a.row(i).sum();
        a.row_mut(i).mapv_inplace(|v| v / s);
    }
    let levels = [0.0, 1.0, -0.5, 0.75];
    let truth = Array1::from_shape_fn(n, |i| levels[(4 * i / n).min(3)]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array1::from_shape_simple_fn(n, || GENERATOR_NOISE * standard_normal(&mut rng));
    let b = a.dot(&truth) + noise;
    Ok((
        ProblemInstance {
            a,
            b,
            lambda,
            g: NonsmoothSpec::L1,
        },
        truth,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "# two by two\n2 2 0.5\ng=box 0 1\n1 0\n0 2\n1 -1\n";

    #[test]
    fn parses_the_documented_grammar() {
        let inst = ProblemInstance::parse(SMALL, "small").unwrap();
        assert_eq!(inst.dim(), 2);
        assert_eq!(inst.lambda, 0.5);
        assert_eq!(inst.g, NonsmoothSpec::Box { lo: 0.0, hi: 1.0 });
        assert_eq!(inst.a[[1, 1]], 2.0);
        assert_eq!(inst.b.to_vec(), vec![1.0, -1.0]);
    }

    #[test]
    fn default_term_is_l1() {
        let inst = ProblemInstance::parse("1 1 2\n3\n4\n", "x").unwrap();
        assert_eq!(inst.g, NonsmoothSpec::L1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ProblemInstance::parse("2 2 1\n1 0\n0\n1 1\n", "bad.inst").unwrap_err();
        assert!(err.to_string().starts_with("bad.inst:3:"), "{err}");
        let err = ProblemInstance::parse("2 2 1\n1 0\n0 1\n1\n", "short.inst").unwrap_err();
        assert!(err.to_string().contains("expected 2 entries in b"), "{err}");
        let err = ProblemInstance::parse("2 1 1\ng=huber\n", "g.inst").unwrap_err();
        assert!(err.to_string().starts_with("g.inst:2:"), "{err}");
        assert!(ProblemInstance::parse("", "empty").is_err());
        assert!(ProblemInstance::parse("1 1 1\nnan\n0\n", "nan").is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let (inst, _) = LsqGenerator {
            m: 4,
            n: 6,
            seed: 9,
            density: 0.3,
            lambda: 1.0,
        }
        .generate()
        .unwrap();
        let back = ProblemInstance::parse(&inst.to_text(), "rt").unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn generator_is_deterministic_and_sparse() {
        let cfg = LsqGenerator {
            m: 50,
            n: 100,
            seed: 1,
            density: 0.1,
            lambda: 1.0,
        };
        let (a, x) = cfg.generate().unwrap();
        let (b, y) = cfg.generate().unwrap();
        assert_eq!(a, b);
        assert_eq!(x, y);
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 10);
    }

    #[test]
    fn blur_rows_are_normalized() {
        let (inst, truth) = blur_instance(100, 7, 0.1).unwrap();
        for row in inst.a.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert_eq!(truth.len(), 100);
    }
}
