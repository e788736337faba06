//! Reference computations written with plain loops over `Vec<f64>`, independent of
//! the library's linear algebra and prox code.

#![allow(dead_code)]

use inexact_fista::problem::{NonsmoothSpec, ProblemInstance};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense problem data as nested vectors.
#[derive(Clone, Debug)]
pub struct Dense {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lambda: f64,
    pub g: NonsmoothSpec,
}

impl Dense {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        Dense {
            a: inst.a.rows().into_iter().map(|r| r.to_vec()).collect(),
            b: inst.b.to_vec(),
            lambda: inst.lambda,
            g: inst.g,
        }
    }

    pub fn to_instance(&self) -> ProblemInstance {
        let m = self.a.len();
        let n = self.a[0].len();
        ProblemInstance {
            a: Array2::from_shape_fn((m, n), |(i, j)| self.a[i][j]),
            b: Array1::from(self.b.clone()),
            lambda: self.lambda,
            g: self.g,
        }
    }

    pub fn n(&self) -> usize {
        self.a[0].len()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - bi)
            .collect()
    }

    /// `|Ax - b|^2`.
    pub fn f(&self, x: &[f64]) -> f64 {
        self.residual(x).iter().map(|r| r * r).sum()
    }

    /// `2 A^T (Ax - b)`.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residual(x);
        (0..self.n())
            .map(|j| 2.0 * self.a.iter().zip(&r).map(|(row, ri)| row[j] * ri).sum::<f64>())
            .collect()
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        match self.g {
            NonsmoothSpec::L1 => self.lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            NonsmoothSpec::Zero => 0.0,
            NonsmoothSpec::Box { lo, hi } => {
                if x.iter().all(|v| *v >= lo && *v <= hi) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn big_f(&self, x: &[f64]) -> f64 {
        self.f(x) + self.g(x)
    }

    /// `Q_L(x, y) = f(y) + <f'(y), x - y> + L/2 |x - y|^2 + g(x)`.
    pub fn q(&self, x: &[f64], y: &[f64], l: f64) -> f64 {
        self.q_at(y, l)(x)
    }

    /// `Q_L(., y)` with `f(y)` and `f'(y)` evaluated once.
    pub fn q_at<'a>(&'a self, y: &'a [f64], l: f64) -> impl Fn(&[f64]) -> f64 + 'a {
        let gy = self.grad(y);
        let fy = self.f(y);
        move |x: &[f64]| {
            let mut v = fy;
            for j in 0..x.len() {
                let d = x[j] - y[j];
                v += gy[j] * d + 0.5 * l * d * d;
            }
            v + self.g(x)
        }
    }

    /// `y - f'(y) / L`.
    pub fn gradient_step(&self, y: &[f64], l: f64) -> Vec<f64> {
        y.iter().zip(self.grad(y)).map(|(yi, gi)| yi - gi / l).collect()
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Minimizes `q` over points `i / inv_h` inside `[lo, hi]`.
fn grid_search(q: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], inv_h: f64) -> (Vec<f64>, f64) {
    let n = lo.len();
    let first: Vec<i64> = lo.iter().map(|v| (v * inv_h).ceil() as i64).collect();
    let last: Vec<i64> = hi.iter().map(|v| (v * inv_h).floor() as i64).collect();
    let mut best = (vec![0.0; n], f64::INFINITY);
    let total: i64 = first.iter().zip(&last).map(|(a, b)| b - a + 1).product();
    let mut x = vec![0.0; n];
    for mut flat in 0..total {
        for j in 0..n {
            let span = last[j] - first[j] + 1;
            x[j] = (first[j] + flat % span) as f64 / inv_h;
            flat /= span;
        }
        let v = q(&x);
        if v < best.1 {
            best = (x.clone(), v);
        }
    }
    best
}

/// Brute-force minimizer of `Q_L(., y)`: grids of spacing 0.1, 0.01 and 0.001, each
/// anchored at multiples of its spacing and centred on the previous level's winner.
pub fn brute_force_prox(d: &Dense, y: &[f64], l: f64, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    let q = d.q_at(y, l);
    let mut best = grid_search(&q, lo, hi, 10.0);
    for inv_h in [100.0, 1000.0] {
        let reach = 15.0 / inv_h;
        let lo: Vec<f64> = best.0.iter().map(|v| v - reach).collect();
        let hi: Vec<f64> = best.0.iter().map(|v| v + reach).collect();
        let refined = grid_search(&q, &lo, &hi, inv_h);
        if refined.1 <= best.1 {
            best = refined;
        }
    }
    best
}

/// Random small instance with entries of `A` in `[-0.5, 0.5]` so `L` stays moderate.
pub fn random_small(rng: &mut ChaCha8Rng, max_n: usize) -> Dense {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=3);
    let a = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    let b = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let g = match rng.random_range(0..3) {
        0 => NonsmoothSpec::Zero,
        1 => {
            let lo = rng.random_range(-10..0) as f64 / 10.0;
            let hi = rng.random_range(1..10) as f64 / 10.0;
            NonsmoothSpec::Box { lo, hi }
        }
        _ => NonsmoothSpec::L1,
    };
    Dense {
        a,
        b,
        lambda: rng.random_range(0.1..1.0),
        g,
    }
}

pub fn random_lasso(rng: &mut ChaCha8Rng, max_m: usize, max_n: usize) -> Dense {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    Dense {
        a: (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
        b: (0..m).map(|_| rng.random_range(-3.0..3.0)).collect(),
        lambda: rng.random_range(0.05..3.0),
        g: NonsmoothSpec::L1,
    }
}

/// `max_i` violation of `r in lambda * d|p|_1`.
pub fn l1_subgradient_violation(p: &[f64], r: &[f64], lambda: f64) -> f64 {
    p.iter()
        .zip(r)
        .map(|(pi, ri)| {
            if *pi > 0.0 {
                (ri - lambda).abs()
            } else if *pi < 0.0 {
                (ri + lambda).abs()
            } else {
                (ri.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `sum_{j=2}^{k} c / j^r` by direct summation.
pub fn power_sum(c: f64, r: f64, k: usize) -> f64 {
    (2..=k).map(|j| c / (j as f64).powf(r)).sum()
}

/// Minimizer of `(a x - b)^2 + lambda |x|` for scalars.
pub fn scalar_lasso(a: f64, b: f64, lambda: f64) -> f64 {
    // stationarity: 2a(ax - b) + lambda sign(x) = 0
    let z = a * b;
    let shrink = lambda / 2.0;
    if z > shrink {
        (z - shrink) / (a * a)
    } else if z < -shrink {
        (z + shrink) / (a * a)
    } else {
        0.0
    }
}

/// Minimum of a scalar function on a dense grid over `[lo, hi]`.
pub fn dense_grid_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    (0..=points)
        .map(|i| lo + (hi - lo) * i as f64 / points as f64)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}
