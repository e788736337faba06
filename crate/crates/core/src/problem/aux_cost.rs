use std::fmt;

use ndarray::{Array1, ArrayView1};

/// Auxiliary convex cost `phi` that active perturbations try to decrease.
pub trait AuxCost: fmt::Debug + Send + Sync {
    fn value(&self, x: ArrayView1<f64>) -> f64;

    /// One element of the subdifferential at `x`.
    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64>;

    fn name(&self) -> &'static str;
}

/// One-dimensional total variation `sum_i |x_{i+1} - x_i|`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TotalVariation1d;

impl AuxCost for TotalVariation1d {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        x.windows(2).into_iter().map(|w| (w[1] - w[0]).abs()).sum()
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut s = Array1::zeros(x.len());
        for i in 0..x.len().saturating_sub(1) {
            let d = x[i + 1] - x[i];
            // zero difference picks 0 from [-1, 1]
            let sg = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            s[i + 1] += sg;
            s[i] -= sg;
        }
        s
    }

    fn name(&self) -> &'static str {
        "tv"
    }
}

/// `|x|^2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredNorm;

impl AuxCost for SquaredNorm {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&x)
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        2.0 * &x
    }

    fn name(&self) -> &'static str {
        "sqnorm"
    }
}
