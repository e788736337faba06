use std::fmt;

use ndarray::{Array1, ArrayView1, Zip};

use super::Interval;
use crate::error::{Error, Result};

/// Proper, convex, lower semicontinuous `g` with a computable prox.
pub trait NonsmoothTerm: fmt::Debug + Send + Sync {
    /// `g(x)`, possibly `+inf`.
    fn value(&self, x: ArrayView1<f64>) -> f64;

    /// `argmin_x g(x) + |x - v|^2 / (2 step)`.
    fn prox(&self, v: ArrayView1<f64>, step: f64) -> Array1<f64>;

    /// Interval containing `g` on `B[center, radius]`, or `None` if `g` may be `+inf`
    /// on the ball.
    fn ball_bounds(&self, center: ArrayView1<f64>, radius: f64) -> Option<Interval>;

    /// Global lower bound of `g`.
    fn lower_bound(&self) -> f64;

    /// How far `r` is from being a subgradient of `g` at `p` (0 when it is one).
    fn subgradient_violation(&self, p: ArrayView1<f64>, r: ArrayView1<f64>) -> f64;

    fn is_indicator(&self) -> bool {
        false
    }

    /// Weight `lambda` when `g = lambda |.|_1`.
    fn l1_weight(&self) -> Option<f64> {
        None
    }

    fn describe(&self) -> String;
}

/// Componentwise shrinkage `max(|v_i| - alpha, 0) sign(v_i)`.
pub fn soft_threshold(v: ArrayView1<f64>, alpha: f64) -> Result<Array1<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("threshold must be nonnegative, got {alpha}")));
    }
    Ok(shrink(v, alpha))
}

fn shrink(v: ArrayView1<f64>, alpha: f64) -> Array1<f64> {
    v.mapv(|x| (x.abs() - alpha).max(0.0) * sign(x))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `g(x) = lambda |x|_1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Norm {
    lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("l1 weight must be finite and nonnegative, got {lambda}")));
        }
        Ok(L1Norm { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl NonsmoothTerm for L1Norm {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: ArrayView1<f64>, step: f64) -> Array1<f64> {
        shrink(v, self.lambda * step)
    }

    fn ball_bounds(&self, center: ArrayView1<f64>, radius: f64) -> Option<Interval> {
        // |x|_1 <= |c|_1 + sqrt(n) |x - c|
        let l1 = center.iter().map(|v| v.abs()).sum::<f64>();
        let spread = (center.len() as f64).sqrt() * radius;
        Some(Interval::new(
            (self.lambda * (l1 - spread)).max(0.0),
            self.lambda * (l1 + spread),
        ))
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }

    fn subgradient_violation(&self, p: ArrayView1<f64>, r: ArrayView1<f64>) -> f64 {
        p.iter()
            .zip(r.iter())
            .map(|(&pi, &ri)| {
                if pi == 0.0 {
                    (ri.abs() - self.lambda).max(0.0)
                } else {
                    (ri - self.lambda * sign(pi)).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    fn l1_weight(&self) -> Option<f64> {
        Some(self.lambda)
    }

    fn describe(&self) -> String {
        format!("l1({})", self.lambda)
    }
}

/// `g = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZeroTerm;

impl NonsmoothTerm for ZeroTerm {
    fn value(&self, _x: ArrayView1<f64>) -> f64 {
        0.0
    }

    fn prox(&self, v: ArrayView1<f64>, _step: f64) -> Array1<f64> {
        v.to_owned()
    }

    fn ball_bounds(&self, _center: ArrayView1<f64>, _radius: f64) -> Option<Interval> {
        Some(Interval::point(0.0))
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }

    fn subgradient_violation(&self, _p: ArrayView1<f64>, r: ArrayView1<f64>) -> f64 {
        r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    fn describe(&self) -> String {
        "zero".into()
    }
}

/// Indicator of the box `[lo, hi]^n`: 0 inside, `+inf` outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxIndicator {
    lo: f64,
    hi: f64,
}

impl BoxIndicator {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("box needs finite lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(BoxIndicator { lo, hi })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn contains(&self, x: ArrayView1<f64>) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
    }
}

impl NonsmoothTerm for BoxIndicator {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, v: ArrayView1<f64>, _step: f64) -> Array1<f64> {
        v.mapv(|x| x.clamp(self.lo, self.hi))
    }

    fn ball_bounds(&self, center: ArrayView1<f64>, radius: f64) -> Option<Interval> {
        // only balls strictly inside the box are reported bounded
        let inside = center
            .iter()
            .all(|&c| c - radius > self.lo && c + radius < self.hi);
        inside.then(|| Interval::point(0.0))
    }

    fn lower_bound(&self) -> f64 {
        0.0
    }

    fn subgradient_violation(&self, p: ArrayView1<f64>, r: ArrayView1<f64>) -> f64 {
        if !self.contains(p) {
            return f64::INFINITY;
        }
        if self.lo == self.hi {
            return 0.0;
        }
        let mut worst = 0.0f64;
        Zip::from(p).and(r).for_each(|&pi, &ri| {
            let v = if pi == self.lo {
                ri.max(0.0)
            } else if pi == self.hi {
                (-ri).max(0.0)
            } else {
                ri.abs()
            };
            worst = worst.max(v);
        });
        worst
    }

    fn is_indicator(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("box({}, {})", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_threshold_examples() {
        let v = array![2.0, -1.0, 0.3];
        assert_eq!(soft_threshold(v.view(), 0.0).unwrap(), v);
        assert_eq!(soft_threshold(v.view(), 0.5).unwrap(), array![1.5, -0.5, 0.0]);
        assert_eq!(
            soft_threshold(Array1::zeros(3).view(), 4.2).unwrap(),
            Array1::<f64>::zeros(3)
        );
        assert!(soft_threshold(v.view(), -0.1).is_err());
        assert!(soft_threshold(v.view(), f64::NAN).is_err());
    }

    #[test]
    fn l1_subgradient_violation() {
        let g = L1Norm::new(1.0).unwrap();
        let p = array![0.0, 2.0, -1.0];
        assert_eq!(g.subgradient_violation(p.view(), array![0.5, 1.0, -1.0].view()), 0.0);
        assert!((g.subgradient_violation(p.view(), array![1.5, 1.0, -1.0].view()) - 0.5).abs() < 1e-15);
        assert!((g.subgradient_violation(p.view(), array![0.0, 0.9, -1.0].view()) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn box_subgradient_violation_uses_the_normal_cone() {
        let g = BoxIndicator::new(0.0, 1.0).unwrap();
        let p = array![0.0, 1.0, 0.5];
        assert_eq!(g.subgradient_violation(p.view(), array![-3.0, 2.0, 0.0].view()), 0.0);
        assert_eq!(g.subgradient_violation(p.view(), array![1.0, 0.0, 0.0].view()), 1.0);
        assert_eq!(g.subgradient_violation(array![2.0].view(), array![0.0].view()), f64::INFINITY);
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(BoxIndicator::new(1.0, 0.0).is_err());
        assert!(L1Norm::new(-1.0).is_err());
    }
}
