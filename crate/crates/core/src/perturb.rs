//! Error vectors `e_k` chosen inside the certified budget: passive noise models and
//! the active (superiorization) strategy that steps against an auxiliary cost.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{norm, standard_normal, AuxCost, SquaredNorm, TotalVariation1d};

/// Subgradients shorter than this produce no directed step.
const DIRECTED_MIN_SUBGRADIENT: f64 = 1e-12;

/// Stream index used by [`PerturbStrategy::Saturating`]: one direction for all `k`.
const FIXED_STREAM: u64 = u64::MAX;

#[derive(Clone)]
pub enum PerturbStrategy {
    Zero,
    /// Fresh uniform direction per iteration from the `(seed, k)` stream, length
    /// `fill * budget`.
    RandomBall { seed: u64, fill: f64 },
    /// One fixed seeded direction, length exactly `fill * budget`.
    Saturating { fill: f64, direction_seed: u64 },
    /// `-fill * budget * s / |s|` with `s` a subgradient of `phi` at the prox point.
    Directed { phi: Arc<dyn AuxCost>, fill: f64 },
}

impl fmt::Debug for PerturbStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl PerturbStrategy {
    pub fn directed_tv(fill: f64) -> Self {
        PerturbStrategy::Directed {
            phi: Arc::new(TotalVariation1d),
            fill,
        }
    }

    pub fn directed_sqnorm(fill: f64) -> Self {
        PerturbStrategy::Directed {
            phi: Arc::new(SquaredNorm),
            fill,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.fill() {
            Some(fill) if !(fill > 0.0 && fill <= 1.0) => {
                Err(Error::invalid(format!("fill must be in (0, 1], got {fill}")))
            }
            _ => Ok(()),
        }
    }

    pub fn fill(&self) -> Option<f64> {
        match self {
            PerturbStrategy::Zero => None,
            PerturbStrategy::RandomBall { fill, .. }
            | PerturbStrategy::Saturating { fill, .. }
            | PerturbStrategy::Directed { fill, .. } => Some(*fill),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PerturbStrategy::Zero)
    }

    /// Folds a run-level seed into the strategy's own seed. Seed 0 is the identity.
    pub fn with_run_seed(&self, run_seed: u64) -> Self {
        let mix = |s: u64| s.wrapping_add(run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match self {
            PerturbStrategy::RandomBall { seed, fill } => PerturbStrategy::RandomBall {
                seed: mix(*seed),
                fill: *fill,
            },
            PerturbStrategy::Saturating {
                fill,
                direction_seed,
            } => PerturbStrategy::Saturating {
                fill: *fill,
                direction_seed: mix(*direction_seed),
            },
            other => other.clone(),
        }
    }

    /// Same grammar as the run-spec `perturb:` line.
    pub fn describe(&self) -> String {
        match self {
            PerturbStrategy::Zero => "zero".into(),
            PerturbStrategy::RandomBall { seed, fill } => format!("random {seed} {fill:.16e}"),
            PerturbStrategy::Saturating {
                fill,
                direction_seed,
            } => format!("saturate {fill:.16e} {direction_seed}"),
            PerturbStrategy::Directed { phi, fill } => format!("directed {} {fill:.16e}", phi.name()),
        }
    }

    /// `e` with `|e| <= budget`, computed from the unperturbed prox point `p`.
    pub fn make_perturbation(&self, p: ArrayView1<f64>, budget: f64, k: usize) -> Array1<f64> {
        let n = p.len();
        if budget <= 0.0 || !budget.is_finite() {
            return Array1::zeros(n);
        }
        let e = match self {
            PerturbStrategy::Zero => return Array1::zeros(n),
            PerturbStrategy::RandomBall { seed, fill } => fill * budget * unit_direction(*seed, k as u64, n),
            PerturbStrategy::Saturating {
                fill,
                direction_seed,
            } => fill * budget * unit_direction(*direction_seed, FIXED_STREAM, n),
            PerturbStrategy::Directed { phi, fill } => {
                let s = phi.subgradient(p);
                let s_norm = norm(s.view());
                if !(s_norm > DIRECTED_MIN_SUBGRADIENT) || !s_norm.is_finite() {
                    return Array1::zeros(n);
                }
                (-fill * budget / s_norm) * s
            }
        };
        clip_to_ball(e, budget)
    }
}

/// Unit vector from the counter-based stream keyed by `(seed, stream)`.
fn unit_direction(seed: u64, stream: u64, n: usize) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let v = Array1::from_shape_simple_fn(n, || standard_normal(&mut rng));
        let v_norm = norm(v.view());
        if v_norm > 0.0 {
            return v / v_norm;
        }
    }
}

fn clip_to_ball(mut e: Array1<f64>, radius: f64) -> Array1<f64> {
    let mut e_norm = norm(e.view());
    if e_norm > radius {
        e *= radius / e_norm;
        e_norm = norm(e.view());
        while e_norm > radius {
            e *= 1.0 - 2.0 * f64::EPSILON;
            e_norm = norm(e.view());
        }
    }
    e
}

/// `(sum_i |x_{i+1} - x_i|, subgradient)` with the zero selection at ties.
pub fn phi_total_variation_1d(x: ArrayView1<f64>) -> Result<(f64, Array1<f64>)> {
    if x.len() < 2 {
        return Err(Error::invalid("total variation needs n >= 2"));
    }
    Ok((TotalVariation1d.value(x), TotalVariation1d.subgradient(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn all_strategies() -> Vec<PerturbStrategy> {
        vec![
            PerturbStrategy::Zero,
            PerturbStrategy::RandomBall { seed: 5, fill: 0.7 },
            PerturbStrategy::Saturating {
                fill: 1.0,
                direction_seed: 11,
            },
            PerturbStrategy::directed_tv(1.0),
            PerturbStrategy::directed_sqnorm(0.5),
        ]
    }

    #[test]
    fn empty_budget_gives_zero() {
        let p = array![1.0, -2.0, 0.5];
        for s in all_strategies() {
            assert_eq!(s.make_perturbation(p.view(), 0.0, 3), Array1::<f64>::zeros(3));
        }
    }

    #[test]
    fn saturating_hits_the_budget() {
        let s = PerturbStrategy::Saturating {
            fill: 1.0,
            direction_seed: 3,
        };
        let e = s.make_perturbation(array![0.0, 0.0, 0.0, 0.0].view(), 0.3, 7);
        let n = norm(e.view());
        assert!((0.3 - 4.0 * f64::EPSILON * 0.3..=0.3).contains(&n), "{n}");
    }

    #[test]
    fn directed_sqnorm_example() {
        let s = PerturbStrategy::directed_sqnorm(1.0);
        let p = array![1.0, 0.0];
        let e = s.make_perturbation(p.view(), 0.1, 2);
        assert!((e[0] + 0.1).abs() < 1e-16 && e[1] == 0.0);
        let x = &p + &e;
        assert!((SquaredNorm.value(x.view()) - 0.81).abs() < 1e-15);
    }

    #[test]
    fn directed_with_flat_phi_is_zero() {
        let s = PerturbStrategy::directed_tv(1.0);
        let e = s.make_perturbation(array![2.0, 2.0, 2.0].view(), 0.5, 4);
        assert_eq!(e, Array1::<f64>::zeros(3));
    }

    #[test]
    fn perturbations_are_deterministic() {
        let p = array![0.3, 0.1, -0.4, 2.0];
        for s in all_strategies() {
            let a = s.make_perturbation(p.view(), 0.25, 17);
            let b = s.make_perturbation(p.view(), 0.25, 17);
            assert_eq!(a, b);
        }
        let r = PerturbStrategy::RandomBall { seed: 5, fill: 1.0 };
        assert_ne!(r.make_perturbation(p.view(), 1.0, 2), r.make_perturbation(p.view(), 1.0, 3));
    }

    #[test]
    fn run_seed_zero_is_identity() {
        let s = PerturbStrategy::RandomBall { seed: 5, fill: 1.0 };
        assert_eq!(s.with_run_seed(0).describe(), s.describe());
        assert_ne!(s.with_run_seed(1).describe(), s.describe());
    }

    #[test]
    fn fill_is_validated() {
        assert!(PerturbStrategy::RandomBall { seed: 0, fill: 0.0 }.validate().is_err());
        assert!(PerturbStrategy::directed_tv(1.5).validate().is_err());
        assert!(PerturbStrategy::Zero.validate().is_ok());
    }

    #[test]
    fn total_variation_examples() {
        let (v, s) = phi_total_variation_1d(array![3.0, 3.0, 3.0].view()).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(s, Array1::<f64>::zeros(3));
        let (v, _) = phi_total_variation_1d(array![0.0, 1.0, 0.0].view()).unwrap();
        assert_eq!(v, 2.0);
        assert!(phi_total_variation_1d(array![1.0].view()).is_err());
    }
}
