//! Accelerated proximal gradient (FISTA) for `F = f + g` with certified
//! per-iteration error budgets.
//!
//! Each iterate is `x_k = p_{L_k}(y_k) + e_k` where `p` is the exact
//! forward-backward step and `e_k` is any vector inside a budget computed from
//! the run's own quantities. Within those budgets the classical `O(1/k^2)`-type
//! bound on `F(x_k) - F(x_ref)` still holds, which makes room for modelled
//! numerical error or deliberate steering of the iterates toward a secondary
//! objective.

// `!(x >= a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod budget;
pub mod cli;
pub mod error;
pub mod perturb;
pub mod problem;
pub mod schedule;
pub mod solver;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
