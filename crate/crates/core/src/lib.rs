//! Value computation and certification for escape rate games.
//!
//! Two players alternately pick actions `a ∈ A` (Min) and `b ∈ B` (Max),
//! moving the state by a nonexpansive map `x ↦ T_ab(x)`. Max is paid the
//! escape rate `limsup d(x_k, x₀) / k`. The value of the game generalizes
//! the joint spectral radius of a set of matrices.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod dynamics;
pub mod error;
pub mod hemimetric;
pub mod horizon;
pub mod linalg;
pub mod mmg;
mod search;
pub mod simplex_iter;
pub mod strategies;
pub mod vecadd;

pub use certificates::{certify, verify_certificate, Bracket, Certificate, Direction};
pub use dynamics::{GameInstance, MapFamily, MapKind, Role};
pub use error::{Error, Result};
pub use hemimetric::{MetricKind, MetricSpace, Norm, Point};
pub use linalg::{Matrix, MatrixNorm};
pub use simplex_iter::{make_grid, value_iterate, Grid, GridFunction};
pub use strategies::{simulate, PlayTrace, Strategy, StrategyKind, ValueFunction};
