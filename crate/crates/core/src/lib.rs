//! Reflectionless potentials of the Schrödinger equation: N-soliton tau
//! functions, their deformations, and numerical cross-checks.
//!
//! Indices are zero-based throughout the library.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod identities;
pub mod jet;
pub mod numerics;
pub mod real;
pub mod soliton;
pub mod transforms;

pub use error::{Error, Result};
pub use jet::{Jet, JetOf, ScaledJet, ScaledJetOf};
pub use real::{DoubleDouble, Real};
pub use soliton::{CoefficientRule, Grid, SolitonConfig};
