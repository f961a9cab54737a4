//! Affine immersions, their induced quasi-Codazzi structures, and numerical
//! certificates for the identities relating them.
//!
//! Everything is computed in truncated-jet arithmetic ([`jets`]): an immersion
//! `f` with transversal field `ξ` is evaluated as jets at a point, the frame
//! `[∂₁f … ∂ₙf | ξ]` is inverted in the jet ring, and the induced connection,
//! second fundamental form, shape operator and transversal form come out with
//! their own derivatives. Identities are then reported as residuals over a
//! sample grid ([`report::ResidualReport`]).

// NaN-rejecting `!(a < b)` checks and index loops over tensor slots are intended
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod expr;
pub mod grid;
pub mod immersion;
pub mod jets;
pub mod linalg;
pub mod projective;
pub mod quasi_codazzi;
pub mod report;
pub mod tensor;
pub mod tolerances;

pub use error::{Error, Result};
