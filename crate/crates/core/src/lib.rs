//! Hybrid Liouvillian dynamics of a dissipative qubit with tunable detector
//! efficiency `q`.
//!
//! The generator interpolates between Lindblad evolution (`q = 1`) and
//! post-selected no-jump evolution (`q = 0`):
//!
//! ```text
//! d rho / dt = -i [H, rho] + 2 gamma ( q L rho L^+ - 1/2 {L^+ L, rho} )
//! H = -(J/2)(sin(theta) sx + cos(theta) sz),   L = |up><down|
//! ```
//!
//! On top of the propagators the crate provides Leggett-Garg correlators and
//! the `K3` landscape ([`lgi`]), the Liouvillian spectrum and exceptional-point
//! locus ([`spectrum`]), the reduced closed-form Bloch solution ([`blochsol`]),
//! no-signalling-in-time / arrow-of-time diagnostics ([`macrorealism`]) and the
//! tanh-in-`log q` landscape fit ([`fit`]).

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod blochsol;
pub mod dynamics;
mod error;
pub mod fit;
pub mod lgi;
pub mod macrorealism;
pub mod model;
pub mod numerics;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{BlochState, DensityMatrix, ModelParams};
pub use num_complex::Complex64 as C64;
