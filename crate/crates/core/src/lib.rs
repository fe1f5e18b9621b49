//! Pseudospectral solver for `u_t = i Δu + i λ |u|^p u` on a periodic box,
//! built around a frequency-localized Lie splitting, together with the
//! experiment harness used to measure its convergence and stability.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod flows;
pub mod grid;
pub mod oracles;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use flows::{CutoffProfile, EquationParams};
pub use grid::{Field, Grid, Space};
pub use oracles::InitialDataSpec;
pub use schemes::{run_scheme, SchemeConfig, SchemeKind, Trajectory};
