use thiserror::Error;

use crate::grid::Space;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field is in {found:?} space, expected {expected:?}")]
    WrongSpace { expected: Space, found: Space },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A state became non-finite; `last_finite_time` is the last sample time
    /// at which every node was finite.
    #[error("non-finite state after step {step}; last finite time {last_finite_time}")]
    BlowUp { step: usize, last_finite_time: f64 },
}
