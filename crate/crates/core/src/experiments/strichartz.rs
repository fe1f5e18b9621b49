//! Admissible exponent pairs and time-discrete mixed norms
//! `(tau Σ_n ||u(n tau)||_{L^r}^q)^(1/q)`.

use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::EquationParams;
use crate::grid::Space;
use crate::schemes::Trajectory;
use crate::spectral::{lp_norm, w1r_norm};

/// `(q, r)` with `q = f64::INFINITY` allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissiblePair {
    pub q: f64,
    pub r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64, r: f64) -> Self {
        AdmissiblePair { q, r }
    }

    /// The energy pair `(inf, 2)`, admissible in every dimension.
    pub fn energy() -> Self {
        AdmissiblePair { q: f64::INFINITY, r: 2.0 }
    }

    /// `2/q + d/r = d/2` with `q, r ∈ [2, inf]` and `(q, r, d) != (2, inf, 2)`.
    pub fn is_admissible(&self, d: usize) -> bool {
        let in_range = |x: f64| x >= 2.0 && !x.is_nan();
        if !in_range(self.q) || !in_range(self.r) {
            return false;
        }
        if d == 2 && self.q == 2.0 && self.r.is_infinite() {
            return false;
        }
        let lhs = 2.0 / self.q + d as f64 / self.r;
        (lhs - d as f64 / 2.0).abs() <= 1e-12 * d as f64
    }
}

impl fmt::Display for AdmissiblePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |x: f64| {
            if x.is_infinite() {
                "inf".to_string()
            } else {
                format!("{x}")
            }
        };
        write!(f, "q={},r={}", show(self.q), show(self.r))
    }
}

/// `(q0, r0) = (4(p+2)/(dp), p+2)`. The admissibility identity is verified
/// in exact rational arithmetic on the binary value of `p`.
pub fn admissible_q0r0(params: &EquationParams) -> Result<AdmissiblePair> {
    let p = BigRational::from_float(params.p())
        .ok_or_else(|| Error::Domain(format!("p = {} is not finite", params.p())))?;
    let d = BigRational::from_integer(params.d().into());
    let two = BigRational::from_integer(2.into());
    let four = BigRational::from_integer(4.into());
    let r0 = &p + &two;
    let q0 = &four * &r0 / (&d * &p);
    let identity = &two / &q0 + &d / &r0;
    if identity != &d / &two {
        return Err(Error::Domain("admissibility identity failed for (q0, r0)".into()));
    }
    let p = params.p();
    Ok(AdmissiblePair { q: 4.0 * (p + 2.0) / (params.d() as f64 * p), r: p + 2.0 })
}

/// Which spatial norm is placed inside the time sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialNorm {
    Lr,
    W1r,
}

/// `(dt Σ_n a_n^q)^(1/q)`, or `max_n a_n` for `q = inf`.
pub fn time_lq_norm(samples: &[f64], dt: f64, q: f64) -> f64 {
    let peak = samples.iter().copied().fold(0.0, f64::max);
    if q.is_infinite() || peak == 0.0 {
        return peak;
    }
    let sum: f64 = samples.iter().map(|a| (a / peak).powf(q)).sum();
    peak * (dt * sum).powf(1.0 / q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteNorm {
    pub value: f64,
    /// False when the pair is not admissible for the trajectory's dimension;
    /// the value is still computed.
    pub admissible: bool,
}

pub fn discrete_strichartz_norm(
    trajectory: &Trajectory,
    pair: AdmissiblePair,
    weight: SpatialNorm,
) -> Result<DiscreteNorm> {
    let first = trajectory.states.first().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let d = first.grid().dim();
    let mut samples = Vec::with_capacity(trajectory.len());
    for state in &trajectory.states {
        let state = state.to_space(Space::Physical);
        samples.push(match weight {
            SpatialNorm::Lr => lp_norm(&state, pair.r)?,
            SpatialNorm::W1r => w1r_norm(&state, pair.r)?,
        });
    }
    Ok(DiscreteNorm {
        value: time_lq_norm(&samples, trajectory.sample_spacing(), pair.q),
        admissible: pair.is_admissible(d),
    })
}
