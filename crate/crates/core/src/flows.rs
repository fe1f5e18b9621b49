//! The elementary flows the splitting schemes are built from.
//!
//! * [`nonlinear_flow`]: `v -> exp(i t lambda |v|^p) v`, node by node.
//! * [`linear_flow`]: the free Schrödinger group, multiplier `exp(-i t |k|^2)`.
//! * [`projector`]: frequency cutoff, multiplier `chi(sqrt(tau) k)`.
//! * [`localized_flow`]: the linear flow applied after the cutoff.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space, MAX_DIM};

/// Exponent, sign and dimension of `u_t = i Δu + i λ |u|^p u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquationParams {
    d: usize,
    p: f64,
    lambda: f64,
}

impl EquationParams {
    pub fn new(d: usize, p: f64, lambda: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::Config(format!("d must be 1, 2 or 3, got {d}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Config(format!("p must be positive, got {p}")));
        }
        if let Some(limit) = Self::critical_exponent(d) {
            if p >= limit {
                return Err(Error::Config(format!("p must satisfy p < {limit} when d = {d}, got {p}")));
            }
        }
        if lambda != 1.0 && lambda != -1.0 {
            return Err(Error::Config(format!("lambda must be -1 or +1, got {lambda}")));
        }
        Ok(EquationParams { d, p, lambda })
    }

    /// Upper end of the energy-subcritical range; `None` means unbounded.
    pub fn critical_exponent(d: usize) -> Option<f64> {
        (d == 3).then_some(4.0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_focusing(&self) -> bool {
        self.lambda > 0.0
    }
}

/// Radial cutoff `chi`: equal to 1 on the closed unit ball, 0 outside the
/// ball of radius 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    /// `g(2-r) / (g(2-r) + g(r-1))` with `g(t) = exp(-1/t)` for `t > 0`.
    Smooth,
    /// Indicator of the closed unit ball.
    Sharp,
}

impl CutoffProfile {
    /// Value at radius `rho = |xi|`.
    pub fn radial(self, rho: f64) -> f64 {
        match self {
            CutoffProfile::Sharp => {
                if rho <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffProfile::Smooth => {
                if rho <= 1.0 {
                    return 1.0;
                }
                if rho >= 2.0 {
                    return 0.0;
                }
                let inner = bump(2.0 - rho);
                inner / (inner + bump(rho - 1.0))
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CutoffProfile::Smooth => "smooth",
            CutoffProfile::Sharp => "sharp",
        }
    }
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl fmt::Display for CutoffProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CutoffProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(CutoffProfile::Smooth),
            "sharp" => Ok(CutoffProfile::Sharp),
            other => Err(Error::Config(format!("unknown cutoff profile {other:?}"))),
        }
    }
}

pub fn cutoff_eval(profile: CutoffProfile, xi: &[f64]) -> f64 {
    profile.radial(xi.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// `e^{i theta} - 1` without cancellation for small `theta`.
#[inline]
pub(crate) fn expm1_i(theta: f64) -> Complex64 {
    let half = 0.5 * theta;
    let s = half.sin();
    Complex64::new(-2.0 * s * s, theta.sin())
}

#[inline]
pub(crate) fn modulus_power(v: Complex64, p: f64) -> f64 {
    let r = v.norm();
    if r == 0.0 {
        0.0
    } else {
        r.powf(p)
    }
}

pub(crate) fn apply_nonlinear(values: &mut [Complex64], t: f64, params: &EquationParams) {
    let scale = t * params.lambda;
    for v in values.iter_mut() {
        let phase = scale * modulus_power(*v, params.p);
        *v *= Complex64::cis(phase);
    }
}

pub fn nonlinear_flow(f: &Field, t: f64, params: &EquationParams) -> Result<Field> {
    f.require(Space::Physical)?;
    let mut out = f.clone();
    apply_nonlinear(out.values_mut(), t, params);
    Ok(out)
}

/// `(N(tau) - I) / tau` applied node-wise to a physical field.
pub fn nonlinear_increment(f: &Field, tau: f64, params: &EquationParams) -> Result<Field> {
    f.require(Space::Physical)?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let mut out = f.clone();
    for v in out.values_mut() {
        *v = increment_value(*v, tau, params.p, params.lambda);
    }
    Ok(out)
}

/// Scalar `(exp(i tau lambda |v|^p) - 1) v / tau`.
#[inline]
pub fn increment_value(v: Complex64, tau: f64, p: f64, lambda: f64) -> Complex64 {
    v * expm1_i(tau * lambda * modulus_power(v, p)) / tau
}

/// Free Schrödinger multiplier `exp(-i t |k|^2)` for every spectral index.
pub fn propagator_table(grid: &Grid, t: f64) -> Vec<Complex64> {
    grid.k_squared().iter().map(|&k2| Complex64::cis(-t * k2)).collect()
}

/// `chi(sqrt(tau) k)` for every spectral index.
pub fn cutoff_table(grid: &Grid, tau: f64, profile: CutoffProfile) -> Vec<f64> {
    grid.k_squared().iter().map(|&k2| profile.radial((tau * k2).sqrt())).collect()
}

/// Multiplies a field by a spectral multiplier and returns it in its
/// original space.
fn apply_multiplier<M, F>(f: &Field, table: &[M], mul: F) -> Field
where
    F: Fn(Complex64, &M) -> Complex64,
{
    let space = f.space();
    let mut hat = f.to_space(Space::Spectral);
    for (v, m) in hat.values_mut().iter_mut().zip(table) {
        *v = mul(*v, m);
    }
    hat.in_space(space)
}

pub fn linear_flow(f: &Field, t: f64) -> Field {
    let table = propagator_table(f.grid(), t);
    apply_multiplier(f, &table, |v, m| v * m)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must be positive, got {tau}")))
    }
}

pub fn projector(f: &Field, tau: f64, profile: CutoffProfile) -> Result<Field> {
    check_tau(tau)?;
    let table = cutoff_table(f.grid(), tau, profile);
    Ok(apply_multiplier(f, &table, |v, &m| v * m))
}

/// True when no grid mode reaches the outer cutoff radius, i.e. the largest
/// wavenumber is below `2 / sqrt(tau)`.
pub fn cutoff_inactive(grid: &Grid, tau: f64) -> bool {
    grid.max_wavenumber() < 2.0 / tau.sqrt()
}

pub fn localized_flow(f: &Field, t: f64, tau: f64, profile: CutoffProfile) -> Result<Field> {
    Ok(linear_flow(&projector(f, tau, profile)?, t))
}
