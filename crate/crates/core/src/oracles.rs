//! Initial data, closed-form solutions, the fine-step reference solver and
//! the conserved functionals.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::EquationParams;
use crate::grid::{Field, Grid, Space, MAX_DIM};
use crate::schemes::{run_scheme, SchemeConfig, SchemeKind, Trajectory};
use crate::spectral::{gradient, l2_norm, lp_norm, sobolev_norm};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    /// `amplitude * exp(-|x|^2 / width^2)`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// `sqrt(2) sech(x)`, the standing wave of the focusing cubic equation
    /// in one dimension.
    Soliton,
    /// `amplitude * exp(i k·x)` with `k_a = 2 pi modes[a] / L_a`.
    PlaneWave {
        #[serde(default = "one")]
        amplitude: f64,
        modes: Vec<i64>,
    },
    /// Random-phase series with coefficients `(1 + |k|)^(-decay_exponent)`,
    /// rescaled so that `||φ||_{H^1} = amplitude`. Lies in `H^s` exactly
    /// for `s < decay_exponent - d/2`.
    Rough {
        #[serde(default = "one")]
        amplitude: f64,
        decay_exponent: f64,
        seed: u64,
    },
}

impl InitialDataSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InitialDataSpec::Gaussian { .. } => "gaussian",
            InitialDataSpec::Soliton => "soliton",
            InitialDataSpec::PlaneWave { .. } => "plane_wave",
            InitialDataSpec::Rough { .. } => "rough",
        }
    }

    /// Default rough exponent placing data in `H^s` but in no `H^{s+0.1}`.
    pub fn rough_exponent_for(s: f64, d: usize) -> f64 {
        s + d as f64 / 2.0 + 0.05
    }

    pub fn validate(&self, grid: &Grid, params: &EquationParams) -> Result<()> {
        let d = grid.dim();
        if params.d() != d {
            return Err(Error::Config(format!("equation dimension {} does not match grid dimension {d}", params.d())));
        }
        match self {
            InitialDataSpec::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !(width.is_finite() && *width > 0.0) {
                    return Err(Error::Config("gaussian needs finite amplitude and positive width".into()));
                }
            }
            InitialDataSpec::Soliton => {
                if d != 1 || params.p() != 2.0 || params.lambda() != 1.0 {
                    return Err(Error::Config("soliton data requires d = 1, p = 2, lambda = +1".into()));
                }
            }
            InitialDataSpec::PlaneWave { amplitude, modes } => {
                if !amplitude.is_finite() {
                    return Err(Error::Config("plane wave amplitude must be finite".into()));
                }
                if grid.mode_index(modes).is_none() {
                    return Err(Error::Config(format!("plane wave modes {modes:?} are not representable on the grid")));
                }
            }
            InitialDataSpec::Rough { amplitude, decay_exponent, .. } => {
                if !amplitude.is_finite() {
                    return Err(Error::Config("rough amplitude must be finite".into()));
                }
                if !(*decay_exponent > d as f64 / 2.0) {
                    return Err(Error::Config(format!(
                        "rough data needs decay_exponent > d/2 = {}, got {decay_exponent}",
                        d as f64 / 2.0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// SplitMix64 finaliser; the counter-based generator behind rough phases.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform phase in `[0, 2 pi)` keyed by `(seed, mode)`.
pub fn mode_phase(seed: u64, modes: &[i64]) -> f64 {
    let mut h = splitmix64(seed);
    for &m in modes {
        h = splitmix64(h ^ m as u64);
    }
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 * PI
}

/// Builds the physical field `Σ_k c(k) e^{i k·x}` from series coefficients.
/// `coefficient` receives the signed modes and the wavevector.
pub fn field_from_series<F>(grid: &Arc<Grid>, mut coefficient: F) -> Field
where
    F: FnMut(&[i64], &[f64]) -> Complex64,
{
    let d = grid.dim();
    let root_n = (grid.len() as f64).sqrt();
    let mut m = [0i64; MAX_DIM];
    let mut k = [0.0; MAX_DIM];
    let values = (0..grid.len())
        .map(|flat| {
            grid.mode(flat, &mut m);
            grid.wavevector(flat, &mut k);
            // Nodes start at -L/2, which contributes exp(-i pi m) per axis.
            let parity = m[..d].iter().sum::<i64>().rem_euclid(2);
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            coefficient(&m[..d], &k[..d]) * (sign * root_n)
        })
        .collect();
    Field::from_values(grid, values, Space::Spectral).expect("length matches grid").in_space(Space::Physical)
}

/// The unnormalised rough series `Σ e^{iθ_k} (1+|k|)^(-alpha) e^{ikx}`.
pub fn rough_series(grid: &Arc<Grid>, decay_exponent: f64, seed: u64) -> Field {
    field_from_series(grid, |modes, k| {
        let kk = k.iter().map(|x| x * x).sum::<f64>().sqrt();
        Complex64::from_polar((1.0 + kk).powf(-decay_exponent), mode_phase(seed, modes))
    })
}

fn plane_wave_wavevector(grid: &Grid, modes: &[i64]) -> Vec<f64> {
    modes.iter().zip(grid.box_length()).map(|(&m, &l)| 2.0 * PI * m as f64 / l).collect()
}

pub fn make_initial_data(spec: &InitialDataSpec, grid: &Arc<Grid>, params: &EquationParams) -> Result<Field> {
    spec.validate(grid, params)?;
    let field = match spec {
        InitialDataSpec::Gaussian { amplitude, width } => {
            let (a, w2) = (*amplitude, width * width);
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Complex64::new(a * (-r2 / w2).exp(), 0.0)
            })
        }
        InitialDataSpec::Soliton => Field::from_fn(grid, |x| Complex64::new(SQRT_2 / x[0].cosh(), 0.0)),
        InitialDataSpec::PlaneWave { amplitude, modes } => {
            let k = plane_wave_wavevector(grid, modes);
            Field::from_fn(grid, |x| {
                let phase: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
                Complex64::from_polar(*amplitude, phase)
            })
        }
        InitialDataSpec::Rough { amplitude, decay_exponent, seed } => {
            let mut field = rough_series(grid, *decay_exponent, *seed);
            let h1 = sobolev_norm(&field, 1.0)?;
            field.scale(Complex64::new(amplitude / h1, 0.0));
            field
        }
    };
    Ok(field)
}

/// Closed-form solutions for plane-wave and soliton data.
pub fn analytic_solution(spec: &InitialDataSpec, t: f64, grid: &Arc<Grid>, params: &EquationParams) -> Result<Field> {
    spec.validate(grid, params)?;
    match spec {
        InitialDataSpec::PlaneWave { amplitude, modes } => {
            let k = plane_wave_wavevector(grid, modes);
            let k2: f64 = k.iter().map(|v| v * v).sum();
            let omega = params.lambda() * amplitude.abs().powf(params.p()) - k2;
            Ok(Field::from_fn(grid, |x| {
                let phase: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
                Complex64::from_polar(*amplitude, phase + omega * t)
            }))
        }
        InitialDataSpec::Soliton => Ok(Field::from_fn(grid, |x| Complex64::from_polar(SQRT_2 / x[0].cosh(), t))),
        other => Err(Error::Config(format!("no closed-form solution for {} data", other.name()))),
    }
}

/// Fine-step Strang reference recorded at multiples of `sample_interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub tau_ref: f64,
    pub sample_interval: f64,
}

impl ReferenceConfig {
    /// Default fine step `sample_interval / 32`.
    pub fn for_interval(sample_interval: f64) -> Self {
        ReferenceConfig { tau_ref: sample_interval / 32.0, sample_interval }
    }

    /// Number of fine steps per recorded sample.
    pub fn ratio(&self) -> Result<usize> {
        if !(self.tau_ref > 0.0 && self.sample_interval > 0.0) {
            return Err(Error::Config("reference steps must be positive".into()));
        }
        let ratio = self.sample_interval / self.tau_ref;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
            return Err(Error::Config(format!(
                "tau_ref = {} does not divide the sample interval {}",
                self.tau_ref, self.sample_interval
            )));
        }
        Ok(rounded as usize)
    }
}

pub fn reference_solve(
    phi: &Field,
    horizon: f64,
    reference: &ReferenceConfig,
    params: &EquationParams,
) -> Result<Trajectory> {
    let ratio = reference.ratio()?;
    let config = SchemeConfig::new(*params, SchemeKind::Strang, reference.tau_ref, horizon)?.with_record_every(ratio);
    run_scheme(phi, &config)
}

/// Largest L² change over the recorded samples when `tau_ref` is halved.
pub fn reference_self_consistency(
    phi: &Field,
    horizon: f64,
    reference: &ReferenceConfig,
    params: &EquationParams,
) -> Result<f64> {
    let coarse = reference_solve(phi, horizon, reference, params)?;
    let finer = ReferenceConfig { tau_ref: 0.5 * reference.tau_ref, ..*reference };
    let fine = reference_solve(phi, horizon, &finer, params)?;
    let mut worst: f64 = 0.0;
    for (a, b) in coarse.states.iter().zip(&fine.states) {
        worst = worst.max(l2_norm(&a.difference(b)?));
    }
    Ok(worst)
}

/// `||f||_2^2`.
pub fn mass(f: &Field) -> f64 {
    l2_norm(f).powi(2)
}

/// `½ ||∇f||_2^2 - λ/(p+2) ||f||_{p+2}^{p+2}`.
pub fn energy(f: &Field, params: &EquationParams) -> Result<f64> {
    let physical = f.to_space(Space::Physical);
    let kinetic: f64 = gradient(&physical).iter().map(|g| l2_norm(g).powi(2)).sum();
    let r = params.p() + 2.0;
    let potential = lp_norm(&physical, r)?.powf(r);
    Ok(0.5 * kinetic - params.lambda() / r * potential)
}

/// Uniform random complex nodes in the unit square, optionally truncated
/// to `|k| <= band` in spectral space.
pub fn random_field(grid: &Arc<Grid>, seed: u64, band: Option<f64>) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let field = Field::from_values(grid, values, Space::Physical).expect("length matches grid");
    match band {
        None => field,
        Some(limit) => {
            let mut hat = field.in_space(Space::Spectral);
            let limit2 = limit * limit;
            for (v, &k2) in hat.values_mut().iter_mut().zip(grid.k_squared()) {
                if k2 > limit2 {
                    *v = Complex64::default();
                }
            }
            hat.in_space(Space::Physical)
        }
    }
}
