//! Time-stepping drivers.
//!
//! One step of each scheme, reading compositions right to left:
//!
//! | scheme         | step                        | initial state |
//! |----------------|-----------------------------|---------------|
//! | `modified_lie` | `S(tau) ∘ Π_tau ∘ N(tau)`   | `Π_tau φ`     |
//! | `lie`          | `S(tau) ∘ N(tau)`           | `φ`           |
//! | `strang`       | `S(tau/2) ∘ N(tau) ∘ S(tau/2)` | `φ`        |

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{
    apply_nonlinear, cutoff_table, localized_flow, nonlinear_increment, projector, propagator_table, CutoffProfile,
    EquationParams,
};
use crate::grid::{Field, Grid, Space};
use crate::spectral::l2_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    ModifiedLie,
    Lie,
    Strang,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::ModifiedLie => "modified_lie",
            SchemeKind::Lie => "lie",
            SchemeKind::Strang => "strang",
        }
    }

    /// Whether the scheme conserves the L² norm exactly (up to roundoff).
    pub fn is_unitary(self) -> bool {
        !matches!(self, SchemeKind::ModifiedLie)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified_lie" => Ok(SchemeKind::ModifiedLie),
            "lie" => Ok(SchemeKind::Lie),
            "strang" => Ok(SchemeKind::Strang),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub params: EquationParams,
    pub scheme: SchemeKind,
    pub tau: f64,
    pub horizon: f64,
    /// Only consulted by `modified_lie`.
    pub profile: CutoffProfile,
    pub record_every: usize,
}

impl SchemeConfig {
    pub fn new(params: EquationParams, scheme: SchemeKind, tau: f64, horizon: f64) -> Result<Self> {
        let config = SchemeConfig { params, scheme, tau, horizon, profile: CutoffProfile::Smooth, record_every: 1 };
        config.validate()?;
        Ok(config)
    }

    pub fn with_profile(mut self, profile: CutoffProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps() < 1 {
            return Err(Error::Config(format!("tau = {} exceeds the horizon {}", self.tau, self.horizon)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of full steps, `floor(T / tau)`. A relative slack of 1e-12
    /// absorbs representation error in ratios such as `1 / 0.001`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.tau * (1.0 + 1e-12)).floor() as usize
    }
}

/// Precomputed multipliers for repeated steps of one scheme.
pub struct Stepper {
    kind: SchemeKind,
    params: EquationParams,
    tau: f64,
    profile: CutoffProfile,
    linear: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: &Grid, config: &SchemeConfig) -> Result<Stepper> {
        config.validate()?;
        let tau = config.tau;
        let linear = match config.scheme {
            SchemeKind::ModifiedLie => {
                let cut = cutoff_table(grid, tau, config.profile);
                propagator_table(grid, tau).into_iter().zip(cut).map(|(s, c)| s * c).collect()
            }
            SchemeKind::Lie => propagator_table(grid, tau),
            SchemeKind::Strang => propagator_table(grid, 0.5 * tau),
        };
        Ok(Stepper { kind: config.scheme, params: config.params, tau, profile: config.profile, linear })
    }

    /// The scheme's state at `n = 0`, in physical space.
    pub fn initialize(&self, phi: &Field) -> Result<Field> {
        let state = match self.kind {
            SchemeKind::ModifiedLie => projector(phi, self.tau, self.profile)?,
            _ => phi.clone(),
        };
        Ok(state.in_space(Space::Physical))
    }

    fn apply_linear(&self, state: &mut Field) {
        state.set_space(Space::Spectral);
        for (v, m) in state.values_mut().iter_mut().zip(&self.linear) {
            *v *= m;
        }
        state.set_space(Space::Physical);
    }

    /// Advances a physical-space state by one step.
    pub fn advance(&self, state: &mut Field) {
        debug_assert_eq!(state.space(), Space::Physical);
        match self.kind {
            SchemeKind::ModifiedLie | SchemeKind::Lie => {
                apply_nonlinear(state.values_mut(), self.tau, &self.params);
                self.apply_linear(state);
            }
            SchemeKind::Strang => {
                self.apply_linear(state);
                apply_nonlinear(state.values_mut(), self.tau, &self.params);
                self.apply_linear(state);
            }
        }
    }
}

/// Applies one step of the configured scheme to `state`.
pub fn scheme_step(state: &Field, config: &SchemeConfig) -> Result<Field> {
    state.require(Space::Physical)?;
    let stepper = Stepper::new(state.grid(), config)?;
    let mut next = state.clone();
    stepper.advance(&mut next);
    Ok(next)
}

/// Sampled output of a scheme run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub config: SchemeConfig,
    /// L² norm after every step (index 0 is the initial state), regardless
    /// of `record_every`.
    pub step_norms: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Time between stored samples.
    pub fn sample_spacing(&self) -> f64 {
        self.config.tau * self.config.record_every as f64
    }

    pub fn final_state(&self) -> Option<&Field> {
        self.states.last()
    }
}

/// Largest single-step growth of the L² norm (negative if strictly
/// decreasing).
pub fn max_norm_increase(norms: &[f64]) -> f64 {
    norms.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest `|‖u_n‖ - ‖u_0‖| / ‖u_0‖` over the run.
pub fn relative_norm_drift(norms: &[f64]) -> f64 {
    let Some(&first) = norms.first() else {
        return 0.0;
    };
    if first == 0.0 {
        return norms.iter().copied().fold(0.0, f64::max);
    }
    norms.iter().map(|n| (n - first).abs() / first).fold(0.0, f64::max)
}

/// Steps the scheme from `phi` for `config.steps()` steps, calling
/// `observe(n, state)` on the initial state and after every step. Returns
/// the L² norm after every step.
pub fn run_scheme_with<F>(phi: &Field, config: &SchemeConfig, mut observe: F) -> Result<Vec<f64>>
where
    F: FnMut(usize, &Field),
{
    phi.require(Space::Physical)?;
    let stepper = Stepper::new(phi.grid(), config)?;
    let mut state = stepper.initialize(phi)?;
    let steps = config.steps();
    let mut norms = Vec::with_capacity(steps + 1);
    norms.push(l2_norm(&state));
    observe(0, &state);
    for n in 1..=steps {
        stepper.advance(&mut state);
        if !state.is_finite() {
            return Err(Error::BlowUp { step: n, last_finite_time: (n - 1) as f64 * config.tau });
        }
        norms.push(l2_norm(&state));
        observe(n, &state);
    }
    Ok(norms)
}

pub fn run_scheme(phi: &Field, config: &SchemeConfig) -> Result<Trajectory> {
    let every = config.record_every;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let step_norms = run_scheme_with(phi, config, |n, state| {
        if n % every == 0 {
            times.push(n as f64 * config.tau);
            states.push(state.clone());
        }
    })?;
    Ok(Trajectory { times, states, config: *config, step_norms })
}

/// Result of evaluating the discrete Duhamel sum.
#[derive(Debug, Clone)]
pub struct DuhamelCheck {
    /// `S_tau(n tau) φ + tau Σ_{k<n} S_tau((n-k) tau) (N(tau)-I)/tau Z_k`.
    pub field: Field,
    /// Relative L² distance to the product form `Z_n`.
    pub deviation: f64,
}

/// Evaluates the discrete Duhamel representation of the modified Lie
/// scheme at step `n`, using the iterates `Z_k` of the product form.
pub fn duhamel_form(phi: &Field, n: usize, config: &SchemeConfig) -> Result<DuhamelCheck> {
    if config.scheme != SchemeKind::ModifiedLie {
        return Err(Error::Config("the Duhamel form is defined for modified_lie only".into()));
    }
    phi.require(Space::Physical)?;
    let stepper = Stepper::new(phi.grid(), config)?;
    let tau = config.tau;
    let profile = config.profile;
    let mut iterate = stepper.initialize(phi)?;
    if n == 0 {
        return Ok(DuhamelCheck { field: iterate, deviation: 0.0 });
    }

    let mut sum = localized_flow(phi, n as f64 * tau, tau, profile)?.in_space(Space::Spectral);
    for k in 0..n {
        let forcing = nonlinear_increment(&iterate, tau, &config.params)?;
        let term = localized_flow(&forcing, (n - k) as f64 * tau, tau, profile)?;
        sum.add_scaled(Complex64::new(tau, 0.0), &term.in_space(Space::Spectral))?;
        stepper.advance(&mut iterate);
    }
    let field = sum.in_space(Space::Physical);
    let scale = l2_norm(&iterate);
    let gap = l2_norm(&field.difference(&iterate)?);
    let deviation = if scale > 0.0 { gap / scale } else { gap };
    Ok(DuhamelCheck { field, deviation })
}
