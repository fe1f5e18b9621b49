//! Defect between the discrete forcing sum of the modified Lie scheme,
//! driven by the exact solution, and the continuous Duhamel integral.
//!
//! Factoring the common unimodular multiplier `exp(-i n tau |k|^2)` out of
//! both terms, the defect at step `n` is the spectral L² norm of
//!
//! ```text
//! chi(sqrt(tau) k) * ( V_n(k) - i lambda W(n tau, k) )
//! V_n = Σ_{j<n} exp(i j tau |k|^2) F[(N(tau) - I) Π_tau u(j tau)]
//! W(t) = ∫_0^t exp(i s |k|^2) F[|u|^p u](s) ds
//! ```
//!
//! `u` comes from a Strang run at half the quadrature panel, so that the
//! odd steps land on panel midpoints.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::ladder::LadderSpec;
use super::report::{ExperimentReport, ReportRow};
use crate::error::{Error, Result};
use crate::flows::{cutoff_table, expm1_i, modulus_power, CutoffProfile, EquationParams};
use crate::grid::{Field, Space};
use crate::schemes::{run_scheme_with, SchemeConfig, SchemeKind};
use crate::spectral::l2_norm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectOptions {
    /// Quadrature panel is `min(tau) / panels_per_step`.
    pub panels_per_step: usize,
    /// Bound on `max/min` of `D(tau) / sqrt(tau)` across the ladder.
    pub ratio_bound: f64,
    /// Rerun with half the panel and require every `D(tau)` to move by at
    /// most `richardson_tol` (relative).
    pub richardson: bool,
    pub richardson_tol: f64,
}

impl Default for DefectOptions {
    fn default() -> Self {
        DefectOptions { panels_per_step: 32, ratio_bound: 4.0, richardson: true, richardson_tol: 0.05 }
    }
}

/// Reference samples on the `min(tau)` grid: the state and the running
/// Duhamel integral, both spectral.
struct Samples {
    states: Vec<Field>,
    integrals: Vec<Vec<Complex64>>,
}

fn reference_samples(phi: &Field, ladder: &LadderSpec, params: &EquationParams, panels: usize) -> Result<Samples> {
    let grid = phi.grid().clone();
    let panel = ladder.tau_min() / panels as f64;
    let half = 0.5 * panel;
    let sample_every = 2 * panels;
    let samples = (ladder.horizon / ladder.tau_min() * (1.0 + 1e-12)).floor() as usize;
    let horizon = samples as f64 * ladder.tau_min();
    let config = SchemeConfig::new(*params, SchemeKind::Strang, half, horizon)?;
    if config.steps() < samples * sample_every {
        return Err(Error::Config("reference run shorter than the ladder".into()));
    }

    let p = params.p();
    let mut running = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut states = Vec::with_capacity(samples + 1);
    let mut integrals = Vec::with_capacity(samples + 1);
    let mut forcing = Field::zeros(&grid, Space::Physical);
    run_scheme_with(phi, &config, |n, state| {
        if n % 2 == 1 {
            let s = n as f64 * half;
            for (f, v) in forcing.values_mut().iter_mut().zip(state.values()) {
                *f = *v * modulus_power(*v, p);
            }
            forcing.set_space(Space::Spectral);
            for ((w, f), &k2) in running.iter_mut().zip(forcing.values()).zip(grid.k_squared()) {
                *w += panel * Complex64::cis(s * k2) * f;
            }
            forcing = Field::zeros(&grid, Space::Physical);
        }
        if n % sample_every == 0 && states.len() <= samples {
            states.push(state.to_space(Space::Spectral));
            integrals.push(running.clone());
        }
    })?;
    Ok(Samples { states, integrals })
}

/// `max_n D_n` for one step size.
fn defect_for(samples: &Samples, tau: f64, tau_min: f64, params: &EquationParams, profile: CutoffProfile) -> f64 {
    let grid = samples.states[0].grid().clone();
    let stride = (tau / tau_min).round() as usize;
    let steps = (samples.states.len() - 1) / stride;
    let chi = cutoff_table(&grid, tau, profile);
    let p = params.p();
    let lambda = params.lambda();
    let i_lambda = Complex64::new(0.0, lambda);

    let mut sum = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut scratch = Field::zeros(&grid, Space::Spectral);
    let mut worst: f64 = 0.0;
    for j in 0..steps {
        let state = &samples.states[j * stride];
        for ((s, v), c) in scratch.values_mut().iter_mut().zip(state.values()).zip(&chi) {
            *s = v * c;
        }
        scratch.set_space(Space::Physical);
        for v in scratch.values_mut() {
            *v *= expm1_i(tau * lambda * modulus_power(*v, p));
        }
        scratch.set_space(Space::Spectral);
        let t = j as f64 * tau;
        for ((acc, inc), &k2) in sum.iter_mut().zip(scratch.values()).zip(grid.k_squared()) {
            *acc += Complex64::cis(t * k2) * inc;
        }
        let integral = &samples.integrals[(j + 1) * stride];
        for (((s, acc), w), c) in scratch.values_mut().iter_mut().zip(&sum).zip(integral).zip(&chi) {
            *s = (acc - i_lambda * w) * c;
        }
        worst = worst.max(l2_norm(&scratch));
    }
    worst
}

fn defect_curve(
    phi: &Field,
    ladder: &LadderSpec,
    params: &EquationParams,
    profile: CutoffProfile,
    panels: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    let start = Instant::now();
    let samples = reference_samples(phi, ladder, params, panels)?;
    let setup = start.elapsed().as_secs_f64() * 1e3;
    let tau_min = ladder.tau_min();
    Ok(ladder
        .taus()
        .par_iter()
        .map(|&tau| {
            let start = Instant::now();
            let d = defect_for(&samples, tau, tau_min, params, profile);
            (tau, d, setup + start.elapsed().as_secs_f64() * 1e3)
        })
        .collect())
}

/// Measures `D(tau)` over the ladder and checks `D(tau) / sqrt(tau)` stays
/// within `ratio_bound`.
pub fn duhamel_defect(
    phi: &Field,
    ladder: &LadderSpec,
    params: &EquationParams,
    profile: CutoffProfile,
    options: &DefectOptions,
) -> Result<ExperimentReport> {
    ladder.validate()?;
    phi.require(Space::Physical)?;
    if options.panels_per_step < 32 {
        return Err(Error::Config(format!(
            "the quadrature panel must be at most min(tau)/32, got min(tau)/{}",
            options.panels_per_step
        )));
    }
    let mut report = ExperimentReport::new("defect", "max_n Duhamel defect D(tau)");
    let curve = match defect_curve(phi, ladder, params, profile, options.panels_per_step) {
        Ok(curve) => curve,
        Err(err) => {
            report.complete = false;
            report.flag(format!("reference failed: {err}"));
            report.rows = ladder.taus().iter().map(|&t| ReportRow::invalid(t, err.to_string())).collect();
            report.finalize();
            return Ok(report);
        }
    };
    report.rows = curve
        .iter()
        .map(|&(tau, d, wall)| {
            let mut row = ReportRow::valid(tau, d);
            row.wall_ms = wall;
            row
        })
        .collect();

    if options.richardson {
        match defect_curve(phi, ladder, params, profile, 2 * options.panels_per_step) {
            Ok(finer) => {
                let mut worst: f64 = 0.0;
                for (&(_, coarse, _), &(_, fine, _)) in curve.iter().zip(&finer) {
                    let change = (coarse - fine).abs();
                    let rel = if fine > 0.0 {
                        change / fine
                    } else if change == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    worst = worst.max(rel);
                }
                report.reference_uncertainty = Some(worst);
                report.metric_value("richardson_max_relative_change", worst);
                if worst > options.richardson_tol {
                    report.flag("quadrature not resolved: halving the panel moved D(tau) by more than the tolerance");
                }
                report.check("quadrature_richardson", worst <= options.richardson_tol);
            }
            Err(err) => {
                report.flag(format!("richardson rerun failed: {err}"));
                report.check("quadrature_richardson", false);
            }
        }
    }

    let scaled: Vec<f64> = curve.iter().map(|&(tau, d, _)| d / tau.sqrt()).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        report.flag("defect identically zero");
        report.check("bounded_over_sqrt_tau", true);
    } else {
        let ratio = max / min;
        report.metric_value("defect_over_sqrt_tau.max_over_min", ratio);
        report.check("bounded_over_sqrt_tau", ratio.is_finite() && ratio <= options.ratio_bound);
    }
    let positive: Vec<(f64, f64)> = curve.iter().filter(|r| r.1 > 0.0).map(|r| (r.0, r.1)).collect();
    if let Ok(fit) = super::fit::rate_fit(&positive) {
        report.metric_value("fitted_rate", fit.slope);
        report.fit = Some(fit);
    }
    report.finalize();
    Ok(report)
}
