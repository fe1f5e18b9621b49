//! Step-size ladders: convergence against a reference, uniform-in-tau
//! stability of mixed norms, and the free-flow Strichartz probe.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::rate_fit;
use super::report::{ExperimentReport, ReportRow};
use super::strichartz::{time_lq_norm, AdmissiblePair};
use crate::error::{Error, Result};
use crate::flows::{cutoff_inactive, cutoff_table, projector, CutoffProfile, EquationParams};
use crate::grid::{Field, Space};
use crate::oracles::{analytic_solution, InitialDataSpec};
use crate::schemes::{max_norm_increase, relative_norm_drift, run_scheme, run_scheme_with, SchemeConfig, SchemeKind};
use crate::spectral::{gradient, l2_norm, lp_norm_of};

/// Allowed single-step growth of the L² norm for the modified Lie scheme.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Allowed relative L² drift for the unitary schemes.
pub const CONSERVATION_TOL: f64 = 1e-11;

/// Geometric ladder `tau_j = tau0 * 2^-j`, `j = 0..levels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub tau0: f64,
    pub levels: usize,
    pub horizon: f64,
}

impl LadderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 4 {
            return Err(Error::Config(format!("a ladder needs at least 4 steps, got {}", self.levels)));
        }
        if !(self.tau0 > 0.0 && self.tau0 < 1.0) {
            return Err(Error::Config(format!("ladder steps must lie in (0, 1), got tau0 = {}", self.tau0)));
        }
        if !(self.horizon >= self.tau0) {
            return Err(Error::Config(format!(
                "horizon {} is shorter than the largest step {}",
                self.horizon, self.tau0
            )));
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.levels).map(|j| self.tau0 * 0.5f64.powi(j as i32)).collect()
    }

    pub fn tau_min(&self) -> f64 {
        self.tau0 * 0.5f64.powi(self.levels as i32 - 1)
    }
}

/// Mass behaviour of one run: monotone for the modified Lie scheme,
/// conserved for the others.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassAudit {
    pub scheme: SchemeKind,
    pub max_increase: f64,
    pub relative_drift: f64,
    pub ok: bool,
}

impl MassAudit {
    pub fn of(scheme: SchemeKind, norms: &[f64]) -> Self {
        let max_increase = max_norm_increase(norms);
        let relative_drift = relative_norm_drift(norms);
        let scale = norms.first().copied().unwrap_or(0.0).max(1.0);
        let ok = if scheme.is_unitary() {
            relative_drift <= CONSERVATION_TOL
        } else {
            max_increase <= MONOTONE_SLACK * scale
        };
        MassAudit { scheme, max_increase, relative_drift, ok }
    }
}

pub(crate) fn record_mass(report: &mut ExperimentReport, audits: &[MassAudit]) {
    for audit in audits {
        report.check("mass_behaviour", audit.ok);
    }
    let monotone = audits.iter().filter(|a| !a.scheme.is_unitary());
    if let Some(inc) = monotone.map(|a| a.max_increase).reduce(f64::max) {
        report.metric_value("max_norm_increase", inc);
    }
    let unitary = audits.iter().filter(|a| a.scheme.is_unitary());
    if let Some(drift) = unitary.map(|a| a.relative_drift).reduce(f64::max) {
        report.metric_value("max_relative_norm_drift", drift);
    }
}

/// What the ladder errors are measured against.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Closed-form solution of the given data.
    Analytic(InitialDataSpec),
    /// The given scheme at step `min(tau) / ratio`.
    Fine { scheme: SchemeKind, ratio: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOptions {
    /// Inclusive band for the fitted slope.
    pub rate_band: Option<(f64, f64)>,
    pub min_slope: Option<f64>,
    /// Require every error to be at most `factor * C * tau^(1/2)`, with `C`
    /// the fitted constant.
    pub half_order_factor: Option<f64>,
    /// Relative slack for the monotone-decay check.
    pub monotone_slack: f64,
    /// Errors at or below this floor on every row mean the scheme is exact
    /// for the data; the rate fit is then skipped.
    pub exact_floor: f64,
    /// Compare against `Π_tau u` instead of `u`.
    pub compare_projected: bool,
    /// Estimate the fine reference's own error by rerunning it at twice the
    /// step.
    pub estimate_uncertainty: bool,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            rate_band: None,
            min_slope: None,
            half_order_factor: None,
            monotone_slack: 0.05,
            exact_floor: 1e-10,
            compare_projected: false,
            estimate_uncertainty: true,
        }
    }
}

/// The scheme, equation and cutoff shared by every row of a ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderProblem {
    pub params: EquationParams,
    pub scheme: SchemeKind,
    pub profile: CutoffProfile,
}

impl LadderProblem {
    pub fn config(&self, tau: f64, horizon: f64) -> Result<SchemeConfig> {
        Ok(SchemeConfig::new(self.params, self.scheme, tau, horizon)?.with_profile(self.profile))
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

struct FineReference {
    samples: Vec<Field>,
    audits: Vec<MassAudit>,
    uncertainty: Option<f64>,
}

fn fine_reference(
    phi: &Field,
    ladder: &LadderSpec,
    problem: &LadderProblem,
    scheme: SchemeKind,
    ratio: usize,
    estimate_uncertainty: bool,
) -> Result<FineReference> {
    if ratio < 2 {
        return Err(Error::Config("reference ratio must be at least 2".into()));
    }
    let tau_min = ladder.tau_min();
    let fine = LadderProblem { scheme, ..*problem };
    let config = fine.config(tau_min / ratio as f64, ladder.horizon)?.with_record_every(ratio);
    let traj = run_scheme(phi, &config)?;
    let mut audits = vec![MassAudit::of(scheme, &traj.step_norms)];
    let uncertainty = if estimate_uncertainty && ratio.is_multiple_of(2) {
        let half = ratio / 2;
        let coarse_config = fine.config(tau_min / half as f64, ladder.horizon)?.with_record_every(half);
        let mut worst: f64 = 0.0;
        let norms = run_scheme_with(phi, &coarse_config, |n, state| {
            if n % half == 0 {
                if let Some(reference) = traj.states.get(n / half) {
                    let diff = state.difference(reference).expect("same grid");
                    worst = worst.max(l2_norm(&diff));
                }
            }
        })?;
        audits.push(MassAudit::of(scheme, &norms));
        Some(worst)
    } else {
        None
    };
    Ok(FineReference { samples: traj.states, audits, uncertainty })
}

/// Integer ratio `tau / tau_min` for a ladder step.
fn stride(tau: f64, tau_min: f64) -> usize {
    (tau / tau_min).round() as usize
}

/// `max_{0 <= n tau <= T} ||Z_tau(n tau) - u(n tau)||_2` over a ladder.
pub fn convergence_ladder(
    phi: &Field,
    ladder: &LadderSpec,
    problem: &LadderProblem,
    reference: &Reference,
    options: &ConvergenceOptions,
) -> Result<ExperimentReport> {
    ladder.validate()?;
    phi.require(Space::Physical)?;
    let mut report = ExperimentReport::new("converge", "max_n L2 error");
    let taus = ladder.taus();
    let tau_min = ladder.tau_min();
    let grid = phi.grid().clone();

    let fine = match reference {
        Reference::Analytic(_) => None,
        Reference::Fine { scheme, ratio } => {
            match fine_reference(phi, ladder, problem, *scheme, *ratio, options.estimate_uncertainty) {
                Ok(fine) => Some(Arc::new(fine)),
                Err(err) => {
                    report.complete = false;
                    report.flag(format!("reference failed: {err}"));
                    report.rows = taus.iter().map(|&t| ReportRow::invalid(t, "reference failed")).collect();
                    report.finalize();
                    return Ok(report);
                }
            }
        }
    };
    if let Some(fine) = &fine {
        report.reference_uncertainty = fine.uncertainty;
    }

    let results: Vec<(ReportRow, Option<MassAudit>)> = taus
        .par_iter()
        .map(|&tau| {
            let start = Instant::now();
            let outcome = (|| -> Result<(f64, MassAudit)> {
                let config = problem.config(tau, ladder.horizon)?;
                let every = stride(tau, tau_min);
                let cut = options.compare_projected.then(|| cutoff_table(&grid, tau, problem.profile));
                let mut worst: f64 = 0.0;
                let mut failure = None;
                let norms = run_scheme_with(phi, &config, |n, state| {
                    let target = match (reference, &fine) {
                        (Reference::Analytic(spec), _) => {
                            match analytic_solution(spec, n as f64 * tau, &grid, &problem.params) {
                                Ok(u) => u,
                                Err(err) => {
                                    failure.get_or_insert(err);
                                    return;
                                }
                            }
                        }
                        (_, Some(fine)) => match fine.samples.get(n * every) {
                            Some(u) => u.clone(),
                            None => {
                                failure.get_or_insert(Error::Config("reference too short".into()));
                                return;
                            }
                        },
                        _ => unreachable!("fine reference missing"),
                    };
                    let target = match &cut {
                        Some(table) => {
                            let mut hat = target.in_space(Space::Spectral);
                            for (v, c) in hat.values_mut().iter_mut().zip(table) {
                                *v *= c;
                            }
                            hat.in_space(Space::Physical)
                        }
                        None => target,
                    };
                    let diff = state.difference(&target).expect("same grid");
                    worst = worst.max(l2_norm(&diff));
                })?;
                if let Some(err) = failure {
                    return Err(err);
                }
                Ok((worst, MassAudit::of(problem.scheme, &norms)))
            })();
            match outcome {
                Ok((err, audit)) => {
                    let mut row = ReportRow::valid(tau, err);
                    row.wall_ms = elapsed_ms(start);
                    (row, Some(audit))
                }
                Err(err) => {
                    let mut row = ReportRow::invalid(tau, err.to_string());
                    row.wall_ms = elapsed_ms(start);
                    (row, None)
                }
            }
        })
        .collect();

    let mut audits: Vec<MassAudit> = results.iter().filter_map(|(_, a)| *a).collect();
    if let Some(fine) = &fine {
        audits.extend(fine.audits.iter().copied());
    }
    report.rows = results.into_iter().map(|(row, _)| row).collect();
    if problem.scheme == SchemeKind::ModifiedLie && taus.iter().any(|&t| cutoff_inactive(&grid, t)) {
        report.flag("cutoff inactive on this grid for some steps");
    }
    record_mass(&mut report, &audits);
    assess_convergence(&mut report, options);
    report.finalize();
    Ok(report)
}

fn assess_convergence(report: &mut ExperimentReport, options: &ConvergenceOptions) {
    let valid: Vec<(f64, f64)> = report.valid_rows().map(|r| (r.tau, r.metric)).collect();
    if valid.len() < report.rows.len() {
        report.flag(format!("{} invalid rows excluded", report.rows.len() - valid.len()));
    }
    if valid.is_empty() {
        report.check("rate_fit", false);
        return;
    }
    if valid.iter().all(|&(_, e)| e <= options.exact_floor) {
        report.flag("exact regime");
        report.check("exact_regime_errors", true);
        return;
    }

    // Rows are ordered by decreasing tau.
    let monotone = valid.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + options.monotone_slack));
    report.check("monotone_decay", monotone);

    match rate_fit(&valid) {
        Ok(fit) => {
            report.metric_value("fitted_rate", fit.slope);
            report.metric_value("fitted_constant", fit.constant());
            if let Some((lo, hi)) = options.rate_band {
                report.check("rate_band", fit.slope >= lo && fit.slope <= hi);
            }
            if let Some(min) = options.min_slope {
                report.check("min_slope", fit.slope >= min);
            }
            if let Some(factor) = options.half_order_factor {
                let c = fit.constant();
                let worst = valid.iter().map(|&(t, e)| e / (c * t.sqrt())).fold(0.0, f64::max);
                report.metric_value("max_error_over_c_sqrt_tau", worst);
                report.check("half_order_bound", worst <= factor);
            }
            report.fit = Some(fit);
        }
        Err(_) => report.check("rate_fit", false),
    }
}

/// Sweeps `||Z_tau||_{l^q([0,T]; W^{1,r})}` over a ladder for every pair.
pub fn stability_sweep(
    phi: &Field,
    ladder: &LadderSpec,
    problem: &LadderProblem,
    pairs: &[AdmissiblePair],
    ratio_bound: f64,
) -> Result<ExperimentReport> {
    ladder.validate()?;
    phi.require(Space::Physical)?;
    if pairs.is_empty() {
        return Err(Error::Config("stability sweep needs at least one pair".into()));
    }
    let mut report = ExperimentReport::new("stability", "l^q W^{1,r} norm");
    let d = phi.grid().dim();
    for pair in pairs {
        if !pair.is_admissible(d) {
            report.flag(format!("pair {pair} is not admissible for d = {d}"));
        }
    }
    let taus = ladder.taus();
    let cell_volume = phi.grid().cell_volume();

    // (tau, per-pair norms and mass audit, wall ms)
    type RowResult = (f64, Result<(Vec<f64>, MassAudit)>, f64);
    let results: Vec<RowResult> = taus
        .par_iter()
        .map(|&tau| {
            let start = Instant::now();
            let outcome = (|| {
                let config = problem.config(tau, ladder.horizon)?;
                let mut per_pair: Vec<Vec<f64>> = vec![Vec::new(); pairs.len()];
                let norms = run_scheme_with(phi, &config, |_, state| {
                    let grads = gradient(state);
                    for (pair, samples) in pairs.iter().zip(per_pair.iter_mut()) {
                        let mut value = lp_norm_of(state.values(), cell_volume, pair.r);
                        for g in &grads {
                            value += lp_norm_of(g.values(), cell_volume, pair.r);
                        }
                        samples.push(value);
                    }
                })?;
                let values =
                    pairs.iter().zip(&per_pair).map(|(pair, samples)| time_lq_norm(samples, tau, pair.q)).collect();
                Ok((values, MassAudit::of(problem.scheme, &norms)))
            })();
            (tau, outcome, elapsed_ms(start))
        })
        .collect();

    let mut audits = Vec::new();
    for (tau, outcome, wall) in results {
        match outcome {
            Ok((values, audit)) => {
                audits.push(audit);
                for (pair, value) in pairs.iter().zip(values) {
                    let mut row = ReportRow::valid(tau, value).labelled(pair.to_string());
                    row.wall_ms = wall;
                    report.rows.push(row);
                }
            }
            Err(err) => {
                for pair in pairs {
                    let mut row = ReportRow::invalid(tau, err.to_string()).labelled(pair.to_string());
                    row.wall_ms = wall;
                    report.rows.push(row);
                }
            }
        }
    }
    for pair in pairs {
        let label = pair.to_string();
        let values: Vec<f64> =
            report.valid_rows().filter(|r| r.label.as_deref() == Some(label.as_str())).map(|r| r.metric).collect();
        bounded_ratio_check(&mut report, &format!("bounded[{label}]"), &values, ratio_bound);
    }
    record_mass(&mut report, &audits);
    report.finalize();
    Ok(report)
}

/// Records `max/min <= bound` over `values`; an all-zero sweep passes.
fn bounded_ratio_check(report: &mut ExperimentReport, name: &str, values: &[f64], bound: f64) {
    if values.len() < 2 {
        report.check(name, false);
        return;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        report.flag(format!("{name}: identically zero"));
        report.check(name, true);
        return;
    }
    let ratio = max / min;
    report.metric_value(&format!("{name}.max_over_min"), ratio);
    report.check(name, ratio.is_finite() && ratio <= bound);
}

/// `||S_tau(·) φ||_{l^q([0,T]; L^r)} / ||φ||_2` over a ladder.
pub fn strichartz_probe(
    phi: &Field,
    pair: AdmissiblePair,
    ladder: &LadderSpec,
    profile: CutoffProfile,
    ratio_bound: f64,
) -> Result<ExperimentReport> {
    ladder.validate()?;
    phi.require(Space::Physical)?;
    let mut report = ExperimentReport::new("strichartz", "l^q L^r norm of S_tau(n tau) phi over ||phi||_2");
    let grid = phi.grid().clone();
    let d = grid.dim();
    if !pair.is_admissible(d) {
        report.flag(format!("pair {pair} is not admissible for d = {d}"));
    }
    let mass = l2_norm(phi);
    let cell_volume = grid.cell_volume();
    let taus = ladder.taus();
    let rows: Vec<ReportRow> = taus
        .par_iter()
        .map(|&tau| {
            let start = Instant::now();
            let kept = projector(phi, tau, profile).expect("tau validated").in_space(Space::Spectral);
            let steps = (ladder.horizon / tau * (1.0 + 1e-12)).floor() as usize;
            let mut samples = Vec::with_capacity(steps + 1);
            for n in 0..=steps {
                let t = n as f64 * tau;
                let mut state = kept.clone();
                for (v, &k2) in state.values_mut().iter_mut().zip(grid.k_squared()) {
                    *v *= Complex64::cis(-t * k2);
                }
                let state = state.in_space(Space::Physical);
                samples.push(lp_norm_of(state.values(), cell_volume, pair.r));
            }
            let norm = time_lq_norm(&samples, tau, pair.q);
            let ratio = if mass > 0.0 { norm / mass } else { 0.0 };
            let mut row = ReportRow::valid(tau, ratio).labelled(pair.to_string());
            row.wall_ms = elapsed_ms(start);
            row
        })
        .collect();
    report.rows = rows;
    let values: Vec<f64> = report.rows.iter().map(|r| r.metric).collect();
    bounded_ratio_check(&mut report, "bounded", &values, ratio_bound);
    report.finalize();
    Ok(report)
}
