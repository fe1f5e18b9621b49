//! Experiment dispatch.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use split_nls::experiments::{
    convergence_ladder, duhamel_defect, probe_report, run_lemma_probes, stability_sweep, strichartz_probe,
    ConvergenceOptions, DefectOptions, ExperimentReport, LadderProblem, MassAudit, ProbePlan, Reference, ReportRow,
};
use split_nls::oracles::{analytic_solution, energy, make_initial_data, mass, InitialDataSpec};
use split_nls::schemes::{run_scheme_with, Trajectory};
use split_nls::spectral::l2_norm;
use split_nls::Error;

use crate::config::{ExperimentConfig, ProbeKind, ReferenceSection};
use crate::emit::emit_report;
use crate::error::{CliError, EXIT_FAILED_CHECKS, EXIT_PASS, EXIT_RUNTIME};
use crate::trajectory_io::write_trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Converge,
    Stability,
    Probe,
    Defect,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::Stability => "stability",
            Command::Probe => "probe",
            Command::Defect => "defect",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "converge" => Command::Converge,
            "stability" => Command::Stability,
            "probe" => Command::Probe,
            "defect" => Command::Defect,
            other => return Err(CliError::Invalid(format!("unknown command {other:?}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: ExperimentReport,
    /// Exact contents of `report.json`.
    pub report_json: String,
}

/// Runs `command`, writes its artifacts to `out_dir` and picks the exit
/// code: 0 when every check passes, 2 when a check fails, 1 when the run
/// did not complete.
pub fn run_command(config: &ExperimentConfig, command: Command, out_dir: &Path) -> Result<RunOutcome, CliError> {
    info!("{command}: starting");
    let report = match command {
        Command::Simulate => simulate(config, out_dir)?,
        Command::Converge => converge(config)?,
        Command::Stability => stability(config)?,
        Command::Probe => probe(config)?,
        Command::Defect => defect(config)?,
    };
    for flag in &report.flags {
        warn!("{command}: {flag}");
    }
    let report_json = emit_report(&report, config, command.as_str(), out_dir)?;
    let exit_code = if !report.complete {
        EXIT_RUNTIME
    } else if report.pass {
        EXIT_PASS
    } else {
        EXIT_FAILED_CHECKS
    };
    info!("{command}: pass = {}, reason = {:?}", report.pass, report.reason);
    Ok(RunOutcome { exit_code, report, report_json })
}

fn simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport, CliError> {
    let grid = config.grid()?;
    let params = config.params()?;
    let scheme = config.scheme_config()?;
    let phi = make_initial_data(&config.data, &grid, &params)?;
    let closed_form = matches!(config.data, InitialDataSpec::PlaneWave { .. } | InitialDataSpec::Soliton);
    let metric = if closed_form { "max_n L2 error against the closed form" } else { "final L2 norm" };
    let mut report = ExperimentReport::new("simulate", metric);

    let every = scheme.record_every;
    let keep = config.output.trajectory;
    let mut states = Vec::new();
    let mut times = Vec::new();
    let mut worst: f64 = 0.0;
    let mut oracle_error = None;
    let mut last = None;
    let start = Instant::now();
    let outcome = run_scheme_with(&phi, &scheme, |n, state| {
        if n % every != 0 {
            return;
        }
        let t = n as f64 * scheme.tau;
        if closed_form {
            match analytic_solution(&config.data, t, &grid, &params) {
                Ok(exact) => worst = worst.max(l2_norm(&state.difference(&exact).expect("same grid"))),
                Err(err) => {
                    oracle_error.get_or_insert(err);
                }
            }
        }
        if keep {
            states.push(state.clone());
            times.push(t);
        }
        last = Some(state.clone());
    });
    if let Some(err) = oracle_error {
        return Err(err.into());
    }

    report.metric_value("mass_initial", mass(&phi));
    report.metric_value("energy_initial", energy(&phi, &params)?);
    match outcome {
        Ok(norms) => {
            let audit = MassAudit::of(scheme.scheme, &norms);
            report.check("mass_behaviour", audit.ok);
            if scheme.scheme.is_unitary() {
                report.metric_value("max_relative_norm_drift", audit.relative_drift);
            } else {
                report.metric_value("max_norm_increase", audit.max_increase);
            }
            let final_state = last.expect("the initial state is always observed");
            report.metric_value("steps", scheme.steps() as f64);
            report.metric_value("final_time", scheme.steps() as f64 * scheme.tau);
            report.metric_value("mass_final", mass(&final_state));
            report.metric_value("energy_final", energy(&final_state, &params)?);
            let value = if closed_form { worst } else { l2_norm(&final_state) };
            let mut row = ReportRow::valid(scheme.tau, value);
            row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            report.rows.push(row);
            if let (true, Some(tol)) = (closed_form, config.experiment.error_tolerance) {
                report.check("closed_form_error", worst <= tol);
            }
        }
        Err(Error::BlowUp { step, last_finite_time }) => {
            report.complete = false;
            report.flag(format!("blow-up: non-finite values at step {step}"));
            report.metric_value("last_finite_time", last_finite_time);
            report.rows.push(ReportRow::invalid(scheme.tau, format!("blow-up at step {step}")));
        }
        Err(err) => return Err(err.into()),
    }

    if keep && !states.is_empty() {
        let traj = Trajectory { times, states, config: scheme, step_norms: Vec::new() };
        let path = out_dir.join("trajectory.bin");
        std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_trajectory(&traj, BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
    }
    report.finalize();
    Ok(report)
}

fn converge(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let grid = config.grid()?;
    let params = config.params()?;
    let phi = make_initial_data(&config.data, &grid, &params)?;
    let reference = match config.reference {
        ReferenceSection::Analytic => Reference::Analytic(config.data.clone()),
        ReferenceSection::SelfConvergence { scheme, ratio } => {
            Reference::Fine { scheme: scheme.unwrap_or(config.scheme.kind), ratio }
        }
    };
    let x = &config.experiment;
    let options = ConvergenceOptions {
        rate_band: x.rate_band.map(|[lo, hi]| (lo, hi)),
        min_slope: x.min_slope,
        half_order_factor: x.half_order_factor,
        monotone_slack: x.monotone_slack,
        exact_floor: x.exact_floor,
        compare_projected: x.compare_projected,
        estimate_uncertainty: x.estimate_uncertainty,
    };
    let problem = LadderProblem { params, scheme: config.scheme.kind, profile: config.scheme.profile };
    Ok(convergence_ladder(&phi, &config.ladder(), &problem, &reference, &options)?)
}

fn stability(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let grid = config.grid()?;
    let params = config.params()?;
    let phi = make_initial_data(&config.data, &grid, &params)?;
    let problem = LadderProblem { params, scheme: config.scheme.kind, profile: config.scheme.profile };
    Ok(stability_sweep(&phi, &config.ladder(), &problem, &config.pairs(), config.experiment.ratio_bound)?)
}

fn probe(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let grid = config.grid()?;
    match config.experiment.probe {
        ProbeKind::Lemmas => {
            let plan = ProbePlan {
                pointwise_samples: config.experiment.samples,
                fields: config.experiment.fields,
                seed: config.seed,
            };
            Ok(probe_report(&run_lemma_probes(&grid, &plan)))
        }
        ProbeKind::Strichartz => {
            let params = config.params()?;
            let phi = make_initial_data(&config.data, &grid, &params)?;
            let pair = config.pairs()[0];
            Ok(strichartz_probe(&phi, pair, &config.ladder(), config.scheme.profile, config.experiment.ratio_bound)?)
        }
    }
}

fn defect(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let grid = config.grid()?;
    let params = config.params()?;
    let phi = make_initial_data(&config.data, &grid, &params)?;
    let x = &config.experiment;
    let options = DefectOptions {
        panels_per_step: x.panels_per_step,
        ratio_bound: x.ratio_bound,
        richardson: x.richardson,
        richardson_tol: x.richardson_tol,
    };
    Ok(duhamel_defect(&phi, &config.ladder(), &params, config.scheme.profile, &options)?)
}
