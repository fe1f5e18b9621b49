//! Measurement harness: ladders, rate fits, mixed norms, defect and
//! inequality probes.

pub mod defect;
pub mod fit;
pub mod ladder;
pub mod probes;
pub mod report;
pub mod strichartz;

pub use defect::{duhamel_defect, DefectOptions};
pub use fit::{rate_fit, RateFit};
pub use ladder::{
    convergence_ladder, stability_sweep, strichartz_probe, ConvergenceOptions, LadderProblem, LadderSpec, MassAudit,
    Reference,
};
pub use probes::{probe_report, run_lemma_probes, ProbeOutcome, ProbePlan};
pub use report::{ExperimentReport, ReportRow};
pub use strichartz::{admissible_q0r0, discrete_strichartz_norm, time_lq_norm, AdmissiblePair, SpatialNorm};
