//! Randomized checks of the pointwise and multiplier inequalities behind the
//! error analysis. Each probe counts samples where the left side exceeds
//! the right side beyond floating-point slack.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::report::{ExperimentReport, ReportRow};
use crate::flows::{expm1_i, increment_value};
use crate::grid::{Grid, Space};
use crate::oracles::random_field;

/// Relative slack granted to the right-hand side for rounding.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `lhs / rhs`.
    pub worst_ratio: f64,
}

impl ProbeOutcome {
    fn new(name: &str) -> Self {
        ProbeOutcome { name: name.to_string(), samples: 0, violations: 0, worst_ratio: 0.0 }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        if !(lhs <= rhs * (1.0 + ROUNDOFF_SLACK) + f64::MIN_POSITIVE) {
            self.violations += 1;
        }
        if rhs > 0.0 {
            self.worst_ratio = self.worst_ratio.max(lhs / rhs);
        } else if lhs > 0.0 {
            self.worst_ratio = f64::INFINITY;
        }
    }

    pub fn passed(&self) -> bool {
        self.samples > 0 && self.violations == 0
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo..hi))
}

fn random_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(log_uniform(rng, -3.0, 1.0), rng.gen_range(0.0..std::f64::consts::TAU))
}

fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// `|(N(tau) - I) v / tau| <= |v|^(p+1)`.
pub fn probe_increment_bound(samples: usize, seed: u64) -> ProbeOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ProbeOutcome::new("increment_bound");
    for _ in 0..samples {
        let v = random_point(&mut rng);
        let tau = log_uniform(&mut rng, -4.0, 0.0);
        let p = rng.gen_range(0.1..5.0);
        let lambda = random_sign(&mut rng);
        let lhs = increment_value(v, tau, p, lambda).norm();
        out.record(lhs, v.norm().powf(p + 1.0));
    }
    out
}

/// `|g(v) - g(w)| <= (p+1) |v - w| (|v|^p + |w|^p)` for
/// `g(z) = (N(tau) - I) z / tau`. Half the pairs are close together so the
/// local Lipschitz constant is exercised.
pub fn probe_increment_lipschitz(samples: usize, seed: u64) -> ProbeOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ProbeOutcome::new("increment_lipschitz");
    for i in 0..samples {
        let v = random_point(&mut rng);
        let w = if i % 2 == 0 {
            random_point(&mut rng)
        } else {
            let delta = v.norm() * log_uniform(&mut rng, -6.0, -1.0);
            v + Complex64::from_polar(delta, rng.gen_range(0.0..std::f64::consts::TAU))
        };
        let tau = log_uniform(&mut rng, -4.0, 0.0);
        let p = rng.gen_range(0.1..5.0);
        let lambda = random_sign(&mut rng);
        let lhs = (increment_value(v, tau, p, lambda) - increment_value(w, tau, p, lambda)).norm();
        let rhs = (p + 1.0) * (v - w).norm() * (v.norm().powf(p) + w.norm().powf(p));
        out.record(lhs, rhs);
    }
    out
}

/// `|∇ g(f)| <= (p+1) |f|^p |∇f|` for `f = A e^{-x^2}` with the chain rule
/// evaluated analytically:
/// `∇ g(f) = f' [ (e^{i θ} - 1)/tau + i λ p f^p e^{i θ} ]`, `θ = tau λ f^p`.
pub fn probe_gradient_bound(samples: usize, seed: u64) -> ProbeOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ProbeOutcome::new("gradient_bound");
    for _ in 0..samples {
        let amplitude = log_uniform(&mut rng, -1.0, 1.0);
        let x: f64 = rng.gen_range(-4.0..4.0);
        let tau = log_uniform(&mut rng, -4.0, 0.0);
        let p = rng.gen_range(1.0..5.0);
        let lambda = random_sign(&mut rng);
        let f = amplitude * (-x * x).exp();
        let df = -2.0 * x * f;
        let fp = f.powf(p);
        let theta = tau * lambda * fp;
        let bracket = expm1_i(theta) / tau + Complex64::new(0.0, lambda * p * fp) * Complex64::cis(theta);
        let lhs = (bracket * df).norm();
        out.record(lhs, (p + 1.0) * fp * df.abs());
    }
    out
}

fn gradient_energy(hat: &[Complex64], k_squared: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    hat.iter().zip(k_squared).filter(|(_, &k2)| keep(k2)).map(|(c, &k2)| k2 * c.norm_sqr()).sum()
}

/// Spectral evaluation, sharp profile, over `fields` random fields and every
/// `tau`:
/// `||Π f - f||_2 <= tau^(1/2) ||∇f||_2` and `||∇ Π f||_2 <= tau^(-1/2) ||f||_2`.
pub fn probe_projector_bounds(
    grid: &Arc<Grid>,
    taus: &[f64],
    fields: usize,
    seed: u64,
) -> (ProbeOutcome, ProbeOutcome) {
    let mut residual = ProbeOutcome::new("projector_residual");
    let mut smoothing = ProbeOutcome::new("projector_gradient");
    let dv = grid.cell_volume();
    let k2 = grid.k_squared();
    for i in 0..fields {
        let f = random_field(grid, seed.wrapping_add(i as u64), None).in_space(Space::Spectral);
        let hat = f.values();
        let mass: f64 = hat.iter().map(|c| c.norm_sqr()).sum();
        let grad_all = gradient_energy(hat, k2, |_| true);
        for &tau in taus {
            let kept = |q: f64| tau * q <= 1.0;
            let removed: f64 = hat.iter().zip(k2).filter(|(_, &q)| !kept(q)).map(|(c, _)| c.norm_sqr()).sum();
            residual.record((dv * removed).sqrt(), tau.sqrt() * (dv * grad_all).sqrt());
            let grad_kept = gradient_energy(hat, k2, kept);
            smoothing.record((dv * grad_kept).sqrt(), (dv * mass).sqrt() / tau.sqrt());
        }
    }
    (residual, smoothing)
}

/// Probe sizes for [`run_lemma_probes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePlan {
    pub pointwise_samples: usize,
    pub fields: usize,
    pub seed: u64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        ProbePlan { pointwise_samples: 1_000_000, fields: 100, seed: 0 }
    }
}

/// The five `tau` values used for the multiplier probes.
pub fn projector_taus() -> Vec<f64> {
    (0..5).map(|j| 10f64.powf(-3.0 + 0.5 * j as f64)).collect()
}

pub fn run_lemma_probes(grid: &Arc<Grid>, plan: &ProbePlan) -> Vec<ProbeOutcome> {
    let seed = plan.seed;
    let n = plan.pointwise_samples;
    let (residual, smoothing) = probe_projector_bounds(grid, &projector_taus(), plan.fields, seed ^ 0x5eed);
    vec![
        probe_increment_bound(n, seed),
        probe_increment_lipschitz(n, seed.wrapping_add(1)),
        probe_gradient_bound(n, seed.wrapping_add(2)),
        residual,
        smoothing,
    ]
}

/// One row per probe, `tau` left undefined, metric = worst ratio.
pub fn probe_report(outcomes: &[ProbeOutcome]) -> ExperimentReport {
    let mut report = ExperimentReport::new("probe", "worst lhs/rhs ratio");
    for outcome in outcomes {
        let mut row = ReportRow::valid(f64::NAN, outcome.worst_ratio).labelled(outcome.name.clone());
        row.note = Some(format!("{} violations in {} samples", outcome.violations, outcome.samples));
        report.rows.push(row);
        report.metric_value(&format!("{}.violations", outcome.name), outcome.violations as f64);
        report.check(&outcome.name, outcome.passed());
    }
    report.finalize();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_probes_hold() {
        for outcome in
            [probe_increment_bound(20_000, 1), probe_increment_lipschitz(20_000, 2), probe_gradient_bound(20_000, 3)]
        {
            assert!(outcome.passed(), "{outcome:?}");
            assert!(outcome.worst_ratio > 0.1, "{outcome:?}");
        }
    }

    #[test]
    fn increment_bound_is_nearly_attained_for_small_phase() {
        // (e^{iθ}-1)/θ -> 1 as θ -> 0, so the ratio approaches 1.
        let mut out = ProbeOutcome::new("t");
        let v = Complex64::new(0.01, 0.0);
        out.record(increment_value(v, 1e-4, 2.0, 1.0).norm(), v.norm().powi(3));
        assert!(out.worst_ratio > 0.999_999 && out.passed());
    }

    #[test]
    fn violations_are_counted() {
        let mut out = ProbeOutcome::new("t");
        out.record(1.0, 2.0);
        out.record(2.0 + 1e-9, 2.0);
        assert_eq!(out.violations, 1);
        assert!(!out.passed());
    }

    #[test]
    fn projector_probes_hold() {
        let grid = Grid::line(2.0 * std::f64::consts::PI, 256).unwrap();
        let (residual, smoothing) = probe_projector_bounds(&grid, &projector_taus(), 5, 11);
        assert_eq!(residual.samples, 25);
        assert!(residual.passed() && smoothing.passed());
    }

    #[test]
    fn report_lists_every_probe() {
        let grid = Grid::line(2.0 * std::f64::consts::PI, 64).unwrap();
        let plan = ProbePlan { pointwise_samples: 1000, fields: 2, seed: 4 };
        let report = probe_report(&run_lemma_probes(&grid, &plan));
        assert_eq!(report.rows.len(), 5);
        assert!(report.pass, "{:?}", report.reason);
    }
}
