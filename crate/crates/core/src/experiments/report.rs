use std::collections::BTreeMap;

use serde::Serialize;

use super::fit::RateFit;

/// One ladder row. `wall_ms` is kept out of serialised reports so that
/// identical runs produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub tau: f64,
    pub metric: f64,
    pub valid: bool,
    #[serde(skip)]
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReportRow {
    pub fn valid(tau: f64, metric: f64) -> Self {
        ReportRow { tau, metric, valid: true, wall_ms: 0.0, label: None, note: None }
    }

    pub fn invalid(tau: f64, note: impl Into<String>) -> Self {
        ReportRow { tau, metric: f64::NAN, valid: false, wall_ms: 0.0, label: None, note: Some(note.into()) }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// What `rows[].metric` measures.
    pub metric: String,
    pub rows: Vec<ReportRow>,
    pub fit: Option<RateFit>,
    pub checks: BTreeMap<String, bool>,
    pub metrics: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub pass: bool,
    pub reason: Option<String>,
    pub reference_uncertainty: Option<f64>,
    pub complete: bool,
}

impl ExperimentReport {
    pub fn new(experiment: &str, metric: &str) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            metric: metric.to_string(),
            rows: Vec::new(),
            fit: None,
            checks: BTreeMap::new(),
            metrics: BTreeMap::new(),
            flags: Vec::new(),
            pass: false,
            reason: None,
            reference_uncertainty: None,
            complete: true,
        }
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        let entry = self.checks.entry(name.to_string()).or_insert(true);
        *entry = *entry && ok;
    }

    pub fn metric_value(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn flag(&mut self, flag: impl Into<String>) {
        let flag = flag.into();
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    pub fn valid_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.valid)
    }

    /// Sets `pass` and `reason` from the checks gathered so far.
    pub fn finalize(&mut self) {
        let failing: Vec<&str> = self.checks.iter().filter(|(_, ok)| !**ok).map(|(name, _)| name.as_str()).collect();
        self.reason = if self.rows.is_empty() {
            Some("no rows".to_string())
        } else if !self.complete {
            Some("incomplete run".to_string())
        } else if self.checks.is_empty() {
            Some("no checks evaluated".to_string())
        } else if !failing.is_empty() {
            Some(format!("failed: {}", failing.join(", ")))
        } else {
            None
        };
        self.pass = self.reason.is_none();
    }
}
