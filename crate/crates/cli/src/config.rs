//! Strict JSON experiment configuration.
//!
//! Parsing happens in three stages, each with its own exit code: JSON
//! syntax, schema (types and field names, reported with the field path),
//! and value constraints (reported as `section.field: constraint`).

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use split_nls::experiments::{admissible_q0r0, AdmissiblePair, LadderSpec};
use split_nls::flows::{CutoffProfile, EquationParams};
use split_nls::grid::{Grid, MAX_DIM};
use split_nls::oracles::InitialDataSpec;
use split_nls::schemes::{SchemeConfig, SchemeKind};

use crate::error::CliError;

/// An exponent in `[1, inf]`; written as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExponentVisitor;

        impl Visitor<'_> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
                Ok(Exponent(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
                match v {
                    "inf" | "infinity" => Ok(Exponent(f64::INFINITY)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExponentVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSection {
    pub d: usize,
    pub p: f64,
    pub lambda: f64,
}

/// Per-axis arrays; a single entry is used for every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub box_length: Vec<f64>,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    pub tau: f64,
    pub horizon: f64,
    pub profile: CutoffProfile,
    pub record_every: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            kind: SchemeKind::ModifiedLie,
            tau: 0.01,
            horizon: 1.0,
            profile: CutoffProfile::Smooth,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderSection {
    pub tau0: f64,
    pub levels: usize,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection { tau0: 2f64.powi(-5), levels: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    pub q: Exponent,
    pub r: Exponent,
}

impl From<PairSection> for AdmissiblePair {
    fn from(p: PairSection) -> Self {
        AdmissiblePair::new(p.q.0, p.r.0)
    }
}

impl From<AdmissiblePair> for PairSection {
    fn from(p: AdmissiblePair) -> Self {
        PairSection { q: Exponent(p.q), r: Exponent(p.r) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    #[default]
    Lemmas,
    Strichartz,
}

/// Knobs for every experiment; each command reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub ladder: LadderSection,
    /// Defaults to `[(q0, r0), (inf, 2)]` for the configured equation.
    pub pairs: Option<Vec<PairSection>>,
    pub rate_band: Option<[f64; 2]>,
    pub min_slope: Option<f64>,
    pub half_order_factor: Option<f64>,
    pub ratio_bound: f64,
    pub monotone_slack: f64,
    pub exact_floor: f64,
    pub compare_projected: bool,
    pub estimate_uncertainty: bool,
    /// `simulate`: bound on the max-over-n L² error against a closed form.
    pub error_tolerance: Option<f64>,
    pub probe: ProbeKind,
    pub samples: usize,
    pub fields: usize,
    pub panels_per_step: usize,
    pub richardson: bool,
    pub richardson_tol: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            ladder: LadderSection::default(),
            pairs: None,
            rate_band: None,
            min_slope: None,
            half_order_factor: None,
            ratio_bound: 4.0,
            monotone_slack: 0.05,
            exact_floor: 1e-10,
            compare_projected: false,
            estimate_uncertainty: true,
            error_tolerance: None,
            probe: ProbeKind::Lemmas,
            samples: 1_000_000,
            fields: 100,
            panels_per_step: 32,
            richardson: true,
            richardson_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSection {
    /// Closed-form solution of the configured data.
    Analytic,
    /// The given scheme (default: the scheme under test) at
    /// `min(tau) / ratio`.
    #[serde(rename = "self")]
    SelfConvergence {
        #[serde(default)]
        scheme: Option<SchemeKind>,
        #[serde(default = "default_ratio")]
        ratio: usize,
    },
}

fn default_ratio() -> usize {
    64
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection::SelfConvergence { scheme: None, ratio: default_ratio() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub formats: Vec<Format>,
    /// Dump sampled states of a `simulate` run to `trajectory.bin`.
    pub trajectory: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { formats: vec![Format::Json, Format::Csv, Format::Svg], trajectory: false }
    }
}

impl OutputSection {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub equation: EquationSection,
    pub grid: GridSection,
    /// A rough datum without its own seed takes the top-level seed.
    pub data: InitialDataSpec,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
}

fn invalid(field: &str, constraint: impl fmt::Display) -> CliError {
    CliError::Invalid(format!("{field}: {constraint}"))
}

/// Parses, validates and normalises a config document. Defaults that
/// depend on other fields (pair list, reference scheme) are filled in so
/// that the echo is a fixed point of parsing.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let injected = inject_rough_seed(&mut value);
    let mut config: ExperimentConfig = if injected {
        serde_path_to_error::deserialize(value).map_err(schema_error)?
    } else {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(schema_error)?
    };
    config.validate()?;
    config.normalise()?;
    Ok(config)
}

fn schema_error<E: fmt::Display>(err: serde_path_to_error::Error<E>) -> CliError {
    let path = err.path().to_string();
    CliError::Schema(format!("{path}: {}", err.inner()))
}

fn inject_rough_seed(value: &mut Value) -> bool {
    let seed = value.get("seed").cloned().unwrap_or(Value::from(0u64));
    let Some(data) = value.get_mut("data").and_then(Value::as_object_mut) else {
        return false;
    };
    if data.get("kind").and_then(Value::as_str) == Some("rough") && !data.contains_key("seed") {
        data.insert("seed".into(), seed);
        return true;
    }
    false
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<EquationParams, CliError> {
        let e = &self.equation;
        EquationParams::new(e.d, e.p, e.lambda).map_err(|err| invalid("equation", err))
    }

    fn axis_values<T: Copy>(&self, values: &[T], field: &str) -> Result<Vec<T>, CliError> {
        let d = self.equation.d;
        match values.len() {
            1 => Ok(vec![values[0]; d]),
            n if n == d => Ok(values.to_vec()),
            n => Err(invalid(field, format!("needs 1 or d = {d} entries, got {n}"))),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        let lengths = self.axis_values(&self.grid.box_length, "grid.box_length")?;
        let points = self.axis_values(&self.grid.points, "grid.points")?;
        Grid::periodic(&lengths, &points).map_err(|err| invalid("grid", err))
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig, CliError> {
        let s = &self.scheme;
        Ok(SchemeConfig::new(self.params()?, s.kind, s.tau, s.horizon)
            .map_err(|err| invalid("scheme", err))?
            .with_profile(s.profile)
            .with_record_every(s.record_every))
    }

    pub fn ladder(&self) -> LadderSpec {
        LadderSpec {
            tau0: self.experiment.ladder.tau0,
            levels: self.experiment.ladder.levels,
            horizon: self.scheme.horizon,
        }
    }

    pub fn pairs(&self) -> Vec<AdmissiblePair> {
        match &self.experiment.pairs {
            Some(pairs) => pairs.iter().map(|&p| p.into()).collect(),
            None => Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let e = &self.equation;
        if !(1..=MAX_DIM).contains(&e.d) {
            return Err(invalid("equation.d", format!("must be 1, 2 or 3, got {}", e.d)));
        }
        if e.lambda != 1.0 && e.lambda != -1.0 {
            return Err(invalid("equation.lambda", format!("must be -1 or +1, got {}", e.lambda)));
        }
        if !(e.p > 0.0 && e.p.is_finite()) {
            return Err(invalid("equation.p", format!("must be positive, got {}", e.p)));
        }
        if e.d == 3 && e.p >= 4.0 {
            return Err(invalid("equation.p", format!("must satisfy p < 4 when d = 3, got {}", e.p)));
        }
        let params = self.params()?;
        let grid = self.grid()?;
        self.data.validate(&grid, &params).map_err(|err| invalid("data", err))?;

        let s = &self.scheme;
        if !(s.tau > 0.0 && s.tau.is_finite()) {
            return Err(invalid("scheme.tau", format!("must be positive, got {}", s.tau)));
        }
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return Err(invalid("scheme.horizon", format!("must be positive, got {}", s.horizon)));
        }
        if s.tau > s.horizon * (1.0 + 1e-12) {
            return Err(invalid("scheme.tau", format!("must not exceed scheme.horizon = {}", s.horizon)));
        }
        if s.record_every == 0 {
            return Err(invalid("scheme.record_every", "must be at least 1"));
        }

        let x = &self.experiment;
        if x.ladder.levels < 4 {
            return Err(invalid("experiment.ladder.levels", format!("must be at least 4, got {}", x.ladder.levels)));
        }
        if !(x.ladder.tau0 > 0.0 && x.ladder.tau0 < 1.0) {
            return Err(invalid("experiment.ladder.tau0", format!("must lie in (0, 1), got {}", x.ladder.tau0)));
        }
        if x.ladder.tau0 > s.horizon {
            return Err(invalid("experiment.ladder.tau0", format!("must not exceed scheme.horizon = {}", s.horizon)));
        }
        if let Some(pairs) = &x.pairs {
            if pairs.is_empty() {
                return Err(invalid("experiment.pairs", "must not be empty"));
            }
            for (i, pair) in pairs.iter().enumerate() {
                for (name, v) in [("q", pair.q.0), ("r", pair.r.0)] {
                    if v.is_nan() || v < 2.0 {
                        return Err(invalid(
                            &format!("experiment.pairs[{i}].{name}"),
                            format!("must lie in [2, inf], got {v}"),
                        ));
                    }
                }
            }
        }
        if let Some([lo, hi]) = x.rate_band {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid("experiment.rate_band", format!("needs finite lo <= hi, got [{lo}, {hi}]")));
            }
        }
        for (name, v) in
            [("experiment.half_order_factor", x.half_order_factor), ("experiment.error_tolerance", x.error_tolerance)]
        {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(name, format!("must be positive, got {v}")));
                }
            }
        }
        if !(x.ratio_bound >= 1.0 && x.ratio_bound.is_finite()) {
            return Err(invalid("experiment.ratio_bound", format!("must be at least 1, got {}", x.ratio_bound)));
        }
        for (name, v) in [
            ("experiment.monotone_slack", x.monotone_slack),
            ("experiment.exact_floor", x.exact_floor),
            ("experiment.richardson_tol", x.richardson_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if x.samples == 0 {
            return Err(invalid("experiment.samples", "must be at least 1"));
        }
        if x.fields == 0 {
            return Err(invalid("experiment.fields", "must be at least 1"));
        }
        if x.panels_per_step < 32 {
            return Err(invalid(
                "experiment.panels_per_step",
                format!("must be at least 32 (quadrature panel <= min(tau)/32), got {}", x.panels_per_step),
            ));
        }

        match self.reference {
            ReferenceSection::Analytic => {
                if !matches!(self.data, InitialDataSpec::PlaneWave { .. } | InitialDataSpec::Soliton) {
                    return Err(invalid(
                        "reference.kind",
                        format!("analytic reference needs plane_wave or soliton data, got {}", self.data.name()),
                    ));
                }
            }
            ReferenceSection::SelfConvergence { ratio, .. } => {
                if ratio < 2 {
                    return Err(invalid("reference.ratio", format!("must be at least 2, got {ratio}")));
                }
            }
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "must name at least one of json, csv, svg"));
        }
        Ok(())
    }

    fn normalise(&mut self) -> Result<(), CliError> {
        if self.experiment.pairs.is_none() {
            let q0r0 = admissible_q0r0(&self.params()?).map_err(|err| invalid("equation.p", err))?;
            self.experiment.pairs = Some(vec![q0r0.into(), AdmissiblePair::energy().into()]);
        }
        if let ReferenceSection::SelfConvergence { scheme, .. } = &mut self.reference {
            scheme.get_or_insert(self.scheme.kind);
        }
        Ok(())
    }

    /// The normalised config as JSON, as written into reports.
    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config is serialisable")
    }
}
