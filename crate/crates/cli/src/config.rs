//! Experiment configuration: a JSON document describing the model, the
//! driving protocol, propagation settings, an optional sweep and the output.

use std::path::{Path, PathBuf};

use pseudotherm::dynamics::{Integrator, MetricSource, PropagationSettings, Protocol};
use pseudotherm::models::{Boundary, ModelSpec, OscillatorParams};
use pseudotherm::thermo::CycleSpec;
use pseudotherm::Tolerances;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    TwoLevel {
        #[serde(default = "one")]
        gamma: f64,
    },
    Oscillator {
        xi: f64,
        n_basis: usize,
        /// Frequency of the fixed Fock basis; defaults to the protocol's start value.
        #[serde(default)]
        omega_ref: Option<f64>,
    },
    HatanoNelson {
        length: usize,
        alpha: f64,
        #[serde(default)]
        potential: Vec<f64>,
        boundary: BoundaryConfig,
        #[serde(default = "one")]
        hopping: f64,
    },
    /// A fixed matrix read from a text file (spectrum and metric only).
    Matrix { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConfig {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    Linear { start: f64, end: f64, duration: f64 },
    Erf { start: f64, end: f64, duration: f64, window: u32 },
    Constant { value: f64, duration: f64 },
    Tabulated { samples: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorConfig {
    Rk4,
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSourceConfig {
    Analytic,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub metric_source: Option<MetricSourceConfig>,
}

fn default_steps() -> usize {
    64
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_max_steps() -> usize {
    1 << 17
}
fn default_integrator() -> IntegratorConfig {
    IntegratorConfig::Rk4
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { steps: default_steps(), tolerance: default_tolerance(), max_steps: default_max_steps(), integrator: default_integrator(), metric_source: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Protocol duration τ.
    Duration,
    /// Protocol start value.
    Start,
    /// Protocol end value.
    End,
    Beta,
    /// Fixed control value for spectrum and metric runs.
    Control,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Duration => "tau",
            SweepParameter::Start => "start",
            SweepParameter::End => "end",
            SweepParameter::Beta => "beta",
            SweepParameter::Control => "control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub range: Option<RangeConfig>,
}

impl SweepConfig {
    /// Explicit values, or the points of `range` with both ends included.
    pub fn points(&self) -> Vec<f64> {
        match &self.range {
            None => self.values.clone(),
            Some(r) => (0..r.count)
                .map(|k| {
                    let s = if r.count == 1 { 0.0 } else { k as f64 / (r.count - 1) as f64 };
                    match r.spacing {
                        Spacing::Linear => r.start + s * (r.stop - r.start),
                        Spacing::Log => (r.start.ln() + s * (r.stop.ln() - r.start.ln())).exp(),
                    }
                })
                .collect(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.range {
            None => format!("{} values of {}", self.values.len(), self.parameter.name()),
            Some(r) => format!("{:?} grid of {} over [{}, {}] with {} points", r.spacing, self.parameter.name(), r.start, r.stop, r.count).to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("output")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), emit_svg: false }
    }
}

/// Carnot engine on the two-level family H = [[iλ, γ], [γ, −iλ]]; corners
/// are (γ, λ) pairs for A, B, C, D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    pub t_hot: f64,
    pub t_cold: f64,
    pub corners: [[f64; 2]; 4],
    pub steps: usize,
}

impl CycleConfig {
    pub fn spec(&self) -> CycleSpec {
        CycleSpec { t_hot: self.t_hot, t_cold: self.t_cold, corners: self.corners.map(|c| c.to_vec()), steps: self.steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Largest accepted |⟨e^{−βW}⟩ Z₀/Z_τ − 1|.
    #[serde(default = "default_jarzynski")]
    pub jarzynski_residual: f64,
    /// Smallest accepted ⟨W_irr⟩.
    #[serde(default = "default_floor")]
    pub irreversible_work_floor: f64,
}

fn default_jarzynski() -> f64 {
    1e-5
}
fn default_floor() -> f64 {
    -1e-8
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self { jarzynski_residual: default_jarzynski(), irreversible_work_floor: default_floor() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    /// Control value for spectrum and metric runs without a protocol.
    #[serde(default)]
    pub control: Option<f64>,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cycle: Option<CycleConfig>,
    /// Number of random states drawn by fig2-right.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub checks: ChecksConfig,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid { field: field.to_string(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        let mut cfg = Self::from_json(&text)?;
        // matrix paths are relative to the config file
        if let ModelConfig::Matrix { path: m } = &mut cfg.model {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    *m = dir.join(&*m);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("beta", self.beta)?;
        positive("hbar", self.hbar)?;
        positive("mass", self.mass)?;
        match &self.model {
            ModelConfig::TwoLevel { gamma } => positive("model.gamma", *gamma)?,
            ModelConfig::Oscillator { xi, n_basis, omega_ref } => {
                finite("model.xi", *xi)?;
                if *n_basis < 8 {
                    return Err(invalid("model.n_basis", format!("must be at least 8, got {n_basis}")));
                }
                if let Some(w) = omega_ref {
                    positive("model.omega_ref", *w)?;
                }
            }
            ModelConfig::HatanoNelson { length, alpha, potential, hopping, .. } => {
                if *length < 2 {
                    return Err(invalid("model.length", format!("must be at least 2, got {length}")));
                }
                finite("model.alpha", *alpha)?;
                finite("model.hopping", *hopping)?;
                if !potential.is_empty() && potential.len() != *length {
                    return Err(invalid("model.potential", format!("needs {length} entries, got {}", potential.len())));
                }
                if let Some(v) = potential.iter().find(|v| !v.is_finite()) {
                    return Err(invalid("model.potential", format!("must be finite, got {v}")));
                }
            }
            ModelConfig::Matrix { .. } => {}
        }
        if let Some(p) = &self.protocol {
            match p {
                ProtocolConfig::Linear { start, end, duration } | ProtocolConfig::Erf { start, end, duration, .. } => {
                    finite("protocol.start", *start)?;
                    finite("protocol.end", *end)?;
                    positive("protocol.duration", *duration)?;
                }
                ProtocolConfig::Constant { value, duration } => {
                    finite("protocol.value", *value)?;
                    positive("protocol.duration", *duration)?;
                }
                ProtocolConfig::Tabulated { samples } => {
                    if samples.len() < 2 {
                        return Err(invalid("protocol.samples", "needs at least two samples"));
                    }
                }
            }
            if let ProtocolConfig::Erf { window: 0, .. } = p {
                return Err(invalid("protocol.window", "must be a positive integer"));
            }
        }
        if let Some(c) = self.control {
            finite("control", c)?;
        }
        let pc = &self.propagation;
        positive("propagation.tolerance", pc.tolerance)?;
        if pc.steps == 0 {
            return Err(invalid("propagation.steps", "must be positive"));
        }
        if pc.max_steps < pc.steps {
            return Err(invalid("propagation.max_steps", format!("must be at least steps = {}", pc.steps)));
        }
        if let Some(s) = &self.sweep {
            match (&s.range, s.values.is_empty()) {
                (Some(_), false) => return Err(invalid("sweep", "give either values or range, not both")),
                (None, true) => return Err(invalid("sweep.values", "must not be empty")),
                (Some(r), true) => {
                    if r.count == 0 {
                        return Err(invalid("sweep.range.count", "must be positive"));
                    }
                    finite("sweep.range.start", r.start)?;
                    finite("sweep.range.stop", r.stop)?;
                    if r.spacing == Spacing::Log {
                        positive("sweep.range.start", r.start)?;
                        positive("sweep.range.stop", r.stop)?;
                    }
                }
                (None, false) => {
                    if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
                        return Err(invalid("sweep.values", format!("must be finite, got {v}")));
                    }
                }
            }
        }
        if let Some(c) = &self.cycle {
            positive("cycle.t_hot", c.t_hot)?;
            positive("cycle.t_cold", c.t_cold)?;
            if c.t_cold >= c.t_hot {
                return Err(invalid("cycle.t_cold", "must be below t_hot"));
            }
            if c.steps < 100 {
                return Err(invalid("cycle.steps", format!("must be at least 100, got {}", c.steps)));
            }
        }
        if self.samples == Some(0) {
            return Err(invalid("samples", "must be positive"));
        }
        positive("checks.jarzynski_residual", self.checks.jarzynski_residual)?;
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn protocol(&self) -> Result<Protocol, CliError> {
        let p = self.protocol.as_ref().ok_or_else(|| invalid("protocol", "required for this subcommand"))?;
        Ok(match p {
            ProtocolConfig::Linear { start, end, duration } => Protocol::linear(*start, *end, *duration)?,
            ProtocolConfig::Erf { start, end, duration, window } => Protocol::erf(*start, *end, *duration, *window)?,
            ProtocolConfig::Constant { value, duration } => Protocol::constant(*value, *duration)?,
            ProtocolConfig::Tabulated { samples } => Protocol::tabulated(samples.iter().map(|s| (s[0], s[1])).collect())?,
        })
    }

    pub fn model(&self) -> Result<ModelSpec, CliError> {
        Ok(match &self.model {
            ModelConfig::TwoLevel { gamma } => ModelSpec::TwoLevel { gamma: *gamma },
            ModelConfig::Oscillator { xi, n_basis, omega_ref } => {
                let omega_ref = match omega_ref {
                    Some(w) => *w,
                    None => match &self.protocol {
                        Some(ProtocolConfig::Linear { start, .. } | ProtocolConfig::Erf { start, .. }) => *start,
                        Some(ProtocolConfig::Constant { value, .. }) => *value,
                        Some(ProtocolConfig::Tabulated { samples }) => samples[0][1],
                        None => self.control.unwrap_or(1.0),
                    },
                };
                ModelSpec::oscillator(OscillatorParams { xi: *xi, mass: self.mass, hbar: self.hbar, n_basis: *n_basis, omega_ref })?
            }
            ModelConfig::HatanoNelson { length, alpha, potential, boundary, .. } => {
                let v = if potential.is_empty() { vec![0.0; *length] } else { potential.clone() };
                let b = match boundary {
                    BoundaryConfig::Open => Boundary::Open,
                    BoundaryConfig::Periodic => Boundary::Periodic,
                };
                ModelSpec::hatano_nelson(*length, *alpha, v, b)?
            }
            ModelConfig::Matrix { .. } => return Err(invalid("model.kind", "a fixed matrix cannot be driven")),
        })
    }

    /// Control value for static runs: `control`, else the protocol start,
    /// else the model's natural default.
    pub fn static_control(&self) -> f64 {
        if let Some(c) = self.control {
            return c;
        }
        match &self.protocol {
            Some(ProtocolConfig::Linear { start, .. } | ProtocolConfig::Erf { start, .. }) => return *start,
            Some(ProtocolConfig::Constant { value, .. }) => return *value,
            Some(ProtocolConfig::Tabulated { samples }) => return samples[0][1],
            None => {}
        }
        match &self.model {
            ModelConfig::TwoLevel { .. } | ModelConfig::Matrix { .. } => 0.0,
            ModelConfig::Oscillator { omega_ref, .. } => omega_ref.unwrap_or(1.0),
            ModelConfig::HatanoNelson { hopping, .. } => *hopping,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { propagation: self.propagation.tolerance, ..Tolerances::default() }
    }

    pub fn settings(&self) -> PropagationSettings {
        let pc = &self.propagation;
        PropagationSettings {
            hbar: self.hbar,
            steps: pc.steps,
            max_steps: pc.max_steps,
            integrator: match pc.integrator {
                IntegratorConfig::Rk4 => Integrator::Rk4,
                IntegratorConfig::Magnus4 => Integrator::Magnus4,
            },
            metric_source: pc.metric_source.map(|m| match m {
                MetricSourceConfig::Analytic => MetricSource::Analytic,
                MetricSourceConfig::Spectral => MetricSource::Spectral,
            }),
            tolerances: self.tolerances(),
        }
    }

    /// Copy with one sweep parameter replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self, CliError> {
        let mut c = self.clone();
        match parameter {
            SweepParameter::Beta => c.beta = value,
            SweepParameter::Control => c.control = Some(value),
            SweepParameter::Duration | SweepParameter::Start | SweepParameter::End => {
                let p = c.protocol.as_mut().ok_or_else(|| invalid("sweep.parameter", "protocol sweeps need a protocol"))?;
                match (p, parameter) {
                    (ProtocolConfig::Linear { duration, .. } | ProtocolConfig::Erf { duration, .. } | ProtocolConfig::Constant { duration, .. }, SweepParameter::Duration) => *duration = value,
                    (ProtocolConfig::Linear { start, .. } | ProtocolConfig::Erf { start, .. }, SweepParameter::Start) => *start = value,
                    (ProtocolConfig::Linear { end, .. } | ProtocolConfig::Erf { end, .. }, SweepParameter::End) => *end = value,
                    _ => return Err(invalid("sweep.parameter", format!("{} cannot be swept for this protocol", parameter.name()))),
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model": {"kind": "two_level"}, "protocol": {"kind": "linear", "start": 0, "end": 0.5, "duration": 1}}"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.beta, 1.0);
        assert_eq!(c.model, ModelConfig::TwoLevel { gamma: 1.0 });
        assert_eq!(c.propagation, PropagationConfig::default());
        assert_eq!(c.static_control(), 0.0);
    }

    #[test]
    fn empty_sweep_names_the_field() {
        let text = r#"{"model": {"kind": "two_level"}, "sweep": {"parameter": "end", "values": []}}"#;
        match ExperimentConfig::from_json(text) {
            Err(CliError::Invalid { field, .. }) => assert_eq!(field, "sweep.values"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let text = "{\n  \"model\": {\"kind\": \"two_level\"},\n  \"bta\": 1\n}";
        match ExperimentConfig::from_json(text) {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("bta"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cases = [
            (r#"{"model": {"kind": "two_level"}, "beta": -1}"#, "beta"),
            (r#"{"model": {"kind": "oscillator", "xi": 1, "n_basis": 4}}"#, "model.n_basis"),
            (r#"{"model": {"kind": "two_level"}, "propagation": {"tolerance": 0}}"#, "propagation.tolerance"),
            (r#"{"model": {"kind": "hatano_nelson", "length": 4, "alpha": 0.5, "boundary": "open", "potential": [1, 2]}}"#, "model.potential"),
            (r#"{"model": {"kind": "two_level"}, "sweep": {"parameter": "tau", "values": [1]}}"#, ""),
        ];
        for (text, field) in cases {
            match ExperimentConfig::from_json(text) {
                Err(CliError::Invalid { field: f, .. }) => assert_eq!(f, field),
                Err(CliError::Parse { .. }) => assert_eq!(field, ""),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn log_range_includes_both_ends() {
        let s = SweepConfig { parameter: SweepParameter::Duration, values: vec![], range: Some(RangeConfig { start: 0.1, stop: 30.0, count: 25, spacing: Spacing::Log }) };
        let p = s.points();
        assert_eq!(p.len(), 25);
        assert!((p[0] - 0.1).abs() < 1e-15 && (p[24] - 30.0).abs() < 1e-12);
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let b = ExperimentConfig::from_json(&MINIMAL.replace(' ', "\n  ")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let c = a.with_parameter(SweepParameter::End, 0.6).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
