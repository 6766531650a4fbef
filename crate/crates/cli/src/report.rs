use affinedim_core::{
    Entropy, ExtendedReal, FengBounds, LyapunovDimension, LyapunovSpectrum, PressureCurve, PressureZero,
    ProjectionEntropy, SInfinity, TruncationReport,
};
use serde::{Deserialize, Serialize};

use crate::spec::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Analyze,
    Simulate,
    Pressure,
    Examples,
}

/// Everything one command computed. Re-running with the same spec and seed
/// reproduces every field except `timings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputsEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeResults>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<PressureResults>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateResults>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples: Option<ExamplesResults>,
    /// Quantities that were skipped and why.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub provenance: Provenance,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(command: CommandKind, seed: u64) -> Self {
        RunReport {
            command,
            inputs: None,
            analyze: None,
            pressure: None,
            simulate: None,
            examples: None,
            notes: Vec::new(),
            provenance: Provenance { seed, version: env!("CARGO_PKG_VERSION").to_string() },
            timings: Timings::default(),
        }
    }

    /// The report with wall time and thread count zeroed, for comparisons.
    pub fn without_timings(&self) -> Self {
        RunReport { timings: Timings::default(), ..self.clone() }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// The spec as read, plus what resolution did to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputsEcho {
    pub spec: SystemSpec,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_sup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_symbols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_family: Option<String>,
    /// Truncation of a countable weight family, with its mass deficit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurePressurePoint {
    pub s: f64,
    pub energy: ExtendedReal,
    pub measure_pressure: ExtendedReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResults {
    pub entropy: Entropy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<LyapunovSpectrum>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measure_pressure: Vec<MeasurePressurePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_dimension: Option<LyapunovDimension>,
    /// `min{d, dim_LY}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_local_dimension: Option<f64>,
    /// `sup ‖A_i‖ < 1/2`, the norm condition under which the local dimension
    /// is `min{d, dim_LY}` for almost every translation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem_applicable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_infinity: Option<SInfinity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureResults {
    pub max_level: usize,
    pub curve: PressureCurve,
    pub zero: PressureZero,
    pub s_infinity: SInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawKind {
    Random,
    Zero,
    Spec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    pub index: usize,
    pub kind: DrawKind,
    pub seed: u64,
    pub n_points: usize,
    pub depth: usize,
    pub truncation_error: f64,
    pub diameter: f64,
    /// Empty when the cloud collapsed.
    pub radii: Vec<f64>,
    pub centers: usize,
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    /// The cloud fits inside twice its truncation error: a point mass.
    pub collapsed: bool,
    /// Median slope more than the tolerance below the prediction.
    pub exceptional: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_tolerance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_dimension: Option<LyapunovDimension>,
    /// `min{d, dim_LY}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tolerance: f64,
    pub draws: Vec<DrawSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_entropy: Option<ProjectionEntropy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feng_bounds: Option<FengBounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleCheck {
    pub example: String,
    pub check: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
    /// Reported but not counted as a regression.
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplesResults {
    pub checks: Vec<ExampleCheck>,
    pub failures: usize,
}
