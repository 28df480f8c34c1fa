//! Experiment-spec files.
//!
//! A spec is a JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "dimension": 3,
//!   "seed": 42,
//!   "device": "random-povm-element",
//!   "gate": "haar-random",
//!   "variants": ["a", "b", "c"],
//!   "trials": 100000,
//!   "checks": ["envariance", "sum-rule", "reconstruct", "reduce-2d", "born-verify", "permutation-identity"]
//! }
//! ```
//!
//! `device` and `gate` are either a name or a row-major matrix literal whose
//! entries are `[re, im]` pairs or bare reals. `version` is accepted as an
//! alias of `format_version`.

use std::fmt;

use povm_core::experiments::Variant;
use povm_core::linalg::ComplexMatrix;
use povm_core::{Error as CoreError, PovmElement, UnitaryGate};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TRIALS: usize = 100_000;
pub const MAX_DIMENSION: usize = 64;
/// Validation tolerance for matrix literals read from files.
pub const LITERAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Envariance,
    SumRule,
    Reconstruct,
    #[serde(rename = "reduce-2d")]
    Reduce2d,
    BornVerify,
    PermutationIdentity,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Envariance,
        Check::SumRule,
        Check::Reconstruct,
        Check::Reduce2d,
        Check::BornVerify,
        Check::PermutationIdentity,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Check::Envariance => "envariance",
            Check::SumRule => "sum-rule",
            Check::Reconstruct => "reconstruct",
            Check::Reduce2d => "reduce-2d",
            Check::BornVerify => "born-verify",
            Check::PermutationIdentity => "permutation-identity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceChoice {
    Identity,
    RankOneRandom,
    RandomPovmElement,
    /// `|k⟩⟨k|`, 1-based.
    Projector(usize),
    Literal(PovmElement),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateChoice {
    Identity,
    Hadamard,
    PauliX,
    Fourier,
    HaarRandom,
    Literal(UnitaryGate),
}

/// Validated experiment spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ExperimentSpec {
    pub format_version: u32,
    pub dimension: usize,
    pub seed: u64,
    pub device: DeviceChoice,
    pub gate: GateChoice,
    /// Sorted, without duplicates.
    pub variants: Vec<Variant>,
    /// Monte-Carlo trials per variant; 0 runs exact evaluation only.
    pub trials: usize,
    /// Sorted, without duplicates.
    pub checks: Vec<Check>,
}

impl ExperimentSpec {
    /// Spec with default device, gate, variants, trials and checks.
    pub fn with_defaults(dimension: usize, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dimension,
            seed,
            device: DeviceChoice::RandomPovmElement,
            gate: GateChoice::HaarRandom,
            variants: Variant::ALL.to_vec(),
            trials: DEFAULT_TRIALS,
            checks: Check::ALL.to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectRepr {
    Name(String),
    Matrix(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    #[serde(alias = "version")]
    pub format_version: u32,
    pub dimension: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<ObjectRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<ObjectRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<Variant>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecErrorKind {
    Syntax,
    Schema,
    UnknownField,
    UnknownName,
    IncompatibleGate,
    NonUnitary,
    NonHermitian,
    DeviceOutOfRange,
    DimensionMismatch,
    InvalidDimension,
    UnsupportedVersion,
}

impl SpecErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            SpecErrorKind::Syntax => "E001",
            SpecErrorKind::Schema => "E002",
            SpecErrorKind::UnknownField => "E003",
            SpecErrorKind::UnknownName => "E004",
            SpecErrorKind::IncompatibleGate => "E005",
            SpecErrorKind::NonUnitary => "E006",
            SpecErrorKind::NonHermitian => "E007",
            SpecErrorKind::DeviceOutOfRange => "E008",
            SpecErrorKind::DimensionMismatch => "E009",
            SpecErrorKind::InvalidDimension => "E010",
            SpecErrorKind::UnsupportedVersion => "E011",
        }
    }
}

/// Where in the input a problem was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Position {
    Text { line: usize, column: usize },
    Field { field: String },
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Text { line, column } => write!(f, "line {line}, column {column}"),
            Position::Field { field } => write!(f, "field `{field}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecError {
    pub kind: SpecErrorKind,
    pub position: Position,
    pub message: String,
}

impl SpecError {
    fn at_field(kind: SpecErrorKind, field: &str, message: impl Into<String>) -> Self {
        Self {
            kind,
            position: Position::Field { field: field.into() },
            message: message.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        self.kind.code()
    }

    /// Classifies a JSON decoding failure.
    pub fn from_json(err: &serde_json::Error) -> Self {
        use serde_json::error::Category;
        let message = err.to_string();
        let kind = match err.classify() {
            Category::Syntax | Category::Eof | Category::Io => SpecErrorKind::Syntax,
            Category::Data if message.starts_with("unknown field") => SpecErrorKind::UnknownField,
            Category::Data if message.starts_with("unknown variant") => SpecErrorKind::UnknownName,
            Category::Data => SpecErrorKind::Schema,
        };
        Self {
            kind,
            position: Position::Text {
                line: err.line(),
                column: err.column(),
            },
            message,
        }
    }
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code(), self.position, self.message)
    }
}

impl std::error::Error for SpecError {}

/// Parses and validates a spec document.
pub fn parse_experiment_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| SpecError::from_json(&e))?;
    ExperimentSpec::try_from(raw)
}

impl TryFrom<RawSpec> for ExperimentSpec {
    type Error = SpecError;

    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        if raw.format_version != FORMAT_VERSION {
            return Err(SpecError::at_field(
                SpecErrorKind::UnsupportedVersion,
                "format_version",
                format!("unsupported format version {} (expected {FORMAT_VERSION})", raw.format_version),
            ));
        }
        let n = raw.dimension;
        if !(2..=MAX_DIMENSION).contains(&n) {
            return Err(SpecError::at_field(
                SpecErrorKind::InvalidDimension,
                "dimension",
                format!("dimension {n} outside 2..={MAX_DIMENSION}"),
            ));
        }
        let device = match raw.device {
            None => DeviceChoice::RandomPovmElement,
            Some(repr) => parse_device(repr, n)?,
        };
        let gate = match raw.gate {
            None => GateChoice::HaarRandom,
            Some(repr) => parse_gate(repr, n)?,
        };
        let mut variants = raw.variants.unwrap_or_else(|| Variant::ALL.to_vec());
        variants.sort();
        variants.dedup();
        let mut checks = raw.checks.unwrap_or_else(|| Check::ALL.to_vec());
        checks.sort();
        checks.dedup();
        Ok(Self {
            format_version: raw.format_version,
            dimension: n,
            seed: raw.seed,
            device,
            gate,
            variants,
            trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
            checks,
        })
    }
}

impl From<ExperimentSpec> for RawSpec {
    fn from(spec: ExperimentSpec) -> Self {
        let device = match spec.device {
            DeviceChoice::Identity => ObjectRepr::Name("identity".into()),
            DeviceChoice::RankOneRandom => ObjectRepr::Name("rank1-random".into()),
            DeviceChoice::RandomPovmElement => ObjectRepr::Name("random-povm-element".into()),
            DeviceChoice::Projector(k) => ObjectRepr::Name(format!("projector:{k}")),
            DeviceChoice::Literal(e) => ObjectRepr::Matrix(e.matrix().clone()),
        };
        let gate = match spec.gate {
            GateChoice::Identity => ObjectRepr::Name("identity".into()),
            GateChoice::Hadamard => ObjectRepr::Name("hadamard".into()),
            GateChoice::PauliX => ObjectRepr::Name("pauli-x".into()),
            GateChoice::Fourier => ObjectRepr::Name("fourier".into()),
            GateChoice::HaarRandom => ObjectRepr::Name("haar-random".into()),
            GateChoice::Literal(g) => ObjectRepr::Matrix(g.matrix().clone()),
        };
        RawSpec {
            format_version: spec.format_version,
            dimension: spec.dimension,
            seed: spec.seed,
            device: Some(device),
            gate: Some(gate),
            variants: Some(spec.variants),
            trials: Some(spec.trials),
            checks: Some(spec.checks),
        }
    }
}

fn check_literal_shape(m: &ComplexMatrix, n: usize, field: &str) -> Result<(), SpecError> {
    if m.rows() != n || m.cols() != n {
        return Err(SpecError::at_field(
            SpecErrorKind::DimensionMismatch,
            field,
            format!("expected a {n}x{n} matrix, found {}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

fn parse_device(repr: ObjectRepr, n: usize) -> Result<DeviceChoice, SpecError> {
    match repr {
        ObjectRepr::Name(name) => match name.as_str() {
            "identity" => Ok(DeviceChoice::Identity),
            "rank1-random" => Ok(DeviceChoice::RankOneRandom),
            "random-povm-element" => Ok(DeviceChoice::RandomPovmElement),
            other => {
                let Some(index) = other.strip_prefix("projector:") else {
                    return Err(SpecError::at_field(
                        SpecErrorKind::UnknownName,
                        "device",
                        format!("unknown device `{other}`"),
                    ));
                };
                let k: usize = index.parse().map_err(|_| {
                    SpecError::at_field(SpecErrorKind::UnknownName, "device", format!("bad basis index in `{other}`"))
                })?;
                if k == 0 || k > n {
                    return Err(SpecError::at_field(
                        SpecErrorKind::DimensionMismatch,
                        "device",
                        format!("basis index {k} outside 1..={n}"),
                    ));
                }
                Ok(DeviceChoice::Projector(k))
            }
        },
        ObjectRepr::Matrix(m) => {
            check_literal_shape(&m, n, "device")?;
            PovmElement::with_tolerance(m, LITERAL_TOL)
                .map(DeviceChoice::Literal)
                .map_err(|e| {
                    let kind = match e {
                        CoreError::NotHermitian { .. } => SpecErrorKind::NonHermitian,
                        _ => SpecErrorKind::DeviceOutOfRange,
                    };
                    SpecError::at_field(kind, "device", e.to_string())
                })
        }
    }
}

fn parse_gate(repr: ObjectRepr, n: usize) -> Result<GateChoice, SpecError> {
    match repr {
        ObjectRepr::Name(name) => {
            let choice = match name.as_str() {
                "identity" => GateChoice::Identity,
                "hadamard" => GateChoice::Hadamard,
                "pauli-x" => GateChoice::PauliX,
                "fourier" => GateChoice::Fourier,
                "haar-random" => GateChoice::HaarRandom,
                other => {
                    return Err(SpecError::at_field(
                        SpecErrorKind::UnknownName,
                        "gate",
                        format!("unknown gate `{other}`"),
                    ))
                }
            };
            if matches!(choice, GateChoice::Hadamard | GateChoice::PauliX) && n != 2 {
                return Err(SpecError::at_field(
                    SpecErrorKind::IncompatibleGate,
                    "gate",
                    format!("gate `{name}` needs dimension 2, spec has {n}"),
                ));
            }
            Ok(choice)
        }
        ObjectRepr::Matrix(m) => {
            check_literal_shape(&m, n, "gate")?;
            UnitaryGate::with_tolerance(m, LITERAL_TOL)
                .map(GateChoice::Literal)
                .map_err(|e| SpecError::at_field(SpecErrorKind::NonUnitary, "gate", e.to_string()))
        }
    }
}
