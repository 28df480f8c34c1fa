//! Demo, reconstruction and projector-verification commands.

use povm_core::bornrule::{born_probability, verify_projective_device, Observable, ProjectiveVerdict};
use povm_core::experiments::Variant;
use povm_core::gleason::{
    reconstruct_operator, reduce_two_dim, verify_gleason_premises, verify_quadratic_form, PremiseReport,
    QuadraticFormOracle,
};
use povm_core::linalg::ComplexMatrix;
use povm_core::qmodel::{max_entangled_state, meter_measure, HermitianOperator, PovmElement, PureState, Side, UnitaryGate};
use povm_core::rng::derive_stream;
use povm_core::{envariance_report, EnvarianceReport};
use serde::{Deserialize, Serialize};

use crate::error::CommandError;
use crate::report::{Measurement, Tabulate};
use crate::spec::{
    Check, DeviceChoice, ExperimentSpec, GateChoice, Position, SpecError, SpecErrorKind, DEFAULT_TRIALS,
    FORMAT_VERSION, LITERAL_TOL, MAX_DIMENSION,
};
use crate::suite::{
    envariance_rows, run_suite, RunReport, QUADRATIC_FORM_SAMPLES, QUADRATIC_FORM_TOL, RECONSTRUCT_TOL, REDUCE_TOL,
    SUM_RULE_BASES, SUM_RULE_TOL,
};

pub const DEFAULT_SEED: u64 = 0;
/// Source/meter trials in the meter-correlation demo.
pub const METER_DEMO_TRIALS: usize = 10_000;

fn check_demo_dimension(n: usize) -> Result<(), CommandError> {
    if (2..=MAX_DIMENSION).contains(&n) {
        Ok(())
    } else {
        Err(CommandError::InvalidConfig(format!("--n must lie in 2..={MAX_DIMENSION}, got {n}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvarianceDemo {
    pub dimension: usize,
    pub seed: u64,
    pub gate: ComplexMatrix,
    pub envariance: EnvarianceReport,
    pub measurements: Vec<Measurement>,
}

impl Tabulate for EnvarianceDemo {
    fn rows(&self) -> Vec<Measurement> {
        self.measurements.clone()
    }
    fn passed(&self) -> bool {
        self.measurements.iter().all(|m| m.pass)
    }
}

/// A Haar-random `U` on one particle undone by `U*` on the other.
pub fn demo_envariance(n: usize, seed: u64) -> Result<EnvarianceDemo, CommandError> {
    check_demo_dimension(n)?;
    let gate = UnitaryGate::haar_random(n, &mut derive_stream(seed, "gate", 0)).map_err(CommandError::from_core)?;
    let envariance = envariance_report(n, &gate).map_err(CommandError::from_core)?;
    let measurements = envariance_rows(n, &gate).map_err(CommandError::from_core)?;
    Ok(EnvarianceDemo {
        dimension: n,
        seed,
        gate: gate.matrix().clone(),
        envariance,
        measurements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeterDemo {
    pub dimension: usize,
    pub seed: u64,
    pub trials: usize,
    /// Lower-meter readings per outcome, 1-based order.
    pub counts: Vec<usize>,
    /// Trials in which the upper meter matched the lower one.
    pub coincidences: usize,
    pub measurements: Vec<Measurement>,
}

impl Tabulate for MeterDemo {
    fn rows(&self) -> Vec<Measurement> {
        self.measurements.clone()
    }
    fn passed(&self) -> bool {
        self.measurements.iter().all(|m| m.pass)
    }
}

/// Measures the lower particle of the entangled pair, then the upper one.
pub fn demo_meters(n: usize, seed: u64) -> Result<MeterDemo, CommandError> {
    check_demo_dimension(n)?;
    let psi = max_entangled_state(n).map_err(CommandError::from_core)?;
    let inert = PureState::basis(n, 1).map_err(CommandError::from_core)?;
    let mut rng = derive_stream(seed, "meters", 0);
    let mut counts = vec![0usize; n];
    let mut coincidences = 0;
    for _ in 0..METER_DEMO_TRIALS {
        let lower = meter_measure(&psi, Side::Lower, &mut rng).map_err(CommandError::from_core)?;
        let remote = lower.remote.expect("the entangled pair always leaves a remote state");
        let upper = meter_measure(&remote.tensor(&inert), Side::Upper, &mut rng).map_err(CommandError::from_core)?;
        counts[lower.outcome - 1] += 1;
        coincidences += usize::from(upper.outcome == lower.outcome);
    }
    let trials = METER_DEMO_TRIALS as f64;
    let uniform = 1.0 / n as f64;
    let band = 5.0 * (uniform * (1.0 - uniform) / trials).sqrt();
    let worst = counts
        .iter()
        .map(|&c| c as f64 / trials)
        .max_by(|a, b| (a - uniform).abs().total_cmp(&(b - uniform).abs()))
        .unwrap_or(uniform);
    Ok(MeterDemo {
        dimension: n,
        seed,
        trials: METER_DEMO_TRIALS,
        counts,
        coincidences,
        measurements: vec![
            Measurement::compare("coincidence-rate", 1.0, coincidences as f64 / trials, 0.0),
            Measurement::compare("reading-frequency", uniform, worst, band),
        ],
    })
}

/// Spec behind the basis-sum demo.
pub fn sum_rule_demo_spec(n: usize, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        format_version: FORMAT_VERSION,
        dimension: n,
        seed,
        device: DeviceChoice::RandomPovmElement,
        gate: GateChoice::HaarRandom,
        variants: Variant::ALL.to_vec(),
        trials: DEFAULT_TRIALS,
        checks: vec![Check::SumRule, Check::PermutationIdentity],
    }
}

/// Variants `a`–`c` on a random device plus the basis-sum checks.
pub fn demo_sum_rule(n: usize, seed: u64) -> Result<RunReport, CommandError> {
    check_demo_dimension(n)?;
    run_suite(&sum_rule_demo_spec(n, seed))
}

/// Operator file: `{"format_version": 1, "matrix": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    #[serde(alias = "version")]
    pub format_version: u32,
    pub matrix: ComplexMatrix,
}

pub fn parse_matrix_file(text: &str) -> Result<ComplexMatrix, SpecError> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| SpecError::from_json(&e))?;
    let field = |kind, message: String| SpecError {
        kind,
        position: Position::Field { field: "matrix".into() },
        message,
    };
    if file.format_version != FORMAT_VERSION {
        return Err(SpecError {
            kind: SpecErrorKind::UnsupportedVersion,
            position: Position::Field {
                field: "format_version".into(),
            },
            message: format!("unsupported format version {}", file.format_version),
        });
    }
    let m = file.matrix;
    if !m.is_square() || !(1..=MAX_DIMENSION).contains(&m.rows()) {
        return Err(field(
            SpecErrorKind::InvalidDimension,
            format!("expected a square matrix of size 1..={MAX_DIMENSION}, found {}x{}", m.rows(), m.cols()),
        ));
    }
    if m.hermiticity_defect() > LITERAL_TOL * m.max_abs().max(1.0) {
        return Err(field(
            SpecErrorKind::NonHermitian,
            format!("hermiticity defect {:e}", m.hermiticity_defect()),
        ));
    }
    Ok(m)
}

fn hermitian(m: ComplexMatrix) -> Result<HermitianOperator, CommandError> {
    HermitianOperator::with_tolerance(m, LITERAL_TOL).map_err(CommandError::from_core)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub dimension: usize,
    pub seed: u64,
    pub device: ComplexMatrix,
    pub reconstructed: ComplexMatrix,
    pub premises: PremiseReport,
    /// Two-dimensional devices are also recovered through the pair space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ComplexMatrix>,
    pub measurements: Vec<Measurement>,
}

impl Tabulate for ReconstructionReport {
    fn rows(&self) -> Vec<Measurement> {
        self.measurements.clone()
    }
    fn passed(&self) -> bool {
        self.measurements.iter().all(|m| m.pass)
    }
}

/// Recovers the operator behind a device's probability rule from probes alone.
pub fn reconstruct_device(matrix: ComplexMatrix, seed: u64) -> Result<ReconstructionReport, CommandError> {
    let device = PovmElement::with_tolerance(matrix, LITERAL_TOL).map_err(CommandError::from_core)?;
    let n = device.dimension();
    if n < 2 {
        return Err(CommandError::InvalidConfig("reconstruction needs dimension >= 2".into()));
    }
    let oracle = QuadraticFormOracle::from_device(&device);
    let mut rng = derive_stream(seed, "reconstruct", 0);
    let rebuilt = reconstruct_operator(&oracle).map_err(CommandError::from_core)?;
    let worst =
        verify_quadratic_form(&oracle, &rebuilt, QUADRATIC_FORM_SAMPLES, &mut rng).map_err(CommandError::from_core)?;
    let premises = verify_gleason_premises(&oracle, SUM_RULE_BASES, &mut rng).map_err(CommandError::from_core)?;
    let mut measurements = vec![
        Measurement::compare(
            "frobenius-error",
            0.0,
            rebuilt.matrix().frobenius_distance(device.matrix()),
            RECONSTRUCT_TOL,
        ),
        Measurement::compare("quadratic-form-max-error", 0.0, worst, QUADRATIC_FORM_TOL),
        Measurement::compare("basis-sum-spread", 0.0, premises.max_spread, SUM_RULE_TOL),
        Measurement::flag("nonnegative", true, premises.nonnegative),
    ];
    let reduced = if n == 2 {
        let r = reduce_two_dim(&oracle).map_err(CommandError::from_core)?;
        measurements.push(Measurement::compare(
            "reduced-vs-device",
            0.0,
            r.matrix().frobenius_distance(device.matrix()),
            REDUCE_TOL,
        ));
        Some(r.into_matrix())
    } else {
        None
    };
    Ok(ReconstructionReport {
        dimension: n,
        seed,
        device: device.matrix().clone(),
        reconstructed: rebuilt.into_matrix(),
        premises,
        reduced,
        measurements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornReport {
    pub lambda: f64,
    pub observable_eigenvalues: Vec<f64>,
    pub verdict: ProjectiveVerdict,
    /// Flash probability of each basis state of the observable's eigenbasis,
    /// predicted by the projector onto the `λ` eigenspace.
    pub born_probabilities: Vec<f64>,
    pub measurements: Vec<Measurement>,
}

impl Tabulate for BornReport {
    fn rows(&self) -> Vec<Measurement> {
        self.measurements.clone()
    }
    fn passed(&self) -> bool {
        self.verdict.is_projector
    }
}

/// Checks whether `device` can be a device that measures `observable` and
/// flashes on outcome `lambda`.
pub fn verify_born(device: ComplexMatrix, observable: ComplexMatrix, lambda: f64) -> Result<BornReport, CommandError> {
    if device.rows() != observable.rows() {
        return Err(SpecError {
            kind: SpecErrorKind::DimensionMismatch,
            position: Position::Field { field: "matrix".into() },
            message: format!(
                "device is {}x{} but the observable is {}x{}",
                device.rows(),
                device.cols(),
                observable.rows(),
                observable.cols()
            ),
        }
        .into());
    }
    let a = hermitian(device)?;
    let o = Observable::new(hermitian(observable)?.into_matrix()).map_err(CommandError::from_core)?;
    let verdict = verify_projective_device(&a, &o, lambda).map_err(CommandError::from_core)?;
    let vectors = &o.spectrum().eigenvectors;
    let born_probabilities = (0..vectors.cols())
        .map(|j| {
            let psi = PureState::normalized(vectors.column(j))?;
            born_probability(&o, lambda, &psi)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CommandError::from_core)?;
    let tol = verdict.tolerance;
    let measurements = vec![
        Measurement::flag("projector", true, verdict.is_projector),
        Measurement::flag("diagonal", true, verdict.diagonal_ok),
        Measurement::flag("eigenvalue-bounds", true, verdict.eigenvalue_bounds_ok),
        Measurement::compare("offdiag-mass", 0.0, verdict.offdiag_mass, tol),
        Measurement::compare("trace-identity", verdict.trace_identity.rhs, verdict.trace_identity.lhs, tol),
        Measurement::compare(
            "frobenius-identity",
            verdict.frobenius_identity.rhs,
            verdict.frobenius_identity.lhs,
            tol,
        ),
        Measurement::compare("distance-to-projector", 0.0, verdict.distance_to_projector, tol),
    ];
    Ok(BornReport {
        lambda,
        observable_eigenvalues: o.eigenvalues(),
        verdict,
        born_probabilities,
        measurements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use povm_core::Complex64;

    #[test]
    fn envariance_demo_passes() {
        for n in 2..=6 {
            assert!(demo_envariance(n, 5).unwrap().passed());
        }
    }

    #[test]
    fn meter_demo_readings_always_coincide() {
        let d = demo_meters(3, 1).unwrap();
        assert_eq!(d.coincidences, d.trials);
        assert_eq!(d.counts.iter().sum::<usize>(), d.trials);
        assert!(d.passed(), "{d:?}");
    }

    #[test]
    fn demo_rejects_tiny_dimension() {
        assert!(matches!(demo_envariance(1, 0), Err(CommandError::InvalidConfig(_))));
    }

    #[test]
    fn matrix_file_parsing() {
        let m = parse_matrix_file(r#"{"format_version":1,"matrix":[[0.5,[0,0.5]],[[0,-0.5],0.5]]}"#).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 0.5));
        let err = parse_matrix_file(r#"{"format_version":1,"matrix":[[0,1],[0,0]]}"#).unwrap_err();
        assert_eq!(err.kind, SpecErrorKind::NonHermitian);
        let err = parse_matrix_file(r#"{"format_version":1,"matrix":[[0,1]]}"#).unwrap_err();
        assert_eq!(err.kind, SpecErrorKind::InvalidDimension);
        let err = parse_matrix_file(r#"{"format_version":1,"matrix":[[1]],"extra":0}"#).unwrap_err();
        assert_eq!(err.kind, SpecErrorKind::UnknownField);
    }

    #[test]
    fn reconstruct_two_dim_includes_reduction() {
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.75, 0.0), Complex64::new(0.0, 0.25)],
            vec![Complex64::new(0.0, -0.25), Complex64::new(0.25, 0.0)],
        ])
        .unwrap();
        let r = reconstruct_device(m, 0).unwrap();
        assert!(r.reduced.is_some());
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn born_verdicts() {
        let o = ComplexMatrix::from_diagonal(&[1.0, 1.0, 2.0]);
        let p = ComplexMatrix::from_diagonal(&[1.0, 1.0, 0.0]);
        let r = verify_born(p, o.clone(), 1.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.born_probabilities, vec![1.0, 1.0, 0.0]);
        let r = verify_born(ComplexMatrix::from_diagonal(&[0.5, 0.5, 0.0]), o.clone(), 1.0).unwrap();
        assert!(!r.passed());
        assert!(matches!(
            verify_born(ComplexMatrix::identity(3), o, 3.0),
            Err(CommandError::Input(_))
        ));
    }
}
