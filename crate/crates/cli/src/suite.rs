//! Running an experiment spec end to end.

use std::time::Instant;

use povm_core::bornrule::{born_probability, projector_onto_eigenspace, verify_projective_device, Observable};
use povm_core::experiments::{
    basis_sum_check, exact_probability, monte_carlo_probability, verify_permutation_identity, Branch, ExperimentConfig,
    MonteCarloEstimate, Variant, MAX_PERMUTATION_LEN,
};
use povm_core::gleason::{reconstruct_operator, reduce_two_dim, verify_quadratic_form, QuadraticFormOracle};
use povm_core::linalg::ComplexMatrix;
use povm_core::qmodel::{device_probability, HermitianOperator, PovmElement, PureState, UnitaryGate};
use povm_core::rng::derive_stream;
use povm_core::{envariance_report, Complex64, Error as CoreError};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CommandError;
use crate::report::{qualify, Measurement, Tabulate};
use crate::spec::{Check, DeviceChoice, ExperimentSpec, GateChoice, FORMAT_VERSION};

/// Exact probabilities of different variants must agree this closely.
pub const AGREEMENT_TOL: f64 = 1e-12;
/// Half-width, in standard errors, of the accepted Monte-Carlo band.
pub const SAMPLING_BAND: f64 = 5.0;
pub const ENVARIANCE_TOL: f64 = 1e-12;
pub const SUM_RULE_TOL: f64 = 1e-10;
pub const SUM_RULE_BASES: usize = 20;
pub const RECONSTRUCT_TOL: f64 = 1e-10;
pub const QUADRATIC_FORM_TOL: f64 = 1e-12;
pub const QUADRATIC_FORM_SAMPLES: usize = 1000;
pub const REDUCE_TOL: f64 = 1e-10;
pub const BORN_TOL: f64 = 1e-10;
/// Size of the off-diagonal defect planted in the perturbed device.
pub const BORN_PERTURBATION: f64 = 1e-2;
pub const PERMUTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock time per section. Timed reports are not reproducible.
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEntry {
    pub variant: Variant,
    pub exact: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<MonteCarloEstimate>,
    /// Exact value against the variant-`a` reference.
    pub agreement: Measurement,
    /// Sampled value against this variant's exact value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Measurement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// The check could not be evaluated for this configuration.
    Unsupported,
    /// A numerical routine failed (no convergence, non-finite values).
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckFailure {
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub check: Check,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<CheckFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionTiming {
    pub section: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub spec: ExperimentSpec,
    /// Device and gate after resolving names and random draws.
    pub device: ComplexMatrix,
    pub gate: ComplexMatrix,
    /// Variant-`a` flash probability.
    pub reference_probability: f64,
    pub probabilities: Vec<ProbabilityEntry>,
    pub checks: Vec<CheckEntry>,
    pub all_passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<SectionTiming>>,
}

impl Tabulate for RunReport {
    fn rows(&self) -> Vec<Measurement> {
        let mut rows = Vec::new();
        for p in &self.probabilities {
            let prefix = format!("probability/{}", p.variant.label());
            rows.extend(qualify(&prefix, std::slice::from_ref(&p.agreement)));
            if let Some(s) = &p.sampling {
                rows.extend(qualify(&prefix, std::slice::from_ref(s)));
            }
        }
        for c in &self.checks {
            rows.extend(qualify(c.check.label(), &c.measurements));
        }
        rows
    }

    fn passed(&self) -> bool {
        self.all_passed
    }

    fn numerical_failure(&self) -> bool {
        self.checks
            .iter()
            .any(|c| matches!(&c.failure, Some(f) if f.kind == FailureKind::Numerical))
    }
}

/// Device and gate named by a spec, drawn from the spec's seed.
pub fn resolve(spec: &ExperimentSpec) -> Result<(PovmElement, UnitaryGate), CoreError> {
    let n = spec.dimension;
    let device = match &spec.device {
        DeviceChoice::Identity => PovmElement::identity(n),
        DeviceChoice::RankOneRandom => PovmElement::random_rank_one(n, &mut derive_stream(spec.seed, "device", 0))?,
        DeviceChoice::RandomPovmElement => PovmElement::random(n, &mut derive_stream(spec.seed, "device", 0))?,
        DeviceChoice::Projector(k) => PovmElement::projector(&PureState::basis(n, *k)?),
        DeviceChoice::Literal(e) => e.clone(),
    };
    let gate = match &spec.gate {
        GateChoice::Identity => UnitaryGate::identity(n),
        GateChoice::Hadamard => UnitaryGate::hadamard(),
        GateChoice::PauliX => UnitaryGate::pauli_x(),
        GateChoice::Fourier => UnitaryGate::fourier(n)?,
        GateChoice::HaarRandom => UnitaryGate::haar_random(n, &mut derive_stream(spec.seed, "gate", 0))?,
        GateChoice::Literal(g) => g.clone(),
    };
    Ok((device, gate))
}

pub fn run_suite(spec: &ExperimentSpec) -> Result<RunReport, CommandError> {
    run_suite_with(spec, RunOptions::default())
}

/// Evaluates every requested variant and check.
///
/// Without timings the report depends only on `spec`.
pub fn run_suite_with(spec: &ExperimentSpec, options: RunOptions) -> Result<RunReport, CommandError> {
    if spec.variants.is_empty() && spec.checks.is_empty() {
        return Err(CommandError::InvalidConfig(
            "spec requests no variants and no checks".into(),
        ));
    }
    let started = Instant::now();
    let (device, gate) = resolve(spec).map_err(CommandError::from_core)?;
    let resolve_time = started.elapsed().as_secs_f64();

    let reference_cfg = ExperimentConfig::new(device.clone(), gate.clone(), Variant::A, spec.trials)
        .map_err(CommandError::from_core)?;
    let reference = exact_probability(&reference_cfg).map_err(CommandError::from_core)?.exact;

    let timed_probabilities: Vec<(ProbabilityEntry, f64)> = spec
        .variants
        .par_iter()
        .map(|&v| {
            let t = Instant::now();
            run_variant(spec, &reference_cfg.with_variant(v), reference).map(|e| (e, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_, _>>()?;
    let timed_checks: Vec<(CheckEntry, f64)> = spec
        .checks
        .par_iter()
        .map(|&c| {
            let t = Instant::now();
            let entry = run_check(spec, c, &device, &gate, reference);
            (entry, t.elapsed().as_secs_f64())
        })
        .collect();

    let timings = options.timings.then(|| {
        let mut t = vec![SectionTiming {
            section: "resolve".into(),
            seconds: resolve_time,
        }];
        t.extend(timed_probabilities.iter().map(|(p, s)| SectionTiming {
            section: format!("probability/{}", p.variant.label()),
            seconds: *s,
        }));
        t.extend(timed_checks.iter().map(|(c, s)| SectionTiming {
            section: c.check.label().into(),
            seconds: *s,
        }));
        t
    });
    let probabilities: Vec<ProbabilityEntry> = timed_probabilities.into_iter().map(|(p, _)| p).collect();
    let checks: Vec<CheckEntry> = timed_checks.into_iter().map(|(c, _)| c).collect();
    let all_passed = checks.iter().all(|c| c.passed)
        && probabilities
            .iter()
            .all(|p| p.agreement.pass && p.sampling.as_ref().is_none_or(|s| s.pass));
    Ok(RunReport {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        device: device.matrix().clone(),
        gate: gate.matrix().clone(),
        reference_probability: reference,
        probabilities,
        checks,
        all_passed,
        timings,
    })
}

fn run_variant(spec: &ExperimentSpec, cfg: &ExperimentConfig, reference: f64) -> Result<ProbabilityEntry, CommandError> {
    let variant = cfg.variant();
    let result = if spec.trials > 0 {
        let label = format!("monte-carlo/{}", variant.label());
        monte_carlo_probability(cfg, &mut derive_stream(spec.seed, &label, 0))
    } else {
        exact_probability(cfg)
    }
    .map_err(CommandError::from_core)?;
    let agreement = Measurement::compare("exact", reference, result.exact, AGREEMENT_TOL);
    let sampling = result.sampled.as_ref().map(|s| {
        let p = result.exact;
        let sigma = (p * (1.0 - p) / s.trials as f64).max(0.0).sqrt();
        Measurement::compare("monte-carlo", p, s.estimate, SAMPLING_BAND * sigma + 1e-12)
    });
    Ok(ProbabilityEntry {
        variant,
        exact: result.exact,
        branches: result.branches,
        sampled: result.sampled,
        agreement,
        sampling,
    })
}

fn run_check(spec: &ExperimentSpec, check: Check, device: &PovmElement, gate: &UnitaryGate, reference: f64) -> CheckEntry {
    let mut rng = derive_stream(spec.seed, check.label(), 0);
    let outcome = match check {
        Check::Envariance => envariance_rows(spec.dimension, gate),
        Check::SumRule => sum_rule_rows(device, reference, &mut rng),
        Check::Reconstruct => reconstruct_rows(device, &mut rng),
        Check::Reduce2d => reduce_rows(device),
        Check::BornVerify => born_rows(spec.dimension, &mut rng),
        Check::PermutationIdentity => permutation_rows(device, &mut rng),
    };
    match outcome {
        Ok(measurements) => CheckEntry {
            check,
            passed: measurements.iter().all(|m| m.pass),
            measurements,
            failure: None,
        },
        Err(e) => CheckEntry {
            check,
            passed: false,
            measurements: Vec::new(),
            failure: Some(CheckFailure {
                kind: if CommandError::is_numerical(&e) {
                    FailureKind::Numerical
                } else {
                    FailureKind::Unsupported
                },
                message: e.to_string(),
            }),
        },
    }
}

type Rows = Result<Vec<Measurement>, CoreError>;

pub(crate) fn envariance_rows(n: usize, gate: &UnitaryGate) -> Rows {
    let r = envariance_report(n, gate)?;
    let one_sided = gate.matrix().trace().norm() / n as f64;
    Ok(vec![
        Measurement::compare("fidelity-pair", 1.0, r.fidelity_pair, ENVARIANCE_TOL),
        Measurement::compare("max-entry-deviation", 0.0, r.max_entry_deviation, ENVARIANCE_TOL),
        Measurement::compare("fidelity-upper-only", one_sided, r.fidelity_upper_only, ENVARIANCE_TOL),
        Measurement::compare("fidelity-lower-only", one_sided, r.fidelity_lower_only, ENVARIANCE_TOL),
    ])
}

fn farthest(values: &[f64], target: f64) -> f64 {
    values
        .iter()
        .copied()
        .max_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(target)
}

fn sum_rule_rows<R: Rng + ?Sized>(device: &PovmElement, reference: f64, rng: &mut R) -> Rows {
    let n = device.dimension();
    let mut sums = Vec::with_capacity(SUM_RULE_BASES);
    for _ in 0..SUM_RULE_BASES {
        let basis = UnitaryGate::haar_random(n, rng)?.image_of_basis();
        sums.push(basis_sum_check(device, &basis)?);
    }
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let scaled = n as f64 * reference;
    let trace = device.matrix().trace().re;
    Ok(vec![
        Measurement::compare("spread", 0.0, max - min, SUM_RULE_TOL),
        Measurement::compare("sum-vs-scaled-probability", scaled, farthest(&sums, scaled), SUM_RULE_TOL),
        Measurement::compare("sum-vs-trace", trace, farthest(&sums, trace), SUM_RULE_TOL),
    ])
}

fn reconstruct_rows<R: Rng + ?Sized>(device: &PovmElement, rng: &mut R) -> Rows {
    let oracle = QuadraticFormOracle::from_device(device);
    let a = reconstruct_operator(&oracle)?;
    let worst = verify_quadratic_form(&oracle, &a, QUADRATIC_FORM_SAMPLES, rng)?;
    Ok(vec![
        Measurement::compare("frobenius-error", 0.0, a.matrix().frobenius_distance(device.matrix()), RECONSTRUCT_TOL),
        Measurement::compare("quadratic-form-max-error", 0.0, worst, QUADRATIC_FORM_TOL),
    ])
}

/// Two-dimensional device used by the reduction check: the device itself for
/// `N = 2`, otherwise its compression to the span of `|1⟩, |2⟩`.
pub fn two_dim_restriction(device: &PovmElement) -> Result<PovmElement, CoreError> {
    if device.dimension() == 2 {
        return Ok(device.clone());
    }
    let m = device.matrix();
    PovmElement::new(ComplexMatrix::from_fn(2, 2, |i, j| m[(i, j)]))
}

fn reduce_rows(device: &PovmElement) -> Rows {
    let small = two_dim_restriction(device)?;
    let oracle = QuadraticFormOracle::from_device(&small);
    let reduced = reduce_two_dim(&oracle)?;
    let direct = reconstruct_operator(&oracle)?;
    Ok(vec![
        Measurement::compare("reduced-vs-device", 0.0, reduced.matrix().frobenius_distance(small.matrix()), REDUCE_TOL),
        Measurement::compare("reduced-vs-direct", 0.0, reduced.matrix().frobenius_distance(direct.matrix()), REDUCE_TOL),
    ])
}

/// Observable eigenvalues used by the Born-rule check: `1` is doubly
/// degenerate when `N ≥ 3`.
pub fn born_check_eigenvalues(n: usize) -> Vec<f64> {
    if n == 2 {
        vec![1.0, 2.0]
    } else {
        (0..n).map(|k| k.max(1) as f64).collect()
    }
}

pub(crate) fn born_rows<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Rows {
    let v = UnitaryGate::haar_random(n, rng)?;
    let o = Observable::from_eigenbasis(&born_check_eigenvalues(n), v.matrix().clone())?;
    let lambda = 1.0;
    let p = projector_onto_eigenspace(&o, lambda)?;
    let verdict = verify_projective_device(&p, &o, lambda)?;

    // Couple an eigenvector inside the eigenspace to one outside it.
    let columns = v.image_of_basis();
    let (inside, outside) = (&columns[0], &columns[n - 1]);
    let coupling = ComplexMatrix::outer(inside.amplitudes(), outside.amplitudes());
    let kick = coupling.add(&coupling.adjoint())?.scale(Complex64::new(BORN_PERTURBATION, 0.0));
    let perturbed = HermitianOperator::new(p.matrix().add(&kick)?)?;
    let bad = verify_projective_device(&perturbed, &o, lambda)?;
    let caught = !bad.is_projector && (!bad.eigenvalue_bounds_ok || bad.offdiag_mass > BORN_TOL);

    let psi = PureState::haar_random(n, rng)?;
    let mut total = 0.0;
    for g in o.groups() {
        total += born_probability(&o, g.value, &psi)?;
    }
    let direct = device_probability(&PovmElement::from_operator(p.clone())?, &psi)?;
    Ok(vec![
        Measurement::flag("projector-accepted", true, verdict.is_projector),
        Measurement::compare("offdiag-mass", 0.0, verdict.offdiag_mass, BORN_TOL),
        Measurement::compare("trace-identity", verdict.trace_identity.rhs, verdict.trace_identity.lhs, BORN_TOL),
        Measurement::compare(
            "frobenius-identity",
            verdict.frobenius_identity.rhs,
            verdict.frobenius_identity.lhs,
            BORN_TOL,
        ),
        Measurement::judged("perturbed-rejected", 1.0, f64::from(u8::from(caught)), 0.0, caught),
        Measurement::compare("born-sum", 1.0, total, BORN_TOL),
        Measurement::compare("born-vs-device", born_probability(&o, lambda, &psi)?, direct, BORN_TOL),
    ])
}

fn permutation_rows<R: Rng + ?Sized>(device: &PovmElement, rng: &mut R) -> Rows {
    let n = device.dimension();
    if n > MAX_PERMUTATION_LEN {
        return Err(CoreError::TooManyPermutations(n));
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let basis = UnitaryGate::haar_random(n, rng)?.image_of_basis();
    let values = basis
        .iter()
        .map(|e| device_probability(device, e))
        .collect::<Result<Vec<_>, _>>()?;
    let r = verify_permutation_identity(&weights, &values)?;
    Ok(vec![Measurement::judged(
        "averaged-sum",
        r.rhs,
        r.lhs,
        PERMUTATION_TOL * r.rhs.abs().max(1.0),
        r.equal,
    )])
}
