//! States, gates, ideal basis meters and black-box devices.
//!
//! Basis labels at this API boundary are 1-based (`|1⟩ … |N⟩`). A bipartite
//! state stores the upper particle as the first tensor factor, so `|k⟩|l⟩`
//! sits at flat index `(k-1) * n_lower + (l-1)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{self, ComplexMatrix, Spectrum, STRUCTURAL_TOL};

/// Norm tolerance for state vectors.
pub const NORM_TOL: f64 = 1e-12;

/// Which particle of a pair an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Requires unit norm within `1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension {
                dimension: 0,
                reason: "state dimension must be at least 1",
            });
        }
        let norm = linalg::norm(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails only on a zero or non-finite vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = linalg::norm(&amplitudes);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    /// Basis ket `|label⟩`, with `label` in `1..=n`.
    pub fn basis(n: usize, label: usize) -> Result<Self> {
        if label == 0 || label > n {
            return Err(Error::InvalidDimension {
                dimension: label,
                reason: "basis label must lie in 1..=N",
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        amps[label - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: amps })
    }

    pub fn haar_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension {
                dimension: 0,
                reason: "state dimension must be at least 1",
            });
        }
        Ok(Self {
            amplitudes: linalg::random_unit_vector(n, rng),
        })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        check_dim(self.dimension(), other.dimension())?;
        Ok(linalg::inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|ψ⟩ ⊗ |φ⟩` with `self` as the upper particle.
    pub fn tensor(&self, lower: &PureState) -> BipartiteState {
        BipartiteState {
            upper: self.dimension(),
            lower: lower.dimension(),
            amplitudes: linalg::tensor_vec(&self.amplitudes, &lower.amplitudes),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    upper: usize,
    lower: usize,
    amplitudes: Vec<Complex64>,
}

impl BipartiteState {
    pub fn new(upper: usize, lower: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if upper == 0 || lower == 0 {
            return Err(Error::InvalidDimension {
                dimension: upper.min(lower),
                reason: "factor dimensions must be at least 1",
            });
        }
        if amplitudes.len() != upper * lower {
            return Err(shape_err(
                format!("{} amplitudes", upper * lower),
                format!("{} amplitudes", amplitudes.len()),
            ));
        }
        let norm = linalg::norm(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            upper,
            lower,
            amplitudes,
        })
    }

    /// `(n_upper, n_lower)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn dim(&self, side: Side) -> usize {
        match side {
            Side::Upper => self.upper,
            Side::Lower => self.lower,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude of `|k⟩|l⟩` with 0-based indices.
    pub fn amplitude_at(&self, k: usize, l: usize) -> Complex64 {
        self.amplitudes[k * self.lower + l]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &BipartiteState) -> Result<Complex64> {
        if self.dims() != other.dims() {
            return Err(shape_err(format!("{:?}", self.dims()), format!("{:?}", other.dims())));
        }
        Ok(linalg::inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &BipartiteState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    pub fn max_abs_diff(&self, other: &BipartiteState) -> f64 {
        if self.dims() != other.dims() {
            return f64::INFINITY;
        }
        linalg::max_abs_diff_vec(&self.amplitudes, &other.amplitudes)
    }

    /// Reduced density matrix of `side`, tracing out the other particle.
    pub fn reduced_density(&self, side: Side) -> ComplexMatrix {
        let n = self.dim(side);
        let m = self.dim(side.other());
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..m)
                .map(|o| {
                    let (a, b) = match side {
                        Side::Upper => (self.amplitude_at(i, o), self.amplitude_at(j, o)),
                        Side::Lower => (self.amplitude_at(o, i), self.amplitude_at(o, j)),
                    };
                    a * b.conj()
                })
                .sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGate {
    matrix: ComplexMatrix,
}

impl UnitaryGate {
    /// Requires `U†U = I` within max-entry `1e-10`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, STRUCTURAL_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(shape_err("non-empty square matrix", format!("{}x{}", matrix.rows(), matrix.cols())));
        }
        let defect = matrix.unitarity_defect();
        if defect > tol {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            matrix: ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("2x2"),
        }
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            matrix: ComplexMatrix::from_real_rows(&[vec![h, h], vec![h, -h]]).expect("2x2"),
        }
    }

    /// Discrete Fourier transform, `F_jk = ω^{jk} / √n` with `ω = e^{2πi/n}`.
    pub fn fourier(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension {
                dimension: 0,
                reason: "gate dimension must be at least 1",
            });
        }
        let scale = 1.0 / (n as f64).sqrt();
        let matrix = ComplexMatrix::from_fn(n, n, |j, k| {
            let angle = 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
            Complex64::from_polar(scale, angle)
        });
        Ok(Self { matrix })
    }

    pub fn haar_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            matrix: linalg::haar_random_unitary(n, rng)?,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `U*`: entrywise conjugate in the computational basis.
    pub fn conjugate(&self) -> Self {
        Self {
            matrix: self.matrix.conjugate(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// The orthonormal set `eₙ = U|n⟩`, `n = 1..=N` (the columns of `U`).
    pub fn image_of_basis(&self) -> Vec<PureState> {
        (0..self.dimension())
            .map(|j| PureState {
                amplitudes: self.matrix.column(j),
            })
            .collect()
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        check_dim(self.dimension(), psi.dimension())?;
        let amps = self.matrix.apply(psi.amplitudes())?;
        // Unitary action preserves the norm; renormalize away the rounding.
        PureState::normalized(amps)
    }
}

/// Hermitian matrix, stored exactly Hermitian after symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Accepts `‖A − A†‖_max ≤ 1e-10 · max(1, ‖A‖_max)` and stores `(A + A†)/2`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let tol = STRUCTURAL_TOL * matrix.max_abs().max(1.0);
        Self::with_tolerance(matrix, tol)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(shape_err("non-empty square matrix", format!("{}x{}", matrix.rows(), matrix.cols())));
        }
        let defect = matrix.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        linalg::hermitian_eigendecomposition(&self.matrix)
    }

    /// `⟨ψ|A|ψ⟩` as a real number (the imaginary part vanishes by hermiticity).
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        check_dim(self.dimension(), psi.dimension())?;
        Ok(self.matrix.quadratic_form(psi.amplitudes())?.re)
    }
}

/// Hermitian operator with spectrum in `[0, 1]`: the flash operator of a
/// two-outcome device.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    op: HermitianOperator,
}

impl PovmElement {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::from_operator(HermitianOperator::new(matrix)?)
    }

    /// Hermiticity and spectrum bounds both checked at `tol`.
    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let op = HermitianOperator::with_tolerance(matrix, tol)?;
        Self::check_spectrum(op, tol)
    }

    pub fn from_operator(op: HermitianOperator) -> Result<Self> {
        Self::check_spectrum(op, STRUCTURAL_TOL)
    }

    fn check_spectrum(op: HermitianOperator, tol: f64) -> Result<Self> {
        let spectrum = op.spectrum()?;
        if let Some(&bad) = spectrum
            .eigenvalues
            .iter()
            .find(|&&ev| ev < -tol || ev > 1.0 + tol)
        {
            return Err(Error::SpectrumOutOfRange { eigenvalue: bad });
        }
        Ok(Self { op })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            op: HermitianOperator {
                matrix: ComplexMatrix::identity(n),
            },
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            op: HermitianOperator {
                matrix: ComplexMatrix::zeros(n, n),
            },
        }
    }

    /// `|φ⟩⟨φ|`.
    pub fn projector(phi: &PureState) -> Self {
        let a = phi.amplitudes();
        Self {
            op: HermitianOperator {
                matrix: ComplexMatrix::outer(a, a).hermitian_part(),
            },
        }
    }

    /// `V · diag(u) · V†` with Haar `V` and i.i.d. uniform `u ∈ [0, 1)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let v = linalg::haar_random_unitary(n, rng)?;
        let diag: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let m = &(&v * &ComplexMatrix::from_diagonal(&diag)) * &v.adjoint();
        Ok(Self {
            op: HermitianOperator {
                matrix: m.hermitian_part(),
            },
        })
    }

    /// Projector onto a Haar-random pure state.
    pub fn random_rank_one<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::projector(&PureState::haar_random(n, rng)?))
    }

    pub fn dimension(&self) -> usize {
        self.op.dimension()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.op
    }

    /// `I − A`, the no-flash element.
    pub fn complement(&self) -> Self {
        let n = self.dimension();
        Self {
            op: HermitianOperator {
                matrix: ComplexMatrix::identity(n).sub(self.matrix()).expect("square"),
            },
        }
    }
}

/// Labeled set of POVM elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<PovmElement>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<PovmElement>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidConfig("a POVM needs at least one element".into()));
        };
        if labels.len() != elements.len() {
            return Err(shape_err(format!("{} labels", elements.len()), format!("{} labels", labels.len())));
        }
        let n = first.dimension();
        let mut total = ComplexMatrix::zeros(n, n);
        for e in &elements {
            check_dim(n, e.dimension())?;
            total = total.add(e.matrix())?;
        }
        let defect = total.max_abs_diff(&ComplexMatrix::identity(n));
        if defect > STRUCTURAL_TOL {
            return Err(Error::IncompletePovm { defect });
        }
        Ok(Self { elements, labels })
    }

    /// `{A, I − A}` labeled `flash` / `dark`.
    pub fn two_outcome(flash: PovmElement) -> Self {
        let dark = flash.complement();
        Self {
            elements: vec![flash, dark],
            labels: vec!["flash".into(), "dark".into()],
        }
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probabilities(&self, psi: &PureState) -> Result<Vec<f64>> {
        self.elements.iter().map(|e| device_probability(e, psi)).collect()
    }
}

/// Result of reading one particle with the basis meter.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    /// 1-based basis label.
    pub outcome: usize,
    pub probability: f64,
    /// State the other particle is left in.
    pub remote: Option<PureState>,
}

/// `(|1⟩|1⟩ + … + |N⟩|N⟩) / √N`.
pub fn max_entangled_state(n: usize) -> Result<BipartiteState> {
    if n < 2 {
        return Err(Error::InvalidDimension {
            dimension: n,
            reason: "entangled pair needs N >= 2",
        });
    }
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        amplitudes[k * n + k] = amp;
    }
    Ok(BipartiteState {
        upper: n,
        lower: n,
        amplitudes,
    })
}

/// Applies `U ⊗ I` (upper) or `I ⊗ U` (lower).
pub fn apply_gate(state: &BipartiteState, gate: &UnitaryGate, side: Side) -> Result<BipartiteState> {
    check_dim(state.dim(side), gate.dimension())?;
    let (nu, nl) = state.dims();
    let u = gate.matrix();
    let mut out = vec![Complex64::new(0.0, 0.0); nu * nl];
    match side {
        Side::Upper => {
            for k in 0..nu {
                for j in 0..nu {
                    let ukj = u[(k, j)];
                    for l in 0..nl {
                        out[k * nl + l] += ukj * state.amplitude_at(j, l);
                    }
                }
            }
        }
        Side::Lower => {
            for k in 0..nu {
                for l in 0..nl {
                    out[k * nl + l] = (0..nl).map(|j| u[(l, j)] * state.amplitude_at(k, j)).sum();
                }
            }
        }
    }
    Ok(BipartiteState {
        upper: nu,
        lower: nl,
        amplitudes: out,
    })
}

/// Flash probability `⟨ψ|A|ψ⟩`, clamped to `[0, 1]`.
pub fn device_probability(a: &PovmElement, psi: &PureState) -> Result<f64> {
    Ok(a.as_operator().expectation(psi)?.clamp(0.0, 1.0))
}

/// `⟨Ψ|(A ⊗ I)|Ψ⟩` or `⟨Ψ|(I ⊗ A)|Ψ⟩`, clamped to `[0, 1]`.
pub fn joint_device_probability(a: &PovmElement, state: &BipartiteState, side: Side) -> Result<f64> {
    check_dim(state.dim(side), a.dimension())?;
    let m = a.matrix();
    let n = a.dimension();
    let other = state.dim(side.other());
    let amp = |i: usize, o: usize| match side {
        Side::Upper => state.amplitude_at(i, o),
        Side::Lower => state.amplitude_at(o, i),
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for o in 0..other {
        for i in 0..n {
            let bra = amp(i, o).conj();
            if bra == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row: Complex64 = (0..n).map(|j| m[(i, j)] * amp(j, o)).sum();
            acc += bra * row;
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Outcome probabilities of a basis meter on `side`, indexed by 0-based label.
pub fn meter_distribution(state: &BipartiteState, side: Side) -> Vec<f64> {
    let n = state.dim(side);
    let other = state.dim(side.other());
    (0..n)
        .map(|i| {
            (0..other)
                .map(|o| match side {
                    Side::Upper => state.amplitude_at(i, o),
                    Side::Lower => state.amplitude_at(o, i),
                })
                .map(|z| z.norm_sqr())
                .sum()
        })
        .collect()
}

/// State of the other particle after the meter on `side` reads `outcome` (1-based).
pub fn collapse(state: &BipartiteState, side: Side, outcome: usize) -> Result<PureState> {
    let n = state.dim(side);
    if outcome == 0 || outcome > n {
        return Err(Error::InvalidDimension {
            dimension: outcome,
            reason: "meter outcome must lie in 1..=N",
        });
    }
    let i = outcome - 1;
    let other = state.dim(side.other());
    let amps: Vec<Complex64> = (0..other)
        .map(|o| match side {
            Side::Upper => state.amplitude_at(i, o),
            Side::Lower => state.amplitude_at(o, i),
        })
        .collect();
    PureState::normalized(amps)
}

/// Reads `side` with the computational-basis meter.
///
/// The outcome is drawn by inverse CDF over the branch probabilities in basis
/// order with one uniform draw; zero-probability branches are never selected.
pub fn meter_measure<R: Rng + ?Sized>(state: &BipartiteState, side: Side, rng: &mut R) -> Result<MeasurementRecord> {
    let probs = meter_distribution(state, side);
    let idx = sample_index(&probs, rng.random::<f64>());
    Ok(MeasurementRecord {
        outcome: idx + 1,
        probability: probs[idx],
        remote: Some(collapse(state, side, idx + 1)?),
    })
}

pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut cum = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_nonzero = i;
        cum += p;
        if target < cum {
            return i;
        }
    }
    last_nonzero
}

/// One arrival at the black box; `true` when the lamp flashes.
pub fn sample_device<R: Rng + ?Sized>(a: &PovmElement, psi: &PureState, rng: &mut R) -> Result<bool> {
    let p = device_probability(a, psi)?;
    Ok(rng.random::<f64>() < p)
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(shape_err(format!("dimension {expected}"), format!("dimension {found}")));
    }
    Ok(())
}
