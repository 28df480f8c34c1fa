//! Frame functions and the operators behind them.
//!
//! A [`ProbabilityOracle`] is any rule assigning a flash probability to pure
//! states. When its basis sums are constant (the frame-function condition),
//! it is the quadratic form of a Hermitian operator; this module recovers
//! that operator with polarization identities, checks the recovered form
//! against the oracle on random states, and measures how far an arbitrary
//! oracle is from satisfying the premises in the first place.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::qmodel::{BipartiteState, HermitianOperator, PovmElement, PureState, Side, UnitaryGate};

/// Oracle values may stray this far outside `[0, 1]` before being rejected.
pub const ORACLE_RANGE_TOL: f64 = 1e-10;

/// Flash probability as a function of the incoming pure state.
///
/// Implementations must be reentrant: the same state always yields the same
/// value and evaluation does not mutate shared state.
pub trait ProbabilityOracle {
    fn dimension(&self) -> usize;
    fn probability(&self, psi: &PureState) -> f64;
}

impl<T: ProbabilityOracle + ?Sized> ProbabilityOracle for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn probability(&self, psi: &PureState) -> f64 {
        (**self).probability(psi)
    }
}

/// `p(ψ) = ⟨ψ|A|ψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormOracle {
    op: HermitianOperator,
}

impl QuadraticFormOracle {
    pub fn new(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn from_device(device: &PovmElement) -> Self {
        Self {
            op: device.as_operator().clone(),
        }
    }
}

impl ProbabilityOracle for QuadraticFormOracle {
    fn dimension(&self) -> usize {
        self.op.dimension()
    }

    fn probability(&self, psi: &PureState) -> f64 {
        self.op.expectation(psi).expect("oracle evaluated at its own dimension")
    }
}

/// Oracle backed by a closure.
pub struct FnOracle<F> {
    dimension: usize,
    f: F,
}

pub fn oracle_fn<F: Fn(&PureState) -> f64>(dimension: usize, f: F) -> FnOracle<F> {
    FnOracle { dimension, f }
}

impl<F: Fn(&PureState) -> f64> ProbabilityOracle for FnOracle<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn probability(&self, psi: &PureState) -> f64 {
        (self.f)(psi)
    }
}

/// Flash probability of a one-particle device when a pair arrives and only
/// the upper particle enters the device, the lower one being inert.
///
/// The upper particle's reduced state `ρ = Σⱼ sⱼ |uⱼ⟩⟨uⱼ|` is what the device
/// can see; the flash rate is the matching mixture `Σⱼ sⱼ p(uⱼ)` of
/// single-particle rates. On a product state `ψ ⊗ φ` this is exactly `p(ψ)`.
pub struct UpperParticleOracle<O> {
    single: O,
    lower_dimension: usize,
}

impl<O: ProbabilityOracle> UpperParticleOracle<O> {
    pub fn new(single: O, lower_dimension: usize) -> Self {
        Self {
            single,
            lower_dimension,
        }
    }

    fn evaluate(&self, joint: &PureState) -> Result<f64> {
        let state = BipartiteState::new(self.single.dimension(), self.lower_dimension, joint.amplitudes().to_vec())?;
        let spectrum = linalg::hermitian_eigendecomposition(&state.reduced_density(Side::Upper))?;
        let mut total = 0.0;
        for (j, &weight) in spectrum.eigenvalues.iter().enumerate() {
            if weight <= 0.0 {
                continue;
            }
            let u = PureState::normalized(spectrum.eigenvector(j))?;
            total += weight * self.single.probability(&u);
        }
        Ok(total)
    }
}

impl<O: ProbabilityOracle> ProbabilityOracle for UpperParticleOracle<O> {
    fn dimension(&self) -> usize {
        self.single.dimension() * self.lower_dimension
    }

    fn probability(&self, psi: &PureState) -> f64 {
        self.evaluate(psi).expect("joint oracle evaluated at its own dimension")
    }
}

fn checked_probability<O: ProbabilityOracle + ?Sized>(oracle: &O, psi: &PureState) -> Result<f64> {
    let value = oracle.probability(psi);
    if !value.is_finite() || !(-ORACLE_RANGE_TOL..=1.0 + ORACLE_RANGE_TOL).contains(&value) {
        return Err(Error::InvalidOracle { value });
    }
    Ok(value)
}

/// Recovers `A` with `p(ψ) = ⟨ψ|A|ψ⟩` from exactly `N²` oracle calls.
///
/// `A_nn = p(|n⟩)`; for `m < n`, with `d = (A_mm + A_nn)/2`,
/// `Re A_mn = p((|m⟩+|n⟩)/√2) − d` and `Im A_mn = d − p((|m⟩+i|n⟩)/√2)`.
pub fn reconstruct_operator<O: ProbabilityOracle + ?Sized>(oracle: &O) -> Result<HermitianOperator> {
    let n = oracle.dimension();
    if n < 2 {
        return Err(Error::InvalidDimension {
            dimension: n,
            reason: "reconstruction needs N >= 2",
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = Complex64::new(checked_probability(oracle, &PureState::basis(n, k + 1)?)?, 0.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mid = 0.5 * (m[(i, i)].re + m[(j, j)].re);
            let mut real = vec![Complex64::new(0.0, 0.0); n];
            real[i] = Complex64::new(h, 0.0);
            real[j] = Complex64::new(h, 0.0);
            let mut imag = real.clone();
            imag[j] = Complex64::new(0.0, h);
            let re = checked_probability(oracle, &PureState::new(real)?)? - mid;
            let im = mid - checked_probability(oracle, &PureState::new(imag)?)?;
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
    }
    HermitianOperator::new(m)
}

/// Largest `|p(ψ) − ⟨ψ|A|ψ⟩|` over `samples` Haar-random states.
pub fn verify_quadratic_form<O, R>(oracle: &O, a: &HermitianOperator, samples: usize, rng: &mut R) -> Result<f64>
where
    O: ProbabilityOracle + ?Sized,
    R: Rng + ?Sized,
{
    let n = oracle.dimension();
    if a.dimension() != n {
        return Err(shape_err(format!("operator of dimension {n}"), format!("dimension {}", a.dimension())));
    }
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let psi = PureState::haar_random(n, rng)?;
        worst = worst.max((oracle.probability(&psi) - a.expectation(&psi)?).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseReport {
    pub dimension: usize,
    /// `N ≥ 3`; two-dimensional oracles are evaluated but lie outside the theorem.
    pub within_hypothesis: bool,
    pub nonnegative: bool,
    /// `Σₙ p(eₙ)` for each sampled basis.
    pub sums: Vec<f64>,
    /// `max(sums) − min(sums)`.
    pub max_spread: f64,
}

/// Evaluates basis sums over `bases` Haar-random orthonormal bases.
pub fn verify_gleason_premises<O, R>(oracle: &O, bases: usize, rng: &mut R) -> Result<PremiseReport>
where
    O: ProbabilityOracle + ?Sized,
    R: Rng + ?Sized,
{
    let n = oracle.dimension();
    if n < 2 {
        return Err(Error::InvalidDimension {
            dimension: n,
            reason: "frame functions need N >= 2",
        });
    }
    let mut nonnegative = true;
    let mut sums = Vec::with_capacity(bases);
    for _ in 0..bases {
        let basis = UnitaryGate::haar_random(n, rng)?.image_of_basis();
        let mut sum = 0.0;
        for e in &basis {
            let p = oracle.probability(e);
            nonnegative &= p >= -ORACLE_RANGE_TOL;
            sum += p;
        }
        sums.push(sum);
    }
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PremiseReport {
        dimension: n,
        within_hypothesis: n >= 3,
        nonnegative,
        max_spread: if sums.is_empty() { 0.0 } else { max - min },
        sums,
    })
}

/// Flat indices of `|11⟩` and `|21⟩` in the two-qubit space.
const EMBEDDED_BLOCK: [usize; 2] = [0, 2];

/// Two-dimensional operator obtained through the four-dimensional pair space.
///
/// Pairs the measured particle with an inert partner, reconstructs the
/// 4×4 operator of the joint oracle, and keeps the block spanned by `|11⟩`
/// and `|21⟩`, i.e. the states `ψ ⊗ |1⟩`.
pub fn reduce_two_dim<O: ProbabilityOracle>(oracle2: O) -> Result<HermitianOperator> {
    if oracle2.dimension() != 2 {
        return Err(Error::InvalidDimension {
            dimension: oracle2.dimension(),
            reason: "two-dimensional reduction takes a two-dimensional oracle",
        });
    }
    let joint = UpperParticleOracle::new(oracle2, 2);
    let full = reconstruct_operator(&joint)?;
    let block = ComplexMatrix::from_fn(2, 2, |i, j| full.matrix()[(EMBEDDED_BLOCK[i], EMBEDDED_BLOCK[j])]);
    HermitianOperator::new(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_oracle_gives_scaled_identity() {
        let a = reconstruct_operator(&oracle_fn(4, |_| 0.5)).unwrap();
        assert_eq!(a.matrix(), &ComplexMatrix::identity(4).scale(c(0.5, 0.0)));
    }

    #[test]
    fn born_oracle_two_dim() {
        let phi = PureState::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let oracle = oracle_fn(2, |psi: &PureState| phi.inner(psi).unwrap().norm_sqr());
        let a = reconstruct_operator(&oracle).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(a.matrix().max_abs_diff(&expected) <= 1e-12);
        let mut rng = derive_stream(1, "gleason", 0);
        assert!(verify_quadratic_form(&oracle, &a, 1000, &mut rng).unwrap() <= 1e-12);
    }

    #[test]
    fn round_trip_random_devices() {
        let mut rng = derive_stream(2, "gleason", 0);
        for n in 2..=6 {
            for _ in 0..10 {
                let a0 = PovmElement::random(n, &mut rng).unwrap();
                let a = reconstruct_operator(&QuadraticFormOracle::from_device(&a0)).unwrap();
                assert!(a.matrix().frobenius_distance(a0.matrix()) <= 1e-10);
                let s = a.spectrum().unwrap();
                assert!(s.eigenvalues.iter().all(|&x| (-1e-8..=1.0 + 1e-8).contains(&x)));
            }
        }
    }

    #[test]
    fn uses_exactly_n_squared_calls() {
        use std::cell::Cell;
        let calls = Cell::new(0usize);
        let oracle = oracle_fn(5, |_| {
            calls.set(calls.get() + 1);
            0.25
        });
        reconstruct_operator(&oracle).unwrap();
        assert_eq!(calls.get(), 25);
    }

    #[test]
    fn out_of_range_oracle_rejected() {
        assert_eq!(
            reconstruct_operator(&oracle_fn(3, |_| 1.5)).unwrap_err(),
            Error::InvalidOracle { value: 1.5 }
        );
        assert!(reconstruct_operator(&oracle_fn(3, |_| -1e-3)).is_err());
        assert!(reconstruct_operator(&oracle_fn(3, |_| 1.0 + 1e-11)).is_ok());
        assert!(reconstruct_operator(&oracle_fn(1, |_| 0.5)).is_err());
    }

    #[test]
    fn planted_defect_detected() {
        let mut rng = derive_stream(3, "gleason", 0);
        let a0 = PovmElement::random(3, &mut rng).unwrap();
        let base = QuadraticFormOracle::from_device(&a0);
        let planted = oracle_fn(3, |psi: &PureState| {
            let amp = psi.amplitudes();
            base.probability(psi) + 1e-3 * (amp[0].conj() * amp[1]).norm()
        });
        let err = verify_quadratic_form(&planted, a0.as_operator(), 1000, &mut rng).unwrap();
        assert!(err > 1e-5, "{err}");
        let tautology = verify_quadratic_form(&base, a0.as_operator(), 1000, &mut rng).unwrap();
        assert!(tautology <= 1e-12);
    }

    #[test]
    fn premises_hold_for_quadratic_forms() {
        let mut rng = derive_stream(4, "gleason", 0);
        let a0 = PovmElement::random(3, &mut rng).unwrap();
        let trace = a0.matrix().trace().re;
        let r = verify_gleason_premises(&QuadraticFormOracle::from_device(&a0), 20, &mut rng).unwrap();
        assert!(r.within_hypothesis && r.nonnegative);
        assert!(r.max_spread <= 1e-10);
        assert!(r.sums.iter().all(|s| (s - trace).abs() <= 1e-10));
    }

    #[test]
    fn premises_fail_for_quartic_oracle() {
        // Computational basis sums to 1; a basis containing (|1⟩+|2⟩)/√2
        // sums to 1/4 + 1/4 = 1/2.
        let quartic = oracle_fn(3, |psi: &PureState| psi.amplitudes()[0].norm_sqr().powi(2));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rotated = [
            PureState::new(vec![c(h, 0.0), c(h, 0.0), c(0.0, 0.0)]).unwrap(),
            PureState::new(vec![c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)]).unwrap(),
            PureState::basis(3, 3).unwrap(),
        ];
        let rotated_sum: f64 = rotated.iter().map(|e| quartic.probability(e)).sum();
        assert!((rotated_sum - 0.5).abs() <= 1e-15);

        let mut rng = derive_stream(5, "gleason", 0);
        let r = verify_gleason_premises(&quartic, 20, &mut rng).unwrap();
        assert!(r.max_spread > 0.01, "{r:?}");
    }

    #[test]
    fn premises_constant_one() {
        let mut rng = derive_stream(6, "gleason", 0);
        let r = verify_gleason_premises(&oracle_fn(4, |_| 1.0), 20, &mut rng).unwrap();
        assert!(r.sums.iter().all(|&s| s == 4.0));
        assert_eq!(r.max_spread, 0.0);
        let r2 = verify_gleason_premises(&oracle_fn(2, |_| 1.0), 3, &mut rng).unwrap();
        assert!(!r2.within_hypothesis);
    }

    #[test]
    fn reduction_simple_devices() {
        let i2 = reduce_two_dim(QuadraticFormOracle::from_device(&PovmElement::identity(2))).unwrap();
        assert!(i2.matrix().max_abs_diff(&ComplexMatrix::identity(2)) <= 1e-12);
        let d = PovmElement::new(ComplexMatrix::from_diagonal(&[1.0, 0.0])).unwrap();
        let r = reduce_two_dim(QuadraticFormOracle::from_device(&d)).unwrap();
        assert!(r.matrix().max_abs_diff(d.matrix()) <= 1e-12);
    }

    #[test]
    fn reduction_matches_direct_reconstruction() {
        let mut rng = derive_stream(7, "gleason", 0);
        for _ in 0..20 {
            let a0 = PovmElement::random(2, &mut rng).unwrap();
            let oracle = QuadraticFormOracle::from_device(&a0);
            let reduced = reduce_two_dim(&oracle).unwrap();
            let direct = reconstruct_operator(&oracle).unwrap();
            assert!(reduced.matrix().frobenius_distance(a0.matrix()) <= 1e-10);
            assert!(reduced.matrix().frobenius_distance(direct.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn joint_oracle_matches_one_sided_form() {
        // For a quadratic single-particle oracle the joint rate is ⟨Ψ|(A⊗I)|Ψ⟩.
        let mut rng = derive_stream(8, "gleason", 0);
        for _ in 0..20 {
            let a0 = PovmElement::random(2, &mut rng).unwrap();
            let joint = UpperParticleOracle::new(QuadraticFormOracle::from_device(&a0), 2);
            let psi = PureState::haar_random(4, &mut rng).unwrap();
            let pair = BipartiteState::new(2, 2, psi.amplitudes().to_vec()).unwrap();
            let direct = crate::qmodel::joint_device_probability(&a0, &pair, Side::Upper).unwrap();
            assert!((joint.probability(&psi) - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn reduction_rejects_wrong_dimension() {
        assert!(reduce_two_dim(oracle_fn(3, |_| 0.5)).is_err());
    }
}
