//! Devices that measure an observable.
//!
//! A device whose lamp flashes with certainty on the eigenstates of `Ô` for
//! eigenvalue `λ`, and never on the other eigenstates, must be the eigenspace
//! projector `P̂λ`. [`verify_projective_device`] walks that argument step by
//! step in the observable's eigenbasis:
//!
//! 1. the diagonal entries `A_nn` must be 1 on the `λ` eigenspace and 0 elsewhere;
//! 2. the trace `Σ A_nn` equals `Σ a_k` over the device's eigenvalues;
//! 3. the squared Frobenius norm `Σ |A_mn|²` equals `Σ a_k²`;
//! 4. hence the off-diagonal mass equals `Σ (a_k² − a_k)`, which is `≤ 0` when
//!    every `a_k ∈ [0, 1]`, forcing the off-diagonal entries to vanish.
//!
//! Exact zeros become thresholds of `1e-8`. Degenerate eigenspaces are
//! handled through projector sums, so nothing depends on the choice of
//! eigenvectors inside an eigenspace.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{self, ComplexMatrix, Spectrum};
use crate::qmodel::{device_probability, HermitianOperator, PovmElement, PureState};

/// Relative tolerance for merging eigenvalues into one eigenspace.
pub const GROUPING_TOL: f64 = 1e-8;
/// Tolerance for the diagonal dichotomy, the off-diagonal mass and the eigenvalue bounds.
pub const VERDICT_TOL: f64 = 1e-8;

/// Eigenvectors (column indices into the eigenbasis) sharing one eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenGroup {
    pub value: f64,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    spectrum: Spectrum,
    groups: Vec<EigenGroup>,
    tolerance: f64,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let op = HermitianOperator::new(matrix)?;
        let spectrum = op.spectrum()?;
        Ok(Self::from_parts(op.into_matrix(), spectrum))
    }

    /// Builds `Σ λᵢ |vᵢ⟩⟨vᵢ|` from an explicit eigenbasis (columns of `vectors`).
    pub fn from_eigenbasis(eigenvalues: &[f64], vectors: ComplexMatrix) -> Result<Self> {
        let n = eigenvalues.len();
        if vectors.rows() != n || vectors.cols() != n {
            return Err(shape_err(format!("{n}x{n} eigenbasis"), format!("{}x{}", vectors.rows(), vectors.cols())));
        }
        let defect = vectors.unitarity_defect();
        if defect > linalg::STRUCTURAL_TOL {
            return Err(Error::NotUnitary { defect });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
        let spectrum = Spectrum {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            eigenvectors: ComplexMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
        };
        let matrix = spectrum.reconstruct().hermitian_part();
        Ok(Self::from_parts(matrix, spectrum))
    }

    fn from_parts(matrix: ComplexMatrix, spectrum: Spectrum) -> Self {
        let tolerance = GROUPING_TOL * spectrum.spectral_radius().max(1.0);
        let mut groups: Vec<EigenGroup> = Vec::new();
        let mut anchor = f64::NAN;
        for (i, &ev) in spectrum.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if (ev - anchor).abs() <= tolerance => g.indices.push(i),
                _ => {
                    anchor = ev;
                    groups.push(EigenGroup {
                        value: ev,
                        indices: vec![i],
                    });
                }
            }
        }
        for g in &mut groups {
            g.value = g.indices.iter().map(|&i| spectrum.eigenvalues[i]).sum::<f64>() / g.indices.len() as f64;
        }
        Self {
            matrix,
            spectrum,
            groups,
            tolerance,
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    /// Distinct eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.value).collect()
    }

    pub fn group_for(&self, lambda: f64) -> Result<&EigenGroup> {
        self.groups
            .iter()
            .find(|g| (g.value - lambda).abs() <= self.tolerance)
            .ok_or_else(|| Error::UnknownEigenvalue {
                requested: lambda,
                available: self.eigenvalues(),
            })
    }

    fn projector_for(&self, group: &EigenGroup) -> ComplexMatrix {
        let n = self.dimension();
        let v = &self.spectrum.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| group.indices.iter().map(|&k| v[(i, k)] * v[(j, k)].conj()).sum())
    }
}

/// `P̂λ = Σ |φₙ⟩⟨φₙ|` over the eigenvectors of `λ`.
pub fn projector_onto_eigenspace(o: &Observable, lambda: f64) -> Result<HermitianOperator> {
    let group = o.group_for(lambda)?;
    HermitianOperator::new(o.projector_for(group))
}

/// Both sides of an invariant identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentitySides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Step-by-step outcome of [`verify_projective_device`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveVerdict {
    /// `A_nn` in the observable's eigenbasis.
    pub diagonal: Vec<f64>,
    /// Every `A_nn` within `tolerance` of 1 (eigenvalue `λ`) or 0 (otherwise).
    pub diagonal_ok: bool,
    /// `Σ A_nn` vs `Σ a_k`.
    pub trace_identity: IdentitySides,
    /// `Σ |A_mn|²` vs `Σ a_k²`.
    pub frobenius_identity: IdentitySides,
    /// `Σ_{m≠n} |A_mn|²`.
    pub offdiag_mass: f64,
    /// `Σ (a_k² − a_k)`, non-positive when the eigenvalues lie in `[0, 1]`.
    pub spectral_excess: f64,
    /// Device eigenvalues `a_k`, ascending.
    pub device_eigenvalues: Vec<f64>,
    pub eigenvalue_bounds_ok: bool,
    pub is_projector: bool,
    /// `‖A − P̂λ‖_F`.
    pub distance_to_projector: f64,
    pub tolerance: f64,
}

/// Runs the projector argument for a device `a` that is supposed to measure
/// `o` and flash on outcome `λ`.
///
/// `a` is a general Hermitian operator so that devices violating the
/// probability bounds can be diagnosed rather than rejected up front.
pub fn verify_projective_device(a: &HermitianOperator, o: &Observable, lambda: f64) -> Result<ProjectiveVerdict> {
    let n = o.dimension();
    if a.dimension() != n {
        return Err(shape_err(format!("device of dimension {n}"), format!("dimension {}", a.dimension())));
    }
    let group = o.group_for(lambda)?;
    let v = &o.spectrum().eigenvectors;
    let in_basis = &(&v.adjoint() * a.matrix()) * v;

    let diagonal: Vec<f64> = (0..n).map(|k| in_basis[(k, k)].re).collect();
    let diagonal_ok = diagonal.iter().enumerate().all(|(k, &d)| {
        let expected = if group.indices.contains(&k) { 1.0 } else { 0.0 };
        (d - expected).abs() <= VERDICT_TOL
    });

    let mut offdiag_mass = 0.0;
    let mut diag_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = in_basis[(i, j)].norm_sqr();
            if i == j {
                diag_sq += s;
            } else {
                offdiag_mass += s;
            }
        }
    }

    let device_eigenvalues = a.spectrum()?.eigenvalues;
    let trace_identity = IdentitySides {
        lhs: diagonal.iter().sum(),
        rhs: device_eigenvalues.iter().sum(),
    };
    let frobenius_identity = IdentitySides {
        lhs: diag_sq + offdiag_mass,
        rhs: device_eigenvalues.iter().map(|x| x * x).sum(),
    };
    let spectral_excess = device_eigenvalues.iter().map(|x| x * x - x).sum();
    let eigenvalue_bounds_ok = device_eigenvalues
        .iter()
        .all(|&x| (-VERDICT_TOL..=1.0 + VERDICT_TOL).contains(&x));
    let is_projector = diagonal_ok && eigenvalue_bounds_ok && offdiag_mass <= VERDICT_TOL;
    let distance_to_projector = a.matrix().frobenius_distance(&o.projector_for(group));

    Ok(ProjectiveVerdict {
        diagonal,
        diagonal_ok,
        trace_identity,
        frobenius_identity,
        offdiag_mass,
        spectral_excess,
        device_eigenvalues,
        eigenvalue_bounds_ok,
        is_projector,
        distance_to_projector,
        tolerance: VERDICT_TOL,
    })
}

/// `⟨ψ|P̂λ|ψ⟩`; for a nondegenerate `λ` this is `|⟨φλ|ψ⟩|²`.
pub fn born_probability(o: &Observable, lambda: f64, psi: &PureState) -> Result<f64> {
    let projector = PovmElement::from_operator(projector_onto_eigenspace(o, lambda)?)?;
    device_probability(&projector, psi)
}
