//! The `U ⊗ U*` cancellation on the maximally entangled pair.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qmodel::{apply_gate, check_dim, max_entangled_state, BipartiteState, Side, UnitaryGate};

/// Fidelities with the untouched pair after applying gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvarianceReport {
    /// `|⟨Ψ_n|(U ⊗ U*)|Ψ_n⟩|`
    pub fidelity_pair: f64,
    /// `|⟨Ψ_n|(U ⊗ I)|Ψ_n⟩|`
    pub fidelity_upper_only: f64,
    /// `|⟨Ψ_n|(I ⊗ U*)|Ψ_n⟩|`
    pub fidelity_lower_only: f64,
    /// Max-entry distance between `(U ⊗ U*)Ψ_n` and `Ψ_n`, phase included.
    pub max_entry_deviation: f64,
}

/// `(U ⊗ U*)|Ψ_n⟩`, by applying `U` to the upper particle and `U*` to the lower one.
pub fn apply_envariant_pair(n: usize, u: &UnitaryGate) -> Result<BipartiteState> {
    apply_envariant_pair_on(n, u, Side::Upper)
}

/// As [`apply_envariant_pair`], with `U` on `side` and `U*` on the other particle.
pub fn apply_envariant_pair_on(n: usize, u: &UnitaryGate, side: Side) -> Result<BipartiteState> {
    check_dim(n, u.dimension())?;
    let psi = max_entangled_state(n)?;
    let once = apply_gate(&psi, u, side)?;
    apply_gate(&once, &u.conjugate(), side.other())
}

pub fn envariance_report(n: usize, u: &UnitaryGate) -> Result<EnvarianceReport> {
    check_dim(n, u.dimension())?;
    let psi = max_entangled_state(n)?;
    let pair = apply_envariant_pair(n, u)?;
    let upper = apply_gate(&psi, u, Side::Upper)?;
    let lower = apply_gate(&psi, &u.conjugate(), Side::Lower)?;
    Ok(EnvarianceReport {
        fidelity_pair: psi.fidelity(&pair)?,
        fidelity_upper_only: psi.fidelity(&upper)?,
        fidelity_lower_only: psi.fidelity(&lower)?,
        max_entry_deviation: psi.max_abs_diff(&pair),
    })
}
