//! The three source/gate/device experiments and the identities that follow
//! from them.
//!
//! * Variant `a`: the upper particle of `Ψ_N` goes straight to the device.
//! * Variant `b`: `U` on the upper particle and `U*` on the lower one first.
//! * Variant `c`: `U` on the upper particle, basis meter on the lower one.
//!
//! The device sees the upper particle in every variant, so the flash
//! probability `𝒫` agrees across all three.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envariance::apply_envariant_pair;
use crate::error::{shape_err, Error, Result};
use crate::qmodel::{
    collapse, device_probability, joint_device_probability, max_entangled_state, meter_distribution, meter_measure,
    sample_device, BipartiteState, PovmElement, PureState, Side, UnitaryGate,
};

/// Orthonormality tolerance for caller-supplied bases.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Largest length accepted by [`verify_permutation_identity`].
pub const MAX_PERMUTATION_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    A,
    B,
    C,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::A, Variant::B, Variant::C];

    pub fn label(self) -> &'static str {
        match self {
            Variant::A => "a",
            Variant::B => "b",
            Variant::C => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    device: PovmElement,
    gate: UnitaryGate,
    variant: Variant,
    trials: usize,
}

impl ExperimentConfig {
    pub fn new(device: PovmElement, gate: UnitaryGate, variant: Variant, trials: usize) -> Result<Self> {
        if device.dimension() != gate.dimension() {
            return Err(shape_err(
                format!("gate of dimension {}", device.dimension()),
                format!("dimension {}", gate.dimension()),
            ));
        }
        if device.dimension() < 2 {
            return Err(Error::InvalidDimension {
                dimension: device.dimension(),
                reason: "experiments need N >= 2",
            });
        }
        Ok(Self {
            device,
            gate,
            variant,
            trials,
        })
    }

    pub fn dimension(&self) -> usize {
        self.device.dimension()
    }

    pub fn device(&self) -> &PovmElement {
        &self.device
    }

    pub fn gate(&self) -> &UnitaryGate {
        &self.gate
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    /// Joint state that reaches the device (variants `a` and `b`).
    fn joint_state(&self) -> Result<BipartiteState> {
        match self.variant {
            Variant::A => max_entangled_state(self.dimension()),
            Variant::B => apply_envariant_pair(self.dimension(), &self.gate),
            Variant::C => Err(Error::InvalidConfig("variant c has no single joint state".into())),
        }
    }
}

/// One lower-meter outcome of variant `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// 1-based meter reading `n`.
    pub outcome: usize,
    /// `aₙ`: probability of the reading.
    pub weight: f64,
    /// `p(U|n⟩)`: flash probability given the reading.
    pub conditional: f64,
    /// `𝒫ₙ = aₙ · p(U|n⟩)`.
    pub joint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub trials: usize,
    pub flashes: usize,
    pub estimate: f64,
    /// `√(p̂(1 − p̂)/trials)`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub variant: Variant,
    /// Exact flash probability `𝒫`.
    pub exact: f64,
    /// Per-branch decomposition; empty except for variant `c`.
    pub branches: Vec<Branch>,
    pub sampled: Option<MonteCarloEstimate>,
}

/// Exact `𝒫` for the configured variant.
///
/// For variant `c` the weights `aₙ` come from the simulated lower meter and
/// each conditional probability is evaluated on the collapsed upper particle
/// after `U`.
pub fn exact_probability(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let (exact, branches) = match config.variant {
        Variant::A | Variant::B => {
            let state = config.joint_state()?;
            (joint_device_probability(&config.device, &state, Side::Upper)?, Vec::new())
        }
        Variant::C => {
            let psi = max_entangled_state(config.dimension())?;
            let weights = meter_distribution(&psi, Side::Lower);
            let mut branches = Vec::with_capacity(weights.len());
            for (i, &weight) in weights.iter().enumerate() {
                let conditional = if weight > 0.0 {
                    let prepared = collapse(&psi, Side::Lower, i + 1)?;
                    device_probability(&config.device, &config.gate.apply(&prepared)?)?
                } else {
                    0.0
                };
                branches.push(Branch {
                    outcome: i + 1,
                    weight,
                    conditional,
                    joint: weight * conditional,
                });
            }
            (branches.iter().map(|b| b.joint).sum(), branches)
        }
    };
    Ok(ExperimentResult {
        variant: config.variant,
        exact,
        branches,
        sampled: None,
    })
}

/// Event-by-event simulation of `config.trials()` particle pairs.
///
/// Variant `c` samples the lower meter, collapses the upper particle, applies
/// `U` and samples the device. Variants `a` and `b` sample the two-outcome
/// joint measurement `{A ⊗ I, I − A ⊗ I}` on the state reaching the device.
pub fn monte_carlo_probability<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<ExperimentResult> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("Monte-Carlo run needs at least one trial".into()));
    }
    let mut result = exact_probability(config)?;
    let mut flashes = 0usize;
    match config.variant {
        Variant::A | Variant::B => {
            let state = config.joint_state()?;
            let p = joint_device_probability(&config.device, &state, Side::Upper)?;
            for _ in 0..config.trials {
                if rng.random::<f64>() < p {
                    flashes += 1;
                }
            }
        }
        Variant::C => {
            let psi = max_entangled_state(config.dimension())?;
            for _ in 0..config.trials {
                let record = meter_measure(&psi, Side::Lower, rng)?;
                let prepared = record.remote.expect("meter on a pair always prepares the partner");
                let arriving = config.gate.apply(&prepared)?;
                if sample_device(&config.device, &arriving, rng)? {
                    flashes += 1;
                }
            }
        }
    }
    let n = config.trials as f64;
    let estimate = flashes as f64 / n;
    result.sampled = Some(MonteCarloEstimate {
        trials: config.trials,
        flashes,
        estimate,
        std_error: (estimate * (1.0 - estimate) / n).sqrt(),
    });
    Ok(result)
}

/// `Σₙ p(eₙ)` over an orthonormal basis `{eₙ}` of the device's space.
pub fn basis_sum_check(device: &PovmElement, basis: &[PureState]) -> Result<f64> {
    let n = device.dimension();
    if basis.len() != n {
        return Err(shape_err(format!("{n} basis vectors"), format!("{} vectors", basis.len())));
    }
    for e in basis {
        if e.dimension() != n {
            return Err(shape_err(format!("vectors of dimension {n}"), format!("dimension {}", e.dimension())));
        }
    }
    for i in 0..n {
        for j in i..n {
            let overlap = basis[i].inner(&basis[j])?;
            let defect = if i == j { (overlap.norm() - 1.0).abs() } else { overlap.norm() };
            if defect > ORTHONORMAL_TOL {
                return Err(Error::NotOrthonormal {
                    first: i + 1,
                    second: j + 1,
                    defect,
                });
            }
        }
    }
    basis.iter().map(|e| device_probability(device, e)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    /// `Σ_π Σₘ aₘ p_{π(m)}` by enumeration.
    pub lhs: f64,
    /// `(N − 1)! · (Σ a) · (Σ p)`.
    pub rhs: f64,
    pub equal: bool,
}

/// Sums the weighted relation over every reordering of `values` and compares
/// with the closed form.
pub fn verify_permutation_identity(weights: &[f64], values: &[f64]) -> Result<PermutationReport> {
    let n = weights.len();
    if values.len() != n {
        return Err(shape_err(format!("{n} values"), format!("{} values", values.len())));
    }
    if n == 0 {
        return Err(Error::InvalidDimension {
            dimension: 0,
            reason: "need at least one weight",
        });
    }
    if n > MAX_PERMUTATION_LEN {
        return Err(Error::TooManyPermutations(n));
    }
    let weight_sum: f64 = weights.iter().sum();
    if (weight_sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!("weights sum to {weight_sum}, not 1")));
    }

    let mut lhs = 0.0;
    for_each_permutation(n, |perm| {
        lhs += perm.iter().enumerate().map(|(m, &pi)| weights[m] * values[pi]).sum::<f64>();
    });
    let rhs = factorial(n - 1) * weight_sum * values.iter().sum::<f64>();
    Ok(PermutationReport {
        lhs,
        rhs,
        equal: (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Heap's algorithm; visits all `n!` orderings of `0..n`.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    visit(&perm);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            visit(&perm);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}
