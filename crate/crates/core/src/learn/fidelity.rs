//! Fidelity-based scoring of a learned quasi-probability distribution.
//!
//! Instead of comparing mitigated expectations against error-free ones, this
//! loss compares the mitigated *state* against the ideal stabilizer state of
//! each Clifford training circuit.  The ideal state's projector expands over
//! its stabilizer group `S_R` as `rho_ideal = 2^-n sum_{g in S_R} g`, so
//!
//! ```text
//! F(R) = Tr[rho_ideal rho_em] = E_{g uniform in S_R}  Tr[g rho_em]
//! ```
//!
//! and each group element is a signed Pauli string whose expectation on the
//! mitigated noisy state is exactly evaluable by the sign-profile machinery.
//! `F` is a pseudo fidelity: since the mitigated "state" is a quasi-mixture,
//! values may exceed 1.
//!
//! The fidelity is a functional of the pre-measurement state, so classical
//! readout flips (which act on recorded outcomes, not the state) are ignored
//! here; Pauli gate noise is required for the same reason the com tables
//! require it on the exact route.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{gate_spans, noise_branches, pattern_sign, GateSpan};
use crate::circuit::{GateAssignment, LayeredCircuit, Observable, SlotGate};
use crate::dense::NoiseModel;
use crate::pauli::{single_qubit_cliffords, CliffordGate, Pauli, PauliString};
use crate::rng::{derive_seed, rng_for, streams};
use crate::sige::{QuasiDistribution, SigESet};
use crate::stabilizer::{
    sample_group_element, signed_mul, stabilizer_group_observables, SignProfile, TrainingSet,
};
use crate::{Error, Result};

/// Default number of group elements drawn per circuit when sampling.
pub const DEFAULT_GROUP_SAMPLES: usize = 32;

/// How the stabilizer-group average is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSampling {
    /// Enumerate all `2^n` group elements (exact; `n <= 16`).
    Full,
    /// Average `count` uniformly drawn elements, seeded deterministically.
    Sampled { count: usize, seed: u64 },
}

impl GroupSampling {
    /// The default sampled mode: [`DEFAULT_GROUP_SAMPLES`] elements.
    pub fn sampled(seed: u64) -> Self {
        GroupSampling::Sampled { count: DEFAULT_GROUP_SAMPLES, seed }
    }
}

/// Catalog gate mapping `p` to `+Z` under conjugation, for measuring an
/// arbitrary Pauli letter in the computational basis.
fn basis_change(p: Pauli) -> &'static CliffordGate {
    let z = Pauli::Z.code() as usize;
    single_qubit_cliffords()
        .iter()
        .find(|g| g.conjugate_code(p.code() as usize) == (z, 1))
        .expect("the 24-gate catalog maps every letter to +Z")
}

/// `Tr[g rho_em]` for one signed group element.
///
/// The element's letters are measured by composing a basis change into the
/// last computing layer and remeasuring `Z` on the support.  The basis change
/// lands *before* the final mitigation layer, whereas the element acts after
/// it, so each support qubit contributes a fixed-up sign: the wrap Pauli `w`
/// there is conjugated against `Z` by the modified circuit but should be
/// conjugated against the element's letter.
fn element_value(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    sige: &SigESet,
    weights: &QuasiDistribution,
    branches: &[(f64, Vec<crate::stabilizer::PauliChannelAt>)],
    spans: &[GateSpan],
    sign: i8,
    letters: &PauliString,
) -> Result<f64> {
    let support = letters.support();
    let modified_circuit = circuit.with_observable(Observable::z_product(&support))?;
    let mut modified = assignment.clone();
    let last_computing = circuit.num_frame_layers() + 1;
    let wrap_layer = 2 * circuit.num_frame_layers() + 2;
    let mut s_fix = 1.0;
    for &q in &support {
        let p = letters.get(q);
        if p != Pauli::Z {
            let b = basis_change(p);
            let b2 = Matrix2::<Complex64>::from_fn(|r, c| b.matrix()[(r, c)]);
            let slot = circuit.computing_slot(last_computing, q);
            let folded = b2 * modified.computing_at(slot).matrix();
            modified.set_computing(slot, SlotGate::from_unitary(folded)?);
        }
        let w = assignment.mitigation_at(circuit.mitigation_slot(wrap_layer, q));
        if !w.commutes(Pauli::Z) {
            s_fix = -s_fix;
        }
        if !w.commutes(p) {
            s_fix = -s_fix;
        }
    }
    let profile = SignProfile::build(&modified_circuit, &modified)?;
    let base: f64 =
        branches.iter().map(|(p, attach)| p * profile.noisy_expectation(attach)).sum();
    let mitigated: f64 = sige
        .patterns
        .iter()
        .zip(weights.weights.iter())
        .map(|(pattern, q)| q * pattern_sign(&profile, spans, pattern))
        .sum();
    Ok(f64::from(sign) * s_fix * base * mitigated)
}

/// Fidelity of the mitigated noisy state of one Clifford assignment against
/// its ideal stabilizer state.
pub fn pseudo_fidelity(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    sige: &SigESet,
    weights: &QuasiDistribution,
    noise: &NoiseModel,
    sampling: GroupSampling,
) -> Result<f64> {
    noise.validate()?;
    if !noise.is_pauli_gate_noise() {
        return Err(Error::InvalidNoise(
            "fidelity evaluation needs Pauli gate noise; amplitude damping has no sign expansion"
                .into(),
        ));
    }
    if weights.weights.len() != sige.patterns.len() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for a pattern set of size {}",
            weights.weights.len(),
            sige.patterns.len()
        )));
    }
    let branches = noise_branches(circuit, noise)?;
    let spans = gate_spans(circuit);
    let generators = stabilizer_group_observables(circuit, assignment)?;
    let n = circuit.n();
    match sampling {
        GroupSampling::Full => {
            if n > 16 {
                return Err(Error::CapExceeded(format!(
                    "full group enumeration over 2^{n} elements; use sampled mode"
                )));
            }
            let mut total = 0.0;
            for mask in 0u64..(1 << n) {
                let mut phase = 0u8;
                let mut acc = PauliString::identity(n);
                for (i, (sign, letters)) in generators.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        let p = if *sign < 0 { 2 } else { 0 };
                        let (ph, prod) = signed_mul((phase, &acc), (p, letters));
                        phase = ph;
                        acc = prod;
                    }
                }
                debug_assert_eq!(phase % 2, 0, "stabilizer products carry real signs");
                let sign = if phase == 0 { 1i8 } else { -1 };
                total += element_value(
                    circuit, assignment, sige, weights, &branches, &spans, sign, &acc,
                )?;
            }
            Ok(total / (1u64 << n) as f64)
        }
        GroupSampling::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidConfig("group sampling needs >= 1 elements".into()));
            }
            let mut total = 0.0;
            for k in 0..count {
                let mut rng = rng_for(seed, streams::GROUP, k as u64);
                let (sign, letters) = sample_group_element(&generators, &mut rng);
                total += element_value(
                    circuit, assignment, sige, weights, &branches, &spans, sign, &letters,
                )?;
            }
            Ok(total / count as f64)
        }
    }
}

/// Mean squared fidelity defect over the training set,
/// `(1/|T|) sum_R (1 - F(R))^2`.  In sampled mode each circuit draws its own
/// deterministic group elements.
pub fn fidelity_loss(
    circuit: &LayeredCircuit,
    training: &TrainingSet,
    sige: &SigESet,
    weights: &QuasiDistribution,
    noise: &NoiseModel,
    sampling: GroupSampling,
) -> Result<f64> {
    if training.entries.is_empty() {
        return Err(Error::InvalidConfig("fidelity loss needs a nonempty training set".into()));
    }
    let defects: Vec<f64> = training
        .entries
        .par_iter()
        .enumerate()
        .map(|(r, entry)| {
            let assignment = entry.assignment(circuit)?;
            let per_circuit = match sampling {
                GroupSampling::Full => GroupSampling::Full,
                GroupSampling::Sampled { count, seed } => GroupSampling::Sampled {
                    count,
                    seed: derive_seed(seed, streams::GROUP, r as u64),
                },
            };
            let f = pseudo_fidelity(circuit, &assignment, sige, weights, noise, per_circuit)?;
            Ok((1.0 - f) * (1.0 - f))
        })
        .collect::<Result<_>>()?;
    Ok(defects.iter().sum::<f64>() / defects.len() as f64)
}
