//! Random circuit generation for the experiment drivers: Haar-random and
//! Clifford computing assignments, plus deterministically filtered test sets.

use rand::Rng;
use rayon::prelude::*;

use qem_core::circuit::{GateAssignment, LayeredCircuit, SlotGate};
use qem_core::dense::{exact_expectation, NoiseModel};
use qem_core::linalg::haar_unitary_2x2;
use qem_core::rng::rng_for;
use qem_core::stabilizer::clifford_expectation;

use crate::{CliError, CliResult};

/// RNG stream tags for harness-level draws, disjoint from the simulator
/// streams used inside the core crate.
pub mod streams {
    /// Candidate assignments for filtered test sets.
    pub const FILTER: u64 = 0x21;
    /// Variational parameter initialization.
    pub const PARAMS: u64 = 0x22;
    /// Per-estimate sub-seeds handed to sampling APIs.
    pub const ESTIMATE: u64 = 0x23;
}

/// Fills every computing slot with an independent Haar-random unitary.
pub fn haar_assignment(circuit: &LayeredCircuit, rng: &mut impl Rng) -> GateAssignment {
    let mut a = GateAssignment::identity(circuit);
    for j in 1..=circuit.num_frame_layers() + 1 {
        for q in 0..circuit.n() {
            let u = haar_unitary_2x2(rng);
            a.set_computing(
                circuit.computing_slot(j, q),
                SlotGate::from_unitary(u).expect("haar matrices are unitary"),
            );
        }
    }
    a
}

/// Fills every computing slot with a uniform draw from the 24-gate catalog.
pub fn random_clifford_assignment(circuit: &LayeredCircuit, rng: &mut impl Rng) -> GateAssignment {
    let mut a = GateAssignment::identity(circuit);
    for j in 1..=circuit.num_frame_layers() + 1 {
        for q in 0..circuit.n() {
            let idx = rng.gen_range(0..24);
            a.set_computing(
                circuit.computing_slot(j, q),
                SlotGate::from_clifford_index(idx).expect("catalog index in range"),
            );
        }
    }
    a
}

/// A test circuit that passed its acceptance filter, with the error-free
/// expectation it was filtered on.
#[derive(Clone, Debug)]
pub struct FilteredCircuit {
    pub assignment: GateAssignment,
    pub com_ef: f64,
}

/// Generates `count` Haar-random computing assignments whose error-free
/// expectation clears `|com_ef| > threshold`.  Candidate `k` derives all of
/// its randomness from `(seed, FILTER, k)` and candidates are screened in
/// index order, so the kept set is independent of thread count.  Exceeding
/// `cap` candidates aborts with the runtime-cap error.
pub fn filtered_haar_circuits(
    circuit: &LayeredCircuit,
    count: usize,
    threshold: f64,
    cap: usize,
    seed: u64,
) -> CliResult<Vec<FilteredCircuit>> {
    filtered_set(circuit, count, cap, |k| {
        let mut rng = rng_for(seed, streams::FILTER, k);
        let assignment = haar_assignment(circuit, &mut rng);
        let com_ef = exact_expectation(circuit, &assignment, &NoiseModel::noiseless())?;
        Ok((com_ef.abs() > threshold).then_some(FilteredCircuit { assignment, com_ef }))
    })
}

/// Generates `count` random Clifford assignments with a nonzero error-free
/// expectation (Clifford expectations are -1, 0, or +1, so nonzero means
/// unit magnitude).  Same determinism contract as [`filtered_haar_circuits`].
pub fn nonzero_clifford_circuits(
    circuit: &LayeredCircuit,
    count: usize,
    cap: usize,
    seed: u64,
) -> CliResult<Vec<FilteredCircuit>> {
    filtered_set(circuit, count, cap, |k| {
        let mut rng = rng_for(seed, streams::FILTER, k);
        let assignment = random_clifford_assignment(circuit, &mut rng);
        let com_ef = clifford_expectation(circuit, &assignment)?;
        Ok((com_ef != 0.0).then_some(FilteredCircuit { assignment, com_ef }))
    })
}

fn filtered_set<F>(
    circuit: &LayeredCircuit,
    count: usize,
    cap: usize,
    screen: F,
) -> CliResult<Vec<FilteredCircuit>>
where
    F: Fn(u64) -> qem_core::Result<Option<FilteredCircuit>> + Sync,
{
    let _ = circuit;
    if count == 0 {
        return Err(CliError::Config("filtered set needs count >= 1".into()));
    }
    const CHUNK: usize = 64;
    let mut kept = Vec::with_capacity(count);
    let mut next = 0usize;
    while kept.len() < count && next < cap {
        let hi = (next + CHUNK).min(cap);
        let batch: Vec<Option<FilteredCircuit>> = (next..hi)
            .into_par_iter()
            .map(|k| screen(k as u64))
            .collect::<qem_core::Result<_>>()?;
        for item in batch.into_iter().flatten() {
            if kept.len() < count {
                kept.push(item);
            }
        }
        next = hi;
    }
    if kept.len() < count {
        return Err(CliError::Cap(format!(
            "acceptance filter kept only {} of {count} circuits after {cap} candidates",
            kept.len()
        )));
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qem_core::circuit::{build_layout, LayoutKind};

    #[test]
    fn filtered_circuits_clear_the_threshold_and_are_deterministic() {
        let circuit = build_layout(LayoutKind::CnotLadder, 3, 2).unwrap();
        let set = filtered_haar_circuits(&circuit, 6, 0.3, 10_000, 11).unwrap();
        assert_eq!(set.len(), 6);
        for c in &set {
            assert!(c.com_ef.abs() > 0.3);
            let recomputed =
                exact_expectation(&circuit, &c.assignment, &NoiseModel::noiseless()).unwrap();
            assert_eq!(recomputed, c.com_ef);
        }
        let again = filtered_haar_circuits(&circuit, 6, 0.3, 10_000, 11).unwrap();
        for (a, b) in set.iter().zip(&again) {
            assert_eq!(a.com_ef, b.com_ef);
            assert_eq!(a.assignment.mitigation(), b.assignment.mitigation());
        }
    }

    #[test]
    fn starvation_hits_the_runtime_cap() {
        let circuit = build_layout(LayoutKind::CnotLadder, 3, 2).unwrap();
        let err = filtered_haar_circuits(&circuit, 5, 0.999, 64, 1).unwrap_err();
        assert!(matches!(err, CliError::Cap(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn clifford_test_sets_have_unit_magnitude_targets() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 3).unwrap();
        let set = nonzero_clifford_circuits(&circuit, 8, 10_000, 5).unwrap();
        assert_eq!(set.len(), 8);
        for c in &set {
            assert_eq!(c.com_ef.abs(), 1.0);
        }
    }
}
