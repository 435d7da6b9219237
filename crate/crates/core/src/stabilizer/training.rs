//! Training-set sampling: uniformly random single-qubit Clifford
//! assignments, filtered to circuits whose error-free expectation is +/-1.

use super::clifford_expectation;
use crate::circuit::{CircuitDocument, GateAssignment, LayeredCircuit, SlotGate};
use crate::rng::{rng_for, streams};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One accepted training circuit: catalog indices for every computing slot
/// plus its exact error-free expectation (always +1 or -1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingEntry {
    pub clifford_indices: Vec<u8>,
    pub com_ef: f64,
}

impl TrainingEntry {
    /// Expands the compact index form back into a gate assignment with
    /// identity mitigation slots.
    pub fn assignment(&self, circuit: &LayeredCircuit) -> Result<GateAssignment> {
        if self.clifford_indices.len() != circuit.computing_slot_count() {
            return Err(Error::InvalidCircuit(format!(
                "entry has {} computing gates, circuit needs {}",
                self.clifford_indices.len(),
                circuit.computing_slot_count()
            )));
        }
        let mut a = GateAssignment::identity(circuit);
        for (slot, &idx) in self.clifford_indices.iter().enumerate() {
            a.set_computing(slot, SlotGate::from_clifford_index(usize::from(idx))?);
        }
        Ok(a)
    }
}

/// A filtered set of Clifford training circuits for one layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    /// Content hash of the layout the entries were sampled for.
    pub layout_hash: String,
    pub seed: u64,
    pub entries: Vec<TrainingEntry>,
}

/// SHA-256 of the circuit's canonical JSON document (no assignments).
pub fn layout_hash(circuit: &LayeredCircuit) -> String {
    let doc = CircuitDocument::from_parts(circuit, &[]);
    let json = serde_json::to_string(&doc).expect("circuit documents always serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Rejection-samples `size` training circuits: each candidate draws one of
/// the 24 single-qubit Cliffords uniformly per computing slot and is kept
/// when `|com^ef| = 1`.  Candidate `k` uses its own derived seed, so the
/// result is bit-identical for a fixed seed regardless of evaluation order.
/// `max_attempts` (default `10_000 * size`) bounds the search; exceeding it
/// signals a layout/observable mismatch.
pub fn sample_training_set(
    circuit: &LayeredCircuit,
    size: usize,
    seed: u64,
    max_attempts: Option<usize>,
) -> Result<TrainingSet> {
    if size == 0 {
        return Err(Error::InvalidConfig("training set size must be >= 1".into()));
    }
    let cap = max_attempts.unwrap_or_else(|| size.saturating_mul(10_000));
    let slots = circuit.computing_slot_count();
    let mut entries = Vec::with_capacity(size);
    for k in 0..cap {
        if entries.len() == size {
            break;
        }
        let mut rng = rng_for(seed, streams::TRAINING, k as u64);
        let indices: Vec<u8> = (0..slots).map(|_| rng.gen_range(0..24u8)).collect();
        let entry = TrainingEntry { clifford_indices: indices, com_ef: 0.0 };
        let a = entry.assignment(circuit)?;
        let com_ef = clifford_expectation(circuit, &a)?;
        if com_ef.abs() == 1.0 {
            entries.push(TrainingEntry { com_ef, ..entry });
        }
    }
    if entries.len() < size {
        return Err(Error::CapExceeded(format!(
            "accepted only {}/{size} training circuits in {cap} attempts; \
             the observable may be a poor match for the layout",
            entries.len()
        )));
    }
    Ok(TrainingSet { layout_hash: layout_hash(circuit), seed, entries })
}
