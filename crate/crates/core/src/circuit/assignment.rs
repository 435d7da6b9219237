//! Gate assignments (computing + mitigation slot contents) and error
//! patterns, plus the two rewrites used throughout the protocol: attaching an
//! error pattern's Paulis to the mitigation slots, and folding adjacent
//! single-qubit gates together.

use super::LayeredCircuit;
use crate::linalg::dmat2;
use crate::pauli::{clifford_index_of, single_qubit_cliffords, CliffordGate, Pauli, PauliString};
use crate::{Error, Result};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Content of one single-qubit computing slot: an arbitrary unitary, tagged
/// with its index in the 24-element single-qubit Clifford catalog whenever
/// the action matches one (up to global phase).
#[derive(Clone, Debug, PartialEq)]
pub struct SlotGate {
    matrix: Matrix2<Complex64>,
    clifford: Option<u8>,
}

impl SlotGate {
    pub fn identity() -> Self {
        SlotGate { matrix: Matrix2::identity(), clifford: Some(0) }
    }

    /// Gate number `idx` of the single-qubit Clifford catalog.
    pub fn from_clifford_index(idx: usize) -> Result<Self> {
        let catalog = single_qubit_cliffords();
        let gate = catalog.get(idx).ok_or_else(|| {
            Error::InvalidCircuit(format!("Clifford index {idx} outside the 24-gate catalog"))
        })?;
        let m = gate.matrix();
        Ok(SlotGate {
            matrix: Matrix2::from_fn(|r, c| m[(r, c)]),
            clifford: Some(idx as u8),
        })
    }

    /// Wraps an arbitrary single-qubit unitary, detecting Clifford actions.
    pub fn from_unitary(matrix: Matrix2<Complex64>) -> Result<Self> {
        let gram = matrix.adjoint() * matrix;
        let defect = (gram - Matrix2::identity()).norm();
        if defect > 1e-9 {
            return Err(Error::InvalidCircuit(format!(
                "slot gate is not unitary (defect {defect:.2e})"
            )));
        }
        let clifford = CliffordGate::from_matrix("slot", dmat2(&matrix))
            .ok()
            .and_then(|g| clifford_index_of(&g))
            .map(|i| i as u8);
        Ok(SlotGate { matrix, clifford })
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    pub fn clifford_index(&self) -> Option<usize> {
        self.clifford.map(usize::from)
    }

    pub fn is_clifford(&self) -> bool {
        self.clifford.is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct SlotGateDoc {
    matrix: [[[f64; 2]; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    clifford: Option<u8>,
}

impl Serialize for SlotGate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut matrix = [[[0.0; 2]; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let v = self.matrix[(r, c)];
                matrix[r][c] = [v.re, v.im];
            }
        }
        SlotGateDoc { matrix, clifford: self.clifford }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SlotGate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = SlotGateDoc::deserialize(deserializer)?;
        let matrix = Matrix2::from_fn(|r, c| {
            Complex64::new(doc.matrix[r][c][0], doc.matrix[r][c][1])
        });
        let gram = matrix.adjoint() * matrix;
        if (gram - Matrix2::identity()).norm() > 1e-9 {
            return Err(D::Error::custom("slot gate matrix is not unitary"));
        }
        if let Some(idx) = doc.clifford {
            let catalog = single_qubit_cliffords();
            let claimed = catalog
                .get(usize::from(idx))
                .ok_or_else(|| D::Error::custom("Clifford tag outside the 24-gate catalog"))?;
            let actual = CliffordGate::from_matrix("slot", dmat2(&matrix))
                .map_err(|_| D::Error::custom("Clifford tag on a non-Clifford matrix"))?;
            if !actual.same_action(claimed) {
                return Err(D::Error::custom("Clifford tag disagrees with the matrix"));
            }
        }
        Ok(SlotGate { matrix, clifford: doc.clifford })
    }
}

mod pauli_letters {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &[Pauli],
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let s: String = v.iter().map(|p| p.to_char()).collect();
        serializer.serialize_str(&s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Vec<Pauli>, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.chars()
            .map(|c| Pauli::from_char(c).map_err(D::Error::custom))
            .collect()
    }
}

/// Full assignment of a circuit's single-qubit slots: `n(N+1)` computing
/// gates and `2n(N+1)` mitigation Paulis (identity when untouched).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateAssignment {
    computing: Vec<SlotGate>,
    #[serde(with = "pauli_letters")]
    mitigation: Vec<Pauli>,
}

impl GateAssignment {
    /// Identity gates in every slot.
    pub fn identity(circuit: &LayeredCircuit) -> Self {
        GateAssignment {
            computing: vec![SlotGate::identity(); circuit.computing_slot_count()],
            mitigation: vec![Pauli::I; circuit.mitigation_slot_count()],
        }
    }

    pub fn computing(&self) -> &[SlotGate] {
        &self.computing
    }

    pub fn mitigation(&self) -> &[Pauli] {
        &self.mitigation
    }

    pub fn computing_at(&self, slot: usize) -> &SlotGate {
        &self.computing[slot]
    }

    pub fn set_computing(&mut self, slot: usize, gate: SlotGate) {
        self.computing[slot] = gate;
    }

    pub fn mitigation_at(&self, slot: usize) -> Pauli {
        self.mitigation[slot]
    }

    pub fn set_mitigation(&mut self, slot: usize, p: Pauli) {
        self.mitigation[slot] = p;
    }

    /// Multiplies `p` onto the mitigation slot (phase-free Pauli product).
    pub fn mul_mitigation(&mut self, slot: usize, p: Pauli) {
        self.mitigation[slot] = p.mul(self.mitigation[slot]);
    }

    pub fn all_computing_clifford(&self) -> bool {
        self.computing.iter().all(SlotGate::is_clifford)
    }

    pub fn validate_for(&self, circuit: &LayeredCircuit) -> Result<()> {
        if self.computing.len() != circuit.computing_slot_count()
            || self.mitigation.len() != circuit.mitigation_slot_count()
        {
            return Err(Error::InvalidCircuit(format!(
                "assignment has {} computing / {} mitigation slots, circuit needs {} / {}",
                self.computing.len(),
                self.mitigation.len(),
                circuit.computing_slot_count(),
                circuit.mitigation_slot_count()
            )));
        }
        Ok(())
    }
}

/// A layered Pauli error pattern `sigma`.  Entry `0` sits in mitigation
/// layer 1 (after initialization), entry `j` for `1 <= j <= N` in mitigation
/// layer `2j+1` (after frame layer `j`), and entry `N+1` in mitigation layer
/// `2N+2` (before measurement).  The two boundary entries may contain only
/// `I` and `X`: against a fixed-basis initialization or measurement, `Z`
/// factors act trivially, so only bit flips are distinguishable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPattern {
    layers: Vec<PauliString>,
}

impl ErrorPattern {
    /// The weight-0 pattern for an `n`-qubit circuit with `num_frame_layers`
    /// frame layers.
    pub fn trivial(n: usize, num_frame_layers: usize) -> Self {
        ErrorPattern { layers: vec![PauliString::identity(n); num_frame_layers + 2] }
    }

    pub fn new(layers: Vec<PauliString>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidCircuit(
                "error pattern needs initialization and measurement layers".into(),
            ));
        }
        let n = layers[0].n();
        if layers.iter().any(|l| l.n() != n) {
            return Err(Error::InvalidCircuit("error pattern layers differ in width".into()));
        }
        for (which, layer) in
            [("initialization", &layers[0]), ("measurement", layers.last().unwrap())]
        {
            if !layer.is_ix_only() {
                return Err(Error::InvalidCircuit(format!(
                    "{which} layer {layer} contains Paulis other than I and X"
                )));
            }
        }
        Ok(ErrorPattern { layers })
    }

    pub fn n(&self) -> usize {
        self.layers[0].n()
    }

    pub fn num_frame_layers(&self) -> usize {
        self.layers.len() - 2
    }

    pub fn layers(&self) -> &[PauliString] {
        &self.layers
    }

    /// Mitigation layer number (1-based) that pattern entry `idx` targets.
    pub fn mitigation_layer(&self, idx: usize) -> usize {
        assert!(idx < self.layers.len(), "pattern entry {idx} out of range");
        if idx == self.layers.len() - 1 {
            2 * self.num_frame_layers() + 2
        } else {
            2 * idx + 1
        }
    }

    /// Sets one letter, enforcing the boundary-layer restriction.
    pub fn set(&mut self, idx: usize, qubit: usize, p: Pauli) -> Result<()> {
        let boundary = idx == 0 || idx == self.layers.len() - 1;
        if boundary && !matches!(p, Pauli::I | Pauli::X) {
            return Err(Error::InvalidCircuit(format!(
                "boundary pattern layers admit only I and X, got {p:?}"
            )));
        }
        self.layers[idx].set(qubit, p);
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.layers.iter().all(PauliString::is_identity)
    }

    /// Number of circuit elements decorated with a non-identity Pauli: a
    /// frame gate counts once even if both its qubits carry letters, while
    /// initialization, measurement, and idle-qubit letters count per qubit.
    pub fn weight_for(&self, circuit: &LayeredCircuit) -> usize {
        let mut weight = self.layers[0].weight() + self.layers.last().unwrap().weight();
        for (j, layer) in self.layers[1..self.layers.len() - 1].iter().enumerate() {
            let gates = &circuit.frame_layers()[j];
            let mut covered = vec![false; circuit.n()];
            for g in gates {
                if layer.get(g.control) != Pauli::I || layer.get(g.target) != Pauli::I {
                    weight += 1;
                }
                covered[g.control] = true;
                covered[g.target] = true;
            }
            weight += (0..circuit.n())
                .filter(|&q| !covered[q] && layer.get(q) != Pauli::I)
                .count();
        }
        weight
    }
}

/// Multiplies the pattern's Paulis onto the assignment's mitigation slots in
/// layers `1, 3, ..., 2N+1, 2N+2`.  Even interior layers are never touched:
/// a Pauli there commutes through the frame gate into an adjacent odd layer.
pub fn apply_error_pattern(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    pattern: &ErrorPattern,
) -> Result<GateAssignment> {
    assignment.validate_for(circuit)?;
    if pattern.n() != circuit.n() || pattern.num_frame_layers() != circuit.num_frame_layers() {
        return Err(Error::InvalidCircuit(format!(
            "pattern shaped {}x{} does not fit circuit shaped {}x{}",
            pattern.n(),
            pattern.num_frame_layers(),
            circuit.n(),
            circuit.num_frame_layers()
        )));
    }
    let mut out = assignment.clone();
    for (idx, layer) in pattern.layers().iter().enumerate() {
        let l = pattern.mitigation_layer(idx);
        for q in 0..circuit.n() {
            let p = layer.get(q);
            if p != Pauli::I {
                out.mul_mitigation(circuit.mitigation_slot(l, q), p);
            }
        }
    }
    Ok(out)
}

/// Folds each `P_after * R * P_before` triple into a single computing gate,
/// leaving every mitigation slot at identity.  The result is physically
/// equivalent: single-qubit gates adjacent on a wire can always be combined.
pub fn compose_adjacent_singles(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
) -> Result<GateAssignment> {
    assignment.validate_for(circuit)?;
    let mut out = assignment.clone();
    for j in 1..=circuit.num_frame_layers() + 1 {
        for q in 0..circuit.n() {
            let slot = circuit.computing_slot(j, q);
            let before = assignment.mitigation_at(circuit.mitigation_slot(2 * j - 1, q));
            let after = assignment.mitigation_at(circuit.mitigation_slot(2 * j, q));
            if before == Pauli::I && after == Pauli::I {
                continue;
            }
            let folded =
                after.matrix() * assignment.computing_at(slot).matrix() * before.matrix();
            out.set_computing(slot, SlotGate::from_unitary(folded)?);
        }
    }
    for p in &mut out.mitigation {
        *p = Pauli::I;
    }
    Ok(out)
}
