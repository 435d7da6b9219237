//! Layered circuit model: frame gates, computing-gate slots, and
//! error-mitigating slots.
//!
//! A circuit on `n` qubits with `N` frame layers interleaves three kinds of
//! operations.  Computing layers `j = 1..=N+1` hold one arbitrary
//! single-qubit gate per qubit.  Frame layers `j = 1..=N` hold two-qubit
//! Clifford gates with a total placement order inside each layer (the noise
//! model applies gate channels in that order).  Around every computing layer
//! sit two layers of single-qubit Pauli mitigation slots, numbered
//! `1..=2N+2`, so the execution order is
//!
//! ```text
//! init, P1, R1, P2, G1, P3, R2, P4, G2, ..., G_N, P_{2N+1}, R_{N+1}, P_{2N+2}, measure
//! ```
//!
//! This gives `n(N+1)` computing slots and `2n(N+1)` mitigation slots.  Slot
//! IDs are dense indices: computing slot `(j, q) -> (j-1)*n + q` and
//! mitigation slot `(l, q) -> (l-1)*n + q` with 1-based layer numbers.

mod assignment;
mod layouts;

pub use assignment::{
    apply_error_pattern, compose_adjacent_singles, ErrorPattern, GateAssignment, SlotGate,
};
pub use layouts::{build_layout, LayoutKind};

use crate::pauli::{cnot, cz_gate, CliffordGate, Pauli, PauliString};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Two-qubit frame gate families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameGateKind {
    #[serde(rename = "cnot")]
    Cnot,
    #[serde(rename = "cz")]
    Cz,
}

impl FrameGateKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameGateKind::Cnot => "cnot",
            FrameGateKind::Cz => "cz",
        }
    }

    /// The shared Clifford action of this gate family, with the control as
    /// the first (most significant) qubit of two-qubit Pauli codes.
    pub fn clifford(self) -> &'static CliffordGate {
        static CNOT: OnceLock<CliffordGate> = OnceLock::new();
        static CZ: OnceLock<CliffordGate> = OnceLock::new();
        match self {
            FrameGateKind::Cnot => CNOT.get_or_init(cnot),
            FrameGateKind::Cz => CZ.get_or_init(cz_gate),
        }
    }
}

/// One placed two-qubit gate.  For `Cz` the control/target split is only a
/// labeling (the action is symmetric), but it still fixes which qubit is the
/// first digit of packed two-qubit Pauli codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameGate {
    pub kind: FrameGateKind,
    pub control: usize,
    pub target: usize,
}

impl FrameGate {
    pub fn cnot(control: usize, target: usize) -> Self {
        FrameGate { kind: FrameGateKind::Cnot, control, target }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        FrameGate { kind: FrameGateKind::Cz, control, target }
    }

    pub fn clifford(&self) -> &'static CliffordGate {
        self.kind.clifford()
    }
}

/// Measured observable: a tensor product of `Z` on the listed qubits and `I`
/// elsewhere, evaluated on bitstrings as `f(mu) = prod_q (1 - 2 mu_q)`.
///
/// Every workload here uses such an observable; `f_max` is tracked anyway so
/// variance bounds stay valid if other +/-1-valued functions are added.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observable {
    z_qubits: Vec<usize>,
}

impl Observable {
    /// `Z` on a single qubit.
    pub fn z(qubit: usize) -> Self {
        Observable { z_qubits: vec![qubit] }
    }

    /// A product of `Z` factors.  Repeated qubits cancel in pairs.
    pub fn z_product(qubits: &[usize]) -> Self {
        let mut zs: Vec<usize> = Vec::new();
        for &q in qubits {
            if let Some(pos) = zs.iter().position(|&x| x == q) {
                zs.remove(pos);
            } else {
                zs.push(q);
            }
        }
        zs.sort_unstable();
        Observable { z_qubits: zs }
    }

    pub fn z_qubits(&self) -> &[usize] {
        &self.z_qubits
    }

    /// `f(mu)` for one measurement outcome (`true` = outcome 1).
    pub fn eval(&self, bits: &[bool]) -> f64 {
        let flips = self.z_qubits.iter().filter(|&&q| bits[q]).count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Largest magnitude `|f|` can attain, used in variance bounds.
    pub fn f_max(&self) -> f64 {
        1.0
    }

    /// Bit mask with bit `q` set for each measured qubit (packed-outcome
    /// convention: bit `q` of an outcome word is qubit `q`).
    pub fn bit_mask(&self) -> u64 {
        self.z_qubits.iter().fold(0, |m, &q| m | (1 << q))
    }

    /// `f(mu)` for a packed outcome word (bit `q` = outcome of qubit `q`).
    pub fn eval_outcome(&self, outcome: u64) -> f64 {
        if (outcome & self.bit_mask()).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The observable as an `n`-qubit Pauli string.
    pub fn pauli_string(&self, n: usize) -> Result<PauliString> {
        let pairs: Vec<(usize, Pauli)> = self.z_qubits.iter().map(|&q| (q, Pauli::Z)).collect();
        PauliString::from_sparse(n, &pairs)
    }
}

/// Immutable circuit under the layered model; see the module docs for the
/// layer structure and slot numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredCircuit {
    n: usize,
    layers: Vec<Vec<FrameGate>>,
    observable: Observable,
}

impl LayeredCircuit {
    /// Validates qubit indices, in-layer disjointness, and the observable
    /// support before accepting the circuit.
    pub fn new(n: usize, layers: Vec<Vec<FrameGate>>, observable: Observable) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one qubit".into()));
        }
        for (li, layer) in layers.iter().enumerate() {
            let mut used = vec![false; n];
            for g in layer {
                if g.control >= n || g.target >= n {
                    return Err(Error::InvalidCircuit(format!(
                        "frame layer {}: gate ({}, {}) out of range for n = {}",
                        li + 1,
                        g.control,
                        g.target,
                        n
                    )));
                }
                if g.control == g.target {
                    return Err(Error::InvalidCircuit(format!(
                        "frame layer {}: gate acts twice on qubit {}",
                        li + 1,
                        g.control
                    )));
                }
                for q in [g.control, g.target] {
                    if used[q] {
                        return Err(Error::InvalidCircuit(format!(
                            "frame layer {}: qubit {} used by two gates",
                            li + 1,
                            q
                        )));
                    }
                    used[q] = true;
                }
            }
        }
        for &q in observable.z_qubits() {
            if q >= n {
                return Err(Error::InvalidCircuit(format!(
                    "observable qubit {q} out of range for n = {n}"
                )));
            }
        }
        Ok(LayeredCircuit { n, layers, observable })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of frame layers `N`.
    pub fn num_frame_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn frame_layers(&self) -> &[Vec<FrameGate>] {
        &self.layers
    }

    /// Frame gates in execution order as `(frame layer 1..=N, order in layer, gate)`.
    pub fn gates_in_order(&self) -> impl Iterator<Item = (usize, usize, &FrameGate)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(li, layer)| layer.iter().enumerate().map(move |(oi, g)| (li + 1, oi, g)))
    }

    pub fn frame_gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn with_observable(&self, observable: Observable) -> Result<Self> {
        LayeredCircuit::new(self.n, self.layers.clone(), observable)
    }

    /// `n(N+1)` single-qubit computing slots.
    pub fn computing_slot_count(&self) -> usize {
        self.n * (self.num_frame_layers() + 1)
    }

    /// `2n(N+1)` single-qubit mitigation slots.
    pub fn mitigation_slot_count(&self) -> usize {
        2 * self.computing_slot_count()
    }

    /// Slot ID of the computing gate in layer `j` (1-based, `1..=N+1`) on `qubit`.
    pub fn computing_slot(&self, j: usize, qubit: usize) -> usize {
        assert!(
            (1..=self.num_frame_layers() + 1).contains(&j) && qubit < self.n,
            "computing slot ({j}, {qubit}) out of range"
        );
        (j - 1) * self.n + qubit
    }

    /// Slot ID of the mitigation gate in layer `l` (1-based, `1..=2N+2`) on `qubit`.
    pub fn mitigation_slot(&self, l: usize, qubit: usize) -> usize {
        assert!(
            (1..=2 * self.num_frame_layers() + 2).contains(&l) && qubit < self.n,
            "mitigation slot ({l}, {qubit}) out of range"
        );
        (l - 1) * self.n + qubit
    }

    /// Mitigation layers that can act nontrivially: `1, 3, ..., 2N+1, 2N+2`.
    /// Gates in even layers `2..=2N` commute into the preceding computing
    /// gate and are never populated.
    pub fn active_mitigation_layers(&self) -> Vec<usize> {
        let nl = self.num_frame_layers();
        let mut layers: Vec<usize> = (0..=nl).map(|j| 2 * j + 1).collect();
        layers.push(2 * nl + 2);
        layers
    }
}

/// Flat record of one placed frame gate for serialization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGateRecord {
    /// Frame layer, 1-based.
    pub layer: usize,
    /// Gate family name (`"cnot"` or `"cz"`).
    pub gate: String,
    pub control: usize,
    pub target: usize,
    /// Placement order within the layer, 0-based.
    pub order: usize,
}

/// JSON document bundling a circuit with any number of gate assignments.
/// Round-trips bit-exactly: floating-point entries are serialized with
/// shortest-round-trip formatting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub n: usize,
    #[serde(rename = "N")]
    pub num_frame_layers: usize,
    pub frame: Vec<FrameGateRecord>,
    pub observable: Observable,
    pub assignments: Vec<GateAssignment>,
}

impl CircuitDocument {
    pub fn from_parts(circuit: &LayeredCircuit, assignments: &[GateAssignment]) -> Self {
        let frame = circuit
            .gates_in_order()
            .map(|(layer, order, g)| FrameGateRecord {
                layer,
                gate: g.kind.name().to_string(),
                control: g.control,
                target: g.target,
                order,
            })
            .collect();
        CircuitDocument {
            n: circuit.n(),
            num_frame_layers: circuit.num_frame_layers(),
            frame,
            observable: circuit.observable().clone(),
            assignments: assignments.to_vec(),
        }
    }

    /// Rebuilds the circuit and validates every assignment against it.
    pub fn into_parts(self) -> Result<(LayeredCircuit, Vec<GateAssignment>)> {
        let mut layers: Vec<Vec<(usize, FrameGate)>> = vec![Vec::new(); self.num_frame_layers];
        for rec in &self.frame {
            if rec.layer == 0 || rec.layer > self.num_frame_layers {
                return Err(Error::InvalidCircuit(format!(
                    "frame record layer {} outside 1..={}",
                    rec.layer, self.num_frame_layers
                )));
            }
            let kind = match rec.gate.as_str() {
                "cnot" => FrameGateKind::Cnot,
                "cz" => FrameGateKind::Cz,
                other => {
                    return Err(Error::InvalidCircuit(format!("unknown frame gate {other:?}")))
                }
            };
            layers[rec.layer - 1].push((
                rec.order,
                FrameGate { kind, control: rec.control, target: rec.target },
            ));
        }
        let mut plain = Vec::with_capacity(layers.len());
        for (li, mut layer) in layers.into_iter().enumerate() {
            layer.sort_by_key(|(order, _)| *order);
            for (slot, (order, _)) in layer.iter().enumerate() {
                if *order != slot {
                    return Err(Error::InvalidCircuit(format!(
                        "frame layer {}: placement orders are not 0..len",
                        li + 1
                    )));
                }
            }
            plain.push(layer.into_iter().map(|(_, g)| g).collect());
        }
        let circuit = LayeredCircuit::new(self.n, plain, self.observable)?;
        for a in &self.assignments {
            a.validate_for(&circuit)?;
        }
        Ok((circuit, self.assignments))
    }
}
