//! Single-slot learning: the 24-circuit protocol behind the interference and
//! molecular demos.  One computing slot is swept over the whole single-qubit
//! Clifford catalog while the rest of the circuit stays fixed; because the
//! catalog is closed under right-multiplication by Paulis, the same 24
//! measured expectations also provide `com(C_i, P)` for every Pauli `P`
//! inserted immediately before the swept gate.  A least-squares fit of
//!
//! ```text
//! com_ef(C_i) ~ sum_P q(P) com(C_i, P) + q0
//! ```
//!
//! then yields a four-weight quasi-probability plus an additive offset that
//! absorbs readout bias.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use qem_core::circuit::{GateAssignment, LayeredCircuit, SlotGate};
use qem_core::dense::{clifford_exact_expectation, exact_expectation, sample_shots, NoiseModel};
use qem_core::mitigate::MitigationPlan;
use qem_core::pauli::{clifford_product_index, pack_code, Pauli};
use qem_core::rng::derive_seed;
use qem_core::sige::{QuasiDistribution, SigESet, SigPattern};
use qem_core::stabilizer::{clifford_expectation, layout_hash};

use crate::circuits::streams;
use crate::{CliError, CliResult};

/// Where a Pauli inserted before computing layer `j` on `qubit` physically
/// lands: the frame gate of layer `j - 1` touching that qubit, and whether
/// the qubit is the gate's control (first code digit) or target (second).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsertionPoint {
    pub gate_index: usize,
    pub on_control: bool,
}

/// Resolves the insertion point for a Pauli ahead of computing slot
/// `(j, qubit)`.  Fails when the preceding frame layer has no gate on the
/// qubit (the insertion would commute further back, outside this protocol).
pub fn insertion_before(
    circuit: &LayeredCircuit,
    j: usize,
    qubit: usize,
) -> CliResult<InsertionPoint> {
    if j < 2 || j > circuit.num_frame_layers() + 1 {
        return Err(CliError::Config(format!(
            "computing layer {j} has no preceding frame layer"
        )));
    }
    for (g, (layer, _, gate)) in circuit.gates_in_order().enumerate() {
        if layer == j - 1 && (gate.control == qubit || gate.target == qubit) {
            return Ok(InsertionPoint { gate_index: g, on_control: gate.control == qubit });
        }
    }
    Err(CliError::Config(format!(
        "frame layer {} has no gate touching qubit {qubit}",
        j - 1
    )))
}

/// The learned single-slot correction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleSlotFit {
    /// Quasi-probabilities for inserting I, X, Y, Z, in that order.
    pub weights: [f64; 4],
    /// Additive offset `q0`.
    pub offset: f64,
    /// Mean squared residual of the fit over the 24 training circuits.
    pub residual: f64,
}

impl SingleSlotFit {
    /// Overhead cost of the weights (the offset is never sampled).
    pub fn overhead(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// Four-pattern significant-error set {I, X, Y, Z} at one insertion point.
pub fn single_slot_patterns(circuit: &LayeredCircuit, point: InsertionPoint) -> SigESet {
    let mut patterns = vec![SigPattern::trivial()];
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        let code = if point.on_control {
            pack_code(&[p, Pauli::I])
        } else {
            pack_code(&[Pauli::I, p])
        };
        let mut pattern = SigPattern::trivial();
        pattern.decorations.insert(point.gate_index, code);
        patterns.push(pattern);
    }
    SigESet { k: 1, model: "single-slot".into(), layout_hash: layout_hash(circuit), patterns }
}

/// Runs the 24-circuit learning stage.  `base` fixes every computing slot
/// except `r_slot` and must be all-Clifford so the error-free targets come
/// from the stabilizer simulator.  `learn_shots = 0` evaluates the noisy
/// expectations exactly; otherwise each of the 24 circuits is estimated from
/// that many sampled shots on its own derived seed.
pub fn learn_single_slot(
    circuit: &LayeredCircuit,
    base: &GateAssignment,
    r_slot: usize,
    point: InsertionPoint,
    noise: &NoiseModel,
    learn_shots: usize,
    seed: u64,
) -> CliResult<SingleSlotFit> {
    if !base.all_computing_clifford() {
        return Err(CliError::Config(
            "single-slot learning needs an all-Clifford base assignment".into(),
        ));
    }
    let mut com = [0.0_f64; 24];
    let mut com_ef = [0.0_f64; 24];
    for i in 0..24 {
        let mut a = base.clone();
        a.set_computing(r_slot, SlotGate::from_clifford_index(i).expect("index in range"));
        com_ef[i] = clifford_expectation(circuit, &a)?;
        com[i] = if learn_shots == 0 {
            if noise.is_pauli_gate_noise() {
                clifford_exact_expectation(circuit, &a, noise)?
            } else {
                exact_expectation(circuit, &a, noise)?
            }
        } else {
            let shot_seed = derive_seed(seed, streams::ESTIMATE, i as u64);
            let records = sample_shots(circuit, &a, noise, learn_shots, shot_seed)?;
            records.iter().map(|r| r.f_value).sum::<f64>() / learn_shots as f64
        };
    }

    // Design row i: [com(C_i, I), com(C_i, X), com(C_i, Y), com(C_i, Z), 1].
    let mut design = DMatrix::zeros(24, 5);
    for i in 0..24 {
        for (col, p) in Pauli::ALL.into_iter().enumerate() {
            design[(i, col)] = com[clifford_product_index(i, p)];
        }
        design[(i, 4)] = 1.0;
    }
    let target = DVector::from_row_slice(&com_ef);
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if max_sv == 0.0 {
        return Err(CliError::Run("single-slot design matrix is zero".into()));
    }
    let solution = svd
        .solve(&target, 1e-12 * max_sv)
        .map_err(|e| CliError::Run(format!("least squares failed: {e}")))?;
    let fitted = &design * &solution;
    let residual = (&fitted - &target).norm_squared() / 24.0;
    Ok(SingleSlotFit {
        weights: [solution[0], solution[1], solution[2], solution[3]],
        offset: solution[4],
        residual,
    })
}

/// Wraps the fit into an exact-mode mitigation plan over the four-pattern
/// set (callers switch it to sampled mode as needed).
pub fn fit_plan(
    circuit: &LayeredCircuit,
    point: InsertionPoint,
    fit: &SingleSlotFit,
) -> CliResult<MitigationPlan> {
    let sige = single_slot_patterns(circuit, point);
    let plan = MitigationPlan::new(
        sige,
        QuasiDistribution { weights: fit.weights.to_vec() },
    )
    .map_err(CliError::from)?
    .with_offset(fit.offset);
    Ok(plan)
}
