//! Dense (full Hilbert space) simulation of noisy layered circuits.
//!
//! Two evaluation paths are provided:
//!
//! - [`exact_expectation`]: density-matrix evolution through the execution
//!   order `init -> P1 -> R1 -> P2 -> [damping] -> G1 (+channels) -> P3 -> ...`,
//!   handling arbitrary (non-Clifford) computing gates, amplitude damping,
//!   temporal bad-qubit mixtures, and classical measurement flips.
//! - [`sample_shots`]: pure-state trajectory sampling producing one
//!   [`ShotRecord`] per run, with per-shot Pauli fault draws, two-outcome
//!   damping unraveling, per-shot bad-qubit draws, and readout flips.
//!
//! [`clifford_exact_expectation`] offers the same semantics for the
//! all-Clifford / Pauli-noise case through the stabilizer back end, used as a
//! fast path and as an independent cross-check of the dense evolution.
//!
//! Amplitude damping sits right after each completed computing slot group
//! (computing gates plus their flanking mitigation gates), so folding
//! mitigation Paulis into the computing gates never moves noise across a
//! channel and exact values are invariant under that compilation step.

pub mod noise;
pub mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{GateAssignment, LayeredCircuit, Observable};
use crate::linalg::dmat2;
use crate::pauli::{codes_commute, ptm_of_channel, ChannelSpec, Pauli};
use crate::rng::{rng_for, streams};
use crate::stabilizer::SignProfile;
use crate::{Error, Result};

pub use noise::{
    build_noise_model, scaled_epsilon, CrosstalkKind, LocalChannel, LocalKind, NoiseModel,
    TemporalModel, DEFAULT_DAMPING_GAMMA, DEFAULT_EPSILON, DEFAULT_ETA,
};
pub use state::{DensityMatrix, Statevector, MAX_DENSE_QUBITS};

/// Amplitude-damping Kraus pair `K0 = diag(1, sqrt(1-gamma))`,
/// `K1 = sqrt(gamma) |0><1|`.
pub fn damping_kraus(gamma: f64) -> [DMatrix<Complex64>; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let k0 = DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(1.0, 0.0), zero, zero, Complex64::new((1.0 - gamma).sqrt(), 0.0)],
    );
    let k1 = DMatrix::from_row_slice(2, 2, &[zero, Complex64::new(gamma.sqrt(), 0.0), zero, zero]);
    [k0, k1]
}

/// Symmetrized readout-error rates produced by the balanced-measurement
/// wrap: both flip directions average to `(p0 + p1) / 2`.
pub fn balanced_measurement_wrap(p0: f64, p1: f64) -> (f64, f64) {
    let m = 0.5 * (p0 + p1);
    (m, m)
}

/// Effective classical flip rates seen by the observable, accounting for the
/// balanced-measurement wrap.
pub fn effective_flips(noise: &NoiseModel) -> (f64, f64) {
    if noise.balanced {
        balanced_measurement_wrap(noise.meas_flip[0], noise.meas_flip[1])
    } else {
        (noise.meas_flip[0], noise.meas_flip[1])
    }
}

/// One measured run of a circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Packed outcome word: bit `q` is the measured bit of qubit `q`.
    pub outcome: u64,
    /// Observable value `f(mu)` of this outcome.
    pub f_value: f64,
    /// Index of the error pattern inserted for this shot, when the run is
    /// part of a quasi-probability mitigation sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_index: Option<usize>,
    /// Bad qubit drawn by the temporal noise model for this run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_qubit: Option<usize>,
}

fn check_temporal_width(circuit: &LayeredCircuit, noise: &NoiseModel) -> Result<()> {
    if let Some(t) = &noise.temporal {
        if t.prob.len() != circuit.n() {
            return Err(Error::InvalidNoise(format!(
                "temporal prob vector has {} entries for {} qubits",
                t.prob.len(),
                circuit.n()
            )));
        }
    }
    Ok(())
}

/// Exact observable expectation of the noisy circuit by density-matrix
/// evolution.  With a temporal model the value is the probability-weighted
/// mixture over the worsened-qubit branches.
pub fn exact_expectation(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
) -> Result<f64> {
    noise.validate()?;
    assignment.validate_for(circuit)?;
    check_temporal_width(circuit, noise)?;
    if let Some(t) = &noise.temporal {
        let mut acc = 0.0;
        for (i, &p) in t.prob.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p * exact_branch(circuit, assignment, noise, Some(i))?;
        }
        Ok(acc)
    } else {
        exact_branch(circuit, assignment, noise, None)
    }
}

/// Exact expectations of several Z-product observables sharing one noisy
/// evolution: the state does not depend on what is read out, so evaluating a
/// Hamiltonian term by term costs one density-matrix run per temporal branch
/// instead of one per term.  Entry `k` equals
/// `exact_expectation(circuit.with_observable(observables[k]), ...)`.
pub fn exact_expectation_multi(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
    observables: &[Observable],
) -> Result<Vec<f64>> {
    noise.validate()?;
    assignment.validate_for(circuit)?;
    check_temporal_width(circuit, noise)?;
    for obs in observables {
        // Validates qubit indices against the circuit width.
        obs.pauli_string(circuit.n())?;
    }
    let mut acc = vec![0.0; observables.len()];
    if let Some(t) = &noise.temporal {
        for (i, &p) in t.prob.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let rho = exact_branch_state(circuit, assignment, noise, Some(i))?;
            for (k, obs) in observables.iter().enumerate() {
                acc[k] += p * measured_value(&rho, obs, noise);
            }
        }
    } else {
        let rho = exact_branch_state(circuit, assignment, noise, None)?;
        for (k, obs) in observables.iter().enumerate() {
            acc[k] = measured_value(&rho, obs, noise);
        }
    }
    Ok(acc)
}

/// Density-matrix evolution for one temporal branch.
fn exact_branch(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
    bad: Option<usize>,
) -> Result<f64> {
    let rho = exact_branch_state(circuit, assignment, noise, bad)?;
    Ok(measured_value(&rho, circuit.observable(), noise))
}

/// Evolves the initial state through the full execution order of one
/// temporal branch and returns the final density matrix.
fn exact_branch_state(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
    bad: Option<usize>,
) -> Result<DensityMatrix> {
    let n = circuit.n();
    let nl = circuit.num_frame_layers();
    let mut rho = DensityMatrix::zero_state(n)?;
    let damping =
        (noise.damping_gamma > 0.0).then(|| damping_kraus(noise.damping_gamma));
    for j in 1..=nl + 1 {
        apply_mitigation_layer_rho(&mut rho, circuit, assignment, 2 * j - 1)?;
        for q in 0..n {
            let gate = assignment.computing_at(circuit.computing_slot(j, q));
            if gate.clifford_index() != Some(0) {
                rho.apply_unitary(&[q], &dmat2(gate.matrix()))?;
            }
        }
        apply_mitigation_layer_rho(&mut rho, circuit, assignment, 2 * j)?;
        if let Some(kraus) = &damping {
            for q in 0..n {
                rho.apply_kraus(&[q], kraus)?;
            }
        }
        if j <= nl {
            for gate in &circuit.frame_layers()[j - 1] {
                let pair = [gate.control, gate.target];
                rho.apply_unitary(&pair, gate.kind.clifford().matrix())?;
                for (support, probs) in
                    noise.gate_channels(n, gate.control, gate.target, bad)?
                {
                    rho.apply_pauli_mixture(&support, &probs)?;
                }
            }
        }
    }
    Ok(rho)
}

fn apply_mitigation_layer_rho(
    rho: &mut DensityMatrix,
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    layer: usize,
) -> Result<()> {
    for q in 0..circuit.n() {
        let p = assignment.mitigation_at(circuit.mitigation_slot(layer, q));
        if p != Pauli::I {
            rho.apply_pauli_code(&[q], p.code() as usize)?;
        }
    }
    Ok(())
}

/// `E[prod_q (a z_q + b)]` over the diagonal outcome distribution, where
/// `a = 1 - p0 - p1` and `b = p1 - p0` encode classical readout flips.
fn measured_value(rho: &DensityMatrix, observable: &Observable, noise: &NoiseModel) -> f64 {
    let (p0, p1) = effective_flips(noise);
    let a = 1.0 - p0 - p1;
    let b = p1 - p0;
    let n = rho.n();
    let probs = rho.diagonal_probs();
    let mut acc = 0.0;
    for (idx, &p) in probs.iter().enumerate() {
        let mut f = 1.0;
        for &q in observable.z_qubits() {
            let z = if (idx >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 };
            f *= a * z + b;
        }
        acc += p * f;
    }
    acc
}

/// Exact expectation through the stabilizer back end: valid when every
/// computing gate is Clifford and gate noise is purely Pauli.  Classical
/// readout flips (and the balanced wrap) are folded in analytically;
/// temporal models expand into their branch mixture.  Serves as the fast
/// path for learning sweeps and as an independent oracle for
/// [`exact_expectation`].
pub fn clifford_exact_expectation(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
) -> Result<f64> {
    noise.validate()?;
    assignment.validate_for(circuit)?;
    check_temporal_width(circuit, noise)?;
    if !noise.is_pauli_gate_noise() {
        return Err(Error::InvalidNoise(
            "amplitude damping present: use the dense back end".into(),
        ));
    }
    let (p0, p1) = effective_flips(noise);
    if let Some(t) = &noise.temporal {
        let mut acc = 0.0;
        for (i, &p) in t.prob.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let attachments = noise.pauli_attachments_for_branch(circuit, Some(i))?;
            acc += p * flip_adjusted_clifford_value(circuit, assignment, &attachments, p0, p1)?;
        }
        Ok(acc)
    } else {
        let attachments = noise.pauli_attachments_for_branch(circuit, None)?;
        flip_adjusted_clifford_value(circuit, assignment, &attachments, p0, p1)
    }
}

/// `E[prod_q (a Z_q + b)]` expanded over observable subsets, each evaluated
/// as a noisy stabilizer expectation.
fn flip_adjusted_clifford_value(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    attachments: &[crate::stabilizer::PauliChannelAt],
    p0: f64,
    p1: f64,
) -> Result<f64> {
    let a = 1.0 - p0 - p1;
    let b = p1 - p0;
    let zq = circuit.observable().z_qubits();
    let k = zq.len();
    let mut acc = 0.0;
    for mask in 0..(1usize << k) {
        let picked = mask.count_ones() as i32;
        let coef = a.powi(picked) * b.powi(k as i32 - picked);
        if coef == 0.0 {
            continue;
        }
        if mask == 0 {
            acc += coef;
            continue;
        }
        let subset: Vec<usize> =
            zq.iter().enumerate().filter(|&(i, _)| (mask >> i) & 1 == 1).map(|(_, &q)| q).collect();
        let sub = circuit.with_observable(Observable::z_product(&subset))?;
        let profile = SignProfile::build(&sub, assignment)?;
        acc += coef * profile.noisy_expectation(attachments);
    }
    Ok(acc)
}

/// Draw an index from an explicit probability vector.
fn draw_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>();
    let mut chosen = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            chosen = i;
            break;
        }
        u -= p;
    }
    chosen
}

/// Draw a packed code from a sparse `(code, prob)` list.
fn draw_code<R: Rng>(pairs: &[(usize, f64)], rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>();
    let mut chosen = pairs[pairs.len() - 1].0;
    for &(code, p) in pairs {
        debug_assert!(p >= 0.0, "trajectory sampling requires a forward (non-quasi) channel");
        if u < p {
            chosen = code;
            break;
        }
        u -= p;
    }
    chosen
}

/// Sample `shots` measured trajectories of the noisy circuit.  Shot `s` uses
/// the RNG stream derived from `(seed, s)`, so results are independent of
/// thread count and stable under resumption.
pub fn sample_shots(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    noise.validate()?;
    assignment.validate_for(circuit)?;
    check_temporal_width(circuit, noise)?;
    let damping = (noise.damping_gamma > 0.0).then(|| damping_kraus(noise.damping_gamma));
    (0..shots)
        .into_par_iter()
        .map(|s| sample_one(circuit, assignment, noise, damping.as_ref(), seed, s as u64))
        .collect()
}

/// One trajectory.  Draw order within the shot stream is fixed: temporal bad
/// qubit, then per-layer damping jumps and channel fault codes in execution
/// order, then the balanced-wrap word, the outcome, and one flip draw per
/// qubit.  Every draw happens regardless of intermediate values so RNG
/// consumption is data-independent.
fn sample_one(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
    damping: Option<&[DMatrix<Complex64>; 2]>,
    seed: u64,
    shot_index: u64,
) -> Result<ShotRecord> {
    let mut rng = rng_for(seed, streams::SHOTS, shot_index);
    let n = circuit.n();
    let nl = circuit.num_frame_layers();
    let bad = noise.temporal.as_ref().map(|t| draw_categorical(&t.prob, &mut rng));
    let mut psi = Statevector::zero_state(n)?;
    for j in 1..=nl + 1 {
        apply_mitigation_layer_psi(&mut psi, circuit, assignment, 2 * j - 1)?;
        for q in 0..n {
            let gate = assignment.computing_at(circuit.computing_slot(j, q));
            if gate.clifford_index() != Some(0) {
                psi.apply_unitary(&[q], &dmat2(gate.matrix()))?;
            }
        }
        apply_mitigation_layer_psi(&mut psi, circuit, assignment, 2 * j)?;
        if let Some(kraus) = damping {
            for q in 0..n {
                psi.kraus_jump(&[q], kraus, &mut rng)?;
            }
        }
        if j <= nl {
            for gate in &circuit.frame_layers()[j - 1] {
                let pair = [gate.control, gate.target];
                psi.apply_unitary(&pair, gate.kind.clifford().matrix())?;
                for (support, probs) in noise.gate_channels(n, gate.control, gate.target, bad)? {
                    let code = draw_code(&probs, &mut rng);
                    psi.apply_pauli_code(&support, code)?;
                }
            }
        }
    }
    let mask = (1u64 << n) - 1;
    let wrap_word = if noise.balanced { rng.gen::<u64>() & mask } else { 0 };
    let pre = psi.sample_outcome(&mut rng) ^ wrap_word;
    let mut flipped = 0u64;
    for q in 0..n {
        let bit = (pre >> q) & 1;
        let u: f64 = rng.gen();
        let p = if bit == 0 { noise.meas_flip[0] } else { noise.meas_flip[1] };
        flipped |= (if u < p { bit ^ 1 } else { bit }) << q;
    }
    let outcome = flipped ^ wrap_word;
    Ok(ShotRecord {
        outcome,
        f_value: circuit.observable().eval_outcome(outcome),
        sigma_index: None,
        bad_qubit: bad,
    })
}

fn apply_mitigation_layer_psi(
    psi: &mut Statevector,
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    layer: usize,
) -> Result<()> {
    for q in 0..circuit.n() {
        let p = assignment.mitigation_at(circuit.mitigation_slot(layer, q));
        if p != Pauli::I {
            psi.apply_pauli_code(&[q], p.code() as usize)?;
        }
    }
    Ok(())
}

/// Pauli-twirl a channel: project its transfer matrix onto the diagonal and
/// return the equivalent Pauli-word probabilities (length `4^m`, indexed by
/// packed code).  The input must be trace preserving; complete positivity
/// makes the output a genuine probability vector.
pub fn twirl_channel(channel: &ChannelSpec) -> Result<Vec<f64>> {
    let ptm = ptm_of_channel(channel)?;
    let codes = ptm.nrows();
    let m = match codes {
        4 => 1,
        16 => 2,
        _ => {
            return Err(Error::Dimension(format!(
                "twirling supports 1- or 2-qubit channels, got a {codes}-code transfer matrix"
            )))
        }
    };
    for t in 0..codes {
        let expect = if t == 0 { 1.0 } else { 0.0 };
        if (ptm[(0, t)] - expect).abs() > 1e-9 {
            return Err(Error::InvalidNoise(
                "channel is not trace preserving; cannot twirl into a Pauli channel".into(),
            ));
        }
    }
    let lambda: Vec<f64> = (0..codes).map(|t| ptm[(t, t)]).collect();
    let mut probs = Vec::with_capacity(codes);
    for s in 0..codes {
        let mut q = 0.0;
        for (t, &l) in lambda.iter().enumerate() {
            let sign = if codes_commute(t, s, m) { 1.0 } else { -1.0 };
            q += sign * l;
        }
        q /= codes as f64;
        if q < -1e-9 {
            return Err(Error::Numerical(format!(
                "twirled weight {q} is negative; channel is not completely positive"
            )));
        }
        probs.push(q.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!("twirled weights sum to {total}, expected 1")));
    }
    Ok(probs)
}
