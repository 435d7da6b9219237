//! Exact and sampled expectations of Clifford circuits under Pauli channel
//! noise, via back-propagated sign profiles.
//!
//! For a Clifford-assigned circuit, inserting a Pauli `mu` at a point in the
//! timeline multiplies the ideal expectation by a sign: `+1` if `mu`
//! commutes with the observable propagated backward (Heisenberg picture) to
//! that point, `-1` otherwise.  Expectations are therefore multilinear in
//! channel insertions, and a product of Pauli channels contributes the exact
//! factor `sum_mu p(mu) s(mu)` per channel — no enumeration over fault
//! configurations is needed, at any circuit size.

use super::clifford_expectation;
use crate::circuit::{GateAssignment, LayeredCircuit};
use crate::pauli::{single_qubit_cliffords, Pauli, PauliString};
use crate::rng::{rng_for, streams};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point in the execution timeline where noise can attach.  Pauli gates in
/// the surrounding mitigation layers never move a point: they change signs,
/// not back-propagated letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoisePoint {
    /// Right after state preparation, before computing layer 1.
    AfterInit,
    /// Right after computing layer `j` (1-based, `1..=N+1`); `N+1` is the
    /// point just before measurement.
    AfterComputing(usize),
    /// Right after the frame gate with the given execution-order index
    /// (counting gates layer by layer, placement order within each layer).
    AfterFrameGate(usize),
}

/// One Pauli channel attached to the circuit: at `point`, acting on the
/// `support` qubits, applying the packed Pauli code `code` with probability
/// `prob` for each `(code, prob)` entry.  The first support qubit is the
/// most significant digit of the code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliChannelAt {
    pub point: NoisePoint,
    pub support: Vec<usize>,
    pub probs: Vec<(usize, f64)>,
}

impl PauliChannelAt {
    pub fn validate(&self, circuit: &LayeredCircuit) -> Result<()> {
        let n = circuit.n();
        if self.support.is_empty() || self.support.iter().any(|&q| q >= n) {
            return Err(Error::InvalidNoise(format!(
                "channel support {:?} invalid for n = {n}",
                self.support
            )));
        }
        let mut sorted = self.support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.support.len() {
            return Err(Error::InvalidNoise("channel support repeats a qubit".into()));
        }
        let dim = 4usize.pow(self.support.len() as u32);
        let mut total = 0.0;
        for &(code, p) in &self.probs {
            if code >= dim {
                return Err(Error::InvalidNoise(format!(
                    "Pauli code {code} outside 0..{dim} for a {}-qubit channel",
                    self.support.len()
                )));
            }
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(Error::InvalidNoise(format!("probability {p} outside [0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNoise(format!(
                "channel probabilities sum to {total}, expected 1"
            )));
        }
        match self.point {
            NoisePoint::AfterComputing(j) if j == 0 || j > circuit.num_frame_layers() + 1 => {
                Err(Error::InvalidNoise(format!("computing layer {j} out of range")))
            }
            NoisePoint::AfterFrameGate(g) if g >= circuit.frame_gate_count() => {
                Err(Error::InvalidNoise(format!("frame gate index {g} out of range")))
            }
            _ => Ok(()),
        }
    }
}

/// The observable of a Clifford-assigned circuit back-propagated to every
/// noise attachment point, together with the ideal expectation.
#[derive(Clone, Debug)]
pub struct SignProfile {
    ideal: f64,
    at_init: PauliString,
    /// Index `j-1` holds the letters after computing layer `j`.
    after_computing: Vec<PauliString>,
    /// Indexed by frame-gate execution order.
    after_frame_gate: Vec<PauliString>,
}

impl SignProfile {
    /// Builds the profile for a Clifford assignment by walking the circuit
    /// backward from the measurement.  Mitigation Paulis contribute to the
    /// ideal expectation but never to the letters.
    pub fn build(circuit: &LayeredCircuit, assignment: &GateAssignment) -> Result<Self> {
        let ideal = clifford_expectation(circuit, assignment)?;
        let n = circuit.n();
        let nl = circuit.num_frame_layers();
        let catalog = single_qubit_cliffords();
        let layer_offsets: Vec<usize> = circuit
            .frame_layers()
            .iter()
            .scan(0usize, |acc, layer| {
                let start = *acc;
                *acc += layer.len();
                Some(start)
            })
            .collect();

        let mut letters = circuit.observable().pauli_string(n)?;
        let mut after_computing = vec![PauliString::identity(n); nl + 1];
        let mut after_frame_gate = vec![PauliString::identity(n); circuit.frame_gate_count()];

        for j in (1..=nl + 1).rev() {
            after_computing[j - 1] = letters.clone();
            for q in 0..n {
                let slot = circuit.computing_slot(j, q);
                let idx = assignment.computing_at(slot).clifford_index().ok_or_else(|| {
                    Error::NotClifford(format!(
                        "computing slot ({j}, {q}) holds a non-Clifford gate"
                    ))
                })?;
                let code = letters.get(q).code() as usize;
                if idx != 0 && code != 0 {
                    let (new_code, _) = catalog[idx].conjugate_code_inv(code);
                    letters.set(q, Pauli::from_code(new_code as u8).unwrap());
                }
            }
            if j >= 2 {
                let layer = &circuit.frame_layers()[j - 2];
                for (k, g) in layer.iter().enumerate().rev() {
                    after_frame_gate[layer_offsets[j - 2] + k] = letters.clone();
                    let code = 4 * letters.get(g.control).code() as usize
                        + letters.get(g.target).code() as usize;
                    if code != 0 {
                        let (new_code, _) = g.clifford().conjugate_code_inv(code);
                        letters.set(g.control, Pauli::from_code((new_code / 4) as u8).unwrap());
                        letters.set(g.target, Pauli::from_code((new_code % 4) as u8).unwrap());
                    }
                }
            }
        }

        Ok(SignProfile { ideal, at_init: letters, after_computing, after_frame_gate })
    }

    /// The error-free expectation `com^ef` of the assignment: -1, 0, or +1.
    pub fn ideal(&self) -> f64 {
        self.ideal
    }

    /// Back-propagated observable letters at a timeline point.
    pub fn letters_at(&self, point: NoisePoint) -> &PauliString {
        match point {
            NoisePoint::AfterInit => &self.at_init,
            NoisePoint::AfterComputing(j) => &self.after_computing[j - 1],
            NoisePoint::AfterFrameGate(g) => &self.after_frame_gate[g],
        }
    }

    /// Sign contributed by inserting the packed Pauli `code` on `support` at
    /// `point`: +1 when it commutes with the back-propagated observable
    /// there, -1 otherwise.
    pub fn insertion_sign(&self, point: NoisePoint, support: &[usize], code: usize) -> f64 {
        let letters = self.letters_at(point);
        let mut anti = 0usize;
        let mut rest = code;
        for &q in support.iter().rev() {
            let p = Pauli::from_code((rest % 4) as u8).unwrap();
            rest /= 4;
            if !letters.get(q).commutes(p) {
                anti += 1;
            }
        }
        if anti % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Exact multiplicative factor of one Pauli channel,
    /// `sum_mu p(mu) s(mu)`.
    pub fn channel_factor(&self, channel: &PauliChannelAt) -> f64 {
        channel
            .probs
            .iter()
            .map(|&(code, p)| p * self.insertion_sign(channel.point, &channel.support, code))
            .sum()
    }

    /// Exact `com` under all attached channels: `ideal * prod factors`.
    pub fn noisy_expectation(&self, noise: &[PauliChannelAt]) -> f64 {
        if self.ideal == 0.0 {
            return 0.0;
        }
        self.ideal * noise.iter().map(|ch| self.channel_factor(ch)).product::<f64>()
    }

    /// One fault-sampled, measurement-sampled shot: draws a Pauli per
    /// channel, then a +/-1 outcome with the resulting mean.
    pub fn sample_shot<R: Rng>(&self, noise: &[PauliChannelAt], rng: &mut R) -> f64 {
        let mut value = self.ideal;
        for ch in noise {
            // Draw a code even when the value is already 0 so the RNG
            // consumption (and thus determinism) does not depend on data.
            let mut u: f64 = rng.gen();
            let mut drawn = 0usize;
            for &(code, p) in &ch.probs {
                if u < p {
                    drawn = code;
                    break;
                }
                u -= p;
            }
            if value != 0.0 {
                value *= self.insertion_sign(ch.point, &ch.support, drawn);
            }
        }
        let p_plus = (1.0 + value) / 2.0;
        if rng.gen::<f64>() < p_plus {
            1.0
        } else {
            -1.0
        }
    }
}

/// How to evaluate a noisy Clifford expectation.
#[derive(Clone, Copy, Debug)]
pub enum PauliNoiseEval {
    /// Exact value: the ideal expectation times one factor per channel.
    Exact,
    /// Mean of `shots` single-shot trajectories with per-shot fault draws
    /// and a +/-1 measurement record, seeded deterministically.
    Sampled { shots: usize, seed: u64 },
}

/// Expectation of the circuit observable under a Clifford assignment with
/// Pauli channels attached.
pub fn clifford_expectation_with_pauli_noise(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &[PauliChannelAt],
    mode: PauliNoiseEval,
) -> Result<f64> {
    for ch in noise {
        ch.validate(circuit)?;
    }
    let profile = SignProfile::build(circuit, assignment)?;
    match mode {
        PauliNoiseEval::Exact => Ok(profile.noisy_expectation(noise)),
        PauliNoiseEval::Sampled { shots, seed } => {
            if shots == 0 {
                return Err(Error::InvalidConfig("sampled evaluation needs shots >= 1".into()));
            }
            let mut sum = 0.0;
            for s in 0..shots {
                let mut rng = rng_for(seed, streams::SHOTS, s as u64);
                sum += profile.sample_shot(noise, &mut rng);
            }
            Ok(sum / shots as f64)
        }
    }
}
