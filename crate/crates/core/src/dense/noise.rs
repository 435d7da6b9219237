//! Hardware noise models attached to layered circuits.
//!
//! A [`NoiseModel`] bundles:
//! - a **local two-qubit Pauli channel** applied after every frame gate
//!   (dephasing, depolarizing, or the biased interpolation between them),
//! - an optional **spatial crosstalk rule** that attaches the same kind of
//!   channel to the flanking neighbour pairs of each gate (periodic boundary),
//! - an optional **temporal model** where each run draws one "bad" qubit
//!   whose channels are worsened by a factor `g`,
//! - single-qubit **amplitude damping** after every computing layer, and
//! - classical **measurement bit-flip** probabilities `(p0, p1)`.
//!
//! The model serializes to/from the JSON shape
//! `{local: {kind, epsilon, eta}, crosstalk: {kind}, temporal: {g, prob},
//! damping_gamma, meas_flip: [p0, p1]}`; absent sections disable the
//! corresponding mechanism.

use serde::{Deserialize, Serialize};

use crate::circuit::LayeredCircuit;
use crate::stabilizer::{NoisePoint, PauliChannelAt};
use crate::{Error, Result};

/// Default per-gate error rate used by the workbench experiments.
pub const DEFAULT_EPSILON: f64 = 0.01;
/// Default dephasing/depolarizing bias weight in the interpolated channel.
pub const DEFAULT_ETA: f64 = 10.0;
/// Default amplitude-damping rate per computing layer.
pub const DEFAULT_DAMPING_GAMMA: f64 = 0.001;

/// Kind of local two-qubit Pauli channel attached after each frame gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalKind {
    /// `(1-eps)[I] + eps/3 ([IZ] + [ZI] + [ZZ])`.
    Dephasing,
    /// `(1-eps)[I] + eps/15 sum over the 15 non-identity pairs`.
    Depolarizing,
    /// Interpolation: `(1-eps)[I] + eps (eta D*_ph + D*_pol) / (eta + 1)`
    /// where `D*_ph`/`D*_pol` are the uniform pure-dephasing / pure-
    /// depolarizing error distributions.
    Biased,
}

/// Local channel parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalChannel {
    pub kind: LocalKind,
    pub epsilon: f64,
    /// Bias weight; only meaningful for [`LocalKind::Biased`].
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

impl LocalChannel {
    pub fn new(kind: LocalKind, epsilon: f64) -> Self {
        LocalChannel { kind, epsilon, eta: DEFAULT_ETA }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Packed-code probability list for this channel at error rate `eps`
    /// (two-qubit support; first support qubit = most significant digit).
    pub fn pauli_probs_at(&self, eps: f64) -> Result<Vec<(usize, f64)>> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidNoise(format!(
                "effective channel error rate {eps} outside [0, 1]"
            )));
        }
        const Z_CODES: [usize; 3] = [3, 12, 15]; // IZ, ZI, ZZ
        let mut probs = vec![(0usize, 1.0 - eps)];
        match self.kind {
            LocalKind::Dephasing => {
                for c in Z_CODES {
                    probs.push((c, eps / 3.0));
                }
            }
            LocalKind::Depolarizing => {
                for c in 1..16 {
                    probs.push((c, eps / 15.0));
                }
            }
            LocalKind::Biased => {
                let eta = self.eta;
                let ph = eta / (3.0 * (eta + 1.0));
                let pol = 1.0 / (15.0 * (eta + 1.0));
                for c in 1..16usize {
                    let w = if Z_CODES.contains(&c) { ph + pol } else { pol };
                    probs.push((c, eps * w));
                }
            }
        }
        Ok(probs)
    }
}

/// Spatial crosstalk rule: which extra channels accompany each frame gate.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CrosstalkKind {
    /// No crosstalk channels.
    #[default]
    None,
    /// Full-strength crosstalk: flanking pairs get the local channel at the
    /// same rate.  `epsilon` optionally freezes an explicit crosstalk rate
    /// (used when the local rate is rescaled but the correlated part is not).
    ModelA {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Reduced crosstalk: flanking pairs get the local channel at one tenth
    /// of the local rate (or the frozen `epsilon` if set).
    Reduced {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
}

impl CrosstalkKind {
    pub fn is_none(&self) -> bool {
        matches!(self, CrosstalkKind::None)
    }

    fn rate_factor(&self) -> f64 {
        match self {
            CrosstalkKind::None => 0.0,
            CrosstalkKind::ModelA { .. } => 1.0,
            CrosstalkKind::Reduced { .. } => 0.1,
        }
    }

    fn frozen_epsilon(&self) -> Option<f64> {
        match self {
            CrosstalkKind::None => None,
            CrosstalkKind::ModelA { epsilon } | CrosstalkKind::Reduced { epsilon } => *epsilon,
        }
    }
}

/// Temporal fluctuation model: each run draws one bad qubit `i` from
/// `prob[i]`; every channel whose support contains `i` runs at `g` times its
/// base rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalModel {
    pub g: f64,
    pub prob: Vec<f64>,
}

/// Complete noise configuration for a layered circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<LocalChannel>,
    #[serde(default, skip_serializing_if = "CrosstalkKind::is_none")]
    pub crosstalk: CrosstalkKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<TemporalModel>,
    #[serde(default)]
    pub damping_gamma: f64,
    /// Classical readout flip probabilities `[p(0 -> 1), p(1 -> 0)]`.
    #[serde(default)]
    pub meas_flip: [f64; 2],
    /// Balanced-measurement wrap: symmetrizes readout error (exact mode) /
    /// randomly X-flips-and-relabels each shot (trajectory mode).
    #[serde(default, skip_serializing_if = "is_false")]
    pub balanced: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            local: None,
            crosstalk: CrosstalkKind::None,
            temporal: None,
            damping_gamma: 0.0,
            meas_flip: [0.0, 0.0],
            balanced: false,
        }
    }
}

impl NoiseModel {
    /// Model with every mechanism disabled.
    pub fn noiseless() -> Self {
        NoiseModel::default()
    }

    /// Local channel only.
    pub fn local_only(kind: LocalKind, epsilon: f64) -> Self {
        NoiseModel { local: Some(LocalChannel::new(kind, epsilon)), ..NoiseModel::default() }
    }

    /// Local channel plus spatial crosstalk (full strength or reduced).
    pub fn with_crosstalk(mut self, reduced: bool) -> Self {
        self.crosstalk = if reduced {
            CrosstalkKind::Reduced { epsilon: None }
        } else {
            CrosstalkKind::ModelA { epsilon: None }
        };
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        if let Some(local) = &mut self.local {
            local.eta = eta;
        }
        self
    }

    pub fn with_temporal(mut self, g: f64, prob: Vec<f64>) -> Self {
        self.temporal = Some(TemporalModel { g, prob });
        self
    }

    pub fn with_damping(mut self, gamma: f64) -> Self {
        self.damping_gamma = gamma;
        self
    }

    pub fn with_meas_flip(mut self, p0: f64, p1: f64) -> Self {
        self.meas_flip = [p0, p1];
        self
    }

    pub fn with_balanced_measurement(mut self, balanced: bool) -> Self {
        self.balanced = balanced;
        self
    }

    /// Scale only the local channel rate by `k`, freezing the crosstalk
    /// channels at their current effective rate.  Used by noise-boost
    /// extrapolation, which amplifies the local contribution while the
    /// correlated contribution stays fixed.
    pub fn with_local_epsilon_scaled(&self, k: f64) -> Result<NoiseModel> {
        let mut out = self.clone();
        let Some(local) = &mut out.local else {
            return Err(Error::InvalidNoise("cannot scale epsilon: no local channel".into()));
        };
        let frozen = self.crosstalk_epsilon();
        local.epsilon *= k;
        out.crosstalk = match out.crosstalk {
            CrosstalkKind::None => CrosstalkKind::None,
            CrosstalkKind::ModelA { .. } => CrosstalkKind::ModelA { epsilon: frozen },
            CrosstalkKind::Reduced { .. } => CrosstalkKind::Reduced { epsilon: frozen },
        };
        Ok(out)
    }

    /// Effective crosstalk rate (before any temporal boost), if crosstalk is
    /// enabled.
    pub fn crosstalk_epsilon(&self) -> Option<f64> {
        if self.crosstalk.is_none() {
            return None;
        }
        if let Some(frozen) = self.crosstalk.frozen_epsilon() {
            return Some(frozen);
        }
        self.local.as_ref().map(|l| l.epsilon * self.crosstalk.rate_factor())
    }

    /// True when gate noise is purely Pauli (no amplitude damping), so the
    /// stabilizer back end can evaluate Clifford circuits exactly.
    /// Measurement flips are classical and handled outside the gate noise.
    pub fn is_pauli_gate_noise(&self) -> bool {
        self.damping_gamma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(local) = &self.local {
            if !(0.0..=1.0).contains(&local.epsilon) {
                return Err(Error::InvalidNoise(format!(
                    "local epsilon {} outside [0, 1]",
                    local.epsilon
                )));
            }
            if local.kind == LocalKind::Depolarizing && local.epsilon >= 15.0 / 16.0 {
                return Err(Error::InvalidNoise(format!(
                    "depolarizing epsilon {} >= 15/16: channel is not invertible",
                    local.epsilon
                )));
            }
            if local.kind == LocalKind::Biased && local.eta < 0.0 {
                return Err(Error::InvalidNoise(format!("eta {} must be >= 0", local.eta)));
            }
        }
        if !self.crosstalk.is_none() {
            if self.local.is_none() {
                return Err(Error::InvalidNoise(
                    "crosstalk requires a local channel (it reuses its kind)".into(),
                ));
            }
            let eps = self.crosstalk_epsilon().unwrap_or(0.0);
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::InvalidNoise(format!(
                    "crosstalk epsilon {eps} outside [0, 1]"
                )));
            }
        }
        if let Some(t) = &self.temporal {
            if t.g < 0.0 {
                return Err(Error::InvalidNoise(format!("temporal factor g={} must be >= 0", t.g)));
            }
            if t.prob.is_empty() {
                return Err(Error::InvalidNoise("temporal prob vector is empty".into()));
            }
            if t.prob.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidNoise("temporal prob entries must lie in [0, 1]".into()));
            }
            let sum: f64 = t.prob.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidNoise(format!(
                    "temporal prob vector sums to {sum}, expected 1"
                )));
            }
            if let Some(local) = &self.local {
                if local.epsilon * t.g > 1.0 {
                    return Err(Error::InvalidNoise(format!(
                        "worsened local rate {} exceeds 1",
                        local.epsilon * t.g
                    )));
                }
            }
            if let Some(eps) = self.crosstalk_epsilon() {
                if eps * t.g > 1.0 {
                    return Err(Error::InvalidNoise(format!(
                        "worsened crosstalk rate {} exceeds 1",
                        eps * t.g
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.damping_gamma) {
            return Err(Error::InvalidNoise(format!(
                "damping gamma {} outside [0, 1]",
                self.damping_gamma
            )));
        }
        for (i, &p) in self.meas_flip.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!("meas_flip[{i}] = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// The Pauli channels accompanying one frame gate `(control, target)` on
    /// an `n`-qubit ring, as `(support, packed-code probabilities)` pairs in
    /// placement order: local channel first, then the two flanking-pair
    /// channels `(target, target+1)` and `(control-1, control)` (mod `n`)
    /// when crosstalk is enabled.  `bad` worsens any channel whose support
    /// contains that qubit by the temporal factor.
    pub fn gate_channels(
        &self,
        n: usize,
        control: usize,
        target: usize,
        bad: Option<usize>,
    ) -> Result<Vec<(Vec<usize>, Vec<(usize, f64)>)>> {
        let Some(local) = &self.local else {
            return Ok(Vec::new());
        };
        let boost = |support: &[usize], base: f64| -> f64 {
            match (bad, &self.temporal) {
                (Some(b), Some(t)) if support.contains(&b) => base * t.g,
                _ => base,
            }
        };
        let mut out = Vec::new();
        let support = vec![control, target];
        let eps = boost(&support, local.epsilon);
        out.push((support, local.pauli_probs_at(eps)?));
        if !self.crosstalk.is_none() {
            let base = self.crosstalk_epsilon().unwrap_or(0.0);
            let flank_a = vec![target, (target + 1) % n];
            let flank_b = vec![(control + n - 1) % n, control];
            for support in [flank_a, flank_b] {
                let eps = boost(&support, base);
                out.push((support.clone(), local.pauli_probs_at(eps)?));
            }
        }
        Ok(out)
    }

    /// Compile the gate-noise part of this model into per-location Pauli
    /// channels for the stabilizer back end.  Fails when the model contains
    /// amplitude damping (not a Pauli channel) or a temporal model (callers
    /// must expand that into per-bad-qubit branches via
    /// [`NoiseModel::pauli_attachments_for_branch`]).
    pub fn pauli_attachments(&self, circuit: &LayeredCircuit) -> Result<Vec<PauliChannelAt>> {
        if self.temporal.is_some() {
            return Err(Error::InvalidNoise(
                "temporal model present: expand into per-bad-qubit branches instead".into(),
            ));
        }
        self.pauli_attachments_for_branch(circuit, None)
    }

    /// Same as [`NoiseModel::pauli_attachments`] but for one temporal branch
    /// with the given bad qubit (or `None` for the no-temporal baseline).
    pub fn pauli_attachments_for_branch(
        &self,
        circuit: &LayeredCircuit,
        bad: Option<usize>,
    ) -> Result<Vec<PauliChannelAt>> {
        self.validate()?;
        if self.damping_gamma != 0.0 {
            return Err(Error::InvalidNoise(
                "amplitude damping is not a Pauli channel; use the dense back end".into(),
            ));
        }
        if let Some(b) = bad {
            if self.temporal.is_none() {
                return Err(Error::InvalidNoise("bad qubit given but no temporal model".into()));
            }
            if b >= circuit.n() {
                return Err(Error::InvalidNoise(format!("bad qubit {b} out of range")));
            }
        }
        let n = circuit.n();
        let mut out = Vec::new();
        for (exec_index, (_, _, gate)) in circuit.gates_in_order().enumerate() {
            for (support, probs) in self.gate_channels(n, gate.control, gate.target, bad)? {
                let channel = PauliChannelAt {
                    point: NoisePoint::AfterFrameGate(exec_index),
                    support,
                    probs,
                };
                channel.validate(circuit)?;
                out.push(channel);
            }
        }
        Ok(out)
    }
}

/// Parse and validate a noise model from its JSON description.
pub fn build_noise_model(json: &str) -> Result<NoiseModel> {
    let model: NoiseModel = serde_json::from_str(json)?;
    model.validate()?;
    Ok(model)
}

/// System-size-dependent rescaled error rate `eps = 2 eps' / (N n)` keeping
/// total noise roughly constant across circuit sizes.
pub fn scaled_epsilon(eps_prime: f64, n: usize, num_frame_layers: usize) -> f64 {
    2.0 * eps_prime / (num_frame_layers as f64 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_layout, LayoutKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn dephasing_probs_cover_the_three_z_pairs() {
        let ch = LocalChannel::new(LocalKind::Dephasing, 0.09);
        let probs = ch.pauli_probs_at(0.09).unwrap();
        assert_eq!(probs.len(), 4);
        assert_abs_diff_eq!(probs[0].1, 0.91, epsilon = 1e-15);
        let codes: Vec<usize> = probs[1..].iter().map(|&(c, _)| c).collect();
        assert_eq!(codes, vec![3, 12, 15]);
        for &(_, p) in &probs[1..] {
            assert_abs_diff_eq!(p, 0.03, epsilon = 1e-15);
        }
    }

    #[test]
    fn depolarizing_probs_are_uniform_over_fifteen_errors() {
        let ch = LocalChannel::new(LocalKind::Depolarizing, 0.15);
        let probs = ch.pauli_probs_at(0.15).unwrap();
        assert_eq!(probs.len(), 16);
        let total: f64 = probs.iter().map(|&(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        for &(_, p) in &probs[1..] {
            assert_abs_diff_eq!(p, 0.01, epsilon = 1e-15);
        }
    }

    #[test]
    fn biased_channel_with_zero_eta_reduces_to_depolarizing() {
        let biased = LocalChannel::new(LocalKind::Biased, 0.04).with_eta(0.0);
        let depol = LocalChannel::new(LocalKind::Depolarizing, 0.04);
        let a = biased.pauli_probs_at(0.04).unwrap();
        let b = depol.pauli_probs_at(0.04).unwrap();
        assert_eq!(a.len(), b.len());
        for (&(ca, pa), &(cb, pb)) in a.iter().zip(b.iter()) {
            assert_eq!(ca, cb);
            assert_abs_diff_eq!(pa, pb, epsilon = 1e-15);
        }
    }

    #[test]
    fn biased_channel_weights_z_errors_more_heavily() {
        let ch = LocalChannel::new(LocalKind::Biased, 0.01).with_eta(10.0);
        let probs = ch.pauli_probs_at(0.01).unwrap();
        let total: f64 = probs.iter().map(|&(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let p_zz = probs.iter().find(|&&(c, _)| c == 15).unwrap().1;
        let p_xx = probs.iter().find(|&&(c, _)| c == 5).unwrap().1;
        // eta/(3(eta+1)) + 1/(15(eta+1)) vs 1/(15(eta+1)) at eta = 10.
        assert_abs_diff_eq!(p_zz, 0.01 * (10.0 / 33.0 + 1.0 / 165.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p_xx, 0.01 / 165.0, epsilon = 1e-15);
        assert!(p_zz / p_xx > 50.0);
    }

    #[test]
    fn model_a_attaches_three_channels_per_gate_with_periodic_flanks() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 4).unwrap();
        let model = NoiseModel::local_only(LocalKind::Dephasing, 0.01).with_crosstalk(false);
        let attachments = model.pauli_attachments(&circuit).unwrap();
        assert_eq!(attachments.len(), 3 * circuit.frame_gate_count());
        // First gate of layer 1 is CNOT(0 -> 1): flanks are (1,2) and (3,0).
        assert_eq!(attachments[0].support, vec![0, 1]);
        assert_eq!(attachments[1].support, vec![1, 2]);
        assert_eq!(attachments[2].support, vec![3, 0]);
        // All three run at the same rate under full-strength crosstalk.
        for a in &attachments[..3] {
            assert_abs_diff_eq!(a.probs[0].1, 0.99, epsilon = 1e-15);
        }
    }

    #[test]
    fn reduced_crosstalk_runs_flanks_at_one_tenth_rate() {
        let circuit = build_layout(LayoutKind::CzCycle, 4, 4).unwrap();
        let model = NoiseModel::local_only(LocalKind::Dephasing, 0.05).with_crosstalk(true);
        let attachments = model.pauli_attachments(&circuit).unwrap();
        assert_eq!(attachments.len(), 3 * circuit.frame_gate_count());
        assert_abs_diff_eq!(attachments[0].probs[0].1, 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(attachments[1].probs[0].1, 0.995, epsilon = 1e-12);
        assert_abs_diff_eq!(attachments[2].probs[0].1, 0.995, epsilon = 1e-12);
    }

    #[test]
    fn temporal_branch_boosts_only_channels_touching_the_bad_qubit() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 2).unwrap();
        let model = NoiseModel::local_only(LocalKind::Dephasing, 0.006)
            .with_temporal(10.0, vec![0.25; 4]);
        let base = model.pauli_attachments_for_branch(&circuit, Some(3)).unwrap();
        for ch in &base {
            let expected = if ch.support.contains(&3) { 0.06 } else { 0.006 };
            let err: f64 = ch.probs[1..].iter().map(|&(_, p)| p).sum();
            assert_abs_diff_eq!(err, expected, epsilon = 1e-12);
        }
        // The aggregate compiler refuses a temporal model.
        assert!(model.pauli_attachments(&circuit).is_err());
    }

    #[test]
    fn damping_blocks_the_stabilizer_compiler() {
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let model = NoiseModel::local_only(LocalKind::Dephasing, 0.01).with_damping(0.001);
        assert!(model.pauli_attachments(&circuit).is_err());
        assert!(!model.is_pauli_gate_noise());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let json = r#"{
            "local": {"kind": "biased", "epsilon": 0.01, "eta": 10.0},
            "crosstalk": {"kind": "reduced"},
            "temporal": {"g": 10.0, "prob": [0.5, 0.5]},
            "damping_gamma": 0.001,
            "meas_flip": [0.01, 0.02]
        }"#;
        let model = build_noise_model(json).unwrap();
        assert_eq!(model.local.unwrap().kind, LocalKind::Biased);
        assert!(matches!(model.crosstalk, CrosstalkKind::Reduced { epsilon: None }));
        assert_eq!(model.temporal.as_ref().unwrap().g, 10.0);
        assert_eq!(model.meas_flip, [0.01, 0.02]);
        assert!(!model.balanced);

        let empty = build_noise_model("{}").unwrap();
        assert_eq!(empty, NoiseModel::noiseless());

        let round = serde_json::to_string(&model).unwrap();
        let back = build_noise_model(&round).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn validation_rejects_bad_configurations() {
        // Depolarizing at the non-invertible rate.
        let m = NoiseModel::local_only(LocalKind::Depolarizing, 15.0 / 16.0);
        assert!(m.validate().is_err());
        // Crosstalk without a local channel.
        let m = NoiseModel { crosstalk: CrosstalkKind::ModelA { epsilon: None }, ..NoiseModel::default() };
        assert!(m.validate().is_err());
        // Temporal probabilities that do not sum to one.
        let m = NoiseModel::local_only(LocalKind::Dephasing, 0.01).with_temporal(10.0, vec![0.3, 0.3]);
        assert!(m.validate().is_err());
        // Worsened rate above one.
        let m = NoiseModel::local_only(LocalKind::Dephasing, 0.2).with_temporal(10.0, vec![1.0]);
        assert!(m.validate().is_err());
        // Flip probability out of range.
        let m = NoiseModel::noiseless().with_meas_flip(1.5, 0.0);
        assert!(m.validate().is_err());
        // Bad JSON surfaces as a config error.
        assert!(build_noise_model("{\"local\": {\"kind\": \"sparkly\", \"epsilon\": 0.1}}").is_err());
    }

    #[test]
    fn epsilon_scaling_freezes_crosstalk_at_its_original_rate() {
        let model = NoiseModel::local_only(LocalKind::Biased, 0.04).with_crosstalk(true);
        assert_abs_diff_eq!(model.crosstalk_epsilon().unwrap(), 0.004, epsilon = 1e-15);
        let boosted = model.with_local_epsilon_scaled(2.0).unwrap();
        assert_abs_diff_eq!(boosted.local.unwrap().epsilon, 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(boosted.crosstalk_epsilon().unwrap(), 0.004, epsilon = 1e-15);
    }

    #[test]
    fn size_rescaled_rate_follows_the_two_over_nn_rule() {
        assert_abs_diff_eq!(scaled_epsilon(1.0, 5, 5), 2.0 / 25.0, epsilon = 1e-15);
        assert_abs_diff_eq!(scaled_epsilon(1.2, 8, 8), 2.4 / 64.0, epsilon = 1e-15);
    }
}
