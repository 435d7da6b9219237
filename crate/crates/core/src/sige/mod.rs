//! Significant-error sets and tomography-initialized quasi-probabilities.
//!
//! Given the local noise channel assumed to follow every two-qubit frame
//! gate, this module:
//!
//! 1. inverts that channel into per-gate quasi-probabilities over local Pauli
//!    insertions ([`invert_local_channel`] / [`LocalInverse`]),
//! 2. truncates the full error-pattern space down to the significant set
//!    `SigE`: patterns decorating at most `k` gates, each with one
//!    non-identity Pauli pair from the local support ([`generate_sige`]), and
//! 3. assigns each pattern its product-form quasi-probability — the
//!    tomography baseline distribution used for mitigation before any
//!    learning ([`tomography_quasiprob`]).
//!
//! The set deliberately encodes only the *assumed local* noise: spatial
//! crosstalk and temporal fluctuations are invisible to this construction,
//! which is exactly the gap learning-based mitigation closes.
//!
//! Ordering is deterministic so every downstream artifact (design matrices,
//! serialized sets, sampling streams) is reproducible: the trivial pattern
//! first, then single decorations by (gate placement order, code), then pairs
//! by (first gate, first code, second gate, second code).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{ErrorPattern, LayeredCircuit};
use crate::dense::{LocalChannel, LocalKind};
use crate::pauli::{codes_commute, unpack_code, Pauli};
use crate::{Error, Result};

/// Quasi-probability inverse of one gate's local Pauli channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalInverse {
    /// Frame-gate execution index this inverse is attached to.
    pub gate_index: usize,
    /// Channel-kind tag recorded for provenance ("dephasing",
    /// "depolarizing", "biased").
    pub kind_tag: String,
    /// Quasi-probabilities over packed two-qubit Pauli codes; the identity
    /// entry comes first and the weights sum to 1.
    weights: Vec<(usize, f64)>,
}

impl LocalInverse {
    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    /// Weight of the identity term (the `eta_1` of the closed forms).
    pub fn eta1(&self) -> f64 {
        self.weights[0].1
    }

    /// Non-identity codes carrying a nonzero quasi-probability, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().skip(1).filter(|&&(_, w)| w != 0.0).map(|&(c, _)| c).collect()
    }

    /// Quasi-probability of one code (0 when outside the support).
    pub fn weight_of(&self, code: usize) -> f64 {
        self.weights.iter().find(|&&(c, _)| c == code).map_or(0.0, |&(_, w)| w)
    }

    /// Sampling overhead `gamma = sum |q|` of this single inverse.
    pub fn gamma(&self) -> f64 {
        self.weights.iter().map(|&(_, w)| w.abs()).sum()
    }

    /// Relabel the gate this inverse belongs to.
    pub fn for_gate(mut self, gate_index: usize) -> Self {
        self.gate_index = gate_index;
        self
    }
}

/// Invert a Pauli channel given as sparse `(code, prob)` pairs over `arity`
/// qubits.  Works through the transfer-matrix diagonal: a Pauli channel has
/// eigenvalue `lambda_t = sum_s p_s sign(t, s)` on the Pauli word `t`, the
/// inverse has `1 / lambda_t`, and the signed Walsh transform maps the
/// reciprocal diagonal back to quasi-probabilities.
pub fn invert_pauli_channel(probs: &[(usize, f64)], arity: usize) -> Result<Vec<(usize, f64)>> {
    let codes = 4usize.pow(arity as u32);
    let mut dense = vec![0.0; codes];
    for &(c, p) in probs {
        if c >= codes {
            return Err(Error::InvalidNoise(format!("code {c} out of range for arity {arity}")));
        }
        dense[c] += p;
    }
    let mut lambda = vec![0.0; codes];
    for t in 0..codes {
        for (s, &p) in dense.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            lambda[t] += if codes_commute(t, s, arity) { p } else { -p };
        }
    }
    let mut inv_weights = vec![0.0; codes];
    for (s, slot) in inv_weights.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (t, &l) in lambda.iter().enumerate() {
            if l.abs() < 1e-12 {
                return Err(Error::NonInvertibleChannel(l));
            }
            let sign = if codes_commute(t, s, arity) { 1.0 } else { -1.0 };
            acc += sign / l;
        }
        *slot = acc / codes as f64;
    }
    let mut out = Vec::with_capacity(codes);
    out.push((0, inv_weights[0]));
    for (c, &w) in inv_weights.iter().enumerate().skip(1) {
        if w.abs() > 1e-15 {
            out.push((c, w));
        }
    }
    Ok(out)
}

/// Quasi-probability inverse of the assumed local two-qubit channel.
///
/// Dephasing and depolarizing use their closed forms
/// (`eta_1 = 1 + 3eps/(3-4eps)`, `eta_2 = -eps/(3-4eps)` over the three
/// Z-pairs; `eta_1 = 1 + 15eps/(15-16eps)`, `eta_2 = -eps/(15-16eps)` over
/// all fifteen error pairs); the biased channel is inverted numerically
/// through its transfer-matrix diagonal.  `eta` is only read for
/// [`LocalKind::Biased`].
pub fn invert_local_channel(kind: LocalKind, epsilon: f64, eta: f64) -> Result<LocalInverse> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidNoise(format!("epsilon {epsilon} outside [0, 1]")));
    }
    const Z_CODES: [usize; 3] = [3, 12, 15];
    let weights = match kind {
        LocalKind::Dephasing => {
            let denom = 3.0 - 4.0 * epsilon;
            if denom <= 0.0 {
                return Err(Error::NonInvertibleChannel(denom));
            }
            let eta1 = 1.0 + 3.0 * epsilon / denom;
            let eta2 = -epsilon / denom;
            let mut w = vec![(0usize, eta1)];
            if epsilon > 0.0 {
                w.extend(Z_CODES.iter().map(|&c| (c, eta2)));
            }
            w
        }
        LocalKind::Depolarizing => {
            let denom = 15.0 - 16.0 * epsilon;
            if denom <= 0.0 {
                return Err(Error::NonInvertibleChannel(denom));
            }
            let eta1 = 1.0 + 15.0 * epsilon / denom;
            let eta2 = -epsilon / denom;
            let mut w = vec![(0usize, eta1)];
            if epsilon > 0.0 {
                w.extend((1..16usize).map(|c| (c, eta2)));
            }
            w
        }
        LocalKind::Biased => {
            let channel = LocalChannel::new(kind, epsilon).with_eta(eta);
            invert_pauli_channel(&channel.pauli_probs_at(epsilon)?, 2)?
        }
    };
    Ok(LocalInverse { gate_index: 0, kind_tag: kind_tag(kind).to_string(), weights })
}

fn kind_tag(kind: LocalKind) -> &'static str {
    match kind {
        LocalKind::Dephasing => "dephasing",
        LocalKind::Depolarizing => "depolarizing",
        LocalKind::Biased => "biased",
    }
}

/// Build one inverse per frame gate of a circuit, all from the same assumed
/// local channel.
pub fn uniform_local_inverses(
    circuit: &LayeredCircuit,
    kind: LocalKind,
    epsilon: f64,
    eta: f64,
) -> Result<Vec<LocalInverse>> {
    let base = invert_local_channel(kind, epsilon, eta)?;
    Ok((0..circuit.frame_gate_count()).map(|g| base.clone().for_gate(g)).collect())
}

/// One truncated error pattern: which frame gates carry which non-identity
/// Pauli pair, keyed by gate execution index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigPattern {
    #[serde(with = "decoration_letters")]
    pub decorations: BTreeMap<usize, usize>,
}

impl SigPattern {
    pub fn trivial() -> Self {
        SigPattern::default()
    }

    /// Number of decorated gates.
    pub fn weight(&self) -> usize {
        self.decorations.len()
    }

    /// Expand into a full circuit-level error pattern: the decoration of a
    /// gate in frame layer `j` lands on that layer's post-gate insertion
    /// point (pattern entry `j`), on the gate's control and target qubits.
    pub fn to_error_pattern(&self, circuit: &LayeredCircuit) -> Result<ErrorPattern> {
        let gates: Vec<_> = circuit.gates_in_order().collect();
        let mut pattern = ErrorPattern::trivial(circuit.n(), circuit.num_frame_layers());
        for (&g, &code) in &self.decorations {
            let Some(&(layer, _, gate)) = gates.get(g) else {
                return Err(Error::InvalidCircuit(format!(
                    "decorated gate index {g} out of range ({} gates)",
                    gates.len()
                )));
            };
            if code == 0 || code >= 16 {
                return Err(Error::InvalidCircuit(format!(
                    "decoration code {code} must be a non-identity two-qubit pair"
                )));
            }
            let letters = unpack_code(code, 2);
            pattern.set(layer, gate.control, letters[0])?;
            pattern.set(layer, gate.target, letters[1])?;
        }
        Ok(pattern)
    }
}

/// Serialize gate decorations as `{"gate_index": "pauli pair"}` maps, e.g.
/// `{"3": "ZZ"}`.
mod decoration_letters {
    use super::*;
    use serde::de::Error as DeError;
    use serde::ser::Error as SerError;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<usize, usize>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut out: BTreeMap<String, String> = BTreeMap::new();
        for (&g, &code) in map {
            if code == 0 || code >= 16 {
                return Err(S::Error::custom(format!("invalid decoration code {code}")));
            }
            let letters: String = unpack_code(code, 2).iter().map(|p| p.to_char()).collect();
            out.insert(g.to_string(), letters);
        }
        serde::Serialize::serialize(&out, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<BTreeMap<usize, usize>, D::Error> {
        let raw: BTreeMap<String, String> = serde::Deserialize::deserialize(de)?;
        let mut out = BTreeMap::new();
        for (key, letters) in raw {
            let g: usize =
                key.parse().map_err(|_| D::Error::custom(format!("bad gate index {key:?}")))?;
            if letters.chars().count() != 2 {
                return Err(D::Error::custom(format!("pair {letters:?} must have two letters")));
            }
            let mut code = 0usize;
            for ch in letters.chars() {
                let p = Pauli::from_char(ch)
                    .map_err(|_| D::Error::custom(format!("bad Pauli letter {ch:?}")))?;
                code = code * 4 + p.code() as usize;
            }
            if code == 0 {
                return Err(D::Error::custom("decoration may not be the identity pair"));
            }
            out.insert(g, code);
        }
        Ok(out)
    }
}

/// The significant-error set: all patterns decorating at most `k` gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigESet {
    /// Truncation order.
    pub k: usize,
    /// Noise-assumption tag inherited from the local inverses.
    pub model: String,
    /// Identity hash of the layout the set was generated for.
    pub layout_hash: String,
    /// Patterns in canonical order; index 0 is the trivial pattern.
    pub patterns: Vec<SigPattern>,
}

impl SigESet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Closed-form size check value for `k = 1`: `1 + sum_g |support_g|`.
    pub fn first_order_size(locals: &[LocalInverse]) -> usize {
        1 + locals.iter().map(|l| l.support().len()).sum::<usize>()
    }

    /// SHA-256 of the canonical JSON form, identifying the set in artifacts.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("sige sets always serialize");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Enumerate the significant-error set of a circuit for truncation order `k`.
/// `locals` holds one inverse per frame gate in execution order; a gate's
/// candidate decorations are exactly its inverse's support codes.
pub fn generate_sige(
    circuit: &LayeredCircuit,
    locals: &[LocalInverse],
    k: usize,
) -> Result<SigESet> {
    let gate_count = circuit.frame_gate_count();
    if locals.len() != gate_count {
        return Err(Error::InvalidConfig(format!(
            "{} local inverses for {} frame gates",
            locals.len(),
            gate_count
        )));
    }
    let supports: Vec<Vec<usize>> = locals.iter().map(|l| l.support()).collect();
    let mut patterns = vec![SigPattern::trivial()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for weight in 1..=k.min(gate_count) {
        extend_patterns(&supports, weight, 0, &mut stack, &mut patterns);
    }
    let model = locals.first().map_or_else(String::new, |l| l.kind_tag.clone());
    Ok(SigESet {
        k,
        model,
        layout_hash: crate::stabilizer::layout_hash(circuit),
        patterns,
    })
}

/// Depth-first enumeration of decorations with exactly `remaining` more gates
/// to decorate, starting from gate `from`.  Gates iterate in placement order
/// and codes in ascending (lexicographic) order, so output order is canonical.
fn extend_patterns(
    supports: &[Vec<usize>],
    remaining: usize,
    from: usize,
    stack: &mut Vec<(usize, usize)>,
    out: &mut Vec<SigPattern>,
) {
    if remaining == 0 {
        out.push(SigPattern { decorations: stack.iter().copied().collect() });
        return;
    }
    for g in from..supports.len() {
        for &code in &supports[g] {
            stack.push((g, code));
            extend_patterns(supports, remaining - 1, g + 1, stack, out);
            stack.pop();
        }
    }
}

/// Quasi-probabilities over the patterns of a [`SigESet`], aligned by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub weights: Vec<f64>,
}

impl QuasiDistribution {
    /// Sampling overhead `C = sum |q|`.
    pub fn overhead(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// The tomography-initialized (TEM) distribution: each pattern's weight is
/// the product of its decorated gates' inverse entries times `eta_1` of every
/// undecorated gate.  Probability mass on patterns beyond order `k` is
/// dropped, not folded back — the truncation is a straight restriction.
pub fn tomography_quasiprob(sige: &SigESet, locals: &[LocalInverse]) -> Result<QuasiDistribution> {
    if sige.k > 2 {
        return Err(Error::CapExceeded(format!(
            "tomography distribution supports k <= 2, got k = {}",
            sige.k
        )));
    }
    let eta1_product: f64 = locals.iter().map(LocalInverse::eta1).product();
    let mut weights = Vec::with_capacity(sige.patterns.len());
    for pattern in &sige.patterns {
        let mut w = eta1_product;
        for (&g, &code) in &pattern.decorations {
            let local = locals.get(g).ok_or_else(|| {
                Error::InvalidConfig(format!("pattern decorates gate {g} beyond the inverse list"))
            })?;
            let eta1 = local.eta1();
            if eta1 == 0.0 {
                return Err(Error::Numerical("local inverse has zero identity weight".into()));
            }
            w *= local.weight_of(code) / eta1;
        }
        weights.push(w);
    }
    Ok(QuasiDistribution { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_layout, GateAssignment, LayoutKind, SlotGate};
    use crate::dense::{exact_expectation, NoiseModel};
    use crate::linalg::haar_unitary_2x2;
    use crate::pauli::{ptm_of_channel, ChannelSpec};
    use crate::rng::{rng_for, streams};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn depolarizing_inverse_matches_closed_form_values() {
        let inv = invert_local_channel(LocalKind::Depolarizing, 0.01, 0.0).unwrap();
        assert_abs_diff_eq!(inv.eta1(), 1.0 + 0.15 / 14.84, epsilon = 1e-12);
        assert_abs_diff_eq!(inv.weight_of(5), -0.01 / 14.84, epsilon = 1e-12);
        assert_eq!(inv.support().len(), 15);
        assert_abs_diff_eq!(inv.weights().iter().map(|&(_, w)| w).sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dephasing_inverse_matches_closed_form_values() {
        let eps = 0.05;
        let inv = invert_local_channel(LocalKind::Dephasing, eps, 0.0).unwrap();
        let denom = 3.0 - 4.0 * eps;
        assert_abs_diff_eq!(inv.eta1(), 1.0 + 3.0 * eps / denom, epsilon = 1e-12);
        assert_eq!(inv.support(), vec![3, 12, 15]);
        for c in inv.support() {
            assert_abs_diff_eq!(inv.weight_of(c), -eps / denom, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_forms_agree_with_the_numeric_transfer_matrix_route() {
        for (kind, eps) in [
            (LocalKind::Dephasing, 0.01),
            (LocalKind::Dephasing, 0.2),
            (LocalKind::Depolarizing, 0.01),
            (LocalKind::Depolarizing, 0.3),
        ] {
            let closed = invert_local_channel(kind, eps, 0.0).unwrap();
            let channel = LocalChannel::new(kind, eps);
            let numeric = invert_pauli_channel(&channel.pauli_probs_at(eps).unwrap(), 2).unwrap();
            let mut dense_closed = vec![0.0; 16];
            for &(c, w) in closed.weights() {
                dense_closed[c] = w;
            }
            let mut dense_numeric = vec![0.0; 16];
            for &(c, w) in &numeric {
                dense_numeric[c] = w;
            }
            for c in 0..16 {
                assert_abs_diff_eq!(dense_closed[c], dense_numeric[c], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn inverse_composed_with_channel_is_the_identity_map() {
        for (kind, eps, eta) in [
            (LocalKind::Dephasing, 0.04, 0.0),
            (LocalKind::Depolarizing, 0.04, 0.0),
            (LocalKind::Biased, 0.04, 10.0),
            (LocalKind::Biased, 0.04, 0.0),
        ] {
            let inv = invert_local_channel(kind, eps, eta).unwrap();
            let channel = LocalChannel::new(kind, eps).with_eta(eta);
            let forward: Vec<f64> = {
                let mut dense = vec![0.0; 16];
                for (c, p) in channel.pauli_probs_at(eps).unwrap() {
                    dense[c] = p;
                }
                dense
            };
            let inverse: Vec<f64> = {
                let mut dense = vec![0.0; 16];
                for &(c, w) in inv.weights() {
                    dense[c] = w;
                }
                dense
            };
            let pf = ptm_of_channel(&ChannelSpec::PauliProbs(&forward)).unwrap();
            let pi = ptm_of_channel(&ChannelSpec::PauliProbs(&inverse)).unwrap();
            let product = pi * pf;
            for r in 0..16 {
                for c in 0..16 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(product[(r, c)], expect, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn non_invertible_rates_are_rejected() {
        assert!(matches!(
            invert_local_channel(LocalKind::Dephasing, 0.75, 0.0),
            Err(Error::NonInvertibleChannel(_))
        ));
        assert!(matches!(
            invert_local_channel(LocalKind::Depolarizing, 15.0 / 16.0, 0.0),
            Err(Error::NonInvertibleChannel(_))
        ));
        assert!(invert_local_channel(LocalKind::Depolarizing, 0.95, 0.0).is_err());
    }

    #[test]
    fn zero_noise_inverts_to_the_trivial_distribution() {
        for kind in [LocalKind::Dephasing, LocalKind::Depolarizing, LocalKind::Biased] {
            let inv = invert_local_channel(kind, 0.0, 10.0).unwrap();
            assert_abs_diff_eq!(inv.eta1(), 1.0, epsilon = 1e-12);
            assert!(inv.support().is_empty());
            assert_abs_diff_eq!(inv.gamma(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sige_sizes_match_the_closed_form_counts() {
        // 8x8 ladder has 28 gates: dephasing 1 + 3*28 = 85, depolarizing
        // 1 + 15*28 = 421.
        let big = build_layout(LayoutKind::CnotLadder, 8, 8).unwrap();
        let deph = uniform_local_inverses(&big, LocalKind::Dephasing, 0.01, 0.0).unwrap();
        let set = generate_sige(&big, &deph, 1).unwrap();
        assert_eq!(set.len(), 85);
        assert_eq!(set.len(), SigESet::first_order_size(&deph));
        let depol = uniform_local_inverses(&big, LocalKind::Depolarizing, 0.01, 0.0).unwrap();
        assert_eq!(generate_sige(&big, &depol, 1).unwrap().len(), 421);

        // 4x4 ladder has 6 gates: k=2 dephasing 1 + 18 + C(6,2)*9 = 154.
        let small = build_layout(LayoutKind::CnotLadder, 4, 4).unwrap();
        let deph4 = uniform_local_inverses(&small, LocalKind::Dephasing, 0.01, 0.0).unwrap();
        assert_eq!(generate_sige(&small, &deph4, 1).unwrap().len(), 19);
        assert_eq!(generate_sige(&small, &deph4, 2).unwrap().len(), 154);
        let depol4 = uniform_local_inverses(&small, LocalKind::Depolarizing, 0.01, 0.0).unwrap();
        assert_eq!(generate_sige(&small, &depol4, 1).unwrap().len(), 91);

        // k = 0 keeps only the trivial pattern, for every layout.
        for kind in LayoutKind::ALL {
            let c = match kind {
                LayoutKind::CnotLadder => build_layout(kind, 4, 4).unwrap(),
                LayoutKind::CzCycle => build_layout(kind, 4, 4).unwrap(),
                LayoutKind::Dqcp => build_layout(kind, 2, 2).unwrap(),
                LayoutKind::QvaAnsatz => build_layout(kind, 4, 4).unwrap(),
                LayoutKind::UccsdH2 => build_layout(kind, 4, 6).unwrap(),
            };
            let locals = uniform_local_inverses(&c, LocalKind::Dephasing, 0.02, 0.0).unwrap();
            let set = generate_sige(&c, &locals, 0).unwrap();
            assert_eq!(set.len(), 1);
            assert!(set.patterns[0].decorations.is_empty());
            let full = generate_sige(&c, &locals, 1).unwrap();
            assert_eq!(full.len(), SigESet::first_order_size(&locals));
        }
    }

    #[test]
    fn pattern_order_is_canonical_and_weight_capped() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 2).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, 0.01, 0.0).unwrap();
        let set = generate_sige(&circuit, &locals, 2).unwrap();
        assert!(set.patterns[0].decorations.is_empty());
        // Weight-1 block comes before the weight-2 block and iterates
        // (gate, code) in ascending order.
        let gates = circuit.frame_gate_count();
        for g in 0..gates {
            for (ci, code) in [3usize, 12, 15].iter().enumerate() {
                let p = &set.patterns[1 + g * 3 + ci];
                assert_eq!(p.decorations.len(), 1);
                assert_eq!(p.decorations.get(&g), Some(code));
            }
        }
        for p in &set.patterns {
            assert!(p.weight() <= 2);
            for &code in p.decorations.values() {
                assert!([3, 12, 15].contains(&code));
            }
        }
        // First weight-2 pattern pairs gate 0 / code 3 with gate 1 / code 3.
        let first_pair = &set.patterns[1 + gates * 3];
        assert_eq!(first_pair.decorations.get(&0), Some(&3));
        assert_eq!(first_pair.decorations.get(&1), Some(&3));
    }

    #[test]
    fn patterns_expand_onto_the_decorated_layer_and_qubits() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 3).unwrap();
        // Gate 2 is the single gate of frame layer 2: CNOT(1 -> 2).
        let gates: Vec<_> = circuit.gates_in_order().collect();
        assert_eq!((gates[2].0, gates[2].2.control, gates[2].2.target), (2, 1, 2));
        let mut decorations = BTreeMap::new();
        decorations.insert(2usize, 7usize); // XZ: X on control, Z on target
        let pattern = SigPattern { decorations }.to_error_pattern(&circuit).unwrap();
        assert_eq!(pattern.layers()[2].get(1), Pauli::X);
        assert_eq!(pattern.layers()[2].get(2), Pauli::Z);
        assert_eq!(pattern.weight_for(&circuit), 1);
        assert_eq!(pattern.mitigation_layer(2), 5);
    }

    #[test]
    fn serialization_uses_letter_pairs_keyed_by_gate() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 4).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, 0.01, 0.0).unwrap();
        let set = generate_sige(&circuit, &locals, 1).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        assert!(json.contains("\"k\":1"));
        assert!(json.contains("\"model\":\"dephasing\""));
        assert!(json.contains("{\"0\":\"IZ\"}"));
        let back: SigESet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.content_hash(), set.content_hash());
        assert_eq!(set.content_hash().len(), 64);
        // Corrupt letters are rejected.
        let bad = json.replace("{\"0\":\"IZ\"}", "{\"0\":\"IQ\"}");
        assert!(serde_json::from_str::<SigESet>(&bad).is_err());
        let identity = json.replace("{\"0\":\"IZ\"}", "{\"0\":\"II\"}");
        assert!(serde_json::from_str::<SigESet>(&identity).is_err());
    }

    #[test]
    fn tomography_weights_are_truncated_eta_products() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 4).unwrap();
        let eps = 0.03;
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, eps, 0.0).unwrap();
        let set = generate_sige(&circuit, &locals, 1).unwrap();
        let q = tomography_quasiprob(&set, &locals).unwrap();
        let gates = circuit.frame_gate_count();
        let denom = 3.0 - 4.0 * eps;
        let eta1 = 1.0 + 3.0 * eps / denom;
        let eta2 = -eps / denom;
        assert_abs_diff_eq!(q.weights[0], eta1.powi(gates as i32), epsilon = 1e-12);
        for w in &q.weights[1..] {
            assert_abs_diff_eq!(*w, eta2 * eta1.powi(gates as i32 - 1), epsilon = 1e-12);
        }
        // Overhead matches the consistently truncated product expansion and
        // grows with the error rate.
        let c_direct = q.overhead();
        let c_expansion = eta1.powi(gates as i32)
            + gates as f64 * 3.0 * eta2.abs() * eta1.powi(gates as i32 - 1);
        assert_abs_diff_eq!(c_direct, c_expansion, epsilon = 1e-12);
        for (lo, hi) in [(0.0, 0.01), (0.01, 0.02), (0.02, 0.05)] {
            let c_of = |e: f64| {
                let l = uniform_local_inverses(&circuit, LocalKind::Dephasing, e, 0.0).unwrap();
                let s = generate_sige(&circuit, &l, 1).unwrap();
                tomography_quasiprob(&s, &l).unwrap().overhead()
            };
            assert!(c_of(lo) <= c_of(hi) + 1e-12);
        }
    }

    #[test]
    fn zero_noise_tomography_is_a_point_mass_on_the_trivial_pattern() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 2).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Depolarizing, 0.0, 0.0).unwrap();
        let set = generate_sige(&circuit, &locals, 1).unwrap();
        assert_eq!(set.len(), 1);
        let q = tomography_quasiprob(&set, &locals).unwrap();
        assert_eq!(q.weights, vec![1.0]);
        assert_abs_diff_eq!(q.overhead(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn order_guard_rejects_k_three() {
        let circuit = build_layout(LayoutKind::CnotLadder, 4, 2).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, 0.01, 0.0).unwrap();
        let set = generate_sige(&circuit, &locals, 3).unwrap();
        assert!(matches!(tomography_quasiprob(&set, &locals), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn single_gate_inverse_mitigates_exactly_for_arbitrary_gates() {
        // One frame gate whose true noise equals the assumed local model:
        // the k=1 tomography distribution is the exact channel inverse, so
        // mitigation recovers the noiseless value for any computing gates.
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        for (kind, eta) in
            [(LocalKind::Dephasing, 0.0), (LocalKind::Depolarizing, 0.0), (LocalKind::Biased, 10.0)]
        {
            let eps = 0.06;
            let noise = NoiseModel {
                local: Some(LocalChannel::new(kind, eps).with_eta(eta)),
                ..NoiseModel::default()
            };
            let locals = uniform_local_inverses(&circuit, kind, eps, eta).unwrap();
            let set = generate_sige(&circuit, &locals, 1).unwrap();
            let q = tomography_quasiprob(&set, &locals).unwrap();
            for trial in 0..20 {
                let mut rng = rng_for(500 + trial, streams::HAAR, trial);
                let mut a = GateAssignment::identity(&circuit);
                for slot in 0..circuit.computing_slot_count() {
                    let u = haar_unitary_2x2(&mut rng);
                    a.set_computing(slot, SlotGate::from_unitary(u).unwrap());
                }
                for slot in 0..circuit.mitigation_slot_count() {
                    a.set_mitigation(slot, Pauli::from_code(rng.gen_range(0..4u8)).unwrap());
                }
                let ideal = exact_expectation(&circuit, &a, &NoiseModel::noiseless()).unwrap();
                let mut mitigated = 0.0;
                for (pattern, &w) in set.patterns.iter().zip(q.weights.iter()) {
                    let ep = pattern.to_error_pattern(&circuit).unwrap();
                    let decorated =
                        crate::circuit::apply_error_pattern(&circuit, &a, &ep).unwrap();
                    mitigated += w * exact_expectation(&circuit, &decorated, &noise).unwrap();
                }
                assert_abs_diff_eq!(mitigated, ideal, epsilon = 1e-10);
            }
        }
    }
}
