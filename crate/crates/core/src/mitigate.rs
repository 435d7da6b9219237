//! Error-mitigated estimation: combine a quasi-probability distribution over
//! the significant-error set with measured expectations, either by exact
//! summation or by sign-weighted Monte Carlo sampling, plus the additive
//! measurement-error offset used by interference-style demos.
//!
//! The mitigated value of a circuit `R` is
//!
//! ```text
//! com_em(R) = sum_sigma q(sigma) com(R, sigma) + q0
//! ```
//!
//! where `com(R, sigma)` runs the noisy circuit with pattern `sigma`
//! deliberately inserted.  Exact evaluation computes every term; sampling
//! draws patterns from `|q|/C`, runs one shot each, and weighs the outcomes
//! by `C * sign(q)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_error_pattern, GateAssignment, LayeredCircuit};
use crate::dense::{effective_flips, exact_expectation, sample_shots, NoiseModel};
use crate::learn::{gate_spans, noise_branches, pattern_sign, profile_shot, CliffordNoiseEval};
use crate::rng::{rng_for, streams};
use crate::sige::{QuasiDistribution, SigESet};
use crate::stabilizer::SignProfile;
use crate::{Error, Result};

/// How a plan's quasi-probability combination is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Evaluate `com(R, sigma)` exactly for every pattern and sum.
    Exact,
    /// Draw `shots` patterns from `|q|/C`, one circuit run each.
    Sampled { shots: usize, seed: u64 },
}

/// A mitigation recipe: the pattern set, quasi-probabilities aligned with it,
/// the additive measurement-error offset, and the evaluation mode.
///
/// The normalization factor absorbed into readout-error corrections (the
/// `1/(1 - p0 - p1)` of the interference demo) lives in the distribution
/// itself; `q0` stays a pure additive offset applied after combination, so it
/// is excluded from the sampling overhead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MitigationPlan {
    pub sige: SigESet,
    pub distribution: QuasiDistribution,
    pub q0: f64,
    pub mode: SamplingMode,
}

impl MitigationPlan {
    /// Exact-mode plan with no offset.
    pub fn new(sige: SigESet, distribution: QuasiDistribution) -> Result<Self> {
        let plan = MitigationPlan { sige, distribution, q0: 0.0, mode: SamplingMode::Exact };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_offset(mut self, q0: f64) -> Self {
        self.q0 = q0;
        self
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    /// Sampling overhead of the plan's distribution; see [`overhead_cost`].
    pub fn overhead(&self) -> f64 {
        overhead_cost(&self.distribution)
    }

    pub fn validate(&self) -> Result<()> {
        if self.distribution.weights.len() != self.sige.patterns.len() {
            return Err(Error::InvalidConfig(format!(
                "{} quasi-probabilities for a pattern set of size {}",
                self.distribution.weights.len(),
                self.sige.patterns.len()
            )));
        }
        if !self.distribution.weights.iter().all(|w| w.is_finite()) || !self.q0.is_finite() {
            return Err(Error::Numerical("plan weights must be finite".into()));
        }
        if let SamplingMode::Sampled { shots, .. } = self.mode {
            if shots == 0 {
                return Err(Error::InvalidConfig("sampled mode needs shots >= 1".into()));
            }
        }
        Ok(())
    }

    /// The plan's patterns must fit the circuit's frame gates.  Layout
    /// identity beyond the gate count is the caller's contract (pattern sets
    /// record the layout hash they were generated for).
    fn check_compatible(&self, circuit: &LayeredCircuit) -> Result<()> {
        let gates = circuit.frame_gate_count();
        for pattern in &self.sige.patterns {
            if let Some((&g, _)) = pattern.decorations.last_key_value() {
                if g >= gates {
                    return Err(Error::InvalidConfig(format!(
                        "pattern decorates gate {g} but the circuit has {gates} frame gates"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Error-mitigation overhead cost `C = sum_sigma |q(sigma)|`.  The additive
/// offset `q0` is not part of the sum: it is never sampled.
pub fn overhead_cost(distribution: &QuasiDistribution) -> f64 {
    distribution.overhead()
}

/// Exact mitigated expectation: `sum_sigma q(sigma) com(R, sigma) + q0`.
///
/// Clifford assignments under Pauli gate noise evaluate through sign
/// profiles (one expansion, then a sign product per pattern); anything else
/// — non-Clifford computing gates or amplitude damping — goes through the
/// density-matrix simulator pattern by pattern, inheriting its width cap.
pub fn mitigated_expectation_exact(
    plan: &MitigationPlan,
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
) -> Result<f64> {
    plan.validate()?;
    plan.check_compatible(circuit)?;
    let mut acc = plan.q0;
    if assignment.all_computing_clifford() && noise.is_pauli_gate_noise() {
        let eval = CliffordNoiseEval::new(circuit, noise)?;
        let terms = eval.expansion(assignment)?;
        for (pattern, &w) in plan.sige.patterns.iter().zip(&plan.distribution.weights) {
            if w != 0.0 {
                acc += w * eval.com(&terms, pattern);
            }
        }
    } else {
        for (pattern, &w) in plan.sige.patterns.iter().zip(&plan.distribution.weights) {
            if w == 0.0 {
                continue;
            }
            let decorated =
                apply_error_pattern(circuit, assignment, &pattern.to_error_pattern(circuit)?)?;
            acc += w * exact_expectation(circuit, &decorated, noise)?;
        }
    }
    Ok(acc)
}

/// Monte Carlo mitigated expectation: draws `shots` patterns `sigma_k` from
/// `|q|/C`, runs the decorated circuit once per draw, and returns
///
/// ```text
/// (C / M) sum_k sign(q(sigma_k)) f_k  +  q0
/// ```
///
/// together with the jackknife standard error of the estimate (infinite for
/// a single shot).  Negative-sign draws are recorded as sign-flipped
/// outcomes, so the estimator is unbiased for the exact combination.  Shot
/// `k` consumes only the RNG stream derived from `(seed, k)`; results are
/// bit-identical across thread counts.
pub fn mitigated_expectation_sampled(
    plan: &MitigationPlan,
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    plan.validate()?;
    plan.check_compatible(circuit)?;
    noise.validate()?;
    if shots == 0 {
        return Err(Error::InvalidConfig("sampling needs shots >= 1".into()));
    }
    let c_total = plan.overhead();
    if c_total <= 0.0 {
        return Err(Error::InvalidConfig("sampling needs a distribution with |q| > 0".into()));
    }

    // Cumulative |q| over the support, for binary-searched pattern draws.
    let mut support: Vec<usize> = Vec::new();
    let mut cumulative: Vec<f64> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for (s, &w) in plan.distribution.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        acc += w.abs();
        support.push(s);
        cumulative.push(acc);
        signs.push(w.signum());
    }

    let sampler = PatternSampler::prepare(plan, circuit, assignment, noise, &support)?;
    let samples: Vec<f64> = (0..shots)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, streams::MITIGATION, k as u64);
            let u: f64 = rng.gen::<f64>() * c_total;
            let idx = cumulative.partition_point(|&edge| edge <= u).min(support.len() - 1);
            let f = sampler.draw(idx, &mut rng)?;
            Ok(c_total * signs[idx] * f)
        })
        .collect::<Result<_>>()?;

    let mean = samples.iter().sum::<f64>() / shots as f64;
    let stderr = if shots < 2 {
        f64::INFINITY
    } else {
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        (ss / (shots as f64 * (shots - 1) as f64)).sqrt()
    };
    Ok((mean + plan.q0, stderr))
}

/// Evaluate a plan in its configured mode.  Returns the estimate and, in
/// sampled mode, the jackknife standard error.
pub fn mitigated_expectation(
    plan: &MitigationPlan,
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    noise: &NoiseModel,
) -> Result<(f64, Option<f64>)> {
    match plan.mode {
        SamplingMode::Exact => {
            Ok((mitigated_expectation_exact(plan, circuit, assignment, noise)?, None))
        }
        SamplingMode::Sampled { shots, seed } => {
            let (estimate, stderr) =
                mitigated_expectation_sampled(plan, circuit, assignment, noise, shots, seed)?;
            Ok((estimate, Some(stderr)))
        }
    }
}

/// Result artifact of a mitigation run, in the shape emitted by harnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationRecord {
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(rename = "C")]
    pub overhead: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Per-pattern single-shot machinery, prepared once per mitigation run.
/// Clifford assignments under Pauli gate noise (with weight-1 or symmetric
/// readout flips) sample sign profiles; everything else samples dense
/// trajectories of the decorated circuit.
enum PatternSampler<'a> {
    Profile {
        profile: SignProfile,
        branches: Vec<(f64, Vec<crate::stabilizer::PauliChannelAt>)>,
        flips: (f64, f64),
        weight: usize,
        pattern_signs: Vec<f64>,
    },
    Dense {
        circuit: &'a LayeredCircuit,
        noise: &'a NoiseModel,
        decorated: Vec<GateAssignment>,
    },
}

impl<'a> PatternSampler<'a> {
    fn prepare(
        plan: &MitigationPlan,
        circuit: &'a LayeredCircuit,
        assignment: &GateAssignment,
        noise: &'a NoiseModel,
        support: &[usize],
    ) -> Result<Self> {
        let flips = effective_flips(noise);
        let weight = circuit.observable().z_qubits().len();
        let profile_ok = assignment.all_computing_clifford()
            && noise.is_pauli_gate_noise()
            && (weight <= 1 || flips.0 == flips.1);
        if profile_ok {
            let profile = SignProfile::build(circuit, assignment)?;
            let spans = gate_spans(circuit);
            let pattern_signs = support
                .iter()
                .map(|&s| pattern_sign(&profile, &spans, &plan.sige.patterns[s]))
                .collect();
            Ok(PatternSampler::Profile {
                profile,
                branches: noise_branches(circuit, noise)?,
                flips,
                weight,
                pattern_signs,
            })
        } else {
            let decorated = support
                .iter()
                .map(|&s| {
                    apply_error_pattern(
                        circuit,
                        assignment,
                        &plan.sige.patterns[s].to_error_pattern(circuit)?,
                    )
                })
                .collect::<Result<_>>()?;
            Ok(PatternSampler::Dense { circuit, noise, decorated })
        }
    }

    /// One shot of the circuit decorated with support pattern `idx`.
    fn draw<R: Rng>(&self, idx: usize, rng: &mut R) -> Result<f64> {
        match self {
            PatternSampler::Profile { profile, branches, flips, weight, pattern_signs } => {
                Ok(profile_shot(profile, branches, *flips, *weight, pattern_signs[idx], rng))
            }
            PatternSampler::Dense { circuit, noise, decorated } => {
                let shot_seed = rng.gen::<u64>();
                let records = sample_shots(circuit, &decorated[idx], noise, 1, shot_seed)?;
                Ok(records[0].f_value)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_layout, LayoutKind, SlotGate};
    use crate::dense::{clifford_exact_expectation, LocalChannel, LocalKind};
    use crate::learn::{fit_least_squares, ComTable, DesignData};
    use crate::linalg::haar_unitary_2x2;
    use crate::sige::{generate_sige, tomography_quasiprob, uniform_local_inverses};
    use crate::stabilizer::sample_training_set;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    /// Point mass on the trivial pattern.
    fn delta_trivial(sige: &SigESet) -> QuasiDistribution {
        let mut weights = vec![0.0; sige.patterns.len()];
        weights[0] = 1.0;
        QuasiDistribution { weights }
    }

    /// A reproducible Clifford assignment drawn from the catalog.
    fn random_clifford_assignment(
        circuit: &LayeredCircuit,
        seed: u64,
    ) -> GateAssignment {
        let mut rng = rng_for(seed, streams::TRAINING, 7);
        let mut a = GateAssignment::identity(circuit);
        for j in 1..=circuit.num_frame_layers() + 1 {
            for q in 0..circuit.n() {
                let idx = rng.gen_range(0..24);
                a.set_computing(
                    circuit.computing_slot(j, q),
                    SlotGate::from_clifford_index(idx).unwrap(),
                );
            }
        }
        a
    }

    /// A reproducible non-Clifford (Haar) assignment.
    fn random_haar_assignment(circuit: &LayeredCircuit, seed: u64) -> GateAssignment {
        let mut rng = rng_for(seed, streams::HAAR, 11);
        let mut a = GateAssignment::identity(circuit);
        for j in 1..=circuit.num_frame_layers() + 1 {
            for q in 0..circuit.n() {
                let u = haar_unitary_2x2(&mut rng);
                a.set_computing(circuit.computing_slot(j, q), SlotGate::from_unitary(u).unwrap());
            }
        }
        a
    }

    fn depolarizing_setup(
        n: usize,
        layers: usize,
        eps: f64,
    ) -> (LayeredCircuit, SigESet, QuasiDistribution, NoiseModel) {
        let circuit = build_layout(LayoutKind::CnotLadder, n, layers).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Depolarizing, eps, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let q = tomography_quasiprob(&sige, &locals).unwrap();
        let noise = NoiseModel {
            local: Some(LocalChannel::new(LocalKind::Depolarizing, eps)),
            ..NoiseModel::noiseless()
        };
        (circuit, sige, q, noise)
    }

    #[test]
    fn trivial_distribution_reproduces_the_unmitigated_value() {
        let (circuit, sige, _, noise) = depolarizing_setup(3, 2, 0.03);
        let delta = delta_trivial(&sige);
        let plan = MitigationPlan::new(sige, delta).unwrap();
        // Clifford route.
        let clifford = random_clifford_assignment(&circuit, 41);
        let mitigated = mitigated_expectation_exact(&plan, &circuit, &clifford, &noise).unwrap();
        let plain = clifford_exact_expectation(&circuit, &clifford, &noise).unwrap();
        assert_abs_diff_eq!(mitigated, plain, epsilon = 1e-12);
        // Dense route (non-Clifford computing gates), same plan.
        let haar = random_haar_assignment(&circuit, 42);
        let mitigated = mitigated_expectation_exact(&plan, &circuit, &haar, &noise).unwrap();
        let plain = exact_expectation(&circuit, &haar, &noise).unwrap();
        assert_abs_diff_eq!(mitigated, plain, epsilon = 1e-12);
    }

    #[test]
    fn exact_inverse_recovers_the_error_free_value_on_both_routes() {
        // One noisy gate: the first-order pattern set carries the full
        // inverse, so mitigation must cancel the noise exactly.
        let (circuit, sige, q, noise) = depolarizing_setup(2, 1, 0.04);
        let plan = MitigationPlan::new(sige, q).unwrap();
        let noiseless = NoiseModel::noiseless();

        let clifford = random_clifford_assignment(&circuit, 5);
        let em = mitigated_expectation_exact(&plan, &circuit, &clifford, &noise).unwrap();
        let ef = clifford_exact_expectation(&circuit, &clifford, &noiseless).unwrap();
        assert_abs_diff_eq!(em, ef, epsilon = 1e-10);

        let haar = random_haar_assignment(&circuit, 6);
        let em = mitigated_expectation_exact(&plan, &circuit, &haar, &noise).unwrap();
        let ef = exact_expectation(&circuit, &haar, &noiseless).unwrap();
        assert_abs_diff_eq!(em, ef, epsilon = 1e-10);
    }

    #[test]
    fn measurement_offset_cancels_pure_readout_error() {
        // Flips only: com = (1 - p0 - p1) com_clean + (p1 - p0) on a
        // weight-1 observable, so q = delta/(1 - p0 - p1) with offset
        // q0 = (p0 - p1)/(1 - p0 - p1) restores the clean value.
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Depolarizing, 0.01, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let (p0, p1) = (0.02, 0.05);
        let noise = NoiseModel { meas_flip: [p0, p1], ..NoiseModel::noiseless() };
        let scale = 1.0 - p0 - p1;
        let mut weights = vec![0.0; sige.patterns.len()];
        weights[0] = 1.0 / scale;
        let plan = MitigationPlan::new(sige, QuasiDistribution { weights })
            .unwrap()
            .with_offset((p0 - p1) / scale);

        let haar = random_haar_assignment(&circuit, 17);
        let clean = exact_expectation(&circuit, &haar, &NoiseModel::noiseless()).unwrap();
        let em = mitigated_expectation_exact(&plan, &circuit, &haar, &noise).unwrap();
        assert_abs_diff_eq!(em, clean, epsilon = 1e-10);
        // The overhead ignores the offset.
        assert_abs_diff_eq!(plan.overhead(), 1.0 / scale, epsilon = 1e-12);
    }

    #[test]
    fn overhead_of_the_depolarizing_inverse_matches_the_closed_form() {
        let (_, _, q, _) = depolarizing_setup(2, 1, 0.01);
        // eta1 + 15 |eta2| with eta1 = 1 + 15 eps / (15 - 16 eps).
        let eta2 = 0.01 / (15.0 - 0.16);
        let expected = 1.0 + 2.0 * 15.0 * eta2;
        assert_abs_diff_eq!(overhead_cost(&q), expected, epsilon = 1e-12);
        assert!(overhead_cost(&q) >= q.sum().abs());
        assert_abs_diff_eq!(q.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sampled_estimator_stays_within_the_variance_bound() {
        let (circuit, sige, q, noise) = depolarizing_setup(2, 1, 0.04);
        let c_total = q.overhead();
        let plan = MitigationPlan::new(sige, q).unwrap();
        let clifford = random_clifford_assignment(&circuit, 5);
        let exact = mitigated_expectation_exact(&plan, &circuit, &clifford, &noise).unwrap();

        // One large run: the estimate lands within 5 C / sqrt(M).
        let shots = 1_000_000;
        let (estimate, stderr) =
            mitigated_expectation_sampled(&plan, &circuit, &clifford, &noise, shots, 31).unwrap();
        let bound = c_total / (shots as f64).sqrt();
        assert!(
            (estimate - exact).abs() < 5.0 * bound,
            "estimate {estimate:.6} vs exact {exact:.6}, bound {bound:.2e}"
        );
        assert!(stderr > 0.0 && stderr < 2.0 * bound);

        // 200 independent runs: empirical variance obeys Var <= C^2 / M
        // (|f| <= 1) within three sigmas of the variance estimator itself.
        let shots = 2_000;
        let estimates: Vec<f64> = (0..200)
            .map(|k| {
                mitigated_expectation_sampled(&plan, &circuit, &clifford, &noise, shots, 1000 + k)
                    .unwrap()
                    .0
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (estimates.len() - 1) as f64;
        let bound = c_total * c_total / shots as f64;
        let slack = 1.0 + 3.0 * (2.0 / 199.0_f64).sqrt();
        assert!(var <= bound * slack, "variance {var:.3e} vs bound {bound:.3e}");
        // And the 200-run mean agrees with the exact value within five
        // combined standard errors.
        let se_mean = (var / estimates.len() as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 5.0 * se_mean,
            "mean {mean:.6} vs exact {exact:.6} (se {se_mean:.2e})"
        );
    }

    #[test]
    fn dense_route_sampling_is_unbiased_and_reproducible() {
        let (circuit, sige, q, noise) = depolarizing_setup(2, 1, 0.04);
        let plan = MitigationPlan::new(sige, q).unwrap();
        let haar = random_haar_assignment(&circuit, 23);
        let exact = mitigated_expectation_exact(&plan, &circuit, &haar, &noise).unwrap();
        let (estimate, stderr) =
            mitigated_expectation_sampled(&plan, &circuit, &haar, &noise, 20_000, 7).unwrap();
        assert!(
            (estimate - exact).abs() < 5.0 * stderr,
            "estimate {estimate:.6} vs exact {exact:.6} (stderr {stderr:.2e})"
        );
        let again =
            mitigated_expectation_sampled(&plan, &circuit, &haar, &noise, 20_000, 7).unwrap();
        assert_eq!((estimate, stderr), again);

        // Dispatcher agreement in both modes.
        let sampled_plan = plan.clone().with_mode(SamplingMode::Sampled { shots: 20_000, seed: 7 });
        assert_eq!(
            mitigated_expectation(&sampled_plan, &circuit, &haar, &noise).unwrap(),
            (estimate, Some(stderr))
        );
        assert_eq!(
            mitigated_expectation(&plan, &circuit, &haar, &noise).unwrap(),
            (exact, None)
        );
    }

    #[test]
    fn trivial_noiseless_sampling_reduces_to_the_empirical_mean() {
        // q = delta(trivial) on a noiseless device: the estimate is the
        // plain mean of +/-1 outcomes and the jackknife error collapses to
        // the binomial formula sqrt((1 - mean^2)/(M - 1)).
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Depolarizing, 0.01, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let plan = MitigationPlan::new(sige.clone(), delta_trivial(&sige)).unwrap();
        let haar = random_haar_assignment(&circuit, 3);
        let noiseless = NoiseModel::noiseless();
        let shots = 4_000;
        let (estimate, stderr) =
            mitigated_expectation_sampled(&plan, &circuit, &haar, &noiseless, shots, 77).unwrap();
        assert!(estimate.abs() <= 1.0);
        let binomial = ((1.0 - estimate * estimate) / (shots - 1) as f64).sqrt();
        assert_abs_diff_eq!(stderr, binomial, epsilon = 1e-12);
        let exact = exact_expectation(&circuit, &haar, &noiseless).unwrap();
        assert!((estimate - exact).abs() < 5.0 * stderr);
    }

    #[test]
    fn learned_distribution_generalizes_to_non_clifford_circuits() {
        // Learn on Cliffords under spatially correlated noise, then check
        // the mitigated error beats the unmitigated one on held-out Haar
        // circuits (the learning-transfers claim at desk scale).
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let eps = 0.04;
        let locals = uniform_local_inverses(&circuit, LocalKind::Depolarizing, eps, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let noise = NoiseModel {
            local: Some(LocalChannel::new(LocalKind::Depolarizing, eps)),
            ..NoiseModel::noiseless()
        }
        .with_crosstalk(false);
        let training = sample_training_set(&circuit, 3 * sige.len(), 19, None).unwrap();
        let table = ComTable::exact(&circuit, &training, &sige, &noise).unwrap();
        let fit = fit_least_squares(&DesignData::from_table(&table).unwrap()).unwrap();
        let plan = MitigationPlan::new(sige, fit.weights).unwrap();

        let noiseless = NoiseModel::noiseless();
        let mut improved = 0;
        let trials = 40;
        for k in 0..trials {
            let haar = random_haar_assignment(&circuit, 100 + k);
            let ef = exact_expectation(&circuit, &haar, &noiseless).unwrap();
            let raw = exact_expectation(&circuit, &haar, &noise).unwrap();
            let em = mitigated_expectation_exact(&plan, &circuit, &haar, &noise).unwrap();
            if (em - ef).abs() <= (raw - ef).abs() {
                improved += 1;
            }
        }
        assert!(
            improved * 10 >= trials * 9,
            "mitigation improved only {improved}/{trials} held-out circuits"
        );
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let (circuit, sige, q, noise) = depolarizing_setup(2, 1, 0.01);
        // Length mismatch.
        let short = QuasiDistribution { weights: vec![1.0] };
        assert!(MitigationPlan::new(sige.clone(), short).is_err());
        // Non-finite weight.
        let mut bad = q.clone();
        bad.weights[1] = f64::NAN;
        assert!(MitigationPlan::new(sige.clone(), bad).is_err());
        // Zero-shot sampling.
        let plan = MitigationPlan::new(sige.clone(), q).unwrap();
        let a = GateAssignment::identity(&circuit);
        assert!(
            mitigated_expectation_sampled(&plan, &circuit, &a, &noise, 0, 1).is_err()
        );
        // Zero-overhead distribution cannot be sampled.
        let zero = MitigationPlan {
            sige: sige.clone(),
            distribution: QuasiDistribution { weights: vec![0.0; sige.patterns.len()] },
            q0: 0.0,
            mode: SamplingMode::Exact,
        };
        assert!(mitigated_expectation_sampled(&zero, &circuit, &a, &noise, 10, 1).is_err());
        // Patterns beyond the circuit's gates.
        let wide = build_layout(LayoutKind::CnotLadder, 4, 4).unwrap();
        let wide_locals =
            uniform_local_inverses(&wide, LocalKind::Depolarizing, 0.01, 0.0).unwrap();
        let wide_sige = generate_sige(&wide, &wide_locals, 1).unwrap();
        let wide_plan = MitigationPlan::new(
            wide_sige.clone(),
            QuasiDistribution { weights: vec![0.1; wide_sige.patterns.len()] },
        )
        .unwrap();
        assert!(mitigated_expectation_exact(&wide_plan, &circuit, &a, &noise).is_err());
    }
}
