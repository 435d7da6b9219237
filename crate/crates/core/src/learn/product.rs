//! Product-form parametrization of the quasi-probability distribution and
//! its gradient descent.
//!
//! Instead of one free weight per significant pattern, the mitigation
//! operator is a product of independent two-point factors, one per
//! non-trivial pattern `i`:
//!
//! ```text
//! prod_i [ (1 - q_i) I + q_i sigma_i ]
//!   = sum_b V(q, b) sigma^b,    V(q, b) = prod_i [b_i q_i + (1-b_i)(1-q_i)]
//! ```
//!
//! so the effective quasi-probability of the composite pattern `sigma^b`
//! (apply every pattern with `b_i = 1`) is `V(q, b)`, and `sum_b V = 1`
//! identically.  Sampling uses the true probability
//! `W(q, b) = prod_i (b_i |q_i| + (1-b_i)|1-q_i|) / (|q_i| + |1-q_i|)`
//! with the signed ratio `V/W` as the estimator weight.
//!
//! For Clifford circuits under Pauli noise each pattern insertion
//! contributes a fixed sign `s_{R,i}`, so the mitigated expectation has the
//! closed form `com_em(R) = sum_T C_T prod_i [(1 - q_i) + q_i s_{T,i}]`
//! (one term per readout-flip subset), which this module differentiates
//! analytically:
//!
//! ```text
//! dV/dq_i = (2 b_i - 1) prod_{j != i} v_j
//! ```
//!
//! The descent uses the dynamical learning rate
//! `gamma = (max_i |q_i - 1| / max_i |dLoss/dq_i|) * gamma_prime`.

use rand::Rng;
use rayon::prelude::*;

use super::{CliffordNoiseEval, ShotOracle};
use crate::circuit::{GateAssignment, LayeredCircuit};
use crate::dense::{effective_flips, NoiseModel};
use crate::rng::{rng_for, streams};
use crate::sige::{QuasiDistribution, SigESet};
use crate::stabilizer::{SignProfile, TrainingSet};
use crate::{Error, Result};

/// Parameters of the product-form ansatz: one real `q_i` per non-trivial
/// significant pattern, plus the base learning rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductFormParams {
    pub q: Vec<f64>,
    pub gamma_prime: f64,
}

impl ProductFormParams {
    /// All-zero start: the trivial (do-nothing) mitigation.
    pub fn zeros(num_patterns: usize, gamma_prime: f64) -> Self {
        ProductFormParams { q: vec![0.0; num_patterns], gamma_prime }
    }

    /// Start from a tomography distribution: `q_i = |q_ini(sigma_i)|`
    /// clipped to `[0, 0.5]` (index 0 of the distribution is the trivial
    /// pattern and is skipped).
    pub fn from_tomography(q_ini: &QuasiDistribution, gamma_prime: f64) -> Self {
        let q = q_ini.weights.iter().skip(1).map(|w| w.abs().clamp(0.0, 0.5)).collect();
        ProductFormParams { q, gamma_prime }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Quasi-probability `V(q, b)` of one binary configuration.
pub fn product_form_value(q: &[f64], b: &[bool]) -> f64 {
    assert_eq!(q.len(), b.len(), "configuration length must match the parameter count");
    q.iter().zip(b).map(|(&qi, &bi)| if bi { qi } else { 1.0 - qi }).product()
}

/// Sampling probability `W(q, b)`: nonnegative and summing to 1 over all
/// configurations.
pub fn product_form_weight(q: &[f64], b: &[bool]) -> f64 {
    assert_eq!(q.len(), b.len(), "configuration length must match the parameter count");
    q.iter()
        .zip(b)
        .map(|(&qi, &bi)| {
            let norm = qi.abs() + (1.0 - qi).abs();
            if bi {
                qi.abs() / norm
            } else {
                (1.0 - qi).abs() / norm
            }
        })
        .product()
}

/// Per-circuit expansion `com(R, sigma^b) = sum_T C_T prod_{i: b_i} s_{T,i}`
/// for a training set under Pauli gate noise: the exact backbone of
/// product-form evaluation.  Terms with `None` signs are constants (the
/// empty readout subset), which pass through mitigation unchanged because
/// `sum_b V = 1`.
pub struct SignExpansion {
    rows: Vec<Vec<(f64, Option<Vec<f64>>)>>,
    com_ef: Vec<f64>,
    num_params: usize,
}

impl SignExpansion {
    pub fn build(
        circuit: &LayeredCircuit,
        training: &TrainingSet,
        sige: &SigESet,
        noise: &NoiseModel,
    ) -> Result<Self> {
        let eval = CliffordNoiseEval::new(circuit, noise)?;
        let rows: Vec<Vec<(f64, Option<Vec<f64>>)>> = training
            .entries
            .par_iter()
            .map(|entry| {
                let assignment = entry.assignment(circuit)?;
                let terms = eval.expansion(&assignment)?;
                Ok(terms
                    .into_iter()
                    .map(|t| match t.profile {
                        None => (t.coef, None),
                        Some(profile) => {
                            let signs = sige
                                .patterns
                                .iter()
                                .skip(1)
                                .map(|p| super::pattern_sign(&profile, &eval.spans, p))
                                .collect();
                            (t.coef, Some(signs))
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(SignExpansion {
            rows,
            com_ef: training.entries.iter().map(|e| e.com_ef).collect(),
            num_params: sige.patterns.len() - 1,
        })
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mitigated expectation of circuit `r` under the product form.
    fn com_em(&self, r: usize, q: &[f64]) -> f64 {
        self.rows[r]
            .iter()
            .map(|(coef, signs)| match signs {
                None => *coef,
                Some(s) => {
                    coef * s
                        .iter()
                        .zip(q)
                        .map(|(&si, &qi)| (1.0 - qi) + qi * si)
                        .product::<f64>()
                }
            })
            .sum()
    }

    /// Accumulates `d(com_em)/dq` of circuit `r` into `out`, scaled by
    /// `scale`, using prefix/suffix products per term (no divisions, so
    /// vanishing factors are safe).
    fn accumulate_gradient(&self, r: usize, q: &[f64], scale: f64, out: &mut [f64]) {
        let m = q.len();
        let mut prefix = vec![1.0; m + 1];
        let mut suffix = vec![1.0; m + 1];
        for (coef, signs) in &self.rows[r] {
            let Some(signs) = signs else { continue };
            for i in 0..m {
                prefix[i + 1] = prefix[i] * ((1.0 - q[i]) + q[i] * signs[i]);
            }
            for i in (0..m).rev() {
                suffix[i] = suffix[i + 1] * ((1.0 - q[i]) + q[i] * signs[i]);
            }
            for i in 0..m {
                out[i] += scale * coef * (signs[i] - 1.0) * prefix[i] * suffix[i + 1];
            }
        }
    }
}

/// Exact product-form loss over the training set.
pub fn product_form_loss(params: &ProductFormParams, expansion: &SignExpansion) -> Result<f64> {
    check_width(params, expansion)?;
    let mut acc = 0.0;
    for r in 0..expansion.len() {
        let d = expansion.com_em(r, &params.q) - expansion.com_ef[r];
        acc += d * d;
    }
    Ok(acc / expansion.len() as f64)
}

/// Exact gradient of [`product_form_loss`] with respect to every `q_i`.
pub fn product_form_gradient(
    params: &ProductFormParams,
    expansion: &SignExpansion,
) -> Result<Vec<f64>> {
    check_width(params, expansion)?;
    let mut grad = vec![0.0; params.len()];
    let scale = 2.0 / expansion.len() as f64;
    for r in 0..expansion.len() {
        let d = expansion.com_em(r, &params.q) - expansion.com_ef[r];
        expansion.accumulate_gradient(r, &params.q, scale * d, &mut grad);
    }
    Ok(grad)
}

fn check_width(params: &ProductFormParams, expansion: &SignExpansion) -> Result<()> {
    if expansion.is_empty() {
        return Err(Error::InvalidConfig("product form needs a nonempty training set".into()));
    }
    if params.len() != expansion.num_params() {
        return Err(Error::InvalidConfig(format!(
            "{} parameters for an expansion over {} patterns",
            params.len(),
            expansion.num_params()
        )));
    }
    Ok(())
}

/// Why a descent run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Smoothed loss improvement fell below the tolerance.
    Converged,
    /// The gradient vanished (already at a stationary point).
    Stationary,
    /// The iteration budget ran out.
    BudgetExhausted,
}

/// Outcome of a gradient-descent run: final parameters, the per-iteration
/// loss trajectory (estimated loss in the Monte Carlo variant), and why the
/// run stopped.
#[derive(Clone, Debug)]
pub struct DescentReport {
    pub params: ProductFormParams,
    pub trajectory: Vec<f64>,
    pub stop: StopReason,
}

const EARLY_STOP_WINDOW: usize = 10;
const EARLY_STOP_SPAN: usize = 20;
const EARLY_STOP_TOL: f64 = 1e-6;
const DIVERGENCE_FACTOR: f64 = 10.0;
const STATIONARY_GRADIENT: f64 = 1e-12;

/// Shared update loop: `step(q, iteration) -> (loss_at_q, gradient)`.
/// The smoothed-improvement early stop only makes sense when the reported
/// losses are deterministic; stochastic estimates fluctuate far above the
/// tolerance, so the Monte Carlo caller disables it and runs the budget.
fn descend_loop<F>(
    mut params: ProductFormParams,
    iterations: usize,
    early_stop: bool,
    mut step: F,
) -> Result<DescentReport>
where
    F: FnMut(&[f64], usize) -> Result<(f64, Vec<f64>)>,
{
    if iterations == 0 {
        return Err(Error::InvalidConfig("descent needs >= 1 iterations".into()));
    }
    if !(params.gamma_prime > 0.0) {
        return Err(Error::InvalidConfig("gamma_prime must be positive".into()));
    }
    let mut trajectory = Vec::with_capacity(iterations);
    let mut stop = StopReason::BudgetExhausted;
    for t in 0..iterations {
        let (loss, grad) = step(&params.q, t)?;
        trajectory.push(loss);
        if !loss.is_finite() || loss > DIVERGENCE_FACTOR * trajectory[0].max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "descent diverged: loss {loss:.3e} at iteration {t} vs initial {:.3e}",
                trajectory[0]
            )));
        }
        let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax < STATIONARY_GRADIENT {
            stop = StopReason::Stationary;
            break;
        }
        if early_stop && t + 1 >= EARLY_STOP_SPAN {
            let recent = mean(&trajectory[trajectory.len() - EARLY_STOP_WINDOW..]);
            let older = mean(
                &trajectory
                    [trajectory.len() - EARLY_STOP_SPAN..trajectory.len() - EARLY_STOP_WINDOW],
            );
            if older - recent < EARLY_STOP_TOL {
                stop = StopReason::Converged;
                break;
            }
        }
        let qmax = params.q.iter().fold(0.0_f64, |m, q| m.max((q - 1.0).abs()));
        let gamma = qmax / gmax * params.gamma_prime;
        for (qi, gi) in params.q.iter_mut().zip(grad.iter()) {
            *qi -= gamma * gi;
        }
    }
    Ok(DescentReport { params, trajectory, stop })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Gradient descent on the exact product-form loss.
pub fn product_form_descend(
    params: ProductFormParams,
    expansion: &SignExpansion,
    iterations: usize,
) -> Result<DescentReport> {
    check_width(&params, expansion)?;
    descend_loop(params, iterations, true, |q, _| {
        let p = ProductFormParams { q: q.to_vec(), gamma_prime: 1.0 };
        Ok((product_form_loss(&p, expansion)?, product_form_gradient(&p, expansion)?))
    })
}

/// Stochastic gradient descent: each iteration draws `n_circuits` training
/// circuits (with replacement) and, per circuit, `m_samples` configurations
/// `b ~ W(q, .)` with one hardware shot each; the signed ratio `V/W` weighs
/// the shot into the mitigated-expectation estimate, and `dV/dq_i / W`
/// weighs it into the gradient estimate.  Requires Pauli gate noise (the
/// sign-profile shot route).  Unlike the exact variant, this one runs its
/// full iteration budget: the smoothed-improvement stop cannot distinguish
/// progress from sampling noise on the estimated losses.
#[allow(clippy::too_many_arguments)]
pub fn product_form_descend_mc(
    params: ProductFormParams,
    circuit: &LayeredCircuit,
    training: &TrainingSet,
    sige: &SigESet,
    noise: &NoiseModel,
    n_circuits: usize,
    m_samples: usize,
    iterations: usize,
    seed: u64,
) -> Result<DescentReport> {
    if params.len() + 1 != sige.patterns.len() {
        return Err(Error::InvalidConfig(format!(
            "{} parameters for a pattern set of size {}",
            params.len(),
            sige.patterns.len()
        )));
    }
    if n_circuits == 0 || m_samples == 0 {
        return Err(Error::InvalidConfig("descent needs n_circuits, m_samples >= 1".into()));
    }
    let oracle = ShotOracle::new(circuit, training, noise)?;
    let signs: Vec<Vec<f64>> = (0..training.entries.len())
        .map(|r| oracle.pattern_signs(r, sige).map(|s| s[1..].to_vec()))
        .collect::<Result<_>>()?;
    let m = params.len();

    descend_loop(params, iterations, false, |q, t| {
        let mut rng = rng_for(seed, streams::PRODUCT, t as u64);
        let mut loss = 0.0;
        let mut grad = vec![0.0; m];
        let mut b = vec![false; m];
        let mut em_grad = vec![0.0; m];
        let mut prefix = vec![1.0; m + 1];
        let mut suffix = vec![1.0; m + 1];
        for _ in 0..n_circuits {
            let r = rng.gen_range(0..training.entries.len());
            let mut em = 0.0;
            em_grad.iter_mut().for_each(|g| *g = 0.0);
            for _ in 0..m_samples {
                for (bi, &qi) in b.iter_mut().zip(q.iter()) {
                    let p_one = qi.abs() / (qi.abs() + (1.0 - qi).abs());
                    *bi = rng.gen::<f64>() < p_one;
                }
                let w = product_form_weight(q, &b);
                let f = oracle.draw(r, &oracle.prepare_composite(r, &signs[r], &b)?, &mut rng)?;
                // V and its per-parameter derivatives share the factor list
                // v_i = b_i q_i + (1 - b_i)(1 - q_i).
                for i in 0..m {
                    let v = if b[i] { q[i] } else { 1.0 - q[i] };
                    prefix[i + 1] = prefix[i] * v;
                }
                for i in (0..m).rev() {
                    let v = if b[i] { q[i] } else { 1.0 - q[i] };
                    suffix[i] = suffix[i + 1] * v;
                }
                em += prefix[m] / w * f;
                for i in 0..m {
                    let sign = if b[i] { 1.0 } else { -1.0 };
                    em_grad[i] += sign * prefix[i] * suffix[i + 1] / w * f;
                }
            }
            em /= m_samples as f64;
            let d = em - training.entries[r].com_ef;
            loss += d * d;
            for i in 0..m {
                grad[i] += 2.0 * d * em_grad[i] / m_samples as f64;
            }
        }
        let scale = 1.0 / n_circuits as f64;
        loss *= scale;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((loss, grad))
    })
}

/// Exact product-form mitigated expectation of a single Clifford circuit
/// under Pauli gate noise: `com_em = sum_T C_T prod_i [(1-q_i) + q_i s_{T,i}]`
/// with one term per readout-flip subset and one sign per pattern.
pub fn product_form_mitigated_exact(
    q: &[f64],
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    sige: &SigESet,
    noise: &NoiseModel,
) -> Result<f64> {
    if q.len() + 1 != sige.patterns.len() {
        return Err(Error::InvalidConfig(format!(
            "{} parameters for a pattern set of size {}",
            q.len(),
            sige.patterns.len()
        )));
    }
    let eval = CliffordNoiseEval::new(circuit, noise)?;
    let terms = eval.expansion(assignment)?;
    Ok(terms
        .iter()
        .map(|t| match &t.profile {
            None => t.coef,
            Some(profile) => {
                t.coef
                    * sige
                        .patterns
                        .iter()
                        .skip(1)
                        .zip(q.iter())
                        .map(|(p, &qi)| {
                            let s = super::pattern_sign(profile, &eval.spans, p);
                            (1.0 - qi) + qi * s
                        })
                        .product::<f64>()
            }
        })
        .sum())
}

/// Sampled product-form mitigation of a single Clifford circuit: each shot
/// draws a configuration `b ~ W(q, .)`, takes one hardware shot of the
/// composite-decorated circuit, and weighs it by the signed ratio `V/W`.
/// Returns `(estimate, stderr)` with the jackknife standard error.  Requires
/// Pauli gate noise (the sign-profile shot route); shot `k` consumes the
/// derived stream `(seed, MITIGATION, k)`, so results are independent of the
/// thread count.
pub fn product_form_mitigated_sampled(
    q: &[f64],
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
    sige: &SigESet,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if q.len() + 1 != sige.patterns.len() {
        return Err(Error::InvalidConfig(format!(
            "{} parameters for a pattern set of size {}",
            q.len(),
            sige.patterns.len()
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidConfig("product-form sampling needs shots >= 1".into()));
    }
    noise.validate()?;
    let flips = effective_flips(noise);
    let weight = circuit.observable().z_qubits().len();
    if !noise.is_pauli_gate_noise() || (weight > 1 && flips.0 != flips.1) {
        return Err(Error::InvalidConfig(
            "product-form sampling needs the Pauli-noise shot route".into(),
        ));
    }
    let branches = super::noise_branches(circuit, noise)?;
    let profile = SignProfile::build(circuit, assignment)?;
    let spans = super::gate_spans(circuit);
    let signs: Vec<f64> = sige
        .patterns
        .iter()
        .skip(1)
        .map(|p| super::pattern_sign(&profile, &spans, p))
        .collect();
    let m = q.len();
    let samples: Vec<f64> = (0..shots)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, streams::MITIGATION, k as u64);
            let mut b = vec![false; m];
            for (bi, &qi) in b.iter_mut().zip(q.iter()) {
                let p_one = qi.abs() / (qi.abs() + (1.0 - qi).abs());
                *bi = rng.gen::<f64>() < p_one;
            }
            let v = product_form_value(q, &b);
            let w = product_form_weight(q, &b);
            let sign: f64 =
                signs.iter().zip(b.iter()).filter(|(_, &on)| on).map(|(s, _)| s).product();
            let f = super::profile_shot(&profile, &branches, flips, weight, sign, &mut rng);
            v / w * f
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / shots as f64;
    let stderr = if shots < 2 {
        f64::INFINITY
    } else {
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        (ss / (shots as f64 * (shots - 1) as f64)).sqrt()
    };
    Ok((mean, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_layout, LayoutKind};
    use crate::dense::{LocalChannel, LocalKind};
    use crate::sige::{generate_sige, uniform_local_inverses};
    use crate::stabilizer::sample_training_set;
    use approx::assert_abs_diff_eq;

    fn configurations(m: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1usize << m).map(move |mask| (0..m).map(|i| mask >> i & 1 == 1).collect())
    }

    #[test]
    fn values_sum_to_one_for_any_parameters() {
        let mut rng = rng_for(50, streams::PRODUCT, 0);
        for m in [1usize, 5, 12] {
            let q: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let total: f64 = configurations(m).map(|b| product_form_value(&q, &b)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            let wsum: f64 = configurations(m).map(|b| product_form_weight(&q, &b)).sum();
            assert_abs_diff_eq!(wsum, 1.0, epsilon = 1e-10);
            assert!(configurations(m).all(|b| product_form_weight(&q, &b) >= 0.0));
        }
    }

    #[test]
    fn zero_parameters_put_all_mass_on_the_empty_configuration() {
        let q = vec![0.0; 4];
        for b in configurations(4) {
            let expect = if b.iter().any(|&x| x) { 0.0 } else { 1.0 };
            assert_eq!(product_form_value(&q, &b), expect);
        }
    }

    #[test]
    fn value_equals_weight_in_the_positive_regime() {
        let mut rng = rng_for(51, streams::PRODUCT, 0);
        let q: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
        for b in configurations(6) {
            assert_abs_diff_eq!(
                product_form_value(&q, &b),
                product_form_weight(&q, &b),
                epsilon = 1e-12
            );
        }
    }

    fn crosstalk_setup(
        n: usize,
        layers: usize,
        eps: f64,
        set_size: usize,
        seed: u64,
    ) -> (LayeredCircuit, TrainingSet, SigESet, NoiseModel, SignExpansion) {
        let circuit = build_layout(LayoutKind::CnotLadder, n, layers).unwrap();
        let training = sample_training_set(&circuit, set_size, seed, None).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, eps, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let noise = NoiseModel {
            local: Some(LocalChannel::new(LocalKind::Dephasing, eps)),
            ..NoiseModel::noiseless()
        }
        .with_crosstalk(true);
        let expansion = SignExpansion::build(&circuit, &training, &sige, &noise).unwrap();
        (circuit, training, sige, noise, expansion)
    }

    #[test]
    fn product_form_loss_matches_the_composite_pattern_sum() {
        // Oracle: com_em(R) = sum_b V(q, b) com(R, sigma^b) where `com` with
        // a composite pattern is evaluated through the exact com table
        // machinery on the composed decoration map.
        let (circuit, training, sige, noise, expansion) = crosstalk_setup(2, 1, 0.06, 6, 61);
        let eval = CliffordNoiseEval::new(&circuit, &noise).unwrap();
        let m = sige.patterns.len() - 1;
        let mut rng = rng_for(62, streams::PRODUCT, 0);
        let q: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.3..0.8)).collect();
        let params = ProductFormParams { q: q.clone(), gamma_prime: 1.0 };
        let mut oracle_loss = 0.0;
        for entry in &training.entries {
            let assignment = entry.assignment(&circuit).unwrap();
            let terms = eval.expansion(&assignment).unwrap();
            let mut em = 0.0;
            for b in configurations(m) {
                let mut composite = crate::sige::SigPattern::trivial();
                for (i, &on) in b.iter().enumerate() {
                    if !on {
                        continue;
                    }
                    for (&g, &code) in &sige.patterns[i + 1].decorations {
                        let merged = merge_codes(composite.decorations.get(&g).copied(), code);
                        match merged {
                            Some(c) => {
                                composite.decorations.insert(g, c);
                            }
                            None => {
                                composite.decorations.remove(&g);
                            }
                        }
                    }
                }
                em += product_form_value(&q, &b) * eval.com(&terms, &composite);
            }
            let d = em - entry.com_ef;
            oracle_loss += d * d;
        }
        oracle_loss /= training.entries.len() as f64;
        let loss = product_form_loss(&params, &expansion).unwrap();
        assert_abs_diff_eq!(loss, oracle_loss, epsilon = 1e-10);
    }

    /// Phase-free product of packed two-qubit codes; `None` when they cancel.
    fn merge_codes(existing: Option<usize>, code: usize) -> Option<usize> {
        let a = existing.unwrap_or(0);
        let combined = {
            use crate::pauli::Pauli;
            let (a1, a0) = (a / 4, a % 4);
            let (c1, c0) = (code / 4, code % 4);
            let hi = Pauli::from_code(a1 as u8).unwrap().mul(Pauli::from_code(c1 as u8).unwrap());
            let lo = Pauli::from_code(a0 as u8).unwrap().mul(Pauli::from_code(c0 as u8).unwrap());
            hi.code() as usize * 4 + lo.code() as usize
        };
        (combined != 0).then_some(combined)
    }

    #[test]
    fn analytic_gradient_matches_central_finite_differences() {
        let (_, _, sige, _, expansion) = crosstalk_setup(3, 2, 0.05, 10, 63);
        let m = sige.patterns.len() - 1;
        assert!(m <= 16);
        let mut rng = rng_for(64, streams::PRODUCT, 0);
        let q: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.2..0.7)).collect();
        let params = ProductFormParams { q: q.clone(), gamma_prime: 1.0 };
        let grad = product_form_gradient(&params, &expansion).unwrap();
        let h = 1e-5;
        for i in 0..m {
            let mut plus = params.clone();
            plus.q[i] += h;
            let mut minus = params.clone();
            minus.q[i] -= h;
            let fd = (product_form_loss(&plus, &expansion).unwrap()
                - product_form_loss(&minus, &expansion).unwrap())
                / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(1.0);
            assert!(rel < 1e-6, "component {i}: analytic {} vs fd {fd}", grad[i]);
        }
    }

    #[test]
    fn noiseless_devices_leave_the_parameters_stationary() {
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let training = sample_training_set(&circuit, 6, 65, None).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, 0.05, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let expansion =
            SignExpansion::build(&circuit, &training, &sige, &NoiseModel::noiseless()).unwrap();
        let params = ProductFormParams::zeros(sige.patterns.len() - 1, 1e-2);
        let grad = product_form_gradient(&params, &expansion).unwrap();
        assert!(grad.iter().all(|g| g.abs() < 1e-14));
        let report = product_form_descend(params.clone(), &expansion, 50).unwrap();
        assert_eq!(report.stop, StopReason::Stationary);
        assert_eq!(report.params.q, params.q);
    }

    #[test]
    fn descent_reduces_the_loss_by_an_order_of_magnitude() {
        // Purely local dephasing is exactly representable by the product
        // form, so the descent has a near-zero optimum to find.
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let training = sample_training_set(&circuit, 12, 66, None).unwrap();
        let eps = 0.08;
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, eps, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let noise = NoiseModel {
            local: Some(LocalChannel::new(LocalKind::Dephasing, eps)),
            ..NoiseModel::noiseless()
        };
        let expansion = SignExpansion::build(&circuit, &training, &sige, &noise).unwrap();
        // The update takes normalized steps of size ~gamma_prime, so the
        // iterate settles within about that distance of the optimum; the rate
        // must be small against the optimal |q| ~ 0.03 here.
        let params = ProductFormParams::zeros(sige.patterns.len() - 1, 0.005);
        let initial = product_form_loss(&params, &expansion).unwrap();
        let report = product_form_descend(params, &expansion, 500).unwrap();
        let final_loss = *report.trajectory.last().unwrap();
        assert!(
            final_loss < initial / 10.0,
            "initial {initial:.3e}, final {final_loss:.3e}, stop {:?}",
            report.stop
        );
    }

    #[test]
    fn oversized_learning_rates_trip_the_divergence_detector() {
        let (_, _, sige, _, expansion) = crosstalk_setup(2, 1, 0.08, 8, 67);
        let params = ProductFormParams {
            q: vec![0.4; sige.patterns.len() - 1],
            gamma_prime: 400.0,
        };
        let err = product_form_descend(params, &expansion, 200).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "got {err:?}");
    }

    #[test]
    fn stochastic_descent_tracks_the_exact_one_and_is_reproducible() {
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let training = sample_training_set(&circuit, 8, 68, None).unwrap();
        let eps = 0.08;
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, eps, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let noise = NoiseModel {
            local: Some(LocalChannel::new(LocalKind::Dephasing, eps)),
            ..NoiseModel::noiseless()
        };
        let expansion = SignExpansion::build(&circuit, &training, &sige, &noise).unwrap();
        let params = ProductFormParams::zeros(sige.patterns.len() - 1, 0.003);
        let report = product_form_descend_mc(
            params.clone(),
            &circuit,
            &training,
            &sige,
            &noise,
            8,
            256,
            200,
            99,
        )
        .unwrap();
        // The stochastic variant never early-stops on its noisy estimates.
        assert_eq!(report.stop, StopReason::BudgetExhausted);
        assert_eq!(report.trajectory.len(), 200);
        // Judge progress with the exact loss at the final parameters.
        let initial = product_form_loss(&params, &expansion).unwrap();
        let final_exact = product_form_loss(&report.params, &expansion).unwrap();
        assert!(
            final_exact < initial / 2.0,
            "initial {initial:.3e}, final exact {final_exact:.3e}"
        );
        let again = product_form_descend_mc(
            params, &circuit, &training, &sige, &noise, 8, 256, 200, 99,
        )
        .unwrap();
        assert_eq!(report.params.q, again.params.q);
        assert_eq!(report.trajectory, again.trajectory);
    }

    #[test]
    fn single_circuit_mitigation_matches_the_composite_pattern_sum() {
        // Independent oracle: com_em = sum_b V(q, b) com(R, sigma^b), with
        // the composite pattern applied by folding each picked pattern into
        // the assignment and evaluating through the stabilizer back end.
        use crate::circuit::apply_error_pattern;
        use crate::dense::clifford_exact_expectation;

        let (circuit, training, sige, noise, _) = crosstalk_setup(2, 1, 0.06, 4, 71);
        let m = sige.patterns.len() - 1;
        let mut rng = rng_for(72, streams::PRODUCT, 0);
        let q: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.3..0.8)).collect();
        for entry in &training.entries {
            let assignment = entry.assignment(&circuit).unwrap();
            let mut oracle = 0.0;
            for b in configurations(m) {
                let mut decorated = assignment.clone();
                for (i, &on) in b.iter().enumerate() {
                    if on {
                        let pattern = sige.patterns[i + 1].to_error_pattern(&circuit).unwrap();
                        decorated = apply_error_pattern(&circuit, &decorated, &pattern).unwrap();
                    }
                }
                let com = clifford_exact_expectation(&circuit, &decorated, &noise).unwrap();
                oracle += product_form_value(&q, &b) * com;
            }
            let got =
                product_form_mitigated_exact(&q, &circuit, &assignment, &sige, &noise).unwrap();
            assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_parameters_invert_a_single_dephasing_gate() {
        // One noisy gate: the dephasing inverse lies exactly in the product
        // family.  Each non-Z Pauli anticommutes with exactly two of the
        // three Z-pair patterns, so the composite factor is (1 - 2t)^2 and
        // matching the inverse channel needs t (1 - t) = eta2.
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let eps = 0.08;
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, eps, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let noise = NoiseModel::local_only(LocalKind::Dephasing, eps);
        let eta2 = -eps / (3.0 - 4.0 * eps);
        let t = (1.0 - (1.0 - 4.0 * eta2).sqrt()) / 2.0;
        let q = vec![t; sige.patterns.len() - 1];

        let training = sample_training_set(&circuit, 6, 73, None).unwrap();
        for entry in &training.entries {
            let assignment = entry.assignment(&circuit).unwrap();
            let ideal = crate::dense::clifford_exact_expectation(
                &circuit,
                &assignment,
                &NoiseModel::noiseless(),
            )
            .unwrap();
            let exact =
                product_form_mitigated_exact(&q, &circuit, &assignment, &sige, &noise).unwrap();
            assert_abs_diff_eq!(exact, ideal, epsilon = 1e-10);
        }

        // The sampled estimator agrees within its own error bars and is
        // reproducible under a fixed seed.
        let assignment = training.entries[0].assignment(&circuit).unwrap();
        let ideal = crate::dense::clifford_exact_expectation(
            &circuit,
            &assignment,
            &NoiseModel::noiseless(),
        )
        .unwrap();
        let (est, se) = product_form_mitigated_sampled(
            &q, &circuit, &assignment, &sige, &noise, 40_000, 74,
        )
        .unwrap();
        assert!(se > 0.0 && se < 0.05, "stderr {se}");
        assert!((est - ideal).abs() < 5.0 * se, "est {est} vs ideal {ideal}, se {se}");
        let (est2, se2) = product_form_mitigated_sampled(
            &q, &circuit, &assignment, &sige, &noise, 40_000, 74,
        )
        .unwrap();
        assert_eq!((est, se), (est2, se2));
    }

    #[test]
    fn single_circuit_mitigation_rejects_bad_inputs() {
        let circuit = build_layout(LayoutKind::CnotLadder, 2, 1).unwrap();
        let locals = uniform_local_inverses(&circuit, LocalKind::Dephasing, 0.05, 0.0).unwrap();
        let sige = generate_sige(&circuit, &locals, 1).unwrap();
        let noise = NoiseModel::local_only(LocalKind::Dephasing, 0.05);
        let assignment = crate::circuit::GateAssignment::identity(&circuit);
        let short = vec![0.0; sige.patterns.len() - 2];
        assert!(
            product_form_mitigated_exact(&short, &circuit, &assignment, &sige, &noise).is_err()
        );
        let q = vec![0.0; sige.patterns.len() - 1];
        assert!(product_form_mitigated_sampled(
            &q, &circuit, &assignment, &sige, &noise, 0, 1
        )
        .is_err());
        let damped = noise.clone().with_damping(0.01);
        assert!(product_form_mitigated_sampled(
            &q, &circuit, &assignment, &sige, &noise.clone().with_meas_flip(0.1, 0.0), 10, 1
        )
        .is_ok());
        assert!(product_form_mitigated_sampled(
            &q, &circuit, &assignment, &sige, &damped, 10, 1
        )
        .is_err());
    }
}
