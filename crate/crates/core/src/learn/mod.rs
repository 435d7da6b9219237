//! Learning strategies for quasi-probability mitigation: least squares over
//! the significant-error set, Monte Carlo design-data estimation, constrained
//! single-parameter fits, product-form gradient descent, and the
//! fidelity-based loss variant.
//!
//! Everything here works on a `com` table: the expectation `com(R, sigma)` of
//! each training circuit `R` with each significant error pattern `sigma`
//! deliberately inserted, measured on the noisy device.  The mitigated
//! expectation is the quasi-probability combination
//! `com_em(R) = sum_sigma q(sigma) com(R, sigma)`, and the loss is the mean
//! squared defect against the error-free values:
//!
//! ```text
//! Loss(q) = (1/|T|) sum_R |com_ef(R) - sum_sigma q(sigma) com(R, sigma)|^2
//! ```
//!
//! which is quadratic in `q`: `Loss = q' a q - 2 b' q + c` with design data
//! `a, b, c` averaged over the training set.

mod product;

pub use product::{
    product_form_descend, product_form_descend_mc, product_form_gradient, product_form_loss,
    product_form_mitigated_exact, product_form_mitigated_sampled, product_form_value,
    product_form_weight, DescentReport, ProductFormParams, SignExpansion, StopReason,
};

mod fidelity;

pub use fidelity::{fidelity_loss, pseudo_fidelity, GroupSampling, DEFAULT_GROUP_SAMPLES};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_error_pattern, GateAssignment, LayeredCircuit, Observable};
use crate::dense::{effective_flips, LocalKind, NoiseModel};
use crate::rng::{rng_for, streams};
use crate::sige::{
    tomography_quasiprob, uniform_local_inverses, QuasiDistribution, SigESet, SigPattern,
};
use crate::stabilizer::{NoisePoint, PauliChannelAt, SignProfile, TrainingSet};
use crate::{Error, Result};

/// Insertion point and qubit pair of each frame gate, in execution order;
/// pattern decorations attach here.
pub(crate) struct GateSpan {
    pub point: NoisePoint,
    pub support: [usize; 2],
}

pub(crate) fn gate_spans(circuit: &LayeredCircuit) -> Vec<GateSpan> {
    circuit
        .gates_in_order()
        .enumerate()
        .map(|(g, (_, _, gate))| GateSpan {
            point: NoisePoint::AfterFrameGate(g),
            support: [gate.control, gate.target],
        })
        .collect()
}

/// Sign contributed by inserting a pattern's Pauli pairs, given the
/// back-propagated observable profile: the insertions commute or anticommute
/// independently, so the total is a product of per-gate signs.
pub(crate) fn pattern_sign(
    profile: &SignProfile,
    spans: &[GateSpan],
    pattern: &SigPattern,
) -> f64 {
    pattern
        .decorations
        .iter()
        .map(|(&g, &code)| profile.insertion_sign(spans[g].point, &spans[g].support, code))
        .product()
}

/// The device noise expanded into exactly evaluable branches: one entry per
/// temporal bad-qubit draw (or a single unit-probability entry without a
/// temporal model), each holding its Pauli channel attachments.
pub(crate) fn noise_branches(
    circuit: &LayeredCircuit,
    noise: &NoiseModel,
) -> Result<Vec<(f64, Vec<PauliChannelAt>)>> {
    match &noise.temporal {
        Some(t) => {
            if t.prob.len() != circuit.n() {
                return Err(Error::InvalidNoise(format!(
                    "temporal prob vector has {} entries for {} qubits",
                    t.prob.len(),
                    circuit.n()
                )));
            }
            t.prob
                .iter()
                .enumerate()
                .map(|(i, &p)| Ok((p, noise.pauli_attachments_for_branch(circuit, Some(i))?)))
                .collect()
        }
        None => Ok(vec![(1.0, noise.pauli_attachments(circuit)?)]),
    }
}

/// Classical readout flips turn the measured value into
/// `E[prod_q (a z_q + b)]` with `a = 1 - p0 - p1`, `b = p1 - p0`; expanding
/// the product gives one term per observable subset.  Each kept term carries
/// its weight and the circuit remeasured on that subset (`None` marks the
/// constant empty-subset term).
fn flip_subsets(circuit: &LayeredCircuit, noise: &NoiseModel) -> Vec<(f64, Option<LayeredCircuit>)> {
    let (p0, p1) = effective_flips(noise);
    let a = 1.0 - p0 - p1;
    let b = p1 - p0;
    let qubits = circuit.observable().z_qubits().to_vec();
    let m = qubits.len();
    let mut out = Vec::new();
    for mask in 0..(1usize << m) {
        let picked: Vec<usize> =
            (0..m).filter(|i| mask >> i & 1 == 1).map(|i| qubits[i]).collect();
        let w = a.powi(picked.len() as i32) * b.powi((m - picked.len()) as i32);
        if w == 0.0 {
            continue;
        }
        if picked.is_empty() {
            out.push((w, None));
        } else {
            let sub = circuit
                .with_observable(Observable::z_product(&picked))
                .expect("subset observables stay on measured qubits");
            out.push((w, Some(sub)));
        }
    }
    out
}

/// Exact evaluator for Clifford circuits under Pauli gate noise plus
/// classical readout flips: per assignment it produces a short expansion of
/// `(coefficient, profile)` terms such that
/// `com(R, sigma) = sum_T coef_T * sign_T(sigma)`.
pub(crate) struct CliffordNoiseEval {
    branches: Vec<(f64, Vec<PauliChannelAt>)>,
    subsets: Vec<(f64, Option<LayeredCircuit>)>,
    pub spans: Vec<GateSpan>,
}

/// One expansion term: the noise- and flip-weighted coefficient, and the sign
/// profile the pattern insertions are judged against (`None` for the constant
/// term).
pub(crate) struct ExpansionTerm {
    pub coef: f64,
    pub profile: Option<SignProfile>,
}

impl CliffordNoiseEval {
    pub fn new(circuit: &LayeredCircuit, noise: &NoiseModel) -> Result<Self> {
        noise.validate()?;
        if !noise.is_pauli_gate_noise() {
            return Err(Error::InvalidNoise(
                "amplitude damping is not a Pauli channel; use the dense back end".into(),
            ));
        }
        Ok(CliffordNoiseEval {
            branches: noise_branches(circuit, noise)?,
            subsets: flip_subsets(circuit, noise),
            spans: gate_spans(circuit),
        })
    }

    /// Expansion of one assignment's noisy, flip-adjusted expectation.
    pub fn expansion(&self, assignment: &GateAssignment) -> Result<Vec<ExpansionTerm>> {
        let mut terms = Vec::with_capacity(self.subsets.len());
        for (w, sub) in &self.subsets {
            match sub {
                None => terms.push(ExpansionTerm { coef: *w, profile: None }),
                Some(sub) => {
                    let profile = SignProfile::build(sub, assignment)?;
                    let noisy: f64 = self
                        .branches
                        .iter()
                        .map(|(p, attach)| p * profile.noisy_expectation(attach))
                        .sum();
                    terms.push(ExpansionTerm { coef: w * noisy, profile: Some(profile) });
                }
            }
        }
        Ok(terms)
    }

    /// `com(R, sigma)` from a precomputed expansion.
    pub fn com(&self, terms: &[ExpansionTerm], pattern: &SigPattern) -> f64 {
        terms
            .iter()
            .map(|t| match &t.profile {
                None => t.coef,
                Some(p) => t.coef * pattern_sign(p, &self.spans, pattern),
            })
            .sum()
    }
}

/// The `com(R, sigma)` table over a training set and a significant-error
/// set: `values[r][s]` pairs training circuit `r` with pattern `s`, and
/// `com_ef[r]` holds the error-free target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComTable {
    pub values: Vec<Vec<f64>>,
    pub com_ef: Vec<f64>,
}

impl ComTable {
    /// Number of training circuits.
    pub fn len(&self) -> usize {
        self.com_ef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.com_ef.is_empty()
    }

    /// Number of patterns per row.
    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Exact table.  Pauli gate noise (with flips, crosstalk, and temporal
    /// branches) is evaluated through sign profiles — one profile per
    /// observable subset per circuit, then one sign product per pattern.
    /// Amplitude damping falls back to density-matrix evolution per entry.
    pub fn exact(
        circuit: &LayeredCircuit,
        training: &TrainingSet,
        sige: &SigESet,
        noise: &NoiseModel,
    ) -> Result<Self> {
        let com_ef: Vec<f64> = training.entries.iter().map(|e| e.com_ef).collect();
        let values: Vec<Vec<f64>> = if noise.is_pauli_gate_noise() {
            let eval = CliffordNoiseEval::new(circuit, noise)?;
            training
                .entries
                .par_iter()
                .map(|entry| {
                    let assignment = entry.assignment(circuit)?;
                    let terms = eval.expansion(&assignment)?;
                    Ok(sige.patterns.iter().map(|p| eval.com(&terms, p)).collect())
                })
                .collect::<Result<_>>()?
        } else {
            training
                .entries
                .par_iter()
                .map(|entry| {
                    let assignment = entry.assignment(circuit)?;
                    sige.patterns
                        .iter()
                        .map(|p| {
                            let decorated = apply_error_pattern(
                                circuit,
                                &assignment,
                                &p.to_error_pattern(circuit)?,
                            )?;
                            crate::dense::exact_expectation(circuit, &decorated, noise)
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?
        };
        Ok(ComTable { values, com_ef })
    }

    /// Shot-estimated table: every entry is the mean of `shots` single-shot
    /// draws.  Entry `(r, s)` consumes its own deterministic RNG stream, so
    /// the table is reproducible and independent of thread count.
    pub fn sampled(
        circuit: &LayeredCircuit,
        training: &TrainingSet,
        sige: &SigESet,
        noise: &NoiseModel,
        shots: usize,
        seed: u64,
    ) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidConfig("sampled table needs shots >= 1".into()));
        }
        let oracle = ShotOracle::new(circuit, training, noise)?;
        let width = sige.patterns.len();
        let values: Vec<Vec<f64>> = (0..training.entries.len())
            .into_par_iter()
            .map(|r| {
                let mut row = Vec::with_capacity(width);
                for (s, pattern) in sige.patterns.iter().enumerate() {
                    let prepared = oracle.prepare(r, pattern)?;
                    let mut rng = rng_for(seed, streams::SHOTS, (r * width + s) as u64);
                    let mut sum = 0.0;
                    for _ in 0..shots {
                        sum += oracle.draw(r, &prepared, &mut rng)?;
                    }
                    row.push(sum / shots as f64);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let com_ef = training.entries.iter().map(|e| e.com_ef).collect();
        Ok(ComTable { values, com_ef })
    }
}

/// Mean squared mitigation defect of a quasi-probability distribution over
/// the table's training circuits.
pub fn evaluate_loss(weights: &QuasiDistribution, table: &ComTable) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::InvalidConfig("loss needs a nonempty training set".into()));
    }
    if weights.weights.len() != table.width() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for a table of width {}",
            weights.weights.len(),
            table.width()
        )));
    }
    let mut acc = 0.0;
    for (row, &target) in table.values.iter().zip(table.com_ef.iter()) {
        let em: f64 = row.iter().zip(weights.weights.iter()).map(|(v, q)| v * q).sum();
        if !em.is_finite() {
            return Err(Error::Numerical("com table contains non-finite entries".into()));
        }
        acc += (target - em) * (target - em);
    }
    Ok(acc / table.len() as f64)
}

/// Where a design-data estimate came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignProvenance {
    Exact,
    MonteCarlo { samples: usize },
}

/// The quadratic-loss coefficients averaged over the training set:
/// `Loss(q) = q' a q - 2 b' q + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignData {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
    pub provenance: DesignProvenance,
}

impl DesignData {
    /// Exact design data from a com table:
    /// `a[s][s'] = mean_r com[r][s] com[r][s']`,
    /// `b[s] = mean_r com[r][s] com_ef[r]`, `c = mean_r com_ef[r]^2`.
    pub fn from_table(table: &ComTable) -> Result<Self> {
        if table.is_empty() || table.width() == 0 {
            return Err(Error::InvalidConfig("design data needs a nonempty table".into()));
        }
        let (rows, width) = (table.len(), table.width());
        let mut a = DMatrix::zeros(width, width);
        let mut b = DVector::zeros(width);
        let mut c = 0.0;
        for (row, &target) in table.values.iter().zip(table.com_ef.iter()) {
            for s1 in 0..width {
                for s2 in s1..width {
                    a[(s1, s2)] += row[s1] * row[s2];
                }
                b[s1] += row[s1] * target;
            }
            c += target * target;
        }
        let scale = 1.0 / rows as f64;
        for s1 in 0..width {
            for s2 in s1..width {
                a[(s1, s2)] *= scale;
                a[(s2, s1)] = a[(s1, s2)];
            }
        }
        b *= scale;
        c *= scale;
        Ok(DesignData { a, b, c, provenance: DesignProvenance::Exact })
    }

    /// `Loss(q)` through the quadratic form.
    pub fn loss_of(&self, weights: &QuasiDistribution) -> Result<f64> {
        let q = DVector::from_column_slice(&weights.weights);
        if q.len() != self.b.len() {
            return Err(Error::InvalidConfig(format!(
                "{} weights for design data of width {}",
                q.len(),
                self.b.len()
            )));
        }
        Ok((q.transpose() * &self.a * &q)[(0, 0)] - 2.0 * self.b.dot(&q) + self.c)
    }
}

/// Result of the least-squares fit.
#[derive(Clone, Debug)]
pub struct LeastSquaresFit {
    pub weights: QuasiDistribution,
    pub loss_min: f64,
    /// True when the design matrix was rank deficient at the pseudo-inverse
    /// tolerance, so the reported optimum is the minimum-norm one (it also
    /// minimizes the overhead `C` among the optima).
    pub rank_deficient: bool,
}

/// Minimizes the quadratic loss: `q_opt = a^+ b` via SVD with relative
/// singular-value tolerance `1e-10`, `Loss_min = c - b' q_opt`.
pub fn fit_least_squares(design: &DesignData) -> Result<LeastSquaresFit> {
    let width = design.b.len();
    if design.a.nrows() != width || design.a.ncols() != width {
        return Err(Error::InvalidConfig(format!(
            "design matrix is {}x{} but the vector has {width} entries",
            design.a.nrows(),
            design.a.ncols()
        )));
    }
    if design.a.iter().any(|v| !v.is_finite()) || design.b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("design data contains non-finite entries".into()));
    }
    let svd = design.a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if max_sv == 0.0 {
        return Ok(LeastSquaresFit {
            weights: QuasiDistribution { weights: vec![0.0; width] },
            loss_min: design.c,
            rank_deficient: true,
        });
    }
    let tol = 1e-10 * max_sv;
    let rank_deficient = svd.singular_values.iter().any(|&s| s <= tol);
    let q = svd
        .solve(&design.b, tol)
        .map_err(|e| Error::Numerical(format!("pseudo-inverse solve failed: {e}")))?;
    let loss_min = design.c - design.b.dot(&q);
    Ok(LeastSquaresFit {
        weights: QuasiDistribution { weights: q.iter().cloned().collect() },
        loss_min,
        rank_deficient,
    })
}

/// Unbiased Monte Carlo design data from paired single-shot draws, per the
/// scheme behind the variance bound `Var <= |f|^4_max / N_s`: each sample
/// draws one training circuit uniformly, two independent hardware shots
/// `f, f'` per pattern, and pairs them so every product crosses independent
/// draws.  `a` is accumulated symmetrized; `b` pairs the first hardware draw
/// with the classically exact error-free value.
pub fn estimate_design_mc(
    circuit: &LayeredCircuit,
    training: &TrainingSet,
    sige: &SigESet,
    noise: &NoiseModel,
    n_samples: usize,
    seed: u64,
) -> Result<DesignData> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("design estimation needs >= 1 samples".into()));
    }
    if training.entries.is_empty() {
        return Err(Error::InvalidConfig("design estimation needs a training set".into()));
    }
    let oracle = ShotOracle::new(circuit, training, noise)?;
    let width = sige.patterns.len();
    let prepared: Vec<Vec<Prepared>> = (0..training.entries.len())
        .map(|r| sige.patterns.iter().map(|p| oracle.prepare(r, p)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut a = DMatrix::zeros(width, width);
    let mut b = DVector::zeros(width);
    let mut c = 0.0;
    let mut f = vec![0.0; width];
    let mut f2 = vec![0.0; width];
    for i in 0..n_samples {
        let mut rng = rng_for(seed, streams::DESIGN, i as u64);
        let r = rng.gen_range(0..training.entries.len());
        for s in 0..width {
            f[s] = oracle.draw(r, &prepared[r][s], &mut rng)?;
        }
        for s in 0..width {
            f2[s] = oracle.draw(r, &prepared[r][s], &mut rng)?;
        }
        let g = training.entries[r].com_ef;
        for s1 in 0..width {
            for s2 in s1..width {
                a[(s1, s2)] += 0.5 * (f[s1] * f2[s2] + f2[s1] * f[s2]);
            }
            b[s1] += f[s1] * g;
        }
        c += g * g;
    }
    let scale = 1.0 / n_samples as f64;
    for s1 in 0..width {
        for s2 in s1..width {
            a[(s1, s2)] *= scale;
            a[(s2, s1)] = a[(s1, s2)];
        }
    }
    b *= scale;
    c *= scale;
    Ok(DesignData { a, b, c, provenance: DesignProvenance::MonteCarlo { samples: n_samples } })
}

/// Result of the single-parameter (error-rate) fit.
#[derive(Clone, Debug)]
pub struct SingleParameterFit {
    pub epsilon: f64,
    pub weights: QuasiDistribution,
    pub loss: f64,
}

/// Learns one scalar: the local error rate.  Every candidate rate is turned
/// into a quasi-probability distribution by channel inversion and truncated
/// products over the fixed pattern set, and scored against the com table; a
/// uniform grid over `[0, eps_max]` is refined twice around the incumbent.
/// Candidates whose channel is not invertible are skipped.
pub fn single_parameter_fit(
    table: &ComTable,
    sige: &SigESet,
    circuit: &LayeredCircuit,
    kind: LocalKind,
    eta: f64,
    eps_max: f64,
    grid_points: usize,
) -> Result<SingleParameterFit> {
    if grid_points < 2 {
        return Err(Error::InvalidConfig("the grid needs at least 2 points".into()));
    }
    if !(eps_max > 0.0) {
        return Err(Error::InvalidConfig("eps_max must be positive".into()));
    }
    let loss_at = |eps: f64| -> Option<(f64, QuasiDistribution)> {
        let locals = uniform_local_inverses(circuit, kind, eps, eta).ok()?;
        let q = tomography_quasiprob(sige, &locals).ok()?;
        let loss = evaluate_loss(&q, table).ok()?;
        loss.is_finite().then_some((loss, q))
    };
    let (mut lo, mut hi) = (0.0_f64, eps_max);
    let mut best: Option<(f64, f64, QuasiDistribution)> = None;
    for _round in 0..3 {
        let step = (hi - lo) / (grid_points - 1) as f64;
        for k in 0..grid_points {
            let eps = lo + step * k as f64;
            if let Some((loss, q)) = loss_at(eps) {
                if best.as_ref().map_or(true, |(_, l, _)| loss < *l) {
                    best = Some((eps, loss, q));
                }
            }
        }
        let Some((center, _, _)) = best.as_ref() else {
            return Err(Error::Numerical(
                "no invertible candidate rate on the grid".into(),
            ));
        };
        lo = (center - step).max(0.0);
        hi = (center + step).min(eps_max);
    }
    let (epsilon, loss, weights) = best.expect("the grid always evaluates a candidate");
    Ok(SingleParameterFit { epsilon, weights, loss })
}

/// Serialized form of a learned distribution, for artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedDistribution {
    pub sige_hash: String,
    pub q: Vec<f64>,
    #[serde(rename = "C")]
    pub overhead: f64,
    pub loss_min: f64,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl LearnedDistribution {
    pub fn new(
        sige: &SigESet,
        weights: &QuasiDistribution,
        loss_min: f64,
        method: &str,
        seed: Option<u64>,
    ) -> Self {
        LearnedDistribution {
            sige_hash: sige.content_hash(),
            q: weights.weights.clone(),
            overhead: weights.overhead(),
            loss_min,
            method: method.to_string(),
            seed,
        }
    }
}

/// How a single shot of `com(R, sigma)` is produced.
pub(crate) enum Prepared {
    /// Pauli-noise route: the pattern's fixed insertion sign.
    Sign(f64),
    /// Dense route: the fully decorated assignment.
    Decorated(Box<GateAssignment>),
}

enum ShotRoute {
    Profile,
    Dense,
}

/// Single-shot sampler of `com(R, sigma)` over a training set.
///
/// Pauli gate noise uses sign profiles: a shot draws the temporal branch
/// (when present), one Pauli per channel, a +/-1 outcome, then readout
/// flips — in that fixed order, unconditionally, so RNG consumption is
/// data independent.  Readout flips are handled at the outcome level, which
/// is exact for weight-1 observables and for symmetric (or balanced)
/// flip rates; asymmetric flips on wider observables, and amplitude damping,
/// fall back to dense trajectory sampling.
pub(crate) struct ShotOracle<'a> {
    circuit: &'a LayeredCircuit,
    noise: &'a NoiseModel,
    route: ShotRoute,
    spans: Vec<GateSpan>,
    branches: Vec<(f64, Vec<PauliChannelAt>)>,
    flips: (f64, f64),
    profiles: Vec<SignProfile>,
    assignments: Vec<GateAssignment>,
}

impl<'a> ShotOracle<'a> {
    pub fn new(
        circuit: &'a LayeredCircuit,
        training: &TrainingSet,
        noise: &'a NoiseModel,
    ) -> Result<Self> {
        noise.validate()?;
        let flips = effective_flips(noise);
        let weight = circuit.observable().z_qubits().len();
        let profile_ok =
            noise.is_pauli_gate_noise() && (weight <= 1 || flips.0 == flips.1);
        let assignments: Vec<GateAssignment> = training
            .entries
            .iter()
            .map(|e| e.assignment(circuit))
            .collect::<Result<_>>()?;
        if profile_ok {
            let branches = noise_branches(circuit, noise)?;
            let profiles = assignments
                .iter()
                .map(|a| SignProfile::build(circuit, a))
                .collect::<Result<_>>()?;
            Ok(ShotOracle {
                circuit,
                noise,
                route: ShotRoute::Profile,
                spans: gate_spans(circuit),
                branches,
                flips,
                profiles,
                assignments,
            })
        } else {
            Ok(ShotOracle {
                circuit,
                noise,
                route: ShotRoute::Dense,
                spans: Vec::new(),
                branches: Vec::new(),
                flips,
                profiles: Vec::new(),
                assignments,
            })
        }
    }

    pub fn prepare(&self, r: usize, pattern: &SigPattern) -> Result<Prepared> {
        match self.route {
            ShotRoute::Profile => {
                Ok(Prepared::Sign(pattern_sign(&self.profiles[r], &self.spans, pattern)))
            }
            ShotRoute::Dense => {
                let decorated = apply_error_pattern(
                    self.circuit,
                    &self.assignments[r],
                    &pattern.to_error_pattern(self.circuit)?,
                )?;
                Ok(Prepared::Decorated(Box::new(decorated)))
            }
        }
    }

    /// Composite preparation for a product of patterns: signs multiply.
    /// Only available on the profile route.
    pub fn prepare_composite(&self, _r: usize, signs: &[f64], picked: &[bool]) -> Result<Prepared> {
        match self.route {
            ShotRoute::Profile => Ok(Prepared::Sign(
                signs
                    .iter()
                    .zip(picked.iter())
                    .filter(|(_, &on)| on)
                    .map(|(s, _)| s)
                    .product(),
            )),
            ShotRoute::Dense => Err(Error::InvalidConfig(
                "composite pattern sampling needs the Pauli-noise shot route".into(),
            )),
        }
    }

    /// Per-pattern insertion signs of one training circuit (profile route).
    pub fn pattern_signs(&self, r: usize, sige: &SigESet) -> Result<Vec<f64>> {
        match self.route {
            ShotRoute::Profile => Ok(sige
                .patterns
                .iter()
                .map(|p| pattern_sign(&self.profiles[r], &self.spans, p))
                .collect()),
            ShotRoute::Dense => Err(Error::InvalidConfig(
                "pattern signs need the Pauli-noise shot route".into(),
            )),
        }
    }

    pub fn draw<R: Rng>(&self, r: usize, prepared: &Prepared, rng: &mut R) -> Result<f64> {
        match (&self.route, prepared) {
            (ShotRoute::Profile, Prepared::Sign(sign)) => Ok(self.draw_profile(r, *sign, rng)),
            (ShotRoute::Dense, Prepared::Decorated(assignment)) => {
                let shot_seed = rng.gen::<u64>();
                let records =
                    crate::dense::sample_shots(self.circuit, assignment, self.noise, 1, shot_seed)?;
                Ok(records[0].f_value)
            }
            _ => Err(Error::InvalidConfig("prepared pattern does not match the shot route".into())),
        }
    }

    fn draw_profile<R: Rng>(&self, r: usize, sign: f64, rng: &mut R) -> f64 {
        let weight = self.circuit.observable().z_qubits().len();
        profile_shot(&self.profiles[r], &self.branches, self.flips, weight, sign, rng)
    }
}

/// One sign-profile shot: draw the temporal branch (when present), one Pauli
/// per channel, a +/-1 outcome, then readout flips — in that fixed order,
/// unconditionally, so RNG consumption is data independent.  Outcome-level
/// flip handling is exact for weight-1 observables and for symmetric flip
/// rates; callers route asymmetric wider cases to dense trajectories.
pub(crate) fn profile_shot<R: Rng>(
    profile: &SignProfile,
    branches: &[(f64, Vec<PauliChannelAt>)],
    flips: (f64, f64),
    observable_weight: usize,
    sign: f64,
    rng: &mut R,
) -> f64 {
    let attachments = if branches.len() == 1 {
        &branches[0].1
    } else {
        let mut u: f64 = rng.gen();
        let mut idx = branches.len() - 1;
        for (i, (p, _)) in branches.iter().enumerate() {
            if u < *p {
                idx = i;
                break;
            }
            u -= p;
        }
        &branches[idx].1
    };
    let mut value = profile.ideal() * sign;
    for ch in attachments {
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
            value *= profile.insertion_sign(ch.point, &ch.support, drawn);
        }
    }
    let mut f = if rng.gen::<f64>() < (1.0 + value) / 2.0 { 1.0 } else { -1.0 };
    let (p0, p1) = flips;
    if p0 != 0.0 || p1 != 0.0 {
        if observable_weight == 1 {
            let p = if f > 0.0 { p0 } else { p1 };
            if rng.gen::<f64>() < p {
                f = -f;
            }
        } else {
            for _ in 0..observable_weight {
                if rng.gen::<f64>() < p0 {
                    f = -f;
                }
            }
        }
    }
    f
}
