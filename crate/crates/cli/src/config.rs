//! Configuration schemas for the experiment commands.  Every command accepts
//! a JSON file via `--config`; absent fields fall back to desk-scale defaults
//! and unknown fields are rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qem_core::circuit::{build_layout, LayeredCircuit, LayoutKind};
use qem_core::dense::{CrosstalkKind, LocalChannel, LocalKind, NoiseModel, DEFAULT_ETA};

use crate::{config_err, CliError, CliResult};

/// Loads a command config, or the type's defaults when no file was given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Which circuit family an experiment runs on, and at what size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSpec {
    pub kind: LayoutKind,
    pub n: usize,
    pub layers: usize,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        LayoutSpec { kind: LayoutKind::CnotLadder, n: 4, layers: 4 }
    }
}

impl LayoutSpec {
    pub fn build(&self) -> CliResult<LayeredCircuit> {
        build_layout(self.kind, self.n, self.layers).map_err(config_err)
    }
}

/// The local channel assumed when enumerating significant errors and when
/// deriving tomography quasi-probabilities.  When a config omits it, the
/// experiment falls back to the noise model's own local channel (perfect
/// tomography of the local part).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssumedChannel {
    pub kind: LocalKind,
    pub epsilon: f64,
    pub eta: f64,
}

impl Default for AssumedChannel {
    fn default() -> Self {
        AssumedChannel { kind: LocalKind::Depolarizing, epsilon: 0.01, eta: DEFAULT_ETA }
    }
}

impl AssumedChannel {
    /// Resolves the optional config field against the device noise model.
    pub fn resolve(spec: Option<AssumedChannel>, noise: &NoiseModel) -> CliResult<AssumedChannel> {
        match (spec, &noise.local) {
            (Some(a), _) => Ok(a),
            (None, Some(local)) => {
                Ok(AssumedChannel { kind: local.kind, epsilon: local.epsilon, eta: local.eta })
            }
            (None, None) => Err(CliError::Config(
                "no assumed channel given and the noise model has no local channel".into(),
            )),
        }
    }
}

/// Mitigation/learning method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    None,
    Tem,
    LbemLsq,
    LbemProduct,
    SingleParam,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Tem => "tem",
            Method::LbemLsq => "lbem-lsq",
            Method::LbemProduct => "lbem-product",
            Method::SingleParam => "single-param",
        }
    }
}

/// Product-form descent knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentConfig {
    pub gamma_prime: f64,
    pub iterations: usize,
    /// Circuits per stochastic iteration (ignored by exact descent).
    pub n_circuits: usize,
    /// Configuration samples per circuit (ignored by exact descent).
    pub m_samples: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig { gamma_prime: 1e-4, iterations: 500, n_circuits: 8, m_samples: 256 }
    }
}

/// Single-parameter (error-rate) fit knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingleParamConfig {
    pub eps_max: f64,
    pub grid_points: usize,
}

impl Default for SingleParamConfig {
    fn default() -> Self {
        SingleParamConfig { eps_max: 0.2, grid_points: 25 }
    }
}

/// `learn`: fit a quasi-probability distribution on Clifford training data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnConfig {
    pub layout: LayoutSpec,
    pub noise: NoiseModel,
    pub assumed: Option<AssumedChannel>,
    /// Significant-error truncation order.
    pub k: usize,
    pub method: Method,
    /// Training circuits per pattern: |T| = training_factor * |SigE|.
    pub training_factor: usize,
    /// Per-(circuit, pattern) shot budget for the com tables; 0 = exact.
    pub learn_shots: usize,
    pub descent: DescentConfig,
    pub single: SingleParamConfig,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            layout: LayoutSpec::default(),
            noise: default_ladder_noise(),
            assumed: None,
            k: 1,
            method: Method::LbemLsq,
            training_factor: 3,
            learn_shots: 1024,
            descent: DescentConfig::default(),
            single: SingleParamConfig::default(),
        }
    }
}

/// `ecdf`: per-circuit mitigation defects over filtered random circuits.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EcdfConfig {
    pub layout: LayoutSpec,
    pub noise: NoiseModel,
    pub assumed: Option<AssumedChannel>,
    /// Truncation order for the learned distribution.
    pub k: usize,
    /// Truncation order for the tomography baseline column.
    pub tem_k: usize,
    pub method: Method,
    /// Number of filtered test circuits (CSV rows).
    pub count: usize,
    /// Acceptance filter threshold on the error-free expectation, in [0, 1).
    pub threshold: f64,
    /// Mitigation shot budget M per circuit and method.
    pub shots: usize,
    /// Per-(circuit, pattern) learning shot budget; 0 = exact tables.
    pub learn_shots: usize,
    pub training_factor: usize,
    /// Candidate cap = retry_factor * count before filter starvation.
    pub retry_factor: usize,
}

impl Default for EcdfConfig {
    fn default() -> Self {
        EcdfConfig {
            layout: LayoutSpec::default(),
            noise: default_ladder_noise(),
            assumed: None,
            k: 1,
            tem_k: 2,
            method: Method::LbemLsq,
            count: 100,
            threshold: 0.3,
            shots: 10_000,
            learn_shots: 1024,
            training_factor: 3,
            retry_factor: 200,
        }
    }
}

impl EcdfConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(CliError::Config(format!(
                "filter threshold must lie in [0, 1), got {}",
                self.threshold
            )));
        }
        if self.count == 0 {
            return Err(CliError::Config("ecdf needs count >= 1".into()));
        }
        if self.shots == 0 {
            return Err(CliError::Config("ecdf needs shots >= 1".into()));
        }
        Ok(())
    }
}

/// `rescaling`: error rescaling factor across circuit sizes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescalingConfig {
    /// Square sizes n = N to sweep.
    pub sizes: Vec<usize>,
    /// Base rate before the 2eps'/(N n) rescaling; None = per-size table.
    pub eps_prime: Option<f64>,
    /// Descent learning rate; None = per-size table.
    pub gamma_prime: Option<f64>,
    pub kind: LocalKind,
    /// Attach the reduced spatially-correlated channel.
    pub crosstalk: bool,
    /// Clifford test configurations per size.
    pub count: usize,
    /// Mitigation shot budget per test configuration (sampled mode).
    pub shots: usize,
    pub iterations: usize,
    pub training_factor: usize,
    /// Stochastic descent (circuits, samples); None = exact descent.
    pub mc: Option<(usize, usize)>,
}

impl Default for RescalingConfig {
    fn default() -> Self {
        RescalingConfig {
            sizes: vec![5, 6, 7, 8],
            eps_prime: None,
            gamma_prime: None,
            kind: LocalKind::Depolarizing,
            crosstalk: true,
            count: 20,
            shots: 10_000,
            iterations: 500,
            training_factor: 3,
            mc: None,
        }
    }
}

/// Base error rate before size rescaling, per the size-banded table.
pub fn eps_prime_for(size: usize) -> f64 {
    match size {
        0..=8 => 1.0,
        9..=12 => 1.1,
        13..=16 => 1.2,
        _ => 1.3,
    }
}

/// Descent learning rate per circuit size.
pub fn gamma_prime_for(size: usize) -> f64 {
    match size {
        0..=6 => 1e-4,
        7..=8 => 9e-5,
        9..=10 => 8e-5,
        11..=12 => 7e-5,
        13..=14 => 6e-5,
        15..=16 => 5e-5,
        17..=18 => 4e-5,
        _ => 3e-5,
    }
}

/// `dqcp`: two-qubit interference demo over a theta grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqcpConfig {
    pub noise: NoiseModel,
    /// Grid size: theta = 2 pi m / theta_count.
    pub theta_count: usize,
    /// Shot budget per estimate.
    pub shots: usize,
    /// Learning-stage shot budget per Clifford circuit; 0 = exact.
    pub learn_shots: usize,
}

impl Default for DqcpConfig {
    fn default() -> Self {
        DqcpConfig {
            noise: NoiseModel { meas_flip: [0.03, 0.06], ..NoiseModel::noiseless() },
            theta_count: 10,
            shots: 10_000,
            learn_shots: 0,
        }
    }
}

/// `vqa`: four-spin variational ground-state search with three energy
/// estimation modes (raw, extrapolation, learned mitigation).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqaConfig {
    /// Transverse-field coefficients of the four sites.
    pub a: [f64; 4],
    /// Ring coupling strength.
    pub j: f64,
    pub noise: NoiseModel,
    pub k: usize,
    pub training_factor: usize,
    /// Gradient-descent iterations per optimization stage.
    pub iterations: usize,
    pub learning_rate: f64,
    /// Initial angles are drawn uniformly from [-init_scale, init_scale].
    pub init_scale: f64,
    /// Noise boost factors for the extrapolation baseline (first must be 1).
    pub factors: Vec<f64>,
}

impl Default for VqaConfig {
    fn default() -> Self {
        VqaConfig {
            a: [0.270777, 0.192014, 0.0802803, 0.123018],
            j: 1.0,
            noise: default_vqa_noise(),
            k: 1,
            training_factor: 3,
            iterations: 30,
            learning_rate: 0.05,
            init_scale: 0.1,
            factors: vec![1.0, 2.0],
        }
    }
}

/// `vqe-h2`: molecular ground-state energy from an externally supplied
/// coefficient file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeH2Config {
    /// Path to the coefficient file; None = the bundled sample.
    pub coeff_file: Option<PathBuf>,
    pub noise: NoiseModel,
    pub shots: usize,
    /// Learning-stage shot budget per Clifford circuit; 0 = exact.
    pub learn_shots: usize,
}

impl Default for VqeH2Config {
    fn default() -> Self {
        VqeH2Config {
            coeff_file: None,
            noise: NoiseModel::local_only(LocalKind::Depolarizing, 0.01),
            shots: 10_000,
            learn_shots: 0,
        }
    }
}

/// `selftest`: quick internal diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelftestConfig {
    pub layout: LayoutSpec,
    pub assumed: AssumedChannel,
    /// The two training-size factors compared by the inner-product check.
    pub c_values: [usize; 2],
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            layout: LayoutSpec { kind: LayoutKind::CnotLadder, n: 3, layers: 3 },
            assumed: AssumedChannel { kind: LocalKind::Dephasing, epsilon: 0.05, eta: DEFAULT_ETA },
            c_values: [2, 3],
        }
    }
}

/// Default device model for the ladder experiments: a weak depolarizing
/// channel on every frame gate plus full-strength spatial crosstalk.
pub fn default_ladder_noise() -> NoiseModel {
    NoiseModel {
        local: Some(LocalChannel::new(LocalKind::Depolarizing, 0.01)),
        crosstalk: CrosstalkKind::ModelA { epsilon: None },
        ..NoiseModel::noiseless()
    }
}

/// Default device model for the variational workload: biased local noise,
/// reduced crosstalk, and amplitude damping after the first computing layer.
pub fn default_vqa_noise() -> NoiseModel {
    NoiseModel {
        local: Some(LocalChannel::new(LocalKind::Biased, 0.04)),
        crosstalk: CrosstalkKind::Reduced { epsilon: None },
        damping_gamma: 0.002,
        ..NoiseModel::noiseless()
    }
}
