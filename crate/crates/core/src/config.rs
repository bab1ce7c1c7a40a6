//! Experiment configuration.
//!
//! One TOML document drives every command. Every field has a default, so an
//! empty file is a complete configuration; `streamnet --print-config` prints
//! the defaults in full.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::analysis::{AttractorThresholds, PhaseConfig, TrackingConfig, VerifyConfig};
use crate::error::{Error, Result};
use crate::executor::{CostWindows, NetworkSpec};
use crate::params::{check_lambda, NeuronParams, RawParams};
use crate::streams::{OutputFormat, SignalKind, SignalSpec};
use crate::tensor::Vector;

/// One layer. With `w` present the layer is explicit (`w_s` and `b` default
/// to zeros); otherwise `width` outputs are drawn uniformly from `[-0.5, 0.5]`
/// using the experiment seed and the layer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerConfig {
    pub width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_s: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    pub alpha: f64,
    pub lambda: f64,
    pub activation: ActivationKind,
}

impl Default for LayerConfig {
    fn default() -> Self {
        LayerConfig { width: 1, w: None, w_s: None, b: None, alpha: 1.0, lambda: 0.9, activation: ActivationKind::Tanh }
    }
}

impl LayerConfig {
    pub fn explicit(params: &NeuronParams) -> Self {
        LayerConfig {
            width: params.output_dim(),
            w: Some(params.w().row_vecs()),
            w_s: Some(params.w_s().row_vecs()),
            b: Some(params.b().as_slice().to_vec()),
            alpha: params.alpha(),
            lambda: params.lambda(),
            activation: params.activation(),
        }
    }

    pub fn build(&self, input_dim: usize, seed: u64) -> Result<NeuronParams> {
        match &self.w {
            Some(w) => {
                let out = w.len();
                NeuronParams::try_from(RawParams {
                    w: w.clone(),
                    w_s: self.w_s.clone().unwrap_or_else(|| vec![vec![0.0; out]; out]),
                    b: self.b.clone().unwrap_or_else(|| vec![0.0; out]),
                    alpha: self.alpha,
                    lambda: self.lambda,
                    activation: self.activation,
                })
            }
            None => {
                if self.w_s.is_some() || self.b.is_some() {
                    return Err(Error::InvalidSpec("w_s or b given without w".into()));
                }
                if self.width == 0 {
                    return Err(Error::InvalidSpec("layer width must be at least 1".into()));
                }
                NeuronParams::seeded(seed, input_dim, self.width, self.alpha, self.lambda, self.activation)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub layers: Vec<LayerConfig>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { input_dim: 1, layers: vec![LayerConfig::default()] }
    }
}

impl NetworkConfig {
    /// Layer `i` of a generated network is seeded with `seed + i`.
    pub fn build(&self, seed: u64) -> Result<NetworkSpec> {
        if self.input_dim == 0 {
            return Err(Error::InvalidSpec("input_dim must be at least 1".into()));
        }
        let mut dim = self.input_dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let p = layer.build(dim, seed.wrapping_add(i as u64))?;
            dim = p.output_dim();
            layers.push(p);
        }
        NetworkSpec::new(layers)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Stop after this many inputs; unbounded when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Run the memoryless baseline instead (state reported as zero).
    pub stateless: bool,
    /// Resume from this snapshot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resume: Option<PathBuf>,
    /// Write the final state here.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub neuron: LayerConfig,
    pub signal: SignalSpec,
    pub total_steps: u64,
    pub burn_in: u64,
    pub thresholds: AttractorThresholds,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            neuron: LayerConfig {
                width: 1,
                w: Some(vec![vec![1.0]]),
                w_s: Some(vec![vec![0.5]]),
                b: Some(vec![0.0]),
                alpha: 0.5,
                lambda: 0.9,
                activation: ActivationKind::Tanh,
            },
            signal: SignalSpec::default(),
            total_steps: 2_500,
            burn_in: 500,
            thresholds: AttractorThresholds::default(),
        }
    }
}

impl PhaseSection {
    pub fn build(&self, seed: u64) -> Result<PhaseConfig> {
        self.signal.validate()?;
        if self.burn_in >= self.total_steps {
            return Err(Error::InvalidSpec(format!(
                "burn_in {} leaves no points out of {} steps",
                self.burn_in, self.total_steps
            )));
        }
        Ok(PhaseConfig {
            params: self.neuron.build(self.signal.dim, seed)?,
            signal: self.signal.clone(),
            total_steps: self.total_steps,
            burn_in: self.burn_in,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetentionSection {
    pub lambdas: Vec<f64>,
    pub steps: u64,
    pub s0: Vec<f64>,
    pub activation: ActivationKind,
}

impl Default for RetentionSection {
    fn default() -> Self {
        RetentionSection { lambdas: vec![0.5, 0.9, 0.99], steps: 1_000, s0: vec![1.0], activation: ActivationKind::Tanh }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub steps: u64,
    pub windows: CostWindows,
    pub network: NetworkConfig,
    pub signal: SignalSpec,
}

impl Default for BenchSection {
    fn default() -> Self {
        let wide = LayerConfig { width: 32, ..Default::default() };
        BenchSection {
            steps: 1_000_000,
            windows: CostWindows::default(),
            network: NetworkConfig { input_dim: 8, layers: vec![wide.clone(), wide] },
            signal: SignalSpec { kind: SignalKind::WhiteNoise, noise_std: 1.0, dim: 8, seed: 7, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    /// Directory for the series files of `phase`, `retention` and `track`.
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { format: OutputFormat::Csv, dir: PathBuf::from("streamnet-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds generated weights and the verify suites.
    pub seed: u64,
    pub network: NetworkConfig,
    pub run: RunConfig,
    pub phase: PhaseSection,
    pub retention: RetentionSection,
    pub tracking: TrackingConfig,
    pub verify: VerifyConfig,
    pub bench: BenchSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            network: NetworkConfig::default(),
            run: RunConfig::default(),
            phase: PhaseSection::default(),
            retention: RetentionSection::default(),
            tracking: TrackingConfig::default(),
            verify: VerifyConfig::default(),
            bench: BenchSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    /// Replaces the top-level seed and every signal seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.phase.signal.seed = seed;
        self.tracking.signal.seed = seed;
        self.bench.signal.seed = seed;
    }

    /// Checks every section, so a bad value fails before anything runs.
    pub fn validate(&self) -> Result<()> {
        self.network.build(self.seed)?;
        self.phase.build(self.seed)?;

        for &lambda in &self.retention.lambdas {
            check_lambda(lambda)?;
        }
        Vector::new(self.retention.s0.clone())?;
        if self.retention.s0.is_empty() {
            return Err(Error::InvalidSpec("retention.s0 must be non-empty".into()));
        }
        if !self.retention.activation.fixes_origin() {
            return Err(Error::InvalidActivation(self.retention.activation.name()));
        }

        check_lambda(self.tracking.lambda)?;
        self.tracking.signal.validate()?;
        if self.tracking.transient >= self.tracking.steps {
            return Err(Error::InvalidSpec("tracking.transient must be below tracking.steps".into()));
        }

        for &lambda in &self.verify.contraction.lambdas {
            check_lambda(lambda)?;
        }
        let [w, ws, b, alpha, lambda] = self.verify.collapse.stateful;
        NeuronParams::scalar(w, ws, b, alpha, lambda, ActivationKind::Tanh)?;
        if self.verify.collapse.lags.iter().any(|&k| k == 0 || k >= self.verify.collapse.sequence_len) {
            return Err(Error::InvalidSpec("verify.collapse.lags must lie in 1..sequence_len".into()));
        }
        if self.verify.bounds.max_dim == 0 || self.verify.contraction.dim == 0 {
            return Err(Error::InvalidSpec("verify dimensions must be at least 1".into()));
        }

        let bench = self.bench.network.build(self.seed)?;
        self.bench.signal.validate()?;
        if bench.input_dim() != self.bench.signal.dim {
            return Err(Error::dims("bench signal", bench.input_dim(), self.bench.signal.dim));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn printed_defaults_round_trip() {
        let text = ExperimentConfig::default().to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unit_decay_is_rejected_anywhere() {
        for doc in [
            "[[network.layers]]\nlambda = 1.0",
            "[tracking]\nlambda = 1.0",
            "[retention]\nlambdas = [0.5, 1.0]",
            "[verify.contraction]\nlambdas = [1.0]",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(doc), Err(Error::LambdaOutOfRange(_))), "{doc}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("sede = 1").is_err());
        assert!(ExperimentConfig::from_toml("[network]\ninput_dims = 2").is_err());
    }

    #[test]
    fn explicit_layer() {
        let cfg = ExperimentConfig::from_toml(
            "[network]\ninput_dim = 1\n[[network.layers]]\nw = [[1.0]]\nalpha = 0.0\nlambda = 0.0\nactivation = \"identity\"",
        )
        .unwrap();
        let spec = cfg.network.build(cfg.seed).unwrap();
        let p = &spec.layers()[0];
        assert_eq!(p.w().as_slice(), &[1.0]);
        assert_eq!(p.w_s().as_slice(), &[0.0]);
        assert_eq!(p.b().as_slice(), &[0.0]);
    }

    #[test]
    fn generated_layers_chain_and_repeat() {
        let cfg = ExperimentConfig::from_toml("[network]\ninput_dim = 3\n[[network.layers]]\nwidth = 4\n[[network.layers]]\nwidth = 2")
            .unwrap();
        let a = cfg.network.build(9).unwrap();
        assert_eq!((a.input_dim(), a.output_dim(), a.state_dim()), (3, 2, 6));
        assert_eq!(a.digest(), cfg.network.build(9).unwrap().digest());
        assert_ne!(a.digest(), cfg.network.build(10).unwrap().digest());
    }

    #[test]
    fn explicit_round_trip_of_params() {
        let p = NeuronParams::seeded(5, 2, 3, 0.7, 0.4, ActivationKind::Sigmoid).unwrap();
        assert_eq!(LayerConfig::explicit(&p).build(2, 0).unwrap(), p);
    }

    #[test]
    fn seed_override_reaches_signals() {
        let mut cfg = ExperimentConfig::default();
        cfg.override_seed(3);
        assert_eq!((cfg.seed, cfg.phase.signal.seed, cfg.tracking.signal.seed, cfg.bench.signal.seed), (3, 3, 3, 3));
    }
}
