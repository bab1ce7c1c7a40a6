//! Invariant suites run by `streamnet verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bound::bound_probe;
use super::contraction::contraction_probe;
use super::sensitivity::{lag_sensitivity, Model};
use crate::activation::ActivationKind;
use crate::error::Result;
use crate::neuron::NeuronState;
use crate::params::NeuronParams;
use crate::streams::{make_signal_source, SignalKind, SignalSpec};
use crate::tensor::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Contraction,
    Bounds,
    Collapse,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Contraction, Suite::Bounds, Suite::Collapse];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Contraction => "contraction",
            Suite::Bounds => "bounds",
            Suite::Collapse => "collapse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionSuite {
    pub lambdas: Vec<f64>,
    pub pairs: usize,
    pub steps: usize,
    pub dim: usize,
    pub tolerance_ulps: f64,
}

impl Default for ContractionSuite {
    fn default() -> Self {
        ContractionSuite { lambdas: vec![0.0, 0.25, 0.5, 0.9, 0.999], pairs: 1000, steps: 100, dim: 8, tolerance_ulps: 64.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSuite {
    pub draws: usize,
    pub steps: u64,
    pub max_dim: usize,
    pub noise_std: f64,
    pub max_abs_alpha: f64,
}

impl Default for BoundsSuite {
    fn default() -> Self {
        BoundsSuite { draws: 100, steps: 100_000, max_dim: 4, noise_std: 3.0, max_abs_alpha: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollapseSuite {
    pub lags: Vec<usize>,
    pub sequence_len: usize,
    pub perturbation: f64,
    /// Scalar stateful neuron `(w, w_s, b, alpha, lambda)` with tanh output.
    pub stateful: [f64; 5],
    pub min_stateful_sensitivity: f64,
}

impl Default for CollapseSuite {
    fn default() -> Self {
        CollapseSuite {
            lags: vec![1, 2, 5, 10],
            sequence_len: 32,
            perturbation: 1e-6,
            stateful: [0.5, 0.5, 0.0, 1.0, 0.9],
            min_stateful_sensitivity: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub contraction: ContractionSuite,
    pub bounds: BoundsSuite,
    pub collapse: CollapseSuite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub check: String,
    pub passed: bool,
    /// The measured quantity the check thresholds.
    pub value: f64,
    pub limit: f64,
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize, range: f64) -> Vector {
    Vector::new((0..dim).map(|_| rng.random_range(-range..range)).collect()).expect("finite draws")
}

/// Per lambda: every step of every random pair keeps `|ds_t| = lambda |ds_{t-1}|`.
pub fn run_contraction(cfg: &ContractionSuite, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &lambda in &cfg.lambdas {
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.pairs {
            let a = random_vec(&mut rng, cfg.dim, 1.0);
            let mut b = random_vec(&mut rng, cfg.dim, 1.0);
            while b == a {
                b = random_vec(&mut rng, cfg.dim, 1.0);
            }
            let ys: Vec<Vector> = (0..cfg.steps).map(|_| random_vec(&mut rng, cfg.dim, 1.0)).collect();
            worst = worst.max(contraction_probe(lambda, &a, &b, &ys)?.max_step_deviation_ulps);
        }
        out.push(CheckOutcome {
            suite: Suite::Contraction,
            check: format!("lambda={lambda} max per-step deviation (ulps)"),
            passed: worst <= cfg.tolerance_ulps,
            value: worst,
            limit: cfg.tolerance_ulps,
        });
    }
    Ok(out)
}

/// Random tanh neurons under white noise from the zero state never leave `[-1, 1]`.
pub fn run_bounds(cfg: &BoundsSuite, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB0_0D);
    let mut worst: f64 = 0.0;
    let mut all_hold = true;
    for draw in 0..cfg.draws {
        let in_dim = rng.random_range(1..=cfg.max_dim);
        let out_dim = rng.random_range(1..=cfg.max_dim);
        let alpha = rng.random_range(-cfg.max_abs_alpha..=cfg.max_abs_alpha);
        let lambda = rng.random_range(0.0..0.999);
        let params = NeuronParams::random(&mut rng, in_dim, out_dim, alpha, lambda, ActivationKind::Tanh)?;
        let signal = SignalSpec {
            kind: SignalKind::WhiteNoise,
            noise_std: cfg.noise_std,
            seed: seed.wrapping_add(draw as u64),
            dim: in_dim,
            ..Default::default()
        };
        let report = bound_probe(&params, &NeuronState::initial_for(&params), make_signal_source(&signal, None)?, cfg.steps, None)?;
        all_hold &= report.holds();
        worst = worst.max(report.max_abs_state);
    }
    Ok(vec![CheckOutcome {
        suite: Suite::Bounds,
        check: format!("tanh max |s| over {} draws x {} steps", cfg.draws, cfg.steps),
        passed: all_hold,
        value: worst,
        limit: 1.0 + super::bound::BOUND_SLACK_EPS * f64::EPSILON,
    }])
}

/// Stateless outputs ignore past inputs exactly; a stateful neuron does not.
pub fn run_collapse(cfg: &CollapseSuite, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC011);
    let inputs: Vec<Vector> = (0..cfg.sequence_len).map(|_| random_vec(&mut rng, 2, 1.0)).collect();
    let stateless = NeuronParams::random(&mut rng, 2, 3, 1.0, 0.9, ActivationKind::Tanh)?;
    let mut out = Vec::new();
    for &k in &cfg.lags {
        let s = lag_sensitivity(Model::Stateless, &stateless, &inputs, k, cfg.perturbation)?;
        out.push(CheckOutcome {
            suite: Suite::Collapse,
            check: format!("stateless lag {k} sensitivity (bit-identical={})", s.bitwise_identical),
            passed: s.sensitivity == 0.0 && s.bitwise_identical,
            value: s.sensitivity,
            limit: 0.0,
        });
    }
    let [w, ws, b, alpha, lambda] = cfg.stateful;
    let stateful = NeuronParams::scalar(w, ws, b, alpha, lambda, ActivationKind::Tanh)?;
    let scalar_inputs: Vec<Vector> = inputs.iter().map(|x| Vector::new(vec![x[0]]).expect("finite")).collect();
    let s = lag_sensitivity(Model::Stateful, &stateful, &scalar_inputs, 1, cfg.perturbation)?;
    out.push(CheckOutcome {
        suite: Suite::Collapse,
        check: "stateful lag 1 sensitivity".into(),
        passed: s.sensitivity > cfg.min_stateful_sensitivity,
        value: s.sensitivity,
        limit: cfg.min_stateful_sensitivity,
    });
    Ok(out)
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig, seed: u64) -> Result<Vec<CheckOutcome>> {
    match suite {
        Suite::Contraction => run_contraction(&cfg.contraction, seed),
        Suite::Bounds => run_bounds(&cfg.bounds, seed),
        Suite::Collapse => run_collapse(&cfg.collapse, seed),
    }
}

/// Runs several suites on up to `threads` worker threads. Results come back
/// in the order the suites were given.
pub fn run_suites(suites: &[Suite], cfg: &VerifyConfig, seed: u64, threads: usize) -> Result<Vec<CheckOutcome>> {
    let threads = threads.clamp(1, suites.len().max(1));
    let chunk = suites.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<CheckOutcome>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = suites
            .chunks(chunk)
            .map(|group| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for &suite in group {
                        out.extend(run_suite(suite, cfg, seed)?);
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("verify worker panicked")).collect()
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}
