use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::executor::{run_stream_with, NetworkSpec, NetworkState, RunOptions, StateMode};
use crate::params::{check_lambda, NeuronParams};
use crate::streams::{fused_consumption_guard, make_signal_source, FnSink, SignalSpec, StepView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    pub signal: SignalSpec,
    pub lambda: f64,
    pub steps: u64,
    /// Leading steps excluded from the error.
    pub transient: u64,
    /// Divide the state-enabled readout by the smoother's gain at the signal frequency.
    pub compensate_gain: bool,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            signal: SignalSpec {
                kind: crate::streams::SignalKind::NoisySinusoid,
                amplitude: 1.0,
                omega: std::f64::consts::TAU / 400.0,
                phase: 0.0,
                noise_std: 0.3,
                seed: 2024,
                dim: 1,
                onset: 0,
            },
            lambda: 0.9,
            steps: 12_000,
            transient: 2_000,
            compensate_gain: true,
        }
    }
}

/// Magnitude response of `s_t = lambda s_{t-1} + (1 - lambda) x_t` at `omega`:
/// `(1 - lambda) / |1 - lambda e^{-i omega}|`.
pub fn smoothing_gain(lambda: f64, omega: f64) -> f64 {
    (1.0 - lambda) / (1.0 - 2.0 * lambda * omega.cos() + lambda * lambda).sqrt()
}

/// Per-step series behind a tracking figure (first signal component).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrackingSeries {
    pub t: Vec<u64>,
    pub reference: Vec<f64>,
    pub stateless: Vec<f64>,
    pub stateful: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingReport {
    pub mse_stateful: f64,
    pub mse_stateless: f64,
    pub transient: u64,
    /// Steps the errors are averaged over.
    pub window: u64,
    /// Gain the stateful readout was divided by (1 when uncompensated).
    pub gain: f64,
    pub consumed_stateful: u64,
    pub consumed_stateless: u64,
    pub steps_stateful: u64,
    pub steps_stateless: u64,
    #[serde(skip)]
    pub series: TrackingSeries,
}

struct Collected {
    reference: Vec<Vec<f64>>,
    readout: Vec<Vec<f64>>,
    steps: u64,
    consumed: u64,
}

fn collect(spec: &NetworkSpec, signal: &SignalSpec, steps: u64, mode: StateMode, scale: f64) -> Result<Collected> {
    let mut guard = fused_consumption_guard(make_signal_source(signal, Some(steps))?);
    let mut reference = Vec::with_capacity(steps as usize);
    let mut readout = Vec::with_capacity(steps as usize);
    let sink = FnSink(|step: &StepView<'_>| {
        let r = step.reference.expect("signal sources carry a reference");
        reference.push(r.as_slice().to_vec());
        readout.push(match mode {
            StateMode::Disabled => step.y.as_slice().to_vec(),
            StateMode::Enabled => step.layers[0].s().iter().map(|s| s * scale).collect(),
        });
    });
    let out = run_stream_with(spec, NetworkState::zeros(spec), &mut guard, sink, RunOptions { limit: None, mode })
        .map_err(|abort| abort.error)?;
    Ok(Collected { reference, readout, steps: out.summary.steps, consumed: guard.count() })
}

fn mse(run: &Collected, skip: usize) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (r, y) in run.reference.iter().zip(&run.readout).skip(skip) {
        for (a, b) in r.iter().zip(y) {
            total += (a - b) * (a - b);
            n += 1;
        }
    }
    total / n as f64
}

/// Runs the noisy signal through a memoryless pass-through and through a
/// stateful smoother built from the same layer, then compares each readout
/// with the clean reference after the transient.
///
/// The stateless readout is `y_t = x_t`. The stateful readout is the state
/// `s_t`, optionally divided by the smoother's gain at the signal frequency.
/// Each run gets its own freshly seeded source, so both see the same noise.
pub fn tracking_experiment(config: &TrackingConfig) -> Result<TrackingReport> {
    check_lambda(config.lambda)?;
    if config.transient >= config.steps {
        return Err(Error::InvalidInput(format!(
            "transient {} leaves no steps out of {}",
            config.transient, config.steps
        )));
    }
    let spec = NetworkSpec::single(NeuronParams::pass_through(config.signal.dim, config.lambda)?);
    let gain = if config.compensate_gain { smoothing_gain(config.lambda, config.signal.omega) } else { 1.0 };

    let stateless = collect(&spec, &config.signal, config.steps, StateMode::Disabled, 1.0)?;
    let stateful = collect(&spec, &config.signal, config.steps, StateMode::Enabled, 1.0 / gain)?;
    let skip = config.transient as usize;

    let series = TrackingSeries {
        t: (1..=stateful.readout.len() as u64).collect(),
        reference: stateful.reference.iter().map(|r| r[0]).collect(),
        stateless: stateless.readout.iter().map(|y| y[0]).collect(),
        stateful: stateful.readout.iter().map(|y| y[0]).collect(),
    };
    Ok(TrackingReport {
        mse_stateful: mse(&stateful, skip),
        mse_stateless: mse(&stateless, skip),
        transient: config.transient,
        window: stateful.steps - config.transient,
        gain,
        consumed_stateful: stateful.consumed,
        consumed_stateless: stateless.consumed,
        steps_stateful: stateful.steps,
        steps_stateless: stateless.steps,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_pass_through_is_exact() {
        let mut cfg = TrackingConfig::default();
        cfg.signal.noise_std = 0.0;
        cfg.steps = 3_000;
        cfg.transient = 500;
        let r = tracking_experiment(&cfg).unwrap();
        assert_eq!(r.mse_stateless, 0.0);
        assert_eq!(r.window, 2_500);
    }

    #[test]
    fn state_beats_memoryless_under_noise() {
        let r = tracking_experiment(&TrackingConfig::default()).unwrap();
        assert!(r.mse_stateful < r.mse_stateless, "{r:?}");
        assert_eq!(r.consumed_stateful, r.steps_stateful);
        assert_eq!(r.consumed_stateless, r.steps_stateless);
    }

    #[test]
    fn deterministic() {
        let cfg = TrackingConfig { steps: 4_000, transient: 1_000, ..Default::default() };
        let a = tracking_experiment(&cfg).unwrap();
        let b = tracking_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mse_stateful.to_bits(), b.mse_stateful.to_bits());
    }

    #[test]
    fn gain_formula() {
        assert_eq!(smoothing_gain(0.0, 1.3), 1.0);
        // at DC the smoother passes everything
        assert!((smoothing_gain(0.9, 0.0) - 1.0).abs() < 1e-12);
        assert!(smoothing_gain(0.9, 0.5) < 0.5);
    }

    #[test]
    fn transient_must_leave_a_window() {
        let cfg = TrackingConfig { steps: 100, transient: 100, ..Default::default() };
        assert!(tracking_experiment(&cfg).is_err());
    }
}
