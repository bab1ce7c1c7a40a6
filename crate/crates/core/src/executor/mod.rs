//! Network execution over irreversible streams.
//!
//! A [`NetworkSpec`] is a feed-forward stack of stream neurons. Within one
//! stream step every layer advances once, and layer `k` consumes layer
//! `k - 1`'s output from the same step, so the whole network still maps
//! `(x_t, s_{t-1})` to `(y_t, s_t)`.
//!
//! [`run_stream`] pulls each input once, forwards `(t, y_t, s_t)` to a sink and
//! drops the input. Engine-resident memory is the spec plus one state.

mod bench;
mod snapshot;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::neuron::{neuron_step, stateless_step, NeuronState};
use crate::params::NeuronParams;
use crate::streams::{RecordSink, StepView, StreamSource};
use crate::tensor::Vector;

pub use bench::{measure_constant_cost, CostReport, CostWindows};
pub use snapshot::{load_snapshot, save_snapshot, Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

/// Ordered, dimension-checked stack of layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NeuronParams>", into = "Vec<NeuronParams>")]
pub struct NetworkSpec {
    layers: Vec<NeuronParams>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<NeuronParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(Error::dims("layer input", pair[0].output_dim(), pair[1].input_dim()));
            }
        }
        Ok(NetworkSpec { layers })
    }

    pub fn single(params: NeuronParams) -> Self {
        NetworkSpec { layers: vec![params] }
    }

    pub fn layers(&self) -> &[NeuronParams] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Total number of state elements across layers.
    pub fn state_dim(&self) -> usize {
        self.layers.iter().map(NeuronParams::output_dim).sum()
    }

    /// SHA-256 over a canonical little-endian encoding of every parameter.
    pub fn digest(&self) -> [u8; 32] {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.layers.len() as u64).to_le_bytes());
        for layer in &self.layers {
            layer.write_canonical(&mut bytes);
        }
        Sha256::digest(&bytes).into()
    }

    pub fn resident_bytes(&self) -> usize {
        self.layers.capacity() * std::mem::size_of::<NeuronParams>()
            + self.layers.iter().map(NeuronParams::resident_bytes).sum::<usize>()
    }
}

impl TryFrom<Vec<NeuronParams>> for NetworkSpec {
    type Error = Error;

    fn try_from(layers: Vec<NeuronParams>) -> Result<Self> {
        NetworkSpec::new(layers)
    }
}

impl From<NetworkSpec> for Vec<NeuronParams> {
    fn from(spec: NetworkSpec) -> Self {
        spec.layers
    }
}

/// Per-layer persistent state plus the global step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    layers: Vec<NeuronState>,
    step: u64,
}

impl NetworkState {
    /// All-zero state at step 0.
    pub fn zeros(spec: &NetworkSpec) -> Self {
        NetworkState {
            layers: spec.layers.iter().map(NeuronState::initial_for).collect(),
            step: 0,
        }
    }

    /// Builds a state from explicit per-layer vectors, all at step `step`.
    pub fn from_layers(spec: &NetworkSpec, layers: Vec<Vector>, step: u64) -> Result<Self> {
        let state = NetworkState {
            layers: layers.into_iter().map(|s| NeuronState::new(s, step)).collect(),
            step,
        };
        state.check_consistent(spec)?;
        Ok(state)
    }

    pub fn layers(&self) -> &[NeuronState] {
        &self.layers
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// All layer states concatenated.
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.s().iter().copied()).collect()
    }

    pub fn check_consistent(&self, spec: &NetworkSpec) -> Result<()> {
        if self.layers.len() != spec.layers.len() {
            return Err(Error::dims("layer states", spec.layers.len(), self.layers.len()));
        }
        for (state, params) in self.layers.iter().zip(&spec.layers) {
            if state.s().dim() != params.output_dim() {
                return Err(Error::dims("layer state", params.output_dim(), state.s().dim()));
            }
            if state.step() != self.step {
                return Err(Error::InvalidInput(format!(
                    "layer step counter {} differs from network step {}",
                    state.step(),
                    self.step
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the step counter and every state element's bit pattern.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.step.to_le_bytes());
        for layer in &self.layers {
            h.update((layer.s().dim() as u64).to_le_bytes());
            for v in layer.s().iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().into()
    }

    pub fn resident_bytes(&self) -> usize {
        self.layers.capacity() * std::mem::size_of::<NeuronState>()
            + self.layers.iter().map(NeuronState::resident_bytes).sum::<usize>()
    }
}

/// Whether layers carry state across steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMode {
    /// Full stream neuron update.
    #[default]
    Enabled,
    /// Memoryless layers: `y = sigma(W x + b)`, state reported as zero.
    Disabled,
}

/// Advances the network by one stream step.
pub fn network_step(spec: &NetworkSpec, state: &NetworkState, x: &Vector) -> Result<(Vector, NetworkState)> {
    network_step_mode(spec, state, x, StateMode::Enabled)
}

/// Same as [`network_step`] with every layer replaced by its stateless map.
pub fn network_step_stateless(spec: &NetworkSpec, state: &NetworkState, x: &Vector) -> Result<(Vector, NetworkState)> {
    network_step_mode(spec, state, x, StateMode::Disabled)
}

pub fn network_step_mode(
    spec: &NetworkSpec,
    state: &NetworkState,
    x: &Vector,
    mode: StateMode,
) -> Result<(Vector, NetworkState)> {
    state.check_consistent(spec)?;
    if x.dim() != spec.input_dim() {
        return Err(Error::dims("network input", spec.input_dim(), x.dim()));
    }
    let mut next = Vec::with_capacity(spec.layers.len());
    let mut signal: Option<Vector> = None;
    for (params, layer_state) in spec.layers.iter().zip(&state.layers) {
        let input = signal.as_ref().unwrap_or(x);
        let y = match mode {
            StateMode::Enabled => {
                let out = neuron_step(params, layer_state, input)?;
                next.push(out.next_state);
                out.y
            }
            StateMode::Disabled => {
                let y = stateless_step(params, input)?;
                next.push(NeuronState::new(Vector::zeros(params.output_dim()), layer_state.step() + 1));
                y
            }
        };
        signal = Some(y);
    }
    let y = signal.expect("network has at least one layer");
    Ok((y, NetworkState { layers: next, step: state.step + 1 }))
}

/// Min/mean/max wall time per step, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub min_ns: u64,
    pub mean_ns: f64,
    pub max_ns: u64,
}

/// What a run did. Contains no input values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    /// Hex SHA-256 of the final (or last good) state.
    pub final_state_digest: String,
    /// `None` when no step ran.
    pub step_time: Option<TimingStats>,
    /// Largest engine-resident byte count seen (spec + state).
    pub peak_engine_bytes: usize,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "steps={} state={} engine_bytes={}", self.steps, &self.final_state_digest[..16], self.peak_engine_bytes)?;
        if let Some(t) = &self.step_time {
            write!(f, " step_ns(min/mean/max)={}/{:.1}/{}", t.min_ns, t.mean_ns, t.max_ns)?;
        }
        Ok(())
    }
}

/// A completed run: its summary and the state to resume from.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub state: NetworkState,
}

/// A run that stopped on an error. `last_good` is the state after the last
/// step that completed.
#[derive(Debug)]
pub struct RunAbort {
    pub error: Error,
    pub summary: RunSummary,
    pub last_good: NetworkState,
}

impl fmt::Display for RunAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted after {} steps: {}", self.summary.steps, self.error)
    }
}

impl std::error::Error for RunAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub limit: Option<u64>,
    pub mode: StateMode,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct Timing {
    count: u64,
    min: u64,
    max: u64,
    total: u128,
}

impl Timing {
    fn new() -> Self {
        Timing { count: 0, min: u64::MAX, max: 0, total: 0 }
    }

    fn add(&mut self, ns: u64) {
        self.count += 1;
        self.min = self.min.min(ns);
        self.max = self.max.max(ns);
        self.total += u128::from(ns);
    }

    fn stats(&self) -> Option<TimingStats> {
        (self.count > 0).then(|| TimingStats {
            min_ns: self.min,
            mean_ns: self.total as f64 / self.count as f64,
            max_ns: self.max,
        })
    }
}

/// Executes `spec` over `source` with state enabled. See [`run_stream_with`].
#[allow(clippy::result_large_err)]
pub fn run_stream<S, K>(
    spec: &NetworkSpec,
    initial: NetworkState,
    source: S,
    sink: K,
    limit: Option<u64>,
) -> std::result::Result<RunOutput, RunAbort>
where
    S: StreamSource,
    K: RecordSink,
{
    run_stream_with(spec, initial, source, sink, RunOptions { limit, mode: StateMode::Enabled })
}

/// Pulls inputs one at a time until the source ends or `limit` steps ran.
///
/// Each input is dropped as soon as its step completes. The sink sees the
/// output, the new state and the source's reference value, never the input.
#[allow(clippy::result_large_err)]
pub fn run_stream_with<S, K>(
    spec: &NetworkSpec,
    initial: NetworkState,
    mut source: S,
    mut sink: K,
    options: RunOptions,
) -> std::result::Result<RunOutput, RunAbort>
where
    S: StreamSource,
    K: RecordSink,
{
    let spec_bytes = spec.resident_bytes();
    let mut state = initial;
    let mut timing = Timing::new();
    let mut steps = 0u64;
    let mut peak = spec_bytes + state.resident_bytes();

    let summarize = |steps: u64, state: &NetworkState, timing: &Timing, peak: usize| RunSummary {
        steps,
        final_state_digest: hex(&state.digest()),
        step_time: timing.stats(),
        peak_engine_bytes: peak,
    };

    if let Err(error) = state.check_consistent(spec) {
        let summary = summarize(0, &state, &timing, peak);
        return Err(RunAbort { error, summary, last_good: state });
    }

    let outcome: Result<()> = loop {
        if options.limit.is_some_and(|n| steps >= n) {
            break Ok(());
        }
        let x = match source.next_input() {
            Ok(Some(x)) => x,
            Ok(None) => break Ok(()),
            Err(e) => break Err(e.into()),
        };
        let started = Instant::now();
        let stepped = network_step_mode(spec, &state, &x, options.mode);
        let elapsed = started.elapsed().as_nanos() as u64;
        drop(x);
        let (y, next) = match stepped {
            Ok(v) => v,
            Err(e) => break Err(e),
        };
        state = next;
        steps += 1;
        timing.add(elapsed);
        peak = peak.max(spec_bytes + state.resident_bytes());
        let view = StepView { t: state.step, y: &y, layers: &state.layers, reference: source.reference() };
        if let Err(e) = sink.record(&view) {
            break Err(e.into());
        }
    };
    let finished = outcome.and_then(|()| sink.finish().map_err(Error::from));

    let summary = summarize(steps, &state, &timing, peak);
    match finished {
        Ok(()) => Ok(RunOutput { summary, state }),
        Err(error) => Err(RunAbort { error, summary, last_good: state }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::streams::{fused_consumption_guard, make_signal_source, IterSource, NullSink, SignalKind, SignalSpec, VecSink};

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    fn pass_through(n_layers: usize) -> NetworkSpec {
        NetworkSpec::new((0..n_layers).map(|_| NeuronParams::pass_through(1, 0.0).unwrap()).collect()).unwrap()
    }

    #[test]
    fn pass_through_layers() {
        for n in [1, 2] {
            let spec = pass_through(n);
            let (y, next) = network_step(&spec, &NetworkState::zeros(&spec), &v(&[0.3])).unwrap();
            assert_eq!(y.as_slice(), &[0.3]);
            assert_eq!(next.step(), 1);
            assert!(next.layers().iter().all(|l| l.step() == 1));
        }
    }

    #[test]
    fn two_layer_tanh_matches_scalar_oracle() {
        let l1 = NeuronParams::seeded(3, 1, 1, 0.8, 0.7, ActivationKind::Tanh).unwrap();
        let l2 = NeuronParams::seeded(4, 1, 1, -0.6, 0.5, ActivationKind::Tanh).unwrap();
        let scalars: Vec<[f64; 5]> = [&l1, &l2]
            .iter()
            .map(|p| [p.w().get(0, 0), p.w_s().get(0, 0), p.b()[0], p.alpha(), p.lambda()])
            .collect();
        let spec = NetworkSpec::new(vec![l1, l2]).unwrap();
        let mut state = NetworkState::zeros(&spec);
        let mut oracle = [0.0f64; 2];
        for t in 0..50 {
            let x = (t as f64 * 0.3).sin();
            let mut signal = x;
            for (k, [w, ws, b, alpha, lambda]) in scalars.iter().enumerate() {
                let y = (w * signal + alpha * (ws * oracle[k]) + b).tanh();
                oracle[k] = lambda * oracle[k] + (1.0 - lambda) * y;
                signal = y;
            }
            let (y, next) = network_step(&spec, &state, &v(&[x])).unwrap();
            assert_eq!(y[0], signal);
            assert_eq!(next.flat(), oracle.to_vec());
            state = next;
        }
    }

    #[test]
    fn rejects_bad_topology() {
        assert!(NetworkSpec::new(vec![]).is_err());
        let a = NeuronParams::seeded(1, 1, 3, 1.0, 0.5, ActivationKind::Tanh).unwrap();
        let b = NeuronParams::seeded(1, 2, 1, 1.0, 0.5, ActivationKind::Tanh).unwrap();
        assert!(matches!(NetworkSpec::new(vec![a, b]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn stateless_mode_reports_zero_state() {
        let spec = NetworkSpec::single(NeuronParams::seeded(9, 2, 2, 1.0, 0.9, ActivationKind::Tanh).unwrap());
        let (y, next) = network_step_stateless(&spec, &NetworkState::zeros(&spec), &v(&[1.0, -1.0])).unwrap();
        assert_eq!(y, stateless_step(&spec.layers()[0], &v(&[1.0, -1.0])).unwrap());
        assert_eq!(next.flat(), vec![0.0, 0.0]);
        assert_eq!(next.step(), 1);
    }

    #[test]
    fn empty_source() {
        let spec = pass_through(1);
        let out = run_stream(&spec, NetworkState::zeros(&spec), IterSource::new(std::iter::empty()), NullSink, None).unwrap();
        assert_eq!(out.summary.steps, 0);
        assert!(out.summary.step_time.is_none());
    }

    #[test]
    fn counts_every_item_once() {
        let spec = pass_through(1);
        let items = (0..1000).map(|i| v(&[i as f64 * 1e-3]));
        let mut guard = fused_consumption_guard(IterSource::new(items));
        let out = run_stream(&spec, NetworkState::zeros(&spec), &mut guard, NullSink, None).unwrap();
        assert_eq!(out.summary.steps, 1000);
        assert_eq!(guard.count(), 1000);
        assert_eq!(out.state.step(), 1000);
    }

    #[test]
    fn limit_stops_early_and_resumes() {
        let spec = pass_through(1);
        let mut guard = fused_consumption_guard(IterSource::new((0..10).map(|i| v(&[i as f64]))));
        let first = run_stream(&spec, NetworkState::zeros(&spec), &mut guard, NullSink, Some(4)).unwrap();
        assert_eq!((first.summary.steps, guard.count()), (4, 4));
        let rest = run_stream(&spec, first.state, &mut guard, NullSink, None).unwrap();
        assert_eq!((rest.summary.steps, guard.count(), rest.state.step()), (6, 10, 10));
    }

    #[test]
    fn pass_through_sinusoid_reaches_sink() {
        let spec = pass_through(1);
        let signal = SignalSpec { kind: SignalKind::Sinusoid, amplitude: 0.8, omega: 0.1, phase: 0.3, ..Default::default() };
        let mut sink = VecSink::default();
        run_stream(&spec, NetworkState::zeros(&spec), make_signal_source(&signal, Some(200)).unwrap(), &mut sink, None)
            .unwrap();
        assert_eq!(sink.records.len(), 200);
        for (i, rec) in sink.records.iter().enumerate() {
            let expected = 0.8 * (0.1 * i as f64 + 0.3).sin();
            assert_eq!(rec.t, i as u64 + 1);
            assert_eq!(rec.y[0], expected);
            assert_eq!(rec.r.as_ref().unwrap()[0], expected);
        }
    }

    #[test]
    fn non_finite_aborts_with_last_good_state() {
        let p = NeuronParams::scalar(1.0, 0.0, 0.0, 0.0, 0.5, ActivationKind::Identity).unwrap();
        let spec = NetworkSpec::single(p);
        let items = [1.0, 2.0, f64::MAX, f64::MAX].map(|x| v(&[x]));
        let big = NeuronParams::scalar(4.0, 0.0, 0.0, 0.0, 0.5, ActivationKind::Identity).unwrap();
        let spec_big = NetworkSpec::new(vec![spec.layers()[0].clone(), big]).unwrap();
        let abort = run_stream(&spec_big, NetworkState::zeros(&spec_big), IterSource::new(items.into_iter()), NullSink, None)
            .unwrap_err();
        assert!(matches!(abort.error, Error::NonFiniteValue(_)));
        assert_eq!(abort.summary.steps, 2);
        assert_eq!(abort.last_good.step(), 2);
        assert!(abort.last_good.flat().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn source_errors_propagate() {
        let spec = pass_through(1);
        let src = crate::streams::RecordSource::new("0.1\nx\n".as_bytes());
        let abort = run_stream(&spec, NetworkState::zeros(&spec), src, NullSink, None).unwrap_err();
        assert!(matches!(abort.error, Error::Source(ref e) if e.line() == Some(2)));
        assert_eq!(abort.summary.steps, 1);
    }

    #[test]
    fn inconsistent_state_rejected() {
        let spec = pass_through(2);
        let other = pass_through(1);
        let abort =
            run_stream(&spec, NetworkState::zeros(&other), IterSource::new(std::iter::empty()), NullSink, None).unwrap_err();
        assert!(matches!(abort.error, Error::DimensionMismatch(_)));
    }

    #[test]
    fn digest_changes_with_parameters() {
        let a = NetworkSpec::single(NeuronParams::scalar(1.0, 0.0, 0.0, 0.0, 0.5, ActivationKind::Tanh).unwrap());
        let b = NetworkSpec::single(NeuronParams::scalar(1.0, 0.0, 0.0, 0.0, 0.5000000000000001, ActivationKind::Tanh).unwrap());
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn engine_bytes_do_not_grow() {
        let spec = NetworkSpec::single(NeuronParams::seeded(2, 3, 4, 0.5, 0.9, ActivationKind::Tanh).unwrap());
        let signal = SignalSpec { kind: SignalKind::WhiteNoise, noise_std: 1.0, dim: 3, ..Default::default() };
        let short = run_stream(&spec, NetworkState::zeros(&spec), make_signal_source(&signal, Some(10)).unwrap(), NullSink, None)
            .unwrap();
        let long = run_stream(&spec, NetworkState::zeros(&spec), make_signal_source(&signal, Some(10_000)).unwrap(), NullSink, None)
            .unwrap();
        assert_eq!(short.summary.peak_engine_bytes, long.summary.peak_engine_bytes);
        assert_eq!(short.state.resident_bytes(), long.state.resident_bytes());
    }
}
