//! Stream-native neural execution.
//!
//! Stream neurons keep a persistent state `s_t` and consume an irreversible
//! input stream one element at a time:
//!
//! ```text
//! z_t = W x_t + alpha * W_s s_{t-1} + b
//! y_t = sigma(z_t)
//! s_t = lambda * s_{t-1} + (1 - lambda) * y_t,   lambda in [0, 1)
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`], [`activation`], [`params`]: numeric types and validated parameters
//! - [`neuron`]: the single-step kernel and the memoryless baseline
//! - [`executor`]: layered networks, forward-only stream runs, snapshots
//! - [`streams`]: signal generators, record readers, consumption guard, sinks
//! - [`analysis`]: invariant probes and the experiments built on them
//! - [`config`], [`cli`]: reproducible experiment configs and the `streamnet` command

pub mod activation;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod executor;
pub mod neuron;
pub mod params;
pub mod streams;
pub mod tensor;

pub use activation::{activation_apply, ActivationKind};
pub use error::{Error, Result, SourceError};
pub use executor::{
    network_step, network_step_stateless, run_stream, run_stream_with, NetworkSpec, NetworkState, RunOptions,
    RunOutput, RunSummary, Snapshot, StateMode,
};
pub use neuron::{neuron_step, state_update_only, stateless_step, NeuronState, StepOutput};
pub use params::{validate_params, NeuronParams, RawParams};
pub use streams::{fused_consumption_guard, make_signal_source, SignalKind, SignalSpec, StreamSource};
pub use tensor::{Matrix, Vector};
