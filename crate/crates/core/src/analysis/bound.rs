use serde::Serialize;

use crate::error::{Error, Result};
use crate::neuron::{neuron_step, NeuronState};
use crate::params::NeuronParams;
use crate::streams::StreamSource;

/// Slack allowed above the bound for rounding in the state update.
pub const BOUND_SLACK_EPS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// The bound `M` the outputs are known (or claimed) to respect.
    pub bound: f64,
    /// Largest `|s_t|` element seen, including the initial state.
    pub max_abs_state: f64,
    pub steps: u64,
}

impl BoundReport {
    /// `max |s| <= M * (1 + 4 eps)`.
    pub fn holds(&self) -> bool {
        self.max_abs_state <= self.bound * (1.0 + BOUND_SLACK_EPS * f64::EPSILON)
    }
}

/// Runs one neuron for up to `steps` inputs and records the largest state
/// magnitude.
///
/// Identity and ReLU have no intrinsic bound and are refused unless
/// `explicit_bound` is supplied.
pub fn bound_probe<S: StreamSource>(
    params: &NeuronParams,
    initial: &NeuronState,
    mut source: S,
    steps: u64,
    explicit_bound: Option<f64>,
) -> Result<BoundReport> {
    let bound = match (explicit_bound, params.activation().bound()) {
        (Some(m), _) if m.is_finite() && m >= 0.0 => m,
        (Some(m), _) => return Err(Error::InvalidInput(format!("explicit bound {m} must be finite and >= 0"))),
        (None, Some(m)) => m,
        (None, None) => return Err(Error::UnboundedActivation(params.activation().name())),
    };
    let start = initial.s().max_abs();
    if start > bound {
        return Err(Error::InvalidInput(format!("initial state magnitude {start} exceeds bound {bound}")));
    }

    let mut state = initial.clone();
    let mut max_abs = start;
    let mut taken = 0;
    while taken < steps {
        let Some(x) = source.next_input()? else { break };
        state = neuron_step(params, &state, &x)?.next_state;
        max_abs = max_abs.max(state.s().max_abs());
        taken += 1;
    }
    Ok(BoundReport { bound, max_abs_state: max_abs, steps: taken })
}
