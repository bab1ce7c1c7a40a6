use serde::Serialize;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::neuron::{neuron_step, NeuronState};
use crate::params::{check_lambda, NeuronParams};
use crate::tensor::{ulps_at_scale, Matrix, Vector};

/// Free decay of a neuron's state with zero drive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionCurve {
    pub lambda: f64,
    pub s0: Vector,
    /// `s_t` for `t = 0..=steps`.
    pub states: Vec<Vector>,
}

impl RetentionCurve {
    /// `|s_t|` for every step.
    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(Vector::norm).collect()
    }

    /// First `t` with `|s_t| <= 0.5 |s_0|`.
    pub fn half_life(&self) -> Option<u64> {
        let half = 0.5 * self.s0.norm();
        self.states.iter().position(|s| s.norm() <= half).map(|t| t as u64)
    }

    /// Largest elementwise gap to `lambda^t * s_0`, in ulps of `|s_0|` per element.
    pub fn max_deviation_ulps(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, s) in self.states.iter().enumerate() {
            let decay = self.lambda.powf(t as f64);
            for (v, v0) in s.iter().zip(self.s0.iter()) {
                worst = worst.max(ulps_at_scale(*v, decay * v0, *v0));
            }
        }
        worst
    }
}

/// Runs a neuron with zero input, zero bias and no feedback, so `y_t = sigma(0) = 0`
/// and the state obeys `s_t = lambda * s_{t-1}`.
///
/// Activations with `sigma(0) != 0` would inject a constant drive and are refused.
pub fn retention_curve(lambda: f64, s0: &Vector, steps: u64, activation: ActivationKind) -> Result<RetentionCurve> {
    check_lambda(lambda)?;
    if !activation.fixes_origin() {
        return Err(Error::InvalidActivation(activation.name()));
    }
    let dim = s0.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("initial state must be non-empty".into()));
    }
    let params = NeuronParams::new(
        Matrix::zeros(dim, 1)?,
        Matrix::zeros(dim, dim)?,
        Vector::zeros(dim),
        0.0,
        lambda,
        activation,
    )?;
    let x = Vector::zeros(1);
    let mut state = NeuronState::new(s0.clone(), 0);
    let mut states = Vec::with_capacity(steps as usize + 1);
    states.push(s0.clone());
    for _ in 0..steps {
        state = neuron_step(&params, &state, &x)?.next_state;
        states.push(state.s().clone());
    }
    Ok(RetentionCurve { lambda, s0: s0.clone(), states })
}
