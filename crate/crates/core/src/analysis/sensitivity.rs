use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::executor::{run_stream_with, NetworkSpec, NetworkState, RunOptions, StateMode};
use crate::params::NeuronParams;
use crate::streams::{FnSink, IterSource};
use crate::tensor::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Stateful,
    Stateless,
}

impl From<Model> for StateMode {
    fn from(m: Model) -> Self {
        match m {
            Model::Stateful => StateMode::Enabled,
            Model::Stateless => StateMode::Disabled,
        }
    }
}

/// Finite-difference sensitivity of one model's final output to an earlier input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSensitivity {
    pub model: Model,
    /// `max_j |y_t(x_{t-k} + h e_j) - y_t| / h`.
    pub sensitivity: f64,
    /// Every perturbed run produced a bit-identical `y_t`.
    pub bitwise_identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub lag: usize,
    pub stateless: f64,
    pub stateful: f64,
    pub stateless_bitwise_identical: bool,
    pub perturbation: f64,
}

impl SensitivityReport {
    /// Measures both models on the same inputs.
    pub fn measure(params: &NeuronParams, base_inputs: &[Vector], lag: usize, h: f64) -> Result<Self> {
        let stateless = lag_sensitivity(Model::Stateless, params, base_inputs, lag, h)?;
        let stateful = lag_sensitivity(Model::Stateful, params, base_inputs, lag, h)?;
        Ok(SensitivityReport {
            lag,
            stateless: stateless.sensitivity,
            stateful: stateful.sensitivity,
            stateless_bitwise_identical: stateless.bitwise_identical,
            perturbation: h,
        })
    }
}

fn final_output(spec: &NetworkSpec, inputs: Vec<Vector>, mode: StateMode) -> Result<Vector> {
    let mut last = None;
    let sink = FnSink(|step: &crate::streams::StepView<'_>| last = Some(step.y.clone()));
    run_stream_with(spec, NetworkState::zeros(spec), IterSource::new(inputs.into_iter()), sink, RunOptions { limit: None, mode })
        .map_err(|abort| abort.error)?;
    last.ok_or(Error::EmptyTrajectory)
}

/// Perturbs `x_{t-k}` one coordinate at a time (with `t` the last index) and
/// measures how far `y_t` moves, starting every run from the zero state.
pub fn lag_sensitivity(model: Model, params: &NeuronParams, base_inputs: &[Vector], lag: usize, h: f64) -> Result<ModelSensitivity> {
    let len = base_inputs.len();
    if lag == 0 || len < lag + 1 {
        return Err(Error::LagOutOfRange { lag, len });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("perturbation {h} must be finite and positive")));
    }
    let spec = NetworkSpec::single(params.clone());
    let mode = StateMode::from(model);
    let target = len - 1 - lag;
    let base = final_output(&spec, base_inputs.to_vec(), mode)?;

    let mut sensitivity: f64 = 0.0;
    let mut identical = true;
    for j in 0..base_inputs[target].dim() {
        let mut inputs = base_inputs.to_vec();
        let mut bumped = inputs[target].as_slice().to_vec();
        bumped[j] += h;
        inputs[target] = Vector::new(bumped)?;
        let y = final_output(&spec, inputs, mode)?;
        identical &= y.iter().zip(base.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
        sensitivity = sensitivity.max(y.distance(&base) / h);
    }
    Ok(ModelSensitivity { model, sensitivity, bitwise_identical: identical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    fn inputs(n: usize, dim: usize) -> Vec<Vector> {
        (0..n)
            .map(|t| Vector::new((0..dim).map(|j| (0.3 * t as f64 + j as f64).sin()).collect()).unwrap())
            .collect()
    }

    #[test]
    fn stateless_has_no_memory() {
        let p = NeuronParams::seeded(11, 2, 3, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        for k in [1, 2, 5, 10] {
            let s = lag_sensitivity(Model::Stateless, &p, &inputs(20, 2), k, 1e-3).unwrap();
            assert_eq!(s.sensitivity, 0.0);
            assert!(s.bitwise_identical);
        }
    }

    #[test]
    fn alpha_zero_decouples_state_from_output() {
        let p = NeuronParams::seeded(11, 1, 1, 0.0, 0.9, ActivationKind::Tanh).unwrap();
        let s = lag_sensitivity(Model::Stateful, &p, &inputs(20, 1), 1, 1e-3).unwrap();
        assert_eq!(s.sensitivity, 0.0);
    }

    #[test]
    fn stateful_scalar_matches_chain_rule() {
        let (w, ws, alpha, lambda) = (0.5, 0.5, 1.0, 0.9);
        let p = NeuronParams::scalar(w, ws, 0.0, alpha, lambda, ActivationKind::Tanh).unwrap();
        let xs = inputs(20, 1);

        // Analytic oracle: dy_t/dx_{t-1} = sech^2(z_t) * alpha*W_s * (1-lambda) * sech^2(z_{t-1}) * W
        let mut s = 0.0f64;
        let mut z = Vec::new();
        for x in &xs {
            let zt = w * x[0] + alpha * ws * s + 0.0;
            s = lambda * s + (1.0 - lambda) * zt.tanh();
            z.push(zt);
        }
        let sech2 = |v: f64| 1.0 - v.tanh().powi(2);
        let n = z.len();
        let analytic = sech2(z[n - 1]) * alpha * ws * (1.0 - lambda) * sech2(z[n - 2]) * w;

        let fd = lag_sensitivity(Model::Stateful, &p, &xs, 1, 1e-6).unwrap();
        assert!((fd.sensitivity - analytic.abs()).abs() < 1e-6, "{} vs {}", fd.sensitivity, analytic);
        assert!(fd.sensitivity > 1e-4);
        assert!(!fd.bitwise_identical);
    }

    #[test]
    fn lag_range_checked() {
        let p = NeuronParams::seeded(1, 1, 1, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        assert!(matches!(
            lag_sensitivity(Model::Stateful, &p, &inputs(3, 1), 3, 1e-3),
            Err(Error::LagOutOfRange { lag: 3, len: 3 })
        ));
        assert!(matches!(lag_sensitivity(Model::Stateful, &p, &inputs(3, 1), 0, 1e-3), Err(Error::LagOutOfRange { .. })));
        assert!(lag_sensitivity(Model::Stateful, &p, &inputs(3, 1), 1, 0.0).is_err());
    }

    #[test]
    fn report_pairs_models() {
        let p = NeuronParams::scalar(0.5, 0.5, 0.0, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        let r = SensitivityReport::measure(&p, &inputs(20, 1), 1, 1e-6).unwrap();
        assert_eq!(r.stateless, 0.0);
        assert!(r.stateless_bitwise_identical);
        assert!(r.stateful > 1e-4);
    }
}
