use serde::Serialize;

use crate::error::{Error, Result};
use crate::neuron::state_update_only;
use crate::params::check_lambda;
use crate::tensor::{ulps_at_scale, Vector};

/// One step of two trajectories driven by the same outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionStep {
    pub t: usize,
    /// `|s_t - s'_t|`
    pub diff: f64,
    /// `diff_t / diff_{t-1}`, defined while the previous difference is non-zero.
    pub ratio: Option<f64>,
    /// `|diff_t - lambda * diff_{t-1}|` in ulps of the step's operand scale.
    pub step_deviation_ulps: f64,
    /// `|diff_t - lambda^t * diff_0|` in ulps of the largest operand seen so far.
    pub closed_form_deviation_ulps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub lambda: f64,
    pub initial_diff: f64,
    pub steps: Vec<ContractionStep>,
    /// Largest `|diff_t - lambda * diff_{t-1}|` in absolute terms.
    pub max_abs_deviation: f64,
    pub max_step_deviation_ulps: f64,
    pub max_closed_form_deviation_ulps: f64,
}

impl ContractionReport {
    /// The difference sequence including the initial one.
    pub fn diffs(&self) -> Vec<f64> {
        std::iter::once(self.initial_diff).chain(self.steps.iter().map(|s| s.diff)).collect()
    }

    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().filter_map(|s| s.ratio)
    }
}

/// Evolves two states under the same output sequence and measures how the
/// gap between them shrinks.
///
/// The state update is affine in the previous state with slope `lambda`, so
/// the gap should shrink by exactly `lambda` per step. Deviations are reported
/// in ulps of the operand magnitudes, which is where the rounding happens.
pub fn contraction_probe(lambda: f64, s_a: &Vector, s_b: &Vector, y_seq: &[Vector]) -> Result<ContractionReport> {
    check_lambda(lambda)?;
    if s_a.dim() != s_b.dim() {
        return Err(Error::dims("second state", s_a.dim(), s_b.dim()));
    }
    if let Some(y) = y_seq.iter().find(|y| y.dim() != s_a.dim()) {
        return Err(Error::dims("shared output", s_a.dim(), y.dim()));
    }
    if s_a == s_b {
        return Err(Error::DegenerateInput("states are identical"));
    }

    let initial_diff = s_a.distance(s_b);
    let mut a = s_a.clone();
    let mut b = s_b.clone();
    let mut prev = initial_diff;
    let mut running_scale = a.max_abs().max(b.max_abs());
    let mut report = ContractionReport {
        lambda,
        initial_diff,
        steps: Vec::with_capacity(y_seq.len()),
        max_abs_deviation: 0.0,
        max_step_deviation_ulps: 0.0,
        max_closed_form_deviation_ulps: 0.0,
    };

    for (i, y) in y_seq.iter().enumerate() {
        let t = i + 1;
        let step_scale = a.max_abs().max(b.max_abs()).max(y.max_abs()).max(prev);
        running_scale = running_scale.max(step_scale);
        a = state_update_only(lambda, &a, y)?;
        b = state_update_only(lambda, &b, y)?;
        let diff = a.distance(&b);

        let expected_step = lambda * prev;
        let expected_closed = lambda.powf(t as f64) * initial_diff;
        let step_dev = ulps_at_scale(diff, expected_step, step_scale);
        let closed_dev = ulps_at_scale(diff, expected_closed, running_scale);

        report.max_abs_deviation = report.max_abs_deviation.max((diff - expected_step).abs());
        report.max_step_deviation_ulps = report.max_step_deviation_ulps.max(step_dev);
        report.max_closed_form_deviation_ulps = report.max_closed_form_deviation_ulps.max(closed_dev);
        report.steps.push(ContractionStep {
            t,
            diff,
            ratio: (prev != 0.0).then(|| diff / prev),
            step_deviation_ulps: step_dev,
            closed_form_deviation_ulps: closed_dev,
        });
        prev = diff;
    }
    Ok(report)
}
