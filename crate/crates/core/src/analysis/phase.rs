//! Phase-space trajectories and attractor classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::executor::{run_stream_with, NetworkSpec, NetworkState, RunOptions, StateMode};
use crate::params::NeuronParams;
use crate::streams::{fused_consumption_guard, make_signal_source, FnSink, SignalSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub params: NeuronParams,
    pub signal: SignalSpec,
    pub total_steps: u64,
    pub burn_in: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub mode: StateMode,
    /// Post-burn-in points, one per step.
    pub points: Vec<PhasePoint>,
    pub steps: u64,
    /// Items the consumption guard saw leave the source.
    pub consumed: u64,
}

/// Runs one neuron over the configured signal and embeds its state.
///
/// Scalar state uses the delay embedding `(s_{t-1}, s_t)`; vector state uses
/// its first two components. With state disabled the reported state is zero,
/// so every point is the origin.
pub fn phase_trajectory(config: &PhaseConfig, mode: StateMode) -> Result<PhaseTrajectory> {
    let spec = NetworkSpec::single(config.params.clone());
    let source = make_signal_source(&config.signal, Some(config.total_steps))?;
    let mut guard = fused_consumption_guard(source);
    let scalar = config.params.output_dim() == 1;
    let burn_in = config.burn_in;

    let mut points = Vec::with_capacity(config.total_steps.saturating_sub(burn_in) as usize);
    let mut prev = 0.0;
    let sink = FnSink(|step: &crate::streams::StepView<'_>| {
        let s = step.layers[0].s();
        let point = if scalar {
            PhasePoint { x: prev, y: s[0] }
        } else {
            PhasePoint { x: s[0], y: s[1] }
        };
        prev = s[0];
        if step.t > burn_in {
            points.push(point);
        }
    });
    let out = run_stream_with(&spec, NetworkState::zeros(&spec), &mut guard, sink, RunOptions { limit: None, mode })
        .map_err(|abort| abort.error)?;
    Ok(PhaseTrajectory { mode, points, steps: out.summary.steps, consumed: guard.count() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttractorKind {
    FixedPoint,
    LimitCycle,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorVerdict {
    pub classification: AttractorKind,
    /// Largest distance between any two points.
    pub diameter: f64,
    /// For the detected (or best candidate) period, the largest
    /// `|P_{i+p} - P_i|` over the trajectory.
    pub recurrence_distance: Option<f64>,
    pub period: Option<usize>,
    /// Mean of all points.
    pub center: PhasePoint,
    pub eps_fp: f64,
    pub eps_rec: f64,
}

/// Classification thresholds. `None` picks the default relative to the data:
/// `eps_fp = 1e-6 (1 + scale)` and `eps_rec = 1e-3 * diameter`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttractorThresholds {
    pub eps_fp: Option<f64>,
    pub eps_rec: Option<f64>,
    pub min_period: usize,
}

impl Default for AttractorThresholds {
    fn default() -> Self {
        AttractorThresholds { eps_fp: None, eps_rec: None, min_period: 3 }
    }
}

pub fn diameter(points: &[PhasePoint]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    best
}

impl AttractorThresholds {
    /// Resolves defaults against a trajectory; returns `(eps_fp, eps_rec)`.
    pub fn resolve(&self, points: &[PhasePoint], diameter: f64) -> (f64, f64) {
        let scale = points.iter().fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
        (
            self.eps_fp.unwrap_or(1e-6 * (1.0 + scale)),
            self.eps_rec.unwrap_or(1e-3 * diameter),
        )
    }
}

/// Classifies with thresholds resolved from [`AttractorThresholds`].
pub fn classify_with(points: &[PhasePoint], thresholds: &AttractorThresholds) -> Result<AttractorVerdict> {
    if points.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let diam = diameter(points);
    let (eps_fp, eps_rec) = thresholds.resolve(points, diam);
    classify_inner(points, diam, eps_fp, eps_rec, thresholds.min_period)
}

/// Fixed point if the trajectory fits in `eps_fp`; limit cycle if there is a
/// lag `p >= min_period` with `|P_{i+p} - P_i| <= eps_rec` for every `i`
/// (checked over at least one full repeat); unclassified otherwise.
pub fn classify_attractor(points: &[PhasePoint], eps_fp: f64, eps_rec: f64, min_period: usize) -> Result<AttractorVerdict> {
    if points.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(eps_fp > 0.0 && eps_rec > 0.0) {
        return Err(Error::InvalidInput("classification thresholds must be positive".into()));
    }
    classify_inner(points, diameter(points), eps_fp, eps_rec, min_period)
}

fn classify_inner(
    points: &[PhasePoint],
    diameter: f64,
    eps_fp: f64,
    eps_rec: f64,
    min_period: usize,
) -> Result<AttractorVerdict> {
    let n = points.len();
    let center = PhasePoint {
        x: points.iter().map(|p| p.x).sum::<f64>() / n as f64,
        y: points.iter().map(|p| p.y).sum::<f64>() / n as f64,
    };
    let mut verdict = AttractorVerdict {
        classification: AttractorKind::Unclassified,
        diameter,
        recurrence_distance: None,
        period: None,
        center,
        eps_fp,
        eps_rec,
    };
    if diameter <= eps_fp {
        verdict.classification = AttractorKind::FixedPoint;
        return Ok(verdict);
    }

    let mut best: Option<f64> = None;
    for p in min_period.max(1)..=n / 2 {
        if points[p].distance(&points[0]) > eps_rec {
            continue;
        }
        let worst = (0..n - p).map(|i| points[i + p].distance(&points[i])).fold(0.0f64, f64::max);
        if worst <= eps_rec {
            verdict.classification = AttractorKind::LimitCycle;
            verdict.recurrence_distance = Some(worst);
            verdict.period = Some(p);
            return Ok(verdict);
        }
        best = Some(best.map_or(worst, |b: f64| b.min(worst)));
    }
    verdict.recurrence_distance = best;
    Ok(verdict)
}
