//! Probes and experiments over the neuron and executor.

mod bound;
mod contraction;
mod phase;
mod retention;
mod sensitivity;
mod tracking;
pub mod verify;

pub use bound::{bound_probe, BoundReport, BOUND_SLACK_EPS};
pub use contraction::{contraction_probe, ContractionReport, ContractionStep};
pub use phase::{
    classify_attractor, classify_with, diameter, phase_trajectory, AttractorKind, AttractorThresholds, AttractorVerdict,
    PhaseConfig, PhasePoint, PhaseTrajectory,
};
pub use retention::{retention_curve, RetentionCurve};
pub use sensitivity::{lag_sensitivity, Model, ModelSensitivity, SensitivityReport};
pub use tracking::{smoothing_gain, tracking_experiment, TrackingConfig, TrackingReport, TrackingSeries};
pub use verify::{run_suite, run_suites, CheckOutcome, Suite, VerifyConfig};
