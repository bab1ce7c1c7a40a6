// Drives one tanh neuron with a sinusoid and classifies the post-burn-in
// phase portrait with the state on and off.

use streamnet::analysis::{classify_with, phase_trajectory, AttractorKind, AttractorThresholds, PhaseConfig};
use streamnet::{ActivationKind, NeuronParams, SignalSpec, StateMode};

pub fn run_example() -> streamnet::Result<(AttractorKind, AttractorKind)> {
    let config = PhaseConfig {
        params: NeuronParams::scalar(1.0, 0.5, 0.0, 0.5, 0.9, ActivationKind::Tanh)?,
        signal: SignalSpec::default(),
        total_steps: 2_500,
        burn_in: 500,
    };
    let mut kinds = Vec::new();
    for mode in [StateMode::Enabled, StateMode::Disabled] {
        let traj = phase_trajectory(&config, mode)?;
        let v = classify_with(&traj.points, &AttractorThresholds::default())?;
        println!(
            "{mode:?}: {:?} diameter={:.4} period={:?} ({} points)",
            v.classification,
            v.diameter,
            v.period,
            traj.points.len()
        );
        kinds.push(v.classification);
    }
    Ok((kinds[0], kinds[1]))
}

fn main() {
    run_example().expect("phase example failed");
}
