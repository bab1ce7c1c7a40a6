// Times an early and a late window of a long stream and compares the
// engine's resident bytes at both points.

use streamnet::executor::{measure_constant_cost, CostReport, CostWindows};
use streamnet::{make_signal_source, ActivationKind, NetworkSpec, NeuronParams, SignalKind, SignalSpec};

pub fn run_example() -> streamnet::Result<CostReport> {
    let spec = NetworkSpec::new(vec![
        NeuronParams::seeded(1, 4, 8, 1.0, 0.9, ActivationKind::Tanh)?,
        NeuronParams::seeded(2, 8, 4, 1.0, 0.9, ActivationKind::Tanh)?,
    ])?;
    let signal = SignalSpec { kind: SignalKind::WhiteNoise, noise_std: 1.0, dim: 4, ..Default::default() };
    let steps = 200_000;
    let report = measure_constant_cost(&spec, make_signal_source(&signal, Some(steps))?, steps, CostWindows::default())?;
    println!(
        "early {:?}: {:.1} ns/step, late {:?}: {:.1} ns/step, ratio {:.3}",
        report.early_window,
        report.early_mean_ns.unwrap_or(f64::NAN),
        report.late_window,
        report.late_mean_ns.unwrap_or(f64::NAN),
        report.ratio.unwrap_or(f64::NAN)
    );
    println!("engine bytes: {} then {}", report.memory_early, report.memory_late);
    Ok(report)
}

fn main() {
    run_example().expect("constant cost example failed");
}
