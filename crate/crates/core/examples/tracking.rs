// Tracks a noisy sinusoid with and without state and compares the error
// against the clean signal.

use streamnet::analysis::{tracking_experiment, TrackingConfig, TrackingReport};

pub fn run_example() -> streamnet::Result<TrackingReport> {
    let report = tracking_experiment(&TrackingConfig::default())?;
    println!("window of {} steps after {} transient steps", report.window, report.transient);
    println!("stateless MSE {:.6}", report.mse_stateless);
    println!("stateful  MSE {:.6} (readout divided by gain {:.4})", report.mse_stateful, report.gain);
    Ok(report)
}

fn main() {
    run_example().expect("tracking example failed");
}
