// Lets the state decay freely and prints `|s_t|` next to `lambda^t`.

use streamnet::analysis::retention_curve;
use streamnet::{ActivationKind, Vector};

pub fn run_example() -> streamnet::Result<Vec<(f64, Option<u64>)>> {
    let s0 = Vector::new(vec![1.0])?;
    let mut half_lives = Vec::new();
    for lambda in [0.5, 0.9, 0.99] {
        let curve = retention_curve(lambda, &s0, 1_000, ActivationKind::Tanh)?;
        println!("lambda = {lambda}");
        for t in [0usize, 1, 10, 100, 1000] {
            println!("  t={t:<5} |s|={:<24e} lambda^t={:e}", curve.norms()[t], lambda.powi(t as i32));
        }
        println!("  half-life {:?}, worst gap {} ulps", curve.half_life(), curve.max_deviation_ulps());
        half_lives.push((lambda, curve.half_life()));
    }
    Ok(half_lives)
}

fn main() {
    run_example().expect("retention example failed");
}
