// Checks the state guarantees on small random cases. The stateless
// baseline is probed alongside for comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamnet::analysis::{bound_probe, contraction_probe, lag_sensitivity, Model};
use streamnet::{make_signal_source, ActivationKind, NeuronParams, NeuronState, SignalKind, SignalSpec, Vector};

pub struct Guarantees {
    pub contraction_ulps: f64,
    pub max_abs_state: f64,
    pub stateless_sensitivity: f64,
    pub stateful_sensitivity: f64,
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    Vector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn run_example() -> streamnet::Result<Guarantees> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut contraction_ulps: f64 = 0.0;
    for lambda in [0.0, 0.5, 0.9] {
        let a = random_vec(&mut rng, 4);
        let b = random_vec(&mut rng, 4);
        let ys: Vec<Vector> = (0..50).map(|_| random_vec(&mut rng, 4)).collect();
        let report = contraction_probe(lambda, &a, &b, &ys)?;
        println!("lambda={lambda}: |ds| {:.3e} -> {:.3e}", report.initial_diff, report.diffs().last().unwrap());
        contraction_ulps = contraction_ulps.max(report.max_step_deviation_ulps);
    }

    let params = NeuronParams::seeded(9, 2, 2, 1.5, 0.95, ActivationKind::Tanh)?;
    let noise = SignalSpec { kind: SignalKind::WhiteNoise, noise_std: 5.0, dim: 2, ..Default::default() };
    let bound = bound_probe(&params, &NeuronState::initial_for(&params), make_signal_source(&noise, None)?, 20_000, None)?;
    println!("tanh neuron, 20000 noisy steps: max |s| = {} (bound {})", bound.max_abs_state, bound.bound);

    let inputs: Vec<Vector> = (0..16).map(|_| random_vec(&mut rng, 1)).collect();
    let scalar = NeuronParams::scalar(0.5, 0.5, 0.0, 1.0, 0.9, ActivationKind::Tanh)?;
    let stateless = lag_sensitivity(Model::Stateless, &scalar, &inputs, 1, 1e-6)?;
    let stateful = lag_sensitivity(Model::Stateful, &scalar, &inputs, 1, 1e-6)?;
    println!("dy_t/dx_(t-1): stateless {} stateful {:.4e}", stateless.sensitivity, stateful.sensitivity);

    Ok(Guarantees {
        contraction_ulps,
        max_abs_state: bound.max_abs_state,
        stateless_sensitivity: stateless.sensitivity,
        stateful_sensitivity: stateful.sensitivity,
    })
}

fn main() {
    let g = run_example().expect("verify example failed");
    println!("worst contraction deviation: {} ulps", g.contraction_ulps);
}
