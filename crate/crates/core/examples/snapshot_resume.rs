// Stops a run at step 500, saves the state, reloads it and finishes the
// stream; the result matches an uninterrupted run bit for bit.

use streamnet::executor::{load_snapshot, save_snapshot, Snapshot};
use streamnet::streams::NullSink;
use streamnet::{make_signal_source, run_stream, ActivationKind, NetworkSpec, NetworkState, NeuronParams, SignalSpec};

pub fn run_example() -> Result<bool, Box<dyn std::error::Error>> {
    let spec = NetworkSpec::new(vec![
        NeuronParams::seeded(3, 1, 4, 1.0, 0.9, ActivationKind::Tanh)?,
        NeuronParams::seeded(4, 4, 2, 0.5, 0.7, ActivationKind::Tanh)?,
    ])?;
    let signal = SignalSpec { noise_std: 0.2, kind: streamnet::SignalKind::NoisySinusoid, ..Default::default() };

    let straight = run_stream(&spec, NetworkState::zeros(&spec), make_signal_source(&signal, Some(1_000))?, NullSink, None)?;

    let mut source = make_signal_source(&signal, Some(1_000))?;
    let first = run_stream(&spec, NetworkState::zeros(&spec), &mut source, NullSink, Some(500))?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("state.snap");
    save_snapshot(&spec, &first.state)?.write_to(&path)?;
    println!("saved step {} to {} ({} bytes)", first.state.step(), path.display(), std::fs::metadata(&path)?.len());

    let restored = load_snapshot(&spec, &Snapshot::read_from(&path)?)?;
    let resumed = run_stream(&spec, restored, &mut source, NullSink, None)?;

    let identical = resumed.state.digest() == straight.state.digest();
    println!("resumed step {}: state bit-identical to uninterrupted run: {identical}", resumed.state.step());
    Ok(identical)
}

fn main() {
    assert!(run_example().expect("snapshot example failed"));
}
