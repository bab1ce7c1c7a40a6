use streamnet::analysis::{phase_trajectory, tracking_experiment, PhaseConfig, TrackingConfig};
use streamnet::executor::{load_snapshot, save_snapshot, Snapshot};
use streamnet::streams::{IterSource, NullSink, VecSink};
use streamnet::{
    fused_consumption_guard, make_signal_source, run_stream, ActivationKind, NetworkSpec, NetworkState, NeuronParams,
    SignalKind, SignalSpec, StateMode, Vector,
};

// Distinctive values that a tanh network cannot reproduce in its state.
fn marked_inputs(n: usize) -> Vec<Vector> {
    (0..n).map(|i| Vector::new(vec![123.456_789 + i as f64 * 1e-3, -98.765_432_1 - i as f64]).unwrap()).collect()
}

fn spec() -> NetworkSpec {
    NetworkSpec::new(vec![
        NeuronParams::seeded(21, 2, 3, 1.0, 0.9, ActivationKind::Tanh).unwrap(),
        NeuronParams::seeded(22, 3, 2, 0.5, 0.5, ActivationKind::Tanh).unwrap(),
    ])
    .unwrap()
}

fn contains_f64(haystack: &[u8], v: f64) -> bool {
    let needle = v.to_le_bytes();
    haystack.windows(8).any(|w| w == needle)
}

#[test]
fn snapshots_hold_no_input_values() {
    let spec = spec();
    let inputs = marked_inputs(64);
    let out = run_stream(&spec, NetworkState::zeros(&spec), IterSource::new(inputs.clone().into_iter()), NullSink, None)
        .unwrap();
    let bytes = save_snapshot(&spec, &out.state).unwrap().to_bytes();
    for x in &inputs {
        for &v in x.iter() {
            assert!(!contains_f64(&bytes, v), "snapshot contains input value {v}");
        }
    }
    // header + 2 layers of (dim + values) + step counter; nothing else
    assert_eq!(bytes.len(), 8 + 4 + 32 + 4 + (4 + 3 * 8) + (4 + 2 * 8) + 8);
}

#[test]
fn engine_state_and_records_hold_no_input_values() {
    let spec = spec();
    let inputs = marked_inputs(64);
    let mut sink = VecSink::default();
    let out = run_stream(&spec, NetworkState::zeros(&spec), IterSource::new(inputs.clone().into_iter()), &mut sink, None)
        .unwrap();
    let mut retained: Vec<f64> = out.state.flat();
    for r in &sink.records {
        retained.extend(r.y.iter());
        retained.extend(r.s.iter());
        assert!(r.r.is_none());
    }
    for x in &inputs {
        for v in x.iter() {
            assert!(!retained.contains(v));
        }
    }
    assert!(retained.iter().all(|v| v.abs() <= 1.0));

    let json = serde_json::to_value(&sink.records[0]).unwrap();
    let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["r", "s", "t", "y"]);
    let summary = serde_json::to_string(&out.summary).unwrap();
    assert!(!summary.contains("123.45"));
}

#[test]
fn resume_at_500_equals_uninterrupted_1000() {
    let spec = spec();
    let signal = SignalSpec { kind: SignalKind::NoisySinusoid, noise_std: 0.5, dim: 2, seed: 77, ..Default::default() };

    let straight = run_stream(&spec, NetworkState::zeros(&spec), make_signal_source(&signal, Some(1000)).unwrap(), NullSink, None)
        .unwrap();

    let mut source = make_signal_source(&signal, Some(1000)).unwrap();
    let half = run_stream(&spec, NetworkState::zeros(&spec), &mut source, NullSink, Some(500)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.snap");
    save_snapshot(&spec, &half.state).unwrap().write_to(&path).unwrap();
    let restored = load_snapshot(&spec, &Snapshot::read_from(&path).unwrap()).unwrap();
    assert_eq!(restored.step(), 500);
    let resumed = run_stream(&spec, restored, &mut source, NullSink, None).unwrap();

    assert_eq!(resumed.state.step(), 1000);
    let a: Vec<u64> = resumed.state.flat().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u64> = straight.state.flat().iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);
    assert_eq!(resumed.summary.final_state_digest, straight.summary.final_state_digest);
}

#[test]
fn consumption_matches_steps_for_every_experiment() {
    let phase = PhaseConfig {
        params: NeuronParams::scalar(1.0, 0.5, 0.0, 0.5, 0.9, ActivationKind::Tanh).unwrap(),
        signal: SignalSpec::default(),
        total_steps: 1200,
        burn_in: 200,
    };
    for mode in [StateMode::Enabled, StateMode::Disabled] {
        let t = phase_trajectory(&phase, mode).unwrap();
        assert_eq!((t.consumed, t.steps), (1200, 1200));
    }
    let r = tracking_experiment(&TrackingConfig { steps: 3000, transient: 500, ..Default::default() }).unwrap();
    assert_eq!((r.consumed_stateful, r.steps_stateful), (3000, 3000));
    assert_eq!((r.consumed_stateless, r.steps_stateless), (3000, 3000));

    let spec = spec();
    let mut guard = fused_consumption_guard(IterSource::new(marked_inputs(333).into_iter()));
    let out = run_stream(&spec, NetworkState::zeros(&spec), &mut guard, NullSink, None).unwrap();
    assert_eq!(guard.count(), out.summary.steps);
    assert_eq!(guard.count(), 333);
}
