macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }
    };
}

example!(passthrough);
example!(verify_guarantees);
example!(phase_space);
example!(retention);
example!(tracking);
example!(snapshot_resume);
example!(constant_cost);

use streamnet::analysis::AttractorKind;

#[test]
fn passthrough_runs_every_record() {
    assert_eq!(passthrough::run_example().unwrap().steps, 4);
}

#[test]
fn guarantees_hold() {
    let g = verify_guarantees::run_example().unwrap();
    assert!(g.contraction_ulps <= 64.0);
    assert!(g.max_abs_state <= 1.0);
    assert_eq!(g.stateless_sensitivity, 0.0);
    assert!(g.stateful_sensitivity > 0.0);
}

#[test]
fn phase_dichotomy() {
    assert_eq!(phase_space::run_example().unwrap(), (AttractorKind::LimitCycle, AttractorKind::FixedPoint));
}

#[test]
fn retention_half_lives() {
    let h = retention::run_example().unwrap();
    assert_eq!(h, vec![(0.5, Some(1)), (0.9, Some(7)), (0.99, Some(69))]);
}

#[test]
fn tracking_prefers_state() {
    let r = tracking::run_example().unwrap();
    assert!(r.mse_stateful < r.mse_stateless);
}

#[test]
fn snapshot_resume_is_exact() {
    assert!(snapshot_resume::run_example().unwrap());
}

#[test]
fn constant_cost_memory() {
    let r = constant_cost::run_example().unwrap();
    assert!(r.memory_constant());
    assert!(r.ratio.is_some());
}
