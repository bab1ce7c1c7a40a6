//! The stream neuron step kernel and its stateless counterpart.
//!
//! One step maps `(x_t, s_{t-1})` to `(y_t, s_t)`:
//!
//! ```text
//! z_t = W x_t + alpha * W_s s_{t-1} + b
//! y_t = sigma(z_t)
//! s_t = lambda * s_{t-1} + (1 - lambda) * y_t
//! ```
//!
//! The state is the only thing carried from one step to the next. The input
//! is read during the step and never stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{check_lambda, NeuronParams};
use crate::tensor::Vector;

/// Persistent state of one neuron plus the number of steps it has taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    s: Vector,
    step: u64,
}

impl NeuronState {
    /// Zero state at step 0.
    pub fn zeros(dim: usize) -> Self {
        NeuronState { s: Vector::zeros(dim), step: 0 }
    }

    pub fn new(s: Vector, step: u64) -> Self {
        NeuronState { s, step }
    }

    pub fn initial_for(params: &NeuronParams) -> Self {
        Self::zeros(params.output_dim())
    }

    pub fn s(&self) -> &Vector {
        &self.s
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn resident_bytes(&self) -> usize {
        self.s.resident_bytes()
    }
}

/// Result of one stream step. Holds exactly the output and the next state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub y: Vector,
    pub next_state: NeuronState,
}

fn check_step_dims(p: &NeuronParams, state: &NeuronState, x: &Vector) -> Result<()> {
    if x.dim() != p.input_dim() {
        return Err(Error::dims("input", p.input_dim(), x.dim()));
    }
    if state.s.dim() != p.output_dim() {
        return Err(Error::dims("state", p.output_dim(), state.s.dim()));
    }
    Ok(())
}

/// Advances one neuron by one step.
///
/// Any overflow to a non-finite intermediate aborts with
/// [`Error::NonFiniteValue`]; the caller's state is left untouched.
pub fn neuron_step(p: &NeuronParams, state: &NeuronState, x: &Vector) -> Result<StepOutput> {
    check_step_dims(p, state, x)?;
    let drive = p.w().mul_raw(x)?;
    let feedback = p.w_s().mul_raw(&state.s)?;
    let alpha = p.alpha();
    let z: Vec<f64> = drive
        .iter()
        .zip(&feedback)
        .zip(p.b().iter())
        .map(|((wx, ws), b)| wx + alpha * ws + b)
        .collect();
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteValue("pre-activation"));
    }
    let y = p.activation().apply(&Vector::from_finite(z));
    let s = blend(p.lambda(), &state.s, &y)?;
    Ok(StepOutput {
        y,
        next_state: NeuronState { s, step: state.step + 1 },
    })
}

/// Output of a memoryless neuron: `sigma(W x + b)`. Reads and writes no state.
pub fn stateless_step(p: &NeuronParams, x: &Vector) -> Result<Vector> {
    if x.dim() != p.input_dim() {
        return Err(Error::dims("input", p.input_dim(), x.dim()));
    }
    let z: Vec<f64> = p
        .w()
        .mul_raw(x)?
        .iter()
        .zip(p.b().iter())
        .map(|(wx, b)| wx + b)
        .collect();
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteValue("pre-activation"));
    }
    Ok(p.activation().apply(&Vector::from_finite(z)))
}

/// The leaky state update on its own: `lambda * s_prev + (1 - lambda) * y`.
pub fn state_update_only(lambda: f64, s_prev: &Vector, y: &Vector) -> Result<Vector> {
    check_lambda(lambda)?;
    if s_prev.dim() != y.dim() {
        return Err(Error::dims("state update operand", s_prev.dim(), y.dim()));
    }
    blend(lambda, s_prev, y)
}

// Evaluated literally as written. Rewriting it as s + (1 - lambda)(y - s)
// changes the rounding and breaks the exact contraction identity.
#[inline]
fn blend(lambda: f64, s_prev: &Vector, y: &Vector) -> Result<Vector> {
    let keep = 1.0 - lambda;
    let s: Vec<f64> = s_prev
        .iter()
        .zip(y.iter())
        .map(|(s, y)| lambda * s + keep * y)
        .collect();
    Vector::checked(s, "state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    /// Three-line scalar evaluation of the update, kept apart from the kernel.
    fn scalar_oracle(w: f64, ws: f64, b: f64, alpha: f64, lambda: f64, s: f64, x: f64) -> (f64, f64, f64) {
        let z = w * x + alpha * ws * s + b;
        let y = z.tanh();
        (z, y, lambda * s + (1.0 - lambda) * y)
    }

    #[test]
    fn pass_through_configuration() {
        let p = NeuronParams::scalar(1.0, 0.0, 0.0, 0.0, 0.0, ActivationKind::Identity).unwrap();
        let out = neuron_step(&p, &NeuronState::zeros(1), &v(&[0.7])).unwrap();
        assert_eq!(out.y.as_slice(), &[0.7]);
        assert_eq!(out.next_state.s().as_slice(), &[0.7]);
        assert_eq!(out.next_state.step(), 1);
    }

    #[test]
    fn zero_output_gives_pure_decay() {
        let p = NeuronParams::scalar(1.0, 0.0, 0.0, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        let out = neuron_step(&p, &NeuronState::new(v(&[1.0]), 0), &v(&[0.0])).unwrap();
        assert_eq!(out.y.as_slice(), &[0.0]);
        assert_eq!(out.next_state.s().as_slice(), &[0.9]);
    }

    #[test]
    fn scalar_tanh_step_matches_oracle() {
        let (z, y, s) = scalar_oracle(0.5, 0.25, 0.1, 1.0, 0.8, 0.2, 1.0);
        assert!((z - 0.65).abs() < 1e-15);
        assert!((y - 0.5717).abs() < 5e-5);
        assert!((s - 0.2743).abs() < 5e-5);

        let p = NeuronParams::scalar(0.5, 0.25, 0.1, 1.0, 0.8, ActivationKind::Tanh).unwrap();
        let out = neuron_step(&p, &NeuronState::new(v(&[0.2]), 0), &v(&[1.0])).unwrap();
        assert_eq!(out.y[0], y);
        assert_eq!(out.next_state.s()[0], s);
    }

    #[test]
    fn stateless_examples() {
        let p = NeuronParams::scalar(2.0, 0.0, 1.0, 0.0, 0.5, ActivationKind::Identity).unwrap();
        let x = v(&[3.0]);
        assert_eq!(stateless_step(&p, &x).unwrap().as_slice(), &[7.0]);
        assert_eq!(stateless_step(&p, &x).unwrap(), stateless_step(&p, &x).unwrap());

        let p = NeuronParams::scalar(0.5, 0.3, 0.1, 1.0, 0.5, ActivationKind::Tanh).unwrap();
        let y = stateless_step(&p, &v(&[1.0])).unwrap();
        assert_eq!(y[0], 0.6f64.tanh());
        assert!((y[0] - 0.5370).abs() < 5e-5);
    }

    #[test]
    fn update_only_examples() {
        assert_eq!(state_update_only(0.5, &v(&[1.0]), &v(&[0.0])).unwrap().as_slice(), &[0.5]);
        assert_eq!(state_update_only(0.0, &v(&[5.0]), &v(&[2.0])).unwrap().as_slice(), &[2.0]);
        assert_eq!(state_update_only(0.9, &v(&[1.0]), &v(&[1.0])).unwrap().as_slice(), &[1.0]);
        assert!(matches!(state_update_only(1.0, &v(&[1.0]), &v(&[1.0])), Err(Error::LambdaOutOfRange(_))));
        assert!(matches!(
            state_update_only(0.5, &v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn dimension_errors() {
        let p = NeuronParams::seeded(1, 2, 3, 1.0, 0.5, ActivationKind::Tanh).unwrap();
        assert!(matches!(
            neuron_step(&p, &NeuronState::zeros(3), &v(&[1.0])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            neuron_step(&p, &NeuronState::zeros(2), &v(&[1.0, 1.0])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(stateless_step(&p, &v(&[1.0])).is_err());
    }

    #[test]
    fn overflow_aborts_instead_of_propagating() {
        let p = NeuronParams::scalar(f64::MAX, 0.0, f64::MAX, 0.0, 0.5, ActivationKind::Identity).unwrap();
        let state = NeuronState::zeros(1);
        let err = neuron_step(&p, &state, &v(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue(_)));
        assert_eq!(state.s().as_slice(), &[0.0]);
    }

    #[test]
    fn step_output_carries_only_output_and_state() {
        let StepOutput { y, next_state } = StepOutput {
            y: Vector::zeros(1),
            next_state: NeuronState::zeros(1),
        };
        let NeuronState { s, step } = next_state;
        assert_eq!((y.dim(), s.dim(), step), (1, 1, 0));
    }

    fn arb_params(max_dim: usize) -> impl Strategy<Value = (NeuronParams, u64)> {
        (1..=max_dim, 1..=max_dim, 0.0f64..0.999, -3.0f64..3.0, any::<u64>()).prop_map(|(i, o, lambda, alpha, seed)| {
            let p = NeuronParams::seeded(seed, i, o, alpha, lambda, ActivationKind::Tanh).unwrap();
            (p, seed)
        })
    }

    proptest! {
        #[test]
        fn deterministic((p, _) in arb_params(4), xs in prop::collection::vec(-10.0f64..10.0, 4)) {
            let x = Vector::new(xs[..p.input_dim()].to_vec()).unwrap();
            let s = NeuronState::zeros(p.output_dim());
            let a = neuron_step(&p, &s, &x).unwrap();
            let b = neuron_step(&p, &s, &x).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn alpha_zero_zero_state_matches_stateless((p, _) in arb_params(4), xs in prop::collection::vec(-10.0f64..10.0, 4)) {
            let p = p.with_alpha(0.0).unwrap();
            let x = Vector::new(xs[..p.input_dim()].to_vec()).unwrap();
            let out = neuron_step(&p, &NeuronState::zeros(p.output_dim()), &x).unwrap();
            prop_assert_eq!(out.y, stateless_step(&p, &x).unwrap());
        }

        #[test]
        fn step_counter_advances_by_one((p, _) in arb_params(3), n in 1usize..50) {
            let mut state = NeuronState::zeros(p.output_dim());
            let x = Vector::filled(p.input_dim(), 0.3).unwrap();
            for k in 1..=n {
                state = neuron_step(&p, &state, &x).unwrap().next_state;
                prop_assert_eq!(state.step(), k as u64);
            }
        }

        #[test]
        fn contraction_equality(
            lambda in 0.0f64..1.0,
            sa in prop::collection::vec(-100.0f64..100.0, 5),
            sb in prop::collection::vec(-100.0f64..100.0, 5),
            y in prop::collection::vec(-100.0f64..100.0, 5),
        ) {
            let (sa, sb, y) = (v(&sa), v(&sb), v(&y));
            let lhs = state_update_only(lambda, &sa, &y).unwrap().distance(&state_update_only(lambda, &sb, &y).unwrap());
            let rhs = lambda * sa.distance(&sb);
            let scale = sa.max_abs().max(sb.max_abs()).max(y.max_abs());
            prop_assert!(crate::tensor::ulps_at_scale(lhs, rhs, scale) <= 4.0,
                "lhs {lhs} rhs {rhs} scale {scale}");
        }
    }

    #[test]
    fn bounded_state_long_run() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for draw in 0..4 {
            let dim = 1 + draw % 3;
            let (alpha, lambda) = (rng.random_range(-4.0..4.0), rng.random_range(0.0..0.999));
            let p = NeuronParams::random(&mut rng, dim, dim, alpha, lambda, ActivationKind::Tanh).unwrap();
            let mut state = NeuronState::zeros(dim);
            for _ in 0..100_000 {
                let x = Vector::new((0..dim).map(|_| rng.random_range(-50.0..50.0)).collect()).unwrap();
                state = neuron_step(&p, &state, &x).unwrap().next_state;
                assert!(state.s().max_abs() <= 1.0 + 4.0 * f64::EPSILON);
            }
        }
    }
}
