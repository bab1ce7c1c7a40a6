//! Stream neuron parameters and their validation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, Vector};

/// Unvalidated parameter values as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    /// Input weights, `out x in`, row-major.
    pub w: Vec<Vec<f64>>,
    /// State feedback weights, `out x out`.
    pub w_s: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub activation: ActivationKind,
}

/// Checks every parameter invariant and reports the first one violated.
///
/// Order of checks: decay range, shapes, finiteness.
pub fn validate_params(p: &RawParams) -> Result<()> {
    check_lambda(p.lambda)?;

    let out = p.w.len();
    let cols = p.w.first().map_or(0, Vec::len);
    if out == 0 || cols == 0 {
        return Err(Error::dims("W must be non-empty; rows", 1, out.min(cols)));
    }
    if let Some(row) = p.w.iter().find(|r| r.len() != cols) {
        return Err(Error::dims("W row length", cols, row.len()));
    }
    if p.w_s.len() != out {
        return Err(Error::dims("W_s rows", out, p.w_s.len()));
    }
    if let Some(row) = p.w_s.iter().find(|r| r.len() != out) {
        return Err(Error::dims("W_s cols", out, row.len()));
    }
    if p.b.len() != out {
        return Err(Error::dims("bias length", out, p.b.len()));
    }

    if !p.alpha.is_finite() {
        return Err(Error::NonFiniteValue("alpha"));
    }
    let all_finite = |rows: &[Vec<f64>]| rows.iter().flatten().all(|v| v.is_finite());
    if !all_finite(&p.w) {
        return Err(Error::NonFiniteValue("W"));
    }
    if !all_finite(&p.w_s) {
        return Err(Error::NonFiniteValue("W_s"));
    }
    if !p.b.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteValue("bias"));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda))
    }
}

/// Validated parameters of one stream neuron (a layer of `out` units).
///
/// Immutable once built; every instance satisfies the invariants checked
/// by [`validate_params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct NeuronParams {
    w: Matrix,
    w_s: Matrix,
    b: Vector,
    alpha: f64,
    lambda: f64,
    activation: ActivationKind,
}

impl NeuronParams {
    pub fn new(
        w: Matrix,
        w_s: Matrix,
        b: Vector,
        alpha: f64,
        lambda: f64,
        activation: ActivationKind,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        let out = w.rows();
        if w_s.rows() != out {
            return Err(Error::dims("W_s rows", out, w_s.rows()));
        }
        if w_s.cols() != out {
            return Err(Error::dims("W_s cols", out, w_s.cols()));
        }
        if b.dim() != out {
            return Err(Error::dims("bias length", out, b.dim()));
        }
        if !alpha.is_finite() {
            return Err(Error::NonFiniteValue("alpha"));
        }
        Ok(NeuronParams { w, w_s, b, alpha, lambda, activation })
    }

    /// Scalar neuron: one input, one unit.
    pub fn scalar(w: f64, w_s: f64, b: f64, alpha: f64, lambda: f64, activation: ActivationKind) -> Result<Self> {
        Self::new(
            Matrix::new(1, 1, vec![w])?,
            Matrix::new(1, 1, vec![w_s])?,
            Vector::new(vec![b])?,
            alpha,
            lambda,
            activation,
        )
    }

    /// `dim`-wide layer that forwards its input: `W = I`, no feedback, no bias.
    pub fn pass_through(dim: usize, lambda: f64) -> Result<Self> {
        Self::new(
            Matrix::identity(dim)?,
            Matrix::zeros(dim, dim)?,
            Vector::zeros(dim),
            0.0,
            lambda,
            ActivationKind::Identity,
        )
    }

    /// Weights and bias drawn uniformly from `[-0.5, 0.5]` with a seeded generator.
    pub fn seeded(
        seed: u64,
        input_dim: usize,
        output_dim: usize,
        alpha: f64,
        lambda: f64,
        activation: ActivationKind,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random(&mut rng, input_dim, output_dim, alpha, lambda, activation)
    }

    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        input_dim: usize,
        output_dim: usize,
        alpha: f64,
        lambda: f64,
        activation: ActivationKind,
    ) -> Result<Self> {
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-0.5..=0.5)).collect() };
        let w = Matrix::new(output_dim, input_dim, draw(output_dim * input_dim))?;
        let w_s = Matrix::new(output_dim, output_dim, draw(output_dim * output_dim))?;
        let b = Vector::new(draw(output_dim))?;
        Self::new(w, w_s, b, alpha, lambda, activation)
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn w_s(&self) -> &Matrix {
        &self.w_s
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn resident_bytes(&self) -> usize {
        self.w.resident_bytes() + self.w_s.resident_bytes() + self.b.resident_bytes()
    }

    /// Canonical little-endian encoding used for content digests.
    pub(crate) fn write_canonical(&self, out: &mut Vec<u8>) {
        out.push(self.activation.tag());
        for v in [self.w.rows(), self.w.cols()] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for v in [self.alpha, self.lambda] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.w.as_slice().iter().chain(self.w_s.as_slice()).chain(self.b.as_slice()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.w.clone(), self.w_s.clone(), self.b.clone(), alpha, self.lambda, self.activation)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.w.clone(), self.w_s.clone(), self.b.clone(), self.alpha, lambda, self.activation)
    }
}

impl TryFrom<RawParams> for NeuronParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        validate_params(&raw)?;
        Self::new(
            Matrix::from_rows(&raw.w)?,
            Matrix::from_rows(&raw.w_s)?,
            Vector::new(raw.b)?,
            raw.alpha,
            raw.lambda,
            raw.activation,
        )
    }
}

impl From<NeuronParams> for RawParams {
    fn from(p: NeuronParams) -> Self {
        RawParams {
            w: p.w.row_vecs(),
            w_s: p.w_s.row_vecs(),
            b: p.b.into_inner(),
            alpha: p.alpha,
            lambda: p.lambda,
            activation: p.activation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(out: usize, inp: usize, lambda: f64) -> RawParams {
        RawParams {
            w: vec![vec![0.1; inp]; out],
            w_s: vec![vec![0.2; out]; out],
            b: vec![0.0; out],
            alpha: 1.0,
            lambda,
            activation: ActivationKind::Tanh,
        }
    }

    #[test]
    fn well_formed_accepted() {
        assert!(validate_params(&raw(2, 2, 0.9)).is_ok());
    }

    #[test]
    fn lambda_boundary_excluded() {
        assert!(matches!(validate_params(&raw(2, 2, 1.0)), Err(Error::LambdaOutOfRange(l)) if l == 1.0));
        assert!(matches!(validate_params(&raw(2, 2, -0.1)), Err(Error::LambdaOutOfRange(_))));
        assert!(matches!(validate_params(&raw(2, 2, f64::NAN)), Err(Error::LambdaOutOfRange(_))));
        assert!(validate_params(&raw(2, 2, 0.0)).is_ok());
    }

    #[test]
    fn shape_contradiction() {
        let mut p = raw(2, 3, 0.5);
        p.b = vec![0.0; 3];
        assert!(matches!(validate_params(&p), Err(Error::DimensionMismatch(_))));
        assert!(NeuronParams::try_from(p).is_err());
    }

    #[test]
    fn non_finite_fields() {
        let mut p = raw(1, 1, 0.5);
        p.alpha = f64::INFINITY;
        assert!(matches!(validate_params(&p), Err(Error::NonFiniteValue("alpha"))));
        let mut p = raw(1, 1, 0.5);
        p.w_s[0][0] = f64::NAN;
        assert!(matches!(validate_params(&p), Err(Error::NonFiniteValue("W_s"))));
    }

    #[test]
    fn first_violation_reported() {
        let mut p = raw(2, 2, 1.5);
        p.b = vec![f64::NAN];
        assert!(matches!(validate_params(&p), Err(Error::LambdaOutOfRange(_))));
    }

    #[test]
    fn seeded_is_deterministic_and_in_range() {
        let a = NeuronParams::seeded(7, 3, 4, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        let b = NeuronParams::seeded(7, 3, 4, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        assert_eq!(a, b);
        assert!(a.w().as_slice().iter().all(|v| (-0.5..=0.5).contains(v)));
        let c = NeuronParams::seeded(8, 3, 4, 1.0, 0.9, ActivationKind::Tanh).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn toml_round_trip() {
        let p = NeuronParams::scalar(0.5, 0.25, 0.1, 1.0, 0.8, ActivationKind::Tanh).unwrap();
        let text = toml::to_string(&p).unwrap();
        let back: NeuronParams = toml::from_str(&text).unwrap();
        assert_eq!(p, back);
        let bad = text.replace("lambda = 0.8", "lambda = 1.0");
        assert!(toml::from_str::<NeuronParams>(&bad).is_err());
    }

    fn arb_raw() -> impl Strategy<Value = RawParams> {
        (1usize..4, 1usize..4, 1usize..4, 1usize..4, 1usize..4, -0.5f64..1.5, any::<bool>()).prop_map(
            |(w_rows, w_cols, ws_rows, ws_cols, b_len, lambda, poison)| RawParams {
                w: vec![vec![0.3; w_cols]; w_rows],
                w_s: vec![vec![-0.1; ws_cols]; ws_rows],
                b: vec![if poison { f64::NAN } else { 0.0 }; b_len],
                alpha: 0.7,
                lambda,
                activation: ActivationKind::Sigmoid,
            },
        )
    }

    proptest! {
        #[test]
        fn accepts_iff_invariants_hold(p in arb_raw()) {
            let out = p.w.len();
            let expected = (0.0..1.0).contains(&p.lambda)
                && p.w_s.len() == out
                && p.w_s.iter().all(|r| r.len() == out)
                && p.b.len() == out
                && p.b.iter().all(|v| v.is_finite());
            prop_assert_eq!(validate_params(&p).is_ok(), expected);
            prop_assert_eq!(NeuronParams::try_from(p).is_ok(), expected);
        }
    }
}
