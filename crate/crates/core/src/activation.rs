use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Elementwise output nonlinearity of a stream neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Identity,
    Tanh,
    Sigmoid,
    #[serde(rename = "relu")]
    ReLU,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Identity,
        ActivationKind::Tanh,
        ActivationKind::Sigmoid,
        ActivationKind::ReLU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::ReLU => "relu",
        }
    }

    /// Bound `M` with `|sigma(z)| <= M` for every finite `z`, or `None` when unbounded.
    pub fn bound(self) -> Option<f64> {
        match self {
            ActivationKind::Tanh | ActivationKind::Sigmoid => Some(1.0),
            ActivationKind::Identity | ActivationKind::ReLU => None,
        }
    }

    /// Whether `sigma(0) == 0`.
    pub fn fixes_origin(self) -> bool {
        !matches!(self, ActivationKind::Sigmoid)
    }

    /// Stable one-byte tag used in spec digests.
    pub(crate) fn tag(self) -> u8 {
        match self {
            ActivationKind::Identity => 0,
            ActivationKind::Tanh => 1,
            ActivationKind::Sigmoid => 2,
            ActivationKind::ReLU => 3,
        }
    }

    #[inline]
    pub fn scalar(self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => z,
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Sigmoid => sigmoid(z),
            ActivationKind::ReLU => z.max(0.0),
        }
    }

    pub fn apply(self, z: &Vector) -> Vector {
        Vector::from_finite(z.iter().map(|&v| self.scalar(v)).collect())
    }
}

// Branching on sign keeps exp() from overflowing for large |z|.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Applies `kind` elementwise to raw pre-activations.
pub fn activation_apply(kind: ActivationKind, z: &[f64]) -> Result<Vector> {
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite pre-activation".into()));
    }
    Ok(Vector::from_finite(z.iter().map(|&v| kind.scalar(v)).collect()))
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
