//! Dense vectors and matrices over finite `f64` values.
//!
//! Both types reject NaN and infinities at construction, so anything holding
//! a [`Vector`] or [`Matrix`] can assume finite contents. Dimensions are fixed
//! once built.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.iter().all(|v| v.is_finite()) {
            Ok(Vector(elements))
        } else {
            Err(Error::NonFiniteValue("vector"))
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute element, 0 for an empty vector.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Euclidean distance to `other`. Panics on dimension mismatch.
    pub fn distance(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "distance between vectors of different dimension");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Heap bytes reserved by this vector.
    pub fn resident_bytes(&self) -> usize {
        self.0.capacity() * std::mem::size_of::<f64>()
    }

    /// Wraps values already known to be finite.
    pub(crate) fn from_finite(elements: Vec<f64>) -> Self {
        debug_assert!(elements.iter().all(|v| v.is_finite()));
        Vector(elements)
    }

    /// Checks finiteness of freshly computed values, naming the stage on failure.
    pub(crate) fn checked(elements: Vec<f64>, stage: &'static str) -> Result<Self> {
        if elements.iter().all(|v| v.is_finite()) {
            Ok(Vector(elements))
        } else {
            Err(Error::NonFiniteValue(stage))
        }
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        Vector::new(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!("matrix shape {rows}x{cols} must be positive")));
        }
        if data.len() != rows * cols {
            return Err(Error::dims("matrix data length", rows * cols, data.len()));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue("matrix"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dims("matrix row length", cols, bad.len()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_vecs(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Matrix-vector product; the result may contain non-finite values on overflow.
    pub(crate) fn mul_raw(&self, x: &Vector) -> Result<Vec<f64>> {
        if x.dim() != self.cols {
            return Err(Error::dims("matrix-vector operand", self.cols, x.dim()));
        }
        Ok(self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x.iter()).map(|(w, v)| w * v).sum())
            .collect())
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        Vector::checked(self.mul_raw(x)?, "matrix-vector product")
    }

    pub fn resident_bytes(&self) -> usize {
        self.data.capacity() * std::mem::size_of::<f64>()
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.row_vecs().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Distance from `x` to the next representable `f64` away from zero.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if !a.is_finite() {
        return f64::NAN;
    }
    if a == f64::MAX {
        return a - f64::from_bits(a.to_bits() - 1);
    }
    f64::from_bits(a.to_bits() + 1) - a
}

/// `|a - b|` expressed in units of `ulp(scale)`.
///
/// Rounding in a sum is bounded by the ulp of its operands, not of its
/// result, so callers pass the magnitude of the operands as `scale`.
pub fn ulps_at_scale(a: f64, b: f64, scale: f64) -> f64 {
    let unit = ulp(scale.abs().max(f64::MIN_POSITIVE));
    (a - b).abs() / unit
}
