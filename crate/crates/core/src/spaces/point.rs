use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element `z = (x, y)` of the product space `X × Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl ProductPoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Self {
        Self { x, y }
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(x), DVector::from_column_slice(y))
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(m))
    }

    /// Splits a stacked vector `(x; y)` with `x` of length `n`.
    pub fn from_stacked(v: &DVector<f64>, n: usize) -> Self {
        let m = v.len() - n;
        Self::new(v.rows(0, n).into_owned(), v.rows(n, m).into_owned())
    }

    pub fn stacked(&self) -> DVector<f64> {
        let (n, m) = self.dims();
        let mut v = DVector::zeros(n + m);
        v.rows_mut(0, n).copy_from(&self.x);
        v.rows_mut(n, m).copy_from(&self.y);
        v
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        if self.x.len() != n {
            return Err(Error::dims(n, self.x.len()));
        }
        if self.y.len() != m {
            return Err(Error::dims(m, self.y.len()));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.norm_squared() + self.y.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(&self.x * c, &self.y * c)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        Self::new(&self.x + &other.x * c, &self.y + &other.y * c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.x + &other.x, &self.y + &other.y)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }
}
