//! Grid-valued fields. Index (i, j): i runs along sigma (or x), j along theta (or y).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    n0: usize,
    n1: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n0: usize, n1: usize) -> Self {
        ScalarField {
            n0,
            n1,
            data: vec![0.0; n0 * n1],
        }
    }

    pub fn constant(n0: usize, n1: usize, v: f64) -> Self {
        ScalarField {
            n0,
            n1,
            data: vec![v; n0 * n1],
        }
    }

    pub fn from_vec(n0: usize, n1: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n0 * n1 {
            return Err(Error::SizeMismatch {
                expected: (n0, n1),
                got: (data.len(), 1),
            });
        }
        Ok(ScalarField { n0, n1, data })
    }

    pub fn from_fn(n0: usize, n1: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            for j in 0..n1 {
                data.push(f(i, j));
            }
        }
        ScalarField { n0, n1, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n0, self.n1)
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n1 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n1 + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n1..(i + 1) * self.n1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            n0: self.n0,
            n1: self.n1,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        ScalarField {
            n0: self.n0,
            n1: self.n1,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::SizeMismatch {
                expected: shape,
                got: self.shape(),
            });
        }
        Ok(())
    }
}

impl std::ops::Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl std::ops::Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl std::ops::Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

/// Contravariant chart components (X^sigma, X^theta).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }
}
