//! Dense parameter vectors.
//!
//! Every point the library touches (iterates, centers, anchor gaps,
//! perturbations) is a [`ParamVec`]. Arithmetic between two vectors panics on
//! a dimension mismatch, the same contract `ndarray` uses for elementwise ops.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVec(Vec<f64>);

impl ParamVec {
    pub fn zeros(dim: usize) -> Self {
        ParamVec(vec![0.0; dim])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ParamVec(values)
    }

    pub fn from_slice(values: &[f64]) -> Self {
        ParamVec(values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &ParamVec) -> f64 {
        assert_same_dim(self, other);
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &ParamVec) {
        assert_same_dim(self, x);
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in &mut self.0 {
            *s *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> ParamVec {
        ParamVec(self.0.iter().map(|v| v * a).collect())
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &ParamVec) -> ParamVec {
        assert_same_dim(self, other);
        ParamVec(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn fill(&mut self, value: f64) {
        self.0.iter_mut().for_each(|v| *v = value);
    }

    pub fn distance(&self, other: &ParamVec) -> f64 {
        assert_same_dim(self, other);
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn assert_same_dim(a: &ParamVec, b: &ParamVec) {
    assert_eq!(
        a.len(),
        b.len(),
        "ParamVec dimension mismatch: {} vs {}",
        a.len(),
        b.len()
    );
}

impl fmt::Debug for ParamVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl From<Vec<f64>> for ParamVec {
    fn from(v: Vec<f64>) -> Self {
        ParamVec(v)
    }
}

impl From<&[f64]> for ParamVec {
    fn from(v: &[f64]) -> Self {
        ParamVec(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for ParamVec {
    fn from(v: [f64; N]) -> Self {
        ParamVec(v.to_vec())
    }
}

impl Index<usize> for ParamVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ParamVec {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for &ParamVec {
    type Output = ParamVec;
    fn add(self, rhs: &ParamVec) -> ParamVec {
        assert_same_dim(self, rhs);
        ParamVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &ParamVec {
    type Output = ParamVec;
    fn sub(self, rhs: &ParamVec) -> ParamVec {
        assert_same_dim(self, rhs);
        ParamVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for ParamVec {
    type Output = ParamVec;
    fn add(mut self, rhs: ParamVec) -> ParamVec {
        self += &rhs;
        self
    }
}

impl Sub for ParamVec {
    type Output = ParamVec;
    fn sub(mut self, rhs: ParamVec) -> ParamVec {
        self -= &rhs;
        self
    }
}

impl Mul<f64> for &ParamVec {
    type Output = ParamVec;
    fn mul(self, rhs: f64) -> ParamVec {
        self.scaled(rhs)
    }
}

impl Mul<f64> for ParamVec {
    type Output = ParamVec;
    fn mul(mut self, rhs: f64) -> ParamVec {
        self.scale(rhs);
        self
    }
}

impl Neg for ParamVec {
    type Output = ParamVec;
    fn neg(mut self) -> ParamVec {
        self.scale(-1.0);
        self
    }
}

impl AddAssign<&ParamVec> for ParamVec {
    fn add_assign(&mut self, rhs: &ParamVec) {
        assert_same_dim(self, rhs);
        for (s, v) in self.0.iter_mut().zip(&rhs.0) {
            *s += v;
        }
    }
}

impl SubAssign<&ParamVec> for ParamVec {
    fn sub_assign(&mut self, rhs: &ParamVec) {
        assert_same_dim(self, rhs);
        for (s, v) in self.0.iter_mut().zip(&rhs.0) {
            *s -= v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        let a = ParamVec::from([1.0, 2.0]);
        let b = ParamVec::from([3.0, -1.0]);
        assert_eq!((&a + &b).as_slice(), &[4.0, 1.0]);
        assert_eq!((&a - &b).as_slice(), &[-2.0, 3.0]);
        assert_eq!(a.dot(&b), 1.0);
        assert_eq!(b.norm_sq(), 10.0);
        let mut c = a.clone();
        c.axpy(2.0, &b);
        assert_eq!(c.as_slice(), &[7.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn mismatched_dims_panic() {
        let _ = &ParamVec::zeros(2) + &ParamVec::zeros(3);
    }

    #[test]
    fn finiteness() {
        assert!(ParamVec::from([1.0, 0.0]).is_finite());
        assert!(!ParamVec::from([f64::NAN, 0.0]).is_finite());
    }
}
