//! Linear algebra on the spin-½ product basis.

mod dense;
mod expm;
mod lanczos;
mod sparse;

pub use dense::{
    dense_expm, hermitian_eigen, hermitian_eigenvalues, hermitian_function, real_symmetric_eigen, to_real_if_possible,
};
pub use expm::{expm_action, expm_action_with, LinearMap};
pub use lanczos::{lanczos_nodes, SpectralNode};
pub use sparse::SparseOperator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KinkError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Complex amplitude vector. Bit `x` of an index set means spin down at site `a + x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self { amps: vec![ZERO; dim] }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = ONE;
        v
    }

    pub fn from_vec(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            amps: values.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the normalized vector; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(KinkError::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * c).collect(),
        }
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: C64, other: &Self) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(ONE, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-ONE, other);
        out
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(KinkError::Dimension {
                expected: dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}
