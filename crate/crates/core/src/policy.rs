use serde::{Deserialize, Serialize};

/// Tolerances shared by all modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy {
    /// Accepted violation of `q + 1/q = 2Δ`.
    pub q_relation_tol: f64,
    /// Accepted `‖A − A†‖_max` for Hermitian-flagged operators.
    pub hermitian_tol: f64,
    /// Agreement required between the two Hamiltonian constructions.
    pub construction_tol: f64,
    /// Orthonormality and `H|m⟩ = 0` residuals of the kink family.
    pub ground_tol: f64,
    /// Eigenvalue clustering tolerance.
    pub cluster_tol: f64,
    /// Eigenvalues below this are treated as zero by the pseudo-inverse.
    pub pinv_cutoff: f64,
    /// Largest chain handled by dense sector diagonalization.
    pub max_dense_sites: usize,
    /// Largest matrix diagonalized without sectorization.
    pub max_dense_dim: usize,
    /// Target error estimate of the time stepper.
    pub propagate_tol: f64,
    /// Target error estimate of reduced (block) dynamics.
    pub reduced_tol: f64,
    /// Relative truncation of Taylor exponential actions.
    pub expm_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            q_relation_tol: 1e-12,
            hermitian_tol: 1e-12,
            construction_tol: 1e-12,
            ground_tol: 1e-10,
            cluster_tol: 1e-9,
            pinv_cutoff: 1e-10,
            max_dense_sites: 14,
            max_dense_dim: 4096,
            propagate_tol: 1e-10,
            reduced_tol: 1e-12,
            expm_tol: 1e-15,
        }
    }
}
