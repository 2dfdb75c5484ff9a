use nalgebra::DMatrix;

use super::{real_symmetric_eigen, LinearMap, StateVector, C64, ZERO};

/// Ritz value of a Hermitian operator with its spectral weight in the start vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNode {
    pub value: f64,
    /// Squared first component of the Ritz vector (weight in the spectral measure of the start vector).
    pub weight: f64,
    /// `β_k |last component|`, the Ritz residual norm.
    pub residual: f64,
}

/// Lanczos with full reorthogonalization started from `start` (normalized internally).
pub fn lanczos_nodes<M: LinearMap + ?Sized>(a: &M, start: &StateVector, steps: usize) -> Vec<SpectralNode> {
    let n = a.dim();
    let Ok(v0) = start.normalized() else {
        return Vec::new();
    };
    let mut basis: Vec<Vec<C64>> = vec![v0.into_vec()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; n];
    let mut last_beta = 0.0;
    for k in 0..steps.min(n) {
        a.apply_into(&basis[k], &mut w);
        let ak: f64 = basis[k].iter().zip(&w).map(|(v, x)| (v.conj() * x).re).sum();
        alpha.push(ak);
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(&w).map(|(v, x)| v.conj() * x).sum();
                for (x, v) in w.iter_mut().zip(b) {
                    *x -= proj * v;
                }
            }
        }
        let bk = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        last_beta = bk;
        if bk < 1e-13 || k + 1 == steps.min(n) {
            break;
        }
        beta.push(bk);
        basis.push(w.iter().map(|z| z / bk).collect());
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let (vals, vecs) = real_symmetric_eigen(t);
    vals.iter()
        .enumerate()
        .map(|(j, &value)| SpectralNode {
            value,
            weight: vecs[(0, j)].powi(2),
            residual: last_beta * vecs[(m - 1, j)].abs(),
        })
        .collect()
}
