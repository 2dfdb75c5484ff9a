use super::{SparseOperator, StateVector, C64, ZERO};

/// A linear operator known only through its action.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[C64], y: &mut [C64]);
    /// Upper bound on the operator norm, used to choose Taylor substeps.
    fn norm_bound(&self) -> f64;
}

impl LinearMap for SparseOperator {
    fn dim(&self) -> usize {
        SparseOperator::dim(self)
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        SparseOperator::apply_into(self, x, y)
    }

    fn norm_bound(&self) -> f64 {
        (self.inf_norm() * self.one_norm()).sqrt()
    }
}

/// `exp(c·A)v` by a substepped Taylor series; `tol` is the per-substep relative truncation.
pub fn expm_action_with<M: LinearMap + ?Sized>(a: &M, c: C64, v: &StateVector, tol: f64) -> StateVector {
    let n = a.dim();
    let scale = c.norm() * a.norm_bound();
    if scale == 0.0 {
        return v.clone();
    }
    let substeps = scale.ceil().max(1.0) as usize;
    let h = c / substeps as f64;
    let mut w: Vec<C64> = v.amplitudes().to_vec();
    let mut term = vec![ZERO; n];
    let mut next = vec![ZERO; n];
    for _ in 0..substeps {
        term.copy_from_slice(&w);
        let wnorm = norm(&w);
        let mut small = 0;
        for k in 1..80 {
            a.apply_into(&term, &mut next);
            let f = h / k as f64;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * f;
            }
            for (wi, t) in w.iter_mut().zip(&term) {
                *wi += t;
            }
            if norm(&term) <= tol * wnorm {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
    }
    StateVector::from_vec(w)
}

pub fn expm_action<M: LinearMap + ?Sized>(a: &M, c: C64, v: &StateVector) -> StateVector {
    expm_action_with(a, c, v, 1e-16)
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
