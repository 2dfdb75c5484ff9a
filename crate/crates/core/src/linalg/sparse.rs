use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{StateVector, C64, ONE, ZERO};
use crate::error::{KinkError, Result};

const PARALLEL_ROWS: usize = 1 << 12;

/// Complex CSR matrix with an explicit Hermitian flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed, exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet index out of range");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
            hermitian: false,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim]).flagged_hermitian_unchecked(true)
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let trip = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let h = d.iter().all(|z| z.im == 0.0);
        Self::from_triplets(d.len(), trip).flagged_hermitian_unchecked(h)
    }

    pub fn from_dense(m: &DMatrix<C64>, drop_below: f64) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > drop_below {
                    trip.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), trip)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Sets the Hermitian flag after checking `‖A − A†‖_max ≤ tol`.
    pub fn flagged_hermitian(mut self, tol: f64) -> Result<Self> {
        let dev = self.sub(&self.adjoint()).max_norm();
        if dev > tol {
            return Err(KinkError::Consistency(format!(
                "operator flagged Hermitian deviates by {dev:e}"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub(crate) fn flagged_hermitian_unchecked(mut self, h: bool) -> Self {
        self.hermitian = h;
        self
    }

    /// Iterates over stored `(row, col, value)` entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim)
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => ZERO,
        }
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let row = |r: usize| -> C64 {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            acc
        };
        if self.dim >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = row(r));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let mut out = vec![ZERO; self.dim];
        self.apply_into(v.amplitudes(), &mut out);
        StateVector::from_vec(out)
    }

    /// Entry-wise maximum modulus.
    pub fn max_norm(&self) -> f64 {
        self.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm for Hermitian matrices.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut colsum = vec![0.0; self.dim];
        for (_, c, v) in self.iter() {
            colsum[c] += v.norm();
        }
        colsum.into_iter().fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, trip).flagged_hermitian_unchecked(self.hermitian)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= c;
        }
        out.hermitian = self.hermitian && c.im == 0.0;
        out
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: C64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let trip = self.iter().chain(other.iter().map(|(r, k, v)| (r, k, c * v))).collect();
        let h = self.hermitian && other.hermitian && c.im == 0.0;
        Self::from_triplets(self.dim, trip).flagged_hermitian_unchecked(h)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(ONE, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-ONE, other)
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut trip = Vec::new();
        let mut acc = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; self.dim];
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                let a = self.vals[k];
                for l in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.cols[l];
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * other.vals[l];
                }
            }
            for &c in &touched {
                trip.push((r, c, acc[c]));
                acc[c] = ZERO;
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, trip)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Restriction to the index subset `idx` as a dense block.
    pub fn dense_block(&self, idx: &[usize]) -> DMatrix<C64> {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (k, &r) in idx.iter().enumerate() {
            for l in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = pos[self.cols[l]];
                if c != usize::MAX {
                    m[(k, c)] += self.vals[l];
                }
            }
        }
        m
    }

    /// `⟨u|A|v⟩`.
    pub fn expectation(&self, u: &StateVector, v: &StateVector) -> C64 {
        u.inner(&self.apply(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_op(dim: usize, entries: &[(usize, usize, f64, f64)]) -> SparseOperator {
        let trip = entries
            .iter()
            .map(|&(r, c, a, b)| (r % dim, c % dim, C64::new(a, b)))
            .collect();
        SparseOperator::from_triplets(dim, trip)
    }

    #[test]
    fn duplicates_are_summed() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, ONE), (0, 1, ONE), (1, 0, ZERO)]);
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), C64::new(2.0, 0.0));
    }

    #[test]
    fn hermitian_flag_is_checked() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, ONE)]);
        assert!(op.clone().flagged_hermitian(1e-12).is_err());
        let h = op.add(&op.adjoint()).flagged_hermitian(1e-12).unwrap();
        assert!(h.is_hermitian());
    }

    proptest! {
        #[test]
        fn product_matches_dense(
            a in proptest::collection::vec((0usize..6, 0usize..6, -1.0f64..1.0, -1.0f64..1.0), 0..20),
            b in proptest::collection::vec((0usize..6, 0usize..6, -1.0f64..1.0, -1.0f64..1.0), 0..20),
        ) {
            let (x, y) = (random_op(6, &a), random_op(6, &b));
            let dense = x.to_dense() * y.to_dense();
            let sparse = x.mul(&y).to_dense();
            prop_assert!((dense - sparse).iter().all(|z| z.norm() < 1e-12));
        }

        #[test]
        fn adjoint_is_involution_and_matvec_linear(
            a in proptest::collection::vec((0usize..5, 0usize..5, -1.0f64..1.0, -1.0f64..1.0), 0..15),
            v in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let x = random_op(5, &a);
            prop_assert_eq!(x.adjoint().adjoint().to_dense(), x.to_dense());
            let s = StateVector::from_real(&v);
            let lhs = x.apply(&s);
            let rhs = x.to_dense() * nalgebra::DVector::from_vec(s.amplitudes().to_vec());
            for (p, q) in lhs.amplitudes().iter().zip(rhs.iter()) {
                prop_assert!((p - q).norm() < 1e-12);
            }
        }
    }
}
