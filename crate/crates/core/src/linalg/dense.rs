use nalgebra::{DMatrix, SymmetricEigen};

use super::C64;

/// Returns the real part when every imaginary part vanishes exactly.
pub fn to_real_if_possible(m: &DMatrix<C64>) -> Option<DMatrix<f64>> {
    if m.iter().all(|z| z.im == 0.0) {
        Some(m.map(|z| z.re))
    } else {
        None
    }
}

fn sorted_pairs(values: Vec<f64>, vectors: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&k| values[k]).collect();
    let vecs = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    (vals, vecs)
}

/// Eigen-decomposition of a real symmetric matrix, ascending.
pub fn real_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    if m.nrows() == 0 {
        return (Vec::new(), m);
    }
    let eig = SymmetricEigen::new(m);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&k| values[k]).collect();
    let v = &eig.eigenvectors;
    let vecs = DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// Eigen-decomposition of a Hermitian matrix, ascending. Uses the real solver when possible.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    if let Some(re) = to_real_if_possible(m) {
        let (vals, vecs) = real_symmetric_eigen(re);
        return (vals, vecs.map(|x| C64::new(x, 0.0)));
    }
    let eig = SymmetricEigen::new(m.clone());
    let values = eig.eigenvalues.iter().copied().collect();
    sorted_pairs(values, eig.eigenvectors)
}

/// Eigenvalues only of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = if let Some(re) = to_real_if_possible(m) {
        re.symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    vals
}

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
pub fn dense_expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0i32;
    if norm > 0.25 {
        s = (norm / 0.25).log2().ceil() as i32;
    }
    let scale = 0.5f64.powi(s);
    let b = a.map(|z| z * scale);
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..40 {
        term = &term * &b * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        let tn = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Applies `f` to a Hermitian matrix through its eigen-decomposition.
pub fn hermitian_function(m: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, &e) in vals.iter().enumerate() {
        let fe = f(e);
        for i in 0..n {
            scaled[(i, j)] *= fe;
        }
    }
    &scaled * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::super::{I, ONE};
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let mut a = DMatrix::<C64>::zeros(2, 2);
        a[(0, 1)] = C64::new(-3.0, 0.0);
        a[(1, 0)] = C64::new(3.0, 0.0);
        let e = dense_expm(&a);
        assert!((e[(0, 0)].re - 3f64.cos()).abs() < 1e-14);
        assert!((e[(1, 0)].re - 3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn expm_agrees_with_spectral_exponential() {
        let m = DMatrix::from_fn(4, 4, |i, j| {
            let x = (i * 3 + j * 5) as f64 * 0.37;
            C64::new(x.sin() + if i == j { 2.0 } else { 0.0 }, 0.0)
        });
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let direct = dense_expm(&(h.clone() * (-I * 7.0)));
        let spectral = hermitian_function(&h, |e| (-I * 7.0 * e).exp());
        assert!((direct - spectral).iter().all(|z| z.norm() < 1e-11));
    }

    #[test]
    fn complex_hermitian_eigen() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 1)] = I;
        m[(1, 0)] = -I;
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let r =
            &m * &vecs - &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(-1.0, 0.0), ONE]));
        assert!(r.iter().all(|z| z.norm() < 1e-14));
    }
}
