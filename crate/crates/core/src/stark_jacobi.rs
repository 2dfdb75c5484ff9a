//! The tilted hopping operator `K₀ = αΔ + γW` on ℓ²(ℤ), `(Δψ)(n) = ψ(n−1) + ψ(n+1)`,
//! `(Wψ)(n) = nψ(n)`, and its separable analogue on ℤᵈ.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bessel::{bessel_j, truncation_order, BesselTable};
use crate::error::{KinkError, Result};
use crate::kink_profiles::{hopping_coefficient_a, QSeriesPolicy};
use crate::linalg::{lanczos_nodes, SparseOperator, SpectralNode, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkJacobiParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl StarkJacobiParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !alpha.is_finite() || !gamma.is_finite() {
            return Err(KinkError::Domain("non-finite Stark-Jacobi parameters".into()));
        }
        Ok(Self { alpha, gamma })
    }

    /// `α = √(B₁²+B₂²)·a(q)`, `γ = B₃`.
    pub fn from_field(b: [f64; 3], policy: &QSeriesPolicy) -> Result<Self> {
        let a = hopping_coefficient_a(policy)?;
        Self::new(b[0].hypot(b[1]) * a, b[2])
    }

    pub fn is_free(&self) -> bool {
        self.gamma == 0.0
    }

    /// `w = (4α/γ) sin(γt/2)`; `None` for `γ = 0`.
    pub fn w(&self, t: f64) -> Option<f64> {
        (!self.is_free()).then(|| 4.0 * self.alpha / self.gamma * (0.5 * self.gamma * t).sin())
    }

    /// `χ = (π − γt)/2`; `None` for `γ = 0`.
    pub fn chi(&self, t: f64) -> Option<f64> {
        (!self.is_free()).then_some(0.5 * (PI - self.gamma * t))
    }

    /// Bessel argument of the kernel at time `t`: `w` or its limit `2αt`.
    pub fn bessel_argument(&self, t: f64) -> f64 {
        self.w(t).unwrap_or(2.0 * self.alpha * t)
    }

    /// Radius `⌈|2α/γ|⌉ + 80` beyond which eigenfunctions are negligible.
    pub fn truncation_radius(&self) -> Result<usize> {
        if self.is_free() {
            return Err(KinkError::NoPointSpectrum);
        }
        Ok((2.0 * self.alpha / self.gamma).abs().ceil() as usize + 80)
    }
}

/// `K₀` restricted to sites `−R..=R` (index `n + R`).
pub fn build_k0_truncated(params: &StarkJacobiParams, radius: usize) -> Result<SparseOperator> {
    if radius < 1 {
        return Err(KinkError::Domain("truncation radius must be ≥ 1".into()));
    }
    let r = radius as i64;
    let dim = 2 * radius + 1;
    let mut trip = Vec::with_capacity(3 * dim);
    for n in -r..=r {
        let i = (n + r) as usize;
        trip.push((i, i, C64::new(params.gamma * n as f64, 0.0)));
        if n < r {
            trip.push((i, i + 1, C64::new(params.alpha, 0.0)));
            trip.push((i + 1, i, C64::new(params.alpha, 0.0)));
        }
    }
    Ok(SparseOperator::from_triplets(dim, trip).flagged_hermitian_unchecked(true))
}

/// Eigenfunction `φ_m(n) = J_{m−n}(2α/γ)` with eigenvalue `γm`.
pub fn eigenfunction(m: i64, params: &StarkJacobiParams, n: i64) -> Result<f64> {
    if params.is_free() {
        return Err(KinkError::NoPointSpectrum);
    }
    bessel_j(m - n, 2.0 * params.alpha / params.gamma)
}

/// Exact kernel `⟨x|e^{−itK₀}|n⟩ = J_{n−x}(w) exp[−i((γt−π)/2·x + (γt+π)/2·n)]`.
/// Routed to [`free_kernel`] for `γ = 0`.
pub fn propagator_kernel(x: i64, n: i64, t: f64, params: &StarkJacobiParams) -> Result<C64> {
    match params.w(t) {
        None => free_kernel(x, n, t, params.alpha),
        Some(w) => {
            let j = bessel_j(n - x, w)?;
            let g = params.gamma * t;
            let phase = -(0.5 * (g - PI) * x as f64 + 0.5 * (g + PI) * n as f64);
            Ok(C64::from_polar(j, phase))
        }
    }
}

/// `γ → 0` limit of the kernel: `J_{n−x}(2αt) e^{iπ(x−n)/2}`.
pub fn free_kernel(x: i64, n: i64, t: f64, alpha: f64) -> Result<C64> {
    let j = bessel_j(n - x, 2.0 * alpha * t)?;
    Ok(C64::from_polar(j, 0.5 * PI * (x - n) as f64))
}

/// Column `x ↦ ⟨x|e^{−itK₀}|n⟩` for `|x − n| ≤ M`, with `M` past the Bessel turning point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelColumn {
    pub n: i64,
    pub t: f64,
    /// Smallest `x` of the window.
    pub x_min: i64,
    pub values: Vec<C64>,
}

impl KernelColumn {
    pub fn compute(n: i64, t: f64, params: &StarkJacobiParams) -> Result<Self> {
        let w = params.bessel_argument(t);
        let m = truncation_order(w) + 40;
        let table = BesselTable::new(m, w)?;
        let g = params.gamma * t;
        let mut values = Vec::with_capacity(2 * m + 1);
        for d in -(m as i64)..=(m as i64) {
            let x = n + d;
            let phase = if params.is_free() {
                0.5 * PI * d as f64
            } else {
                -(0.5 * (g - PI) * x as f64 + 0.5 * (g + PI) * n as f64)
            };
            values.push(C64::from_polar(table.get(-d), phase));
        }
        Ok(Self {
            n,
            t,
            x_min: n - m as i64,
            values,
        })
    }

    pub fn get(&self, x: i64) -> C64 {
        let k = x - self.x_min;
        if k < 0 || k as usize >= self.values.len() {
            C64::new(0.0, 0.0)
        } else {
            self.values[k as usize]
        }
    }

    pub fn x_range(&self) -> std::ops::RangeInclusive<i64> {
        self.x_min..=self.x_min + self.values.len() as i64 - 1
    }
}

/// Field vector of the ℤᵈ operator `K = αΔ + Σ_j γ_j W_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZdFieldVector {
    pub gamma: Vec<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Commensurability {
    Commensurable,
    Incommensurable,
    PartiallyZero,
    AllZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    PurePointLattice,
    DensePurePoint,
    BandPlusLattice,
    AbsolutelyContinuousBand,
}

/// Spectrum of the ℤᵈ operator. The operator is a sum of commuting one-dimensional
/// Stark-Jacobi operators, so its eigenvalues are `Σ_j γ_j m_j`, `m ∈ ℤᵈ`, with product
/// eigenfunctions `Π_j J_{m_j−n_j}(2α/γ_j)`; zero components contribute a band `[−2α, 2α]` each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDescription {
    pub kind: SpectrumKind,
    pub commensurability: Commensurability,
    /// Step of the eigenvalue lattice when it is discrete.
    pub lattice_step: Option<f64>,
    /// Generators `γ_j` of the eigenvalue set `Σ γ_j ℤ` (nonzero components).
    pub generators: Vec<f64>,
    /// Band `[−2α(d−l), 2α(d−l)]` from the `d−l` zero components.
    pub band: Option<(f64, f64)>,
    /// Whether the closure of the spectrum is all of ℝ.
    pub dense_in_reals: bool,
}

impl SpectrumDescription {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum description serializes")
    }
}

/// Best rational approximation `p/q` with `q ≤ max_den` and `|x − p/q| ≤ tol·max(1,|x|)`.
pub fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub const DENOMINATOR_CAP: i64 = 1_000_000;
pub const RATIO_TOLERANCE: f64 = 1e-12;

pub fn zd_spectrum(field: &ZdFieldVector) -> Result<SpectrumDescription> {
    let d = field.gamma.len();
    if d == 0 || d > 6 {
        return Err(KinkError::Domain(format!("dimension must be 1..=6 (got {d})")));
    }
    let nonzero: Vec<f64> = field.gamma.iter().copied().filter(|g| *g != 0.0).collect();
    let l = nonzero.len();
    let band = (l < d).then(|| {
        let h = 2.0 * field.alpha.abs() * (d - l) as f64;
        (-h, h)
    });
    if l == 0 {
        return Ok(SpectrumDescription {
            kind: SpectrumKind::AbsolutelyContinuousBand,
            commensurability: Commensurability::AllZero,
            lattice_step: None,
            generators: Vec::new(),
            band,
            dense_in_reals: false,
        });
    }
    // Express every γ_j as γ₀·a_j with integers a_j.
    let g0 = nonzero[0];
    let mut ratios = Vec::with_capacity(l);
    for g in &nonzero {
        match rational_approx(g / g0, DENOMINATOR_CAP, RATIO_TOLERANCE) {
            Some(r) => ratios.push(r),
            None => {
                return Ok(SpectrumDescription {
                    kind: if l == d {
                        SpectrumKind::DensePurePoint
                    } else {
                        SpectrumKind::BandPlusLattice
                    },
                    commensurability: if l == d {
                        Commensurability::Incommensurable
                    } else {
                        Commensurability::PartiallyZero
                    },
                    lattice_step: None,
                    generators: nonzero,
                    band,
                    dense_in_reals: true,
                })
            }
        }
    }
    let lcm_den = ratios.iter().fold(1i64, |acc, &(_, q)| acc / gcd(acc, q) * q);
    let ints: Vec<i64> = ratios.iter().map(|&(p, q)| p * (lcm_den / q)).collect();
    let g = ints.iter().fold(0i64, |acc, &a| gcd(acc, a));
    let step = (g0 / lcm_den as f64 * g as f64).abs();
    Ok(SpectrumDescription {
        kind: if l == d {
            SpectrumKind::PurePointLattice
        } else {
            SpectrumKind::BandPlusLattice
        },
        commensurability: if l == d {
            Commensurability::Commensurable
        } else {
            Commensurability::PartiallyZero
        },
        lattice_step: Some(step),
        generators: nonzero,
        band,
        dense_in_reals: false,
    })
}

/// ℤᵈ operator on the box `[−R, R]^d`; site `(n_1,…,n_d)` has index `Σ_j (n_j+R)(2R+1)^j`.
pub fn zd_truncated_operator(field: &ZdFieldVector, radius: usize) -> Result<SparseOperator> {
    let d = field.gamma.len();
    let side = 2 * radius + 1;
    let dim = side
        .checked_pow(d as u32)
        .filter(|&n| n <= 2_000_000)
        .ok_or_else(|| KinkError::Resource("ℤᵈ box too large".into()))?;
    let r = radius as i64;
    let mut trip = Vec::with_capacity(dim * (2 * d + 1));
    for idx in 0..dim {
        let mut rem = idx;
        let mut diag = 0.0;
        let mut stride = 1;
        for j in 0..d {
            let c = rem % side;
            rem /= side;
            diag += field.gamma[j] * (c as i64 - r) as f64;
            if c + 1 < side {
                trip.push((idx, idx + stride, C64::new(field.alpha, 0.0)));
                trip.push((idx + stride, idx, C64::new(field.alpha, 0.0)));
            }
            stride *= side;
        }
        trip.push((idx, idx, C64::new(diag, 0.0)));
    }
    Ok(SparseOperator::from_triplets(dim, trip).flagged_hermitian_unchecked(true))
}

/// Converged Ritz values of the truncated ℤᵈ operator in the spectral measure of `δ₀`,
/// with their distance to the predicted eigenvalue lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZdLatticeReport {
    pub nodes_checked: usize,
    pub max_distance: f64,
    pub weight_captured: f64,
    pub lattice_step: f64,
}

pub fn zd_lattice_check(
    field: &ZdFieldVector,
    radius: usize,
    steps: usize,
    weight_cutoff: f64,
    residual_cutoff: f64,
) -> Result<ZdLatticeReport> {
    let spec = zd_spectrum(field)?;
    let step = spec
        .lattice_step
        .filter(|_| spec.kind == SpectrumKind::PurePointLattice)
        .ok_or_else(|| KinkError::Precondition("lattice check needs a commensurable field".into()))?;
    let op = zd_truncated_operator(field, radius)?;
    let side = 2 * radius + 1;
    let centre: usize = (0..field.gamma.len()).map(|j| radius * side.pow(j as u32)).sum();
    let start = StateVector::basis(op.dim(), centre);
    let nodes: Vec<SpectralNode> = lanczos_nodes(&op, &start, steps)
        .into_iter()
        .filter(|n| n.weight > weight_cutoff && n.residual < residual_cutoff)
        .collect();
    let max_distance = nodes
        .iter()
        .map(|n| (n.value / step - (n.value / step).round()).abs() * step)
        .fold(0.0, f64::max);
    Ok(ZdLatticeReport {
        nodes_checked: nodes.len(),
        max_distance,
        weight_captured: nodes.iter().map(|n| n.weight).sum(),
        lattice_step: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_action, hermitian_eigenvalues};

    #[test]
    fn diagonal_limit() {
        let p = StarkJacobiParams::new(0.0, 0.7).unwrap();
        let k = build_k0_truncated(&p, 5).unwrap();
        let vals = hermitian_eigenvalues(&k.to_dense());
        for (i, v) in vals.iter().enumerate() {
            assert!((v - 0.7 * (i as f64 - 5.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn free_band_cosine_values() {
        let p = StarkJacobiParams::new(1.0, 0.0).unwrap();
        let r = 10;
        let vals = hermitian_eigenvalues(&build_k0_truncated(&p, r).unwrap().to_dense());
        let n = 2 * r + 1;
        let mut want: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenfunction_residual_and_small_alpha() {
        let p = StarkJacobiParams::new(1.5, 0.5).unwrap();
        let r = p.truncation_radius().unwrap();
        let k = build_k0_truncated(&p, r).unwrap();
        for m in [-2i64, 0, 3] {
            let v: Vec<f64> = (-(r as i64)..=r as i64)
                .map(|n| eigenfunction(m, &p, n).unwrap())
                .collect();
            let s = StateVector::from_real(&v);
            let res = k.apply(&s).sub(&s.scaled(C64::new(0.5 * m as f64, 0.0))).norm();
            assert!(res < 1e-9);
        }
        let tiny = StarkJacobiParams::new(1e-14, 1.0).unwrap();
        assert!((eigenfunction(2, &tiny, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(eigenfunction(2, &tiny, 3).unwrap().abs() < 1e-12);
        assert!(eigenfunction(0, &StarkJacobiParams::new(1.0, 0.0).unwrap(), 0).is_err());
    }

    #[test]
    fn kernel_matches_matrix_exponential() {
        let p = StarkJacobiParams::new(2.0, 0.5).unwrap();
        let r = 100usize;
        let k = build_k0_truncated(&p, r).unwrap();
        let t = 7.3;
        let n = 3i64;
        let col = expm_action(
            &k,
            C64::new(0.0, -t),
            &StateVector::basis(2 * r + 1, (n + r as i64) as usize),
        );
        for x in -30..=30i64 {
            let want = col.amplitudes()[(x + r as i64) as usize];
            assert!((propagator_kernel(x, n, t, &p).unwrap() - want).norm() < 1e-10);
        }
    }

    #[test]
    fn free_kernel_is_limit_and_column_agrees() {
        let p = StarkJacobiParams::new(1.0, 0.0).unwrap();
        let col = KernelColumn::compute(2, 3.5, &p).unwrap();
        for x in -20..=20 {
            assert!((col.get(x) - propagator_kernel(x, 2, 3.5, &p).unwrap()).norm() < 1e-12);
        }
        let near = StarkJacobiParams::new(1.0, 1e-3).unwrap();
        let colg = KernelColumn::compute(2, 3.5, &near).unwrap();
        for x in -20..=20 {
            assert!((colg.get(x) - propagator_kernel(x, 2, 3.5, &near).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn rational_reconstruction() {
        assert_eq!(rational_approx(0.75, 100, 1e-12), Some((3, 4)));
        assert_eq!(rational_approx(2.0, 100, 1e-12), Some((2, 1)));
        assert_eq!(rational_approx(2f64.sqrt(), DENOMINATOR_CAP, 1e-12), None);
    }

    #[test]
    fn zd_classification() {
        let one = zd_spectrum(&ZdFieldVector {
            gamma: vec![0.7],
            alpha: 1.0,
        })
        .unwrap();
        assert_eq!(one.kind, SpectrumKind::PurePointLattice);
        assert!((one.lattice_step.unwrap() - 0.7).abs() < 1e-15);
        let two = zd_spectrum(&ZdFieldVector {
            gamma: vec![1.0, 2.0],
            alpha: 1.0,
        })
        .unwrap();
        assert!((two.lattice_step.unwrap() - 1.0).abs() < 1e-15);
        let thirds = zd_spectrum(&ZdFieldVector {
            gamma: vec![2.0 / 3.0, 1.0],
            alpha: 1.0,
        })
        .unwrap();
        assert!((thirds.lattice_step.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let dense = zd_spectrum(&ZdFieldVector {
            gamma: vec![1.0, 2f64.sqrt()],
            alpha: 1.0,
        })
        .unwrap();
        assert_eq!(dense.kind, SpectrumKind::DensePurePoint);
        assert!(dense.dense_in_reals);
        let partial = zd_spectrum(&ZdFieldVector {
            gamma: vec![0.0, 1.0, 0.0],
            alpha: 0.5,
        })
        .unwrap();
        assert_eq!(partial.kind, SpectrumKind::BandPlusLattice);
        assert_eq!(partial.band, Some((-2.0, 2.0)));
        let flat = zd_spectrum(&ZdFieldVector {
            gamma: vec![0.0, 0.0],
            alpha: 1.0,
        })
        .unwrap();
        assert_eq!(flat.kind, SpectrumKind::AbsolutelyContinuousBand);
        assert!(flat.to_json().contains("absolutely-continuous-band"));
    }

    #[test]
    fn product_eigenvector_on_z2() {
        // γ = (1, 2): eigenvalue 1 has eigenvector J_{1−n₁}(2α)·J_{−n₂}(α).
        let field = ZdFieldVector {
            gamma: vec![1.0, 2.0],
            alpha: 1.0,
        };
        let r = 30usize;
        let op = zd_truncated_operator(&field, r).unwrap();
        let side = 2 * r + 1;
        let mut v = vec![0.0; side * side];
        for n2 in -(r as i64)..=r as i64 {
            for n1 in -(r as i64)..=r as i64 {
                let idx = (n1 + r as i64) as usize + side * (n2 + r as i64) as usize;
                v[idx] = bessel_j(1 - n1, 2.0).unwrap() * bessel_j(-n2, 1.0).unwrap();
            }
        }
        let s = StateVector::from_real(&v);
        let res = op.apply(&s).sub(&s).norm();
        assert!(res < 1e-12);
    }
}
