//! Time evolution under `H + λV(λt)`: exact stepping, Dyson partial sums, the signed
//! composition formula for simplex integrals, reduced ground-space dynamics and the
//! first-order correction.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{KinkError, Result};
use crate::linalg::{
    dense_expm, expm_action_with, hermitian_eigen, LinearMap, SparseOperator, StateVector, C64, I, ONE, ZERO,
};
use crate::numerics::{gauss_legendre, linear_fit};
use crate::policy::NumericPolicy;
use crate::xxz_core::{
    build_hamiltonian_with, spectral_decomposition, spin_operator, ChainSpec, KinkGroundFamily, SpectralDecomposition,
    SpinComponent,
};

/// Largest total number of stepper steps before giving up.
pub const MAX_STEPS: usize = 1 << 20;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const CF4_A1: f64 = 0.25 - SQRT3 / 6.0;
const CF4_A2: f64 = 0.25 + SQRT3 / 6.0;
const CF4_C1: f64 = 0.5 - SQRT3 / 6.0;
const CF4_C2: f64 = 0.5 + SQRT3 / 6.0;

/// Time profile of one field term in macroscopic time `s = λt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Modulation {
    Constant,
    /// `cos(ω s + phase)`.
    Cosine {
        omega: f64,
        phase: f64,
    },
}

impl Modulation {
    pub fn at(&self, s: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Cosine { omega, phase } => (omega * s + phase).cos(),
        }
    }

    fn lipschitz(&self) -> f64 {
        match *self {
            Modulation::Constant => 0.0,
            Modulation::Cosine { omega, .. } => omega.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldTerm {
    pub site: i64,
    pub b: [f64; 3],
    pub modulation: Modulation,
}

impl FieldTerm {
    pub fn constant(site: i64, b: [f64; 3]) -> Self {
        Self {
            site,
            b,
            modulation: Modulation::Constant,
        }
    }

    fn magnitude(&self) -> f64 {
        (self.b[0].powi(2) + self.b[1].powi(2) + self.b[2].powi(2)).sqrt()
    }
}

/// Local field `V(s) = Σ_x B(x,s)·S_x` with finite support on a chain.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    chain: ChainSpec,
    terms: Vec<FieldTerm>,
    constant: SparseOperator,
    modulated: Vec<(SparseOperator, Modulation)>,
}

fn site_operator(chain: &ChainSpec, site: i64, b: [f64; 3]) -> Result<SparseOperator> {
    let mut op = SparseOperator::zero(chain.dim());
    for (c, comp) in [SpinComponent::X, SpinComponent::Y, SpinComponent::Z]
        .into_iter()
        .enumerate()
    {
        if b[c] != 0.0 {
            op = op.add_scaled(C64::new(b[c], 0.0), &spin_operator(chain, site, comp)?);
        }
    }
    Ok(op)
}

impl FieldSpec {
    pub fn new(chain: ChainSpec, terms: Vec<FieldTerm>) -> Result<Self> {
        let mut constant = SparseOperator::zero(chain.dim());
        let mut modulated = Vec::new();
        for t in &terms {
            if t.site < chain.a() || t.site > chain.b() {
                return Err(KinkError::Domain(format!("field site {} outside the chain", t.site)));
            }
            if t.b.iter().any(|c| !c.is_finite()) {
                return Err(KinkError::Domain("field components must be finite".into()));
            }
            let op = site_operator(&chain, t.site, t.b)?;
            match t.modulation {
                Modulation::Constant => constant = constant.add(&op),
                m => modulated.push((op.flagged_hermitian_unchecked(true), m)),
            }
        }
        Ok(Self {
            chain,
            terms,
            constant: constant.flagged_hermitian_unchecked(true),
            modulated,
        })
    }

    pub fn single_site(chain: ChainSpec, site: i64, b: [f64; 3]) -> Result<Self> {
        Self::new(chain, vec![FieldTerm::constant(site, b)])
    }

    /// The same constant field on every site of the chain.
    pub fn uniform(chain: ChainSpec, b: [f64; 3]) -> Result<Self> {
        let terms = chain.sites().map(|x| FieldTerm::constant(x, b)).collect();
        Self::new(chain, terms)
    }

    pub fn zero(chain: ChainSpec) -> Self {
        Self::new(chain, Vec::new()).expect("empty field is valid")
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn terms(&self) -> &[FieldTerm] {
        &self.terms
    }

    pub fn support(&self) -> Vec<i64> {
        let mut s: Vec<i64> = self.terms.iter().map(|t| t.site).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn is_time_independent(&self) -> bool {
        self.modulated.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.magnitude() == 0.0)
    }

    /// `Σ_x max_s |B(x,s)|/2 ≥ sup_s ‖V(s)‖`.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| 0.5 * t.magnitude()).sum()
    }

    /// Lipschitz constant of `s ↦ V(s)` in operator norm.
    pub fn lipschitz(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| 0.5 * t.magnitude() * t.modulation.lipschitz())
            .sum()
    }

    /// `V(s)`.
    pub fn operator_at(&self, s: f64) -> SparseOperator {
        let mut op = self.constant.clone();
        for (m, md) in &self.modulated {
            op = op.add_scaled(C64::new(md.at(s), 0.0), m);
        }
        op.flagged_hermitian_unchecked(true)
    }

    /// The time-independent part; equals `V` when [`Self::is_time_independent`].
    pub fn constant_part(&self) -> &SparseOperator {
        &self.constant
    }

    /// `‖V(s)‖` by dense diagonalization.
    pub fn exact_norm(&self, s: f64, policy: &NumericPolicy) -> Result<f64> {
        let dim = self.chain.dim();
        if dim > policy.max_dense_dim {
            return Err(KinkError::Resource(format!(
                "exact norm needs dim ≤ {}",
                policy.max_dense_dim
            )));
        }
        let (ev, _) = hermitian_eigen(&self.operator_at(s).to_dense());
        Ok(ev.iter().fold(0.0, |m, e| m.max(e.abs())))
    }

    fn coefficients(&self, s: f64) -> Vec<f64> {
        self.modulated.iter().map(|(_, m)| m.at(s)).collect()
    }

    fn max_rate(&self) -> f64 {
        self.modulated.iter().map(|(_, m)| m.lipschitz()).fold(0.0, f64::max)
    }
}

/// `hw·H + Σ_j c_j V_j` frozen at one instant, acting block-diagonally (`coupled = false`)
/// or from block `k−1` into block `k` for the field part (`coupled = true`).
struct Frozen<'a> {
    h: &'a SparseOperator,
    hw: f64,
    ops: Vec<(&'a SparseOperator, f64)>,
    blocks: usize,
    coupled: bool,
    bound: f64,
}

impl<'a> Frozen<'a> {
    fn new(h: &'a SparseOperator, hw: f64, ops: Vec<(&'a SparseOperator, f64)>, blocks: usize, coupled: bool) -> Self {
        let bound = hw.abs() * h.norm_bound() + ops.iter().map(|(o, c)| c.abs() * o.norm_bound()).sum::<f64>();
        Self {
            h,
            hw,
            ops,
            blocks,
            coupled,
            bound,
        }
    }
}

impl LinearMap for Frozen<'_> {
    fn dim(&self) -> usize {
        self.h.dim() * self.blocks
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let n = self.h.dim();
        let mut tmp = vec![ZERO; n];
        for k in 0..self.blocks {
            let yk = &mut y[k * n..(k + 1) * n];
            self.h.apply_into(&x[k * n..(k + 1) * n], yk);
            let hw = C64::new(self.hw, 0.0);
            yk.iter_mut().for_each(|z| *z *= hw);
            let src = if self.coupled {
                if k == 0 {
                    continue;
                }
                k - 1
            } else {
                k
            };
            for (op, c) in &self.ops {
                if *c == 0.0 {
                    continue;
                }
                op.apply_into(&x[src * n..(src + 1) * n], &mut tmp);
                for (a, b) in yk.iter_mut().zip(&tmp) {
                    *a += b * c;
                }
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.bound
    }
}

struct Evolution<'a> {
    h: &'a SparseOperator,
    field: &'a FieldSpec,
    lambda: f64,
    blocks: usize,
    coupled: bool,
    expm_tol: f64,
}

impl<'a> Evolution<'a> {
    /// One CF4 step from `t` to `t + h` (microscopic time).
    fn step(&self, t: f64, h: f64, v: &StateVector) -> StateVector {
        let l = self.lambda;
        let m1 = self.field.coefficients(l * (t + CF4_C1 * h));
        let m2 = self.field.coefficients(l * (t + CF4_C2 * h));
        let mut v = v.clone();
        for (w1, w2) in [(CF4_A2, CF4_A1), (CF4_A1, CF4_A2)] {
            let mut ops = vec![(&self.field.constant, l * (w1 + w2))];
            for (j, (op, _)) in self.field.modulated.iter().enumerate() {
                ops.push((op, l * (w1 * m1[j] + w2 * m2[j])));
            }
            let map = Frozen::new(self.h, w1 + w2, ops, self.blocks, self.coupled);
            v = expm_action_with(&map, C64::new(0.0, -h), &v, self.expm_tol);
        }
        v
    }

    fn run(&self, t_final: f64, steps: usize, v: &StateVector) -> StateVector {
        let h = t_final / steps as f64;
        let mut w = v.clone();
        for k in 0..steps {
            w = self.step(k as f64 * h, h, &w);
        }
        w
    }

    fn exact_constant(&self, t_final: f64, v: &StateVector) -> StateVector {
        let map = Frozen::new(
            self.h,
            1.0,
            vec![(&self.field.constant, self.lambda)],
            self.blocks,
            self.coupled,
        );
        expm_action_with(&map, C64::new(0.0, -t_final), v, self.expm_tol)
    }

    /// Step doubling until the Richardson estimate `‖ψ_{2n} − ψ_n‖/15` meets `tol`.
    fn integrate(&self, t_final: f64, v: &StateVector, tol: f64) -> Result<(StateVector, usize, f64)> {
        if t_final == 0.0 {
            return Ok((v.clone(), 0, 0.0));
        }
        if self.field.is_time_independent() || self.lambda == 0.0 {
            return Ok((self.exact_constant(t_final, v), 1, 0.0));
        }
        let rate = self.lambda * self.field.max_rate() * t_final.abs();
        let mut n = (rate.ceil() as usize).max(1);
        let mut coarse = self.run(t_final, n, v);
        let mut used = n;
        loop {
            if 2 * n > MAX_STEPS {
                return Err(KinkError::Integration(format!(
                    "no convergence within {MAX_STEPS} steps (t = {t_final}, λ = {})",
                    self.lambda
                )));
            }
            n *= 2;
            let fine = self.run(t_final, n, v);
            used += n;
            let est = fine.distance(&coarse) / 15.0;
            if est <= tol {
                return Ok((fine, used, est));
            }
            coarse = fine;
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationReport {
    pub state: StateVector,
    /// Total CF4 steps taken, counting every refinement level.
    pub steps: usize,
    pub error_estimate: f64,
    /// `|‖ψ(t)‖ − ‖φ‖|`; not corrected.
    pub norm_drift: f64,
}

/// `U^λ(t_final, 0)φ` for `i dψ/dt = (H + λV(λt))ψ`.
pub fn propagate(
    h: &SparseOperator,
    field: &FieldSpec,
    lambda: f64,
    t_final: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<PropagationReport> {
    phi.check_dim(h.dim())?;
    if field.chain.dim() != h.dim() {
        return Err(KinkError::Dimension {
            expected: h.dim(),
            got: field.chain.dim(),
        });
    }
    if (phi.norm() - 1.0).abs() > 1e-9 {
        return Err(KinkError::Precondition("initial state must be normalized".into()));
    }
    if !(t_final >= 0.0) {
        return Err(KinkError::Domain("t_final must be nonnegative".into()));
    }
    let ev = Evolution {
        h,
        field,
        lambda,
        blocks: 1,
        coupled: false,
        expm_tol: policy.expm_tol,
    };
    let (state, steps, error_estimate) = ev.integrate(t_final, phi, policy.propagate_tol)?;
    let norm_drift = (state.norm() - phi.norm()).abs();
    Ok(PropagationReport {
        state,
        steps,
        error_estimate,
        norm_drift,
    })
}

#[derive(Debug, Clone)]
pub struct DysonPartialSum {
    /// Interaction-picture partial sum through order `N − 1`.
    pub state: StateVector,
    /// `(λ‖V‖|t|)^N / N!`: bound on the omitted remainder.
    pub bound: f64,
    /// `|t|^N/N! · (λ‖V‖)^{N−1} · ‖V‖`, never smaller than `bound` for `λ ≤ 1`.
    pub stated_bound: f64,
    pub norm_v: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Dyson series of `e^{itH}U^λ(t,0)φ` truncated after order `N − 1`.
///
/// The order-`k` terms are the components of the block-bidiagonal system
/// `i d_k' = H d_k + λV(λs) d_{k−1}`, `d_0(0) = φ`, integrated jointly.
pub fn dyson_partial_sum(
    h: &SparseOperator,
    field: &FieldSpec,
    lambda: f64,
    t: f64,
    order: usize,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<DysonPartialSum> {
    if order == 0 {
        return Err(KinkError::Domain("Dyson order N must be ≥ 1".into()));
    }
    phi.check_dim(h.dim())?;
    let n = h.dim();
    let mut aug = StateVector::zeros(n * order);
    aug.amplitudes_mut()[..n].copy_from_slice(phi.amplitudes());
    let ev = Evolution {
        h,
        field,
        lambda,
        blocks: order,
        coupled: true,
        expm_tol: policy.expm_tol,
    };
    let (aug, _, _) = ev.integrate(t, &aug, policy.propagate_tol)?;
    let mut sum = StateVector::zeros(n);
    for k in 0..order {
        let blk = StateVector::from_vec(aug.amplitudes()[k * n..(k + 1) * n].to_vec());
        sum = sum.add(&blk);
    }
    // back to the interaction picture
    let state = crate::linalg::expm_action(h, C64::new(0.0, t), &sum);
    let norm_v = field.norm_bound();
    let x = lambda * norm_v * t.abs();
    let nf = factorial(order);
    Ok(DysonPartialSum {
        state,
        bound: x.powi(order as i32) / nf,
        stated_bound: t.abs().powi(order as i32) / nf * (lambda * norm_v).powi(order as i32 - 1) * norm_v,
        norm_v,
    })
}

/// A composition of `n` together with its sign in the graph expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedComposition {
    pub parts: Vec<usize>,
    pub sign: i8,
}

impl SignedComposition {
    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// 1-based last vertex of the block containing vertex `j`.
    pub fn block_end(&self, j: usize) -> usize {
        let mut end = 0;
        for &p in &self.parts {
            end += p;
            if j <= end {
                return end;
            }
        }
        panic!("vertex {j} outside composition of {}", self.n());
    }

    /// Endpoint `p(j)` of the bond leaving vertex `j`.
    pub fn p(&self, j: usize) -> usize {
        self.block_end(j) + 1
    }

    /// Length `p(j) − j` of that bond.
    pub fn bond_length(&self, j: usize) -> usize {
        self.p(j) - j
    }

    /// `k(j;G) = Σ_{i=j}^{p(j)−1} k_i` (1-based).
    pub fn k_sum(&self, j: usize, k: &[C64]) -> C64 {
        k[j - 1..self.p(j) - 1].iter().sum()
    }
}

pub const MAX_GRAPH_ORDER: usize = 20;

/// All compositions of `n` with signs, built by the two-child induction from `[1]`:
/// append a new part `1` (sign flips), or grow the last part (sign kept).
pub fn enumerate_graphs(n: usize) -> Result<Vec<SignedComposition>> {
    if n == 0 || n > MAX_GRAPH_ORDER {
        return Err(KinkError::Domain(format!(
            "graph order must be in 1..={MAX_GRAPH_ORDER}"
        )));
    }
    let mut level = vec![SignedComposition {
        parts: vec![1],
        sign: 1,
    }];
    for _ in 1..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for g in &level {
            let mut p1 = g.parts.clone();
            p1.push(1);
            next.push(SignedComposition {
                parts: p1,
                sign: -g.sign,
            });
            let mut p2 = g.parts.clone();
            *p2.last_mut().expect("nonempty") += 1;
            next.push(SignedComposition {
                parts: p2,
                sign: g.sign,
            });
        }
        level = next;
    }
    Ok(level)
}

pub const MAX_INTEGRAL_ORDER: usize = 12;

fn check_integral_input(e: &[f64], k: &[C64]) -> Result<usize> {
    let n = k.len();
    if n == 0 || n > MAX_INTEGRAL_ORDER {
        return Err(KinkError::Domain(format!("order must be in 1..={MAX_INTEGRAL_ORDER}")));
    }
    if e.len() != n + 1 {
        return Err(KinkError::Dimension {
            expected: n + 1,
            got: e.len(),
        });
    }
    Ok(n)
}

/// `∫_{0≤t_n≤…≤t_1≤t} Π_j exp(−i t_j (E_{j+1} − E_j + iλk_j))` by the signed-composition sum.
pub fn iterated_integral_closed_form(e: &[f64], k: &[C64], lambda: f64, t: f64) -> Result<C64> {
    let n = check_integral_input(e, k)?;
    let scale =
        e.iter().fold(1.0f64, |m, x| m.max(x.abs())) + lambda.abs() * k.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut total = ZERO;
    for g in enumerate_graphs(n)? {
        let mut prod = C64::new(g.sign as f64, 0.0);
        for j in 1..=n {
            let d = e[g.p(j) - 1] - e[j - 1] + I * lambda * g.k_sum(j, k);
            if d.norm() <= 1e-14 * scale {
                return Err(KinkError::Singular {
                    parts: g.parts.clone(),
                    vertex: j,
                });
            }
            prod *= I / d;
            if j == 1 {
                prod *= (-I * t * d).exp() - ONE;
            }
        }
        total += prod;
    }
    Ok(total)
}

/// The same simplex integral by nested Gauss–Legendre quadrature with `nodes` points per level.
pub fn iterated_integral_quadrature(e: &[f64], k: &[C64], lambda: f64, t: f64, nodes: usize) -> Result<C64> {
    let n = check_integral_input(e, k)?;
    let (x, w) = gauss_legendre(nodes);
    let rates: Vec<C64> = (0..n).map(|j| e[j + 1] - e[j] + I * lambda * k[j]).collect();
    fn level(j: usize, upper: f64, rates: &[C64], x: &[f64], w: &[f64]) -> C64 {
        if j == rates.len() || upper == 0.0 {
            return if j == rates.len() { ONE } else { ZERO };
        }
        let half = 0.5 * upper;
        let mut acc = ZERO;
        for (xi, wi) in x.iter().zip(w) {
            let s = half * (xi + 1.0);
            acc += (-I * s * rates[j]).exp() * level(j + 1, s, rates, x, w) * (wi * half);
        }
        acc
    }
    Ok(level(0, t, &rates, &x, &w))
}

/// `𝕋 exp(−i∫₀^τ Vᵣ(s) ds) c` for a small Hermitian generator `Vᵣ(s)` by dense CF4 with step doubling.
fn ordered_exponential_dense<F>(
    gen: F,
    constant: bool,
    tau: f64,
    c: &DVector<C64>,
    rate: f64,
    tol: f64,
) -> Result<DVector<C64>>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    if tau == 0.0 {
        return Ok(c.clone());
    }
    if constant {
        return Ok(dense_expm(&(gen(0.0) * C64::new(0.0, -tau))) * c);
    }
    let run = |steps: usize| {
        let h = tau / steps as f64;
        let mut v = c.clone();
        for k in 0..steps {
            let s = k as f64 * h;
            let (a1, a2) = (gen(s + CF4_C1 * h), gen(s + CF4_C2 * h));
            let first = (&a1 * C64::new(CF4_A2, 0.0) + &a2 * C64::new(CF4_A1, 0.0)) * C64::new(0.0, -h);
            let second = (&a1 * C64::new(CF4_A1, 0.0) + &a2 * C64::new(CF4_A2, 0.0)) * C64::new(0.0, -h);
            v = dense_expm(&second) * (dense_expm(&first) * v);
        }
        v
    };
    let mut n = ((rate * tau.abs()).ceil() as usize).max(1);
    let mut coarse = run(n);
    loop {
        if 2 * n > MAX_STEPS {
            return Err(KinkError::Integration("reduced evolution did not converge".into()));
        }
        n *= 2;
        let fine = run(n);
        if (&fine - &coarse).norm() / 15.0 <= tol {
            return Ok(fine);
        }
        coarse = fine;
    }
}

fn to_dvector(v: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(v.amplitudes())
}

fn from_dvector(v: &DVector<C64>) -> StateVector {
    StateVector::from_vec(v.iter().copied().collect())
}

/// Compressed field `s ↦ W† V(s) W` on an orthonormal basis `W`.
fn compressed(field: &FieldSpec, basis: &DMatrix<C64>) -> (DMatrix<C64>, Vec<DMatrix<C64>>) {
    let project = |op: &SparseOperator| {
        let mut av = DMatrix::zeros(basis.nrows(), basis.ncols());
        for j in 0..basis.ncols() {
            let col: Vec<C64> = basis.column(j).iter().copied().collect();
            let mut out = vec![ZERO; basis.nrows()];
            op.apply_into(&col, &mut out);
            av.set_column(j, &DVector::from_vec(out));
        }
        basis.adjoint() * av
    };
    (
        project(&field.constant),
        field.modulated.iter().map(|(op, _)| project(op)).collect(),
    )
}

/// Reduced evolution on the range of an orthonormal basis `W`: `W 𝕋exp(−i∫W†V W) W†φ`.
pub fn reduced_block_evolution(
    basis: &DMatrix<C64>,
    field: &FieldSpec,
    tau: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<StateVector> {
    phi.check_dim(basis.nrows())?;
    let p = to_dvector(phi);
    let c = basis.adjoint() * &p;
    let residual = (&p - basis * &c).norm();
    if residual > policy.ground_tol * p.norm().max(1.0) {
        return Err(KinkError::ProjectionMismatch(residual));
    }
    Ok(from_dvector(
        &(basis * evolve_coefficients(basis, field, tau, &c, policy)?),
    ))
}

fn evolve_coefficients(
    basis: &DMatrix<C64>,
    field: &FieldSpec,
    tau: f64,
    c: &DVector<C64>,
    policy: &NumericPolicy,
) -> Result<DVector<C64>> {
    let (v0, vm) = compressed(field, basis);
    let mods: Vec<Modulation> = field.modulated.iter().map(|(_, m)| *m).collect();
    let gen = |s: f64| {
        let mut m = v0.clone();
        for (vj, md) in vm.iter().zip(&mods) {
            m += vj * C64::new(md.at(s), 0.0);
        }
        m
    };
    ordered_exponential_dense(
        gen,
        field.is_time_independent(),
        tau,
        c,
        field.max_rate(),
        policy.reduced_tol,
    )
}

fn range_basis(p: &SparseOperator, policy: &NumericPolicy) -> Result<DMatrix<C64>> {
    if p.dim() > policy.max_dense_dim {
        return Err(KinkError::Resource(format!(
            "projector dimension above {}",
            policy.max_dense_dim
        )));
    }
    let (ev, vecs) = hermitian_eigen(&p.to_dense());
    let cols: Vec<usize> = (0..ev.len()).filter(|&i| ev[i] > 0.5).collect();
    Ok(DMatrix::from_fn(p.dim(), cols.len(), |r, c| vecs[(r, cols[c])]))
}

/// Reduced evolution `𝕋 exp(−i P ∫₀^τ V P)` on the range of a projector `P`.
pub fn reduced_evolution(
    projector: &SparseOperator,
    field: &FieldSpec,
    tau: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<StateVector> {
    reduced_block_evolution(&range_basis(projector, policy)?, field, tau, phi, policy)
}

/// Ground-space specialization using the kink states as the basis.
pub fn reduced_evolution_ground(
    family: &KinkGroundFamily,
    field: &FieldSpec,
    tau: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<StateVector> {
    let dim = family.chain().dim();
    let states = family.states();
    let basis = DMatrix::from_fn(dim, states.len(), |r, c| states[c].1.amplitudes()[r]);
    reduced_block_evolution(&basis, field, tau, phi, policy)
}

/// Per-cluster terms `𝕋 exp(−i∫P(E)V P(E)) P(E)φ` of the full spectral sum, with their energies.
pub fn reduced_block_contributions(
    decomp: &SpectralDecomposition,
    field: &FieldSpec,
    tau: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<Vec<(f64, StateVector)>> {
    phi.check_dim(decomp.dim())?;
    let p = to_dvector(phi);
    let out: Vec<Option<(f64, StateVector)>> = (0..decomp.clusters().len())
        .into_par_iter()
        .map(|ci| -> Result<Option<(f64, StateVector)>> {
            let w = decomp.cluster_basis(ci);
            let c = w.adjoint() * &p;
            if c.norm() == 0.0 {
                return Ok(None);
            }
            let e = decomp.clusters()[ci].energy;
            Ok(Some((
                e,
                from_dvector(&(&w * evolve_coefficients(&w, field, tau, &c, policy)?)),
            )))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Full spectral sum `Σ_E 𝕋 exp(−i∫P(E)V P(E)) P(E)φ`.
pub fn reduced_evolution_spectral(
    decomp: &SpectralDecomposition,
    field: &FieldSpec,
    tau: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<StateVector> {
    let parts = reduced_block_contributions(decomp, field, tau, phi, policy)?;
    let mut sum = StateVector::zeros(decomp.dim());
    let mut projected = 0.0;
    for (_, v) in &parts {
        projected += v.norm_sqr();
        sum = sum.add(v);
    }
    let mismatch = (projected.sqrt() - phi.norm()).abs();
    if mismatch > policy.ground_tol {
        return Err(KinkError::ProjectionMismatch(mismatch));
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRunReport {
    pub lambda_values: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when any error vanishes (log undefined).
    pub fitted_slope: Option<f64>,
    pub delta: f64,
    /// Whether errors are nonincreasing as λ decreases; reported, not enforced.
    pub monotone: bool,
}

impl ScalingRunReport {
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "lambda": self.lambda_values,
            "error": self.errors,
            "slope": self.fitted_slope,
            "delta": self.delta,
            "monotone": self.monotone,
        })
        .to_string()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,error,bound")?;
        for (l, e) in self.lambda_values.iter().zip(&self.errors) {
            writeln!(w, "{},{},{}", l, e, l.powf(1.0 - self.delta))?;
        }
        Ok(())
    }

    pub fn passes(&self) -> bool {
        self.fitted_slope.is_some_and(|s| s >= 1.0 - self.delta)
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(KinkError::Domain("λ values must lie in (0,1)".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(KinkError::Domain("λ values must be strictly decreasing".into()));
    }
    Ok(())
}

/// `err(λ) = ‖e^{iτH/λ}U^λ(τ/λ)φ − Σ_E 𝕋e^{−i∫P(E)VP(E)}P(E)φ‖` and its log–log slope.
pub fn scaling_experiment(
    chain: &ChainSpec,
    field: &FieldSpec,
    phi: &StateVector,
    tau: f64,
    lambdas: &[f64],
    delta: f64,
    policy: &NumericPolicy,
) -> Result<ScalingRunReport> {
    check_lambdas(lambdas)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(KinkError::Domain("δ must lie in (0,1)".into()));
    }
    let h = build_hamiltonian_with(chain, policy)?;
    let decomp = spectral_decomposition(&h, true, policy)?;
    let reference = reduced_evolution_spectral(&decomp, field, tau, phi, policy)?;
    let errors = lambdas
        .par_iter()
        .map(|&l| -> Result<f64> {
            let t = tau / l;
            let psi = propagate(&h, field, l, t, phi, policy)?.state;
            let back = decomp.apply_function(|e| C64::from_polar(1.0, e * t), &psi);
            Ok(back.distance(&reference))
        })
        .collect::<Result<Vec<f64>>>()?;
    let fitted_slope = if errors.iter().all(|&e| e > 0.0) && errors.len() >= 2 {
        let lx: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
        let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        linear_fit(&lx, &ly).map(|f| f.0)
    } else {
        None
    };
    Ok(ScalingRunReport {
        lambda_values: lambdas.to_vec(),
        monotone: errors.windows(2).all(|w| w[1] <= w[0]),
        errors,
        fitted_slope,
        delta,
    })
}

/// `X + λH⁺(1 − P(0))V` with `X = P(0)VP(0)`, applied through the spectral decomposition.
struct CorrectionGenerator<'a> {
    decomp: &'a SpectralDecomposition,
    v: &'a SparseOperator,
    p0: &'a DMatrix<C64>,
    lambda: f64,
    cutoff: f64,
    bound: f64,
}

impl CorrectionGenerator<'_> {
    fn project0(&self, x: &[C64]) -> Vec<C64> {
        let c = self.p0.adjoint() * DVector::from_column_slice(x);
        (self.p0 * c).iter().copied().collect()
    }
}

impl LinearMap for CorrectionGenerator<'_> {
    fn dim(&self) -> usize {
        self.v.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let n = self.dim();
        let mut vx = vec![ZERO; n];
        self.v.apply_into(x, &mut vx);
        let cut = self.cutoff;
        let hinv = self.decomp.apply_function(
            |e| if e.abs() > cut { C64::new(1.0 / e, 0.0) } else { ZERO },
            &StateVector::from_vec(vx),
        );
        let px = self.project0(x);
        let mut vpx = vec![ZERO; n];
        self.v.apply_into(&px, &mut vpx);
        let xpart = self.project0(&vpx);
        for i in 0..n {
            y[i] = xpart[i] + hinv.amplitudes()[i] * self.lambda;
        }
    }

    fn norm_bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Debug, Clone)]
pub struct CorrectionTerms {
    /// `e^{−iτP(0)VP(0)}φ`.
    pub leading: StateVector,
    /// `λ Σ_{E>0} E⁻¹ e^{−iτP(E)VP(E)} P(E)Vφ`.
    pub excited: StateVector,
    /// `P(0)V(e^{−iτ[X + λH⁺(1−P(0))V]} − e^{−iτX})φ`.
    pub ground: StateVector,
}

impl CorrectionTerms {
    pub fn corrected(&self) -> StateVector {
        self.leading.add(&self.excited).add(&self.ground)
    }
}

/// Leading term and first-order correction for a time-independent `V` and `φ ∈ ker H`.
pub fn first_order_correction(
    chain: &ChainSpec,
    v: &SparseOperator,
    tau: f64,
    lambda: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<CorrectionTerms> {
    let h = build_hamiltonian_with(chain, policy)?;
    let decomp = spectral_decomposition(&h, true, policy)?;
    correction_with(&h, &decomp, v, tau, lambda, phi, policy)
}

fn correction_with(
    h: &SparseOperator,
    decomp: &SpectralDecomposition,
    v: &SparseOperator,
    tau: f64,
    lambda: f64,
    phi: &StateVector,
    policy: &NumericPolicy,
) -> Result<CorrectionTerms> {
    phi.check_dim(h.dim())?;
    if v.dim() != h.dim() {
        return Err(KinkError::Dimension {
            expected: h.dim(),
            got: v.dim(),
        });
    }
    let res = h.apply(phi).norm();
    if res > policy.ground_tol {
        return Err(KinkError::Precondition(format!(
            "φ is not annihilated by H (residual {res:e})"
        )));
    }
    let k0 = decomp
        .kernel_cluster(policy.pinv_cutoff)
        .ok_or_else(|| KinkError::Consistency("no kernel cluster".into()))?;
    let w0 = decomp.cluster_basis(k0);
    let p = to_dvector(phi);
    let vcompressed = |w: &DMatrix<C64>| {
        let mut av = DMatrix::zeros(w.nrows(), w.ncols());
        for j in 0..w.ncols() {
            let col: Vec<C64> = w.column(j).iter().copied().collect();
            let mut out = vec![ZERO; w.nrows()];
            v.apply_into(&col, &mut out);
            av.set_column(j, &DVector::from_vec(out));
        }
        w.adjoint() * av
    };
    let x0 = vcompressed(&w0);
    let lead_c = dense_expm(&(&x0 * C64::new(0.0, -tau))) * (w0.adjoint() * &p);
    let leading = from_dvector(&(&w0 * lead_c));
    let vphi = to_dvector(&v.apply(phi));
    let mut excited = StateVector::zeros(h.dim());
    if lambda != 0.0 {
        for (ci, cl) in decomp.clusters().iter().enumerate() {
            if ci == k0 || cl.energy.abs() <= policy.pinv_cutoff {
                continue;
            }
            let w = decomp.cluster_basis(ci);
            let c = w.adjoint() * &vphi;
            if c.norm() == 0.0 {
                continue;
            }
            let evolved = dense_expm(&(vcompressed(&w) * C64::new(0.0, -tau))) * c;
            excited = excited.add(&from_dvector(&(&w * evolved)).scaled(C64::new(lambda / cl.energy, 0.0)));
        }
    }
    let gap = decomp
        .clusters()
        .iter()
        .map(|c| c.energy.abs())
        .filter(|&e| e > policy.pinv_cutoff)
        .fold(f64::INFINITY, f64::min);
    let vn = v.norm_bound();
    let gen = CorrectionGenerator {
        decomp,
        v,
        p0: &w0,
        lambda,
        cutoff: policy.pinv_cutoff,
        bound: vn + lambda.abs() * vn / gap.min(f64::MAX),
    };
    let full = expm_action_with(&gen, C64::new(0.0, -tau), phi, policy.expm_tol);
    let diff = full.sub(&leading);
    let ground = StateVector::from_vec(gen.project0(v.apply(&diff).amplitudes()));
    Ok(CorrectionTerms {
        leading,
        excited,
        ground,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRow {
    pub lambda: f64,
    /// `‖exact − leading‖`.
    pub error_leading: f64,
    /// `‖exact − (leading + correction)‖`.
    pub error_corrected: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionScanReport {
    pub tau: f64,
    pub rows: Vec<CorrectionRow>,
    pub improves_everywhere: bool,
    /// Ratio nonincreasing as λ decreases.
    pub ratio_monotone: bool,
}

impl CorrectionScanReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,error_leading,error_corrected,ratio")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.lambda, r.error_leading, r.error_corrected, r.ratio)?;
        }
        Ok(())
    }
}

/// Compares leading and corrected approximations with exact propagation over a λ list.
pub fn correction_scan(
    chain: &ChainSpec,
    field: &FieldSpec,
    phi: &StateVector,
    tau: f64,
    lambdas: &[f64],
    policy: &NumericPolicy,
) -> Result<CorrectionScanReport> {
    if !field.is_time_independent() {
        return Err(KinkError::Precondition(
            "the correction needs a time-independent field".into(),
        ));
    }
    check_lambdas(lambdas)?;
    let h = build_hamiltonian_with(chain, policy)?;
    let decomp = spectral_decomposition(&h, true, policy)?;
    let v = field.constant_part();
    let rows = lambdas
        .par_iter()
        .map(|&l| -> Result<CorrectionRow> {
            let t = tau / l;
            let psi = propagate(&h, field, l, t, phi, policy)?.state;
            let exact = decomp.apply_function(|e| C64::from_polar(1.0, e * t), &psi);
            let terms = correction_with(&h, &decomp, v, tau, l, phi, policy)?;
            let error_leading = exact.distance(&terms.leading);
            let error_corrected = exact.distance(&terms.corrected());
            Ok(CorrectionRow {
                lambda: l,
                error_leading,
                error_corrected,
                ratio: error_corrected / error_leading,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrectionScanReport {
        tau,
        improves_everywhere: rows.iter().all(|r| r.error_corrected < r.error_leading),
        ratio_monotone: rows.windows(2).all(|w| w[1].ratio <= w[0].ratio),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xxz_core::{build_hamiltonian, kink_state, HalfInt};

    fn setup(len: usize) -> (ChainSpec, SparseOperator, StateVector) {
        let chain = ChainSpec::new(1, len as i64, 2.0).unwrap();
        let h = build_hamiltonian(&chain).unwrap();
        let phi = kink_state(&chain, HalfInt::from_twice(len as i64 % 2)).unwrap();
        (chain, h, phi)
    }

    #[test]
    fn graph_counts_and_signs() {
        for n in 1..=12 {
            let g = enumerate_graphs(n).unwrap();
            assert_eq!(g.len(), 1 << (n - 1));
            for c in &g {
                assert_eq!(c.n(), n);
                assert_eq!(c.sign as i32, if c.parts.len() % 2 == 1 { 1 } else { -1 });
            }
        }
        assert_eq!(enumerate_graphs(1).unwrap()[0].sign, 1);
        assert!(enumerate_graphs(0).is_err());
        assert!(enumerate_graphs(21).is_err());
    }

    #[test]
    fn composition_bond_data() {
        let g = SignedComposition {
            parts: vec![2, 1, 3],
            sign: 1,
        };
        assert_eq!((1..=6).map(|j| g.p(j)).collect::<Vec<_>>(), vec![3, 3, 4, 7, 7, 7]);
        let k: Vec<C64> = (1..=6).map(|i| C64::new(i as f64, 0.0)).collect();
        assert_eq!(g.k_sum(4, &k), C64::new(15.0, 0.0));
    }

    #[test]
    fn first_order_integral() {
        let e = [0.3, 1.1];
        let k = [C64::new(0.5, 0.2)];
        let (l, t) = (0.4, 2.0);
        let d = e[1] - e[0] + I * l * k[0];
        let want = I / d * ((-I * t * d).exp() - ONE);
        assert!((iterated_integral_closed_form(&e, &k, l, t).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let e = [0.1, -0.7, 1.3, 0.4];
        let k = [C64::new(0.5, 0.3), C64::new(1.0, -0.2), C64::new(0.3, 0.0)];
        for n in 1..=3 {
            let a = iterated_integral_closed_form(&e[..=n], &k[..n], 0.6, 3.0).unwrap();
            let b = iterated_integral_quadrature(&e[..=n], &k[..n], 0.6, 3.0, 32).unwrap();
            assert!((a - b).norm() <= 1e-9 * b.norm(), "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn equal_energies_decaying_rates() {
        // ∫₀ᵗ e^{−a s₁} ∫₀^{s₁} e^{−b s₂} = (1−e^{−at})/(ab) − (1−e^{−(a+b)t})/(b(a+b))
        let (a, b, t): (f64, f64, f64) = (0.8, 1.7, 2.5);
        let want = (1.0 - (-a * t).exp()) / (a * b) - (1.0 - (-(a + b) * t).exp()) / (b * (a + b));
        let k = [C64::new(-a, 0.0), C64::new(-b, 0.0)];
        let closed = iterated_integral_closed_form(&[0.0; 3], &k, 1.0, t).unwrap();
        assert!((closed.re - want).abs() < 1e-12 && closed.im.abs() < 1e-12);
    }

    #[test]
    fn singular_denominator_reported() {
        let r = iterated_integral_closed_form(&[0.5, 0.5], &[ZERO], 1.0, 1.0);
        assert!(matches!(r, Err(KinkError::Singular { vertex: 1, .. })));
    }

    #[test]
    fn propagate_matches_dense_exponential() {
        let (chain, h, phi) = setup(4);
        let field = FieldSpec::single_site(chain, 2, [0.7, -0.2, 0.4]).unwrap();
        let pol = NumericPolicy::default();
        let lam = 0.3;
        let r = propagate(&h, &field, lam, 3.0, &phi, &pol).unwrap();
        let gen = h.to_dense() + field.operator_at(0.0).to_dense() * C64::new(lam, 0.0);
        let want = dense_expm(&(gen * C64::new(0.0, -3.0))) * to_dvector(&phi);
        assert!((to_dvector(&r.state) - want).norm() < 1e-10);
        assert!(r.norm_drift < 1e-9);
    }

    #[test]
    fn propagate_time_dependent_converges() {
        let (chain, h, phi) = setup(4);
        let field = FieldSpec::new(
            chain,
            vec![FieldTerm {
                site: 2,
                b: [1.0, 0.0, 0.5],
                modulation: Modulation::Cosine { omega: 1.0, phase: 0.0 },
            }],
        )
        .unwrap();
        let pol = NumericPolicy::default();
        let r = propagate(&h, &field, 0.5, 4.0, &phi, &pol).unwrap();
        assert!(r.error_estimate <= 1e-10);
        assert!(r.norm_drift < 1e-9);
        // λ = 0 reduces to e^{−itH}φ = φ for a ground state
        let r0 = propagate(&h, &field, 0.0, 4.0, &phi, &pol).unwrap();
        assert!(r0.state.distance(&phi) < 1e-12);
    }

    #[test]
    fn dyson_remainder_within_bound() {
        let (chain, h, phi) = setup(4);
        let field = FieldSpec::single_site(chain, 3, [0.5, 0.3, -0.6]).unwrap();
        let pol = NumericPolicy::default();
        let (lam, t) = (0.4, 2.0);
        let exact = propagate(&h, &field, lam, t, &phi, &pol).unwrap().state;
        let exact = crate::linalg::expm_action(&h, C64::new(0.0, t), &exact);
        let mut prev = f64::INFINITY;
        for n in 1..=5 {
            let d = dyson_partial_sum(&h, &field, lam, t, n, &phi, &pol).unwrap();
            let err = d.state.distance(&exact);
            assert!(err <= d.bound * (1.0 + 1e-9) + 1e-12, "N={n}: {err} > {}", d.bound);
            assert!(d.bound <= d.stated_bound);
            assert!(err < prev);
            prev = err;
        }
        let d1 = dyson_partial_sum(&h, &field, lam, t, 1, &phi, &pol).unwrap();
        assert!(d1.state.distance(&phi) < 1e-12);
    }

    #[test]
    fn reduced_constant_field_is_block_exponential() {
        let (chain, h, phi) = setup(5);
        let pol = NumericPolicy::default();
        let family = KinkGroundFamily::new(&chain).unwrap();
        let field = FieldSpec::uniform(chain, [0.4, 0.1, 0.3]).unwrap();
        let got = reduced_evolution_ground(&family, &field, 1.3, &phi, &pol).unwrap();
        let p = family.projector().unwrap();
        let via_p = reduced_evolution(&p, &field, 1.3, &phi, &pol).unwrap();
        assert!(got.distance(&via_p) < 1e-10);
        let pd = p.to_dense();
        let x = &pd * field.operator_at(0.0).to_dense() * &pd;
        let want = dense_expm(&(x * C64::new(0.0, -1.3))) * to_dvector(&phi);
        assert!((to_dvector(&got) - want).norm() < 1e-10);
        let unchanged = reduced_evolution_ground(&family, &field, 0.0, &phi, &pol).unwrap();
        assert!(unchanged.distance(&phi) < 1e-14);
        let outside = StateVector::basis(chain.dim(), 1);
        assert!(matches!(
            reduced_evolution_ground(&family, &field, 1.0, &outside, &pol),
            Err(KinkError::ProjectionMismatch(_))
        ));
        let _ = h;
    }

    #[test]
    fn reduced_time_dependent_matches_fine_product() {
        let (chain, _, phi) = setup(4);
        let pol = NumericPolicy::default();
        let family = KinkGroundFamily::new(&chain).unwrap();
        let field = FieldSpec::new(
            chain,
            vec![FieldTerm {
                site: 2,
                b: [1.0, 0.0, 0.4],
                modulation: Modulation::Cosine { omega: 1.0, phase: 0.0 },
            }],
        )
        .unwrap();
        let tau = 2.0;
        let got = reduced_evolution_ground(&family, &field, tau, &phi, &pol).unwrap();
        // midpoint ordered product with Richardson over two resolutions
        let states = family.states();
        let w = DMatrix::from_fn(chain.dim(), states.len(), |r, c| states[c].1.amplitudes()[r]);
        let v0 = w.adjoint() * field.operator_at(0.0).to_dense() * &w;
        let product = |n: usize| {
            let h = tau / n as f64;
            let mut c = w.adjoint() * to_dvector(&phi);
            for k in 0..n {
                let s = (k as f64 + 0.5) * h;
                c = dense_expm(&(&v0 * C64::new(0.0, -h * s.cos()))) * c;
            }
            &w * c
        };
        let (a, b) = (product(4000), product(8000));
        let oracle = &b + (&b - &a) / C64::new(3.0, 0.0);
        assert!((to_dvector(&got) - oracle).norm() < 1e-8);
    }

    #[test]
    fn zero_field_scaling_is_exact() {
        let (chain, _, phi) = setup(4);
        let pol = NumericPolicy::default();
        let field = FieldSpec::zero(chain);
        let r = scaling_experiment(&chain, &field, &phi, 1.0, &[0.2, 0.1], 0.25, &pol).unwrap();
        assert!(r.errors.iter().all(|&e| e < 1e-12));
        assert!(r.fitted_slope.is_none() || r.errors.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn correction_trivial_cases() {
        let (chain, h, phi) = setup(4);
        let pol = NumericPolicy::default();
        let v = FieldSpec::single_site(chain, 2, [1.0, 0.0, 0.5])
            .unwrap()
            .operator_at(0.0);
        let t0 = first_order_correction(&chain, &v, 1.0, 0.0, &phi, &pol).unwrap();
        assert!(t0.excited.norm() == 0.0 && t0.ground.norm() < 1e-12);
        let zero = SparseOperator::zero(h.dim());
        let tz = first_order_correction(&chain, &zero, 1.0, 0.1, &phi, &pol).unwrap();
        assert!(tz.corrected().distance(&phi) < 1e-14);
        let bad = StateVector::basis(h.dim(), 3);
        assert!(matches!(
            first_order_correction(&chain, &v, 1.0, 0.1, &bad, &pol),
            Err(KinkError::Precondition(_))
        ));
    }
}
