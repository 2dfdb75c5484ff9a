//! Finite XXZ kink chain on sites `a..=b`: Hamiltonian, q-deformed lowering operator,
//! kink ground states and sector-wise spectral decomposition.
//!
//! Basis convention: bit `i` of a basis index is set when the spin at site `a + i` is down.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KinkError, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, SparseOperator, StateVector, C64, I, ONE, ZERO};
use crate::policy::NumericPolicy;

/// Largest chain for which a full `2^L` operator is assembled.
pub const MAX_SITES: usize = 22;

/// Smaller root of `q² − 2Δq + 1 = 0`.
pub fn q_from_delta(delta: f64) -> Result<f64> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(KinkError::Domain(format!(
            "anisotropy must satisfy Δ > 1 (got {delta})"
        )));
    }
    // 1/(Δ + √(Δ²−1)) avoids cancellation at large Δ.
    Ok(1.0 / (delta + (delta * delta - 1.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    a: i64,
    b: i64,
    delta: f64,
    q: f64,
}

impl ChainSpec {
    pub fn new(a: i64, b: i64, delta: f64) -> Result<Self> {
        let q = q_from_delta(delta)?;
        Self::validated(a, b, delta, q)
    }

    /// Chain parametrized by `q ∈ (0,1)`; `Δ = (q + 1/q)/2`.
    pub fn from_q(a: i64, b: i64, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(KinkError::Domain(format!("q must lie in (0,1) (got {q})")));
        }
        Self::validated(a, b, 0.5 * (q + 1.0 / q), q)
    }

    /// Chain of `len` sites placed so that the kink centre (between sites 0 and 1) is central.
    pub fn centered(len: usize, delta: f64) -> Result<Self> {
        let a = -(len as i64 / 2 - 1);
        Self::new(a, a + len as i64 - 1, delta)
    }

    fn validated(a: i64, b: i64, delta: f64, q: f64) -> Result<Self> {
        if b <= a {
            return Err(KinkError::Domain(format!("need b > a (got a = {a}, b = {b})")));
        }
        let len = (b - a + 1) as usize;
        if len > MAX_SITES {
            return Err(KinkError::Resource(format!(
                "chain of {len} sites exceeds the {MAX_SITES}-site limit"
            )));
        }
        let spec = Self { a, b, delta, q };
        if (q + 1.0 / q - 2.0 * delta).abs() > 1e-12 * delta.max(1.0) {
            return Err(KinkError::Consistency("q + 1/q ≠ 2Δ".into()));
        }
        Ok(spec)
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn len(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        1 << self.len()
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.a..=self.b
    }

    /// Bit position of site `x`.
    pub fn bit(&self, x: i64) -> Result<usize> {
        if x < self.a || x > self.b {
            return Err(KinkError::Domain(format!(
                "site {x} outside chain [{}, {}]",
                self.a, self.b
            )));
        }
        Ok((x - self.a) as usize)
    }

    /// Total `S³` of basis index `idx`, doubled.
    pub fn twice_sz(&self, idx: usize) -> i64 {
        self.len() as i64 - 2 * idx.count_ones() as i64
    }
}

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_twice(t: i64) -> Self {
        Self(t)
    }

    pub fn from_int(n: i64) -> Self {
        Self(2 * n)
    }

    /// Parses a multiple of ½.
    pub fn from_f64(v: f64) -> Result<Self> {
        let t = 2.0 * v;
        if (t - t.round()).abs() > 1e-12 {
            return Err(KinkError::Domain(format!("{v} is not a half-integer")));
        }
        Ok(Self(t.round() as i64))
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinComponent {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Single-site spin operator `S^c_x` on the full chain.
pub fn spin_operator(chain: &ChainSpec, site: i64, c: SpinComponent) -> Result<SparseOperator> {
    let bit = 1usize << chain.bit(site)?;
    let dim = chain.dim();
    let mut trip = Vec::with_capacity(dim);
    for idx in 0..dim {
        let down = idx & bit != 0;
        match c {
            SpinComponent::Z => trip.push((idx, idx, C64::new(if down { -0.5 } else { 0.5 }, 0.0))),
            SpinComponent::Plus => {
                if down {
                    trip.push((idx ^ bit, idx, ONE));
                }
            }
            SpinComponent::Minus => {
                if !down {
                    trip.push((idx ^ bit, idx, ONE));
                }
            }
            SpinComponent::X => trip.push((idx ^ bit, idx, C64::new(0.5, 0.0))),
            SpinComponent::Y => {
                // S² = (S⁺ − S⁻)/(2i)
                let v = if down { -0.5 * I } else { 0.5 * I };
                trip.push((idx ^ bit, idx, v));
            }
        }
    }
    let op = SparseOperator::from_triplets(dim, trip);
    Ok(match c {
        SpinComponent::Plus | SpinComponent::Minus => op,
        _ => op.flagged_hermitian_unchecked(true),
    })
}

/// Total `S³`.
pub fn total_sz(chain: &ChainSpec) -> SparseOperator {
    let d: Vec<C64> = (0..chain.dim())
        .map(|idx| C64::new(chain.twice_sz(idx) as f64 / 2.0, 0.0))
        .collect();
    SparseOperator::diagonal(&d)
}

/// Kink Hamiltonian in spin form: nearest-neighbour XXZ couplings plus the boundary field
/// `−½√(1−Δ⁻²)(S³_a − S³_b)`. Cross-checked against [`build_hamiltonian_projector_sum`].
pub fn build_hamiltonian(chain: &ChainSpec) -> Result<SparseOperator> {
    build_hamiltonian_with(chain, &NumericPolicy::default())
}

pub fn build_hamiltonian_with(chain: &ChainSpec, policy: &NumericPolicy) -> Result<SparseOperator> {
    let h = spin_form(chain);
    let p = build_hamiltonian_projector_sum(chain);
    let dev = h.sub(&p).max_norm();
    if dev > policy.construction_tol {
        return Err(KinkError::Consistency(format!(
            "spin and projector forms of H differ by {dev:e}"
        )));
    }
    h.flagged_hermitian(policy.hermitian_tol)
}

fn spin_form(chain: &ChainSpec) -> SparseOperator {
    let len = chain.len();
    let dim = chain.dim();
    let inv_delta = 1.0 / chain.delta();
    let boundary = 0.5 * (1.0 - inv_delta * inv_delta).sqrt();
    let mut trip = Vec::with_capacity(dim * len);
    for idx in 0..dim {
        let mut diag = 0.0;
        for i in 0..len - 1 {
            let s1 = if idx >> i & 1 == 0 { 0.5 } else { -0.5 };
            let s2 = if idx >> (i + 1) & 1 == 0 { 0.5 } else { -0.5 };
            diag += 0.25 - s1 * s2;
            if s1 != s2 {
                // −(1/Δ)(S¹S¹ + S²S²) flips an antiparallel pair with amplitude −1/(2Δ).
                trip.push((idx ^ (0b11 << i), idx, C64::new(-0.5 * inv_delta, 0.0)));
            }
        }
        let sa = if idx & 1 == 0 { 0.5 } else { -0.5 };
        let sb = if idx >> (len - 1) & 1 == 0 { 0.5 } else { -0.5 };
        diag -= boundary * (sa - sb);
        trip.push((idx, idx, C64::new(diag, 0.0)));
    }
    SparseOperator::from_triplets(dim, trip)
}

/// `Σ_x P^q_{x,x+1}` with `P^q` the projector onto `(q|↑↓⟩ − |↓↑⟩)/√(1+q²)`.
pub fn build_hamiltonian_projector_sum(chain: &ChainSpec) -> SparseOperator {
    let q = chain.q();
    let norm = 1.0 / (1.0 + q * q);
    let dim = chain.dim();
    let mut trip = Vec::new();
    for i in 0..chain.len() - 1 {
        for idx in 0..dim {
            // Local pair (site i, site i+1) in the state ↑↓ means bit i clear, bit i+1 set.
            let pair = (idx >> i) & 0b11;
            if pair != 0b10 {
                continue;
            }
            let ud = idx;
            let du = idx ^ (0b11 << i);
            // |v⟩ = (q|ud⟩ − |du⟩)/√(1+q²)
            let coeff = [(ud, q), (du, -1.0)];
            for &(r, cr) in &coeff {
                for &(c, cc) in &coeff {
                    trip.push((r, c, C64::new(norm * cr * cc, 0.0)));
                }
            }
        }
    }
    SparseOperator::from_triplets(dim, trip).flagged_hermitian_unchecked(true)
}

/// q-deformed lowering operator `S⁻ = Σ_x S⁻_x ⊗ t_{x+1} ⊗ … ⊗ t_b`, `t = q^{2S³}`.
pub fn lowering_operator(chain: &ChainSpec) -> SparseOperator {
    let q = chain.q();
    let len = chain.len();
    let mut trip = Vec::new();
    for idx in 0..chain.dim() {
        for i in 0..len {
            if idx >> i & 1 == 1 {
                continue;
            }
            let right = idx >> (i + 1);
            let n_right = (len - i - 1) as i32;
            let downs = right.count_ones() as i32;
            let twist = q.powi(n_right - 2 * downs);
            trip.push((idx | 1 << i, idx, C64::new(twist, 0.0)));
        }
    }
    SparseOperator::from_triplets(chain.dim(), trip)
}

/// Normalized kink state in the sector of total `S³ = m`, with nonnegative amplitudes.
///
/// The state is the normalized `(S⁻)^k|↑…↑⟩`, `k = L/2 − m`. In the product basis its
/// amplitude on a configuration with down spins at sites `D` is proportional to
/// `q^{−Σ_{x∈D} x}`: moving a down spin one site to the left multiplies it by `q`.
pub fn kink_state(chain: &ChainSpec, m: HalfInt) -> Result<StateVector> {
    let len = chain.len() as i64;
    let k2 = len - m.twice();
    if m.twice().abs() > len || k2 % 2 != 0 {
        return Err(KinkError::Domain(format!(
            "m = {} is not a sector of a {len}-site chain",
            m.value()
        )));
    }
    let k = (k2 / 2) as usize;
    let l = len as usize;
    let s_max = (k * (2 * l - k - 1) / 2) as i32;
    let q = chain.q();
    let mut amps = vec![ZERO; chain.dim()];
    for (idx, a) in amps.iter_mut().enumerate() {
        if idx.count_ones() as usize != k {
            continue;
        }
        let s: i32 = (0..l).filter(|i| idx >> i & 1 == 1).map(|i| i as i32).sum();
        *a = C64::new(q.powi(s_max - s), 0.0);
    }
    StateVector::from_vec(amps).normalized()
}

/// All `L+1` kink ground states of a chain.
#[derive(Debug, Clone)]
pub struct KinkGroundFamily {
    chain: ChainSpec,
    states: Vec<(HalfInt, StateVector)>,
}

/// Residuals of the defining properties of a [`KinkGroundFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyDiagnostics {
    pub max_orthonormality_error: f64,
    pub max_residual: f64,
    pub projector_idempotency: f64,
    pub projector_hermiticity: f64,
    pub rank: usize,
}

impl KinkGroundFamily {
    pub fn new(chain: &ChainSpec) -> Result<Self> {
        let len = chain.len() as i64;
        let states = (0..=len)
            .rev()
            .map(|j| {
                let m = HalfInt::from_twice(2 * j - len);
                kink_state(chain, m).map(|s| (m, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { chain: *chain, states })
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    /// States ordered by decreasing `m`.
    pub fn states(&self) -> &[(HalfInt, StateVector)] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, m: HalfInt) -> Result<&StateVector> {
        self.states
            .iter()
            .find(|(mm, _)| *mm == m)
            .map(|(_, s)| s)
            .ok_or_else(|| KinkError::Domain(format!("no kink state with m = {}", m.value())))
    }

    /// `P(0)v = Σ_m |m⟩⟨m|v⟩`.
    pub fn apply_projector(&self, v: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(v.dim());
        for (_, s) in &self.states {
            out.axpy(s.inner(v), s);
        }
        out
    }

    /// Ground-space projector as a sparse operator.
    pub fn projector(&self) -> Result<SparseOperator> {
        let dim = self.chain.dim();
        let sector_size = self.states.iter().map(|(_, s)| support(s).len().pow(2)).sum::<usize>();
        if sector_size > 20_000_000 {
            return Err(KinkError::Resource(
                "dense ground-space projector too large; use apply_projector".into(),
            ));
        }
        let mut trip = Vec::with_capacity(sector_size);
        for (_, s) in &self.states {
            let sup = support(s);
            for &r in &sup {
                for &c in &sup {
                    trip.push((r, c, s.amplitudes()[r] * s.amplitudes()[c].conj()));
                }
            }
        }
        Ok(SparseOperator::from_triplets(dim, trip).flagged_hermitian_unchecked(true))
    }

    /// Matrix of `op` in the kink basis, rows and columns ordered as [`Self::states`].
    pub fn matrix(&self, op: &SparseOperator) -> DMatrix<C64> {
        let n = self.states.len();
        let images: Vec<StateVector> = self.states.iter().map(|(_, s)| op.apply(s)).collect();
        DMatrix::from_fn(n, n, |i, j| self.states[i].1.inner(&images[j]))
    }

    pub fn diagnostics(&self, h: &SparseOperator) -> Result<FamilyDiagnostics> {
        let n = self.states.len();
        let mut orth: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                orth = orth.max((self.states[i].1.inner(&self.states[j].1) - target).norm());
            }
        }
        let residual = self.states.iter().map(|(_, s)| h.apply(s).norm()).fold(0.0, f64::max);
        let (idem, herm) = if self.chain.len() <= 10 {
            let p = self.projector()?;
            (p.mul(&p).sub(&p).max_norm(), p.sub(&p.adjoint()).max_norm())
        } else {
            (self.idempotency_by_action(), 0.0)
        };
        Ok(FamilyDiagnostics {
            max_orthonormality_error: orth,
            max_residual: residual,
            projector_idempotency: idem,
            projector_hermiticity: herm,
            rank: n,
        })
    }

    fn idempotency_by_action(&self) -> f64 {
        self.states
            .iter()
            .map(|(_, s)| {
                self.apply_projector(&self.apply_projector(s))
                    .distance(&self.apply_projector(s))
            })
            .fold(0.0, f64::max)
    }

    /// Checks orthonormality, `H|m⟩ = 0` and projector idempotency against the policy.
    pub fn verify(&self, h: &SparseOperator, policy: &NumericPolicy) -> Result<FamilyDiagnostics> {
        let d = self.diagnostics(h)?;
        let tol = policy.ground_tol;
        if d.max_orthonormality_error > tol || d.max_residual > tol || d.projector_idempotency > tol {
            return Err(KinkError::Consistency(format!("kink family check failed: {d:?}")));
        }
        Ok(d)
    }

    /// Site magnetization profile `⟨m|S³_x|m⟩` for `x = a..=b`.
    pub fn profile(&self, m: HalfInt) -> Result<Vec<f64>> {
        let s = self.state(m)?;
        let len = self.chain.len();
        let mut prof = vec![0.0; len];
        for (idx, amp) in s.amplitudes().iter().enumerate() {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            for (i, p) in prof.iter_mut().enumerate() {
                *p += if idx >> i & 1 == 0 { 0.5 * w } else { -0.5 * w };
            }
        }
        Ok(prof)
    }

    /// `⟨m|S⁺_x|m−1⟩` for site `x`.
    pub fn raising_element(&self, m: HalfInt, x: i64) -> Result<f64> {
        let upper = self.state(m)?;
        let lower = self.state(HalfInt::from_twice(m.twice() - 2))?;
        let bit = 1usize << self.chain.bit(x)?;
        let mut acc = 0.0;
        for (idx, amp) in lower.amplitudes().iter().enumerate() {
            if idx & bit != 0 && amp.re != 0.0 {
                acc += upper.amplitudes()[idx ^ bit].re * amp.re;
            }
        }
        Ok(acc)
    }
}

fn support(s: &StateVector) -> Vec<usize> {
    s.amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, z)| **z != ZERO)
        .map(|(i, _)| i)
        .collect()
}

/// Dense eigenbasis of one invariant block of `H`.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    /// Basis indices spanned by the block.
    pub indices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, in block coordinates.
    pub vectors: DMatrix<C64>,
}

/// Degenerate eigenvalue cluster: member `(block, column)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub energy: f64,
    pub members: Vec<(usize, usize)>,
}

impl EigenCluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    blocks: Vec<SectorBlock>,
    clusters: Vec<EigenCluster>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[SectorBlock] {
        &self.blocks
    }

    pub fn clusters(&self) -> &[EigenCluster] {
        &self.clusters
    }

    /// All eigenvalues with multiplicity, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Index of the cluster at energy `0`, if any.
    pub fn kernel_cluster(&self, tol: f64) -> Option<usize> {
        self.clusters.iter().position(|c| c.energy.abs() <= tol)
    }

    /// Eigenvector `(block, column)` embedded in the full space.
    pub fn vector(&self, block: usize, col: usize) -> StateVector {
        let b = &self.blocks[block];
        let mut v = StateVector::zeros(self.dim);
        for (k, &idx) in b.indices.iter().enumerate() {
            v.amplitudes_mut()[idx] = b.vectors[(k, col)];
        }
        v
    }

    /// Orthonormal basis of cluster `c` as a `dim × multiplicity` matrix.
    pub fn cluster_basis(&self, c: usize) -> DMatrix<C64> {
        let members = &self.clusters[c].members;
        let mut m = DMatrix::zeros(self.dim, members.len());
        for (j, &(b, col)) in members.iter().enumerate() {
            let blk = &self.blocks[b];
            for (k, &idx) in blk.indices.iter().enumerate() {
                m[(idx, j)] = blk.vectors[(k, col)];
            }
        }
        m
    }

    /// `P(E_c) v`.
    pub fn apply_projector(&self, c: usize, v: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(self.dim);
        for &(b, col) in &self.clusters[c].members {
            let blk = &self.blocks[b];
            let mut ov = ZERO;
            for (k, &idx) in blk.indices.iter().enumerate() {
                ov += blk.vectors[(k, col)].conj() * v.amplitudes()[idx];
            }
            for (k, &idx) in blk.indices.iter().enumerate() {
                out.amplitudes_mut()[idx] += ov * blk.vectors[(k, col)];
            }
        }
        out
    }

    /// `f(H) v` for a scalar function `f`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64, v: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(self.dim);
        for blk in &self.blocks {
            let local: Vec<C64> = blk.indices.iter().map(|&i| v.amplitudes()[i]).collect();
            for (col, &e) in blk.eigenvalues.iter().enumerate() {
                let ov: C64 = (0..blk.indices.len())
                    .map(|k| blk.vectors[(k, col)].conj() * local[k])
                    .sum();
                let c = f(e) * ov;
                if c == ZERO {
                    continue;
                }
                for (k, &idx) in blk.indices.iter().enumerate() {
                    out.amplitudes_mut()[idx] += c * blk.vectors[(k, col)];
                }
            }
        }
        out
    }

    /// Dense projector `P(E_c)`.
    pub fn projector_dense(&self, c: usize) -> DMatrix<C64> {
        let u = self.cluster_basis(c);
        &u * u.adjoint()
    }

    /// `Σ_E E·P(E)` as a dense matrix.
    pub fn reconstruct_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (c, cl) in self.clusters.iter().enumerate() {
            m += self.projector_dense(c) * C64::new(cl.energy, 0.0);
        }
        m
    }

    /// `Σ_E P(E)` as a dense matrix.
    pub fn resolution_of_identity(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for c in 0..self.clusters.len() {
            m += self.projector_dense(c);
        }
        m
    }
}

/// Groups basis indices by number of down spins.
fn sectors(dim: usize) -> Vec<Vec<usize>> {
    let len = dim.trailing_zeros() as usize;
    let mut out = vec![Vec::new(); len + 1];
    for idx in 0..dim {
        out[idx.count_ones() as usize].push(idx);
    }
    out
}

fn check_block_diagonal(h: &SparseOperator) -> Result<()> {
    for (r, c, _) in h.iter() {
        if r.count_ones() != c.count_ones() {
            return Err(KinkError::Precondition(
                "operator mixes total-S³ sectors; use the unsectorized mode".into(),
            ));
        }
    }
    Ok(())
}

fn check_input(h: &SparseOperator, sectorized: bool, policy: &NumericPolicy) -> Result<()> {
    if !h.is_hermitian() {
        return Err(KinkError::Precondition("operator is not flagged Hermitian".into()));
    }
    let dim = h.dim();
    if sectorized {
        if !dim.is_power_of_two() {
            return Err(KinkError::Precondition(
                "sectorized mode needs a 2^L-dimensional operator".into(),
            ));
        }
        if dim > 1 << policy.max_dense_sites {
            return Err(KinkError::Resource(format!(
                "dimension {dim} exceeds the dense cap of {} sites; use an iterative method",
                policy.max_dense_sites
            )));
        }
        check_block_diagonal(h)
    } else if dim > policy.max_dense_dim {
        Err(KinkError::Resource(format!(
            "dimension {dim} exceeds the unsectorized dense cap {}; use sectorized mode",
            policy.max_dense_dim
        )))
    } else {
        Ok(())
    }
}

/// Eigen-decomposition of a Hermitian operator, optionally block-wise per total-`S³` sector,
/// with eigenvalues clustered at `policy.cluster_tol`.
pub fn spectral_decomposition(
    h: &SparseOperator,
    sectorized: bool,
    policy: &NumericPolicy,
) -> Result<SpectralDecomposition> {
    check_input(h, sectorized, policy)?;
    let groups = if sectorized {
        sectors(h.dim())
    } else {
        vec![(0..h.dim()).collect()]
    };
    let blocks: Vec<SectorBlock> = groups
        .into_par_iter()
        .filter(|g| !g.is_empty())
        .map(|indices| {
            let m = h.dense_block(&indices);
            let (eigenvalues, vectors) = hermitian_eigen(&m);
            SectorBlock {
                indices,
                eigenvalues,
                vectors,
            }
        })
        .collect();
    let mut all: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| blk.eigenvalues.iter().enumerate().map(move |(c, &e)| (e, b, c)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let clusters = cluster(&all, policy.cluster_tol);
    Ok(SpectralDecomposition {
        dim: h.dim(),
        blocks,
        clusters,
    })
}

fn cluster(sorted: &[(f64, usize, usize)], tol: f64) -> Vec<EigenCluster> {
    let mut out: Vec<EigenCluster> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &(e, b, c) in sorted {
        if e - last > tol || out.is_empty() {
            if let Some(cl) = out.last_mut() {
                cl.energy = sum / cl.members.len() as f64;
            }
            out.push(EigenCluster {
                energy: e,
                members: Vec::new(),
            });
            sum = 0.0;
        }
        sum += e;
        out.last_mut().unwrap().members.push((b, c));
        last = e;
    }
    if let Some(cl) = out.last_mut() {
        cl.energy = sum / cl.members.len() as f64;
    }
    out
}

/// Eigenvalues only, computed per total-`S³` sector.
pub fn sector_eigenvalues(h: &SparseOperator, policy: &NumericPolicy) -> Result<Vec<f64>> {
    check_input(h, true, policy)?;
    let mut vals: Vec<f64> = sectors(h.dim())
        .into_par_iter()
        .filter(|g| !g.is_empty())
        .flat_map(|g| hermitian_eigenvalues(&h.dense_block(&g)))
        .collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Number of eigenvalues below `tol` and the smallest eigenvalue above it.
pub fn kernel_and_gap(chain: &ChainSpec, tol: f64, policy: &NumericPolicy) -> Result<(usize, f64)> {
    let h = build_hamiltonian_with(chain, policy)?;
    let vals = sector_eigenvalues(&h, policy)?;
    let kernel = vals.iter().filter(|&&e| e.abs() < tol).count();
    let gap = vals
        .iter()
        .copied()
        .find(|&e| e >= tol)
        .ok_or_else(|| KinkError::Consistency("no excited eigenvalue".into()))?;
    Ok((kernel, gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_roots() {
        assert!((q_from_delta(2.0).unwrap() - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!(q_from_delta(1.0).is_err());
        assert!(q_from_delta(0.5).is_err());
        assert!(q_from_delta(1e12).unwrap() > 0.0);
        assert!((q_from_delta(1.0 + 1e-10).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn two_site_spectrum() {
        let chain = ChainSpec::new(1, 2, 2.0).unwrap();
        let h = build_hamiltonian(&chain).unwrap();
        let d = spectral_decomposition(&h, false, &NumericPolicy::default()).unwrap();
        let e = d.eigenvalues();
        let want = [0.0, 0.0, 0.0, 1.0];
        for (g, w) in e.iter().zip(want) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn lowering_commutes_with_h() {
        for len in 2..=7 {
            let chain = ChainSpec::new(0, len - 1, 1.7).unwrap();
            let h = build_hamiltonian(&chain).unwrap();
            let s = lowering_operator(&chain);
            assert!(h.commutator(&s).max_norm() <= 1e-12);
            assert!(h.commutator(&total_sz(&chain)).max_norm() <= 1e-12);
        }
    }

    #[test]
    fn kink_states_from_lowering() {
        let chain = ChainSpec::new(-2, 3, 2.0).unwrap();
        let s = lowering_operator(&chain);
        let mut v = StateVector::basis(chain.dim(), 0);
        for k in 0..=chain.len() {
            let m = HalfInt::from_twice(chain.len() as i64 - 2 * k as i64);
            let want = kink_state(&chain, m).unwrap();
            assert!(v.normalized().unwrap().distance(&want) < 1e-10);
            v = s.apply(&v);
        }
        assert!(v.norm() == 0.0);
    }

    #[test]
    fn extreme_sectors_are_product_states() {
        let chain = ChainSpec::new(1, 5, 3.0).unwrap();
        let fam = KinkGroundFamily::new(&chain).unwrap();
        let up = fam.profile(HalfInt::from_twice(5)).unwrap();
        let down = fam.profile(HalfInt::from_twice(-5)).unwrap();
        assert!(up.iter().all(|&v| v == 0.5));
        assert!(down.iter().all(|&v| v == -0.5));
        assert!(kink_state(&chain, HalfInt::from_twice(7)).is_err());
        assert!(kink_state(&chain, HalfInt::from_twice(2)).is_err());
    }

    #[test]
    fn family_diagnostics_and_sector_structure() {
        let chain = ChainSpec::new(1, 6, 2.0).unwrap();
        let h = build_hamiltonian(&chain).unwrap();
        let fam = KinkGroundFamily::new(&chain).unwrap();
        let d = fam.verify(&h, &NumericPolicy::default()).unwrap();
        assert_eq!(d.rank, 7);
        // ⟨m|S⁻|m′⟩ real under the nonnegative-amplitude convention.
        let k = fam.matrix(&lowering_operator(&chain));
        assert!(k.iter().all(|z| z.im.abs() <= 1e-12));
        for (r, c, _) in h.iter() {
            assert_eq!(r.count_ones(), c.count_ones());
        }
    }

    #[test]
    fn eight_site_kernel_multiplicity() {
        let chain = ChainSpec::new(1, 8, 2.0).unwrap();
        let h = build_hamiltonian(&chain).unwrap();
        let d = spectral_decomposition(&h, true, &NumericPolicy::default()).unwrap();
        assert!(d.clusters()[0].energy.abs() < 1e-9);
        assert_eq!(d.clusters()[0].multiplicity(), 9);
    }

    #[test]
    fn zero_operator_single_cluster() {
        let z = SparseOperator::zero(16);
        let d = spectral_decomposition(&z, true, &NumericPolicy::default()).unwrap();
        assert_eq!(d.clusters().len(), 1);
        let id = d.resolution_of_identity();
        assert!((id - DMatrix::<C64>::identity(16, 16)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dense_cap_is_enforced() {
        let policy = NumericPolicy {
            max_dense_dim: 8,
            ..NumericPolicy::default()
        };
        let chain = ChainSpec::new(0, 3, 2.0).unwrap();
        let h = build_hamiltonian(&chain).unwrap();
        assert!(matches!(
            spectral_decomposition(&h, false, &policy),
            Err(KinkError::Resource(_))
        ));
        assert!(spectral_decomposition(&h, true, &policy).is_ok());
    }
}
