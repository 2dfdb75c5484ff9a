//! Magnetization profiles of a kink under the reduced one-body dynamics of a uniform field.
//!
//! The initial state is the centred kink `|0⟩`; under the reduced dynamics it spreads over
//! translates `|m⟩` with amplitudes `ψ_m(t) = e^{iθm}⟨m|e^{−itK₀}|0⟩`, where `K₀` is the
//! Stark-Jacobi operator with `α = |B_⊥|·a(q)`, `γ = B₃` and `θ` the azimuth of `B_⊥`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::bessel::BesselTable;
use crate::error::{KinkError, Result};
use crate::kink_profiles::{magnetization_z, p_measure, ptilde_measure, transverse_matrix_element, QSeriesPolicy};
use crate::linalg::C64;
use crate::numerics::{compensated_sum, integrate, linear_fit, CompensatedComplexSum, CompensatedSum};
use crate::stark_jacobi::StarkJacobiParams;

/// Uniform field `B = (B₁, B₂, B₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformField3 {
    pub b: [f64; 3],
}

impl UniformField3 {
    pub fn new(b: [f64; 3]) -> Self {
        Self { b }
    }

    pub fn transverse(&self) -> f64 {
        self.b[0].hypot(self.b[1])
    }

    /// `(B₁, B₂)/|B_⊥|`, or `None` for a purely longitudinal field.
    pub fn rotation(&self) -> Option<(f64, f64)> {
        let p = self.transverse();
        (p > 0.0).then(|| (self.b[0] / p, self.b[1] / p))
    }

    pub fn a_rot(&self) -> f64 {
        self.rotation().map_or(0.0, |r| r.0)
    }

    pub fn b_rot(&self) -> f64 {
        self.rotation().map_or(0.0, |r| r.1)
    }

    pub fn theta(&self) -> f64 {
        self.b[1].atan2(self.b[0])
    }

    pub fn params(&self, policy: &QSeriesPolicy) -> Result<StarkJacobiParams> {
        StarkJacobiParams::from_field(self.b, policy)
    }
}

/// Cached `mz(x)` and `T(n)` over the truncation radius; constant beyond it.
#[derive(Debug, Clone)]
pub struct KinkTables {
    radius: i64,
    mz: Vec<f64>,
    tr: Vec<f64>,
    policy: QSeriesPolicy,
}

impl KinkTables {
    pub fn new(policy: &QSeriesPolicy) -> Self {
        let r = policy.truncation_radius() as i64;
        Self {
            radius: r,
            mz: (-r..=r + 1).map(|x| magnetization_z(x, policy)).collect(),
            tr: (0..=r).map(|n| transverse_matrix_element(n, policy)).collect(),
            policy: *policy,
        }
    }

    pub fn policy(&self) -> &QSeriesPolicy {
        &self.policy
    }

    /// `⟨0|S³_x|0⟩`.
    pub fn mz(&self, x: i64) -> f64 {
        if x < -self.radius {
            0.5
        } else if x > self.radius + 1 {
            -0.5
        } else {
            self.mz[(x + self.radius) as usize]
        }
    }

    /// `⟨n|S⁺_0|n−1⟩`.
    pub fn tr(&self, n: i64) -> f64 {
        let a = n.unsigned_abs() as usize;
        self.tr.get(a).copied().unwrap_or(0.0)
    }
}

/// Bessel truncation `M = ⌈|w|⌉ + 40·max(1, ⌈|w|^{1/3}⌉) + 40`.
pub fn series_truncation(w: f64) -> usize {
    let aw = w.abs();
    aw.ceil() as usize + 40 * (aw.cbrt().ceil() as usize).max(1) + 40
}

/// Reduced-dynamics amplitudes at one time.
#[derive(Debug, Clone)]
pub struct ProfileEvaluator<'a> {
    tables: &'a KinkTables,
    field: UniformField3,
    params: StarkJacobiParams,
    t: f64,
    w: f64,
    bessel: BesselTable,
    truncation: usize,
}

impl<'a> ProfileEvaluator<'a> {
    pub fn new(tables: &'a KinkTables, field: UniformField3, t: f64) -> Result<Self> {
        let params = field.params(&tables.policy)?;
        let w = params.bessel_argument(t);
        Self::with_argument(tables, field, params, t, w)
    }

    fn with_argument(
        tables: &'a KinkTables,
        field: UniformField3,
        params: StarkJacobiParams,
        t: f64,
        w: f64,
    ) -> Result<Self> {
        let truncation = series_truncation(w);
        let bessel = BesselTable::new(truncation + 1, w)?;
        Ok(Self {
            tables,
            field,
            params,
            t,
            w,
            bessel,
            truncation,
        })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn bessel_argument(&self) -> f64 {
        self.w
    }

    /// Upper bound on the omitted Bessel weight `Σ_{|m|>M} J_m(w)²`.
    pub fn tail_bound(&self) -> f64 {
        let m = self.truncation as i64;
        (self.bessel.get(m).powi(2) + self.bessel.get(m + 1).powi(2)) * 10.0
    }

    /// `m³(x,t) = Σ_m J_m(w)² mz(x−m)`.
    pub fn m3(&self, x: i64) -> f64 {
        let m = self.truncation as i64;
        let mut acc = CompensatedSum::new();
        for k in -m..=m {
            let j = self.bessel.get(k);
            if j != 0.0 {
                acc.add(j * j * self.tables.mz(x - k));
            }
        }
        acc.value()
    }

    /// `m¹(x,t) = −[a sin(γt/2) + b cos(γt/2)] Σ_m J_m(w) J_{m+1}(w) T(m+1−x)`,
    /// with `a, b` the direction cosines of `B_⊥`; for `γ = 0` the prefactor is `−b`.
    pub fn m1(&self, x: i64) -> f64 {
        let Some((a, b)) = self.field.rotation() else {
            return 0.0;
        };
        let half = 0.5 * self.params.gamma * self.t;
        let pref = -(a * half.sin() + b * half.cos());
        let m = self.truncation as i64;
        let mut acc = CompensatedSum::new();
        for k in -m..=m {
            acc.add(self.bessel.get(k) * self.bessel.get(k + 1) * self.tables.tr(k + 1 - x));
        }
        pref * acc.value()
    }

    /// Amplitude `⟨m|e^{−itK₀}|0⟩` of the unrotated Stark-Jacobi evolution.
    fn kernel(&self, m: i64) -> C64 {
        let j = self.bessel.get(-m);
        let phase = if self.params.is_free() {
            0.5 * PI * m as f64
        } else {
            -0.5 * (self.params.gamma * self.t - PI) * m as f64
        };
        C64::from_polar(j, phase)
    }

    /// `⟨Ω̂·S_x⟩` for a unit vector `Ω̂`, composed from the kernel amplitudes in the frame
    /// rotated by `R_{−θ}` about the z axis.
    pub fn m_general(&self, omega: [f64; 3], x: i64) -> f64 {
        let theta = self.field.theta();
        let (s, c) = theta.sin_cos();
        // ω′ = R_{−θ} Ω̂
        let w1 = c * omega[0] + s * omega[1];
        let w2 = -s * omega[0] + c * omega[1];
        let z = if omega[2] != 0.0 { omega[2] * self.m3(x) } else { 0.0 };
        if w1 == 0.0 && w2 == 0.0 {
            return z;
        }
        let m = self.truncation as i64;
        let mut acc = CompensatedComplexSum::default();
        for k in -m..=m + 1 {
            let tr = self.tables.tr(k - x);
            if tr != 0.0 {
                acc.add(self.kernel(k).conj() * self.kernel(k - 1) * tr);
            }
        }
        z + (C64::new(w1, -w2) * acc.value()).re
    }
}

pub fn m3(x: i64, t: f64, field: UniformField3, tables: &KinkTables) -> Result<f64> {
    Ok(ProfileEvaluator::new(tables, field, t)?.m3(x))
}

pub fn m1(x: i64, t: f64, field: UniformField3, tables: &KinkTables) -> Result<f64> {
    Ok(ProfileEvaluator::new(tables, field, t)?.m1(x))
}

pub fn m_general(omega: [f64; 3], x: i64, t: f64, field: UniformField3, tables: &KinkTables) -> Result<f64> {
    let n = (omega[0].powi(2) + omega[1].powi(2) + omega[2].powi(2)).sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(KinkError::Domain("Ω̂ must be a unit vector".into()));
    }
    Ok(ProfileEvaluator::new(tables, field, t)?.m_general(omega, x))
}

/// `m³` for a time-dependent transverse strength with `B₃ ≡ 0`: the Bessel argument
/// becomes `2∫₀ᵗ α(s) ds`.
pub fn time_dependent_alpha_m3<F: Fn(f64) -> f64>(x: i64, t: f64, alpha_fn: F, tables: &KinkTables) -> Result<f64> {
    let eff = effective_time_integral(&alpha_fn, t);
    let field = UniformField3::new([1.0, 0.0, 0.0]);
    let params = StarkJacobiParams::new(eff / t.abs().max(f64::MIN_POSITIVE), 0.0)?;
    Ok(ProfileEvaluator::with_argument(tables, field, params, t, 2.0 * eff)?.m3(x))
}

/// `∫₀ᵗ α(s) ds` by composite Gauss–Legendre quadrature.
pub fn effective_time_integral<F: Fn(f64) -> f64>(alpha_fn: &F, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let panels = (4.0 * t.abs()).ceil().max(16.0) as usize;
    integrate(alpha_fn, 0.0, t, panels)
}

/// `φ′ₓ(v) = t[m³(x+1,t) − m³(x,t)]` at `t = x/v` for `γ = 0`, evaluated as
/// `−(x/v) Σ_k J_{x+1−k}(2xα/v)² p(k)`.
pub fn phi_prime(x: i64, v: f64, alpha: f64, tables: &KinkTables) -> Result<f64> {
    if v == 0.0 {
        return Err(KinkError::Domain("φ′ is undefined at v = 0 (use φ(0) = 0)".into()));
    }
    let t = x as f64 / v;
    if !(t > 0.0) {
        return Err(KinkError::Domain("the ray x = vt needs x/v > 0".into()));
    }
    let w = 2.0 * alpha * t;
    let mtr = series_truncation(w) as i64;
    let table = BesselTable::new(mtr as usize, w)?;
    let policy = tables.policy();
    let mut acc = CompensatedSum::new();
    for m in -mtr..=mtr {
        let j = table.get(m);
        if j != 0.0 {
            acc.add(j * j * p_measure(x + 1 - m, policy));
        }
    }
    Ok(-t * acc.value())
}

/// Candidate limit shape `−κ·arcsin(v/2α)` inside the light cone, `∓½` outside.
pub fn scaling_profile(v: f64, alpha: f64, kappa: f64) -> f64 {
    let c = 2.0 * alpha;
    if v > c {
        -0.5
    } else if v < -c {
        0.5
    } else {
        -kappa * (v / c).clamp(-1.0, 1.0).asin()
    }
}

pub const KAPPA_CANDIDATES: [f64; 2] = [1.0 / PI, 2.0 / PI];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLimitRow {
    pub v: f64,
    /// Phase-averaged `m³` at each `t` of the run.
    pub values: Vec<f64>,
    pub m3_extrapolated: f64,
    /// `−m3/arcsin(v/2α)` inside the light cone.
    pub kappa_local: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLimitReport {
    pub alpha: f64,
    pub q: f64,
    pub t_list: Vec<f64>,
    pub kappa_fit: f64,
    /// Two standard errors of the least-squares κ.
    pub kappa_band: f64,
    pub kappa_candidates: [f64; 2],
    /// Candidate within 10 % of the fit, if exactly one is.
    pub selected_by_fit: Option<f64>,
    /// `|κ·π/2 − ½|` for each candidate: mismatch with the plateau at `v = 2α`.
    pub continuity_residuals: [f64; 2],
    pub selected_by_continuity: f64,
    /// `|φ_{κ_fit}(2α⁻) + ½|`.
    pub continuity_residual: f64,
    /// `max |m3_extrapolated ± ½|` over `|v| > 2α`.
    pub plateau_residual: f64,
    pub per_v_table: Vec<ProfileLimitRow>,
}

impl ProfileLimitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Phase-averaged `m³` along the ray `x ≈ vt`: eight sites around `vt` with individual
/// times `t_j = (x_j − ½)/v`, so every sample sits at velocity `v` from the kink centre.
fn ray_average(v: f64, t: f64, alpha: f64, tables: &KinkTables) -> Result<f64> {
    let field = UniformField3::new([alpha / hopping_a(tables)?, 0.0, 0.0]);
    let x0 = (v * t + 0.5).round() as i64;
    let mut acc = 0.0;
    for j in 0..8i64 {
        let mut x = x0 + j - 4;
        let mut tj = (x as f64 - 0.5) / v;
        if tj <= 0.0 {
            x = x0 + j + 4;
            tj = (x as f64 - 0.5) / v;
        }
        acc += m3(x, tj, field, tables)?;
    }
    Ok(acc / 8.0)
}

fn hopping_a(tables: &KinkTables) -> Result<f64> {
    crate::kink_profiles::hopping_coefficient_a(tables.policy())
}

/// Large-`t` extrapolation of the ballistic profile and a fit of the arcsin prefactor.
pub fn profile_limit_fit(
    alpha: f64,
    tables: &KinkTables,
    t_list: &[f64],
    v_grid: &[f64],
) -> Result<ProfileLimitReport> {
    if !(alpha > 0.0) {
        return Err(KinkError::Domain("profile limit needs α > 0".into()));
    }
    if t_list.len() < 2 {
        return Err(KinkError::Domain("need at least two times to extrapolate".into()));
    }
    let c = 2.0 * alpha;
    let (t1, t2) = (t_list[t_list.len() - 2], t_list[t_list.len() - 1]);
    let rows: Vec<ProfileLimitRow> = v_grid
        .par_iter()
        .map(|&v| -> Result<ProfileLimitRow> {
            let values = if v == 0.0 {
                vec![0.0; t_list.len()]
            } else {
                t_list
                    .iter()
                    .map(|&t| ray_average(v, t, alpha, tables))
                    .collect::<Result<Vec<f64>>>()?
            };
            let (f1, f2) = (values[values.len() - 2], values[values.len() - 1]);
            // first-order Richardson in 1/t
            let ext = (t2 * f2 - t1 * f1) / (t2 - t1);
            let s = (v / c).asin();
            let kappa_local = (v != 0.0 && v.abs() < c).then(|| -ext / s);
            Ok(ProfileLimitRow {
                v,
                values,
                m3_extrapolated: ext,
                kappa_local,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inside: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.v.abs() < c)
        .map(|r| ((r.v / c).asin(), r.m3_extrapolated))
        .collect();
    let sss = compensated_sum(inside.iter().map(|(s, _)| s * s));
    let kappa_fit = -compensated_sum(inside.iter().map(|(s, y)| s * y)) / sss;
    let resid = compensated_sum(inside.iter().map(|(s, y)| (y + kappa_fit * s).powi(2)));
    let dof = inside.len().saturating_sub(1).max(1) as f64;
    let kappa_band = 2.0 * (resid / dof / sss).sqrt();
    let within: Vec<f64> = KAPPA_CANDIDATES
        .iter()
        .copied()
        .filter(|k| ((kappa_fit - k) / k).abs() <= 0.1)
        .collect();
    let continuity_residuals = KAPPA_CANDIDATES.map(|k| (k * PI / 2.0 - 0.5).abs());
    let selected_by_continuity = if continuity_residuals[0] <= continuity_residuals[1] {
        KAPPA_CANDIDATES[0]
    } else {
        KAPPA_CANDIDATES[1]
    };
    let plateau_residual = rows
        .iter()
        .filter(|r| r.v.abs() > c)
        .map(|r| (r.m3_extrapolated + 0.5 * r.v.signum()).abs())
        .fold(0.0, f64::max);
    Ok(ProfileLimitReport {
        alpha,
        q: tables.policy().q(),
        t_list: t_list.to_vec(),
        kappa_fit,
        kappa_band,
        kappa_candidates: KAPPA_CANDIDATES,
        selected_by_fit: (within.len() == 1).then(|| within[0]),
        continuity_residuals,
        selected_by_continuity,
        continuity_residual: (kappa_fit * PI / 2.0 - 0.5).abs(),
        plateau_residual,
        per_v_table: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayScan {
    pub v: f64,
    /// `|ψ′ₓ(v)|` at `x = round(vt)` for each `t`.
    pub psi_prime_abs: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFit {
    pub t: f64,
    /// `ξ` in `|m¹(x,t)| ≈ C e^{−|x|/ξ}`; `None` when the fitted slope is not negative.
    pub length: Option<f64>,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseReport {
    pub alpha: f64,
    pub t_list: Vec<f64>,
    pub ptilde_sum: f64,
    pub rays: Vec<RayScan>,
    pub localization: Vec<LocalizationFit>,
    pub rays_decay: bool,
    pub min_r_squared: f64,
    /// `max ξ / min ξ` over the times, infinite if any fit failed.
    pub length_spread: f64,
}

/// `ψ′` scans along rays and exponential fits of `|m¹(·,t)|` over `|x| ≥ 10` for `γ = 0`
/// and a field along `ê₂` of strength giving hopping `α`.
pub fn transverse_spread_check(
    v_list: &[f64],
    alpha: f64,
    tables: &KinkTables,
    t_list: &[f64],
) -> Result<TransverseReport> {
    let field = UniformField3::new([0.0, alpha / hopping_a(tables)?, 0.0]);
    let policy = tables.policy();
    let r = policy.truncation_radius() as i64;
    let ptilde_sum = compensated_sum((-r..=r).map(|m| ptilde_measure(m, policy)));
    let rays = v_list
        .par_iter()
        .map(|&v| -> Result<RayScan> {
            let mut vals = Vec::with_capacity(t_list.len());
            for &t in t_list {
                let ev = ProfileEvaluator::new(tables, field, t)?;
                let x = (v * t).round() as i64;
                vals.push((t * (ev.m1(x + 1) - ev.m1(x))).abs());
            }
            let decreasing = vals.windows(2).all(|w| w[1] <= w[0]);
            Ok(RayScan {
                v,
                psi_prime_abs: vals,
                decreasing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let localization = t_list
        .par_iter()
        .map(|&t| -> Result<LocalizationFit> {
            let ev = ProfileEvaluator::new(tables, field, t)?;
            let reach = series_truncation(2.0 * alpha * t) as i64;
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for x in (-reach..=reach).filter(|x| x.abs() >= 10) {
                let m = ev.m1(x).abs();
                if m > 1e-300 {
                    xs.push(x.abs() as f64);
                    ys.push(m.ln());
                }
            }
            let fit = linear_fit(&xs, &ys);
            Ok(LocalizationFit {
                t,
                length: fit.and_then(|(s, _, _)| (s < 0.0).then(|| -1.0 / s)),
                r_squared: fit.map_or(0.0, |f| f.2),
                points: xs.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lengths: Vec<f64> = localization.iter().filter_map(|l| l.length).collect();
    let length_spread = if lengths.len() == localization.len() && !lengths.is_empty() {
        lengths.iter().copied().fold(0.0, f64::max) / lengths.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    Ok(TransverseReport {
        alpha,
        t_list: t_list.to_vec(),
        ptilde_sum,
        rays_decay: rays.iter().all(|r| r.decreasing),
        rays,
        min_r_squared: localization.iter().map(|l| l.r_squared).fold(1.0, f64::min),
        localization,
        length_spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Component {
    Z,
    X,
    General([f64; 3]),
}

impl Component {
    fn label(&self) -> String {
        match self {
            Component::Z => "z".into(),
            Component::X => "x".into(),
            Component::General(w) => format!("general({};{};{})", w[0], w[1], w[2]),
        }
    }
}

/// One profile `x ↦ m(Ω̂,x,t)` over an integer window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSnapshot {
    pub t: f64,
    pub component: Component,
    pub x_min: i64,
    pub values: Vec<f64>,
    pub truncation: usize,
    pub tail_bound: f64,
}

impl ProfileSnapshot {
    pub fn compute(
        field: UniformField3,
        tables: &KinkTables,
        t: f64,
        component: Component,
        x_min: i64,
        x_max: i64,
    ) -> Result<Self> {
        let ev = ProfileEvaluator::new(tables, field, t)?;
        let values = (x_min..=x_max)
            .map(|x| match component {
                Component::Z => ev.m3(x),
                Component::X => ev.m1(x),
                Component::General(w) => ev.m_general(w, x),
            })
            .collect();
        Ok(Self {
            t,
            component,
            x_min,
            values,
            truncation: ev.truncation(),
            tail_bound: ev.tail_bound(),
        })
    }

    pub const CSV_HEADER: &'static str = "t,x,value,component";

    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> Result<()> {
        let label = self.component.label();
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{},{}", self.t, self.x_min + k as i64, v, label)?;
        }
        Ok(())
    }
}
