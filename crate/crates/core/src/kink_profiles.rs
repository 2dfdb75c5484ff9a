//! Infinite-volume kink profiles and transverse matrix elements.
//!
//! Conventions: `mz(x) = ⟨0|S³_x|0⟩` for the centred kink (boundary between sites 0 and 1),
//! and `T(n) = ⟨n|S⁺_0|n−1⟩ = ⟨n−1|S⁻_0|n⟩`, real and positive under the nonnegative-amplitude
//! phase rule. Translation covariance gives `⟨m|S³_x|m⟩ = mz(x−m)` and
//! `⟨m|S⁺_x|m−1⟩ = T(m−x)`.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{KinkError, Result};
use crate::linalg::C64;
use crate::numerics::{compensated_sum, CompensatedComplexSum, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSeriesPolicy {
    q: f64,
    term_cutoff: usize,
    truncation_radius: usize,
}

impl QSeriesPolicy {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(KinkError::Domain(format!("q must lie in (0,1) (got {q})")));
        }
        let lq = q.ln();
        let mut n = 2usize;
        while (n * (n - 1)) as f64 * lq >= (1e-16f64).ln() {
            n += 1;
        }
        let radius = ((1e-16f64).ln() / lq).ceil().max(60.0) as usize;
        Ok(Self {
            q,
            term_cutoff: n + 2,
            truncation_radius: radius,
        })
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.truncation_radius = radius;
        self
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn term_cutoff(&self) -> usize {
        self.term_cutoff
    }

    pub fn truncation_radius(&self) -> usize {
        self.truncation_radius
    }

    /// Modulus of the first omitted term of `f(z)` at `|z| = 1`.
    pub fn tail_bound(&self) -> f64 {
        let n = self.term_cutoff as f64;
        self.q.powf(n * (n - 1.0))
    }
}

/// `f(z) = Σ_{k≥0} (−1)^k z^k q^{k(k−1)}`.
pub fn f_series(z: C64, policy: &QSeriesPolicy) -> C64 {
    let q = policy.q;
    let mut acc = CompensatedComplexSum::default();
    let mut term = C64::new(1.0, 0.0);
    let mut q2k = 1.0;
    for _ in 0..policy.term_cutoff {
        acc.add(term);
        term *= -z * q2k;
        q2k *= q * q;
    }
    acc.value()
}

/// Real-argument `f`.
pub fn f_real(z: f64, policy: &QSeriesPolicy) -> f64 {
    let q = policy.q;
    let mut acc = CompensatedSum::new();
    let mut term = 1.0;
    let mut q2k = 1.0;
    for _ in 0..policy.term_cutoff {
        acc.add(term);
        term *= -z * q2k;
        q2k *= q * q;
        if term == 0.0 {
            break;
        }
    }
    acc.value()
}

/// `⟨0|S³_x|0⟩` of the centred infinite-volume kink.
pub fn magnetization_z(x: i64, policy: &QSeriesPolicy) -> f64 {
    if x <= 0 {
        return -magnetization_z(1 - x, policy);
    }
    let q = policy.q;
    let q2x = q.powi((2 * x).min(i32::MAX as i64) as i32);
    // q^{2x} Σ_k (−1)^k q^{k(k+2x+1)}, consecutive-term ratio −q^{2k+2x+2}
    let mut acc = CompensatedSum::new();
    let mut term = q2x;
    for k in 0..policy.term_cutoff as i64 {
        acc.add(term);
        term *= -q.powi((2 * k + 2 * x + 2) as i32);
        if term == 0.0 {
            break;
        }
    }
    -0.5 + acc.value()
}

/// `T(n) = ⟨n|S⁺_0|n−1⟩ = q^{|n|} f(q^{2|n|+2})`.
pub fn transverse_matrix_element(n: i64, policy: &QSeriesPolicy) -> f64 {
    let q = policy.q;
    let an = n.unsigned_abs().min(i32::MAX as u64 / 4) as i32;
    q.powi(an) * f_real(q.powi(2 * an + 2), policy)
}

/// `a = ½ Σ_{k≥0} (−1)^k q^{k(k+1)} (1+q^{1+2k})/(1−q^{1+2k})`.
pub fn hopping_coefficient_a(policy: &QSeriesPolicy) -> Result<f64> {
    let q = policy.q;
    if q >= 1.0 {
        return Err(KinkError::Domain("series for a diverges for q ≥ 1".into()));
    }
    let mut acc = CompensatedSum::new();
    for k in 0..policy.term_cutoff as i32 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let r = q.powi(1 + 2 * k);
        acc.add(sign * q.powi(k * (k + 1)) * (1.0 + r) / (1.0 - r));
    }
    Ok(0.5 * acc.value())
}

/// Lattice form `½ Σ_{|x|≤R} q^{|x|} Σ_k (−1)^k q^{2(|x|+1)k + k(k−1)}` of the same coefficient.
pub fn hopping_coefficient_a_lattice(policy: &QSeriesPolicy) -> f64 {
    let q = policy.q;
    let r = policy.truncation_radius as i64;
    let mut outer: Vec<f64> = Vec::with_capacity(2 * r as usize + 1);
    for x in -r..=r {
        let ax = x.abs() as i32;
        let inner = compensated_sum((0..policy.term_cutoff as i32).map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * q.powi(2 * (ax + 1) * k + k * (k - 1))
        }));
        outer.push(q.powi(ax) * inner);
    }
    // small terms first
    outer.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    0.5 * compensated_sum(outer)
}

/// `p(m) = ⟨0|S³_{m−1} − S³_m|0⟩`, a probability distribution on ℤ, symmetric about `m = 1`.
pub fn p_measure(m: i64, policy: &QSeriesPolicy) -> f64 {
    magnetization_z(m - 1, policy) - magnetization_z(m, policy)
}

/// `p̃(m) = ⟨1|S⁺_m − S⁺_{m−1}|0⟩ = T(1−m) − T(2−m)`, a signed measure of total mass 0.
pub fn ptilde_measure(m: i64, policy: &QSeriesPolicy) -> f64 {
    transverse_matrix_element(1 - m, policy) - transverse_matrix_element(2 - m, policy)
}

/// Smallest `C` with `p(m) ≤ C q^{|m|}` over `|m| ≤ R`.
pub fn decay_prefactor(policy: &QSeriesPolicy) -> f64 {
    let r = policy.truncation_radius as i64;
    let q = policy.q;
    (-r..=r)
        .map(|m| {
            let p = p_measure(m, policy).abs().max(ptilde_measure(m, policy).abs());
            p / q.powi(m.abs() as i32)
        })
        .fold(0.0, f64::max)
}

/// Tabulated `⟨0|S³_x|0⟩` over an integer window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub q: f64,
    pub x_min: i64,
    pub x_max: i64,
    pub values: Vec<f64>,
}

impl ProfileTable {
    pub fn compute(x_min: i64, x_max: i64, policy: &QSeriesPolicy) -> Result<Self> {
        if x_max < x_min {
            return Err(KinkError::Domain("empty profile window".into()));
        }
        Ok(Self {
            q: policy.q,
            x_min,
            x_max,
            values: (x_min..=x_max).map(|x| magnetization_z(x, policy)).collect(),
        })
    }

    pub fn get(&self, x: i64) -> Option<f64> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        Some(self.values[(x - self.x_min) as usize])
    }

    /// Largest violation of monotonicity, range and antisymmetry (within the window).
    pub fn invariant_violation(&self) -> f64 {
        let mono = self
            .values
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max);
        let range = self.values.iter().map(|v| (v.abs() - 0.5).max(0.0)).fold(0.0, f64::max);
        let anti = (self.x_min..=self.x_max)
            .filter_map(|x| Some((self.get(x)? + self.get(1 - x)?).abs()))
            .fold(0.0, f64::max);
        mono.max(range).max(anti)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.x_min + k as i64, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn policy() -> QSeriesPolicy {
        QSeriesPolicy::new(0.5).unwrap()
    }

    #[test]
    fn f_at_zero_and_small_z() {
        let p = policy();
        assert_eq!(f_series(C64::new(0.0, 0.0), &p), C64::new(1.0, 0.0));
        let z = 1e-4;
        let v = f_real(z, &p);
        assert!((v - 1.0 + z).abs() <= 2.0 * z * z * 0.25);
    }

    #[test]
    fn f_matches_reference_sum() {
        // Σ_{k<200} (−1)^k 0.5^{k(k−1)}, evaluated to 30 digits.
        let want = 0.23461818788177880857;
        assert!((f_real(1.0, &policy()) - want).abs() < 1e-16);
        assert!((f_series(C64::new(1.0, 0.0), &policy()).re - want).abs() < 1e-16);
    }

    #[test]
    fn profile_limits_and_antisymmetry() {
        let p = policy();
        for x in -20..=20 {
            assert!((magnetization_z(x, &p) + magnetization_z(1 - x, &p)).abs() < 1e-12);
        }
        assert!((magnetization_z(40, &p) + 0.5).abs() < 1e-20 + 0.25f64.powi(40));
        let t = ProfileTable::compute(-15, 16, &p).unwrap();
        assert!(t.invariant_violation() < 1e-12);
    }

    #[test]
    fn transverse_element_symmetric_and_decaying() {
        let p = policy();
        for n in 0..30 {
            let t = transverse_matrix_element(n, &p);
            assert!(t > 0.0);
            assert_eq!(t, transverse_matrix_element(-n, &p));
            assert!(t <= 0.5f64.powi(n as i32) * 1.0000001);
        }
    }

    #[test]
    fn hopping_coefficient_two_ways() {
        let p = policy();
        let a = hopping_coefficient_a(&p).unwrap();
        assert!((a - 1.3474787321015987189).abs() < 1e-14);
        let p2 = QSeriesPolicy::new(2.0 - 3f64.sqrt()).unwrap();
        assert!((hopping_coefficient_a(&p2).unwrap() - 0.82890419942096982421).abs() < 1e-14);
        assert!((a - hopping_coefficient_a_lattice(&p)).abs() < 1e-12);
        let small = QSeriesPolicy::new(1e-6).unwrap();
        assert!((hopping_coefficient_a(&small).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn measure_sum_rules() {
        let p = policy();
        let r = p.truncation_radius() as i64;
        let total = compensated_sum((-r..=r).map(|m| p_measure(m, &p)));
        let first = compensated_sum((-r..=r).map(|m| m as f64 * p_measure(m, &p)));
        let tilde = compensated_sum((-r..=r).map(|m| ptilde_measure(m, &p)));
        assert!((total - 1.0).abs() < 1e-10);
        // p is symmetric about m = 1 under the reflection x ↔ 1−x, so its mean is 1;
        // the mean bond position Σ (m − ½) p(m) is ½.
        assert!((first - 1.0).abs() < 1e-10);
        for j in 0..10 {
            assert!((p_measure(1 + j, &p) - p_measure(1 - j, &p)).abs() < 1e-15);
        }
        assert!(tilde.abs() < 1e-10);
    }

    #[test]
    fn csv_has_header() {
        let t = ProfileTable::compute(0, 1, &policy()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,value\n0,"));
    }
}
