//! Integer-order Bessel functions of the first kind for real arguments.
//!
//! Three regimes: power series for `|x| ≤ 12`, normalized backward (Miller) recurrence
//! for `|x| ≤ 600`, and the Hankel large-argument expansion beyond when the order is
//! small compared with `√|x|`. Larger orders at large arguments fall back to the recurrence.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{KinkError, Result};
use crate::linalg::C64;
use crate::numerics::{CompensatedComplexSum, CompensatedSum};

pub const SERIES_LIMIT: f64 = 12.0;
pub const RECURRENCE_LIMIT: f64 = 600.0;
pub const MAX_ORDER: i64 = 1_000_000;
pub const MAX_ARGUMENT: f64 = 1e4;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// One evaluated value together with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselEval {
    pub order: i64,
    pub argument: f64,
    pub value: f64,
}

impl BesselEval {
    pub fn new(order: i64, argument: f64) -> Result<Self> {
        Ok(Self {
            order,
            argument,
            value: bessel_j(order, argument)?,
        })
    }
}

fn check_domain(n: i64, x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() > MAX_ARGUMENT || n.abs() > MAX_ORDER {
        return Err(KinkError::Domain(format!(
            "J_n(x) supports |n| ≤ {MAX_ORDER}, |x| ≤ {MAX_ARGUMENT}; got n = {n}, x = {x}"
        )));
    }
    Ok(())
}

/// Sign picked up when mapping `(n, x)` to `(|n|, |x|)`.
fn reflection_sign(n: i64, x: f64) -> f64 {
    let mut s = 1.0;
    if n < 0 && n % 2 != 0 {
        s = -s;
    }
    if x < 0.0 && n % 2 != 0 {
        s = -s;
    }
    s
}

/// Starting index of the backward recurrence for orders up to `n` at argument `x ≥ 0`.
pub fn miller_start(n: usize, x: f64) -> usize {
    let base = n.max(x.ceil() as usize);
    let n0 = base + 40 + (10.0 * x.cbrt()).ceil() as usize;
    n0 + (n0 % 2)
}

/// Smallest order beyond which `|J_m(x)| ≤ 1e-15`, from the turning-point rule.
pub fn truncation_order(x: f64) -> usize {
    let ax = x.abs();
    (ax + 40.0 * ax.cbrt().max(1.0)).ceil() as usize
}

/// `J_n(x)`.
pub fn bessel_j(n: i64, x: f64) -> Result<f64> {
    check_domain(n, x)?;
    let sign = reflection_sign(n, x);
    let (n, x) = (n.unsigned_abs() as usize, x.abs());
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let v = if x <= SERIES_LIMIT {
        series(n, x)
    } else if x <= RECURRENCE_LIMIT {
        miller(n, x)
    } else if (n as f64).powi(2) <= x / 4.0 {
        hankel(n, x)
    } else {
        miller(n, x)
    };
    Ok(sign * v)
}

/// Power series, for `x ≥ 0`.
pub fn series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut lead = 1.0;
    for j in 1..=n {
        lead *= h / j as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let h2 = h * h;
    let mut acc = CompensatedSum::new();
    let mut term = lead;
    acc.add(term);
    let mut k = 0usize;
    loop {
        k += 1;
        term *= -h2 / (k as f64 * (k + n) as f64);
        acc.add(term);
        if term.abs() < 1e-18 * acc.value().abs().max(1e-300) && (k as f64) > h {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    acc.value()
}

/// Backward recurrence normalized by `J_0 + 2 Σ J_{2k} = 1`, for `x > 0`.
pub fn miller(n: usize, x: f64) -> f64 {
    let mut stored = 0.0;
    let s = backward_sweep(n, x, |k, v, rescale| {
        if rescale {
            stored *= RESCALE_BY;
        } else if k == n {
            stored = v;
        }
    });
    stored / s
}

/// `J_0(x), …, J_{n_max}(x)` by one backward sweep, for `x > 0`.
fn miller_table(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    // Highest stored index that has not underflowed to zero.
    let mut live_top = 0usize;
    let s = backward_sweep(n_max, x, |k, v, rescale| {
        if rescale {
            while live_top > k && out[live_top] == 0.0 {
                live_top -= 1;
            }
            for o in out.iter_mut().take(live_top + 1).skip(k + 1) {
                *o *= RESCALE_BY;
            }
        } else if k <= n_max {
            out[k] = v;
            live_top = live_top.max(k);
        }
    });
    for o in &mut out {
        *o /= s;
    }
    out
}

/// Runs the unnormalized recurrence from the start index down to 0, reporting each value
/// `(k, value, false)` and each rescale event `(k, 0, true)` (entries above `k` must be rescaled).
/// Returns the normalization sum.
fn backward_sweep(n_max: usize, x: f64, mut visit: impl FnMut(usize, f64, bool)) -> f64 {
    let start = miller_start(n_max, x);
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut norm = CompensatedSum::new();
    let two_over_x = 2.0 / x;
    let mut k = start;
    loop {
        visit(k, cur, false);
        if k.is_multiple_of(2) {
            norm.add(if k == 0 { cur } else { 2.0 * cur });
        }
        if k == 0 {
            break;
        }
        let below = (k as f64) * two_over_x * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            above *= RESCALE_BY;
            let v = norm.value() * RESCALE_BY;
            norm = CompensatedSum::new();
            norm.add(v);
            visit(k, 0.0, true);
        }
    }
    norm.value()
}

/// Hankel large-argument expansion, for `x ≫ n²`.
pub fn hankel(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let mut p = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..200usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        let mag = a.abs();
        if mag > prev || (k > 0 && mag < 1e-18) {
            break;
        }
        prev = mag;
        match k % 4 {
            0 => p.add(a),
            1 => q.add(a),
            2 => p.add(-a),
            _ => q.add(-a),
        }
    }
    let phase = (0.5 * n as f64 + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p.value() * cos_chi - q.value() * sin_chi)
}

/// Values `J_m(x)` for `|m| ≤ max_order`, indexed by signed order.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTable {
    x: f64,
    values: Vec<f64>,
}

impl BesselTable {
    pub fn new(max_order: usize, x: f64) -> Result<Self> {
        check_domain(max_order as i64, x)?;
        let ax = x.abs();
        let values = if ax == 0.0 {
            let mut v = vec![0.0; max_order + 1];
            v[0] = 1.0;
            v
        } else {
            miller_table(max_order, ax)
        };
        let values = if x < 0.0 {
            values
                .into_iter()
                .enumerate()
                .map(|(k, v)| if k % 2 == 1 { -v } else { v })
                .collect()
        } else {
            values
        };
        Ok(Self { x, values })
    }

    pub fn argument(&self) -> f64 {
        self.x
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    /// `J_m(x)`; zero beyond the tabulated range.
    pub fn get(&self, m: i64) -> f64 {
        let k = m.unsigned_abs() as usize;
        match self.values.get(k) {
            Some(&v) if m < 0 && k % 2 == 1 => -v,
            Some(&v) => v,
            None => 0.0,
        }
    }
}

/// `Σ_{|m| ≤ M} J_m(x)²`.
pub fn squared_sum_check(x: f64, max_order: usize) -> Result<f64> {
    let t = BesselTable::new(max_order, x)?;
    let mut acc = CompensatedSum::new();
    for m in (1..=max_order as i64).rev() {
        acc.add(2.0 * t.get(m).powi(2));
    }
    acc.add(t.get(0).powi(2));
    Ok(acc.value())
}

/// `Σ_{|m| ≤ M} e^{iθm} J_{m+a}(z) J_m(z)`.
pub fn graf_sum(a: i64, z: f64, theta: f64, max_order: usize) -> Result<C64> {
    let t = BesselTable::new(max_order + a.unsigned_abs() as usize, z)?;
    let mut acc = CompensatedComplexSum::default();
    let m = max_order as i64;
    for k in -m..=m {
        acc.add(C64::from_polar(t.get(k + a) * t.get(k), theta * k as f64));
    }
    Ok(acc.value())
}

/// Closed form `e^{i(π−θ)a/2} J_a(2z sin(θ/2))` of [`graf_sum`].
pub fn graf_closed_form(a: i64, z: f64, theta: f64) -> Result<C64> {
    let j = bessel_j(a, 2.0 * z * (0.5 * theta).sin())?;
    Ok(C64::from_polar(j, (PI - theta) * a as f64 / 2.0))
}

/// Leading exponential-regime asymptotic `J_n(n sech α)`.
pub fn debye_exponential(n: f64, alpha: f64) -> f64 {
    let th = alpha.tanh();
    (n * (th - alpha)).exp() / (2.0 * PI * n * th).sqrt()
}

/// Leading oscillatory-regime asymptotic `J_n(n sec β)`, `0 < β < π/2`.
pub fn debye_oscillatory(n: f64, beta: f64) -> f64 {
    let tb = beta.tan();
    (2.0 / (PI * n * tb)).sqrt() * (n * tb - n * beta - 0.25 * PI).cos()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values computed with 30-digit arbitrary precision.
    const ORACLE: &[(i64, f64, f64)] = &[
        (0, 1.0, 0.76519768655796655145),
        (1, 2.0, 0.5767248077568733872),
        (0, 10.0, -0.2459357644513483352),
        (5, 10.0, -0.23406152818679364044),
        (1, 2.5, 0.49709410246427403801),
        (3, 12.0, 0.19513693953109267725),
        (0, 12.0, 0.047689310796833536624),
        (7, 30.0, 0.1451851895723282743),
        (30, 30.0, 0.14393585001030721029),
        (2, 50.0, -0.059712800794258820511),
        (50, 50.0, 0.12140902189761506382),
        (1, 100.0, -0.077145352014112158033),
        (0, 700.0, -0.0062882724650687667615),
        (5, 700.0, 0.029377695495975371145),
        (10, 1000.0, -0.024520622306036558192),
        (0, 1000.0, 0.024786686152420174561),
        (100, 1000.0, 0.011676135007802554492),
        (3, 0.001, 2.0833332031250033853e-11),
        (40, 5.0, 8.7022416173888180768e-33),
        (0, 10000.0, -0.0070961603533888014773),
        (7, 10000.0, -0.0036304094796513990915),
    ];

    #[test]
    fn matches_high_precision_values() {
        for &(n, x, want) in ORACLE {
            let got = bessel_j(n, x).unwrap();
            let tol = if x <= 50.0 { 1e-12 } else { 1e-11 };
            assert!((got - want).abs() < tol, "J_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn tiny_values_keep_relative_accuracy() {
        let got = bessel_j(1500, 1000.0).unwrap();
        assert!((got / 4.673655902369082673e-144 - 1.0).abs() < 1e-9);
        let got = bessel_j(40, 5.0).unwrap();
        assert!((got / 8.7022416173888180768e-33 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        for n in [-3, 1, 2, 17] {
            assert_eq!(bessel_j(n, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(2_000_000, 1.0).is_err());
        assert!(bessel_j(1, 2e4).is_err());
        assert!(bessel_j(1, f64::NAN).is_err());
    }

    #[test]
    fn table_matches_pointwise() {
        for x in [0.3, 7.5, 40.0, -13.0] {
            let t = BesselTable::new(60, x).unwrap();
            for m in -60..=60 {
                assert!((t.get(m) - bessel_j(m, x).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn start_index_covers_orders_below_argument() {
        assert!(miller_start(2, 300.0) > 300);
        assert_eq!(miller_start(5, 8.0) % 2, 0);
    }
}
