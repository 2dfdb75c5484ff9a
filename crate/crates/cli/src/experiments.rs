//! One function per experiment; each validates its parameters, runs, and returns the artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use xxzkink::interface_motion::{
    profile_limit_fit, transverse_spread_check, Component, KinkTables, ProfileSnapshot, UniformField3,
};
use xxzkink::kink_profiles::{hopping_coefficient_a, QSeriesPolicy};
use xxzkink::linalg::expm_action;
use xxzkink::perturbation::{
    correction_scan, enumerate_graphs, iterated_integral_closed_form, iterated_integral_quadrature, scaling_experiment,
    FieldSpec,
};
use xxzkink::stark_jacobi::{
    build_k0_truncated, eigenfunction, propagator_kernel, zd_lattice_check, zd_spectrum, KernelColumn,
    StarkJacobiParams, ZdFieldVector,
};
use xxzkink::xxz_core::{build_hamiltonian, kernel_and_gap, kink_state, ChainSpec, HalfInt, KinkGroundFamily};
use xxzkink::{KinkError, NumericPolicy, StateVector};

use crate::config::{Experiment, ExperimentConfig, UsageError};
use crate::plotdata::Table;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error(transparent)]
    Model(#[from] KinkError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Invalid parameters detected by the library count as usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Model(KinkError::Domain(_) | KinkError::Precondition(_) | KinkError::Dimension { .. }) => 2,
            _ => 1,
        }
    }
}

/// Artifacts and verdict of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub table: Table,
    pub json: Value,
    /// Additional CSV files, written next to `--out` with the given suffix.
    pub extra: Vec<(String, Table)>,
}

type Run = Result<Outcome, RunError>;

pub fn run(cfg: &ExperimentConfig) -> Run {
    let policy = NumericPolicy::default();
    match cfg.experiment {
        Experiment::GroundState => ground_state(cfg, &policy),
        Experiment::GapScan => gap_scan(cfg, &policy),
        Experiment::Scaling => scaling(cfg, &policy),
        Experiment::Correction => correction(cfg, &policy),
        Experiment::Graphs => graphs(cfg),
        Experiment::IteratedIntegral => iterated_integral(cfg),
        Experiment::StarkSpectrum => stark_spectrum(cfg),
        Experiment::KernelCheck => kernel_check(cfg),
        Experiment::Profile => profile(cfg),
        Experiment::ProfileLimit => profile_limit(cfg),
        Experiment::Transverse => transverse(cfg),
        Experiment::ZdSpectrum => zd(cfg),
    }
}

/// Accepted keys per experiment, for `--help` and validation.
pub fn keys(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::GroundState => &["L", "delta", "a"],
        Experiment::GapScan => &["L", "delta"],
        Experiment::Scaling => &["L", "delta", "site", "B", "m", "tau", "lambda", "scaling_delta"],
        Experiment::Correction => &["L", "delta", "site", "B", "m", "tau", "lambda"],
        Experiment::Graphs => &["n", "list"],
        Experiment::IteratedIntegral => &["instances", "max_n", "nodes", "tol", "t_max", "E", "k", "lambda", "t"],
        Experiment::StarkSpectrum => &["alpha", "gamma", "m", "radius"],
        Experiment::KernelCheck => &["alpha", "gamma", "n", "t", "radius", "window"],
        Experiment::Profile => &["alpha", "gamma", "q", "t", "x_min", "x_max", "component", "omega"],
        Experiment::ProfileLimit => &["alpha", "q", "t", "v_min", "v_max", "v_step"],
        Experiment::Transverse => &["alpha", "q", "v", "t"],
        Experiment::ZdSpectrum => &["gamma", "alpha", "radius", "steps"],
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn chain_from(cfg: &ExperimentConfig, default_len: i64) -> Result<ChainSpec, RunError> {
    let len: i64 = cfg.get("L", default_len)?;
    let a: i64 = cfg.get("a", 1)?;
    let delta: f64 = cfg.get("delta", 2.0)?;
    if len < 2 {
        return Err(UsageError::Message("L must be at least 2".into()).into());
    }
    Ok(ChainSpec::new(a, a + len - 1, delta)?)
}

fn ground_state(cfg: &ExperimentConfig, policy: &NumericPolicy) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let chain = chain_from(cfg, 6)?;
    let (kernel, gap) = kernel_and_gap(&chain, policy.ground_tol, policy)?;
    let h = build_hamiltonian(&chain)?;
    let family = KinkGroundFamily::new(&chain)?;
    let d = family.diagnostics(&h)?;
    let mut table = Table::new(&["m", "x", "sz"]);
    for (m, _) in family.states() {
        for (i, v) in family.profile(*m)?.iter().enumerate() {
            table.push([m.value().to_string(), (chain.a() + i as i64).to_string(), v.to_string()]);
        }
    }
    let tol = policy.ground_tol;
    let pass = kernel == chain.len() + 1
        && d.max_residual <= tol
        && d.max_orthonormality_error <= tol
        && d.projector_idempotency <= tol;
    Ok(Outcome {
        pass,
        summary: format!(
            "ground-state L={} Δ={}: {} kernel dim {} (expect {}), residual {:.1e}, idempotency {:.1e}, gap {}",
            chain.len(),
            chain.delta(),
            verdict(pass),
            kernel,
            chain.len() + 1,
            d.max_residual,
            d.projector_idempotency,
            gap
        ),
        json: json!({
            "L": chain.len(), "delta": chain.delta(), "q": chain.q(),
            "kernel_dim": kernel, "gap": gap, "diagnostics": d,
        }),
        table,
        extra: Vec::new(),
    })
}

fn gap_scan(cfg: &ExperimentConfig, policy: &NumericPolicy) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let delta: f64 = cfg.get("delta", 2.0)?;
    let (lo, hi) = cfg.range("L", (4, 12))?;
    if lo < 2 {
        return Err(UsageError::Message("L must be at least 2".into()).into());
    }
    let mut table = Table::new(&["L", "gap"]);
    let mut pts = Vec::new();
    for len in lo..=hi {
        let chain = ChainSpec::new(1, len, delta)?;
        let (_, gap) = kernel_and_gap(&chain, policy.ground_tol, policy)?;
        table.push([len.to_string(), gap.to_string()]);
        pts.push((len as f64, gap));
    }
    let target = 1.0 - 1.0 / delta;
    let extrapolated = (pts.len() >= 2).then(|| {
        let (l1, g1) = pts[pts.len() - 2];
        let (l2, g2) = pts[pts.len() - 1];
        (l2 * l2 * g2 - l1 * l1 * g1) / (l2 * l2 - l1 * l1)
    });
    let pass = pts.iter().all(|p| p.1 > 0.0) && extrapolated.is_none_or(|e| ((e - target) / target).abs() <= 0.05);
    Ok(Outcome {
        pass,
        summary: format!(
            "gap-scan Δ={delta} L={lo}..{hi}: {} extrapolated gap {:?}, target {target}",
            verdict(pass),
            extrapolated
        ),
        json: json!({
            "delta": delta,
            "L": pts.iter().map(|p| p.0 as i64).collect::<Vec<_>>(),
            "gap": pts.iter().map(|p| p.1).collect::<Vec<_>>(),
            "extrapolated": extrapolated,
            "target": target,
        }),
        table,
        extra: Vec::new(),
    })
}

fn field_setup(cfg: &ExperimentConfig) -> Result<(ChainSpec, FieldSpec, StateVector, f64), RunError> {
    let chain = chain_from(cfg, 6)?;
    let site: i64 = cfg.get("site", chain.a() + (chain.len() as i64 - 1) / 2)?;
    let b = cfg.vec3("B", [1.0, 0.0, 0.5])?;
    let m = HalfInt::from_f64(cfg.get("m", if chain.len() % 2 == 0 { 0.0 } else { 0.5 })?)?;
    let tau: f64 = cfg.get("tau", 1.0)?;
    let field = FieldSpec::single_site(chain, site, b)?;
    let phi = kink_state(&chain, m)?;
    Ok((chain, field, phi, tau))
}

fn scaling(cfg: &ExperimentConfig, policy: &NumericPolicy) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let (chain, field, phi, tau) = field_setup(cfg)?;
    let lambdas: Vec<f64> = cfg.list("lambda", &[0.2, 0.1, 0.05, 0.025])?;
    let delta: f64 = cfg.get("scaling_delta", 0.25)?;
    let r = scaling_experiment(&chain, &field, &phi, tau, &lambdas, delta, policy)?;
    let mut table = Table::new(&["lambda", "error", "bound"]);
    for (l, e) in r.lambda_values.iter().zip(&r.errors) {
        table.push([l.to_string(), e.to_string(), l.powf(1.0 - delta).to_string()]);
    }
    let pass = r.passes();
    Ok(Outcome {
        pass,
        summary: format!(
            "scaling: {} fitted slope {:?} (need ≥ {}), monotone {}",
            verdict(pass),
            r.fitted_slope,
            1.0 - delta,
            r.monotone
        ),
        json: serde_json::from_str(&r.to_json()).expect("valid json"),
        table,
        extra: Vec::new(),
    })
}

fn correction(cfg: &ExperimentConfig, policy: &NumericPolicy) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let (chain, field, phi, tau) = field_setup(cfg)?;
    let default: Vec<f64> = (1..=10).rev().map(|k| 0.02 * k as f64).collect();
    let lambdas: Vec<f64> = cfg.list("lambda", &default)?;
    let r = correction_scan(&chain, &field, &phi, tau, &lambdas, policy)?;
    let mut table = Table::new(&["lambda", "error_leading", "error_corrected", "ratio"]);
    for row in &r.rows {
        table.push([row.lambda, row.error_leading, row.error_corrected, row.ratio]);
    }
    let pass = r.improves_everywhere && r.ratio_monotone;
    Ok(Outcome {
        pass,
        summary: format!(
            "correction: {} improves everywhere {}, ratio monotone {}",
            verdict(pass),
            r.improves_everywhere,
            r.ratio_monotone
        ),
        json: serde_json::to_value(&r).expect("serializable"),
        table,
        extra: Vec::new(),
    })
}

fn graphs(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let (lo, hi) = cfg.range("n", (1, 12))?;
    let list: bool = cfg.get("list", false)?;
    if lo < 1 {
        return Err(UsageError::Message("n must be ≥ 1".into()).into());
    }
    let mut table = Table::new(&["n", "count", "expected"]);
    let (mut ns, mut counts, mut all) = (Vec::new(), Vec::new(), Vec::new());
    let mut pass = true;
    for n in lo..=hi {
        let g = enumerate_graphs(n as usize)?;
        let expected = 1u64 << (n - 1);
        pass &= g.len() as u64 == expected;
        table.push([n as u64, g.len() as u64, expected]);
        ns.push(n);
        counts.push(g.len());
        if list {
            all.push(json!({"n": n, "graphs": g}));
        }
    }
    pass &= lo > 1 || enumerate_graphs(1)?[0].sign == 1;
    let mut j = json!({"n": ns, "counts": counts});
    if list {
        j["compositions"] = Value::Array(all);
    }
    Ok(Outcome {
        pass,
        summary: format!("graphs n={lo}..{hi}: {} counts {counts:?}", verdict(pass)),
        json: j,
        table,
        extra: Vec::new(),
    })
}

fn iterated_integral(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let nodes: usize = cfg.get("nodes", 32)?;
    let tol: f64 = cfg.get("tol", 1e-6)?;
    let mut table = Table::new(&[
        "instance",
        "n",
        "lambda",
        "t",
        "closed_re",
        "closed_im",
        "quadrature_re",
        "quadrature_im",
        "relative_error",
    ]);
    let mut cases: Vec<(Vec<f64>, Vec<C64>, f64, f64)> = Vec::new();
    if let Some(e) = cfg.raw("E").map(|_| cfg.list::<f64>("E", &[])).transpose()? {
        let k = cfg.complex_list("k")?.ok_or_else(|| UsageError::Missing("k".into()))?;
        cases.push((e, k, cfg.require("lambda")?, cfg.require("t")?));
    } else {
        let seed = cfg.require_seed()?;
        let instances: usize = cfg.get("instances", 50)?;
        let max_n: usize = cfg.get("max_n", 4)?;
        let t_max: f64 = cfg.get("t_max", 5.0)?;
        if max_n == 0 || !(t_max > 0.0) {
            return Err(UsageError::Message("max_n ≥ 1 and t_max > 0 required".into()).into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..instances {
            let n = rng.gen_range(1..=max_n);
            let e: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let k: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.gen_range(0.2..1.0), rng.gen_range(-0.5..0.5)))
                .collect();
            cases.push((e, k, rng.gen_range(0.1..1.0), rng.gen_range(0.0..t_max)));
        }
    }
    let mut worst = 0.0f64;
    for (i, (e, k, l, t)) in cases.iter().enumerate() {
        let c = iterated_integral_closed_form(e, k, *l, *t)?;
        let q = iterated_integral_quadrature(e, k, *l, *t, nodes)?;
        let rel = (c - q).norm() / q.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        table.push([
            i.to_string(),
            k.len().to_string(),
            l.to_string(),
            t.to_string(),
            c.re.to_string(),
            c.im.to_string(),
            q.re.to_string(),
            q.im.to_string(),
            rel.to_string(),
        ]);
    }
    let pass = worst <= tol;
    Ok(Outcome {
        pass,
        summary: format!(
            "iterated-integral: {} {} instances, worst relative error {worst:e} (tol {tol:e})",
            verdict(pass),
            cases.len()
        ),
        json: json!({"instances": cases.len(), "worst_relative_error": worst, "tol": tol, "seed": cfg.seed}),
        table,
        extra: Vec::new(),
    })
}

fn stark_spectrum(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let p = StarkJacobiParams::new(cfg.get("alpha", 1.0)?, cfg.get("gamma", 0.5)?)?;
    if p.is_free() {
        return Err(KinkError::NoPointSpectrum.into());
    }
    let (lo, hi) = cfg.range("m", (-3, 3))?;
    let r: usize = cfg.get("radius", p.truncation_radius()? + (lo.abs().max(hi.abs()) as usize))?;
    let k = build_k0_truncated(&p, r)?;
    let mut table = Table::new(&["m", "eigenvalue", "residual"]);
    let mut worst = 0.0f64;
    for m in lo..=hi {
        let v: Vec<f64> = (-(r as i64)..=r as i64)
            .map(|n| eigenfunction(m, &p, n))
            .collect::<Result<_, _>>()?;
        let s = StateVector::from_real(&v);
        let e = p.gamma * m as f64;
        let res = k.apply(&s).sub(&s.scaled(C64::new(e, 0.0))).norm();
        worst = worst.max(res);
        table.push([m.to_string(), e.to_string(), res.to_string()]);
    }
    let pass = worst <= 1e-9;
    Ok(Outcome {
        pass,
        summary: format!(
            "stark-spectrum α={} γ={}: {} max residual {worst:e}",
            p.alpha,
            p.gamma,
            verdict(pass)
        ),
        json: json!({"alpha": p.alpha, "gamma": p.gamma, "radius": r, "max_residual": worst}),
        table,
        extra: Vec::new(),
    })
}

fn kernel_check(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let p = StarkJacobiParams::new(cfg.get("alpha", 2.0)?, cfg.get("gamma", 0.5)?)?;
    let n: i64 = cfg.get("n", 0)?;
    let ts: Vec<f64> = cfg.list("t", &[1.0, 7.3, 20.0])?;
    let r: usize = cfg.get("radius", 150)?;
    let window: i64 = cfg.get("window", 60)?;
    if n.unsigned_abs() as usize + window as usize >= r {
        return Err(UsageError::Message("need |n| + window < radius".into()).into());
    }
    let k = build_k0_truncated(&p, r)?;
    let idx = |x: i64| (x + r as i64) as usize;
    let mut table = Table::new(&["t", "kernel_error", "unitarity_error", "periodicity_error"]);
    let (mut ke, mut ue, mut pe) = (0.0f64, 0.0f64, 0.0f64);
    for &t in &ts {
        let col = expm_action(&k, C64::new(0.0, -t), &StateVector::basis(2 * r + 1, idx(n)));
        let exact = KernelColumn::compute(n, t, &p)?;
        let kerr = (n - window..=n + window)
            .map(|x| (exact.get(x) - col.amplitudes()[idx(x)]).norm())
            .fold(0.0, f64::max);
        let mass: f64 = exact.values.iter().map(|z| z.norm_sqr()).sum();
        let perr = if p.is_free() {
            0.0
        } else {
            let mut m = 0.0f64;
            for x in n - window..=n + window {
                let a = propagator_kernel(x, n, t, &p)?;
                let b = propagator_kernel(x, n, t + 2.0 * PI / p.gamma, &p)?;
                m = m.max((a - b).norm());
            }
            m
        };
        ke = ke.max(kerr);
        ue = ue.max((mass - 1.0).abs());
        pe = pe.max(perr);
        table.push([t, kerr, (mass - 1.0).abs(), perr]);
    }
    let pass = ke <= 1e-8 && ue <= 1e-10 && pe <= 1e-10;
    Ok(Outcome {
        pass,
        summary: format!(
            "kernel-check: {} kernel {ke:.1e}, unitarity {ue:.1e}, periodicity {pe:.1e}",
            verdict(pass)
        ),
        json: json!({"alpha": p.alpha, "gamma": p.gamma, "kernel_error": ke, "unitarity_error": ue, "periodicity_error": pe}),
        table,
        extra: Vec::new(),
    })
}

fn tables_for(cfg: &ExperimentConfig) -> Result<(KinkTables, f64), RunError> {
    let q: f64 = cfg.get("q", 0.5)?;
    let pol = QSeriesPolicy::new(q)?;
    let a = hopping_coefficient_a(&pol)?;
    Ok((KinkTables::new(&pol), a))
}

fn profile(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let (tables, a) = tables_for(cfg)?;
    let alpha: f64 = cfg.get("alpha", 1.0)?;
    let gamma: f64 = cfg.get("gamma", 0.5)?;
    let ts: Vec<f64> = cfg.list("t", &[0.0, 2.0, 4.0])?;
    let (x_min, x_max): (i64, i64) = (cfg.get("x_min", -20)?, cfg.get("x_max", 20)?);
    if x_min > x_max {
        return Err(UsageError::Message("x_min must not exceed x_max".into()).into());
    }
    let component = match cfg.get("component", String::from("z"))?.as_str() {
        "z" => Component::Z,
        "x" => Component::X,
        "general" => Component::General(cfg.vec3("omega", [0.0, 0.0, 1.0])?),
        other => {
            return Err(UsageError::BadValue {
                key: "component".into(),
                value: other.into(),
                what: "z, x or general",
            }
            .into())
        }
    };
    let field = UniformField3::new([alpha / a, 0.0, gamma]);
    let mut table = Table::new(&["t", "x", "value", "component"]);
    let mut extra = Vec::new();
    let mut snaps = Vec::new();
    let mut period_residual = 0.0f64;
    for (k, &t) in ts.iter().enumerate() {
        let s = ProfileSnapshot::compute(field, &tables, t, component, x_min, x_max)?;
        let mut one = Table::new(&["t", "x", "value", "component"]);
        let mut buf = Vec::new();
        s.write_csv_rows(&mut buf)?;
        for line in String::from_utf8(buf).expect("utf-8").lines() {
            let cells: Vec<&str> = line.splitn(4, ',').collect();
            table.push(cells.iter().copied());
            one.push(cells.iter().copied());
        }
        extra.push((format!("t{k}"), one));
        if gamma != 0.0 {
            let later = ProfileSnapshot::compute(field, &tables, t + 2.0 * PI / gamma, component, x_min, x_max)?;
            for (u, v) in s.values.iter().zip(&later.values) {
                period_residual = period_residual.max((u - v).abs());
            }
        }
        snaps.push(s);
    }
    let pass = period_residual <= 1e-10;
    Ok(Outcome {
        pass,
        summary: format!(
            "profile α={alpha} γ={gamma} q={}: {} {} snapshots, periodicity residual {period_residual:.1e}",
            tables.policy().q(),
            verdict(pass),
            snaps.len()
        ),
        json: json!({"snapshots": snaps, "periodicity_residual": period_residual}),
        table,
        extra,
    })
}

fn profile_limit(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let (tables, _) = tables_for(cfg)?;
    let alpha: f64 = cfg.get("alpha", 1.0)?;
    let ts: Vec<f64> = cfg.list("t", &[50.0, 100.0, 200.0, 400.0])?;
    let step: f64 = cfg.get("v_step", 0.1)?;
    let (v_min, v_max): (f64, f64) = (cfg.get("v_min", -3.0)?, cfg.get("v_max", 3.0)?);
    if !(step > 0.0) || v_min > v_max {
        return Err(UsageError::Message("need v_step > 0 and v_min ≤ v_max".into()).into());
    }
    let (k0, k1) = ((v_min / step).round() as i64, (v_max / step).round() as i64);
    let grid: Vec<f64> = (k0..=k1).map(|k| k as f64 * step).collect();
    let r = profile_limit_fit(alpha, &tables, &ts, &grid)?;
    let mut table = Table::new(&["v", "m3_extrapolated", "kappa_fit_local"]);
    for row in &r.per_v_table {
        table.push([
            row.v.to_string(),
            row.m3_extrapolated.to_string(),
            row.kappa_local.map_or(String::new(), |k| k.to_string()),
        ]);
    }
    let pass = r.plateau_residual <= 1e-3 && r.selected_by_fit.is_some_and(|k| k == r.selected_by_continuity);
    Ok(Outcome {
        pass,
        summary: format!(
            "profile-limit: {} κ fit {:.6} ± {:.1e}, selected {:?}, continuity picks {:.6}, plateau residual {:.1e}",
            verdict(pass),
            r.kappa_fit,
            r.kappa_band,
            r.selected_by_fit,
            r.selected_by_continuity,
            r.plateau_residual
        ),
        json: serde_json::to_value(&r).expect("serializable"),
        table,
        extra: Vec::new(),
    })
}

fn transverse(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let (tables, _) = tables_for(cfg)?;
    let alpha: f64 = cfg.get("alpha", 1.0)?;
    let vs: Vec<f64> = cfg.list("v", &[0.5, 1.0, 1.5])?;
    let ts: Vec<f64> = cfg.list("t", &[25.0, 50.0, 100.0, 200.0, 400.0])?;
    let r = transverse_spread_check(&vs, alpha, &tables, &ts)?;
    let mut table = Table::new(&["quantity", "v", "t", "value"]);
    for ray in &r.rays {
        for (t, val) in ts.iter().zip(&ray.psi_prime_abs) {
            table.push([
                "psi_prime_abs".to_string(),
                ray.v.to_string(),
                t.to_string(),
                val.to_string(),
            ]);
        }
    }
    for l in &r.localization {
        let len = l.length.map_or(String::new(), |x| x.to_string());
        table.push(["localization_length".to_string(), String::new(), l.t.to_string(), len]);
        table.push([
            "r_squared".to_string(),
            String::new(),
            l.t.to_string(),
            l.r_squared.to_string(),
        ]);
    }
    let pass = r.rays_decay && r.min_r_squared >= 0.99 && r.length_spread <= 1.1;
    Ok(Outcome {
        pass,
        summary: format!(
            "transverse: {} rays decay {}, min R² {:.3}, length spread {:.2}",
            verdict(pass),
            r.rays_decay,
            r.min_r_squared,
            r.length_spread
        ),
        json: serde_json::to_value(&r).expect("serializable"),
        table,
        extra: Vec::new(),
    })
}

fn zd(cfg: &ExperimentConfig) -> Run {
    cfg.check_keys(keys(cfg.experiment))?;
    let field = ZdFieldVector {
        gamma: cfg.list("gamma", &[1.0, 2.0])?,
        alpha: cfg.get("alpha", 1.0)?,
    };
    let radius: usize = cfg.get("radius", 40)?;
    let steps: usize = cfg.get("steps", 300)?;
    let spec = zd_spectrum(&field)?;
    let check = if radius > 0 && spec.lattice_step.is_some() {
        Some(zd_lattice_check(&field, radius, steps, 1e-8, 1e-10)?)
    } else {
        None
    };
    let spec_json: Value = serde_json::from_str(&spec.to_json()).expect("valid json");
    let mut table = Table::new(&["quantity", "value"]);
    table.push([
        "kind".to_string(),
        spec_json["kind"].as_str().unwrap_or_default().to_string(),
    ]);
    if let Some(s) = spec.lattice_step {
        table.push(["lattice_step".to_string(), s.to_string()]);
    }
    if let Some(c) = &check {
        table.push(["nodes_checked".to_string(), c.nodes_checked.to_string()]);
        table.push(["max_distance".to_string(), c.max_distance.to_string()]);
        table.push(["weight_captured".to_string(), c.weight_captured.to_string()]);
    }
    let pass = check
        .as_ref()
        .is_none_or(|c| c.max_distance <= 1e-6 && c.nodes_checked > 0);
    Ok(Outcome {
        pass,
        summary: format!(
            "zd-spectrum γ={:?}: {} kind {}, lattice distance {:?}",
            field.gamma,
            verdict(pass),
            spec_json["kind"],
            check.as_ref().map(|c| c.max_distance)
        ),
        json: json!({"spectrum": spec_json, "lattice_check": check}),
        table,
        extra: Vec::new(),
    })
}
