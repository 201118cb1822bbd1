use std::collections::BTreeMap;

use serde_json::{json, Value};

use stein_dual::dual::{backward_absorption, build_dag, forward_occupancy};
use stein_dual::rational::{format_rational, to_f64};
use stein_dual::{mc, solve_stein, DiffusionSpec, Family, MultiIndex, SimConfig};

/// Points on each plotted curve.
pub const CURVE_POINTS: usize = 121;
/// Largest number of dual paths a single browser call may request.
pub const MAX_SAMPLES: usize = 200_000;

fn spec(family: &str, params: &str) -> Result<DiffusionSpec, String> {
    let family = Family::parse(family).map_err(|e| e.to_string())?;
    DiffusionSpec::from_param_string(family, params).map_err(|e| e.to_string())
}

fn monomial(s: &str, dim: usize) -> Result<MultiIndex, String> {
    let exps: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("exponents must be non-negative integers, got `{s}`"))?;
    if exps.len() != dim {
        return Err(format!("expected {dim} exponents, got {}", exps.len()));
    }
    Ok(MultiIndex::new(exps))
}

fn point(s: &str, dim: usize) -> Result<Vec<f64>, String> {
    let x: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("the starting point must be numbers, got `{s}`"))?;
    if x.len() != dim || x.iter().any(|v| !v.is_finite()) {
        return Err(format!("expected {dim} finite coordinates"));
    }
    Ok(x)
}

/// Plotting window for univariate targets.
fn window(spec: &DiffusionSpec) -> (f64, f64) {
    match spec.family() {
        Family::Beta => (0.0, 1.0),
        Family::Gamma => {
            let r = spec.param("r").map(to_f64).unwrap_or(1.0);
            let l = spec.param("lambda").map(to_f64).unwrap_or(1.0);
            (0.0, (r + 4.0 * r.sqrt()) / l)
        }
        _ => (-3.0, 3.0),
    }
}

fn to_json(v: &Value) -> String {
    serde_json::to_string(v).expect("json values serialize")
}

pub fn solve(family: &str, params: &str, mono: &str) -> Result<String, String> {
    let spec = spec(family, params)?;
    let root = monomial(mono, spec.dimension())?;
    let sol = solve_stein(&spec, &root).map_err(|e| e.to_string())?;
    let curve = (spec.dimension() == 1).then(|| {
        let (lo, hi) = window(&spec);
        let xs: Vec<f64> = (0..CURVE_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64)
            .collect();
        let f: Vec<f64> = xs.iter().map(|&x| sol.f_h.eval_f64(&[x])).collect();
        json!({ "x": xs, "f_h": f })
    });
    Ok(to_json(&json!({
        "family": spec.family().name(),
        "dimension": spec.dimension(),
        "monomial": root.to_string(),
        "f_h": sol.f_h.to_string(),
        "centered": sol.centered().to_string(),
        "moment": format_rational(&sol.stationary_moment),
        "moment_value": to_f64(&sol.stationary_moment),
        "curve": curve,
    })))
}

pub fn dual_dag(family: &str, params: &str, mono: &str) -> Result<String, String> {
    let spec = spec(family, params)?;
    let root = monomial(mono, spec.dimension())?;
    let dag = build_dag(&spec, &root).map_err(|e| e.to_string())?;
    let occupancy = forward_occupancy(&dag);
    let absorption = backward_absorption(&dag);
    let nodes = dag.nodes();
    let index: BTreeMap<&MultiIndex, usize> =
        nodes.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let node_json: Vec<Value> = nodes
        .iter()
        .map(|u| {
            json!({
                "label": u.to_string(),
                "degree": u.degree(),
                "exit_rate": dag.exit_rate(u).map(format_rational),
                "occupancy": occupancy.get(u).map(format_rational),
                "absorption": absorption.get(u).map(format_rational),
            })
        })
        .collect();
    let edges: Vec<Value> = dag
        .edges()
        .map(|(u, v, c)| json!({ "from": index[u], "to": index[v], "weight": format_rational(c) }))
        .collect();
    Ok(to_json(&json!({ "nodes": node_json, "edges": edges })))
}

fn axpy(m: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    m.iter().zip(k).map(|(v, d)| v + a * d).collect()
}

/// `E x^u` after time `t` for every dual node, from the backward equations
/// `m_u' = -R_u m_u + Σ c(u,v) m_v`, integrated with classical RK4 at each
/// of the requested times.
fn exact_curve(
    spec: &DiffusionSpec,
    root: &MultiIndex,
    x: &[f64],
    times: &[f64],
) -> Result<Vec<f64>, String> {
    let dag = build_dag(spec, root).map_err(|e| e.to_string())?;
    let nodes = dag.nodes();
    let index: BTreeMap<&MultiIndex, usize> =
        nodes.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let rates: Vec<f64> = nodes
        .iter()
        .map(|u| dag.exit_rate(u).map(to_f64).unwrap_or(0.0))
        .collect();
    let edges: Vec<(usize, usize, f64)> = dag
        .edges()
        .map(|(u, v, c)| (index[u], index[v], to_f64(c)))
        .collect();
    let rhs = |m: &[f64]| -> Vec<f64> {
        let mut d: Vec<f64> = m.iter().zip(&rates).map(|(v, r)| -r * v).collect();
        for &(u, v, c) in &edges {
            d[u] += c * m[v];
        }
        d
    };
    let fastest = rates.iter().copied().fold(1.0, f64::max);
    let mut m: Vec<f64> = nodes.iter().map(|u| u.eval_f64(x)).collect();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        let steps = (span * fastest / 0.25).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&m);
            let k2 = rhs(&axpy(&m, 0.5 * h, &k1));
            let k3 = rhs(&axpy(&m, 0.5 * h, &k2));
            let k4 = rhs(&axpy(&m, h, &k3));
            for i in 0..m.len() {
                m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        now = t;
        out.push(m[0]);
    }
    Ok(out)
}

pub fn semigroup_curve(
    family: &str,
    params: &str,
    mono: &str,
    x: &str,
    t_max: f64,
    samples: usize,
    seed: u64,
) -> Result<String, String> {
    let spec = spec(family, params)?;
    let root = monomial(mono, spec.dimension())?;
    let x = point(x, spec.dimension())?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err("the time horizon must be positive".into());
    }
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(format!("samples must be between 1 and {MAX_SAMPLES}"));
    }
    let times: Vec<f64> = (0..=24).map(|i| t_max * i as f64 / 24.0).collect();
    let exact = exact_curve(&spec, &root, &x, &times)?;
    let mut means = Vec::with_capacity(times.len());
    let mut errors = Vec::with_capacity(times.len());
    for &t in &times {
        let cfg = SimConfig {
            sample_count: samples,
            time_horizon: t,
            seed,
            batch_count: 1,
            ..SimConfig::default()
        };
        let e = mc::simulate_dual(&spec, &root, &x, t, &cfg).map_err(|e| e.to_string())?;
        means.push(e.mean);
        errors.push(e.std_error);
    }
    let limit = solve_stein(&spec, &root)
        .map_err(|e| e.to_string())?
        .stationary_moment;
    Ok(to_json(&json!({
        "t": times,
        "exact": exact,
        "estimate": means,
        "std_error": errors,
        "limit": to_f64(&limit),
    })))
}
