use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand_distr::Exp1;

use super::{merge_estimates, run_batches, stream, EstimateWithError, Moments, SimConfig};
use crate::dual::build_dag;
use crate::error::{Error, Result};
use crate::generator::DiffusionSpec;
use crate::poly::MultiIndex;
use crate::rational::{self, Rational};

/// Above this value of `k(k-2)t` the Feynman-Kac weights are too heavy-tailed
/// for the estimate to mean anything; the estimator refuses to run.
pub const FK_EXPONENT_CAP: f64 = 30.0;
/// Above this value a warning is logged.
pub const FK_EXPONENT_WARN: f64 = 8.0;

struct Jump {
    cumulative: f64,
    target: usize,
    multiplier: f64,
}

struct Node {
    /// `x^node` at the evaluation point.
    value: f64,
    /// `None` for the absorbing constant node.
    rate: Option<f64>,
    jumps: Vec<Jump>,
}

/// Float tables for the dual chain. With `N = max(R, Σ|c|)` the chain jumps
/// to `v` with probability `|c(u,v)|/N` and multiplies its coefficient by
/// `sign(c) N / R`; the remaining probability `(N - Σ|c|)/N` kills it. The
/// expected multiplier is then `c(u,v)/R` per target, as required.
fn compile(spec: &DiffusionSpec, root: &MultiIndex, x: &[f64]) -> Result<Vec<Node>> {
    let dag = build_dag(spec, root)?;
    let order = dag.nodes();
    let index: BTreeMap<&MultiIndex, usize> =
        order.iter().enumerate().map(|(i, m)| (m, i)).collect();
    order
        .iter()
        .map(|u| {
            let value = u.eval_f64(x);
            let Some(action) = dag.action(u) else {
                return Ok(Node {
                    value,
                    rate: None,
                    jumps: Vec::new(),
                });
            };
            let total: Rational = action.targets.values().map(|c| c.abs()).sum();
            let norm = if total > action.exit_rate {
                total.clone()
            } else {
                action.exit_rate.clone()
            };
            let leaks = total < norm;
            let mut cumulative = Rational::zero();
            let mut jumps: Vec<Jump> = action
                .targets
                .iter()
                .rev()
                .map(|(v, c)| {
                    cumulative += c.abs() / &norm;
                    let multiplier = if c.is_negative() {
                        -&norm
                    } else {
                        norm.clone()
                    } / &action.exit_rate;
                    Jump {
                        cumulative: rational::to_f64(&cumulative),
                        target: index[v],
                        multiplier: rational::to_f64(&multiplier),
                    }
                })
                .collect();
            if !leaks {
                if let Some(last) = jumps.last_mut() {
                    last.cumulative = f64::INFINITY;
                }
            }
            Ok(Node {
                value,
                rate: Some(rational::to_f64(&action.exit_rate)),
                jumps,
            })
        })
        .collect()
}

fn check_point(spec: &DiffusionSpec, x: &[f64], t: f64) -> Result<()> {
    if x.len() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: x.len(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(
            "time must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Monte Carlo estimate of `E Y_x(1,t)`, the dual process started at the
/// monomial `x^root` and evaluated at `x` after time `t`.
pub fn simulate_dual(
    spec: &DiffusionSpec,
    root: &MultiIndex,
    x: &[f64],
    t: f64,
    cfg: &SimConfig,
) -> Result<EstimateWithError> {
    cfg.validate()?;
    check_point(spec, x, t)?;
    let nodes = compile(spec, root, x)?;
    let parts = run_batches(cfg, stream::DUAL, |rng, n| {
        let mut acc = Moments::default();
        for _ in 0..n {
            let mut at = 0usize;
            let mut coeff = 1.0f64;
            let mut clock = 0.0f64;
            loop {
                let node = &nodes[at];
                let Some(rate) = node.rate else { break };
                let hold: f64 = rng.sample::<f64, _>(Exp1) / rate;
                clock += hold;
                if clock > t {
                    break;
                }
                let u: f64 = rng.random();
                match node.jumps.iter().find(|j| u < j.cumulative) {
                    Some(j) => {
                        coeff *= j.multiplier;
                        at = j.target;
                    }
                    None => {
                        coeff = 0.0;
                        break;
                    }
                }
            }
            acc.push(coeff * nodes[at].value);
        }
        acc
    });
    Ok(merge_estimates(&parts, cfg.seed))
}

/// Estimate `E[x^{Y(t)} exp(∫_0^t (Y² - 2Y) du)]` where `Y` starts at `k`
/// and jumps `y → y-2` at rate `y(y-1)`. This equals `E X_x(t)^k` for the
/// OU process `f'' - x f'`.
///
/// The weight grows like `exp(k(k-2)t)`; runs with `k(k-2)t` above
/// [`FK_EXPONENT_CAP`] are refused.
pub fn feynman_kac_ou(x: f64, k: u32, t: f64, cfg: &SimConfig) -> Result<EstimateWithError> {
    cfg.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(
            "time must be finite and non-negative".into(),
        ));
    }
    let kf = k as f64;
    let exponent = kf * (kf - 2.0) * t;
    if exponent > FK_EXPONENT_CAP {
        return Err(Error::FeynmanKacHorizon {
            exponent,
            cap: FK_EXPONENT_CAP,
        });
    }
    if exponent > FK_EXPONENT_WARN {
        log::warn!("Feynman-Kac exponent k(k-2)t = {exponent:.2}; expect high variance");
    }
    let parts = run_batches(cfg, stream::FEYNMAN_KAC, |rng, n| {
        let mut acc = Moments::default();
        for _ in 0..n {
            let mut y = k as i64;
            let mut clock = 0.0f64;
            let mut integral = 0.0f64;
            loop {
                let yf = y as f64;
                let potential = yf * yf - 2.0 * yf;
                let rate = yf * (yf - 1.0);
                let hold = if rate > 0.0 {
                    rng.sample::<f64, _>(Exp1) / rate
                } else {
                    f64::INFINITY
                };
                if clock + hold >= t {
                    integral += potential * (t - clock);
                    break;
                }
                integral += potential * hold;
                clock += hold;
                y -= 2;
            }
            acc.push(x.powi(y as i32) * integral.exp());
        }
        acc
    });
    Ok(merge_estimates(&parts, cfg.seed))
}
