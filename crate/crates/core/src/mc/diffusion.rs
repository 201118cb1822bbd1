use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::jump::simulate_dual;
use super::{run_batches, stream, EstimateWithError, Moments, SimConfig};
use crate::error::{Error, Result};
use crate::generator::{DiffusionSpec, Family};
use crate::poly::{MultiIndex, Polynomial};

/// A polynomial of degree at most two compiled for repeated float
/// evaluation. Every built-in family has affine drift and quadratic
/// diffusion coefficients.
struct Quadratic {
    constant: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
}

impl Quadratic {
    fn new(p: &Polynomial) -> Result<Self> {
        let mut q = Quadratic {
            constant: 0.0,
            linear: Vec::new(),
            quadratic: Vec::new(),
        };
        for (exp, c) in p.to_f64_terms() {
            let axes: Vec<usize> = exp
                .iter()
                .enumerate()
                .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
                .collect();
            match axes[..] {
                [] => q.constant += c,
                [i] => q.linear.push((i, c)),
                [i, j] => q.quadratic.push((i, j, c)),
                _ => {
                    return Err(Error::Unsupported(
                        "diffusion simulation needs drift and diffusion of degree at most 2".into(),
                    ))
                }
            }
        }
        Ok(q)
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(i, c) in &self.linear {
            v += c * x[i];
        }
        for &(i, j, c) in &self.quadratic {
            v += c * x[i] * x[j];
        }
        v
    }
}

/// Lower-triangular `L` with `L Lᵀ = a` for symmetric PSD `a` (row-major,
/// `p×p`). Non-positive pivots, which arise from rounding or on the boundary
/// of the state space, zero their column.
fn psd_cholesky(a: &[f64], p: usize, l: &mut [f64]) {
    l.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if d <= 0.0 {
            continue;
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
}

/// Keep the state inside the support after an Euler step.
fn project(family: Family, x: &mut [f64]) {
    match family {
        Family::Gamma => x[0] = x[0].max(0.0),
        Family::Beta => x[0] = x[0].clamp(0.0, 1.0),
        Family::Dirichlet => {
            let mut sum = 0.0;
            for xi in x.iter_mut() {
                *xi = xi.max(0.0);
                sum += *xi;
            }
            if sum > 1.0 {
                x.iter_mut().for_each(|xi| *xi /= sum);
            }
        }
        Family::Ou | Family::MultiOu | Family::Custom => {}
    }
}

/// Euler-Maruyama endpoints of `dX = b(X) dt + L(X) dW` with
/// `L Lᵀ = 2σ(X)`, the SDE matching the generator convention
/// `A = Σ σ_ij ∂_i∂_j + Σ b_i ∂_i`. Wright-Fisher paths are clipped back
/// onto the simplex after every step.
pub fn simulate_diffusion(
    spec: &DiffusionSpec,
    x: &[f64],
    t: f64,
    cfg: &SimConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let family = spec.family();
    if family == Family::Custom {
        return Err(Error::Unsupported(
            "diffusion simulation is only available for built-in families".into(),
        ));
    }
    let p = spec.dimension();
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: x.len(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(
            "time must be finite and non-negative".into(),
        ));
    }
    let drift = spec
        .drift()
        .iter()
        .map(Quadratic::new)
        .collect::<Result<Vec<_>>>()?;
    let diffusion = spec
        .diffusion()
        .iter()
        .flatten()
        .map(Quadratic::new)
        .collect::<Result<Vec<_>>>()?;
    let steps = (t / cfg.em_step).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let sqrt_dt = dt.sqrt();

    let batches = run_batches(cfg, stream::DIFFUSION, |rng, n| {
        let mut out = Vec::with_capacity(n);
        let mut cov = vec![0.0; p * p];
        let mut l = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        let mut z = vec![0.0; p];
        for _ in 0..n {
            let mut state = x.to_vec();
            for _ in 0..steps {
                for i in 0..p {
                    b[i] = drift[i].eval(&state);
                    z[i] = rng.sample(StandardNormal);
                }
                if p == 1 {
                    let s = (2.0 * diffusion[0].eval(&state)).max(0.0).sqrt();
                    state[0] += b[0] * dt + s * sqrt_dt * z[0];
                } else {
                    for (c, poly) in cov.iter_mut().zip(&diffusion) {
                        *c = 2.0 * poly.eval(&state);
                    }
                    psd_cholesky(&cov, p, &mut l);
                    for i in 0..p {
                        let noise: f64 = (0..=i).map(|k| l[i * p + k] * z[k]).sum();
                        state[i] += b[i] * dt + sqrt_dt * noise;
                    }
                }
                project(family, &mut state);
            }
            out.push(state);
        }
        out
    });
    Ok(batches.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Estimate of `E Y_x(1,t)` from the dual jump process.
    pub dual: EstimateWithError,
    /// Estimate of `E h(X_x(t))` from Euler-Maruyama paths.
    pub diffusion: EstimateWithError,
    pub z: f64,
    pub pass: bool,
}

/// Largest `|z|` accepted by [`semigroup_agreement`].
pub const AGREEMENT_Z: f64 = 4.0;

/// Check `E h(X_x(t)) = E Y_x(1,t)` for `h = x^root` by simulating both
/// sides independently.
pub fn semigroup_agreement(
    spec: &DiffusionSpec,
    root: &MultiIndex,
    x: &[f64],
    t: f64,
    cfg: &SimConfig,
) -> Result<AgreementReport> {
    let dual = simulate_dual(spec, root, x, t, cfg)?;
    let endpoints = simulate_diffusion(spec, x, t, cfg)?;
    let mut acc = Moments::default();
    for e in &endpoints {
        acc.push(root.eval_f64(e));
    }
    let diffusion = acc.estimate(cfg.seed);
    let z = dual.z_score(&diffusion);
    Ok(AgreementReport {
        dual,
        diffusion,
        z,
        pass: z.abs() <= AGREEMENT_Z,
    })
}
