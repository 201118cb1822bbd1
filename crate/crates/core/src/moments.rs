//! Closed-form stationary moments, independent of the dual solver.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::generator::{DiffusionSpec, Family};
use crate::poly::MultiIndex;
use crate::rational::{int, rising, Rational};

/// Largest total order the Wick pairing oracle accepts.
pub const MAX_WICK_ORDER: u32 = 24;

/// `E Z^k` for standard normal `Z`: `(k-1)!!` for even `k`, else 0.
pub fn normal_moment(k: u32) -> Rational {
    if k % 2 == 1 {
        return Rational::zero();
    }
    (1..k)
        .step_by(2)
        .fold(Rational::one(), |acc, j| acc * int(j as i64))
}

/// `Γ(r+k) / (λ^k Γ(r))`.
pub fn gamma_moment(r: &Rational, lambda: &Rational, k: u32) -> Rational {
    rising(r, k) / num_traits::pow(lambda.clone(), k as usize)
}

/// `Π_{j<k} (α+j)/(α+β+j)`.
pub fn beta_moment(alpha: &Rational, beta: &Rational, k: u32) -> Rational {
    rising(alpha, k) / rising(&(alpha + beta), k)
}

/// `Π_i rising(a_i, k_i) / rising(s, |k|)`, with `k` over the first `K-1`
/// coordinates (or all `K`).
pub fn dirichlet_mixed_moment(a: &[Rational], k: &MultiIndex) -> Result<Rational> {
    if k.dim() + 1 != a.len() && k.dim() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len() - 1,
            found: k.dim(),
        });
    }
    let s: Rational = a.iter().sum();
    let num = a
        .iter()
        .zip(k.exponents())
        .fold(Rational::one(), |acc, (ai, &ki)| acc * rising(ai, ki));
    Ok(num / rising(&s, k.degree()))
}

/// `E Π Z_i^{k_i}` for `Z ~ N(0, Σ)`, summing over all perfect pairings of
/// the index multiset (Isserlis/Wick).
pub fn gaussian_mixed_moment(sigma: &[Vec<Rational>], k: &MultiIndex) -> Result<Rational> {
    if k.dim() != sigma.len() {
        return Err(Error::DimensionMismatch {
            expected: sigma.len(),
            found: k.dim(),
        });
    }
    let order = k.degree();
    if order > MAX_WICK_ORDER {
        return Err(Error::SizeLimit {
            order,
            limit: MAX_WICK_ORDER,
        });
    }
    let mut memo = HashMap::new();
    Ok(wick(sigma, k.exponents().to_vec(), &mut memo))
}

fn wick(sigma: &[Vec<Rational>], k: Vec<u32>, memo: &mut HashMap<Vec<u32>, Rational>) -> Rational {
    let Some(i) = k.iter().position(|&ki| ki > 0) else {
        return Rational::one();
    };
    if k.iter().sum::<u32>() % 2 == 1 {
        return Rational::zero();
    }
    if let Some(v) = memo.get(&k) {
        return v.clone();
    }
    // Pair one copy of index i with every other remaining copy.
    let mut total = Rational::zero();
    for j in i..k.len() {
        let copies = if j == i { k[i] - 1 } else { k[j] };
        if copies == 0 || sigma[i][j].is_zero() {
            continue;
        }
        let mut rest = k.clone();
        rest[i] -= 1;
        rest[j] -= 1;
        total += int(copies as i64) * &sigma[i][j] * wick(sigma, rest, memo);
    }
    memo.insert(k, total.clone());
    total
}

/// Stationary moment `E Z^k` for any built-in family.
pub fn closed_form_moment(spec: &DiffusionSpec, k: &MultiIndex) -> Result<Rational> {
    if k.dim() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: k.dim(),
        });
    }
    let p = |name: &str| {
        spec.param(name)
            .cloned()
            .ok_or_else(|| Error::MissingParameter(name.into()))
    };
    match spec.family() {
        Family::Ou => Ok(normal_moment(k.get(0))),
        Family::Gamma => Ok(gamma_moment(&p("r")?, &p("lambda")?, k.get(0))),
        Family::Beta => Ok(beta_moment(&p("alpha")?, &p("beta")?, k.get(0))),
        Family::Dirichlet => {
            dirichlet_mixed_moment(&spec.dirichlet_params().unwrap_or_default(), k)
        }
        Family::MultiOu => gaussian_mixed_moment(&spec.covariance().unwrap_or_default(), k),
        Family::Custom => Err(Error::Unsupported(
            "no closed-form moments for custom generators".into(),
        )),
    }
}
