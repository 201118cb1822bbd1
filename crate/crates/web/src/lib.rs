//! Browser bindings. Each export takes plain strings and numbers and
//! returns a JSON document; errors surface as thrown JavaScript errors.
//!
//! The [`api`] module holds the same operations as ordinary Rust functions
//! so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod api;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Solve the Stein equation and sample `f_h` for plotting.
#[wasm_bindgen]
pub fn solve(family: &str, params: &str, monomial: &str) -> Result<String, JsError> {
    js(api::solve(family, params, monomial))
}

/// Nodes and weighted edges of the dual jump chain.
#[wasm_bindgen]
pub fn dual_dag(family: &str, params: &str, monomial: &str) -> Result<String, JsError> {
    js(api::dual_dag(family, params, monomial))
}

/// `E h(X_x(t))` over `[0, t_max]`, exactly and by simulation.
#[wasm_bindgen]
pub fn semigroup_curve(
    family: &str,
    params: &str,
    monomial: &str,
    x: &str,
    t_max: f64,
    samples: usize,
    seed: u32,
) -> Result<String, JsError> {
    js(api::semigroup_curve(
        family,
        params,
        monomial,
        x,
        t_max,
        samples,
        u64::from(seed),
    ))
}
