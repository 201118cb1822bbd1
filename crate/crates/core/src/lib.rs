//! Exact solutions of Stein equations for diffusions with polynomial
//! coefficients and polynomial test functions.
//!
//! The generator of a diffusion applied to a monomial `x^K` gives
//! `Σ_M c_M x^M - R x^K` with lower-degree `M`. Reading that as a jump
//! process on monomials turns the semigroup `E h(X_x(t))` into the
//! expectation of a finite absorbing chain, so the Stein solution
//! `f_h = -∫ (E h(X_x(t)) - E h(Z)) dt`, the stationary moment `E h(Z)` and
//! derivative bounds all come out of two dynamic programs over a DAG, in
//! exact rational arithmetic.
//!
//! ```
//! use stein_dual::{solve_stein, DiffusionSpec, MultiIndex};
//!
//! let sol = solve_stein(&DiffusionSpec::ou(), &MultiIndex::univariate(3)).unwrap();
//! assert_eq!(sol.f_h.to_string(), "-1/3*x^3 - 2*x");
//! ```
//!
//! The [`mc`] module holds the independent oracles used to check the exact
//! path: dual-chain and Euler-Maruyama simulation, a Feynman-Kac estimator
//! and quadrature of the classical normal solution.

pub mod dual;
pub mod error;
pub mod generator;
pub mod mc;
pub mod moments;
pub mod poly;
pub mod rational;

pub use dual::{
    backward_absorption, build_dag, derivative_bound, forward_occupancy, solve_stein,
    solve_stein_polynomial, verify_stein_identity, DualDag, SteinSolution,
};
pub use error::{Error, Result};
pub use generator::{
    apply_generator, monomial_action, validate, DiffusionSpec, Family, MonomialAction,
    ValidationReport,
};
pub use mc::{EstimateWithError, SimConfig};
pub use poly::{MultiIndex, Polynomial};
pub use rational::Rational;
