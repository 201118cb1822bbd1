//! Exact solution of the Stein equation `A f_h = h - E h(Z)` through the dual
//! jump process on monomials.
//!
//! Starting from the test monomial `x^K`, the dual process holds at each
//! monomial `x^u` for an `Exp(R_u)` time and then passes weight `c(u,v)/R_u`
//! on to each lower-degree `x^v`. Every edge lowers total degree, so the
//! reachable monomials form a finite DAG and both quantities we need are
//! plain dynamic programs over it:
//!
//! * occupancy `O_u`, the expected time-integrated coefficient the process
//!   places on `x^u` (forward, root first);
//! * absorption value `g(u)`, the expected constant the process started at
//!   `x^u` is eventually absorbed at (backward, constant first).
//!
//! Then `E h(Z) = g(K)` and `f_h = -Σ_u O_u (x^u - g(u))`, which is the
//! time integral `-∫ (E Y_x(1,t) - E h(Z)) dt` evaluated in closed form.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::generator::{apply_generator, monomial_action, DiffusionSpec, MonomialAction};
use crate::poly::{MultiIndex, Polynomial};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualDag {
    root: MultiIndex,
    /// Non-constant nodes with their generator action, keyed by node.
    actions: BTreeMap<MultiIndex, MonomialAction>,
    /// Whether the constant monomial is reachable.
    reaches_constant: bool,
}

impl DualDag {
    pub fn root(&self) -> &MultiIndex {
        &self.root
    }

    /// All nodes in topological order (root first, constant last).
    pub fn nodes(&self) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> = self.actions.keys().rev().cloned().collect();
        if self.reaches_constant {
            out.push(MultiIndex::zero(self.root.dim()));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.actions.len() + usize::from(self.reaches_constant)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exit_rate(&self, node: &MultiIndex) -> Option<&Rational> {
        self.actions.get(node).map(|a| &a.exit_rate)
    }

    pub fn action(&self, node: &MultiIndex) -> Option<&MonomialAction> {
        self.actions.get(node)
    }

    /// Every `(from, to, weight)` edge, sources in topological order.
    pub fn edges(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &Rational)> {
        self.actions
            .iter()
            .rev()
            .flat_map(|(u, a)| a.targets.iter().rev().map(move |(v, c)| (u, v, c)))
    }

    /// Non-constant nodes from the root down.
    fn forward_order(&self) -> impl Iterator<Item = (&MultiIndex, &MonomialAction)> {
        self.actions.iter().rev()
    }
}

/// Closure of `root` under the generator's monomial actions.
pub fn build_dag(spec: &DiffusionSpec, root: &MultiIndex) -> Result<DualDag> {
    if root.dim() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: root.dim(),
        });
    }
    if root.is_constant() {
        return Err(Error::DegenerateRoot);
    }
    let mut actions = BTreeMap::new();
    let mut reaches_constant = false;
    let mut seen = BTreeSet::from([root.clone()]);
    let mut queue = VecDeque::from([root.clone()]);
    while let Some(u) = queue.pop_front() {
        let action = monomial_action(spec, &u)?;
        for v in action.targets.keys() {
            if v.is_constant() {
                reaches_constant = true;
            } else if seen.insert(v.clone()) {
                queue.push_back(v.clone());
            }
        }
        actions.insert(u, action);
    }
    Ok(DualDag {
        root: root.clone(),
        actions,
        reaches_constant,
    })
}

/// Coefficient mass arriving at each node (the constant node included),
/// starting from unit mass at the root.
fn forward_mass(dag: &DualDag) -> BTreeMap<MultiIndex, Rational> {
    let mut mass: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    mass.insert(dag.root.clone(), Rational::one());
    for (u, action) in dag.forward_order() {
        let m = mass.get(u).cloned().unwrap_or_else(Rational::zero);
        if m.is_zero() {
            continue;
        }
        let occupancy = &m / &action.exit_rate;
        for (v, c) in &action.targets {
            *mass.entry(v.clone()).or_insert_with(Rational::zero) += &occupancy * c;
        }
    }
    mass
}

/// `O_u = mass(u) / R_u` for every non-constant node.
pub fn forward_occupancy(dag: &DualDag) -> BTreeMap<MultiIndex, Rational> {
    let mass = forward_mass(dag);
    dag.actions
        .iter()
        .map(|(u, a)| {
            let m = mass.get(u).cloned().unwrap_or_else(Rational::zero);
            (u.clone(), m / &a.exit_rate)
        })
        .collect()
}

/// Total mass absorbed at the constant monomial. Equals `g(root)`; computed
/// by the forward route so the two can be checked against each other.
pub fn absorbed_mass(dag: &DualDag) -> Rational {
    forward_mass(dag)
        .remove(&MultiIndex::zero(dag.root.dim()))
        .unwrap_or_else(Rational::zero)
}

/// `g(1) = 1`, `g(u) = Σ_v c(u,v) g(v) / R_u`. Mass that leaks to the zero
/// function contributes nothing.
pub fn backward_absorption(dag: &DualDag) -> BTreeMap<MultiIndex, Rational> {
    let constant = MultiIndex::zero(dag.root.dim());
    let mut g: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    if dag.reaches_constant {
        g.insert(constant, Rational::one());
    }
    for (u, action) in &dag.actions {
        let mut acc = Rational::zero();
        for (v, c) in &action.targets {
            if let Some(gv) = g.get(v) {
                acc += c * gv;
            }
        }
        g.insert(u.clone(), acc / &action.exit_rate);
    }
    g
}

/// Exact solution of the Stein equation for a polynomial test function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinSolution {
    pub spec: DiffusionSpec,
    /// The test function `h`.
    pub h: Polynomial,
    /// `f_h = -∫_0^∞ (E h(X_x(t)) - E h(Z)) dt`, constant term included.
    pub f_h: Polynomial,
    /// `E h(Z)` under the stationary law.
    pub stationary_moment: Rational,
    pub occupancy: BTreeMap<MultiIndex, Rational>,
    pub absorption_value: BTreeMap<MultiIndex, Rational>,
}

impl SteinSolution {
    /// `f_h` with its constant term removed. Any constant shift still solves
    /// the Stein equation.
    pub fn centered(&self) -> Polynomial {
        let mut p = self.f_h.clone();
        let c = p.constant_term();
        p.add_term(MultiIndex::zero(p.dim()), -c);
        p
    }

    /// `-Σ_u O_u (x^u - g(u))`, rebuilt from the stored tables.
    pub fn decomposition(&self) -> Polynomial {
        let dim = self.f_h.dim();
        let mut p = Polynomial::zero(dim);
        for (u, o) in &self.occupancy {
            p.add_term(u.clone(), -o);
            let g = self
                .absorption_value
                .get(u)
                .cloned()
                .unwrap_or_else(Rational::zero);
            p.add_term(MultiIndex::zero(dim), o * g);
        }
        p
    }
}

/// Solve for the test monomial `x^root`.
pub fn solve_stein(spec: &DiffusionSpec, root: &MultiIndex) -> Result<SteinSolution> {
    let dag = build_dag(spec, root)?;
    let occupancy = forward_occupancy(&dag);
    let absorption_value = backward_absorption(&dag);
    let dim = root.dim();
    let mut f_h = Polynomial::zero(dim);
    for (u, o) in &occupancy {
        f_h.add_term(u.clone(), -o);
        if let Some(g) = absorption_value.get(u) {
            f_h.add_term(MultiIndex::zero(dim), o * g);
        }
    }
    let stationary_moment = absorption_value
        .get(root)
        .cloned()
        .unwrap_or_else(Rational::zero);
    Ok(SteinSolution {
        spec: spec.clone(),
        h: Polynomial::monomial(root.clone(), Rational::one()),
        f_h,
        stationary_moment,
        occupancy,
        absorption_value,
    })
}

/// Solve for an arbitrary polynomial `h` by linearity. The constant part of
/// `h` only shifts `E h(Z)`.
pub fn solve_stein_polynomial(spec: &DiffusionSpec, h: &Polynomial) -> Result<SteinSolution> {
    let dim = spec.dimension();
    if h.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.dim(),
        });
    }
    let mut out = SteinSolution {
        spec: spec.clone(),
        h: h.clone(),
        f_h: Polynomial::zero(dim),
        stationary_moment: h.constant_term(),
        occupancy: BTreeMap::new(),
        absorption_value: BTreeMap::new(),
    };
    for (exp, c) in h.terms() {
        if exp.is_constant() {
            continue;
        }
        let part = solve_stein(spec, exp)?;
        out.f_h = &out.f_h + &part.f_h.scale(c);
        out.stationary_moment += c * &part.stationary_moment;
        for (u, o) in part.occupancy {
            let slot = out.occupancy.entry(u).or_insert_with(Rational::zero);
            *slot += c * o;
        }
        out.absorption_value.extend(part.absorption_value);
    }
    out.occupancy.retain(|_, o| !o.is_zero());
    Ok(out)
}

/// `Σ |coefficients|` of `∂^order f_h`, a sup bound on the unit box.
///
/// Only valid when the stationary law lives inside `[0,1]^p` (Beta,
/// Dirichlet).
pub fn derivative_bound(sol: &SteinSolution, order: &[u32]) -> Result<Rational> {
    let family = sol.spec.family();
    if !family.has_unit_box_support() {
        return Err(Error::UnboundedSupport(family));
    }
    Ok(sol.f_h.partial(order)?.abs_coeff_sum())
}

/// `A f_h - h + E h(Z)`; zero exactly when `f_h` solves the Stein equation.
pub fn stein_residual(spec: &DiffusionSpec, sol: &SteinSolution) -> Result<Polynomial> {
    let af = apply_generator(spec, &sol.f_h)?;
    let shift = Polynomial::constant(sol.h.dim(), sol.stationary_moment.clone());
    Ok(&(&af - &sol.h) + &shift)
}

pub fn verify_stein_identity(
    spec: &DiffusionSpec,
    sol: &SteinSolution,
) -> Result<(bool, Polynomial)> {
    let r = stein_residual(spec, sol)?;
    Ok((r.is_zero(), r))
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    exp: Vec<u32>,
    #[serde(with = "rational::serde_str")]
    value: Rational,
}

fn table(m: &BTreeMap<MultiIndex, Rational>) -> Vec<TableEntry> {
    m.iter()
        .rev()
        .map(|(e, v)| TableEntry {
            exp: e.exponents().to_vec(),
            value: v.clone(),
        })
        .collect()
}

fn untable(entries: Vec<TableEntry>) -> BTreeMap<MultiIndex, Rational> {
    entries
        .into_iter()
        .map(|t| (MultiIndex::new(t.exp), t.value))
        .collect()
}

#[derive(Deserialize)]
struct SolutionJson {
    spec: DiffusionSpec,
    h: Polynomial,
    f_h: Polynomial,
    #[serde(with = "rational::serde_str")]
    stationary_moment: Rational,
    occupancy: Vec<TableEntry>,
    absorption_value: Vec<TableEntry>,
}

impl Serialize for SteinSolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SteinSolution", 6)?;
        st.serialize_field("spec", &self.spec)?;
        st.serialize_field("h", &self.h)?;
        st.serialize_field("f_h", &self.f_h)?;
        st.serialize_field(
            "stationary_moment",
            &rational::format_rational(&self.stationary_moment),
        )?;
        st.serialize_field("occupancy", &table(&self.occupancy))?;
        st.serialize_field("absorption_value", &table(&self.absorption_value))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SteinSolution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SolutionJson::deserialize(d)?;
        Ok(SteinSolution {
            spec: raw.spec,
            h: raw.h,
            f_h: raw.f_h,
            stationary_moment: raw.stationary_moment,
            occupancy: untable(raw.occupancy),
            absorption_value: untable(raw.absorption_value),
        })
    }
}
