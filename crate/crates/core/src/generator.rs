//! Diffusion generators with polynomial coefficients.
//!
//! A generator acts on smooth `f` as
//!
//! ```text
//! A f = Σ_ij σ_ij(x) ∂_i ∂_j f + Σ_i b_i(x) ∂_i f
//! ```
//!
//! where `σ_ij` is the *full* second-order coefficient, not half of it. The
//! one-dimensional Ornstein-Uhlenbeck generator is therefore `f'' - x f'`
//! with `σ = 1`, and the matching SDE is `dX = b dt + sqrt(2σ) dW`.
//!
//! Applied to a monomial `x^K`, a generator in scope has the shape
//! `Σ_M c_M x^M - R x^K` with every `|M| < |K|` and `R > 0`. That shape is
//! read as a jump process on monomials: leave `x^K` at total rate `R`,
//! with weight `c_M` flowing to `x^M`. [`MonomialAction`] records it.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{MultiIndex, Polynomial};
use crate::rational::{self, int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ou,
    Gamma,
    Beta,
    MultiOu,
    Dirichlet,
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ou => "ou",
            Family::Gamma => "gamma",
            Family::Beta => "beta",
            Family::MultiOu => "multi_ou",
            Family::Dirichlet => "dirichlet",
            Family::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Family> {
        Ok(match name {
            "ou" | "normal" => Family::Ou,
            "gamma" => Family::Gamma,
            "beta" => Family::Beta,
            "multi_ou" | "multi-ou" | "mvn" => Family::MultiOu,
            "dirichlet" => Family::Dirichlet,
            "custom" => Family::Custom,
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    /// Stationary law supported inside the unit box.
    pub fn has_unit_box_support(self) -> bool {
        matches!(self, Family::Beta | Family::Dirichlet)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionSpec {
    family: Family,
    params: BTreeMap<String, Rational>,
    drift: Vec<Polynomial>,
    diffusion: Vec<Vec<Polynomial>>,
}

impl DiffusionSpec {
    /// `A f = f'' - x f'`, stationary law N(0, 1).
    pub fn ou() -> DiffusionSpec {
        DiffusionSpec {
            family: Family::Ou,
            params: BTreeMap::new(),
            drift: vec![-&Polynomial::var(1, 0)],
            diffusion: vec![vec![Polynomial::constant(1, int(1))]],
        }
    }

    /// `A f = x f'' + (r - λx) f'`, stationary law Gamma(r, λ) (rate λ).
    pub fn gamma(r: Rational, lambda: Rational) -> Result<DiffusionSpec> {
        require_positive("r", &r)?;
        require_positive("lambda", &lambda)?;
        let x = Polynomial::var(1, 0);
        let drift = &Polynomial::constant(1, r.clone()) - &x.scale(&lambda);
        Ok(DiffusionSpec {
            family: Family::Gamma,
            params: params([("r", r), ("lambda", lambda)]),
            drift: vec![drift],
            diffusion: vec![vec![x]],
        })
    }

    /// `A f = x(1-x) f'' + (α(1-x) - βx) f'`, the neutral Wright-Fisher
    /// diffusion with Beta(α, β) stationary law.
    pub fn beta(alpha: Rational, beta: Rational) -> Result<DiffusionSpec> {
        require_positive("alpha", &alpha)?;
        require_positive("beta", &beta)?;
        let x = Polynomial::var(1, 0);
        let drift = &Polynomial::constant(1, alpha.clone()) - &x.scale(&(&alpha + &beta));
        let diffusion = &x - &(&x * &x);
        Ok(DiffusionSpec {
            family: Family::Beta,
            params: params([("alpha", alpha), ("beta", beta)]),
            drift: vec![drift],
            diffusion: vec![vec![diffusion]],
        })
    }

    /// p-dimensional OU generator `Σ σ_ij ∂_i∂_j f - Σ w_i ∂_i f` with
    /// stationary law N(0, Σ).
    pub fn multi_ou(sigma: &[Vec<Rational>]) -> Result<DiffusionSpec> {
        let p = sigma.len();
        if p == 0 {
            return Err(Error::InvalidParameter {
                name: "sigma".into(),
                reason: "must be a non-empty matrix".into(),
            });
        }
        if sigma.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidParameter {
                name: "sigma".into(),
                reason: "must be square".into(),
            });
        }
        for i in 0..p {
            for j in 0..i {
                if sigma[i][j] != sigma[j][i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        if !is_positive_semidefinite(sigma) {
            return Err(Error::NotPositiveSemidefinite);
        }
        let mut ps = BTreeMap::new();
        for i in 0..p {
            for j in i..p {
                ps.insert(format!("sigma_{}_{}", i + 1, j + 1), sigma[i][j].clone());
            }
        }
        Ok(DiffusionSpec {
            family: Family::MultiOu,
            params: ps,
            drift: (0..p).map(|i| -&Polynomial::var(p, i)).collect(),
            diffusion: sigma
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|s| Polynomial::constant(p, s.clone()))
                        .collect()
                })
                .collect(),
        })
    }

    /// Wright-Fisher diffusion with parent-independent mutation on the
    /// simplex, state `(x_1, .., x_{K-1})` with `x_K = 1 - Σ x_i` implicit:
    /// `A f = Σ x_i(δ_ij - x_j) ∂_i∂_j f + Σ (a_i - s x_i) ∂_i f`.
    pub fn dirichlet(a: &[Rational]) -> Result<DiffusionSpec> {
        if a.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "a".into(),
                reason: "needs at least two components".into(),
            });
        }
        for (i, ai) in a.iter().enumerate() {
            require_positive(&format!("a{}", i + 1), ai)?;
        }
        let p = a.len() - 1;
        let s: Rational = a.iter().sum();
        let drift = (0..p)
            .map(|i| &Polynomial::constant(p, a[i].clone()) - &Polynomial::var(p, i).scale(&s))
            .collect();
        let diffusion = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        let xi = Polynomial::var(p, i);
                        let xixj = &xi * &Polynomial::var(p, j);
                        if i == j {
                            &xi - &xixj
                        } else {
                            -&xixj
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(DiffusionSpec {
            family: Family::Dirichlet,
            params: a
                .iter()
                .enumerate()
                .map(|(i, ai)| (format!("a{}", i + 1), ai.clone()))
                .collect(),
            drift,
            diffusion,
        })
    }

    /// User-supplied generator. The diffusion matrix must be symmetric.
    pub fn custom(
        drift: Vec<Polynomial>,
        diffusion: Vec<Vec<Polynomial>>,
    ) -> Result<DiffusionSpec> {
        let p = drift.len();
        if p == 0 {
            return Err(Error::InvalidParameter {
                name: "drift".into(),
                reason: "must have at least one component".into(),
            });
        }
        if diffusion.len() != p || diffusion.iter().any(|row| row.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: diffusion.len(),
            });
        }
        for poly in drift.iter().chain(diffusion.iter().flatten()) {
            if poly.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: poly.dim(),
                });
            }
        }
        for i in 0..p {
            for j in 0..i {
                if diffusion[i][j] != diffusion[j][i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(DiffusionSpec {
            family: Family::Custom,
            params: BTreeMap::new(),
            drift,
            diffusion,
        })
    }

    /// Parse `name=value,...` with exact rational values and build the
    /// family from them.
    pub fn from_param_string(family: Family, params: &str) -> Result<DiffusionSpec> {
        DiffusionSpec::from_params(family, &parse_params(params)?)
    }

    /// Build a built-in family from named parameters.
    ///
    /// Names: gamma `r`, `lambda`; beta `alpha`, `beta` (or `a`, `b`);
    /// dirichlet `a1..aK`; multi_ou `sigma_i_j` (1-based, missing diagonal
    /// entries default to 1, off-diagonal to 0) plus an optional `dim`.
    pub fn from_params(
        family: Family,
        params: &BTreeMap<String, Rational>,
    ) -> Result<DiffusionSpec> {
        let get = |names: &[&str]| -> Result<Rational> {
            names
                .iter()
                .find_map(|n| params.get(*n).cloned())
                .ok_or_else(|| Error::MissingParameter(names[0].to_string()))
        };
        match family {
            Family::Ou => Ok(DiffusionSpec::ou()),
            Family::Gamma => DiffusionSpec::gamma(get(&["r"])?, get(&["lambda", "l"])?),
            Family::Beta => DiffusionSpec::beta(get(&["alpha", "a"])?, get(&["beta", "b"])?),
            Family::Dirichlet => {
                let mut a = Vec::new();
                while let Some(v) = params.get(&format!("a{}", a.len() + 1)) {
                    a.push(v.clone());
                }
                if a.len() != params.len() {
                    return Err(Error::InvalidParameter {
                        name: "a".into(),
                        reason: "expects exactly a1..aK".into(),
                    });
                }
                DiffusionSpec::dirichlet(&a)
            }
            Family::MultiOu => {
                let mut p = 0usize;
                let mut entries = Vec::new();
                for (name, v) in params {
                    if name == "dim" {
                        p = p.max(rational::to_f64(v) as usize);
                        continue;
                    }
                    let (i, j) = parse_sigma_name(name)?;
                    p = p.max(i).max(j);
                    entries.push((i - 1, j - 1, v.clone()));
                }
                if p == 0 {
                    return Err(Error::MissingParameter("sigma_1_1".into()));
                }
                let mut sigma: Vec<Vec<Rational>> = (0..p)
                    .map(|i| {
                        (0..p)
                            .map(|j| if i == j { int(1) } else { int(0) })
                            .collect()
                    })
                    .collect();
                for (i, j, v) in entries {
                    sigma[i][j] = v.clone();
                    sigma[j][i] = v;
                }
                DiffusionSpec::multi_ou(&sigma)
            }
            Family::Custom => Err(Error::Unsupported(
                "custom generators need explicit drift and diffusion".into(),
            )),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &BTreeMap<String, Rational> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Rational> {
        self.params.get(name)
    }

    pub fn dimension(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &[Polynomial] {
        &self.drift
    }

    pub fn diffusion(&self) -> &[Vec<Polynomial>] {
        &self.diffusion
    }

    /// Dirichlet parameters `a_1..a_K`, in order.
    pub fn dirichlet_params(&self) -> Option<Vec<Rational>> {
        (self.family == Family::Dirichlet).then(|| {
            (1..=self.dimension() + 1)
                .map(|i| self.params[&format!("a{i}")].clone())
                .collect()
        })
    }

    /// Constant covariance matrix of a multivariate OU spec.
    pub fn covariance(&self) -> Option<Vec<Vec<Rational>>> {
        (self.family == Family::MultiOu).then(|| {
            self.diffusion
                .iter()
                .map(|row| row.iter().map(Polynomial::constant_term).collect())
                .collect()
        })
    }

    /// Same drift and diffusion, regardless of family tag and parameters.
    pub fn same_generator(&self, other: &DiffusionSpec) -> bool {
        self.drift == other.drift && self.diffusion == other.diffusion
    }
}

fn params<const N: usize>(kv: [(&str, Rational); N]) -> BTreeMap<String, Rational> {
    kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn require_positive(name: &str, v: &Rational) -> Result<()> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("must be positive, got {v}"),
        })
    }
}

fn parse_sigma_name(name: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter {
        name: name.to_string(),
        reason: "expected sigma_i_j with 1-based i, j".into(),
    };
    let rest = name.strip_prefix("sigma_").ok_or_else(bad)?;
    let (i, j) = rest.split_once('_').ok_or_else(bad)?;
    let i: usize = i.parse().map_err(|_| bad())?;
    let j: usize = j.parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i, j))
}

/// Parse `name=value,...` into a parameter map. Values must be integers or
/// `p/q` fractions.
pub fn parse_params(s: &str) -> Result<BTreeMap<String, Rational>> {
    let mut out = BTreeMap::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected name=value, got `{item}`")))?;
        out.insert(k.trim().to_string(), rational::parse_rational(v)?);
    }
    Ok(out)
}

/// Exact PSD test by symmetric elimination with diagonal pivoting.
pub fn is_positive_semidefinite(m: &[Vec<Rational>]) -> bool {
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut active: Vec<usize> = (0..a.len()).collect();
    while !active.is_empty() {
        if active.iter().any(|&i| a[i][i].is_negative()) {
            return false;
        }
        let pivot = active.iter().copied().find(|&i| a[i][i].is_positive());
        let Some(k) = pivot else {
            // All remaining diagonal entries vanish, so the block must be zero.
            return active
                .iter()
                .all(|&i| active.iter().all(|&j| a[i][j].is_zero()));
        };
        active.retain(|&i| i != k);
        let akk = a[k][k].clone();
        for &i in &active {
            let f = &a[i][k] / &akk;
            for &j in &active {
                let delta = &f * &a[k][j];
                a[i][j] -= delta;
            }
        }
    }
    true
}

/// `Σ σ_ij ∂_i∂_j f + Σ b_i ∂_i f`, computed exactly.
pub fn apply_generator(spec: &DiffusionSpec, f: &Polynomial) -> Result<Polynomial> {
    let p = spec.dimension();
    if f.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: f.dim(),
        });
    }
    let mut out = Polynomial::zero(p);
    let grads: Vec<Polynomial> = (0..p).map(|i| f.differentiate(i)).collect::<Result<_>>()?;
    for (i, gi) in grads.iter().enumerate() {
        if gi.is_zero() {
            continue;
        }
        out = &out + &(&spec.drift[i] * gi);
        for j in 0..p {
            let sij = &spec.diffusion[i][j];
            if sij.is_zero() {
                continue;
            }
            out = &out + &(sij * &gi.differentiate(j)?);
        }
    }
    Ok(out)
}

/// The generator applied to `x^root`, split as `Σ c_M x^M - R x^root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialAction {
    pub root: MultiIndex,
    pub exit_rate: Rational,
    pub targets: BTreeMap<MultiIndex, Rational>,
}

impl MonomialAction {
    /// `Σ c_M x^M - R x^root`; equals the generator applied to the root.
    pub fn reconstruct(&self) -> Polynomial {
        let mut p = Polynomial::monomial(self.root.clone(), -&self.exit_rate);
        for (m, c) in &self.targets {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn has_signed_weights(&self) -> bool {
        self.targets.values().any(Signed::is_negative)
    }

    /// Weight not passed on to any target, `R - Σ c_M`. Positive when the
    /// process can jump to the zero function.
    pub fn leaked_rate(&self) -> Rational {
        &self.exit_rate - self.targets.values().sum::<Rational>()
    }
}

pub fn monomial_action(spec: &DiffusionSpec, root: &MultiIndex) -> Result<MonomialAction> {
    if root.dim() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: root.dim(),
        });
    }
    if root.is_constant() {
        return Err(Error::DegenerateRoot);
    }
    let image = apply_generator(spec, &Polynomial::monomial(root.clone(), Rational::one()))?;
    let exit_rate = -image.coeff(root);
    let mut targets = BTreeMap::new();
    for (m, c) in image.terms() {
        if m == root {
            continue;
        }
        if m.degree() >= root.degree() {
            return Err(Error::DescentViolation {
                root: root.clone(),
                target: m.clone(),
            });
        }
        targets.insert(m.clone(), c.clone());
    }
    if !exit_rate.is_positive() {
        return Err(Error::NonErgodic {
            root: root.clone(),
            exit_rate,
        });
    }
    Ok(MonomialAction {
        root: root.clone(),
        exit_rate,
        targets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationEntry {
    pub root: MultiIndex,
    pub status: ValidationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Pass,
    /// Passes the structural checks but some target weight is negative, so
    /// the dual is a signed-measure process rather than a probabilistic one.
    PassSigned,
    DescentViolation,
    NonErgodic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub family: Family,
    pub max_degree: u32,
    pub entries: Vec<ValidationEntry>,
    pub note: &'static str,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| {
            matches!(
                e.status,
                ValidationStatus::Pass | ValidationStatus::PassSigned
            )
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationEntry> {
        self.entries.iter().filter(|e| {
            !matches!(
                e.status,
                ValidationStatus::Pass | ValidationStatus::PassSigned
            )
        })
    }
}

pub const VALIDATION_NOTE: &str =
    "structural checks only (strict degree descent, positive exit rate); \
whether the generator defines a Feller semigroup with a unique stationary law is not verified";

/// Run [`monomial_action`] on every monomial of degree `1..=max_degree`.
pub fn validate(spec: &DiffusionSpec, max_degree: u32) -> ValidationReport {
    let entries = MultiIndex::all_up_to(spec.dimension(), max_degree.max(1))
        .into_iter()
        .map(|root| {
            let (status, detail) = match monomial_action(spec, &root) {
                Ok(a) if a.has_signed_weights() => (ValidationStatus::PassSigned, None),
                Ok(_) => (ValidationStatus::Pass, None),
                Err(e @ Error::DescentViolation { .. }) => {
                    (ValidationStatus::DescentViolation, Some(e.to_string()))
                }
                Err(e) => (ValidationStatus::NonErgodic, Some(e.to_string())),
            };
            ValidationEntry {
                root,
                status,
                detail,
            }
        })
        .collect();
    ValidationReport {
        family: spec.family,
        max_degree,
        entries,
        note: VALIDATION_NOTE,
    }
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    family: Family,
    #[serde(default, with = "rational::serde_map")]
    params: BTreeMap<String, Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    drift: Option<Vec<Polynomial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diffusion: Option<Vec<Vec<Polynomial>>>,
}

impl Serialize for DiffusionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecJson {
            family: self.family,
            params: self.params.clone(),
            drift: Some(self.drift.clone()),
            diffusion: Some(self.diffusion.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiffusionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SpecJson::deserialize(d)?;
        if raw.family == Family::Custom {
            let drift = raw.drift.ok_or_else(|| D::Error::missing_field("drift"))?;
            let diffusion = raw
                .diffusion
                .ok_or_else(|| D::Error::missing_field("diffusion"))?;
            return DiffusionSpec::custom(drift, diffusion).map_err(D::Error::custom);
        }
        let spec = DiffusionSpec::from_params(raw.family, &raw.params).map_err(D::Error::custom)?;
        if raw.drift.is_some_and(|dr| dr != spec.drift)
            || raw.diffusion.is_some_and(|df| df != spec.diffusion)
        {
            return Err(D::Error::custom(format!(
                "drift/diffusion do not match the {} family with the given params",
                spec.family
            )));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn mono(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn param_strings() {
        let p = parse_params(" r = 2, lambda=1/2 ,").unwrap();
        assert_eq!(p["r"], int(2));
        assert_eq!(p["lambda"], ratio(1, 2));
        assert!(parse_params("a=0.5").is_err());
        assert!(parse_params("a").is_err());
        let spec = DiffusionSpec::from_param_string(Family::Beta, "a=2,b=3").unwrap();
        assert!(spec.same_generator(&DiffusionSpec::beta(int(2), int(3)).unwrap()));
    }

    fn targets(pairs: &[(&[u32], Rational)]) -> BTreeMap<MultiIndex, Rational> {
        pairs.iter().map(|(e, c)| (mono(e), c.clone())).collect()
    }

    fn upoly(terms: &[(u32, Rational)]) -> Polynomial {
        Polynomial::from_terms(
            1,
            terms
                .iter()
                .map(|(k, c)| (MultiIndex::univariate(*k), c.clone())),
        )
        .unwrap()
    }

    #[test]
    fn ou_generator_examples() {
        let ou = DiffusionSpec::ou();
        let x3 = upoly(&[(3, int(1))]);
        assert_eq!(
            apply_generator(&ou, &x3).unwrap(),
            upoly(&[(1, int(6)), (3, int(-3))])
        );
        let x2 = upoly(&[(2, int(1))]);
        assert_eq!(
            apply_generator(&ou, &x2).unwrap(),
            upoly(&[(0, int(2)), (2, int(-2))])
        );
        let x1 = upoly(&[(1, int(1))]);
        assert_eq!(apply_generator(&ou, &x1).unwrap(), upoly(&[(1, int(-1))]));
        assert!(apply_generator(&ou, &upoly(&[(0, int(5))]))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn beta_generator_on_square() {
        let spec = DiffusionSpec::beta(int(1), int(1)).unwrap();
        let x2 = upoly(&[(2, int(1))]);
        assert_eq!(
            apply_generator(&spec, &x2).unwrap(),
            upoly(&[(1, int(4)), (2, int(-6))])
        );
        let a = monomial_action(&spec, &mono(&[2])).unwrap();
        assert_eq!(a.exit_rate, int(6));
        assert_eq!(a.targets, targets(&[(&[1], int(4))]));
    }

    #[test]
    fn gamma_actions() {
        let g = DiffusionSpec::gamma(int(1), int(1)).unwrap();
        let a = monomial_action(&g, &mono(&[1])).unwrap();
        assert_eq!(a.exit_rate, int(1));
        assert_eq!(a.targets, targets(&[(&[0], int(1))]));

        let g = DiffusionSpec::gamma(int(2), int(3)).unwrap();
        let a = monomial_action(&g, &mono(&[2])).unwrap();
        assert_eq!(a.exit_rate, int(6));
        assert_eq!(a.targets, targets(&[(&[1], int(6))]));

        assert!(matches!(
            DiffusionSpec::gamma(int(0), int(1)),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(DiffusionSpec::gamma(int(1), ratio(-1, 2)).is_err());
    }

    #[test]
    fn beta_actions() {
        let (al, be) = (ratio(3, 2), ratio(5, 7));
        let spec = DiffusionSpec::beta(al.clone(), be.clone()).unwrap();
        let a = monomial_action(&spec, &mono(&[1])).unwrap();
        assert_eq!(a.exit_rate, &al + &be);
        assert_eq!(a.targets, targets(&[(&[0], al.clone())]));
        assert!(matches!(
            monomial_action(&spec, &mono(&[0])),
            Err(Error::DegenerateRoot)
        ));
        assert!(DiffusionSpec::beta(int(-1), int(1)).is_err());
    }

    #[test]
    fn multi_ou_actions() {
        let id = vec![vec![int(1), int(0)], vec![int(0), int(1)]];
        let spec = DiffusionSpec::multi_ou(&id).unwrap();
        let a = monomial_action(&spec, &mono(&[1, 1])).unwrap();
        assert_eq!(a.exit_rate, int(2));
        assert!(a.targets.is_empty());
        let a = monomial_action(&spec, &mono(&[2, 0])).unwrap();
        assert_eq!(a.exit_rate, int(2));
        assert_eq!(a.targets, targets(&[(&[0, 0], int(2))]));

        let half = vec![vec![int(1), ratio(1, 2)], vec![ratio(1, 2), int(1)]];
        let spec = DiffusionSpec::multi_ou(&half).unwrap();
        let a = monomial_action(&spec, &mono(&[1, 1])).unwrap();
        assert_eq!(a.exit_rate, int(2));
        assert_eq!(a.targets, targets(&[(&[0, 0], int(1))]));
    }

    #[test]
    fn multi_ou_rejects_bad_covariance() {
        let asym = vec![vec![int(1), int(1)], vec![int(0), int(1)]];
        assert!(matches!(
            DiffusionSpec::multi_ou(&asym),
            Err(Error::NotSymmetric)
        ));
        let indefinite = vec![vec![int(1), int(2)], vec![int(2), int(1)]];
        assert!(matches!(
            DiffusionSpec::multi_ou(&indefinite),
            Err(Error::NotPositiveSemidefinite)
        ));
        let singular = vec![vec![int(1), int(1)], vec![int(1), int(1)]];
        assert!(DiffusionSpec::multi_ou(&singular).is_ok());
        let zero_diag = vec![vec![int(0), int(1)], vec![int(1), int(1)]];
        assert!(DiffusionSpec::multi_ou(&zero_diag).is_err());
    }

    #[test]
    fn dirichlet_actions() {
        let spec = DiffusionSpec::dirichlet(&[int(1), int(1), int(1)]).unwrap();
        let a = monomial_action(&spec, &mono(&[1, 1])).unwrap();
        assert_eq!(a.exit_rate, int(8));
        assert_eq!(a.targets, targets(&[(&[1, 0], int(1)), (&[0, 1], int(1))]));
        // the cross term k_i k_j (0 - f) shows up as leaked rate
        assert_eq!(a.leaked_rate(), int(6));

        let k2 = DiffusionSpec::dirichlet(&[ratio(2, 3), int(4)]).unwrap();
        let b = DiffusionSpec::beta(ratio(2, 3), int(4)).unwrap();
        assert!(k2.same_generator(&b));
        assert!(DiffusionSpec::dirichlet(&[int(1)]).is_err());
        assert!(DiffusionSpec::dirichlet(&[int(1), int(0)]).is_err());
    }

    #[test]
    fn out_of_scope_generators_are_rejected() {
        // generalized Gamma operator f'' - ((α-1)/x - βx^{β-1}) f' with α = 1, β = 3
        let drift = vec![upoly(&[(2, int(3))])];
        let diffusion = vec![vec![upoly(&[(0, int(1))])]];
        let spec = DiffusionSpec::custom(drift, diffusion).unwrap();
        assert!(matches!(
            monomial_action(&spec, &mono(&[1])),
            Err(Error::DescentViolation { .. })
        ));

        let explosive = DiffusionSpec::custom(
            vec![upoly(&[(1, int(1))])],
            vec![vec![upoly(&[(0, int(1))])]],
        )
        .unwrap();
        let report = validate(&explosive, 3);
        assert!(!report.passed());
        assert_eq!(report.entries[0].root, mono(&[1]));
        assert_eq!(report.entries[0].status, ValidationStatus::NonErgodic);
    }

    #[test]
    fn validate_builtins() {
        assert!(validate(&DiffusionSpec::ou(), 10).passed());
        let d = DiffusionSpec::dirichlet(&[int(1), int(1), int(1)]).unwrap();
        let r = validate(&d, 6);
        assert!(r.passed());
        assert_eq!(r.entries.len(), 27);
    }

    #[test]
    fn signed_custom_weights_are_flagged() {
        // A f = f'' - x f' - ... with a negative constant diffusion contribution
        let spec = DiffusionSpec::custom(
            vec![upoly(&[(1, int(-1))])],
            vec![vec![upoly(&[(0, int(-1))])]],
        )
        .unwrap();
        let r = validate(&spec, 2);
        assert!(r.passed());
        assert_eq!(r.entries[1].status, ValidationStatus::PassSigned);
    }

    #[test]
    fn json_round_trip_and_param_only_form() {
        let spec = DiffusionSpec::beta(int(2), int(3)).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<DiffusionSpec>(&s).unwrap(), spec);
        let short: DiffusionSpec =
            serde_json::from_str(r#"{"family":"beta","params":{"alpha":"2","beta":"3"}}"#).unwrap();
        assert_eq!(short, spec);
        let mismatched =
            r#"{"family":"ou","params":{},"drift":[{"dim":1,"terms":[{"exp":[1],"coeff":"1"}]}]}"#;
        assert!(serde_json::from_str::<DiffusionSpec>(mismatched).is_err());
        let m: DiffusionSpec =
            serde_json::from_str(r#"{"family":"multi_ou","params":{"sigma_1_2":"1/2","dim":"2"}}"#)
                .unwrap();
        assert_eq!(m.covariance().unwrap()[0][1], ratio(1, 2));
        assert_eq!(m.covariance().unwrap()[1][1], int(1));
        let d: DiffusionSpec =
            serde_json::from_str(r#"{"family":"dirichlet","params":{"a1":"1","a2":"1","a3":"2"}}"#)
                .unwrap();
        assert_eq!(d.dimension(), 2);
        let c = DiffusionSpec::custom(
            vec![upoly(&[(1, int(-2))])],
            vec![vec![upoly(&[(0, int(1))])]],
        )
        .unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<DiffusionSpec>(&s).unwrap(), c);
    }

    fn arb_positive() -> impl Strategy<Value = Rational> {
        (1i64..40, 1i64..12).prop_map(|(n, d)| ratio(n, d))
    }

    fn builtins() -> impl Strategy<Value = DiffusionSpec> {
        prop_oneof![
            Just(DiffusionSpec::ou()),
            (arb_positive(), arb_positive()).prop_map(|(r, l)| DiffusionSpec::gamma(r, l).unwrap()),
            (arb_positive(), arb_positive()).prop_map(|(a, b)| DiffusionSpec::beta(a, b).unwrap()),
            prop::collection::vec(arb_positive(), 2..5)
                .prop_map(|a| DiffusionSpec::dirichlet(&a).unwrap()),
            (arb_positive(), arb_positive(), -3i64..=3).prop_map(|(a, b, c)| {
                // [[a+b, c/4], [c/4, a+b]] is diagonally dominant once a+b >= 1
                let d = &a + &b + int(1);
                let off = ratio(c, 4);
                DiffusionSpec::multi_ou(&[vec![d.clone(), off.clone()], vec![off, d]]).unwrap()
            }),
        ]
    }

    fn arb_poly(dim: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(
            (prop::collection::vec(0u32..4, dim), -9i64..9, 1i64..5),
            0..5,
        )
        .prop_map(move |ts| {
            Polynomial::from_terms(
                dim,
                ts.into_iter()
                    .map(|(e, n, d)| (MultiIndex::new(e), ratio(n, d))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn action_reconstructs_generator(spec in builtins(), seed in 0usize..1000) {
            let roots = MultiIndex::all_up_to(spec.dimension(), 8);
            let root = &roots[seed % roots.len()];
            let a = monomial_action(&spec, root).unwrap();
            let direct = apply_generator(&spec, &Polynomial::monomial(root.clone(), int(1))).unwrap();
            prop_assert_eq!(a.reconstruct(), direct);
            // negative covariances give signed weights; every other family is non-negative
            let signed_ok = spec.family() == Family::MultiOu
                && spec.params().values().any(|v| v.is_negative());
            prop_assert!(signed_ok || a.targets.values().all(|c| !c.is_negative()));
        }

        #[test]
        fn beta_exit_rate_is_kingman(a in arb_positive(), b in arb_positive(), k in 1u32..9) {
            let spec = DiffusionSpec::beta(a.clone(), b.clone()).unwrap();
            let act = monomial_action(&spec, &MultiIndex::univariate(k)).unwrap();
            let kq = int(k as i64);
            prop_assert_eq!(act.exit_rate, &kq * (&kq - int(1) + a + b));
        }

        #[test]
        fn dirichlet_two_matches_beta(a in arb_positive(), b in arb_positive(), k in 1u32..9) {
            let d = DiffusionSpec::dirichlet(&[a.clone(), b.clone()]).unwrap();
            let be = DiffusionSpec::beta(a, b).unwrap();
            let root = MultiIndex::univariate(k);
            prop_assert_eq!(monomial_action(&d, &root).unwrap(), monomial_action(&be, &root).unwrap());
        }

        #[test]
        fn generator_is_linear(
            spec in builtins().prop_filter("two-dimensional", |s| s.dimension() == 2),
            f in arb_poly(2), g in arb_poly(2), n in -5i64..5, d in 1i64..4,
        ) {
            let c = ratio(n, d);
            let lhs = apply_generator(&spec, &(&f + &g.scale(&c))).unwrap();
            let rhs = &apply_generator(&spec, &f).unwrap() + &apply_generator(&spec, &g).unwrap().scale(&c);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn constants_are_annihilated(spec in builtins(), n in -50i64..50) {
            let c = Polynomial::constant(spec.dimension(), int(n));
            prop_assert!(apply_generator(&spec, &c).unwrap().is_zero());
        }
    }
}
