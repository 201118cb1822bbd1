//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`MultiIndex`], whose ordering is
//! graded lexicographic. Iteration, display and serialization all run from
//! the leading term down, so output is deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Exponent vector of a monomial; the all-zero index is the constant `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Univariate `x^k`.
    pub fn univariate(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    /// Unit vector `e_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    /// Componentwise sum (monomial product).
    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Lower the exponent on `axis` by one, or `None` if it is already zero.
    pub fn lower(&self, axis: usize) -> Option<MultiIndex> {
        let k = *self.0.get(axis)?;
        if k == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[axis] -= 1;
        Some(MultiIndex(e))
    }

    /// All indices of dimension `dim` with total degree in `1..=max_degree`,
    /// in ascending graded-lexicographic order.
    pub fn all_up_to(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
        fn fill(prefix: &mut Vec<u32>, dim: usize, left: u32, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == dim {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in 0..=left {
                prefix.push(k);
                fill(prefix, dim, left - k, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        for d in 1..=max_degree {
            fill(&mut Vec::with_capacity(dim), dim, d, &mut out);
        }
        out.sort();
        out
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .map(|(&k, &x)| x.powi(k as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn var_name(dim: usize, axis: usize) -> String {
    if dim == 1 {
        "x".to_string()
    } else {
        format!("x{}", axis + 1)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return f.write_str("1");
        }
        let mut first = true;
        for (axis, &k) in self.0.iter().enumerate() {
            if k == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            f.write_str(&var_name(self.dim(), axis))?;
            if k > 1 {
                write!(f, "^{k}")?;
            }
        }
        Ok(())
    }
}

/// A polynomial in `dim` variables. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn monomial(exp: MultiIndex, c: Rational) -> Self {
        let mut p = Polynomial::zero(exp.dim());
        p.add_term(exp, c);
        p
    }

    /// The coordinate function `x_axis`.
    pub fn var(dim: usize, axis: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, axis), Rational::one())
    }

    /// Build from `(exponents, coefficient)` pairs, summing duplicates.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Rational)>,
    {
        let mut p = Polynomial::zero(dim);
        for (exp, c) in terms {
            if exp.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: exp.dim(),
                });
            }
            p.add_term(exp, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(MultiIndex::degree)
    }

    pub fn coeff(&self, exp: &MultiIndex) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&MultiIndex::zero(self.dim))
    }

    /// Terms from the leading monomial down.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter().rev()
    }

    pub fn add_term(&mut self, exp: MultiIndex, c: Rational) {
        debug_assert_eq!(exp.dim(), self.dim);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exp) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.plus(eb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    /// Exact partial derivative along `axis`.
    pub fn differentiate(&self, axis: usize) -> Result<Polynomial> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        let mut out = Polynomial::zero(self.dim);
        for (e, c) in &self.terms {
            let k = e.get(axis);
            if let Some(lowered) = e.lower(axis) {
                out.add_term(lowered, c * Rational::from_integer(k.into()));
            }
        }
        Ok(out)
    }

    /// Mixed partial `∂^order`, one entry per axis.
    pub fn partial(&self, order: &[u32]) -> Result<Polynomial> {
        if order.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: order.len(),
            });
        }
        let mut out = self.clone();
        for (axis, &n) in order.iter().enumerate() {
            for _ in 0..n {
                out = out.differentiate(axis)?;
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, point: &[Rational]) -> Result<Rational> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (&k, x) in e.exponents().iter().zip(point) {
                if k > 0 {
                    term *= num_traits::pow(x.clone(), k as usize);
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Floating-point evaluation; panics on a dimension mismatch.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dim, "point dimension");
        self.terms
            .iter()
            .map(|(e, c)| rational::to_f64(c) * e.eval_f64(point))
            .sum()
    }

    /// Sum of absolute coefficient values, a sup bound on `[0,1]^dim`.
    pub fn abs_coeff_sum(&self) -> Rational {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Embed into a higher-dimensional space, variable `i` mapping to
    /// `axes[i]`.
    pub fn embed(&self, dim: usize, axes: &[usize]) -> Polynomial {
        let mut out = Polynomial::zero(dim);
        for (e, c) in &self.terms {
            let mut ex = vec![0; dim];
            for (i, &k) in e.exponents().iter().enumerate() {
                ex[axes[i]] = k;
            }
            out.add_term(MultiIndex(ex), c.clone());
        }
        out
    }

    /// Compiled `(exponents, coefficient)` list for fast float evaluation.
    pub fn to_f64_terms(&self) -> Vec<(Vec<u32>, f64)> {
        self.terms
            .iter()
            .map(|(e, c)| (e.exponents().to_vec(), rational::to_f64(c)))
            .collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            if e.is_constant() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{e}")?;
            } else {
                write!(f, "{mag}*{e}")?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial dimensions must agree")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial dimensions must agree")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial dimensions must agree")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    #[serde(with = "rational::serde_str")]
    coeff: Rational,
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    dim: usize,
    terms: Vec<TermJson>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson {
            dim: self.dim,
            terms: self
                .terms()
                .map(|(e, c)| TermJson {
                    exp: e.exponents().to_vec(),
                    coeff: c.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolynomialJson::deserialize(d)?;
        if raw.dim == 0 {
            return Err(serde::de::Error::custom(
                "polynomial dimension must be positive",
            ));
        }
        Polynomial::from_terms(
            raw.dim,
            raw.terms
                .into_iter()
                .map(|t| (MultiIndex::new(t.exp), t.coeff)),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn x() -> Polynomial {
        Polynomial::var(1, 0)
    }

    fn xpow(k: u32, c: Rational) -> Polynomial {
        Polynomial::monomial(MultiIndex::univariate(k), c)
    }

    fn ou_cubic_solution() -> Polynomial {
        &xpow(3, ratio(-1, 3)) + &xpow(1, int(-2))
    }

    #[test]
    fn add_examples() {
        let p = xpow(3, int(1));
        assert!((&p + &(-&p)).is_zero());
        let a = &xpow(1, int(2)) + &xpow(2, int(-2));
        let b = &xpow(1, int(2)) + &xpow(2, int(-4));
        assert_eq!(&a + &b, &xpow(1, int(4)) + &xpow(2, int(-6)));
        assert_eq!(&a + &Polynomial::zero(1), a);
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&x() * &xpow(2, int(1)), xpow(3, int(1)));
        let one_minus_x = &Polynomial::constant(1, int(1)) - &x();
        assert_eq!(&one_minus_x * &x(), &x() - &xpow(2, int(1)));
        let s = &Polynomial::var(2, 0) + &Polynomial::var(2, 1);
        let sq = &s * &s;
        assert_eq!(sq.coeff(&MultiIndex::new(vec![2, 0])), int(1));
        assert_eq!(sq.coeff(&MultiIndex::new(vec![1, 1])), int(2));
        assert_eq!(sq.coeff(&MultiIndex::new(vec![0, 2])), int(1));
        assert_eq!(sq.len(), 3);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Polynomial::var(1, 0);
        let b = Polynomial::var(2, 0);
        assert!(matches!(
            a.try_add(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.try_mul(&b).is_err());
        assert!(a.evaluate(&[int(1), int(2)]).is_err());
    }

    #[test]
    fn differentiate_examples() {
        assert_eq!(xpow(3, int(1)).differentiate(0).unwrap(), xpow(2, int(3)));
        assert_eq!(
            ou_cubic_solution().differentiate(0).unwrap(),
            &xpow(2, int(-1)) + &Polynomial::constant(1, int(-2))
        );
        let x1sq = Polynomial::monomial(MultiIndex::new(vec![2, 0]), int(1));
        assert!(x1sq.differentiate(1).unwrap().is_zero());
        assert!(x1sq.differentiate(2).is_err());
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(
            ou_cubic_solution().evaluate(&[int(1)]).unwrap(),
            ratio(-7, 3)
        );
        let p = &ou_cubic_solution() + &Polynomial::constant(1, ratio(5, 7));
        assert_eq!(p.evaluate(&[int(0)]).unwrap(), ratio(5, 7));
        let x1x2 = Polynomial::monomial(MultiIndex::new(vec![1, 1]), int(1));
        assert_eq!(
            x1x2.evaluate(&[ratio(1, 2), ratio(1, 3)]).unwrap(),
            ratio(1, 6)
        );
    }

    #[test]
    fn display_leading_term_first() {
        assert_eq!(ou_cubic_solution().to_string(), "-1/3*x^3 - 2*x");
        let p = &(&xpow(2, int(-1)) + &xpow(0, ratio(1, 2))) + &x();
        assert_eq!(p.to_string(), "-x^2 + x + 1/2");
        let q = Polynomial::monomial(MultiIndex::new(vec![1, 2]), int(3));
        assert_eq!(q.to_string(), "3*x1*x2^2");
        assert_eq!(Polynomial::zero(2).to_string(), "0");
    }

    #[test]
    fn json_form() {
        let s = serde_json::to_string(&ou_cubic_solution()).unwrap();
        assert_eq!(
            s,
            r#"{"dim":1,"terms":[{"exp":[3],"coeff":"-1/3"},{"exp":[1],"coeff":"-2"}]}"#
        );
        let bad = r#"{"dim":2,"terms":[{"exp":[3],"coeff":"1"}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
        let zeros = r#"{"dim":1,"terms":[{"exp":[3],"coeff":"0"}]}"#;
        assert!(serde_json::from_str::<Polynomial>(zeros).unwrap().is_zero());
    }

    #[test]
    fn graded_lex_order() {
        let all = MultiIndex::all_up_to(2, 2);
        let shown: Vec<String> = all.iter().map(|m| m.to_string()).collect();
        assert_eq!(shown, ["x2", "x1", "x2^2", "x1*x2", "x1^2"]);
    }

    fn arb_poly(dim: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(
            (prop::collection::vec(0u32..4, dim), -20i64..20, 1i64..6),
            0..6,
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
        fn ring_laws(a in arb_poly(2), b in arb_poly(2), c in arb_poly(2)) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn product_rule(a in arb_poly(2), b in arb_poly(2), axis in 0usize..2) {
            let lhs = (&a * &b).differentiate(axis).unwrap();
            let rhs = &(&a.differentiate(axis).unwrap() * &b) + &(&a * &b.differentiate(axis).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn json_round_trip(a in arb_poly(3)) {
            let s = serde_json::to_string(&a).unwrap();
            prop_assert_eq!(serde_json::from_str::<Polynomial>(&s).unwrap(), a);
        }
    }
}
