use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Variable of a bivariate polynomial: `X` stands for `u`, `Y` for `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Real bivariate polynomial `Σ c_ij X^i Y^j` with no sign restriction.
///
/// Terms are kept in a sorted map so evaluation order, and therefore every
/// floating-point result, is reproducible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BiPoly {
    terms: BTreeMap<(u32, u32), f64>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly::default()
    }

    /// Builds from `(i, j, c_ij)` triples; repeated exponents are summed, zeros dropped.
    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Self {
        let mut p = BiPoly::zero();
        for &(i, j, c) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: f64) {
        let e = self.terms.entry((i, j)).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.terms.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn coeff(&self, i: u32, j: u32) -> f64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), &c)| c * a.powi(i as i32) * b.powi(j as i32))
            .sum()
    }

    pub fn partial(&self, axis: Axis) -> BiPoly {
        let mut out = BiPoly::zero();
        for (&(i, j), &c) in &self.terms {
            match axis {
                Axis::X if i > 0 => out.add_term(i - 1, j, c * i as f64),
                Axis::Y if j > 0 => out.add_term(i, j - 1, c * j as f64),
                _ => {}
            }
        }
        out
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (i, j, c) in other.terms() {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for (i, j, c) in self.terms() {
            for (k, l, d) in other.terms() {
                out.add_term(i + k, j + l, c * d);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> BiPoly {
        let mut out = BiPoly::zero();
        for (i, j, c) in self.terms() {
            out.add_term(i, j, c * s);
        }
        out
    }

    /// The monomial `X` or `Y`.
    pub fn var(axis: Axis) -> BiPoly {
        match axis {
            Axis::X => BiPoly::from_terms(&[(1, 0, 1.0)]),
            Axis::Y => BiPoly::from_terms(&[(0, 1, 1.0)]),
        }
    }

    pub fn constant(c: f64) -> BiPoly {
        BiPoly::from_terms(&[(0, 0, c)])
    }

    /// Same monomials with coefficients replaced by their absolute values.
    pub fn abs_coeffs(&self) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|(&k, &c)| (k, c.abs())).collect(),
        }
    }

    /// Restriction to the diagonal `X = Y = x`, as a univariate coefficient list.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.degree() as usize + 1];
        for (i, j, c) in self.terms() {
            out[(i + j) as usize] += c;
        }
        out
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, j, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            match i {
                0 => {}
                1 => write!(f, "·X")?,
                _ => write!(f, "·X^{i}")?,
            }
            match j {
                0 => {}
                1 => write!(f, "·Y")?,
                _ => write!(f, "·Y^{j}")?,
            }
        }
        Ok(())
    }
}

/// Polynomial with nonnegative coefficients vanishing at the origin: the
/// admissible class for the mobility nonlinearities `p` and `q`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly2(BiPoly);

impl Poly2 {
    pub fn new(p: BiPoly) -> Result<Self> {
        if let Some((i, j, c)) = p.terms().find(|&(_, _, c)| !(c >= 0.0 && c.is_finite())) {
            return config_err(format!(
                "coefficient of X^{i}Y^{j} must be finite and nonnegative, got {c}"
            ));
        }
        if p.coeff(0, 0) != 0.0 {
            return config_err("polynomial must vanish at (0,0)");
        }
        Ok(Poly2(p))
    }

    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Result<Self> {
        Poly2::new(BiPoly::from_terms(terms))
    }

    pub fn zero() -> Self {
        Poly2(BiPoly::zero())
    }

    pub fn as_poly(&self) -> &BiPoly {
        &self.0
    }

    /// `[i, j, c]` triples, the JSON representation.
    pub fn to_triples(&self) -> Vec<(u32, u32, f64)> {
        self.0.terms().collect()
    }
}

impl std::ops::Deref for Poly2 {
    type Target = BiPoly;

    fn deref(&self) -> &BiPoly {
        &self.0
    }
}

impl Serialize for Poly2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_triples().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<(u32, u32, f64)>::deserialize(d)?;
        Poly2::from_terms(&triples).map_err(serde::de::Error::custom)
    }
}

/// Univariate polynomial with nonnegative coefficients and a double zero at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly1 {
    coeffs: Vec<f64>,
}

impl Poly1 {
    /// `coeffs[n]` multiplies `x^n`; requires `c₀ = c₁ = 0` and `c_n ≥ 0`.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return config_err("coefficients must be finite and nonnegative");
        }
        if coeffs.first().copied().unwrap_or(0.0) != 0.0
            || coeffs.get(1).copied().unwrap_or(0.0) != 0.0
        {
            return config_err("P(0) = P'(0) = 0 is required");
        }
        Ok(Poly1 { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `P(x)/x`, nondecreasing on `x > 0`.
    pub fn eval_over_x(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .skip(1)
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_partials() {
        let xy = BiPoly::from_terms(&[(1, 1, 1.0)]);
        assert_eq!(xy.eval(2.0, 3.0), 6.0);
        let x2y = BiPoly::from_terms(&[(2, 1, 1.0)]);
        assert_eq!(x2y.partial(Axis::X), BiPoly::from_terms(&[(1, 1, 2.0)]));
        let p = BiPoly::from_terms(&[(1, 0, 1.0), (0, 3, 1.0)]);
        assert_eq!(p.partial(Axis::Y), BiPoly::from_terms(&[(0, 2, 3.0)]));
        assert!(BiPoly::constant(4.0).partial(Axis::X).is_zero());
    }

    #[test]
    fn arithmetic() {
        let a = BiPoly::from_terms(&[(1, 0, 1.0), (0, 1, 2.0)]);
        let b = BiPoly::from_terms(&[(1, 0, 1.0), (0, 1, -2.0)]);
        assert_eq!(a.add(&b), BiPoly::from_terms(&[(1, 0, 2.0)]));
        assert_eq!(a.mul(&b), BiPoly::from_terms(&[(2, 0, 1.0), (0, 2, -4.0)]));
        assert_eq!(a.degree(), 1);
        assert_eq!(a.mul(&a).diagonal(), vec![0.0, 0.0, 9.0]);
        assert_eq!(b.abs_coeffs(), a);
    }

    #[test]
    fn poly2_validation() {
        assert!(Poly2::from_terms(&[(1, 0, -1.0)]).is_err());
        assert!(Poly2::from_terms(&[(0, 0, 1.0)]).is_err());
        assert!(Poly2::from_terms(&[(1, 2, 0.5)]).is_ok());
        let p: Poly2 = serde_json::from_str("[[1,0,1.0],[0,1,2.5]]").unwrap();
        assert_eq!(p.coeff(0, 1), 2.5);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[[0,1,2.5],[1,0,1.0]]");
        assert!(serde_json::from_str::<Poly2>("[[1,0,-1.0]]").is_err());
    }

    #[test]
    fn poly1_validation() {
        assert!(Poly1::new(vec![0.0, 1.0]).is_err());
        assert!(Poly1::new(vec![1.0]).is_err());
        assert!(Poly1::new(vec![0.0, 0.0, -1.0]).is_err());
        let p = Poly1::new(vec![0.0, 0.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.eval(2.0), 4.0 + 16.0);
        assert_eq!(p.eval_over_x(2.0), 2.0 + 8.0);
        assert!(Poly1::new(vec![]).unwrap().is_zero());
    }
}
