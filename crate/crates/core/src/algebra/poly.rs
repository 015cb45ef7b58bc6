//! Sparse commutative polynomials over phase-space variables and named
//! scalar parameters.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

/// A polynomial variable. Phase-space variables sort before parameters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Q(usize),
    P(usize),
    Sym(String),
}

impl Var {
    pub fn is_phase_space(&self) -> bool {
        !matches!(self, Var::Sym(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Q(m) => write!(f, "q{}", m + 1),
            Var::P(m) => write!(f, "p{}", m + 1),
            Var::Sym(s) => f.write_str(s),
        }
    }
}

/// Product of variable powers, kept sorted with no zero exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut merged: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in self.0.iter().chain(other.0.iter()) {
            *merged.entry(v.clone()).or_default() += e;
        }
        Monomial(merged.into_iter().collect())
    }

    pub fn phase_degree(&self) -> u32 {
        self.0
            .iter()
            .filter(|(v, _)| v.is_phase_space())
            .map(|(_, e)| e)
            .sum()
    }

    pub fn exponent(&self, var: &Var) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    fn without(&self, var: &Var, reduce_by: u32) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter_map(|(v, e)| {
                    if v == var {
                        (*e > reduce_by).then(|| (v.clone(), e - reduce_by))
                    } else {
                        Some((v.clone(), *e))
                    }
                })
                .collect(),
        )
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(v, e)| {
                if *e == 1 {
                    v.to_string()
                } else {
                    format!("{v}^{e}")
                }
            })
            .collect();
        f.write_str(&parts.join("·"))
    }
}

/// A polynomial with `f64` coefficients. Integer coefficients stay exact
/// under the ring operations used here.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), 1.0);
        p
    }

    pub fn q(mode: usize) -> Self {
        Self::var(Var::Q(mode))
    }

    pub fn p(mode: usize) -> Self {
        Self::var(Var::P(mode))
    }

    /// A named scalar parameter.
    pub fn sym(name: &str) -> Self {
        Self::var(Var::Sym(name.to_string()))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All coefficients below `tol` in magnitude.
    pub fn is_negligible(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.abs() <= tol)
    }

    /// Drops terms with coefficients of magnitude at most `tol`.
    pub fn chop(&self, tol: f64) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn phase_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(Monomial::phase_degree)
            .max()
            .unwrap_or(0)
    }

    /// True when no phase-space variable appears.
    pub fn is_scalar(&self) -> bool {
        self.phase_degree() == 0
    }

    /// The value of a constant polynomial, if it is one.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Monomial::one()).copied(),
            _ => None,
        }
    }

    pub fn scale(&self, c: f64) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.add_term(m.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn neg(&self) -> Poly {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, va) in &self.terms {
            for (mb, vb) in &other.terms {
                out.add_term(ma.mul(mb), va * vb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Coefficient polynomial (in the remaining variables) of `var^e`
    /// where `e` is exactly the given exponent.
    pub fn coefficient_of(&self, var: &Var, exponent: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            if m.exponent(var) == exponent {
                out.add_term(m.without(var, exponent), *v);
            }
        }
        out
    }

    /// Part of the polynomial free of phase-space variables.
    pub fn scalar_part(&self) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            if m.phase_degree() == 0 {
                out.add_term(m.clone(), *v);
            }
        }
        out
    }

    pub fn derivative(&self, var: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            let e = m.exponent(var);
            if e > 0 {
                out.add_term(m.without(var, 1), v * e as f64);
            }
        }
        out
    }

    /// Replaces every phase-space variable through `image`; parameters
    /// are left untouched.
    pub fn substitute<F>(&self, image: F) -> Poly
    where
        F: Fn(&Var) -> Poly,
    {
        let mut cache: BTreeMap<(Var, u32), Poly> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(*c);
            for (v, e) in m.factors() {
                if v.is_phase_space() {
                    let key = (v.clone(), *e);
                    let powered = cache.entry(key).or_insert_with(|| image(v).pow(*e)).clone();
                    term = term.mul(&powered);
                } else {
                    term = term.mul(&Poly::var(v.clone()).pow(*e));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Substitutes numeric values for named parameters.
    pub fn bind(&self, values: &BTreeMap<String, f64>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut coeff = *c;
            let mut kept = Vec::new();
            for (v, e) in m.factors() {
                match v {
                    Var::Sym(name) if values.contains_key(name) => {
                        coeff *= values[name].powi(*e as i32)
                    }
                    _ => kept.push((v.clone(), *e)),
                }
            }
            out.add_term(Monomial(kept), coeff);
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if first {
                if *c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            if m.factors().is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}·{m}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl From<f64> for Poly {
    fn from(c: f64) -> Self {
        Poly::constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_operations() {
        let q = Poly::q(0);
        let t = Poly::sym("T");
        let e = q.add(&t).pow(2);
        // (q + T)² = q² + 2qT + T²
        assert_eq!(e.coefficient_of(&Var::Q(0), 2), Poly::constant(1.0));
        assert_eq!(e.coefficient_of(&Var::Q(0), 1), t.scale(2.0));
        assert_eq!(e.scalar_part(), t.pow(2));
        assert!(e.sub(&e).is_zero());
        assert_eq!(e.phase_degree(), 2);
    }

    #[test]
    fn substitution_leaves_parameters() {
        let f = Poly::p(0).add(&Poly::sym("T").scale(3.0).mul(&Poly::q(0).pow(2)));
        let g = f.substitute(|v| match v {
            Var::Q(0) => Poly::q(0).add(&Poly::sym("Q")),
            other => Poly::var(other.clone()),
        });
        let expected = Poly::p(0).add(
            &Poly::sym("T")
                .scale(3.0)
                .mul(&Poly::q(0).add(&Poly::sym("Q")).pow(2)),
        );
        assert_eq!(g, expected);
    }

    #[test]
    fn derivative_and_binding() {
        let f = Poly::q(0).pow(3).mul(&Poly::sym("T"));
        assert_eq!(
            f.derivative(&Var::Q(0)),
            Poly::q(0).pow(2).mul(&Poly::sym("T")).scale(3.0)
        );
        let mut vals = BTreeMap::new();
        vals.insert("T".to_string(), 0.5);
        assert_eq!(f.bind(&vals), Poly::q(0).pow(3).scale(0.5));
        assert_eq!(Poly::sym("T").bind(&vals).as_constant(), Some(0.5));
    }

    #[test]
    fn display_is_readable() {
        let f = Poly::sym("Q")
            .mul(&Poly::sym("T"))
            .scale(-2.0)
            .add(&Poly::p(0));
        assert_eq!(f.to_string(), "p1 - 2·Q·T");
    }
}
