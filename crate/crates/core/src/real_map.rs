//! Sparse real polynomials with exact rational coefficients, and maps ℝⁿ→ℝᵖ built from them.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::rational::{format_rational, rat, to_f64, Rational};

/// Exponent vector → coefficient. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealPolynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl RealPolynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Rational::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exponents: &[u32]) -> Rational {
        self.terms.get(exponents).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Adds `c·x^e`, dropping the monomial if it cancels.
    pub fn add_term(&mut self, exponents: Vec<u32>, c: Rational) {
        assert_eq!(exponents.len(), self.nvars, "exponent vector length");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponents);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, k: &Rational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, Rational::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(d, c * rat(e[i] as i64));
        }
        out
    }

    /// Sets the listed variables to zero.
    pub fn vanish_vars(&self, vars: &[usize]) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if vars.iter().all(|&v| e[v] == 0) {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        CompiledPoly::from_poly(self).eval(x)
    }

    /// Human-readable rendering with the given variable names.
    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        // Highest total degree first reads more naturally.
        let mut items: Vec<_> = self.terms.iter().collect();
        items.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (k, (e, c)) in items.into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { names[i].clone() } else { format!("{}^{}", names[i], p) })
                .collect();
            if mono.is_empty() {
                out.push_str(&format_rational(&abs));
            } else if abs.is_one() {
                out.push_str(&mono.join("*"));
            } else {
                let coeff = format_rational(&abs);
                let coeff = if coeff.contains('/') { format!("({coeff})") } else { coeff };
                out.push_str(&format!("{coeff}*{}", mono.join("*")));
            }
        }
        out
    }
}

/// Float-compiled polynomial used on the hot evaluation paths.
#[derive(Clone, Debug)]
pub(crate) struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub(crate) fn from_poly(p: &RealPolynomial) -> Self {
        let terms = p
            .terms
            .iter()
            .map(|(e, c)| {
                let factors = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| (i, k as i32))
                    .collect();
                (to_f64(c), factors)
            })
            .collect();
        Self { terms }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, factors)| factors.iter().fold(*c, |acc, &(i, k)| acc * x[i].powi(k)))
            .sum()
    }
}

/// A polynomial map ℝⁿ→ℝᵖ with symbolic partial derivatives.
#[derive(Clone, Debug)]
pub struct RealPolynomialMap {
    vars: Vec<String>,
    components: Vec<RealPolynomial>,
    partials: Vec<Vec<RealPolynomial>>,
    compiled: Vec<CompiledPoly>,
    compiled_partials: Vec<Vec<CompiledPoly>>,
}

impl PartialEq for RealPolynomialMap {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.components == other.components
    }
}

impl RealPolynomialMap {
    /// Builds the map; panics if a component has the wrong variable count.
    pub fn new(vars: Vec<String>, components: Vec<RealPolynomial>) -> Self {
        let n = vars.len();
        for c in &components {
            assert_eq!(c.nvars(), n, "component variable count");
        }
        let partials: Vec<Vec<RealPolynomial>> =
            components.iter().map(|c| (0..n).map(|i| c.partial(i)).collect()).collect();
        let compiled = components.iter().map(CompiledPoly::from_poly).collect();
        let compiled_partials = partials
            .iter()
            .map(|row| row.iter().map(CompiledPoly::from_poly).collect())
            .collect();
        Self { vars, components, partials, compiled, compiled_partials }
    }

    /// Default variable names `x1..xn`.
    pub fn with_default_names(components: Vec<RealPolynomial>) -> Self {
        let n = components.first().map(|c| c.nvars()).unwrap_or(0);
        Self::new((1..=n).map(|i| format!("x{i}")).collect(), components)
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn components(&self) -> &[RealPolynomial] {
        &self.components
    }

    /// Symbolic ∂f_i/∂x_j.
    pub fn partial(&self, i: usize, j: usize) -> &RealPolynomial {
        &self.partials[i][j]
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n());
        self.compiled.iter().map(|c| c.eval(x)).collect()
    }

    /// p×n Jacobian.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.n());
        let (p, n) = (self.p(), self.n());
        DMatrix::from_fn(p, n, |i, j| self.compiled_partials[i][j].eval(x))
    }

    /// Multiplies every component by `k`.
    pub fn scaled(&self, k: &Rational) -> Self {
        Self::new(self.vars.clone(), self.components.iter().map(|c| c.scale(k)).collect())
    }

    /// All p×p minors of the symbolic Jacobian, columns in lexicographic order.
    pub fn jacobian_minors(&self) -> Vec<RealPolynomial> {
        let (p, n) = (self.p(), self.n());
        combinations(n, p)
            .into_iter()
            .map(|cols| {
                let m: Vec<Vec<RealPolynomial>> = (0..p)
                    .map(|i| cols.iter().map(|&j| self.partials[i][j].clone()).collect())
                    .collect();
                poly_det(&m, n)
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let comps: Vec<String> = self.components.iter().map(|c| c.render(&self.vars)).collect();
        format!("({}) vars {}", comps.join(", "), self.vars.join(","))
    }
}

impl fmt::Display for RealPolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for RealPolynomialMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term {
            exponents: Vec<u32>,
            coeff: String,
        }
        let comps: Vec<Vec<Term>> = self
            .components
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(e, k)| Term { exponents: e.clone(), coeff: format_rational(k) })
                    .collect()
            })
            .collect();
        let mut st = s.serialize_struct("RealPolynomialMap", 4)?;
        st.serialize_field("n", &self.n())?;
        st.serialize_field("p", &self.p())?;
        st.serialize_field("vars", &self.vars)?;
        st.serialize_field("components", &comps)?;
        st.end()
    }
}

/// k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn poly_det(m: &[Vec<RealPolynomial>], nvars: usize) -> RealPolynomial {
    let k = m.len();
    match k {
        0 => RealPolynomial::constant(nvars, Rational::one()),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = RealPolynomial::zero(nvars);
            for col in 0..k {
                let minor: Vec<Vec<RealPolynomial>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| v.clone()).collect())
                    .collect();
                let term = m[0][col].mul(&poly_det(&minor, nvars));
                acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}
