//! Diagonal mixed polynomials ψ(z) = Σ λ_j z_j^{a_j} z̄_j^{b_j} and their calculus.
//!
//! Coefficients are exact Gaussian rationals; floats only appear when a point
//! is plugged in. Real coordinates are ordered `(x_1, y_1, …, x_n, y_n)` with
//! `z_j = x_j + i y_j`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::binomial;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{rat, ComplexRational};
use crate::real_map::{RealPolynomial, RealPolynomialMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomial needs at least one variable")]
    NoVariables,
    #[error("variable z{var} appears in more than one term")]
    DuplicateVariable { var: usize },
    #[error("term in z{var} has a zero coefficient")]
    ZeroCoefficient { var: usize },
    #[error("term in z{var} has total degree 0")]
    ZeroDegree { var: usize },
    #[error("variable index z{var} outside 1..={n}")]
    VarOutOfRange { var: usize, n: usize },
}

/// One summand `λ z_j^a z̄_j^b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedTerm {
    /// 1-based variable index.
    pub var: usize,
    pub coeff: ComplexRational,
    pub a: u32,
    pub b: u32,
}

impl MixedTerm {
    pub fn new(var: usize, coeff: ComplexRational, a: u32, b: u32) -> Self {
        Self { var, coeff, a, b }
    }

    pub fn is_critical(&self) -> bool {
        self.a == self.b
    }

    pub fn degree(&self) -> u32 {
        self.a + self.b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDiagonal")]
pub struct DiagonalMixedPolynomial {
    n: usize,
    terms: Vec<MixedTerm>,
}

#[derive(Deserialize)]
struct RawDiagonal {
    n: usize,
    terms: Vec<MixedTerm>,
}

impl TryFrom<RawDiagonal> for DiagonalMixedPolynomial {
    type Error = PolyError;
    fn try_from(raw: RawDiagonal) -> Result<Self, PolyError> {
        Self::new(raw.n, raw.terms)
    }
}

impl DiagonalMixedPolynomial {
    /// Validates and sorts the terms by variable index.
    pub fn new(n: usize, mut terms: Vec<MixedTerm>) -> Result<Self, PolyError> {
        if n == 0 {
            return Err(PolyError::NoVariables);
        }
        terms.sort_by_key(|t| t.var);
        for (k, t) in terms.iter().enumerate() {
            if t.var == 0 || t.var > n {
                return Err(PolyError::VarOutOfRange { var: t.var, n });
            }
            if k > 0 && terms[k - 1].var == t.var {
                return Err(PolyError::DuplicateVariable { var: t.var });
            }
            if t.coeff.is_zero() {
                return Err(PolyError::ZeroCoefficient { var: t.var });
            }
            if t.a + t.b == 0 {
                return Err(PolyError::ZeroDegree { var: t.var });
            }
        }
        Ok(Self { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[MixedTerm] {
        &self.terms
    }

    /// The term in variable `var` (1-based), if present.
    pub fn term(&self, var: usize) -> Option<&MixedTerm> {
        self.terms.binary_search_by_key(&var, |t| t.var).ok().map(|k| &self.terms[k])
    }

    /// Variables without a term (coefficient-0 directions).
    pub fn absent_vars(&self) -> Vec<usize> {
        (1..=self.n).filter(|&j| self.term(j).is_none()).collect()
    }

    /// ψ with every λ_j, a_j, b_j replaced by λ̄_j, b_j, a_j.
    pub fn conjugate(&self) -> Self {
        let terms = self.terms.iter().map(|t| MixedTerm::new(t.var, t.coeff.conj(), t.b, t.a)).collect();
        Self { n: self.n, terms }
    }

    /// Multiplies every coefficient by one common constant.
    pub fn rotated(&self, c: &ComplexRational) -> Self {
        let terms = self.terms.iter().map(|t| MixedTerm::new(t.var, &t.coeff * c, t.a, t.b)).collect();
        Self { n: self.n, terms }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        eval_mixed(self, z)
    }

    /// Canonical text form accepted by [`crate::parse::parse_mixed`].
    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let mut s = format!("({})", t.coeff);
                let j = t.var;
                match t.a {
                    0 => {}
                    1 => s.push_str(&format!(" z{j}")),
                    a => s.push_str(&format!(" z{j}^{a}")),
                }
                match t.b {
                    0 => {}
                    1 => s.push_str(&format!(" z{j}~")),
                    b => s.push_str(&format!(" z{j}~^{b}")),
                }
                s
            })
            .collect();
        let max_var = self.terms.last().map(|t| t.var).unwrap_or(0);
        let body = parts.join(" + ");
        if max_var != self.n {
            format!("{body} vars={}", self.n).trim_start().to_string()
        } else {
            body
        }
    }
}

impl fmt::Display for DiagonalMixedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Packs `(x_1, y_1, …)` into complex coordinates.
pub fn complex_from_real(x: &[f64]) -> Vec<Complex64> {
    assert!(x.len() % 2 == 0, "real point must have even length");
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

pub fn real_from_complex(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// z^a z̄^b with the convention z⁰ = z̄⁰ = 1 (also at z = 0).
fn monomial(z: Complex64, a: u32, b: u32) -> Complex64 {
    z.powu(a) * z.conj().powu(b)
}

pub fn eval_mixed(psi: &DiagonalMixedPolynomial, z: &[Complex64]) -> Complex64 {
    assert_eq!(z.len(), psi.n, "point dimension");
    psi.terms
        .iter()
        .map(|t| t.coeff.to_complex64() * monomial(z[t.var - 1], t.a, t.b))
        .sum()
}

/// Wirtinger derivatives (∂ψ/∂z_j, ∂ψ/∂z̄_j) for j = 1..n.
pub fn wirtinger(psi: &DiagonalMixedPolynomial, z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    assert_eq!(z.len(), psi.n, "point dimension");
    let mut dz = vec![Complex64::zero(); psi.n];
    let mut dzbar = vec![Complex64::zero(); psi.n];
    for t in &psi.terms {
        let k = t.var - 1;
        let lambda = t.coeff.to_complex64();
        if t.a > 0 {
            dz[k] = lambda * f64::from(t.a) * monomial(z[k], t.a - 1, t.b);
        }
        if t.b > 0 {
            dzbar[k] = lambda * f64::from(t.b) * monomial(z[k], t.a, t.b - 1);
        }
    }
    (dz, dzbar)
}

/// 2×2n real Jacobian with rows ∇Re ψ, ∇Im ψ in `(x_1, y_1, …, x_n, y_n)`.
pub fn real_jacobian(psi: &DiagonalMixedPolynomial, z: &[Complex64]) -> DMatrix<f64> {
    let (dz, dzbar) = wirtinger(psi, z);
    let i = Complex64::i();
    let mut m = DMatrix::zeros(2, 2 * psi.n);
    for k in 0..psi.n {
        let dx = dz[k] + dzbar[k];
        let dy = i * (dz[k] - dzbar[k]);
        m[(0, 2 * k)] = dx.re;
        m[(1, 2 * k)] = dx.im;
        m[(0, 2 * k + 1)] = dy.re;
        m[(1, 2 * k + 1)] = dy.im;
    }
    m
}

/// Exact expansion of (Re ψ, Im ψ) as a real polynomial map ℝ²ⁿ→ℝ².
pub fn to_real_map(psi: &DiagonalMixedPolynomial) -> RealPolynomialMap {
    let nv = 2 * psi.n;
    let mut re = RealPolynomial::zero(nv);
    let mut im = RealPolynomial::zero(nv);
    for t in &psi.terms {
        let (xi, yi) = (2 * (t.var - 1), 2 * (t.var - 1) + 1);
        // (x+iy)^a (x−iy)^b = Σ_{k,l} C(a,k) C(b,l) x^{a+b−k−l} y^{k+l} i^{k+l} (−1)^l
        for k in 0..=t.a {
            for l in 0..=t.b {
                let c = binomial(t.a as i64, k as i64) * binomial(t.b as i64, l as i64);
                let sign = if l % 2 == 0 { 1 } else { -1 };
                let unit = ComplexRational::i_pow(k + l).scale(&rat(c * sign));
                let w = &unit * &t.coeff;
                let mut e = vec![0u32; nv];
                e[xi] = t.a + t.b - k - l;
                e[yi] = k + l;
                re.add_term(e.clone(), w.re.clone());
                im.add_term(e, w.im);
            }
        }
    }
    let names = (1..=psi.n).flat_map(|j| [format!("x{j}"), format!("y{j}")]).collect();
    RealPolynomialMap::new(names, vec![re, im])
}
