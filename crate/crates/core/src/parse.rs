//! Text front-ends for mixed polynomials and real polynomial maps.
//!
//! Mixed syntax: `(1+i) z1 z1~ + (-2-i) z2^2 z2~^2 + i z3^2 z3~`, optional trailing
//! `vars=n`. `conj(zk)` is accepted as a synonym of `zk~`.
//!
//! Real-map syntax: `(x*y + z^2, x) vars x,y,z`.

use std::collections::HashMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::mixed_poly::{DiagonalMixedPolynomial, MixedTerm, PolyError};
use crate::rational::{parse_rational, ComplexRational, Rational};
use crate::real_map::{RealPolynomial, RealPolynomialMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("monomial mixes z{0} and z{1}; only diagonal terms are supported")]
    NonDiagonal(usize, usize),
    #[error(transparent)]
    Invalid(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {pos}: {kind}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn syntax(pos: usize, msg: impl Into<String>) -> Self {
        Self { pos, kind: ParseErrorKind::Syntax(msg.into()) }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

/// Byte-level cursor shared by both grammars.
struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::syntax(self.pos, format!("expected `{c}`")))
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn starts_with_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        rest.starts_with(word)
            && !rest[word.len()..].chars().next().is_some_and(|c| c.is_alphanumeric() || c == '_')
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        let len = self.rest().chars().take_while(|c| c.is_ascii_digit()).count();
        if len == 0 {
            return Err(ParseError::syntax(start, "expected integer"));
        }
        self.pos += len;
        self.src[start..self.pos].parse().map_err(|_| ParseError::syntax(start, "integer too large"))
    }

    fn at_number(&mut self) -> bool {
        matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.')
    }

    /// Unsigned `123`, `1.25`, or `3/4`.
    fn number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        let mut len = 0;
        let mut seen_dot = false;
        let mut seen_slash = false;
        for c in self.rest().chars() {
            match c {
                '0'..='9' => len += 1,
                '.' if !seen_dot && !seen_slash => {
                    seen_dot = true;
                    len += 1
                }
                '/' if !seen_slash && !seen_dot => {
                    // Only a fraction bar when a digit follows.
                    let after = &self.src[start + len + 1..];
                    if after.chars().next().is_some_and(|d| d.is_ascii_digit()) {
                        seen_slash = true;
                        len += 1
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        let text = &self.src[start..start + len];
        let value = parse_rational(text).ok_or_else(|| ParseError::syntax(start, format!("bad number `{text}`")))?;
        self.pos += len;
        Ok(value)
    }

    fn ident(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let mut chars = self.rest().char_indices();
        match chars.next() {
            Some((_, c)) if c.is_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let len = self
            .rest()
            .char_indices()
            .take_while(|(_, c)| c.is_alphanumeric() || *c == '_')
            .map(|(i, c)| i + c.len_utf8())
            .last()
            .unwrap_or(0);
        self.pos += len;
        Some((start, &self.src[start..start + len]))
    }
}

// ---------------------------------------------------------------------------
// mixed polynomials

pub fn parse_mixed(text: &str) -> Result<DiagonalMixedPolynomial> {
    MixedParser { cur: Cursor::new(text) }.poly()
}

struct MixedParser<'a> {
    cur: Cursor<'a>,
}

struct RawTerm {
    pos: usize,
    var: usize,
    coeff: ComplexRational,
    a: u32,
    b: u32,
}

impl MixedParser<'_> {
    fn poly(&mut self) -> Result<DiagonalMixedPolynomial> {
        let mut terms: Vec<RawTerm> = Vec::new();
        let mut declared_n = None;
        let mut negate = if self.cur.eat('-') {
            true
        } else {
            self.cur.eat('+');
            false
        };
        loop {
            let mut t = self.term()?;
            if negate {
                t.coeff = -&t.coeff;
            }
            terms.push(t);
            if self.cur.eat('+') {
                negate = false;
            } else if self.cur.eat('-') {
                negate = true;
            } else {
                break;
            }
        }
        self.cur.eat(';');
        self.cur.eat(',');
        if self.cur.starts_with_word("vars") {
            let at = self.cur.pos;
            self.cur.ident();
            self.cur.expect('=')?;
            let n = self.cur.integer()? as usize;
            declared_n = Some((at, n));
        }
        if !self.cur.at_end() {
            return Err(ParseError::syntax(self.cur.pos, "unexpected input"));
        }

        let mut seen: HashMap<usize, usize> = HashMap::new();
        for t in &terms {
            if seen.insert(t.var, t.pos).is_some() {
                return Err(ParseError { pos: t.pos, kind: PolyError::DuplicateVariable { var: t.var }.into() });
            }
            if t.coeff.is_zero() {
                return Err(ParseError { pos: t.pos, kind: PolyError::ZeroCoefficient { var: t.var }.into() });
            }
            if t.a + t.b == 0 {
                return Err(ParseError { pos: t.pos, kind: PolyError::ZeroDegree { var: t.var }.into() });
            }
        }
        let max_var = terms.iter().map(|t| t.var).max().unwrap_or(0);
        let n = match declared_n {
            Some((at, n)) if n < max_var => {
                return Err(ParseError { pos: at, kind: PolyError::VarOutOfRange { var: max_var, n }.into() })
            }
            Some((_, n)) => n,
            None => max_var,
        };
        let terms = terms.into_iter().map(|t| MixedTerm::new(t.var, t.coeff, t.a, t.b)).collect();
        DiagonalMixedPolynomial::new(n, terms).map_err(|e| ParseError { pos: 0, kind: e.into() })
    }

    fn term(&mut self) -> Result<RawTerm> {
        let pos = {
            self.cur.skip_ws();
            self.cur.pos
        };
        let coeff = self.coefficient()?.unwrap_or_else(ComplexRational::one);
        self.cur.eat('*');
        let mut var: Option<usize> = None;
        let (mut a, mut b) = (0u32, 0u32);
        loop {
            let fpos = self.cur.pos;
            let Some((v, conj, power)) = self.factor()? else { break };
            match var {
                None => var = Some(v),
                Some(w) if w != v => {
                    return Err(ParseError { pos: fpos, kind: ParseErrorKind::NonDiagonal(w, v) })
                }
                _ => {}
            }
            if conj {
                b += power;
            } else {
                a += power;
            }
            self.cur.eat('*');
        }
        let var = var.ok_or_else(|| ParseError::syntax(self.cur.pos, "expected factor `zk` or `zk~`"))?;
        if var == 0 {
            return Err(ParseError::syntax(pos, "variables are numbered from 1"));
        }
        Ok(RawTerm { pos, var, coeff, a, b })
    }

    /// `(complex)`, `r`, `ri`, `i`, or `r±si` (the last only directly before a factor).
    fn coefficient(&mut self) -> Result<Option<ComplexRational>> {
        if self.cur.eat('(') {
            let c = self.paren_complex()?;
            self.cur.expect(')')?;
            return Ok(Some(c));
        }
        if self.at_imag_unit() {
            self.cur.pos += 1;
            return Ok(Some(ComplexRational::i()));
        }
        if !self.cur.at_number() {
            return Ok(None);
        }
        let r = self.cur.number()?;
        if self.at_imag_unit() {
            self.cur.pos += 1;
            return Ok(Some(ComplexRational::new(Rational::zero(), r)));
        }
        // A bare real followed by ± must continue as `r±si`: a term cannot end without a factor.
        let save = self.cur.pos;
        let sign = if self.cur.eat('+') {
            Some(Rational::one())
        } else if self.cur.eat('-') {
            Some(-Rational::one())
        } else {
            None
        };
        if let Some(sign) = sign {
            let im = if self.cur.at_number() { self.cur.number()? } else { Rational::one() };
            if self.at_imag_unit() {
                self.cur.pos += 1;
                return Ok(Some(ComplexRational::new(r, sign * im)));
            }
            self.cur.pos = save;
        }
        Ok(Some(ComplexRational::new(r, Rational::zero())))
    }

    fn at_imag_unit(&mut self) -> bool {
        self.cur.peek() == Some('i')
            && !self.cur.rest()[1..].chars().next().is_some_and(|c| c.is_alphanumeric() || c == '_')
    }

    fn paren_complex(&mut self) -> Result<ComplexRational> {
        let mut acc = ComplexRational::zero();
        let mut first = true;
        loop {
            let start = self.cur.pos;
            let sign = if self.cur.eat('-') {
                -Rational::one()
            } else if self.cur.eat('+') || first {
                Rational::one()
            } else {
                break;
            };
            first = false;
            let mag = if self.cur.at_number() { Some(self.cur.number()?) } else { None };
            self.cur.eat('*');
            if self.at_imag_unit() {
                self.cur.pos += 1;
                let im = sign * mag.unwrap_or_else(Rational::one);
                acc = &acc + &ComplexRational::new(Rational::zero(), im);
            } else if let Some(m) = mag {
                acc = &acc + &ComplexRational::new(sign * m, Rational::zero());
            } else {
                return Err(ParseError::syntax(start, "expected number or `i` in coefficient"));
            }
            if self.cur.peek() == Some(')') {
                break;
            }
        }
        Ok(acc)
    }

    /// `zk`, `zk~`, `conj(zk)`, each with optional `^m`. Returns (k, conjugated, m).
    fn factor(&mut self) -> Result<Option<(usize, bool, u32)>> {
        let (var, conj) = if self.cur.starts_with_word("conj") {
            self.cur.ident();
            self.cur.expect('(')?;
            let v = self.zvar()?;
            self.cur.expect(')')?;
            (v, true)
        } else if self.cur.peek() == Some('z') {
            let v = self.zvar()?;
            let conj = self.cur.eat('~');
            (v, conj)
        } else {
            return Ok(None);
        };
        let power = if self.cur.eat('^') { self.cur.integer()? as u32 } else { 1 };
        Ok(Some((var, conj, power)))
    }

    fn zvar(&mut self) -> Result<usize> {
        self.cur.skip_ws();
        let at = self.cur.pos;
        if !self.cur.eat('z') {
            return Err(ParseError::syntax(at, "expected `z`"));
        }
        if !self.cur.rest().starts_with(|c: char| c.is_ascii_digit()) {
            return Err(ParseError::syntax(self.cur.pos, "expected variable index after `z`"));
        }
        Ok(self.cur.integer()? as usize)
    }
}

// ---------------------------------------------------------------------------
// real polynomial maps

pub fn parse_real_map(text: &str) -> Result<RealPolynomialMap> {
    let (body_end, vars) = split_vars(text)?;
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut p = RealParser { cur: Cursor::new(&text[..body_end]), vars: &index, n: vars.len() };
    p.cur.expect('(')?;
    let mut comps = vec![p.expr()?];
    while p.cur.eat(',') {
        comps.push(p.expr()?);
    }
    p.cur.expect(')')?;
    if !p.cur.at_end() {
        return Err(ParseError::syntax(p.cur.pos, "unexpected input before `vars`"));
    }
    Ok(RealPolynomialMap::new(vars, comps))
}

/// Finds the top-level `vars` keyword and parses the declared names.
fn split_vars(text: &str) -> Result<(usize, Vec<String>)> {
    let mut depth = 0i32;
    let bytes = text.as_bytes();
    let mut found = None;
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'v' if depth == 0
                && text[i..].starts_with("vars")
                && (i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_'))
                && !text[i + 4..].starts_with(|ch: char| ch.is_alphanumeric() || ch == '_') =>
            {
                found = Some(i);
            }
            _ => {}
        }
    }
    let at = found.ok_or_else(|| ParseError::syntax(text.len(), "expected `vars` declaration"))?;
    let mut cur = Cursor { src: text, pos: at + 4 };
    let mut vars = Vec::new();
    loop {
        let (p, name) = cur.ident().ok_or_else(|| ParseError::syntax(cur.pos, "expected variable name"))?;
        if vars.iter().any(|v: &String| v == name) {
            return Err(ParseError::syntax(p, format!("variable `{name}` declared twice")));
        }
        vars.push(name.to_string());
        if !cur.eat(',') {
            break;
        }
    }
    if !cur.at_end() {
        return Err(ParseError::syntax(cur.pos, "unexpected input after variable list"));
    }
    Ok((at, vars))
}

struct RealParser<'a> {
    cur: Cursor<'a>,
    vars: &'a HashMap<&'a str, usize>,
    n: usize,
}

impl RealParser<'_> {
    fn expr(&mut self) -> Result<RealPolynomial> {
        let mut acc = if self.cur.eat('-') {
            self.term()?.neg()
        } else {
            self.cur.eat('+');
            self.term()?
        };
        loop {
            if self.cur.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.cur.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RealPolynomial> {
        let mut acc = self.power()?;
        loop {
            if self.cur.eat('*') {
                acc = acc.mul(&self.power()?);
            } else if self.cur.peek() == Some('/') {
                let at = self.cur.pos;
                self.cur.pos += 1;
                let d = self.power()?;
                let c = constant_value(&d).filter(|c| !c.is_zero()).ok_or_else(|| {
                    ParseError::syntax(at, "division only by a nonzero constant")
                })?;
                acc = acc.scale(&(Rational::one() / c));
            } else if matches!(self.cur.peek(), Some(c) if c.is_alphanumeric() || c == '(' || c == '_' || c == '.') {
                // implicit multiplication, e.g. `2x` or `x y`
                acc = acc.mul(&self.power()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<RealPolynomial> {
        let base = self.atom()?;
        if self.cur.eat('^') {
            let k = self.cur.integer()?;
            let k = u32::try_from(k).map_err(|_| ParseError::syntax(self.cur.pos, "exponent too large"))?;
            Ok(base.pow(k))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<RealPolynomial> {
        if self.cur.eat('(') {
            let e = self.expr()?;
            self.cur.expect(')')?;
            return Ok(e);
        }
        if self.cur.at_number() {
            // Fractions in the map syntax go through `/` so that `1/2*x` parses as expected.
            self.cur.skip_ws();
            let start = self.cur.pos;
            let len = self.cur.rest().chars().take_while(|c| c.is_ascii_digit() || *c == '.').count();
            let text = &self.cur.src[start..start + len];
            let v = parse_rational(text).ok_or_else(|| ParseError::syntax(start, format!("bad number `{text}`")))?;
            self.cur.pos += len;
            return Ok(RealPolynomial::constant(self.n, v));
        }
        if let Some((at, name)) = self.cur.ident() {
            return match self.vars.get(name) {
                Some(&i) => Ok(RealPolynomial::var(self.n, i)),
                None => Err(ParseError { pos: at, kind: ParseErrorKind::UnknownVariable(name.to_string()) }),
            };
        }
        Err(ParseError::syntax(self.cur.pos, "expected number, variable, or `(`"))
    }
}

fn constant_value(p: &RealPolynomial) -> Option<Rational> {
    if p.is_zero() {
        return Some(Rational::zero());
    }
    if p.total_degree() == 0 {
        return Some(p.coeff(&vec![0; p.nvars()]));
    }
    None
}

/// Mixed input unless it carries a `vars` list (as opposed to a `vars=n` directive).
pub fn looks_like_real_map(text: &str) -> bool {
    let t = text.trim_end();
    match t.rfind("vars") {
        Some(i) => !t[i + 4..].trim_start().starts_with('='),
        None => false,
    }
}
