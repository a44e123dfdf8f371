//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Input grammar (variables are `x1..xn`, coefficients are integers or
//! fractions):
//!
//! ```text
//! poly   := term (('+'|'-') term)*
//! term   := coef '*' factor ('*' factor)* | factor ('*' factor)* | coef
//! factor := var ['^' posint]
//! var    := 'x' posint
//! coef   := rational literal: '3', '-1', '2/3'
//! ```
//!
//! Terms are kept in a lexicographically ordered map, so display, evaluation
//! and iteration order are all deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exponent vector of a single monomial; length equals the variable count.
pub type Exponents = Vec<u32>;

/// Largest exponent the parser accepts (the exact backend has no such limit,
/// but a runaway literal is always a typo at this scale).
pub const MAX_PARSED_EXPONENT: u32 = 4096;

/// Largest variable index the parser will infer a variable count from.
pub const MAX_PARSED_VARS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable x{index} out of range: polynomial has {nvars} variable(s)")]
    VarOutOfRange { index: usize, nvars: usize },
    #[error("exponent {0} exceeds the supported limit {MAX_PARSED_EXPONENT}")]
    ExponentTooLarge(u64),
    #[error("polynomial is identically zero; use the allow-zero constructor if intended")]
    Zero,
    #[error("variable count must be at least 1 (none given, none found to infer)")]
    NoVars,
    #[error("exponent vector length {got} does not match variable count {expected}")]
    BadExponentLength { got: usize, expected: usize },
}

/// Sparse polynomial in `nvars` variables over exact rationals.
#[derive(Debug, Clone)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Exponents, BigRational>,
    // f64 snapshot of the terms in lexicographic order, used by `eval`.
    eval_terms: Vec<(Exponents, f64)>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

impl MultiPoly {
    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// duplicates and dropping cancelled terms. Zero results are rejected.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponents, BigRational)>,
    {
        let p = Self::from_terms_allow_zero(nvars, terms)?;
        if p.is_zero() {
            return Err(PolyError::Zero);
        }
        Ok(p)
    }

    /// Same as [`from_terms`](Self::from_terms) but the zero polynomial is a
    /// legal value (derivatives of single-variable terms need it).
    pub fn from_terms_allow_zero<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponents, BigRational)>,
    {
        if nvars == 0 {
            return Err(PolyError::NoVars);
        }
        let mut map: BTreeMap<Exponents, BigRational> = BTreeMap::new();
        for (exps, coef) in terms {
            if exps.len() != nvars {
                return Err(PolyError::BadExponentLength {
                    got: exps.len(),
                    expected: nvars,
                });
            }
            let entry = map.entry(exps).or_insert_with(BigRational::zero);
            *entry += coef;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self::from_map(nvars, map))
    }

    fn from_map(nvars: usize, terms: BTreeMap<Exponents, BigRational>) -> Self {
        let eval_terms = terms
            .iter()
            .map(|(e, c)| (e.clone(), c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        MultiPoly {
            nvars,
            terms,
            eval_terms,
        }
    }

    /// Parses the input grammar; the zero polynomial (possible only through
    /// cancellation, e.g. `x1 - x1`) is rejected. `nvars = 0` infers the
    /// variable count from the highest index mentioned.
    pub fn parse(text: &str, nvars: usize) -> Result<Self, PolyError> {
        let p = Self::parse_allowing_zero(text, nvars)?;
        if p.is_zero() {
            return Err(PolyError::Zero);
        }
        Ok(p)
    }

    /// Parses the input grammar, accepting full cancellation.
    pub fn parse_allowing_zero(text: &str, nvars: usize) -> Result<Self, PolyError> {
        let nvars = if nvars == 0 {
            infer_nvars(text)?
        } else {
            nvars
        };
        Parser::new(text, nvars).parse()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in lexicographic order of exponent vectors.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Option<&BigRational> {
        self.terms.get(exps)
    }

    /// Exponent vectors of the support, lexicographic order.
    pub fn support(&self) -> Vec<Exponents> {
        self.terms.keys().cloned().collect()
    }

    pub fn constant_term(&self) -> Option<&BigRational> {
        self.terms.get(&vec![0u32; self.nvars])
    }

    /// `Some(exponents)` when the polynomial is a single monomial.
    pub fn as_monomial(&self) -> Option<(&Exponents, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Highest exponent of variable `axis` (0-based) over the support.
    pub fn degree_in(&self, axis: usize) -> u32 {
        self.terms.keys().map(|e| e[axis]).max().unwrap_or(0)
    }

    /// Highest total degree over the support.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Evaluates in double precision, summing monomials in lexicographic
    /// order so the result is bit-reproducible.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (exps, coef) in &self.eval_terms {
            let mut term = *coef;
            for (xi, &e) in x.iter().zip(exps.iter()) {
                if e > 0 {
                    term *= xi.powi(e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Gradient in double precision (forms each partial on the fly; for hot
    /// loops precompute [`partial_derivative`](Self::partial_derivative)).
    pub fn eval_gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nvars)
            .map(|axis| self.partial_derivative(axis).eval(x))
            .collect()
    }

    /// Formal partial derivative with respect to variable `axis` (0-based).
    /// The result may be the zero polynomial.
    pub fn partial_derivative(&self, axis: usize) -> MultiPoly {
        assert!(axis < self.nvars, "axis {} out of range", axis);
        let mut map = BTreeMap::new();
        for (exps, coef) in &self.terms {
            let e = exps[axis];
            if e == 0 {
                continue;
            }
            let mut d = exps.clone();
            d[axis] = e - 1;
            map.insert(d, coef * BigRational::from_integer(BigInt::from(e)));
        }
        Self::from_map(self.nvars, map)
    }

    /// Iterated derivative `∂^alpha`, one axis order at a time.
    pub fn derivative_multi(&self, alpha: &[u32]) -> MultiPoly {
        assert_eq!(alpha.len(), self.nvars);
        let mut p = self.clone();
        for (axis, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                p = p.partial_derivative(axis);
            }
        }
        p
    }

    /// Termwise sum; variable counts must match.
    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut map = self.terms.clone();
        for (exps, coef) in &other.terms {
            let entry = map.entry(exps.clone()).or_insert_with(BigRational::zero);
            *entry += coef;
        }
        map.retain(|_, c| !c.is_zero());
        Self::from_map(self.nvars, map)
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &BigRational) -> MultiPoly {
        if c.is_zero() {
            return Self::from_map(self.nvars, BTreeMap::new());
        }
        let map = self
            .terms
            .iter()
            .map(|(e, k)| (e.clone(), k * c))
            .collect();
        Self::from_map(self.nvars, map)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest exponent vector first reads like handwriting.
        for (i, (exps, coef)) in self.terms.iter().rev().enumerate() {
            let neg = coef.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let abs = coef.abs();
            let mut wrote_coef = false;
            if !abs.is_one() {
                write!(f, "{}", abs)?;
                wrote_coef = true;
            }
            let mut any_factor = false;
            for (axis, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if wrote_coef || any_factor {
                    write!(f, "*")?;
                }
                any_factor = true;
                write!(f, "x{}", axis + 1)?;
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
            }
            if !any_factor && !wrote_coef {
                // constant term with |coef| == 1
                write!(f, "1")?;
            }
        }
        Ok(())
    }
}

/// Scans for `x<digits>` occurrences and takes the largest index. Runs before
/// real parsing, so it only needs to agree with the grammar on well-formed
/// input; malformed text fails in the parser regardless of the count chosen.
fn infer_nvars(text: &str) -> Result<usize, PolyError> {
    let bytes = text.as_bytes();
    let mut max = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'x' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > start {
                if let Ok(ix) = std::str::from_utf8(&bytes[start..j]).unwrap().parse::<usize>() {
                    if ix > MAX_PARSED_VARS {
                        return Err(PolyError::VarOutOfRange {
                            index: ix,
                            nvars: MAX_PARSED_VARS,
                        });
                    }
                    max = max.max(ix);
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
    if max == 0 {
        return Err(PolyError::NoVars);
    }
    Ok(max)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, nvars: usize) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            nvars,
        }
    }

    fn err(&self, msg: impl Into<String>) -> PolyError {
        PolyError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<MultiPoly, PolyError> {
        let mut terms: Vec<(Exponents, BigRational)> = Vec::new();
        // Optional sign before the first term.
        let mut sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1
            }
            Some(b'+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            let term = self.parse_term(sign)?;
            terms.push(term);
            match self.peek() {
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    sign = 1;
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -1;
                }
                Some(c) => {
                    return Err(self.err(format!("expected '+', '-' or end, found {:?}", c as char)))
                }
            }
        }
        MultiPoly::from_terms_allow_zero(self.nvars, terms)
    }

    fn parse_term(&mut self, sign: i32) -> Result<(Exponents, BigRational), PolyError> {
        let mut coef = BigRational::from_integer(BigInt::from(sign));
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' => {
                coef *= self.parse_rational()?;
                match self.peek() {
                    Some(b'*') => {
                        self.pos += 1;
                    }
                    // bare rational: a constant term
                    _ => return Ok((vec![0u32; self.nvars], coef)),
                }
            }
            _ => {}
        }
        let mut exps = vec![0u32; self.nvars];
        self.parse_factor(&mut exps)?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            self.parse_factor(&mut exps)?;
        }
        Ok((exps, coef))
    }

    fn parse_factor(&mut self, exps: &mut [u32]) -> Result<(), PolyError> {
        match self.peek() {
            Some(b'x') => self.pos += 1,
            Some(c) => return Err(self.err(format!("expected variable, found {:?}", c as char))),
            None => return Err(self.err("expected variable, found end of input")),
        }
        let index = self.parse_posint("variable index")? as usize;
        if index == 0 || index > self.nvars {
            return Err(PolyError::VarOutOfRange {
                index,
                nvars: self.nvars,
            });
        }
        let mut e: u64 = 1;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            e = self.parse_posint("exponent")?;
            if e == 0 {
                return Err(self.err("exponent must be positive"));
            }
        }
        if e > MAX_PARSED_EXPONENT as u64 {
            return Err(PolyError::ExponentTooLarge(e));
        }
        let slot = &mut exps[index - 1];
        *slot = slot
            .checked_add(e as u32)
            .ok_or(PolyError::ExponentTooLarge(e))?;
        Ok(())
    }

    fn parse_posint(&mut self, what: &str) -> Result<u64, PolyError> {
        // No leading whitespace inside a number.
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {}", what)));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|_| self.err(format!("{} out of range", what)))
    }

    fn parse_rational(&mut self) -> Result<BigRational, PolyError> {
        self.skip_ws();
        let mut sign = BigInt::one();
        match self.bytes.get(self.pos) {
            Some(b'-') => {
                sign = -sign;
                self.pos += 1;
            }
            Some(b'+') => {
                self.pos += 1;
            }
            _ => {}
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected number"));
        }
        let numer: BigInt = std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .unwrap();
        let mut denom = BigInt::one();
        if self.bytes.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let dstart = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == dstart {
                return Err(self.err("expected denominator"));
            }
            denom = std::str::from_utf8(&self.bytes[dstart..self.pos])
                .unwrap()
                .parse()
                .unwrap();
            if denom.is_zero() {
                return Err(self.err("zero denominator"));
            }
        }
        Ok(BigRational::new(sign * numer, denom))
    }
}
