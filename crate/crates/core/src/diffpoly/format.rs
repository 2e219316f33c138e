//! Text, LaTeX and JSON encodings of differential polynomials.
//!
//! Text form: `2/3*u2'' + u3^(4)*u2^2 - c4_1*u3'`. Up to three primes mark
//! a derivative, `^(k)` marks higher ones, a bare `^e` is a power.

use std::fmt::{self, Write as _};

use num::{BigRational, One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Coeff, DiffPolynomial, Family, Monomial, VarId};
use crate::error::{Error, Result};

impl fmt::Display for DiffPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

/// LaTeX rendering: `\frac{2}{3} u_2'' + u_3^{(4)}`.
pub struct LatexDisplay<'a>(pub &'a DiffPolynomial);

fn latex_index(i: u32) -> String {
    if i < 10 {
        i.to_string()
    } else {
        format!("{{{i}}}")
    }
}

fn latex_var(v: VarId, out: &mut String) {
    match v.family() {
        Family::C => {
            let (m, j) = v.const_pair().unwrap();
            let _ = write!(out, "c_{{{m},{j}}}");
        }
        fam => {
            let letter = if fam == Family::U { 'u' } else { 'y' };
            let _ = write!(out, "{letter}_{}", latex_index(v.index()));
            match v.order() {
                0 => {}
                k @ 1..=3 => out.extend(std::iter::repeat_n('\'', k as usize)),
                k => {
                    let _ = write!(out, "^{{({k})}}");
                }
            }
        }
    }
}

fn latex_monomial(m: &Monomial) -> String {
    let mut out = String::new();
    for (i, &(v, e)) in m.factors().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let mut base = String::new();
        latex_var(v, &mut base);
        if e == 1 {
            out.push_str(&base);
        } else if v.order() == 0 || v.family() == Family::C {
            let _ = write!(out, "{base}^{{{e}}}");
        } else {
            let _ = write!(out, "{{{base}}}^{{{e}}}");
        }
    }
    out
}

fn latex_coeff(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

impl fmt::Display for LatexDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.0.terms().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.is_one() {
                f.write_str(&latex_coeff(&a))?;
            } else if a.is_one() {
                f.write_str(&latex_monomial(m))?;
            } else {
                write!(f, "{} {}", latex_coeff(&a), latex_monomial(m))?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| self.err("number out of range"))
    }

    fn big_number(&mut self) -> Result<num::BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).unwrap().parse().unwrap())
    }

    fn small(&mut self) -> Result<u32> {
        let n = self.number()?;
        u32::try_from(n).or_else(|_| self.err("number out of range"))
    }

    fn factor(&mut self, coeff: &mut Coeff, factors: &mut Vec<(VarId, u32)>) -> Result<()> {
        match self.peek() {
            Some(b'0'..=b'9') => {
                let num = self.big_number()?;
                let den = if self.eat(b'/') {
                    self.big_number()?
                } else {
                    num::BigInt::one()
                };
                if den.is_zero() {
                    return self.err("zero denominator");
                }
                *coeff *= BigRational::new(num, den);
            }
            Some(letter @ (b'u' | b'y' | b'c')) => {
                self.pos += 1;
                let index = self.small()?;
                let var = if letter == b'c' {
                    if !self.eat(b'_') {
                        return self.err("expected '_' in constant name");
                    }
                    VarId::c(index, self.small()?)
                } else {
                    if index < 1 {
                        return self.err("variable index must be positive");
                    }
                    let mut order = 0;
                    while self.src.get(self.pos) == Some(&b'\'') {
                        order += 1;
                        self.pos += 1;
                    }
                    if order == 0 && self.src.get(self.pos) == Some(&b'^') && self.src.get(self.pos + 1) == Some(&b'(') {
                        self.pos += 2;
                        order = self.small()?;
                        if !self.eat(b')') {
                            return self.err("expected ')'");
                        }
                    }
                    if letter == b'u' {
                        VarId::u(index, order)
                    } else {
                        VarId::y(index, order)
                    }
                };
                let exp = if self.eat(b'^') { self.small()? } else { 1 };
                factors.push((var, exp));
            }
            _ => return self.err("expected a number or a variable"),
        }
        Ok(())
    }

    fn term(&mut self) -> Result<(Monomial, Coeff)> {
        let mut coeff = Coeff::one();
        let mut factors = Vec::new();
        self.factor(&mut coeff, &mut factors)?;
        while self.eat(b'*') {
            self.factor(&mut coeff, &mut factors)?;
        }
        Ok((Monomial::from_factors(factors), coeff))
    }

    fn poly(&mut self) -> Result<DiffPolynomial> {
        let mut out = DiffPolynomial::zero();
        let mut negate = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        loop {
            let (m, c) = self.term()?;
            out.add_term(m, if negate { -c } else { c });
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    negate = false;
                }
                Some(b'-') => {
                    self.pos += 1;
                    negate = true;
                }
                None => return Ok(out),
                Some(_) => return self.err("unexpected character"),
            }
        }
    }
}

/// Parses the text form produced by `Display`.
pub fn parse_poly(s: &str) -> Result<DiffPolynomial> {
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
    };
    if p.peek().is_none() {
        return p.err("empty input");
    }
    if s.trim() == "0" {
        return Ok(DiffPolynomial::zero());
    }
    p.poly()
}

/// One term of the JSON encoding: `[family, index, order, exponent]` per
/// factor, with `[ "c", m, j, exponent ]` for the constant `c_{m,j}`.
#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: String,
    monomial: Vec<(String, u32, u32, u32)>,
}

impl Serialize for DiffPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermRepr> = self
            .terms()
            .map(|(m, c)| TermRepr {
                coeff: c.to_string(),
                monomial: m
                    .factors()
                    .iter()
                    .map(|&(v, e)| match v.family() {
                        Family::U => ("u".to_string(), v.index(), v.order(), e),
                        Family::Y => ("y".to_string(), v.index(), v.order(), e),
                        Family::C => {
                            let (cm, cj) = v.const_pair().unwrap();
                            ("c".to_string(), cm, cj, e)
                        }
                    })
                    .collect(),
            })
            .collect();
        terms.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiffPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<TermRepr>::deserialize(deserializer)?;
        let mut out = DiffPolynomial::zero();
        for t in terms {
            let coeff: BigRational = t
                .coeff
                .parse()
                .map_err(|_| D::Error::custom(format!("bad coefficient {:?}", t.coeff)))?;
            if coeff.is_zero() {
                return Err(D::Error::custom("zero coefficient"));
            }
            let mut factors = Vec::with_capacity(t.monomial.len());
            for (fam, a, b, e) in t.monomial {
                if e == 0 {
                    return Err(D::Error::custom("zero exponent"));
                }
                if a > 0x3fff || b > 0xffff {
                    return Err(D::Error::custom("variable out of range"));
                }
                let v = match fam.as_str() {
                    "u" => VarId::u(a, b),
                    "y" => VarId::y(a, b),
                    "c" => VarId::c(a, b),
                    other => return Err(D::Error::custom(format!("unknown family {other:?}"))),
                };
                factors.push((v, e));
            }
            out.add_term(Monomial::from_factors(factors), coeff);
        }
        Ok(out)
    }
}
