//! Text grammar for polynomials in `x1..xn, y1..yn`.
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := power (['*'|'/'] power | power)*      juxtaposition multiplies
//! power   := primary ['^' integer]
//! primary := number | variable | '(' expr ')'
//! ```
//!
//! Numbers are decimal (`2`, `0.25`, `1e-3`) and exact; division is
//! allowed by nonzero constants only. Variables are `x<i>` or `y<i>`
//! (also written `x_<i>`), 1-based.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ridgepoly::mpoly::MPoly;
use crate::ridgepoly::multiindex::MultiIndex;

/// Largest exponent accepted after `^`.
pub const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Var { block: usize, index: usize },
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::PolySyntax {
        offset,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (off, ch) = bytes[i];
        match ch {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((off, Tok::Plus));
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push((off, Tok::Minus));
                i += 1;
            }
            '*' | '\u{00b7}' => {
                out.push((off, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((off, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((off, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((off, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((off, Tok::RParen));
                i += 1;
            }
            'x' | 'y' => {
                let block = usize::from(ch == 'y');
                i += 1;
                if i < bytes.len() && bytes[i].1 == '_' {
                    i += 1;
                }
                let start = i;
                while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                    i += 1;
                }
                if start == i {
                    return Err(syntax(off, format!("variable '{ch}' needs an index, as in {ch}1")));
                }
                let digits: String = bytes[start..i].iter().map(|(_, c)| c).collect();
                let index: usize = digits.parse().map_err(|_| syntax(off, "variable index out of range"))?;
                if index == 0 {
                    return Err(syntax(off, "variable indices start at 1"));
                }
                out.push((off, Tok::Var { block, index }));
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].1.is_ascii_digit() || bytes[i].1 == '.') {
                    i += 1;
                }
                // exponent part, only when followed by digits
                if i < bytes.len() && (bytes[i].1 == 'e' || bytes[i].1 == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j].1 == '+' || bytes[j].1 == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].1.is_ascii_digit() {
                        while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit: String = bytes[start..i].iter().map(|(_, c)| c).collect();
                out.push((
                    off,
                    Tok::Num(parse_decimal(&lit).ok_or_else(|| syntax(off, format!("bad number '{lit}'")))?),
                ));
            }
            other => return Err(syntax(off, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

/// Exact value of a decimal literal such as `12`, `0.375` or `2.5e-3`.
pub fn parse_decimal(lit: &str) -> Option<BigRational> {
    let (mantissa, exp) = match lit.find(['e', 'E']) {
        Some(p) => (&lit[..p], lit[p + 1..].parse::<i32>().ok()?),
        None => (lit, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    n: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn expr(&mut self) -> Result<MPoly> {
        let mut acc = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -self.term()?
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MPoly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let d = self.power()?;
                    let c = constant_value(&d).ok_or_else(|| syntax(at, "division is only allowed by a constant"))?;
                    if c.is_zero() {
                        return Err(syntax(at, "division by zero"));
                    }
                    acc = acc.scale(&c.recip());
                }
                Some(Tok::Num(_)) | Some(Tok::Var { .. }) | Some(Tok::LParen) => {
                    acc = &acc * &self.power()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<MPoly> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let at = self.offset();
            match self.peek().cloned() {
                Some(Tok::Num(e)) if e.is_integer() => {
                    self.pos += 1;
                    let e: u32 = e
                        .to_integer()
                        .try_into()
                        .ok()
                        .filter(|&e: &u32| e <= MAX_EXPONENT)
                        .ok_or_else(|| syntax(at, format!("exponent must be an integer in 0..={MAX_EXPONENT}")))?;
                    return Ok(base.pow(e));
                }
                _ => return Err(syntax(at, "exponent must be a nonnegative integer")),
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<MPoly> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(MPoly::constant(2 * self.n, c))
            }
            Some(Tok::Var { block, index }) => {
                self.pos += 1;
                if index > self.n {
                    return Err(syntax(at, format!("variable index {index} exceeds n = {}", self.n)));
                }
                Ok(MPoly::variable(2 * self.n, block * self.n + index - 1))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(syntax(self.offset(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => Err(syntax(at, "expected a number, variable or '('")),
            None => Err(syntax(at, "unexpected end of expression")),
        }
    }
}

fn constant_value(p: &MPoly) -> Option<BigRational> {
    if p.is_zero() {
        return Some(BigRational::zero());
    }
    let zero = MultiIndex::zeros(p.n_vars());
    (p.num_terms() == 1)
        .then(|| p.coefficient(&zero))
        .filter(|c| !c.is_zero())
}

/// Parses a polynomial in `2n` variables `x1..xn, y1..yn`.
pub fn parse_poly_in(text: &str, n: usize) -> Result<MPoly> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        n,
        end: text.len(),
    };
    let poly = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.offset(), "unexpected token"));
    }
    Ok(poly)
}

/// Parses a polynomial, taking `n` as the largest variable index used
/// (at least 2).
pub fn parse_poly(text: &str) -> Result<MPoly> {
    let n = lex(text)?
        .iter()
        .filter_map(|(_, t)| match t {
            Tok::Var { index, .. } => Some(*index),
            _ => None,
        })
        .max()
        .unwrap_or(1)
        .max(2);
    parse_poly_in(text, n)
}
