//! Text form of polynomial forms: `coef * dx[i,j,...]` terms joined by
//! `+`/`-`, coefficients as polynomials in `x1 … xn` with `p/q` rationals.
//!
//! ```text
//! (1 - 3/2*x1) * dx[1] - x2 * dx[2]
//! 1/4 * dx[]
//! 0
//! ```
//!
//! The zero form prints as `0`; the degree is then supplied by the reader.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exterior::{check_dim, MultiIndex};
use crate::form::PolyForm;
use crate::poly::{format_scalar, Monomial, Polynomial, Scalar};

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (alpha, p)) in self.components().enumerate() {
            let dx = format!(
                "dx[{}]",
                alpha
                    .entries()
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            if p.num_terms() == 1 {
                let (m, c) = p.terms().next().expect("one term");
                let negative = c.is_negative();
                match (i, negative) {
                    (0, true) => write!(f, "-")?,
                    (0, false) => {}
                    (_, true) => write!(f, " - ")?,
                    (_, false) => write!(f, " + ")?,
                }
                let single = Polynomial::monomial(p.n(), *m, c.abs());
                write!(f, "{single} * {dx}")?;
            } else {
                if i > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "({p}) * {dx}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Var(usize),
    Dx,
    Slash,
    Caret,
    Star,
    Plus,
    Minus,
    LParen,
    RParen,
    Comma,
    RBracket,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token::Int(s.parse().expect("digits")));
            }
            'x' => {
                i += 1;
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v: usize = s
                    .parse()
                    .map_err(|_| Error::parse(format!("variable without index at {start}")))?;
                if v == 0 {
                    return Err(Error::parse("variables are numbered from x1"));
                }
                out.push(Token::Var(v - 1));
            }
            'd' => {
                if chars[i..].iter().take(3).collect::<String>() == "dx[" {
                    out.push(Token::Dx);
                    i += 3;
                } else {
                    return Err(Error::parse(format!("unexpected 'd' at {i}")));
                }
            }
            '/' => {
                out.push(Token::Slash);
                i += 1
            }
            '^' => {
                out.push(Token::Caret);
                i += 1
            }
            '*' => {
                out.push(Token::Star);
                i += 1
            }
            '+' => {
                out.push(Token::Plus);
                i += 1
            }
            '-' => {
                out.push(Token::Minus);
                i += 1
            }
            '(' => {
                out.push(Token::LParen);
                i += 1
            }
            ')' => {
                out.push(Token::RParen);
                i += 1
            }
            ',' => {
                out.push(Token::Comma);
                i += 1
            }
            ']' => {
                out.push(Token::RBracket);
                i += 1
            }
            other => return Err(Error::parse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(Error::parse(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn rational(&mut self) -> Result<Scalar> {
        let p = match self.next() {
            Some(Token::Int(p)) => p,
            got => return Err(Error::parse(format!("expected number, found {got:?}"))),
        };
        if self.peek() == Some(&Token::Slash) {
            self.next();
            match self.next() {
                Some(Token::Int(q)) if !q.is_zero() => Ok(Scalar::new(p, q)),
                got => Err(Error::parse(format!("bad denominator {got:?}"))),
            }
        } else {
            Ok(Scalar::from_integer(p))
        }
    }

    /// factor ('*' factor)*, stopping before `* dx[`.
    fn monomial_term(&mut self) -> Result<Polynomial> {
        let mut coef = Scalar::one();
        let mut exps = vec![0u32; self.n];
        loop {
            match self.peek() {
                Some(Token::Int(_)) => coef *= self.rational()?,
                Some(Token::Var(v)) => {
                    let v = *v;
                    self.next();
                    if v >= self.n {
                        return Err(Error::parse(format!(
                            "variable x{} outside dimension {}",
                            v + 1,
                            self.n
                        )));
                    }
                    let mut e = 1u32;
                    if self.peek() == Some(&Token::Caret) {
                        self.next();
                        match self.next() {
                            Some(Token::Int(p)) => {
                                e = u32::try_from(&p)
                                    .ok()
                                    .filter(|e| *e < 256)
                                    .ok_or_else(|| Error::parse("exponent too large"))?
                            }
                            got => return Err(Error::parse(format!("bad exponent {got:?}"))),
                        }
                    }
                    exps[v] += e;
                }
                got => return Err(Error::parse(format!("expected factor, found {got:?}"))),
            }
            if self.peek() == Some(&Token::Star) && self.peek_at(1) != Some(&Token::Dx) {
                self.next();
            } else {
                break;
            }
        }
        Ok(Polynomial::monomial(self.n, Monomial::from_exponents(&exps), coef))
    }

    fn polynomial(&mut self) -> Result<Polynomial> {
        let mut sign = Scalar::one();
        if self.peek() == Some(&Token::Minus) {
            self.next();
            sign = -sign;
        }
        let mut acc = self.monomial_term()?.scale(&sign);
        loop {
            let s = match self.peek() {
                Some(Token::Plus) => Scalar::one(),
                Some(Token::Minus) => -Scalar::one(),
                _ => break,
            };
            self.next();
            acc = &acc + &self.monomial_term()?.scale(&s);
        }
        Ok(acc)
    }

    fn dx(&mut self) -> Result<MultiIndex> {
        self.expect(Token::Dx)?;
        let mut entries = Vec::new();
        if self.peek() != Some(&Token::RBracket) {
            loop {
                match self.next() {
                    Some(Token::Int(i)) => entries.push(usize::try_from(&i).map_err(|_| Error::parse("bad index"))?),
                    got => return Err(Error::parse(format!("expected index, found {got:?}"))),
                }
                if self.peek() == Some(&Token::Comma) {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RBracket)?;
        MultiIndex::new(&entries, self.n).map_err(|e| Error::parse(e.to_string()))
    }

    fn term(&mut self) -> Result<(Polynomial, MultiIndex)> {
        let coef = if self.peek() == Some(&Token::LParen) {
            self.next();
            let p = self.polynomial()?;
            self.expect(Token::RParen)?;
            p
        } else {
            self.monomial_term()?
        };
        self.expect(Token::Star)?;
        Ok((coef, self.dx()?))
    }
}

/// Parses the text form of a `k`-form on `ℝⁿ`.
pub fn parse_form(text: &str, n: usize, k: usize) -> Result<PolyForm> {
    check_dim(n)?;
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    let tokens = tokenize(text)?;
    if tokens == [Token::Int(BigInt::zero())] {
        return Ok(PolyForm::zero(n, k));
    }
    let mut p = Parser { tokens, pos: 0, n };
    let mut out = PolyForm::zero(n, k);
    let mut sign = Scalar::one();
    if p.peek() == Some(&Token::Minus) {
        p.next();
        sign = -sign;
    }
    loop {
        let (coef, alpha) = p.term()?;
        if alpha.len() != k {
            return Err(Error::parse(format!(
                "term dx{alpha} has degree {}, expected {k}",
                alpha.len()
            )));
        }
        out.add_component(alpha, coef.scale(&sign));
        match p.next() {
            None => break,
            Some(Token::Plus) => sign = Scalar::one(),
            Some(Token::Minus) => sign = -Scalar::one(),
            Some(t) => return Err(Error::parse(format!("unexpected token {t:?}"))),
        }
    }
    Ok(out)
}

/// Renders a scalar the way the form printer does.
pub fn scalar_text(s: &Scalar) -> String {
    format_scalar(s)
}
