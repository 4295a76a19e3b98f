//! Text form of polynomials, e.g. `"2*x1^2*x2 - 0.04"`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary ("*" unary)*
//! unary  := ("-" | "+") unary | power
//! power  := atom ("^" integer)?
//! atom   := number | variable | "(" expr ")"
//! ```

use std::fmt;

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};

/// `prefix1, prefix2, ..., prefix{n}`.
pub fn var_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn parse_polynomial<S: AsRef<str>>(input: &str, names: &[S]) -> Result<Polynomial> {
    let tokens = tokenize(input)?;
    let mut parser = Parser {
        input,
        tokens,
        pos: 0,
        names: names.iter().map(|s| s.as_ref()).collect(),
    };
    let p = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error(format!("unexpected token {:?}", parser.tokens[parser.pos])));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let err = |message: String| Error::Parse {
        input: input.to_string(),
        message,
    };
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(format!("bad number {text:?}")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(err(format!("unexpected character {other:?}"))),
        }
    }
    if out.is_empty() {
        return Err(err("empty expression".into()));
    }
    Ok(out)
}

struct Parser<'a> {
    input: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    names: Vec<&'a str>,
}

impl Parser<'_> {
    fn error(&self, message: String) -> Error {
        Error::Parse {
            input: self.input.to_string(),
            message,
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Token::Minus => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            match self.peek() {
                Some(&Token::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => {
                    self.pos += 1;
                    return Ok(base.pow(v as u32));
                }
                other => {
                    return Err(self.error(format!(
                        "exponent must be a small nonnegative integer, found {other:?}"
                    )))
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let n = self.nvars();
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(n, v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match self.names.iter().position(|&v| v == name) {
                    Some(i) => Ok(Polynomial::var(n, i)),
                    None => Err(self.error(format!(
                        "unknown variable {name:?} (expected one of {})",
                        self.names.join(", ")
                    ))),
                }
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("missing closing parenthesis".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(self.error(format!(
                "expected a number, variable or '(', found {other:?}"
            ))),
        }
    }
}

/// Renders a polynomial with the given variable names, highest grevlex term
/// first. The output parses back to an identical polynomial.
pub struct DisplayPoly<'a, S: AsRef<str>> {
    pub poly: &'a Polynomial,
    pub names: &'a [S],
}

impl<S: AsRef<str>> fmt::Display for DisplayPoly<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.poly.terms().rev().enumerate() {
            let neg = c < 0.0;
            let mag = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mono = render_monomial(m, self.names);
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}*{mono}")?;
            }
        }
        Ok(())
    }
}

fn render_monomial<S: AsRef<str>>(m: &Monomial, names: &[S]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.exponents().iter().enumerate() {
        let name = names[i].as_ref();
        match e {
            0 => {}
            1 => parts.push(name.to_string()),
            e => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}
