//! Recursive-descent parser for integer polynomials in `x` and one of
//! `y`/`z`. Accepts `+ - * ^ **`, parentheses, and implicit products such
//! as `2x` or `(x+1)(x-1)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

const MAX_EXPONENT: u32 = 64;

/// Nonzero terms keyed by `(deg_x, deg_second)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTerms {
    pub terms: BTreeMap<(u32, u32), BigInt>,
    pub second_var: Option<char>,
    /// Position of the first occurrence of the second variable.
    pub second_var_pos: usize,
}

type Poly = BTreeMap<(u32, u32), BigInt>;

fn constant(c: BigInt) -> Poly {
    let mut p = Poly::new();
    if !c.is_zero() {
        p.insert((0, 0), c);
    }
    p
}

fn add(mut a: Poly, b: Poly, sign: i32) -> Poly {
    for (k, v) in b {
        let e = a.entry(k).or_insert_with(BigInt::zero);
        if sign < 0 {
            *e -= v;
        } else {
            *e += v;
        }
    }
    a.retain(|_, v| !v.is_zero());
    a
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (&(i, j), u) in a {
        for (&(k, l), v) in b {
            *out.entry((i + k, j + l)).or_insert_with(BigInt::zero) += u * v;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    i: usize,
    second: Option<(char, usize)>,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|&(_, c)| c)
    }

    fn pos(&self) -> usize {
        self.chars.get(self.i).map(|&(p, _)| p).unwrap_or(self.src.len())
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = match self.peek() {
            Some('-') => {
                self.i += 1;
                add(Poly::new(), self.term()?, -1)
            }
            Some('+') => {
                self.i += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.i += 1;
            let t = self.term()?;
            acc = add(acc, t, if c == '-' { -1 } else { 1 });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some('*') if self.chars.get(self.i + 1).map(|c| c.1) != Some('*') => {
                    self.i += 1;
                    let f = self.power()?;
                    acc = mul(&acc, &f);
                }
                Some(c) if c.is_ascii_digit() || c.is_ascii_alphabetic() || c == '(' => {
                    let f = self.power()?;
                    acc = mul(&acc, &f);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        let is_pow = match self.peek() {
            Some('^') => {
                self.i += 1;
                true
            }
            Some('*') if self.chars.get(self.i + 1).map(|c| c.1) == Some('*') => {
                self.i += 2;
                true
            }
            _ => false,
        };
        if !is_pow {
            return Ok(base);
        }
        let start = self.pos();
        let digits = self.digits();
        if digits.is_empty() {
            return self.err("expected a nonnegative integer exponent");
        }
        let e: u32 = match digits.parse() {
            Ok(e) if e <= MAX_EXPONENT => e,
            _ => {
                return Err(Error::Parse { pos: start, msg: format!("exponent exceeds {MAX_EXPONENT}") })
            }
        };
        let mut acc = constant(BigInt::one());
        for _ in 0..e {
            acc = mul(&acc, &base);
        }
        Ok(acc)
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            s.push(c);
            self.i += 1;
        }
        s
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits();
                Ok(constant(d.parse::<BigInt>().expect("digits parse")))
            }
            Some('x') => {
                self.i += 1;
                Ok(BTreeMap::from([((1, 0), BigInt::one())]))
            }
            Some(c @ ('y' | 'z')) => {
                let pos = self.pos();
                match self.second {
                    Some((prev, _)) if prev != c => {
                        return self.err("use only one of y and z as the second variable")
                    }
                    None => self.second = Some((c, pos)),
                    _ => {}
                }
                self.i += 1;
                Ok(BTreeMap::from([((0, 1), BigInt::one())]))
            }
            Some('(') => {
                self.i += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return self.err("expected ')'");
                }
                self.i += 1;
                Ok(e)
            }
            Some(_) => self.err("unexpected character"),
            None => self.err("unexpected end of input"),
        }
    }
}

pub fn parse_bivariate(s: &str) -> Result<ParsedTerms> {
    let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err(Error::Parse { pos: 0, msg: "empty polynomial".into() });
    }
    let mut p = Parser { chars, i: 0, second: None, src: s };
    let terms = p.expr()?;
    if p.i < p.chars.len() {
        return p.err("unexpected trailing input");
    }
    Ok(ParsedTerms {
        terms,
        second_var: p.second.map(|s| s.0),
        second_var_pos: p.second.map(|s| s.1).unwrap_or(0),
    })
}
