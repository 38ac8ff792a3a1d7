//! Integer polynomials in one variable and binary forms, with parsing,
//! canonical printing, discriminants and factorization over the rationals.

mod factor;
mod parse;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use factor::{factor_rational, RationalFactorization};
pub use parse::parse_bivariate;

/// Polynomial with integer coefficients, stored low to high without
/// trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        IntPoly::from_i64(&[0, 1])
    }

    /// Parses text such as `x^3 + 2` or `(x - 1)*(x + 1)`.
    pub fn parse(s: &str) -> Result<Self> {
        let terms = parse_bivariate(s)?;
        if terms.second_var.is_some() {
            return Err(Error::Parse {
                pos: terms.second_var_pos,
                msg: "a univariate polynomial may only use the variable x".into(),
            });
        }
        let deg = terms.terms.keys().map(|&(i, _)| i).max().unwrap_or(0) as usize;
        let mut c = vec![BigInt::zero(); deg + 1];
        for (&(i, _), v) in &terms.terms {
            c[i as usize] += v;
        }
        Ok(IntPoly::new(c))
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    /// Nonnegative gcd of the coefficients.
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// `self / content`, normalized to a positive leading coefficient.
    pub fn primitive_part(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.lead().is_negative() {
            c = -c;
        }
        IntPoly::new(self.coeffs.iter().map(|a| a / &c).collect())
    }

    pub fn derivative(&self) -> Self {
        IntPoly::new(
            self.coeffs.iter().enumerate().skip(1).map(|(i, a)| a * BigInt::from(i)).collect(),
        )
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, a| acc * x + a)
    }

    /// Exact evaluation in `i128`, `None` on overflow.
    pub fn eval_i128(&self, x: i128) -> Option<i128> {
        let mut acc: i128 = 0;
        for a in self.coeffs.iter().rev() {
            acc = acc.checked_mul(x)?.checked_add(a.to_i128()?)?;
        }
        Some(acc)
    }

    /// Coefficients as `i128`, when they fit.
    pub fn to_i128_coeffs(&self) -> Option<Vec<i128>> {
        self.coeffs.iter().map(|c| c.to_i128()).collect()
    }

    pub fn neg(&self) -> Self {
        IntPoly::new(self.coeffs.iter().map(|a| -a).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return IntPoly::zero();
        }
        let mut c = vec![BigInt::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        IntPoly::new(c)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(IntPoly::from_i64(&[1]), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        IntPoly::new(self.coeffs.iter().map(|a| a * k).collect())
    }

    /// Exact quotient in `Z[x]`, `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        let dd = d.degree()?;
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        let n = self.degree()?;
        if n < dd {
            return None;
        }
        let lead = d.lead();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); n - dd + 1];
        for k in (0..q.len()).rev() {
            let (quo, rem) = r[k + dd].div_rem(&lead);
            if !rem.is_zero() {
                return None;
            }
            for (j, b) in d.coeffs.iter().enumerate() {
                r[k + j] -= &quo * b;
            }
            q[k] = quo;
        }
        r.iter().all(|c| c.is_zero()).then(|| IntPoly::new(q))
    }

    /// Discriminant `(-1)^(d(d-1)/2) Res(P, P') / lead(P)`; degree must be
    /// at least 1.
    pub fn discriminant(&self) -> Result<BigInt> {
        match self.degree() {
            None | Some(0) => Err(Error::domain("discriminant needs degree >= 1")),
            Some(_) => Ok(discriminant_of(&self.coeffs)),
        }
    }

    /// Square-free in `Q[x]`: nonzero and no repeated factor.
    pub fn is_squarefree(&self) -> bool {
        match self.degree() {
            None => false,
            Some(0) => true,
            Some(_) => !discriminant_of(&self.coeffs).is_zero(),
        }
    }
}

/// Discriminant of the polynomial with the given low-to-high coefficients,
/// whose top coefficient must be nonzero.
fn discriminant_of(c: &[BigInt]) -> BigInt {
    let d = c.len() - 1;
    let deriv: Vec<BigInt> = c.iter().enumerate().skip(1).map(|(i, a)| a * BigInt::from(i)).collect();
    let res = resultant(c, &deriv);
    let sign = if (d * (d - 1) / 2) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    sign * res / &c[d]
}

/// Resultant via the Sylvester matrix and fraction-free elimination.
fn resultant(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let (m, n) = (a.len() - 1, b.len() - 1);
    let size = m + n;
    if size == 0 {
        return BigInt::one();
    }
    let mut mat = vec![vec![BigInt::zero(); size]; size];
    for i in 0..n {
        for (j, coef) in a.iter().rev().enumerate() {
            mat[i][i + j] = coef.clone();
        }
    }
    for i in 0..m {
        for (j, coef) in b.iter().rev().enumerate() {
            mat[n + i][i + j] = coef.clone();
        }
    }
    bareiss_det(mat)
}

fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    first: bool,
    c: &BigInt,
    monomial: &str,
) -> fmt::Result {
    let mag = c.abs();
    if first {
        if c.is_negative() {
            write!(f, "-")?;
        }
    } else if c.is_negative() {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    if monomial.is_empty() {
        write!(f, "{mag}")
    } else if mag.is_one() {
        write!(f, "{monomial}")
    } else {
        write!(f, "{mag}*{monomial}")
    }
}

fn power(var: &str, e: usize) -> String {
    match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{e}"),
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            write_term(f, first, c, &power("x", i))?;
            first = false;
        }
        Ok(())
    }
}

/// Binary form `F(x, z) = sum_i a_i x^i z^(d-i)` of a fixed degree `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinForm {
    /// `coeffs[i]` multiplies `x^i z^(d-i)`; length `d + 1`.
    coeffs: Vec<BigInt>,
}

impl BinForm {
    /// Form of degree `coeffs.len() - 1`; at least one coefficient must be
    /// nonzero.
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.iter().all(|c| c.is_zero()) {
            return Err(Error::domain("the zero form has no degree"));
        }
        Ok(BinForm { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        BinForm::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// Parses a homogeneous expression in `x` and `z` (or `x` and `y`).
    pub fn parse(s: &str) -> Result<Self> {
        let terms = parse_bivariate(s)?;
        let mut degs = terms.terms.keys().map(|&(i, j)| i + j);
        let d = degs.next().ok_or(Error::Parse { pos: 0, msg: "the zero form has no degree".into() })?;
        if degs.any(|e| e != d) {
            return Err(Error::Parse { pos: 0, msg: "form is not homogeneous".into() });
        }
        let mut c = vec![BigInt::zero(); d as usize + 1];
        for (&(i, _), v) in &terms.terms {
            c[i as usize] += v;
        }
        BinForm::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// `F(t, 1)`.
    pub fn dehomogenize_x(&self) -> IntPoly {
        IntPoly::new(self.coeffs.clone())
    }

    /// `F(1, t)`.
    pub fn dehomogenize_z(&self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().rev().cloned().collect())
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn eval(&self, x: &BigInt, z: &BigInt) -> BigInt {
        let d = self.degree();
        let mut xp = vec![BigInt::one(); d + 1];
        let mut zp = vec![BigInt::one(); d + 1];
        for i in 1..=d {
            xp[i] = &xp[i - 1] * x;
            zp[i] = &zp[i - 1] * z;
        }
        self.coeffs.iter().enumerate().map(|(i, a)| a * &xp[i] * &zp[d - i]).sum()
    }

    /// Exact evaluation in `i128`, `None` on overflow.
    pub fn eval_i128(&self, x: i128, z: i128) -> Option<i128> {
        // Horner in x; the coefficient of x^i carries z^(d-i)
        let mut acc: i128 = 0;
        let mut zp: i128 = 1;
        for (k, a) in self.coeffs.iter().rev().enumerate() {
            if k > 0 {
                zp = zp.checked_mul(z)?;
            }
            acc = acc.checked_mul(x)?.checked_add(a.to_i128()?.checked_mul(zp)?)?;
        }
        Some(acc)
    }

    /// Discriminant, invariant under `z -> z + k x`, computed in a chart
    /// where the leading coefficient is nonzero.
    pub fn discriminant(&self) -> Result<BigInt> {
        let d = self.degree();
        if d == 0 {
            return Err(Error::domain("discriminant needs degree >= 1"));
        }
        for k in 0..=d as i64 {
            let shifted = self.shift(&BigInt::from(k));
            if !shifted.coeffs[d].is_zero() {
                return Ok(discriminant_of(&shifted.coeffs));
            }
        }
        unreachable!("a nonzero form of degree d has fewer than d+1 roots")
    }

    pub fn is_squarefree(&self) -> bool {
        self.degree() == 0 || !self.discriminant().map(|d| d.is_zero()).unwrap_or(true)
    }

    /// The form `F(x, z + k x)`, whose `x^d` coefficient is `F(1, k)`.
    pub fn shift(&self, k: &BigInt) -> BinForm {
        let d = self.degree();
        let mut out = vec![BigInt::zero(); d + 1];
        // x^i (z + k x)^(d-i) = sum_j C(d-i, j) k^j x^(i+j) z^(d-i-j)
        for (i, a) in self.coeffs.iter().enumerate() {
            let mut binom = BigInt::one();
            for j in 0..=d - i {
                if j > 0 {
                    binom = binom * BigInt::from(d - i - j + 1) / BigInt::from(j);
                }
                out[i + j] += a * &binom * k.pow(j as u32);
            }
        }
        BinForm { coeffs: out }
    }
}

impl fmt::Display for BinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.degree();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match (power("x", i), power("z", d - i)) {
                (a, b) if a.is_empty() => b,
                (a, b) if b.is_empty() => a,
                (a, b) => format!("{a}*{b}"),
            };
            write_term(f, first, c, &mono)?;
            first = false;
        }
        Ok(())
    }
}
