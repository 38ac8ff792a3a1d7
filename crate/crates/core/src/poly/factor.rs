//! Factorization in `Z[x]` for small degrees: square-free decomposition
//! followed by Kronecker's interpolation search, with degree patterns
//! modulo small primes used to skip impossible factor degrees.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::IntPoly;
use crate::error::{Error, Result};
use crate::modp::{self, FpPoly};
use crate::numutil;

pub const MAX_FACTOR_DEGREE: usize = 8;
const MAX_COMBINATIONS: u64 = 20_000_000;
const PATTERN_PRIMES: usize = 8;

/// `P = unit_content * prod f_i^(e_i)` with each `f_i` primitive,
/// irreducible over `Q` and with positive leading coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFactorization {
    pub unit_content: BigInt,
    pub factors: Vec<(IntPoly, u32)>,
}

impl RationalFactorization {
    /// Largest degree of an irreducible factor.
    pub fn deg_irr(&self) -> usize {
        self.factors.iter().map(|(f, _)| f.degree().unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn expand(&self) -> IntPoly {
        let mut acc = IntPoly::new(vec![self.unit_content.clone()]);
        for (f, e) in &self.factors {
            acc = acc.mul(&f.pow(*e));
        }
        acc
    }
}

fn pseudo_rem(a: &IntPoly, b: &IntPoly) -> IntPoly {
    let db = b.degree().expect("nonzero divisor");
    let lb = b.lead();
    let mut r = a.clone();
    while let Some(dr) = r.degree() {
        if dr < db {
            break;
        }
        let lr = r.lead();
        let mut shifted = vec![BigInt::zero(); dr - db];
        shifted.extend(b.coeffs().iter().map(|c| c * &lr));
        r = r.scale(&lb).sub(&IntPoly::new(shifted));
    }
    r
}

/// Primitive gcd with positive leading coefficient.
fn gcd(a: &IntPoly, b: &IntPoly) -> IntPoly {
    let (mut a, mut b) = (a.primitive_part(), b.primitive_part());
    while !b.is_zero() {
        let r = pseudo_rem(&a, &b).primitive_part();
        a = b;
        b = r;
    }
    a.primitive_part()
}

fn exact(a: &IntPoly, b: &IntPoly) -> IntPoly {
    a.div_exact(b).expect("exact division in the square-free decomposition")
}

/// Yun's square-free decomposition of a primitive polynomial.
fn squarefree_parts(f: &IntPoly) -> Vec<(IntPoly, u32)> {
    let mut out = Vec::new();
    let df = f.derivative();
    let a0 = gcd(f, &df);
    let mut b = exact(f, &a0);
    let mut c = exact(&df, &a0);
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    while b.degree().unwrap_or(0) > 0 {
        let a = gcd(&b, &d);
        if a.degree().unwrap_or(0) > 0 {
            out.push((a.clone(), i));
        }
        b = exact(&b, &a);
        c = exact(&d, &a);
        d = c.sub(&b.derivative());
        i += 1;
    }
    out
}

/// Degrees a proper factor could have, from factorization patterns modulo
/// several primes where `g` stays square-free.
fn admissible_degrees(g: &IntPoly) -> Result<BTreeSet<usize>> {
    let n = g.degree().unwrap_or(0);
    let mut allowed: BTreeSet<usize> = (1..n).collect();
    let lead = g.lead();
    let mut used = 0;
    for &p in numutil::small_primes().iter().take(2000) {
        if used == PATTERN_PRIMES || allowed.is_empty() {
            break;
        }
        if (&lead % BigInt::from(p)).is_zero() {
            continue;
        }
        let fp = FpPoly::from_bigint(g.coeffs(), p);
        if fp.gcd(&fp.derivative()).degree() != Some(0) {
            continue;
        }
        let degs = modp::factor_degrees(&fp);
        let mut sums = BTreeSet::from([0usize]);
        for d in degs {
            let next: Vec<usize> = sums.iter().map(|s| s + d).collect();
            sums.extend(next);
        }
        allowed.retain(|k| sums.contains(k));
        used += 1;
    }
    Ok(allowed)
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    let v = n
        .abs()
        .to_i128()
        .ok_or_else(|| Error::resource("polynomial value too large to enumerate divisors"))?;
    let f = numutil::factorize(v)?;
    if let Some(pq) = f.pair {
        return Err(Error::resource(format!("could not split {pq} while enumerating divisors")));
    }
    let mut ds = vec![1u128];
    for &(p, e) in &f.primes {
        let mut next = Vec::with_capacity(ds.len() * (e as usize + 1));
        for &d in &ds {
            let mut q = d;
            for _ in 0..=e {
                next.push(q);
                q *= p;
            }
        }
        ds = next;
    }
    ds.sort_unstable();
    Ok(ds.into_iter().map(BigInt::from).collect())
}

/// Newton interpolation through `(xs[i], ys[i])`; `None` unless every
/// coefficient is an integer.
fn interpolate(xs: &[i64], ys: &[BigInt]) -> Option<IntPoly> {
    let n = xs.len();
    let mut dd: Vec<BigRational> = ys.iter().map(|y| BigRational::from_integer(y.clone())).collect();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            dd[i] = num / BigRational::from_integer(BigInt::from(xs[i] - xs[i - level]));
        }
    }
    // expand sum dd[i] prod_{j<i} (x - xs[j]) by Horner from the top
    let mut acc: Vec<BigRational> = vec![dd[n - 1].clone()];
    for i in (0..n - 1).rev() {
        let mut next = vec![BigRational::zero(); acc.len() + 1];
        let xi = BigRational::from_integer(BigInt::from(xs[i]));
        for (k, c) in acc.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * &xi;
        }
        next[0] += &dd[i];
        acc = next;
    }
    let mut coeffs = Vec::with_capacity(acc.len());
    for c in acc {
        if !c.is_integer() {
            return None;
        }
        coeffs.push(c.to_integer());
    }
    Some(IntPoly::new(coeffs))
}

/// Searches for a factor of degree exactly `k` of the square-free
/// primitive `g` with no integer roots.
fn kronecker_factor(g: &IntPoly, k: usize) -> Result<Option<IntPoly>> {
    let mut values: Vec<(BigInt, i64)> = (-20i64..=20)
        .map(|x| (g.eval(&BigInt::from(x)), x))
        .filter(|(v, _)| v.bits() <= 48)
        .collect();
    values.sort_by(|a, b| a.0.abs().cmp(&b.0.abs()).then(a.1.abs().cmp(&b.1.abs())).then(a.1.cmp(&b.1)));
    values.truncate(3 * (k + 1) + 6);
    let mut cands: Vec<(usize, i64, BigInt, Vec<BigInt>)> = Vec::new();
    for (v, x) in values {
        debug_assert!(!v.is_zero());
        let Ok(ds) = divisors(&v) else { continue };
        cands.push((ds.len(), x, v, ds));
    }
    cands.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.abs().cmp(&b.1.abs())).then(a.1.cmp(&b.1)));
    cands.truncate(k + 1);
    if cands.len() < k + 1 {
        return Err(Error::resource("not enough small evaluation points for factor search"));
    }
    let xs: Vec<i64> = cands.iter().map(|c| c.1).collect();
    // first divisor fixed positive: a factor is only determined up to sign
    let radix: Vec<usize> = cands.iter().enumerate().map(|(i, c)| c.3.len() * if i == 0 { 1 } else { 2 }).collect();
    let total = radix.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64));
    match total {
        Some(t) if t <= MAX_COMBINATIONS => {}
        _ => return Err(Error::resource("factor search space too large")),
    }
    let lead = g.lead();
    let mut digit = vec![0usize; k + 1];
    loop {
        let ys: Vec<BigInt> = (0..=k)
            .map(|i| {
                let ds = &cands[i].3;
                let j = digit[i];
                if j < ds.len() {
                    ds[j].clone()
                } else {
                    -ds[j - ds.len()].clone()
                }
            })
            .collect();
        if let Some(h) = interpolate(&xs, &ys) {
            if h.degree() == Some(k) && (&lead % h.lead()).is_zero() && g.div_exact(&h).is_some() {
                return Ok(Some(h.primitive_part()));
            }
        }
        let mut i = 0;
        loop {
            if i == digit.len() {
                return Ok(None);
            }
            digit[i] += 1;
            if digit[i] < radix[i] {
                break;
            }
            digit[i] = 0;
            i += 1;
        }
    }
}

fn integer_root(g: &IntPoly) -> Result<Option<i64>> {
    // a root divides the constant term, or is 0
    let c0 = g.coeff(0);
    if c0.is_zero() {
        return Ok(Some(0));
    }
    if g.degree() != Some(1) {
        for d in divisors(&c0)? {
            for r in [d.clone(), -d] {
                if g.eval(&r).is_zero() {
                    return Ok(r.to_i64());
                }
            }
        }
    }
    Ok(None)
}

fn split_irreducible(g: IntPoly, out: &mut Vec<IntPoly>) -> Result<()> {
    let n = g.degree().unwrap_or(0);
    if n <= 1 {
        if n == 1 {
            out.push(g.primitive_part());
        }
        return Ok(());
    }
    if let Some(r) = integer_root(&g)? {
        let lin = IntPoly::from_i64(&[-r, 1]);
        out.push(lin.clone());
        return split_irreducible(exact(&g, &lin), out);
    }
    let allowed = admissible_degrees(&g)?;
    for k in 1..=n / 2 {
        if !allowed.contains(&k) {
            continue;
        }
        if let Some(h) = kronecker_factor(&g, k)? {
            let q = exact(&g, &h);
            split_irreducible(h, out)?;
            return split_irreducible(q, out);
        }
    }
    out.push(g.primitive_part());
    Ok(())
}

/// Complete factorization over the rationals for nonzero `P` of degree at
/// most 8.
pub fn factor_rational(p: &IntPoly) -> Result<RationalFactorization> {
    let n = p.degree().ok_or_else(|| Error::domain("cannot factor the zero polynomial"))?;
    if n > MAX_FACTOR_DEGREE {
        return Err(Error::Unsupported(format!(
            "factorization is limited to degree {MAX_FACTOR_DEGREE}, got {n}"
        )));
    }
    let mut unit = p.content();
    if p.lead().is_negative() {
        unit = -unit;
    }
    let f = p.primitive_part();
    let mut factors: Vec<(IntPoly, u32)> = Vec::new();
    if n > 0 {
        for (g, e) in squarefree_parts(&f) {
            let mut irr = Vec::new();
            split_irreducible(g, &mut irr)?;
            for h in irr {
                factors.push((h, e));
            }
        }
    }
    factors.sort_by(|a, b| {
        a.0.degree()
            .cmp(&b.0.degree())
            .then_with(|| a.0.coeffs().iter().rev().cmp(b.0.coeffs().iter().rev()))
            .then(a.1.cmp(&b.1))
    });
    let result = RationalFactorization { unit_content: unit, factors };
    debug_assert_eq!(&result.expand(), p);
    Ok(result)
}
