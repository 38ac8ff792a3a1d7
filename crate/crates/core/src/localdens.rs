//! Local solution counts modulo prime powers.
//!
//! Roots modulo `p^k` are counted on the tree of p-adic lifts. A node is a
//! residue `a` modulo `p^j` with `p^j | P(a)`. Writing `s = v_p(P'(a))`,
//! once `j > 2s` the whole subtree has a closed form (Hensel), so only the
//! finitely many shallow singular nodes are ever expanded.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::modp::{self, FpPoly};
use crate::poly::{BinForm, IntPoly};

/// Default depth cap for valuation tables.
pub const M_CAP: u32 = 24;

/// Singular nodes expanded before giving up; unreachable for square-free
/// input of moderate discriminant.
const NODE_BUDGET: u64 = 5_000_000;

/// Exponent of `p` in `n`, with `None` for zero.
fn vp(n: &BigInt, p: &BigInt) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let mut r = n.clone();
    let mut e = 0;
    loop {
        let (q, rem) = num_integer::Integer::div_rem(&r, p);
        if !rem.is_zero() {
            return Some(e);
        }
        r = q;
        e += 1;
    }
}

/// Distinct roots of `P` modulo `p`; every residue when `p` divides the
/// content.
pub fn roots_mod_p(poly: &IntPoly, p: u64) -> Vec<u64> {
    modp::roots(&FpPoly::from_bigint(poly.coeffs(), p))
}

struct Tree<'a> {
    poly: &'a IntPoly,
    deriv: IntPoly,
    p: u64,
    pb: BigInt,
    max_level: u32,
    budget: u64,
}

impl Tree<'_> {
    /// Adds the counts of roots below node `(a, j)` into `counts[k]` for
    /// `j <= k <= max_level`.
    fn walk(&mut self, a: &BigInt, j: u32, counts: &mut [BigUint]) -> Result<()> {
        if j > self.max_level {
            return Ok(());
        }
        let pa = self.poly.eval(a);
        let da = self.deriv.eval(a);
        let s = vp(&da, &self.pb);
        let pj = |e: u32| BigUint::from(self.p).pow(e);
        if let Some(s) = s.filter(|&s| j > 2 * s) {
            let w = vp(&pa, &self.pb);
            if w.is_none_or(|w| w >= j + s) {
                for k in j..=self.max_level {
                    counts[k as usize] += if k <= j + s { pj(k - j) } else { pj(s) };
                }
            } else {
                let w = w.unwrap();
                for k in j..=self.max_level.min(w) {
                    counts[k as usize] += pj(k - j);
                }
            }
            return Ok(());
        }
        counts[j as usize] += 1u32;
        if j == self.max_level {
            return Ok(());
        }
        if self.budget == 0 {
            return Err(Error::resource(format!(
                "root tree modulo powers of {} exceeded its node budget",
                self.p
            )));
        }
        self.budget -= 1;
        let step = self.pb.pow(j);
        let next = &step * &self.pb;
        for t in 0..self.p {
            let child = a + &step * BigInt::from(t);
            if (self.poly.eval(&child) % &next).is_zero() {
                self.walk(&child, j + 1, counts)?;
            }
        }
        Ok(())
    }
}

fn check_poly(poly: &IntPoly) -> Result<()> {
    if poly.is_zero() {
        return Err(Error::domain("the zero polynomial vanishes identically"));
    }
    if !poly.is_squarefree() {
        return Err(Error::domain(format!("{poly} is not square-free")));
    }
    Ok(())
}

/// `counts[k] = #{x mod p^k : p^k | P(x)}` for `k = 0..=max_level`,
/// restricted to `x ≡ a (mod p^e)` when `class = Some((a, e))` with
/// `e >= 1`. For classes the entries with `k < e` count residues modulo
/// `p^k` whose class contains `a`, i.e. 1 or 0.
pub fn level_counts(
    poly: &IntPoly,
    p: u64,
    max_level: u32,
    class: Option<(&BigInt, u32)>,
) -> Result<Vec<BigUint>> {
    check_poly(poly)?;
    let mut counts = vec![BigUint::zero(); max_level as usize + 1];
    let pb = BigInt::from(p);
    if poly.degree() == Some(0) {
        let c = poly.coeff(0);
        let v = vp(&c, &pb).unwrap_or(u32::MAX);
        for k in 0..=max_level.min(v) {
            counts[k as usize] = match class {
                None => BigUint::from(p).pow(k),
                Some((_, e)) => BigUint::from(p).pow(k.saturating_sub(e)),
            };
        }
        return Ok(counts);
    }
    let mut tree =
        Tree { poly, deriv: poly.derivative(), p, pb: pb.clone(), max_level, budget: NODE_BUDGET };
    match class {
        None => {
            counts[0] = BigUint::one();
            for r in roots_mod_p(poly, p) {
                tree.walk(&BigInt::from(r), 1, &mut counts)?;
            }
        }
        Some((a, e)) => {
            assert!(e >= 1, "class modulus must be a positive power");
            let modulus = pb.pow(e);
            let a = num_integer::Integer::mod_floor(a, &modulus);
            let pa = poly.eval(&a);
            let w = vp(&pa, &pb).unwrap_or(u32::MAX);
            for k in 0..e.min(max_level + 1) {
                if w >= k {
                    counts[k as usize] = BigUint::one();
                }
            }
            if w >= e && e <= max_level {
                tree.walk(&a, e, &mut counts)?;
            }
        }
    }
    Ok(counts)
}

/// `#{x mod p^k : P(x) ≡ 0 mod p^k}` for square-free `P`.
pub fn count_roots_mod_pk(poly: &IntPoly, p: u64, k: u32) -> Result<BigUint> {
    Ok(level_counts(poly, p, k, None)?.swap_remove(k as usize))
}

/// `ℓ(p^k)` as a machine integer; errors if it does not fit.
pub fn ell(poly: &IntPoly, p: u64, k: u32) -> Result<u64> {
    count_roots_mod_pk(poly, p, k)?
        .to_u64()
        .ok_or_else(|| Error::resource("root count overflows u64"))
}

/// Explicit list of roots of `P` modulo `p^k`, sorted. Fails when the list
/// would exceed `limit` entries.
pub fn roots_mod_pk(poly: &IntPoly, p: u64, k: u32, limit: usize) -> Result<Vec<BigInt>> {
    check_poly(poly)?;
    let total = count_roots_mod_pk(poly, p, k)?;
    if total > BigUint::from(limit) {
        return Err(Error::resource(format!("{total} roots modulo {p}^{k} exceed the limit {limit}")));
    }
    let pb = BigInt::from(p);
    let mut layer: Vec<BigInt> = if poly.degree() == Some(0) {
        if total.is_zero() {
            Vec::new()
        } else {
            (0..p).map(BigInt::from).collect()
        }
    } else {
        roots_mod_p(poly, p).into_iter().map(BigInt::from).collect()
    };
    if k == 0 {
        return Ok(vec![BigInt::zero()]);
    }
    for j in 1..k {
        let step = pb.pow(j);
        let next = &step * &pb;
        let mut out = Vec::new();
        for a in &layer {
            for t in 0..p {
                let c = a + &step * BigInt::from(t);
                if (poly.eval(&c) % &next).is_zero() {
                    out.push(c);
                }
            }
            if out.len() > limit {
                return Err(Error::resource("intermediate root layer exceeds the limit"));
            }
        }
        layer = out;
    }
    layer.sort();
    Ok(layer)
}

/// Upper bound `max(p^v deg P, p^(3v))` with `v = v_p(Disc P)` on the
/// number of roots modulo any power of `p`, valid for primitive square-free
/// `P` of degree at least 1.
pub fn sols_bound(poly: &IntPoly, p: u64) -> Result<BigUint> {
    let disc = poly.discriminant()?;
    let v = vp(&disc, &BigInt::from(p)).ok_or_else(|| Error::domain("zero discriminant"))?;
    let pv = BigUint::from(p).pow(v);
    let a = &pv * BigUint::from(poly.degree().unwrap_or(0));
    let b = BigUint::from(p).pow(3 * v);
    Ok(a.max(b))
}

fn check_form(form: &BinForm) -> Result<()> {
    if !form.is_squarefree() {
        return Err(Error::domain(format!("{form} is not square-free")));
    }
    Ok(())
}

/// Pairs modulo `p^2` with `p | x` and `p | z` on which `p^2 | F`.
fn non_coprime_count(form: &BinForm, p: u64) -> BigUint {
    let p2 = BigUint::from(p) * BigUint::from(p);
    match form.degree() {
        0 => {
            let c = &form.coeffs()[0];
            if (c % BigInt::from(p * p)).is_zero() {
                p2
            } else {
                BigUint::zero()
            }
        }
        // F(p x', p z') = p F(x', z'), so p^2 | F iff p | F(x', z'): a line
        // of p residues, or everything when p divides both coefficients
        1 => {
            let pb = BigInt::from(p);
            if form.coeffs().iter().all(|c| (c % &pb).is_zero()) {
                p2
            } else {
                BigUint::from(p)
            }
        }
        _ => p2,
    }
}

/// `#{(x, z) mod p^2 : p^2 | F(x, z), not both divisible by p}`.
///
/// A pair with `z` a unit is `(t z, z)` for a unique `t mod p^2`, and
/// `p^2 | F(t z, z)` iff `p^2 | F(t, 1)`; pairs with `p | z` and `x` a unit
/// are `(x, s x)` with `p | s`. Each class carries `p^2 - p` unit scalings.
pub fn coprime_count_form(form: &BinForm, p: u64) -> Result<BigUint> {
    check_form(form)?;
    let units = BigUint::from(p * p - p);
    let a = count_roots_mod_pk(&form.dehomogenize_x(), p, 2)?;
    let g = form.dehomogenize_z();
    let b = level_counts(&g, p, 2, Some((&BigInt::zero(), 1)))?.swap_remove(2);
    Ok(units * (a + b))
}

/// `ℓ(p^2) = #{(x, z) mod p^2 : p^2 | F(x, z)}`.
pub fn ell_form(form: &BinForm, p: u64) -> Result<BigUint> {
    Ok(coprime_count_form(form, p)? + non_coprime_count(form, p))
}

/// Haar measure of `{x in Z_p : v_p(P(x)) = j}`, i.e.
/// `c_j / p^j - c_(j+1) / p^(j+1)`.
pub fn valuation_measure(poly: &IntPoly, p: u64, j: u32) -> Result<BigRational> {
    let c = level_counts(poly, p, j + 1, None)?;
    Ok(ratio(&c[j as usize], p, j) - ratio(&c[j as usize + 1], p, j + 1))
}

/// Per-residue-class refinement: the measure of
/// `{x ≡ r (mod p) : v_p(P(x)) = j}` for every `r` in `0..p` that is a
/// root of `P` modulo `p`. Classes that are not roots carry valuation 0.
pub fn valuation_measure_by_class(poly: &IntPoly, p: u64, j: u32) -> Result<Vec<(u64, BigRational)>> {
    let mut out = Vec::new();
    for r in roots_mod_p(poly, p) {
        let c = level_counts(poly, p, j + 1, Some((&BigInt::from(r), 1)))?;
        let m = if j == 0 {
            ratio(&BigUint::one(), p, 1) - ratio(&c[1], p, 1)
        } else {
            ratio(&c[j as usize], p, j) - ratio(&c[j as usize + 1], p, j + 1)
        };
        out.push((r, m));
    }
    Ok(out)
}

/// `c / p^k` as an exact rational.
pub fn ratio(c: &BigUint, p: u64, k: u32) -> BigRational {
    BigRational::new(BigInt::from(c.clone()), BigInt::from(p).pow(k))
}
