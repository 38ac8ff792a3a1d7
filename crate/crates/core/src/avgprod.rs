//! Averages of infinite products `∏_p u_p` of local factors over integers
//! and over coprime pairs, compared with the product of their p-adic
//! integrals.
//!
//! A local factor is a rule `(p, class, j) -> u` where `class` is `x mod p`
//! (for pairs, the point `x : y` of the projective line over `F_p`, with
//! `p` standing for infinity) and `j` the valuation of the value at `x`.
//! Rules are evaluated exactly up to valuation `j_cap`; the mass beyond it
//! is carried as slack.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::census::{self, SquareParts};
use crate::error::{Error, Result};
use crate::eulerprod::to_f64;
use crate::lattice::{Lattice2, Sector};
use crate::localdens::{self, M_CAP};
use crate::modp;
use crate::numutil;
use crate::par;
use crate::poly::{BinForm, IntPoly};

pub type Value = Complex<Rational64>;
pub type ExactValue = Complex<BigRational>;
pub type Rule = Arc<dyn Fn(u64, u64, u32) -> Value + Send + Sync>;

/// Primes up to this bound enter the tail sum one by one.
const TAIL_PRIME_LIMIT: u64 = 1_000_000;

/// Largest `p^e` enumerated when localizing a lattice.
const MAX_LATTICE_PART: u64 = 1_000_000;

#[derive(Clone)]
pub struct LocalFactorSpec {
    pub name: String,
    /// `u = 1` below this valuation: 2 for factors that only see square
    /// divisors, 1 for factors that see every prime divisor.
    pub min_level: u32,
    pub j_cap: u32,
    rule: Rule,
}

impl std::fmt::Debug for LocalFactorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalFactorSpec")
            .field("name", &self.name)
            .field("min_level", &self.min_level)
            .field("j_cap", &self.j_cap)
            .finish()
    }
}

impl LocalFactorSpec {
    pub fn new(name: &str, min_level: u32, rule: Rule) -> Result<Self> {
        if !(1..=2).contains(&min_level) {
            return Err(Error::domain("min_level must be 1 or 2"));
        }
        Ok(LocalFactorSpec { name: name.to_string(), min_level, j_cap: M_CAP, rule })
    }

    pub fn with_j_cap(mut self, j_cap: u32) -> Result<Self> {
        if j_cap < self.min_level {
            return Err(Error::domain("j_cap below min_level"));
        }
        self.j_cap = j_cap;
        Ok(self)
    }

    pub fn one() -> Self {
        Self::new("one", 2, Arc::new(|_, _, _| Value::one())).unwrap()
    }

    /// 0 when `p^2` divides the value.
    pub fn squarefree_indicator() -> Self {
        Self::new("squarefree", 2, Arc::new(|_, _, _| Value::zero())).unwrap()
    }

    /// `(-1)^j` when `p^2` divides the value.
    pub fn square_sign() -> Self {
        Self::new("square-sign", 2, Arc::new(|_, _, j| sign(j))).unwrap()
    }

    /// `(-1)^j` for every prime; for `P = x` the product is Liouville's
    /// function.
    pub fn valuation_sign() -> Self {
        Self::new("valuation-sign", 1, Arc::new(|_, _, j| sign(j))).unwrap()
    }

    pub fn value(&self, p: u64, class: u64, j: u32) -> Value {
        if j < self.min_level {
            Value::one()
        } else {
            (self.rule)(p, class, j)
        }
    }

    fn checked(&self, p: u64, class: u64, j: u32) -> Result<ExactValue> {
        let v = self.value(p, class, j);
        let (re, im) = (big(&v.re), big(&v.im));
        if &re * &re + &im * &im > BigRational::one() {
            return Err(Error::domain(format!("{}: |u| > 1 at p = {p}, class {class}, j = {j}", self.name)));
        }
        Ok(Complex::new(re, im))
    }

    fn value_f64(&self, p: u64, class: u64, j: u32) -> Result<Complex<f64>> {
        let v = self.value(p, class, j);
        let z = Complex::new(v.re.to_f64().unwrap_or(f64::NAN), v.im.to_f64().unwrap_or(f64::NAN));
        if !(z.norm_sqr() <= 1.0 + 1e-12) {
            return Err(Error::domain(format!("{}: |u| > 1 at p = {p}, class {class}, j = {j}", self.name)));
        }
        Ok(z)
    }
}

fn sign(j: u32) -> Value {
    if j % 2 == 0 {
        Value::one()
    } else {
        -Value::one()
    }
}

fn big(r: &Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn cf64(z: &ExactValue) -> Complex<f64> {
    Complex::new(to_f64(&z.re), to_f64(&z.im))
}

fn scale(z: &ExactValue, r: &BigRational) -> ExactValue {
    Complex::new(&z.re * r, &z.im * r)
}

/// `∫ u_p` with an enclosure radius.
#[derive(Debug, Clone)]
pub struct LocalIntegral {
    pub p: u64,
    pub value: ExactValue,
    /// Bound on `|true integral - value|` from valuations at or above
    /// `j_cap`.
    pub slack: BigRational,
    /// Mass of the set where `u` may differ from 1.
    pub active_mass: BigRational,
}

impl LocalIntegral {
    fn zero(p: u64) -> Self {
        LocalIntegral { p, value: ExactValue::zero(), slack: BigRational::zero(), active_mass: BigRational::zero() }
    }

    fn add(&mut self, o: &LocalIntegral) {
        self.value = &self.value + &o.value;
        self.slack += &o.slack;
        self.active_mass += &o.active_mass;
    }

    fn scaled(mut self, r: &BigRational) -> Self {
        self.value = scale(&self.value, r);
        self.slack *= r;
        self.active_mass *= r;
        self
    }
}

/// Integral of `u` over `{x ≡ a (mod p^e)}`, `e >= 1`, with `class` the
/// label passed to the rule.
fn class_integral(poly: &IntPoly, u: &LocalFactorSpec, p: u64, a: &BigInt, e: u32, class: u64) -> Result<LocalIntegral> {
    let jc = u.j_cap;
    let c = localdens::level_counts(poly, p, jc, Some((a, e)))?;
    let pb = BigInt::from(p);
    // mass of the class with valuation at least k
    let mu: Vec<BigRational> = (0..=jc)
        .map(|k| BigRational::new(BigInt::from(c[k as usize].clone()), pb.pow(k.max(e))))
        .collect();
    let mut value = ExactValue::zero();
    for j in 0..jc {
        let m = &mu[j as usize] - &mu[j as usize + 1];
        if !m.is_zero() {
            value = value + scale(&u.checked(p, class, j)?, &m);
        }
    }
    let tail = &mu[jc as usize];
    if !tail.is_zero() {
        value = value + scale(&u.checked(p, class, jc)?, tail);
    }
    Ok(LocalIntegral {
        p,
        value,
        slack: tail * BigRational::from_integer(2.into()),
        active_mass: mu[u.min_level as usize].clone(),
    })
}

fn check_poly(poly: &IntPoly) -> Result<()> {
    if poly.degree().unwrap_or(0) < 1 {
        return Err(Error::domain("need a polynomial of degree at least 1"));
    }
    if !poly.is_squarefree() {
        return Err(Error::domain(format!("{poly} is not square-free")));
    }
    Ok(())
}

fn check_form(form: &BinForm) -> Result<()> {
    if form.degree() < 1 {
        return Err(Error::domain("need a form of degree at least 1"));
    }
    if !form.is_squarefree() {
        return Err(Error::domain(format!("{form} is not square-free")));
    }
    Ok(())
}

fn check_prime(p: u64) -> Result<()> {
    if !numutil::is_prime(p as u128)? {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    Ok(())
}

/// `∫_{Z_p} u_p(x) dx`.
pub fn local_integral(u: &LocalFactorSpec, poly: &IntPoly, p: u64) -> Result<LocalIntegral> {
    check_poly(poly)?;
    check_prime(p)?;
    local_integral_unchecked(u, poly, p, None)
}

/// `∫ u_p` over the class `x ≡ a (mod p^e)` (the measure `σ_p` of a
/// progression multiplier), or over `Z_p` when `restrict` is `None`.
fn local_integral_unchecked(u: &LocalFactorSpec, poly: &IntPoly, p: u64, restrict: Option<(u64, u32)>) -> Result<LocalIntegral> {
    if let Some((a, e)) = restrict {
        if e > 0 {
            return class_integral(poly, u, p, &BigInt::from(a), e, a % p);
        }
    }
    let roots = localdens::roots_mod_p(poly, p);
    let mut out = LocalIntegral::zero(p);
    out.value.re = BigRational::new(BigInt::from(p - roots.len() as u64), BigInt::from(p));
    for r in roots {
        out.add(&class_integral(poly, u, p, &BigInt::from(r), 1, r)?);
    }
    Ok(out)
}

/// Points of the projective line over `F_p` allowed in each chart, as
/// classes modulo `p^e`: `x/y` when `y` is a unit, `y/x` (a multiple of
/// `p`) when it is not.
#[derive(Debug, Clone)]
struct Charts {
    e: u32,
    finite: Vec<u64>,
    infinite: Vec<u64>,
}

/// `∫ u_p` over primitive pairs in `Z_p^2`, divided by their mass
/// `1 - 1/p^2`, optionally restricted to a localized lattice.
fn local_integral_form_unchecked(u: &LocalFactorSpec, form: &BinForm, p: u64, charts: Option<&Charts>) -> Result<LocalIntegral> {
    let fx = form.dehomogenize_x();
    let fz = form.dehomogenize_z();
    let mut raw = LocalIntegral::zero(p);
    match charts {
        None => {
            raw.add(&local_integral_unchecked(u, &fx, p, None)?);
            raw.add(&class_integral(&fz, u, p, &BigInt::zero(), 1, p)?);
        }
        Some(ch) => {
            for &s in &ch.finite {
                raw.add(&class_integral(&fx, u, p, &BigInt::from(s), ch.e, s % p)?);
            }
            for &s in &ch.infinite {
                raw.add(&class_integral(&fz, u, p, &BigInt::from(s), ch.e, p)?);
            }
        }
    }
    // unit scalings contribute 1 - 1/p, and (1 - 1/p) / (1 - 1/p^2) = p/(p+1)
    Ok(raw.scaled(&BigRational::new(BigInt::from(p), BigInt::from(p + 1))))
}

/// `∫ u_p` over `Z_p^2 - pZ_p^2` normalized by its mass, so that `u ≡ 1`
/// gives 1.
pub fn local_integral_form(u: &LocalFactorSpec, form: &BinForm, p: u64) -> Result<LocalIntegral> {
    check_form(form)?;
    check_prime(p)?;
    local_integral_form_unchecked(u, form, p, None)
}

/// Exact product over `p <= b` plus an enclosure radius for the rest.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub b: u64,
    /// `∏_{p <= b}` of the local integrals.
    pub truncated: ExactValue,
    /// Primes above `b` where the tail bound does not apply, multiplied in
    /// exactly.
    pub extra_primes: Vec<u64>,
    /// `truncated` times the extra factors.
    pub center: ExactValue,
    /// Sum of the `j_cap` slacks.
    pub truncation_slack: f64,
    /// Bound on `Σ_{p > b} |∫ u_p - 1|` over the remaining primes.
    pub tail_slack: f64,
}

impl Prediction {
    pub fn radius(&self) -> f64 {
        self.truncation_slack + self.tail_slack
    }

    pub fn center_f64(&self) -> Complex<f64> {
        cf64(&self.center)
    }
}

/// Primes dividing a nonzero integer, which must be factorable.
fn prime_divisors(n: &BigInt) -> Result<Vec<u64>> {
    let v = n.to_i128().ok_or_else(|| Error::resource("discriminant exceeds i128"))?;
    let f = numutil::factorize(v)?;
    if f.pair.is_some() {
        return Err(Error::resource("discriminant has an unsplit cofactor"));
    }
    f.primes.iter().map(|&(p, _)| u64::try_from(p).map_err(|_| Error::resource("prime exceeds u64"))).collect()
}

/// `2 d Σ_{p > b, p good} 1/p^2`, rounded up: at a prime not dividing
/// `bad`, at most `d` classes modulo `p^2` carry valuation 2 or more.
fn tail_bound(d: usize, b: u64, bad: &[u64]) -> f64 {
    let mut s = 0.0;
    if b < TAIL_PRIME_LIMIT {
        for p in numutil::primes_up_to(TAIL_PRIME_LIMIT) {
            if p > b && !bad.contains(&p) {
                let pf = p as f64;
                s += 1.0 / (pf * pf);
            }
        }
    }
    // Σ_{n > L} 1/n^2 < 1/L
    s += 1.0 / b.max(TAIL_PRIME_LIMIT) as f64;
    2.0 * d as f64 * s * (1.0 + 1e-12)
}

fn assemble(
    b: u64,
    locals: Vec<LocalIntegral>,
    extras: Vec<LocalIntegral>,
    tail_slack: f64,
) -> Prediction {
    // slack denominators are coprime prime powers, so sum them as floats
    let mut truncated = ExactValue::one();
    let mut slack = 0.0;
    for l in &locals {
        truncated = &truncated * &l.value;
        slack += to_f64(&l.slack);
    }
    let mut center = truncated.clone();
    for l in &extras {
        center = &center * &l.value;
        slack += to_f64(&l.slack);
    }
    Prediction {
        b,
        truncated,
        extra_primes: extras.iter().map(|l| l.p).collect(),
        center,
        truncation_slack: slack * (1.0 + 1e-9),
        tail_slack,
    }
}

/// Restrictions `(p, e, a)`: `σ_p` is Haar measure on `x ≡ a (mod p^e)`.
pub type Restrictions = Vec<(u64, u32, u64)>;

/// `∏_p ∫ u_p dσ_p` with `σ_p = μ_p` off the restricted primes.
pub fn predict(u: &LocalFactorSpec, poly: &IntPoly, b: u64, restrict: &Restrictions) -> Result<Prediction> {
    predict_with(u, poly, b, restrict, par::DEFAULT_PARALLEL)
}

pub fn predict_with(u: &LocalFactorSpec, poly: &IntPoly, b: u64, restrict: &Restrictions, parallel: bool) -> Result<Prediction> {
    check_poly(poly)?;
    if u.min_level < 2 {
        return Err(Error::domain(format!("{}: no convergent product for factors active at every prime", u.name)));
    }
    let find = |p: u64| restrict.iter().find(|r| r.0 == p).map(|&(_, e, a)| (a, e));
    let primes = numutil::primes_up_to(b);
    let locals: Vec<LocalIntegral> = par::map_slice(&primes, parallel, |&p| local_integral_unchecked(u, poly, p, find(p)))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut bad = prime_divisors(&(poly.discriminant()? * poly.lead()))?;
    bad.extend(restrict.iter().map(|r| r.0));
    bad.sort_unstable();
    bad.dedup();
    let extras = bad
        .iter()
        .filter(|&&p| p > b)
        .map(|&p| local_integral_unchecked(u, poly, p, find(p)))
        .collect::<Result<Vec<_>>>()?;
    let tail = tail_bound(poly.degree().unwrap_or(0), b, &bad);
    Ok(assemble(b, locals, extras, tail))
}

/// As [`predict`] for forms: the normalized integrals over primitive pairs,
/// restricted to a primitive lattice when given.
pub fn predict_form(u: &LocalFactorSpec, form: &BinForm, b: u64, lattice: Option<&Lattice2>) -> Result<Prediction> {
    check_form(form)?;
    if u.min_level < 2 {
        return Err(Error::domain(format!("{}: no convergent product for factors active at every prime", u.name)));
    }
    let local_charts = lattice_charts(lattice)?;
    let find = |p: u64| local_charts.iter().find(|c| c.0 == p).map(|c| &c.1);
    let primes = numutil::primes_up_to(b);
    let locals: Vec<LocalIntegral> =
        par::map_slice(&primes, par::DEFAULT_PARALLEL, |&p| local_integral_form_unchecked(u, form, p, find(p)))
            .into_iter()
            .collect::<Result<_>>()?;
    let mut bad = prime_divisors(&(form.discriminant()? * form.content()))?;
    bad.extend(local_charts.iter().map(|c| c.0));
    bad.sort_unstable();
    bad.dedup();
    let extras = bad
        .iter()
        .filter(|&&p| p > b)
        .map(|&p| local_integral_form_unchecked(u, form, p, find(p)))
        .collect::<Result<Vec<_>>>()?;
    let tail = tail_bound(form.degree(), b, &bad);
    Ok(assemble(b, locals, extras, tail))
}

/// For each prime `p^e || [Z^2 : L]`, the classes of `L ⊗ Z_p` in the two
/// charts. `c v ∈ L` with `c` the prime-to-`p` part of the index tests
/// membership in `L ⊗ Z_p`.
fn lattice_charts(lattice: Option<&Lattice2>) -> Result<Vec<(u64, Charts)>> {
    let Some(l) = lattice else {
        return Ok(Vec::new());
    };
    if !l.is_primitive() {
        return Err(Error::domain("lattice has no primitive points"));
    }
    let index = l.index();
    let f = numutil::factorize(index as i128)?;
    let mut out = Vec::new();
    for &(p, e) in &f.primes {
        let (p, q) = (p as u64, (p as u64).pow(e));
        if q > MAX_LATTICE_PART {
            return Err(Error::resource(format!("lattice index part {q} too large")));
        }
        let c = index / q as i64;
        let inside = |x: i64, y: i64| l.contains(c * x, c * y);
        let finite = (0..q).filter(|&s| inside(s as i64, 1)).collect();
        let infinite = (0..q).step_by(p as usize).filter(|&s| inside(1, s as i64)).collect();
        out.push((p, Charts { e, finite, infinite }));
    }
    Ok(out)
}

/// One average with its prediction and slack terms.
#[derive(Debug, Clone, Serialize)]
pub struct AverageReport {
    pub poly: String,
    pub family: String,
    pub multiplier: Option<String>,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "B")]
    pub b: u64,
    /// Points averaged over; zeros of the polynomial are excluded.
    pub samples: u64,
    pub zero_values: u64,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub predicted_re: Option<f64>,
    pub predicted_im: Option<f64>,
    pub predicted_lo: Option<f64>,
    pub predicted_hi: Option<f64>,
    pub tail_slack: Option<f64>,
    pub truncation_slack: Option<f64>,
    /// `2 δ / samples` when measured, with `δ` the count of values divisible
    /// by the square of a prime above the census threshold.
    pub delta_term: Option<f64>,
}

impl AverageReport {
    fn new(poly: String, u: &LocalFactorSpec, n: u64, b: u64, sum: Sum, pred: Option<&Prediction>) -> Result<Self> {
        if sum.samples == 0 {
            return Err(Error::domain("empty domain: no points to average over"));
        }
        let avg = sum.total / sum.samples as f64;
        let c = pred.map(|p| p.center_f64());
        let r = pred.map(|p| p.radius());
        Ok(AverageReport {
            poly,
            family: u.name.clone(),
            multiplier: None,
            n,
            b,
            samples: sum.samples,
            zero_values: sum.zeros,
            empirical_re: avg.re,
            empirical_im: avg.im,
            predicted_re: c.map(|c| c.re),
            predicted_im: c.map(|c| c.im),
            predicted_lo: c.zip(r).map(|(c, r)| c.re - r),
            predicted_hi: c.zip(r).map(|(c, r)| c.re + r),
            tail_slack: pred.map(|p| p.tail_slack),
            truncation_slack: pred.map(|p| p.truncation_slack),
            delta_term: None,
        })
    }

    pub fn empirical(&self) -> Complex<f64> {
        Complex::new(self.empirical_re, self.empirical_im)
    }

    pub fn predicted(&self) -> Option<Complex<f64>> {
        self.predicted_re.zip(self.predicted_im).map(|(re, im)| Complex::new(re, im))
    }

    /// `|empirical / predicted - 1|`.
    pub fn relative_gap(&self) -> Option<f64> {
        self.predicted().map(|p| ((self.empirical() - p) / p).norm())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    total: Complex<f64>,
    samples: u64,
    zeros: u64,
}

impl Sum {
    fn merge(self, o: Sum) -> Sum {
        Sum { total: self.total + o.total, samples: self.samples + o.samples, zeros: self.zeros + o.zeros }
    }
}

fn product(u: &LocalFactorSpec, x: u64, parts: &[(u64, u32)]) -> Result<Complex<f64>> {
    let mut acc = Complex::new(1.0, 0.0);
    for &(p, j) in parts {
        acc *= u.value_f64(p, x % p, j)?;
    }
    Ok(acc)
}

fn prime_parts(v: i128, min_level: u32) -> Result<Vec<(u64, u32)>> {
    let f = numutil::factorize(v)?;
    if min_level < 2 && f.pair.is_some() {
        return Err(Error::resource(format!("could not split the cofactor of {v}")));
    }
    Ok(f.primes
        .iter()
        .filter(|&&(_, e)| e >= min_level)
        .map(|&(p, e)| (p as u64, e))
        .collect())
}

/// `Σ_{1 <= x <= n, P(x) != 0} s(x) ∏_p u_p(x)` in a fixed block order.
fn empirical_sum<S>(poly: &IntPoly, u: &LocalFactorSpec, n: u64, s: &S, parallel: bool) -> Result<Sum>
where
    S: Fn(u64) -> Complex<f64> + Sync,
{
    check_poly(poly)?;
    if n < 1 {
        return Err(Error::domain("need N >= 1"));
    }
    let sieve = if u.min_level >= 2 { Some(SquareParts::new(poly, n, parallel)?) } else { None };
    let coeffs = poly.to_i128_coeffs().ok_or_else(|| Error::resource("coefficients exceed i128"))?;
    let blocks = par::blocks(1, n, census::BLOCK);
    let sums = par::map_slice(&blocks, parallel, |&(lo, last)| -> Result<Sum> {
        let hi = last + 1;
        let mut out = Sum::default();
        let parts: Vec<Option<Vec<(u64, u32)>>> = match &sieve {
            Some(sv) => sv.scan(lo, hi),
            None => (lo..hi)
                .map(|x| {
                    let v = coeffs.iter().rev().try_fold(0i128, |acc, &c| acc.checked_mul(x as i128)?.checked_add(c));
                    match v {
                        None => Err(Error::resource("polynomial value exceeds i128")),
                        Some(0) => Ok(None),
                        Some(v) => prime_parts(v, u.min_level).map(Some),
                    }
                })
                .collect::<Result<_>>()?,
        };
        for (x, part) in (lo..hi).zip(parts) {
            match part {
                None => out.zeros += 1,
                Some(part) => {
                    out.samples += 1;
                    let w = s(x);
                    if w != Complex::new(0.0, 0.0) {
                        out.total += w * product(u, x, &part)?;
                    }
                }
            }
        }
        Ok(out)
    });
    sums.into_iter().try_fold(Sum::default(), |a, b| Ok(a.merge(b?)))
}

/// `(1/N) Σ_{n <= N} ∏_p u_p(n)` against `∏_p ∫ u_p`, with the product
/// exact over `p <= b`.
pub fn empirical_average(poly: &IntPoly, u: &LocalFactorSpec, n: u64, b: u64) -> Result<AverageReport> {
    empirical_average_with(poly, u, n, b, par::DEFAULT_PARALLEL)
}

pub fn empirical_average_with(poly: &IntPoly, u: &LocalFactorSpec, n: u64, b: u64, parallel: bool) -> Result<AverageReport> {
    let sum = empirical_sum(poly, u, n, &|_| Complex::new(1.0, 0.0), parallel)?;
    let pred = if u.min_level >= 2 { Some(predict_with(u, poly, b, &Vec::new(), parallel)?) } else { None };
    AverageReport::new(poly.to_string(), u, n, b, sum, pred.as_ref())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MultiplierKind {
    Progression { a: u64, m: u64 },
    MobiusExperimental,
    Custom { name: String },
}

/// A bounded weight `s(n)` with, where known, the measures `σ_p` it
/// induces.
#[derive(Clone)]
pub struct MultiplierSpec {
    pub kind: MultiplierKind,
    s: Arc<dyn Fn(u64) -> Complex<f64> + Send + Sync>,
    pub sigma: Option<Restrictions>,
}

impl MultiplierSpec {
    /// Indicator of `n ≡ a (mod m)`.
    pub fn progression(a: u64, m: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::domain("modulus must be positive"));
        }
        let a = a % m;
        let f = numutil::factorize(m as i128)?;
        let sigma = f
            .primes
            .iter()
            .map(|&(p, e)| {
                let p = p as u64;
                (p, e, a % p.pow(e))
            })
            .collect();
        let s = Arc::new(move |n: u64| if n % m == a { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) });
        Ok(MultiplierSpec { kind: MultiplierKind::Progression { a, m }, s, sigma: Some(sigma) })
    }

    /// `μ(n)`; no measures are known, so no prediction is made.
    pub fn mobius() -> Self {
        let s = Arc::new(|n: u64| Complex::new(numutil::mobius(n as i128).map_or(0.0, |m| m as f64), 0.0));
        MultiplierSpec { kind: MultiplierKind::MobiusExperimental, s, sigma: None }
    }

    pub fn custom(name: &str, s: Arc<dyn Fn(u64) -> Complex<f64> + Send + Sync>, sigma: Option<Restrictions>) -> Self {
        MultiplierSpec { kind: MultiplierKind::Custom { name: name.to_string() }, s, sigma }
    }

    fn label(&self) -> String {
        match &self.kind {
            MultiplierKind::Progression { a, m } => format!("{a} mod {m}"),
            MultiplierKind::MobiusExperimental => "mobius".into(),
            MultiplierKind::Custom { name } => name.clone(),
        }
    }
}

/// `(1/N) Σ s(n) ∏_p u_p(n)`, predicted by `∏_p ∫ u_p dσ_p` unless the
/// multiplier is experimental.
pub fn average_with_multiplier(poly: &IntPoly, u: &LocalFactorSpec, mult: &MultiplierSpec, n: u64, b: u64) -> Result<AverageReport> {
    average_with_multiplier_with(poly, u, mult, n, b, par::DEFAULT_PARALLEL)
}

pub fn average_with_multiplier_with(
    poly: &IntPoly,
    u: &LocalFactorSpec,
    mult: &MultiplierSpec,
    n: u64,
    b: u64,
    parallel: bool,
) -> Result<AverageReport> {
    let sigma = match (&mult.kind, &mult.sigma) {
        (MultiplierKind::MobiusExperimental, _) => None,
        (_, Some(s)) => Some(s),
        (_, None) => return Err(Error::domain(format!("multiplier {} has no local measures", mult.label()))),
    };
    let s = |x: u64| {
        let w = (mult.s)(x);
        debug_assert!(w.norm_sqr() <= 1.0 + 1e-12);
        w
    };
    let sum = empirical_sum(poly, u, n, &s, parallel)?;
    let pred = match sigma {
        Some(sg) if u.min_level >= 2 => Some(predict_with(u, poly, b, sg, parallel)?),
        _ => None,
    };
    let mut rep = AverageReport::new(poly.to_string(), u, n, b, sum, pred.as_ref())?;
    rep.multiplier = Some(mult.label());
    Ok(rep)
}

/// Average of `∏_p u_p(x, y)` over coprime `(x, y) ∈ [-N, N]^2` in the
/// sector with `F(x, y) != 0`, optionally weighted by the indicator of a
/// primitive lattice (normalized by all coprime pairs, not those in it).
pub fn empirical_average_form(
    form: &BinForm,
    u: &LocalFactorSpec,
    n: u64,
    sector: Option<&Sector>,
    lattice: Option<&Lattice2>,
    b: u64,
) -> Result<AverageReport> {
    empirical_average_form_with(form, u, n, sector, lattice, b, par::DEFAULT_PARALLEL)
}

pub fn empirical_average_form_with(
    form: &BinForm,
    u: &LocalFactorSpec,
    n: u64,
    sector: Option<&Sector>,
    lattice: Option<&Lattice2>,
    b: u64,
    parallel: bool,
) -> Result<AverageReport> {
    check_form(form)?;
    if n < 1 {
        return Err(Error::domain("need N >= 1"));
    }
    let ni = i64::try_from(n).map_err(|_| Error::resource("N exceeds i64"))?;
    let xs: Vec<i64> = (-ni..=ni).collect();
    let rows = par::map_slice(&xs, parallel, |&x| -> Result<Sum> {
        let mut out = Sum::default();
        for y in -ni..=ni {
            if x.unsigned_abs().gcd(&y.unsigned_abs()) != 1 || sector.is_some_and(|s| !s.contains(x, y)) {
                continue;
            }
            let v = form.eval_i128(x as i128, y as i128).ok_or_else(|| Error::resource("form value exceeds i128"))?;
            if v == 0 {
                out.zeros += 1;
                continue;
            }
            out.samples += 1;
            if lattice.is_some_and(|l| !l.contains(x, y)) {
                continue;
            }
            let mut acc = Complex::new(1.0, 0.0);
            for (p, j) in prime_parts(v, u.min_level)? {
                let pi = p as i64;
                let class = if y.rem_euclid(pi) == 0 {
                    p
                } else {
                    let inv = modp::invm(y.rem_euclid(pi) as u64, p);
                    ((x.rem_euclid(pi) as u128 * inv as u128) % p as u128) as u64
                };
                acc *= u.value_f64(p, class, j)?;
            }
            out.total += acc;
        }
        Ok(out)
    });
    let sum = rows.into_iter().try_fold(Sum::default(), |a, b| Ok::<_, Error>(a.merge(b?)))?;
    let pred = if u.min_level >= 2 { Some(predict_form(u, form, b, lattice)?) } else { None };
    let mut rep = AverageReport::new(form.to_string(), u, n, b, sum, pred.as_ref())?;
    if let Some(l) = lattice {
        let (d1, s, d2) = l.hnf();
        rep.multiplier = Some(format!("lattice ({d1}, 0), ({s}, {d2})"));
    }
    Ok(rep)
}

/// The three-term comparison `|empirical - ∏_{p <= B}| <= tail + 2δ/N`.
#[derive(Debug, Clone, Serialize)]
pub struct PonchoCheck {
    pub report: AverageReport,
    /// Values divisible by `p^2` for some `p > sqrt(N)`.
    pub delta: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Runs [`empirical_average`] and measures `δ` with the census; the
/// sampling error at small primes is not part of the right-hand side.
pub fn poncho_check(poly: &IntPoly, u: &LocalFactorSpec, n: u64, b: u64) -> Result<PonchoCheck> {
    let mut report = empirical_average(poly, u, n, b)?;
    let delta = census::delta_census_univ(poly, n)?;
    let samples = report.samples as f64;
    let delta_term = 2.0 * (delta + report.zero_values) as f64 / samples;
    report.delta_term = Some(delta_term);
    let pred = report.predicted().ok_or_else(|| Error::domain("family has no prediction"))?;
    let lhs = (report.empirical() - pred).norm();
    let rhs = report.tail_slack.unwrap_or(f64::INFINITY) + report.truncation_slack.unwrap_or(0.0) + delta_term;
    Ok(PonchoCheck { report, delta, lhs, rhs, holds: lhs <= rhs })
}
