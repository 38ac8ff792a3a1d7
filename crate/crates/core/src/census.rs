//! Exhaustive censuses at desk scale: power-free values of polynomials and
//! forms, exceptional sets with a large square divisor, quadratic twists,
//! splitting types and the `R(α, d)` sums.
//!
//! Univariate scans divide every value by all primes up to a trial bound
//! `B` with `V < B^(m+1)`, where `V` bounds `|P(x)|` on the range. The
//! remainder then has at most `m` prime factors, all above `B`, so it is
//! divisible by an `m`-th power exactly when it is one.

use std::collections::BTreeMap;
use std::time::Instant;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eulerprod;
use crate::lattice::Sector;
use crate::localdens;
use crate::modp::{self, FpPoly};
use crate::numutil;
use crate::par;
use crate::poly::{factor_rational, BinForm, IntPoly};

pub(crate) const BLOCK: u64 = 1 << 16;
const MIN_TRIAL_BOUND: u64 = 10_000;
pub const MAX_TRIAL_BOUND: u64 = 100_000_000;
const MAX_R_ALPHA_X: u64 = 10_000_000;
/// Per-prime exceptional solutions allowed in a form census, per unit of
/// degree.
pub const FACIL_FACTOR: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxConvention {
    /// `1 <= x, y <= N`
    PositiveQuadrant,
    /// `-N <= x, y <= N`
    FullBox,
}

impl BoxConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoxConvention::PositiveQuadrant => "positive-quadrant",
            BoxConvention::FullBox => "full-box",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub poly: String,
    pub n: u64,
    pub m: u32,
    pub convention: Option<BoxConvention>,
    pub sector: Option<Sector>,
    pub coprime: bool,
    /// Arguments whose value is nonzero and `m`-th power free.
    pub observed: u64,
    /// Arguments with value zero, excluded from `observed`.
    pub zero_values: u64,
    /// Arguments scanned after the coprimality and sector filters.
    pub scanned: u64,
    pub main_lo: f64,
    pub main_hi: f64,
    pub euler_b: u64,
    pub method: String,
    pub trial_bound: u64,
    pub seconds: Option<f64>,
}

impl CensusReport {
    pub fn main(&self) -> f64 {
        0.5 * (self.main_lo + self.main_hi)
    }

    pub fn discrepancy(&self) -> f64 {
        self.observed as f64 - self.main()
    }

    pub fn discrepancy_rel(&self) -> f64 {
        self.discrepancy() / self.main()
    }
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    /// Cutoff of the exact part of the Euler product.
    pub euler_b: u64,
    /// Lower bound for the trial-division bound; raised as needed.
    pub trial_bound: Option<u64>,
    pub parallel: bool,
    pub timing: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { euler_b: 10_000, trial_bound: None, parallel: par::DEFAULT_PARALLEL, timing: false }
    }
}

fn check_squarefree(poly: &IntPoly) -> Result<()> {
    if poly.degree().is_none() {
        return Err(Error::domain("the zero polynomial has no square-free values"));
    }
    if !poly.is_squarefree() {
        return Err(Error::domain(format!("{poly} is not square-free")));
    }
    Ok(())
}

fn check_form(form: &BinForm) -> Result<()> {
    if !form.is_squarefree() {
        return Err(Error::domain(format!("{form} is not square-free")));
    }
    Ok(())
}

fn i128_coeffs(poly: &IntPoly) -> Result<Vec<i128>> {
    poly.to_i128_coeffs().ok_or_else(|| Error::resource("coefficients exceed i128"))
}

/// `Σ |a_i| n^i`, a bound for `|P(x)|` on `[0, n]`.
fn max_abs_value(coeffs: &[i128], n: u64) -> Result<u128> {
    let mut acc: u128 = 0;
    for &c in coeffs.iter().rev() {
        acc = acc
            .checked_mul(n as u128)
            .and_then(|a| a.checked_add(c.unsigned_abs()))
            .filter(|&a| a < 1 << 126)
            .ok_or_else(|| Error::resource("polynomial values exceed 126 bits"))?;
    }
    Ok(acc)
}

fn horner(coeffs: &[i128], x: u64) -> i128 {
    coeffs.iter().rev().fold(0i128, |acc, &c| acc * x as i128 + c)
}

const ZERO: u8 = 1;
const POWER: u8 = 2;
const BIG: u8 = 4;

/// Division sieve over `x in [1, n]`.
struct ValueSieve {
    coeffs: Vec<i128>,
    m: u32,
    b: u64,
    table: Vec<(u64, Vec<u64>)>,
}

impl ValueSieve {
    fn new(poly: &IntPoly, n: u64, m: u32, min_b: u64, parallel: bool) -> Result<Self> {
        let coeffs = i128_coeffs(poly)?;
        let v = max_abs_value(&coeffs, n)?;
        let b = min_b.max(numutil::iroot(v, m + 1) as u64 + 1);
        if b > MAX_TRIAL_BOUND {
            return Err(Error::resource(format!(
                "trial bound {b} exceeds {MAX_TRIAL_BOUND}; lower N"
            )));
        }
        let primes = numutil::primes_up_to(b);
        let table: Vec<(u64, Vec<u64>)> = par::map_slice(&primes, parallel, |&p| (p, localdens::roots_mod_p(poly, p)))
            .into_iter()
            .filter(|(_, r)| !r.is_empty())
            .collect();
        Ok(ValueSieve { coeffs, m, b, table })
    }

    /// Flags for `x in [lo, hi)`; `BIG` marks an `m`-th power of a prime
    /// above `t` dividing the value.
    fn scan(&self, lo: u64, hi: u64, t: u64) -> Vec<u8> {
        let len = (hi - lo) as usize;
        let mut flags = vec![0u8; len];
        let mut vals: Vec<u128> = (lo..hi)
            .enumerate()
            .map(|(i, x)| {
                let v = horner(&self.coeffs, x);
                if v == 0 {
                    flags[i] = ZERO;
                }
                v.unsigned_abs()
            })
            .collect();
        for (p, roots) in &self.table {
            let (p, pw) = (*p, *p as u128);
            for &r in roots {
                let mut x = lo + (r + p - lo % p) % p;
                while x < hi {
                    let i = (x - lo) as usize;
                    if flags[i] & ZERO == 0 {
                        let mut v = vals[i];
                        let mut e = 0;
                        while v % pw == 0 {
                            v /= pw;
                            e += 1;
                        }
                        vals[i] = v;
                        if e >= self.m {
                            flags[i] |= POWER;
                            if p > t {
                                flags[i] |= BIG;
                            }
                        }
                    }
                    x += p;
                }
            }
        }
        for (i, &v) in vals.iter().enumerate() {
            if flags[i] & ZERO == 0 && v > 1 && numutil::exact_root(v, self.m).is_some() {
                // the root is a prime above b >= t
                flags[i] |= POWER | BIG;
            }
        }
        flags
    }
}

/// Prime squares dividing polynomial values: `(p, v_p)` with `v_p >= 2`
/// for every `x` in a block, or `None` where the value is 0.
pub(crate) struct SquareParts(ValueSieve);

impl SquareParts {
    pub(crate) fn new(poly: &IntPoly, n: u64, parallel: bool) -> Result<Self> {
        check_squarefree(poly)?;
        Ok(SquareParts(ValueSieve::new(poly, n, 2, MIN_TRIAL_BOUND, parallel)?))
    }

    pub(crate) fn scan(&self, lo: u64, hi: u64) -> Vec<Option<Vec<(u64, u32)>>> {
        let sieve = &self.0;
        let len = (hi - lo) as usize;
        let mut vals: Vec<u128> = (lo..hi).map(|x| horner(&sieve.coeffs, x).unsigned_abs()).collect();
        let mut out: Vec<Option<Vec<(u64, u32)>>> =
            vals.iter().map(|&v| if v == 0 { None } else { Some(Vec::new()) }).collect();
        for (p, roots) in &sieve.table {
            let (p, pw) = (*p, *p as u128);
            for &r in roots {
                let mut x = lo + (r + p - lo % p) % p;
                while x < hi {
                    let i = (x - lo) as usize;
                    if let Some(parts) = out[i].as_mut() {
                        let mut v = vals[i];
                        let mut e = 0;
                        while v % pw == 0 {
                            v /= pw;
                            e += 1;
                        }
                        vals[i] = v;
                        if e >= 2 {
                            parts.push((p, e));
                        }
                    }
                    x += p;
                }
            }
        }
        for i in 0..len {
            if let Some(parts) = out[i].as_mut() {
                if vals[i] > 1 {
                    if let Some(q) = numutil::exact_root(vals[i], 2) {
                        parts.push((q as u64, 2));
                    }
                }
                parts.sort_unstable();
            }
        }
        out
    }
}

#[derive(Default)]
struct Tally {
    zero: u64,
    free: u64,
    big: u64,
}

fn tally(sieve: &ValueSieve, n: u64, t: u64, parallel: bool) -> Tally {
    let blocks = par::blocks(1, n, BLOCK);
    par::map_slice(&blocks, parallel, |&(lo, last)| {
        let mut out = Tally::default();
        for f in sieve.scan(lo, last + 1, t) {
            if f & ZERO != 0 {
                out.zero += 1;
            } else if f & POWER == 0 {
                out.free += 1;
            }
            if f & BIG != 0 {
                out.big += 1;
            }
        }
        out
    })
    .into_iter()
    .fold(Tally::default(), |a, b| Tally { zero: a.zero + b.zero, free: a.free + b.free, big: a.big + b.big })
}

/// `#{1 <= x <= n : P(x) != 0 is m-th power free}` with its main term.
pub fn count_powerfree_values(poly: &IntPoly, n: u64, m: u32) -> Result<CensusReport> {
    count_powerfree_values_with(poly, n, m, &CensusOptions::default())
}

pub fn count_powerfree_values_with(poly: &IntPoly, n: u64, m: u32, opts: &CensusOptions) -> Result<CensusReport> {
    check_squarefree(poly)?;
    if n < 1 || m < 2 {
        return Err(Error::domain("need N >= 1 and m >= 2"));
    }
    let start = Instant::now();
    let min_b = opts.trial_bound.unwrap_or(MIN_TRIAL_BOUND);
    let sieve = ValueSieve::new(poly, n, m, min_b, opts.parallel)?;
    let t = tally(&sieve, n, u64::MAX, opts.parallel);
    let est = eulerprod::density_univ_with(poly, opts.euler_b, m, opts.parallel)?;
    Ok(CensusReport {
        poly: poly.to_string(),
        n,
        m,
        convention: None,
        sector: None,
        coprime: false,
        observed: t.free,
        zero_values: t.zero,
        scanned: n,
        main_lo: n as f64 * est.lower_f64(),
        main_hi: n as f64 * est.upper_f64(),
        euler_b: opts.euler_b,
        method: "division-sieve".into(),
        trial_bound: sieve.b,
        seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMethod {
    /// Division sieve with trial bound at least the threshold.
    Sieve,
    /// Union of the progressions `x ≡ r (mod p^2)` over roots `r` modulo
    /// `p^2` for every prime `p` above the threshold.
    Progressions,
}

/// `#{1 <= x <= n : P(x) != 0, p^2 | P(x) for some p > sqrt(n)}`.
pub fn delta_census_univ(poly: &IntPoly, n: u64) -> Result<u64> {
    delta_census_univ_with(poly, n, numutil::isqrt(n as u128) as u64, DeltaMethod::Sieve, par::DEFAULT_PARALLEL)
}

/// As [`delta_census_univ`] with primes `p > threshold`.
pub fn delta_census_univ_with(poly: &IntPoly, n: u64, threshold: u64, method: DeltaMethod, parallel: bool) -> Result<u64> {
    check_squarefree(poly)?;
    if n < 1 {
        return Err(Error::domain("need N >= 1"));
    }
    match method {
        DeltaMethod::Sieve => {
            let sieve = ValueSieve::new(poly, n, 2, MIN_TRIAL_BOUND.max(threshold), parallel)?;
            Ok(tally(&sieve, n, threshold, parallel).big)
        }
        DeltaMethod::Progressions => delta_by_progressions(poly, n, threshold, parallel),
    }
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    a * b % m
}

fn eval_mod(coeffs: &[i128], x: u128, m: u128) -> u128 {
    coeffs.iter().rev().fold(0u128, |acc, &c| (mulmod(acc, x, m) + c.rem_euclid(m as i128) as u128) % m)
}

/// Roots of `P` modulo `p^2`, lifted from the roots modulo `p`.
fn roots_mod_p2(poly: &IntPoly, coeffs: &[i128], deriv: &[i128], p: u64) -> Vec<u64> {
    let (pw, q) = (p as u128, p as u128 * p as u128);
    let mut out = Vec::new();
    for r in localdens::roots_mod_p(poly, p) {
        let f = eval_mod(coeffs, r as u128, q);
        let d = eval_mod(deriv, r as u128, pw);
        if d != 0 {
            // P(r + tp) ≡ P(r) + tp P'(r) (mod p^2)
            let inv = modp::invm(d as u64, p) as u128;
            let t = (pw - (f / pw) % pw) % pw * inv % pw;
            out.push((r as u128 + t * pw) as u64);
        } else if f == 0 {
            out.extend((0..p).map(|t| r + t * p));
        }
    }
    out
}

fn delta_by_progressions(poly: &IntPoly, n: u64, threshold: u64, parallel: bool) -> Result<u64> {
    let coeffs = i128_coeffs(poly)?;
    let deriv = i128_coeffs(&poly.derivative())?;
    let v = max_abs_value(&coeffs, n)?;
    let top = numutil::isqrt(v) as u64;
    if top > MAX_TRIAL_BOUND {
        return Err(Error::resource(format!("primes up to {top} needed; lower N")));
    }
    let primes: Vec<u64> = numutil::primes_up_to(top).into_iter().filter(|&p| p > threshold).collect();
    let hits = par::map_slice(&primes, parallel, |&p| {
        let q = p * p;
        let mut xs = Vec::new();
        for r in roots_mod_p2(poly, &coeffs, &deriv, p) {
            let mut x = if r == 0 { q } else { r };
            while x <= n {
                xs.push(x);
                x += q;
            }
        }
        xs
    });
    let mut all: Vec<u64> = hits.into_iter().flatten().filter(|&x| horner(&coeffs, x) != 0).collect();
    all.sort_unstable();
    all.dedup();
    Ok(all.len() as u64)
}

fn box_range(n: u64, convention: BoxConvention) -> (i64, i64) {
    match convention {
        BoxConvention::PositiveQuadrant => (1, n as i64),
        BoxConvention::FullBox => (-(n as i64), n as i64),
    }
}

fn eval_form(form: &BinForm, x: i64, y: i64) -> Result<i128> {
    form.eval_i128(x as i128, y as i128).ok_or_else(|| Error::resource("form value exceeds i128"))
}

/// Pairs in the box with `F(x, y)` nonzero and square-free, optionally
/// restricted to coprime pairs and to a sector.
pub fn count_squarefree_form(
    form: &BinForm,
    n: u64,
    convention: BoxConvention,
    sector: Option<&Sector>,
    coprime: bool,
) -> Result<CensusReport> {
    count_squarefree_form_with(form, n, convention, sector, coprime, &CensusOptions::default())
}

pub fn count_squarefree_form_with(
    form: &BinForm,
    n: u64,
    convention: BoxConvention,
    sector: Option<&Sector>,
    coprime: bool,
    opts: &CensusOptions,
) -> Result<CensusReport> {
    check_form(form)?;
    if n < 1 {
        return Err(Error::domain("need N >= 1"));
    }
    let start = Instant::now();
    let (lo, hi) = box_range(n, convention);
    let xs: Vec<i64> = (lo..=hi).collect();
    let rows = par::map_slice(&xs, opts.parallel, |&x| -> Result<(u64, u64, u64)> {
        let (mut free, mut zero, mut scanned) = (0, 0, 0);
        for y in lo..=hi {
            if coprime && x.unsigned_abs().gcd(&y.unsigned_abs()) != 1 {
                continue;
            }
            if let Some(s) = sector {
                if !s.contains(x, y) {
                    continue;
                }
            }
            scanned += 1;
            let v = eval_form(form, x, y)?;
            if v == 0 {
                zero += 1;
            } else if numutil::factorize(v)?.is_squarefree() {
                free += 1;
            }
        }
        Ok((free, zero, scanned))
    });
    let (mut free, mut zero, mut scanned) = (0, 0, 0);
    for r in rows {
        let (f, z, s) = r?;
        free += f;
        zero += z;
        scanned += s;
    }
    let nf = n as f64;
    let area = match (convention, sector) {
        (BoxConvention::FullBox, None) => 4.0 * nf * nf,
        (BoxConvention::FullBox, Some(s)) => s.box_area(nf),
        (BoxConvention::PositiveQuadrant, None) => nf * nf,
        (BoxConvention::PositiveQuadrant, Some(s)) => s.quadrant_area(nf),
    };
    let est = if form.degree() == 0 {
        None
    } else {
        Some(eulerprod::density_form(form, opts.euler_b, coprime)?)
    };
    let (lo_d, hi_d) = est.map_or((0.0, 0.0), |e| (e.lower_f64(), e.upper_f64()));
    Ok(CensusReport {
        poly: form.to_string(),
        n,
        m: 2,
        convention: Some(convention),
        sector: sector.copied(),
        coprime,
        observed: free,
        zero_values: zero,
        scanned,
        main_lo: area * lo_d,
        main_hi: area * hi_d,
        euler_b: opts.euler_b,
        method: "pair-factorization".into(),
        trial_bound: 0,
        seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaFormReport {
    pub poly: String,
    pub n: u64,
    /// Primes counted are those above this.
    pub threshold: u64,
    pub count: u64,
    /// Prime to number of coprime pairs with `p^2 | F(x, z)`.
    pub profile: BTreeMap<u128, u64>,
    pub facil_bound: u64,
    pub facil_violations: Vec<(u128, u64)>,
}

/// Coprime pairs in `[-n, n]^2` with `p^2 | F(x, z) != 0` for some `p > n`.
pub fn delta_census_form(form: &BinForm, n: u64) -> Result<DeltaFormReport> {
    delta_census_form_with(form, n, n, par::DEFAULT_PARALLEL)
}

pub fn delta_census_form_with(form: &BinForm, n: u64, threshold: u64, parallel: bool) -> Result<DeltaFormReport> {
    check_form(form)?;
    let ni = n as i64;
    let xs: Vec<i64> = (-ni..=ni).collect();
    let rows = par::map_slice(&xs, parallel, |&x| -> Result<(u64, Vec<u128>)> {
        let mut count = 0;
        let mut hits = Vec::new();
        for z in -ni..=ni {
            if x.unsigned_abs().gcd(&z.unsigned_abs()) != 1 {
                continue;
            }
            let v = eval_form(form, x, z)?;
            if v == 0 {
                continue;
            }
            let f = numutil::factorize(v)?;
            let big: Vec<u128> =
                f.primes.iter().filter(|&&(p, e)| e >= 2 && p > threshold as u128).map(|&(p, _)| p).collect();
            if !big.is_empty() {
                count += 1;
                hits.extend(big);
            }
        }
        Ok((count, hits))
    });
    let mut count = 0;
    let mut profile: BTreeMap<u128, u64> = BTreeMap::new();
    for r in rows {
        let (c, hits) = r?;
        count += c;
        for p in hits {
            *profile.entry(p).or_default() += 1;
        }
    }
    let facil_bound = FACIL_FACTOR * form.degree() as u64;
    let facil_violations = profile.iter().filter(|(_, &c)| c > facil_bound).map(|(&p, &c)| (p, c)).collect();
    Ok(DeltaFormReport { poly: form.to_string(), n, threshold, count, profile, facil_bound, facil_violations })
}

/// `S(d) = #{coprime (x, z) in [-n, n]^2, y > 0 : d y^2 = F(x, z)}` for every
/// square-free `d` that occurs.
#[derive(Debug, Clone, Serialize)]
pub struct TwistTable {
    pub poly: String,
    pub n: u64,
    pub s: BTreeMap<i128, u64>,
    /// Coprime pairs with `F(x, z) = 0` (solutions with `y = 0` for every `d`).
    pub zero_pairs: u64,
    pub coprime_pairs: u64,
    /// Largest `|F(x, z)|` over the coprime pairs.
    pub max_abs_value: u128,
}

impl TwistTable {
    pub fn total_solutions(&self) -> u64 {
        self.s.values().sum()
    }

    /// Every nonzero value has exactly one kernel.
    pub fn is_conserved(&self) -> bool {
        self.total_solutions() + self.zero_pairs == self.coprime_pairs
    }

    /// `Σ_{0 < |d| <= m} S(d)`.
    pub fn sum_up_to(&self, m: u128) -> u64 {
        self.s.iter().filter(|(d, _)| d.unsigned_abs() <= m).map(|(_, &c)| c).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,S_d\n");
        for (d, c) in &self.s {
            out.push_str(&format!("{d},{c}\n"));
        }
        out
    }
}

pub fn twist_census(form: &BinForm, n: u64) -> Result<TwistTable> {
    twist_census_with(form, n, par::DEFAULT_PARALLEL)
}

pub fn twist_census_with(form: &BinForm, n: u64, parallel: bool) -> Result<TwistTable> {
    check_form(form)?;
    if form.degree() < 3 {
        return Err(Error::domain("twist census needs degree at least 3"));
    }
    let ni = n as i64;
    let xs: Vec<i64> = (-ni..=ni).collect();
    type Row = (BTreeMap<i128, u64>, u64, u64, u128);
    let rows = par::map_slice(&xs, parallel, |&x| -> Result<Row> {
        let mut s = BTreeMap::new();
        let (mut zero, mut pairs, mut top) = (0, 0, 0u128);
        for z in -ni..=ni {
            if x.unsigned_abs().gcd(&z.unsigned_abs()) != 1 {
                continue;
            }
            pairs += 1;
            let v = eval_form(form, x, z)?;
            top = top.max(v.unsigned_abs());
            if v == 0 {
                zero += 1;
                continue;
            }
            let (d, _) = numutil::squarefree_decomposition(v)?;
            *s.entry(d).or_default() += 1;
        }
        Ok((s, zero, pairs, top))
    });
    let mut table =
        TwistTable { poly: form.to_string(), n, s: BTreeMap::new(), zero_pairs: 0, coprime_pairs: 0, max_abs_value: 0 };
    for r in rows {
        let (s, zero, pairs, top) = r?;
        for (d, c) in s {
            *table.s.entry(d).or_default() += c;
        }
        table.zero_pairs += zero;
        table.coprime_pairs += pairs;
        table.max_abs_value = table.max_abs_value.max(top);
    }
    Ok(table)
}

/// The split `δ(N) <= Σ_{0<|d|<=M} S(d) + Σ_{N<p<=sqrt(A/M)} #{p^2 | F}`.
#[derive(Debug, Clone, Serialize)]
pub struct TwistDecomposition {
    pub n: u64,
    pub m: u128,
    pub delta: u64,
    pub small_twists: u64,
    pub large_primes: u64,
    pub holds: bool,
}

pub fn twist_decomposition(form: &BinForm, n: u64, m: u128) -> Result<TwistDecomposition> {
    if m < 1 {
        return Err(Error::domain("need M >= 1"));
    }
    let table = twist_census(form, n)?;
    let delta = delta_census_form(form, n)?;
    let a = table.max_abs_value;
    let small_twists = table.sum_up_to(m);
    let large_primes =
        delta.profile.iter().filter(|(&p, _)| p.saturating_mul(p).saturating_mul(m) <= a).map(|(_, &c)| c).sum();
    Ok(TwistDecomposition {
        n,
        m,
        delta: delta.count,
        small_twists,
        large_primes,
        holds: delta.count <= small_twists + large_primes,
    })
}

fn check_irreducible(poly: &IntPoly) -> Result<()> {
    let f = factor_rational(poly)?;
    if f.factors.len() != 1 || f.factors[0].1 != 1 {
        return Err(Error::domain(format!("{poly} is not irreducible")));
    }
    Ok(())
}

/// Degrees of the irreducible factors of `P` modulo an unramified `p`.
pub fn splitting_type(poly: &IntPoly, p: u64) -> Result<Vec<usize>> {
    if poly.degree().unwrap_or(0) < 1 {
        return Err(Error::domain("splitting type needs degree at least 1"));
    }
    if !numutil::is_prime(p as u128)? {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    check_irreducible(poly)?;
    let bad = poly.discriminant()? * poly.lead();
    if (bad % num_bigint::BigInt::from(p)) == num_bigint::BigInt::from(0) {
        return Err(Error::domain(format!("{p} divides the discriminant or leading coefficient; exclude it")));
    }
    Ok(modp::factor_degrees(&FpPoly::from_bigint(poly.coeffs(), p)))
}

/// Number of primes above `p` and whether one of them has degree 1, read
/// off from the distinct factors of the homogenized polynomial mod `p`.
fn prime_data(poly: &IntPoly, p: u64) -> (usize, bool) {
    let fp = FpPoly::from_bigint(poly.coeffs(), p);
    let mut degs = modp::distinct_factor_degrees(&fp);
    if fp.degree() < poly.degree() {
        // the factor z of the homogenized form
        degs.push(1);
    }
    (degs.len(), degs.contains(&1))
}

#[derive(Debug, Clone, Serialize)]
pub struct RAlphaReport {
    pub poly: String,
    pub alpha: f64,
    pub x: u64,
    pub sum: f64,
    /// Exponent `2^(2α)/3 - 1` of `log X` in the expected growth.
    pub log_exponent: f64,
    /// `(X_k, S(X_k), S(X_k) / (X_k (log X_k)^exponent))`.
    pub table: Vec<(u64, f64, f64)>,
}

/// `Σ_{d <= X square-free} R(α, d)` with `R(α, d) = 2^(α(ω_K(d) - ω(d)))`
/// when no prime of `d` is unsplit and `0` otherwise.
pub fn r_alpha_sum(poly: &IntPoly, alpha: f64, x: u64) -> Result<RAlphaReport> {
    r_alpha_sum_with(poly, alpha, x, par::DEFAULT_PARALLEL)
}

pub fn r_alpha_sum_with(poly: &IntPoly, alpha: f64, x: u64, parallel: bool) -> Result<RAlphaReport> {
    if poly.degree() != Some(3) {
        return Err(Error::domain("R(α, d) sums need a cubic"));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain("need α > 0"));
    }
    if !(1..=MAX_R_ALPHA_X).contains(&x) {
        return Err(Error::domain(format!("need 1 <= X <= {MAX_R_ALPHA_X}")));
    }
    check_irreducible(poly)?;
    let poly = poly.primitive_part();
    let primes = numutil::primes_up_to(x);
    // code 0: unsplit, otherwise the number of primes above p
    let codes = par::map_slice(&primes, parallel, |&p| {
        let (g, split) = prime_data(&poly, p);
        if split {
            g as u8
        } else {
            0
        }
    });
    let mut code_of = vec![0u8; x as usize + 1];
    for (&p, &c) in primes.iter().zip(&codes) {
        code_of[p as usize] = c;
    }
    let weight: Vec<f64> = (0..=8).map(|g| if g == 0 { 0.0 } else { (alpha * (g as f64 - 1.0)).exp2() }).collect();
    let small: Vec<u64> = primes.iter().copied().take_while(|&p| p * p <= x).collect();
    let mut cuts: Vec<u64> = Vec::new();
    let mut k = 10;
    while k < x {
        cuts.push(k);
        k *= 10;
    }
    cuts.push(x);
    let mut bounds = vec![1u64];
    for &(_, hi) in &par::blocks(1, x + 1, BLOCK) {
        bounds.push(hi);
    }
    bounds.extend(cuts.iter().map(|c| c + 1));
    bounds.sort_unstable();
    bounds.dedup();
    let blocks: Vec<(u64, u64)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
    let sums = par::map_slice(&blocks, parallel, |&(lo, hi)| {
        let len = (hi - lo) as usize;
        let mut rem: Vec<u64> = (lo..hi).collect();
        let mut val = vec![1f64; len];
        for &p in &small {
            let mut d = lo.div_ceil(p) * p;
            while d < hi {
                let i = (d - lo) as usize;
                if d % (p * p) == 0 {
                    val[i] = 0.0;
                } else {
                    val[i] *= weight[code_of[p as usize] as usize];
                    rem[i] /= p;
                }
                d += p;
            }
        }
        let mut s = 0.0;
        for i in 0..len {
            if val[i] != 0.0 && rem[i] > 1 {
                val[i] *= weight[code_of[rem[i] as usize] as usize];
            }
            s += val[i];
        }
        s
    });
    let log_exponent = (2.0 * alpha).exp2() / 3.0 - 1.0;
    let mut table = Vec::new();
    let mut acc = 0.0;
    let mut ci = 0;
    for (&(_, hi), s) in blocks.iter().zip(sums) {
        acc += s;
        while ci < cuts.len() && cuts[ci] + 1 == hi {
            let xk = cuts[ci] as f64;
            let norm = if xk > 1.0 { acc / (xk * xk.ln().powf(log_exponent)) } else { f64::NAN };
            table.push((cuts[ci], acc, norm));
            ci += 1;
        }
    }
    Ok(RAlphaReport { poly: poly.to_string(), alpha, x, sum: acc, log_exponent, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> IntPoly {
        IntPoly::parse(s).unwrap()
    }

    fn f(s: &str) -> BinForm {
        BinForm::parse(s).unwrap()
    }

    fn brute_powerfree(coeffs: &[i128], n: u64, m: u32) -> u64 {
        (1..=n)
            .filter(|&x| {
                let v = horner(coeffs, x);
                v != 0 && numutil::factorize(v).unwrap().primes.iter().all(|&(_, e)| e < m)
            })
            .count() as u64
    }

    #[test]
    fn counts_across_block_boundaries() {
        // 2 * 65536 + 5 crosses two block edges; x - 65536 vanishes on one
        for (poly, n) in [("x^2 + 1", 2 * BLOCK + 5), ("x - 65536", BLOCK + 3)] {
            let poly = p(poly);
            let coeffs = i128_coeffs(&poly).unwrap();
            let r = count_powerfree_values(&poly, n, 2).unwrap();
            assert_eq!(r.observed, brute_powerfree(&coeffs, n, 2));
        }
        assert_eq!(count_powerfree_values(&p("x - 65536"), BLOCK + 3, 2).unwrap().zero_values, 1);
    }

    #[test]
    fn identity_counts() {
        assert_eq!(count_powerfree_values(&p("x"), 100, 2).unwrap().observed, 61);
        assert_eq!(count_powerfree_values(&p("x"), 100, 3).unwrap().observed, 85);
        let r = count_powerfree_values(&p("x"), 1_000_000, 2).unwrap();
        assert_eq!(r.observed, numutil::squarefree_table(1_000_000).count());
        assert!(r.main_lo <= r.main_hi);
    }

    #[test]
    fn cubic_matches_factorization_oracle() {
        let r = count_powerfree_values(&p("x^3 + 2"), 50, 2).unwrap();
        assert_eq!(r.observed, brute_powerfree(&[2, 0, 0, 1], 50, 2));
        assert_eq!(r.observed, 47);
        for (s, c) in [("x^2 + 1", vec![1, 0, 1]), ("x^3 - x + 9", vec![9, -1, 0, 1]), ("2x^2 - 18", vec![-18, 0, 2])] {
            for m in [2, 3] {
                let r = count_powerfree_values(&p(s), 3000, m).unwrap();
                assert_eq!(r.observed, brute_powerfree(&c, 3000, m), "{s} m={m}");
            }
        }
    }

    #[test]
    fn zeros_are_counted_separately() {
        let r = count_powerfree_values(&p("x^2 - 9"), 10, 2).unwrap();
        assert_eq!(r.zero_values, 1);
        assert_eq!(r.observed, brute_powerfree(&[-9, 0, 1], 10, 2));
    }

    #[test]
    fn non_squarefree_polynomial_rejected() {
        assert!(matches!(count_powerfree_values(&p("x^2"), 10, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let poly = p("x^3 + 2");
        let seq = CensusOptions { parallel: false, ..Default::default() };
        let a = count_powerfree_values_with(&poly, 200_000, 2, &seq).unwrap();
        let b = count_powerfree_values(&poly, 200_000, 2).unwrap();
        assert_eq!(a.observed, b.observed);
        assert_eq!(a.seconds, None);
    }

    #[test]
    fn delta_methods_agree() {
        assert_eq!(delta_census_univ(&p("x"), 1000).unwrap(), 0);
        for s in ["x^3 + 2", "x^2 + 1", "x^3 - 3x + 1", "x^2 + x + 41", "7x^2 + 3"] {
            for n in [100, 777, 2000] {
                let t = numutil::isqrt(n as u128) as u64;
                let a = delta_census_univ_with(&p(s), n, t, DeltaMethod::Sieve, true).unwrap();
                let b = delta_census_univ_with(&p(s), n, t, DeltaMethod::Progressions, false).unwrap();
                assert_eq!(a, b, "{s} N={n}");
            }
        }
    }

    #[test]
    fn delta_brute_force() {
        // x^2 + 1 at x <= 100: values with p^2 | x^2 + 1 for p > 10
        let mut brute = 0;
        for x in 1..=100i128 {
            let v = x * x + 1;
            if numutil::factorize(v).unwrap().primes.iter().any(|&(q, e)| q > 10 && e >= 2) {
                brute += 1;
            }
        }
        assert_eq!(delta_census_univ(&p("x^2 + 1"), 100).unwrap(), brute);
    }

    #[test]
    fn form_counts() {
        // F = x without coprimality: 19 square-free x times 30 values of y
        let r = count_squarefree_form(&f("x"), 30, BoxConvention::PositiveQuadrant, None, false).unwrap();
        assert_eq!(r.observed, 570);
        let r = count_squarefree_form(&f("x"), 30, BoxConvention::PositiveQuadrant, None, true).unwrap();
        let mut brute = 0;
        for x in 1..=30u64 {
            for y in 1..=30u64 {
                if x.gcd(&y) == 1 && numutil::mobius(x as i128).unwrap() != 0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(r.observed, brute);
        let lower = Sector::between((-1, 0), (1, 0)).unwrap();
        let r = count_squarefree_form(&f("x*z"), 10, BoxConvention::PositiveQuadrant, Some(&lower), true).unwrap();
        assert_eq!((r.observed, r.scanned, r.main()), (0, 0, 0.0));
    }

    #[test]
    fn full_box_product_form() {
        let r = count_squarefree_form(&f("x*z"), 10, BoxConvention::FullBox, None, true).unwrap();
        let mut brute = 0;
        for x in -10i64..=10 {
            for z in -10i64..=10 {
                let v = (x * z) as i128;
                if x.unsigned_abs().gcd(&z.unsigned_abs()) == 1 && v != 0 && numutil::mobius(v.abs()).unwrap() != 0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(r.observed, brute);
        assert_eq!(r.zero_values, 4);
    }

    #[test]
    fn delta_form_examples() {
        let r = delta_census_form(&f("x"), 50).unwrap();
        assert_eq!(r.count, 0);
        let form = f("x^3 + 2z^3");
        let r = delta_census_form(&form, 30).unwrap();
        let mut brute = 0;
        for x in -30i64..=30 {
            for z in -30i64..=30 {
                if x.unsigned_abs().gcd(&z.unsigned_abs()) != 1 {
                    continue;
                }
                let v = form.eval_i128(x as i128, z as i128).unwrap();
                if v != 0 && (31..=i128::MAX).take_while(|q| q * q <= v.abs()).any(|q| v % (q * q) == 0) {
                    brute += 1;
                }
            }
        }
        assert_eq!(r.count, brute);
        assert!(r.facil_violations.is_empty());
        assert!(r.profile.values().all(|&c| c <= 36));
        assert_eq!(r.profile.values().sum::<u64>() >= r.count, true);
    }

    #[test]
    fn twist_examples() {
        let form = f("x^3 + 2z^3");
        let t = twist_census(&form, 2).unwrap();
        assert!(t.s.contains_key(&3));
        assert!(t.s.contains_key(&10));
        assert!(t.is_conserved());
        let t = twist_census(&form, 40).unwrap();
        assert!(t.is_conserved());
        assert!(t.to_csv().starts_with("d,S_d\n"));
        assert!(twist_census(&f("x*z"), 5).is_err());
        for m in [1, 10, 1000, 1_000_000] {
            assert!(twist_decomposition(&form, 30, m).unwrap().holds);
        }
    }

    #[test]
    fn splitting_examples() {
        let cube = p("x^3 - 2");
        assert_eq!(splitting_type(&cube, 5).unwrap(), vec![1, 2]);
        assert_eq!(splitting_type(&cube, 7).unwrap(), vec![3]);
        let brute = (0..31u64).filter(|&x| (x * x * x + 29) % 31 == 0).count();
        assert_eq!(brute, 3);
        assert_eq!(splitting_type(&cube, 31).unwrap(), vec![1, 1, 1]);
        assert!(splitting_type(&cube, 3).is_err());
        assert!(splitting_type(&p("x^2 - 1"), 5).is_err());
        for q in numutil::primes_up_to(200).into_iter().filter(|&q| q > 3) {
            assert_eq!(splitting_type(&cube, q).unwrap().iter().sum::<usize>(), 3);
        }
    }

    #[test]
    fn r_alpha_small_cases() {
        let cube = p("x^3 - 2");
        assert_eq!(r_alpha_sum(&cube, 0.7, 1).unwrap().sum, 1.0);
        // independent oracle: roots mod p by brute force, 2 and 3 totally ramified
        let g = |q: u64| -> Option<u32> {
            if q == 2 || q == 3 {
                return Some(1);
            }
            match (0..q).filter(|&x| (x * x * x + q * q - 2) % q == 0).count() {
                0 => None,
                1 => Some(2),
                _ => Some(3),
            }
        };
        let mut oracle = 0u64;
        for d in 1..=100u64 {
            let fct = numutil::factorize(d as i128).unwrap();
            if !fct.is_squarefree() {
                continue;
            }
            let mut r = Some(1u64);
            for &(q, _) in &fct.primes {
                r = r.and_then(|acc| g(q as u64).map(|gq| acc << (gq - 1)));
            }
            oracle += r.unwrap_or(0);
        }
        let rep = r_alpha_sum(&cube, 1.0, 100).unwrap();
        assert_eq!(rep.sum, oracle as f64);
        assert_eq!(rep.table.last().unwrap().1, rep.sum);
        let seq = r_alpha_sum_with(&cube, 1.0, 100_000, false).unwrap();
        let par = r_alpha_sum_with(&cube, 1.0, 100_000, true).unwrap();
        assert_eq!(seq.sum, par.sum);
        assert_eq!(seq.table.len(), 5);
    }
}
