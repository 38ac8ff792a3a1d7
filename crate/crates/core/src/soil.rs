//! Finite soils `(P, A, r, f)`: the Möbius sieve truncated at `h(d) <= M`
//! and the two error bounds for it, all evaluated exactly on finite
//! instances.
//!
//! Subsets of `P` are bitmasks (at most 64 primes), `h` is multiplicative
//! with `h({p}) >= 2`, and `f` takes Gaussian-integer values on a common
//! integer `scale`, so every sum is exact. Sums over subsets are always
//! taken over the subsets of some `r(a)`, never over all of `2^P`, except in
//! the main term of [`yugo_bound`] which needs every subset.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::localdens;
use crate::numutil;
use crate::par;
use crate::poly::IntPoly;

pub type Mask = u64;
pub type SoilFn = Arc<dyn Fn(usize, Mask) -> Complex<i64> + Send + Sync>;
pub type GFn = Arc<dyn Fn(Mask, Mask) -> Complex<f64> + Send + Sync>;

const MAX_R_SIZE: u32 = 20;
const MAX_YUGO_PRIMES: usize = 16;

/// `μ(S) = (-1)^#S`.
pub fn mu(s: Mask) -> i64 {
    if s.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone)]
pub struct SoilSpec {
    /// `h({p})` for each prime label, each at least 2.
    pub weights: Vec<u64>,
    /// `r(a)` for each element of the ground set.
    pub r: Vec<Mask>,
    /// `f(a, d) * scale`.
    pub f: SoilFn,
    pub scale: i64,
    /// Declared bound `C3 >= |f(a, d)|` (unscaled).
    pub f_bound: f64,
}

impl std::fmt::Debug for SoilSpec {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("SoilSpec")
            .field("weights", &self.weights)
            .field("ground_size", &self.r.len())
            .field("scale", &self.scale)
            .field("f_bound", &self.f_bound)
            .finish()
    }
}

/// Iterates all submasks of `m`, including `0` and `m`.
fn submasks(m: Mask) -> impl Iterator<Item = Mask> {
    let mut s = m;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = s;
        if s == 0 {
            done = true;
        } else {
            s = (s - 1) & m;
        }
        Some(out)
    })
}

fn to_c64(z: Complex<i128>, scale: i64) -> Complex<f64> {
    Complex::new(z.re as f64 / scale as f64, z.im as f64 / scale as f64)
}

impl SoilSpec {
    pub fn new(weights: Vec<u64>, r: Vec<Mask>, f: SoilFn, scale: i64, f_bound: f64) -> Result<Self> {
        if weights.len() > 64 {
            return Err(Error::domain("at most 64 primes are supported"));
        }
        if weights.iter().any(|&w| w < 2) {
            return Err(Error::domain("every weight h({p}) must be at least 2"));
        }
        let full = if weights.len() == 64 { u64::MAX } else { (1u64 << weights.len()) - 1 };
        if r.iter().any(|&m| m & !full != 0) {
            return Err(Error::domain("r(a) mentions a prime outside P"));
        }
        if scale <= 0 {
            return Err(Error::domain("scale must be positive"));
        }
        Ok(SoilSpec { weights, r, f, scale, f_bound })
    }

    pub fn prime_count(&self) -> usize {
        self.weights.len()
    }

    pub fn full_mask(&self) -> Mask {
        if self.weights.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.weights.len()) - 1
        }
    }

    /// Multiplicative weight `h(d)`, saturating.
    pub fn h(&self, d: Mask) -> u128 {
        let mut acc: u128 = 1;
        let mut m = d;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            acc = acc.saturating_mul(self.weights[i] as u128);
            m &= m - 1;
        }
        acc
    }

    fn f_checked(&self, a: usize, d: Mask) -> Result<Complex<i64>> {
        let v = (self.f)(a, d);
        let norm = ((v.re as f64).hypot(v.im as f64)) / self.scale as f64;
        if norm > self.f_bound * (1.0 + 1e-12) {
            return Err(Error::domain(format!("|f({a}, {d:#b})| = {norm} exceeds the declared bound")));
        }
        Ok(v)
    }

    /// `Σ_a f(a, r(a))`, scaled.
    pub fn direct_sum_scaled(&self) -> Result<Complex<i128>> {
        let mut acc = Complex::new(0i128, 0);
        for (a, &ra) in self.r.iter().enumerate() {
            let v = self.f_checked(a, ra)?;
            acc += Complex::new(v.re as i128, v.im as i128);
        }
        Ok(acc)
    }

    /// `Σ_a f(a, r(a))`.
    pub fn direct_sum(&self) -> Result<Complex<f64>> {
        Ok(to_c64(self.direct_sum_scaled()?, self.scale))
    }

    /// `A_{d1,d2} = Σ_{r(a) ⊇ d1} f(a, d2)`, scaled.
    pub fn a_sum_scaled(&self, d1: Mask, d2: Mask) -> Result<Complex<i128>> {
        if d2 & !d1 != 0 {
            return Err(Error::domain("A_{d1,d2} needs d2 ⊆ d1"));
        }
        let mut acc = Complex::new(0i128, 0);
        for (a, &ra) in self.r.iter().enumerate() {
            if ra & d1 == d1 {
                let v = self.f_checked(a, d2)?;
                acc += Complex::new(v.re as i128, v.im as i128);
            }
        }
        Ok(acc)
    }

    pub fn a_sum(&self, d1: Mask, d2: Mask) -> Result<Complex<f64>> {
        Ok(to_c64(self.a_sum_scaled(d1, d2)?, self.scale))
    }

    /// `S_d = #{a : r(a) ⊇ d}`.
    pub fn s(&self, d: Mask) -> u64 {
        self.r.iter().filter(|&&ra| ra & d == d).count() as u64
    }

    /// Tabulates, over all `a` and all `d ⊆ r(a)`, the quantities every
    /// sweep needs.
    pub fn profile(&self) -> Result<SoilProfile> {
        self.profile_with(par::DEFAULT_PARALLEL)
    }

    pub fn profile_with(&self, parallel: bool) -> Result<SoilProfile> {
        if let Some(&big) = self.r.iter().find(|m| m.count_ones() > MAX_R_SIZE) {
            return Err(Error::resource(format!(
                "|r(a)| = {} exceeds {MAX_R_SIZE}",
                big.count_ones()
            )));
        }
        let per_a = par::map_range(self.r.len(), parallel, |a| -> Result<Vec<(u128, u32, Complex<i128>)>> {
            let ra = self.r[a];
            // Möbius transform over the subsets of r(a):
            // inner(d) = Σ_{d' ⊆ d} μ(d - d') f(a, d')
            let bits: Vec<u32> = (0..64).filter(|i| ra >> i & 1 == 1).collect();
            let k = bits.len();
            let expand = |local: usize| -> Mask {
                bits.iter().enumerate().filter(|(j, _)| local >> j & 1 == 1).map(|(_, &b)| 1u64 << b).sum()
            };
            let mut inner: Vec<Complex<i128>> = Vec::with_capacity(1 << k);
            for local in 0..1usize << k {
                let v = self.f_checked(a, expand(local))?;
                inner.push(Complex::new(v.re as i128, v.im as i128));
            }
            for j in 0..k {
                for local in 0..1usize << k {
                    if local >> j & 1 == 1 {
                        let lower = inner[local ^ (1 << j)];
                        inner[local] -= lower;
                    }
                }
            }
            Ok((0..1usize << k)
                .map(|local| {
                    let d = expand(local);
                    (self.h(d), d.count_ones(), inner[local])
                })
                .collect())
        });
        let mut by_h: BTreeMap<u128, Complex<i128>> = BTreeMap::new();
        let mut s_by_h: BTreeMap<(u128, u32), u64> = BTreeMap::new();
        let mut s_single: BTreeMap<usize, u64> = BTreeMap::new();
        for (a, rows) in per_a.into_iter().enumerate() {
            for (h, card, inner) in rows? {
                *by_h.entry(h).or_default() += inner;
                *s_by_h.entry((h, card)).or_default() += 1;
            }
            let mut m = self.r[a];
            while m != 0 {
                *s_single.entry(m.trailing_zeros() as usize).or_default() += 1;
                m &= m - 1;
            }
        }
        Ok(SoilProfile {
            direct: self.direct_sum_scaled()?,
            scale: self.scale,
            f_bound: self.f_bound,
            weights: self.weights.clone(),
            by_h,
            s_by_h,
            s_single,
        })
    }

    /// `Σ_{h(d) <= M} Σ_{d' ⊆ d} μ(d - d') A_{d,d'}`.
    pub fn truncated_estimate(&self, m: u128) -> Result<Complex<f64>> {
        Ok(self.profile()?.truncated_estimate(m))
    }

    /// Error bound for [`SoilSpec::truncated_estimate`].
    pub fn ridd_bound(&self, m: u128) -> Result<f64> {
        Ok(self.profile()?.ridd_bound(m))
    }
}

/// Aggregates of a soil that make every `M` cheap to evaluate.
#[derive(Debug, Clone)]
pub struct SoilProfile {
    direct: Complex<i128>,
    scale: i64,
    f_bound: f64,
    weights: Vec<u64>,
    /// `Σ_a Σ_{d ⊆ r(a), h(d) = key} Σ_{d'} μ(d - d') f(a, d')`, scaled.
    by_h: BTreeMap<u128, Complex<i128>>,
    /// `Σ_{h(d) = h, #d = k} S_d`.
    s_by_h: BTreeMap<(u128, u32), u64>,
    /// `S_{{p}}` by prime index.
    s_single: BTreeMap<usize, u64>,
}

impl SoilProfile {
    pub fn direct_sum(&self) -> Complex<f64> {
        to_c64(self.direct, self.scale)
    }

    pub fn truncated_scaled(&self, m: u128) -> Complex<i128> {
        self.by_h.range(..=m).map(|(_, v)| *v).sum()
    }

    pub fn truncated_estimate(&self, m: u128) -> Complex<f64> {
        to_c64(self.truncated_scaled(m), self.scale)
    }

    /// Exact error `|direct - truncated(M)|`.
    pub fn error(&self, m: u128) -> f64 {
        let e = self.direct - self.truncated_scaled(m);
        (e.re as f64).hypot(e.im as f64) / self.scale as f64
    }

    /// `(Σ_{M < h(d) <= M^2} (3^#d + 3) S_d + 2 Σ_{h({p}) > M^2} S_{{p}}) C3`.
    ///
    /// The factor 2 on the last sum is what the argument gives: for `a`
    /// whose `r(a)` holds a prime with `h({p}) > M`, the difference
    /// `f(a, r(a)) - f(a, π(r(a)))` can reach `2 max |f|` when `f` changes
    /// sign. Primes with `M < h({p}) <= M^2` are covered by the `+3`.
    pub fn ridd_bound(&self, m: u128) -> f64 {
        let m2 = m.saturating_mul(m);
        let mut total = 0f64;
        for (&(h, card), &s) in &self.s_by_h {
            if h > m && h <= m2 {
                total += (3f64.powi(card as i32) + 3.0) * s as f64;
            }
        }
        for (&i, &s) in &self.s_single {
            if self.weights[i] as u128 > m2 {
                total += 2.0 * s as f64;
            }
        }
        total * self.f_bound
    }

    /// The bound with coefficient 1 on the large-prime sum, as sometimes
    /// stated; valid when `f` takes values in `[0, C3]`.
    pub fn ridd_bound_nonnegative(&self, m: u128) -> f64 {
        let m2 = m.saturating_mul(m);
        let extra: f64 = self
            .s_single
            .iter()
            .filter(|(&i, _)| self.weights[i] as u128 > m2)
            .map(|(_, &s)| s as f64)
            .sum();
        self.ridd_bound(m) - extra * self.f_bound
    }

    /// Values of `M` at which the truncated sum or the bound can change,
    /// clipped to `[1, h(P)]`.
    pub fn breakpoints(&self) -> Vec<u128> {
        let full = self.weights.iter().fold(1u128, |acc, &w| acc.saturating_mul(w as u128));
        let mut pts = vec![1u128, full];
        let hs = self.s_by_h.keys().map(|&(h, _)| h).chain(self.weights.iter().map(|&w| w as u128));
        for h in hs {
            let r = numutil::isqrt(h);
            pts.extend([h.saturating_sub(1), h, r.saturating_sub(1), r, r + 1]);
        }
        pts.retain(|&m| m >= 1 && m <= full);
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// Constants and main-term data of the hypotheses (A1) and (A2):
/// `S_d <= C0 X C1^#d / h(d) + C0 C2^#d` and
/// `A_{d1,d2} = X g(d1, d2) / h(d1) + r_{d1,d2}`.
#[derive(Clone)]
pub struct SieveBoundConstants {
    pub x: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub m0: u128,
    pub g: GFn,
}

impl std::fmt::Debug for SieveBoundConstants {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("SieveBoundConstants")
            .field("x", &self.x)
            .field("c0", &self.c0)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("c3", &self.c3)
            .field("c4", &self.c4)
            .field("m0", &self.m0)
            .finish()
    }
}

impl SieveBoundConstants {
    /// Smallest `C0` making (A1) hold on the soil for the given `X, C1, C2`.
    pub fn minimal_c0(soil: &SoilSpec, x: f64, c1: f64, c2: f64) -> Result<f64> {
        let mut seen: BTreeMap<Mask, ()> = BTreeMap::new();
        for &ra in &soil.r {
            if ra.count_ones() > MAX_R_SIZE {
                return Err(Error::resource("r(a) too large"));
            }
            for d in submasks(ra) {
                seen.insert(d, ());
            }
        }
        let mut c0 = 0f64;
        for &d in seen.keys() {
            let k = d.count_ones() as i32;
            let rhs = x * c1.powi(k) / soil.h(d) as f64 + c2.powi(k);
            c0 = c0.max(soil.s(d) as f64 / rhs);
        }
        Ok(c0)
    }
}

#[derive(Debug, Clone)]
pub struct YugoReport {
    pub direct: Complex<f64>,
    /// `X Σ_d Σ_{d'} μ(d - d') g(d, d') / h(d)` over all `d ⊆ P`.
    pub main_term: Complex<f64>,
    /// The four terms of the bound, in order.
    pub terms: [f64; 4],
    pub bound: f64,
}

impl YugoReport {
    pub fn error(&self) -> f64 {
        (self.direct - self.main_term).norm()
    }

    pub fn holds(&self) -> bool {
        self.error() <= self.bound * (1.0 + 1e-9) + 1e-9
    }
}

/// Evaluates the bound on `|Σ_a f(a, r(a)) - X Σ μ g / h|` that follows
/// from (A1), (A2) and the truncated sieve, after checking (A1) and the
/// bounds `C3 >= |f|`, `C4 >= |g|` on the instance. The last term carries
/// the factor 2 of [`SoilProfile::ridd_bound`].
pub fn yugo_bound(soil: &SoilSpec, k: &SieveBoundConstants, m: u128) -> Result<YugoReport> {
    if m > k.m0 {
        return Err(Error::domain(format!("M = {m} exceeds M0 = {}", k.m0)));
    }
    if soil.prime_count() > MAX_YUGO_PRIMES {
        return Err(Error::resource(format!(
            "the main term needs every subset; at most {MAX_YUGO_PRIMES} primes"
        )));
    }
    if soil.f_bound > k.c3 * (1.0 + 1e-12) {
        return Err(Error::domain("C3 is smaller than the declared bound on f"));
    }
    let tol = 1e-9;
    // (A1) on every d with S_d > 0
    let mut touched: BTreeMap<Mask, ()> = BTreeMap::new();
    for &ra in &soil.r {
        for d in submasks(ra) {
            touched.insert(d, ());
        }
    }
    for &d in touched.keys() {
        let c = d.count_ones() as i32;
        let rhs = k.c0 * k.x * k.c1.powi(c) / soil.h(d) as f64 + k.c0 * k.c2.powi(c);
        if soil.s(d) as f64 > rhs * (1.0 + tol) + tol {
            return Err(Error::domain(format!("(A1) fails at d = {d:#b}")));
        }
    }
    let profile = soil.profile()?;
    let full = soil.full_mask();
    let m2 = m.saturating_mul(m);
    let mut main = Complex::new(0f64, 0f64);
    let mut t1 = 0f64;
    let mut t2 = 0f64;
    let mut t3 = 0f64;
    for d in submasks(full) {
        let hd = soil.h(d);
        let card = d.count_ones() as i32;
        let mut inner = Complex::new(0f64, 0f64);
        for dp in submasks(d) {
            let g = (k.g)(d, dp);
            if g.norm() > k.c4 * (1.0 + 1e-12) {
                return Err(Error::domain("C4 is smaller than |g|"));
            }
            inner += g * mu(d & !dp) as f64;
            if hd <= m {
                let a = soil.a_sum(d, dp)?;
                t3 += (a - g * (k.x / hd as f64)).norm();
            }
        }
        main += inner * (k.x / hd as f64);
        let three = 3f64.powi(card) + 3.0;
        if hd > m {
            t1 += (k.c4 * 2f64.powi(card) + k.c3 * k.c0 * k.c1.powi(card) * three) / hd as f64;
        }
        if hd > m && hd <= m2 {
            t2 += k.c0 * k.c2.powi(card) * three;
        }
    }
    let t1 = k.x * t1;
    let t2 = k.c3 * t2;
    let t4: f64 = 2.0
        * k.c3
        * (0..soil.prime_count())
            .filter(|&i| soil.weights[i] as u128 > m2)
            .map(|i| soil.s(1 << i) as f64)
            .sum::<f64>();
    let terms = [t1, t2, t3, t4];
    Ok(YugoReport {
        direct: profile.direct_sum(),
        main_term: main,
        terms,
        bound: terms.iter().sum(),
    })
}

/// The soil counting square-free values: `A = {1..n}`, `P` the given
/// primes with `h({p}) = p^2`, `r(a) = {p : p^2 | P(a)}`, and `f(a, d) = 1`
/// exactly when `d` is empty. `P(a) = 0` puts every prime in `r(a)`.
pub fn squarefree_value_soil(poly: &IntPoly, n: u64, primes: &[u64]) -> Result<SoilSpec> {
    if primes.len() > 64 {
        return Err(Error::domain("at most 64 primes"));
    }
    let coeffs = poly.to_i128_coeffs().ok_or_else(|| Error::resource("coefficients exceed i128"))?;
    let mut r = Vec::with_capacity(n as usize);
    for a in 1..=n as i128 {
        let v = coeffs
            .iter()
            .rev()
            .try_fold(0i128, |acc, &c| acc.checked_mul(a)?.checked_add(c))
            .ok_or_else(|| Error::resource("polynomial value overflows i128"))?;
        let mut mask = 0u64;
        for (i, &p) in primes.iter().enumerate() {
            let q = (p * p) as i128;
            if v % q == 0 {
                mask |= 1 << i;
            }
        }
        r.push(mask);
    }
    let weights = primes.iter().map(|&p| p * p).collect();
    let f: SoilFn = Arc::new(|_, d| Complex::new(if d == 0 { 1 } else { 0 }, 0));
    SoilSpec::new(weights, r, f, 1, 1.0)
}

/// (A1)/(A2) data for [`squarefree_value_soil`]: `X = n`,
/// `g(d, ∅) = ∏_{p ∈ d} ℓ(p^2)`, `g(d, d') = 0` otherwise, `C1 = C2 =
/// max ℓ(p^2)`, `C4 = ∏ max(1, ℓ(p^2))` and the smallest valid `C0`.
pub fn squarefree_value_constants(poly: &IntPoly, soil: &SoilSpec, n: u64, primes: &[u64]) -> Result<SieveBoundConstants> {
    let ells: Vec<f64> = primes
        .iter()
        .map(|&p| localdens::ell(poly, p, 2).map(|e| e as f64))
        .collect::<Result<_>>()?;
    let c1 = ells.iter().cloned().fold(1f64, f64::max);
    let c4 = ells.iter().map(|&e| e.max(1.0)).product();
    let x = n as f64;
    let c0 = SieveBoundConstants::minimal_c0(soil, x, c1, c1)?;
    let ells_g = ells.clone();
    let g: GFn = Arc::new(move |d, dp| {
        if dp != 0 {
            return Complex::new(0.0, 0.0);
        }
        let mut v = 1f64;
        let mut m = d;
        while m != 0 {
            v *= ells_g[m.trailing_zeros() as usize];
            m &= m - 1;
        }
        Complex::new(v, 0.0)
    });
    Ok(SieveBoundConstants { x, c0, c1, c2: c1, c3: 1.0, c4, m0: u128::MAX, g })
}
