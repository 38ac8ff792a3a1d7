//! Seeded instance generators and the oracle suites shared by the
//! integration tests and the acceptance harness. Every suite returns a
//! [`Tally`] instead of panicking so the harness can report it.

#![allow(dead_code)]

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sievecraft::census;
use sievecraft::lattice::{self, Lattice2, Sector};
use sievecraft::localdens;
use sievecraft::numutil;
use sievecraft::poly::{BinForm, IntPoly};
use sievecraft::soil::{self, Mask, SoilFn, SoilSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: u64,
    pub failures: u64,
    /// The first few failures, described.
    pub examples: Vec<String>,
    /// Largest observed ratio of the checked quantity to its bound.
    pub max_ratio: f64,
}

impl Tally {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, holds: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !holds {
            self.failures += 1;
            if self.examples.len() < 10 {
                self.examples.push(what());
            }
        }
    }

    fn ratio(&mut self, r: f64) {
        if r > self.max_ratio {
            self.max_ratio = r;
        }
    }

    pub fn summary(&self) -> String {
        format!("{} checks, {} violations, max ratio {:.4}", self.checked, self.failures, self.max_ratio)
    }
}

/// Primitive square-free polynomial of degree `1..=max_deg` with
/// coefficients in `[-bound, bound]`.
pub fn random_poly(rng: &mut ChaCha8Rng, max_deg: usize, bound: i64) -> IntPoly {
    loop {
        let deg = rng.gen_range(1..=max_deg);
        let mut c: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-bound..=bound)).collect();
        if c[deg] == 0 {
            c[deg] = 1;
        }
        let p = IntPoly::from_i64(&c);
        if p.is_squarefree() && p.content() == BigInt::from(1) {
            return p;
        }
    }
}

/// Square-free binary form of degree `1..=max_deg`.
pub fn random_form(rng: &mut ChaCha8Rng, max_deg: usize, bound: i64) -> BinForm {
    loop {
        let deg = rng.gen_range(1..=max_deg);
        let c: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-bound..=bound)).collect();
        if let Ok(f) = BinForm::from_i64(&c) {
            if f.degree() == deg && f.is_squarefree() {
                return f;
            }
        }
    }
}

pub fn random_lattice(rng: &mut ChaCha8Rng, max_index: i64) -> Lattice2 {
    let idx = rng.gen_range(1..=max_index);
    let divs: Vec<i64> = (1..=idx).filter(|d| idx % d == 0).collect();
    let d1 = divs[rng.gen_range(0..divs.len())];
    let s = rng.gen_range(0..d1);
    Lattice2::from_hnf(d1, s, idx / d1).unwrap()
}

pub fn random_primitive_lattice(rng: &mut ChaCha8Rng, max_index: i64) -> Lattice2 {
    loop {
        let l = random_lattice(rng, max_index);
        if l.is_primitive() {
            return l;
        }
    }
}

pub fn random_sector(rng: &mut ChaCha8Rng) -> Sector {
    if rng.gen_bool(0.25) {
        return Sector::Full;
    }
    let mut dir = || loop {
        let v = (rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5));
        if v != (0, 0) {
            return v;
        }
    };
    Sector::between(dir(), dir()).unwrap()
}

const LANE_DEGREE: usize = 5;

/// Forward-difference tables of the polynomials at `x = 0`, reduced mod `m`,
/// laid out lane by lane so the stepping loop vectorizes.
fn difference_lanes(polys: &[Vec<i128>], m: u64) -> Vec<Vec<u32>> {
    let mut d = vec![vec![0u32; polys.len()]; LANE_DEGREE + 1];
    for (l, c) in polys.iter().enumerate() {
        let mut vals: Vec<i128> = (0..=LANE_DEGREE as i128)
            .map(|x| c.iter().rev().fold(0i128, |acc, &a| acc * x + a))
            .collect();
        for row in d.iter_mut() {
            row[l] = vals[0].rem_euclid(m as i128) as u32;
            vals = vals.windows(2).map(|w| w[1] - w[0]).collect();
        }
    }
    d
}

fn step_lanes(d: &mut [Vec<u32>], m: u32) {
    for i in 0..LANE_DEGREE {
        let (lo, hi) = d.split_at_mut(i + 1);
        for (a, &b) in lo[i].iter_mut().zip(hi[0].iter()) {
            let s = *a + b;
            *a = s.min(s.wrapping_sub(m));
        }
    }
}

/// Zero counts of every lane over one period `m` of the difference table,
/// `rows[j][lane] = Δ^j P(0) mod m`. Lane counts must be a multiple of
/// [`LANE_BLOCK`].
pub const LANE_BLOCK: usize = 32;

pub type Rows = [Vec<i32>; LANE_DEGREE + 1];

pub fn zeros_scalar(d: &Rows, m: i32) -> Vec<i32> {
    let mut d = d.clone();
    let mut z = vec![0i32; d[0].len()];
    for _ in 0..m {
        for (z, &v) in z.iter_mut().zip(&d[0]) {
            *z += (v == 0) as i32;
        }
        for i in 0..LANE_DEGREE {
            let (lo, hi) = d.split_at_mut(i + 1);
            for (a, &b) in lo[i].iter_mut().zip(&hi[0]) {
                let t = *a + b - m;
                *a = t + (m & (t >> 31));
            }
        }
    }
    z
}

#[cfg(target_arch = "x86_64")]
mod kern {
    use super::{Rows, LANE_BLOCK};
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx512f")]
    fn block_avx512(d: &Rows, c: usize, m: i32, out: &mut [i32]) {
        let mv = _mm512_set1_epi32(m);
        // SAFETY: every row holds at least c + 32 lanes
        let ld = |j: usize, h: usize| unsafe { _mm512_loadu_si512(d[j][c + 16 * h..].as_ptr() as *const _) };
        let [mut a0, mut a1, mut a2, mut a3, mut a4, a5] = [0, 1, 2, 3, 4, 5].map(|j| [ld(j, 0), ld(j, 1)]);
        let mut z = [_mm512_setzero_si512(); 2];
        let one = _mm512_set1_epi32(1);
        #[inline]
        #[target_feature(enable = "avx512f")]
        fn add_mod(a: &mut [__m512i; 2], b: &[__m512i; 2], mv: __m512i) {
            for h in 0..2 {
                let s = _mm512_add_epi32(a[h], b[h]);
                a[h] = _mm512_min_epu32(s, _mm512_sub_epi32(s, mv));
            }
        }
        for _ in 0..m {
            for h in 0..2 {
                let k = _mm512_cmpeq_epi32_mask(a0[h], _mm512_setzero_si512());
                z[h] = _mm512_mask_add_epi32(z[h], k, z[h], one);
            }
            add_mod(&mut a0, &a1, mv);
            add_mod(&mut a1, &a2, mv);
            add_mod(&mut a2, &a3, mv);
            add_mod(&mut a3, &a4, mv);
            add_mod(&mut a4, &a5, mv);
        }
        for h in 0..2 {
            // SAFETY: out holds 32 lanes
            unsafe { _mm512_storeu_si512(out[16 * h..].as_mut_ptr() as *mut _, z[h]) }
        }
    }

    #[target_feature(enable = "avx2")]
    fn block_avx2(d: &Rows, c: usize, m: i32, out: &mut [i32]) {
        let mv = _mm256_set1_epi32(m);
        // SAFETY: every row holds at least c + 32 lanes
        let ld = |j: usize, q: usize| unsafe { _mm256_loadu_si256(d[j][c + 8 * q..].as_ptr() as *const __m256i) };
        let [mut a0, mut a1, mut a2, mut a3, mut a4, a5] = [0, 1, 2, 3, 4, 5].map(|j| [ld(j, 0), ld(j, 1)]);
        #[inline]
        #[target_feature(enable = "avx2")]
        fn add_mod(a: &mut [__m256i; 2], b: &[__m256i; 2], mv: __m256i) {
            for h in 0..2 {
                let s = _mm256_add_epi32(a[h], b[h]);
                a[h] = _mm256_min_epu32(s, _mm256_sub_epi32(s, mv));
            }
        }
        let mut z = [_mm256_setzero_si256(); 2];
        let zero = _mm256_setzero_si256();
        for _ in 0..m {
            for h in 0..2 {
                z[h] = _mm256_sub_epi32(z[h], _mm256_cmpeq_epi32(a0[h], zero));
            }
            add_mod(&mut a0, &a1, mv);
            add_mod(&mut a1, &a2, mv);
            add_mod(&mut a2, &a3, mv);
            add_mod(&mut a3, &a4, mv);
            add_mod(&mut a4, &a5, mv);
        }
        for h in 0..2 {
            // SAFETY: out holds 16 lanes
            unsafe { _mm256_storeu_si256(out[8 * h..].as_mut_ptr() as *mut __m256i, z[h]) }
        }
    }

    pub fn zeros(d: &Rows, m: i32) -> Option<Vec<i32>> {
        let lanes = d[0].len();
        let mut out = vec![0i32; lanes];
        if is_x86_feature_detected!("avx512f") {
            for c in (0..lanes).step_by(LANE_BLOCK) {
                // SAFETY: the feature was detected at runtime
                unsafe { block_avx512(d, c, m, &mut out[c..]) }
            }
        } else if is_x86_feature_detected!("avx2") {
            for c in (0..lanes).step_by(16) {
                // SAFETY: the feature was detected at runtime
                unsafe { block_avx2(d, c, m, &mut out[c..]) }
            }
        } else {
            return None;
        }
        Some(out)
    }
}

pub fn count_zeros(d: &Rows, m: i32) -> Vec<i32> {
    #[cfg(target_arch = "x86_64")]
    if let Some(z) = kern::zeros(d, m) {
        return z;
    }
    zeros_scalar(d, m)
}

/// `counts[lane][k] = #{x mod p^k : p^k | P(x)}` for `k = 0..=kmax`, by
/// walking every residue modulo `p^kmax`.
pub fn exhaustive_levels(polys: &[Vec<i128>], p: u64, kmax: u32) -> Vec<Vec<u64>> {
    let m = p.pow(kmax);
    let mut d = difference_lanes(polys, m);
    let lanes = polys.len();
    let mut hist = vec![vec![0u64; kmax as usize + 1]; lanes];
    if kmax == 1 {
        let padded = lanes.div_ceil(LANE_BLOCK) * LANE_BLOCK;
        // padding lanes hold the constant 1 and never vanish
        let rows: Rows = std::array::from_fn(|j| {
            let mut r: Vec<i32> = d[j].iter().map(|&v| v as i32).collect();
            r.resize(padded, (j == 0) as i32);
            r
        });
        let zeros = count_zeros(&rows, m as i32);
        for (h, &z) in hist.iter_mut().zip(&zeros) {
            h[0] = 1;
            h[1] = z as u64;
        }
        return hist;
    }
    let val: Vec<u8> = (0..m)
        .map(|r| {
            let (mut v, mut q) = (0u8, r);
            while v < kmax as u8 && q % p == 0 {
                v += 1;
                q /= p;
            }
            if r == 0 {
                kmax as u8
            } else {
                v
            }
        })
        .collect();
    let mut exact = vec![vec![0u64; kmax as usize + 1]; lanes];
    for _ in 0..m {
        for (e, &v) in exact.iter_mut().zip(d[0].iter()) {
            e[val[v as usize] as usize] += 1;
        }
        step_lanes(&mut d, m as u32);
    }
    for (h, e) in hist.iter_mut().zip(exact) {
        let mut at_least = 0;
        for k in (0..=kmax as usize).rev() {
            at_least += e[k];
            h[k] = at_least / p.pow(kmax - k as u32);
        }
    }
    hist
}

/// Lifting counts against exhaustive enumeration for every `p^k <= limit`,
/// plus the root bound for every prime.
pub fn localdens_suite(polys: &[IntPoly], limit: u64) -> Tally {
    let mut t = Tally::default();
    let coeffs: Vec<Vec<i128>> = polys.iter().map(|f| f.to_i128_coeffs().unwrap()).collect();
    assert!(polys.iter().all(|f| f.degree().unwrap() <= LANE_DEGREE));
    for p in numutil::primes_up_to(limit) {
        let mut kmax = 1;
        while p.pow(kmax + 1) <= limit {
            kmax += 1;
        }
        let brute = exhaustive_levels(&coeffs, p, kmax);
        for (f, b) in polys.iter().zip(&brute) {
            let lifted: Vec<u64> =
                localdens::level_counts(f, p, kmax, None).unwrap().iter().map(|c| c.to_u64().unwrap()).collect();
            t.record(&lifted == b, || format!("{f} at p = {p}: lifted {lifted:?}, exhaustive {b:?}"));
            let bound = localdens::sols_bound(f, p).unwrap().to_f64().unwrap();
            let worst = *b.iter().skip(1).max().unwrap() as f64;
            t.ratio(worst / bound);
            t.record(worst <= bound, || format!("{f} at p = {p}: {worst} roots exceed the bound {bound}"));
        }
    }
    t
}

fn form_mod(c: &[i64], x: i64, y: i64, q: i64) -> i64 {
    // c[i] is the coefficient of x^i y^(d - i)
    let d = c.len() - 1;
    let mut acc = 0i64;
    let mut ypow = vec![1i64; d + 1];
    for i in 1..=d {
        ypow[i] = ypow[i - 1] * y % q;
    }
    for i in (0..=d).rev() {
        acc = (acc * x + c[i].rem_euclid(q) * ypow[d - i]) % q;
    }
    acc
}

/// Solution lattices cover the coprime solutions modulo `p^n` exactly once,
/// for every `p^n <= limit`. The count bound `2 deg F` is checked away from
/// primes dividing the discriminant or the content.
pub fn sollat_suite(forms: &[BinForm], limit: u64) -> Tally {
    let mut t = Tally::default();
    for f in forms {
        let c: Vec<i64> = f.coeffs().iter().map(|a| a.to_i64().unwrap()).collect();
        let singular = f.discriminant().unwrap() * f.content();
        for p in numutil::primes_up_to(limit) {
            let mut n = 1;
            while p.pow(n) <= limit {
                let q = p.pow(n) as i64;
                let ls = lattice::solution_lattices(f, p, n).unwrap();
                let mut bad = 0u64;
                for x in 0..q {
                    for y in 0..q {
                        if x % p as i64 == 0 && y % p as i64 == 0 {
                            continue;
                        }
                        let hits = ls.iter().filter(|l| l.contains(x, y)).count();
                        let want = (form_mod(&c, x, y, q) == 0) as usize;
                        if hits != want {
                            bad += 1;
                        }
                    }
                }
                t.record(bad == 0, || format!("{f} mod {p}^{n}: {bad} pairs covered wrongly"));
                if !(singular.mod_floor(&BigInt::from(p))).is_zero() {
                    let cap = 2 * f.degree();
                    t.ratio(ls.len() as f64 / cap as f64);
                    t.record(ls.len() <= cap, || format!("{f} mod {p}^{n}: {} lattices", ls.len()));
                }
                n += 1;
            }
        }
    }
    t
}

/// Per-N maxima of `|count - estimate| / (N log N)` for both the plain
/// estimate and the one corrected at primes dividing the index.
#[derive(Debug)]
pub struct PenultStats {
    pub ns: Vec<i64>,
    pub plain: Vec<f64>,
    pub corrected: Vec<f64>,
    pub tally: Tally,
}

pub fn penult_suite(seed: u64, cases: usize, ns: &[i64], c: f64) -> PenultStats {
    let mut r = rng(seed);
    let inst: Vec<(Lattice2, Sector)> =
        (0..cases).map(|_| (random_primitive_lattice(&mut r, 100), random_sector(&mut r))).collect();
    let mut stats = PenultStats { ns: ns.to_vec(), plain: Vec::new(), corrected: Vec::new(), tally: Tally::default() };
    for &n in ns {
        let scale = n as f64 * (n as f64).ln();
        let (mut mp, mut mc) = (0f64, 0f64);
        for (l, s) in &inst {
            let count = lattice::count_coprime(l, n, s) as f64;
            let e = (count - lattice::penult_estimate(l, n, s).unwrap()).abs() / scale;
            let ec = (count - lattice::coprime_estimate(l, n, s).unwrap()).abs() / scale;
            mp = mp.max(e);
            mc = mc.max(ec);
            stats.tally.record(e <= c, || format!("{l:?} {s:?} N = {n}: error {:.1} N log N", e));
        }
        stats.tally.ratio(mp / c);
        stats.plain.push(mp);
        stats.corrected.push(mc);
    }
    stats
}

pub fn ramsay_suite(seed: u64, cases: usize, max_index: i64, max_n: i64, k: f64) -> Tally {
    let mut r = rng(seed);
    let mut t = Tally::default();
    for _ in 0..cases {
        let l = random_lattice(&mut r, max_index);
        let n = r.gen_range(1..=max_n);
        let count = lattice::count_coprime(&l, n, &Sector::Full) as f64;
        let scale = (n * n) as f64 / l.index() as f64 + 1.0;
        t.ratio(count / scale);
        t.record(count <= k * scale, || format!("{l:?} N = {n}: {count} > {k} ({scale:.1})"));
    }
    t
}

fn unit(v: u64) -> Complex<i64> {
    match v % 5 {
        0 => Complex::new(0, 0),
        1 => Complex::new(1, 0),
        2 => Complex::new(-1, 0),
        3 => Complex::new(0, 1),
        _ => Complex::new(0, -1),
    }
}

/// Random soil with at most `max_primes` primes, at most `max_size`
/// elements and `f` valued in `{0, ±1, ±i}`.
pub fn random_soil(rng: &mut ChaCha8Rng, max_primes: usize, max_size: usize) -> SoilSpec {
    let k = rng.gen_range(1..=max_primes);
    let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(2..=40)).collect();
    let size = rng.gen_range(1..=max_size);
    let r: Vec<Mask> = (0..size).map(|_| rng.gen_range(0..1u64 << k)).collect();
    let table: Vec<Complex<i64>> = (0..size << k).map(|_| unit(rng.gen())).collect();
    let f: SoilFn = Arc::new(move |a, d| table[(a << k) | d as usize]);
    SoilSpec::new(weights, r, f, 1, 1.0).unwrap()
}

pub fn random_soil_suite(seed: u64, count: usize) -> Tally {
    let mut r = rng(seed);
    let mut t = Tally::default();
    for i in 0..count {
        let s = random_soil(&mut r, 6, 500);
        let prof = s.profile().unwrap();
        for m in prof.breakpoints() {
            let (e, b) = (prof.error(m), prof.ridd_bound(m));
            if b > 0.0 {
                t.ratio(e / b);
            }
            t.record(e <= b * (1.0 + 1e-12) + 1e-9, || format!("soil {i} M = {m}: {e} > {b}"));
        }
    }
    t
}

/// Both sieve bounds on the square-free soils of the given polynomials.
pub fn poly_soil_suite(polys: &[IntPoly], n: u64, max_prime: u64) -> Tally {
    let primes = numutil::primes_up_to(max_prime);
    let mut t = Tally::default();
    for f in polys {
        let s = soil::squarefree_value_soil(f, n, &primes).unwrap();
        let k = soil::squarefree_value_constants(f, &s, n, &primes).unwrap();
        let prof = s.profile().unwrap();
        for m in prof.breakpoints() {
            let (e, b) = (prof.error(m), prof.ridd_bound(m));
            t.record(e <= b * (1.0 + 1e-12) + 1e-9, || format!("{f} M = {m}: {e} > {b}"));
            match soil::yugo_bound(&s, &k, m) {
                Ok(rep) => {
                    if rep.bound > 0.0 {
                        t.ratio(rep.error() / rep.bound);
                    }
                    t.record(rep.holds(), || format!("{f} M = {m}: {} > {}", rep.error(), rep.bound));
                }
                // the bound only claims anything when (A1)/(A2) hold
                Err(sievecraft::Error::Domain(_)) => {}
                Err(e) => t.record(false, || format!("{f} M = {m}: {e}")),
            }
        }
    }
    t
}

/// Per-prime solution counts in the large-prime census of each form.
pub fn facil_suite(forms: &[BinForm], n: u64) -> Tally {
    let mut t = Tally::default();
    for f in forms {
        let rep = census::delta_census_form(f, n).unwrap();
        for (&p, &c) in &rep.profile {
            t.ratio(c as f64 / rep.facil_bound as f64);
            t.record(c <= rep.facil_bound, || format!("{f} p = {p}: {c} > {}", rep.facil_bound));
        }
        t.record(rep.facil_violations.is_empty(), || format!("{f}: {:?}", rep.facil_violations));
    }
    t
}
