//! Integer arithmetic: prime sieves, factorization of 128-bit integers,
//! multiplicative functions and a segmented square-free table.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::par;

const CACHED_PRIME_LIMIT: u64 = 1 << 21;
const MAX_TRIAL_BOUND: u64 = 100_000_000;

/// All primes `<= n`, via an odd-only sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let half = (n as usize - 1) / 2; // index i stands for 2i+1, i >= 1
    let mut composite = vec![false; half + 1];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= n as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p - 1) / 2;
            while j <= half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2];
    out.extend((1..=half).filter(|&i| !composite[i]).map(|i| 2 * i as u64 + 1));
    out
}

/// Primes below 2^21, computed once.
pub fn small_primes() -> &'static [u64] {
    static CACHE: OnceLock<Vec<u64>> = OnceLock::new();
    CACHE.get_or_init(|| primes_up_to(CACHED_PRIME_LIMIT))
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|s| s <= n) {
        x += 1;
    }
    x
}

/// Floor of the k-th root of `n`.
pub fn iroot(n: u128, k: u32) -> u128 {
    assert!(k >= 1);
    if k == 1 || n < 2 {
        return n;
    }
    let pow_le = |x: u128| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..k {
            match acc.checked_mul(x) {
                Some(v) if v <= n => acc = v,
                _ => return false,
            }
        }
        true
    };
    let mut x = (n as f64).powf(1.0 / k as f64) as u128;
    while x > 0 && !pow_le(x) {
        x -= 1;
    }
    while pow_le(x + 1) {
        x += 1;
    }
    x
}

/// `Some(r)` when `n == r^k`.
pub fn exact_root(n: u128, k: u32) -> Option<u128> {
    let r = iroot(n, k);
    (r.checked_pow(k) == Some(n)).then_some(r)
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    if m <= u64::MAX as u128 {
        return (a % m) * (b % m) % m;
    }
    let (mut a, mut b, mut acc) = (a % m, b % m, 0u128);
    while b > 0 {
        if b & 1 == 1 {
            acc = if acc >= m - a { acc - (m - a) } else { acc + a };
        }
        a = if a >= m - a { a - (m - a) } else { a + a };
        b >>= 1;
    }
    acc
}

fn powmod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Above this bound the Miller-Rabin test on the first 13 prime bases is no
/// longer known to be deterministic.
const MR_DETERMINISTIC_LIMIT: u128 = 3_317_044_064_679_887_385_961_981;

pub fn is_prime(n: u128) -> Result<bool> {
    if n < 2 {
        return Ok(false);
    }
    const BASES: [u128; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
    for &p in &BASES {
        if n == p {
            return Ok(true);
        }
        if n % p == 0 {
            return Ok(false);
        }
    }
    if n >= MR_DETERMINISTIC_LIMIT {
        return Err(Error::resource(format!("primality of {n} is beyond the deterministic range")));
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'bases: for &a in &BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// Factorization of a nonzero integer. The cofactor `pair`, when present, is
/// a product of two distinct primes above 2^21 that were not separated;
/// every multiplicative function used here only needs to know that.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub sign: i8,
    pub primes: Vec<(u128, u32)>,
    pub pair: Option<u128>,
}

impl Factorization {
    /// Number of distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.primes.len() as u32 + if self.pair.is_some() { 2 } else { 0 }
    }

    pub fn is_squarefree(&self) -> bool {
        self.primes.iter().all(|&(_, e)| e == 1)
    }
}

/// Factors `n != 0` by trial division up to the cube root of the running
/// cofactor, then classifies what is left.
pub fn factorize(n: i128) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::domain("cannot factor 0"));
    }
    let sign = if n < 0 { -1 } else { 1 };
    let mut r = n.unsigned_abs();
    let mut primes = Vec::new();
    let need = iroot(r, 3) + 1;
    if need > MAX_TRIAL_BOUND as u128 {
        return Err(Error::resource(format!("{n} is too large to factor by trial division")));
    }
    let mut strip = |p: u128, r: &mut u128| {
        if *r % p == 0 {
            let mut e = 0;
            while *r % p == 0 {
                *r /= p;
                e += 1;
            }
            primes.push((p, e));
        }
    };
    let mut exhausted = true;
    for &p in small_primes() {
        let p = p as u128;
        if p * p * p > r {
            exhausted = false;
            break;
        }
        strip(p, &mut r);
    }
    if exhausted {
        let mut p = CACHED_PRIME_LIMIT as u128 + 1;
        while p * p * p <= r {
            strip(p, &mut r);
            p += 2;
        }
    }
    let mut pair = None;
    if r > 1 {
        if is_prime(r)? {
            primes.push((r, 1));
        } else if let Some(s) = exact_root(r, 2) {
            primes.push((s, 2));
        } else if isqrt(r) <= CACHED_PRIME_LIMIT as u128 {
            let p = small_primes()
                .iter()
                .map(|&p| p as u128)
                .find(|&p| r % p == 0)
                .expect("composite cofactor has a factor below its square root");
            primes.push((p, 1));
            primes.push((r / p, 1));
        } else {
            pair = Some(r);
        }
    }
    primes.sort_unstable();
    Ok(Factorization { sign, primes, pair })
}

/// Exponent of the prime `p` in `n`.
pub fn valuation(n: i128, p: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::domain("valuation of 0 is infinite"));
    }
    if !is_prime(p as u128)? {
        return Err(Error::domain(format!("valuation base {p} is not prime")));
    }
    let (mut r, p) = (n.unsigned_abs(), p as u128);
    let mut e = 0;
    while r % p == 0 {
        r /= p;
        e += 1;
    }
    Ok(e)
}

/// `sq(n) = prod_{p^2 | n} p^(v_p(n) - 1)`.
pub fn sq_kernel(n: i128) -> Result<u128> {
    let f = factorize(n)?;
    Ok(f.primes.iter().filter(|&&(_, e)| e >= 2).map(|&(p, e)| p.pow(e - 1)).product())
}

/// `(d, y)` with `n = d * y^2` and `d` square-free carrying the sign of `n`.
pub fn squarefree_decomposition(n: i128) -> Result<(i128, u128)> {
    let f = factorize(n)?;
    let mut d: u128 = f.pair.unwrap_or(1);
    let mut y: u128 = 1;
    for &(p, e) in &f.primes {
        if e % 2 == 1 {
            d *= p;
        }
        y *= p.pow(e / 2);
    }
    Ok((f.sign as i128 * d as i128, y))
}

fn positive(n: i128, what: &str) -> Result<()> {
    if n <= 0 {
        return Err(Error::domain(format!("{what} needs n >= 1, got {n}")));
    }
    Ok(())
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of ordered factorizations of `|n|` into `k` positive factors.
pub fn tau_k(n: i128, k: u32) -> Result<u128> {
    if k == 0 {
        return Err(Error::domain("tau_k needs k >= 1"));
    }
    let f = factorize(n)?;
    let k = k as u128;
    let mut t: u128 = if f.pair.is_some() { k * k } else { 1 };
    for &(_, e) in &f.primes {
        t *= binomial(e as u128 + k - 1, k - 1);
    }
    Ok(t)
}

pub fn mobius(n: i128) -> Result<i8> {
    positive(n, "mobius")?;
    let f = factorize(n)?;
    if !f.is_squarefree() {
        return Ok(0);
    }
    Ok(if f.omega() % 2 == 0 { 1 } else { -1 })
}

pub fn omega(n: i128) -> Result<u32> {
    positive(n, "omega")?;
    Ok(factorize(n)?.omega())
}

/// Product of the distinct primes dividing `n`.
pub fn rad(n: i128) -> Result<u128> {
    positive(n, "rad")?;
    let f = factorize(n)?;
    Ok(f.primes.iter().map(|&(p, _)| p).product::<u128>() * f.pair.unwrap_or(1))
}

/// Bit table of square-free integers in `1..=n`.
#[derive(Debug, Clone)]
pub struct SquarefreeTable {
    n: u64,
    words: Vec<u64>,
}

impl SquarefreeTable {
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_squarefree(&self, k: u64) -> bool {
        assert!(k >= 1 && k <= self.n, "{k} outside 1..={}", self.n);
        let i = (k - 1) as usize;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of square-free integers in `1..=k`.
    pub fn count_up_to(&self, k: u64) -> u64 {
        let k = k.min(self.n) as usize;
        let full = k / 64;
        let mut c: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        if k % 64 != 0 {
            c += (self.words[full] & ((1u64 << (k % 64)) - 1)).count_ones() as u64;
        }
        c
    }
}

const TABLE_BLOCK: u64 = 1 << 18;

/// Marks square-free integers in `1..=n` block by block; blocks are
/// independent and may run in parallel.
pub fn squarefree_table_with(n: u64, parallel: bool) -> SquarefreeTable {
    let squares: Vec<u64> = primes_up_to(isqrt(n as u128) as u64).iter().map(|p| p * p).collect();
    let ranges = par::blocks(1, n, TABLE_BLOCK);
    let parts = par::map_slice(&ranges, parallel, |&(lo, hi)| {
        let len = (hi - lo + 1) as usize;
        let mut keep = vec![true; len];
        for &q in &squares {
            if q > hi {
                break;
            }
            let mut m = lo.div_ceil(q) * q;
            while m <= hi {
                keep[(m - lo) as usize] = false;
                m += q;
            }
        }
        keep
    });
    let mut words = vec![0u64; (n as usize).div_ceil(64)];
    let mut i = 0usize;
    for part in parts {
        for b in part {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
            i += 1;
        }
    }
    SquarefreeTable { n, words }
}

pub fn squarefree_table(n: u64) -> SquarefreeTable {
    squarefree_table_with(n, par::DEFAULT_PARALLEL)
}
