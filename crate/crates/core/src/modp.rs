//! Dense polynomials over the prime field F_p, coefficients stored low to
//! high as `u64` residues. Provides root finding (Cantor-Zassenhaus) and
//! factorization patterns (square-free plus distinct-degree factorization).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

#[inline]
fn mulm(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

#[inline]
fn addm(a: u64, b: u64, p: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % p as u128) as u64
}

#[inline]
fn subm(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        p - (b - a)
    }
}

pub fn powm(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulm(acc, b, p);
        }
        b = mulm(b, b, p);
        e >>= 1;
    }
    acc
}

pub fn invm(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    powm(a, p - 2, p)
}

/// Polynomial over F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPoly {
    pub p: u64,
    /// Low-to-high coefficients with no trailing zeros.
    pub c: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, mut c: Vec<u64>) -> Self {
        for x in c.iter_mut() {
            *x %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        FpPoly { p, c }
    }

    /// Reduction of an integer polynomial modulo `p`.
    pub fn from_bigint(coeffs: &[BigInt], p: u64) -> Self {
        let pb = BigInt::from(p);
        let c = coeffs
            .iter()
            .map(|a| a.mod_floor(&pb).to_u64().expect("residue fits"))
            .collect();
        FpPoly::new(p, c)
    }

    pub fn zero(p: u64) -> Self {
        FpPoly { p, c: Vec::new() }
    }

    pub fn one(p: u64) -> Self {
        FpPoly::new(p, vec![1])
    }

    pub fn x(p: u64) -> Self {
        FpPoly::new(p, vec![0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> u64 {
        *self.c.last().unwrap_or(&0)
    }

    pub fn eval(&self, x: u64) -> u64 {
        let p = self.p;
        self.c.iter().rev().fold(0, |acc, &a| addm(mulm(acc, x, p), a, p))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = invm(self.lead(), self.p);
        FpPoly::new(self.p, self.c.iter().map(|&a| mulm(a, inv, self.p)).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|i| addm(*self.c.get(i).unwrap_or(&0), *o.c.get(i).unwrap_or(&0), self.p))
            .collect();
        FpPoly::new(self.p, c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|i| subm(*self.c.get(i).unwrap_or(&0), *o.c.get(i).unwrap_or(&0), self.p))
            .collect();
        FpPoly::new(self.p, c)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return FpPoly::zero(self.p);
        }
        let p = self.p;
        let mut c = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                c[i + j] = addm(c[i + j], mulm(a, b, p), p);
            }
        }
        FpPoly::new(p, c)
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let p = self.p;
        let dd = d.c.len() - 1;
        if self.c.len() <= dd {
            return (FpPoly::zero(p), self.clone());
        }
        let inv = invm(d.lead(), p);
        let mut r = self.c.clone();
        let mut q = vec![0u64; r.len() - dd];
        for k in (0..q.len()).rev() {
            let coef = mulm(r[k + dd], inv, p);
            q[k] = coef;
            if coef != 0 {
                for (j, &b) in d.c.iter().enumerate() {
                    r[k + j] = subm(r[k + j], mulm(coef, b, p), p);
                }
            }
        }
        r.truncate(dd);
        (FpPoly::new(p, q), FpPoly::new(p, r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.divrem(d).1
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Self {
        let p = self.p;
        let c = self.c.iter().enumerate().skip(1).map(|(i, &a)| mulm(a, i as u64 % p, p)).collect();
        FpPoly::new(p, c)
    }

    /// `self^e mod m`.
    pub fn powmod(&self, mut e: u128, m: &Self) -> Self {
        let mut acc = FpPoly::one(self.p).rem(m);
        let mut b = self.rem(m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b).rem(m);
            }
            b = b.mul(&b).rem(m);
            e >>= 1;
        }
        acc
    }
}

/// Deterministic generator for the random splitting step.
struct SplitRng(u64);

impl SplitRng {
    fn next(&mut self, p: u64) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as u128 * p as u128 >> 53) as u64
    }
}

fn split_linear(f: &FpPoly, rng: &mut SplitRng, out: &mut Vec<u64>) {
    let p = f.p;
    match f.degree() {
        None | Some(0) => {}
        Some(1) => {
            let m = f.monic();
            out.push(subm(0, m.c[0], p));
        }
        Some(_) => loop {
            let a = rng.next(p);
            let shifted = FpPoly::new(p, vec![a, 1]);
            let h = shifted.powmod(((p - 1) / 2) as u128, f).sub(&FpPoly::one(p));
            let g = f.gcd(&h);
            let dg = g.degree().unwrap_or(0);
            if dg > 0 && dg < f.degree().unwrap() {
                let (q, _) = f.divrem(&g);
                split_linear(&g, rng, out);
                split_linear(&q, rng, out);
                return;
            }
        },
    }
}

/// Distinct roots of `f` in F_p, sorted. The zero polynomial has every
/// residue as a root.
pub fn roots(f: &FpPoly) -> Vec<u64> {
    let p = f.p;
    if f.is_zero() {
        return (0..p).collect();
    }
    if p <= 64 {
        return (0..p).filter(|&x| f.eval(x) == 0).collect();
    }
    let x = FpPoly::x(p);
    let g = f.gcd(&x.powmod(p as u128, f).sub(&x));
    let mut out = Vec::new();
    split_linear(&g, &mut SplitRng(p ^ 0x9e3779b97f4a7c15), &mut out);
    out.sort_unstable();
    out
}

/// Square-free decomposition of a monic polynomial: pairs `(g, e)` with
/// `f = prod g^e`, each `g` square-free and pairwise coprime.
pub fn squarefree_decomposition(f: &FpPoly) -> Vec<(FpPoly, u32)> {
    let p = f.p;
    let f = f.monic();
    let mut out = Vec::new();
    if f.degree().unwrap_or(0) == 0 {
        return out;
    }
    let df = f.derivative();
    if df.is_zero() {
        // f(x) = g(x^p), and g^p = f since Frobenius fixes F_p
        let g = FpPoly::new(p, f.c.iter().step_by(p as usize).copied().collect());
        for (h, e) in squarefree_decomposition(&g) {
            out.push((h, e * p as u32));
        }
        return out;
    }
    let mut c = f.gcd(&df);
    let mut w = f.divrem(&c).0;
    let mut i = 1;
    while w.degree().unwrap_or(0) > 0 {
        let y = w.gcd(&c);
        let z = w.divrem(&y).0;
        if z.degree().unwrap_or(0) > 0 {
            out.push((z, i));
        }
        i += 1;
        w = y;
        c = c.divrem(&w).0;
    }
    if c.degree().unwrap_or(0) > 0 {
        let g = FpPoly::new(p, c.c.iter().step_by(p as usize).copied().collect());
        for (h, e) in squarefree_decomposition(&g) {
            out.push((h, e * p as u32));
        }
    }
    out
}

/// Distinct-degree factorization of a monic square-free polynomial:
/// `(d, k)` means `k` irreducible factors of degree `d`.
pub fn distinct_degree(f: &FpPoly) -> Vec<(usize, usize)> {
    let p = f.p;
    let mut f = f.monic();
    let x = FpPoly::x(p);
    let mut h = x.clone();
    let mut out = Vec::new();
    let mut d = 1;
    while let Some(deg) = f.degree() {
        if deg == 0 {
            break;
        }
        if 2 * d > deg {
            out.push((deg, 1));
            break;
        }
        h = h.powmod(p as u128, &f);
        let g = f.gcd(&h.sub(&x));
        let dg = g.degree().unwrap_or(0);
        if dg > 0 {
            out.push((d, dg / d));
            f = f.divrem(&g).0;
            h = h.rem(&f);
        }
        d += 1;
    }
    out
}

/// Degrees of the irreducible factors of `f`, with multiplicity, sorted.
pub fn factor_degrees(f: &FpPoly) -> Vec<usize> {
    let mut out = Vec::new();
    for (g, e) in squarefree_decomposition(f) {
        for (d, k) in distinct_degree(&g) {
            for _ in 0..k * e as usize {
                out.push(d);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Degrees of the distinct irreducible factors of `f`, sorted.
pub fn distinct_factor_degrees(f: &FpPoly) -> Vec<usize> {
    let mut out = Vec::new();
    for (g, _) in squarefree_decomposition(f) {
        for (d, k) in distinct_degree(&g) {
            out.extend(std::iter::repeat(d).take(k));
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(p: u64, c: &[u64]) -> FpPoly {
        FpPoly::new(p, c.to_vec())
    }

    /// Brute-force factor degrees for tiny p by trial division by every
    /// monic polynomial of increasing degree.
    fn brute_degrees(f: &FpPoly) -> Vec<usize> {
        let p = f.p;
        let mut f = f.monic();
        let mut out = Vec::new();
        let mut d = 1;
        while f.degree().unwrap_or(0) > 0 {
            let count = p.pow(d as u32);
            let mut found = false;
            for k in 0..count {
                let mut c: Vec<u64> = (0..d).map(|i| k / p.pow(i as u32) % p).collect();
                c.push(1);
                let g = FpPoly::new(p, c);
                let (q, r) = f.divrem(&g);
                if r.is_zero() {
                    out.push(d);
                    f = q;
                    found = true;
                    break;
                }
            }
            if !found {
                d += 1;
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn arithmetic() {
        let a = fp(7, &[1, 2, 3]);
        let b = fp(7, &[5, 1]);
        let (q, r) = a.mul(&b).add(&fp(7, &[3])).divrem(&b);
        assert_eq!(q, a);
        assert_eq!(r, fp(7, &[3]));
        assert_eq!(fp(7, &[6, 0, 1]).gcd(&fp(7, &[1, 1])), fp(7, &[1, 1]));
    }

    #[test]
    fn roots_known() {
        // x^2 + 1 over F_5 and F_13
        assert_eq!(roots(&fp(5, &[1, 0, 1])), vec![2, 3]);
        assert_eq!(roots(&fp(1_000_003, &[1, 0, 1])), Vec::<u64>::new());
        let p = 1_000_033;
        let r = roots(&fp(p, &[1, 0, 1]));
        assert_eq!(r.len(), 2);
        for x in r {
            assert_eq!(mulm(x, x, p), p - 1);
        }
        // x^3 - 2 over F_31 splits completely
        assert_eq!(roots(&fp(31, &[29, 0, 0, 1])).len(), 3);
    }

    #[test]
    fn factor_patterns() {
        // x^3 - 2
        let f = |p: u64| fp(p, &[p - 2, 0, 0, 1]);
        assert_eq!(factor_degrees(&f(5)), vec![1, 2]);
        assert_eq!(factor_degrees(&f(7)), vec![3]);
        assert_eq!(factor_degrees(&f(31)), vec![1, 1, 1]);
        assert_eq!(factor_degrees(&f(3)), vec![1, 1, 1]);
        assert_eq!(distinct_factor_degrees(&f(3)), vec![1]);
        assert_eq!(distinct_factor_degrees(&f(2)), vec![1]);
    }

    proptest! {
        #[test]
        fn roots_match_enumeration(p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 67, 101, 257, 1009]),
                                   c in prop::collection::vec(0u64..1000, 1..8)) {
            let f = FpPoly::new(p, c);
            prop_assume!(!f.is_zero());
            let brute: Vec<u64> = (0..p).filter(|&x| f.eval(x) == 0).collect();
            prop_assert_eq!(roots(&f), brute);
        }

        #[test]
        fn degrees_match_trial_division(p in prop::sample::select(vec![2u64, 3, 5, 7]),
                                        c in prop::collection::vec(0u64..7, 2..8)) {
            let f = FpPoly::new(p, c);
            prop_assume!(f.degree().unwrap_or(0) > 0);
            prop_assert_eq!(factor_degrees(&f), brute_degrees(&f));
        }

        #[test]
        fn decomposition_reconstructs(p in prop::sample::select(vec![2u64, 3, 5, 13]),
                                      c in prop::collection::vec(0u64..13, 2..7),
                                      d in prop::collection::vec(0u64..13, 1..4)) {
            let a = FpPoly::new(p, c);
            let b = FpPoly::new(p, d);
            prop_assume!(!a.is_zero() && !b.is_zero());
            let f = a.mul(&b).mul(&b).monic();
            let mut prod = FpPoly::one(p);
            for (g, e) in squarefree_decomposition(&f) {
                for _ in 0..e {
                    prod = prod.mul(&g);
                }
            }
            prop_assert_eq!(prod, f);
        }
    }
}
