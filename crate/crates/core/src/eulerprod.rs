//! Rigorous enclosures of Euler products `∏_p (1 - ℓ(p^m)/p^m)` and their
//! binary-form analogues. The product over `p <= B` is exact; the tail is
//! bounded using `ℓ(p^m) <= c` for primes not dividing the discriminant or
//! content, and any such "bad" primes above `B` are multiplied in exactly.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localdens;
use crate::numutil;
use crate::par;
use crate::poly::{BinForm, IntPoly};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EulerStatus {
    /// The enclosure is rigorous.
    Rigorous,
    /// Primes above `B` dividing the discriminant or content were
    /// multiplied in exactly; the enclosure is still rigorous.
    ExtraPrimes { primes: Vec<u64> },
    /// The discriminant could not be factored; the lower end falls back
    /// to 0.
    Widened,
    /// Some local factor vanishes, so the density is exactly 0.
    ZeroDensity { prime: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalFactor {
    pub p: u64,
    /// `ℓ(p^m)` (or the pair count for forms).
    pub count: u128,
    /// The factor `1 - count / p^e` as a float, for logs.
    pub factor: f64,
}

#[derive(Debug, Clone)]
pub struct EulerEstimate {
    pub lower: BigRational,
    pub upper: BigRational,
    /// Exact product over `p <= B`.
    pub truncated: BigRational,
    pub b: u64,
    pub status: EulerStatus,
    pub factors: Vec<LocalFactor>,
}

impl EulerEstimate {
    pub fn lower_f64(&self) -> f64 {
        to_f64(&self.lower)
    }

    pub fn upper_f64(&self) -> f64 {
        to_f64(&self.upper)
    }

    pub fn width(&self) -> f64 {
        to_f64(&(&self.upper - &self.lower))
    }

    pub fn is_zero_density(&self) -> bool {
        matches!(self.status, EulerStatus::ZeroDensity { .. })
    }
}

/// Nearest-ish `f64` of a rational with arbitrarily large terms.
pub fn to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    if n.is_zero() {
        return 0.0;
    }
    let shift = n.bits() as i64 - d.bits() as i64;
    let scaled = if shift > 60 {
        (n.abs() >> (shift - 60) as usize) / d
    } else {
        (n.abs() << (60 - shift) as usize) / d
    };
    let v = scaled.to_f64().unwrap() * 2f64.powi((shift - 60) as i32);
    if n.is_negative() {
        -v
    } else {
        v
    }
}

/// Which quantity each local factor subtracts.
enum Local<'a> {
    Univ { poly: &'a IntPoly, m: u32 },
    Form { form: &'a BinForm, coprime: bool },
}

impl Local<'_> {
    /// Exponent `e` in the denominator `p^e`.
    fn exponent(&self) -> u32 {
        match self {
            Local::Univ { m, .. } => *m,
            Local::Form { .. } => 4,
        }
    }

    fn count(&self, p: u64) -> Result<BigUint> {
        match self {
            Local::Univ { poly, m } => localdens::count_roots_mod_pk(poly, p, *m),
            Local::Form { form, coprime: false } => localdens::ell_form(form, p),
            // pairs divisible by p are excluded along with the solutions
            Local::Form { form, coprime: true } => {
                Ok(localdens::coprime_count_form(form, p)? + BigUint::from(p * p))
            }
        }
    }

    /// `(c, k)` with `count(p) / p^e <= c / p^k` at good primes: univariate
    /// counts are at most `deg`, form counts at most `(deg + 1) p^2`.
    fn tail_constant(&self) -> (u64, u32) {
        match self {
            Local::Univ { poly, m } => (poly.degree().unwrap_or(0) as u64, *m),
            Local::Form { form, .. } => (form.degree() as u64 + 1, 2),
        }
    }

    /// Integer whose prime divisors are the primes where the tail bound
    /// may fail.
    fn bad_integer(&self) -> Result<BigInt> {
        match self {
            Local::Univ { poly, .. } => Ok(poly.discriminant()? * poly.content()),
            Local::Form { form, .. } => Ok(form.discriminant()? * form.content()),
        }
    }
}

fn product(items: &[(BigInt, BigInt)]) -> (BigInt, BigInt) {
    match items.len() {
        0 => (BigInt::one(), BigInt::one()),
        1 => items[0].clone(),
        n => {
            let (a, b) = product(&items[..n / 2]);
            let (c, d) = product(&items[n / 2..]);
            (a * c, b * d)
        }
    }
}

fn estimate(local: Local<'_>, b: u64, parallel: bool) -> Result<EulerEstimate> {
    if b < 2 {
        return Err(Error::domain("prime bound B must be at least 2"));
    }
    let e = local.exponent();
    let primes = numutil::primes_up_to(b);
    let counts = par::map_slice(&primes, parallel, |&p| local.count(p));
    let mut factors = Vec::with_capacity(primes.len());
    let mut terms = Vec::with_capacity(primes.len());
    for (&p, c) in primes.iter().zip(counts) {
        let c = c?;
        let pe = BigUint::from(p).pow(e);
        let count = c.to_u128().ok_or_else(|| Error::resource("local count overflows u128"))?;
        let num = BigInt::from(&pe - &c);
        let den = BigInt::from(pe);
        let factor = to_f64(&BigRational::new(num.clone(), den.clone()));
        factors.push(LocalFactor { p, count, factor });
        if num.is_zero() {
            let zero = BigRational::zero();
            return Ok(EulerEstimate {
                lower: zero.clone(),
                upper: zero.clone(),
                truncated: zero,
                b,
                status: EulerStatus::ZeroDensity { prime: p },
                factors,
            });
        }
        terms.push((num, den));
    }
    let (n, d) = product(&terms);
    let truncated = BigRational::new(n, d);

    let bad = local.bad_integer()?;
    let mut status = EulerStatus::Rigorous;
    let mut extra = BigRational::one();
    let mut extra_primes = Vec::new();
    match bad.abs().to_i128().map(numutil::factorize) {
        Some(Ok(f)) if f.pair.is_none() => {
            for (q, _) in f.primes {
                let q = q as u64;
                if q <= b {
                    continue;
                }
                let c = local.count(q)?;
                let qe = BigUint::from(q).pow(e);
                if c == qe {
                    let zero = BigRational::zero();
                    return Ok(EulerEstimate {
                        lower: zero.clone(),
                        upper: zero,
                        truncated,
                        b,
                        status: EulerStatus::ZeroDensity { prime: q },
                        factors,
                    });
                }
                extra *= BigRational::new(BigInt::from(&qe - &c), BigInt::from(qe));
                extra_primes.push(q);
            }
            if !extra_primes.is_empty() {
                status = EulerStatus::ExtraPrimes { primes: extra_primes };
            }
        }
        _ => status = EulerStatus::Widened,
    }
    let upper = &truncated * &extra;
    let lower = if status == EulerStatus::Widened {
        BigRational::zero()
    } else {
        // prod_{p>B} (1 - x_p) >= 1 - sum x_p >= 1 - c sum_{n>B} n^-k
        //                     >= 1 - c B^(1-k) / (k-1)
        let (c, k) = local.tail_constant();
        let slack = BigRational::new(BigInt::from(c), BigInt::from(b).pow(k - 1) * BigInt::from(k - 1));
        let tail = BigRational::one() - slack;
        if tail.is_negative() {
            BigRational::zero()
        } else {
            &upper * tail
        }
    };
    Ok(EulerEstimate { lower, upper, truncated, b, status, factors })
}

/// Enclosure of `∏_p (1 - ℓ(p^m)/p^m)` for square-free `P`, the density of
/// `x` with `P(x)` free of `m`-th powers.
pub fn density_univ(poly: &IntPoly, b: u64, m: u32) -> Result<EulerEstimate> {
    density_univ_with(poly, b, m, par::DEFAULT_PARALLEL)
}

pub fn density_univ_with(poly: &IntPoly, b: u64, m: u32, parallel: bool) -> Result<EulerEstimate> {
    if poly.degree().unwrap_or(0) < 1 {
        return Err(Error::domain("density needs a polynomial of degree at least 1"));
    }
    if m < 2 {
        return Err(Error::domain("power m must be at least 2"));
    }
    if !poly.is_squarefree() {
        return Err(Error::domain(format!("{poly} is not square-free")));
    }
    estimate(Local::Univ { poly, m }, b, parallel)
}

/// Enclosure of `∏_p (1 - ℓ(p^2)/p^4)` for a square-free form, the density
/// of pairs with `F(x, z)` square-free. With `coprime` the factors become
/// `1 - (p^2 + ℓ'(p^2))/p^4`, the density of coprime pairs with square-free
/// value among all pairs.
pub fn density_form(form: &BinForm, b: u64, coprime: bool) -> Result<EulerEstimate> {
    if !form.is_squarefree() {
        return Err(Error::domain(format!("{form} is not square-free")));
    }
    if form.degree() == 0 {
        return Err(Error::domain("density needs a form of degree at least 1"));
    }
    estimate(Local::Form { form, coprime }, b, par::DEFAULT_PARALLEL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> IntPoly {
        IntPoly::parse(s).unwrap()
    }

    #[test]
    fn identity_density_brackets_inverse_zeta() {
        let est = density_univ(&p("x"), 10_000, 2).unwrap();
        let target = 6.0 / std::f64::consts::PI.powi(2);
        assert!(est.lower_f64() <= target && target <= est.upper_f64());
        assert!(est.width() < 1e-3);
        assert_eq!(est.status, EulerStatus::Rigorous);
        // the brute-force square-free proportion up to 10^7
        let sf = numutil::squarefree_table(10_000_000).count() as f64 / 1e7;
        assert!((sf - 0.60793).abs() < 1e-5);
        assert!(est.lower_f64() - 1e-4 <= sf && sf <= est.upper_f64() + 1e-4);
    }

    #[test]
    fn single_factor() {
        let est = density_univ(&p("x"), 2, 2).unwrap();
        assert_eq!(est.truncated, BigRational::new(3.into(), 4.into()));
        assert_eq!(est.upper, est.truncated);
        assert!(est.lower <= est.upper);
    }

    #[test]
    fn float_and_rational_agree() {
        let est = density_univ(&p("x^3 + 2"), 3_000, 2).unwrap();
        let float: f64 = est.factors.iter().map(|f| f.factor).product();
        let exact = to_f64(&est.truncated);
        assert!(((float - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_b() {
        for poly in [p("x"), p("x^2 + 1"), p("x^3 + 2"), p("2x^2 + 7")] {
            let mut prev: Option<EulerEstimate> = None;
            for b in [2u64, 10, 50, 200, 1000, 5000] {
                let est = density_univ(&poly, b, 2).unwrap();
                assert!(est.lower <= est.upper);
                if let Some(pr) = &prev {
                    assert!(est.lower >= pr.lower, "{poly} B={b}");
                    assert!(est.upper <= pr.upper, "{poly} B={b}");
                }
                prev = Some(est);
            }
        }
    }

    #[test]
    fn bad_primes_above_b_are_exact() {
        // 30603 = 3 * 101^2, so 101 divides the discriminant
        let poly = p("x^2 + 30603");
        let est = density_univ(&poly, 50, 2).unwrap();
        assert!(matches!(est.status, EulerStatus::ExtraPrimes { ref primes } if primes.contains(&101)));
        assert!(est.lower <= est.upper);
    }

    #[test]
    fn zero_density_detected() {
        // x^2 + x is always even; with content 4, 4 | P(x) for all x
        let est = density_univ(&p("4x^2 + 4x + 4"), 10, 2).unwrap();
        assert_eq!(est.status, EulerStatus::ZeroDensity { prime: 2 });
        assert!(est.is_zero_density());
        let form = BinForm::parse("4x^2 + 4*x*z + 4z^2").unwrap();
        assert!(density_form(&form, 10, false).unwrap().is_zero_density());
    }

    #[test]
    fn form_densities() {
        let x = BinForm::parse("x").unwrap();
        let est = density_form(&x, 2000, false).unwrap();
        let target = 6.0 / std::f64::consts::PI.powi(2);
        assert!(est.lower_f64() <= target && target <= est.upper_f64());
        let xz = BinForm::parse("x*z").unwrap();
        let est = density_form(&xz, 2, false).unwrap();
        let ell = localdens::ell_form(&xz, 2).unwrap();
        assert_eq!(ell, BigUint::from(8u32));
        assert_eq!(est.truncated, BigRational::new(BigInt::from(16 - 8), BigInt::from(16)));
        // for degree >= 2 the coprime variant coincides
        let f = BinForm::parse("x^3 + 2z^3").unwrap();
        let a = density_form(&f, 500, false).unwrap();
        let b = density_form(&f, 500, true).unwrap();
        assert_eq!(a.truncated, b.truncated);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(density_univ(&p("x^2"), 100, 2).is_err());
        assert!(density_univ(&p("3"), 100, 2).is_err());
        assert!(density_univ(&p("x"), 1, 2).is_err());
        assert!(density_univ(&p("x"), 100, 1).is_err());
    }
}
