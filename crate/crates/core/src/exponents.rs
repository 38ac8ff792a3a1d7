//! Exponent constants: the kissing-number exponent `α`, the cycle averages
//! `δ` of the sixteen transitive groups of degree 6, and the resulting
//! sieve exponents.

use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEGREE: usize = 6;

/// `p[i]` is the image of `i`, zero-based.
pub type Perm = [u8; DEGREE];

pub const IDENTITY: Perm = [0, 1, 2, 3, 4, 5];

/// Permutation from one-based cycles, e.g. `&[&[1, 2, 3], &[4, 5]]`.
pub fn from_cycles(cycles: &[&[u8]]) -> Result<Perm> {
    let mut p = IDENTITY;
    let mut seen = [false; DEGREE];
    for c in cycles {
        for (k, &a) in c.iter().enumerate() {
            if !(1..=DEGREE as u8).contains(&a) || seen[a as usize - 1] {
                return Err(Error::domain(format!("bad cycle {c:?}")));
            }
            seen[a as usize - 1] = true;
            p[a as usize - 1] = c[(k + 1) % c.len()] - 1;
        }
    }
    Ok(p)
}

/// `a` after `b`.
pub fn compose(a: &Perm, b: &Perm) -> Perm {
    let mut out = IDENTITY;
    for i in 0..DEGREE {
        out[i] = a[b[i] as usize];
    }
    out
}

pub fn inverse(a: &Perm) -> Perm {
    let mut out = IDENTITY;
    for i in 0..DEGREE {
        out[a[i] as usize] = i as u8;
    }
    out
}

/// Cycles including fixed points.
pub fn cycle_count(g: &Perm) -> usize {
    let mut seen = [false; DEGREE];
    let mut n = 0;
    for i in 0..DEGREE {
        if !seen[i] {
            n += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = g[j] as usize;
            }
        }
    }
    n
}

pub fn fixed_points(g: &Perm) -> usize {
    (0..DEGREE).filter(|&i| g[i] as usize == i).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermGroup {
    pub name: String,
    elements: Vec<Perm>,
}

impl PermGroup {
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_transitive(&self) -> bool {
        let mut orbit = [false; DEGREE];
        orbit[0] = true;
        for g in &self.elements {
            orbit[g[0] as usize] = true;
        }
        orbit.iter().all(|&b| b)
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.elements.binary_search(g).is_ok()
    }
}

/// Breadth-first closure of the generators under composition.
pub fn closure(name: &str, gens: &[Perm]) -> PermGroup {
    let mut seen: BTreeSet<Perm> = BTreeSet::from([IDENTITY]);
    let mut queue = VecDeque::from([IDENTITY]);
    while let Some(g) = queue.pop_front() {
        for s in gens {
            let h = compose(s, &g);
            if seen.insert(h) {
                queue.push_back(h);
            }
        }
    }
    PermGroup { name: name.to_string(), elements: seen.into_iter().collect() }
}

/// `(1+s)/(2s) log2((1+s)/(2s)) - (1-s)/(2s) log2((1-s)/(2s))` with
/// `s = sin θ`, for `θ` in degrees.
pub fn kl_bound(theta_deg: f64) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::domain("need 0 < θ <= 90 degrees"));
    }
    let s = theta_deg.to_radians().sin();
    let xlog = |x: f64| if x <= 0.0 { 0.0 } else { x * x.log2() };
    Ok(xlog((1.0 + s) / (2.0 * s)) - xlog((1.0 - s) / (2.0 * s)))
}

/// The exponent at 60 degrees, from the closed form in `√3`.
pub fn alpha_constant() -> f64 {
    let r3 = 3f64.sqrt();
    let a = (2.0 + r3) / (2.0 * r3);
    let b = (2.0 - r3) / (2.0 * r3);
    a * a.log2() - b * b.log2()
}

/// Coefficients of `2^(kα)` for `k = 0..=4`.
pub type DeltaCoefficients = [Rational64; 5];

/// `(1/|G|) Σ_{γ fixing a point} 2^(α(n_γ - 2))` as coefficients of
/// `2^(kα)`.
pub fn delta_coefficients(g: &PermGroup) -> Result<DeltaCoefficients> {
    if !g.is_transitive() {
        return Err(Error::domain(format!("{} is not transitive", g.name)));
    }
    let mut counts = [0i64; 5];
    for p in &g.elements {
        if fixed_points(p) > 0 {
            counts[cycle_count(p) - 2] += 1;
        }
    }
    let ord = g.order() as i64;
    Ok(counts.map(|c| Rational64::new(c, ord)))
}

pub fn eval_coefficients(c: &DeltaCoefficients, alpha: f64) -> f64 {
    c.iter().enumerate().map(|(k, r)| r.to_f64().unwrap_or(0.0) * (k as f64 * alpha).exp2()).sum()
}

pub fn delta_exponent(g: &PermGroup, alpha: f64) -> Result<f64> {
    Ok(eval_coefficients(&delta_coefficients(g)?, alpha))
}

/// `1 - δ/3` at the constant `α`.
pub fn beta_sextic(g: &PermGroup) -> Result<f64> {
    Ok(1.0 - delta_exponent(g, alpha_constant())? / 3.0)
}

pub fn beta_cubic_at(discriminant_is_square: bool, alpha: f64) -> f64 {
    if discriminant_is_square {
        1.0 - (2.0 * alpha).exp2() / 9.0
    } else {
        1.0 - alpha.exp2() / 6.0 - (2.0 * alpha).exp2() / 18.0
    }
}

pub fn beta_cubic(discriminant_is_square: bool) -> f64 {
    beta_cubic_at(discriminant_is_square, alpha_constant())
}

/// Exponent of `log X` in the growth of the `R(α, d)` sums for a cubic
/// field, Galois or not.
pub fn taube_exponent(galois: bool, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain("need α > 0"));
    }
    Ok(if galois {
        (2.0 * alpha).exp2() / 3.0 - 1.0
    } else {
        alpha.exp2() / 2.0 + (2.0 * alpha).exp2() / 6.0 - 1.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuinticExponents {
    pub beta: f64,
    pub exponent: f64,
    /// `|2β^2 - 15β + 14|`.
    pub residual: f64,
}

/// `β` balancing `(18 - β^2/2)/(10 - β)` against `(5 - β)/2`, and the
/// resulting exponent `(5 - β)/2`.
pub fn quintic_exponents() -> Result<QuinticExponents> {
    let r = 113f64.sqrt();
    let beta = (15.0 - r) / 4.0;
    let exponent = (5.0 - beta) / 2.0;
    let residual = (2.0 * beta * beta - 15.0 * beta + 14.0).abs();
    let lhs = (18.0 - beta * beta / 2.0) / (10.0 - beta);
    if !(0.0..2.0).contains(&beta) || (lhs - exponent).abs() > 1e-12 || (exponent - (5.0 + r) / 8.0).abs() > 1e-12 {
        return Err(Error::domain("quintic exponent consistency check failed"));
    }
    Ok(QuinticExponents { beta, exponent, residual })
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub group: PermGroup,
    pub generators: Vec<Perm>,
}

type GroupData = (&'static str, &'static [&'static [&'static [u8]]], usize);

/// Labels, generators as one-based cycles, and group orders.
const GROUP_DATA: [GroupData; 16] = [
    ("C(6)", &[&[&[1, 2, 3, 4, 5, 6]]], 6),
    ("D_6(6)", &[&[&[1, 3, 5], &[2, 4, 6]], &[&[1, 4], &[2, 3], &[5, 6]]], 6),
    ("D(6)", &[&[&[1, 2, 3, 4, 5, 6]], &[&[1, 4], &[2, 3], &[5, 6]]], 12),
    ("A_4(6)", &[&[&[1, 4], &[2, 5]], &[&[1, 3, 5], &[2, 4, 6]]], 12),
    ("F_18(6)", &[&[&[2, 4, 6]], &[&[1, 4], &[2, 5], &[3, 6]]], 18),
    ("2A_4(6)", &[&[&[3, 6]], &[&[1, 3, 5], &[2, 4, 6]]], 24),
    ("S_4(6d)", &[&[&[1, 4], &[2, 5]], &[&[1, 3, 5], &[2, 4, 6]], &[&[1, 5], &[2, 4]]], 24),
    ("S_4(6c)", &[&[&[1, 4], &[2, 5]], &[&[1, 3, 5], &[2, 4, 6]], &[&[1, 5], &[2, 4], &[3, 6]]], 24),
    ("F_18(6):2", &[&[&[2, 4, 6]], &[&[1, 5], &[2, 4]], &[&[1, 4], &[2, 5], &[3, 6]]], 36),
    ("F_36(6)", &[&[&[2, 4, 6]], &[&[1, 5], &[2, 4]], &[&[1, 4, 5, 2], &[3, 6]]], 36),
    ("2S_4(6)", &[&[&[3, 6]], &[&[1, 3, 5], &[2, 4, 6]], &[&[1, 5], &[2, 4]]], 48),
    ("L(6)", &[&[&[1, 2, 3, 4, 6]], &[&[1, 4], &[5, 6]]], 60),
    ("F_36(6):2", &[&[&[2, 4, 6]], &[&[2, 4]], &[&[1, 4], &[2, 5], &[3, 6]]], 72),
    ("L(6):2", &[&[&[1, 2, 3, 4, 6]], &[&[1, 2], &[3, 4], &[5, 6]]], 120),
    ("A_6", &[&[&[1, 2, 3, 4, 5]], &[&[4, 5, 6]]], 360),
    ("S_6", &[&[&[1, 2, 3, 4, 5, 6]], &[&[1, 2]]], 720),
];

fn build_catalog() -> Result<Vec<CatalogEntry>> {
    let mut out = Vec::with_capacity(GROUP_DATA.len());
    for (name, gens, order) in GROUP_DATA {
        let generators: Vec<Perm> = gens.iter().map(|c| from_cycles(c)).collect::<Result<_>>()?;
        let group = closure(name, &generators);
        if group.order() != order {
            return Err(Error::domain(format!("{name}: closure has order {}, expected {order}", group.order())));
        }
        if !group.is_transitive() {
            return Err(Error::domain(format!("{name}: closure is not transitive")));
        }
        out.push(CatalogEntry { group, generators });
    }
    Ok(out)
}

/// The sixteen transitive groups of degree 6, validated on first use.
pub fn catalog() -> &'static [CatalogEntry] {
    static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    CATALOG.get_or_init(|| build_catalog().expect("embedded group data is inconsistent"))
}

pub fn group(name: &str) -> Option<&'static PermGroup> {
    catalog().iter().map(|e| &e.group).find(|g| g.name == name)
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub group: String,
    pub order: usize,
    /// `(numerator, denominator)` of the coefficient of `2^(kα)`.
    pub coefficients: [(i64, i64); 5],
    pub delta: f64,
    pub beta: f64,
}

/// One row per catalog group at the given `α`.
pub fn tables(alpha: f64) -> Result<Vec<TableRow>> {
    catalog()
        .iter()
        .map(|e| {
            let c = delta_coefficients(&e.group)?;
            let delta = eval_coefficients(&c, alpha);
            Ok(TableRow {
                group: e.group.name.clone(),
                order: e.group.order(),
                coefficients: c.map(|r| (*r.numer(), *r.denom())),
                delta,
                beta: 1.0 - delta / 3.0,
            })
        })
        .collect()
}

/// Truncation to `digits` decimals, as printed with a trailing ellipsis.
pub fn truncate_decimals(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s + 1e-9).floor() / s
}

pub fn is_zero_coefficients(c: &DeltaCoefficients) -> bool {
    c.iter().all(|r| r.is_zero())
}
