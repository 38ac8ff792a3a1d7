//! Finite-index sublattices of `Z^2`, sectors, and coprime point counts in
//! boxes.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localdens;
use crate::numutil;
use crate::par;
use crate::poly::{BinForm, IntPoly};

/// Hermite normal form: basis `(d1, 0), (s, d2)` with `0 <= s < d1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Lattice2 {
    d1: i64,
    s: i64,
    d2: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Congruence {
    /// `x ≡ r y (mod m)`
    XEqRY,
    /// `y ≡ r x (mod m)`
    YEqRX,
}

impl Lattice2 {
    pub fn full() -> Self {
        Lattice2 { d1: 1, s: 0, d2: 1 }
    }

    pub fn from_hnf(d1: i64, s: i64, d2: i64) -> Result<Self> {
        if d1 < 1 || d2 < 1 || !(0..d1).contains(&s) {
            return Err(Error::domain("HNF needs d1, d2 >= 1 and 0 <= s < d1"));
        }
        Ok(Lattice2 { d1, s, d2 })
    }

    /// Lattice generated by the given vectors; they must span a finite-index
    /// subgroup.
    pub fn from_generators(gens: &[(i64, i64)]) -> Result<Self> {
        let mut v: Vec<(i128, i128)> = gens.iter().map(|&(x, y)| (x as i128, y as i128)).collect();
        // Euclid on the second coordinate until one vector carries it all
        let mut pivot: Option<(i128, i128)> = None;
        loop {
            v.retain(|w| *w != (0, 0));
            let mut idx: Vec<usize> = (0..v.len()).filter(|&i| v[i].1 != 0).collect();
            if idx.len() <= 1 {
                if let Some(&i) = idx.first() {
                    pivot = Some(v.swap_remove(i));
                }
                break;
            }
            idx.sort_by_key(|&i| v[i].1.abs());
            let (a, b) = (idx[0], idx[1]);
            let q = Integer::div_floor(&v[b].1, &v[a].1);
            v[b] = (v[b].0 - q * v[a].0, v[b].1 - q * v[a].1);
        }
        let (mut px, mut py) = pivot.ok_or_else(|| Error::domain("generators do not have full rank"))?;
        if py < 0 {
            px = -px;
            py = -py;
        }
        let d1 = v.iter().fold(0i128, |g, w| g.gcd(&w.0));
        if d1 == 0 {
            return Err(Error::domain("generators do not have full rank"));
        }
        let to64 = |z: i128| i64::try_from(z).map_err(|_| Error::resource("lattice entries overflow i64"));
        Ok(Lattice2 { d1: to64(d1)?, s: to64(px.mod_floor(&d1))?, d2: to64(py)? })
    }

    pub fn from_congruence(r: i64, m: i64, kind: Congruence) -> Result<Self> {
        if m < 1 || !(0..m).contains(&r) {
            return Err(Error::domain("congruence lattice needs m >= 1 and 0 <= r < m"));
        }
        match kind {
            Congruence::XEqRY => Ok(Lattice2 { d1: m, s: r, d2: 1 }),
            Congruence::YEqRX => Self::from_generators(&[(1, r), (0, m)]),
        }
    }

    pub fn hnf(&self) -> (i64, i64, i64) {
        (self.d1, self.s, self.d2)
    }

    pub fn index(&self) -> i64 {
        self.d1 * self.d2
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        if y.rem_euclid(self.d2) != 0 {
            return false;
        }
        let k = (y / self.d2) as i128;
        (x as i128 - self.s as i128 * k).rem_euclid(self.d1 as i128) == 0
    }

    /// Not contained in `l Z^2` for any `l > 1`.
    pub fn is_primitive(&self) -> bool {
        self.d1.gcd(&self.s).gcd(&self.d2) == 1
    }

    pub fn intersect(&self, other: &Lattice2) -> Result<Lattice2> {
        // points of self on the rows of lcm(d2, d2'), then solve the x congruences
        let d2 = self.d2.lcm(&other.d2);
        let (ka, kb) = (d2 / self.d2, d2 / other.d2);
        let (ca, cb) = (self.s as i128 * ka as i128, other.s as i128 * kb as i128);
        let (ma, mb) = (self.d1 as i128, other.d1 as i128);
        // rows y = t d2: x ≡ t ca (ma), x ≡ t cb (mb); find t0 = smallest t >= 1 with a solution
        let g = ma.gcd(&mb);
        let diff = (cb - ca).mod_floor(&g);
        let step = if diff == 0 { 1 } else { g / diff.gcd(&g) };
        let t = step;
        let x = crt(t * ca, ma, t * cb, mb).expect("compatible row");
        let d1 = ma.lcm(&mb);
        let row = d2 as i128 * t;
        Self::from_generators(&[
            (i64::try_from(d1).map_err(|_| Error::resource("overflow"))?, 0),
            (
                i64::try_from(x).map_err(|_| Error::resource("overflow"))?,
                i64::try_from(row).map_err(|_| Error::resource("overflow"))?,
            ),
        ])
    }
}

fn crt(a: i128, m: i128, b: i128, n: i128) -> Option<i128> {
    let e = m.extended_gcd(&n);
    let g = e.gcd;
    if (b - a) % g != 0 {
        return None;
    }
    let l = m / g * n;
    let t = ((b - a) / g).mod_floor(&(n / g)) * e.x.mod_floor(&(n / g)) % (n / g);
    Some((a + m * t).mod_floor(&l))
}

/// A connected component of the plane minus finitely many rays through
/// the origin, stored as the counterclockwise arc from `start` to `end`.
/// The start ray belongs to the sector and the end ray does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sector {
    Full,
    Arc { start: (i64, i64), end: (i64, i64) },
}

fn cross(a: (i64, i64), b: (i64, i64)) -> i128 {
    a.0 as i128 * b.1 as i128 - a.1 as i128 * b.0 as i128
}

fn dot(a: (i64, i64), b: (i64, i64)) -> i128 {
    a.0 as i128 * b.0 as i128 + a.1 as i128 * b.1 as i128
}

/// Angle of `v` measured counterclockwise from `a`, as a sortable key.
fn rel_less(a: (i64, i64), u: (i64, i64), v: (i64, i64)) -> bool {
    let half = |w: (i64, i64)| -> u8 {
        let c = cross(a, w);
        if c > 0 || (c == 0 && dot(a, w) > 0) {
            0
        } else {
            1
        }
    };
    let (hu, hv) = (half(u), half(v));
    if hu != hv {
        return hu < hv;
    }
    cross(u, v) > 0
}

fn same_direction(a: (i64, i64), b: (i64, i64)) -> bool {
    cross(a, b) == 0 && dot(a, b) > 0
}

impl Sector {
    pub fn between(start: (i64, i64), end: (i64, i64)) -> Result<Self> {
        if start == (0, 0) || end == (0, 0) {
            return Err(Error::domain("sector rays need nonzero directions"));
        }
        if same_direction(start, end) {
            return Ok(Sector::Full);
        }
        Ok(Sector::Arc { start, end })
    }

    /// Component `k` of the plane cut along `rays`, counting
    /// counterclockwise from the ray of smallest angle.
    pub fn from_rays(rays: &[(i64, i64)], k: usize) -> Result<Self> {
        if rays.iter().any(|&r| r == (0, 0)) {
            return Err(Error::domain("sector rays need nonzero directions"));
        }
        let mut rs: Vec<(i64, i64)> = Vec::new();
        for &r in rays {
            if !rs.iter().any(|&q| same_direction(q, r)) {
                rs.push(r);
            }
        }
        if rs.len() < 2 {
            return Ok(Sector::Full);
        }
        rs.sort_by(|&u, &v| {
            if rel_less((1, 0), u, v) {
                std::cmp::Ordering::Less
            } else if rel_less((1, 0), v, u) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        if k >= rs.len() {
            return Err(Error::domain(format!("only {} components", rs.len())));
        }
        Self::between(rs[k], rs[(k + 1) % rs.len()])
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        match *self {
            Sector::Full => (x, y) != (0, 0),
            Sector::Arc { start, end } => (x, y) != (0, 0) && rel_less(start, (x, y), end),
        }
    }

    /// Area of the sector inside `[-n, n]^2`.
    pub fn box_area(&self, n: f64) -> f64 {
        let (start, end) = match *self {
            Sector::Full => return 4.0 * n * n,
            Sector::Arc { start, end } => (start, end),
        };
        let on_box = |v: (i64, i64)| -> (f64, f64) {
            let t = n / (v.0.abs().max(v.1.abs()) as f64);
            (v.0 as f64 * t, v.1 as f64 * t)
        };
        let mut pts = vec![(0.0, 0.0), on_box(start)];
        // corners strictly inside the arc, in counterclockwise order
        let mut corners: Vec<(i64, i64)> =
            [(1, 1), (-1, 1), (-1, -1), (1, -1)].into_iter().filter(|&c| self.contains(c.0, c.1) && !same_direction(c, start)).collect();
        corners.sort_by(|&u, &v| {
            if rel_less(start, u, v) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        pts.extend(corners.into_iter().map(|c| (c.0 as f64 * n, c.1 as f64 * n)));
        pts.push(on_box(end));
        let mut a = 0.0;
        for i in 0..pts.len() {
            let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
            a += p.0 * q.1 - p.1 * q.0;
        }
        a / 2.0
    }
}

impl Sector {
    /// Counterclockwise angle interval `[a0, a1)` with `0 <= a0 < 2π` and
    /// `a0 < a1 <= a0 + 2π`.
    pub fn angles(&self) -> (f64, f64) {
        match *self {
            Sector::Full => (0.0, 2.0 * PI),
            Sector::Arc { start, end } => {
                let a0 = (start.1 as f64).atan2(start.0 as f64).rem_euclid(2.0 * PI);
                let mut a1 = (end.1 as f64).atan2(end.0 as f64).rem_euclid(2.0 * PI);
                if a1 <= a0 {
                    a1 += 2.0 * PI;
                }
                (a0, a1)
            }
        }
    }

    /// Area of the sector inside `[0, n]^2`.
    pub fn quadrant_area(&self, n: f64) -> f64 {
        let (a0, a1) = self.angles();
        let mut area = 0.0;
        for k in 0..2 {
            let lo = a0.max(2.0 * PI * k as f64);
            let hi = a1.min(2.0 * PI * k as f64 + PI / 2.0);
            if hi > lo {
                area += cone_box_area(lo, hi, n);
            }
        }
        area
    }
}

/// Area of `{r e^{iθ} : a0 <= θ < a1} ∩ [-n, n]^2` for `a1 - a0 <= 2π`.
pub fn cone_box_area(a0: f64, a1: f64, n: f64) -> f64 {
    let on_box = |t: f64| {
        let (c, s) = (t.cos(), t.sin());
        let k = n / c.abs().max(s.abs());
        (c * k, s * k)
    };
    let mut pts = vec![(0.0, 0.0), on_box(a0)];
    let mut t = (a0 / (PI / 2.0) - 0.5).floor() * (PI / 2.0) + PI / 4.0;
    while t <= a0 {
        t += PI / 2.0;
    }
    while t < a1 {
        pts.push(on_box(t));
        t += PI / 2.0;
    }
    pts.push(on_box(a1));
    let mut a = 0.0;
    for i in 0..pts.len() {
        let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
        a += p.0 * q.1 - p.1 * q.0;
    }
    a / 2.0
}

/// `#{(x, y) in [-n, n]^2 ∩ S ∩ L : gcd(x, y) = 1}`.
pub fn count_coprime(l: &Lattice2, n: i64, sector: &Sector) -> u64 {
    count_coprime_with(l, n, sector, par::DEFAULT_PARALLEL)
}

pub fn count_coprime_with(l: &Lattice2, n: i64, sector: &Sector, parallel: bool) -> u64 {
    if n < 1 {
        return 0;
    }
    let (d1, s, d2) = l.hnf();
    let rows: Vec<i64> = (-n..=n).filter(|y| y.rem_euclid(d2) == 0).collect();
    par::map_slice(&rows, parallel, |&y| {
        let k = y / d2;
        let c = (s as i128 * k as i128).rem_euclid(d1 as i128) as i64;
        // first x >= -n with x ≡ c (mod d1)
        let mut x = -n + (c - (-n)).rem_euclid(d1);
        let ay = y.unsigned_abs();
        let mut cnt = 0u64;
        while x <= n {
            if x.unsigned_abs().gcd(&ay) == 1 && sector.contains(x, y) {
                cnt += 1;
            }
            x += d1;
        }
        cnt
    })
    .into_iter()
    .sum()
}

/// `Area(S ∩ [-n, n]^2) / [Z^2 : L] * 6 / π^2`.
pub fn penult_estimate(l: &Lattice2, n: i64, sector: &Sector) -> Result<f64> {
    if !l.is_primitive() {
        return Err(Error::domain("lattice is contained in l Z^2 for some l > 1"));
    }
    Ok(sector.box_area(n as f64) / l.index() as f64 * 6.0 / (PI * PI))
}

/// [`penult_estimate`] times `∏_{p | index} p / (p + 1)`: a primitive
/// lattice of index divisible by `p` meets `pZ^2` in a `1/p` share of its
/// points instead of `1/p^2`.
pub fn coprime_estimate(l: &Lattice2, n: i64, sector: &Sector) -> Result<f64> {
    let base = penult_estimate(l, n, sector)?;
    let f = numutil::factorize(l.index() as i128)?;
    Ok(f.primes.iter().fold(base, |acc, &(p, _)| acc * p as f64 / (p as f64 + 1.0)))
}

/// Smallest `max(|x|, |y|)` over nonzero points of `L`.
pub fn min_maxnorm(l: &Lattice2) -> i64 {
    let (d1, s, d2) = l.hnf();
    let mut best = d1;
    let mut k = 1i64;
    while k * d2 < best {
        let c = (s as i128 * k as i128).rem_euclid(d1 as i128) as i64;
        let xmin = c.min(d1 - c);
        best = best.min((k * d2).max(xmin));
        k += 1;
    }
    best
}

fn roots_list(poly: &IntPoly, p: u64, n: u32, limit: usize) -> Result<Vec<i64>> {
    localdens::roots_mod_pk(poly, p, n, limit)?
        .into_iter()
        .map(|r| r.to_i64().ok_or_else(|| Error::resource("root exceeds i64")))
        .collect()
}

/// Lattices whose coprime points partition the coprime `(x, y)` with
/// `p^n | F(x, y)`: `x ≡ r y (mod p^n)` for roots of `F(r, 1)` and
/// `y ≡ r' x (mod p^n)` for roots of `F(1, r')` with `p | r'`.
pub fn solution_lattices(form: &BinForm, p: u64, n: u32) -> Result<Vec<Lattice2>> {
    if !form.is_squarefree() {
        return Err(Error::domain(format!("{form} is not square-free")));
    }
    let q = BigInt::from(p).pow(n);
    let q64 = q.to_i64().filter(|&v| v <= 1 << 40).ok_or_else(|| Error::resource("p^n too large"))?;
    let limit = 1 << 22;
    let mut out = Vec::new();
    for r in roots_list(&form.dehomogenize_x(), p, n, limit)? {
        out.push(Lattice2::from_congruence(r, q64, Congruence::XEqRY)?);
    }
    for r in roots_list(&form.dehomogenize_z(), p, n, limit)? {
        if r % p as i64 == 0 {
            out.push(Lattice2::from_congruence(r, q64, Congruence::YEqRX)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gcd(a: i64, b: i64) -> i64 {
        a.gcd(&b)
    }

    #[test]
    fn congruence_examples() {
        let l = Lattice2::from_congruence(0, 2, Congruence::XEqRY).unwrap();
        assert_eq!(l.index(), 2);
        assert!(l.contains(2, 7) && !l.contains(1, 0));
        let l = Lattice2::from_congruence(1, 3, Congruence::XEqRY).unwrap();
        assert_eq!(l.index(), 3);
        assert!(l.contains(4, 1) && l.contains(1, 1));
        assert!(!l.contains(2, 1) && !l.contains(0, 1));
        assert_eq!(Lattice2::from_congruence(0, 1, Congruence::XEqRY).unwrap(), Lattice2::full());
        let t = Lattice2::from_congruence(2, 5, Congruence::YEqRX).unwrap();
        assert_eq!(t.index(), 5);
        assert!(t.contains(1, 2) && t.contains(3, 1) && !t.contains(1, 1));
    }

    #[test]
    fn coprime_count_examples() {
        assert_eq!(count_coprime(&Lattice2::full(), 2, &Sector::Full), 16);
        assert_eq!(count_coprime(&Lattice2::full(), 1, &Sector::Full), 8);
        let even = Lattice2::from_generators(&[(2, 0), (0, 2)]).unwrap();
        assert!(!even.is_primitive());
        assert_eq!(count_coprime(&even, 30, &Sector::Full), 0);
        assert!(penult_estimate(&even, 30, &Sector::Full).is_err());
    }

    #[test]
    fn estimate_examples() {
        let k = 6.0 / (PI * PI);
        let n = 10;
        let full = penult_estimate(&Lattice2::full(), n, &Sector::Full).unwrap();
        assert!((full - 400.0 * k).abs() < 1e-9);
        let half = Sector::between((1, 0), (-1, 0)).unwrap();
        let l2 = Lattice2::from_congruence(1, 2, Congruence::XEqRY).unwrap();
        assert!((penult_estimate(&l2, n, &half).unwrap() - 200.0 * k / 2.0).abs() < 1e-9);
        let quarter = Sector::between((1, 0), (0, 1)).unwrap();
        let l3 = Lattice2::from_congruence(1, 3, Congruence::XEqRY).unwrap();
        assert!((penult_estimate(&l3, n, &quarter).unwrap() - 100.0 * k / 3.0).abs() < 1e-9);
        assert!((coprime_estimate(&l3, n, &quarter).unwrap() - 100.0 * k / 4.0).abs() < 1e-9);
    }

    #[test]
    fn sector_areas() {
        let s = Sector::between((1, 0), (1, 1)).unwrap();
        assert!((s.box_area(2.0) - 2.0).abs() < 1e-12);
        let s = Sector::between((1, 1), (1, 0)).unwrap();
        assert!((s.box_area(2.0) - 14.0).abs() < 1e-12);
        let s = Sector::between((2, 1), (-1, 2)).unwrap();
        assert!((s.box_area(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cone_and_quadrant_areas() {
        let s = Sector::between((2, 1), (-1, 2)).unwrap();
        let (a0, a1) = s.angles();
        assert!((cone_box_area(a0, a1, 1.0) - s.box_area(1.0)).abs() < 1e-12);
        assert!((Sector::Full.quadrant_area(3.0) - 9.0).abs() < 1e-12);
        let upper = Sector::between((1, 0), (-1, 0)).unwrap();
        assert!((upper.quadrant_area(3.0) - 9.0).abs() < 1e-12);
        let lower = Sector::between((-1, 0), (1, 0)).unwrap();
        assert!(lower.quadrant_area(3.0).abs() < 1e-12);
        let wrap = Sector::between((1, -1), (1, 1)).unwrap();
        assert!((wrap.quadrant_area(2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sector_boundary_convention() {
        let q = Sector::between((1, 0), (0, 1)).unwrap();
        assert!(q.contains(5, 0));
        assert!(!q.contains(0, 5));
        assert!(q.contains(3, 3));
        assert!(!q.contains(-1, 1));
        let s = Sector::from_rays(&[(0, 1), (1, 0), (-1, -1)], 0).unwrap();
        assert_eq!(s, Sector::Arc { start: (1, 0), end: (0, 1) });
        let s = Sector::from_rays(&[(0, 1), (1, 0), (-1, -1)], 2).unwrap();
        assert_eq!(s, Sector::Arc { start: (-1, -1), end: (1, 0) });
    }

    #[test]
    fn min_maxnorm_examples() {
        assert_eq!(min_maxnorm(&Lattice2::full()), 1);
        assert_eq!(min_maxnorm(&Lattice2::from_congruence(0, 5, Congruence::XEqRY).unwrap()), 1);
        assert_eq!(min_maxnorm(&Lattice2::from_congruence(2, 5, Congruence::XEqRY).unwrap()), 2);
    }

    #[test]
    fn solution_lattice_examples() {
        let xz = BinForm::from_i64(&[0, 1, 0]).unwrap();
        let ls = solution_lattices(&xz, 3, 1).unwrap();
        assert_eq!(ls.len(), 2);
        assert!(ls.contains(&Lattice2::from_congruence(0, 3, Congruence::XEqRY).unwrap()));
        assert!(ls.contains(&Lattice2::from_congruence(0, 3, Congruence::YEqRX).unwrap()));
        let sum_sq = BinForm::from_i64(&[1, 0, 1]).unwrap();
        assert!(solution_lattices(&sum_sq, 3, 1).unwrap().is_empty());
        let x = BinForm::from_i64(&[0, 1]).unwrap();
        assert_eq!(
            solution_lattices(&x, 7, 2).unwrap(),
            vec![Lattice2::from_congruence(0, 49, Congruence::XEqRY).unwrap()]
        );
        let sq = BinForm::from_i64(&[0, 0, 1]).unwrap();
        assert!(solution_lattices(&sq, 3, 1).is_err());
    }

    #[test]
    fn intersection_of_congruences() {
        let a = Lattice2::from_congruence(1, 4, Congruence::XEqRY).unwrap();
        let b = Lattice2::from_congruence(2, 3, Congruence::XEqRY).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c, Lattice2::from_congruence(5, 12, Congruence::XEqRY).unwrap());
        let d = Lattice2::from_congruence(0, 2, Congruence::YEqRX).unwrap();
        let e = a.intersect(&d).unwrap();
        for x in -20..20 {
            for y in -20..20 {
                assert_eq!(e.contains(x, y), a.contains(x, y) && d.contains(x, y));
            }
        }
    }

    fn lattice_strategy(max_index: i64) -> impl Strategy<Value = Lattice2> {
        (1..=max_index).prop_flat_map(|idx| {
            let divs: Vec<i64> = (1..=idx).filter(|d| idx % d == 0).collect();
            prop::sample::select(divs).prop_flat_map(move |d1| (Just(d1), 0..d1, Just(idx / d1)))
        })
        .prop_map(|(d1, s, d2)| Lattice2::from_hnf(d1, s, d2).unwrap())
    }

    fn sector_strategy() -> impl Strategy<Value = Sector> {
        let dir = (-3i64..=3, -3i64..=3).prop_filter("nonzero", |v| *v != (0, 0));
        prop_oneof![Just(Sector::Full), (dir.clone(), dir).prop_map(|(a, b)| Sector::between(a, b).unwrap())]
    }

    proptest! {
        #[test]
        fn index_matches_residue_count(l in lattice_strategy(60)) {
            let m = l.index();
            let inside = (0..m).flat_map(|x| (0..m).map(move |y| (x, y))).filter(|&(x, y)| l.contains(x, y)).count() as i64;
            prop_assert_eq!(inside * m, m * m);
        }

        #[test]
        fn generators_roundtrip(l in lattice_strategy(200), a in -5i64..5, b in -5i64..5) {
            let (d1, s, d2) = l.hnf();
            let extra = (a * d1 + b * s, b * d2);
            let m = Lattice2::from_generators(&[(s, d2), (d1, 0), extra]).unwrap();
            prop_assert_eq!(m, l);
        }

        #[test]
        fn count_matches_brute_force(l in lattice_strategy(30), s in sector_strategy(), n in 1i64..25) {
            let mut brute = 0u64;
            for x in -n..=n {
                for y in -n..=n {
                    if l.contains(x, y) && s.contains(x, y) && gcd(x, y) == 1 {
                        brute += 1;
                    }
                }
            }
            prop_assert_eq!(count_coprime_with(&l, n, &s, true), brute);
            prop_assert_eq!(count_coprime_with(&l, n, &s, false), brute);
        }

        #[test]
        fn sector_is_a_cone(s in sector_strategy(), x in -20i64..20, y in -20i64..20, t in 1i64..6) {
            prop_assert_eq!(s.contains(x, y), s.contains(t * x, t * y));
        }

        #[test]
        fn area_matches_lattice_point_share(s in sector_strategy()) {
            let n = 150i64;
            let mut pts = 0u64;
            for x in -n..=n {
                for y in -n..=n {
                    if s.contains(x, y) {
                        pts += 1;
                    }
                }
            }
            let area = s.box_area(n as f64);
            prop_assert!((pts as f64 - area).abs() < 4.0 * (2 * n + 1) as f64);
            let (a0, a1) = s.angles();
            prop_assert!((cone_box_area(a0, a1, n as f64) - area).abs() < 1e-6 * area.max(1.0));
            let quad = (1..=n).flat_map(|x| (1..=n).map(move |y| (x, y))).filter(|&(x, y)| s.contains(x, y)).count();
            prop_assert!((quad as f64 - s.quadrant_area(n as f64)).abs() < 2.0 * (2 * n + 1) as f64);
        }

        #[test]
        fn min_maxnorm_matches_search(l in lattice_strategy(400)) {
            let m = min_maxnorm(&l);
            let mut best = i64::MAX;
            for x in -25i64..=25 {
                for y in -25i64..=25 {
                    if (x, y) != (0, 0) && l.contains(x, y) {
                        best = best.min(x.abs().max(y.abs()));
                    }
                }
            }
            prop_assert_eq!(m, best);
        }
    }
}
