//! Exact geometry on rational points of `R^3` with shared denominators.

use std::cmp::Ordering;

use rug::{Float, Integer, Rational};

use crate::lattice::IntVec;

pub type V3 = [Integer; 3];

pub fn dot3(a: &V3, b: &V3) -> Integer {
    a.iter().zip(b).map(|(x, y)| Integer::from(x * y)).sum()
}

pub fn norm3(a: &V3) -> Integer {
    dot3(a, a)
}

/// `q_s a_t - q_t a_s`, a positive multiple of `Z_t - Z_s`.
pub fn direction(from: &IntVec, to: &IntVec) -> V3 {
    let (qf, qt) = (from.q(), to.q());
    let (af, at) = (from.a(), to.a());
    [0, 1, 2].map(|i| Integer::from(&at[i] * qf) - Integer::from(&af[i] * qt))
}

/// Spatial part of a vector of `Z^4` whose first coordinate vanishes.
pub fn spatial(v: &[Integer; 4]) -> V3 {
    [v[1].clone(), v[2].clone(), v[3].clone()]
}

/// A point `num / den` of `Q^3` kept unnormalized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPoint {
    pub num: V3,
    pub den: Integer,
}

impl QPoint {
    pub fn of(z: &IntVec) -> QPoint {
        QPoint { num: [0, 1, 2].map(|i| z.a()[i].clone()), den: z.q().clone() }
    }

    pub fn from_rationals(x: &[Rational; 3]) -> QPoint {
        let mut den = Integer::from(1);
        for c in x {
            den.lcm_mut(c.denom());
        }
        let num = [0, 1, 2].map(|i| {
            let (n, d) = (x[i].numer(), x[i].denom());
            n * Integer::from(&den / d)
        });
        QPoint { num, den }
    }

    pub fn to_rationals(&self) -> [Rational; 3] {
        [0, 1, 2].map(|i| Rational::from((self.num[i].clone(), self.den.clone())))
    }

    /// The point shifted by `offset / 2^s`.
    pub fn shifted(&self, offset: &V3, s: u32) -> QPoint {
        let den = Integer::from(&self.den << s);
        let num = [0, 1, 2].map(|i| Integer::from(&self.num[i] << s) + Integer::from(&self.den * &offset[i]));
        QPoint { num, den }
    }

    /// Numerator and denominator of `self - other`.
    pub fn diff(&self, other: &QPoint) -> (V3, Integer) {
        let num = [0, 1, 2].map(|i| {
            Integer::from(&self.num[i] * &other.den) - Integer::from(&other.num[i] * &self.den)
        });
        (num, Integer::from(&self.den * &other.den))
    }

    /// `(den, num)` as a vector of `R^4` on the ray through `(1, X)`.
    pub fn lift(&self) -> [Integer; 4] {
        [self.den.clone(), self.num[0].clone(), self.num[1].clone(), self.num[2].clone()]
    }

    pub fn to_f64(&self) -> [f64; 3] {
        let d = Float::with_val(64, &self.den);
        [0, 1, 2].map(|i| (Float::with_val(64, &self.num[i]) / &d).to_f64())
    }
}

/// `|num / den|^2 <= r^2` (or `<`), compared exactly.
pub fn within(num: &V3, den: &Integer, r: &Rational, strict: bool) -> bool {
    if r.cmp0() == Ordering::Less {
        return false;
    }
    let lhs = norm3(num) * Integer::from(r.denom().square_ref());
    let rhs = Integer::from(r.numer().square_ref()) * Integer::from(den.square_ref());
    if strict {
        lhs < rhs
    } else {
        lhs <= rhs
    }
}

/// `ln |num / den|`.
pub fn ln_norm(num: &V3, den: &Integer) -> f64 {
    let n = norm3(num);
    0.5 * Float::with_val(64, &n).ln().to_f64() - Float::with_val(64, den).ln().to_f64()
}

/// Whether the ball `B(z + u/a, r)` lies inside the angular neighbourhood
/// `{ |Y - z| <= rho, pi/4 < angle(v, Y - z) < pi/2 }`, exactly.
pub fn ball_in_cone(u: &V3, a: &Integer, r: &Rational, v: &V3, rho: &Rational) -> bool {
    let c = dot3(u, v);
    if c.cmp0() != Ordering::Greater {
        return false;
    }
    let (m, n) = (r.numer(), r.denom());
    let uu = norm3(u);
    let vv = norm3(v);
    let m2 = Integer::from(m.square_ref());
    let n2 = Integer::from(n.square_ref());
    let a2 = Integer::from(a.square_ref());
    let c2 = Integer::from(c.square_ref());
    // the ball stays on the acute side of the plane orthogonal to v
    let m2a2vv = Integer::from(&m2 * &a2) * &vv;
    if Integer::from(&c2 * &n2) <= m2a2vv {
        return false;
    }
    // distance to the cone of half-angle pi/4 exceeds r
    let t = (&n2 * (Integer::from(&uu * &vv) - Integer::from(&c2 * 2u32))) - Integer::from(&m2a2vv * 2u32);
    if t.cmp0() != Ordering::Greater {
        return false;
    }
    let lhs = Integer::from(t.square_ref());
    let rhs = Integer::from(&m2a2vv * 8u32) * &n2 * &c2;
    if lhs <= rhs {
        return false;
    }
    // inside the ball of radius rho: |u|/a + r <= rho
    let slack = Rational::from(rho - r);
    if slack.cmp0() == Ordering::Less {
        return false;
    }
    within(u, a, &slack, false)
}

/// `rho = q^(-u)` rounded to a 64-bit dyadic.
pub fn rho(q: &Integer, u: &Float) -> Rational {
    let prec = u.prec().max(128);
    let log2q = Float::with_val(prec, q).log2();
    let e = -Float::with_val(prec, log2q * u);
    let v = Float::with_val(64, Float::with_val(prec, e).exp2());
    v.to_rational().expect("finite")
}

/// Primitive normal of a hyperplane in its lattice, and a solution of `n . w = 1`.
pub fn bezout(n: &[Integer; 4]) -> Option<[Integer; 4]> {
    // fold extended gcds: g_i = gcd(n_0..n_i) = sum c_j n_j
    let mut g = n[0].clone();
    let mut coeffs: Vec<Integer> = vec![Integer::from(1)];
    for x in &n[1..] {
        let (d, s, t) = g.clone().gcd_cofactors(x.clone(), Integer::new());
        for c in coeffs.iter_mut() {
            *c *= &s;
        }
        coeffs.push(t);
        g = d;
    }
    if g.cmp0() == Ordering::Less {
        g = -g;
        for c in coeffs.iter_mut() {
            *c = Integer::from(-&*c);
        }
    }
    if g != 1 {
        return None;
    }
    Some([coeffs[0].clone(), coeffs[1].clone(), coeffs[2].clone(), coeffs[3].clone()])
}
