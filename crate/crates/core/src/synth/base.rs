//! The first three vectors.

use std::cmp::Ordering;

use rug::{Float, Integer, Rational};

use super::geom::{direction, dot3, norm3, within, QPoint, V3};
use super::{Kind, NeighborhoodSpec, SynthState};
use crate::error::{Error, Result};
use crate::lattice::linalg::{self, Row};
use crate::lattice::reduce::{enumerate_near_upto, lll};
use crate::lattice::{self, IntVec, DEFAULT_RADII};

const NEAR_CAP: usize = 4096;
/// Expected number of lattice points in the first search ball.
const FIRST_COUNT: u32 = 8;

fn log2_approx(x: &Rational) -> i64 {
    x.numer().significant_bits() as i64 - x.denom().significant_bits() as i64
}

/// Vectors completing a primitive tuple to a basis of `Z^4`.
fn complete_basis(fixed: &[IntVec]) -> Result<Vec<IntVec>> {
    let rows: Vec<Row> = fixed.iter().map(|v| v.coords().to_vec()).collect();
    let (u, pivots) = linalg::column_reduce(&rows, 4);
    if pivots != fixed.len() {
        return Err(Error::domain("fixed vectors are dependent"));
    }
    // rows f..4 of the inverse of the unimodular transform
    let mut a: Vec<Vec<Rational>> = (0..4)
        .map(|i| {
            let mut r: Vec<Rational> = u[i].iter().map(Rational::from).collect();
            r.extend((0..4).map(|j| Rational::from((i == j) as u8)));
            r
        })
        .collect();
    for c in 0..4 {
        let p = (c..4).find(|&i| a[i][c] != 0).expect("unimodular");
        a.swap(c, p);
        let inv = Rational::from(a[c][c].recip_ref());
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..4 {
            if i != c && a[i][c] != 0 {
                let f = a[i][c].clone();
                for j in 0..8 {
                    let t = Rational::from(&f * &a[c][j]);
                    a[i][j] -= t;
                }
            }
        }
    }
    let inv_row = |i: usize| -> IntVec {
        let c: [Integer; 4] = [0, 1, 2, 3].map(|j| a[i][4 + j].numer().clone());
        IntVec::from_coords(c)
    };
    Ok((fixed.len()..4).map(inv_row).collect())
}

fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    a.iter().zip(b).map(|(x, y)| Integer::from(x * y)).sum()
}

/// `g * P v` where `P` projects orthogonally to the rows of `f` and `g` is
/// their Gram determinant; `adj` is the adjugate of the Gram matrix.
fn project_scaled(v: &[Integer], f: &[Row], adj: &[Vec<Integer>], g: &Integer) -> Row {
    let fv: Vec<Integer> = f.iter().map(|r| dot(r, v)).collect();
    let mut out: Row = v.iter().map(|x| Integer::from(x * g)).collect();
    for i in 0..f.len() {
        let coef: Integer = (0..f.len()).map(|j| Integer::from(&adj[i][j] * &fv[j])).sum();
        for (o, fi) in out.iter_mut().zip(&f[i]) {
            *o -= Integer::from(&coef * fi);
        }
    }
    out
}

fn gram_adjugate(f: &[Row]) -> (Vec<Vec<Integer>>, Integer) {
    match f.len() {
        0 => (vec![], Integer::from(1)),
        1 => (vec![vec![Integer::from(1)]], dot(&f[0], &f[0])),
        2 => {
            let (g11, g12, g22) = (dot(&f[0], &f[0]), dot(&f[0], &f[1]), dot(&f[1], &f[1]));
            let det = Integer::from(&g11 * &g22) - Integer::from(g12.square_ref());
            (vec![vec![g22, Integer::from(-&g12)], vec![Integer::from(-&g12), g11]], det)
        }
        _ => unreachable!("at most two fixed vectors"),
    }
}

/// Integer vectors with `q_lo <= q <= q_hi` and `|Z - center| <= delta`, and
/// whether the search was exhaustive.
///
/// Lattice points near the ray through `center` are found by enumeration in
/// the weighted lattice `(q W, D (q c - a))`. The `fixed` vectors, which are
/// very short there, are handled by rounding: cosets of their span are
/// enumerated in the orthogonal projection and each coset contributes the few
/// points nearest the target, so that the new tuple extends `fixed` primitively.
pub(super) fn near_point(
    center: &QPoint,
    fixed: &[IntVec],
    q_lo: &Integer,
    q_hi: &Integer,
    delta: &Rational,
    cap: usize,
) -> Result<(Vec<IntVec>, bool)> {
    let s = (40 - log2_approx(delta)).max(40) as u32;
    let d = Integer::from(1) << s;
    let c: V3 = [0, 1, 2].map(|i| {
        Integer::from(Rational::from((Integer::from(&center.num[i] << s), center.den.clone())).round_ref())
    });
    // ellipsoid around (q_mid W, 0, 0, 0) covering the cylinder q in [q_lo, q_hi]
    let half = (Integer::from(q_hi - q_lo) / 2u32).max(Integer::from(1));
    let q_mid = Integer::from(q_lo + &half);
    let lin = Integer::from(Rational::from(delta * Integer::from(&d * q_hi)).ceil_ref()) + q_hi;
    let weight = (Integer::from(&lin + &half) - 1u32) / &half;
    let weight = weight.max(Integer::from(1));
    let radius_sq = Integer::from(&half * &weight).square() + lin.square();
    let image = |v: &IntVec| -> Row {
        let x = v.coords();
        let mut r = vec![Integer::from(&x[0] * &weight)];
        r.extend((0..3).map(|i| Integer::from(&x[0] * &c[i]) - Integer::from(&d * &x[i + 1])));
        r
    };
    let target: Row = vec![Integer::from(&q_mid * &weight), Integer::new(), Integer::new(), Integer::new()];

    let comp = complete_basis(fixed)?;
    let f_img: Vec<Row> = fixed.iter().map(image).collect();
    let (adj, g) = gram_adjugate(&f_img);
    let proj: Vec<Row> = comp.iter().map(|b| project_scaled(&image(b), &f_img, &adj, &g)).collect();
    let reduced = lll(proj.clone())?;
    // express the reduced rows in the completion basis
    let mut basis = Vec::with_capacity(reduced.len());
    for r in &reduced {
        let t: Vec<Rational> = r.iter().map(Rational::from).collect();
        let y = linalg::solve_in_span(&proj, &t).ok_or_else(|| Error::domain("reduction left the lattice"))?;
        let mut w = IntVec::from_i64([0; 4]);
        for (yi, b) in y.iter().zip(&comp) {
            w = w.add_mul(yi.numer(), b);
        }
        basis.push(w);
    }
    let p_target: Vec<Rational> = project_scaled(&target, &f_img, &adj, &g).iter().map(Rational::from).collect();
    let scaled_r = Rational::from(radius_sq * Integer::from(g.square_ref()));
    let (cosets, complete) = enumerate_near_upto(&reduced, &p_target, &scaled_r, cap);

    let offsets = super::offsets(fixed.len());
    let mut out = Vec::new();
    for x in cosets {
        if linalg::gcd_all(x.iter()) != 1 {
            continue;
        }
        let mut w = IntVec::from_i64([0; 4]);
        for (xi, b) in x.iter().zip(&basis) {
            w = w.add_mul(xi, b);
        }
        // least squares for the fixed coefficients
        let wi = image(&w);
        let resid: Row = target.iter().zip(&wi).map(|(t, v)| Integer::from(t - v)).collect();
        let fr: Vec<Integer> = f_img.iter().map(|r| dot(r, &resid)).collect();
        let y: Vec<Integer> = (0..fixed.len())
            .map(|i| {
                let num: Integer = (0..fixed.len()).map(|j| Integer::from(&adj[i][j] * &fr[j])).sum();
                Integer::from(Rational::from((num, g.clone())).round_ref())
            })
            .collect();
        for off in &offsets {
            let mut z = w.clone();
            for i in 0..fixed.len() {
                z = z.add_mul(&Integer::from(&y[i] + off[i]), &fixed[i]);
            }
            if z.q().cmp0() == Ordering::Less {
                z = IntVec::from_coords(z.coords().clone().map(|v| -v));
            }
            if z.q() < q_lo || z.q() > q_hi {
                continue;
            }
            let (num, den) = QPoint::of(&z).diff(center);
            if within(&num, &den, delta, false) {
                out.push(z);
            }
        }
    }
    Ok((out, complete))
}

fn dist_sq(z: &IntVec, p: &QPoint) -> Rational {
    let (num, den) = QPoint::of(z).diff(p);
    Rational::from((norm3(&num), Integer::from(den.square_ref())))
}

fn power(q: &Integer, e: &Float) -> Integer {
    let prec = e.prec().max(128);
    let v = Float::with_val(prec, Float::with_val(prec, q).ln() * e).exp();
    v.to_integer().expect("finite").max(Integer::from(2))
}

/// Search radii starting where about `FIRST_COUNT` points are expected.
fn radii(q_lo: &Integer, q_hi: &Integer, max: &Rational, doublings: u32) -> Vec<Rational> {
    let prec = 128;
    let fourth = |q: &Integer| Float::with_val(prec, q).square().square();
    let vol = fourth(q_hi) - fourth(q_lo);
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let first = Float::with_val(prec, FIRST_COUNT * 3u32) / (pi * vol);
    let first = Float::with_val(64, first.cbrt()).to_rational().expect("finite");
    let mut r = first.min(max.clone());
    let mut out = vec![r.clone()];
    for _ in 0..doublings {
        if r >= *max {
            break;
        }
        r = Rational::from(&r * 2u32).min(max.clone());
        out.push(r.clone());
    }
    out
}

/// Closest acceptable candidate to `center`, enlarging the radius as needed.
fn search(
    center: &QPoint,
    fixed: &[IntVec],
    q_target: &Integer,
    max: &Rational,
    doublings: u32,
    step: usize,
    accept: impl Fn(&IntVec) -> Result<bool>,
) -> Result<IntVec> {
    let q_lo = Integer::from(q_target / 2u32).max(Integer::from(1));
    let q_hi = Integer::from(q_target * 2u32);
    for delta in radii(&q_lo, &q_hi, max, doublings) {
        let (cands, complete) = near_point(center, fixed, &q_lo, &q_hi, &delta, NEAR_CAP)?;
        let mut best: Option<(Rational, IntVec)> = None;
        for z in cands {
            if !accept(&z)? {
                continue;
            }
            let d = dist_sq(&z, center);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, z));
            }
        }
        if let Some((_, z)) = best {
            return Ok(z);
        }
        if !complete {
            break;
        }
    }
    Err(Error::Step { step, reason: format!("no vector with q near {q_target} in the search ball") })
}

/// A fixed direction completing the plane of the first centre.
fn auxiliary(d1: &V3) -> V3 {
    for cand in [[1, 2, 2], [2, -1, 1], [1, 0, 0]] {
        let v = cand.map(Integer::from);
        let g = (norm3(d1) * norm3(&v)) - Integer::from(dot3(d1, &v).square_ref());
        if g.cmp0() == Ordering::Greater {
            return v;
        }
    }
    unreachable!("three independent directions")
}

pub(super) fn init_triple(st: &mut SynthState, q1: &Integer) -> Result<()> {
    let prec = st.cfg.precision_bits;
    let cap = st.cfg.search_radius_cap;
    // z1 near (1, frac sqrt 2, frac sqrt 3, frac sqrt 5) scaled by q1
    let frac = |n: u32| {
        let s = Float::with_val(prec, n).sqrt();
        let f = Float::with_val(prec, &s - Float::with_val(prec, s.floor_ref()));
        f.to_rational().expect("finite") * q1
    };
    let target = [Rational::from(q1), frac(2), frac(3), frac(5)];
    let z1 = lattice::complete_to_primitive(&[], &[target], &DEFAULT_RADII)?.remove(0);
    let rho1 = st.rho_of(z1.q(), 1);
    st.vectors.push(z1.clone());
    st.rhos.push(rho1.clone());

    // z2 at distance about rho1 from Z1
    let p1 = QPoint::of(&z1);
    let shift = [1u32, 2, 2].map(|c| Rational::from(&rho1 * c) / 3u32);
    let zr = p1.to_rationals();
    let x1 = QPoint::from_rationals(&[0, 1, 2].map(|i| Rational::from(&zr[i] + &shift[i])));
    let q2 = power(z1.q(), st.chain.step_exponent(1));
    let lo_sq = Rational::from(rho1.square_ref()) / 16u32;
    let hi_sq = Rational::from(rho1.square_ref()) * 4u32;
    let z2 = search(&x1, std::slice::from_ref(&z1), &q2, &rho1, cap, 1, |z| {
        let d = dist_sq(z, &p1);
        Ok(d >= lo_sq && d <= hi_sq && lattice::is_primitive(&[z1.clone(), z.clone()])?)
    })?;
    let ball1 = NeighborhoodSpec { center: x1, radius: rho1.clone(), anchor_prev: None, kind: Kind::U };
    st.push(1, z2.clone(), 0, ball1, 'A')?;

    // z3 inside W_2, whose centre lies in the plane of Z1, Z2 and a fixed direction
    let d1 = direction(&z2, &z1);
    let c = st.choose_center(2, &d1, &auxiliary(&d1), None)?;
    let q3 = power(z2.q(), st.chain.step_exponent(2));
    let ball = c.ball.clone();
    let z3 = {
        let st_ref: &SynthState = st;
        search(&ball.center, &[z1.clone(), z2.clone()], &q3, &ball.radius, cap, 2, |z| {
            if st_ref.nests(2, z, &ball).is_none() || lattice::rank(&[z1.clone(), z2.clone(), z.clone()])? < 3 {
                return Ok(false);
            }
            if !lattice::is_primitive(&[z1.clone(), z2.clone(), z.clone()])? {
                return Ok(false);
            }
            Ok(lattice::angle_window_int(&direction(z, &z1), &direction(z, &z2))?.wide)
        })?
    };
    st.push(2, z3, 0, ball, 'B')
}
