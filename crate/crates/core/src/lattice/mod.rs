//! Exact integer and rational linear algebra over `Z^4` and `Q^3`.

pub mod linalg;
pub mod reduce;

use std::fmt;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use linalg::Row;

/// Integer vector `(q, a1, a2, a3)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntVec([Integer; 4]);

impl IntVec {
    pub fn new(q: Integer, a: [Integer; 3]) -> Self {
        let [a1, a2, a3] = a;
        IntVec([q, a1, a2, a3])
    }

    pub fn from_coords(c: [Integer; 4]) -> Self {
        IntVec(c)
    }

    pub fn from_i64(c: [i64; 4]) -> Self {
        IntVec(c.map(Integer::from))
    }

    pub fn q(&self) -> &Integer {
        &self.0[0]
    }

    pub fn a(&self) -> &[Integer] {
        &self.0[1..]
    }

    pub fn coords(&self) -> &[Integer; 4] {
        &self.0
    }

    pub fn into_coords(self) -> [Integer; 4] {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0)
    }

    pub fn dot(&self, other: &IntVec) -> Integer {
        self.0.iter().zip(&other.0).map(|(x, y)| Integer::from(x * y)).sum()
    }

    pub fn norm_sq(&self) -> Integer {
        self.dot(self)
    }

    /// `self + c * other`
    pub fn add_mul(&self, c: &Integer, other: &IntVec) -> IntVec {
        let mut out = self.clone();
        for (x, y) in out.0.iter_mut().zip(&other.0) {
            *x += Integer::from(c * y);
        }
        out
    }

    pub fn sub(&self, other: &IntVec) -> IntVec {
        let mut out = self.clone();
        for (x, y) in out.0.iter_mut().zip(&other.0) {
            *x -= y;
        }
        out
    }

    /// The rational point `a / q`.
    pub fn point(&self) -> Result<RatPoint> {
        if self.0[0] == 0 {
            return Err(Error::domain("vector with q = 0 has no rational point"));
        }
        let q = &self.0[0];
        Ok(RatPoint(
            [1, 2, 3].map(|i| Rational::from((self.0[i].clone(), q.clone()))),
        ))
    }

    pub(crate) fn row(&self) -> Row {
        self.0.to_vec()
    }
}

impl fmt::Display for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

impl Serialize for IntVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        strs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let strs: Vec<String> = Vec::deserialize(d)?;
        if strs.len() != 4 {
            return Err(serde::de::Error::custom("integer vector needs 4 coordinates"));
        }
        let mut c: [Integer; 4] = Default::default();
        for (slot, s) in c.iter_mut().zip(&strs) {
            *slot = s
                .parse::<Integer>()
                .map_err(|e| serde::de::Error::custom(format!("bad integer {s:?}: {e}")))?;
        }
        Ok(IntVec(c))
    }
}

/// Point of `Q^3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoint(pub [Rational; 3]);

impl RatPoint {
    pub fn coords(&self) -> &[Rational; 3] {
        &self.0
    }

    /// `self - other` as a rational 3-vector.
    pub fn sub(&self, other: &RatPoint) -> [Rational; 3] {
        [0, 1, 2].map(|i| Rational::from(&self.0[i] - &other.0[i]))
    }
}

/// Basis of a sublattice of `Z^4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SublatticeBasis {
    pub vectors: Vec<IntVec>,
    pub rank: usize,
    pub saturated: bool,
}

fn rows(vectors: &[IntVec]) -> Vec<Row> {
    vectors.iter().map(IntVec::row).collect()
}

pub fn rank(vectors: &[IntVec]) -> Result<usize> {
    if vectors.is_empty() {
        return Err(Error::domain("rank of an empty list"));
    }
    if let [a, b, c] = vectors {
        if linalg::cross3(&a.0, &b.0, &c.0).iter().any(|x| *x != 0) {
            return Ok(3);
        }
    }
    Ok(linalg::rank(&rows(vectors)))
}

/// Whether `v` lies in the span of three independent vectors with normal `n`.
pub fn in_hyperplane(n: &IntVec, v: &IntVec) -> bool {
    n.dot(v) == 0
}

pub fn det4(v1: &IntVec, v2: &IntVec, v3: &IntVec, v4: &IntVec) -> Integer {
    linalg::det(&rows(&[v1.clone(), v2.clone(), v3.clone(), v4.clone()]))
}

fn check_independent(vectors: &[IntVec], max: usize) -> Result<()> {
    if vectors.is_empty() || vectors.len() > max {
        return Err(Error::domain(format!("expected 1 to {max} vectors, got {}", vectors.len())));
    }
    if linalg::rank(&rows(vectors)) != vectors.len() {
        return Err(Error::domain("vectors are linearly dependent"));
    }
    Ok(())
}

/// Maximal minors of the coordinate matrix.
pub fn minors(vectors: &[IntVec]) -> Vec<Integer> {
    linalg::maximal_minors(&rows(vectors))
}

/// True iff the vectors extend to a basis of `Z^4`.
pub fn is_primitive(vectors: &[IntVec]) -> Result<bool> {
    if let [a, b, c] = vectors {
        let g = linalg::gcd_all(linalg::cross3(&a.0, &b.0, &c.0).iter());
        if g == 0 {
            return Err(Error::domain("vectors are linearly dependent"));
        }
        return Ok(g == 1);
    }
    check_independent(vectors, 4)?;
    Ok(linalg::gcd_all(minors(vectors).iter()) == 1)
}

/// Basis of `Z^4 ∩ span(vectors)`, canonicalized by Hermite normal form.
pub fn saturate(vectors: &[IntVec]) -> Result<SublatticeBasis> {
    check_independent(vectors, 4)?;
    let r = vectors.len();
    let k = linalg::kernel(&rows(vectors), 4);
    let sat = if k.is_empty() {
        (0..4)
            .map(|i| (0..4).map(|j| Integer::from((i == j) as u8)).collect())
            .collect()
    } else {
        linalg::kernel(&k, 4)
    };
    let h = linalg::hnf_rows(&sat);
    debug_assert_eq!(h.len(), r);
    let vectors = h
        .into_iter()
        .map(|row| IntVec(row.try_into().expect("four columns")))
        .collect();
    Ok(SublatticeBasis { vectors, rank: r, saturated: true })
}

/// Determinant of the Gram matrix, the squared covolume of the lattice spanned.
pub fn gram_det_sq(vectors: &[IntVec]) -> Result<Integer> {
    check_independent(vectors, 4)?;
    // Cauchy-Binet: the Gram determinant is the sum of squared maximal minors
    Ok(minors(vectors).iter().map(|m| Integer::from(m.square_ref())).sum())
}

/// Squared height of the rational subspace spanned by a saturated basis.
pub fn height_sq(subspace: &SublatticeBasis) -> Result<Integer> {
    if !subspace.saturated {
        return Err(Error::domain("height needs a saturated basis"));
    }
    gram_det_sq(&subspace.vectors)
}

/// Squared height of `span(vectors)` computed from the maximal minors.
pub fn span_height_sq(vectors: &[IntVec]) -> Result<Integer> {
    if let [a, b, c] = vectors {
        return Ok(normal(a, b, c)?.norm_sq());
    }
    check_independent(vectors, 4)?;
    let ms = minors(vectors);
    let g = linalg::gcd_all(ms.iter());
    let g2 = Integer::from(g.square_ref());
    let s: Integer = ms.iter().map(|m| Integer::from(m.square_ref())).sum();
    Ok(s.div_exact(&g2))
}

/// Primitive normal vector of the hyperplane spanned by three vectors.
pub fn normal(a: &IntVec, b: &IntVec, c: &IntVec) -> Result<IntVec> {
    let n = linalg::cross3(&a.0, &b.0, &c.0);
    let g = linalg::gcd_all(n.iter());
    if g == 0 {
        return Err(Error::domain("vectors are linearly dependent"));
    }
    Ok(IntVec(n.map(|x| x.div_exact(&g))))
}

/// Classification of the angle between two nonzero rational 3-vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AngleWindow {
    /// angle strictly inside `(pi/4, 3pi/4)`
    pub wide: bool,
    /// angle strictly inside `(pi/4, pi/2)`
    pub acute: bool,
}

pub fn angle_window(u: &[Rational; 3], v: &[Rational; 3]) -> Result<AngleWindow> {
    let dot = |x: &[Rational; 3], y: &[Rational; 3]| -> Rational {
        x.iter().zip(y).map(|(a, b)| Rational::from(a * b)).sum()
    };
    let uu = dot(u, u);
    let vv = dot(v, v);
    if uu == 0 || vv == 0 {
        return Err(Error::domain("angle with a zero vector"));
    }
    let uv = dot(u, v);
    let wide = Rational::from(uv.square_ref()) * 2u32 < uu * vv;
    Ok(AngleWindow { wide, acute: wide && uv > 0 })
}

/// Integer-vector variant of [`angle_window`] for common-denominator data.
pub fn angle_window_int(u: &[Integer], v: &[Integer]) -> Result<AngleWindow> {
    let dot = |x: &[Integer], y: &[Integer]| -> Integer {
        x.iter().zip(y).map(|(a, b)| Integer::from(a * b)).sum()
    };
    let uu = dot(u, u);
    let vv = dot(v, v);
    if uu == 0 || vv == 0 {
        return Err(Error::domain("angle with a zero vector"));
    }
    let uv = dot(u, v);
    let wide = Integer::from(uv.square_ref()) * 2u32 < uu * vv;
    Ok(AngleWindow { wide, acute: wide && uv > 0 })
}

/// Default radius schedule for [`complete_to_primitive`].
pub const DEFAULT_RADII: [u32; 4] = [1, 2, 4, 8];

/// Find integer vectors near each target (in order) keeping the whole tuple
/// primitive. Radii beyond the first are searched only up to `|target| / 10`.
pub fn complete_to_primitive(
    fixed: &[IntVec],
    targets: &[[Rational; 4]],
    radius_schedule: &[u32],
) -> Result<Vec<IntVec>> {
    if !fixed.is_empty() && !is_primitive(fixed)? {
        return Err(Error::domain("fixed tuple is not primitive"));
    }
    let mut acc: Vec<IntVec> = fixed.to_vec();
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let found = complete_one(&acc, target, radius_schedule)?;
        acc.push(found.clone());
        out.push(found);
    }
    Ok(out)
}

fn complete_one(fixed: &[IntVec], target: &[Rational; 4], radii: &[u32]) -> Result<IntVec> {
    let center: [Integer; 4] = target.clone().map(|x| x.round().into_numer_denom().0);
    let norm_sq: Rational = target.iter().map(|x| Rational::from(x.square_ref())).sum();
    // radius cap |target|/10, compared in squares
    let cap_sq = norm_sq / 100u32;
    let dist_sq = |v: &[Integer; 4]| -> Rational {
        v.iter()
            .zip(target)
            .map(|(x, t)| Rational::from(x - t).square())
            .sum()
    };
    let mut best: Option<(Rational, IntVec)> = None;
    let mut searched = 0i64;
    for &r in radii {
        let r = r as i64;
        // the first radius is always searched, later ones only below the cap
        if searched > 0 && r * r > cap_sq {
            break;
        }
        let mut cands: Vec<(Rational, [i64; 4], IntVec)> = Vec::new();
        let span = -r..=r;
        for d0 in span.clone() {
            for d1 in span.clone() {
                for d2 in span.clone() {
                    for d3 in span.clone() {
                        let off = [d0, d1, d2, d3];
                        let cheb = off.iter().map(|x| x.abs()).max().unwrap_or(0);
                        if cheb <= searched {
                            continue;
                        }
                        let mut v = center.clone();
                        for (x, o) in v.iter_mut().zip(off) {
                            *x += o;
                        }
                        let d = dist_sq(&v);
                        cands.push((d, off, IntVec(v)));
                    }
                }
            }
        }
        if searched == 0 {
            cands.push((dist_sq(&center), [0; 4], IntVec(center.clone())));
        }
        cands.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        for (d, _, v) in cands {
            if v.is_zero() {
                continue;
            }
            let mut tuple = fixed.to_vec();
            tuple.push(v.clone());
            if linalg::rank(&rows(&tuple)) != tuple.len() {
                continue;
            }
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d.clone(), v.clone()));
            }
            if linalg::gcd_all(minors(&tuple).iter()) == 1 {
                return Ok(v);
            }
        }
        searched = r;
    }
    Err(Error::Completion { best: best.map(|(_, v)| v) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: [i64; 4]) -> IntVec {
        IntVec::from_i64(c)
    }

    fn r3(a: [i64; 3]) -> [Rational; 3] {
        a.map(Rational::from)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[v([1, 0, 0, 0]), v([0, 1, 0, 0]), v([0, 0, 1, 0])]).unwrap(), 3);
        assert_eq!(rank(&[v([1, 0, 0, 0]), v([2, 0, 0, 0])]).unwrap(), 1);
        assert!(rank(&[]).is_err());
    }

    #[test]
    fn det4_examples() {
        let e = [v([1, 0, 0, 0]), v([0, 1, 0, 0]), v([0, 0, 1, 0]), v([0, 0, 0, 1])];
        assert_eq!(det4(&e[0], &e[1], &e[2], &e[3]), 1);
        assert_eq!(det4(&e[0], &e[0], &e[2], &e[3]), 0);
    }

    #[test]
    fn primitivity_examples() {
        assert!(!is_primitive(&[v([2, 0, 0, 0])]).unwrap());
        assert!(is_primitive(&[v([1, 0, 0, 0]), v([0, 1, 0, 0]), v([0, 0, 1, 0])]).unwrap());
        assert!(!is_primitive(&[v([1, 0, 0, 0]), v([0, 1, 0, 0]), v([0, 0, 2, 0])]).unwrap());
        assert!(is_primitive(&[v([1, 0, 0, 0]), v([2, 0, 0, 0])]).is_err());
    }

    #[test]
    fn saturation_examples() {
        let s = saturate(&[v([2, 0, 0, 0])]).unwrap();
        assert_eq!(s.vectors, vec![v([1, 0, 0, 0])]);
        assert!(s.saturated);
        let s = saturate(&[v([1, 1, 0, 0]), v([1, -1, 0, 0])]).unwrap();
        assert_eq!(gram_det_sq(&s.vectors).unwrap(), 1);
        let t = [v([1, 2, 3, 4]), v([0, 1, 5, 2]), v([2, 0, 1, 1])];
        let s = saturate(&t).unwrap();
        assert_eq!(gram_det_sq(&s.vectors).unwrap(), gram_det_sq(&t).unwrap());
    }

    #[test]
    fn gram_and_height_examples() {
        assert_eq!(gram_det_sq(&[v([1, 0, 0, 0]), v([0, 1, 0, 0])]).unwrap(), 1);
        assert_eq!(gram_det_sq(&[v([1, 1, 0, 0])]).unwrap(), 2);
        let s = saturate(&[v([1, 1, 0, 0])]).unwrap();
        assert_eq!(height_sq(&s).unwrap(), 2);
        let raw = SublatticeBasis { vectors: vec![v([2, 0, 0, 0])], rank: 1, saturated: false };
        assert!(height_sq(&raw).is_err());
        assert_eq!(span_height_sq(&[v([2, 2, 0, 0])]).unwrap(), 2);
    }

    #[test]
    fn angle_examples() {
        let a = angle_window(&r3([1, 0, 0]), &r3([0, 1, 0])).unwrap();
        assert!(a.wide && !a.acute);
        let a = angle_window(&r3([1, 0, 0]), &r3([1, 0, 0])).unwrap();
        assert!(!a.wide);
        let a = angle_window(&r3([1, 0, 0]), &r3([1, 1, 0])).unwrap();
        assert!(!a.wide);
        let a = angle_window(&r3([2, 0, 0]), &r3([1, 2, 0])).unwrap();
        assert!(a.wide && a.acute);
        assert!(angle_window(&r3([0, 0, 0]), &r3([1, 0, 0])).is_err());
    }

    #[test]
    fn completion_examples() {
        let fixed = [v([1, 0, 0, 0])];
        let t = [0i64, 2, 0, 0].map(Rational::from);
        let out = complete_to_primitive(&fixed, std::slice::from_ref(&t), &DEFAULT_RADII).unwrap();
        assert_ne!(out[0], v([0, 2, 0, 0]));
        let mut tuple = fixed.to_vec();
        tuple.push(out[0].clone());
        assert!(is_primitive(&tuple).unwrap());

        let big = [Rational::new(), Rational::from(1_000_000), Rational::from(300_000), Rational::from(700_000)];
        let out = complete_to_primitive(&fixed, std::slice::from_ref(&big), &DEFAULT_RADII).unwrap();
        let d: Rational = out[0].coords().iter().zip(&big).map(|(x, t)| Rational::from(x - t).square()).sum();
        assert!(d <= 16);
        assert!(is_primitive(&[fixed[0].clone(), out[0].clone()]).unwrap());
    }
}
