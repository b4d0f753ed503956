//! Integral LLL reduction and exact Fincke-Pohst enumeration.

use rug::{Integer, Rational};

use super::linalg::Row;
use crate::error::{Error, Result};

fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    a.iter().zip(b).map(|(x, y)| Integer::from(x * y)).sum()
}

/// LLL-reduce independent integer rows (delta = 3/4), all-integer variant.
pub fn lll(mut b: Vec<Row>) -> Result<Vec<Row>> {
    let n = b.len();
    if n <= 1 {
        return Ok(b);
    }
    // d[i] is the Gram determinant of the first i vectors; lam[k][j] scaled mu
    let mut d: Vec<Integer> = vec![Integer::from(1); n + 1];
    let mut lam: Vec<Vec<Integer>> = vec![vec![Integer::new(); n]; n];
    d[1] = dot(&b[0], &b[0]);
    if d[1] == 0 {
        return Err(Error::domain("LLL input has a zero vector"));
    }
    let mut k = 1usize;
    let mut kmax = 0usize;
    while k < n {
        if k > kmax {
            kmax = k;
            for j in 0..=k {
                let mut u = dot(&b[k], &b[j]);
                for i in 0..j {
                    u = Integer::from(&d[i + 1] * &u) - Integer::from(&lam[k][i] * &lam[j][i]);
                    u.div_exact_mut(&d[i]);
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u == 0 {
                        return Err(Error::domain("LLL input is linearly dependent"));
                    }
                    d[k + 1] = u;
                }
            }
        }
        loop {
            red(&mut b, &mut lam, &d, k, k - 1);
            let lhs = Integer::from(&d[k + 1] * &d[k - 1]) * 4u32;
            let rhs = Integer::from(d[k].square_ref()) * 3u32
                - Integer::from(lam[k][k - 1].square_ref()) * 4u32;
            if lhs < rhs {
                swap(&mut b, &mut lam, &mut d, k, kmax);
                if k > 1 {
                    k -= 1;
                }
            } else {
                for l in (0..k.saturating_sub(1)).rev() {
                    red(&mut b, &mut lam, &d, k, l);
                }
                k += 1;
                break;
            }
        }
    }
    Ok(b)
}

fn red(b: &mut [Row], lam: &mut [Vec<Integer>], d: &[Integer], k: usize, l: usize) {
    let two_lam = Integer::from(&lam[k][l] * 2u32);
    if two_lam.clone().abs() <= d[l + 1] {
        return;
    }
    let (qr, _) = lam[k][l].clone().div_rem_round(d[l + 1].clone());
    let bl = b[l].clone();
    for (x, y) in b[k].iter_mut().zip(bl.iter()) {
        *x -= Integer::from(&qr * y);
    }
    lam[k][l] -= Integer::from(&qr * &d[l + 1]);
    for i in 0..l {
        let t = Integer::from(&qr * &lam[l][i]);
        lam[k][i] -= t;
    }
}

fn swap(b: &mut [Row], lam: &mut [Vec<Integer>], d: &mut [Integer], k: usize, kmax: usize) {
    b.swap(k, k - 1);
    for j in 0..k - 1 {
        let t = lam[k][j].clone();
        lam[k][j] = lam[k - 1][j].clone();
        lam[k - 1][j] = t;
    }
    let l = lam[k][k - 1].clone();
    let mut bb = Integer::from(&d[k - 1] * &d[k + 1]) + Integer::from(l.square_ref());
    bb.div_exact_mut(&d[k]);
    for i in k + 1..=kmax {
        let t = lam[i][k].clone();
        let mut nk = Integer::from(&d[k + 1] * &lam[i][k - 1]) - Integer::from(&l * &t);
        nk.div_exact_mut(&d[k]);
        let mut nk1 = Integer::from(&bb * &t) + Integer::from(&l * &nk);
        nk1.div_exact_mut(&d[k + 1]);
        lam[i][k] = nk;
        lam[i][k - 1] = nk1;
    }
    d[k] = bb;
}

/// Exact Gram-Schmidt data of a basis.
struct Gso {
    bstar_sq: Vec<Rational>,
    mu: Vec<Vec<Rational>>,
    bstar: Vec<Vec<Rational>>,
}

fn gso(b: &[Row]) -> Gso {
    let n = b.len();
    let mut bstar: Vec<Vec<Rational>> = Vec::with_capacity(n);
    let mut bstar_sq = Vec::with_capacity(n);
    let mut mu = vec![vec![Rational::new(); n]; n];
    for i in 0..n {
        let mut v: Vec<Rational> = b[i].iter().map(Rational::from).collect();
        for j in 0..i {
            let num: Rational = b[i]
                .iter()
                .zip(&bstar[j])
                .map(|(x, y)| Rational::from(x * y))
                .sum();
            let m = num / &bstar_sq[j];
            for (vc, bc) in v.iter_mut().zip(&bstar[j]) {
                *vc -= Rational::from(&m * bc);
            }
            mu[i][j] = m;
        }
        let sq: Rational = v.iter().map(|x| Rational::from(x.square_ref())).sum();
        bstar_sq.push(sq);
        bstar.push(v);
    }
    Gso { bstar_sq, mu, bstar }
}

/// Coefficient vectors of all lattice vectors `v` with `|v - target|^2 <= radius_sq`.
/// Fails once more than `cap` are found.
pub fn enumerate_near(
    basis: &[Row],
    target: &[Rational],
    radius_sq: &Rational,
    cap: usize,
) -> Result<Vec<Row>> {
    let (out, complete) = enumerate_near_upto(basis, target, radius_sq, cap);
    if complete {
        Ok(out)
    } else {
        Err(Error::EnumerationCap { cap })
    }
}

/// Like [`enumerate_near`] but returns the first `cap` vectors found and
/// whether the list is complete.
pub fn enumerate_near_upto(basis: &[Row], target: &[Rational], radius_sq: &Rational, cap: usize) -> (Vec<Row>, bool) {
    let n = basis.len();
    let g = gso(basis);
    // target in GSO coordinates, then in basis coordinates
    let tau: Vec<Rational> = (0..n)
        .map(|j| {
            let num: Rational = target
                .iter()
                .zip(&g.bstar[j])
                .map(|(x, y)| Rational::from(x * y))
                .sum();
            num / &g.bstar_sq[j]
        })
        .collect();
    let mut y = vec![Rational::new(); n];
    for j in (0..n).rev() {
        let mut v = tau[j].clone();
        for i in j + 1..n {
            v -= Rational::from(&g.mu[i][j] * &y[i]);
        }
        y[j] = v;
    }

    let mut out = Vec::new();
    let mut x = vec![Integer::new(); n];
    let complete = search(&g, &y, n, radius_sq.clone(), &mut x, &mut out, cap).is_ok();
    (out, complete)
}

fn search(
    g: &Gso,
    y: &[Rational],
    level: usize,
    rem: Rational,
    x: &mut Vec<Integer>,
    out: &mut Vec<Row>,
    cap: usize,
) -> Result<()> {
    if level == 0 {
        if out.len() >= cap {
            return Err(Error::EnumerationCap { cap });
        }
        out.push(x.clone());
        return Ok(());
    }
    let j = level - 1;
    let n = y.len();
    let mut c = y[j].clone();
    for i in j + 1..n {
        let diff = Rational::from(&x[i] - &y[i]);
        c -= Rational::from(&g.mu[i][j] * &diff);
    }
    let s = Rational::from(&rem / &g.bstar_sq[j]);
    let u = Integer::from(s.ceil_ref()).sqrt() + 1u32;
    let lo = Integer::from(c.floor_ref()) - &u;
    let hi = Integer::from(c.ceil_ref()) + &u;
    let mut xi = lo;
    while xi <= hi {
        let d = Rational::from(&xi - &c);
        let t = Rational::from(d.square_ref()) * &g.bstar_sq[j];
        if t <= rem {
            x[j] = xi.clone();
            search(g, y, level - 1, Rational::from(&rem - &t), x, out, cap)?;
        }
        xi += 1u32;
    }
    Ok(())
}

/// Ambient coordinates of a coefficient vector.
pub fn combine(basis: &[Row], coeffs: &[Integer]) -> Row {
    let dim = basis[0].len();
    let mut v = vec![Integer::new(); dim];
    for (c, b) in coeffs.iter().zip(basis) {
        if *c == 0 {
            continue;
        }
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi += Integer::from(c * bi);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::super::linalg::det;
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Row> {
        rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect()
    }

    #[test]
    fn lll_preserves_volume_and_shortens() {
        let b = m(&[&[1, 0, 0, 31416], &[0, 1, 0, 27183], &[0, 0, 1, 14142], &[0, 0, 0, 100000]]);
        let r = lll(b.clone()).unwrap();
        assert_eq!(det(&b).abs(), det(&r).abs());
        let n0: Integer = r[0].iter().map(|x| Integer::from(x.square_ref())).sum();
        assert!(n0 < 100_000);
    }

    #[test]
    fn enumeration_counts_points_in_ball() {
        let b = m(&[&[1, 0], &[0, 1]]);
        let t = vec![Rational::new(), Rational::new()];
        let pts = enumerate_near(&b, &t, &Rational::from(2), 100).unwrap();
        // (0,0), 4 axis points, 4 diagonal points
        assert_eq!(pts.len(), 9);
        let shifted = vec![Rational::from((1, 2)), Rational::new()];
        let pts = enumerate_near(&b, &shifted, &Rational::from((1, 4)), 100).unwrap();
        assert_eq!(pts.len(), 2);
    }
}
