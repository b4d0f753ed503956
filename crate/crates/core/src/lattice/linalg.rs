//! Fraction-free integer linear algebra on small dense matrices.

use rug::{Assign, Integer};

pub type Row = Vec<Integer>;

/// Determinant of a square integer matrix by Bareiss elimination.
pub fn det(m: &[Row]) -> Integer {
    let n = m.len();
    if n == 0 {
        return Integer::from(1);
    }
    let mut a: Vec<Row> = m.to_vec();
    let mut sign = 1i32;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Integer::new(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let mut t = Integer::from(&a[i][j] * &a[k][k]);
                t -= Integer::from(&a[i][k] * &a[k][j]);
                t.div_exact_mut(&prev);
                a[i][j] = t;
            }
        }
        prev.assign(&a[k][k]);
    }
    let mut d = a[n - 1][n - 1].clone();
    if sign < 0 {
        d = -d;
    }
    d
}

/// Rank over the rationals.
pub fn rank(rows: &[Row]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut a: Vec<Row> = rows.to_vec();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..a.len() {
            if a[i][c] == 0 {
                continue;
            }
            let f = a[i][c].clone();
            let g = a[r][c].clone();
            for j in c..ncols {
                let t = Integer::from(&a[i][j] * &g) - Integer::from(&a[r][j] * &f);
                a[i][j] = t;
            }
            // keep entries small
            let mut cont = Integer::new();
            for x in &a[i] {
                cont.gcd_mut(x);
            }
            if cont > 1 {
                for x in a[i].iter_mut() {
                    x.div_exact_mut(&cont);
                }
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

/// All column subsets of size `r` from `0..n`, lexicographic.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Maximal minors of an `r x n` matrix, in lexicographic column order.
pub fn maximal_minors(rows: &[Row]) -> Vec<Integer> {
    let r = rows.len();
    let n = rows.first().map_or(0, |x| x.len());
    combinations(n, r)
        .into_iter()
        .map(|cols| {
            let sub: Vec<Row> = rows
                .iter()
                .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
                .collect();
            det(&sub)
        })
        .collect()
}

pub fn gcd_all<'a>(xs: impl IntoIterator<Item = &'a Integer>) -> Integer {
    let mut g = Integer::new();
    for x in xs {
        g.gcd_mut(x);
    }
    g
}

/// Generalized cross product of three vectors in `Z^4`.
///
/// The result `n` satisfies `n . x = det(x, a, b, c)` for every `x`.
pub fn cross3(a: &[Integer], b: &[Integer], c: &[Integer]) -> [Integer; 4] {
    let mut out: [Integer; 4] = Default::default();
    for (i, slot) in out.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&j| j != i).collect();
        let sub: Vec<Row> = [a, b, c]
            .iter()
            .map(|row| cols.iter().map(|&j| row[j].clone()).collect())
            .collect();
        let d = det(&sub);
        *slot = if i % 2 == 0 { d } else { -d };
    }
    out
}

/// Column operations reducing `a` to `[H | 0]`; returns the unimodular transform.
///
/// Columns `pivots..n` of the transform span the integer kernel of `a`.
pub fn column_reduce(a: &[Row], ncols: usize) -> (Vec<Row>, usize) {
    let mut m: Vec<Row> = a.to_vec();
    let mut u: Vec<Row> = (0..ncols)
        .map(|i| (0..ncols).map(|j| Integer::from((i == j) as u8)).collect())
        .collect();
    let mut pc = 0;
    for i in 0..m.len() {
        if pc == ncols {
            break;
        }
        for j in pc + 1..ncols {
            if m[i][j] == 0 {
                continue;
            }
            let a0 = m[i][pc].clone();
            let b0 = m[i][j].clone();
            let (g, s, t) = a0.clone().gcd_cofactors(b0.clone(), Integer::new());
            let bg = Integer::from(b0.div_exact_ref(&g));
            let ag = Integer::from(a0.div_exact_ref(&g));
            col_combine(&mut m, pc, j, &s, &t, &bg, &ag);
            col_combine(&mut u, pc, j, &s, &t, &bg, &ag);
        }
        if m[i][pc] != 0 {
            if m[i][pc] < 0 {
                for row in m.iter_mut() {
                    row[pc] = -row[pc].clone();
                }
                for row in u.iter_mut() {
                    row[pc] = -row[pc].clone();
                }
            }
            pc += 1;
        }
    }
    (u, pc)
}

// (c_p, c_j) <- (s c_p + t c_j, -bg c_p + ag c_j)
fn col_combine(m: &mut [Row], p: usize, j: usize, s: &Integer, t: &Integer, bg: &Integer, ag: &Integer) {
    for row in m.iter_mut() {
        let x = row[p].clone();
        let y = row[j].clone();
        row[p] = Integer::from(s * &x) + Integer::from(t * &y);
        row[j] = Integer::from(ag * &y) - Integer::from(bg * &x);
    }
}

/// Basis (as rows) of the integer kernel `{x : a x = 0}`.
pub fn kernel(a: &[Row], ncols: usize) -> Vec<Row> {
    let (u, pc) = column_reduce(a, ncols);
    (pc..ncols)
        .map(|c| u.iter().map(|row| row[c].clone()).collect())
        .collect()
}

/// Row Hermite normal form with zero rows removed.
pub fn hnf_rows(rows: &[Row]) -> Vec<Row> {
    if rows.is_empty() {
        return Vec::new();
    }
    let ncols = rows[0].len();
    let mut a: Vec<Row> = rows.to_vec();
    let mut r = 0;
    for c in 0..ncols {
        if r == a.len() {
            break;
        }
        // gcd-combine rows r.. in column c into row r
        for i in r + 1..a.len() {
            if a[i][c] == 0 {
                continue;
            }
            if a[r][c] == 0 {
                a.swap(r, i);
                continue;
            }
            let x = a[r][c].clone();
            let y = a[i][c].clone();
            let (g, s, t) = x.clone().gcd_cofactors(y.clone(), Integer::new());
            let yg = Integer::from(y.div_exact_ref(&g));
            let xg = Integer::from(x.div_exact_ref(&g));
            for j in 0..ncols {
                let p = a[r][j].clone();
                let q = a[i][j].clone();
                a[r][j] = Integer::from(&s * &p) + Integer::from(&t * &q);
                a[i][j] = Integer::from(&xg * &q) - Integer::from(&yg * &p);
            }
        }
        if a[r][c] == 0 {
            continue;
        }
        if a[r][c] < 0 {
            for x in a[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let (f, _) = a[i][c].clone().div_rem_floor(a[r][c].clone());
            if f != 0 {
                for j in 0..ncols {
                    let t = Integer::from(&f * &a[r][j]);
                    a[i][j] -= t;
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Solve `sum_i y_i rows[i] = target` exactly, for independent rows whose
/// span contains `target`. Returns `None` when the system is inconsistent.
pub fn solve_in_span(rows: &[Row], target: &[rug::Rational]) -> Option<Vec<rug::Rational>> {
    use rug::Rational;
    let r = rows.len();
    let n = target.len();
    // augmented system: columns are the unknowns, one equation per coordinate
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|c| {
            let mut eq: Vec<Rational> = rows.iter().map(|row| Rational::from(&row[c])).collect();
            eq.push(target[c].clone());
            eq
        })
        .collect();
    let mut piv_row = 0;
    let mut piv_cols = Vec::new();
    for col in 0..r {
        let Some(p) = (piv_row..n).find(|&i| a[i][col] != 0) else {
            return None;
        };
        a.swap(piv_row, p);
        let inv = Rational::from(a[piv_row][col].recip_ref());
        for x in a[piv_row].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != piv_row && a[i][col] != 0 {
                let f = a[i][col].clone();
                for j in col..=r {
                    let t = Rational::from(&f * &a[piv_row][j]);
                    a[i][j] -= t;
                }
            }
        }
        piv_cols.push(col);
        piv_row += 1;
    }
    if a[piv_row..].iter().any(|eq| eq[r] != 0) {
        return None;
    }
    Some((0..r).map(|i| a[i][r].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Row> {
        rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect()
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let a = m(&[&[2, -1, 0, 3], &[1, 4, 2, -2], &[0, 5, -3, 1], &[7, 0, 1, 1]]);
        assert_eq!(det(&a), 343);
        let b = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(det(&b), -1);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let a = m(&[&[1, 2, 3, 4], &[2, 4, 6, 8], &[0, 1, 0, 0]]);
        assert_eq!(rank(&a), 2);
    }

    #[test]
    fn cross3_is_orthogonal() {
        let a = m(&[&[3, 1, 4, 1], &[5, 9, 2, 6], &[5, 3, 5, 8]]);
        let n = cross3(&a[0], &a[1], &a[2]);
        for row in &a {
            let d: Integer = row.iter().zip(n.iter()).map(|(x, y)| Integer::from(x * y)).sum();
            assert_eq!(d, 0);
        }
    }

    #[test]
    fn kernel_spans_solutions() {
        let a = m(&[&[2, 4, 6, 8]]);
        let k = kernel(&a, 4);
        assert_eq!(k.len(), 3);
        for v in &k {
            let d: Integer = v.iter().zip(a[0].iter()).map(|(x, y)| Integer::from(x * y)).sum();
            assert_eq!(d, 0);
        }
        // saturated: the kernel lattice has unit content
        assert_eq!(gcd_all(maximal_minors(&k).iter()), 1);
    }

    #[test]
    fn hnf_is_canonical() {
        let a = m(&[&[2, 0, 0, 0], &[0, 2, 0, 0], &[1, 1, 0, 0]]);
        let h = hnf_rows(&a);
        assert_eq!(h, m(&[&[1, 1, 0, 0], &[0, 2, 0, 0]]));
    }
}
