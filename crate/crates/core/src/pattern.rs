//! Pattern A/B classification of successive independent triples, the word of
//! a best approximation sequence, the estimate of `k` and the height check on
//! B windows.

use std::collections::BTreeMap;
use std::fmt;

use rug::Integer;
use serde::Serialize;

use crate::engine::ln_integer;
use crate::error::{Error, Result};
use crate::lattice::{det4, in_hyperplane, normal, rank, span_height_sq, IntVec};

pub const DEFAULT_BURN_IN: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Letter {
    A,
    B,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::A => "A",
            Letter::B => "B",
        })
    }
}

/// Finite prefix of the word; letter `i` compares the triples centred at
/// `witnesses[i].0` and `witnesses[i].1` (indices into the vector list).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternWord {
    pub letters: Vec<Letter>,
    pub witnesses: Vec<(usize, usize)>,
    pub burn_in: usize,
}

impl PatternWord {
    pub fn from_letters(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'A' => Ok(Letter::A),
                'B' => Ok(Letter::B),
                _ => Err(Error::Parse(format!("bad letter {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let witnesses = (0..letters.len()).map(|i| (i + 1, i + 2)).collect();
        Ok(PatternWord { letters, witnesses, burn_in: 0 })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn count(&self, letter: Letter) -> usize {
        self.letters.iter().filter(|&&l| l == letter).count()
    }

    /// Smallest `p` such that the word is `p`-periodic after dropping a prefix
    /// shorter than the period plus `skip`; returns the period word.
    pub fn eventual_period(&self, skip: usize) -> Option<String> {
        let tail = self.letters.get(skip..)?;
        for p in 1..=tail.len() / 2 {
            if (p..tail.len()).all(|i| tail[i] == tail[i - p]) {
                // rotate so the period ends with its last B
                let mut unit: Vec<Letter> = tail[tail.len() - p..].to_vec();
                if let Some(last_b) = unit.iter().rposition(|&l| l == Letter::B) {
                    unit.rotate_left(last_b + 1);
                }
                return Some(unit.iter().map(Letter::to_string).collect());
            }
        }
        None
    }
}

impl fmt::Display for PatternWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Centres `nu` of linearly independent triples `z_{nu-1}, z_nu, z_{nu+1}`.
pub fn independent_triple_indices(vectors: &[IntVec]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for nu in 1..vectors.len().saturating_sub(1) {
        if rank(&vectors[nu - 1..=nu + 1])? == 3 {
            out.push(nu);
        }
    }
    Ok(out)
}

/// The word of the sequence, starting from the first independent triple whose
/// first vector has index at least `burn_in`.
pub fn pattern_word(vectors: &[IntVec], burn_in: usize) -> Result<PatternWord> {
    let idx: Vec<usize> = independent_triple_indices(vectors)?
        .into_iter()
        .filter(|&nu| nu > burn_in)
        .collect();
    if idx.len() < 2 {
        return Err(Error::AnalysisWindow(format!(
            "{} independent triples after burn-in {burn_in}, need 2",
            idx.len()
        )));
    }
    let mut letters = Vec::with_capacity(idx.len() - 1);
    let mut witnesses = Vec::with_capacity(idx.len() - 1);
    for w in idx.windows(2) {
        let (nu, j) = (w[0], w[1]);
        let n = normal(&vectors[nu - 1], &vectors[nu], &vectors[nu + 1])?;
        let same = vectors[j - 1..=j + 1].iter().all(|v| in_hyperplane(&n, v));
        letters.push(if same { Letter::A } else { Letter::B });
        witnesses.push((nu, j));
    }
    Ok(PatternWord { letters, witnesses, burn_in })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KValue {
    Finite(usize),
    Infinite,
}

impl fmt::Display for KValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KValue::Finite(k) => write!(f, "{k}"),
            KValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KEstimate {
    pub k_value: KValue,
    /// Number of B letters preceded by a maximal run of exactly `len` letters A.
    pub evidence: BTreeMap<usize, usize>,
    pub rule: String,
}

pub const K_RULE: &str =
    "largest A-run length before a B seen at least twice, once in the final third of the word";

/// Estimate of the largest A-run length that recurs before a B.
pub fn k_estimate(word: &PatternWord) -> Result<KEstimate> {
    let n = word.len();
    let third = (2 * n).div_ceil(3);
    let mut evidence = BTreeMap::new();
    let mut late: BTreeMap<usize, bool> = BTreeMap::new();
    let mut run = 0;
    for (i, l) in word.letters.iter().enumerate() {
        match l {
            Letter::A => run += 1,
            Letter::B => {
                *evidence.entry(run).or_insert(0) += 1;
                if i >= third {
                    late.insert(run, true);
                }
                run = 0;
            }
        }
    }
    let bs = word.count(Letter::B);
    if bs == 0 {
        return Err(Error::AnalysisWindow("no letter B in the word".into()));
    }
    let longest_seen = evidence.keys().max().copied().unwrap_or(0);
    // an open A-run filling the final third that outgrows every closed run
    if run >= n - third && run > 2 * longest_seen.max(1) {
        return Ok(KEstimate { k_value: KValue::Infinite, evidence, rule: K_RULE.into() });
    }
    if bs < 2 {
        return Err(Error::AnalysisWindow("fewer than two letters B".into()));
    }
    let k = evidence
        .iter()
        .filter(|(len, &c)| c >= 2 && late.contains_key(len))
        .map(|(&len, _)| len)
        .max()
        .ok_or_else(|| Error::AnalysisWindow("no A-run length recurs".into()))?;
    Ok(KEstimate { k_value: KValue::Finite(k), evidence, rule: K_RULE.into() })
}

fn ser_ln<S: serde::Serializer>(x: &Integer, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(ln_integer(x))
}

/// Height inequality and independence data for one letter B.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchmidtReport {
    pub nu0: usize,
    pub l: usize,
    /// `ln H^2` of the span of the first triple.
    #[serde(rename = "ln_h2_first", serialize_with = "ser_ln")]
    pub h2_first: Integer,
    #[serde(rename = "ln_h2_second", serialize_with = "ser_ln")]
    pub h2_second: Integer,
    /// The two-dimensional intersection.
    #[serde(rename = "ln_h2_meet", serialize_with = "ser_ln")]
    pub h2_meet: Integer,
    pub holds: bool,
    /// `det(z_{nu0-1}, z_{l-1}, z_l, z_{l+1}) != 0`.
    pub quadruple_independent: bool,
    /// `ln(det Lambda / (xi_{l-1} q_l))` with `Lambda = <z_{l-1}, z_l>`, when remainders are known.
    pub ln_det_ratio: Option<f64>,
}

/// Exact height checks on every letter B. `ln_xi[i]` is `ln |q_i alpha - a_i|`
/// when known; pass an empty slice otherwise.
pub fn schmidt_check(vectors: &[IntVec], ln_xi: &[Option<f64>], word: &PatternWord) -> Result<Vec<SchmidtReport>> {
    let mut out = Vec::new();
    for (letter, &(nu0, l)) in word.letters.iter().zip(&word.witnesses) {
        if *letter != Letter::B {
            continue;
        }
        let first = &vectors[nu0 - 1..=nu0 + 1];
        let second = &vectors[l - 1..=l + 1];
        let h2_first = span_height_sq(first)?;
        let h2_second = span_height_sq(second)?;
        // the orthogonal complement of the meet is spanned by the two normals,
        // and complementary subspaces have equal heights
        let n1 = normal(&first[0], &first[1], &first[2])?;
        let n2 = normal(&second[0], &second[1], &second[2])?;
        let h2_meet = span_height_sq(&[n1, n2])?;
        let holds = Integer::from(&h2_first * &h2_second) >= h2_meet;
        let quadruple_independent =
            det4(&vectors[nu0 - 1], &vectors[l - 1], &vectors[l], &vectors[l + 1]) != 0;
        let ln_det_ratio = ln_xi.get(l - 1).copied().flatten().map(|lx| {
            let gram = span_gram(&vectors[l - 1], &vectors[l]);
            0.5 * ln_integer(&gram) - lx - ln_integer(vectors[l].q())
        });
        out.push(SchmidtReport {
            nu0,
            l,
            h2_first,
            h2_second,
            h2_meet,
            holds,
            quadruple_independent,
            ln_det_ratio,
        });
    }
    Ok(out)
}

fn span_gram(a: &IntVec, b: &IntVec) -> Integer {
    let aa = a.norm_sq();
    let bb = b.norm_sq();
    let ab = a.dot(b);
    aa * bb - ab.square()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: [i64; 4]) -> IntVec {
        IntVec::from_i64(c)
    }

    #[test]
    fn k_examples() {
        let k = |s: &str| k_estimate(&PatternWord::from_letters(s).unwrap()).unwrap().k_value;
        assert_eq!(k("ABABAB"), KValue::Finite(1));
        assert_eq!(k("AABAABAAB"), KValue::Finite(2));
        assert_eq!(k("BBBB"), KValue::Finite(0));
        assert_eq!(k("BBAAAAAAAAAAAAAAAA"), KValue::Infinite);
        assert!(k_estimate(&PatternWord::from_letters("AAAA").unwrap()).is_err());
    }

    #[test]
    fn period_detection() {
        let w = PatternWord::from_letters("BAABAABAABAAB").unwrap();
        assert_eq!(w.eventual_period(0).as_deref(), Some("AAB"));
        let w = PatternWord::from_letters("ABABAB").unwrap();
        assert_eq!(w.eventual_period(0).as_deref(), Some("AB"));
    }

    #[test]
    fn planar_sequence_has_no_triples() {
        let vs: Vec<IntVec> = (1..8).map(|i| v([i, i * i, 0, 0])).collect();
        assert!(independent_triple_indices(&vs).unwrap().is_empty());
        assert!(pattern_word(&vs, 0).is_err());
    }

    #[test]
    fn letters_from_spans() {
        // triples centred at 1 and 2 span e1..e3; the next adds e4
        let vs = vec![v([1, 0, 0, 0]), v([0, 1, 0, 0]), v([0, 0, 1, 0]), v([1, 1, 1, 0]), v([0, 0, 0, 1])];
        let w = pattern_word(&vs, 0).unwrap();
        assert_eq!(w.to_string(), "AB");
        assert_eq!(w.witnesses, vec![(1, 2), (2, 3)]);
        let reports = schmidt_check(&vs, &[], &w).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].holds);
        assert!(reports[0].quadruple_independent);
    }

    #[test]
    fn schmidt_fixture() {
        // first span e1,e2,e3 and second span e1,e2,e4 meet in span e1,e2
        let vs = vec![v([1, 0, 0, 0]), v([0, 1, 0, 0]), v([0, 0, 1, 0]), v([0, 0, 0, 1]), v([1, 0, 0, 0])];
        let word = PatternWord { letters: vec![Letter::B], witnesses: vec![(1, 3)], burn_in: 0 };
        let r = &schmidt_check(&vs, &[], &word).unwrap()[0];
        assert_eq!((r.h2_first.to_u32(), r.h2_second.to_u32(), r.h2_meet.to_u32()), (Some(1), Some(1), Some(1)));
        assert!(r.holds);
    }
}
