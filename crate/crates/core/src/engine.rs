//! Best simultaneous approximations in the Euclidean norm and exponent
//! estimates derived from them.

use std::cmp::Ordering;
use std::fmt;

use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{remainder_sq, Nearest, RatInterval};
use crate::lattice::linalg::Row;
use crate::lattice::reduce::{combine, enumerate_near, lll};
use crate::lattice::IntVec;

/// Shrinks a target enclosure on demand.
pub trait Refiner: Send {
    /// An enclosure of width about `2^-bits` per coordinate, or the best available.
    fn refine(&mut self, bits: u32) -> Result<Vec<RatInterval>>;
}

/// Refiner backed by a function evaluating the coordinates at a given float precision.
pub struct FnRefiner<F>(pub F);

impl<F> Refiner for FnRefiner<F>
where
    F: Fn(u32) -> Vec<Float> + Send,
{
    fn refine(&mut self, bits: u32) -> Result<Vec<RatInterval>> {
        (self.0)(bits + 16).iter().map(|x| RatInterval::from_float(x, 2)).collect()
    }
}

/// A point of `R^n`, `n` in 1..=3, known through a rational enclosure.
pub struct Target {
    enclosure: Vec<RatInterval>,
    bits: u32,
    refiner: Option<Box<dyn Refiner>>,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Target")
            .field("enclosure", &self.enclosure)
            .field("bits", &self.bits)
            .field("refiner", &self.refiner.is_some())
            .finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::domain(format!("target dimension {n} not in 1..=3")));
    }
    Ok(())
}

impl Target {
    pub fn new(enclosure: Vec<RatInterval>, refiner: Option<Box<dyn Refiner>>) -> Result<Self> {
        check_dim(enclosure.len())?;
        let bits = enclosure_bits(&enclosure);
        Ok(Target { enclosure, bits, refiner })
    }

    /// An exactly known rational point.
    pub fn exact(coords: Vec<Rational>) -> Result<Self> {
        Target::new(coords.into_iter().map(RatInterval::point).collect(), None)
    }

    /// A point computed to any precision by `f`, assumed correct to within an ulp.
    pub fn from_fn<F>(dim: usize, f: F, bits: u32) -> Result<Self>
    where
        F: Fn(u32) -> Vec<Float> + Send + 'static,
    {
        check_dim(dim)?;
        let mut refiner = FnRefiner(f);
        let enclosure = refiner.refine(bits)?;
        if enclosure.len() != dim {
            return Err(Error::domain("refiner returned the wrong dimension"));
        }
        Target::new(enclosure, Some(Box::new(refiner)))
    }

    /// `(sqrt 5 - 1) / 2`.
    pub fn golden(bits: u32) -> Result<Self> {
        Target::quadratic(&[(-1, 1, 5, 2)], bits)
    }

    /// Coordinates `(a + b sqrt d) / c` for each tuple.
    pub fn quadratic(coords: &[(i64, i64, u32, i64)], bits: u32) -> Result<Self> {
        for &(_, _, _, c) in coords {
            if c == 0 {
                return Err(Error::domain("zero denominator"));
            }
        }
        let coords = coords.to_vec();
        Target::from_fn(
            coords.len(),
            move |prec| {
                coords
                    .iter()
                    .map(|&(a, b, d, c)| {
                        let s = Float::with_val(prec + 8, d).sqrt() * b + a;
                        Float::with_val(prec, s / c)
                    })
                    .collect()
            },
            bits,
        )
    }

    pub fn dim(&self) -> usize {
        self.enclosure.len()
    }

    pub fn enclosure(&self) -> &[RatInterval] {
        &self.enclosure
    }

    pub fn is_exact(&self) -> bool {
        self.enclosure.iter().all(RatInterval::is_exact)
    }

    /// Absolute precision (bits) of the current enclosure.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Ask the refiner for at least `bits` bits; returns whether the enclosure shrank.
    pub fn refine_to(&mut self, bits: u32) -> Result<bool> {
        if self.bits >= bits || self.is_exact() {
            return Ok(false);
        }
        let Some(refiner) = self.refiner.as_mut() else {
            return Ok(false);
        };
        let fresh = refiner.refine(bits)?;
        if fresh.len() != self.enclosure.len() {
            return Err(Error::domain("refiner changed the dimension"));
        }
        let new_bits = enclosure_bits(&fresh);
        if new_bits <= self.bits {
            return Ok(false);
        }
        self.enclosure = fresh;
        self.bits = new_bits;
        Ok(true)
    }

    /// Enclosure at working precision `bits`, outward-rounded to that many bits.
    pub fn working(&mut self, bits: u32) -> Result<Vec<RatInterval>> {
        self.refine_to(bits)?;
        Ok(self.enclosure.iter().map(|x| x.coarsen(bits)).collect())
    }
}

fn enclosure_bits(enc: &[RatInterval]) -> u32 {
    enc.iter()
        .map(|x| {
            if x.is_exact() {
                u32::MAX
            } else {
                let w = x.width();
                let b = w.denom().significant_bits() as i64 - w.numer().significant_bits() as i64;
                b.clamp(0, u32::MAX as i64 - 1) as u32
            }
        })
        .min()
        .unwrap_or(u32::MAX)
}

/// One best approximation `(q, a)` with an enclosure of `xi^2 = |q alpha - a|^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BestApproxRecord {
    #[serde(serialize_with = "crate::report::ser_integer")]
    pub q: Integer,
    #[serde(serialize_with = "crate::report::ser_integers")]
    pub a: Vec<Integer>,
    #[serde(skip)]
    pub xi_sq: RatInterval,
}

impl BestApproxRecord {
    pub fn is_exact_hit(&self) -> bool {
        self.xi_sq.is_exact() && self.xi_sq.hi().cmp0() == Ordering::Equal
    }

    /// The record as a vector of `Z^4` (only for three-dimensional targets).
    pub fn to_intvec(&self) -> Result<IntVec> {
        if self.a.len() != 3 {
            return Err(Error::domain("records of a three-dimensional target required"));
        }
        Ok(IntVec::new(self.q.clone(), [self.a[0].clone(), self.a[1].clone(), self.a[2].clone()]))
    }

    /// `ln xi`, from the midpoint of the enclosure; `None` when `xi = 0`.
    pub fn ln_xi(&self) -> Option<f64> {
        let m = self.xi_sq.mid();
        if m.cmp0() != Ordering::Greater {
            return None;
        }
        Some(ln_rational(&m) / 2.0)
    }
}

pub fn ln_integer(x: &Integer) -> f64 {
    Float::with_val(64, x).ln().to_f64()
}

pub fn ln_rational(x: &Rational) -> f64 {
    let (n, d) = (x.numer(), x.denom());
    ln_integer(n) - ln_integer(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Lattice enumeration of the next record; handles denominators far beyond a linear scan.
    #[default]
    Enumerate,
    /// Visit every `q` up to the bound.
    Scan,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub strategy: Strategy,
    /// Initial working precision in bits.
    pub precision_bits: u32,
    /// Escalation stops here with a precision error.
    pub precision_cap: u32,
    /// Maximum number of lattice points per enumeration.
    pub enumeration_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            strategy: Strategy::Enumerate,
            precision_bits: 128,
            precision_cap: 4096,
            enumeration_cap: 20_000,
        }
    }
}

enum Verdict {
    Record(Vec<Integer>, RatInterval),
    NotRecord,
}

struct Walker<'a> {
    target: &'a mut Target,
    cfg: &'a EngineConfig,
    bits: u32,
    enc: Vec<RatInterval>,
    last: Option<(Integer, Vec<Integer>)>,
    cur: Option<RatInterval>,
}

impl<'a> Walker<'a> {
    fn new(target: &'a mut Target, cfg: &'a EngineConfig) -> Result<Self> {
        let bits = cfg.precision_bits.max(16);
        let enc = target.working(bits)?;
        Ok(Walker { target, cfg, bits, enc, last: None, cur: None })
    }

    fn set_bits(&mut self, bits: u32) -> Result<()> {
        if bits != self.bits {
            self.bits = bits;
            self.enc = self.target.working(bits)?;
            self.cur = self.last.as_ref().map(|(q, a)| remainder_sq(&self.enc, q, a));
        }
        Ok(())
    }

    fn escalate(&mut self, q: &Integer) -> Result<()> {
        if self.target.is_exact() || self.bits >= self.cfg.precision_cap {
            return Err(Error::Precision { q: q.clone(), cap_bits: self.cfg.precision_cap });
        }
        let next = (self.bits * 2).min(self.cfg.precision_cap);
        self.set_bits(next)
    }

    /// Decide whether `q` improves on the current minimum.
    fn judge(&mut self, q: &Integer) -> Result<Verdict> {
        loop {
            let mut a = Vec::with_capacity(self.enc.len());
            let mut tie = false;
            let mut ambiguous = false;
            for x in &self.enc {
                match x.scale(q).nearest() {
                    Nearest::Unique(v) => a.push(v),
                    Nearest::Tie(lo, _) => {
                        tie = true;
                        a.push(lo);
                    }
                    Nearest::Ambiguous => {
                        ambiguous = true;
                        break;
                    }
                }
            }
            if ambiguous {
                self.escalate(q)?;
                continue;
            }
            let xi = remainder_sq(&self.enc, q, &a);
            let better = match &self.cur {
                None => Some(true),
                Some(cur) => match xi.compare(cur) {
                    Some(Ordering::Less) => Some(true),
                    Some(_) => Some(false),
                    None if xi.lo() >= cur.hi() => Some(false),
                    None => None,
                },
            };
            match better {
                Some(true) if tie => return Err(Error::Tie { q: q.clone() }),
                Some(true) => return Ok(Verdict::Record(a, xi)),
                Some(false) => return Ok(Verdict::NotRecord),
                None => self.escalate(q)?,
            }
        }
    }

    fn accept(&mut self, q: Integer, a: Vec<Integer>, xi: RatInterval, out: &mut Vec<BestApproxRecord>) {
        self.last = Some((q.clone(), a.clone()));
        self.cur = Some(xi.clone());
        out.push(BestApproxRecord { q, a, xi_sq: xi });
    }
}

/// The best approximation vectors of `target` with `1 <= q <= q_max`.
pub fn best_approximations(
    target: &mut Target,
    q_max: &Integer,
    cfg: &EngineConfig,
) -> Result<Vec<BestApproxRecord>> {
    if *q_max < 1 {
        return Err(Error::domain("q_max must be at least 1"));
    }
    match cfg.strategy {
        Strategy::Scan => scan(target, q_max, cfg),
        Strategy::Enumerate => enumerate(target, q_max, cfg),
    }
}

fn scan(target: &mut Target, q_max: &Integer, cfg: &EngineConfig) -> Result<Vec<BestApproxRecord>> {
    let mut w = Walker::new(target, cfg)?;
    let mut out = Vec::new();
    let mut q = Integer::from(1);
    while q <= *q_max {
        if let Verdict::Record(a, xi) = w.judge(&q)? {
            let hit = xi.is_exact() && xi.hi().cmp0() == Ordering::Equal;
            w.accept(q.clone(), a, xi, &mut out);
            if hit {
                break;
            }
        }
        q += 1u32;
    }
    Ok(out)
}

/// `log2` of a positive rational, to within one.
fn log2_approx(x: &Rational) -> i64 {
    x.numer().significant_bits() as i64 - x.denom().significant_bits() as i64
}

fn enumerate(target: &mut Target, q_max: &Integer, cfg: &EngineConfig) -> Result<Vec<BestApproxRecord>> {
    let n = target.dim();
    let mut w = Walker::new(target, cfg)?;
    let mut out = Vec::new();
    let one = Integer::from(1);
    match w.judge(&one)? {
        Verdict::Record(a, xi) => w.accept(one, a, xi, &mut out),
        Verdict::NotRecord => unreachable!("first denominator is always a record"),
    }
    // no record exists in (q_cur, searched]; the next range has length 2^step_bits
    let mut searched = Integer::from(1);
    let mut step_bits = 1u32;
    let mut last_ok = 0u32;
    let mut grow = 1u32;
    let mut too_many: Option<u32> = None;
    loop {
        let cur = w.cur.clone().expect("a record exists");
        if cur.hi().cmp0() == Ordering::Equal {
            break;
        }
        let q_cur = w.last.as_ref().expect("a record exists").0.clone();
        if q_cur >= *q_max {
            break;
        }
        let xi_sq_lo = cur.lo().clone();
        if xi_sq_lo.cmp0() != Ordering::Greater {
            w.escalate(&q_cur)?;
            continue;
        }
        if searched < q_cur {
            searched = q_cur.clone();
            step_bits = q_cur.significant_bits().max(1);
            last_ok = 0;
            grow = 1;
            too_many = None;
        }
        let qs = (&searched + (Integer::from(1) << step_bits)).min(q_max.clone());

        // precision: D |q alpha - a| must dominate the rounding error q |A - D alpha|
        let need = qs.significant_bits() as i64 - log2_approx(&xi_sq_lo) / 2 + 64;
        let need = need.clamp(32, u32::MAX as i64) as u32;
        if need > w.bits && !w.target.is_exact() {
            if need > cfg.precision_cap {
                return Err(Error::Precision { q: qs, cap_bits: cfg.precision_cap });
            }
            w.set_bits(need)?;
        }
        let s = if w.target.is_exact() { need } else { w.bits.max(need) };
        let d = Integer::from(1) << s;
        let width: Rational = w.enc.iter().map(RatInterval::width).max().unwrap_or_default();
        let a_row: Vec<Integer> = w
            .enc
            .iter()
            .map(|x| (x.mid() * &d).round().into_numer_denom().0)
            .collect();
        let xi_hi_d = {
            let v = Rational::from(cur.hi() * Integer::from(d.square_ref()));
            Integer::from(v.ceil_ref()).sqrt() + 1u32
        };
        let weight = Integer::from(&xi_hi_d / &qs).max(Integer::from(1));
        let dw = Integer::from(Rational::from(&width * &d).ceil_ref());
        let sqrt_n = if n == 1 { 1u32 } else { 2 };
        let slack = Integer::from(&qs * sqrt_n) * (dw + 1u32);
        let r_lin = xi_hi_d + slack;
        let radius_sq = Rational::from(Integer::from(&qs * &weight).square() + r_lin.square());

        let mut basis: Vec<Row> = Vec::with_capacity(n + 1);
        let mut b0 = vec![weight.clone()];
        b0.extend(a_row.iter().cloned());
        basis.push(b0);
        for i in 0..n {
            let mut r = vec![Integer::new(); n + 1];
            r[i + 1] = Integer::from(-&d);
            basis.push(r);
        }
        let reduced = lll(basis)?;
        let zero = vec![Rational::new(); n + 1];
        let points = match enumerate_near(&reduced, &zero, &radius_sq, cfg.enumeration_cap) {
            Ok(p) => p,
            Err(Error::EnumerationCap { .. }) if step_bits > 0 => {
                // too many points: search a shorter range first
                too_many = Some(step_bits);
                step_bits -= ((step_bits - last_ok.min(step_bits)) / 2).max(1);
                grow = 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let lower = searched.clone();
        let mut qs_found: Vec<Integer> = points
            .iter()
            .map(|c| {
                let v = combine(&reduced, c);
                Integer::from(v[0].abs_ref()) / &weight
            })
            .filter(|q| *q > lower && *q <= qs)
            .collect();
        qs_found.sort();
        qs_found.dedup();
        let mut found = false;
        for q in qs_found {
            if let Verdict::Record(a, xi) = w.judge(&q)? {
                w.accept(q, a, xi, &mut out);
                found = true;
                break;
            }
        }
        if !found {
            if qs >= *q_max {
                break;
            }
            searched = qs;
            last_ok = step_bits;
            let mut next = step_bits + grow;
            grow = grow.saturating_mul(2);
            if let Some(bad) = too_many {
                next = next.min((step_bits + bad) / 2).max(step_bits);
            }
            step_bits = next;
        }
    }
    Ok(out)
}

/// Finite-window proxies for the ordinary and uniform exponents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub omega_est: f64,
    pub omega_hat_est: f64,
    pub ratio_limsup_est: f64,
    /// Half-open record index range `[start, end)` the estimates are taken over.
    pub window: (usize, usize),
    pub window_policy: String,
}

pub const MIN_RECORDS: usize = 8;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;

/// Exponent estimates over the final `window_fraction` of the records.
pub fn exponent_stats(records: &[BestApproxRecord], window_fraction: f64) -> Result<ExponentEstimate> {
    let ln_q: Vec<f64> = records.iter().map(|r| ln_integer(&r.q)).collect();
    let ln_xi: Vec<Option<f64>> = records.iter().map(BestApproxRecord::ln_xi).collect();
    stats_from_logs(&ln_q, &ln_xi, window_fraction)
}

/// Same as [`exponent_stats`] on precomputed `ln q` and `ln xi` (`None` for `xi = 0`).
pub fn stats_from_logs(ln_q: &[f64], ln_xi: &[Option<f64>], window_fraction: f64) -> Result<ExponentEstimate> {
    let len = ln_q.len();
    if len < MIN_RECORDS {
        return Err(Error::TooFewRecords { need: MIN_RECORDS, got: len });
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::domain("window fraction must lie in (0, 1]"));
    }
    let start = ((len as f64) * (1.0 - window_fraction)).floor() as usize;
    let start = start.min(len - 2).max(1);
    let end = len - 1;
    let mut omega = f64::NEG_INFINITY;
    let mut omega_hat = f64::INFINITY;
    let mut ratio = f64::NEG_INFINITY;
    for nu in start..end {
        ratio = ratio.max(ln_q[nu + 1] / ln_q[nu]);
        if let Some(lx) = ln_xi[nu] {
            omega = omega.max(-lx / ln_q[nu]);
            omega_hat = omega_hat.min(-lx / ln_q[nu + 1]);
        }
    }
    if !omega.is_finite() || !omega_hat.is_finite() {
        return Err(Error::AnalysisWindow("no nonzero remainders in the window".into()));
    }
    Ok(ExponentEstimate {
        omega_est: omega,
        omega_hat_est: omega_hat,
        ratio_limsup_est: ratio.max(1.0),
        window: (start, end),
        window_policy: format!("last {:.0}% of records", window_fraction * 100.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn golden_gives_fibonacci() {
        for strategy in [Strategy::Scan, Strategy::Enumerate] {
            let cfg = EngineConfig { strategy, ..Default::default() };
            let mut t = Target::golden(128).unwrap();
            let recs = best_approximations(&mut t, &Integer::from(100), &cfg).unwrap();
            let qs: Vec<u32> = recs.iter().map(|r| r.q.to_u32().unwrap()).collect();
            assert_eq!(qs, vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89], "{strategy:?}");
        }
    }

    #[test]
    fn exact_hit_terminates() {
        let mut t = Target::exact(vec![rat(1, 7), rat(3, 7), rat(5, 14)]).unwrap();
        for strategy in [Strategy::Scan, Strategy::Enumerate] {
            let cfg = EngineConfig { strategy, ..Default::default() };
            let recs = best_approximations(&mut t, &Integer::from(1000), &cfg).unwrap();
            let last = recs.last().unwrap();
            assert_eq!(last.q, 14);
            assert!(last.is_exact_hit());
        }
    }

    #[test]
    fn half_integer_first_record_is_a_tie() {
        let mut t = Target::exact(vec![rat(1, 2)]).unwrap();
        let err = best_approximations(&mut t, &Integer::from(10), &EngineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Tie { .. }));
    }

    #[test]
    fn stats_need_records() {
        let recs = vec![];
        assert!(matches!(exponent_stats(&recs, 0.5), Err(Error::TooFewRecords { .. })));
    }
}
