//! Closed rational intervals with outward-rounded coarsening.

use std::cmp::Ordering;
use std::fmt;

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatInterval {
    lo: Rational,
    hi: Rational,
}

/// Result of rounding an interval to the nearest integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nearest {
    Unique(Integer),
    /// The value is exactly a half-integer; both neighbours are nearest.
    Tie(Integer, Integer),
    /// The interval straddles a half-integer; more precision is needed.
    Ambiguous,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(RatInterval { lo, hi })
    }

    pub fn point(x: Rational) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    /// Enclosure of a ball `center +- radius`.
    pub fn ball(center: &Rational, radius: &Rational) -> Self {
        let r = Rational::from(radius.abs_ref());
        RatInterval { lo: Rational::from(center - &r), hi: Rational::from(center + &r) }
    }

    /// Enclose a float known to be within `ulps` units in the last place of the true value.
    pub fn from_float(x: &Float, ulps: u32) -> Result<Self> {
        let c = x
            .to_rational()
            .ok_or_else(|| Error::domain("non-finite float cannot be enclosed"))?;
        if x.is_zero() {
            let r = Rational::from((1, 1u32)) >> (x.prec() as i32 + 64);
            return Ok(RatInterval::ball(&c, &r));
        }
        let exp = x.get_exp().unwrap_or(0) - x.prec() as i32;
        let ulp = Rational::from(1) << exp;
        Ok(RatInterval::ball(&c, &(ulp * ulps)))
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    pub fn mid(&self) -> Rational {
        Rational::from(&self.lo + &self.hi) / 2u32
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `Some(ord)` when every element of `self` compares to every element of `other` as `ord`
    /// (ties only for two equal exact points).
    pub fn compare(&self, other: &RatInterval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_exact() && other.is_exact() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: Rational::from(&self.lo + &other.lo),
            hi: Rational::from(&self.hi + &other.hi),
        }
    }

    pub fn sub_int(&self, a: &Integer) -> RatInterval {
        RatInterval { lo: Rational::from(&self.lo - a), hi: Rational::from(&self.hi - a) }
    }

    pub fn scale(&self, q: &Integer) -> RatInterval {
        let a = Rational::from(&self.lo * q);
        let b = Rational::from(&self.hi * q);
        if a <= b {
            RatInterval { lo: a, hi: b }
        } else {
            RatInterval { lo: b, hi: a }
        }
    }

    pub fn square(&self) -> RatInterval {
        let a = Rational::from(self.lo.square_ref());
        let b = Rational::from(self.hi.square_ref());
        if self.lo.cmp0() != Ordering::Greater && self.hi.cmp0() != Ordering::Less {
            RatInterval { lo: Rational::new(), hi: a.max(b) }
        } else if a <= b {
            RatInterval { lo: a, hi: b }
        } else {
            RatInterval { lo: b, hi: a }
        }
    }

    /// Outward rounding of both endpoints to multiples of `2^-bits`.
    /// Exact points are returned unchanged.
    pub fn coarsen(&self, bits: u32) -> RatInterval {
        if self.is_exact() {
            return self.clone();
        }
        let lo = Rational::from(&self.lo << bits).floor();
        let hi = Rational::from(&self.hi << bits).ceil();
        RatInterval { lo: lo >> bits, hi: hi >> bits }
    }

    /// Nearest integer to every point of the interval.
    pub fn nearest(&self) -> Nearest {
        let half = Rational::from((1, 2));
        let lo = Rational::from(&self.lo + &half);
        let hi = Rational::from(&self.hi + &half);
        let flo = lo.clone().floor().into_numer_denom().0;
        let fhi = hi.clone().floor().into_numer_denom().0;
        if self.is_exact() {
            if lo.is_integer() {
                let a = Integer::from(&flo - 1);
                return Nearest::Tie(a, flo);
            }
            return Nearest::Unique(flo);
        }
        if flo == fhi && !lo.is_integer() {
            Nearest::Unique(flo)
        } else {
            Nearest::Ambiguous
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Squared distance `|q x - a|^2` over an enclosure of `x`.
pub fn remainder_sq(enclosure: &[RatInterval], q: &Integer, a: &[Integer]) -> RatInterval {
    let mut acc = RatInterval::point(Rational::new());
    for (x, ai) in enclosure.iter().zip(a) {
        acc = acc.add(&x.scale(q).sub_int(ai).square());
    }
    acc
}

/// Decimal rendering of `x` with `digits` significant digits, plus an absolute error bound.
pub fn decimal_with_error(x: &RatInterval, digits: u32) -> (String, String) {
    let prec = (digits as f64 * 3.33) as u32 + 16;
    let mid = Float::with_val(prec, x.mid());
    let half = Float::with_val(53, x.width() / 2u32);
    let s = mid.to_string_radix(10, Some(digits as usize));
    let rounding = Float::with_val(53, mid.abs_ref()) * Float::with_val(53, 10f64.powi(1 - digits as i32));
    let err = half + rounding;
    (s, format!("{:.3e}", err.to_f64()))
}
