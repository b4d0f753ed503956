//! The exact conditions and the logged-constant bands of a synthesized chain.

use std::cmp::Ordering;

use rug::Integer;
use serde::Serialize;

use super::geom::{direction, ln_norm};
use super::BURN_IN;
use crate::engine::ln_integer;
use crate::error::{Error, Result};
use crate::exponents::ExponentChain;
use crate::lattice::{self, IntVec};

/// Largest allowed `ln(max/min)` of a band.
pub const BAND_SPREAD: f64 = 6.907_755_278_982_137;

/// Verdicts at one vector index; `None` where a condition does not apply.
#[derive(Clone, Copy, Debug, Default)]
pub(super) struct ExactVerdict {
    primitive: Option<bool>,
    span: Option<bool>,
    unimodular: Option<bool>,
    angle: Option<bool>,
}

impl ExactVerdict {
    pub(super) fn failure(&self) -> Option<String> {
        let names = [
            (self.primitive, "triple is not primitive"),
            (self.span, "new vector leaves the lattice plane"),
            (self.unimodular, "quadruple is not a basis"),
            (self.angle, "angle outside (pi/4, 3pi/4)"),
        ];
        names.iter().find(|(v, _)| *v == Some(false)).map(|(_, s)| s.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExactCheck {
    pub holds: bool,
    pub checked: usize,
    /// Vector indices where the check failed.
    pub failures: Vec<usize>,
}

impl ExactCheck {
    fn record(&mut self, t: usize, v: Option<bool>) {
        if let Some(ok) = v {
            self.checked += 1;
            if !ok {
                self.failures.push(t);
            }
        }
        self.holds = self.failures.is_empty();
    }
}

#[derive(Clone, Debug, Default)]
pub(super) struct ExactTally {
    primitive: ExactCheck,
    span: ExactCheck,
    unimodular: ExactCheck,
    angle: ExactCheck,
}

impl ExactTally {
    pub(super) fn add(&mut self, t: usize, v: &ExactVerdict) {
        self.primitive.record(t, v.primitive);
        self.span.record(t, v.span);
        self.unimodular.record(t, v.unimodular);
        self.angle.record(t, v.angle);
    }
}

/// A series of logarithms that should stay within a constant band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Band {
    /// `(index, value)` after burn-in.
    pub values: Vec<(usize, f64)>,
    pub spread: f64,
    pub holds: bool,
}

impl Band {
    fn new(values: Vec<(usize, f64)>) -> Band {
        let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        let spread = if values.is_empty() { 0.0 } else { hi - lo };
        Band { values, spread, holds: spread.is_finite() && spread <= BAND_SPREAD }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    /// (i) consecutive triples are primitive
    pub primitive_triples: ExactCheck,
    /// (ii) in-plane steps add an integer combination of the last two vectors
    pub span_structure: ExactCheck,
    /// (iii) the quadruple with the last out-of-plane predecessor is a basis
    pub unimodular: ExactCheck,
    /// (vi) the angle at each new point is in `(pi/4, 3pi/4)`
    pub angles: ExactCheck,
    /// (iv) `ln q_{t+1} - g_k ln q_t` after out-of-plane steps
    pub growth_out_of_plane: Band,
    /// (v) `ln q_{t+1} - e_t ln q_t` after in-plane steps
    pub growth_in_plane: Band,
    /// `ln zeta_t + lambda ln q_{t+1}`
    pub remainders: Band,
    /// (vii) `ln Delta - ln(zeta_{t-2} zeta_{t-1} q_t)` at out-of-plane outputs
    pub volume: Band,
}

impl ConditionReport {
    pub fn exact_hold(&self) -> bool {
        self.primitive_triples.holds && self.span_structure.holds && self.unimodular.holds && self.angles.holds
    }

    pub fn bands_hold(&self) -> bool {
        self.growth_out_of_plane.holds && self.growth_in_plane.holds && self.remainders.holds && self.volume.holds
    }
}

/// Whether `w` is an integer combination of `u` and `v`.
fn in_integer_span(w: &IntVec, u: &IntVec, v: &IntVec) -> bool {
    let (w, u, v) = (w.coords(), u.coords(), v.coords());
    for i in 0..4 {
        for k in i + 1..4 {
            let m = Integer::from(&u[i] * &v[k]) - Integer::from(&u[k] * &v[i]);
            if m.cmp0() == Ordering::Equal {
                continue;
            }
            let xn = Integer::from(&w[i] * &v[k]) - Integer::from(&w[k] * &v[i]);
            let yn = Integer::from(&u[i] * &w[k]) - Integer::from(&u[k] * &w[i]);
            if !xn.is_divisible(&m) || !yn.is_divisible(&m) {
                return false;
            }
            let x = xn.div_exact(&m);
            let y = yn.div_exact(&m);
            return (0..4).all(|c| Integer::from(&x * &u[c]) + Integer::from(&y * &v[c]) == w[c]);
        }
    }
    false
}

/// Whether vector `t` (1-based) is produced by an out-of-plane step.
fn out_of_plane(chain: &ExponentChain, t: usize) -> bool {
    t >= 3 && chain.is_stage2(t - 1)
}

pub(super) fn exact_at(vectors: &[IntVec], chain: &ExponentChain, t: usize) -> Result<ExactVerdict> {
    let z = |i: usize| &vectors[i - 1];
    let mut v = ExactVerdict::default();
    if t < 3 {
        return Ok(v);
    }
    let triple = [z(t - 2).clone(), z(t - 1).clone(), z(t).clone()];
    v.primitive = Some(lattice::is_primitive(&triple)?);
    v.angle = Some(lattice::angle_window_int(&direction(z(t), z(t - 2)), &direction(z(t), z(t - 1)))?.wide);
    if t >= 4 && !out_of_plane(chain, t) {
        let w = z(t).sub(z(t - 3));
        v.span = Some(in_integer_span(&w, z(t - 2), z(t - 1)));
    }
    if let Some(s) = (4..=t).rev().find(|&s| out_of_plane(chain, s)) {
        let d = lattice::det4(z(s - 3), z(t - 2), z(t - 1), z(t));
        v.unimodular = Some(d == 1 || d == -1);
    }
    Ok(v)
}

fn ln_zeta(a: &IntVec, b: &IntVec) -> f64 {
    ln_norm(&direction(a, b), b.q())
}

fn bands(vectors: &[IntVec], chain: &ExponentChain) -> Result<[Band; 4]> {
    let n = vectors.len();
    let lambda = chain.lambda.to_f64();
    let ln_q: Vec<f64> = vectors.iter().map(|z| ln_integer(z.q())).collect();
    let zeta: Vec<f64> = vectors.windows(2).map(|w| ln_zeta(&w[0], &w[1])).collect();
    let (mut out, mut inp, mut rem, mut vol) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for t in 1..n {
        if t <= BURN_IN {
            continue;
        }
        let e = chain.step_exponent(t).to_f64();
        let g = ln_q[t] - e * ln_q[t - 1];
        if chain.is_stage2(t) {
            out.push((t, g));
        } else {
            inp.push((t, g));
        }
        rem.push((t, zeta[t - 1] + lambda * ln_q[t]));
    }
    for t in 3..=n {
        if t <= BURN_IN || !out_of_plane(chain, t) {
            continue;
        }
        let h2 = lattice::span_height_sq(&vectors[t - 3..t])?;
        let ln_delta = 0.5 * ln_integer(&h2);
        vol.push((t, ln_delta - zeta[t - 3] - zeta[t - 2] - ln_q[t - 1]));
    }
    Ok([Band::new(out), Band::new(inp), Band::new(rem), Band::new(vol)])
}

pub(super) fn report(vectors: &[IntVec], chain: &ExponentChain, tally: Option<&ExactTally>) -> Result<ConditionReport> {
    let tally = match tally {
        Some(t) => t.clone(),
        None => {
            let mut t = ExactTally::default();
            for i in 1..=vectors.len() {
                t.add(i, &exact_at(vectors, chain, i)?);
            }
            t
        }
    };
    let [growth_out_of_plane, growth_in_plane, remainders, volume] = bands(vectors, chain)?;
    Ok(ConditionReport {
        primitive_triples: tally.primitive,
        span_structure: tally.span,
        unimodular: tally.unimodular,
        angles: tally.angle,
        growth_out_of_plane,
        growth_in_plane,
        remainders,
        volume,
    })
}

/// Recompute every condition of a vector chain from scratch.
pub fn verify_conditions(vectors: &[IntVec], chain: &ExponentChain) -> Result<ConditionReport> {
    if vectors.len() < 5 {
        return Err(Error::AnalysisWindow(format!("{} vectors, need at least 5", vectors.len())));
    }
    report(vectors, chain, None)
}
