//! Construction of a point of `R^3` whose best approximation vectors follow a
//! prescribed pattern `A^k B`.
//!
//! The run keeps a chain of integer vectors `z_1, z_2, ...` together with
//! nested balls. At each step a centre `X_j` is chosen in the plane through
//! the last two projective points, and the next vector is picked by rounding
//! the coordinates of `X_j` in a small affine lattice. Every acceptance test is
//! an exact comparison of integers.

mod base;
pub mod geom;
mod verify;

use std::cmp::Ordering;

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::engine::{Refiner, Target};
use crate::error::{Error, Result};
use crate::exponents::{self, ExponentChain};
use crate::interval::RatInterval;
use crate::lattice::{self, linalg, IntVec};
use crate::pattern::{self, KEstimate, PatternWord};
use crate::report::ser_integer;
use geom::{ball_in_cone, bezout, direction, dot3, norm3, rho, spatial, within, QPoint, V3};

pub use verify::{verify_conditions, Band, ConditionReport, ExactCheck, BAND_SPREAD};

pub const SYNTH_LAMBDA_MIN: f64 = 0.34;
pub const SYNTH_LAMBDA_MAX: f64 = 0.99;
/// Vectors before this index are excluded from band checks and the word.
pub const BURN_IN: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub lambda: f64,
    pub k: u32,
    pub q1: u64,
    pub steps: usize,
    /// Number of radius doublings allowed when searching for the base triple.
    pub search_radius_cap: u32,
    pub precision_bits: u32,
    pub precision_cap: u32,
    pub retry_doublings: u32,
    /// Refuse runs whose predicted last denominator exceeds this many bits.
    pub bit_budget: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            lambda: 0.5,
            k: 1,
            q1: 1_000_000,
            steps: 30,
            search_radius_cap: 16,
            precision_bits: exponents::DEFAULT_PREC,
            precision_cap: 4096,
            retry_doublings: 6,
            bit_budget: 1 << 25,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(SYNTH_LAMBDA_MIN..=SYNTH_LAMBDA_MAX).contains(&self.lambda) {
            return Err(Error::domain(format!(
                "lambda {} outside [{SYNTH_LAMBDA_MIN}, {SYNTH_LAMBDA_MAX}]",
                self.lambda
            )));
        }
        if self.k == 0 {
            return Err(Error::domain("k must be positive"));
        }
        if self.q1 < 2 {
            return Err(Error::domain("q1 must be at least 2"));
        }
        if self.steps < 3 {
            return Err(Error::domain("at least 3 vectors are needed"));
        }
        if self.precision_bits < 64 || self.precision_bits > self.precision_cap {
            return Err(Error::domain("precision_bits must lie in [64, precision_cap]"));
        }
        Ok(())
    }

    pub fn lambda_float(&self) -> Float {
        Float::with_val(self.precision_bits, self.lambda)
    }
}

/// Whether a ball is one of the `U_j` or a `W_j` neighbourhood.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kind {
    U,
    W,
}

/// A ball of `R^3` with rational centre and radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    pub center: QPoint,
    pub radius: Rational,
    /// The previous projective point; `U` also carries an angular constraint.
    pub anchor_prev: Option<QPoint>,
    pub kind: Kind,
}

impl NeighborhoodSpec {
    /// Coordinate box inscribed in the ball.
    pub fn enclosure(&self) -> Vec<RatInterval> {
        let half = Rational::from(&self.radius / 2u32);
        self.center.to_rationals().iter().map(|c| RatInterval::ball(c, &half)).collect()
    }
}

/// What happened at one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepLog {
    /// Index of the vector produced.
    pub index: usize,
    pub stage: char,
    /// Position of the accepted candidate in the rounding order.
    pub candidate: usize,
    pub q_bits: u64,
    pub ratio: f64,
    pub expected: f64,
}

#[derive(Clone, Debug)]
pub struct SynthState {
    cfg: SynthConfig,
    chain: ExponentChain,
    pub vectors: Vec<IntVec>,
    /// `rho_j = q_j^(-u_j)` rounded to a dyadic rational.
    rhos: Vec<Rational>,
    /// `W_j`, for `j >= 2`.
    balls: Vec<NeighborhoodSpec>,
    pub log: Vec<StepLog>,
    exact: verify::ExactTally,
}

struct Center {
    ball: NeighborhoodSpec,
    shift: u32,
    m1: Integer,
    m2: Integer,
}

fn round_to_integer(x: &Rational) -> Integer {
    Integer::from(x.round_ref())
}

fn ln_ratio(next: &Integer, cur: &Integer) -> f64 {
    crate::engine::ln_integer(next) / crate::engine::ln_integer(cur)
}

/// Rounding offsets ordered by distance from the centre.
pub(crate) fn offsets(dim: usize) -> Vec<Vec<i32>> {
    let mut out: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|v| {
                [0, -1, 1].into_iter().map(move |d| {
                    let mut w = v.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out.sort_by_key(|v| v.iter().map(|d| d.abs()).sum::<i32>());
    out
}

impl SynthState {
    /// Base triple for `q1`.
    pub fn start(cfg: &SynthConfig, q1: &Integer) -> Result<SynthState> {
        cfg.validate()?;
        let lambda = cfg.lambda_float();
        let chain = exponents::exponent_chain(cfg.k, &lambda)?;
        preflight(cfg, &chain, q1)?;
        let mut st = SynthState {
            cfg: cfg.clone(),
            chain,
            vectors: Vec::new(),
            rhos: Vec::new(),
            balls: Vec::new(),
            log: Vec::new(),
            exact: verify::ExactTally::default(),
        };
        base::init_triple(&mut st, q1)?;
        Ok(st)
    }

    pub fn chain(&self) -> &ExponentChain {
        &self.chain
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    fn z(&self, j: usize) -> &IntVec {
        &self.vectors[j - 1]
    }

    fn rho_of(&self, q: &Integer, j: usize) -> Rational {
        rho(q, self.chain.u(j))
    }

    /// The current neighbourhood, the last `W` ball.
    pub fn neighborhood(&self) -> &NeighborhoodSpec {
        self.balls.last().expect("the base triple sets a ball")
    }

    pub fn stage_index(&self) -> usize {
        self.vectors.len()
    }

    /// `X_j` of the plane through `Z_j` spanned by `d1 ~ Z_{j-1} - Z_j` and `d2`,
    /// verified to satisfy `W_j ⊂ U_j` and `W_j ∩ W_j(Z_j) = ∅`.
    fn choose_center(&self, j: usize, d1: &V3, d2: &V3, orient: Option<&V3>) -> Result<Center> {
        let prec = self.cfg.precision_bits;
        let rho_j = &self.rhos[j - 1];
        let n11 = norm3(d1);
        let n22 = norm3(d2);
        let n12 = dot3(d1, d2);
        let gram = Integer::from(&n11 * &n22) - Integer::from(n12.square_ref());
        if gram.cmp0() != Ordering::Greater || n11.cmp0() != Ordering::Greater {
            return Err(Error::Step { step: j, reason: "degenerate plane".into() });
        }
        // the unit normal e is E / |E| with E = n11 d2 - n12 d1 (up to n11)
        let sigma = match orient {
            None => 1,
            Some(w) => {
                let s = (&n11 * dot3(d2, w)) - (&n12 * dot3(d1, w));
                match s.cmp0() {
                    Ordering::Greater => 1,
                    Ordering::Less => -1,
                    Ordering::Equal => {
                        let e = [0, 1, 2].map(|i| Integer::from(&n11 * &d2[i]) - Integer::from(&n12 * &d1[i]));
                        match e.iter().find(|x| x.cmp0() != Ordering::Equal) {
                            Some(x) if x.cmp0() == Ordering::Less => -1,
                            _ => 1,
                        }
                    }
                }
            }
        };
        let f = |x: &Integer| Float::with_val(prec, x);
        let rho_f = Float::with_val(prec, rho_j);
        let sq11 = f(&n11).sqrt();
        let sqg = f(&gram).sqrt();
        // X - Z = rho/2 e + rho/4 e', e' = d1/|d1|, e = (n11 d2 - n12 d1)/(|d1| sqrt(gram))
        let along = Float::with_val(prec, &rho_f / Float::with_val(prec, &sq11 * 4u32));
        let c2 = Float::with_val(prec, &rho_f * &sq11) / Float::with_val(prec, &sqg * 2u32);
        let c2 = Float::with_val(prec, c2 * sigma);
        let c1 = Float::with_val(prec, &along - Float::with_val(prec, &c2 * f(&n12)) / f(&n11));
        let top = along.get_exp().unwrap_or(0).min(c2.get_exp().unwrap_or(0));
        let shift = (64 - top).max(0) as u32;
        let to_int = |c: &Float| -> Integer {
            let scaled = Float::with_val(prec, c << shift);
            scaled.to_integer().expect("finite")
        };
        let m1 = to_int(&c1);
        let m2 = to_int(&c2);
        let offset = [0, 1, 2].map(|i| Integer::from(&m1 * &d1[i]) + Integer::from(&m2 * &d2[i]));
        let center = QPoint::of(self.z(j)).shifted(&offset, shift);
        let radius = Rational::from(rho_j / 10u32);
        let den = Integer::from(1) << shift;
        if !ball_in_cone(&offset, &den, &radius, d1, rho_j) {
            return Err(Error::Step { step: j, reason: "W ball leaves U".into() });
        }
        if within(&offset, &den, &Rational::from(&radius * 2u32), false) {
            return Err(Error::Step { step: j, reason: "W ball meets W(Z)".into() });
        }
        let ball = NeighborhoodSpec {
            center,
            radius,
            anchor_prev: Some(QPoint::of(self.z(j - 1))),
            kind: Kind::W,
        };
        Ok(Center { ball, shift, m1, m2 })
    }

    /// `B(Z', rho') ⊂ W` for the candidate `z'` of step `j`.
    fn nests(&self, j: usize, z: &IntVec, w: &NeighborhoodSpec) -> Option<Rational> {
        if z.q() <= self.z(j).q() {
            return None;
        }
        let rho_next = self.rho_of(z.q(), j + 1);
        let slack = Rational::from(&w.radius - &rho_next);
        if slack.cmp0() != Ordering::Greater {
            return None;
        }
        let (num, den) = QPoint::of(z).diff(&w.center);
        within(&num, &den, &slack, false).then_some(rho_next)
    }

    fn stage1(&self, j: usize, c: &Center) -> Result<(IntVec, usize)> {
        let (zm2, zm1, zj) = (self.z(j - 2), self.z(j - 1), self.z(j));
        if c.m2.cmp0() != Ordering::Greater {
            return Err(Error::Step { step: j, reason: "centre on the wrong side".into() });
        }
        let a_star = Rational::from((c.m1.clone(), c.m2.clone()));
        let two_s = Integer::from(1) << c.shift;
        let inner = Integer::from(&c.m1 * zm1.q()) + Integer::from(&c.m2 * zm2.q());
        let b_num = two_s - (zj.q() * inner);
        let b_den = Integer::from(zj.q().square_ref()) * &c.m2;
        let b_star = Rational::from((b_num, b_den));
        let (a0, b0) = (round_to_integer(&a_star), round_to_integer(&b_star));
        for (idx, off) in offsets(2).iter().enumerate() {
            let a = Integer::from(&a0 + off[0]);
            let b = Integer::from(&b0 + off[1]);
            let z = zm2.add_mul(&a, zm1).add_mul(&b, zj);
            if self.nests(j, &z, &c.ball).is_some() {
                return Ok((z, idx));
            }
        }
        Err(Error::Step { step: j, reason: format!("no rounded candidate near a = {a0}, b = {b0} nests") })
    }

    fn stage2(&self, j: usize, c: &Center, normal: &IntVec) -> Result<(IntVec, usize)> {
        let basis = [self.z(j - 2), self.z(j - 1), self.z(j)];
        let nv = normal.coords();
        let lift = c.ball.center.lift();
        let nx: Integer = nv.iter().zip(&lift).map(|(a, b)| Integer::from(a * b)).sum();
        let level = match nx.cmp0() {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => return Err(Error::Step { step: j, reason: "centre lies in G".into() }),
        };
        let w0 = bezout(nv).ok_or_else(|| Error::Step { step: j, reason: "normal is not primitive".into() })?;
        let w0 = w0.map(|x| x * level);
        // P - w0 = R / nx with R = level * lift - nx * w0, solved on three coordinates
        let r: [Integer; 4] = [0, 1, 2, 3].map(|i| Integer::from(&lift[i] * level) - Integer::from(&nx * &w0[i]));
        let drop = (0..4).max_by(|&a, &b| nv[a].cmp_abs(&nv[b])).expect("four coordinates");
        let rows: Vec<usize> = (0..4).filter(|&i| i != drop).collect();
        let mat = |cols: [&[Integer]; 3]| -> Vec<linalg::Row> {
            rows.iter().map(|&i| cols.iter().map(|c| c[i].clone()).collect()).collect()
        };
        let bcols = [basis[0].coords().as_slice(), basis[1].coords().as_slice(), basis[2].coords().as_slice()];
        let det_b = linalg::det(&mat(bcols));
        if det_b == 0 {
            return Err(Error::Step { step: j, reason: "singular coordinate block".into() });
        }
        let denom = Integer::from(&det_b * &nx);
        let y: Vec<Integer> = (0..3)
            .map(|i| {
                let mut cols = bcols;
                cols[i] = r.as_slice();
                round_to_integer(&Rational::from((linalg::det(&mat(cols)), denom.clone())))
            })
            .collect();
        let w0 = IntVec::from_coords(w0);
        for (idx, off) in offsets(3).iter().enumerate() {
            let mut z = w0.clone();
            for i in 0..3 {
                z = z.add_mul(&Integer::from(&y[i] + off[i]), basis[i]);
            }
            if self.nests(j, &z, &c.ball).is_some() {
                return Ok((z, idx));
            }
        }
        Err(Error::Step { step: j, reason: "no rounded candidate off the hyperplane nests".into() })
    }

    /// Produce the next vector.
    pub fn step(&mut self) -> Result<()> {
        let j = self.vectors.len();
        let (zm2, zm1, zj) = (self.z(j - 2), self.z(j - 1), self.z(j));
        let d1 = direction(zj, zm1);
        let inplane = direction(zj, zm2);
        let stage2 = self.chain.is_stage2(j);
        let (z, idx, center) = if stage2 {
            let normal = lattice::normal(zm2, zm1, zj)?;
            let nv = normal.coords();
            let tilt: [Integer; 4] =
                [0, 1, 2, 3].map(|i| Integer::from(&nv[0] * &zj.coords()[i]) - Integer::from(zj.q() * &nv[i]));
            let center = self.choose_center(j, &d1, &spatial(&tilt), Some(&inplane))?;
            let (z, idx) = self.stage2(j, &center, &normal)?;
            (z, idx, center)
        } else {
            let center = self.choose_center(j, &d1, &inplane, None)?;
            let (z, idx) = self.stage1(j, &center)?;
            (z, idx, center)
        };
        self.push(j, z, idx, center.ball, if stage2 { 'B' } else { 'A' })
    }

    fn push(&mut self, j: usize, z: IntVec, candidate: usize, ball: NeighborhoodSpec, stage: char) -> Result<()> {
        let rho_next = self.rho_of(z.q(), j + 1);
        let ratio = ln_ratio(z.q(), self.z(j).q());
        let expected = self.chain.step_exponent(j).to_f64();
        self.log.push(StepLog {
            index: j + 1,
            stage,
            candidate,
            q_bits: z.q().significant_bits() as u64,
            ratio,
            expected,
        });
        self.vectors.push(z);
        self.rhos.push(rho_next);
        self.balls.push(ball);
        let t = self.vectors.len();
        let v = verify::exact_at(&self.vectors, &self.chain, t)?;
        if let Some(reason) = v.failure() {
            return Err(Error::Step { step: j, reason });
        }
        self.exact.add(t, &v);
        Ok(())
    }

    /// Run until `steps` vectors exist.
    pub fn extend_to(&mut self, steps: usize) -> Result<()> {
        while self.vectors.len() < steps {
            self.step()?;
        }
        Ok(())
    }

    /// The current approximation of the constructed point.
    pub fn alpha(&self) -> &NeighborhoodSpec {
        self.neighborhood()
    }
}

/// Predicted size of the last denominator, refused above the budget.
fn preflight(cfg: &SynthConfig, chain: &ExponentChain, q1: &Integer) -> Result<()> {
    let mut log2q = q1.significant_bits() as f64;
    for j in 1..cfg.steps {
        log2q *= chain.step_exponent(j).to_f64();
    }
    if log2q > cfg.bit_budget as f64 {
        return Err(Error::Budget(format!(
            "vector {} would need about {:.3e} bits (budget {})",
            cfg.steps, log2q, cfg.bit_budget
        )));
    }
    Ok(())
}

/// Extends the synthesis until the enclosing ball is small enough.
pub struct SynthRefiner {
    state: SynthState,
}

impl Refiner for SynthRefiner {
    fn refine(&mut self, bits: u32) -> Result<Vec<RatInterval>> {
        let target = Rational::from((Integer::from(1), Integer::from(1) << bits));
        while self.state.alpha().radius > target {
            self.state.step()?;
        }
        Ok(self.state.alpha().enclosure())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthResult {
    pub config: SynthConfig,
    #[serde(serialize_with = "ser_integer")]
    pub q1_used: Integer,
    pub attempts: u32,
    pub chain: ExponentChain,
    pub vectors: Vec<IntVec>,
    pub realized_word: Option<PatternWord>,
    pub k_estimate: Option<KEstimate>,
    /// `ln q_{t+1} / ln q_t`
    pub realized_ratios: Vec<f64>,
    pub expected_ratios: Vec<f64>,
    pub conditions: ConditionReport,
    pub steps: Vec<StepLog>,
    #[serde(skip)]
    pub state: SynthState,
}

impl SynthResult {
    pub fn alpha(&self) -> &NeighborhoodSpec {
        self.state.alpha()
    }

    /// The constructed point as an engine target that can be refined further.
    pub fn alpha_target(&self) -> Result<Target> {
        let enc = self.alpha().enclosure();
        Target::new(enc, Some(Box::new(SynthRefiner { state: self.state.clone() })))
    }

    /// `ln xi_t` of each vector against the centre of the final ball.
    pub fn ln_xi(&self) -> Vec<Option<f64>> {
        ln_xi_against(&self.vectors, &self.alpha().center)
    }
}

pub fn ln_xi_against(vectors: &[IntVec], alpha: &QPoint) -> Vec<Option<f64>> {
    let mut cache: Vec<Float> = Vec::new();
    let mut coords = |prec: u32| -> Vec<Float> {
        if cache.first().is_none_or(|c| c.prec() < prec) {
            cache = (0..3).map(|i| Float::with_val(prec, &alpha.num[i]) / &alpha.den).collect();
        }
        cache.iter().map(|c| Float::with_val(prec, c)).collect()
    };
    vectors
        .iter()
        .map(|z| {
            let bits = z.q().significant_bits();
            // widen until the remainder is well above the rounding error
            let mut extra = bits + 128;
            loop {
                let prec = bits + extra;
                let mut sq = Float::with_val(64, 0);
                for (x, a) in coords(prec).iter().zip(z.a()) {
                    let d = Float::with_val(prec, x * z.q()) - a;
                    sq += Float::with_val(64, d.square_ref());
                }
                if !sq.is_zero() && sq.get_exp().unwrap_or(i32::MIN) > 64 - 2 * extra as i32 {
                    return Some(0.5 * sq.ln().to_f64());
                }
                if prec > alpha.den.significant_bits() + bits + 128 {
                    return exact_ln_xi(z, alpha);
                }
                extra *= 2;
            }
        })
        .collect()
}

fn exact_ln_xi(z: &IntVec, alpha: &QPoint) -> Option<f64> {
    let v: V3 = [0, 1, 2].map(|i| Integer::from(&alpha.num[i] * z.q()) - Integer::from(&z.a()[i] * &alpha.den));
    if v.iter().all(|x| x.cmp0() == Ordering::Equal) {
        None
    } else {
        Some(geom::ln_norm(&v, &alpha.den))
    }
}

fn attempt(cfg: &SynthConfig, q1: &Integer) -> Result<SynthState> {
    let mut st = SynthState::start(cfg, q1)?;
    st.extend_to(cfg.steps)?;
    Ok(st)
}

/// Synthesize `cfg.steps` vectors, doubling `q1` after a failed attempt.
pub fn run(cfg: &SynthConfig) -> Result<SynthResult> {
    cfg.validate()?;
    let mut q1 = Integer::from(cfg.q1);
    let mut failures = Vec::new();
    for tries in 0..=cfg.retry_doublings {
        match attempt(cfg, &q1) {
            Ok(state) => return finish(state, q1, tries + 1),
            Err(e @ (Error::Step { .. } | Error::Completion { .. })) => {
                failures.push(format!("q1 = {q1}: {e}"));
                q1 *= 2u32;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Step { step: 0, reason: format!("all attempts failed: {}", failures.join("; ")) })
}

fn finish(state: SynthState, q1: Integer, attempts: u32) -> Result<SynthResult> {
    let vectors = state.vectors.clone();
    let realized_ratios: Vec<f64> = vectors.windows(2).map(|w| ln_ratio(w[1].q(), w[0].q())).collect();
    let expected_ratios: Vec<f64> = (1..vectors.len()).map(|j| state.chain.step_exponent(j).to_f64()).collect();
    let realized_word = pattern::pattern_word(&vectors, BURN_IN).ok();
    let k_estimate = realized_word.as_ref().and_then(|w| pattern::k_estimate(w).ok());
    let conditions = verify::report(&vectors, &state.chain, Some(&state.exact))?;
    Ok(SynthResult {
        config: state.cfg.clone(),
        q1_used: q1,
        attempts,
        chain: state.chain.clone(),
        vectors,
        realized_word,
        k_estimate,
        realized_ratios,
        expected_ratios,
        conditions,
        steps: state.log.clone(),
        state,
    })
}
