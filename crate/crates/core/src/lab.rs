//! The operations behind each command line subcommand.

use std::path::Path;
use std::time::Instant;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::engine::{self, best_approximations, EngineConfig, Target};
use crate::error::{Error, Result};
use crate::exponents::{self, parse_real};
use crate::interval::RatInterval;
use crate::lattice::{self, IntVec};
use crate::pattern::{self, k_estimate, pattern_word, schmidt_check, KValue, PatternWord};
use crate::report::{
    decimal, AnalyzeReport, RecordRow, RootRow, RootTable, RoundTrip, RunManifest, StoredArtifact, SynthArtifact,
    VerifyReport,
};
use crate::synth::{self, verify_conditions, SynthConfig, BURN_IN};

/// Significant digits in the root table; well beyond the `1e-10` tolerance.
const ROOT_DIGITS: usize = 20;

/// How many synthesized vectors the round trip compares.
pub const ROUND_TRIP_LEN: usize = 10;

/// `roots`: one row per `(lambda, k)`.
pub fn roots(lambdas: &[String], ks: &[u32], precision_bits: u32, precision_cap: u32) -> Result<RootTable> {
    let start = Instant::now();
    if lambdas.is_empty() || ks.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    let mut rows = Vec::with_capacity(lambdas.len() * ks.len());
    for s in lambdas {
        let lambda = parse_real(precision_bits, s)?;
        if !(synth::SYNTH_LAMBDA_MIN..=synth::SYNTH_LAMBDA_MAX).contains(&lambda) {
            return Err(Error::domain(format!(
                "grid value {s} outside [{}, {}]",
                synth::SYNTH_LAMBDA_MIN,
                synth::SYNTH_LAMBDA_MAX
            )));
        }
        let g_lambda = exponents::g_closed(&lambda);
        let gbar = exponents::gbar(&lambda)?;
        for &k in ks {
            if k == 0 {
                return Err(Error::domain("k must be positive"));
            }
            let chain = exponents::exponent_chain(k, &lambda)?;
            rows.push(RootRow {
                lambda: s.trim().to_string(),
                k,
                g_k: decimal(&chain.g_k, ROOT_DIGITS),
                g_lambda: decimal(&g_lambda, ROOT_DIGITS),
                gbar: decimal(&gbar, ROOT_DIGITS),
                g_kj: chain.g_kj.iter().map(|g| decimal(g, ROOT_DIGITS)).collect(),
                u_period: chain.u_seq.iter().map(|u| decimal(u, ROOT_DIGITS)).collect(),
            });
        }
    }
    let config = serde_json::json!({ "lambdas": lambdas, "ks": ks });
    let manifest = RunManifest::new("roots", config, precision_bits, precision_cap).finish(start.elapsed());
    Ok(RootTable { manifest, rows })
}

/// Parse a target description.
///
/// * `golden` is `(sqrt 5 - 1)/2`;
/// * `sqrt:2,3,5` is `(sqrt 2, sqrt 3, sqrt 5)`;
/// * `@file.json` is the point stored in a synthesis artifact;
/// * anything else is a comma separated list of decimals or fractions, taken exactly.
pub fn parse_target(text: &str, bits: u32) -> Result<Target> {
    let text = text.trim();
    if text == "golden" {
        return Target::golden(bits);
    }
    if let Some(list) = text.strip_prefix("sqrt:") {
        let coords = list
            .split(',')
            .map(|d| {
                d.trim()
                    .parse::<u32>()
                    .map(|d| (0, 1, d, 1))
                    .map_err(|e| Error::domain(format!("bad radicand {d:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        return Target::quadratic(&coords, bits);
    }
    if let Some(path) = text.strip_prefix('@') {
        let art = StoredArtifact::read(Path::new(path))?;
        return Target::new(art.alpha.enclosure()?, None);
    }
    let coords = text.split(',').map(parse_exact).collect::<Result<Vec<_>>>()?;
    Target::exact(coords)
}

/// A decimal like `-0.125` or `1e-3`, or a fraction `p/q`, as an exact rational.
fn parse_exact(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = |e: &dyn std::fmt::Display| Error::domain(format!("bad coordinate {s:?}: {e}"));
    if s.contains('/') {
        return Rational::parse(s).map(Rational::from).map_err(|e| bad(&e));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|e| bad(&e))?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac_part.starts_with(['+', '-']) || int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(&"not a number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let num: Integer = digits.parse().map_err(|e| bad(&e))?;
    let scale = exp - frac_part.len() as i32;
    let ten = Integer::from(10);
    let x = if scale >= 0 {
        Rational::from(num * ten.pow(scale as u32))
    } else {
        Rational::from((num, ten.pow(scale.unsigned_abs())))
    };
    Ok(x)
}

/// `analyze`: best approximations up to `q_max` and everything derived from them.
pub fn analyze(text: &str, q_max: &Integer, cfg: &EngineConfig) -> Result<AnalyzeReport> {
    let start = Instant::now();
    let mut target = parse_target(text, cfg.precision_bits)?;
    let dim = target.dim();
    let records = best_approximations(&mut target, q_max, cfg)?;
    let terminated = records.last().is_some_and(|r| r.is_exact_hit());
    let mut notes = Vec::new();
    if terminated {
        notes.push("target is rational: the last record has xi = 0 and the sequence stops".to_string());
    }
    let estimates = match engine::exponent_stats(&records, engine::DEFAULT_WINDOW_FRACTION) {
        Ok(e) => Some(e),
        Err(e) => {
            notes.push(format!("no exponent estimates: {e}"));
            None
        }
    };
    let (mut word, mut k_est, mut schmidt) = (None, None, Vec::new());
    if dim == 3 {
        let vectors = records.iter().map(|r| r.to_intvec()).collect::<Result<Vec<_>>>()?;
        match pattern_word(&vectors, pattern::DEFAULT_BURN_IN) {
            Ok(w) => {
                let ln_xi: Vec<Option<f64>> = records.iter().map(|r| r.ln_xi()).collect();
                schmidt = schmidt_check(&vectors, &ln_xi, &w)?;
                k_est = k_estimate(&w).ok();
                word = Some(w.to_string());
            }
            Err(e) => notes.push(format!("no pattern word: {e}")),
        }
    } else {
        notes.push("pattern words need a target in R^3".to_string());
    }
    let config = serde_json::json!({
        "target": text,
        "q_max": q_max.to_string(),
        "strategy": format!("{:?}", cfg.strategy),
    });
    let manifest = RunManifest::new("analyze", config, cfg.precision_bits, cfg.precision_cap).finish(start.elapsed());
    Ok(AnalyzeReport {
        manifest,
        target: text.to_string(),
        dim,
        q_max: q_max.to_string(),
        records: records.iter().enumerate().map(|(i, r)| RecordRow::of(i + 1, r)).collect(),
        terminated,
        word,
        k_estimate: k_est,
        estimates,
        schmidt,
        notes,
    })
}

/// `synthesize`: a full run packaged as an artifact.
pub fn synthesize(cfg: &SynthConfig) -> Result<SynthArtifact> {
    let start = Instant::now();
    let res = synth::run(cfg)?;
    let ln_q: Vec<f64> = res.vectors.iter().map(|z| engine::ln_integer(z.q())).collect();
    let estimates = engine::stats_from_logs(&ln_q, &res.ln_xi(), engine::DEFAULT_WINDOW_FRACTION).ok();
    let config = serde_json::to_value(cfg).map_err(|e| Error::Parse(e.to_string()))?;
    let manifest = RunManifest::new("synthesize", config, cfg.precision_bits, cfg.precision_cap);
    let mut art = SynthArtifact::new(manifest, &res, estimates);
    art.manifest.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(art)
}

/// Run the engine on `alpha` and look for `vectors[..n]` as consecutive records.
pub fn round_trip(alpha: Vec<RatInterval>, vectors: &[IntVec], n: usize, cfg: &EngineConfig) -> Result<RoundTrip> {
    let n = n.min(vectors.len());
    if n == 0 {
        return Err(Error::domain("nothing to compare"));
    }
    let q_max = vectors[n - 1].q();
    // the enclosure is far tighter than any q in range; let the engine use it
    let cap = cfg.precision_cap.max(4 * q_max.significant_bits() + 256);
    let cfg = EngineConfig { precision_cap: cap, ..cfg.clone() };
    let mut target = Target::new(alpha, None)?;
    let records = best_approximations(&mut target, q_max, &cfg)?;
    let found = records.iter().map(|r| r.to_intvec()).collect::<Result<Vec<_>>>()?;
    let offset = found.iter().position(|v| *v == vectors[0]);
    let matched = offset.map_or(0, |o| {
        vectors[..n].iter().zip(&found[o..]).take_while(|(a, b)| a == b).count()
    });
    Ok(RoundTrip { checked: n, offset, matched, holds: matched == n })
}

/// `verify`: re-derive every check from the stored integers.
pub fn verify(art: &StoredArtifact, cfg: &EngineConfig) -> Result<VerifyReport> {
    let start = Instant::now();
    let c = &art.config;
    c.validate()?;
    let chain = exponents::exponent_chain(c.k, &c.lambda_float())?;
    let conditions = verify_conditions(&art.vectors, &chain)?;
    let word: Option<PatternWord> = pattern_word(&art.vectors, BURN_IN).ok();
    let word_str = word.as_ref().map(|w| w.to_string());
    let word_matches = match (&art.realized_word, &word_str) {
        (Some(stored), Some(now)) => stored == now,
        (None, _) => true,
        (Some(_), None) => false,
    };
    let k_est = word.as_ref().and_then(|w| k_estimate(w).ok());
    let enclosure = art.alpha.enclosure()?;
    let trip = match round_trip(enclosure, &art.vectors, ROUND_TRIP_LEN, cfg) {
        Ok(t) => t,
        Err(Error::Precision { .. } | Error::Tie { .. } | Error::EnumerationCap { .. }) => {
            RoundTrip { checked: ROUND_TRIP_LEN.min(art.vectors.len()), offset: None, matched: 0, holds: false }
        }
        Err(e) => return Err(e),
    };
    let ln_xi = synth::ln_xi_against(&art.vectors, &art.alpha.center()?);
    let schmidt = match &word {
        Some(w) => schmidt_check(&art.vectors, &ln_xi, w)?,
        None => Vec::new(),
    };
    let schmidt_holds = schmidt.iter().all(|s| s.holds);
    let passed = conditions.exact_hold() && word_matches && trip.holds && schmidt_holds;
    let config = serde_json::to_value(c).map_err(|e| Error::Parse(e.to_string()))?;
    let manifest = RunManifest::new("verify", config, cfg.precision_bits, cfg.precision_cap).finish(start.elapsed());
    Ok(VerifyReport {
        manifest,
        vectors: art.vectors.len(),
        conditions,
        word: word_str,
        stored_word: art.realized_word.clone(),
        word_matches,
        k_estimate: k_est,
        round_trip: trip,
        schmidt,
        schmidt_holds,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// `selftest`: a few fast end-to-end checks.
pub fn selftest() -> Vec<SelfCheck> {
    let mut out = Vec::new();
    let mut check = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        out.push(SelfCheck { name, passed, detail });
    };
    check("lambda_star_root", (|| {
        let ls = exponents::lambda_star(exponents::DEFAULT_PREC);
        let g = exponents::root_gk(1, &ls, 1e-30)?.value;
        let th = exponents::theta(&ls);
        let gap = Float::with_val(64, &g - &th).abs().to_f64();
        Ok((gap < 1e-9, format!("lambda_* = {}, |g_1 - theta| = {gap:.2e}", format!("{:.12}", ls.to_f64()))))
    })());
    check("g1_half", (|| {
        let g = exponents::root_gk(1, &exponents::real(exponents::DEFAULT_PREC, 0.5), 1e-30)?.value.to_f64();
        Ok(((g - (1.0 + 0.5f64.sqrt())).abs() < 1e-12, format!("g_1(1/2) = {g}")))
    })());
    check("golden_fibonacci", (|| {
        let mut t = Target::golden(128)?;
        let recs = best_approximations(&mut t, &Integer::from(10_000), &EngineConfig::default())?;
        let qs: Vec<Integer> = recs.iter().map(|r| r.q.clone()).collect();
        let fib = qs.windows(3).all(|w| w[2] == Integer::from(&w[0] + &w[1]));
        Ok((fib && qs.len() > 15, format!("{} records, last q = {}", qs.len(), qs.last().cloned().unwrap_or_default())))
    })());
    check("rational_terminates", (|| {
        let mut t = parse_target("1/7,3/7,5/14", 128)?;
        let recs = best_approximations(&mut t, &Integer::from(1000), &EngineConfig::default())?;
        let last = recs.last().ok_or_else(|| Error::domain("no records"))?;
        Ok((last.is_exact_hit() && last.q == 14, format!("last q = {}", last.q)))
    })());
    check("short_synthesis", (|| {
        let cfg = SynthConfig { steps: 12, ..SynthConfig::default() };
        let res = synth::run(&cfg)?;
        let exact = res.conditions.exact_hold();
        let k = res.k_estimate.as_ref().map(|k| k.k_value);
        let trip = round_trip(res.alpha().enclosure(), &res.vectors, ROUND_TRIP_LEN, &EngineConfig::default())?;
        let ok = exact && k == Some(KValue::Finite(1)) && trip.holds;
        Ok((ok, format!("exact {exact}, k {}, round trip {}/{}", k.map_or("-".to_string(), |k| k.to_string()), trip.matched, trip.checked)))
    })());
    check("primitive_minors", (|| {
        let t = [IntVec::from_i64([1, 0, 0, 0]), IntVec::from_i64([0, 1, 0, 0]), IntVec::from_i64([0, 0, 2, 0])];
        let u = [t[0].clone(), t[1].clone(), IntVec::from_i64([0, 0, 2, 1])];
        let (a, b) = (lattice::is_primitive(&t)?, lattice::is_primitive(&u)?);
        Ok((!a && b, format!("(1,0,0,0),(0,1,0,0),(0,0,2,0) primitive: {a}")))
    })());
    out
}
