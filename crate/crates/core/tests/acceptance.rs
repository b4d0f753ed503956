//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The process exits 0 whatever the verdicts so that `cargo test` reports
//! build and unit failures separately; set `ACCEPTANCE_STRICT=1` to turn a
//! FAIL into a nonzero exit.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Integer, Rational};

use dioph_lab::engine::{self, best_approximations, EngineConfig, Target};
use dioph_lab::exponents::{self, parse_real, DEFAULT_PREC};
use dioph_lab::lab;
use dioph_lab::pattern::{self, KValue};
use dioph_lab::synth::{self, SynthConfig, SynthResult, BURN_IN};
use dioph_lab::Error;

mod tol {
    /// Root of the first quadratic against `theta` at the critical lambda.
    pub const CRITICAL_ROOT: f64 = 1e-9;
    pub const CRITICAL_DIGITS: &str = "0.42451";
    pub const LIMIT_K40: f64 = 1e-3;
    pub const IDENTITY: f64 = 1e-9;
    /// Relative tolerance of realized growth ratios against the exponent chain.
    pub const RATIO_REL: f64 = 0.10;
    /// Relative tolerance of the uniform exponent estimate against lambda.
    pub const OMEGA_HAT_REL: f64 = 0.05;
    /// Slack factor in the ratio lower bound.
    pub const RATIO_BOUND_SLACK: f64 = 0.9;
}

mod budget {
    use std::time::Duration;
    pub const CRITICAL: Duration = Duration::from_secs(1);
    pub const GRID: Duration = Duration::from_secs(10);
    pub const IDENTITIES: Duration = Duration::from_secs(10);
    pub const ORACLE: Duration = Duration::from_secs(60);
    pub const CONSTRUCTION: Duration = Duration::from_secs(600);
    pub const ROUND_TRIP: Duration = Duration::from_secs(300);
}

struct Verdict {
    id: u32,
    name: &'static str,
    passed: bool,
    elapsed: Duration,
    detail: String,
}

fn timed(
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    f: impl FnOnce() -> Result<(bool, String), Error>,
) -> Verdict {
    let start = Instant::now();
    let (ok, mut detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    if !in_time {
        detail.push_str(&format!("; over the {:?} budget", limit.unwrap()));
    }
    Verdict { id, name, passed: ok && in_time, elapsed, detail }
}

fn lam(s: &str) -> Float {
    parse_real(DEFAULT_PREC, s).expect("grid literal")
}

fn grid() -> Vec<String> {
    (34..=99).map(|i| format!("0.{i:02}")).collect()
}

fn abs_diff(a: &Float, b: &Float) -> f64 {
    Float::with_val(64, a - b).abs().to_f64()
}

fn critical_lambda() -> Result<(bool, String), Error> {
    let ls = exponents::lambda_star(DEFAULT_PREC);
    let th = exponents::theta(&ls);
    let g = exponents::root_gk(1, &ls, 1e-40)?.value;
    let gap = abs_diff(&g, &th);
    let r = exponents::r_k(1, &ls, &th)?.to_f64().abs();
    let printed = format!("{:.12}", ls.to_f64());
    let digits = format!("{:.5}", ls.to_f64()) == tol::CRITICAL_DIGITS;
    let ok = gap < tol::CRITICAL_ROOT && r < tol::CRITICAL_ROOT && digits;
    Ok((ok, format!("lambda_* = {printed}, |g_1 - theta| = {gap:.2e}, |R_1(theta)| = {r:.2e}")))
}

/// Real roots of the quadratic `R_k` strictly inside `(max{1, 1/theta}, 2/theta)`, from the
/// closed form rather than the bisection under test.
fn roots_in_bracket(k: u32, l: &Float) -> Result<usize, Error> {
    let c = exponents::poly_coeffs(k, l)?;
    let th = exponents::theta(l);
    let lo = Float::with_val(DEFAULT_PREC, th.recip_ref()).max(&Float::with_val(DEFAULT_PREC, 1));
    let hi = Float::with_val(DEFAULT_PREC, 2u32 / &th);
    let disc = Float::with_val(DEFAULT_PREC, c.n.square_ref()) - Float::with_val(DEFAULT_PREC, &c.m * &c.p) * 4u32;
    if disc < 0 {
        return Ok(0);
    }
    let sq = disc.sqrt();
    let two_m = Float::with_val(DEFAULT_PREC, &c.m * 2u32);
    let roots = [
        Float::with_val(DEFAULT_PREC, &c.n - &sq) / &two_m,
        Float::with_val(DEFAULT_PREC, &c.n + &sq) / &two_m,
    ];
    Ok(roots.iter().filter(|r| **r > lo && **r < hi).count())
}

fn root_grid() -> Result<(bool, String), Error> {
    let mut failures: Vec<String> = Vec::new();
    let mut rows = 0;
    for s in grid() {
        let l = lam(&s);
        let th = exponents::theta(&l);
        let lower = Float::with_val(DEFAULT_PREC, th.recip_ref()).max(&Float::with_val(DEFAULT_PREC, 1));
        let upper = Float::with_val(DEFAULT_PREC, 2u32 / &th);
        let big_g = exponents::g_closed(&l);
        let mut prev: Option<Float> = None;
        for k in 1..=12 {
            rows += 1;
            let g = exponents::root_gk(k, &l, 1e-30)?.value;
            let count = roots_in_bracket(k, &l)?;
            if count != 1 {
                failures.push(format!("lambda {s} k {k}: {count} roots in the bracket"));
            }
            if !(g > lower && g < upper) {
                failures.push(format!("lambda {s} k {k}: g_k outside the bracket"));
            }
            if g <= big_g {
                failures.push(format!("lambda {s} k {k}: g_k <= G"));
            }
            if let Some(p) = &prev {
                if g <= *p {
                    failures.push(format!("lambda {s} k {k}: not increasing"));
                }
            }
            prev = Some(g);
        }
        let g40 = exponents::root_gk(40, &l, 1e-30)?.value;
        let d = abs_diff(&g40, &exponents::gbar(&l)?);
        if d >= tol::LIMIT_K40 {
            failures.push(format!("lambda {s}: |g_40 - gbar| = {d:.2e}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{rows} (lambda, k) pairs")
    } else {
        format!("{} of {rows} pairs or limits failed: {}", failures.len(), failures.join("; "))
    };
    Ok((failures.is_empty(), detail))
}

fn identities() -> Result<(bool, String), Error> {
    // near lambda = 1 the root sits within 1e-24 of the edge of the sigma window and
    // f_k amplifies root error by about 1e25, hence the extra precision
    let prec = 512;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for s in grid() {
        let l = parse_real(prec, &s)?;
        let th = exponents::theta(&l);
        let one_minus = Float::with_val(prec, 1 - &l);
        for k in 1..=12 {
            let g = exponents::root_gk(k, &l, 1e-100)?.value;
            let f = exponents::f_chain(k, &g, &l)?;
            worst.0 = worst.0.max(abs_diff(&f[k as usize - 1], &g));
            let chain = exponents::exponent_chain(k, &l)?;
            let g0 = &chain.g_kj[0];
            let glue0 = Float::with_val(prec, g0 + 1u32) / Float::with_val(prec, &th * g0);
            worst.1 = worst.1.max(abs_diff(&glue0, &chain.g_k));
            for j in 1..k as usize {
                let gj = &chain.g_kj[j];
                let back = Float::with_val(prec, gj - &l) / Float::with_val(prec, &one_minus * gj);
                worst.2 = worst.2.max(abs_diff(&back, &chain.g_kj[j - 1]));
            }
        }
    }
    let ok = worst.0 < tol::IDENTITY && worst.1 < tol::IDENTITY && worst.2 < tol::IDENTITY;
    Ok((ok, format!("max errors: fixed point {:.1e}, first link {:.1e}, chain links {:.1e}", worst.0, worst.1, worst.2)))
}

/// Exact per-q scan with running minima.
fn brute_force(alpha: &[Rational], q_max: u32) -> Vec<(u32, Vec<Integer>)> {
    let mut out = Vec::new();
    let mut best: Option<Rational> = None;
    for q in 1..=q_max {
        let mut xi = Rational::new();
        let mut a = Vec::new();
        for x in alpha {
            let qx = Rational::from(x * q);
            let r = qx.clone().round().into_numer_denom().0;
            xi += Rational::from(&qx - &r).square();
            a.push(r);
        }
        if best.as_ref().is_none_or(|b| xi < *b) {
            let zero = xi == 0;
            best = Some(xi);
            out.push((q, a));
            if zero {
                break;
            }
        }
    }
    out
}

fn random_target(rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let n = rng.gen_range(1..=3);
    let den: i64 = rng.gen_range(2..=500);
    (0..n)
        .map(|_| loop {
            let r = Rational::from((rng.gen_range(-3 * den..3 * den), den));
            // exact half-integers make the first record a tie
            if !(Rational::from(&r * 2u32).is_integer() && !r.is_integer()) {
                break r;
            }
        })
        .collect()
}

fn oracle() -> Result<(bool, String), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = EngineConfig::default();
    let mut mismatches = Vec::new();
    for i in 0..50 {
        let alpha = random_target(&mut rng);
        let expect = brute_force(&alpha, 10_000);
        let got = best_approximations(&mut Target::exact(alpha.clone())?, &Integer::from(10_000), &cfg)?;
        let got: Vec<(u32, Vec<Integer>)> = got.into_iter().map(|r| (r.q.to_u32().unwrap_or(0), r.a)).collect();
        if got != expect {
            mismatches.push(i);
        }
    }
    let recs = best_approximations(&mut Target::golden(128)?, &Integer::from(100_000), &cfg)?;
    let fib = recs.windows(3).all(|w| w[2].q == Integer::from(&w[0].q + &w[1].q)) && recs[0].q == 1 && recs[1].q == 2;
    let dets = recs.windows(2).all(|w| {
        let d = Integer::from(&w[0].q * &w[1].a[0]) - Integer::from(&w[1].q * &w[0].a[0]);
        d == 1 || d == -1
    });
    let ok = mismatches.is_empty() && fib && dets;
    Ok((
        ok,
        format!(
            "50 rational targets, mismatches {:?}; golden: {} records, Fibonacci {fib}, unit determinants {dets}",
            mismatches,
            recs.len()
        ),
    ))
}

const CONFIGS: [(f64, u32); 5] = [(0.5, 1), (0.6, 1), (0.5, 2), (0.6, 2), (0.45, 3)];

struct Run {
    lambda: f64,
    k: u32,
    steps: usize,
    result: Result<SynthResult, Error>,
}

fn is_a_k_b(word: &pattern::PatternWord, k: u32) -> bool {
    let unit = format!("{}B", "A".repeat(k as usize));
    (0..=word.len() / 3).any(|skip| word.eventual_period(skip).as_deref() == Some(unit.as_str()))
}

fn omega_hat(res: &SynthResult) -> Result<engine::ExponentEstimate, Error> {
    let ln_q: Vec<f64> = res.vectors.iter().map(|z| engine::ln_integer(z.q())).collect();
    engine::stats_from_logs(&ln_q, &res.ln_xi(), engine::DEFAULT_WINDOW_FRACTION)
}

fn check_run(run: &Run) -> (bool, String) {
    let tag = format!("({}, {})", run.lambda, run.k);
    let res = match &run.result {
        Ok(r) => r,
        Err(e) => return (false, format!("{tag}: {e}")),
    };
    let exact = res.conditions.exact_hold();
    let periodic = res.realized_word.as_ref().is_some_and(|w| is_a_k_b(w, run.k));
    let worst_ratio = res
        .realized_ratios
        .iter()
        .zip(&res.expected_ratios)
        .enumerate()
        .filter(|(i, _)| i + 1 > BURN_IN)
        .map(|(_, (r, e))| (r / e - 1.0).abs())
        .fold(0.0, f64::max);
    let est = omega_hat(res);
    let wh = est.as_ref().map(|e| e.omega_hat_est).unwrap_or(f64::NAN);
    let wh_rel = (wh / run.lambda - 1.0).abs();
    let ok = exact && periodic && worst_ratio <= tol::RATIO_REL && wh_rel <= tol::OMEGA_HAT_REL;
    (
        ok,
        format!(
            "{tag}: exact {exact}, A^kB {periodic}, ratio err {:.3}, omega_hat {wh:.5} ({:.2}%)",
            worst_ratio,
            100.0 * wh_rel
        ),
    )
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut verdicts = vec![
        timed(1, "critical_lambda_root", Some(budget::CRITICAL), critical_lambda),
        timed(2, "root_family_grid", Some(budget::GRID), root_grid),
        timed(3, "fixed_point_and_chain_identities", Some(budget::IDENTITIES), identities),
        timed(4, "engine_matches_exact_scan", Some(budget::ORACLE), oracle),
    ];

    let mut runs: Vec<Run> = Vec::new();
    verdicts.push(timed(5, "construction_at_desk_scale", Some(budget::CONSTRUCTION), || {
        runs = CONFIGS
            .iter()
            .map(|&(lambda, k)| {
                let cfg = SynthConfig { lambda, k, steps: 30, ..SynthConfig::default() };
                Run { lambda, k, steps: 30, result: synth::run(&cfg) }
            })
            .collect();
        let checks: Vec<(bool, String)> = runs.iter().map(check_run).collect();
        let detail = checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; ");
        Ok((checks.iter().all(|c| c.0), detail))
    }));

    // runs refused at 30 steps are repeated at the largest size the budget allows
    let short: Vec<Run> = runs
        .iter()
        .filter(|r| matches!(r.result, Err(Error::Budget(_))))
        .map(|r| {
            let cfg = SynthConfig { lambda: r.lambda, k: r.k, steps: 16, ..SynthConfig::default() };
            Run { lambda: r.lambda, k: r.k, steps: 16, result: synth::run(&cfg) }
        })
        .collect();
    let usable: Vec<&Run> = runs.iter().chain(&short).filter(|r| r.result.is_ok()).collect();

    verdicts.push(timed(6, "engine_round_trip", Some(budget::ROUND_TRIP), || {
        let mut ok = usable.len() == CONFIGS.len();
        let mut parts = Vec::new();
        for run in &usable {
            let res = run.result.as_ref().expect("filtered");
            let trip = lab::round_trip(res.alpha().enclosure(), &res.vectors, lab::ROUND_TRIP_LEN, &EngineConfig::default())?;
            let k = res.k_estimate.as_ref().map(|e| e.k_value);
            let k_ok = k == Some(KValue::Finite(run.k as usize));
            ok &= trip.holds && k_ok;
            parts.push(format!(
                "({}, {}, {} steps): {}/{} vectors, k {}",
                run.lambda,
                run.k,
                run.steps,
                trip.matched,
                trip.checked,
                k.map_or("-".to_string(), |k| k.to_string())
            ));
        }
        Ok((ok, parts.join("; ")))
    }));

    verdicts.push(timed(7, "height_inequality_on_b_windows", None, || {
        let (mut windows, mut bad) = (0, 0);
        for run in &usable {
            let res = run.result.as_ref().expect("filtered");
            let Some(word) = &res.realized_word else { continue };
            for s in pattern::schmidt_check(&res.vectors, &res.ln_xi(), word)? {
                windows += 1;
                if !s.holds {
                    bad += 1;
                }
            }
        }
        Ok((windows > 0 && bad == 0, format!("{windows} B windows over {} runs, {bad} violations", usable.len())))
    }));

    verdicts.push(timed(8, "ratio_lower_bound", None, || {
        let mut checked = 0;
        let mut parts = Vec::new();
        let mut ok = true;
        for run in &usable {
            let res = run.result.as_ref().expect("filtered");
            let Some(KValue::Finite(k)) = res.k_estimate.as_ref().map(|e| e.k_value) else { continue };
            let est = omega_hat(res)?;
            let w = est.omega_hat_est;
            if !(w > 1.0 / 3.0 && w < 1.0) {
                continue;
            }
            let g = exponents::root_gk(k as u32, &exponents::real(DEFAULT_PREC, w), 1e-12)?.value.to_f64();
            let holds = est.ratio_limsup_est >= g * tol::RATIO_BOUND_SLACK;
            ok &= holds;
            checked += 1;
            parts.push(format!("({}, {}): {:.4} vs g_{k} = {:.4}", run.lambda, run.k, est.ratio_limsup_est, g));
        }
        Ok((ok && checked > 0, format!("{checked} sequences; {}", parts.join("; "))))
    }));

    let mut failed = 0;
    for v in &verdicts {
        println!(
            "{} {} {} ({:.2}s): {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.id,
            v.name,
            v.elapsed.as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.passed);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
