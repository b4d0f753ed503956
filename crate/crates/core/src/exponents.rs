//! Scalar exponent calculus: `theta`, `S_k`, the quadratic `R_k` and its root
//! `g_k`, the uniform bound `G`, `sigma`, the `f_j` chain and the periodic
//! neighbourhood exponents.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};

/// Working precision (bits) used when callers do not choose one.
pub const DEFAULT_PREC: u32 = 192;
pub const LAMBDA_MIN: f64 = 0.3334;
pub const LAMBDA_MAX: f64 = 0.9999;
pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_BISECTIONS: u32 = 200;

pub fn real(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

/// Parse a decimal string exactly rounded to `prec` bits.
pub fn parse_real(prec: u32, s: &str) -> Result<Float> {
    let parsed = Float::parse(s.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    Ok(Float::with_val(prec, parsed))
}

pub fn check_lambda(lambda: &Float) -> Result<()> {
    if lambda.is_nan() || *lambda < LAMBDA_MIN || *lambda > LAMBDA_MAX {
        return Err(Error::domain(format!(
            "lambda = {} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]",
            lambda.to_f64()
        )));
    }
    Ok(())
}

/// `theta = (1 - lambda) / lambda`.
pub fn theta(lambda: &Float) -> Float {
    let one_minus = Float::with_val(lambda.prec(), 1 - lambda);
    one_minus / lambda
}

/// `S_k = 1 + theta + ... + theta^(k-1)`.
pub fn series_s(k: u32, theta: &Float) -> Float {
    let prec = theta.prec();
    if *theta == 1 {
        return Float::with_val(prec, k);
    }
    if k <= 256 {
        let mut sum = Float::new(prec);
        let mut p = Float::with_val(prec, 1);
        for _ in 0..k {
            sum += &p;
            p *= theta;
        }
        return sum;
    }
    let num = Float::with_val(prec, theta.pow(k)) - 1u32;
    num / Float::with_val(prec, theta - 1u32)
}

/// Coefficients of `R_k(g) = M g^2 - N g + P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCoeffs {
    pub m: Float,
    pub n: Float,
    pub p: Float,
}

impl PolyCoeffs {
    pub fn eval(&self, g: &Float) -> Float {
        let prec = self.m.prec();
        let mut v = Float::with_val(prec, &self.m * g);
        v -= &self.n;
        v *= g;
        v + &self.p
    }
}

pub fn poly_coeffs(k: u32, lambda: &Float) -> Result<PolyCoeffs> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    check_lambda(lambda)?;
    let prec = lambda.prec();
    let th = theta(lambda);
    let s = |j: u32| series_s(j, &th);
    let th_pow = |j: u32| Float::with_val(prec, (&th).pow(j));
    let m = Float::with_val(prec, &th * s(k + 1));
    let n = Float::with_val(prec, th_pow(k) * 2u32) + Float::with_val(prec, s(k) / lambda)
        + Float::with_val(prec, &th * s(k - 1));
    let p = Float::with_val(prec, s(k - 1) / lambda) + th_pow(k - 1);
    Ok(PolyCoeffs { m, n, p })
}

/// `R_k(g, lambda)`.
pub fn r_k(k: u32, lambda: &Float, g: &Float) -> Result<Float> {
    Ok(poly_coeffs(k, lambda)?.eval(g))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootResult {
    pub value: Float,
    pub bracket: (Float, Float),
    pub iterations: u32,
}

/// The unique root `g_k` of `R_k` in `(max{1, 1/theta}, 2/theta)`, by bisection.
pub fn root_gk(k: u32, lambda: &Float, tol: f64) -> Result<RootResult> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let coeffs = poly_coeffs(k, lambda)?;
    let prec = lambda.prec();
    let th = theta(lambda);
    let inv = Float::with_val(prec, th.recip_ref());
    let mut lo = if inv > 1 { inv } else { Float::with_val(prec, 1) };
    let mut hi = Float::with_val(prec, 2u32 / &th);
    // shift inside the open interval, backing off towards the ends if needed
    let mut eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32 / 2)));
    let (mut flo, mut fhi);
    loop {
        let a = Float::with_val(prec, &lo + &eps);
        let b = Float::with_val(prec, &hi - &eps);
        flo = coeffs.eval(&a);
        fhi = coeffs.eval(&b);
        if flo < 0 && fhi > 0 {
            lo = a;
            hi = b;
            break;
        }
        eps >>= 8;
        if eps.is_zero() || eps.get_exp().is_none_or(|e| e < -(4 * prec as i32)) {
            return Err(Error::NoSignChange { k });
        }
    }
    let tol = Float::with_val(prec, tol);
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && Float::with_val(prec, &hi - &lo) > tol {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        let fm = coeffs.eval(&mid);
        if fm.is_zero() {
            lo = mid.clone();
            hi = mid;
            break;
        }
        if fm < 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let value = Float::with_val(prec, &lo + &hi) / 2u32;
    Ok(RootResult { value, bracket: (lo, hi), iterations })
}

/// Root `G_n(omega_hat)` of `g^(n-1) = rho (g^(n-2) + ... + 1)`, `rho = w/(1-w)`.
pub fn g_of(n: u32, omega_hat: &Float) -> Result<Float> {
    let prec = omega_hat.prec();
    if n < 2 {
        return Err(Error::domain("n must be at least 2"));
    }
    let lower = Float::with_val(prec, 1) / n;
    if omega_hat.is_nan() || *omega_hat < lower || *omega_hat > 1 {
        return Err(Error::domain(format!("omega_hat = {} outside [1/{n}, 1]", omega_hat.to_f64())));
    }
    if *omega_hat == 1 {
        return Ok(Float::with_val(prec, rug::float::Special::Infinity));
    }
    let rho = Float::with_val(prec, omega_hat / Float::with_val(prec, 1 - omega_hat));
    if n == 2 {
        return Ok(rho);
    }
    let f = |g: &Float| -> Float {
        let mut acc = Float::new(prec);
        let mut p = Float::with_val(prec, 1);
        for _ in 0..n - 1 {
            acc += &p;
            p *= g;
        }
        // p = g^(n-1), acc = g^(n-2) + ... + 1
        p - Float::with_val(prec, &rho * &acc)
    };
    let mut lo = Float::new(prec);
    let mut hi = Float::with_val(prec, &rho * (n - 1)) + 1u32;
    for _ in 0..(prec + 64) {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        if f(&mid) < 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Float::with_val(prec, &lo + &hi) / 2u32)
}

/// Closed form `G(lambda) = (rho + sqrt(rho^2 + 4 rho)) / 2` for `n = 3`.
pub fn g_closed(lambda: &Float) -> Float {
    let prec = lambda.prec();
    let rho = Float::with_val(prec, lambda / Float::with_val(prec, 1 - lambda));
    let disc = Float::with_val(prec, rho.square_ref()) + Float::with_val(prec, &rho * 4u32);
    (rho + disc.sqrt()) / 2u32
}

/// `sigma(g) = (1/(1-lambda) - g) / (g - 1/theta)`.
pub fn sigma(g: &Float, lambda: &Float) -> Result<Float> {
    let prec = lambda.prec();
    let one_minus = Float::with_val(prec, 1 - lambda);
    let upper = Float::with_val(prec, one_minus.recip_ref());
    let lower = Float::with_val(prec, lambda / &one_minus);
    if !(*g > lower && *g < upper) {
        return Err(Error::Window(format!(
            "g = {} outside ({}, {})",
            g.to_f64(),
            lower.to_f64(),
            upper.to_f64()
        )));
    }
    Ok(Float::with_val(prec, &upper - g) / Float::with_val(prec, g - &lower))
}

/// `[f_1, ..., f_k]`, computed by closed form and by recursion, cross-checked.
pub fn f_chain(k: u32, g: &Float, lambda: &Float) -> Result<Vec<Float>> {
    let prec = lambda.prec();
    let sig = sigma(g, lambda)?;
    let th = theta(lambda);
    let den = |j: u32| -> Float {
        Float::with_val(prec, (&th).pow(j)) - Float::with_val(prec, &sig * series_s(j, &th))
    };
    let mut closed = Vec::with_capacity(k as usize);
    for j in 1..=k {
        let d = den(j);
        if d <= 0 {
            return Err(Error::Window(format!("theta^{j} - sigma S_{j} = {} <= 0", d.to_f64())));
        }
        closed.push(den(j - 1) / d);
    }
    let inv_lambda = Float::with_val(prec, lambda.recip_ref());
    let mut rec: Vec<Float> = Vec::with_capacity(k as usize);
    for j in 1..=k {
        let d = match rec.last() {
            None => Float::with_val(prec, &th - &sig),
            Some(prev) => Float::with_val(prec, &inv_lambda - Float::with_val(prec, &th * prev)),
        };
        if d <= 0 {
            return Err(Error::Window(format!("recursion denominator at j = {j} is not positive")));
        }
        rec.push(d.recip());
    }
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32 / 2)));
    for (j, (a, b)) in closed.iter().zip(&rec).enumerate() {
        let scale = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, 1));
        if Float::with_val(prec, a - b).abs() > Float::with_val(prec, &tol * &scale) {
            return Err(Error::Window(format!("closed form and recursion disagree at j = {}", j + 1)));
        }
    }
    Ok(closed)
}

/// The exponent chain of one period of the construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentChain {
    pub k: u32,
    #[serde(serialize_with = "ser_f")]
    pub lambda: Float,
    #[serde(serialize_with = "ser_f")]
    pub g_k: Float,
    /// `[g_{k,0}, ..., g_{k,k-1}]`
    #[serde(serialize_with = "ser_vf")]
    pub g_kj: Vec<Float>,
    /// `u_1, ..., u_{k+1}`; the sequence repeats with period `k + 1`
    #[serde(serialize_with = "ser_vf")]
    pub u_seq: Vec<Float>,
}

fn ser_f<S: serde::Serializer>(x: &Float, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(x.to_f64())
}

fn ser_vf<S: serde::Serializer>(x: &[Float], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(x.len()))?;
    for v in x {
        seq.serialize_element(&v.to_f64())?;
    }
    seq.end()
}

impl ExponentChain {
    /// Position of step `j` (the step producing vector `j + 1`) within a period;
    /// position `k` is the out-of-plane step.
    pub fn schedule_position(&self, j: usize) -> usize {
        let p = self.k as usize + 1;
        (j + 2 * p - 3) % p
    }

    pub fn is_stage2(&self, j: usize) -> bool {
        self.schedule_position(j) == self.k as usize
    }

    /// Growth exponent of step `j >= 1`: `log q_{j+1} ~ e_j log q_j`.
    pub fn step_exponent(&self, j: usize) -> &Float {
        let pos = self.schedule_position(j);
        let k = self.k as usize;
        if pos == k {
            &self.g_k
        } else {
            &self.g_kj[k - 1 - pos]
        }
    }

    /// Neighbourhood exponent `u_j = 1 + lambda e_j`.
    pub fn u(&self, j: usize) -> &Float {
        &self.u_seq[(j - 1) % self.u_seq.len()]
    }
}

/// The chain `g_{k,0} = 1/(theta g_k - 1)`, `g_{k,j} = f_j(g_k)`, glue-checked.
pub fn exponent_chain(k: u32, lambda: &Float) -> Result<ExponentChain> {
    let prec = lambda.prec();
    let g = root_gk(k, lambda, DEFAULT_TOL.min(f64::powi(2.0, -(prec as i32 / 2).min(1000))))?.value;
    let th = theta(lambda);
    let g0 = Float::with_val(prec, Float::with_val(prec, &th * &g) - 1u32).recip();
    let mut g_kj = vec![g0];
    if k > 1 {
        let fs = f_chain(k - 1, &g, lambda)?;
        g_kj.extend(fs);
    }
    let tol = 1e-9;
    let glue0 = Float::with_val(prec, &g_kj[0] + 1u32) / Float::with_val(prec, &th * &g_kj[0]);
    if Float::with_val(prec, &glue0 - &g).abs().to_f64() > tol {
        return Err(Error::Window("glue identity for g_k fails".into()));
    }
    let one_minus = Float::with_val(prec, 1 - lambda);
    for j in 1..k as usize {
        let back = Float::with_val(prec, &g_kj[j] - lambda)
            / Float::with_val(prec, &one_minus * &g_kj[j]);
        if Float::with_val(prec, &back - &g_kj[j - 1]).abs().to_f64() > tol {
            return Err(Error::Window(format!("glue identity fails at j = {j}")));
        }
    }
    let mut chain = ExponentChain { k, lambda: lambda.clone(), g_k: g, g_kj, u_seq: Vec::new() };
    chain.u_seq = (1..=k as usize + 1)
        .map(|j| Float::with_val(prec, lambda * chain.step_exponent(j)) + 1u32)
        .collect();
    Ok(chain)
}

/// `lim g_k`: `1/(1-lambda)` for `lambda >= 1/2`, `2/theta` below.
pub fn gbar(lambda: &Float) -> Result<Float> {
    check_lambda(lambda)?;
    let prec = lambda.prec();
    if *lambda >= 0.5 {
        Ok(Float::with_val(prec, 1 - lambda).recip())
    } else {
        Ok(Float::with_val(prec, 2u32 / theta(lambda)))
    }
}

/// `lambda_* = (2 + sqrt 5 - sqrt(7 + 2 sqrt 5)) / 2`.
pub fn lambda_star(prec: u32) -> Float {
    let s5 = Float::with_val(prec, 5u32).sqrt();
    let inner = Float::with_val(prec, &s5 * 2u32) + 7u32;
    (Float::with_val(prec, &s5 + 2u32) - inner.sqrt()) / 2u32
}

/// `pi` at the given precision; used by reporting code.
pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(x: &str) -> Float {
        parse_real(DEFAULT_PREC, x).unwrap()
    }

    fn close(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() < tol
    }

    #[test]
    fn series_examples() {
        let one = real(DEFAULT_PREC, 1.0);
        let two = real(DEFAULT_PREC, 2.0);
        assert_eq!(series_s(3, &one), 3);
        assert_eq!(series_s(3, &two), 7);
        assert_eq!(series_s(0, &two), 0);
        assert_eq!(series_s(0, &one), 0);
    }

    #[test]
    fn coefficient_examples() {
        let c = poly_coeffs(1, &l("0.5")).unwrap();
        assert_eq!((c.m.to_f64(), c.n.to_f64(), c.p.to_f64()), (2.0, 4.0, 1.0));
        assert_eq!(c.eval(&real(DEFAULT_PREC, 1.0)), -1);
        let c = poly_coeffs(2, &l("0.5")).unwrap();
        assert_eq!((c.m.to_f64(), c.n.to_f64(), c.p.to_f64()), (3.0, 7.0, 3.0));
        assert!(poly_coeffs(1, &l("0.2")).is_err());
    }

    #[test]
    fn root_examples() {
        let r = root_gk(1, &l("0.5"), 1e-12).unwrap();
        assert!(close(&r.value, 1.0 + 2f64.sqrt() / 2.0, 1e-11));
        assert!(r.iterations <= 200);
        let ls = lambda_star(DEFAULT_PREC);
        let r = root_gk(1, &ls, 1e-15).unwrap();
        assert!(Float::with_val(64, &r.value - theta(&ls)).abs().to_f64() < 1e-12);
        let r = root_gk(40, &l("0.6"), 1e-12).unwrap();
        assert!(close(&r.value, 2.5, 1e-3));
    }

    #[test]
    fn g_of_examples() {
        assert!(close(&g_of(2, &l("0.6")).unwrap(), 1.5, 1e-15));
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(close(&g_of(3, &l("0.5")).unwrap(), phi, 1e-14));
        assert!(g_of(3, &l("0.5")).unwrap() < root_gk(1, &l("0.5"), 1e-12).unwrap().value);
        assert!(g_of(3, &l("1")).unwrap().is_infinite());
        assert!(g_of(3, &l("0.2")).is_err());
    }

    #[test]
    fn sigma_and_chain_examples() {
        assert!(close(&sigma(&l("1.2"), &l("0.5")).unwrap(), 4.0, 1e-15));
        assert!(sigma(&l("2.5"), &l("0.5")).is_err());
        // g = 1/(1-lambda) sits on the window edge; just inside it sigma ~ 0, f_1 ~ 1/theta
        let f = f_chain(1, &l("1.9999999999999"), &l("0.5")).unwrap();
        assert!(close(&f[0], 1.0, 1e-9));
        assert!(matches!(f_chain(2, &l("1.6"), &l("0.5")), Err(Error::Window(_))));
    }

    #[test]
    fn chain_examples() {
        let c = exponent_chain(1, &l("0.5")).unwrap();
        assert!(close(&c.g_kj[0], 2f64.sqrt(), 1e-10));
        assert!(close(&c.u_seq[0], 1.0 + 0.5 * 2f64.sqrt(), 1e-10));
        assert!(close(&c.u_seq[1], 1.0 + 0.5 * (1.0 + 2f64.sqrt() / 2.0), 1e-10));
        assert!(c.is_stage2(2) && !c.is_stage2(3));
        let c = exponent_chain(3, &l("0.45")).unwrap();
        assert_eq!(c.step_exponent(1), &c.g_kj[0]);
        assert_eq!(c.step_exponent(2), &c.g_k);
        assert_eq!(c.step_exponent(3), &c.g_kj[2]);
        assert_eq!(c.step_exponent(5), &c.g_kj[0]);
        assert_eq!(c.step_exponent(6), &c.g_k);
    }

    #[test]
    fn fixed_point_on_grid() {
        for k in 1..=6 {
            for lam in ["0.36", "0.45", "0.5", "0.62", "0.9"] {
                let g = root_gk(k, &l(lam), 1e-30).unwrap().value;
                let f = f_chain(k, &g, &l(lam)).unwrap();
                assert!(Float::with_val(64, &f[k as usize - 1] - &g).abs().to_f64() < 1e-9, "{k} {lam}");
            }
        }
    }

    #[test]
    fn gbar_examples() {
        assert!(close(&gbar(&l("0.6")).unwrap(), 2.5, 1e-15));
        assert!(close(&gbar(&l("0.4")).unwrap(), 4.0 / 3.0, 1e-15));
        assert!(close(&gbar(&l("0.5")).unwrap(), 2.0, 1e-15));
    }
}
