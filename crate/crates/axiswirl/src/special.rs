//! The Biot-Savart profile `F` and the semigroup profile `H`, with derivatives.
//!
//! ```text
//!   F(s)  = int_0^{pi/2} cos 2phi (sin^2 phi + s/4)^{-1/2} dphi
//!   F'(s) = -1/8 int_0^{pi/2} cos 2phi (sin^2 phi + s/4)^{-3/2} dphi
//!   H(t)  = (pi t)^{-1/2} int_{-pi/2}^{pi/2} exp(-sin^2 phi / t) cos 2phi dphi
//! ```
//!
//! The `eval_*` functions integrate these definitions adaptively. The kernel
//! builders call the closed forms in [`f_pair`] and [`h_pair`] instead, which
//! are far cheaper and are checked against the quadrature in the tests:
//! with `a = s/4` and `m = 1/(1+a)`,
//!
//! ```text
//!   F(s)  = ((1 + 2a) K(m) - 2(1 + a) E(m)) / sqrt(1 + a)
//!   F'(s) = (2a K(m) - (1 + 2a) E(m)) / (8 a sqrt(1 + a))
//!   H(t)  = sqrt(pi/t) e^{-x} I_1(x),   x = 1/(2t)
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Result};
use crate::quadrature::adaptive_gk;

/// Default absolute quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-12;
/// Below this argument `H` and `H'` come from the small-t series.
pub const H_SMALL_T: f64 = 1e-6;
/// Above this argument `H` and `H'` come from the large-t series.
pub const H_LARGE_T: f64 = 1e8;

fn check_pos(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} needs a positive finite argument (got {x})"))
    }
}

/// Splits [0, pi/2] at the boundary-layer scale so bisection starts close to it.
fn layer_split(width: f64) -> f64 {
    (4.0 * width).min(FRAC_PI_2 / 2.0)
}

fn integrate_layered(f: impl Fn(f64) -> f64, width: f64, tol: f64) -> f64 {
    let c = layer_split(width);
    adaptive_gk(&f, 0.0, c, tol) + adaptive_gk(&f, c, FRAC_PI_2, tol)
}

pub fn eval_f(s: f64) -> Result<f64> {
    eval_f_tol(s, QUAD_TOL)
}

pub fn eval_f_tol(s: f64, tol: f64) -> Result<f64> {
    check_pos("F", s)?;
    let a = 0.25 * s;
    let sa = a.sqrt();
    // For a >= 1 the constant a^{-1/2} is subtracted from the weight (it
    // integrates to zero against cos 2phi) to remove the leading cancellation.
    let far = a >= 1.0;
    Ok(integrate_layered(
        |phi| {
            let s2 = phi.sin().powi(2);
            let d = s2 + a;
            let w = if far {
                let sd = d.sqrt();
                -s2 / (sa * sd * (sa + sd))
            } else {
                1.0 / d.sqrt()
            };
            (2.0 * phi).cos() * w
        },
        sa,
        tol,
    ))
}

pub fn eval_f_prime(s: f64) -> Result<f64> {
    eval_f_prime_tol(s, QUAD_TOL)
}

pub fn eval_f_prime_tol(s: f64, tol: f64) -> Result<f64> {
    check_pos("F'", s)?;
    let a = 0.25 * s;
    let sa = a.sqrt();
    let far = a >= 1.0;
    let v = integrate_layered(
        |phi| {
            let s2 = phi.sin().powi(2);
            let d = s2 + a;
            let sd = d.sqrt();
            let w = if far { -s2 * (a + sa * sd + d) / ((sa + sd) * (a * d) * (sa * sd)) } else { 1.0 / (d * sd) };
            (2.0 * phi).cos() * w
        },
        sa,
        tol,
    );
    Ok(-0.125 * v)
}

/// Small-t expansion `H = 1 - 3t/4 - 15t^2/32 - 105t^3/128 - ...`.
fn h_small_series(t: f64) -> (f64, f64) {
    let h = 1.0 - t * (0.75 + t * (15.0 / 32.0 + t * 105.0 / 128.0));
    let hp = -0.75 - t * (15.0 / 16.0 + t * 315.0 / 128.0);
    (h, hp)
}

/// Large-t expansion `H = (sqrt(pi)/4) t^{-3/2} (1 - 1/(2t) + 5/(32 t^2))`.
fn h_large_series(t: f64) -> (f64, f64) {
    let c = 0.25 * PI.sqrt();
    let u = 1.0 / t;
    let h = c * u * u.sqrt() * (1.0 - 0.5 * u + 5.0 / 32.0 * u * u);
    let hp = c * u * u * u.sqrt() * (-1.5 + 1.25 * u - 35.0 / 64.0 * u * u);
    (h, hp)
}

pub fn eval_h(t: f64) -> Result<f64> {
    eval_h_tol(t, QUAD_TOL)
}

pub fn eval_h_tol(t: f64, tol: f64) -> Result<f64> {
    check_pos("H", t)?;
    if t < H_SMALL_T {
        return Ok(h_small_series(t).0);
    }
    if t > H_LARGE_T {
        return Ok(h_large_series(t).0);
    }
    // expm1 drops the constant part of the weight, which integrates to zero.
    let v = integrate_layered(
        |phi| {
            let y = phi.sin().powi(2) / t;
            let w = if t >= 1.0 { (-y).exp_m1() } else { (-y).exp() };
            w * (2.0 * phi).cos()
        },
        t.sqrt(),
        tol,
    );
    Ok(2.0 * v / (PI * t).sqrt())
}

pub fn eval_h_prime(t: f64) -> Result<f64> {
    eval_h_prime_tol(t, QUAD_TOL)
}

pub fn eval_h_prime_tol(t: f64, tol: f64) -> Result<f64> {
    check_pos("H'", t)?;
    if t < H_SMALL_T {
        return Ok(h_small_series(t).1);
    }
    if t > H_LARGE_T {
        return Ok(h_large_series(t).1);
    }
    let v = integrate_layered(
        |phi| {
            let s2 = phi.sin().powi(2);
            let e = (-s2 / t).exp();
            let w =
                if t >= 1.0 { s2 / (t * t) * e - 0.5 / t * (-s2 / t).exp_m1() } else { e * (s2 / (t * t) - 0.5 / t) };
            (2.0 * phi).cos() * w
        },
        t.sqrt(),
        tol,
    );
    Ok(2.0 * v / (PI * t).sqrt())
}

/// Complete elliptic integrals `(K(m), E(m))` by the arithmetic-geometric mean,
/// given `m` and the complementary parameter `mc = 1 - m` separately.
fn elliptic_ke(m: f64, mc: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0_f64, mc.sqrt());
    let mut c2_sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..40 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        c2_sum += pow * c * c;
        if c.abs() <= 1e-17 * a {
            break;
        }
    }
    let k = FRAC_PI_2 / a;
    (k, k * (1.0 - c2_sum))
}

/// Closed-form `(F(s), F'(s))`; large arguments use the inverse-power series
/// `F = (pi/2) sum_{k>=1} (-1)^{k+1} d_k^2 k/(k+1) a^{-k-1/2}` with
/// `d_k = (2k-1)!!/(2k)!!`, which avoids the cancellation of the elliptic form.
pub fn f_pair(s: f64) -> (f64, f64) {
    let a = 0.25 * s;
    if a >= 4.0 {
        let inv = 1.0 / a;
        let (mut d2, mut p) = (1.0_f64, inv.sqrt() * inv);
        let (mut f, mut fp) = (0.0, 0.0);
        let mut sign = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let dk = (2.0 * kf - 1.0) / (2.0 * kf);
            d2 *= dk * dk;
            let term = sign * d2 * kf / (kf + 1.0) * p;
            f += term;
            fp += term * (-kf - 0.5) * inv;
            if term.abs() < 1e-18 * f.abs() {
                break;
            }
            p *= inv;
            sign = -sign;
        }
        (FRAC_PI_2 * f, 0.25 * FRAC_PI_2 * fp)
    } else {
        let b = 1.0 + a;
        let (k, e) = elliptic_ke(1.0 / b, a / b);
        let sb = b.sqrt();
        let f = ((1.0 + 2.0 * a) * k - 2.0 * b * e) / sb;
        let fp = (2.0 * a * k - (1.0 + 2.0 * a) * e) / (8.0 * a * sb);
        (f, fp)
    }
}

/// Scaled modified Bessel functions `(e^{-x} I_0(x), e^{-x} I_1(x))` for
/// `0 < x <= 40` from the power series (all terms positive).
fn scaled_i0_i1(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0_f64, 0.5 * x);
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..200 {
        let kf = k as f64;
        t0 *= y / (kf * kf);
        t1 *= y / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < 1e-17 * s0 && t1 < 1e-17 * s1 {
            break;
        }
    }
    let e = (-x).exp();
    (s0 * e, s1 * e)
}

/// Closed-form `(H(t), H'(t))` via `H = sqrt(pi/t) e^{-x} I_1(x)`, `x = 1/(2t)`.
/// For `x > 40` the asymptotic expansion in `2t` is summed instead.
pub fn h_pair(t: f64) -> (f64, f64) {
    let x = 0.5 / t;
    if x > 40.0 {
        // H = sum c_k t^k, c_k = (-1)^k a_k(1) 2^k with
        // a_k(1) = prod_{j<=k} (4 - (2j-1)^2) / (k! 8^k).
        let (mut c, mut tk) = (1.0_f64, 1.0_f64);
        let (mut h, mut hp) = (1.0, 0.0);
        for k in 1..40 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            c *= -(4.0 - odd * odd) / (8.0 * kf) * 2.0;
            hp += kf * c * tk;
            tk *= t;
            let term = c * tk;
            h += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        (h, hp)
    } else {
        let (i0, i1) = scaled_i0_i1(x);
        let sq = (PI / t).sqrt();
        let h = sq * i1;
        // d/dx [e^{-x} I_1] = e^{-x} (I_0 - I_1 - I_1/x), dx/dt = -2x^2
        let g1 = i0 - i1 - i1 / x;
        let hp = -0.5 * h / t + sq * g1 * (-2.0 * x * x);
        (h, hp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    F,
    FPrime,
    H,
    HPrime,
}

impl Profile {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Profile::F => eval_f(x),
            Profile::FPrime => eval_f_prime(x),
            Profile::H => eval_h(x),
            Profile::HPrime => eval_h_prime(x),
        }
    }

    /// Closed interval of exponents `a` for which `x^a |fn(x)|` is bounded on
    /// `]0, inf[`; `lo_open` marks an open left end.
    pub fn admissible(&self) -> (f64, f64, bool) {
        match self {
            Profile::F => (0.0, 1.5, true),
            Profile::FPrime => (1.0, 2.5, false),
            Profile::H => (0.0, 1.5, false),
            Profile::HPrime => (0.0, 2.5, false),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::F => "F",
            Profile::FPrime => "Fp",
            Profile::H => "H",
            Profile::HPrime => "Hp",
        }
    }

    pub fn parse(s: &str) -> Result<Profile> {
        match s {
            "F" => Ok(Profile::F),
            "Fp" | "F'" => Ok(Profile::FPrime),
            "H" => Ok(Profile::H),
            "Hp" | "H'" => Ok(Profile::HPrime),
            _ => domain(format!("unknown function '{s}' (expected F, Fp, H, Hp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    /// Slope of `log |fn|` against `log x` over the upper decade of the scan.
    pub exponent_fit: f64,
    pub fit_range: (f64, f64),
    /// `sup x^a |fn(x)|` over the scan.
    pub max_deviation: f64,
    pub argmax: f64,
    pub samples: usize,
    pub table: Vec<(f64, f64, f64)>,
}

/// Samples `x^exponent |fn(x)|` on a log grid of `samples` points over `range`.
pub fn bounded_power_scan(
    profile: Profile,
    exponent: f64,
    range: (f64, f64),
    samples: usize,
) -> Result<AsymptoticReport> {
    let (lo, hi, lo_open) = profile.admissible();
    let below = if lo_open { exponent <= lo } else { exponent < lo };
    if below || exponent > hi || exponent.is_nan() {
        let open = if lo_open { "]" } else { "[" };
        return domain(format!(
            "exponent {exponent} outside the admissible interval {open}{lo}, {hi}] for {}: x^a |{}| is unbounded there",
            profile.name(),
            profile.name()
        ));
    }
    if samples < 8 || !(range.0 > 0.0 && range.1 > range.0) {
        return domain("scan needs at least 8 samples on an ordered positive range");
    }
    let (l0, l1) = (range.0.ln(), range.1.ln());
    let mut table = Vec::with_capacity(samples);
    for k in 0..samples {
        let x = (l0 + (l1 - l0) * k as f64 / (samples - 1) as f64).exp();
        let v = profile.eval(x)?;
        table.push((x, v, x.powf(exponent) * v.abs()));
    }
    let (mut best, mut argmax) = (0.0, range.0);
    for &(x, _, w) in &table {
        if w > best {
            best = w;
            argmax = x;
        }
    }
    // Tail slope from the top tenth of the scan (at least three points).
    let n_tail = (samples / 10).max(3);
    let tail: Vec<(f64, f64)> = table[samples - n_tail..]
        .iter()
        .filter(|(_, v, _)| *v != 0.0)
        .map(|&(x, v, _)| (x.ln(), v.abs().ln()))
        .collect();
    let exponent_fit = crate::stats::ls_slope(&tail).map(|f| f.slope).unwrap_or(f64::NAN);
    Ok(AsymptoticReport {
        exponent_fit,
        fit_range: (table[samples - n_tail].0, range.1),
        max_deviation: best,
        argmax,
        samples,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_errors() {
        assert!(eval_f(0.0).is_err());
        assert!(eval_f_prime(-1.0).is_err());
        assert!(eval_h(0.0).is_err());
        assert!(eval_h_prime(f64::NAN).is_err());
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let mut s = 1e-8;
        while s < 1e7 {
            let (f, fp) = f_pair(s);
            let (fq, fpq) = (eval_f(s).unwrap(), eval_f_prime(s).unwrap());
            assert!((f - fq).abs() <= 1e-11 * fq.abs().max(1e-300) + 1e-14, "F({s}): {f} vs {fq}");
            assert!((fp - fpq).abs() <= 1e-11 * fpq.abs(), "F'({s}): {fp} vs {fpq}");
            s *= 1.37;
        }
        let mut t = 2e-6;
        while t < 5e7 {
            let (h, hp) = h_pair(t);
            let (hq, hpq) = (eval_h(t).unwrap(), eval_h_prime(t).unwrap());
            assert!((h - hq).abs() <= 1e-11 * hq, "H({t}): {h} vs {hq}");
            assert!((hp - hpq).abs() <= 1e-10 * hpq.abs(), "H'({t}): {hp} vs {hpq}");
            t *= 1.41;
        }
    }

    #[test]
    fn series_switch_is_continuous() {
        for &t in &[H_SMALL_T, H_LARGE_T] {
            let below = eval_h(t * (1.0 - 1e-12)).unwrap();
            let above = eval_h(t * (1.0 + 1e-12)).unwrap();
            assert!((below - above).abs() <= 1e-9 * below, "{t}: {below} {above}");
            let below = eval_h_prime(t * (1.0 - 1e-12)).unwrap();
            let above = eval_h_prime(t * (1.0 + 1e-12)).unwrap();
            assert!((below - above).abs() <= 1e-8 * below.abs());
        }
    }

    #[test]
    fn f_large_argument_leading_term() {
        // s^{3/2} F(s) -> pi/2
        let s: f64 = 1e6;
        let v = s.powf(1.5) * eval_f(s).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn scan_rejects_bad_exponents() {
        assert!(bounded_power_scan(Profile::F, 0.0, (1e-3, 1e3), 16).is_err());
        assert!(bounded_power_scan(Profile::F, 1.6, (1e-3, 1e3), 16).is_err());
        assert!(bounded_power_scan(Profile::FPrime, 0.9, (1e-3, 1e3), 16).is_err());
        assert!(bounded_power_scan(Profile::H, -0.1, (1e-3, 1e3), 16).is_err());
        assert!(bounded_power_scan(Profile::HPrime, 2.6, (1e-3, 1e3), 16).is_err());
        assert!(bounded_power_scan(Profile::H, 1.0, (1e-3, 1e3), 4).is_err());
    }

    /// Composite Simpson rule, kept separate from the production quadrature.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for k in 1..n {
            acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    // Frozen from the Simpson oracle below (20000 panels, smooth integrands).
    const F_AT_1: f64 = 0.393_175_148_372_004_7;
    const FP_AT_1: f64 = -0.285_828_619_484_083_2;
    const H_AT_1: f64 = 0.277_248_654_966_759_6;

    #[test]
    fn oracle_pinned_values() {
        let n = 20_000;
        let f1 = simpson(|p| (2.0 * p).cos() / (p.sin().powi(2) + 0.25).sqrt(), 0.0, FRAC_PI_2, n);
        let fp1 = -0.125 * simpson(|p| (2.0 * p).cos() / (p.sin().powi(2) + 0.25).powf(1.5), 0.0, FRAC_PI_2, n);
        let h1 = simpson(|p| (-p.sin().powi(2)).exp() * (2.0 * p).cos(), -FRAC_PI_2, FRAC_PI_2, n) / PI.sqrt();
        assert!((f1 - F_AT_1).abs() < 1e-14);
        assert!((fp1 - FP_AT_1).abs() < 1e-14);
        assert!((h1 - H_AT_1).abs() < 1e-14);

        assert!((eval_f(1.0).unwrap() - F_AT_1).abs() < 1e-12);
        assert!((eval_f_prime(1.0).unwrap() - FP_AT_1).abs() < 1e-12);
        assert!((eval_h(1.0).unwrap() - H_AT_1).abs() < 1e-12);
        assert!((f_pair(1.0).0 - F_AT_1).abs() < 1e-13);
        assert!((h_pair(1.0).0 - H_AT_1).abs() < 1e-13);
    }
}
