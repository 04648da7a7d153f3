//! The linear solution operator `S(t)` of `d_t w = (d_r^2 + d_z^2 + d_r/r - 1/r^2) w`
//! with `w = 0` on the axis, applied by kernel quadrature:
//!
//! ```text
//!   (S(t) g)(r, z) = int phi(r, rb) G_t(r - rb) G_t(z - zb) g(rb, zb) drb dzb
//!   phi(r, rb)     = (rb/r)^{1/2} H(t/(r rb)),   G_t(x) = (4 pi t)^{-1/2} e^{-x^2/4t}
//! ```
//!
//! The kernel factors into an `r`-coupled matrix and a Toeplitz `z` matrix, so a
//! field is propagated as `R g Wz^T`. The one-dimensional weights are the heat
//! kernel convolved with the sinc interpolant of the source grid,
//!
//! ```text
//!   W0(x) = int_0^1 exp(-a u^2) cos(b u) du,   a = t pi^2/h^2,  b = pi x/h
//! ```
//!
//! which equals `h G_t(x)` up to `e^{-a}` once `a` is large, reduces to the
//! identity as `t -> 0`, and composes exactly in `z`. `W1 = dW0/dx` carries the
//! kernel derivatives of the divergence form.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{domain, Error, Result};
use crate::grid::{lp_norm_planar, weighted_field, HalfPlaneGrid, Quantity, ScalarField, VelocityField};
use crate::parallel::map_range;
use crate::quadrature::gauss_legendre;
use crate::special::h_pair;
use crate::stats::ls_slope;

/// Above this value of `t pi^2 / h^2` the band-limited weight is replaced by
/// the point rule `h G_t(x)`; the neglected tail is below `e^{-36}`.
const POINT_RULE_A: f64 = 36.0;

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(10))
}

/// One-dimensional weights `(W0(x), W1(x))` for time `t` and source spacing `h`.
pub fn band_weights(t: f64, h: f64, x: f64) -> (f64, f64) {
    let a = t * PI * PI / (h * h);
    if a > POINT_RULE_A {
        let g = (-(x * x) / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
        return (h * g, -h * x / (2.0 * t) * g);
    }
    let b = PI * x / h;
    let panels = ((0.5 * b.abs()).ceil() + a.sqrt().ceil() + 2.0) as usize;
    let (xs, ws) = gl10();
    let width = 1.0 / panels as f64;
    let (mut w0, mut w1) = (0.0, 0.0);
    for k in 0..panels {
        let c = (k as f64 + 0.5) * width;
        for (xi, wi) in xs.iter().zip(ws) {
            let u = c + 0.5 * width * xi;
            let e = (-a * u * u).exp() * wi;
            let (s, co) = (b * u).sin_cos();
            w0 += e * co;
            w1 += e * u * s;
        }
    }
    (0.5 * width * w0, -(PI / h) * 0.5 * width * w1)
}

/// `(phi, phi_A)` with `phi_A = -d phi / d rb`.
fn radial_factors(t: f64, r: f64, rb: f64) -> (f64, f64) {
    let (h, hp) = h_pair(t / (r * rb));
    let s = (rb / r).sqrt();
    (s * h, s * (t / (r * rb * rb) * hp - h / (2.0 * rb)))
}

/// Continuous kernel value `phi(r, rb) G_t(r - rb) G_t(z - zb)`.
pub fn kernel_weight(t: f64, r: f64, z: f64, rb: f64, zb: f64) -> f64 {
    let (h, _) = h_pair(t / (r * rb));
    (rb / r).sqrt() * h * (-((r - rb).powi(2) + (z - zb).powi(2)) / (4.0 * t)).exp() / (4.0 * PI * t)
}

/// Weight matrix `W(x_i - y_k)` (target-major), Toeplitz-filled when the two
/// node sets are the same uniform lattice.
fn weight_matrix(t: f64, h: f64, xs: &[f64], ys: &[f64], same: bool) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (xs.len(), ys.len());
    let mut w0 = vec![0.0; n * m];
    let mut w1 = vec![0.0; n * m];
    if same {
        let table: Vec<(f64, f64)> =
            (0..2 * n - 1).map(|k| band_weights(t, h, (k as f64 - (n as f64 - 1.0)) * h)).collect();
        for i in 0..n {
            for k in 0..m {
                let (a, b) = table[i + n - 1 - k];
                w0[i * m + k] = a;
                w1[i * m + k] = b;
            }
        }
    } else {
        for i in 0..n {
            for k in 0..m {
                let (a, b) = band_weights(t, h, xs[i] - ys[k]);
                w0[i * m + k] = a;
                w1[i * m + k] = b;
            }
        }
    }
    (w0, w1)
}

/// Precomputed factors of `S(t)` between a source and a target grid.
#[derive(Debug)]
pub struct Kernel {
    pub t: f64,
    /// `phi Wr0`, target rows by source columns.
    pub r_plain: Vec<f64>,
    /// `phi_A Wr0 + phi Wr1`, acting on `f^r` in the divergence form.
    pub r_div: Vec<f64>,
    pub wz0: Vec<f64>,
    pub wz1: Vec<f64>,
}

/// `S(t)` and its divergence form from fields on `source` to nodes of `target`,
/// with kernels cached per time.
#[derive(Debug)]
pub struct Semigroup {
    pub source: HalfPlaneGrid,
    pub target: HalfPlaneGrid,
    cache: Mutex<HashMap<u64, Arc<Kernel>>>,
}

impl Clone for Semigroup {
    fn clone(&self) -> Self {
        Semigroup::between(&self.source, &self.target)
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("S(t) needs t > 0 (got {t}); t = 0 is the identity"))
    }
}

fn check_grid(f: &ScalarField, g: &HalfPlaneGrid) -> Result<()> {
    if &f.grid == g {
        Ok(())
    } else {
        Err(Error::GridMismatch("field is not sampled on the operator's source grid".into()))
    }
}

impl Semigroup {
    pub fn new(grid: &HalfPlaneGrid) -> Semigroup {
        Semigroup::between(grid, grid)
    }

    pub fn between(source: &HalfPlaneGrid, target: &HalfPlaneGrid) -> Semigroup {
        Semigroup { source: source.clone(), target: target.clone(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn cached_kernels(&self) -> usize {
        self.cache.lock().map_or(0, |c| c.len())
    }

    pub fn clear_cache(&self) {
        if let Ok(mut c) = self.cache.lock() {
            c.clear();
        }
    }

    pub fn kernel(&self, t: f64) -> Result<Arc<Kernel>> {
        check_t(t)?;
        if let Some(k) = self.cache.lock().ok().and_then(|c| c.get(&t.to_bits()).cloned()) {
            return Ok(k);
        }
        let k = Arc::new(self.build(t));
        if let Ok(mut c) = self.cache.lock() {
            c.insert(t.to_bits(), k.clone());
        }
        Ok(k)
    }

    fn build(&self, t: f64) -> Kernel {
        let (s, g) = (&self.source, &self.target);
        let same_r = s.dr == g.dr && s.nr == g.nr;
        let same_z = s.dz == g.dz && s.nz == g.nz && s.z_max == g.z_max;
        let (wr0, wr1) = weight_matrix(t, s.dr, &g.r_nodes, &s.r_nodes, same_r);
        let (wz0, wz1) = weight_matrix(t, s.dz, &g.z_nodes, &s.z_nodes, same_z);
        let ns = s.nr;
        let rows = map_range(g.nr, |i| {
            let r = g.r_nodes[i];
            let mut plain = vec![0.0; ns];
            let mut div = vec![0.0; ns];
            for k in 0..ns {
                let (a0, a1) = (wr0[i * ns + k], wr1[i * ns + k]);
                if a0 == 0.0 && a1 == 0.0 {
                    continue;
                }
                let (phi, phi_a) = radial_factors(t, r, s.r_nodes[k]);
                plain[k] = phi * a0;
                div[k] = phi_a * a0 + phi * a1;
            }
            (plain, div)
        });
        let mut r_plain = Vec::with_capacity(g.nr * ns);
        let mut r_div = Vec::with_capacity(g.nr * ns);
        for (p, d) in rows {
            r_plain.extend(p);
            r_div.extend(d);
        }
        Kernel { t, r_plain, r_div, wz0, wz1 }
    }

    /// `out += A (F Wz^T)` with `A` target-by-source in `r`.
    fn propagate(&self, a: &[f64], wz: &[f64], f: &[f64], out: &mut [f64]) {
        let (s, g) = (&self.source, &self.target);
        let (nzs, nzt, ns) = (s.nz, g.nz, s.nr);
        let live: Vec<usize> = (0..ns).filter(|&k| f[k * nzs..(k + 1) * nzs].iter().any(|&v| v != 0.0)).collect();
        if live.is_empty() {
            return;
        }
        let rows = map_range(g.nr, |i| {
            let mut m = vec![0.0; nzs];
            for &k in &live {
                let c = a[i * ns + k];
                if c != 0.0 {
                    for (mj, fj) in m.iter_mut().zip(&f[k * nzs..(k + 1) * nzs]) {
                        *mj += c * fj;
                    }
                }
            }
            (0..nzt)
                .map(|j| m.iter().zip(&wz[j * nzs..(j + 1) * nzs]).map(|(x, w)| x * w).sum::<f64>())
                .collect::<Vec<f64>>()
        });
        for (i, row) in rows.into_iter().enumerate() {
            for (o, v) in out[i * nzt..(i + 1) * nzt].iter_mut().zip(row) {
                *o += v;
            }
        }
    }

    pub fn apply(&self, t: f64, g: &ScalarField) -> Result<ScalarField> {
        check_grid(g, &self.source)?;
        let k = self.kernel(t)?;
        let mut out = vec![0.0; self.target.len()];
        self.propagate(&k.r_plain, &k.wz0, &g.values, &mut out);
        Ok(ScalarField { grid: self.target.clone(), values: out, quantity: g.quantity })
    }

    /// `S(t) div_* f` through the integrated-by-parts kernels `A_r`, `A_z`.
    pub fn apply_div(&self, t: f64, fr: &ScalarField, fz: &ScalarField) -> Result<ScalarField> {
        check_grid(fr, &self.source)?;
        check_grid(fz, &self.source)?;
        let k = self.kernel(t)?;
        let mut out = vec![0.0; self.target.len()];
        self.propagate(&k.r_div, &k.wz0, &fr.values, &mut out);
        self.propagate(&k.r_plain, &k.wz1, &fz.values, &mut out);
        Ok(ScalarField { grid: self.target.clone(), values: out, quantity: Quantity::Generic })
    }

    /// `r^alpha S(t) (r^{beta - 1} g)` on the admissible cone
    /// `alpha + beta <= 1`, `alpha >= -1`, `beta >= -1`.
    pub fn apply_weighted(&self, t: f64, alpha: f64, beta: f64, g: &ScalarField) -> Result<ScalarField> {
        check_cone(alpha, beta)?;
        if alpha == 0.0 && beta == 1.0 {
            return self.apply(t, g);
        }
        let inner = self.apply(t, &weighted_field(g, beta - 1.0))?;
        Ok(weighted_field(&inner, alpha))
    }

    /// Reference path: the same discrete kernel summed pair by pair without
    /// the separable factorisation.
    pub fn apply_dense(&self, t: f64, g: &ScalarField) -> Result<ScalarField> {
        check_t(t)?;
        check_grid(g, &self.source)?;
        let (s, tg) = (&self.source, &self.target);
        let vals = map_range(tg.len(), |n| {
            let (i, j) = (n / tg.nz, n % tg.nz);
            let (r, z) = (tg.r_nodes[i], tg.z_nodes[j]);
            let mut acc = 0.0;
            for (k, &rb) in s.r_nodes.iter().enumerate() {
                let (phi, _) = radial_factors(t, r, rb);
                let wr = band_weights(t, s.dr, r - rb).0;
                for (l, &zb) in s.z_nodes.iter().enumerate() {
                    let v = g.values[k * s.nz + l];
                    if v != 0.0 {
                        acc += phi * wr * band_weights(t, s.dz, z - zb).0 * v;
                    }
                }
            }
            acc
        });
        Ok(ScalarField { grid: tg.clone(), values: vals, quantity: g.quantity })
    }
}

fn check_cone(alpha: f64, beta: f64) -> Result<()> {
    if alpha + beta <= 1.0 + 1e-12 && alpha >= -1.0 && beta >= -1.0 {
        Ok(())
    } else {
        domain(format!(
            "(alpha, beta) = ({alpha}, {beta}) outside the admissible cone alpha + beta <= 1, alpha >= -1, beta >= -1"
        ))
    }
}

pub fn apply_s(t: f64, g: &ScalarField) -> Result<ScalarField> {
    Semigroup::new(&g.grid).apply(t, g)
}

pub fn apply_s_div(t: f64, f: &VelocityField) -> Result<ScalarField> {
    Semigroup::new(&f.grid).apply_div(t, &f.ur_field(), &f.uz_field())
}

pub fn apply_s_weighted(t: f64, alpha: f64, beta: f64, g: &ScalarField) -> Result<ScalarField> {
    Semigroup::new(&g.grid).apply_weighted(t, alpha, beta, g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayKind {
    Plain,
    Div,
    Weighted { alpha: f64, beta: f64 },
}

impl DecayKind {
    pub fn name(&self) -> String {
        match self {
            DecayKind::Plain => "plain".into(),
            DecayKind::Div => "div".into(),
            DecayKind::Weighted { alpha, beta } => format!("weighted({alpha},{beta})"),
        }
    }

    /// Decay exponent predicted for data in `L^p` measured in `L^q`.
    pub fn target_slope(&self, p: f64, q: f64) -> f64 {
        let d = 1.0 / p - 1.0 / q;
        match self {
            DecayKind::Plain => -d,
            DecayKind::Div => -(0.5 + d),
            DecayKind::Weighted { alpha, beta } => -(0.5 - 0.5 * (alpha + beta) + d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub kind: DecayKind,
    pub p: f64,
    pub q: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub slope_target: f64,
    pub residual: f64,
    /// Times whose norm fell below 1e-14 and were left out of the fit.
    pub dropped: Vec<f64>,
}

/// `[lo, 2 lo, 4 lo, ...]` up to `hi`.
pub fn dyadic_times(lo: f64, hi: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut t = lo;
    while t <= hi * (1.0 + 1e-12) {
        v.push(t);
        t *= 2.0;
    }
    v
}

/// Least-squares slope of `log ||K(t) g||_{L^q(Omega)}` against `log t`.
/// The divergence form is applied to the pair `(g, g)`.
pub fn measure_operator_decay(
    op: &Semigroup,
    kind: DecayKind,
    p: f64,
    q: f64,
    g: &ScalarField,
    times: &[f64],
) -> Result<DecayFit> {
    if times.len() < 2 || times.windows(2).any(|w| w[0] >= w[1]) {
        return domain("decay fit needs at least two strictly increasing times");
    }
    let mut kept = (Vec::new(), Vec::new());
    let mut dropped = Vec::new();
    for &t in times {
        let out = match kind {
            DecayKind::Plain => op.apply(t, g)?,
            DecayKind::Div => op.apply_div(t, g, g)?,
            DecayKind::Weighted { alpha, beta } => op.apply_weighted(t, alpha, beta, g)?,
        };
        let n = lp_norm_planar(&out, q)?;
        if n < 1e-14 {
            dropped.push(t);
        } else {
            kept.0.push(t);
            kept.1.push(n);
        }
    }
    let pts: Vec<(f64, f64)> = kept.0.iter().zip(&kept.1).map(|(t, n)| (t.ln(), n.ln())).collect();
    let fit = ls_slope(&pts)
        .ok_or_else(|| Error::Domain("fewer than two usable points in the decay fit (norm underflow)".into()))?;
    op.clear_cache();
    Ok(DecayFit {
        kind,
        p,
        q,
        times: kept.0,
        norms: kept.1,
        slope: fit.slope,
        slope_target: kind.target_slope(p, q),
        residual: fit.residual,
        dropped,
    })
}

const PROBE_CUT: f64 = 40.0;

/// Probe data for the decay fits: source field and operator onto a coarse
/// target window around it.
///
/// The data sit far from the axis (`r0 = 100`) so that `t/r^2` stays small over
/// the fit window. For `p = 1` a narrow Gaussian is used. For `1 < p < q` the
/// profile is `rho^{-2/p}` cut at `rho = 40` and cell-averaged at the core,
/// which has the scaling that makes the `L^p -> L^q` rate sharp. For `p = q`
/// a Gaussian of width 30, wide against `sqrt(t)`, probes boundedness.
pub fn decay_probe(p: f64, q: f64) -> Result<(Semigroup, ScalarField)> {
    if !(p >= 1.0 && p.is_finite() && q >= p) {
        return domain(format!("probe needs 1 <= p <= q, p finite (got p = {p}, q = {q})"));
    }
    let target = crate::grid::build_grid(128, 128, 148.0, 48.0)?;
    let (r0, z0) = (target.r_nodes[86], target.z_nodes[64]);
    let (h, reach) = if p > 1.0 && p == q { (0.5, 96.0) } else { (0.25, 44.0) };
    let nr = ((r0 + reach) / h).round() as usize;
    let nz = (2.0 * reach / h).round() as usize;
    let source = crate::grid::build_grid(nr, nz, nr as f64 * h, 0.5 * nz as f64 * h)?;
    let gauss = |w: f64| {
        ScalarField::from_fn(&source, Quantity::Generic, |r, z| {
            (-((r - r0).powi(2) + (z - z0).powi(2)) / (w * w)).exp()
        })
    };
    let g = if p == 1.0 {
        gauss(0.5)
    } else if p == q {
        gauss(30.0)
    } else {
        // cell averages over 8 x 8 sub-points, so the integrable core needs no softening
        let sub = 8;
        let hs = h / sub as f64;
        ScalarField::from_fn(&source, Quantity::Generic, |r, z| {
            if (r - r0).powi(2) + (z - z0).powi(2) > (PROBE_CUT + h).powi(2) {
                return 0.0;
            }
            let mut acc = 0.0;
            for a in 0..sub {
                for b in 0..sub {
                    let dr = r - 0.5 * h + (a as f64 + 0.5) * hs - r0;
                    let dz = z - 0.5 * h + (b as f64 + 0.5) * hs - z0;
                    let rho2 = dr * dr + dz * dz;
                    if rho2 <= PROBE_CUT * PROBE_CUT {
                        acc += rho2.max(1e-6 * hs * hs).powf(-1.0 / p);
                    }
                }
            }
            acc / (sub * sub) as f64
        })
    };
    Ok((Semigroup::between(&source, &target), g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn band_weights_limits() {
        let h = 0.1;
        // t -> 0: sampled sinc, i.e. the identity on the lattice
        for m in -3..=3 {
            let (w, _) = band_weights(1e-12, h, m as f64 * h);
            let want = if m == 0 { 1.0 } else { 0.0 };
            assert!((w - want).abs() < 1e-9, "m = {m}: {w}");
        }
        // large t: point rule; just below the switch the two agree closely
        let t = 35.9 * h * h / (PI * PI);
        for x in [0.0, 0.05, 0.13, 0.4] {
            let (w0, w1) = band_weights(t, h, x);
            let g = (-(x * x) / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
            assert!((w0 - h * g).abs() < 1e-14);
            assert!((w1 + h * x / (2.0 * t) * g).abs() < 1e-12);
        }
    }

    #[test]
    fn band_weight_derivative() {
        let (t, h) = (0.003, 0.1);
        for x in [0.02, 0.17, 0.5] {
            let d = 1e-6;
            let fd = (band_weights(t, h, x + d).0 - band_weights(t, h, x - d).0) / (2.0 * d);
            assert!((fd - band_weights(t, h, x).1).abs() < 1e-7);
        }
    }

    #[test]
    fn lattice_sums_conserve() {
        // sum_m W0(x - m h) = 1 for the band-limited weight; the truncated
        // sum keeps a sinc tail of order e^{-a}/(pi M)
        let h = 0.2;
        for t in [1e-4, 1e-3, 0.01] {
            let s: f64 = (-200..=200).map(|m| band_weights(t, h, 0.07 - m as f64 * h).0).sum();
            assert!((s - 1.0).abs() < 1e-5, "t = {t}: {s}");
        }
    }

    #[test]
    fn zero_and_errors() {
        let g = build_grid(16, 16, 4.0, 2.0).unwrap();
        let z = ScalarField::zeros(&g, Quantity::Generic);
        assert!(apply_s(0.3, &z).unwrap().is_zero());
        assert!(apply_s(0.0, &z).is_err());
        assert!(apply_s_weighted(0.3, 0.5, 0.6, &z).is_err());
        assert!(apply_s_weighted(0.3, -1.1, 0.0, &z).is_err());
    }

    #[test]
    fn weighted_reduces_to_plain() {
        let g = build_grid(16, 16, 4.0, 2.0).unwrap();
        let f = ScalarField::from_fn(&g, Quantity::Generic, |r, z| (-((r - 2.0).powi(2) + z * z) * 2.0).exp());
        let op = Semigroup::new(&g);
        let a = op.apply(0.1, &f).unwrap();
        let b = op.apply_weighted(0.1, 0.0, 1.0, &f).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(op.cached_kernels(), 1);
    }

    #[test]
    fn dyadic() {
        assert_eq!(dyadic_times(1.0, 64.0), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }

    #[test]
    fn targets() {
        assert_eq!(DecayKind::Plain.target_slope(1.0, f64::INFINITY), -1.0);
        assert_eq!(DecayKind::Div.target_slope(1.0, 1.0), -0.5);
        let w = DecayKind::Weighted { alpha: -0.3, beta: 1.3 };
        assert!((w.target_slope(20.0 / 13.0, 2.0) + 0.15).abs() < 1e-12);
    }
}
