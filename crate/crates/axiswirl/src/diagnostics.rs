//! Monitored quantities along trajectories and the inequalities they should
//! satisfy. Norms written without `(Omega)` are on `R^3` for axisymmetric
//! fields, i.e. volumetric `r dr dz` without the `2 pi`.

use crate::error::{domain, Error, Result};
use crate::grid::{lp_norm_planar, lp_norm_volumetric, weighted_field, HalfPlaneGrid, Quantity, ScalarField};
use crate::mild::{SolverState, Trajectory};
use crate::parallel::map_range;
use crate::Ratio;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSet {
    pub p: f64,
    pub eps: f64,
    pub q: f64,
    pub q_alt: f64,
    pub alpha_p: f64,
}

pub const EPS_LOW: f64 = 3251.0 / 9280.0;
pub const EPS_HIGH: f64 = 4.0 / 11.0;

pub fn exponents_of_p(p: f64) -> Result<ExponentSet> {
    if !(p > 1.0 && p <= 21.0 / 20.0) {
        return domain(format!("p must lie in ]1, 21/20] (got {p})"));
    }
    let eps = (-9.0 * p * p + 21.0 * p - 4.0) / (24.0 * p - 2.0);
    let q = 3.0 * p / (2.0 - eps);
    let q_alt = 2.0 * (12.0 * p - 1.0) / (3.0 * (p + 3.0));
    if (q - q_alt).abs() > 1e-12 * q {
        return Err(Error::Domain(format!("closed forms for q disagree at p = {p}: {q} vs {q_alt}")));
    }
    let alpha_p = 10.0 * (12.0 * p - 1.0) / (9.0 * (p - 1.0) * (p + 2.0) * (p + 3.0));
    Ok(ExponentSet { p, eps, q, q_alt, alpha_p })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub eta: ScalarField,
    pub v_eps: ScalarField,
    pub u: ScalarField,
    pub w: ScalarField,
}

/// `eta = omega/r`, `V = u/r^{1-eps}`, `U = u/r`, `W = r^{-7/11} u`.
pub fn derived_fields(state: &SolverState, eps: f64) -> Result<DerivedFields> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("eps must lie in ]0, 1[ (got {eps})"));
    }
    let tag = |f: ScalarField, q| f.with_quantity(q);
    Ok(DerivedFields {
        eta: tag(weighted_field(&state.omega, -1.0), Quantity::Eta),
        v_eps: tag(weighted_field(&state.swirl, eps - 1.0), Quantity::VEps),
        u: tag(weighted_field(&state.swirl, -1.0), Quantity::U),
        w: tag(weighted_field(&state.swirl, -7.0 / 11.0), Quantity::W),
    })
}

/// `t^e` with `e` snapped to zero when it is zero up to rounding, so the
/// exponent-free monitors equal the raw norms bit for bit.
fn time_weight(t: f64, e: f64) -> f64 {
    if e.abs() < 1e-12 {
        1.0
    } else {
        t.powf(e)
    }
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

pub fn l_monitor(t: f64, omega: &ScalarField, p: f64) -> Result<f64> {
    Ok(time_weight(t, 1.0 - inv(p)) * lp_norm_planar(omega, p)?)
}

pub fn m_monitor(t: f64, swirl: &ScalarField, q: f64) -> Result<f64> {
    Ok(time_weight(t, 0.5 - inv(q)) * lp_norm_planar(swirl, q)?)
}

pub fn n_monitor(t: f64, swirl: &ScalarField, kappa: f64) -> Result<f64> {
    Ok(time_weight(t, 0.65 - inv(kappa)) * lp_norm_planar(&weighted_field(swirl, -0.3), kappa)?)
}

/// Column label for an exponent: `1`, `4_3`, `20_13`, `inf`, or a decimal.
pub fn exponent_label(x: f64) -> String {
    if x.is_infinite() {
        return "inf".into();
    }
    for b in 1..=40u32 {
        let a = x * b as f64;
        if (a - a.round()).abs() < 1e-9 {
            let a = a.round() as i64;
            return if b == 1 { format!("{a}") } else { format!("{a}_{b}") };
        }
    }
    format!("{x}").replace('.', "p")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayMonitor {
    pub times: Vec<f64>,
    pub p_list: Vec<f64>,
    pub q_list: Vec<f64>,
    pub kappa_list: Vec<f64>,
    /// `l[k][i]` is `L_{p_i}` at `times[k]`; likewise `m`, `n`.
    pub l: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
    /// Running suprema over `[0, times[k]]`.
    pub l_sup: Vec<Vec<f64>>,
    pub m_sup: Vec<Vec<f64>>,
    pub n_sup: Vec<Vec<f64>>,
}

fn check_range(name: &str, list: &[f64], lo: f64) -> Result<()> {
    match list.iter().find(|&&x| x.is_nan() || x < lo) {
        Some(x) => domain(format!("{name} exponent {x} outside [{lo}, inf]")),
        None => Ok(()),
    }
}

fn running_sup(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in rows {
        let next = match out.last() {
            Some(prev) => row.iter().zip(prev).map(|(a, b)| a.max(*b)).collect(),
            None => row.clone(),
        };
        out.push(next);
    }
    out
}

pub fn decay_monitors(traj: &Trajectory, p_list: &[f64], q_list: &[f64], kappa_list: &[f64]) -> Result<DecayMonitor> {
    check_range("p", p_list, 1.0)?;
    check_range("q", q_list, 2.0)?;
    check_range("kappa", kappa_list, 20.0 / 13.0)?;
    let rows = map_range(traj.states.len(), |k| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let s = &traj.states[k];
        Ok((
            p_list.iter().map(|&p| l_monitor(s.t, &s.omega, p)).collect::<Result<_>>()?,
            q_list.iter().map(|&q| m_monitor(s.t, &s.swirl, q)).collect::<Result<_>>()?,
            kappa_list.iter().map(|&k| n_monitor(s.t, &s.swirl, k)).collect::<Result<_>>()?,
        ))
    });
    let (mut l, mut m, mut n) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        let (a, b, c) = r?;
        l.push(a);
        m.push(b);
        n.push(c);
    }
    Ok(DecayMonitor {
        times: traj.time_grid.clone(),
        p_list: p_list.to_vec(),
        q_list: q_list.to_vec(),
        kappa_list: kappa_list.to_vec(),
        l_sup: running_sup(&l),
        m_sup: running_sup(&m),
        n_sup: running_sup(&n),
        l,
        m,
        n,
    })
}

impl DecayMonitor {
    /// Header `t,L_1,L_4_3,...,M_2,...,N_20_13,...` and one row per time.
    pub fn csv(&self) -> String {
        let mut s = String::from("t");
        for (tag, list) in [("L", &self.p_list), ("M", &self.q_list), ("N", &self.kappa_list)] {
            for x in list {
                s.push_str(&format!(",{tag}_{}", exponent_label(*x)));
            }
        }
        s.push('\n');
        for k in 0..self.times.len() {
            s.push_str(&format!("{:.12e}", self.times[k]));
            for v in self.l[k].iter().chain(&self.m[k]).chain(&self.n[k]) {
                s.push_str(&format!(",{v:.12e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Sampled `sup` over an exponent interval of a monitor's supremum in time,
/// `X_{a,b}(T)`. `samples` points are spread uniformly in `1/x`.
pub fn range_sup(traj: &Trajectory, which: char, a: f64, b: f64, samples: usize) -> Result<f64> {
    let n = samples.max(2);
    let xs: Vec<f64> =
        (0..n).map(|k| 1.0 / ((1.0 - k as f64 / (n - 1) as f64) / a + (k as f64 / (n - 1) as f64) * inv(b))).collect();
    let mut sup = 0.0_f64;
    for s in &traj.states {
        for &x in &xs {
            let v = match which {
                'L' => l_monitor(s.t, &s.omega, x)?,
                'M' => m_monitor(s.t, &s.swirl, x)?,
                'N' => n_monitor(s.t, &s.swirl, x)?,
                _ => return domain(format!("unknown monitor '{which}'")),
            };
            sup = sup.max(v);
        }
    }
    Ok(sup)
}

/// `X^s = X + X^s`.
fn with_power(x: f64, s: f64) -> f64 {
    x + x.powf(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwirlMaxReport {
    pub p_list: Vec<f64>,
    pub times: Vec<f64>,
    /// `ratios[i][k]`: `||r u(t_k)||_{p_i} / ||r u_0||_{p_i}`.
    pub ratios: Vec<Vec<Ratio>>,
    pub max_ratio: Vec<Ratio>,
    /// Largest step-to-step increase of the ratio.
    pub max_increase: Vec<f64>,
    pub slack: f64,
    pub passed: bool,
}

pub fn swirl_maximum_check(traj: &Trajectory, p_list: &[f64], slack: f64) -> Result<SwirlMaxReport> {
    check_range("maximum-principle p", p_list, 2.0)?;
    let ru: Vec<ScalarField> = traj.states.iter().map(|s| weighted_field(&s.swirl, 1.0)).collect();
    let mut ratios = Vec::new();
    let mut max_ratio = Vec::new();
    let mut max_increase = Vec::new();
    let mut passed = true;
    for &p in p_list {
        let base = lp_norm_volumetric(&ru[0], p)?;
        let row: Vec<Ratio> =
            ru.iter().map(|f| Ok(Ratio::of(lp_norm_volumetric(f, p)?, base))).collect::<Result<_>>()?;
        let worst = row.iter().fold(Ratio::ZeroOverZero, |acc, r| match (acc, r) {
            (Ratio::Value(a), Ratio::Value(b)) => Ratio::Value(a.max(*b)),
            (Ratio::ZeroOverZero, x) => *x,
            (x, Ratio::ZeroOverZero) => x,
        });
        let inc = row.windows(2).filter_map(|w| Some(w[1].value()? - w[0].value()?)).fold(0.0_f64, f64::max);
        passed &= worst.within(1.0 + slack) && inc <= slack;
        ratios.push(row);
        max_ratio.push(worst);
        max_increase.push(inc);
    }
    Ok(SwirlMaxReport {
        p_list: p_list.to_vec(),
        times: traj.time_grid.clone(),
        ratios,
        max_ratio,
        max_increase,
        slack,
        passed,
    })
}

/// `int |grad f|^2 r dr dz` with central differences, even reflection at the
/// axis and zero beyond the truncation.
fn dirichlet_energy(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let (nr, nz) = (g.nr, g.nz);
    let at = |i: isize, j: isize| -> f64 {
        if j < 0 || j >= nz as isize || i >= nr as isize {
            0.0
        } else if i < 0 {
            f.values[(-1 - i) as usize * nz + j as usize]
        } else {
            f.values[i as usize * nz + j as usize]
        }
    };
    let mut acc = 0.0;
    for i in 0..nr as isize {
        let r = g.r_nodes[i as usize];
        for j in 0..nz as isize {
            let dr = (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.dr);
            let dz = (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.dz);
            acc += (dr * dr + dz * dz) * r;
        }
    }
    acc * g.cell_area()
}

fn abs_pow(f: &ScalarField, e: f64) -> ScalarField {
    f.map(|v| v.abs().powf(e))
}

/// `int f r dr dz`.
fn volume_integral(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let mut acc = 0.0;
    for (i, &r) in g.r_nodes.iter().enumerate() {
        acc += r * f.values[i * g.nz..(i + 1) * g.nz].iter().sum::<f64>();
    }
    acc * g.cell_area()
}

fn pow_norm(f: &ScalarField, p: f64) -> Result<f64> {
    Ok(lp_norm_volumetric(f, p)?.powf(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub exps: ExponentSet,
    pub m0: f64,
    pub times: Vec<f64>,
    /// `||V||_q^q + ||eta||_p^p`.
    pub energy: Vec<f64>,
    pub eta_pow: Vec<f64>,
    /// `||grad |eta|^{p/2}||^2`, `||grad |V|^{q/2}||^2`, `|| |V|^{q/2}/r ||^2` per time.
    pub diss_eta: Vec<f64>,
    pub diss_v: Vec<f64>,
    pub diss_v_r: Vec<f64>,
    pub lhs: Vec<f64>,
    /// `max_t lhs / (2 M0)`.
    pub max_ratio: Ratio,
    /// Trapezoid error estimate of the time integrals, relative to `2 M0`.
    pub quadrature_error: f64,
    pub slack: f64,
    pub passed: bool,
}

pub fn energy_check(traj: &Trajectory, p: f64, slack: f64) -> Result<EnergyReport> {
    let ex = exponents_of_p(p)?;
    let n = traj.states.len();
    if n < 3 {
        return domain(format!("energy check needs at least 3 stored times (got {n})"));
    }
    let per = map_range(n, |k| -> Result<[f64; 5]> {
        let d = derived_fields(&traj.states[k], ex.eps)?;
        let eta_half = abs_pow(&d.eta, 0.5 * p);
        let v_half = abs_pow(&d.v_eps, 0.5 * ex.q);
        let v_r = weighted_field(&abs_pow(&d.v_eps, ex.q), -2.0);
        Ok([
            pow_norm(&d.v_eps, ex.q)?,
            pow_norm(&d.eta, p)?,
            dirichlet_energy(&eta_half),
            dirichlet_energy(&v_half),
            volume_integral(&v_r),
        ])
    });
    let per: Vec<[f64; 5]> = per.into_iter().collect::<Result<_>>()?;
    let times = traj.time_grid.clone();
    let energy: Vec<f64> = per.iter().map(|x| x[0] + x[1]).collect();
    let m0 = energy[0];
    let rate: Vec<f64> = per.iter().map(|x| 0.5 * (p - 1.0) * x[2] + 0.5 * (x[3] + x[4])).collect();
    let mut lhs = vec![energy[0]];
    let mut acc = 0.0;
    for k in 1..n {
        acc += 0.5 * (times[k] - times[k - 1]) * (rate[k] + rate[k - 1]);
        lhs.push(energy[k] + acc);
    }
    // compare the full trapezoid with the one on every other node
    let coarse = {
        let mut c = 0.0;
        let mut k = 0;
        while k + 2 < n {
            c += 0.5 * (times[k + 2] - times[k]) * (rate[k + 2] + rate[k]);
            k += 2;
        }
        let mut fine = 0.0;
        for j in 1..=k {
            fine += 0.5 * (times[j] - times[j - 1]) * (rate[j] + rate[j - 1]);
        }
        (fine - c).abs() / 3.0
    };
    let bound = 2.0 * m0;
    let quadrature_error = if bound > 0.0 { coarse / bound } else { 0.0 };
    if quadrature_error > 0.1 * slack {
        let need = (n as f64 * (quadrature_error / (0.1 * slack)).sqrt()).ceil();
        return domain(format!(
            "trajectory too sparse for the dissipation integrals: trapezoid error {quadrature_error:.2e} of 2 M0 \
             exceeds {:.2e}; about {need} stored times needed",
            0.1 * slack
        ));
    }
    let max_ratio = lhs.iter().fold(Ratio::ZeroOverZero, |acc, &v| {
        let r = Ratio::of(v, bound);
        match (acc, r) {
            (Ratio::Value(a), Ratio::Value(b)) => Ratio::Value(a.max(b)),
            (Ratio::ZeroOverZero, x) => x,
            (x, Ratio::ZeroOverZero) => x,
        }
    });
    Ok(EnergyReport {
        exps: ex,
        m0,
        times,
        energy,
        eta_pow: per.iter().map(|x| x[1]).collect(),
        diss_eta: per.iter().map(|x| x[2]).collect(),
        diss_v: per.iter().map(|x| x[3]).collect(),
        diss_v_r: per.iter().map(|x| x[4]).collect(),
        lhs,
        passed: max_ratio.within(1.0 + slack),
        max_ratio,
        quadrature_error,
        slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessParams {
    pub p0: f64,
    pub c0: f64,
    /// The exponent `A` with `r u(t0) in L^A`.
    pub a: f64,
    pub t0: f64,
}

impl Default for SmallnessParams {
    fn default() -> Self {
        SmallnessParams { p0: 1.04, c0: 1e-2, a: 2.0, t0: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub threshold: f64,
    /// `lhs / threshold`, zero when the left side vanishes.
    pub margin: f64,
    pub satisfied: bool,
    /// Set when more than 1% of an exotic norm comes from the boundary band.
    pub truncation_dominated: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessReport {
    pub params: SmallnessParams,
    pub exps: ExponentSet,
    pub m0: f64,
    /// `||V^{eps0}(t0)||^{q0} + ||eta(t0)||^{p0}`; `None` without a trajectory.
    pub m1: Option<f64>,
    pub conditions: Vec<Condition>,
}

impl SmallnessReport {
    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn lhs(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.lhs)
    }

    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("condition,lhs,threshold,margin,satisfied,truncation_dominated,note\n");
        for c in &self.conditions {
            s.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{},{},{}\n",
                c.name, c.lhs, c.threshold, c.margin, c.satisfied, c.truncation_dominated, c.note
            ));
        }
        s
    }
}

/// Share of `int |f|^p r dr dz` carried by the outer two cells of the truncation.
fn boundary_share(f: &ScalarField, p: f64) -> f64 {
    let g = &f.grid;
    let m = f.max_abs();
    if m == 0.0 || p.is_infinite() {
        return 0.0;
    }
    let (mut all, mut edge) = (0.0, 0.0);
    for i in 0..g.nr {
        for j in 0..g.nz {
            let v = g.r_nodes[i] * (f.at(i, j).abs() / m).powf(p);
            all += v;
            if i + 2 >= g.nr || j < 2 || j + 2 >= g.nz {
                edge += v;
            }
        }
    }
    if all > 0.0 {
        edge / all
    } else {
        0.0
    }
}

fn condition(name: &'static str, lhs: f64, ln_threshold: f64, trunc: bool, note: String) -> Condition {
    let threshold = ln_threshold.exp();
    let finite = lhs.is_finite() && !ln_threshold.is_nan();
    let margin = if lhs == 0.0 && finite { 0.0 } else { (lhs.ln() - ln_threshold).exp() };
    let note = if finite { note } else { format!("non-finite norm; {note}") };
    Condition { name, lhs, threshold, margin, satisfied: finite && margin <= 1.0, truncation_dominated: trunc, note }
}

/// Closest stored state to `t`.
fn state_near(traj: &Trajectory, t: f64) -> &SolverState {
    traj.states.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())).expect("non-empty trajectory")
}

/// The data condition under which the weighted energy stays below `2 M0`,
/// for any `p` in `]1, 21/20]`.
pub fn nearglobal2_condition(omega0: &ScalarField, swirl0: &ScalarField, p: f64, c0: f64) -> Result<Condition> {
    if !(c0 > 0.0) {
        return domain(format!("c0 must be positive (got {c0})"));
    }
    let ex = exponents_of_p(p)?;
    let state0 = SolverState::new(0.0, omega0.clone(), swirl0.clone())?;
    let d0 = derived_fields(&state0, ex.eps)?;
    let m0 = pow_norm(&d0.v_eps, ex.q)? + pow_norm(&d0.eta, p)?;
    let ru0 = weighted_field(swirl0, 1.0);
    let (e_alpha, e_two) = (ex.alpha_p, 2.0 / (3.0 * (p - 1.0).powi(2)));
    let (n_alpha, n_two) = (lp_norm_volumetric(&ru0, e_alpha)?, lp_norm_volumetric(&ru0, e_two)?);
    let lhs = (2.0 * m0).powf(3.0 * (p + 2.0) / (p * (3.0 * p + 11.0)))
        * n_alpha.powf(10.0 * (12.0 * p - 1.0) / (3.0 * p * (p + 3.0) * (3.0 * p + 11.0)))
        + (2.0 * m0).powf((p - 1.0) / (4.0 * p)) * n_two.powf(1.0 / (6.0 * p));
    let trunc = boundary_share(&ru0, e_alpha) > 0.01 || boundary_share(&ru0, e_two) > 0.01;
    Ok(condition(
        "nearglobal2",
        lhs,
        (c0 * (p - 1.0)).ln(),
        trunc,
        format!("p = {p}, M0 = {m0:.6e}, exponents {e_alpha:.4}, {e_two:.4}"),
    ))
}

/// Evaluates the smallness conditions for the data. The conditions built on
/// the monitors `L_{1,20/3}, M_2, N_{20/13,20}` and on the state at `t0` need a
/// local trajectory covering `[0, 2 t0]`; without it they are reported as
/// unavailable and unsatisfied.
pub fn smallness_report(
    omega0: &ScalarField,
    swirl0: &ScalarField,
    params: SmallnessParams,
    traj: Option<&Trajectory>,
) -> Result<SmallnessReport> {
    let SmallnessParams { p0, c0, a, t0 } = params;
    if !(c0 > 0.0 && a > 0.0 && t0 > 0.0) {
        return domain(format!("c0, A and t0 must be positive (got {c0}, {a}, {t0})"));
    }
    let upper = (1.0 + 0.1 / a).min(21.0 / 20.0);
    if !(p0 > 1.0 && p0 < upper) {
        return domain(format!("p0 = {p0} outside ]1, min(1 + 1/(10A), 21/20)[ = ]1, {upper}["));
    }
    let ex = exponents_of_p(p0)?;
    let (p, q, eps) = (p0, ex.q, ex.eps);
    let state0 = SolverState::new(0.0, omega0.clone(), swirl0.clone())?;
    let d0 = derived_fields(&state0, eps)?;
    let m0 = pow_norm(&d0.v_eps, q)? + pow_norm(&d0.eta, p)?;
    let ru0 = weighted_field(swirl0, 1.0);
    let norm = |e: f64| lp_norm_volumetric(&ru0, e);
    let ln = f64::ln;
    let swirl_zero = swirl0.is_zero();
    let mut out = Vec::new();

    out.push(nearglobal2_condition(omega0, swirl0, p0, c0)?);

    let ru_inf = norm(f64::INFINITY)?;
    let ru_a = norm(a)?;
    // ln(t0^{e} ||r u0||_A^{-A}), the common inner quantity
    let inner = |e: f64| e * ln(t0) - a * ln(ru_a);
    let d1 = 10.0 * (12.0 * p - 1.0) - 9.0 * a * (p - 1.0) * (p + 2.0) * (p + 3.0);

    // 5.19a needs no monitors
    out.push(condition("5.19a", ru_inf.powf(1.0 / 6.0), ln(c0), false, String::new()));

    match traj {
        None => {
            for name in ["5.6", "5.19b", "5.21", "5.27"] {
                out.push(Condition {
                    name,
                    lhs: f64::NAN,
                    threshold: f64::NAN,
                    margin: f64::NAN,
                    satisfied: swirl_zero,
                    truncation_dominated: false,
                    note: "needs a local trajectory on [0, 2 t0]".into(),
                });
            }
            Ok(SmallnessReport { params, exps: ex, m0, m1: None, conditions: out })
        }
        Some(tr) => {
            let big_t = 2.0 * t0;
            let window = Trajectory::new(tr.states.iter().filter(|s| s.t <= big_t * (1.0 + 1e-12)).cloned().collect())?;
            let l = range_sup(&window, 'L', 1.0, 20.0 / 3.0, 12)?;
            let m2 = range_sup(&window, 'M', 2.0, 2.0, 2)?;
            let nn = range_sup(&window, 'N', 20.0 / 13.0, 20.0, 12)?;
            let note = format!("T = {big_t}, L = {l:.4e}, M2 = {m2:.4e}, N = {nn:.4e}");

            // (5.6)
            let den = ln(with_power(l, 6.0) + with_power(m2, 4.0) + with_power(nn, 6.0));
            let a1 = 12.0 * p / (2.0 - 3.0 * a * (p - 1.0).powi(2))
                * (ln(p - 1.0) + (p - 1.0).powi(2) / (4.0 * p) * inner(1.5));
            let a2 = 3.0 * p * (p + 3.0) * (3.0 * p + 11.0) / d1
                * (ln(p - 1.0) + 3.0 * (p - 1.0) * (p + 2.0) / (p * (3.0 * p + 11.0)) * inner(1.5));
            out.push(condition("5.6", ru_inf, ln(c0) - den + a1.min(a2), false, note.clone()));

            // (5.19b) at the state nearest t0
            let s0 = state_near(tr, t0);
            let d = derived_fields(s0, eps)?;
            let e_w = 11.0 * p / (30.0 * (p - 1.0));
            let w_half = lp_norm_volumetric(&d.w, 11.0 / 6.0)?.powf(11.0 / 12.0);
            let lhs = norm(e_w)?.powf(11.0 / 30.0)
                * w_half.powf(3.0 / p - 43.0 / 20.0)
                * lp_norm_volumetric(&d.eta, p)?.powf(7.0 * p / 8.0 - 0.5);
            out.push(condition(
                "5.19b",
                lhs,
                ln(c0 * (p - 1.0)),
                boundary_share(&ru0, e_w) > 0.01,
                format!("state at t = {}", s0.t),
            ));

            // (5.21) and (5.27)
            let inner2 = ln(p - 1.0) + (p - 1.0) / p * inner(21.0 * p / 16.0 - 0.75);
            let den = ln(with_power(l, 6.0) + with_power(m2, 2.0) + with_power(nn, 6.0));
            let e = 240.0 * p / (300.0 - 127.0 * p - 240.0 * a * (p - 1.0));
            out.push(condition("5.21", ru_inf, ln(c0) - den + e * inner2, false, note.clone()));
            let den = ln(with_power(l, 20.0) + with_power(m2, 12.0) + with_power(nn, 20.0));
            let e = 5.0 * p / (p - 5.0 * a * (p - 1.0));
            out.push(condition("5.27", ru_inf, ln(c0) - den + e * inner2, false, note));

            let m1 = pow_norm(&d.v_eps, q)? + pow_norm(&d.eta, p)?;
            Ok(SmallnessReport { params, exps: ex, m0, m1: Some(m1), conditions: out })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorollaryCase {
    /// `||r^{-delta} u(t)||_{L^{q1}(Omega)}` against data in `r^{-gamma} L^{q2}`.
    Swirl { delta: f64, gamma: f64, q1: f64, q2: f64 },
    /// `||r^{-delta} omega(t)||_{L^p(Omega)}`.
    Vorticity { delta: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryAudit {
    pub case: CorollaryCase,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratios: Vec<Ratio>,
    pub max_ratio: Ratio,
}

/// Ratio of each side of the weighted corollary bounds along a trajectory,
/// with the monitors taken over the whole trajectory. Only `t > 0` is audited.
pub fn corollary_bound_audit(traj: &Trajectory, case: CorollaryCase) -> Result<CorollaryAudit> {
    let ok = match case {
        CorollaryCase::Swirl { delta, gamma, q1, q2 } => {
            (0.0..=1.0).contains(&gamma) && gamma <= delta && delta <= 1.0 && q2 >= 1.0 && q2 <= q1
        }
        CorollaryCase::Vorticity { delta, p } => (0.0..=1.0).contains(&delta) && p >= 1.0,
    };
    if !ok {
        return domain(format!("corollary exponents violate 0 <= gamma <= delta <= 1, 1 <= q2 <= q1: {case:?}"));
    }
    let states: Vec<&SolverState> = traj.states.iter().filter(|s| s.t > 0.0).collect();
    let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
    match case {
        CorollaryCase::Swirl { delta, gamma, q1, q2 } => {
            let l = range_sup(traj, 'L', 20.0 / 17.0, 2.0, 8)?;
            let n = range_sup(traj, 'N', 20.0 / 13.0, 20.0, 12)?;
            let data = lp_norm_planar(&weighted_field(&traj.initial().swirl, -gamma), q2)?;
            for s in &states {
                lhs.push(lp_norm_planar(&weighted_field(&s.swirl, -delta), q1)?);
                rhs.push(
                    l * n / s.t.powf(0.5 + 0.5 * delta - inv(q1))
                        + data / time_weight(s.t, 0.5 * (delta - gamma) + 1.0 / q2 - inv(q1)),
                );
            }
        }
        CorollaryCase::Vorticity { delta, p } => {
            let l = range_sup(traj, 'L', 1.0, 20.0 / 3.0, 12)?;
            let m2 = range_sup(traj, 'M', 2.0, 2.0, 2)?;
            let n = range_sup(traj, 'N', 20.0 / 13.0, 20.0, 12)?;
            let c = with_power(l, 5.0) + with_power(m2, 3.0) + with_power(n, 5.0);
            for s in &states {
                lhs.push(lp_norm_planar(&weighted_field(&s.omega, -delta), p)?);
                rhs.push(c / s.t.powf(1.0 + 0.5 * delta - inv(p)));
            }
        }
    }
    let ratios: Vec<Ratio> = lhs.iter().zip(&rhs).map(|(a, b)| Ratio::of(*a, *b)).collect();
    let max_ratio = ratios.iter().fold(Ratio::ZeroOverZero, |acc, r| match (acc, r) {
        (Ratio::Value(a), Ratio::Value(b)) => Ratio::Value(a.max(*b)),
        (Ratio::ZeroOverZero, x) => *x,
        (x, Ratio::ZeroOverZero) => x,
    });
    Ok(CorollaryAudit { case, times: states.iter().map(|s| s.t).collect(), lhs, rhs, ratios, max_ratio })
}

/// Grid-independent helper used by the reports: the planar grid of a trajectory.
pub fn trajectory_grid(traj: &Trajectory) -> &HalfPlaneGrid {
    traj.grid()
}
