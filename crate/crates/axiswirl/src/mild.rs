//! Mild solutions of the vorticity-swirl system
//!
//! ```text
//!   omega(t) = S(t) omega_0 - int_0^t S(t-s) ( div_*(u~ omega) - d_z(u^2)/r ) ds
//!   u(t)     = S(t) u_0     - int_0^t S(t-s) ( div_*(u~ u) + 2 u u^r / r ) ds
//! ```
//!
//! by Picard iteration on graded time nodes, and an independent first-order
//! splitting time-marcher used as a cross-check.

use crate::biot_savart::BiotSavart;
use crate::error::{domain, Error, Result};
use crate::grid::{lp_norm_planar, weighted_field, HalfPlaneGrid, Quantity, ScalarField, VelocityField};
use crate::parallel::map_range;
use crate::semigroup::Semigroup;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub omega: ScalarField,
    pub swirl: ScalarField,
}

impl SolverState {
    pub fn new(t: f64, omega: ScalarField, swirl: ScalarField) -> Result<SolverState> {
        if !(t >= 0.0 && t.is_finite()) {
            return domain(format!("state time must be finite and >= 0 (got {t})"));
        }
        if omega.grid != swirl.grid {
            return Err(Error::GridMismatch("omega and swirl on different grids".into()));
        }
        if omega.values.iter().chain(&swirl.values).any(|v| !v.is_finite()) {
            return domain(format!("non-finite field value at t = {t}"));
        }
        Ok(SolverState { t, omega, swirl })
    }

    fn lin_comb(&self, a: f64, other: &SolverState, b: f64) -> SolverState {
        SolverState {
            t: self.t,
            omega: self.omega.lin_comb(a, &other.omega, b).expect("same grid"),
            swirl: self.swirl.lin_comb(a, &other.swirl, b).expect("same grid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SolverState>,
    pub time_grid: Vec<f64>,
}

impl Trajectory {
    pub fn new(states: Vec<SolverState>) -> Result<Trajectory> {
        if states.is_empty() {
            return domain("empty trajectory");
        }
        if states[0].t != 0.0 {
            return domain(format!("trajectory must start at t = 0 (got {})", states[0].t));
        }
        if states.windows(2).any(|w| w[1].t <= w[0].t) {
            return domain("trajectory times must be strictly increasing");
        }
        let time_grid = states.iter().map(|s| s.t).collect();
        Ok(Trajectory { states, time_grid })
    }

    pub fn grid(&self) -> &HalfPlaneGrid {
        &self.states[0].omega.grid
    }

    pub fn initial(&self) -> &SolverState {
        &self.states[0]
    }

    pub fn last(&self) -> &SolverState {
        self.states.last().expect("non-empty")
    }

    /// Both fields multiplied by `c` at every node.
    pub fn scaled(&self, c: f64) -> Trajectory {
        let states = self
            .states
            .iter()
            .map(|s| SolverState { t: s.t, omega: s.omega.scaled(c), swirl: s.swirl.scaled(c) })
            .collect();
        Trajectory { states, time_grid: self.time_grid.clone() }
    }

    /// `a self + b other` node by node; the time grids must match.
    pub fn lin_comb(&self, a: f64, other: &Trajectory, b: f64) -> Result<Trajectory> {
        if self.time_grid != other.time_grid {
            return domain("trajectories on different time grids");
        }
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch("trajectories on different space grids".into()));
        }
        let states = self.states.iter().zip(&other.states).map(|(x, y)| x.lin_comb(a, y, b)).collect();
        Ok(Trajectory { states, time_grid: self.time_grid.clone() })
    }
}

/// `T (j/J)^2`, `j = 0..=J`.
pub fn graded_nodes(t_end: f64, j: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) || j == 0 {
        return domain(format!("graded grid needs T > 0 and J >= 1 (got T = {t_end}, J = {j})"));
    }
    Ok((0..=j).map(|k| t_end * (k as f64 / j as f64).powi(2)).collect())
}

/// The three-term norm at one time.
pub fn xt_terms(t: f64, omega: &ScalarField, swirl: &ScalarField) -> Result<[f64; 3]> {
    Ok([
        t.powf(0.25) * lp_norm_planar(omega, 4.0 / 3.0)?,
        t.powf(0.25) * lp_norm_planar(swirl, 4.0)?,
        t.powf(0.15) * lp_norm_planar(&weighted_field(swirl, -0.3), 2.0)?,
    ])
}

/// `sup_{0 < t <= T} (t^{1/4}||omega||_{4/3} + t^{1/4}||u||_4 + t^{3/20}||r^{-3/10} u||_2)`
/// over the stored nodes.
pub fn xt_norm(traj: &Trajectory, t_end: f64) -> Result<f64> {
    if traj.states.is_empty() {
        return domain("empty trajectory");
    }
    let mut sup = 0.0_f64;
    for s in traj.states.iter().filter(|s| s.t > 0.0 && s.t <= t_end * (1.0 + 1e-12)) {
        sup = sup.max(xt_terms(s.t, &s.omega, &s.swirl)?.iter().sum());
    }
    Ok(sup)
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Linear and bilinear parts of the mild formulation on a fixed graded grid.
pub struct MildOperator {
    pub grid: HalfPlaneGrid,
    pub nodes: Vec<f64>,
    semigroup: Semigroup,
    biot_savart: BiotSavart,
}

impl MildOperator {
    pub fn new(grid: &HalfPlaneGrid, nodes: Vec<f64>) -> Result<MildOperator> {
        if nodes.len() < 2 || nodes[0] != 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return domain("time nodes must start at 0 and increase strictly");
        }
        Ok(MildOperator {
            grid: grid.clone(),
            nodes,
            semigroup: Semigroup::new(grid),
            biot_savart: BiotSavart::new(grid),
        })
    }

    /// `(S(t_j) omega_0, S(t_j) u_0)` at every node.
    pub fn linear(&self, omega0: &ScalarField, swirl0: &ScalarField) -> Result<Trajectory> {
        let first = SolverState::new(0.0, omega0.clone(), swirl0.clone())?;
        if omega0.grid != self.grid {
            return Err(Error::GridMismatch("data not on the solver grid".into()));
        }
        let rest = map_range(self.nodes.len() - 1, |k| -> Result<SolverState> {
            let t = self.nodes[k + 1];
            Ok(SolverState {
                t,
                omega: self.semigroup.apply(t, omega0)?.with_quantity(Quantity::OmegaTheta),
                swirl: self.semigroup.apply(t, swirl0)?.with_quantity(Quantity::UTheta),
            })
        });
        let mut states = vec![first];
        for s in rest {
            states.push(s?);
        }
        Trajectory::new(states)
    }

    fn check(&self, x: &Trajectory) -> Result<()> {
        if x.time_grid != self.nodes {
            return domain("trajectory not sampled on the solver's time nodes");
        }
        if x.grid() != &self.grid {
            return Err(Error::GridMismatch("trajectory not on the solver grid".into()));
        }
        Ok(())
    }

    fn velocities(&self, x: &Trajectory) -> Result<Vec<VelocityField>> {
        map_range(x.states.len(), |k| self.biot_savart.velocity(&x.states[k].omega)).into_iter().collect()
    }

    /// `F(x1, x2)` at node `j`, given the velocities of `x1`.
    fn bilinear_at(&self, x1: &Trajectory, vel: &[VelocityField], x2: &Trajectory, j: usize) -> Result<SolverState> {
        let g = &self.grid;
        let n = g.len();
        let t = self.nodes[j];
        let mut om = vec![0.0; n];
        let mut sw = vec![0.0; n];
        let lerp = |a: &[f64], b: &[f64], th: f64, out: &mut Vec<f64>| {
            out.clear();
            out.extend(a.iter().zip(b).map(|(x, y)| (1.0 - th) * x + th * y));
        };
        let (mut ur, mut uz, mut u1, mut w2, mut u2) = (vec![], vec![], vec![], vec![], vec![]);
        for k in 1..=j {
            let (s0, s1) = (self.nodes[k - 1], self.nodes[k]);
            let h = s1 - s0;
            for th in GAUSS2 {
                let tau = t - (s0 + th * h);
                lerp(&vel[k - 1].ur, &vel[k].ur, th, &mut ur);
                lerp(&vel[k - 1].uz, &vel[k].uz, th, &mut uz);
                lerp(&x1.states[k - 1].swirl.values, &x1.states[k].swirl.values, th, &mut u1);
                lerp(&x2.states[k - 1].omega.values, &x2.states[k].omega.values, th, &mut w2);
                lerp(&x2.states[k - 1].swirl.values, &x2.states[k].swirl.values, th, &mut u2);
                let field = |v: Vec<f64>| ScalarField { grid: g.clone(), values: v, quantity: Quantity::Generic };
                // omega: div_*(u~ omega_2) - d_z(u_1 u_2)/r = div_*(u^r omega_2, u^z omega_2 - u_1 u_2 / r)
                let mut fz = vec![0.0; n];
                for i in 0..g.nr {
                    let inv_r = 1.0 / g.r_nodes[i];
                    for jj in 0..g.nz {
                        let m = i * g.nz + jj;
                        fz[m] = uz[m] * w2[m] - u1[m] * u2[m] * inv_r;
                    }
                }
                let fr: Vec<f64> = ur.iter().zip(&w2).map(|(a, b)| a * b).collect();
                let d_om = self.semigroup.apply_div(tau, &field(fr), &field(fz))?;
                // swirl: div_*(u~ u_2) + 2 u^r u_2 / r
                if u2.iter().any(|&v| v != 0.0) {
                    let fr: Vec<f64> = ur.iter().zip(&u2).map(|(a, b)| a * b).collect();
                    let fz: Vec<f64> = uz.iter().zip(&u2).map(|(a, b)| a * b).collect();
                    let src = field(fr.iter().map(|v| 2.0 * v).collect());
                    let d_u = self.semigroup.apply_div(tau, &field(fr), &field(fz))?;
                    let d_w = self.semigroup.apply_weighted(tau, 0.0, 0.0, &src)?;
                    for m in 0..n {
                        sw[m] += 0.5 * h * (d_u.values[m] + d_w.values[m]);
                    }
                }
                for m in 0..n {
                    om[m] += 0.5 * h * d_om.values[m];
                }
            }
        }
        Ok(SolverState {
            t,
            omega: ScalarField { grid: g.clone(), values: om, quantity: Quantity::OmegaTheta },
            swirl: ScalarField { grid: g.clone(), values: sw, quantity: Quantity::UTheta },
        })
    }

    /// `F(x1, x2)` at every node (zero at `t = 0`).
    pub fn bilinear(&self, x1: &Trajectory, x2: &Trajectory) -> Result<Trajectory> {
        self.check(x1)?;
        self.check(x2)?;
        let vel = self.velocities(x1)?;
        let g = &self.grid;
        let zero = SolverState {
            t: 0.0,
            omega: ScalarField::zeros(g, Quantity::OmegaTheta),
            swirl: ScalarField::zeros(g, Quantity::UTheta),
        };
        let rest = map_range(self.nodes.len() - 1, |k| self.bilinear_at(x1, &vel, x2, k + 1));
        let mut states = vec![zero];
        for s in rest {
            states.push(s?);
        }
        Ok(Trajectory { states, time_grid: self.nodes.clone() })
    }

    pub fn clear_cache(&self) {
        self.semigroup.clear_cache();
    }
}

/// `(F^omega, F^u)(pair1, pair2)(t)` where `t` must be one of the stored nodes.
pub fn bilinear_f(pair1: &Trajectory, pair2: &Trajectory, t: f64) -> Result<(ScalarField, ScalarField)> {
    let j = pair1
        .time_grid
        .iter()
        .position(|&s| s == t)
        .ok_or_else(|| Error::Domain(format!("time grid does not cover [0, {t}] with a node at t")))?;
    if j == 0 {
        let g = pair1.grid();
        return Ok((ScalarField::zeros(g, Quantity::OmegaTheta), ScalarField::zeros(g, Quantity::UTheta)));
    }
    let op = MildOperator::new(pair1.grid(), pair1.time_grid[..=j].to_vec())?;
    let cut = |x: &Trajectory| Trajectory { states: x.states[..=j].to_vec(), time_grid: x.time_grid[..=j].to_vec() };
    let (a, b) = (cut(pair1), cut(pair2));
    op.check(&a)?;
    op.check(&b)?;
    let vel = op.velocities(&a)?;
    let s = op.bilinear_at(&a, &vel, &b, j)?;
    Ok((s.omega, s.swirl))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardDiagnostics {
    /// X_T norm of the linear evolution of the data.
    pub el_t: f64,
    pub xt_norms: Vec<f64>,
    pub residuals: Vec<f64>,
    pub contraction_est: f64,
    pub converged: bool,
    /// Set when an iterate left the ball of radius `10 EL(T)`.
    pub escaped: bool,
}

impl PicardDiagnostics {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("iter,xt_norm,residual\n");
        for (k, (n, r)) in self.xt_norms.iter().zip(&self.residuals).enumerate() {
            s.push_str(&format!("{},{:.12e},{:.12e}\n", k + 1, n, r));
        }
        s
    }
}

/// Picard settings. `nodes` is `J` in `T (j/J)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub nodes: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { nodes: 32, tol: 1e-10, max_iters: 30 }
    }
}

fn contraction(residuals: &[f64], el_t: f64) -> f64 {
    let ratio = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a / b };
    if residuals.len() < 2 {
        return residuals.first().map_or(0.0, |&r| ratio(r, el_t));
    }
    residuals.windows(2).skip(usize::from(residuals.len() > 2)).map(|w| ratio(w[1], w[0])).fold(0.0, f64::max)
}

/// Iterates `x <- a - F(x, x)` and always returns the last iterate with its
/// diagnostics; [`picard_solve`] turns a non-converged run into an error.
pub fn picard_run(
    omega0: &ScalarField,
    swirl0: &ScalarField,
    t_end: f64,
    cfg: PicardConfig,
) -> Result<(Trajectory, PicardDiagnostics)> {
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return domain("Picard needs tol > 0 and max_iters >= 1");
    }
    let op = MildOperator::new(&omega0.grid, graded_nodes(t_end, cfg.nodes)?)?;
    let a = op.linear(omega0, swirl0)?;
    let el_t = xt_norm(&a, t_end)?;
    let mut x = a.clone();
    let mut diag = PicardDiagnostics {
        el_t,
        xt_norms: Vec::new(),
        residuals: Vec::new(),
        contraction_est: 0.0,
        converged: false,
        escaped: false,
    };
    for _ in 0..cfg.max_iters {
        let next = a.lin_comb(1.0, &op.bilinear(&x, &x)?, -1.0)?;
        let res = xt_norm(&next.lin_comb(1.0, &x, -1.0)?, t_end)?;
        let norm = xt_norm(&next, t_end)?;
        diag.xt_norms.push(norm);
        diag.residuals.push(res);
        x = next;
        if !norm.is_finite() || norm > 10.0 * el_t {
            diag.escaped = true;
            break;
        }
        if res < cfg.tol {
            break;
        }
    }
    diag.contraction_est = contraction(&diag.residuals, el_t);
    diag.converged = !diag.escaped && diag.residuals.last().is_some_and(|&r| r < cfg.tol) && diag.contraction_est < 1.0;
    op.clear_cache();
    Ok((x, diag))
}

pub fn picard_solve(
    omega0: &ScalarField,
    swirl0: &ScalarField,
    t_end: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Trajectory, PicardDiagnostics)> {
    let cfg = PicardConfig { tol, max_iters, ..PicardConfig::default() };
    let (x, d) = picard_run(omega0, swirl0, t_end, cfg)?;
    if d.converged {
        Ok((x, d))
    } else {
        Err(Error::Diverged(format!(
            "Picard did not converge (EL(T) = {:.4e}, escaped = {}); xt_norms {:?}, residuals {:?}",
            d.el_t, d.escaped, d.xt_norms, d.residuals
        )))
    }
}

/// Sixth-order central `d/dr` of a field that is even under `r -> -r`; zero
/// beyond the outer edge.
fn d_r_even(g: &HalfPlaneGrid, f: &[f64]) -> Vec<f64> {
    let (nr, nz) = (g.nr as isize, g.nz);
    let at = |i: isize, j: usize| -> f64 {
        if i < 0 {
            f[(-1 - i) as usize * nz + j]
        } else if i >= nr {
            0.0
        } else {
            f[i as usize * nz + j]
        }
    };
    let mut out = vec![0.0; f.len()];
    for i in 0..nr {
        for j in 0..nz {
            out[i as usize * nz + j] = (45.0 * (at(i + 1, j) - at(i - 1, j)) - 9.0 * (at(i + 2, j) - at(i - 2, j))
                + at(i + 3, j)
                - at(i - 3, j))
                / (60.0 * g.dr);
        }
    }
    out
}

/// Sixth-order central `d/dz`, zero beyond the truncation.
fn d_z(g: &HalfPlaneGrid, f: &[f64]) -> Vec<f64> {
    let nz = g.nz as isize;
    let mut out = vec![0.0; f.len()];
    for i in 0..g.nr {
        let row = &f[i * g.nz..(i + 1) * g.nz];
        let at = |j: isize| if j < 0 || j >= nz { 0.0 } else { row[j as usize] };
        for j in 0..nz {
            out[i * g.nz + j as usize] = (45.0 * (at(j + 1) - at(j - 1)) - 9.0 * (at(j + 2) - at(j - 2)) + at(j + 3)
                - at(j - 3))
                / (60.0 * g.dz);
        }
    }
    out
}

/// Largest `dt (|u^r|/dr + |u^z|/dz)` over the grid.
pub fn cfl_number(u: &VelocityField, dt: f64) -> f64 {
    let g = &u.grid;
    u.ur.iter().zip(&u.uz).map(|(a, b)| dt * (a.abs() / g.dr + b.abs() / g.dz)).fold(0.0, f64::max)
}

/// Lie splitting on `steps` uniform steps: explicit Euler for the transport
/// and stretching terms (sixth-order differences), then `S(dt)`. Returns
/// every step and the largest CFL number met.
pub fn splitting_oracle_run(
    omega0: &ScalarField,
    swirl0: &ScalarField,
    t_end: f64,
    steps: usize,
) -> Result<(Trajectory, f64)> {
    if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
        return domain(format!("oracle needs T > 0 and steps >= 1 (got T = {t_end}, steps = {steps})"));
    }
    let g = omega0.grid.clone();
    let dt = t_end / steps as f64;
    let sg = Semigroup::new(&g);
    let bs = BiotSavart::new(&g);
    let mut states = vec![SolverState::new(0.0, omega0.clone(), swirl0.clone())?];
    let (mut w, mut u) = (omega0.values.clone(), swirl0.values.clone());
    let mut max_cfl = 0.0_f64;
    let n = g.len();
    for step in 1..=steps {
        let vel = bs.velocity(&ScalarField { grid: g.clone(), values: w.clone(), quantity: Quantity::OmegaTheta })?;
        let cfl = cfl_number(&vel, dt);
        max_cfl = max_cfl.max(cfl);
        if cfl >= 0.5 {
            return Err(Error::Cfl { cfl });
        }
        let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<f64>>();
        let dw_r = d_r_even(&g, &prod(&vel.ur, &w));
        let dw_z = d_z(&g, &prod(&vel.uz, &w));
        let du_r = d_r_even(&g, &prod(&vel.ur, &u));
        let du_z = d_z(&g, &prod(&vel.uz, &u));
        let dz_u2 = d_z(&g, &prod(&u, &u));
        let mut w_star = vec![0.0; n];
        let mut u_star = vec![0.0; n];
        for i in 0..g.nr {
            let inv_r = 1.0 / g.r_nodes[i];
            for j in 0..g.nz {
                let m = i * g.nz + j;
                let nw = -(dw_r[m] + dw_z[m]) + dz_u2[m] * inv_r;
                let nu = -(du_r[m] + du_z[m]) - 2.0 * u[m] * vel.ur[m] * inv_r;
                w_star[m] = w[m] + dt * nw;
                u_star[m] = u[m] + dt * nu;
            }
        }
        let f = |v: Vec<f64>, q| ScalarField { grid: g.clone(), values: v, quantity: q };
        w = sg.apply(dt, &f(w_star, Quantity::OmegaTheta))?.values;
        u = sg.apply(dt, &f(u_star, Quantity::UTheta))?.values;
        let t = if step == steps { t_end } else { step as f64 * dt };
        states.push(SolverState::new(t, f(w.clone(), Quantity::OmegaTheta), f(u.clone(), Quantity::UTheta))?);
    }
    Ok((Trajectory::new(states)?, max_cfl))
}

pub fn splitting_oracle_solve(
    omega0: &ScalarField,
    swirl0: &ScalarField,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    splitting_oracle_run(omega0, swirl0, t_end, steps).map(|r| r.0)
}
