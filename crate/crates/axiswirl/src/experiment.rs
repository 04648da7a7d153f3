//! Experiment orchestration and artifact writing.
//!
//! Every run writes `manifest.txt` (resolved config, code version, seed) and
//! `report.txt` (one PASS/FAIL line per check with its margin). CSV files are
//! written with fixed formatting so reruns of a manifest are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Experiment, RunConfig, Suite};
use crate::diagnostics::{
    corollary_bound_audit, decay_monitors, energy_check, smallness_report, swirl_maximum_check, CorollaryCase,
    SmallnessParams,
};
use crate::error::{Error, Result};
use crate::grid::{save_snapshot, ScalarField};
use crate::initial_data::{calibrate_smallness, make_data, smallness_bundle, DataSpec};
use crate::mild::{picard_run, splitting_oracle_run, PicardDiagnostics, Trajectory};
use crate::semigroup::{decay_probe, dyadic_times, measure_operator_decay, DecayKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{}: {} ({})", self.name, if self.passed { "PASS" } else { "FAIL" }, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Out {
    dir: PathBuf,
}

impl Out {
    fn new(dir: &Path) -> Result<Out> {
        fs::create_dir_all(dir.join("plotdata"))?;
        Ok(Out { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

pub fn manifest(cfg: &RunConfig, seed: Option<u64>) -> String {
    let mut s = cfg.serialize();
    s.push_str(&format!("output.version = {VERSION}\n"));
    s.push_str(&format!("output.seed = {}\n", seed.map_or("none".into(), |v| v.to_string())));
    s
}

/// Validated (and, when configured, calibrated) data on the run grid.
pub fn prepare_data(cfg: &RunConfig) -> Result<(DataSpec, ScalarField, ScalarField)> {
    let grid = cfg.grid()?;
    let spec =
        if cfg.bundle_target > 0.0 { calibrate_smallness(&cfg.data, &grid, cfg.bundle_target)? } else { cfg.data };
    let (w, u) = make_data(&spec, &grid)?;
    Ok((spec, w, u))
}

fn f(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_snapshots(out: &Out, traj: &Trajectory, stride: usize) -> Result<()> {
    let dir = out.dir.join("snapshots");
    fs::create_dir_all(&dir)?;
    let mut index = String::from("index,t\n");
    let last = traj.states.len() - 1;
    for (k, s) in traj.states.iter().enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        save_snapshot(&s.omega, &dir.join(format!("omega_{k:04}.bin")))?;
        save_snapshot(&s.swirl, &dir.join(format!("swirl_{k:04}.bin")))?;
        index.push_str(&format!("{k},{}\n", f(s.t)));
    }
    fs::write(dir.join("times.csv"), index)?;
    Ok(())
}

fn picard_checks(d: &PicardDiagnostics, tol: f64) -> Vec<Check> {
    let last = d.residuals.last().copied().unwrap_or(f64::NAN);
    let sup = d.xt_norms.iter().copied().fold(0.0, f64::max);
    vec![
        Check::new(
            "picard.converged",
            d.converged,
            format!("{} iterations, residual {last:.3e}, tol {tol:.1e}", d.iterations()),
        ),
        Check::new(
            "picard.contraction",
            d.contraction_est <= 0.5,
            format!("estimate {:.4e}, margin {:.4e}", d.contraction_est, d.contraction_est / 0.5),
        ),
        Check::new("picard.ball", sup <= 2.0 * d.el_t, format!("xt_norm {sup:.4e}, 2 EL(T) = {:.4e}", 2.0 * d.el_t)),
    ]
}

/// One suite on a trajectory: its check and its CSV.
pub fn run_suite(
    suite: Suite,
    cfg: &RunConfig,
    traj: &Trajectory,
    omega0: &ScalarField,
    swirl0: &ScalarField,
) -> Result<(Check, String)> {
    let name = format!("verify.{}", suite.as_str());
    match suite {
        Suite::Decay => {
            let mut ps = cfg.monitor_p.clone();
            if !ps.contains(&4.0) {
                ps.push(4.0);
            }
            let m = decay_monitors(traj, &ps, &cfg.monitor_q, &cfg.monitor_kappa)?;
            let finite = m.l.iter().chain(&m.m).chain(&m.n).flatten().all(|v| v.is_finite() && *v >= 0.0);
            let k4 = ps.iter().position(|&p| p == 4.0).unwrap_or(0);
            let l4: Vec<f64> = m.l.iter().map(|row| row[k4]).collect();
            let peak = l4.iter().copied().fold(0.0, f64::max);
            let first = l4.get(1).copied().unwrap_or(0.0);
            let frac = if peak > 0.0 { first / peak } else { 0.0 };
            let ok = finite && frac < 0.1;
            Ok((
                Check::new(name, ok, format!("monitors finite = {finite}, L_4 first/peak = {frac:.4e} (< 1e-1)")),
                m.csv(),
            ))
        }
        Suite::Maxprin => {
            let ps = [2.0, 4.0, f64::INFINITY];
            let r = swirl_maximum_check(traj, &ps, cfg.maxprin_slack)?;
            let mut csv = String::from("t,ratio_2,ratio_4,ratio_inf\n");
            for (k, t) in r.times.iter().enumerate() {
                csv.push_str(&f(*t));
                for row in &r.ratios {
                    csv.push_str(&format!(",{}", row[k]));
                }
                csv.push('\n');
            }
            let detail = ps
                .iter()
                .zip(&r.max_ratio)
                .zip(&r.max_increase)
                .map(|((p, m), inc)| {
                    format!("p={}: max {m}, max step increase {inc:.2e}", crate::diagnostics::exponent_label(*p))
                })
                .collect::<Vec<_>>()
                .join("; ");
            Ok((Check::new(name, r.passed, format!("{detail}; slack {:.1e}", cfg.maxprin_slack)), csv))
        }
        Suite::Energy => match energy_check(traj, cfg.energy_p, cfg.energy_slack) {
            Ok(e) => {
                let mut csv = String::from("t,energy,diss_eta,diss_v,diss_v_r,lhs,bound\n");
                for k in 0..e.times.len() {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        f(e.times[k]),
                        f(e.energy[k]),
                        f(e.diss_eta[k]),
                        f(e.diss_v[k]),
                        f(e.diss_v_r[k]),
                        f(e.lhs[k]),
                        f(2.0 * e.m0)
                    ));
                }
                let detail = format!(
                    "p = {}, max lhs/(2 M0) = {}, M0 = {:.4e}, quadrature error {:.1e}, slack {:.1e}",
                    e.exps.p, e.max_ratio, e.m0, e.quadrature_error, e.slack
                );
                Ok((Check::new(name, e.passed, detail), csv))
            }
            Err(Error::Domain(msg)) => Ok((Check::new(name, false, msg), String::new())),
            Err(e) => Err(e),
        },
        Suite::Smallness => {
            let params = SmallnessParams { p0: cfg.p0, c0: cfg.c0, a: cfg.a, t0: cfg.t0 };
            let r = smallness_report(omega0, swirl0, params, Some(traj))?;
            let detail = r
                .conditions
                .iter()
                .map(|c| format!("{} margin {:.3e}", c.name, c.margin))
                .collect::<Vec<_>>()
                .join("; ");
            Ok((Check::new(name, r.all_satisfied(), format!("c0 = {:.1e}; {detail}", cfg.c0)), r.csv()))
        }
        Suite::Corollary => {
            let cases = [
                CorollaryCase::Swirl { delta: 1.0 / 3.0, gamma: 1.0 / 3.0, q1: 1.5, q2: 1.5 },
                CorollaryCase::Vorticity { delta: 0.5, p: 2.0 },
            ];
            let mut csv = String::from("case,t,lhs,rhs,ratio\n");
            let mut ok = true;
            let mut detail = Vec::new();
            for (n, case) in cases.iter().enumerate() {
                let a = corollary_bound_audit(traj, *case)?;
                for k in 0..a.times.len() {
                    csv.push_str(&format!("{n},{},{},{},{}\n", f(a.times[k]), f(a.lhs[k]), f(a.rhs[k]), a.ratios[k]));
                }
                ok &= a.max_ratio.within(f64::MAX);
                detail.push(format!("case {n} max ratio {}", a.max_ratio));
            }
            Ok((Check::new(name, ok, detail.join("; ")), csv))
        }
    }
}

fn suites_on(
    out: &Out,
    cfg: &RunConfig,
    suites: &[Suite],
    traj: &Trajectory,
    w: &ScalarField,
    u: &ScalarField,
) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &s in suites {
        let (check, csv) = run_suite(s, cfg, traj, w, u)?;
        if !csv.is_empty() {
            out.write(&format!("verify_{}.csv", s.as_str()), &csv)?;
            out.write(&format!("plotdata/{}.csv", s.as_str()), &csv)?;
        }
        checks.push(check);
    }
    Ok(checks)
}

fn write_norms(out: &Out, cfg: &RunConfig, traj: &Trajectory) -> Result<()> {
    let m = decay_monitors(traj, &cfg.monitor_p, &cfg.monitor_q, &cfg.monitor_kappa)?;
    let csv = m.csv();
    out.write("norms.csv", &csv)?;
    out.write("plotdata/monitors.csv", &csv)
}

fn finish(out: &Out, checks: Vec<Check>) -> Result<Outcome> {
    let mut report = String::new();
    for c in &checks {
        report.push_str(&c.line());
        report.push('\n');
    }
    let passed = checks.iter().all(|c| c.passed);
    report.push_str(&format!("overall: {}\n", if passed { "PASS" } else { "FAIL" }));
    out.write("report.txt", &report)?;
    Ok(Outcome { dir: out.dir.clone(), checks })
}

fn semigroup_decay(out: &Out, cfg: &RunConfig) -> Result<Vec<Check>> {
    let times = dyadic_times(cfg.decay_t_min, cfg.decay_t_max);
    let inf = f64::INFINITY;
    let mut csv = String::from("p,q,kind,slope,target,residual\n");
    let mut checks = Vec::new();
    for (kind, p, q, tol) in [
        (DecayKind::Plain, 1.0, inf, 0.05),
        (DecayKind::Plain, 1.0, 2.0, 0.05),
        (DecayKind::Plain, 2.0, inf, 0.05),
        (DecayKind::Div, 1.0, 1.0, 0.1),
    ] {
        let (op, g) = decay_probe(p, q)?;
        let fit = measure_operator_decay(&op, kind, p, q, &g, &times)?;
        let (pl, ql) = (crate::diagnostics::exponent_label(p), crate::diagnostics::exponent_label(q));
        csv.push_str(&format!(
            "{pl},{ql},{},{},{},{}\n",
            kind.name(),
            f(fit.slope),
            f(fit.slope_target),
            f(fit.residual)
        ));
        let mut curve = String::from("t,norm\n");
        for (t, n) in fit.times.iter().zip(&fit.norms) {
            curve.push_str(&format!("{},{}\n", f(*t), f(*n)));
        }
        out.write(&format!("plotdata/decay_{}_{pl}_{ql}.csv", kind.name()), &curve)?;
        let err = (fit.slope - fit.slope_target).abs();
        checks.push(Check::new(
            format!("decay.{}({pl},{ql})", kind.name()),
            err <= tol,
            format!("slope {:.4}, target {:.4}, |error| {err:.3e} <= {tol}", fit.slope, fit.slope_target),
        ));
    }
    out.write("decay.csv", &csv)?;
    Ok(checks)
}

/// Runs the configured experiment into `dir`. Solver divergence persists the
/// diagnostics and `report.txt` before returning the error.
pub fn run_experiment(cfg: &RunConfig, dir: &Path, seed: Option<u64>) -> Result<Outcome> {
    let out = Out::new(dir)?;
    out.write("manifest.txt", &manifest(cfg, seed))?;
    if cfg.experiment == Experiment::SemigroupDecay {
        let checks = semigroup_decay(&out, cfg)?;
        return finish(&out, checks);
    }
    let (spec, w, u) = prepare_data(cfg)?;
    let bundle = smallness_bundle(&w, &u)?;
    let mut checks = vec![Check::new(
        "data",
        true,
        format!("amp_omega {:.6e}, amp_swirl {:.6e}, bundle {bundle:.6e}", spec.amp_omega, spec.amp_swirl),
    )];
    let solve_local = |checks: &mut Vec<Check>| -> Result<Option<Trajectory>> {
        let (traj, diag) = picard_run(&w, &u, cfg.t_end, cfg.picard())?;
        out.write("picard.csv", &diag.csv())?;
        out.write("plotdata/picard.csv", &diag.csv())?;
        checks.extend(picard_checks(&diag, cfg.picard_tol));
        Ok(diag.converged.then_some(traj))
    };
    let solve_oracle = |checks: &mut Vec<Check>| -> Result<Trajectory> {
        let (traj, cfl) = splitting_oracle_run(&w, &u, cfg.t_end, cfg.oracle_steps)?;
        checks.push(Check::new("oracle.cfl", cfl < 0.5, format!("max CFL {cfl:.4e} over {} steps", cfg.oracle_steps)));
        Ok(traj)
    };
    let stride_oracle = (cfg.oracle_steps / cfg.nodes.max(1)).max(1);
    let (traj, stride, suites) = match cfg.experiment {
        Experiment::SolveLocal | Experiment::Verify => {
            let Some(traj) = solve_local(&mut checks)? else {
                finish(&out, checks.clone())?;
                let last = checks.iter().filter(|c| !c.passed).map(|c| c.line()).collect::<Vec<_>>().join("; ");
                return Err(Error::Diverged(format!("{last}; diagnostics in {}", dir.display())));
            };
            let suites = if cfg.experiment == Experiment::Verify { cfg.suites.clone() } else { vec![Suite::Maxprin] };
            (traj, 1, suites)
        }
        Experiment::SolveOracle => (solve_oracle(&mut checks)?, stride_oracle, vec![Suite::Maxprin]),
        Experiment::SolveGlobal => {
            (solve_oracle(&mut checks)?, stride_oracle, vec![Suite::Maxprin, Suite::Energy, Suite::Smallness])
        }
        Experiment::SemigroupDecay => unreachable!(),
    };
    write_norms(&out, cfg, &traj)?;
    if cfg.snapshots {
        write_snapshots(&out, &traj, stride)?;
    }
    checks.extend(suites_on(&out, cfg, &suites, &traj, &w, &u)?);
    finish(&out, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("axiswirl-exp-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn manifest_round_trips() {
        let cfg = RunConfig::default();
        let m = manifest(&cfg, Some(7));
        assert!(m.contains("output.seed = 7") && m.contains(VERSION));
        assert_eq!(parse_config(&m).unwrap(), cfg);
    }

    #[test]
    fn small_oracle_run_is_reproducible() {
        let cfg = parse_config(
            "experiment = solve-oracle\ngrid.nr = 32\ngrid.nz = 32\ngrid.r_max = 12\ngrid.z_max = 6\n\
             data.width = 0.8\ntime.T = 0.05\nsolver.oracle_steps = 8\ntime.nodes = 4\n",
        )
        .unwrap();
        let (a, b) = (tmp("a"), tmp("b"));
        let oa = run_experiment(&cfg, &a, None).unwrap();
        run_experiment(&cfg, &b, None).unwrap();
        assert!(oa.passed(), "{:?}", oa.checks);
        for name in ["norms.csv", "report.txt", "manifest.txt", "verify_maxprin.csv"] {
            assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
        }
        let norms = fs::read_to_string(a.join("norms.csv")).unwrap();
        assert!(norms.starts_with("t,L_1,L_4_3,L_inf,M_2,M_4,N_20_13,N_20\n"));
        assert_eq!(norms.lines().count(), 10);
        assert!(a.join("snapshots/omega_0008.bin").exists() && a.join("snapshots/swirl_0000.bin").exists());
        let _ = fs::remove_dir_all(&a);
        let _ = fs::remove_dir_all(&b);
    }

    #[test]
    fn divergence_persists_diagnostics() {
        let cfg = parse_config(
            "experiment = solve-local\ngrid.nr = 32\ngrid.nz = 32\ndata.width = 0.8\ndata.amp_omega = 400\n\
             time.T = 0.5\ntime.nodes = 4\nsolver.picard_max_iters = 3\n",
        )
        .unwrap();
        let d = tmp("div");
        let e = run_experiment(&cfg, &d, None).unwrap_err();
        assert!(matches!(e, Error::Diverged(_)), "{e}");
        assert!(d.join("picard.csv").exists());
        let report = fs::read_to_string(d.join("report.txt")).unwrap();
        assert!(report.contains("FAIL"));
        let _ = fs::remove_dir_all(&d);
    }
}
