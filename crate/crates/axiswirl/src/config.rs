//! Flat `key = value` run configuration with `#` comments.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{build_grid, HalfPlaneGrid};
use crate::initial_data::{DataSpec, SwirlProfile};
use crate::mild::PicardConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SemigroupDecay,
    SolveLocal,
    SolveOracle,
    SolveGlobal,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::SemigroupDecay,
        Experiment::SolveLocal,
        Experiment::SolveOracle,
        Experiment::SolveGlobal,
        Experiment::Verify,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::SemigroupDecay => "semigroup-decay",
            Experiment::SolveLocal => "solve-local",
            Experiment::SolveOracle => "solve-oracle",
            Experiment::SolveGlobal => "solve-global",
            Experiment::Verify => "verify",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Decay,
    Maxprin,
    Energy,
    Smallness,
    Corollary,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Decay, Suite::Maxprin, Suite::Energy, Suite::Smallness, Suite::Corollary];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Decay => "decay",
            Suite::Maxprin => "maxprin",
            Suite::Energy => "energy",
            Suite::Smallness => "smallness",
            Suite::Corollary => "corollary",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| Error::Parse(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_max: f64,
    pub t_end: f64,
    pub nodes: usize,
    pub data: DataSpec,
    /// Target for the small-data bundle; `0` leaves the amplitudes as given.
    pub bundle_target: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub oracle_steps: usize,
    pub quad_tol: f64,
    pub c0: f64,
    pub p0: f64,
    pub a: f64,
    pub t0: f64,
    pub monitor_p: Vec<f64>,
    pub monitor_q: Vec<f64>,
    pub monitor_kappa: Vec<f64>,
    pub suites: Vec<Suite>,
    pub maxprin_slack: f64,
    pub energy_p: f64,
    pub energy_slack: f64,
    pub decay_t_min: f64,
    pub decay_t_max: f64,
    pub snapshots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::SolveLocal,
            nr: 64,
            nz: 64,
            r_max: 12.0,
            z_max: 6.0,
            t_end: 0.5,
            nodes: 32,
            data: DataSpec::default(),
            bundle_target: 0.0,
            picard_tol: 1e-10,
            picard_max_iters: 30,
            oracle_steps: 512,
            quad_tol: crate::special::QUAD_TOL,
            c0: 1e-2,
            p0: 1.04,
            a: 2.0,
            t0: 0.25,
            monitor_p: vec![1.0, 4.0 / 3.0, f64::INFINITY],
            monitor_q: vec![2.0, 4.0],
            monitor_kappa: vec![20.0 / 13.0, 20.0],
            suites: Suite::ALL.to_vec(),
            maxprin_slack: 1e-3,
            energy_p: 21.0 / 20.0,
            energy_slack: 1e-2,
            decay_t_min: 1.0,
            decay_t_max: 64.0,
            snapshots: true,
        }
    }
}

/// Every key with its meaning, in serialization order.
pub const KEYS: [(&str, &str); 34] = [
    ("experiment", "semigroup-decay | solve-local | solve-oracle | solve-global | verify"),
    ("grid.nr", "radial cells"),
    ("grid.nz", "axial cells"),
    ("grid.r_max", "radial extent"),
    ("grid.z_max", "axial half-extent"),
    ("time.T", "final time"),
    ("time.nodes", "J in the graded Picard nodes T (j/J)^2"),
    ("data.r0", "ring centre r"),
    ("data.z0", "ring centre z"),
    ("data.width", "Gaussian width"),
    ("data.amp_omega", "vorticity amplitude"),
    ("data.amp_swirl", "swirl amplitude"),
    ("data.swirl_profile", "gaussian | compact_bump"),
    ("data.bundle_target", "rescale amplitudes to this small-data bundle (0 = off)"),
    ("solver.picard_tol", "Picard residual tolerance"),
    ("solver.picard_max_iters", "Picard iteration cap"),
    ("solver.oracle_steps", "splitting-oracle steps on [0, T]"),
    ("quad.tol", "absolute tolerance of the special-function quadrature"),
    ("smallness.c0", "smallness constant"),
    ("smallness.p0", "exponent p0 in ]1, 21/20]"),
    ("smallness.A", "exponent A with r u(t0) in L^A"),
    ("smallness.t0", "time t0; monitors are taken on [0, 2 t0]"),
    ("monitor.p", "exponents of L_p"),
    ("monitor.q", "exponents of M_q"),
    ("monitor.kappa", "exponents of N_kappa"),
    ("verify.suites", "comma list of decay, maxprin, energy, smallness, corollary"),
    ("verify.maxprin_slack", "slack of the swirl maximum principle"),
    ("verify.energy_p", "exponent p of the energy inequality"),
    ("verify.energy_slack", "relative slack of the energy inequality"),
    ("decay.t_min", "start of the semigroup decay window"),
    ("decay.t_max", "end of the semigroup decay window"),
    ("output.snapshots", "write per-node field snapshots"),
    ("output.version", "code version (written to manifests, ignored on input)"),
    ("output.seed", "seed (written to manifests, ignored on input)"),
];

fn fmt_f(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_f(x)).collect::<Vec<_>>().join(",")
}

/// Accepts decimals, `a/b` fractions and `inf`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    let bad = || Error::Parse(format!("expected a number, got '{s}'"));
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_nan() {
        Err(bad())
    } else {
        Ok(v)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(parse_real).collect()
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("expected a non-negative integer, got '{s}'")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parse(format!("expected true or false, got '{s}'"))),
    }
}

fn nearest_key(key: &str) -> &'static str {
    KEYS.iter()
        .map(|(k, _)| (*k, strsim::levenshtein(k, key)))
        .min_by_key(|(_, d)| *d)
        .map(|(k, _)| k)
        .unwrap_or("experiment")
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let d = &mut self.data;
        match key {
            "experiment" => self.experiment = v.parse()?,
            "grid.nr" => self.nr = parse_usize(v)?,
            "grid.nz" => self.nz = parse_usize(v)?,
            "grid.r_max" => self.r_max = parse_real(v)?,
            "grid.z_max" => self.z_max = parse_real(v)?,
            "time.T" => self.t_end = parse_real(v)?,
            "time.nodes" => self.nodes = parse_usize(v)?,
            "data.r0" => d.r0 = parse_real(v)?,
            "data.z0" => d.z0 = parse_real(v)?,
            "data.width" => d.width = parse_real(v)?,
            "data.amp_omega" => d.amp_omega = parse_real(v)?,
            "data.amp_swirl" => d.amp_swirl = parse_real(v)?,
            "data.swirl_profile" => d.swirl_profile = v.parse::<SwirlProfile>()?,
            "data.bundle_target" => self.bundle_target = parse_real(v)?,
            "solver.picard_tol" => self.picard_tol = parse_real(v)?,
            "solver.picard_max_iters" => self.picard_max_iters = parse_usize(v)?,
            "solver.oracle_steps" => self.oracle_steps = parse_usize(v)?,
            "quad.tol" => self.quad_tol = parse_real(v)?,
            "smallness.c0" => self.c0 = parse_real(v)?,
            "smallness.p0" => self.p0 = parse_real(v)?,
            "smallness.A" => self.a = parse_real(v)?,
            "smallness.t0" => self.t0 = parse_real(v)?,
            "monitor.p" => self.monitor_p = parse_list(v)?,
            "monitor.q" => self.monitor_q = parse_list(v)?,
            "monitor.kappa" => self.monitor_kappa = parse_list(v)?,
            "verify.suites" => {
                self.suites =
                    v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<_>>()?
            }
            "verify.maxprin_slack" => self.maxprin_slack = parse_real(v)?,
            "verify.energy_p" => self.energy_p = parse_real(v)?,
            "verify.energy_slack" => self.energy_slack = parse_real(v)?,
            "decay.t_min" => self.decay_t_min = parse_real(v)?,
            "decay.t_max" => self.decay_t_max = parse_real(v)?,
            "output.snapshots" => self.snapshots = parse_bool(v)?,
            "output.version" | "output.seed" => {}
            _ => {
                return Err(Error::Config(format!("unknown key '{key}' (did you mean '{}'?)", nearest_key(key))));
            }
        }
        Ok(())
    }

    /// Constraint check; returns the offending key with the message.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let pos = |k: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err((k, format!("must be positive and finite (got {x})")))
            }
        };
        if self.nr < 4 || self.nz < 3 {
            return Err(("grid.nr", format!("grid needs nr >= 4 and nz >= 3 (got {} x {})", self.nr, self.nz)));
        }
        pos("grid.r_max", self.r_max)?;
        pos("grid.z_max", self.z_max)?;
        pos("time.T", self.t_end)?;
        if self.nodes == 0 {
            return Err(("time.nodes", "must be at least 1".into()));
        }
        pos("data.width", self.data.width)?;
        if !(self.bundle_target >= 0.0 && self.bundle_target.is_finite()) {
            return Err(("data.bundle_target", format!("must be >= 0 (got {})", self.bundle_target)));
        }
        pos("solver.picard_tol", self.picard_tol)?;
        if self.picard_max_iters == 0 {
            return Err(("solver.picard_max_iters", "must be at least 1".into()));
        }
        if self.oracle_steps == 0 {
            return Err(("solver.oracle_steps", "must be at least 1".into()));
        }
        pos("quad.tol", self.quad_tol)?;
        pos("smallness.c0", self.c0)?;
        if !(self.p0 > 1.0 && self.p0 <= 21.0 / 20.0) {
            return Err(("smallness.p0", format!("must lie in ]1, 21/20] (got {})", self.p0)));
        }
        pos("smallness.A", self.a)?;
        pos("smallness.t0", self.t0)?;
        pos("verify.maxprin_slack", self.maxprin_slack)?;
        if !(self.energy_p > 1.0 && self.energy_p <= 21.0 / 20.0) {
            return Err(("verify.energy_p", format!("must lie in ]1, 21/20] (got {})", self.energy_p)));
        }
        pos("verify.energy_slack", self.energy_slack)?;
        pos("decay.t_min", self.decay_t_min)?;
        if !(self.decay_t_max > self.decay_t_min && self.decay_t_max.is_finite()) {
            return Err(("decay.t_max", "must exceed decay.t_min".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<HalfPlaneGrid> {
        build_grid(self.nr, self.nz, self.r_max, self.z_max)
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig { nodes: self.nodes, tol: self.picard_tol, max_iters: self.picard_max_iters }
    }

    /// All keys, one per line, in a form [`parse_config`] reads back.
    pub fn serialize(&self) -> String {
        let d = &self.data;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("experiment", self.experiment.as_str().into());
        put("grid.nr", self.nr.to_string());
        put("grid.nz", self.nz.to_string());
        put("grid.r_max", fmt_f(self.r_max));
        put("grid.z_max", fmt_f(self.z_max));
        put("time.T", fmt_f(self.t_end));
        put("time.nodes", self.nodes.to_string());
        put("data.r0", fmt_f(d.r0));
        put("data.z0", fmt_f(d.z0));
        put("data.width", fmt_f(d.width));
        put("data.amp_omega", fmt_f(d.amp_omega));
        put("data.amp_swirl", fmt_f(d.amp_swirl));
        put("data.swirl_profile", d.swirl_profile.as_str().into());
        put("data.bundle_target", fmt_f(self.bundle_target));
        put("solver.picard_tol", fmt_f(self.picard_tol));
        put("solver.picard_max_iters", self.picard_max_iters.to_string());
        put("solver.oracle_steps", self.oracle_steps.to_string());
        put("quad.tol", fmt_f(self.quad_tol));
        put("smallness.c0", fmt_f(self.c0));
        put("smallness.p0", fmt_f(self.p0));
        put("smallness.A", fmt_f(self.a));
        put("smallness.t0", fmt_f(self.t0));
        put("monitor.p", fmt_list(&self.monitor_p));
        put("monitor.q", fmt_list(&self.monitor_q));
        put("monitor.kappa", fmt_list(&self.monitor_kappa));
        put("verify.suites", self.suites.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(","));
        put("verify.maxprin_slack", fmt_f(self.maxprin_slack));
        put("verify.energy_p", fmt_f(self.energy_p));
        put("verify.energy_slack", fmt_f(self.energy_slack));
        put("decay.t_min", fmt_f(self.decay_t_min));
        put("decay.t_max", fmt_f(self.decay_t_max));
        put("output.snapshots", self.snapshots.to_string());
        s
    }

    /// Commented listing of every key with its default.
    pub fn documented_defaults() -> String {
        let text = RunConfig::default().serialize();
        let mut out = String::new();
        for line in text.lines() {
            let key = line.split(" = ").next().unwrap_or("");
            if let Some((_, doc)) = KEYS.iter().find(|(k, _)| *k == key) {
                let _ = writeln!(out, "# {doc}");
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut lines_of: Vec<(&str, usize)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| {
            let msg = match e {
                Error::Config(m) | Error::Parse(m) | Error::Domain(m) => m,
                other => other.to_string(),
            };
            Error::Config(format!("line {}: {msg}", n + 1))
        };
        let (k, v) =
            line.split_once('=').ok_or_else(|| at(Error::Parse(format!("expected 'key = value', got '{line}'"))))?;
        let (k, v) = (k.trim(), v.trim());
        cfg.set(k, v).map_err(at)?;
        if let Some((key, _)) = KEYS.iter().find(|(key, _)| *key == k) {
            lines_of.retain(|(x, _)| x != key);
            lines_of.push((key, n + 1));
        }
    }
    cfg.check().map_err(|(key, msg)| match lines_of.iter().find(|(k, _)| *k == key) {
        Some((_, n)) => Error::Config(format!("line {n}: {key} {msg}")),
        None => Error::Config(format!("{key} {msg}")),
    })?;
    Ok(cfg)
}
