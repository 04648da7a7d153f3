use std::path::{Path, PathBuf};
use std::process::ExitCode;

use axiswirl::biot_savart::{ur_over_r_audit, BiotSavart};
use axiswirl::config::{parse_config, parse_real, Experiment, RunConfig, Suite};
use axiswirl::diagnostics::exponent_label;
use axiswirl::experiment::run_experiment;
use axiswirl::grid::{load_snapshot, save_snapshot};
use axiswirl::semigroup::{decay_probe, dyadic_times, measure_operator_decay, DecayKind};
use axiswirl::special::{eval_f_prime_tol, eval_f_tol, eval_h_prime_tol, eval_h_tol, Profile};
use axiswirl::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "axiswirl",
    version,
    about = "Axisymmetric Navier-Stokes with swirl: kernels, mild solver, diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (for `biot-savart`, the output file prefix).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recorded in the manifest; every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate F, F', H or H' at a point, or scan x^alpha |fn(x)| on [1e-6, 1e6].
    SpecialFn {
        #[arg(long)]
        which: String,
        #[arg(long, conflicts_with = "scan")]
        at: Option<f64>,
        #[arg(long)]
        scan: Option<f64>,
    },
    /// Velocity of a vorticity snapshot, written as `<out>_ur.bin` and `<out>_uz.bin`.
    BiotSavart {
        #[arg(long = "in")]
        input: PathBuf,
        /// Print the `u^r/r` audit CSV for the exponent pair `p,q`.
        #[arg(long)]
        audit: Option<String>,
    },
    /// Semigroup decay fits. Pairs `p,q` separated by `;`, `div:` prefix for the divergence form.
    SemigroupDecay {
        #[arg(long, default_value = "1,inf;1,2;2,inf;div:1,1")]
        pairs: String,
        /// `dyadic:LO:HI`; defaults to the configured window.
        #[arg(long)]
        times: Option<String>,
    },
    /// Picard iteration for the mild formulation.
    SolveLocal,
    /// Splitting-oracle solve.
    SolveOracle,
    /// Small-swirl run with the energy and smallness audits.
    SolveGlobal,
    /// Verification suites on a local solution.
    Verify {
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
    /// Print the documented default configuration.
    Defaults,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => parse_config(&std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?),
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
}

fn special_fn(cfg: &RunConfig, which: &str, at: Option<f64>, scan: Option<f64>) -> Result<bool> {
    let prof = Profile::parse(which)?;
    let tol = cfg.quad_tol;
    let eval = |x: f64| match prof {
        Profile::F => eval_f_tol(x, tol),
        Profile::FPrime => eval_f_prime_tol(x, tol),
        Profile::H => eval_h_tol(x, tol),
        Profile::HPrime => eval_h_prime_tol(x, tol),
    };
    match (at, scan) {
        (Some(x), _) => println!("{:.16e}", eval(x)?),
        (None, Some(alpha)) => {
            println!("t,value,t_pow_value");
            for k in 0..121 {
                let t = 10f64.powf(-6.0 + 12.0 * k as f64 / 120.0);
                let v = eval(t)?;
                println!("{t:.6e},{v:.16e},{:.16e}", t.powf(alpha) * v.abs());
            }
        }
        (None, None) => return Err(Error::Config("special-fn needs --at or --scan".into())),
    }
    Ok(true)
}

fn biot_savart(input: &Path, out: &Path, audit: Option<&str>) -> Result<bool> {
    let omega = load_snapshot(input)?;
    let vel = BiotSavart::new(&omega.grid).velocity(&omega)?;
    let name = |s: &str| {
        let mut p = out.as_os_str().to_owned();
        p.push(s);
        PathBuf::from(p)
    };
    save_snapshot(&vel.ur_field(), &name("_ur.bin"))?;
    save_snapshot(&vel.uz_field(), &name("_uz.bin"))?;
    if let Some(pq) = audit {
        let (p, q) = pq.split_once(',').ok_or_else(|| Error::Parse(format!("--audit expects p,q (got '{pq}')")))?;
        let a = ur_over_r_audit(&omega, &vel, parse_real(p)?, parse_real(q)?)?;
        println!("p,q,lambda,lhs,rhs,ratio");
        println!("{},{},{},{:.12e},{:.12e},{}", a.p, a.q, a.lambda, a.lhs, a.rhs_product, a.ratio);
    }
    Ok(true)
}

fn semigroup_decay(cfg: &RunConfig, pairs: &str, times: Option<&str>, out: Option<&Path>) -> Result<bool> {
    let times = match times {
        None => dyadic_times(cfg.decay_t_min, cfg.decay_t_max),
        Some(spec) => {
            let parts: Vec<&str> = spec.split(':').collect();
            match parts.as_slice() {
                ["dyadic", lo, hi] => dyadic_times(parse_real(lo)?, parse_real(hi)?),
                _ => return Err(Error::Parse(format!("--times expects dyadic:LO:HI (got '{spec}')"))),
            }
        }
    };
    let mut csv = String::from("p,q,kind,slope,target,residual\n");
    let mut ok = true;
    for item in pairs.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (kind, pq, tol) = match item.strip_prefix("div:") {
            Some(rest) => (DecayKind::Div, rest, 0.1),
            None => (DecayKind::Plain, item, 0.05),
        };
        let (p, q) = pq.split_once(',').ok_or_else(|| Error::Parse(format!("pair '{item}' is not p,q")))?;
        let (p, q) = (parse_real(p)?, parse_real(q)?);
        let (op, g) = decay_probe(p, q)?;
        let fit = measure_operator_decay(&op, kind, p, q, &g, &times)?;
        ok &= (fit.slope - fit.slope_target).abs() <= tol;
        csv.push_str(&format!(
            "{},{},{},{:.12e},{:.12e},{:.12e}\n",
            exponent_label(p),
            exponent_label(q),
            kind.name(),
            fit.slope,
            fit.slope_target,
            fit.residual
        ));
    }
    print!("{csv}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("decay.csv"), &csv)?;
    }
    Ok(ok)
}

fn experiment(cli: &Cli, mut cfg: RunConfig, exp: Experiment, suites: &[String]) -> Result<bool> {
    cfg.experiment = exp;
    if !suites.is_empty() {
        cfg.suites = suites.iter().map(|s| s.parse::<Suite>()).collect::<Result<_>>()?;
    }
    let outcome = run_experiment(&cfg, out_dir(cli)?, cli.seed)?;
    for c in &outcome.checks {
        println!("{}", c.line());
    }
    println!("overall: {}", if outcome.passed() { "PASS" } else { "FAIL" });
    Ok(outcome.passed())
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.cmd {
        Cmd::SpecialFn { which, at, scan } => special_fn(&cfg, which, *at, *scan),
        Cmd::BiotSavart { input, audit } => biot_savart(input, out_dir(cli)?, audit.as_deref()),
        Cmd::SemigroupDecay { pairs, times } => semigroup_decay(&cfg, pairs, times.as_deref(), cli.out.as_deref()),
        Cmd::SolveLocal => experiment(cli, cfg, Experiment::SolveLocal, &[]),
        Cmd::SolveOracle => experiment(cli, cfg, Experiment::SolveOracle, &[]),
        Cmd::SolveGlobal => experiment(cli, cfg, Experiment::SolveGlobal, &[]),
        Cmd::Verify { suite } => experiment(cli, cfg, Experiment::Verify, suite),
        Cmd::Defaults => {
            print!("{}", RunConfig::documented_defaults());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("axiswirl: {e}");
            ExitCode::from(2)
        }
    }
}
