use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fcla_core::channel::{draw_paths, write_paths_json};
use fcla_core::harness::{
    run_sweep_with_jobs, trial_seed, ucla_baseline, AlphaRule, ExperimentSpec, Manifest, Method, Sweep, TrialSetup,
};
use fcla_core::pattern::Pattern;
use fcla_core::solver::{MatchingNorm, PlacementSolution};
use fcla_core::validation::run_all;

#[derive(Parser, Debug)]
#[command(name = "fcla", version, about = "Flexible cylindrical array placement and precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sum rate versus SNR.
    SweepSnr {
        #[command(flatten)]
        common: Common,
        /// SNR range in dB as `start:step:end` (or a single value).
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
    },
    /// Sum rate versus grid size G = G_H = G_V.
    SweepGrid {
        #[command(flatten)]
        common: Common,
        /// Grid sizes as `start:step:end`.
        #[arg(long)]
        grids: Option<String>,
    },
    /// Sum rate versus outer iterations of the alternating solver.
    SweepIters {
        #[command(flatten)]
        common: Common,
        /// Iteration counts as `start:step:end`.
        #[arg(long)]
        iters: Option<String>,
    },
    /// Run the experiment exactly as described by the config file.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// One trial with per-step solver traces.
    SolveOnce {
        #[command(flatten)]
        common: Common,
        /// Method to run; all methods when omitted.
        #[arg(long)]
        method: Option<String>,
        /// Trial index whose channel draw is used.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Numerical, structural and exhaustive-agreement self checks.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment description; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "FCLA_OUT_DIR", default_value = "fcla-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Directional pattern sharpness.
    #[arg(long, conflicts_with = "omni")]
    kappa: Option<f64>,
    /// Omnidirectional elements.
    #[arg(long)]
    omni: bool,
    /// Grid size G = G_H = G_V.
    #[arg(long)]
    grid: Option<usize>,
    /// Fixed SNR in dB when SNR is not swept.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Outer iterations of the alternating solver.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    rings: Option<usize>,
    #[arg(long)]
    per_ring: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    carrier_hz: Option<f64>,
    #[arg(long)]
    noise_var: Option<f64>,
    /// Minimum element spacing in meters.
    #[arg(long)]
    d_min: Option<f64>,
    /// Regularization: `mmse` or a non-negative number.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated subset of ucla,fcla-j,fcla-a.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Atom matching norm: `l2` or `l1`.
    #[arg(long)]
    matching: Option<String>,
    /// Maximum worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let file = File::open(path).with_context(|| format!("cannot open config {}", path.display()))?;
                serde_json::from_reader(file).with_context(|| format!("cannot parse config {}", path.display()))?
            }
            None => ExperimentSpec::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    spec.$field = v;
                }
            )*};
        }
        set!(seed, trials, grid, snr_db, iterations, rings, per_ring, users, paths, carrier_hz, noise_var);
        if let Some(d) = self.d_min {
            spec.d_min = Some(d);
        }
        if self.omni {
            spec.pattern = Pattern::Omni;
        } else if let Some(kappa) = self.kappa {
            spec.pattern = Pattern::Directional { kappa };
        }
        if let Some(a) = &self.alpha {
            spec.alpha = match a.as_str() {
                "mmse" => AlphaRule::Mmse,
                v => AlphaRule::Fixed {
                    value: v.parse().with_context(|| format!("bad --alpha `{v}`"))?,
                },
            };
        }
        if let Some(methods) = &self.methods {
            spec.methods = methods.iter().map(|m| m.parse()).collect::<fcla_core::Result<_>>()?;
        }
        if let Some(m) = &self.matching {
            spec.matching = match m.as_str() {
                "l2" => MatchingNorm::SquaredL2,
                "l1" => MatchingNorm::L1,
                other => bail!("bad --matching `{other}`, expected l2 or l1"),
            };
        }
        Ok(spec)
    }
}

/// Parses `start:step:end` (inclusive) or a single value.
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in range `{text}`")))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, step, end] => {
            if !(step > 0.0) || end < start {
                bail!("range `{text}` needs a positive step and start <= end");
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => bail!("range `{text}` must be `start:step:end` or a single value"),
    }
}

fn parse_counts(text: &str) -> Result<Vec<usize>> {
    parse_range(text)?
        .into_iter()
        .map(|v| {
            if v < 0.0 || v.fract() != 0.0 {
                bail!("`{text}` must contain non-negative integers");
            }
            Ok(v as usize)
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_manifest(dir: &Path, spec: &ExperimentSpec) -> Result<()> {
    Manifest::new(spec).write(create(dir, "manifest.json")?)?;
    Ok(())
}

fn run_experiment(common: &Common, spec: ExperimentSpec) -> Result<()> {
    spec.validate()?;
    fs::create_dir_all(&common.out).with_context(|| format!("cannot create {}", common.out.display()))?;
    let report = run_sweep_with_jobs(&spec, common.jobs)?;
    report.table.write_csv(create(&common.out, "results.csv")?)?;
    write_manifest(&common.out, &spec)?;
    for f in &report.failures {
        eprintln!("warning: {}={} trial {} dropped: {}", spec.sweep_var(), f.value, f.trial, f.message);
    }
    for row in &report.table.rows {
        println!(
            "{:7} {}={:<6} mean {:8.4} bits  stderr {:.4}  trials {}",
            row.method.name(),
            row.sweep_var,
            row.sweep_value,
            row.mean_sum_rate_bits,
            row.stderr,
            row.trials
        );
    }
    println!("wrote {}", common.out.join("results.csv").display());
    Ok(())
}

/// Replaces the sweep unless the config already sweeps the same variable.
fn choose_sweep(spec: &mut ExperimentSpec, given: Option<Sweep>, keep: fn(&Sweep) -> bool, default: Sweep) {
    spec.sweep = match (given, spec.sweep.take()) {
        (Some(s), _) => Some(s),
        (None, Some(s)) if keep(&s) => Some(s),
        _ => Some(default),
    };
}

fn print_solution(method: Method, sol: &PlacementSolution, rate: f64) {
    println!("{method}: sum rate {rate:.4} bits, objective {:.6}, iterations {}", sol.objective, sol.iterations);
    for (m, ring) in sol.rings.iter().enumerate() {
        println!("  ring {m}: z[{}] = {:.4} m, angles {:?}", ring.z_index, ring.z, ring.psi_indices);
    }
    for rec in &sol.trace.outer {
        println!("  outer {}: sum rate {:.4}, objective {:.6}", rec.iteration, rec.sum_rate, rec.objective);
    }
}

fn solve_once(common: &Common, method: Option<&str>, trial: usize) -> Result<()> {
    let spec = common.spec()?;
    spec.validate()?;
    let methods = match method {
        Some(m) => vec![m.parse::<Method>()?],
        None => spec.methods.clone(),
    };
    let point = spec.points()[0];
    let setup = TrialSetup::new(&spec, &point)?;
    let users = draw_paths(spec.users, spec.paths, trial_seed(spec.seed, trial));
    let out = &common.out;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_paths_json(&users, create(out, "paths.json")?)?;
    write_manifest(out, &spec)?;
    for method in methods {
        match method {
            Method::Ucla => {
                let base = ucla_baseline(&users, &setup.config, &setup.opts)?;
                println!("ucla: sum rate {:.4} bits", base.rates.sum_rate);
            }
            Method::FclaJ | Method::FclaA => {
                let sol = if method == Method::FclaJ {
                    setup.solve_joint(&users)?
                } else {
                    setup.solve_alternating(&users)?
                };
                let rate = setup.run_method(method, &users)?;
                print_solution(method, &sol, rate);
                sol.trace.write_step_csv(create(out, &format!("trace-{method}.csv"))?)?;
                if method == Method::FclaA {
                    sol.trace.write_convergence_csv(create(out, "convergence-fcla-a.csv")?)?;
                }
                serde_json::to_writer_pretty(create(out, &format!("placement-{method}.json"))?, &sol.rings)?;
            }
        }
    }
    println!("wrote traces to {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SweepSnr { common, snr } => {
            let mut spec = common.spec()?;
            let given = snr.as_deref().map(parse_range).transpose()?.map(Sweep::Snr);
            let default = Sweep::Snr(parse_range("-6:2:6")?);
            choose_sweep(&mut spec, given, |s| matches!(s, Sweep::Snr(_)), default);
            run_experiment(&common, spec)?;
        }
        Command::SweepGrid { common, grids } => {
            let mut spec = common.spec()?;
            let given = grids.as_deref().map(parse_counts).transpose()?.map(Sweep::Grid);
            choose_sweep(&mut spec, given, |s| matches!(s, Sweep::Grid(_)), Sweep::Grid((4..=12).collect()));
            run_experiment(&common, spec)?;
        }
        Command::SweepIters { common, iters } => {
            let mut spec = common.spec()?;
            let given = iters.as_deref().map(parse_counts).transpose()?.map(Sweep::Iterations);
            let default = Sweep::Iterations((1..=10).collect());
            choose_sweep(&mut spec, given, |s| matches!(s, Sweep::Iterations(_)), default);
            run_experiment(&common, spec)?;
        }
        Command::Run { common } => {
            let spec = common.spec()?;
            run_experiment(&common, spec)?;
        }
        Command::SolveOnce { common, method, trial } => solve_once(&common, method.as_deref(), trial)?,
        Command::Validate { seed } => {
            let reports = run_all(seed);
            for r in &reports {
                print!("{r}");
            }
            let ok = reports.iter().all(|r| r.passed());
            println!("{}", if ok { "all suites passed" } else { "some suites FAILED" });
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-6:2:6").unwrap(), vec![-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0]);
        assert_eq!(parse_range("3").unwrap(), vec![3.0]);
        assert_eq!(parse_range("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_range("1:0:2").is_err());
        assert!(parse_range("2:1:1").is_err());
        assert!(parse_range("a:1:2").is_err());
        assert!(parse_range("1:2").is_err());
        assert_eq!(parse_counts("4:2:10").unwrap(), vec![4, 6, 8, 10]);
        assert!(parse_counts("1.5").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"trials": 9, "grid": 6, "seed": 3}"#).unwrap();
        let cli = Cli::parse_from(["fcla", "run", "--config", path.to_str().unwrap(), "--trials", "4", "--omni", "--alpha", "0.5"]);
        let Command::Run { common } = cli.command else { panic!() };
        let spec = common.spec().unwrap();
        assert_eq!(spec.trials, 4);
        assert_eq!(spec.grid, 6);
        assert_eq!(spec.seed, 3);
        assert_eq!(spec.pattern, Pattern::Omni);
        assert_eq!(spec.alpha, AlphaRule::Fixed { value: 0.5 });
    }

    #[test]
    fn sweep_selection() {
        let mut spec = ExperimentSpec { sweep: Some(Sweep::Grid(vec![5])), ..ExperimentSpec::default() };
        choose_sweep(&mut spec, None, |s| matches!(s, Sweep::Snr(_)), Sweep::Snr(vec![0.0]));
        assert_eq!(spec.sweep, Some(Sweep::Snr(vec![0.0])));
        spec.sweep = Some(Sweep::Snr(vec![1.0, 2.0]));
        choose_sweep(&mut spec, None, |s| matches!(s, Sweep::Snr(_)), Sweep::Snr(vec![0.0]));
        assert_eq!(spec.sweep, Some(Sweep::Snr(vec![1.0, 2.0])));
    }
}
