use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polymer_lab::charges::{ChargeFeed, ChargeModel, DurationMode};
use polymer_lab::experiments::{self, ExperimentConfig, ExperimentId, Profile};
use polymer_lab::hamiltonian::{run_polymer, Checkpoints, HamiltonianTrace};
use polymer_lab::lattice::{kappa_quadrature, kappa_series};
use polymer_lab::replicates::with_threads;
use polymer_lab::walk::WalkConfig;
use polymer_lab::LabError;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "polymer-lab", version, about = "Monte Carlo experiments for charged random-walk polymers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run size.
    #[arg(long, global = true, default_value = "full", value_parser = parse_profile)]
    profile: Profile,
}

#[derive(Subcommand)]
enum Command {
    /// Trace H, V, Ξ and I along one walk per dimension and replicate.
    Simulate {
        /// Walk dimension(s); defaults to the config or 1.
        #[arg(short, long, value_delimiter = ',')]
        dim: Option<Vec<usize>>,
        /// Number of steps; defaults to the config's largest n or 10^5.
        #[arg(short, long)]
        steps: Option<u64>,
    },
    /// Return-mass constant κ of the simple walk by series and quadrature.
    Kappa {
        #[arg(short, long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Run one experiment.
    Run {
        /// exactness, kappa or E1..E7; may come from --config instead.
        experiment: Option<String>,
    },
    /// Run every experiment and score the acceptance criteria.
    VerifyAll,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: LabError| e.to_string())
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("polymer-lab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// `Ok(passed)` or the error that stopped the run.
fn dispatch(cli: &Cli) -> polymer_lab::Result<bool> {
    let cfg = match &cli.common.config {
        Some(path) => Some(ExperimentConfig::load(path)?),
        None => None,
    };
    let threads = cli.common.threads.or(cfg.as_ref().and_then(|c| c.threads)).unwrap_or(0);
    let work = || match &cli.command {
        Command::Simulate { dim, steps } => simulate(&cli.common, cfg.as_ref(), dim.as_deref(), *steps),
        Command::Kappa { dim, tol } => kappa(*dim, *tol),
        Command::Run { experiment } => run_one(&cli.common, cfg.clone(), experiment.as_deref()),
        Command::VerifyAll => verify(&cli.common, cfg.as_ref()),
    };
    with_threads(threads, work).map_err(|e| LabError::Config(format!("cannot start {threads} threads: {e}")))?
}

fn out_dir(common: &Common, cfg: Option<&ExperimentConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn simulate(common: &Common, cfg: Option<&ExperimentConfig>, dims: Option<&[usize]>, steps: Option<u64>) -> polymer_lab::Result<bool> {
    let default = ExperimentConfig::default();
    let c = cfg.unwrap_or(&default);
    let dims = dims.map(<[usize]>::to_vec).unwrap_or_else(|| c.dimensions_or(&[1]));
    let n = steps.or_else(|| c.n_values.as_ref().and_then(|v| v.last().copied())).unwrap_or(100_000);
    if n == 0 {
        return Err(LabError::Config("steps must be positive".into()));
    }
    let seed = common.seed.unwrap_or_else(|| c.seed());
    let model = c.model_or(ChargeModel::rademacher())?;
    let mode = c.duration_mode_or(DurationMode::Unit)?;
    let replicates = c.replicates_or(1);
    let dir = out_dir(common, cfg);
    fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
    let cp = Checkpoints::default_geometric(n);
    for &d in &dims {
        model.validate_for_dimension(d)?;
        let path = dir.join(format!("simulate_d{d}.csv"));
        let mut w = BufWriter::new(File::create(&path).map_err(|e| LabError::io(&path, e))?);
        writeln!(w, "{}", HamiltonianTrace::CSV_HEADER).map_err(|e| LabError::io(&path, e))?;
        for r in 0..replicates {
            let mut feed = ChargeFeed::new(&model, mode, seed, r)?;
            let run = run_polymer(&WalkConfig::new(d, n, seed).replicate(r), &mut feed, &cp)?;
            run.trace.write_csv(&mut w, "simulate", r).map_err(|e| LabError::io(&path, e))?;
            let last = run.trace.last;
            println!(
                "d={d} replicate={r} n={n}: H={:.6} V={:.6} Xi={:.6} I={} sites={}",
                last.h,
                last.v,
                last.xi,
                last.i,
                run.occupancy.len()
            );
        }
        w.flush().map_err(|e| LabError::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

fn kappa(dim: usize, tol: f64) -> polymer_lab::Result<bool> {
    let series = kappa_series(dim, tol)?;
    let quad = kappa_quadrature(dim)?;
    println!("kappa d={dim}: series {series:.8}  quadrature {quad:.8}  difference {:.2e}", series - quad);
    Ok(true)
}

fn run_one(common: &Common, cfg: Option<ExperimentConfig>, experiment: Option<&str>) -> polymer_lab::Result<bool> {
    let mut cfg = match (cfg, experiment) {
        (Some(c), Some(name)) => {
            if c.id()? != name.parse::<ExperimentId>()? {
                return Err(LabError::Config(format!("config is for {}, not {name}", c.experiment)));
            }
            c
        }
        (Some(c), None) => c,
        (None, Some(name)) => ExperimentConfig::for_experiment(name.parse()?),
        (None, None) => return Err(LabError::Config("name an experiment or pass --config".into())),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = Some(seed);
    }
    let dir = out_dir(common, Some(&cfg));
    check_writable(&dir)?;
    let report = experiments::run(&cfg, common.profile)?;
    report.write_to_dir(&dir)?;
    let mut footer = String::from("\n");
    for c in experiments::criterion_outcomes(&report) {
        footer.push_str(&c.line());
        footer.push('\n');
    }
    experiments::write_summary(&dir, std::slice::from_ref(&report), &footer)?;
    print!("{}{footer}", report.summary());
    println!("wrote {}", dir.join(format!("{}.csv", report.experiment)).display());
    Ok(report.passed())
}

fn verify(common: &Common, cfg: Option<&ExperimentConfig>) -> polymer_lab::Result<bool> {
    let seed = common.seed.or(cfg.and_then(|c| c.master_seed)).unwrap_or(experiments::DEFAULT_SEED);
    let dir = out_dir(common, cfg);
    check_writable(&dir)?;
    let outcome = experiments::verify_all(common.profile, seed, Some(&dir), |c| println!("{}", c.line()))?;
    println!("overall: {}", if outcome.passed() { "PASS" } else { "FAIL" });
    println!("wrote {}", dir.join("summary.txt").display());
    Ok(outcome.passed())
}

/// Fail before hours of simulation rather than after.
fn check_writable(dir: &Path) -> polymer_lab::Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| LabError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| LabError::io(&probe, e))
}
