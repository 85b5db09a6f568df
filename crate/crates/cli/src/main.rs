//! `safegp`: run the closed-loop studies, time the model update, and run the
//! property suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use safegp_sim::bench::{run_bench, BenchConfig};
use safegp_sim::verify::{run_verify, Fault};
use safegp_sim::{build_scenario, run, Case, RunConfig, ScenarioKind, SimConfig, SimError, SimTrace, Summary, SummaryWindows};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SIMULATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "safegp", version, about = "Safe control with a fixed-budget streaming GP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario under one estimate-wiring case.
    Run(RunArgs),
    /// Time recursive against recomputed updates over a budget sweep.
    Bench(BenchArgs),
    /// Run the property suites; exit 1 if any fails.
    Verify(VerifyArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: String,
    /// 1: adaptive, 2: frozen desired control, 3: frozen constraint.
    #[arg(long)]
    case: u8,
    /// TOML file overriding any default parameter.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; results go to `<out>/<scenario>-case<k>`.
    #[arg(long, env = "SAFEGP_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output root; the report goes to `<out>/bench.json`.
    #[arg(long, env = "SAFEGP_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    None,
    CorruptInverse,
    PrintedVarsigma,
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none", hide = true)]
    fault: FaultArg,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, SimError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| SimError::io(p, e))?;
            RunConfig::from_toml(&text).map_err(|e| match e {
                SimError::Config(m) => SimError::Config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), SimError> {
    fs::write(path, text).map_err(|e| SimError::io(path, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write(path, &(text + "\n"))
}

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn write_partial(dir: &Path, cfg: &RunConfig, trace: &SimTrace) -> Result<(), SimError> {
    trace.save(&dir.join("trace.csv"))?;
    write(&dir.join("effective_config.toml"), &cfg.to_toml())
}

fn run_command(args: RunArgs) -> ExitCode {
    let prepared = (|| -> Result<_, SimError> {
        let kind: ScenarioKind = args.scenario.parse()?;
        let case = Case::from_id(args.case)?;
        let mut cfg = load_config(args.config.as_deref())?;
        if let Some(seed) = args.seed {
            cfg.sim.seed = seed;
        }
        let scenario = build_scenario(kind, &cfg)?;
        let dir = args.out.join(format!("{kind}-case{}", case.id()));
        fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
        Ok((kind, case, cfg, scenario, dir))
    })();
    let (kind, case, cfg, mut scenario, dir) = match prepared {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let sim = SimConfig::new(&cfg.sim, scenario.duration());
    let output = match run(scenario.as_mut(), case, &sim) {
        Ok(o) => o,
        Err(SimError::Simulation { t, message, trace }) => {
            if let Err(e) = write_partial(&dir, &cfg, &trace) {
                eprintln!("error: could not write partial trace: {e}");
            }
            return fail(EXIT_SIMULATION, format!("simulation failed at t = {t}: {message} ({} rows kept)", trace.len()));
        }
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let windows = SummaryWindows { tracking_start: cfg.sim.tracking_start, steady_state_start: cfg.sim.steady_state_start };
    let summary = Summary::from_trace(&output.trace, windows);
    let written = (|| -> Result<(), SimError> {
        write_partial(&dir, &cfg, &output.trace)?;
        write(&dir.join("summary.json"), &(summary.to_json() + "\n"))?;
        write_json(&dir.join("timing.json"), &output.timing)?;
        for fig in scenario.figures() {
            output.trace.select(&fig.columns)?.save(&dir.join(fig.file))?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        return fail(EXIT_CONFIG, e);
    }
    println!("{kind} case {}: {} steps written to {}", case.id(), output.trace.len(), dir.display());
    if let Some(v) = summary.min_psi0 {
        println!("  min psi0            {v:.6e}");
    }
    println!("  min psi             {:.6e}", summary.min_psi);
    if let Some(v) = summary.tracking_rms {
        println!("  tracking rms        {v:.6e}");
    }
    println!("  bound violations    {}", summary.bound_violations);
    println!("  active fraction     {:.4}", summary.active_fraction);
    println!("  median update       {:.3e} s", output.timing.median_update_s);
    ExitCode::SUCCESS
}

fn bench_command(args: BenchArgs) -> ExitCode {
    let cfg = BenchConfig { budgets: args.budgets, steps: args.steps, rounds: args.rounds, seed: args.seed, ..BenchConfig::default() };
    let report = match run_bench(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    println!("{:>6} {:>14} {:>14} {:>9}", "p", "recursive [s]", "batch [s]", "speedup");
    for r in &report.rows {
        println!("{:>6} {:>14.3e} {:>14.3e} {:>9.1}", r.budget, r.recursive_median_s, r.batch_median_s, r.speedup);
    }
    println!("log-log slope: recursive {:.2}, batch {:.2}", report.recursive_slope, report.batch_slope);
    let written = fs::create_dir_all(&args.out)
        .map_err(|e| SimError::io(&args.out, e))
        .and_then(|_| write_json(&args.out.join("bench.json"), &report));
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_CONFIG, e),
    }
}

fn verify_command(args: VerifyArgs) -> ExitCode {
    let cfg = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let fault = match args.fault {
        FaultArg::None => Fault::None,
        FaultArg::CorruptInverse => Fault::CorruptInverse,
        FaultArg::PrintedVarsigma => Fault::PrintedVarsigma,
    };
    let report = match run_verify(&cfg, fault) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_VERIFY, e),
    };
    for s in &report.suites {
        let status = if s.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<24} worst {:.3e} (tol {:.1e}, {} checks): {}", s.name, s.worst, s.tolerance, s.checks, s.detail);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(a) => run_command(a),
        Command::Bench(a) => bench_command(a),
        Command::Verify(a) => verify_command(a),
    }
}
