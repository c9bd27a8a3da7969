//! Command-line front end.
//!
//! Every flag may also come from a JSON object passed with `--config`; keys
//! are the long flag names with `-` replaced by `_`, and flags given on the
//! command line win. Exit codes: 0 success, 1 usage error, 2 numeric
//! failure, 3 invalid argument, configuration or file.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::analysis::{capacity_gap_table, quantization_bound_check, quantization_preconditions, scaling_fit, write_gap_csv};
use crate::awgn::AwgnMac;
use crate::codec::{end_to_end_trial, CodeSpec, TrialOptions};
use crate::constellation::build_constellation;
use crate::construction::{
    estimate_reliability_with, select_info_sets_calibrated, select_info_sets_md, select_info_sets_rate, select_info_sets_se,
    union_bound, ReliabilityTable,
};
use crate::error::Error;
use crate::harness::{gap_plot, read_sim_csv, run_simulation_with, run_sweep, write_sim_csv, SweepConfig};

#[derive(Parser, Debug)]
#[command(name = "polar-awgn", version, about = "Multilevel polar codes for the AWGN channel")]
struct Cli {
    /// JSON file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate all Bhattacharyya parameters and write a reliability table.
    Construct(ConstructArgs),
    /// Pick information sets from a table and write a code spec.
    Select(SelectArgs),
    /// Simulate a code spec end to end.
    Simulate(SimulateArgs),
    /// Construct, select and simulate over several block lengths.
    Sweep(SweepArgs),
    /// Capacity gaps, bound checks and scaling fits.
    Analyze(AnalyzeArgs),
    /// Small self-contained run printed to stdout.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Reliability table CSV.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// se, md, rate or calibrated.
    #[arg(long)]
    rule: Option<String>,
    /// Target rate in bits per channel use (rule `rate`).
    #[arg(long)]
    rate: Option<f64>,
    /// Largest union bound (rule `calibrated`).
    #[arg(long)]
    target: Option<f64>,
    /// γ of the MD threshold; defaults to --gamma.
    #[arg(long)]
    md_gamma: Option<f64>,
    /// Exponent ν of the SE threshold n^-ν.
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Code spec JSON.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    /// Defaults to the code's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Disable the power clamp.
    #[arg(long)]
    no_clamp: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every trial record as a JSON line.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated block lengths.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    construction_trials: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// SimReport CSV whose rates fill the rate-gap columns.
    #[arg(long)]
    sim: Option<PathBuf>,
    /// Also check the quantization bound on the standard grid.
    #[arg(long)]
    bound_grid: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            1
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {}", e);
            match e {
                Error::NumericFailure(_) => 2,
                _ => 3,
            }
        }
    }
}

struct Config(serde_json::Map<String, serde_json::Value>);

impl Config {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Config(Default::default())) };
        let text = fs::read_to_string(path)?;
        match serde_json::from_str(&text)? {
            serde_json::Value::Object(map) => Ok(Config(map)),
            _ => Err(Error::Format(format!("{}: config must be a JSON object", path.display())).into()),
        }
    }

    /// The flag value, else the config entry, else `None`.
    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| Error::Format(format!("config key `{}`: {}", key, e)).into()),
        }
    }

    fn need<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        self.pick(flag, key)?
            .ok_or_else(|| Failure::Usage(format!("missing --{} (flag or config key `{}`)", key.replace('_', "-"), key)))
    }

    fn flag(&self, set: bool, key: &str) -> CliResult<bool> {
        Ok(set || self.pick(None, key)?.unwrap_or(false))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    let workers: Option<usize> = cfg.pick(cli.workers, "workers")?;
    match cli.cmd {
        Command::Construct(a) => construct(&cfg, a, workers),
        Command::Select(a) => select(&cfg, a),
        Command::Simulate(a) => simulate(&cfg, a, workers),
        Command::Sweep(a) => sweep(&cfg, a, workers),
        Command::Analyze(a) => analyze(&cfg, a),
        Command::Demo(a) => demo(&cfg, a, workers),
    }
}

fn construct(cfg: &Config, a: ConstructArgs, workers: Option<usize>) -> CliResult<()> {
    let n = cfg.need(a.n, "n")?;
    let power = cfg.need(a.power, "power")?;
    let gamma = cfg.pick(a.gamma, "gamma")?.unwrap_or(0.0);
    let trials = cfg.need(a.trials, "trials")?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(1);
    let out: PathBuf = cfg.need(a.out, "out")?;
    let c = build_constellation(n, power, gamma)?;
    let table = estimate_reliability_with(&AwgnMac::new(c), n, trials, seed, workers)?;
    table.write_csv(fs::File::create(&out)?)?;
    println!("wrote {} entries to {}", table.entries().len(), out.display());
    Ok(())
}

fn select(cfg: &Config, a: SelectArgs) -> CliResult<()> {
    let path: PathBuf = cfg.need(a.table, "table")?;
    let table = ReliabilityTable::read_csv(BufReader::new(fs::File::open(&path)?))?;
    let power = cfg.need(a.power, "power")?;
    let gamma = cfg.pick(a.gamma, "gamma")?.unwrap_or(0.0);
    let rule: String = cfg.pick(a.rule, "rule")?.unwrap_or_else(|| "calibrated".into());
    let exponent = cfg.pick(a.exponent, "exponent")?.unwrap_or(4.0);
    let sets = match rule.as_str() {
        "se" | "SE" => select_info_sets_se(&table, exponent),
        "md" | "MD" => select_info_sets_md(&table, cfg.pick(a.md_gamma, "md_gamma")?.unwrap_or(gamma))?,
        "rate" => select_info_sets_rate(&table, cfg.need(a.rate, "rate")?)?,
        "calibrated" => select_info_sets_calibrated(&table, cfg.pick(a.target, "target")?.unwrap_or(1e-3))?,
        other => return Err(Failure::Usage(format!("unknown rule `{}`; expected se, md, rate or calibrated", other))),
    };
    let c = build_constellation(table.n(), power, gamma)?;
    if c.levels() != table.levels() {
        return Err(Error::InvalidArgument("table levels do not match the constellation".into()).into());
    }
    let mut spec = CodeSpec::new(c, sets, cfg.pick(a.seed, "seed")?.unwrap_or(1))?;
    spec.se_exponent = exponent;
    spec.union_bound = Some(union_bound(&table, &spec.info_sets)?.value);
    let out: PathBuf = cfg.need(a.out, "out")?;
    fs::write(&out, spec.to_json()?)?;
    println!(
        "rate {:.6} bits/use, union bound {:.3e}, digest {}; wrote {}",
        spec.rate(),
        spec.union_bound.unwrap_or(f64::NAN),
        spec.digest(),
        out.display()
    );
    Ok(())
}

fn simulate(cfg: &Config, a: SimulateArgs, workers: Option<usize>) -> CliResult<()> {
    let path: PathBuf = cfg.need(a.code, "code")?;
    let spec = CodeSpec::from_json(&fs::read_to_string(&path)?)?;
    let trials = cfg.need(a.trials, "trials")?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(spec.master_seed);
    let opts = TrialOptions {
        noise_std: cfg.pick(a.noise_std, "noise_std")?.unwrap_or(1.0),
        clamp: !cfg.flag(a.no_clamp, "no_clamp")?,
    };
    let dump_path: Option<PathBuf> = cfg.pick(a.dump, "dump")?;
    let mut dump_file = match &dump_path {
        Some(p) => Some(std::io::BufWriter::new(fs::File::create(p)?)),
        None => None,
    };
    let report = run_simulation_with(&spec, trials, seed, workers, opts, dump_file.as_mut().map(|f| f as &mut (dyn Write + Send)))?;
    if let Some(mut f) = dump_file {
        f.flush()?;
    }
    let out: Option<PathBuf> = cfg.pick(a.out, "out")?;
    match out {
        Some(p) => write_sim_csv(fs::File::create(p)?, std::slice::from_ref(&report))?,
        None => write_sim_csv(std::io::stdout().lock(), std::slice::from_ref(&report))?,
    }
    eprintln!(
        "{} / {} block errors ({:.3e} ± {:.1e}), clamp frequency {:.4}",
        report.errors,
        report.trials,
        report.err_rate(),
        report.err_stderr(),
        report.clamp_freq()
    );
    Ok(())
}

fn sweep(cfg: &Config, a: SweepArgs, workers: Option<usize>) -> CliResult<()> {
    let d = SweepConfig::default();
    let sc = SweepConfig {
        n_list: cfg.pick(a.n_list, "n_list")?.unwrap_or(d.n_list),
        power: cfg.pick(a.power, "power")?.unwrap_or(d.power),
        gamma: cfg.pick(a.gamma, "gamma")?.unwrap_or(d.gamma),
        construction_trials: cfg.pick(a.construction_trials, "construction_trials")?.unwrap_or(d.construction_trials),
        trials: cfg.pick(a.trials, "trials")?.unwrap_or(d.trials),
        seed: cfg.pick(a.seed, "seed")?.unwrap_or(d.seed),
        target: cfg.pick(a.target, "target")?.unwrap_or(d.target),
        workers,
        out_dir: Some(cfg.need(a.out_dir, "out_dir")?),
    };
    let res = run_sweep(&sc)?;
    for r in &res.reports {
        println!(
            "n = {:5}: rate {:.4}, errors {}/{} ({:.2e}), union bound {:.2e}, gap {:.4}",
            r.n,
            r.rate,
            r.errors,
            r.trials,
            r.err_rate(),
            r.union_bound.unwrap_or(f64::NAN),
            r.gap
        );
    }
    if let Some(f) = res.fit {
        println!("rate-gap fit: mu_hat {:.3}, slope {:.4}, r2 {:.4}", f.mu_hat, f.slope, f.r2);
    }
    Ok(())
}

fn analyze(cfg: &Config, a: AnalyzeArgs) -> CliResult<()> {
    let n_list: Vec<usize> = cfg.pick(a.n_list, "n_list")?.unwrap_or_else(|| vec![64, 256, 1024, 4096]);
    let power = cfg.pick(a.power, "power")?.unwrap_or(1.0);
    let gamma = cfg.pick(a.gamma, "gamma")?.unwrap_or(0.0);
    let mut gaps = capacity_gap_table(&n_list, power, gamma)?;
    let sim: Option<PathBuf> = cfg.pick(a.sim, "sim")?;
    if let Some(p) = sim {
        for (n, rate, err) in read_sim_csv(BufReader::new(fs::File::open(p)?))? {
            if let Some(g) = gaps.iter_mut().find(|g| g.n == n) {
                *g = g.clone().with_rate(rate, err);
            }
        }
    }
    for g in &gaps {
        println!("n = {:5}: C - I = {:.6e}{}", g.n, g.gap_mi, g.gap_rate.map(|r| format!(", C - rate = {:.6e}", r)).unwrap_or_default());
    }
    let mi_pts: Vec<(usize, f64)> = gaps.iter().map(|g| (g.n, g.gap_mi)).collect();
    let mi_fit = if mi_pts.len() >= 3 { Some(scaling_fit(&mi_pts)?) } else { None };
    let rate_pts: Vec<(usize, f64)> = gaps.iter().filter_map(|g| g.gap_rate.map(|r| (g.n, r))).collect();
    let rate_fit = if rate_pts.len() >= 3 { Some(scaling_fit(&rate_pts)?) } else { None };
    if let Some(f) = mi_fit {
        println!("mi-gap fit: slope {:.4}, mu_hat {:.3}, r2 {:.4}", f.slope, f.mu_hat, f.r2);
    }
    if let Some(f) = rate_fit {
        println!("rate-gap fit: slope {:.4}, mu_hat {:.3}, r2 {:.4}", f.slope, f.mu_hat, f.r2);
    }
    if cfg.flag(a.bound_grid, "bound_grid")? {
        for n in [64, 256, 1024, 4096] {
            for p in [0.5, 1.0, 4.0] {
                for g in [0.0, 0.5] {
                    let why = quantization_preconditions(n, p, g);
                    if why.is_empty() {
                        let b = quantization_bound_check(n, p, g)?;
                        println!("bound n={} P={} gamma={}: lhs {:.4e} rhs {:.4e} holds {}", n, p, g, b.lhs, b.rhs, b.holds);
                    } else {
                        println!("bound n={} P={} gamma={}: skipped ({})", n, p, g, why.join("; "));
                    }
                }
            }
        }
    }
    let out: Option<PathBuf> = cfg.pick(a.out, "out")?;
    if let Some(p) = out {
        write_gap_csv(fs::File::create(p)?, &gaps)?;
    }
    let plot: Option<PathBuf> = cfg.pick(a.plot, "plot")?;
    if let Some(p) = plot {
        fs::write(p, gap_plot(&gaps, rate_fit, mi_fit))?;
    }
    Ok(())
}

fn demo(cfg: &Config, a: DemoArgs, workers: Option<usize>) -> CliResult<()> {
    let n = cfg.pick(a.n, "n")?.unwrap_or(16);
    let power = cfg.pick(a.power, "power")?.unwrap_or(16.0);
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(1);
    let c = build_constellation(n, power, 0.0)?;
    println!("constellation n = {}, P = {}, shaping variance {:.6}", n, power, c.shaping_variance());
    for p in c.points() {
        println!("  {} -> {:+.6}{}", c.label_string(p.label), p.amplitude, if p.is_negative_origin { " (0-)" } else { "" });
    }
    let table = estimate_reliability_with(&AwgnMac::new(c.clone()), n, 4000, seed, workers)?;
    let sets = select_info_sets_calibrated(&table, 1e-2)?;
    let mut spec = CodeSpec::new(c, sets, seed)?;
    spec.union_bound = Some(union_bound(&table, &spec.info_sets)?.value);
    println!("selected {} information bits, rate {:.4}, union bound {:.3e}", spec.info_sets.total(), spec.rate(), spec.union_bound.unwrap_or(0.0));
    let rec = end_to_end_trial(&spec, 0, seed)?;
    println!("trial 0: sent {:?}", rec.sent_symbols.iter().map(|x| format!("{:+.3}", x)).collect::<Vec<_>>());
    println!("trial 0: block error {}, clamped positions {:?}", rec.block_error, rec.clamp_positions);
    let report = run_simulation_with(&spec, 2000, seed, workers, TrialOptions::default(), None)?;
    println!("2000 trials: {} block errors, clamp frequency {:.4}", report.errors, report.clamp_freq());
    Ok(())
}
