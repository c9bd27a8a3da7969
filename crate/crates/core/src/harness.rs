//! Reproducible simulations and sweeps over the block length.
//!
//! Trials are grouped into fixed chunks and the chunks into fixed batches;
//! each batch is mapped in parallel and folded in index order, so reports do
//! not depend on the worker count.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{gap_point, scaling_fit, write_gap_csv, GapPoint, ScalingFit};
use crate::awgn::{channel_capacity, AwgnMac};
use crate::codec::{end_to_end_trial_with, CodeSpec, Decoder, TransmissionRecord, TrialOptions};
use crate::constellation::build_constellation;
use crate::construction::{estimate_reliability_with, select_info_sets_calibrated, union_bound, with_workers, ReliabilityTable};
use crate::error::{invalid, Error, Result};
use crate::fmt_real;
use crate::svg;

const CHUNK: usize = 16;
const BATCH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub spec_digest: String,
    pub n: usize,
    pub power: f64,
    pub gamma: f64,
    pub rate: f64,
    pub trials: u64,
    pub errors: u64,
    /// Block errors per level.
    pub level_errors: Vec<u64>,
    /// Trials in which at least one symbol was clamped to 0.
    pub clamped_trials: u64,
    /// Largest `(1/n) Σ x²` over all transmitted blocks.
    pub peak_mean_energy: f64,
    pub union_bound: Option<f64>,
    /// `C(P) - rate`.
    pub gap: f64,
}

impl SimReport {
    pub fn err_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// Binomial standard error of [`err_rate`](Self::err_rate).
    pub fn err_stderr(&self) -> f64 {
        let p = self.err_rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn clamp_freq(&self) -> f64 {
        self.clamped_trials as f64 / self.trials as f64
    }
}

pub const SIM_CSV_HEADER: &str = "spec_digest,n,P,gamma,rate,trials,errors,err_rate,err_stderr,clamp_freq,union_bound,gap";

pub fn write_sim_csv<W: Write>(mut w: W, reports: &[SimReport]) -> Result<()> {
    writeln!(w, "{}", SIM_CSV_HEADER)?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.spec_digest,
            r.n,
            fmt_real(r.power),
            fmt_real(r.gamma),
            fmt_real(r.rate),
            r.trials,
            r.errors,
            fmt_real(r.err_rate()),
            fmt_real(r.err_stderr()),
            fmt_real(r.clamp_freq()),
            r.union_bound.map(fmt_real).unwrap_or_default(),
            fmt_real(r.gap),
        )?;
    }
    Ok(())
}

/// Rows of a SimReport CSV as `(n, rate, err_rate)`; enough to rebuild gap
/// points from a finished simulation.
pub fn read_sim_csv<R: BufRead>(r: R) -> Result<Vec<(usize, f64, f64)>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(h) if h.as_deref().map(str::trim).ok() == Some(SIM_CSV_HEADER) => {}
        _ => return Err(Error::Format(format!("expected header `{}`", SIM_CSV_HEADER))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(Error::Format(format!("line {}: expected 12 columns, got {}", i + 2, cols.len())));
        }
        let bad = |c: &str| Error::Format(format!("line {}: bad {}", i + 2, c));
        let n = cols[1].parse().map_err(|_| bad("n"))?;
        let rate = cols[4].parse().map_err(|_| bad("rate"))?;
        let err = cols[7].parse().map_err(|_| bad("err_rate"))?;
        rows.push((n, rate, err));
    }
    Ok(rows)
}

#[derive(Clone, Debug, Default)]
struct Tally {
    errors: u64,
    level_errors: Vec<u64>,
    clamped: u64,
    peak: f64,
}

impl Tally {
    fn add(&mut self, rec: &TransmissionRecord) {
        if self.level_errors.len() < rec.level_errors.len() {
            self.level_errors.resize(rec.level_errors.len(), 0);
        }
        self.errors += rec.block_error as u64;
        for (c, &e) in self.level_errors.iter_mut().zip(&rec.level_errors) {
            *c += e as u64;
        }
        self.clamped += !rec.clamp_positions.is_empty() as u64;
        let energy = rec.sent_symbols.iter().map(|x| x * x).sum::<f64>() / rec.sent_symbols.len() as f64;
        self.peak = self.peak.max(energy);
    }

    fn absorb(&mut self, other: &Tally) {
        if self.level_errors.len() < other.level_errors.len() {
            self.level_errors.resize(other.level_errors.len(), 0);
        }
        self.errors += other.errors;
        for (a, b) in self.level_errors.iter_mut().zip(&other.level_errors) {
            *a += b;
        }
        self.clamped += other.clamped;
        self.peak = self.peak.max(other.peak);
    }
}

pub fn run_simulation(spec: &CodeSpec, trials: u64, seed: u64, workers: Option<usize>) -> Result<SimReport> {
    run_simulation_with(spec, trials, seed, workers, TrialOptions::default(), None)
}

/// Runs trials `0..trials`. When `dump` is given every transmission record
/// is written to it as one JSON line, in trial order.
pub fn run_simulation_with(
    spec: &CodeSpec,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
    opts: TrialOptions,
    mut dump: Option<&mut (dyn Write + Send)>,
) -> Result<SimReport> {
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let keep = dump.is_some();
    let chunks = (trials as usize).div_ceil(CHUNK);
    let mut total = Tally::default();
    let outcome: Result<()> = with_workers(workers, || {
        for start in (0..chunks).step_by(BATCH) {
            let end = (start + BATCH).min(chunks);
            let parts: Vec<Result<(Tally, Vec<TransmissionRecord>)>> = (start..end)
                .into_par_iter()
                .map_init(
                    || Decoder::new(spec),
                    |dec, c| {
                        let mut tally = Tally::default();
                        let mut recs = Vec::new();
                        let lo = (c * CHUNK) as u64;
                        let hi = ((c + 1) * CHUNK).min(trials as usize) as u64;
                        for t in lo..hi {
                            let rec = end_to_end_trial_with(spec, t, seed, opts, dec)?;
                            tally.add(&rec);
                            if keep {
                                recs.push(rec);
                            }
                        }
                        Ok((tally, recs))
                    },
                )
                .collect();
            for part in parts {
                let (tally, recs) = part?;
                total.absorb(&tally);
                if let Some(w) = dump.as_deref_mut() {
                    for rec in &recs {
                        serde_json::to_writer(&mut *w, rec)?;
                        writeln!(w)?;
                    }
                }
            }
        }
        Ok(())
    })?;
    outcome?;
    let capacity = channel_capacity(spec.power())?;
    Ok(SimReport {
        spec_digest: spec.digest(),
        n: spec.n(),
        power: spec.power(),
        gamma: spec.gamma(),
        rate: spec.rate(),
        trials,
        errors: total.errors,
        level_errors: total.level_errors,
        clamped_trials: total.clamped,
        peak_mean_energy: total.peak,
        union_bound: spec.union_bound,
        gap: capacity - spec.rate(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub power: f64,
    pub gamma: f64,
    /// Genie-aided trials per reliability table.
    pub construction_trials: u64,
    /// End-to-end trials per code.
    pub trials: u64,
    pub seed: u64,
    /// Largest union bound accepted by the calibrated selection.
    pub target: f64,
    pub workers: Option<usize>,
    /// When set, every stage writes its artifacts here.
    pub out_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_list: vec![64, 256, 1024],
            power: 1.0,
            gamma: 0.0,
            construction_trials: 2000,
            trials: 10_000,
            seed: 1,
            target: 1e-3,
            workers: None,
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub tables: Vec<ReliabilityTable>,
    pub specs: Vec<CodeSpec>,
    pub reports: Vec<SimReport>,
    pub gaps: Vec<GapPoint>,
    /// Fit of the rate gaps; absent with fewer than three block lengths.
    pub fit: Option<ScalingFit>,
}

/// Construct, select and simulate at every `n`, then fit the rate gaps.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.n_list.is_empty() {
        return invalid("n_list is empty");
    }
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut out = SweepResult { tables: Vec::new(), specs: Vec::new(), reports: Vec::new(), gaps: Vec::new(), fit: None };
    for &n in &cfg.n_list {
        let stage = |e: Error| tag_error(e, n);
        let c = build_constellation(n, cfg.power, cfg.gamma).map_err(stage)?;
        let channel = AwgnMac::new(c.clone());
        let table = estimate_reliability_with(&channel, n, cfg.construction_trials, cfg.seed, cfg.workers).map_err(stage)?;
        let sets = select_info_sets_calibrated(&table, cfg.target).map_err(stage)?;
        let mut spec = CodeSpec::new(c, sets, cfg.seed).map_err(stage)?;
        spec.union_bound = Some(union_bound(&table, &spec.info_sets).map_err(stage)?.value);
        let report = run_simulation(&spec, cfg.trials, cfg.seed, cfg.workers).map_err(stage)?;
        let gap = gap_point(n, cfg.power, cfg.gamma).map_err(stage)?.with_rate(report.rate, report.err_rate());
        if let Some(dir) = &cfg.out_dir {
            table.write_csv(fs::File::create(dir.join(format!("table_n{}.csv", n)))?)?;
            fs::write(dir.join(format!("code_n{}.json", n)), spec.to_json()?)?;
        }
        out.tables.push(table);
        out.specs.push(spec);
        out.reports.push(report);
        out.gaps.push(gap);
    }
    if out.gaps.len() >= 3 && out.gaps.iter().all(|g| g.gap_rate.unwrap_or(0.0) > 0.0) {
        let pts: Vec<(usize, f64)> = out.gaps.iter().map(|g| (g.n, g.gap_rate.unwrap_or(0.0))).collect();
        out.fit = Some(scaling_fit(&pts)?);
    }
    if let Some(dir) = &cfg.out_dir {
        write_sweep_files(dir, &out)?;
    }
    Ok(out)
}

fn tag_error(e: Error, n: usize) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("n = {}: {}", n, m)),
        Error::NumericFailure(m) => Error::NumericFailure(format!("n = {}: {}", n, m)),
        Error::Format(m) => Error::Format(format!("n = {}: {}", n, m)),
        other => other,
    }
}

pub const FIT_CSV_HEADER: &str = "which,mu_hat,slope,intercept,r2";

pub fn write_fit_csv<W: Write>(mut w: W, rows: &[(&str, ScalingFit)]) -> Result<()> {
    writeln!(w, "{}", FIT_CSV_HEADER)?;
    for (which, f) in rows {
        writeln!(w, "{},{},{},{},{}", which, fmt_real(f.mu_hat), fmt_real(f.slope), fmt_real(f.intercept), fmt_real(f.r2))?;
    }
    Ok(())
}

fn write_sweep_files(dir: &Path, res: &SweepResult) -> Result<()> {
    write_sim_csv(fs::File::create(dir.join("sim.csv"))?, &res.reports)?;
    write_gap_csv(fs::File::create(dir.join("gaps.csv"))?, &res.gaps)?;
    let mut fits = Vec::new();
    if let Some(f) = res.fit {
        fits.push(("rate", f));
    }
    let mi: Vec<(usize, f64)> = res.gaps.iter().map(|g| (g.n, g.gap_mi)).collect();
    let mi_fit = if mi.len() >= 3 { scaling_fit(&mi).ok() } else { None };
    if let Some(f) = mi_fit {
        fits.push(("mi", f));
    }
    write_fit_csv(fs::File::create(dir.join("fit.csv"))?, &fits)?;
    fs::write(dir.join("gaps.svg"), gap_plot(&res.gaps, res.fit, mi_fit))?;
    Ok(())
}

/// Log-log chart of the rate and mutual-information gaps with fitted lines.
pub fn gap_plot(gaps: &[GapPoint], rate_fit: Option<ScalingFit>, mi_fit: Option<ScalingFit>) -> String {
    let line = |f: Option<ScalingFit>| f.map(|f| (f.slope, f.intercept));
    let rate: Vec<(f64, f64)> = gaps.iter().filter_map(|g| g.gap_rate.map(|r| (g.n as f64, r))).collect();
    let mi: Vec<(f64, f64)> = gaps.iter().map(|g| (g.n as f64, g.gap_mi)).collect();
    let mut series = vec![svg::Series { label: "C(P) - I".into(), points: mi, fit: line(mi_fit) }];
    if !rate.is_empty() {
        series.push(svg::Series { label: "C(P) - rate".into(), points: rate, fit: line(rate_fit) });
    }
    svg::loglog("capacity gap vs block length", "n", "gap [bits]", &series)
}
