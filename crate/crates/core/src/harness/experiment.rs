//! Runs every (sweep point, mode) of an experiment and writes the series,
//! deviation files and `manifest.txt`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytic::{self, Evaluation};
use crate::oracle;
use crate::series::SignalSeries;
use crate::sim;

use super::csvio::{write_deviation, write_series};
use super::{compare_series, inline_params, ExperimentSpec, HarnessError, Mode, SweepPoint, TimeGrid};

/// A compared point passes when this fraction of eligible points lies
/// within `max(SE_LIMIT · SE, REL_LIMIT · N̄)`.
pub const PASS_FRACTION: f64 = 0.95;
pub const SE_LIMIT: f64 = 3.5;
pub const REL_LIMIT: f64 = 0.05;
/// Only points whose expected count exceeds this are eligible.
pub const MIN_COUNT: f64 = 10.0;
/// Largest relative deviation allowed between analytic and oracle series.
pub const ORACLE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Treat failed comparisons as a run failure.
    pub strict: bool,
    /// Sweep points run concurrently.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            strict: false,
            jobs: 1,
        }
    }
}

/// One written series file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub id: String,
    pub mode: Mode,
    pub file: String,
    pub seed: Option<u64>,
    pub params: String,
    /// Extra `key=value` text for the manifest line.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub id: String,
    pub mode: Mode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutcome {
    pub id: String,
    pub file: String,
    pub within: usize,
    pub eligible: usize,
    pub max_rel: f64,
    pub mean_rel: f64,
    /// Analytic against oracle, when both ran.
    pub oracle_max_rel: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub records: Vec<RunRecord>,
    pub warnings: Vec<(String, String)>,
    pub failures: Vec<PointFailure>,
    pub comparisons: Vec<ComparisonOutcome>,
    pub strict: bool,
}

impl RunSummary {
    /// 0 when everything ran, 3 after a module failure, 4 when `strict` and
    /// a comparison failed.
    pub fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() {
            3
        } else if self.strict && self.comparisons.iter().any(|c| !c.passed) {
            4
        } else {
            0
        }
    }
}

#[derive(Default)]
struct PointOutcome {
    records: Vec<RunRecord>,
    warnings: Vec<(String, String)>,
    failures: Vec<PointFailure>,
    comparison: Option<ComparisonOutcome>,
}

impl PointOutcome {
    fn fail(&mut self, id: &str, mode: Mode, e: impl std::fmt::Display) {
        self.failures.push(PointFailure {
            id: id.to_string(),
            mode,
            message: e.to_string(),
        });
    }
}

fn save(dir: &Path, file: &str, write: impl FnOnce(BufWriter<File>) -> Result<(), HarnessError>) -> Result<(), HarnessError> {
    let path = dir.join(file);
    let f = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    write(BufWriter::new(f))
}

fn run_point(spec: &ExperimentSpec, grid: &TimeGrid, point: &SweepPoint, dir: &Path) -> PointOutcome {
    let modes = spec.effective_modes();
    let id = point.id.as_str();
    let params_text = inline_params(&point.params);
    let mut out = PointOutcome::default();
    let record = |out: &mut PointOutcome, mode: Mode, seed, note| {
        out.records.push(RunRecord {
            id: id.to_string(),
            mode,
            file: format!("{id}_{}.csv", mode.name()),
            seed,
            params: params_text.clone(),
            note,
        });
    };

    let mut analytic_series: Option<SignalSeries> = None;
    let mut oracle_series: Option<SignalSeries> = None;
    let mut sim_series: Option<SignalSeries> = None;

    if modes.contains(&Mode::Analytic) {
        let file = format!("{id}_analytic.csv");
        let result = analytic::expected_received_or_fallback(&grid.times, &point.params)
            .map_err(HarnessError::from)
            .and_then(|(s, how)| save(dir, &file, |w| write_series(w, &s)).map(|_| (s, how)));
        match result {
            Ok((s, how)) => {
                let eval = match how {
                    Evaluation::ClosedForm => "closed-form",
                    Evaluation::OracleFallback => "oracle-fallback",
                };
                record(&mut out, Mode::Analytic, None, Some(format!("eval={eval}")));
                analytic_series = Some(s);
            }
            Err(e) => out.fail(id, Mode::Analytic, e),
        }
    }

    if modes.contains(&Mode::Oracle) {
        let file = format!("{id}_oracle.csv");
        let result = oracle::expected_received_via_oracle(&grid.times, &point.params)
            .map_err(HarnessError::from)
            .and_then(|s| save(dir, &file, |w| write_series(w, &s)).map(|_| s));
        match result {
            Ok(s) => {
                record(&mut out, Mode::Oracle, None, None);
                oracle_series = Some(s);
            }
            Err(e) => out.fail(id, Mode::Oracle, e),
        }
    }

    if let (true, Some(config)) = (modes.contains(&Mode::Simulate), &spec.sim) {
        let file = format!("{id}_simulate.csv");
        let result = sim::run_ensemble(&point.params, config)
            .map_err(HarnessError::from)
            .and_then(|ens| {
                let full = ens.series;
                let index = grid.record_index.as_deref().unwrap_or(&[]);
                let series = SignalSeries::with_stderr(
                    index.iter().map(|&k| full.times[k]).collect(),
                    index.iter().map(|&k| full.values[k]).collect(),
                    index.iter().map(|&k| full.stderr[k]).collect(),
                )?;
                save(dir, &file, |w| write_series(w, &series))?;
                Ok((series, ens.warnings))
            });
        match result {
            Ok((s, warnings)) => {
                for w in warnings {
                    out.warnings.push((id.to_string(), w.to_string()));
                }
                record(&mut out, Mode::Simulate, Some(config.master_seed), None);
                sim_series = Some(s);
            }
            Err(e) => out.fail(id, Mode::Simulate, e),
        }
    }

    if modes.contains(&Mode::Compare) {
        if let (Some(a), Some(s)) = (&analytic_series, &sim_series) {
            let file = format!("{id}_compare.csv");
            let oracle_max_rel = oracle_series
                .as_ref()
                .map(|o| compare_series(a, o).map(|r| r.max_rel))
                .transpose();
            let result = oracle_max_rel.and_then(|oracle_max_rel| {
                let report = compare_series(a, s)?;
                save(dir, &file, |w| write_deviation(w, &report))?;
                Ok((report, oracle_max_rel))
            });
            match result {
                Ok((report, oracle_max_rel)) => {
                    let (within, eligible) = report.count_within(SE_LIMIT, REL_LIMIT, MIN_COUNT);
                    let mc_ok = within as f64 >= PASS_FRACTION * eligible as f64;
                    let oracle_ok = oracle_max_rel.is_none_or(|r| r <= ORACLE_LIMIT);
                    out.comparison = Some(ComparisonOutcome {
                        id: id.to_string(),
                        file,
                        within,
                        eligible,
                        max_rel: report.max_rel,
                        mean_rel: report.mean_rel,
                        oracle_max_rel,
                        passed: mc_ok && oracle_ok,
                    });
                }
                Err(e) => out.fail(id, Mode::Compare, e),
            }
        } else {
            out.fail(id, Mode::Compare, "analytic or simulated series missing");
        }
    }
    out
}

/// Runs the experiment into `spec.outputs`. Module failures are recorded in
/// the summary and the manifest; only setup and manifest I/O abort the run.
pub fn run_experiment(spec: &ExperimentSpec, options: &RunOptions) -> Result<RunSummary, HarnessError> {
    spec.validate()?;
    if options.jobs == 0 {
        return Err(HarnessError::config("--jobs must be positive"));
    }
    let points = spec.points()?;
    let grid = spec.time_grid()?;
    let dir = spec.outputs.as_path();
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;

    let outcomes: Vec<PointOutcome> = if options.jobs == 1 {
        points.iter().map(|p| run_point(spec, &grid, p, dir)).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?
            .install(|| points.par_iter().map(|p| run_point(spec, &grid, p, dir)).collect())
    };

    let mut summary = RunSummary {
        manifest: dir.join("manifest.txt"),
        records: Vec::new(),
        warnings: Vec::new(),
        failures: Vec::new(),
        comparisons: Vec::new(),
        strict: options.strict,
    };
    for o in outcomes {
        summary.records.extend(o.records);
        summary.warnings.extend(o.warnings);
        summary.failures.extend(o.failures);
        summary.comparisons.extend(o.comparison);
    }
    let text = manifest_text(spec, &grid, &summary);
    fs::write(&summary.manifest, text).map_err(|e| HarnessError::io(&summary.manifest, e))?;
    Ok(summary)
}

fn manifest_text(spec: &ExperimentSpec, grid: &TimeGrid, summary: &RunSummary) -> String {
    let mut m = String::new();
    let modes: Vec<_> = spec.effective_modes().iter().map(|m| m.name()).collect();
    let _ = writeln!(m, "# reactive-rx experiment manifest");
    let _ = writeln!(m, "version {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "modes {}", modes.join(","));
    let _ = writeln!(
        m,
        "grid points={} requested={} t_min_s={:e} t_max_s={:e}",
        grid.times.len(),
        spec.grid.points,
        grid.times[0],
        grid.times[grid.times.len() - 1]
    );
    if let Some(s) = &spec.sim {
        let _ = writeln!(
            m,
            "sim dt_s={:e} horizon_s={:e} trials={} record_every={} seed={} check_invariants={}",
            s.dt, s.horizon, s.trials, s.record_every, s.master_seed, s.check_invariants
        );
    }
    for axis in &spec.sweep {
        let values: Vec<_> = axis.values.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(m, "sweep {}={}", axis.key.si_name(), values.join(","));
    }
    for r in &summary.records {
        let seed = r.seed.map_or("none".to_string(), |s| s.to_string());
        let _ = write!(
            m,
            "run {}: mode={} file={} seed={} params={}",
            r.id,
            r.mode.name(),
            r.file,
            seed,
            r.params
        );
        if let Some(note) = &r.note {
            let _ = write!(m, " {note}");
        }
        m.push('\n');
    }
    for c in &summary.comparisons {
        let oracle = c.oracle_max_rel.map_or("none".to_string(), |r| format!("{r:e}"));
        let _ = writeln!(
            m,
            "compare {}: file={} within={}/{} max_rel={:e} mean_rel={:e} oracle_max_rel={} pass={}",
            c.id, c.file, c.within, c.eligible, c.max_rel, c.mean_rel, oracle, c.passed
        );
    }
    for (id, w) in &summary.warnings {
        let _ = writeln!(m, "warning {id}: {w}");
    }
    for f in &summary.failures {
        let _ = writeln!(m, "error {}: mode={} message={}", f.id, f.mode.name(), f.message.replace('\n', " "));
    }
    m
}
