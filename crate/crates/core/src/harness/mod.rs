//! Configuration-driven experiment runner: parameter sweeps, CSV series,
//! deviation reports and the run manifest.

pub mod compare;
pub mod config;
pub mod csvio;
pub mod experiment;
pub mod presets;
pub mod selfcheck;

use std::path::PathBuf;

use thiserror::Error;

use crate::analytic::AnalyticError;
use crate::oracle::OracleError;
use crate::params::{ChannelParams, RawParams};
use crate::series::{log_grid, SeriesError};
use crate::sim::{SimConfig, SimError};

pub use compare::{compare_series, DeviationReport};
pub use config::parse_spec;
pub use csvio::{read_series, write_deviation, write_series};
pub use experiment::{run_experiment, ComparisonOutcome, PointFailure, RunOptions, RunSummary};
pub use presets::{figure2, figure3, Scale};

/// Grid points when the config gives none.
pub const DEFAULT_GRID_POINTS: usize = 200;
/// Time span of analytic-only runs without an explicit grid.
pub const DEFAULT_SPAN: (f64, f64) = (1e-7, 1e-3);

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}", match line { Some(l) => format!("line {l}: {message}"), None => message.clone() })]
    Config { line: Option<usize>, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("time grids differ: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl HarnessError {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        HarnessError::Config {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration and I/O problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Io { .. } | HarnessError::Csv(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Analytic,
    Oracle,
    Simulate,
    Compare,
}

impl Mode {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "analytic" => Mode::Analytic,
            "oracle" => Mode::Oracle,
            "simulate" => Mode::Simulate,
            "compare" => Mode::Compare,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Oracle => "oracle",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
        }
    }
}

/// A sweepable channel parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKey {
    A,
    R0,
    Diffusion,
    KF,
    KB,
    KD,
    NMolecules,
}

impl ParamKey {
    pub const ALL: [ParamKey; 7] = [
        ParamKey::A,
        ParamKey::R0,
        ParamKey::Diffusion,
        ParamKey::KF,
        ParamKey::KB,
        ParamKey::KD,
        ParamKey::NMolecules,
    ];

    /// Name in SI units, as written to the manifest.
    pub fn si_name(self) -> &'static str {
        match self {
            ParamKey::A => "a_m",
            ParamKey::R0 => "r0_m",
            ParamKey::Diffusion => "d_m2_per_s",
            ParamKey::KF => "k_f_m3_per_s",
            ParamKey::KB => "k_b_per_s",
            ParamKey::KD => "k_d_per_s",
            ParamKey::NMolecules => "n_molecules",
        }
    }

    pub fn get(self, raw: &RawParams) -> f64 {
        match self {
            ParamKey::A => raw.a,
            ParamKey::R0 => raw.r0,
            ParamKey::Diffusion => raw.diffusion,
            ParamKey::KF => raw.k_f,
            ParamKey::KB => raw.k_b,
            ParamKey::KD => raw.k_d,
            ParamKey::NMolecules => raw.n_molecules as f64,
        }
    }

    pub fn set(self, raw: &mut RawParams, value: f64) {
        match self {
            ParamKey::A => raw.a = value,
            ParamKey::R0 => raw.r0 = value,
            ParamKey::Diffusion => raw.diffusion = value,
            ParamKey::KF => raw.k_f = value,
            ParamKey::KB => raw.k_b = value,
            ParamKey::KD => raw.k_d = value,
            ParamKey::NMolecules => raw.n_molecules = value as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: ParamKey,
    /// SI values.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: DEFAULT_GRID_POINTS,
            t_min: None,
            t_max: None,
        }
    }
}

/// Output times of a run. With a simulation, every time is a record time of
/// the ensemble and `record_index` points into its output.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    pub record_index: Option<Vec<usize>>,
}

/// One sweep point: an id like `p03` and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub id: String,
    pub params: ChannelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub params: ChannelParams,
    pub sim: Option<SimConfig>,
    /// Axes of a cartesian product; empty means a single point.
    pub sweep: Vec<SweepAxis>,
    pub outputs: PathBuf,
    pub modes: Vec<Mode>,
    pub grid: GridSpec,
}

impl ExperimentSpec {
    /// Modes actually run: `compare` pulls in `analytic` and `simulate`.
    pub fn effective_modes(&self) -> Vec<Mode> {
        let mut modes = self.modes.clone();
        if modes.contains(&Mode::Compare) {
            modes.extend([Mode::Analytic, Mode::Simulate]);
        }
        modes.sort();
        modes.dedup();
        modes
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.modes.is_empty() {
            return Err(HarnessError::config("at least one mode is required"));
        }
        let modes = self.effective_modes();
        if modes.contains(&Mode::Simulate) && self.sim.is_none() {
            return Err(HarnessError::config(
                "simulate and compare modes need sim.dt_s, sim.horizon_s and sim.trials",
            ));
        }
        for point in self.points()? {
            if let Some(sim) = &self.sim {
                sim.validate(&point.params)
                    .map_err(|e| HarnessError::config(format!("{}: {e}", point.id)))?;
            }
        }
        self.time_grid()?;
        Ok(())
    }

    /// Every sweep point, in row-major order over the axes.
    pub fn points(&self) -> Result<Vec<SweepPoint>, HarnessError> {
        let mut combos: Vec<Vec<(ParamKey, f64)>> = vec![Vec::new()];
        for axis in &self.sweep {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push((axis.key, v));
                        next
                    })
                })
                .collect();
        }
        let width = combos.len().saturating_sub(1).to_string().len().max(2);
        combos
            .into_iter()
            .enumerate()
            .map(|(i, combo)| {
                let id = format!("p{i:0width$}");
                let params = self
                    .params
                    .with(|raw| {
                        for &(key, v) in &combo {
                            key.set(raw, v);
                        }
                    })
                    .map_err(|e| HarnessError::config(format!("sweep point {id}: {e}")))?;
                Ok(SweepPoint { id, params })
            })
            .collect()
    }

    /// Log-spaced output times. With a simulation, each time is snapped to
    /// the nearest record time and duplicates are dropped, so the grid can
    /// have fewer than `grid.points` entries.
    pub fn time_grid(&self) -> Result<TimeGrid, HarnessError> {
        if self.grid.points < 2 {
            return Err(HarnessError::config("grid.points must be at least 2"));
        }
        let Some(sim) = &self.sim else {
            let lo = self.grid.t_min.unwrap_or(DEFAULT_SPAN.0);
            let hi = self.grid.t_max.unwrap_or(DEFAULT_SPAN.1);
            check_span(lo, hi)?;
            return Ok(TimeGrid {
                times: log_grid(lo, hi, self.grid.points),
                record_index: None,
            });
        };
        let record = sim.record_times();
        let (first, last) = match (record.first(), record.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(HarnessError::config("simulation records nothing")),
        };
        let lo = self.grid.t_min.unwrap_or(first);
        let hi = self.grid.t_max.unwrap_or(last);
        check_span(lo, hi)?;
        if lo < first * (1.0 - 1e-9) || hi > last * (1.0 + 1e-9) {
            return Err(HarnessError::config(format!(
                "grid [{lo:e}, {hi:e}] s exceeds the recorded span [{first:e}, {last:e}] s"
            )));
        }
        let spacing = sim.dt * sim.record_every as f64;
        let mut index: Vec<usize> = log_grid(lo, hi, self.grid.points)
            .into_iter()
            .map(|t| ((t / spacing).round() as usize).clamp(1, record.len()) - 1)
            .collect();
        index.dedup();
        Ok(TimeGrid {
            times: index.iter().map(|&k| record[k]).collect(),
            record_index: Some(index),
        })
    }
}

fn check_span(lo: f64, hi: f64) -> Result<(), HarnessError> {
    if lo > 0.0 && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::config(format!("invalid time span [{lo:e}, {hi:e}]")))
    }
}

/// `key=value` pairs of every parameter, comma separated, SI units.
pub fn inline_params(params: &ChannelParams) -> String {
    let raw = params.raw();
    ParamKey::ALL
        .iter()
        .map(|k| match k {
            ParamKey::NMolecules => format!("{}={}", k.si_name(), raw.n_molecules),
            _ => format!("{}={:e}", k.si_name(), k.get(&raw)),
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ExperimentSpec {
        parse_spec(text).unwrap()
    }

    #[test]
    fn cartesian_sweep_ids() {
        let s = spec("sweep.k_b_per_s = 0,2e3,4e3\nsweep.k_d_per_s = 0,1e3");
        let points = s.points().unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0].id, "p00");
        assert_eq!(points[5].id, "p05");
        assert_eq!(points[1].params.k_d(), 1e3);
        assert_eq!(points[4].params.k_b(), 4e3);
    }

    #[test]
    fn empty_sweep_is_one_point() {
        let s = spec("params.k_b_per_s = 2e3");
        assert_eq!(s.points().unwrap().len(), 1);
        let grid = s.time_grid().unwrap();
        assert_eq!(grid.times.len(), DEFAULT_GRID_POINTS);
        assert!(grid.record_index.is_none());
    }

    #[test]
    fn simulated_grid_snaps_to_records() {
        let s = spec("sim.dt_s = 1e-7\nsim.horizon_s = 5e-4\nsim.trials = 2\nsim.record_every = 25");
        let grid = s.time_grid().unwrap();
        let record = s.sim.as_ref().unwrap().record_times();
        let index = grid.record_index.unwrap();
        assert!(grid.times.len() >= 90 && grid.times.len() <= 200);
        assert_eq!(index[0], 0);
        assert_eq!(*index.last().unwrap(), record.len() - 1);
        for (t, k) in grid.times.iter().zip(&index) {
            assert_eq!(*t, record[*k]);
        }
        assert!(index.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn compare_needs_simulation() {
        assert!(parse_spec("run.modes = compare").is_err());
        let s = spec("sim.dt_s = 1e-7\nsim.horizon_s = 1e-5\nsim.trials = 2\nrun.modes = compare");
        assert_eq!(s.effective_modes(), vec![Mode::Analytic, Mode::Simulate, Mode::Compare]);
    }

    #[test]
    fn inline_params_round_trip() {
        let p = ChannelParams::baseline();
        let text = inline_params(&p);
        assert!(text.starts_with("a_m=5e-7,r0_m=1e-6"));
        assert!(text.ends_with("n_molecules=5000"));
    }
}
