//! Flat `section.key = value` experiment files.
//!
//! ```text
//! # Fig. 2 at desk scale
//! params.a_um = 0.5
//! params.r0_um = 1
//! params.d_m2_per_s = 5e-9
//! params.k_f_m3_per_s = 3.14e-14
//! params.n_molecules = 1000
//! sim.dt_s = 1e-7
//! sim.horizon_s = 5e-4
//! sim.trials = 200
//! sweep.k_b_per_s = 0,2e3,4e3
//! run.modes = analytic,simulate,compare
//! outputs.dir = out/fig2
//! ```
//!
//! Lengths may be given in µm (`_um`) or meters (`_m`); everything is SI
//! after parsing.

use std::collections::HashSet;
use std::path::PathBuf;

use crate::params::{ChannelParams, RawParams};
use crate::sim::SimConfig;

use super::{ExperimentSpec, GridSpec, HarnessError, Mode, ParamKey, SweepAxis};

const MICRON: f64 = 1e-6;

fn err(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        line: Some(line),
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, text: &str) -> Result<f64, HarnessError> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("{key}: expected a finite number, got {text:?}")))
}

fn parse_count(line: usize, key: &str, text: &str) -> Result<u64, HarnessError> {
    let v = parse_f64(line, key, text)?;
    if v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53) {
        return Err(err(line, format!("{key}: expected a non-negative integer, got {text:?}")));
    }
    Ok(v as u64)
}

fn parse_bool(line: usize, key: &str, text: &str) -> Result<bool, HarnessError> {
    match text.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(err(line, format!("{key}: expected true or false, got {other:?}"))),
    }
}

/// Maps a parameter key with unit suffix to the field and the factor that
/// converts it to SI.
pub(crate) fn param_key(name: &str) -> Option<(ParamKey, f64)> {
    Some(match name {
        "a_um" => (ParamKey::A, MICRON),
        "a_m" => (ParamKey::A, 1.0),
        "r0_um" => (ParamKey::R0, MICRON),
        "r0_m" => (ParamKey::R0, 1.0),
        "d_m2_per_s" => (ParamKey::Diffusion, 1.0),
        "d_um2_per_s" => (ParamKey::Diffusion, MICRON * MICRON),
        "k_f_m3_per_s" => (ParamKey::KF, 1.0),
        "k_b_per_s" => (ParamKey::KB, 1.0),
        "k_d_per_s" => (ParamKey::KD, 1.0),
        "n_molecules" => (ParamKey::NMolecules, 1.0),
        _ => return None,
    })
}

#[derive(Default)]
struct SimFields {
    dt: Option<f64>,
    horizon: Option<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
    record_every: Option<u64>,
    threads: Option<u64>,
    check_invariants: Option<bool>,
}

/// Parses an experiment file.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let mut raw = RawParams::baseline();
    let mut sim = SimFields::default();
    let mut sweep: Vec<SweepAxis> = Vec::new();
    let mut grid = GridSpec::default();
    let mut modes: Option<Vec<Mode>> = None;
    let mut outputs = PathBuf::from("out");
    let mut seen = HashSet::new();

    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(line, format!("duplicate key {key}")));
        }
        let (section, name) = key
            .split_once('.')
            .ok_or_else(|| err(line, format!("key {key} has no section")))?;
        match section {
            "params" => {
                let (field, scale) =
                    param_key(name).ok_or_else(|| err(line, format!("unknown parameter {key}")))?;
                if field == ParamKey::NMolecules {
                    raw.n_molecules = parse_count(line, key, value)?;
                } else {
                    field.set(&mut raw, scale * parse_f64(line, key, value)?);
                }
            }
            "sim" => match name {
                "dt_s" => sim.dt = Some(parse_f64(line, key, value)?),
                "horizon_s" => sim.horizon = Some(parse_f64(line, key, value)?),
                "trials" => sim.trials = Some(parse_count(line, key, value)?),
                "seed" => {
                    sim.seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| err(line, format!("{key}: expected a 64-bit unsigned seed")))?,
                    )
                }
                "record_every" => sim.record_every = Some(parse_count(line, key, value)?),
                "threads" => sim.threads = Some(parse_count(line, key, value)?),
                "check_invariants" => sim.check_invariants = Some(parse_bool(line, key, value)?),
                _ => return Err(err(line, format!("unknown simulation key {key}"))),
            },
            "sweep" => {
                let (field, scale) =
                    param_key(name).ok_or_else(|| err(line, format!("unknown sweep parameter {key}")))?;
                let values = value
                    .split(',')
                    .filter(|v| !v.trim().is_empty())
                    .map(|v| {
                        if field == ParamKey::NMolecules {
                            parse_count(line, key, v).map(|n| n as f64)
                        } else {
                            parse_f64(line, key, v).map(|x| scale * x)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() {
                    return Err(err(line, format!("{key}: empty sweep")));
                }
                if sweep.iter().any(|axis| axis.key == field) {
                    return Err(err(line, format!("{key}: parameter swept twice")));
                }
                sweep.push(SweepAxis { key: field, values });
            }
            "grid" => match name {
                "points" => grid.points = parse_count(line, key, value)? as usize,
                "t_min_s" => grid.t_min = Some(parse_f64(line, key, value)?),
                "t_max_s" => grid.t_max = Some(parse_f64(line, key, value)?),
                _ => return Err(err(line, format!("unknown grid key {key}"))),
            },
            "run" => match name {
                "modes" => {
                    let list = value
                        .split(',')
                        .map(|m| {
                            Mode::parse(m.trim())
                                .ok_or_else(|| err(line, format!("unknown mode {:?}", m.trim())))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    modes = Some(list);
                }
                _ => return Err(err(line, format!("unknown run key {key}"))),
            },
            "outputs" => match name {
                "dir" => outputs = PathBuf::from(value),
                _ => return Err(err(line, format!("unknown outputs key {key}"))),
            },
            _ => return Err(err(line, format!("unknown section {section:?}"))),
        }
    }

    let params = ChannelParams::new(raw).map_err(|e| HarnessError::Config {
        line: None,
        message: e.to_string(),
    })?;

    let sim = match (sim.dt, sim.horizon, sim.trials) {
        (None, None, None) if sim.seed.is_none() && sim.record_every.is_none() => None,
        (Some(dt), Some(horizon), Some(trials)) => Some(SimConfig {
            dt,
            horizon,
            trials: trials as usize,
            master_seed: sim.seed.unwrap_or(0),
            record_every: sim.record_every.unwrap_or(1) as usize,
            threads: sim.threads.map(|t| t as usize),
            check_invariants: sim.check_invariants.unwrap_or(false),
        }),
        _ => {
            return Err(HarnessError::Config {
                line: None,
                message: "sim section needs sim.dt_s, sim.horizon_s and sim.trials".into(),
            })
        }
    };

    let modes = modes.unwrap_or_else(|| {
        if sim.is_some() {
            vec![Mode::Analytic, Mode::Simulate, Mode::Compare]
        } else {
            vec![Mode::Analytic]
        }
    });
    let spec = ExperimentSpec {
        params,
        sim,
        sweep,
        outputs,
        modes,
        grid,
    };
    spec.validate()?;
    Ok(spec)
}
