//! The two figure experiments of the reference setup.
//!
//! Desk scale runs in minutes on a laptop; paper scale uses the original
//! release size, trial count and step and is not meant for quick turnaround.

use std::path::PathBuf;

use crate::params::{ChannelParams, RawParams};
use crate::sim::SimConfig;

use super::{ExperimentSpec, GridSpec, Mode, ParamKey, SweepAxis};

pub const FIGURE2_K_B: [f64; 6] = [0.0, 2e3, 4e3, 1e4, 2e4, 4e4];
pub const FIGURE3_K_B: f64 = 2e5;
pub const FIGURE3_K_D: [f64; 5] = [0.0, 2e3, 1e4, 2e4, 4e4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Scale::Desk),
            "paper" => Some(Scale::Paper),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }

    fn n_molecules(self) -> u64 {
        match self {
            Scale::Desk => 1000,
            Scale::Paper => 5000,
        }
    }

    pub fn sim_config(self) -> SimConfig {
        let (dt, horizon, trials, every) = match self {
            Scale::Desk => (1e-7, 5e-4, 200, 25),
            Scale::Paper => (5e-8, 1e-3, 50_000, 50),
        };
        SimConfig {
            record_every: every,
            ..SimConfig::desk(dt, horizon, trials)
        }
    }
}

fn preset(scale: Scale, k_b: f64, axis: SweepAxis, name: &str) -> ExperimentSpec {
    let params = ChannelParams::new(RawParams {
        k_b,
        n_molecules: scale.n_molecules(),
        ..RawParams::baseline()
    })
    .expect("baseline parameters are valid");
    ExperimentSpec {
        params,
        sim: Some(scale.sim_config()),
        sweep: vec![axis],
        outputs: PathBuf::from(format!("out/{name}-{}", scale.name())),
        modes: vec![Mode::Analytic, Mode::Oracle, Mode::Simulate, Mode::Compare],
        grid: GridSpec::default(),
    }
}

/// Backward rate sweep without degradation.
pub fn figure2(scale: Scale) -> ExperimentSpec {
    let axis = SweepAxis {
        key: ParamKey::KB,
        values: FIGURE2_K_B.to_vec(),
    };
    preset(scale, 0.0, axis, "figure2")
}

/// Degradation sweep at a fast backward rate.
pub fn figure3(scale: Scale) -> ExperimentSpec {
    let axis = SweepAxis {
        key: ParamKey::KD,
        values: FIGURE3_K_D.to_vec(),
    };
    preset(scale, FIGURE3_K_B, axis, "figure3")
}
