//! Fixed-step Brownian particle simulator of the reactive receiver.
//!
//! Each step: displace every free molecule, degrade, resolve overlaps with
//! the receiver (bind or bounce back), then release bound molecules.

pub mod overlap;
pub mod particles;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::params::ChannelParams;
use crate::quad::QuadError;
use crate::series::{SeriesError, SignalSeries};

pub use overlap::{
    acceptance_probability, compute_rho, kernel_sigma, overlap_probability, OverlapSampler, Rho,
};
pub use particles::{step_trial, Particle, ParticleState, Stepper, TrialState};

/// Rate-times-step products above this draw a warning.
pub const STIFF_WARN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimWarning {
    /// `rate · Δt` exceeds [`STIFF_WARN`]; the per-step Bernoulli
    /// approximation gets coarse.
    StiffRate { name: &'static str, product: f64 },
}

impl std::fmt::Display for SimWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimWarning::StiffRate { name, product } => {
                write!(f, "{name}·dt = {product:.3} exceeds {STIFF_WARN}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Record the bound count every this many steps.
    pub record_every: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Check the particle invariants after every step.
    pub check_invariants: bool,
}

impl SimConfig {
    pub fn desk(dt: f64, horizon: f64, trials: usize) -> Self {
        SimConfig {
            dt,
            horizon,
            trials,
            master_seed: 0,
            record_every: 1,
            threads: None,
            check_invariants: false,
        }
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    /// Times at which the bound count is recorded.
    pub fn record_times(&self) -> Vec<f64> {
        let every = self.record_every as u64;
        (1..=self.steps() / every)
            .map(|k| (k * every) as f64 * self.dt)
            .collect()
    }

    /// Checks the config against `params`, returning warnings for stiff
    /// rates.
    pub fn validate(&self, params: &ChannelParams) -> Result<Vec<SimWarning>, SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {:e}", self.dt));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return bad(format!("horizon {:e} is shorter than dt {:e}", self.horizon, self.dt));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        if self.steps() < self.record_every as u64 {
            return bad("horizon ends before the first record".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        let mut warnings = Vec::new();
        for (name, rate) in [("k_d", params.k_d()), ("k_b", params.k_b())] {
            let product = rate * self.dt;
            if product > 1.0 {
                return bad(format!("{name}·dt = {product:.3} exceeds 1"));
            }
            if product > STIFF_WARN {
                warnings.push(SimWarning::StiffRate { name, product });
            }
        }
        Ok(warnings)
    }
}

/// Builds the per-step constants, failing when the forward acceptance
/// probability exceeds one.
pub fn stepper(params: &ChannelParams, dt: f64) -> Result<Stepper, SimError> {
    let sampler = OverlapSampler::new(dt, params)?;
    let rho = compute_rho(dt, params)?;
    let p_accept = acceptance_probability(rho.value, dt, params);
    if p_accept > 1.0 {
        return Err(SimError::Config(format!(
            "forward acceptance probability {p_accept:.4} exceeds 1; reduce dt"
        )));
    }
    Ok(Stepper {
        a: params.a(),
        step_sd: (2.0 * params.diffusion() * dt).sqrt(),
        p_degrade: -(-params.k_d() * dt).exp_m1(),
        p_accept,
        p_release: -(-params.k_b() * dt).exp_m1(),
        sampler,
    })
}

/// Random stream of one trial: the master seed picks the key, the trial
/// index picks the stream.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Bound counts of one trial at each record time.
pub fn run_trial(
    params: &ChannelParams,
    config: &SimConfig,
    stepper: &Stepper,
    trial: u64,
) -> Result<Vec<u32>, SimError> {
    let mut rng = trial_rng(config.master_seed, trial);
    let mut state = TrialState::released(params.n_molecules() as usize, params.r0());
    let every = config.record_every as u64;
    let mut counts = Vec::with_capacity((config.steps() / every) as usize);
    for k in 1..=config.steps() {
        step_trial(&mut state, stepper, &mut rng)?;
        if config.check_invariants {
            state
                .check_invariants(params.a())
                .map_err(|e| SimError::InvariantBreach(format!("trial {trial}, step {k}: {e}")))?;
        }
        if k % every == 0 {
            counts.push(state.bound_count() as u32);
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Mean bound count with the standard error of the mean.
    pub series: SignalSeries,
    pub warnings: Vec<SimWarning>,
}

/// Trials processed per parallel batch; bounds memory at large trial counts.
const BATCH: usize = 256;

/// Runs `config.trials` independent releases and averages the bound count.
///
/// Results depend only on `master_seed`, never on the thread count: each
/// trial owns its stream, and the sums are exact integer accumulations in
/// trial order.
pub fn run_ensemble(params: &ChannelParams, config: &SimConfig) -> Result<EnsembleResult, SimError> {
    let warnings = config.validate(params)?;
    let stepper = stepper(params, config.dt)?;
    let times = config.record_times();
    let run = || -> Result<(Vec<u128>, Vec<u128>), SimError> {
        let mut sum = vec![0u128; times.len()];
        let mut sum_sq = vec![0u128; times.len()];
        for start in (0..config.trials).step_by(BATCH) {
            let end = (start + BATCH).min(config.trials);
            let batch: Vec<Vec<u32>> = (start..end)
                .into_par_iter()
                .map(|trial| run_trial(params, config, &stepper, trial as u64))
                .collect::<Result<_, _>>()?;
            for counts in &batch {
                for (k, &c) in counts.iter().enumerate() {
                    sum[k] += c as u128;
                    sum_sq[k] += (c as u128) * (c as u128);
                }
            }
        }
        Ok((sum, sum_sq))
    };
    let (sum, sum_sq) = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::ThreadPool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let n = config.trials as u128;
    let mean = sum.iter().map(|&s| s as f64 / n as f64).collect();
    let stderr = sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &q)| {
            if n < 2 {
                return 0.0;
            }
            // n Σx² - (Σx)² is exact in integers.
            let spread = (n * q - s * s) as f64;
            (spread / (n as f64 * (n - 1) as f64) / n as f64).sqrt()
        })
        .collect();
    let series = SignalSeries::with_stderr(times, mean, stderr)?;
    series.check_bounds(params.n_molecules() as f64)?;
    Ok(EnsembleResult { series, warnings })
}
