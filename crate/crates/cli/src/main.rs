use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reactive_rx::harness::{
    self, experiment::RunSummary, selfcheck, ExperimentSpec, HarnessError, RunOptions, Scale,
};

#[derive(Parser)]
#[command(name = "reactive-rx", version, about = "Reactive-receiver diffusive channel experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file
    Run {
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the built-in invariant and oracle checks
    Check,
    /// Backward-rate sweep preset
    Figure2 {
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Degradation sweep preset
    Figure3 {
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Exit with status 4 when a comparison fails
    #[arg(long)]
    strict: bool,
    /// Sweep points run concurrently
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the simulation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    harness::parse_spec(&text)
}

fn report(summary: &RunSummary) {
    for r in &summary.records {
        println!("wrote {} ({} {})", r.file, r.id, r.mode.name());
    }
    for (id, w) in &summary.warnings {
        eprintln!("warning {id}: {w}");
    }
    for c in &summary.comparisons {
        let oracle = c.oracle_max_rel.map(|r| format!(", oracle max rel {r:.2e}")).unwrap_or_default();
        println!(
            "{} {}: {}/{} points within tolerance, max rel {:.3e}{oracle}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.within,
            c.eligible,
            c.max_rel
        );
    }
    for f in &summary.failures {
        eprintln!("error {} ({}): {}", f.id, f.mode.name(), f.message);
    }
    println!("manifest: {}", summary.manifest.display());
}

fn run(mut spec: ExperimentSpec, args: RunArgs) -> Result<i32, HarnessError> {
    if let Some(seed) = args.seed {
        match spec.sim.as_mut() {
            Some(sim) => sim.master_seed = seed,
            None => eprintln!("warning: --seed ignored, the experiment has no simulation"),
        }
    }
    if let Some(out) = args.out {
        spec.outputs = out;
    }
    let options = RunOptions {
        strict: args.strict,
        jobs: args.jobs,
    };
    let summary = harness::run_experiment(&spec, &options)?;
    report(&summary);
    Ok(summary.exit_code())
}

fn check() -> i32 {
    let mut code = 0;
    for c in selfcheck::run_checks() {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            code = 4;
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { spec, run: args } => load(&spec).and_then(|s| run(s, args)),
        Command::Check => Ok(check()),
        Command::Figure2 { scale, run: args } => run(harness::figure2(scale.into()), args),
        Command::Figure3 { scale, run: args } => run(harness::figure3(scale.into()), args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
