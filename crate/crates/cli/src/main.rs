use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use feedsched::experiment::{
    run_experiment, write_csv, ExperimentError, ExperimentSpec, RowStatus, Sweep,
};
use feedsched::io::{load_gamma, load_processor, load_taskset, IoError};
use feedsched::sim::{FeedbackEvents, Mode};

/// Energy-aware feedback scheduling of real-time tasks on DVFS multiprocessors.
#[derive(Debug, Parser)]
#[command(name = "feedsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one taskset and write one CSV row per mode.
    Run(Common),
    /// Sweep taskset density or estimation factor.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated sweep values. Defaults to every built-in density,
        /// or 0.1..=1.0 in steps of 0.1 for the gamma axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    Density,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Feedback,
    OpenLoop,
    Ideal,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EventArg {
    Finish,
    Arrival,
}

#[derive(Debug, Args)]
struct Common {
    /// Processor preset (powerpc405lp, xscale) or JSON file.
    #[arg(long, default_value = "powerpc405lp")]
    processor: String,
    /// Number of identical processors.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Taskset preset (paper:D=<density>) or JSON file. Ignored by density sweeps.
    #[arg(long, default_value = "paper:D=1.25")]
    taskset: String,
    /// Global estimation factor in (0, 1] or a JSON file of per-task factors.
    /// Ignored by gamma sweeps.
    #[arg(long, default_value = "0.5")]
    gamma: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    mode: Vec<ModeArg>,
    /// Events that trigger a feedback re-plan.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "finish")]
    events: Vec<EventArg>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-scenario wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

fn modes(args: &[ModeArg]) -> Vec<Mode> {
    if args.contains(&ModeArg::All) {
        return Mode::ALL.to_vec();
    }
    let mut out = Vec::new();
    for a in args {
        let mode = match a {
            ModeArg::Feedback => Mode::Feedback,
            ModeArg::OpenLoop => Mode::OpenLoop,
            ModeArg::Ideal => Mode::Ideal,
            ModeArg::All => unreachable!(),
        };
        if !out.contains(&mode) {
            out.push(mode);
        }
    }
    out
}

fn build_spec(common: &Common, sweep: Sweep) -> Result<ExperimentSpec> {
    if common.m == 0 {
        bail!("--m must be at least 1");
    }
    let processor = load_processor(&common.processor)?;
    let needs_taskset = !matches!(sweep, Sweep::Density(_));
    let taskset = if needs_taskset {
        load_taskset(&common.taskset)?
    } else {
        Vec::new()
    };
    let gamma = load_gamma(&common.gamma)?;
    if needs_taskset {
        gamma.resolve(&taskset).map_err(IoError::from)?;
    }
    Ok(ExperimentSpec {
        processor,
        m: common.m,
        taskset,
        gamma,
        modes: modes(&common.mode),
        events: FeedbackEvents {
            finish: common.events.contains(&EventArg::Finish),
            arrival: common.events.contains(&EventArg::Arrival),
        },
        sweep,
        timing: common.timing,
    })
}

/// 0 on success, 2 when every scenario was infeasible.
fn execute(cli: Cli) -> Result<u8> {
    let (common, sweep) = match cli.command {
        Command::Run(common) => (common, Sweep::Single),
        Command::Sweep {
            axis,
            values,
            common,
        } => {
            let sweep = match (axis, values.is_empty()) {
                (Axis::Density, true) => Sweep::all_densities(),
                (Axis::Density, false) => Sweep::Density(values),
                (Axis::Gamma, true) => Sweep::gamma_decile(),
                (Axis::Gamma, false) => Sweep::Gamma(values),
            };
            (common, sweep)
        }
    };
    let spec = build_spec(&common, sweep)?;
    let rows = run_experiment(&spec)?;

    let out: Box<dyn Write> = match &common.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    write_csv(&rows, out)?;

    let all_infeasible = rows.iter().all(|r| r.status == RowStatus::Infeasible);
    Ok(if all_infeasible { 2 } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(ExperimentError::Sim(_)) = err.downcast_ref::<ExperimentError>() {
                eprintln!("note: this indicates a scheduler defect, not an input problem");
            }
            ExitCode::from(1)
        }
    }
}
