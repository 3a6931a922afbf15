use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddsim_cli::config::{
    parse_float_list, parse_sequence_token, Command, DecayJob, FileConfig, MapJob, Observable,
    OutputFormat, RunConfig, SweepJob, DEFAULT_SEED, DEFAULT_SIGMA_B, DEFAULT_TAU_D,
    DEFAULT_TAU_E, DEFAULT_T_P,
};
use ddsim_cli::{run, CliError};
use ddsim_core::sequence::SequenceSpec;
use ddsim_core::simulator::{AveragingRecipe, InitialState, Sampling};

/// Compile dynamical-decoupling sequences and simulate a spin-1/2 qubit
/// under pulse errors and a fluctuating dephasing bath.
#[derive(Parser)]
#[command(name = "ddsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Fidelity map over flip-angle and offset errors after a fixed pulse count
    Map(MapArgs),
    /// Ensemble-averaged magnetization or fidelity decay trace
    Decay(DecayArgs),
    /// 1/e decay times across sequences and inter-pulse delays
    Sweep(SweepArgs),
    /// List the sequence catalog with parameters and modifiers
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; explicit flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; runs are reproducible for a fixed seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); never changes the output bits
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct SequenceArgs {
    /// Sequence family: cpmg, udd, xy4, xy8, xy16, cdd, kdd
    #[arg(long)]
    sequence: Option<String>,
    /// Symmetrized timing (xy family and cdd)
    #[arg(long)]
    symmetric: bool,
    /// Replace pi pulses by five-pulse Knill composites
    #[arg(long)]
    knill: bool,
    /// Pulses per cycle (cpmg and udd)
    #[arg(long)]
    pulse_count: Option<u32>,
    /// Concatenation level (cdd)
    #[arg(long)]
    cdd_level: Option<u32>,
    /// Delay between pulses, us
    #[arg(long)]
    tau_d: Option<f64>,
    /// Pulse length, us
    #[arg(long)]
    tp: Option<f64>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sequence: SequenceArgs,
    /// Base pulse slots to apply before evaluating the fidelity
    #[arg(long)]
    pulses: Option<u32>,
    /// Grid points per axis
    #[arg(long)]
    grid: Option<usize>,
    /// Flip-angle error half-range
    #[arg(long)]
    eps_max: Option<f64>,
    /// Offset half-range, in units of the Rabi frequency
    #[arg(long)]
    offset_max: Option<f64>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sequence: SequenceArgs,
    /// Initial Bloch axis: x, y or z
    #[arg(long)]
    init: Option<String>,
    /// Sampling grid: cycle or pulse
    #[arg(long)]
    sampling: Option<String>,
    /// Observable: magnetization or fidelity
    #[arg(long)]
    observable: Option<String>,
    /// Fidelity averaging recipe: mean_fidelity or mean_propagator
    #[arg(long)]
    recipe: Option<String>,
    /// Cycles to simulate
    #[arg(long)]
    cycles: Option<u32>,
    /// Std of the Gaussian flip-angle error distribution
    #[arg(long)]
    sigma: Option<f64>,
    /// Flip-angle draws in the ensemble
    #[arg(long)]
    draws: Option<u32>,
    /// OU bath strength, rad/us (0 disables the bath)
    #[arg(long)]
    sigma_b: Option<f64>,
    /// Bath correlation time, us
    #[arg(long)]
    tau_e: Option<f64>,
    /// Noise grid step, us (default tau_e/10)
    #[arg(long)]
    dt: Option<f64>,
    /// Noise trajectories per flip-angle draw
    #[arg(long)]
    paths: Option<u32>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated sequence tokens, e.g. xy4,xy4:sym,cdd:l2,cpmg:n4,kdd:knill
    #[arg(long)]
    sequences: Option<String>,
    /// Comma-separated inter-pulse delays, us
    #[arg(long)]
    tau_d_list: Option<String>,
    /// Pulse length, us
    #[arg(long)]
    tp: Option<f64>,
    /// Initial Bloch axis
    #[arg(long)]
    init: Option<String>,
    /// Std of the Gaussian flip-angle error distribution
    #[arg(long)]
    sigma: Option<f64>,
    /// Flip-angle draws
    #[arg(long)]
    draws: Option<u32>,
    /// OU bath strength, rad/us
    #[arg(long)]
    sigma_b: Option<f64>,
    /// Bath correlation time, us
    #[arg(long)]
    tau_e: Option<f64>,
    /// Noise grid step, us (default tau_e/10)
    #[arg(long)]
    dt: Option<f64>,
    /// Noise trajectories per flip-angle draw
    #[arg(long)]
    paths: Option<u32>,
    /// Horizon cap, in cycles
    #[arg(long)]
    max_cycles: Option<u32>,
}

#[derive(Args)]
struct CatalogArgs {
    #[command(flatten)]
    common: CommonArgs,
}

fn load_file(common: &CommonArgs) -> Result<FileConfig, CliError> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn resolve_common(common: &CommonArgs, file: &FileConfig) -> Result<(u64, usize, PathBuf, OutputFormat), CliError> {
    let seed = common.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let workers = common.workers.or(file.workers).unwrap_or(0);
    let out = common
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match (&common.format, &file.format) {
        (Some(f), _) => *f,
        (None, Some(text)) => text
            .parse()
            .map_err(|e: String| CliError::invalid("format", e))?,
        (None, None) => OutputFormat::Csv,
    };
    Ok((seed, workers, out, format))
}

fn resolve_spec(args: &SequenceArgs, file: &FileConfig, default_pulse_count: u32) -> Result<SequenceSpec, CliError> {
    let name = args
        .sequence
        .clone()
        .or_else(|| file.sequence.clone())
        .ok_or_else(|| CliError::invalid("sequence", "missing --sequence"))?;
    let tau_d = args.tau_d.or(file.tau_d).unwrap_or(DEFAULT_TAU_D);
    let t_p = args.tp.or(file.tp).unwrap_or(DEFAULT_T_P);
    let mut spec = parse_sequence_token(&name, tau_d, t_p)?;
    if args.symmetric || file.symmetric.unwrap_or(false) {
        spec = spec.symmetric(true);
    }
    if args.knill || file.knill.unwrap_or(false) {
        spec = spec.robust(true);
    }
    spec = spec.pulses(
        args.pulse_count
            .or(file.pulse_count)
            .unwrap_or(default_pulse_count),
    );
    if let Some(level) = args.cdd_level.or(file.cdd_level) {
        spec = spec.level(level);
    }
    Ok(spec)
}

fn parse_enum<T: std::str::FromStr<Err = impl ToString>>(
    field: &str,
    flag: Option<String>,
    file: Option<String>,
    default: T,
) -> Result<T, CliError> {
    match flag.or(file) {
        Some(text) => text
            .parse()
            .map_err(|e: <T as std::str::FromStr>::Err| CliError::invalid(field, e.to_string())),
        None => Ok(default),
    }
}

fn build_config(cli: Cli) -> Result<RunConfig, CliError> {
    match cli.command {
        CliCommand::Map(args) => {
            let file = load_file(&args.common)?;
            let (seed, workers, out_dir, format) = resolve_common(&args.common, &file)?;
            let spec = resolve_spec(&args.sequence, &file, 1)?;
            let job = MapJob {
                spec,
                pulses: args.pulses.or(file.pulses).unwrap_or(100),
                grid: args.grid.or(file.grid).unwrap_or(81),
                eps_max: args.eps_max.or(file.eps_max).unwrap_or(0.2),
                offset_max: args.offset_max.or(file.offset_max).unwrap_or(0.2),
            };
            Ok(RunConfig {
                command: Command::Map(job),
                seed,
                workers,
                out_dir,
                format,
            })
        }
        CliCommand::Decay(args) => {
            let file = load_file(&args.common)?;
            let (seed, workers, out_dir, format) = resolve_common(&args.common, &file)?;
            let spec = resolve_spec(&args.sequence, &file, 1)?;
            let tau_e = args.tau_e.or(file.tau_e).unwrap_or(DEFAULT_TAU_E);
            let sampling = match args
                .sampling
                .or_else(|| file.sampling.clone())
                .as_deref()
            {
                None | Some("cycle") => Sampling::Cycle,
                Some("pulse") => Sampling::Pulse,
                Some(other) => {
                    return Err(CliError::invalid(
                        "sampling",
                        format!("expected 'cycle' or 'pulse', got '{other}'"),
                    ))
                }
            };
            let observable = parse_enum(
                "observable",
                args.observable,
                file.observable.clone(),
                Observable::Magnetization,
            )?;
            let recipe = match args.recipe.or_else(|| file.recipe.clone()).as_deref() {
                None | Some("mean_fidelity") => AveragingRecipe::MeanFidelity,
                Some("mean_propagator") => AveragingRecipe::FidelityOfMeanPropagator,
                Some(other) => {
                    return Err(CliError::invalid(
                        "recipe",
                        format!("expected 'mean_fidelity' or 'mean_propagator', got '{other}'"),
                    ))
                }
            };
            let init = parse_enum("init", args.init, file.init.clone(), InitialState::Y)?;
            let job = DecayJob {
                spec,
                init,
                sampling,
                observable,
                recipe,
                cycles: args.cycles.or(file.cycles).unwrap_or(100),
                sigma: args.sigma.or(file.sigma).unwrap_or(0.0),
                draws: args.draws.or(file.draws).unwrap_or(1000),
                sigma_b: args.sigma_b.or(file.sigma_b).unwrap_or(0.0),
                tau_e,
                dt: args.dt.or(file.dt).unwrap_or(tau_e / 10.0),
                paths: args.paths.or(file.paths).unwrap_or(1),
            };
            Ok(RunConfig {
                command: Command::Decay(job),
                seed,
                workers,
                out_dir,
                format,
            })
        }
        CliCommand::Sweep(args) => {
            let file = load_file(&args.common)?;
            let (seed, workers, out_dir, format) = resolve_common(&args.common, &file)?;
            let t_p = args.tp.or(file.tp).unwrap_or(DEFAULT_T_P);
            let tokens = args
                .sequences
                .or_else(|| file.sequences.clone())
                .ok_or_else(|| CliError::invalid("sequences", "missing --sequences"))?;
            let specs = tokens
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| parse_sequence_token(t.trim(), DEFAULT_TAU_D, t_p))
                .collect::<Result<Vec<_>, _>>()?;
            let tau_text = args
                .tau_d_list
                .or_else(|| file.tau_d_list.clone())
                .ok_or_else(|| CliError::invalid("tau_d_list", "missing --tau-d-list"))?;
            let tau_d_list = parse_float_list("tau_d_list", &tau_text)?;
            let tau_e = args.tau_e.or(file.tau_e).unwrap_or(DEFAULT_TAU_E);
            let init = parse_enum("init", args.init, file.init.clone(), InitialState::Y)?;
            let job = SweepJob {
                specs,
                tau_d_list,
                init,
                sigma: args.sigma.or(file.sigma).unwrap_or(0.02),
                draws: args.draws.or(file.draws).unwrap_or(8),
                sigma_b: args.sigma_b.or(file.sigma_b).unwrap_or(DEFAULT_SIGMA_B),
                tau_e,
                dt: args.dt.or(file.dt).unwrap_or(tau_e / 10.0),
                paths: args.paths.or(file.paths).unwrap_or(8),
                max_cycles: args.max_cycles.or(file.max_cycles).unwrap_or(400),
            };
            Ok(RunConfig {
                command: Command::Sweep(job),
                seed,
                workers,
                out_dir,
                format,
            })
        }
        CliCommand::Catalog(args) => {
            let file = load_file(&args.common)?;
            let (seed, workers, out_dir, format) = resolve_common(&args.common, &file)?;
            Ok(RunConfig {
                command: Command::Catalog,
                seed,
                workers,
                out_dir,
                format,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("ddsim: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&config) {
        Ok(summary) => {
            if let Some(text) = summary.stdout {
                print!("{text}");
            }
            for path in &summary.data_files {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ddsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
