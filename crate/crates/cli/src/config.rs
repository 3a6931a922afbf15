//! Run configuration: defaults, config-file values, command-line flags, in
//! rising precedence. The fully resolved configuration is what lands in the
//! metadata sidecar.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use ddsim_core::sequence::{Family, SequenceSpec};
use ddsim_core::simulator::{AveragingRecipe, InitialState, Sampling};

use crate::CliError;

/// Fixed default seed: unseeded runs stay reproducible.
pub const DEFAULT_SEED: u64 = 0x0DD5_EED0;
pub const DEFAULT_T_P: f64 = 10.6;
pub const DEFAULT_TAU_D: f64 = 21.2;
pub const DEFAULT_TAU_E: f64 = 100.0;
pub const DEFAULT_SIGMA_B: f64 = 0.0226;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("expected 'csv' or 'json', got '{other}'")),
        }
    }
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Magnetization,
    Fidelity,
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "magnetization" => Ok(Observable::Magnetization),
            "fidelity" => Ok(Observable::Fidelity),
            other => Err(format!(
                "expected 'magnetization' or 'fidelity', got '{other}'"
            )),
        }
    }
}

/// Robustness-map job: deterministic static errors on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapJob {
    pub spec: SequenceSpec,
    pub pulses: u32,
    pub grid: usize,
    pub eps_max: f64,
    pub offset_max: f64,
}

/// Decay-trace job: ensemble-averaged magnetization or fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayJob {
    pub spec: SequenceSpec,
    pub init: InitialState,
    pub sampling: Sampling,
    pub observable: Observable,
    pub recipe: AveragingRecipe,
    pub cycles: u32,
    pub sigma: f64,
    pub draws: u32,
    pub sigma_b: f64,
    pub tau_e: f64,
    pub dt: f64,
    pub paths: u32,
}

/// Duty-cycle sweep job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepJob {
    pub specs: Vec<SequenceSpec>,
    pub tau_d_list: Vec<f64>,
    pub init: InitialState,
    pub sigma: f64,
    pub draws: u32,
    pub sigma_b: f64,
    pub tau_e: f64,
    pub dt: f64,
    pub paths: u32,
    pub max_cycles: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    Map(MapJob),
    Decay(DecayJob),
    Sweep(SweepJob),
    Catalog,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

/// Optional values read from a `--config` JSON file; every field can still
/// be overridden by an explicit flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub sequence: Option<String>,
    pub symmetric: Option<bool>,
    pub knill: Option<bool>,
    pub pulse_count: Option<u32>,
    pub cdd_level: Option<u32>,
    pub tau_d: Option<f64>,
    pub tp: Option<f64>,
    pub pulses: Option<u32>,
    pub grid: Option<usize>,
    pub eps_max: Option<f64>,
    pub offset_max: Option<f64>,
    pub init: Option<String>,
    pub sampling: Option<String>,
    pub observable: Option<String>,
    pub recipe: Option<String>,
    pub cycles: Option<u32>,
    pub sigma: Option<f64>,
    pub draws: Option<u32>,
    pub sigma_b: Option<f64>,
    pub tau_e: Option<f64>,
    pub dt: Option<f64>,
    pub paths: Option<u32>,
    pub sequences: Option<String>,
    pub tau_d_list: Option<String>,
    pub max_cycles: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::invalid("config", e.to_string()))
    }
}

/// Parse one sequence token: `family[:sym][:knill][:n<count>][:l<level>]`,
/// e.g. `xy4:sym`, `cpmg:n4`, `cdd:l2:knill`.
pub fn parse_sequence_token(token: &str, tau_d: f64, t_p: f64) -> Result<SequenceSpec, CliError> {
    let mut parts = token.split(':');
    let name = parts.next().unwrap_or_default();
    let family = Family::from_str(name)
        .map_err(|e| CliError::invalid("sequence", e.to_string()))?;
    let mut spec = SequenceSpec::new(family, tau_d, t_p).pulses(1);
    for part in parts {
        if part == "sym" {
            spec = spec.symmetric(true);
        } else if part == "knill" {
            spec = spec.robust(true);
        } else if let Some(n) = part.strip_prefix('n') {
            let count: u32 = n
                .parse()
                .map_err(|_| CliError::invalid("sequence", format!("bad pulse count '{part}'")))?;
            spec = spec.pulses(count);
        } else if let Some(l) = part.strip_prefix('l') {
            let level: u32 = l
                .parse()
                .map_err(|_| CliError::invalid("sequence", format!("bad cdd level '{part}'")))?;
            spec = spec.level(level);
        } else {
            return Err(CliError::invalid(
                "sequence",
                format!("unknown modifier '{part}' in '{token}'"),
            ));
        }
    }
    Ok(spec)
}

pub fn parse_float_list(field: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        out.push(
            item.parse::<f64>()
                .map_err(|_| CliError::invalid(field, format!("'{item}' is not a number")))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::invalid(field, "empty list"));
    }
    Ok(out)
}

pub fn validate(config: &RunConfig) -> Result<(), CliError> {
    match &config.command {
        Command::Map(job) => {
            if job.grid < 1 {
                return Err(CliError::invalid("grid", "must be >= 1"));
            }
            if job.pulses < 1 {
                return Err(CliError::invalid("pulses", "must be >= 1"));
            }
            if job.spec.t_p <= 0.0 {
                return Err(CliError::invalid("tp", "must be > 0"));
            }
            if !(job.eps_max > 0.0) || !(job.offset_max >= 0.0) {
                return Err(CliError::invalid("eps_max", "ranges must be positive"));
            }
        }
        Command::Decay(job) => {
            if job.cycles < 1 {
                return Err(CliError::invalid("cycles", "must be >= 1"));
            }
            if job.draws < 1 {
                return Err(CliError::invalid("draws", "must be >= 1"));
            }
            if job.spec.t_p <= 0.0 {
                return Err(CliError::invalid("tp", "must be > 0"));
            }
            if job.sigma < 0.0 {
                return Err(CliError::invalid("sigma", "must be >= 0"));
            }
            if job.sigma_b > 0.0 && !(job.dt > 0.0 && job.dt <= job.tau_e / 10.0) {
                return Err(CliError::invalid("dt", "must satisfy 0 < dt <= tau_e/10"));
            }
        }
        Command::Sweep(job) => {
            if job.specs.is_empty() {
                return Err(CliError::invalid("sequences", "empty list"));
            }
            if job.tau_d_list.iter().any(|&t| t < 0.0) {
                return Err(CliError::invalid("tau_d_list", "delays must be >= 0"));
            }
            if job.max_cycles < 1 {
                return Err(CliError::invalid("max_cycles", "must be >= 1"));
            }
            if job.sigma_b > 0.0 && !(job.dt > 0.0 && job.dt <= job.tau_e / 10.0) {
                return Err(CliError::invalid("dt", "must satisfy 0 < dt <= tau_e/10"));
            }
        }
        Command::Catalog => {}
    }
    Ok(())
}
