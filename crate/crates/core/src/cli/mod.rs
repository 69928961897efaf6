//! Command-line front end. Every run writes its outputs plus a
//! `<output>.manifest.json` record that `replay` can re-execute.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const OUT_DIR_ENV: &str = "BIGJUMPS_OUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(name = "bigjumps", version, about = "Cut-off heavy-tailed sums and lattice-torus graphs")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Condensation constant K_rho.
    Krho(KrhoArgs),
    /// Window probability of one W^(n) against its shape-density prediction.
    TailCheck(TailCheckArgs),
    /// Law-of-large-numbers deviation probabilities.
    Lln(LlnArgs),
    /// Draws of W^(n) or S_n to CSV.
    Sample(SampleArgs),
    /// P(S_n in I_n) at one n.
    Estimate(EstimateArgs),
    /// Ratio of P(S_n in I_n) to its asymptotic prediction over several n.
    LdpSweep(SweepArgs),
    /// Conditioned replicas and their big jumps.
    Condition(ConditionArgs),
    /// Chi-square test of conditioned jump sizes against the limit density.
    Gof(GofArgs),
    /// Lattice-torus random graph.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Out-degree tail constant of the torus graph.
    CalibrateH(CalibrateArgs),
    /// Re-runs the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "graph", rename_all = "kebab-case")]
pub enum GraphCommand {
    Gen(GraphGenArgs),
    Degrees(GraphDegreesArgs),
    Condense(GraphCondenseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrhoMethodArg {
    Auto,
    Grid,
    MonteCarlo,
}

#[derive(Debug, Args, Serialize)]
#[command(group = ArgGroup::new("source").required(true).multiple(false).args(["h", "scheme"]))]
pub struct KrhoArgs {
    /// `uniform` or a two-column (x, h) table file.
    #[arg(long)]
    pub h: Option<String>,
    /// Scheme config file; its shape density is used.
    #[arg(long)]
    pub scheme: Option<PathBuf>,
    #[arg(long)]
    pub rho: f64,
    /// Defaults to ceil(rho).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = KrhoMethodArg::Auto)]
    pub method: KrhoMethodArg,
    /// Include the point mass at 1 left by the cut-off.
    #[arg(long)]
    pub with_atom: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TailCheckArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LlnArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long)]
    pub zeta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    Draw,
    Sum,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub replicas: u64,
    #[arg(long, value_enum)]
    pub kind: SampleKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `finite-n`, `limit` or a number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CenteringArg {
    FiniteN,
    Limit,
    Value(f64),
}

impl FromStr for CenteringArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "finite-n" => Ok(Self::FiniteN),
            "limit" => Ok(Self::Limit),
            v => v.parse().map(Self::Value).map_err(|_| format!("expected finite-n, limit or a number, got {v}")),
        }
    }
}

/// `default` or a number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EpsArg {
    Default,
    Value(f64),
}

impl FromStr for EpsArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "default" => Ok(Self::Default),
            v => v.parse().map(Self::Value).map_err(|_| format!("expected `default` or a number, got {v}")),
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[group(id = "width_rule", required = true, multiple = false)]
pub struct WidthArgs {
    /// Fixed window width rho_2 - rho_1.
    #[arg(long)]
    pub width: Option<f64>,
    /// `w0,gamma`: width w0 n^-gamma.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub width_power: Option<Vec<f64>>,
    /// `rho1,rho2`: the window itself.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub between: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    #[arg(long)]
    pub rho: f64,
    #[command(flatten)]
    pub width: WidthArgs,
    /// Use [rho, rho + width] instead of rho ± width/2.
    #[arg(long)]
    pub left: bool,
    #[arg(long)]
    pub centering: CenteringArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Naive,
    Structured,
    Exact,
    /// Product-of-k window probability of the k largest coordinates.
    Tk,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum)]
    pub method: EstimateMethod,
    /// Big-jump threshold for the structured method.
    #[arg(long)]
    pub eps: Option<EpsArg>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Adds a structured row per n with this threshold.
    #[arg(long)]
    pub eps: Option<EpsArg>,
    /// Sample even when the exact convolution is available.
    #[arg(long)]
    pub no_exact: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConditionArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub eps: EpsArg,
    #[arg(long)]
    pub hits: usize,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_samples: u64,
    /// Tolerance for the big-jump-sum and bulk checks in the summary.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Profiles file (JSON lines); the summary goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group = ArgGroup::new("input").required(true).multiple(false).args(["profiles", "calibrate"]))]
pub struct GofArgs {
    #[arg(long)]
    pub scheme: PathBuf,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub bins: usize,
    /// Profiles written by `condition`.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Test this many draws from the limit law itself (k = 2).
    #[arg(long)]
    pub calibrate: Option<usize>,
    #[arg(long)]
    pub atom: bool,
    #[arg(long)]
    pub rescale: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `vertex:radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plant(pub u64, pub f64);

impl FromStr for Plant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (v, r) = s.split_once(':').ok_or_else(|| format!("expected vertex:radius, got {s}"))?;
        Ok(Plant(v.parse().map_err(|e| format!("{e}"))?, r.parse().map_err(|e| format!("{e}"))?))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GraphGenArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long = "N")]
    pub half_width: u64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub seed: u64,
    /// Override a vertex radius, e.g. `0:1e9`.
    #[arg(long)]
    pub plant: Vec<Plant>,
    #[arg(long, default_value_t = 50_000_000)]
    pub max_vertices: u64,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_visits: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphDegreesArgs {
    /// Directory holding a generated graph (default: the output directory).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphCondenseArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub half_widths: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub path: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Arguments after the program name; `replay` re-parses these.
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub duration_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Parses `args` (program name first), runs the command, and returns the exit
/// code: 0 on success, 1 on a domain or I/O error, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return 2;
        }
        crate::rng::set_workers(w);
    }
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
