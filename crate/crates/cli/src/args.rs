use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "hlgi", version, about = "Hybrid-Liouvillian Leggett-Garg toolkit: figure data as CSV or JSON")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Trajectory of rho(t) with normalized Bloch components.
    Evolve(EvolveArgs),
    /// K3 at a fixed t, its t-scan, or its maximum over t.
    K3(K3Args),
    /// Maximum of K3 over a (gamma, q) grid.
    Sweep,
    /// Liouvillian eigenvalues, cubic roots and discriminant.
    Spectrum,
    /// Exceptional-point radius r_ep(q).
    EpLocus,
    /// Closed-form Bloch trajectories for both measurement branches.
    BlochTraj(SamplingArgs),
    /// No-signaling-in-time and arrow-of-time defects.
    Nsit(NsitArgs),
    /// Residuals of the tanh(log q) fit against a sweep file.
    FitCheck(FitCheckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Coherent energy scale; times are in units of 1/J.
    #[arg(long = "J", global = true, default_value_t = 1.0)]
    pub j: f64,
    /// Hamiltonian angle; the reduced Bloch and cubic results need pi/2.
    #[arg(long, global = true, default_value_t = FRAC_PI_2)]
    pub theta: f64,
    /// Dissipation rate.
    #[arg(long, global = true, default_value_t = 0.9905)]
    pub gamma: f64,
    /// Detector efficiency in [0, 1].
    #[arg(long, global = true, default_value_t = 1.0)]
    pub q: f64,
    /// Evaluation time (measurement interval for k3 and nsit).
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true, default_value_t = 20.0)]
    pub t_max: f64,
    /// Integration step for the rk4 and kraus engines.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub dt: f64,
    /// `min:max:n[:lin|log]`
    #[arg(long, global = true)]
    pub grid_gamma: Option<GridSpec>,
    /// `min:max:n[:lin|log]`
    #[arg(long, global = true)]
    pub grid_q: Option<GridSpec>,
    #[arg(long, global = true, value_enum, default_value_t = EngineArg::Exact)]
    pub engine: EngineArg,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid scans; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub eps_trace: f64,
    /// Points of the t grid searched by the optimizer.
    #[arg(long, global = true, default_value_t = 2000)]
    pub resolution: usize,
    /// Bracket width at which t refinement stops.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineArg {
    Exact,
    Rk4,
    Kraus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    PlusY,
    MinusY,
    Up,
    Down,
}

#[derive(Debug, Args, Serialize)]
pub struct SamplingArgs {
    /// Number of sampling intervals on [0, t-max].
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t = InitialState::PlusY, conflicts_with = "rho")]
    pub initial: InitialState,
    /// Initial state as `rho00,re(rho01),im(rho01),rho11`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub rho: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct K3Args {
    /// Emit K3 on the optimizer's t grid instead of its maximum.
    #[arg(long, conflicts_with = "t")]
    pub scan: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct NsitArgs {
    /// Evaluate at the t maximizing K3 for each cell.
    #[arg(long, conflicts_with = "t")]
    pub maximize_over_t: bool,
    #[arg(long, value_enum, default_value_t = Sign::Plus)]
    pub q0: Sign,
    #[arg(long, value_enum, default_value_t = Sign::Plus)]
    pub q2: Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Args, Serialize)]
pub struct FitCheckArgs {
    /// Sweep output (CSV or JSON) to compare against.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = LogBaseArg::Auto)]
    pub log_base: LogBaseArg,
    /// Evaluate the fit for gamma in [1, 2] as well.
    #[arg(long)]
    pub allow_extrapolation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBaseArg {
    /// Pick the base with the smaller median residual.
    Auto,
    E,
    #[value(name = "10")]
    #[serde(rename = "10")]
    Ten,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub log: bool,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected min:max:n[:lin|log], got {s:?}"));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let (min, max) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|e| format!("{:?}: {e}", parts[2]))?;
        let log = match parts.get(3).map(|x| x.trim()) {
            None | Some("lin") | Some("linear") => false,
            Some("log") => true,
            Some(other) => return Err(format!("unknown spacing {other:?}")),
        };
        if n == 0 {
            return Err("grid needs at least one point".into());
        }
        if !(min.is_finite() && max.is_finite()) || (log && !(min > 0.0 && max > 0.0)) {
            return Err(format!("bad bounds in {s:?}"));
        }
        Ok(Self { min, max, n, log })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.min, self.max, self.n, if self.log { "log" } else { "lin" })
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.log {
            hlgi_core::lgi::logspace(self.min, self.max, self.n).expect("bounds checked at parse time")
        } else {
            hlgi_core::lgi::linspace(self.min, self.max, self.n)
        }
    }
}
