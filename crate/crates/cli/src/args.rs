use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "heatrec",
    version,
    about = "Heat kernels on space forms via dimension recurrences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a kernel h(t, r) on a grid.
    Eval(EvalArgs),
    /// Exact coefficient tables.
    Coeffs(CoeffsArgs),
    /// Run the residual and identity checks.
    Verify(VerifyArgs),
    /// Solve the descent identity for the S^2 kernel by time stepping.
    Volterra(VolterraArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Geometry {
    Sphere,
    Euclidean,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

/// A single value `x`, or `start:stop:count[:linear|log]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * f,
                    Spacing::Log => self.start * (self.stop / self.start).powf(f),
                }
            })
            .map(|x| {
                if x > self.stop.max(self.start) {
                    self.stop
                } else {
                    x
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {p:?}: {e}"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            [x] => {
                let v = num(x)?;
                GridSpec {
                    start: v,
                    stop: v,
                    count: 1,
                    spacing: Spacing::Linear,
                }
            }
            [a, b, n] | [a, b, n, _] => {
                let count = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad count {n:?}: {e}"))?;
                let spacing = match parts.get(3).map(|p| p.trim()) {
                    None | Some("linear") => Spacing::Linear,
                    Some("log") => Spacing::Log,
                    Some(other) => return Err(format!("unknown spacing {other:?}")),
                };
                GridSpec {
                    start: num(a)?,
                    stop: num(b)?,
                    count,
                    spacing,
                }
            }
            _ => return Err("expected x or start:stop:count[:linear|log]".into()),
        };
        if spec.count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if !spec.start.is_finite() || !spec.stop.is_finite() {
            return Err("grid ends must be finite".into());
        }
        if spec.spacing == Spacing::Log && !(spec.start > 0.0 && spec.stop > 0.0) {
            return Err("log spacing needs positive ends".into());
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub space: Geometry,
    /// Manifold dimension n.
    #[arg(long)]
    pub dim: u32,
    #[arg(long)]
    pub t: GridSpec,
    #[arg(long)]
    pub r: GridSpec,
    /// Relative tolerance for quadrature-based routes.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagFamily {
    Hyperbolic,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    /// c_{m,k}: elementary symmetric polynomials of 1², …, (m-1)².
    C,
    /// a_{2m+1,k}: heat-trace coefficients of S^{2m+1}.
    Trace,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("which").required(true).args(["diag", "table"])))]
pub struct CoeffsArgs {
    /// Diagonal polynomial P_m (hyperbolic) or p_m (sphere).
    #[arg(long, value_enum)]
    pub diag: Option<DiagFamily>,
    #[arg(long, value_enum)]
    pub table: Option<Table>,
    #[arg(long)]
    pub m: u32,
    /// Largest k of the heat-trace table.
    #[arg(long, default_value_t = 3)]
    pub k_max: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Closed,
    Spectral,
    Abel,
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControlArg {
    DropExp,
    #[value(name = "perturb-2pi")]
    Perturb2Pi,
    FlipSign,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Substitute a deliberately broken S^3 kernel.
    #[arg(long, value_enum)]
    pub control: Option<ControlArg>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeSpacing {
    Uniform,
    Graded,
}

#[derive(Debug, Args)]
pub struct VolterraArgs {
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 32)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "graded")]
    pub spacing: TimeSpacing,
    /// Equally spaced distances in [0, π].
    #[arg(long, default_value_t = 32)]
    pub r_nodes: usize,
    /// Largest accepted absolute difference from the zonal series.
    #[arg(long, default_value_t = 5e-4)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
