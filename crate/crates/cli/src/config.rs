//! Parsed command line. Every config prints back to an argument list that
//! parses to the same value, see [`CliConfig::to_args`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use itereq::DistributionSpec;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "itereq", version, about = "Iterated equilibrium distributions and stop-loss transforms, as CSV")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output file, written atomically. Relative paths resolve against
    /// $ITEREQ_OUT_DIR when it is set. Defaults to stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Tail of the s-iterate at each x.
    Tail(PointArgs),
    /// Density of the s-iterate at each x.
    Density(PointArgs),
    /// Moments of the s-iterate.
    Moments(MomentsArgs),
    /// Stop-loss transform E(X - x)_+^order.
    Stoploss(StopLossArgs),
    /// Sup distance to the limiting tail for a range of s.
    Converge(ConvergeArgs),
    /// s-FR order check of two specs on an x grid.
    Order(OrderArgs),
    /// Gamma convolution differences against the printed formula.
    DiffReport(DiffReportArgs),
    /// Seeded draws from the s-iterate.
    Sample(SampleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tail(_) => "tail",
            Command::Density(_) => "density",
            Command::Moments(_) => "moments",
            Command::Stoploss(_) => "stoploss",
            Command::Converge(_) => "converge",
            Command::Order(_) => "order",
            Command::DiffReport(_) => "diff-report",
            Command::Sample(_) => "sample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gamma,
    Weibull,
    Exp,
}

impl fmt::Display for FamilyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyArg::Gamma => "gamma",
            FamilyArg::Weibull => "weibull",
            FamilyArg::Exp => "exp",
        })
    }
}

impl FromStr for FamilyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false).map_err(|_| format!("unknown family '{s}'"))
    }
}

/// A shape as typed. `2` selects the integer-shape closed forms, `2.0` the
/// numerical routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeArg {
    Integer(u32),
    Real(f64),
}

impl FromStr for ShapeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            return s.parse().map(ShapeArg::Integer).map_err(|e| format!("bad shape '{s}': {e}"));
        }
        s.parse().map(ShapeArg::Real).map_err(|e| format!("bad shape '{s}': {e}"))
    }
}

impl fmt::Display for ShapeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeArg::Integer(n) => write!(f, "{n}"),
            ShapeArg::Real(a) => write!(f, "{a:?}"),
        }
    }
}

/// Distribution parameters as given, before validation.
#[derive(Debug, Clone, Copy, PartialEq, Args)]
pub struct SpecParams {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, allow_negative_numbers = true)]
    pub shape: Option<ShapeArg>,
    /// Gamma and Weibull scale, or the exponential mean. Defaults to 1.
    #[arg(long, allow_negative_numbers = true)]
    pub scale: Option<f64>,
    /// Exponential rate, the alternative to --scale.
    #[arg(long, allow_negative_numbers = true)]
    pub rate: Option<f64>,
}

impl SpecParams {
    pub fn build(&self) -> Result<DistributionSpec, CliError> {
        let usage = |m: String| CliError::Usage(m);
        let lib = |e: itereq::Error| CliError::Usage(e.to_string());
        match self.family {
            FamilyArg::Gamma | FamilyArg::Weibull => {
                if self.rate.is_some() {
                    return Err(usage(format!("--rate applies only to exp, not {}", self.family)));
                }
                let shape = self.shape.ok_or_else(|| usage(format!("{} needs --shape", self.family)))?;
                let scale = self.scale.unwrap_or(1.0);
                match (self.family, shape) {
                    (FamilyArg::Gamma, ShapeArg::Integer(n)) => DistributionSpec::erlang(n, scale),
                    (FamilyArg::Gamma, ShapeArg::Real(a)) => DistributionSpec::gamma(a, scale),
                    (_, s) => {
                        let a = match s {
                            ShapeArg::Integer(n) => n as f64,
                            ShapeArg::Real(a) => a,
                        };
                        DistributionSpec::weibull(a, scale)
                    }
                }
                .map_err(lib)
            }
            FamilyArg::Exp => {
                if self.shape.is_some() {
                    return Err(usage("exp takes no --shape".into()));
                }
                match (self.rate, self.scale) {
                    (Some(_), Some(_)) => Err(usage("give --rate or --scale for exp, not both".into())),
                    (None, Some(scale)) => DistributionSpec::exponential(1.0)
                        .and_then(|e| e.with_scale(scale))
                        .map_err(lib),
                    (rate, None) => DistributionSpec::exponential(rate.unwrap_or(1.0)).map_err(lib),
                }
            }
        }
    }

    fn push_args(&self, out: &mut Vec<String>) {
        out.push(format!("--family={}", self.family));
        if let Some(s) = self.shape {
            out.push(format!("--shape={s}"));
        }
        if let Some(s) = self.scale {
            out.push(format!("--scale={s:?}"));
        }
        if let Some(r) = self.rate {
            out.push(format!("--rate={r:?}"));
        }
    }
}

/// `gamma(shape=2,scale=1.0)`; absent parameters are left out.
impl fmt::Display for SpecParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(s) = self.shape {
            parts.push(format!("shape={s}"));
        }
        if let Some(s) = self.scale {
            parts.push(format!("scale={s:?}"));
        }
        if let Some(r) = self.rate {
            parts.push(format!("rate={r:?}"));
        }
        write!(f, "{}({})", self.family, parts.join(","))
    }
}

/// Accepts `family` or `family(key=value,...)` with keys shape, scale, rate.
impl FromStr for SpecParams {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (name, body) = match text.find('(') {
            Some(i) => {
                let body = text[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| format!("spec '{text}' is missing ')'"))?;
                (&text[..i], body)
            }
            None => (text, ""),
        };
        let mut spec = SpecParams {
            family: name.trim().parse()?,
            shape: None,
            scale: None,
            rate: None,
        };
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in spec, got '{item}'"))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || v.parse::<f64>().map_err(|e| format!("bad {k} '{v}': {e}"));
            let dup = |set: bool| if set { Err(format!("{k} given twice in spec")) } else { Ok(()) };
            match k {
                "shape" => {
                    dup(spec.shape.is_some())?;
                    spec.shape = Some(v.parse()?);
                }
                "scale" => {
                    dup(spec.scale.is_some())?;
                    spec.scale = Some(num()?);
                }
                "rate" => {
                    dup(spec.rate.is_some())?;
                    spec.rate = Some(num()?);
                }
                _ => return Err(format!("unknown spec key '{k}'")),
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        })
    }
}

/// Either an explicit `--x` list or a generated grid.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct XGridArgs {
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
          conflicts_with_all = ["x_min", "x_max", "points", "spacing"])]
    pub x: Vec<f64>,
    /// Grid start, default 0.
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    /// Number of grid points, default 50.
    #[arg(long)]
    pub points: Option<usize>,
    /// Default linear.
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
}

impl XGridArgs {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if !self.x.is_empty() {
            return Ok(self.x.clone());
        }
        let usage = |m: &str| CliError::Usage(m.into());
        let hi = self.x_max.ok_or_else(|| usage("give --x or --x-max"))?;
        let lo = self.x_min.unwrap_or(0.0);
        let n = self.points.unwrap_or(50);
        if n == 0 {
            return Err(usage("--points must be at least 1"));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || (n > 1 && hi == lo) {
            return Err(CliError::Usage(format!("grid needs finite --x-min < --x-max, got [{lo}, {hi}]")));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let last = (n - 1) as f64;
        let grid = match self.spacing.unwrap_or(Spacing::Linear) {
            Spacing::Linear => (0..n).map(|i| lo + (hi - lo) * i as f64 / last).collect::<Vec<_>>(),
            Spacing::Log => {
                if lo <= 0.0 {
                    return Err(usage("log spacing needs --x-min > 0"));
                }
                let (a, b) = (lo.ln(), hi.ln());
                (0..n).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
            }
        };
        let mut grid = grid;
        grid[0] = lo;
        grid[n - 1] = hi;
        Ok(grid)
    }

    fn push_args(&self, out: &mut Vec<String>) {
        if !self.x.is_empty() {
            out.push(format!("--x={}", join(&self.x)));
        }
        if let Some(v) = self.x_min {
            out.push(format!("--x-min={v:?}"));
        }
        if let Some(v) = self.x_max {
            out.push(format!("--x-max={v:?}"));
        }
        if let Some(n) = self.points {
            out.push(format!("--points={n}"));
        }
        if let Some(s) = self.spacing {
            out.push(format!("--spacing={s}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub spec: SpecParams,
    #[arg(long)]
    pub s: u32,
    #[command(flatten)]
    pub grid: XGridArgs,
    /// Relative tolerance for the quadrature routes.
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub spec: SpecParams,
    #[arg(long)]
    pub s: u32,
    /// Comma-separated moment orders.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct StopLossArgs {
    #[command(flatten)]
    pub spec: SpecParams,
    #[arg(long)]
    pub order: u32,
    #[command(flatten)]
    pub grid: XGridArgs,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub spec: SpecParams,
    #[command(flatten)]
    pub grid: XGridArgs,
    #[arg(long, default_value_t = 1)]
    pub s_min: u32,
    #[arg(long)]
    pub s_max: u32,
    #[arg(long, default_value_t = 1)]
    pub s_step: u32,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct OrderArgs {
    /// Smaller spec, e.g. "gamma(shape=2,scale=1)".
    #[arg(long)]
    pub lhs: SpecParams,
    /// Larger spec.
    #[arg(long)]
    pub rhs: SpecParams,
    #[arg(long)]
    pub s: u32,
    #[command(flatten)]
    pub grid: XGridArgs,
    /// Allowed decrease of the log ratio between neighbouring points.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DiffReportArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3, 4, 5, 6])]
    pub n: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3, 4, 5, 6])]
    pub s: Vec<u32>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
          default_values_t = [0.5, 1.0, 2.0, 5.0])]
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecParams,
    #[arg(long)]
    pub s: u32,
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn join<T: fmt::Debug>(values: &[T]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

impl CliConfig {
    /// Arguments (without the program name) that parse back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut out = vec![self.command.name().to_string()];
        match &self.command {
            Command::Tail(a) | Command::Density(a) => {
                a.spec.push_args(&mut out);
                out.push(format!("--s={}", a.s));
                a.grid.push_args(&mut out);
                if let Some(t) = a.rel_tol {
                    out.push(format!("--rel-tol={t:?}"));
                }
            }
            Command::Moments(a) => {
                a.spec.push_args(&mut out);
                out.push(format!("--s={}", a.s));
                out.push(format!("--m={}", join(&a.m)));
            }
            Command::Stoploss(a) => {
                a.spec.push_args(&mut out);
                out.push(format!("--order={}", a.order));
                a.grid.push_args(&mut out);
                if let Some(t) = a.rel_tol {
                    out.push(format!("--rel-tol={t:?}"));
                }
            }
            Command::Converge(a) => {
                a.spec.push_args(&mut out);
                a.grid.push_args(&mut out);
                out.push(format!("--s-min={}", a.s_min));
                out.push(format!("--s-max={}", a.s_max));
                out.push(format!("--s-step={}", a.s_step));
            }
            Command::Order(a) => {
                out.push(format!("--lhs={}", a.lhs));
                out.push(format!("--rhs={}", a.rhs));
                out.push(format!("--s={}", a.s));
                a.grid.push_args(&mut out);
                out.push(format!("--tol={:?}", a.tol));
            }
            Command::DiffReport(a) => {
                out.push(format!("--lambda={:?}", a.lambda));
                out.push(format!("--n={}", join(&a.n)));
                out.push(format!("--s={}", join(&a.s)));
                out.push(format!("--x={}", join(&a.x)));
            }
            Command::Sample(a) => {
                a.spec.push_args(&mut out);
                out.push(format!("--s={}", a.s));
                out.push(format!("--count={}", a.count));
                out.push(format!("--seed={}", a.seed));
            }
        }
        if let Some(p) = &self.output {
            out.push(format!("--output={}", p.display()));
        }
        out
    }
}
