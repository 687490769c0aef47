use itereq::convolve::discrepancy_report;
use itereq::csv::{format_number, write_csv, CsvRecord};
use itereq::iterate::{
    iterated_density_with, iterated_moment, iterated_tail_with, stop_loss_with, LN_REPRESENTABLE_FLOOR,
};
use itereq::limits::convergence_report;
use itereq::ordering::sfr_check;
use itereq::sampler::sample_iterated;
use itereq::{DistributionSpec, IterationIndex, QuadratureConfig};

use crate::config::{
    CliConfig, Command, ConvergeArgs, DiffReportArgs, MomentsArgs, OrderArgs, PointArgs, SampleArgs,
    StopLossArgs,
};
use crate::CliError;

type Meta = Vec<(&'static str, String)>;

struct XValue(f64, f64);

impl CsvRecord for XValue {
    fn header() -> &'static [&'static str] {
        &["x", "value"]
    }

    fn fields(&self) -> Vec<String> {
        vec![format_number(self.0), format_number(self.1)]
    }
}

struct MomentRow(u32, f64);

impl CsvRecord for MomentRow {
    fn header() -> &'static [&'static str] {
        &["m", "value"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.0.to_string(), format_number(self.1)]
    }
}

struct StopLossRow {
    x: f64,
    order: u32,
    log_value: f64,
}

impl CsvRecord for StopLossRow {
    fn header() -> &'static [&'static str] {
        &["x", "order", "log_value", "value_if_representable"]
    }

    fn fields(&self) -> Vec<String> {
        let v = self.log_value.exp();
        let shown = if self.log_value >= LN_REPRESENTABLE_FLOOR && v.is_finite() {
            format_number(v)
        } else {
            String::new()
        };
        vec![format_number(self.x), self.order.to_string(), format_number(self.log_value), shown]
    }
}

struct SupRow(u32, f64);

impl CsvRecord for SupRow {
    fn header() -> &'static [&'static str] {
        &["s", "sup_distance"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.0.to_string(), format_number(self.1)]
    }
}

struct LogRatioRow(f64, f64);

impl CsvRecord for LogRatioRow {
    fn header() -> &'static [&'static str] {
        &["x", "log_ratio"]
    }

    fn fields(&self) -> Vec<String> {
        vec![format_number(self.0), format_number(self.1)]
    }
}

struct ValueRow(f64);

impl CsvRecord for ValueRow {
    fn header() -> &'static [&'static str] {
        &["value"]
    }

    fn fields(&self) -> Vec<String> {
        vec![format_number(self.0)]
    }
}

fn index(s: u32) -> Result<IterationIndex, CliError> {
    IterationIndex::new(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn quadrature(rel_tol: Option<f64>) -> Result<QuadratureConfig, CliError> {
    let cfg = match rel_tol {
        Some(t) => QuadratureConfig::default().with_rel_tol(t),
        None => QuadratureConfig::default(),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn base_meta(command: &str) -> Meta {
    vec![("itereq", env!("CARGO_PKG_VERSION").to_string()), ("command", command.to_string())]
}

fn spec_meta(meta: &mut Meta, spec: &DistributionSpec, s: Option<IterationIndex>) {
    meta.push(("spec", spec.to_string()));
    if let Some(s) = s {
        meta.push(("s", s.to_string()));
    }
}

fn render<R: CsvRecord>(meta: &Meta, rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, meta, rows)?;
    Ok(buf)
}

/// Runs the command and returns the CSV bytes.
pub fn execute(config: &CliConfig) -> Result<Vec<u8>, CliError> {
    let name = config.command.name();
    let mut meta = base_meta(name);
    match &config.command {
        Command::Tail(a) => points(a, &mut meta, "iterated_tail", |spec, s, x, cfg| {
            iterated_tail_with(spec, s, x, cfg).map(|e| e.log_value)
        }),
        Command::Density(a) => points(a, &mut meta, "iterated_density", |spec, s, x, cfg| {
            iterated_density_with(spec, s, x, cfg).map(|e| e.log_value)
        }),
        Command::Moments(a) => moments(a, &mut meta),
        Command::Stoploss(a) => stoploss(a, &mut meta),
        Command::Converge(a) => converge(a, &mut meta),
        Command::Order(a) => order(a, &mut meta),
        Command::DiffReport(a) => diff_report(a, &mut meta),
        Command::Sample(a) => sample(a, &mut meta),
    }
}

fn points(
    a: &PointArgs,
    meta: &mut Meta,
    op: &str,
    eval: impl Fn(&DistributionSpec, IterationIndex, f64, &QuadratureConfig) -> itereq::Result<f64>,
) -> Result<Vec<u8>, CliError> {
    let spec = a.spec.build()?;
    let s = index(a.s)?;
    let cfg = quadrature(a.rel_tol)?;
    let xs = a.grid.points()?;
    let rows = xs
        .iter()
        .map(|&x| eval(&spec, s, x, &cfg).map(|l| XValue(x, l.exp())))
        .collect::<itereq::Result<Vec<_>>>()
        .map_err(|e| CliError::from_lib(op, e))?;
    spec_meta(meta, &spec, Some(s));
    render(meta, &rows)
}

fn moments(a: &MomentsArgs, meta: &mut Meta) -> Result<Vec<u8>, CliError> {
    let spec = a.spec.build()?;
    let s = index(a.s)?;
    let rows = a
        .m
        .iter()
        .map(|&m| iterated_moment(&spec, s, m).map(|v| MomentRow(m, v)))
        .collect::<itereq::Result<Vec<_>>>()
        .map_err(|e| CliError::from_lib("iterated_moment", e))?;
    spec_meta(meta, &spec, Some(s));
    render(meta, &rows)
}

fn stoploss(a: &StopLossArgs, meta: &mut Meta) -> Result<Vec<u8>, CliError> {
    let spec = a.spec.build()?;
    let cfg = quadrature(a.rel_tol)?;
    let rows = a
        .grid
        .points()?
        .iter()
        .map(|&x| {
            stop_loss_with(&spec, x, a.order, &cfg).map(|log_value| StopLossRow {
                x,
                order: a.order,
                log_value,
            })
        })
        .collect::<itereq::Result<Vec<_>>>()
        .map_err(|e| CliError::from_lib("stop_loss", e))?;
    spec_meta(meta, &spec, None);
    render(meta, &rows)
}

fn converge(a: &ConvergeArgs, meta: &mut Meta) -> Result<Vec<u8>, CliError> {
    let spec = a.spec.build()?;
    if a.s_step == 0 {
        return Err(CliError::Usage("--s-step must be at least 1".into()));
    }
    index(a.s_min)?;
    if a.s_max < a.s_min {
        return Err(CliError::Usage(format!("--s-max {} is below --s-min {}", a.s_max, a.s_min)));
    }
    let s_values: Vec<u32> = (a.s_min..=a.s_max).step_by(a.s_step as usize).collect();
    let report = convergence_report(&spec, &a.grid.points()?, &s_values)
        .map_err(|e| CliError::from_lib("convergence_report", e))?;
    spec_meta(meta, &spec, None);
    meta.push(("limit_kind", report.limit_kind.to_string()));
    meta.push(("monotone_in_s", report.monotone_in_s(0.0).to_string()));
    if report.dropped_zero {
        meta.push(("dropped", "x=0".into()));
    }
    let rows: Vec<SupRow> = report.s_values.iter().zip(&report.sup_distance).map(|(&s, &d)| SupRow(s, d)).collect();
    render(meta, &rows)
}

fn order(a: &OrderArgs, meta: &mut Meta) -> Result<Vec<u8>, CliError> {
    let lhs = a.lhs.build()?;
    let rhs = a.rhs.build()?;
    let s = index(a.s)?;
    let r = sfr_check(&lhs, &rhs, s, &a.grid.points()?, a.tol).map_err(|e| CliError::from_lib("sfr_check", e))?;
    meta.push(("lhs", lhs.to_string()));
    meta.push(("rhs", rhs.to_string()));
    meta.push(("s", s.to_string()));
    meta.push(("tol", format_number(a.tol)));
    meta.push(("monotone", r.monotone_nondecreasing.to_string()));
    meta.push(("max_violation", format_number(r.max_violation)));
    meta.push(("dropped", r.dropped.to_string()));
    let rows: Vec<LogRatioRow> = r.grid.iter().zip(&r.log_ratio).map(|(&x, &l)| LogRatioRow(x, l)).collect();
    render(meta, &rows)
}

fn diff_report(a: &DiffReportArgs, meta: &mut Meta) -> Result<Vec<u8>, CliError> {
    let rows = discrepancy_report(a.lambda, &a.n, &a.s, &a.x)
        .map_err(|e| CliError::from_lib("gamma_difference", e))?;
    meta.push(("lambda", format_number(a.lambda)));
    render(meta, &rows)
}

fn sample(a: &SampleArgs, meta: &mut Meta) -> Result<Vec<u8>, CliError> {
    let spec = a.spec.build()?;
    let s = index(a.s)?;
    let batch = sample_iterated(&spec, s, a.count, a.seed).map_err(|e| CliError::from_lib("sample_iterated", e))?;
    spec_meta(meta, &spec, Some(s));
    meta.push(("seed", a.seed.to_string()));
    let rows: Vec<ValueRow> = batch.values.iter().map(|&v| ValueRow(v)).collect();
    render(meta, &rows)
}
