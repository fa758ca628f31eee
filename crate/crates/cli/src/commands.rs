use anyhow::anyhow;
use pdxprop::combinat::{catalan, catalan_asymptotic, central_binomial};
use pdxprop::continuum::{continuum_target, convergence_slope, edge_samples, extrapolate_with, ErrorExpansion, Query};
use pdxprop::lattice::{
    lattice_density_bruteforce_with, lattice_density_closed, required_cutoff, transfer_matrix_density, LatticeSpec,
    WeightModel,
};
use pdxprop::pdx::{verify_delta_full, verify_free_identity, VerificationReport, VerifyOptions};
use pdxprop::quadrature::QuadratureSpec;
use pdxprop::Execution;
use serde::Serialize;

use crate::args::{ConvergeArgs, CountArgs, DensityArgs, Expansion, Format, ModelArgs, ModelKind, PdxVerifyArgs};
use crate::output::{format_float, to_json_text, Cell, Table};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or inputs the library refuses.
    Usage(String),
    /// The run completed but a result missed its bound.
    Tolerance(String),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Tolerance(_) => 1,
            Failure::Usage(_) | Failure::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Tolerance(m) => write!(f, "tolerance violated: {m}"),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Rendered output plus an optional tolerance failure to report after the
/// output has been written.
pub struct Outcome {
    pub text: String,
    pub violation: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, violation: None }
    }
}

fn render(table: &Table, format: Format) -> Result<String, Failure> {
    match format {
        Format::Csv => Ok(table.to_csv()),
        Format::Json => to_json_text(&table.to_json()).map_err(Failure::Io),
    }
}

pub fn weight_model(args: &ModelArgs) -> Result<WeightModel, Failure> {
    let model = match args.model {
        ModelKind::Free => WeightModel::Free,
        ModelKind::Step => WeightModel::Step {
            potential: args.potential,
        },
        ModelKind::Delta => WeightModel::Delta {
            coupling: args.coupling,
        },
    };
    model.validate().map_err(usage)?;
    Ok(model)
}

/// `a..b`, inclusive of both ends; empty when `b < a`.
pub fn parse_range(text: &str) -> Result<Vec<u64>, Failure> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| usage(format!("range '{text}' is not of the form a..b")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("range bound '{s}' is not a nonnegative integer")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    Ok((a..=b).collect())
}

/// Comma-separated reals; the empty string gives an empty list.
pub fn parse_list(name: &str, text: &str) -> Result<Vec<f64>, Failure> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--{name}: '{s}' is not a number")))
        })
        .collect()
}

/// Decimal scientific form of `exp(ln)`, valid far beyond the f64 range.
fn format_from_ln(ln: f64) -> String {
    if ln.abs() < 700.0 {
        return format_float(ln.exp());
    }
    let log10 = ln / std::f64::consts::LN_10;
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    if mantissa >= 10.0 {
        mantissa /= 10.0;
        exponent += 1.0;
    }
    format!("{mantissa:.16}e{exponent}")
}

pub fn count(args: &CountArgs) -> Result<Outcome, Failure> {
    if args.n.is_empty() && args.range.is_none() {
        return Err(usage("give --n or --range"));
    }
    let mut ns = args.n.clone();
    if let Some(r) = &args.range {
        ns.extend(parse_range(r)?);
    }
    let mut table = Table::new(vec![
        "n",
        "catalan",
        "central_binomial",
        "catalan_asymptotic",
        "relative_error",
    ]);
    for n in ns {
        let exact = catalan(n);
        let (asym, rel) = match catalan_asymptotic(n) {
            Ok(a) => {
                let ln = a.ln().expect("asymptotic form is positive");
                let rel = a.ratio(&exact.to_log()) - 1.0;
                (Cell::Text(format_from_ln(ln)), Cell::Float(rel))
            }
            Err(_) => (Cell::Empty, Cell::Empty),
        };
        table.push(vec![
            Cell::Int(n),
            Cell::Digits(exact.to_string()),
            Cell::Digits(central_binomial(n).to_string()),
            asym,
            rel,
        ]);
    }
    render(&table, args.output.format).map(Outcome::ok)
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        ((a - b) / b).abs()
    }
}

pub fn density(args: &DensityArgs) -> Result<Outcome, Failure> {
    let model = weight_model(&args.model)?;
    let mut table = Table::new(vec![
        "n",
        "eta",
        "closed",
        "bruteforce",
        "transfer",
        "bruteforce_agrees",
        "transfer_agrees",
    ]);
    for &n in &args.n {
        let spec = LatticeSpec::from_time(n, args.model.mass, args.model.time).map_err(usage)?;
        let closed = lattice_density_closed(model, &spec);
        let brute = if n <= args.enumeration_bound {
            Some(
                lattice_density_bruteforce_with(model, &spec, Execution::default(), args.enumeration_bound)
                    .map_err(usage)?,
            )
        } else {
            None
        };
        let transfer = if n <= args.transfer_bound {
            Some(transfer_matrix_density(0, 0, model, &spec, required_cutoff(n, 0, 0)).map_err(usage)?)
        } else {
            None
        };
        let agrees = |v: Option<f64>| v.map_or(Cell::Empty, |v| Cell::Flag(relative(v, closed) <= args.tol));
        table.push(vec![
            Cell::Int(n),
            Cell::Float(spec.eta()),
            Cell::Float(closed),
            Cell::opt_float(brute),
            Cell::opt_float(transfer),
            agrees(brute),
            agrees(transfer),
        ]);
    }
    render(&table, args.output.format).map(Outcome::ok)
}

pub fn converge(args: &ConvergeArgs) -> Result<Outcome, Failure> {
    if args.n.len() < 2 {
        return Err(usage("converge needs at least 2 --n values"));
    }
    let mut ns = args.n.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != args.n.len() {
        return Err(usage("--n values must be distinct"));
    }
    let model = weight_model(&args.model)?;
    let (m, t) = (args.model.mass, args.model.time);
    let target = continuum_target(model, m, t).map_err(usage)?;
    let samples = edge_samples(model, m, t, &ns, Execution::default()).map_err(usage)?;
    let expansion = match args.expansion {
        Expansion::Auto => ErrorExpansion::for_model(model),
        Expansion::Integer => ErrorExpansion::IntegerPowers,
        Expansion::HalfInteger => ErrorExpansion::HalfIntegerPowers,
    };
    let fit = extrapolate_with(&samples, expansion).map_err(usage)?;
    let slope = convergence_slope(&samples, target).ok();

    let mut table = Table::new(vec!["row", "n", "value", "target", "relative_error", "error_estimate"]);
    for &(n, v) in &samples {
        table.push(vec![
            Cell::Text("sample".into()),
            Cell::Int(n),
            Cell::Float(v),
            Cell::Float(target),
            Cell::Float(relative(v, target)),
            Cell::Empty,
        ]);
    }
    let rel = relative(fit.estimate, target);
    table.push(vec![
        Cell::Text("extrapolated".into()),
        Cell::Empty,
        Cell::Float(fit.estimate),
        Cell::Float(target),
        Cell::Float(rel),
        Cell::Float(fit.error_estimate),
    ]);
    table.push(vec![
        Cell::Text("slope".into()),
        Cell::Empty,
        Cell::opt_float(slope),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
    ]);
    let text = render(&table, args.output.format)?;
    let violation = match args.tol {
        Some(tol) if rel.is_nan() || rel > tol => Some(format!(
            "extrapolated {} vs target {} (relative error {} > {})",
            format_float(fit.estimate),
            format_float(target),
            format_float(rel),
            format_float(tol)
        )),
        _ => None,
    };
    Ok(Outcome { text, violation })
}

#[derive(Serialize)]
struct PdxReports {
    passed: bool,
    free: Option<VerificationReport>,
    delta: Option<VerificationReport>,
}

fn free_grid(x0s: &[f64], x1s: Option<&[f64]>, times: &[f64], mass: f64) -> Result<Vec<Query>, Failure> {
    let mut out = Vec::new();
    for &t in times {
        for &x0 in x0s {
            match x1s {
                None => out.push(Query::new(x0, -x0, t, mass).map_err(usage)?),
                Some(x1s) => {
                    for &x1 in x1s {
                        out.push(Query::new(x0, x1, t, mass).map_err(usage)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn delta_grid(x0s: &[f64], x1s: &[f64], times: &[f64], mass: f64) -> Result<Vec<Query>, Failure> {
    let mut out = Vec::new();
    for &t in times {
        for (s0, s1) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            for &x0 in x0s {
                for &x1 in x1s {
                    out.push(Query::new(s0 * x0.abs(), s1 * x1.abs(), t, mass).map_err(usage)?);
                }
            }
        }
    }
    Ok(out)
}

pub fn pdx_verify(args: &PdxVerifyArgs) -> Result<Outcome, Failure> {
    let x0s = parse_list("x0", &args.x0)?;
    let x1s = args.x1.as_deref().map(|s| parse_list("x1", s)).transpose()?;
    let times = parse_list("T", &args.time)?;
    if x0s.is_empty() || times.is_empty() || x1s.as_ref().is_some_and(|v| v.is_empty()) {
        return Err(usage("empty verification grid"));
    }
    if args.max_subdivisions == 0 {
        return Err(usage("--max-subdivisions must be at least 1"));
    }
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions {
        quad: QuadratureSpec {
            max_subdivisions: args.max_subdivisions,
            ..QuadratureSpec::default()
        },
        single_tolerance: args.tol.unwrap_or(defaults.single_tolerance),
        double_tolerance: args.tol.unwrap_or(defaults.double_tolerance),
        exec: Execution::default(),
    };
    let (run_free, run_delta) = match args.model {
        None => (true, true),
        Some(ModelKind::Free) => (true, false),
        Some(ModelKind::Delta) => (false, true),
        Some(ModelKind::Step) => return Err(usage("pdx-verify has closed-form oracles for free and delta only")),
    };
    let free = if run_free {
        Some(verify_free_identity(
            &free_grid(&x0s, x1s.as_deref(), &times, args.mass)?,
            &opts,
        ))
    } else {
        None
    };
    let delta = if run_delta {
        let x1d = x1s.clone().unwrap_or_else(|| x0s.clone());
        Some(verify_delta_full(
            &delta_grid(&x0s, &x1d, &times, args.mass)?,
            args.coupling,
            &opts,
        ))
    } else {
        None
    };
    let reports: Vec<&VerificationReport> = free.iter().chain(delta.iter()).collect();
    let passed = reports.iter().all(|r| r.passed);
    let violation = if passed {
        None
    } else {
        let worst = reports
            .iter()
            .filter(|r| !r.passed)
            .filter_map(|r| r.worst())
            .next()
            .ok_or_else(|| Failure::Io(anyhow!("failed report without rows")))?;
        Some(format!(
            "{} at x0={}, x1={}, T={}: {}",
            worst.route,
            worst.query.x0(),
            worst.query.x1(),
            worst.query.time(),
            match (&worst.error, worst.relative_deviation) {
                (Some(e), _) => e.clone(),
                (None, Some(d)) => format!(
                    "relative deviation {} > {}",
                    format_float(d),
                    format_float(worst.tolerance)
                ),
                (None, None) => "no result".into(),
            }
        ))
    };
    let text = match args.output.format {
        Format::Json => to_json_text(&PdxReports { passed, free, delta }).map_err(Failure::Io)?,
        Format::Csv => {
            let mut table = Table::new(vec![
                "model",
                "route",
                "x0",
                "x1",
                "T",
                "direct",
                "assembled",
                "relative_deviation",
                "tolerance",
                "panels",
                "passed",
                "error",
            ]);
            for (name, report) in [("free", &free), ("delta", &delta)] {
                let Some(report) = report else { continue };
                for row in &report.rows {
                    table.push(vec![
                        Cell::Text(name.into()),
                        Cell::Text(row.route.to_string()),
                        Cell::Float(row.query.x0()),
                        Cell::Float(row.query.x1()),
                        Cell::Float(row.query.time()),
                        Cell::Float(row.direct.re()),
                        Cell::opt_float(row.assembled.map(|v| v.re())),
                        Cell::opt_float(row.relative_deviation),
                        Cell::Float(row.tolerance),
                        Cell::Int(row.panels as u64),
                        Cell::Flag(row.passed),
                        row.error
                            .as_ref()
                            .map_or(Cell::Empty, |e| Cell::Text(format!("\"{}\"", e.replace('"', "'")))),
                    ]);
                }
            }
            table.to_csv()
        }
    };
    Ok(Outcome { text, violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(parse_range("5..4").unwrap().is_empty());
        assert!(parse_range("4").is_err());
        assert!(parse_range("a..4").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("x0", "0.5, 1,-2").unwrap(), vec![0.5, 1.0, -2.0]);
        assert!(parse_list("x0", "").unwrap().is_empty());
        assert!(parse_list("x0", "1,,2").is_err());
    }

    #[test]
    fn huge_values_from_logs() {
        assert_eq!(format_from_ln(2f64.ln()), format_float(2.0));
        let s = format_from_ln(1000.0 * std::f64::consts::LN_10);
        assert!(s.starts_with("1.000000000000") || s.starts_with("9.99999999999"), "{s}");
        assert!(s.ends_with("e1000") || s.ends_with("e999"));
    }
}
