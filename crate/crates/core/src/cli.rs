//! The `tailpoint` command line.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 for numerical
//! failures. Results go to stdout (or `--output`); diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::data::read_observations;
use crate::delimit::{report, DelimitingReport, Side};
use crate::dist::DistributionSpec;
use crate::error::{Result, TailError};
use crate::kde::{estimate_mode, normal_reference_bandwidths, sample_delimiting_points, Bandwidths};
use crate::sim::{
    run_mse_study, run_sweep, scatter_csv, scatter_families, Axis, MseStudyConfig, ScatterRow, SimResult, SweepSpec,
    SweepTable, Target, PRESETS,
};
use crate::svg::{line_chart, scatter_chart, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Smallest sample `estimate` accepts.
pub const MIN_ESTIMATE_POINTS: usize = 10;

#[derive(Debug, Parser)]
#[command(
    name = "tailpoint",
    version,
    about = "Delimiting points between the bulk and the tails of unimodal densities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Both,
}

impl SideArg {
    fn sides(self) -> &'static [Side] {
        match self {
            SideArg::Left => &[Side::Left],
            SideArg::Right => &[Side::Right],
            SideArg::Both => &Side::BOTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Pinf,
    Pmconv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Delimiting points of a known distribution, e.g. "gaussian(mu=0,sigma=1)".
    Analyze {
        #[arg(long)]
        dist: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample delimiting points from data (one number per line).
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
        /// Bandwidth for the first-derivative estimate (default: AMISE, normal reference).
        #[arg(long)]
        h1: Option<f64>,
        /// Bandwidth for the second-derivative estimate (default: AMISE, normal reference).
        #[arg(long)]
        h2: Option<f64>,
        /// Mode to use instead of the kernel estimate.
        #[arg(long, allow_negative_numbers = true)]
        mode: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo MSE of the sample points for Student-t data.
    Simulate {
        #[arg(long, value_enum, default_value = "pinf")]
        target: TargetArg,
        /// Degrees of freedom (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 100.0], allow_negative_numbers = true)]
        nu: Vec<f64>,
        /// Sample sizes (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 500, 2000])]
        n: Vec<usize>,
        /// Replications per cell.
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Population points over a parameter grid.
    Sweep {
        /// One of: lognormal-sigma, studentt-nu, gaussian-sigma, exponential-lambda, skewt-grid.
        #[arg(long, conflicts_with_all = ["family", "param"])]
        preset: Option<String>,
        /// Family name, or a spec fixing the other parameters, e.g. "studentt(nu=3)".
        #[arg(long, requires_all = ["param", "from", "to", "steps"])]
        family: Option<String>,
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Log-spaced grid.
        #[arg(long)]
        log: bool,
        /// Also write a line chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// cdf at the right-side points across families.
    Scatter {
        /// Also write a scatter chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_INPUT;
    }
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("TAILPOINT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("TAILPOINT_THREADS must be a positive integer, got '{raw}'"))?;
    // Fails only if a pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analyze { dist, out } => {
            let spec: DistributionSpec = dist.parse()?;
            let rep = report(&spec)?;
            let text = match out.format.unwrap_or(Format::Json) {
                Format::Json => json_text(&rep.to_json()),
                Format::Csv => report_csv(&rep),
            };
            emit(&out, &text)
        }
        Command::Estimate {
            data,
            side,
            h1,
            h2,
            mode,
            out,
        } => {
            let value = estimate(&data, side, h1, h2, mode)?;
            let text = match out.format.unwrap_or(Format::Json) {
                Format::Json => json_text(&value),
                Format::Csv => estimate_csv(&value),
            };
            emit(&out, &text)
        }
        Command::Simulate {
            target,
            nu,
            n,
            reps,
            seed,
            out,
        } => {
            let target = match target {
                TargetArg::Pinf => Target::PInf,
                TargetArg::Pmconv => Target::PMConv,
            };
            let mut config = MseStudyConfig::new(target, seed);
            config.nu_values = nu;
            config.n_values = n;
            config.replications = reps;
            let result = run_mse_study(&config)?;
            let text = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => result.to_csv(),
                Format::Json => json_text(&sim_json(&result)),
            };
            emit(&out, &text)
        }
        Command::Sweep {
            preset,
            family,
            param,
            from,
            to,
            steps,
            log,
            svg,
            out,
        } => {
            let spec = match (preset, family) {
                (Some(name), _) => SweepSpec::preset(&name)?,
                (None, Some(family)) => custom_sweep(
                    &family,
                    param.as_deref().unwrap_or_default(),
                    from.unwrap_or_default(),
                    to.unwrap_or_default(),
                    steps.unwrap_or_default(),
                    log,
                )?,
                (None, None) => {
                    return Err(TailError::InvalidArgument(format!(
                        "sweep needs --preset ({}) or --family/--param/--from/--to/--steps",
                        PRESETS.join(", ")
                    )))
                }
            };
            let table = run_sweep(&spec);
            for (coords, reason) in table.failures() {
                eprintln!("warning: sweep point {coords:?} failed: {reason}");
            }
            if let Some(path) = svg {
                write_file(&path, &sweep_svg(&table))?;
            }
            let text = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => table.to_csv(),
                Format::Json => json_text(&sweep_json(&table)),
            };
            emit(&out, &text)
        }
        Command::Scatter { svg, out } => {
            let rows = scatter_families()?;
            if let Some(path) = svg {
                write_file(&path, &scatter_svg(&rows))?;
            }
            let text = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => scatter_csv(&rows),
                Format::Json => json_text(&scatter_json(&rows)),
            };
            emit(&out, &text)
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn emit(out: &OutputArgs, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| TailError::InvalidArgument(format!("cannot write output: {e}")))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| TailError::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn report_csv(rep: &DelimitingReport) -> String {
    let mut out = String::from("distribution,mode,side,point,x,cdf,method\n");
    for side in Side::BOTH {
        let s = rep.side(side);
        for (name, entry) in [("pinf", s.pinf), ("pmconv", s.pmconv), ("pmcurv", s.pmcurv)] {
            out.push_str(&format!(
                "\"{}\",{},{},{},{},{},{}\n",
                rep.spec,
                rep.mode,
                side.name(),
                name,
                opt_field(entry.x()),
                opt_field(entry.cdf()),
                entry.method.name()
            ));
        }
    }
    out
}

fn check_bandwidth(name: &str, h: Option<f64>) -> Result<()> {
    match h {
        Some(h) if !(h > 0.0 && h.is_finite()) => Err(TailError::InvalidArgument(format!(
            "--{name} must be a positive number, got {h}"
        ))),
        _ => Ok(()),
    }
}

fn estimate(path: &Path, side: SideArg, h1: Option<f64>, h2: Option<f64>, mode: Option<f64>) -> Result<Value> {
    check_bandwidth("h1", h1)?;
    check_bandwidth("h2", h2)?;
    let data = read_observations(path)?;
    if data.len() < MIN_ESTIMATE_POINTS {
        return Err(TailError::InvalidArgument(format!(
            "{} has {} observations; at least {MIN_ESTIMATE_POINTS} are needed for kernel \
             derivative estimates and their bandwidths",
            path.display(),
            data.len()
        )));
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mode, mode_source) = match mode {
        Some(m) => {
            if !(m >= lo && m <= hi) {
                return Err(TailError::InvalidArgument(format!(
                    "--mode {m} lies outside the data range [{lo}, {hi}]"
                )));
            }
            (m, "manual")
        }
        None => (estimate_mode(&data)?.0, "kde-argmax"),
    };
    let reference = if h1.is_none() || h2.is_none() {
        Some(normal_reference_bandwidths(&data)?)
    } else {
        None
    };
    let pick = |manual: Option<f64>, auto: fn(&Bandwidths) -> f64| match manual {
        Some(h) => (h, "manual"),
        None => (
            auto(reference.as_ref().expect("computed when needed")),
            "amise-normal-reference",
        ),
    };
    let (h1, p1) = pick(h1, |b| b.h1);
    let (h2, p2) = pick(h2, |b| b.h2);
    let bandwidths = Bandwidths { h1, h2 };
    let mut sides = serde_json::Map::new();
    for &s in side.sides() {
        let pts = sample_delimiting_points(&data, mode, s, bandwidths)
            .map_err(|e| e.context(format!("{} side", s.name())))?;
        sides.insert(
            s.name().to_string(),
            json!({ "pinf_n": pts.pinf, "pmconv_n": pts.pmconv }),
        );
    }
    Ok(json!({
        "n": data.len(),
        "mode": mode,
        "mode_source": mode_source,
        "bandwidths": {
            "h1": { "value": h1, "provenance": p1 },
            "h2": { "value": h2, "provenance": p2 },
        },
        "sides": sides,
    }))
}

fn estimate_csv(v: &Value) -> String {
    let mut out = String::from("side,pinf_n,pmconv_n,h1,h2,h1_provenance,h2_provenance,mode,mode_source,n\n");
    let bw = &v["bandwidths"];
    if let Some(sides) = v["sides"].as_object() {
        for (name, pts) in sides {
            out.push_str(&format!(
                "{name},{},{},{},{},{},{},{},{},{}\n",
                pts["pinf_n"],
                pts["pmconv_n"],
                bw["h1"]["value"],
                bw["h2"]["value"],
                bw["h1"]["provenance"].as_str().unwrap_or_default(),
                bw["h2"]["provenance"].as_str().unwrap_or_default(),
                v["mode"],
                v["mode_source"].as_str().unwrap_or_default(),
                v["n"]
            ));
        }
    }
    out
}

fn sim_json(r: &SimResult) -> Value {
    json!({
        "target": r.target.name(),
        "base_seed": r.base_seed,
        "N": r.replications,
        "cells": r.cells.iter().map(|c| json!({
            "nu": c.nu,
            "n": c.n,
            "mse": c.mse,
            "true_point": c.true_point,
            "bandwidth": c.bandwidth,
        })).collect::<Vec<_>>(),
    })
}

fn custom_sweep(family: &str, param: &str, from: f64, to: f64, steps: usize, log: bool) -> Result<SweepSpec> {
    let axis = if log {
        Axis::log(param, from, to, steps)?
    } else {
        Axis::linear(param, from, to, steps)?
    };
    let text = family.trim();
    let at = |v: f64| -> Result<DistributionSpec> {
        if text.contains('(') {
            text.parse::<DistributionSpec>()?.with_param(param, v)
        } else {
            format!("{text}({param}={v})").parse()
        }
    };
    // Any valid grid point serves as the template; invalid ones fail their own row.
    let base = axis
        .values
        .iter()
        .map(|&v| at(v))
        .find(|s| s.is_ok())
        .unwrap_or_else(|| at(from))?;
    SweepSpec::new(base, vec![axis])
}

fn sweep_json(t: &SweepTable) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            let coords: serde_json::Map<String, Value> = t
                .axis_names
                .iter()
                .zip(&r.coords)
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect();
            match &r.values {
                Ok(v) => json!({
                    "params": coords,
                    "pinf_r": v.pinf_r,
                    "pmconv_r": v.pmconv_r,
                    "pmcurv_r": v.pmcurv_r,
                    "cdf_pinf_r": v.cdf_pinf_r,
                    "cdf_pmconv_r": v.cdf_pmconv_r,
                    "cdf_pmcurv_r": v.cdf_pmcurv_r,
                    "q05": v.q05,
                    "q95": v.q95,
                    "kurtosis": v.kurtosis,
                }),
                Err(e) => json!({ "params": coords, "error": e }),
            }
        })
        .collect();
    json!({ "axes": t.axis_names, "rows": rows })
}

fn sweep_svg(t: &SweepTable) -> String {
    let axis = t.axis_names.last().map(String::as_str).unwrap_or("x");
    let pick = |f: fn(&crate::sim::SweepValues) -> Option<f64>| -> Vec<(f64, f64)> {
        t.rows
            .iter()
            .filter_map(|r| {
                let v = r.values.as_ref().ok()?;
                Some((*r.coords.last()?, f(v)?))
            })
            .collect()
    };
    let series = [
        Series {
            name: "PInf_r",
            points: pick(|v| v.pinf_r),
        },
        Series {
            name: "PMConv_r",
            points: pick(|v| v.pmconv_r),
        },
        Series {
            name: "PMCurv_r",
            points: pick(|v| v.pmcurv_r),
        },
        Series {
            name: "q95",
            points: pick(|v| v.q95),
        },
    ];
    if t.axis_names.len() == 1 {
        line_chart("Right-side delimiting points", axis, &series)
    } else {
        scatter_chart("Right-side delimiting points", axis, &series)
    }
}

fn scatter_json(rows: &[ScatterRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "distribution": r.label,
                    "cdf_pmcurv_r": r.cdf_pmcurv_r,
                    "cdf_pmconv_r": r.cdf_pmconv_r,
                    "cdf_pinf_r": r.cdf_pinf_r,
                })
            })
            .collect(),
    )
}

fn scatter_svg(rows: &[ScatterRow]) -> String {
    let conv_curv: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.cdf_pmconv_r?, r.cdf_pmcurv_r?)))
        .collect();
    let conv_inf: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.cdf_pmconv_r?, r.cdf_pinf_r?)))
        .collect();
    scatter_chart(
        "cdf at delimiting points",
        "cdf at PMConv_r",
        &[
            Series {
                name: "cdf at PMCurv_r",
                points: conv_curv,
            },
            Series {
                name: "cdf at PInf_r",
                points: conv_inf,
            },
        ],
    )
}
