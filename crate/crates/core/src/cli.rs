//! The `dressed-modes` command line: trace values, distribution tables and
//! self-verification.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::dressed_thermal::{self, DressedModelParams, ModeCount};
use crate::error::{Error, Result};
use crate::fock;
use crate::format::g17;
use crate::statistics::{self, CountDistribution};
use crate::verify::{self, Level, VerifyOptions};
use crate::C64;

pub const MAX_INDEX_LIMIT: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "dressed-modes",
    version,
    about = "Traces and counting statistics of dressed thermal boson modes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generating function T(u, v) (or the single-mode T(u) with --single).
    Trace(TraceArgs),
    /// Occupation-number tables over an (epsilon, theta) grid.
    Probs(ProbsArgs),
    /// Run the built-in acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Inverse temperature(s), comma separated.
    #[arg(short = 'e', long, value_delimiter = ',', required = true, num_args = 1.., allow_negative_numbers = true)]
    pub epsilon: Vec<f64>,
    /// Bogolubov angle(s), comma separated.
    #[arg(short = 't', long, value_delimiter = ',', default_value = "0", num_args = 1.., allow_negative_numbers = true)]
    pub theta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Compare with the truncated number-basis oracle.
    #[arg(long)]
    pub oracle: bool,
    /// Starting oracle dimension per mode.
    #[arg(long, env = fock::DIM_ENV, default_value_t = fock::DEFAULT_DIM)]
    pub oracle_dim: usize,
    /// Write the oracle density matrix (dense binary) to FILE.
    #[arg(long, value_name = "FILE", requires = "oracle")]
    pub oracle_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Counting angle(s) u.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1.., allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Counting angle(s) v (pair mode only).
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub v: Vec<f64>,
    /// Single-mode dressing.
    #[arg(long)]
    pub single: bool,
    /// Also evaluate the phase-space integral.
    #[arg(long)]
    pub via_integral: bool,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Write the dressed state's Wigner function (JSON) to FILE.
    #[arg(long, value_name = "FILE")]
    pub dump_wigner: Option<PathBuf>,
    /// Write the dressing transform (JSON) to FILE.
    #[arg(long, value_name = "FILE")]
    pub dump_transform: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum QuantityArg {
    Trace2,
    Trace1,
    PSingle,
    PTotal,
    PJoint,
    PDressedSingle,
}

#[derive(Debug, Args)]
pub struct ProbsArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum)]
    pub quantity: QuantityArg,
    #[arg(long, default_value_t = 20)]
    pub max_index: usize,
    /// Angle grid for the trace quantities.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub u: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub v: Vec<f64>,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Fast,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = LevelArg::Fast)]
    pub level: LevelArg,
    #[arg(long, env = fock::DIM_ENV, default_value_t = fock::DEFAULT_DIM)]
    pub oracle_dim: usize,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    pub seed: u64,
    /// Multiplies every upper bound (negative testing).
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub tolerance_scale: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Parses the process arguments and runs; usage and domain errors exit 2.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Trace(args) => {
            let doc = trace(args)?;
            emit(&args.output, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Probs(args) => {
            let doc = probs(args)?;
            emit(&args.output, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => verify_cmd(args),
    }
}

/// Rendered output: CSV rows or one JSON document.
pub enum Document {
    Csv {
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    Json(serde_json::Value),
}

fn emit(output: &OutputArgs, doc: &Document) -> Result<()> {
    let sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    write_document(doc, sink)
}

pub fn write_document<W: Write>(doc: &Document, mut sink: W) -> Result<()> {
    match doc {
        Document::Csv { header, rows } => {
            let mut w = csv::Writer::from_writer(sink);
            let csv_err = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(header).map_err(csv_err)?;
            for row in rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Document::Json(value) => {
            serde_json::to_writer_pretty(&mut sink, value).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(sink)?;
            sink.flush()?;
        }
    }
    Ok(())
}

fn grid(args: &GridArgs) -> Result<Vec<DressedModelParams>> {
    let mut out = Vec::with_capacity(args.epsilon.len() * args.theta.len());
    for &e in &args.epsilon {
        for &t in &args.theta {
            out.push(DressedModelParams::new(e, t)?);
        }
    }
    Ok(out)
}

fn write_json_file(path: &PathBuf, value: &impl serde::Serialize) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn dump_oracle(
    path: &PathBuf,
    params: &DressedModelParams,
    modes: ModeCount,
    d: usize,
) -> Result<()> {
    let rho = fock::rho_fock(params, modes, d)?;
    rho.write_dense_binary(BufWriter::new(File::create(path)?))
}

#[derive(Debug, Clone)]
struct TraceRecord {
    u: f64,
    v: Option<f64>,
    params: DressedModelParams,
    value: C64,
    integral: Option<C64>,
    oracle: Option<(C64, usize, f64)>,
}

fn trace_point(
    args: &TraceArgs,
    params: DressedModelParams,
    u: f64,
    v: Option<f64>,
) -> Result<TraceRecord> {
    let (value, integral) = match v {
        None => (
            statistics::t_single(u, &params)?,
            if args.via_integral {
                Some(dressed_thermal::trace_via_integral_single(u, &params)?)
            } else {
                None
            },
        ),
        Some(v) => (
            statistics::t_closed(u, v, &params),
            if args.via_integral {
                Some(dressed_thermal::trace_via_integral(u, v, &params)?)
            } else {
                None
            },
        ),
    };
    let oracle = if args.oracle.oracle {
        let modes = if v.is_some() {
            ModeCount::Two
        } else {
            ModeCount::One
        };
        let occ = fock::occupations_escalating(&params, modes, args.oracle.oracle_dim)?;
        Some((
            occ.generating_function(u, v.unwrap_or(0.0)),
            occ.dim_per_mode,
            occ.truncation_tol,
        ))
    } else {
        None
    };
    Ok(TraceRecord {
        u,
        v,
        params,
        value,
        integral,
        oracle,
    })
}

pub fn trace(args: &TraceArgs) -> Result<Document> {
    if args.single && !args.v.is_empty() {
        return Err(Error::Domain("--v does not apply with --single".into()));
    }
    if !args.single && args.v.is_empty() {
        return Err(Error::Domain(
            "--v is required unless --single is given".into(),
        ));
    }
    let params = grid(&args.grid)?;
    let modes = if args.single {
        ModeCount::One
    } else {
        ModeCount::Two
    };
    if let Some(path) = &args.dump_wigner {
        write_json_file(
            path,
            &dressed_thermal::dressed_rho_wigner(&params[0], modes)?.to_json(),
        )?;
    }
    if let Some(path) = &args.dump_transform {
        write_json_file(
            path,
            &dressed_thermal::bogolubov(params[0].theta(), modes)?.to_json(),
        )?;
    }
    if let Some(path) = &args.oracle.oracle_dump {
        dump_oracle(path, &params[0], modes, args.oracle.oracle_dim)?;
    }
    let vs: Vec<Option<f64>> = if args.single {
        vec![None]
    } else {
        args.v.iter().map(|&v| Some(v)).collect()
    };
    let mut points = Vec::new();
    for p in &params {
        for &u in &args.u {
            for &v in &vs {
                points.push((*p, u, v));
            }
        }
    }
    let records: Vec<TraceRecord> = points
        .into_par_iter()
        .map(|(p, u, v)| trace_point(args, p, u, v))
        .collect::<Result<_>>()?;
    Ok(match args.output.format {
        OutputFormat::Csv => trace_csv(args, &records),
        OutputFormat::Json => Document::Json(json!({
            "command": "trace",
            "modes": modes.get(),
            "records": records.iter().map(trace_json).collect::<Vec<_>>(),
        })),
    })
}

fn trace_csv(args: &TraceArgs, records: &[TraceRecord]) -> Document {
    let mut header: Vec<String> = ["u", "v", "epsilon", "theta", "re", "im"]
        .map(String::from)
        .to_vec();
    if args.via_integral {
        header.extend(["integral_re", "integral_im", "integral_abs_diff"].map(String::from));
    }
    if args.oracle.oracle {
        header.extend(
            [
                "oracle_re",
                "oracle_im",
                "oracle_abs_diff",
                "oracle_dim",
                "truncation_tol",
            ]
            .map(String::from),
        );
    }
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![
                g17(r.u),
                r.v.map(g17).unwrap_or_default(),
                g17(r.params.epsilon()),
                g17(r.params.theta()),
                g17(r.value.re),
                g17(r.value.im),
            ];
            if let Some(z) = r.integral {
                row.extend([g17(z.re), g17(z.im), g17((z - r.value).norm())]);
            }
            if let Some((z, d, tol)) = r.oracle {
                row.extend([
                    g17(z.re),
                    g17(z.im),
                    g17((z - r.value).norm()),
                    d.to_string(),
                    g17(tol),
                ]);
            }
            row
        })
        .collect();
    Document::Csv { header, rows }
}

fn trace_json(r: &TraceRecord) -> serde_json::Value {
    let mut obj = json!({
        "u": r.u,
        "v": r.v,
        "epsilon": r.params.epsilon(),
        "theta": r.params.theta(),
        "value": [r.value.re, r.value.im],
    });
    if let Some(z) = r.integral {
        obj["integral"] = json!([z.re, z.im]);
        obj["integral_abs_diff"] = json!((z - r.value).norm());
    }
    if let Some((z, d, tol)) = r.oracle {
        obj["oracle"] = json!({
            "value": [z.re, z.im],
            "abs_diff": (z - r.value).norm(),
            "dim_per_mode": d,
            "truncation_tol": tol,
        });
    }
    obj
}

/// One table of a sweep, with optional oracle values aligned with `probs`.
struct Table {
    dist: CountDistribution,
    params: DressedModelParams,
    oracle: Option<(Vec<f64>, usize, f64)>,
}

fn table_for(
    quantity: QuantityArg,
    max_index: usize,
    params: &DressedModelParams,
) -> Result<CountDistribution> {
    match quantity {
        QuantityArg::PSingle => statistics::single_table(max_index, params),
        QuantityArg::PTotal => statistics::total_table(max_index, params),
        QuantityArg::PJoint => statistics::joint_table(max_index, params),
        QuantityArg::PDressedSingle => statistics::dressed_single_table(max_index, params),
        QuantityArg::Trace1 | QuantityArg::Trace2 => {
            unreachable!("trace quantities are routed to trace")
        }
    }
}

fn oracle_table(
    quantity: QuantityArg,
    max_index: usize,
    params: &DressedModelParams,
    d: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let modes = if quantity == QuantityArg::PDressedSingle {
        ModeCount::One
    } else {
        ModeCount::Two
    };
    let occ = fock::occupations_escalating(params, modes, d)?;
    let dim = occ.dim_per_mode;
    let limit = if quantity == QuantityArg::PTotal {
        2 * (dim - 1)
    } else {
        dim - 1
    };
    if max_index > limit {
        return Err(Error::InsufficientDimension(format!(
            "max_index = {max_index} exceeds what the oracle resolves at D = {dim}"
        )));
    }
    let side = max_index + 1;
    let values = match quantity {
        QuantityArg::PDressedSingle => occ.distribution.probs()[..side].to_vec(),
        QuantityArg::PJoint => (0..side * side)
            .map(|i| occ.joint(i / side, i % side))
            .collect(),
        QuantityArg::PSingle => (0..side)
            .map(|m| (0..dim).map(|n| occ.joint(m, n)).sum())
            .collect(),
        QuantityArg::PTotal => (0..side)
            .map(|nt| {
                (0..=nt)
                    .filter(|&m| m < dim && nt - m < dim)
                    .map(|m| occ.joint(m, nt - m))
                    .sum()
            })
            .collect(),
        QuantityArg::Trace1 | QuantityArg::Trace2 => {
            unreachable!("trace quantities are routed to trace")
        }
    };
    Ok((values, dim, occ.truncation_tol))
}

pub fn probs(args: &ProbsArgs) -> Result<Document> {
    if args.max_index > MAX_INDEX_LIMIT {
        return Err(Error::Domain(format!(
            "max_index = {} exceeds {MAX_INDEX_LIMIT}",
            args.max_index
        )));
    }
    if matches!(args.quantity, QuantityArg::Trace1 | QuantityArg::Trace2) {
        let single = args.quantity == QuantityArg::Trace1;
        if args.u.is_empty() {
            return Err(Error::Domain("trace quantities need --u".into()));
        }
        let trace_args = TraceArgs {
            grid: GridArgs {
                epsilon: args.grid.epsilon.clone(),
                theta: args.grid.theta.clone(),
            },
            u: args.u.clone(),
            v: if single {
                Vec::new()
            } else if args.v.is_empty() {
                args.u.clone()
            } else {
                args.v.clone()
            },
            single,
            via_integral: false,
            oracle: OracleArgs {
                oracle: args.oracle.oracle,
                oracle_dim: args.oracle.oracle_dim,
                oracle_dump: None,
            },
            dump_wigner: None,
            dump_transform: None,
            output: OutputArgs {
                format: args.output.format,
                out: None,
            },
        };
        return trace(&trace_args);
    }
    let params = grid(&args.grid)?;
    if let Some(path) = &args.oracle.oracle_dump {
        let modes = if args.quantity == QuantityArg::PDressedSingle {
            ModeCount::One
        } else {
            ModeCount::Two
        };
        dump_oracle(path, &params[0], modes, args.oracle.oracle_dim)?;
    }
    let tables: Vec<Table> = params
        .par_iter()
        .map(|p| {
            let dist = table_for(args.quantity, args.max_index, p)?;
            let oracle = if args.oracle.oracle {
                Some(oracle_table(
                    args.quantity,
                    args.max_index,
                    p,
                    args.oracle.oracle_dim,
                )?)
            } else {
                None
            };
            Ok(Table {
                dist,
                params: *p,
                oracle,
            })
        })
        .collect::<Result<_>>()?;
    Ok(match args.output.format {
        OutputFormat::Csv => probs_csv(args, &tables),
        OutputFormat::Json => Document::Json(json!({
            "command": "probs",
            "quantity": quantity_name(args.quantity),
            "tables": tables.iter().map(|t| {
                let mut v = t.dist.to_json();
                if let Some((values, d, tol)) = &t.oracle {
                    let probs = if t.dist.quantity().is_two_axis() {
                        json!(values.chunks(t.dist.max_index() + 1).collect::<Vec<_>>())
                    } else {
                        json!(values)
                    };
                    v["oracle"] = json!({ "probs": probs, "dim_per_mode": d, "truncation_tol": tol });
                }
                v
            }).collect::<Vec<_>>(),
        })),
    })
}

fn quantity_name(q: QuantityArg) -> &'static str {
    match q {
        QuantityArg::Trace2 => "trace2",
        QuantityArg::Trace1 => "trace1",
        QuantityArg::PSingle => "p_single",
        QuantityArg::PTotal => "p_total",
        QuantityArg::PJoint => "p_joint",
        QuantityArg::PDressedSingle => "p_dressed_single",
    }
}

fn method_name(dist: &CountDistribution) -> String {
    serde_json::to_value(dist.method())
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn probs_csv(args: &ProbsArgs, tables: &[Table]) -> Document {
    let mut header: Vec<String> = vec!["epsilon".into(), "theta".into(), "method".into()];
    let names = tables[0].dist.quantity().index_names();
    header.extend(names.iter().map(|s| s.to_string()));
    header.extend(["probability", "tail_bound"].map(String::from));
    if args.oracle.oracle {
        header.extend(
            [
                "oracle_probability",
                "oracle_abs_diff",
                "oracle_dim",
                "truncation_tol",
            ]
            .map(String::from),
        );
    }
    let mut rows = Vec::new();
    for t in tables {
        let method = method_name(&t.dist);
        for (i, (idx, p)) in t.dist.rows().into_iter().enumerate() {
            let mut row = vec![
                g17(t.params.epsilon()),
                g17(t.params.theta()),
                method.clone(),
            ];
            row.extend(idx.iter().map(|k| k.to_string()));
            row.push(g17(p));
            row.push(g17(t.dist.tail_bound()));
            if let Some((values, d, tol)) = &t.oracle {
                row.extend([
                    g17(values[i]),
                    g17((values[i] - p).abs()),
                    d.to_string(),
                    g17(*tol),
                ]);
            }
            rows.push(row);
        }
    }
    Document::Csv { header, rows }
}

fn verify_cmd(args: &VerifyArgs) -> Result<ExitCode> {
    let opts = VerifyOptions {
        tolerance_scale: args.tolerance_scale,
        oracle_dim: args.oracle_dim,
        seed: args.seed,
    };
    let level = match args.level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    let reports = verify::run(level, &opts);
    let all = reports.iter().all(|r| r.passed());
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match args.format {
        ReportFormat::Json => {
            let doc = Document::Json(json!({
                "level": if level == Level::Full { "full" } else { "fast" },
                "passed": all,
                "checks": reports.iter().map(|r| json!({
                    "id": r.id,
                    "name": r.name,
                    "passed": r.passed(),
                    "max_error": r.max_error(),
                    "error": r.error,
                    "seconds": r.elapsed.as_secs_f64(),
                    "budget_seconds": r.budget.map(|b| b.as_secs_f64()),
                    "subchecks": r.checks.iter().map(|c| json!({
                        "label": c.label,
                        "value": c.value,
                        "bound": c.bound,
                        "kind": if c.kind == verify::Bound::AtMost { "at_most" } else { "at_least" },
                        "passed": c.passed(),
                    })).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }));
            write_document(&doc, sink)?;
        }
        ReportFormat::Text => {
            let mut sink = sink;
            for r in &reports {
                writeln!(sink, "{r}")?;
            }
            let failed: Vec<String> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| format!("[{}] {}", r.id, r.name))
                .collect();
            if failed.is_empty() {
                writeln!(sink, "all {} checks passed", reports.len())?;
            } else {
                writeln!(sink, "FAILED: {}", failed.join(", "))?;
            }
            sink.flush()?;
        }
    }
    if !all {
        for r in reports.iter().filter(|r| !r.passed()) {
            eprintln!("verification failed: [{}] {}", r.id, r.name);
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
