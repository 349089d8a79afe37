//! Command-line front end.
//!
//! Exit codes: 0 success, 1 check or reproduction mismatch, 2 usage,
//! configuration or I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::check::{render_report, run_checks, CheckOptions, Fault};
use crate::convnet::{ConvLayer, Kernel};
use crate::equivariance::{sweep_with_threads, translation_equiv_residual, write_csv, Norms, SweepSpec};
use crate::plot;
use crate::sampling::{discretize_avg, Discretizer, Grid};
use crate::shifts::Scheme;
use crate::signals::Signal;

/// Environment variable capping sweep worker threads (0 = automatic).
pub const THREADS_ENV: &str = "EQUIVPROBE_THREADS";

const REPRO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Mismatch = 1,
    Usage = 2,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "equivprobe", version, about = "Shift vs. translation equivariance of 1D convolutional layers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Re-run the Heaviside edge-detector example and verify its four vectors.
    Repro {
        /// Output file; stdout when omitted or "-".
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        /// Override the edge-detector taps (negative-path testing).
        #[arg(long, hide = true, value_delimiter = ',', allow_hyphen_values = true)]
        taps: Option<Vec<f64>>,
    },
    /// Evaluate a translation-residual sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output file ("-" for stdout); a directory for svg-plot.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SweepFormat::Csv)]
        format: SweepFormat,
    },
    /// Run every invariant suite and print one line per property.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Csv,
    Json,
    SvgPlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    BrokenCircular,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::Usage.code() } else { Exit::Success.code() };
        }
    };
    let exit = match cli.command {
        Command::Repro { out, format, taps } => {
            let mut layer = ConvLayer::edge_detector();
            if let Some(taps) = taps {
                let origin = layer.kernel.origin().min(taps.len().saturating_sub(1));
                match Kernel::new(taps, origin) {
                    Ok(k) => layer.kernel = k,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return Exit::Usage.code();
                    }
                }
            }
            run_repro(out.as_deref(), format, &layer)
        }
        Command::Sweep { config, out, format } => run_sweep(&config, &out, format),
        Command::Check { seed, inject_fault } => {
            let fault = inject_fault.map(|FaultArg::BrokenCircular| Fault::BrokenCircular);
            run_check(seed, fault, &mut io::stdout().lock())
        }
    };
    exit.code()
}

// repro

#[derive(Debug, Clone, Serialize)]
pub struct ReproRow {
    pub quantity: &'static str,
    pub values: Vec<f64>,
    pub expected: Vec<f64>,
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub rows: Vec<ReproRow>,
    pub translation_residual: Norms,
    pub residual_matches: bool,
    pub all_match: bool,
}

/// Step image on `[-1, 1]` with four pixels, translated by half a pixel, fed
/// through `layer`.
pub fn repro_report(layer: &ConvLayer) -> crate::Result<ReproReport> {
    let grid = Grid::over(-1.0, 1.0, 4)?;
    let step = Signal::heaviside(0.0)?;
    let shifted = step.translate(grid.dx() / 2.0)?;
    let original = discretize_avg(&step, &grid)?;
    let translated = discretize_avg(&shifted, &grid)?;
    let out_original = layer.apply(&original)?;
    let out_translated = layer.apply(&translated)?;
    let residual = translation_equiv_residual(
        layer,
        &step,
        &grid,
        grid.dx() / 2.0,
        Scheme::Linear,
        Discretizer::Average,
    )?;

    let row = |quantity, values: &[f64], expected: &[f64]| ReproRow {
        quantity,
        values: values.to_vec(),
        expected: expected.to_vec(),
        matches: values.len() == expected.len()
            && values.iter().zip(expected).all(|(a, b)| (a - b).abs() <= REPRO_TOL),
    };
    let rows = vec![
        row("original_pixels", original.samples(), &[0.0, 0.0, 1.0, 1.0]),
        row("translated_pixels", translated.samples(), &[0.0, 0.0, 0.5, 1.0]),
        row("original_output", out_original.samples(), &[0.0, 1.0, 0.0, 0.0]),
        row("translated_output", out_translated.samples(), &[0.0, 0.0, 0.0, 0.0]),
    ];
    let residual_matches = (residual.linf - 0.5).abs() <= REPRO_TOL;
    let all_match = residual_matches && rows.iter().all(|r| r.matches);
    Ok(ReproReport { rows, translation_residual: residual.norms(), residual_matches, all_match })
}

fn repro_csv(report: &ReproReport) -> io::Result<Vec<u8>> {
    let width = report.rows.iter().map(|r| r.values.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["quantity".to_string()];
    header.extend((0..width).map(|i| format!("v{i}")));
    header.push("matches".into());
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![r.quantity.to_string()];
        rec.extend((0..width).map(|i| r.values.get(i).map(f64::to_string).unwrap_or_default()));
        rec.push(r.matches.to_string());
        w.write_record(&rec)?;
    }
    for (name, value, matches) in [
        ("translation_residual_linf", report.translation_residual.linf, Some(report.residual_matches)),
        ("translation_residual_l2", report.translation_residual.l2, None),
    ] {
        let mut rec = vec![name.to_string(), value.to_string()];
        rec.extend((1..width).map(|_| String::new()));
        rec.push(matches.map(|m| m.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn run_repro(out: Option<&Path>, format: TableFormat, layer: &ConvLayer) -> Exit {
    let report = match repro_report(layer) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Usage;
        }
    };
    let bytes = match format {
        TableFormat::Csv => repro_csv(&report).map_err(|e| e.to_string()),
        TableFormat::Json => serde_json::to_vec_pretty(&report).map_err(|e| e.to_string()),
    };
    let bytes = match bytes {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Usage;
        }
    };
    if let Err(e) = emit(out, &bytes) {
        eprintln!("error: cannot write output: {e}");
        return Exit::Usage;
    }
    if report.all_match {
        return Exit::Success;
    }
    eprintln!("reproduction mismatch:");
    for r in report.rows.iter().filter(|r| !r.matches) {
        eprintln!("  {}: got {:?}, expected {:?}", r.quantity, r.values, r.expected);
    }
    if !report.residual_matches {
        eprintln!("  translation_residual_linf: got {}, expected 0.5", report.translation_residual.linf);
    }
    Exit::Mismatch
}

// sweep

/// Loads and validates a sweep config, with the JSON path of the offending
/// field in the error message.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let spec: SweepSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        format!("{}: field `{field}`: {inner}", path.display())
    })?;
    de.end().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(spec)
}

/// Worker count from [`THREADS_ENV`]; unset means automatic.
pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))
        }
        _ => Ok(0),
    }
}

pub fn run_sweep(config: &Path, out: &Path, format: SweepFormat) -> Exit {
    let spec = match load_sweep_spec(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid sweep config: {e}");
            return Exit::Usage;
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Usage;
        }
    };
    let rows = match sweep_with_threads(&spec, threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: sweep failed: {e}");
            return Exit::Usage;
        }
    };
    let written = match format {
        SweepFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf).and_then(|_| emit(Some(out), &buf))
        }
        SweepFormat::Json => serde_json::to_vec_pretty(&rows)
            .map_err(io::Error::other)
            .and_then(|buf| emit(Some(out), &buf)),
        SweepFormat::SvgPlot => fs::create_dir_all(out)
            .and_then(|_| write_atomic(&out.join("residual_vs_delta.svg"), plot::residual_vs_delta(&rows).as_bytes()))
            .and_then(|_| write_atomic(&out.join("residual_vs_n.svg"), plot::residual_vs_n(&rows).as_bytes())),
    };
    match written {
        Ok(()) => Exit::Success,
        Err(e) => {
            eprintln!("error: cannot write output {}: {e}", out.display());
            Exit::Usage
        }
    }
}

// check

pub fn run_check(seed: u64, fault: Option<Fault>, out: &mut dyn Write) -> Exit {
    let outcomes = run_checks(CheckOptions { seed, fault });
    let report = render_report(seed, &outcomes);
    if let Err(e) = out.write_all(report.as_bytes()).and_then(|_| out.flush()) {
        eprintln!("error: cannot write report: {e}");
        return Exit::Usage;
    }
    if outcomes.iter().all(|o| o.passed) {
        Exit::Success
    } else {
        Exit::Mismatch
    }
}

// output helpers

fn emit(out: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match out {
        None => write_stdout(bytes),
        Some(p) if p.as_os_str() == "-" => write_stdout(bytes),
        Some(p) => write_atomic(p, bytes),
    }
}

fn write_stdout(bytes: &[u8]) -> io::Result<()> {
    let mut stdout = io::stdout().lock();
    stdout.write_all(bytes)?;
    stdout.flush()
}

/// Writes to a temporary file next to `path`, then renames it into place, so
/// readers never see a truncated file.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
