//! The `randjulia` command line.
//!
//! Every parameter can come from a flag, from a TOML file passed with
//! `--config` (keys are the flag names without dashes, e.g. `n-max = 500`),
//! or from its default, in that order. The resolved parameters are written
//! into each output: as `#` comment lines in CSV and PGM files and as a
//! `[config]` table in reports. Those comment lines are themselves a valid
//! config file, so any output can be regenerated from its own header.
//!
//! Exit status: 0 on success, 1 for usage and configuration errors, 2 for
//! data and I/O errors.

pub mod parse;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

use crate::connectivity::{
    bbr_disconnected_scan, cell_center, components, critical_profile, grid_escape_field,
    property_kk, sufficient_condition_report, GridBox,
};
use crate::domain::{ParamSequence, Region};
use crate::dynamics::{
    escape_time, green, Constants, EscapeTime, GreenOutcome, DEFAULT_N_MAX, DEFAULT_TOL,
};
use crate::pgm::Graymap;
use crate::stats::{
    disconnect_fraction, fit_gamma, green_summary, sample_tail, StatsError, TailCurve, TailMode,
    DEFAULT_K_LO, DEFAULT_MIN_SURVIVORS,
};

pub use parse::{parse_box, parse_complex, parse_region, parse_sequence, ParseError};

/// Environment variable read for the thread count when `--threads` is absent.
pub const THREADS_ENV: &str = "RANDJULIA_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
        }
    }
}

fn field_error(field: &str, reason: impl ToString) -> CliError {
    CliError::Config {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "randjulia",
    version,
    about = "Escape times, Green's functions and connectivity statistics for random quadratic Julia sets"
)]
struct Cli {
    /// TOML file with parameter values; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: $RANDJULIA_THREADS, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print R0, tildeR0 and G for a parameter bound R
    Constants(ConstantsArgs),
    /// Escape time of a point under a sequence
    Escape(PointArgs),
    /// Green's function of a point with its error bound
    Green(PointArgs),
    /// Render an escape-time or Green's function image (binary PGM)
    Render(RenderArgs),
    /// Monte Carlo survival curve of the critical escape time (CSV)
    Tail(TailArgs),
    /// Fit an exponential decay rate to a tail CSV
    GammaFit(GammaFitArgs),
    /// Connected components of the grid approximation of K
    Connectivity(ConnectivityArgs),
    /// Degree bounds 2^l(k) from critical Green's function values
    DegreeProfile(ProfileArgs),
    /// Shifts whose critical orbit escapes
    DisconnectScan(ScanArgs),
    /// Fractions of random sequences with disconnected / totally disconnected evidence
    Fraction(FractionArgs),
    /// Quantiles of g(0) over random sequences and sandwich-bound check
    GreenSummary(SummaryArgs),
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[arg(long = "R")]
    r: Option<f64>,
}

#[derive(Debug, Args)]
struct SeqArgs {
    /// constant:<c> | explicit:<c0;c1;...|tail> | periodic:<c0;...> | random:<region>:<stream>
    #[arg(long)]
    seq: Option<String>,
    /// Parameter bound R (default: the sequence's own bound, or 1 if that is 0)
    #[arg(long = "R")]
    r: Option<f64>,
    /// Master seed for random sequences
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageMode {
    EscapeTime,
    GreenLevels,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long)]
    resolution: Option<usize>,
    /// center_re,center_im,half_width (default 0,0,R0)
    #[arg(long = "box", allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ImageMode>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliTailMode {
    EscapeTime,
    FastEscapeGreen,
}

#[derive(Debug, Args)]
struct TailArgs {
    #[arg(long)]
    region: Option<String>,
    #[arg(long = "M")]
    m: Option<u64>,
    #[arg(long = "k-max")]
    k_max: Option<u32>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<CliTailMode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GammaFitArgs {
    /// Tail CSV written by `tail`
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long = "k-lo")]
    k_lo: Option<u32>,
    #[arg(long = "min-survivors")]
    min_survivors: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConnectivityArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long = "box", allow_hyphen_values = true)]
    grid: Option<String>,
    /// Also write the escape-time field as a PGM image
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long = "k-max")]
    k_max: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    /// Degree cap exponent for the sufficiency report
    #[arg(long = "K")]
    big_k: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long = "shift-max")]
    shift_max: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FractionArgs {
    #[arg(long)]
    region: Option<String>,
    #[arg(long = "M")]
    m: Option<u64>,
    #[arg(long = "shift-max")]
    shift_max: Option<u32>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "K")]
    big_k: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SummaryArgs {
    #[arg(long)]
    region: Option<String>,
    #[arg(long = "M")]
    m: Option<u64>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parameter lookup: flag, then config file, then default. Every resolved
/// value is recorded for echoing into outputs.
struct Settings {
    file: Table,
    resolved: Table,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            None => Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                text.parse::<Table>()
                    .map_err(|e| field_error("config", e.message()))?
            }
        };
        Ok(Settings {
            file,
            resolved: Table::new(),
        })
    }

    fn lookup<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e: toml::de::Error| field_error(key, e.message())),
        }
    }

    fn record(&mut self, key: &str, value: Value) {
        self.resolved.insert(key.to_string(), value);
    }

    fn f64(&mut self, key: &str, flag: Option<f64>, default: Option<f64>) -> Result<f64, CliError> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.lookup::<f64>(key)?,
        }
        .or(default)
        .ok_or_else(|| field_error(key, "required"))?;
        if !v.is_finite() {
            return Err(field_error(key, "must be finite"));
        }
        self.record(key, Value::Float(v));
        Ok(v)
    }

    fn positive(&mut self, key: &str, flag: Option<f64>, default: Option<f64>) -> Result<f64, CliError> {
        let v = self.f64(key, flag, default)?;
        if v <= 0.0 {
            return Err(field_error(key, "must be positive"));
        }
        Ok(v)
    }

    fn int<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>, min: T) -> Result<T, CliError>
    where
        T: Copy + PartialOrd + DeserializeOwned + std::fmt::Display + TryInto<i64>,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.lookup::<T>(key)?,
        }
        .or(default)
        .ok_or_else(|| field_error(key, "required"))?;
        if v < min {
            return Err(field_error(key, format!("must be at least {min}")));
        }
        let as_i64 = v
            .try_into()
            .map_err(|_| field_error(key, "too large"))?;
        self.record(key, Value::Integer(as_i64));
        Ok(v)
    }

    fn seed(&mut self, flag: Option<u64>) -> Result<u64, CliError> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get("seed") {
                None => 0,
                Some(Value::Integer(i)) if *i >= 0 => *i as u64,
                Some(Value::String(s)) => s.parse().map_err(|_| field_error("seed", "not an unsigned integer"))?,
                Some(_) => return Err(field_error("seed", "not an unsigned integer")),
            },
        };
        // TOML integers are signed 64-bit
        let value = i64::try_from(v).map_or_else(|_| Value::String(v.to_string()), Value::Integer);
        self.record("seed", value);
        Ok(v)
    }

    fn string(&mut self, key: &str, flag: Option<String>, default: Option<&str>) -> Result<String, CliError> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.lookup::<String>(key)?,
        }
        .or(default.map(str::to_string))
        .ok_or_else(|| field_error(key, "required"))?;
        self.record(key, Value::String(v.clone()));
        Ok(v)
    }

    fn region(&mut self, flag: Option<String>) -> Result<Region, CliError> {
        let text = match flag {
            Some(v) => v,
            None => self.lookup::<String>("region")?.ok_or_else(|| field_error("region", "required"))?,
        };
        let region = parse_region(&text).map_err(|e| field_error("region", e))?;
        // canonical form, so that equal regions echo identically
        self.record("region", Value::String(region.to_string()));
        Ok(region)
    }

    fn sequence(&mut self, args: &SeqArgs) -> Result<(ParamSequence, Constants), CliError> {
        let seed = self.seed(args.seed)?;
        let text = self.string("seq", args.seq.clone(), None)?;
        let seq = parse_sequence(&text, seed).map_err(|e| field_error("seq", e))?;
        let bound = seq.bound();
        let default_r = if bound > 0.0 { bound } else { 1.0 };
        let r = self.positive("R", args.r, Some(default_r))?;
        if r < bound {
            return Err(field_error(
                "R",
                format!("must be at least the sequence bound {bound}"),
            ));
        }
        let consts = Constants::derive(r).map_err(|e| field_error("R", e))?;
        Ok((seq, consts))
    }

    fn grid(&mut self, flag: Option<String>, consts: &Constants) -> Result<GridBox, CliError> {
        let default = parse::format_box(&GridBox::centered(consts.r0));
        let text = self.string("box", flag, Some(&default))?;
        parse_box(&text).map_err(|e| field_error("box", e))
    }

    /// The resolved parameters as TOML lines.
    fn header(&self, command: &str) -> Vec<String> {
        let mut table = Table::new();
        table.insert("command".into(), Value::String(command.into()));
        table.extend(self.resolved.clone());
        toml::to_string(&table)
            .expect("flat table serializes")
            .lines()
            .map(str::to_string)
            .collect()
    }

    fn report<T: Serialize>(&self, command: &str, result: &T) -> Result<String, CliError> {
        let mut out = String::from("[config]\n");
        for line in self.header(command) {
            out.push_str(&line);
            out.push('\n');
        }
        let body = toml::to_string(&Wrapped { result })
            .map_err(|e| CliError::Data(format!("cannot encode report: {e}")))?;
        out.push('\n');
        out.push_str(&body);
        Ok(out)
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T> {
    result: &'a T,
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => stdout.write_all(bytes).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

#[derive(Serialize)]
struct EscapeRecord {
    escaped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<u32>,
    constants: Constants,
}

#[derive(Serialize)]
struct GreenRecord {
    escaped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    value: f64,
    abs_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<u32>,
    constants: Constants,
}

#[derive(Serialize)]
struct ProfileRecord {
    k_max: u32,
    horizon: u32,
    horizon_limited: bool,
    l: Vec<u32>,
    /// `2^l(k)` as decimal strings, since they can exceed TOML integers.
    degree_bound: Vec<String>,
    tie_levels: Vec<u32>,
    critical_green: Vec<f64>,
    critical_abs_error: Vec<f64>,
    critical_bounded: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    property_k_levels: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sufficiency: Option<crate::connectivity::SufficiencyReport>,
}

#[derive(Serialize)]
struct ScanRecord {
    escaping_shifts: Vec<u32>,
    disconnected: bool,
    note: &'static str,
}

#[derive(Serialize)]
struct GammaRecord {
    #[serde(flatten)]
    fit: crate::stats::GammaFit,
    samples: u64,
    censored: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_escape_time: Option<u32>,
    note: &'static str,
}

#[derive(Serialize)]
struct ConnectivityRecord {
    #[serde(flatten)]
    report: crate::connectivity::ComponentReport,
    bounded_cells: usize,
    note: &'static str,
}

/// Image for [`ImageMode`]: escape times as `min(k, 254)` with 255 for
/// bounded cells, or `g` mapped linearly from `[0, log R0 + 1]` to `[0, 255]`.
#[allow(clippy::too_many_arguments)]
pub fn render_image(
    seq: &ParamSequence,
    consts: &Constants,
    grid: GridBox,
    resolution: usize,
    n_max: u32,
    mode: ImageMode,
    tol: f64,
    comments: Vec<String>,
) -> Graymap {
    match mode {
        ImageMode::EscapeTime => {
            grid_escape_field(seq, consts, grid, resolution, n_max).to_graymap(comments)
        }
        ImageMode::GreenLevels => {
            let top = consts.r0.ln() + 1.0;
            let mut pixels = vec![0u8; resolution * resolution];
            pixels
                .par_chunks_mut(resolution)
                .enumerate()
                .for_each(|(row, out)| {
                    for (col, px) in out.iter_mut().enumerate() {
                        let z = cell_center(&grid, resolution, row, col);
                        let g = green(seq, z, consts, n_max, tol).value_or_zero();
                        *px = (255.0 * (g / top).clamp(0.0, 1.0)).round() as u8;
                    }
                });
            Graymap {
                width: resolution,
                height: resolution,
                comments,
                pixels,
            }
        }
    }
}

fn execute(
    command: Command,
    settings: &mut Settings,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Constants(a) => {
            let r = settings.positive("R", a.r, None)?;
            let k = Constants::derive(r).map_err(|e| field_error("R", e))?;
            let line = format!("R0={:.6} tildeR0={:.6} G={:.6}\n", k.r0, k.tilde_r0, k.g);
            emit(None, line.as_bytes(), stdout)
        }
        Command::Escape(a) => {
            let (seq, consts) = settings.sequence(&a.seq)?;
            let z_text = settings.string("z", a.z, Some("0"))?;
            let z = parse_complex(&z_text, 0).map_err(|e| field_error("z", e))?;
            let n_max = settings.int("n-max", a.seq.n_max, Some(DEFAULT_N_MAX), 1)?;
            let rec = match escape_time(&seq, z, &consts, n_max) {
                EscapeTime::Escaped { k, point } => EscapeRecord {
                    escaped: true,
                    k: Some(k),
                    point: Some((point.re, point.im)),
                    horizon: None,
                    constants: consts,
                },
                EscapeTime::Bounded { horizon } => EscapeRecord {
                    escaped: false,
                    k: None,
                    point: None,
                    horizon: Some(horizon),
                    constants: consts,
                },
            };
            let text = settings.report("escape", &rec)?;
            emit(a.out.as_deref(), text.as_bytes(), stdout)
        }
        Command::Green(a) => {
            let (seq, consts) = settings.sequence(&a.seq)?;
            let z_text = settings.string("z", a.z, Some("0"))?;
            let z = parse_complex(&z_text, 0).map_err(|e| field_error("z", e))?;
            let n_max = settings.int("n-max", a.seq.n_max, Some(DEFAULT_N_MAX), 1)?;
            let tol = settings.positive("tol", a.tol, Some(DEFAULT_TOL))?;
            let rec = match green(&seq, z, &consts, n_max, tol) {
                GreenOutcome::Escaped { k, eval } => GreenRecord {
                    escaped: true,
                    k: Some(k),
                    value: eval.value,
                    abs_error: eval.abs_error,
                    horizon: None,
                    constants: consts,
                },
                GreenOutcome::Bounded { horizon } => GreenRecord {
                    escaped: false,
                    k: None,
                    value: 0.0,
                    abs_error: 0.0,
                    horizon: Some(horizon),
                    constants: consts,
                },
            };
            let text = settings.report("green", &rec)?;
            emit(a.out.as_deref(), text.as_bytes(), stdout)
        }
        Command::Render(a) => {
            let (seq, consts) = settings.sequence(&a.seq)?;
            let n_max = settings.int("n-max", a.seq.n_max, Some(100), 1)?;
            let resolution = settings.int("resolution", a.resolution, Some(512), 2)?;
            let grid = settings.grid(a.grid, &consts)?;
            let mode = match a.mode {
                Some(m) => m,
                None => settings
                    .lookup::<String>("mode")?
                    .map(|s| ImageMode::from_str(&s, true).map_err(|e| field_error("mode", e)))
                    .transpose()?
                    .unwrap_or(ImageMode::EscapeTime),
            };
            settings.record("mode", Value::String(mode.to_possible_value().unwrap().get_name().into()));
            let tol = settings.positive("tol", a.tol, Some(DEFAULT_TOL))?;
            let out = a.out.ok_or_else(|| field_error("out", "required for binary output"))?;
            let _ = writeln!(stderr, "render: {resolution}x{resolution} cells");
            let image = render_image(&seq, &consts, grid, resolution, n_max, mode, tol, settings.header("render"));
            write_atomic(&out, &image.encode())
        }
        Command::Tail(a) => {
            let region = settings.region(a.region)?;
            let samples = settings.int("M", a.m, Some(10_000), 1)?;
            let k_max = settings.int("k-max", a.k_max, Some(60), 1)?;
            let n_max = settings.int("n-max", a.n_max, Some(DEFAULT_N_MAX), 1)?;
            if k_max > n_max {
                return Err(field_error("k-max", "must not exceed n-max"));
            }
            let seed = settings.seed(a.seed)?;
            let mode = match a.mode {
                Some(m) => m,
                None => settings
                    .lookup::<String>("mode")?
                    .map(|s| CliTailMode::from_str(&s, true).map_err(|e| field_error("mode", e)))
                    .transpose()?
                    .unwrap_or(CliTailMode::EscapeTime),
            };
            settings.record("mode", Value::String(mode.to_possible_value().unwrap().get_name().into()));
            let mode = match mode {
                CliTailMode::EscapeTime => TailMode::EscapeTime,
                CliTailMode::FastEscapeGreen => TailMode::FastEscapeGreen,
            };
            let _ = writeln!(stderr, "tail: sampling {samples} sequences from {region}");
            let curve = sample_tail(&region, samples, k_max, n_max, seed, mode);
            let csv = curve.to_csv(&settings.header("tail"));
            emit(a.out.as_deref(), csv.as_bytes(), stdout)
        }
        Command::GammaFit(a) => {
            let input = match a.input {
                Some(p) => p,
                None => settings
                    .lookup::<String>("input")?
                    .map(PathBuf::from)
                    .ok_or_else(|| field_error("input", "required"))?,
            };
            settings.record("input", Value::String(input.display().to_string()));
            let k_lo = settings.int("k-lo", a.k_lo, Some(DEFAULT_K_LO), 0)?;
            let min_survivors = settings.int("min-survivors", a.min_survivors, Some(DEFAULT_MIN_SURVIVORS), 1)?;
            let text = std::fs::read_to_string(&input).map_err(|source| CliError::Io {
                path: input.clone(),
                source,
            })?;
            let curve = TailCurve::from_csv(&text).map_err(|e| CliError::Data(e.to_string()))?;
            let fit = fit_gamma(&curve, k_lo, min_survivors).map_err(|e| match e {
                StatsError::InsufficientData { .. } => {
                    CliError::Data(format!("{e}; the curve shows no decay to fit"))
                }
                other => CliError::Data(other.to_string()),
            })?;
            let rec = GammaRecord {
                fit,
                samples: curve.samples,
                censored: curve.censored,
                median_escape_time: match curve.mode {
                    TailMode::EscapeTime => curve.median(),
                    TailMode::FastEscapeGreen => None,
                },
                note: "empirical decay rate for this region and horizon only",
            };
            let report = settings.report("gamma-fit", &rec)?;
            emit(a.out.as_deref(), report.as_bytes(), stdout)
        }
        Command::Connectivity(a) => {
            let (seq, consts) = settings.sequence(&a.seq)?;
            let n_max = settings.int("n-max", a.seq.n_max, Some(100), 1)?;
            let resolution = settings.int("resolution", a.resolution, Some(512), 2)?;
            let grid = settings.grid(a.grid, &consts)?;
            let _ = writeln!(stderr, "connectivity: {resolution}x{resolution} cells");
            let field = grid_escape_field(&seq, &consts, grid, resolution, n_max);
            let rec = ConnectivityRecord {
                report: components(&field),
                bounded_cells: field.bounded_count(),
                note: "grid components at finite resolution and horizon",
            };
            if let Some(path) = &a.pgm {
                write_atomic(path, &field.to_graymap(settings.header("connectivity")).encode())?;
            }
            let report = settings.report("connectivity", &rec)?;
            emit(a.out.as_deref(), report.as_bytes(), stdout)
        }
        Command::DegreeProfile(a) => {
            let (seq, consts) = settings.sequence(&a.seq)?;
            let n_max = settings.int("n-max", a.seq.n_max, Some(DEFAULT_N_MAX), 1)?;
            let k_max = settings.int("k-max", a.k_max, Some(30), 1)?;
            let tol = settings.positive("tol", a.tol, Some(DEFAULT_TOL))?;
            let big_k = match a.big_k {
                Some(k) => Some(settings.int("K", Some(k), None, 0)?),
                None => match settings.lookup::<u32>("K")? {
                    Some(k) => Some(settings.int("K", Some(k), None, 0)?),
                    None => None,
                },
            };
            let profile = critical_profile(&seq, k_max, &consts, n_max, tol);
            let rec = ProfileRecord {
                k_max,
                horizon: n_max,
                horizon_limited: profile.horizon_limited,
                l: profile.l.clone(),
                degree_bound: profile.degree_bound.iter().map(u64::to_string).collect(),
                tie_levels: profile.tie_levels.clone(),
                critical_green: profile.critical_greens.iter().map(GreenOutcome::value_or_zero).collect(),
                critical_abs_error: profile.critical_greens.iter().map(GreenOutcome::abs_error).collect(),
                critical_bounded: profile
                    .critical_greens
                    .iter()
                    .map(|g| matches!(g, GreenOutcome::Bounded { .. }))
                    .collect(),
                property_k_levels: big_k
                    .map(|kk| (1..=k_max).filter(|&k| property_kk(&profile, kk, k)).collect()),
                sufficiency: big_k.map(|kk| sufficient_condition_report(&profile, kk)),
            };
            let report = settings.report("degree-profile", &rec)?;
            emit(a.out.as_deref(), report.as_bytes(), stdout)
        }
        Command::DisconnectScan(a) => {
            let (seq, consts) = settings.sequence(&a.seq)?;
            let n_max = settings.int("n-max", a.seq.n_max, Some(DEFAULT_N_MAX), 1)?;
            let shift_max = settings.int("shift-max", a.shift_max, Some(50), 0)?;
            let shifts = bbr_disconnected_scan(&seq, shift_max, &consts, n_max);
            let rec = ScanRecord {
                disconnected: !shifts.is_empty(),
                escaping_shifts: shifts,
                note: "an escaping shift certifies a disconnected Julia set; none found is evidence at this horizon only",
            };
            let report = settings.report("disconnect-scan", &rec)?;
            emit(a.out.as_deref(), report.as_bytes(), stdout)
        }
        Command::Fraction(a) => {
            let region = settings.region(a.region)?;
            let samples = settings.int("M", a.m, Some(1000), 1)?;
            let shift_max = settings.int("shift-max", a.shift_max, Some(30), 1)?;
            let n_max = settings.int("n-max", a.n_max, Some(500), 1)?;
            let seed = settings.seed(a.seed)?;
            let big_k = settings.int("K", a.big_k, Some(8), 0)?;
            let _ = writeln!(stderr, "fraction: sampling {samples} sequences from {region}");
            let rec = disconnect_fraction(&region, samples, shift_max, n_max, seed, big_k);
            let report = settings.report("fraction", &rec)?;
            emit(a.out.as_deref(), report.as_bytes(), stdout)
        }
        Command::GreenSummary(a) => {
            let region = settings.region(a.region)?;
            let samples = settings.int("M", a.m, Some(10_000), 1)?;
            let n_max = settings.int("n-max", a.n_max, Some(DEFAULT_N_MAX), 1)?;
            let seed = settings.seed(a.seed)?;
            let _ = writeln!(stderr, "green-summary: sampling {samples} sequences from {region}");
            let rec = green_summary(&region, samples, n_max, seed);
            let report = settings.report("green-summary", &rec)?;
            emit(a.out.as_deref(), report.as_bytes(), stdout)
        }
    }
}

fn thread_count(flag: Option<usize>, settings: &Settings) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match settings.lookup::<usize>("threads")? {
            Some(n) => Some(n),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => Some(
                    v.trim()
                        .parse()
                        .map_err(|_| field_error(THREADS_ENV, "not a positive integer"))?,
                ),
                Err(_) => None,
            },
        },
    };
    if n == Some(0) {
        return Err(field_error("threads", "must be positive"));
    }
    Ok(n)
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    let result = (|| {
        let mut settings = Settings::load(cli.config.as_deref())?;
        let threads = thread_count(cli.threads, &settings)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Data(format!("cannot start thread pool: {e}")))?;
        let mut out = Vec::new();
        let mut log = Vec::new();
        let result = pool.install(|| execute(cli.command, &mut settings, &mut out, &mut log));
        let _ = stderr.write_all(&log);
        stdout.write_all(&out).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?;
        result
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "randjulia: {e}");
            e.exit_code()
        }
    }
}
