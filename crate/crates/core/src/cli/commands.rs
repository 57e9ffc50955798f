use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bench_harness::{fmt_f64, match_by_frequency, run_sweep, BenchmarkResult, MISSING};
use crate::cs_baseline::{extract_tones, make_sensing_matrix, omp_recover};
use crate::dealias_crt::{pair_components, resolve_frequency, DealiasConfig, ResolvedTone};
use crate::matrix_pencil::solve_pencil_pair;
use crate::model_order::{combine_order, estimate_order};
use crate::rng::derive_seed;
use crate::signal_model::{add_awgn, canonical_phase, synthesize_from, wrap_phase_diff, SampledStream, Tone};
use crate::Error;

use super::config::{ConfigError, RunConfig};
use super::stream_io::{read_stream, write_stream};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// Some components could not be resolved; partial output was written.
    Partial = 1,
    ConfigError = 2,
    IoError = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    fn config(message: impl ToString) -> Self {
        Self {
            status: ExitStatus::ConfigError,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            status: ExitStatus::IoError,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::config(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn finish(r: CliResult<ExitStatus>) -> ExitStatus {
    match r {
        Ok(s) => s,
        Err(e) => {
            eprintln!("pencilcrt: {}", e.message);
            e.status
        }
    }
}

fn load(config: &Path, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.synth.seed = s;
        cfg.cs.seed = s;
        cfg.experiment.master_seed = s;
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn output_path(out: Option<&Path>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Paths of the two channel files written by `synth` for a given prefix.
pub fn channel_paths(prefix: &Path) -> [PathBuf; 2] {
    [with_suffix(prefix, ".ch1.snyq"), with_suffix(prefix, ".ch2.snyq")]
}

fn channel_streams(cfg: &RunConfig) -> crate::Result<[SampledStream; 2]> {
    let s = &cfg.synth;
    let make = |rate: f64, ch: u64| {
        let clean = synthesize_from(&cfg.signal, rate, s.n_samples, s.start_index)?;
        add_awgn(&clean, s.snr_db, derive_seed(&[s.seed, ch]))
    };
    Ok([make(s.rate1_hz, 0)?, make(s.rate2_hz, 1)?])
}

/// Synthesizes both channels and writes `<out>.ch1.snyq` and `<out>.ch2.snyq`.
pub fn cmd_synth(config: &Path, out: Option<&Path>, seed: Option<u64>) -> ExitStatus {
    finish(synth(config, out, seed))
}

fn synth(config: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<ExitStatus> {
    let cfg = load(config, seed)?;
    let streams = channel_streams(&cfg).map_err(CliError::config)?;
    let prefix = output_path(out, &cfg, "pencilcrt");
    let paths = channel_paths(&prefix);
    for (p, s) in paths.iter().zip(&streams) {
        write_stream(p, s).map_err(CliError::io)?;
    }
    println!(
        "synth: {} tones, {} samples at {} Hz and {} Hz, snr {} dB -> {}, {}",
        cfg.signal.len(),
        cfg.synth.n_samples,
        cfg.synth.rate1_hz,
        cfg.synth.rate2_hz,
        cfg.synth.snr_db,
        paths[0].display(),
        paths[1].display()
    );
    Ok(ExitStatus::Success)
}

/// One row of the estimate table.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimateRow {
    Resolved(ResolvedTone),
    /// A paired component whose true frequency could not be pinned down.
    Unresolved {
        amplitude: f64,
        phase_rad: f64,
        reason: &'static str,
    },
}

pub const ESTIMATE_HEADER: &str = "freq_hz,amplitude,phase_rad,k1,k2,residual_hz";

/// Runs order estimation, the pencil pair, pairing and de-aliasing on two
/// streams. Resolved rows come first, sorted by frequency.
pub fn estimate_rows(
    s1: &SampledStream,
    s2: &SampledStream,
    cfg: &RunConfig,
) -> crate::Result<Vec<EstimateRow>> {
    let dealias = DealiasConfig::from_settings(s1.rate_hz, s2.rate_hz, &cfg.dealias)?;
    let order = match cfg.pencil.model_order {
        Some(m) => m,
        None => combine_order(estimate_order(s1, &cfg.order)?, estimate_order(s2, &cfg.order)?),
    };
    if order == 0 {
        return Ok(Vec::new());
    }
    let (set1, set2) = solve_pencil_pair(s1, s2, order, &cfg.pencil)?;
    if set1.is_empty() && set2.is_empty() {
        return Ok(Vec::new());
    }
    let pairs = pair_components(&set1, &set2, &dealias)?;
    let mut rows: Vec<EstimateRow> = pairs
        .iter()
        .map(|p| match resolve_frequency(p, &dealias) {
            Ok(t) => EstimateRow::Resolved(t),
            Err(e) => EstimateRow::Unresolved {
                amplitude: 0.5 * (p.chan1.amplitude + p.chan2.amplitude),
                phase_rad: canonical_phase(
                    p.chan1.phase_rad + 0.5 * wrap_phase_diff(p.chan2.phase_rad - p.chan1.phase_rad),
                ),
                reason: match e {
                    Error::Ambiguous { .. } => "ambiguous",
                    _ => "unresolved",
                },
            },
        })
        .collect();
    rows.sort_by(|a, b| match (a, b) {
        (EstimateRow::Resolved(x), EstimateRow::Resolved(y)) => x.freq_hz.total_cmp(&y.freq_hz),
        (EstimateRow::Resolved(_), _) => std::cmp::Ordering::Less,
        (_, EstimateRow::Resolved(_)) => std::cmp::Ordering::Greater,
        _ => std::cmp::Ordering::Equal,
    });
    Ok(rows)
}

/// Unresolved rows carry `nan` frequency, `NA` fold indices and the reason
/// (`ambiguous` or `unresolved`) in the residual column.
pub fn estimate_csv(rows: &[EstimateRow]) -> String {
    let mut out = format!("{ESTIMATE_HEADER}\n");
    for r in rows {
        let _ = match r {
            EstimateRow::Resolved(t) => writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(t.freq_hz),
                fmt_f64(t.amplitude),
                fmt_f64(t.phase_rad),
                t.k1,
                t.k2,
                fmt_f64(t.residual_hz)
            ),
            EstimateRow::Unresolved {
                amplitude,
                phase_rad,
                reason,
            } => writeln!(
                out,
                "nan,{},{},{MISSING},{MISSING},{reason}",
                fmt_f64(*amplitude),
                fmt_f64(*phase_rad)
            ),
        };
    }
    out
}

/// Estimates tones from two stream files. The table goes to `out` (or the
/// config's `output`), else to stdout.
pub fn cmd_estimate(
    stream1: &Path,
    stream2: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> ExitStatus {
    finish(estimate(stream1, stream2, config, out, seed))
}

fn estimate(
    stream1: &Path,
    stream2: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<ExitStatus> {
    let cfg = match config {
        Some(p) => load(p, seed)?,
        None => RunConfig::default(),
    };
    let s1 = read_stream(stream1).map_err(CliError::io)?;
    let s2 = read_stream(stream2).map_err(CliError::io)?;
    if s1.rate_hz == s2.rate_hz {
        return Err(CliError::config(format!(
            "rates must differ (both streams are sampled at {} Hz)",
            s1.rate_hz
        )));
    }
    let rows = estimate_rows(&s1, &s2, &cfg).map_err(|e| match e {
        Error::InvalidArgument(_) => CliError::config(e),
        _ => CliError {
            status: ExitStatus::Partial,
            message: format!("estimation failed: {e}"),
        },
    })?;
    let csv = estimate_csv(&rows);
    match out.map(Path::to_path_buf).or(cfg.output.clone()) {
        Some(p) => write_file(&p, &csv)?,
        None => print!("{csv}"),
    }
    let unresolved = rows
        .iter()
        .filter(|r| matches!(r, EstimateRow::Unresolved { .. }))
        .count();
    if unresolved > 0 {
        eprintln!("pencilcrt: {unresolved} of {} components unresolved", rows.len());
        Ok(ExitStatus::Partial)
    } else {
        Ok(ExitStatus::Success)
    }
}

/// Path of the long-format copy written next to a bench CSV.
pub fn long_csv_path(path: &Path) -> PathBuf {
    match path.extension() {
        Some(ext) if ext == "csv" => path.with_extension("long.csv"),
        _ => with_suffix(path, ".long.csv"),
    }
}

/// Worker count from `PENCILCRT_THREADS`; `None` when unset.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("PENCILCRT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("PENCILCRT_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs the Monte Carlo sweep and writes the wide CSV to `out` plus a
/// long-format copy beside it.
pub fn cmd_bench(config: &Path, out: Option<&Path>, seed: Option<u64>) -> ExitStatus {
    finish(bench(config, out, seed))
}

fn bench(config: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<ExitStatus> {
    let cfg = load(config, seed)?;
    let exp = &cfg.experiment;
    exp.validate().map_err(CliError::config)?;
    let path = output_path(out, &cfg, "bench.csv");
    let result: BenchmarkResult = match thread_cap()? {
        None => run_sweep(exp),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?
            .install(|| run_sweep(exp)),
    }
    .map_err(CliError::config)?;
    write_file(&path, &result.to_csv())?;
    let long = long_csv_path(&path);
    write_file(&long, &result.to_long_csv())?;
    println!(
        "bench: {} cells x {} trials -> {}, {}",
        result.cells.len(),
        result.trials,
        path.display(),
        long.display()
    );
    Ok(ExitStatus::Success)
}

pub const COMPARE_HEADER: &str =
    "method,truth_freq_hz,est_freq_hz,freq_err_hz,amp_rel_err,phase_err_rad";

fn compare_rows(out: &mut String, method: &str, estimates: &[Tone], truth: &[Tone]) {
    let est_f: Vec<f64> = estimates.iter().map(|t| t.freq_hz).collect();
    let tru_f: Vec<f64> = truth.iter().map(|t| t.freq_hz).collect();
    let matches = match_by_frequency(&est_f, &tru_f);
    for (j, t) in truth.iter().enumerate() {
        let _ = match matches.iter().find(|m| m.1 == j) {
            Some(&(i, _)) => {
                let e = &estimates[i];
                writeln!(
                    out,
                    "{method},{},{},{},{},{}",
                    fmt_f64(t.freq_hz),
                    fmt_f64(e.freq_hz),
                    fmt_f64((e.freq_hz - t.freq_hz).abs()),
                    fmt_f64((e.amplitude - t.amplitude).abs() / t.amplitude),
                    fmt_f64(wrap_phase_diff(e.phase_rad - t.phase_rad).abs())
                )
            }
            None => writeln!(out, "{method},{},{MISSING},{MISSING},{MISSING},{MISSING}", fmt_f64(t.freq_hz)),
        };
    }
}

/// One noisy realization of the configured signal through both methods;
/// writes per-tone errors against the ground truth.
pub fn cmd_compare(config: &Path, out: Option<&Path>, seed: Option<u64>) -> ExitStatus {
    finish(compare(config, out, seed))
}

fn compare(config: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<ExitStatus> {
    let cfg = load(config, seed)?;
    cfg.cs.validate().map_err(CliError::config)?;
    let truth = cfg.signal.tones();

    let [s1, s2] = channel_streams(&cfg).map_err(CliError::config)?;
    let gea: Vec<Tone> = estimate_rows(&s1, &s2, &cfg)
        .unwrap_or_default()
        .into_iter()
        .filter_map(|r| match r {
            EstimateRow::Resolved(t) => Tone::new(t.freq_hz, t.amplitude, t.phase_rad).ok(),
            EstimateRow::Unresolved { .. } => None,
        })
        .collect();

    let cs = {
        let n = cfg.cs.full_length_n;
        let rate = cfg.synth.nyquist_rate_hz;
        let clean = synthesize_from(&cfg.signal, rate, n, 0).map_err(CliError::config)?;
        let noisy = add_awgn(&clean, cfg.synth.snr_db, derive_seed(&[cfg.synth.seed, 2]))
            .map_err(CliError::config)?;
        let m = cfg.cs.measurements().map_err(CliError::config)?;
        let phi = make_sensing_matrix(m, n, cfg.cs.seed).map_err(CliError::config)?;
        let y = phi.apply(&noisy.samples).map_err(CliError::config)?;
        let rec = omp_recover(&y, &phi, cfg.cs.sparsity_k).map_err(CliError::config)?;
        extract_tones(&rec, n, rate)
    };

    let mut csv = format!("{COMPARE_HEADER}\n");
    compare_rows(&mut csv, "gea", &gea, truth);
    compare_rows(&mut csv, "cs", &cs, truth);
    match out.map(Path::to_path_buf).or(cfg.output.clone()) {
        Some(p) => write_file(&p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(if gea.len() < truth.len() {
        ExitStatus::Partial
    } else {
        ExitStatus::Success
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(long_csv_path(Path::new("a/b.csv")), PathBuf::from("a/b.long.csv"));
        assert_eq!(long_csv_path(Path::new("a/b")), PathBuf::from("a/b.long.csv"));
        assert_eq!(
            channel_paths(Path::new("x/run")),
            [PathBuf::from("x/run.ch1.snyq"), PathBuf::from("x/run.ch2.snyq")]
        );
    }

    #[test]
    fn unresolved_rows_sort_last() {
        let t = |f| {
            EstimateRow::Resolved(ResolvedTone {
                freq_hz: f,
                amplitude: 1.0,
                phase_rad: 0.0,
                k1: 0,
                k2: 0,
                residual_hz: 0.0,
            })
        };
        let csv = estimate_csv(&[
            t(1.5),
            EstimateRow::Unresolved {
                amplitude: 1.0,
                phase_rad: 0.5,
                reason: "ambiguous",
            },
        ]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], ESTIMATE_HEADER);
        assert!(lines[1].starts_with("1.5000000000000000e0,"));
        assert!(lines[2].starts_with("nan,") && lines[2].ends_with(",NA,NA,ambiguous"));
    }
}
