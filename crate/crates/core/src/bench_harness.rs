//! Monte Carlo comparison of the dual-rate pencil pipeline against the
//! compressed-sensing baseline over an SNR × sample-length grid.
//!
//! Every random draw in a trial is seeded from `(master_seed, trial_index,
//! method, channel)`, so a sweep gives bit-identical results whether the
//! trials run serially or on a thread pool. The SNR does not enter the seed:
//! a trial sees the same noise shape at every SNR, only rescaled.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cs_baseline::{extract_tones, make_sensing_matrix, omp_recover, SensingMatrix};
use crate::dealias_crt::{pair_components, resolve_frequency, DealiasConfig, DealiasSettings};
use crate::matrix_pencil::{solve_pencil_pair, PencilConfig};
use crate::model_order::{combine_order, estimate_order, OrderConfig};
use crate::rng::derive_seed;
use crate::signal_model::{add_awgn, synthesize, wrap_phase_diff, SignalSpec, Tone};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gea,
    Cs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gea => "gea",
            Method::Cs => "cs",
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            Method::Gea => 1,
            Method::Cs => 2,
        }
    }
}

/// Ten tones between 0.05 and 0.95 of 10 kHz. Aliases at 101 Hz and 103 Hz
/// are at least 4.2 Hz apart (over 4 FFT bins at 108 samples), every tone
/// sits at least 0.15 bins off the 2048-point Nyquist grid, and no two tones
/// share a close (amplitude, phase) pair.
pub const DEFAULT_TONES: [(f64, f64, f64); 10] = [
    (593.541, 0.524, 1.7),
    (2906.435, 1.027, -0.68),
    (3038.835, 1.433, 0.903),
    (3126.264, 1.196, 2.173),
    (3302.71, 1.034, -3.088),
    (3470.484, 0.515, -2.353),
    (4205.78, 1.317, -2.293),
    (4852.569, 0.556, 2.615),
    (8025.1, 0.582, 0.282),
    (8920.115, 1.69, -1.192),
];

pub fn default_spec() -> SignalSpec {
    SignalSpec::new(
        DEFAULT_TONES
            .iter()
            .map(|&(f, a, p)| Tone::new(f, a, p).expect("default tones are valid"))
            .collect(),
    )
    .expect("default tones are distinct")
}

/// SNR values in dB; `+∞` means noiseless and is written as `"inf"` in JSON.
mod snr_serde {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Snr {
        Num(f64),
        Text(String),
    }

    pub fn parse_snr_text(s: &str) -> Option<f64> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" | "noiseless" => Some(f64::INFINITY),
            other => other.parse().ok(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let raw = Vec::<Snr>::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                Snr::Num(x) => Ok(x),
                Snr::Text(s) => parse_snr_text(&s)
                    .ok_or_else(|| serde::de::Error::custom(format!("invalid SNR value {s:?}"))),
            })
            .collect()
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            if x.is_finite() {
                seq.serialize_element(x)?;
            } else {
                seq.serialize_element("inf")?;
            }
        }
        seq.end()
    }
}

pub use snr_serde::parse_snr_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SignalSpec,
    pub rate1_hz: f64,
    pub rate2_hz: f64,
    pub nyquist_rate_hz: f64,
    pub full_length_n: usize,
    #[serde(with = "snr_serde")]
    pub snr_grid_db: Vec<f64>,
    pub sample_lengths: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    /// Use the ground-truth tone count as the model order (and as the OMP
    /// sparsity). When false, the order comes from FFT peak counting.
    pub use_true_order: bool,
    pub pencil: PencilConfig,
    pub order: OrderConfig,
    /// `f_max_hint_hz` defaults to `nyquist_rate_hz`.
    pub dealias: DealiasSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spec: default_spec(),
            rate1_hz: 101.0,
            rate2_hz: 103.0,
            nyquist_rate_hz: 10_000.0,
            full_length_n: 2048,
            snr_grid_db: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            sample_lengths: vec![108, 216, 864],
            trials: 100,
            master_seed: 0,
            methods: vec![Method::Gea, Method::Cs],
            use_true_order: true,
            pencil: PencilConfig::default(),
            order: OrderConfig::default(),
            dealias: DealiasSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_lengths.is_empty() || self.sample_lengths.contains(&0) {
            return Err(Error::InvalidArgument(
                "sample_lengths must be non-empty and positive".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidArgument("snr_grid_db must be non-empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidArgument("snr_grid_db contains NaN".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("snr_grid_db must be strictly increasing".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("methods must be non-empty".into()));
        }
        if !(self.nyquist_rate_hz.is_finite() && self.nyquist_rate_hz > 0.0) {
            return Err(Error::InvalidArgument("nyquist_rate_hz must be positive".into()));
        }
        if self.full_length_n == 0 {
            return Err(Error::InvalidArgument("full_length_n must be positive".into()));
        }
        if self.methods.contains(&Method::Cs) {
            if let Some(&m) = self.sample_lengths.iter().find(|&&m| m > self.full_length_n) {
                return Err(Error::InvalidArgument(format!(
                    "sample length {m} exceeds full_length_n {} for the CS method",
                    self.full_length_n
                )));
            }
        }
        self.pencil.validate()?;
        self.order.validate()?;
        self.dealias_config()?;
        Ok(())
    }

    pub fn dealias_config(&self) -> Result<DealiasConfig> {
        let mut settings = self.dealias;
        if settings.max_fold_index_n.is_none() && settings.f_max_hint_hz.is_none() {
            settings.f_max_hint_hz = Some(self.nyquist_rate_hz);
        }
        DealiasConfig::from_settings(self.rate1_hz, self.rate2_hz, &settings)
    }
}

/// Errors of one estimated tone against its matched ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneError {
    pub truth_index: usize,
    pub freq_abs_hz: f64,
    pub amp_rel: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    /// Matched tones; `missed` ground-truth tones had no estimate.
    Estimated { errors: Vec<ToneError>, missed: usize },
    /// The pipeline aborted (order, pairing, numerical failure).
    Failed(String),
}

impl TrialOutcome {
    pub fn is_clean(&self) -> bool {
        matches!(self, TrialOutcome::Estimated { missed: 0, .. })
    }
}

/// Greedy nearest-frequency matching on globally sorted distances. Returns
/// `(estimate index, truth index)` pairs.
pub fn match_by_frequency(estimates: &[f64], truths: &[f64]) -> Vec<(usize, usize)> {
    let mut dists: Vec<(f64, usize, usize)> = estimates
        .iter()
        .enumerate()
        .flat_map(|(i, &e)| truths.iter().enumerate().map(move |(j, &t)| ((e - t).abs(), i, j)))
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut est_used = vec![false; estimates.len()];
    let mut truth_used = vec![false; truths.len()];
    let mut out = Vec::new();
    for (_, i, j) in dists {
        if !est_used[i] && !truth_used[j] {
            est_used[i] = true;
            truth_used[j] = true;
            out.push((i, j));
        }
    }
    out.sort_by_key(|&(_, j)| j);
    out
}

fn score(estimates: &[Tone], truth: &SignalSpec) -> TrialOutcome {
    let truths = truth.tones();
    let est_f: Vec<f64> = estimates.iter().map(|t| t.freq_hz).collect();
    let tru_f: Vec<f64> = truths.iter().map(|t| t.freq_hz).collect();
    let matches = match_by_frequency(&est_f, &tru_f);
    let errors: Vec<ToneError> = matches
        .iter()
        .map(|&(i, j)| {
            let (e, t) = (&estimates[i], &truths[j]);
            ToneError {
                truth_index: j,
                freq_abs_hz: (e.freq_hz - t.freq_hz).abs(),
                amp_rel: (e.amplitude - t.amplitude).abs() / t.amplitude,
                phase_rad: wrap_phase_diff(e.phase_rad - t.phase_rad).abs(),
            }
        })
        .collect();
    TrialOutcome::Estimated {
        missed: truths.len() - errors.len(),
        errors,
    }
}

fn channel_seed(cfg: &ExperimentConfig, trial: usize, method: Method, channel: u64) -> u64 {
    derive_seed(&[cfg.master_seed, trial as u64, method.seed_tag(), channel])
}

fn gea_estimates(cfg: &ExperimentConfig, snr_db: f64, length: usize, trial: usize) -> Result<Vec<Tone>> {
    let streams = [cfg.rate1_hz, cfg.rate2_hz]
        .iter()
        .enumerate()
        .map(|(ch, &rate)| {
            let clean = synthesize(&cfg.spec, rate, length)?;
            add_awgn(&clean, snr_db, channel_seed(cfg, trial, Method::Gea, ch as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    let order = if cfg.use_true_order {
        cfg.spec.len()
    } else {
        combine_order(
            estimate_order(&streams[0], &cfg.order)?,
            estimate_order(&streams[1], &cfg.order)?,
        )
    };
    if order == 0 {
        return Ok(Vec::new());
    }
    let (set1, set2) = solve_pencil_pair(&streams[0], &streams[1], order, &cfg.pencil)?;
    let dealias = cfg.dealias_config()?;
    let pairs = pair_components(&set1, &set2, &dealias)?;
    Ok(pairs
        .iter()
        .filter_map(|p| resolve_frequency(p, &dealias).ok())
        .filter_map(|r| Tone::new(r.freq_hz, r.amplitude, r.phase_rad).ok())
        .collect())
}

fn sensing_for(cfg: &ExperimentConfig, length: usize, trial: usize) -> Result<SensingMatrix> {
    make_sensing_matrix(length, cfg.full_length_n, channel_seed(cfg, trial, Method::Cs, 1))
}

fn cs_estimates(
    cfg: &ExperimentConfig,
    snr_db: f64,
    trial: usize,
    sensing: &SensingMatrix,
) -> Result<Vec<Tone>> {
    let clean = synthesize(&cfg.spec, cfg.nyquist_rate_hz, cfg.full_length_n)?;
    let noisy = add_awgn(&clean, snr_db, channel_seed(cfg, trial, Method::Cs, 0))?;
    let y = sensing.apply(&noisy.samples)?;
    let rec = omp_recover(&y, sensing, cfg.spec.len())?;
    Ok(extract_tones(&rec, cfg.full_length_n, cfg.nyquist_rate_hz))
}

fn outcome(res: Result<Vec<Tone>>, truth: &SignalSpec) -> TrialOutcome {
    match res {
        Ok(est) => score(&est, truth),
        Err(e) => TrialOutcome::Failed(e.to_string()),
    }
}

/// One Monte Carlo trial. Failures come back as [`TrialOutcome::Failed`].
pub fn run_trial(
    cfg: &ExperimentConfig,
    snr_db: f64,
    length: usize,
    trial_index: usize,
    method: Method,
) -> TrialOutcome {
    match method {
        Method::Gea => outcome(gea_estimates(cfg, snr_db, length, trial_index), &cfg.spec),
        Method::Cs => outcome(
            sensing_for(cfg, length, trial_index)
                .and_then(|phi| cs_estimates(cfg, snr_db, trial_index, &phi)),
            &cfg.spec,
        ),
    }
}

/// All SNR points of one `(method, length, trial)`; the sensing matrix is
/// drawn once and shared across SNRs.
fn run_trial_over_snr(cfg: &ExperimentConfig, method: Method, length: usize, trial: usize) -> Vec<TrialOutcome> {
    match method {
        Method::Gea => cfg
            .snr_grid_db
            .iter()
            .map(|&snr| run_trial(cfg, snr, length, trial, method))
            .collect(),
        Method::Cs => match sensing_for(cfg, length, trial) {
            Ok(phi) => cfg
                .snr_grid_db
                .iter()
                .map(|&snr| outcome(cs_estimates(cfg, snr, trial, &phi), &cfg.spec))
                .collect(),
            Err(e) => vec![TrialOutcome::Failed(e.to_string()); cfg.snr_grid_db.len()],
        },
    }
}

/// `sqrt(Σ e² / n)`.
pub fn compute_rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("RMSE of an empty list".into()));
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub sample_length: usize,
    pub snr_db: f64,
    /// `None` when no trial produced a matched tone.
    pub rmse_freq_hz: Option<f64>,
    pub rmse_amp_rel: Option<f64>,
    pub rmse_phase_rad: Option<f64>,
    /// Trials that aborted or left at least one ground-truth tone unmatched.
    pub failure_count: usize,
    /// Ground-truth tones without an estimate, summed over trials.
    pub missed_tones: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub methods: Vec<Method>,
    pub sample_lengths: Vec<usize>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    /// Ordered method-major, then sample length, then SNR.
    pub cells: Vec<CellResult>,
}

impl BenchmarkResult {
    pub fn cell(&self, method: Method, sample_length: usize, snr_db: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.sample_length == sample_length && c.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("method,sample_length,snr_db,rmse_freq_hz,rmse_amp_rel,rmse_phase_rad,failures\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.method.as_str(),
                c.sample_length,
                fmt_f64(c.snr_db),
                fmt_opt(c.rmse_freq_hz),
                fmt_opt(c.rmse_amp_rel),
                fmt_opt(c.rmse_phase_rad),
                c.failure_count
            );
        }
        out
    }

    /// One row per (cell, metric): `method,sample_length,snr_db,metric,value`.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("method,sample_length,snr_db,metric,value\n");
        for c in &self.cells {
            let metrics = [
                ("rmse_freq_hz", fmt_opt(c.rmse_freq_hz)),
                ("rmse_amp_rel", fmt_opt(c.rmse_amp_rel)),
                ("rmse_phase_rad", fmt_opt(c.rmse_phase_rad)),
                ("failures", c.failure_count.to_string()),
                ("missed_tones", c.missed_tones.to_string()),
            ];
            for (name, value) in metrics {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.method.as_str(),
                    c.sample_length,
                    fmt_f64(c.snr_db),
                    name,
                    value
                );
            }
        }
        out
    }
}

/// Marker for a cell with no successful trial.
pub const MISSING: &str = "NA";

/// 17 significant digits, locale-independent; `inf`/`-inf`/`nan` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| MISSING.to_string(), fmt_f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// On the current rayon pool.
    Parallel,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<BenchmarkResult> {
    run_sweep_with(cfg, Execution::Parallel)
}

pub fn run_sweep_with(cfg: &ExperimentConfig, exec: Execution) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let tasks: Vec<(Method, usize, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| {
            cfg.sample_lengths
                .iter()
                .flat_map(move |&len| (0..cfg.trials).map(move |t| (m, len, t)))
        })
        .collect();
    let runs: Vec<Vec<TrialOutcome>> = match exec {
        Execution::Serial => tasks
            .iter()
            .map(|&(m, len, t)| run_trial_over_snr(cfg, m, len, t))
            .collect(),
        Execution::Parallel => tasks
            .par_iter()
            .map(|&(m, len, t)| run_trial_over_snr(cfg, m, len, t))
            .collect(),
    };

    let mut cells = Vec::new();
    for (block, chunk) in runs.chunks(cfg.trials).enumerate() {
        let (method, length, _) = tasks[block * cfg.trials];
        for (s, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
            let (mut ef, mut ea, mut ep) = (Vec::new(), Vec::new(), Vec::new());
            let mut failures = 0;
            let mut missed_tones = 0;
            for trial in chunk {
                match &trial[s] {
                    TrialOutcome::Estimated { errors, missed } => {
                        for e in errors {
                            ef.push(e.freq_abs_hz);
                            ea.push(e.amp_rel);
                            ep.push(e.phase_rad);
                        }
                        if *missed > 0 {
                            failures += 1;
                            missed_tones += missed;
                        }
                    }
                    TrialOutcome::Failed(_) => {
                        failures += 1;
                        missed_tones += cfg.spec.len();
                    }
                }
            }
            cells.push(CellResult {
                method,
                sample_length: length,
                snr_db,
                rmse_freq_hz: compute_rmse(&ef).ok(),
                rmse_amp_rel: compute_rmse(&ea).ok(),
                rmse_phase_rad: compute_rmse(&ep).ok(),
                failure_count: failures,
                missed_tones,
            });
        }
    }
    Ok(BenchmarkResult {
        methods: cfg.methods.clone(),
        sample_lengths: cfg.sample_lengths.clone(),
        snr_grid_db: cfg.snr_grid_db.clone(),
        trials: cfg.trials,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro(methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig {
            snr_grid_db: vec![f64::INFINITY],
            sample_lengths: vec![108],
            trials: 1,
            methods,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(compute_rmse(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(compute_rmse(&[1.0, 1.0]).unwrap(), 1.0);
        assert!((compute_rmse(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(compute_rmse(&[]).is_err());
    }

    #[test]
    fn default_spec_is_well_separated() {
        let spec = default_spec();
        assert_eq!(spec.len(), 10);
        for rate in [101.0, 103.0] {
            let bin = rate / 108.0;
            let mut a: Vec<f64> = spec.tones().iter().map(|t| t.freq_hz % rate).collect();
            a.sort_by(f64::total_cmp);
            let wrap = a[0] + rate - a[9];
            let min_gap = a.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min);
            assert!(min_gap > 2.0 * bin, "rate {rate}: {min_gap}");
        }
        assert!(spec.max_freq_hz() < 10_201.0);
    }

    #[test]
    fn identity_matching_for_exact_estimates() {
        let f = [5.0, 1.0, 3.0];
        assert_eq!(match_by_frequency(&f, &f), vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(match_by_frequency(&[2.9, 1.2], &f), vec![(1, 1), (0, 2)]);
    }

    #[test]
    fn noiseless_gea_trial() {
        let cfg = micro(vec![Method::Gea]);
        match run_trial(&cfg, f64::INFINITY, 108, 0, Method::Gea) {
            TrialOutcome::Estimated { errors, missed } => {
                assert_eq!(missed, 0);
                assert_eq!(errors.len(), 10);
                for e in errors {
                    assert!(e.freq_abs_hz < 1e-6 && e.amp_rel < 1e-6 && e.phase_rad < 1e-6, "{e:?}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noiseless_cs_trial_on_grid() {
        let bin = 10_000.0 / 2048.0;
        let spec = SignalSpec::new(
            [(100usize, 1.0, 0.3), (700, 1.5, -1.0), (1500, 0.8, 2.0)]
                .iter()
                .map(|&(b, a, p)| Tone::new(b as f64 * bin, a, p).unwrap())
                .collect(),
        )
        .unwrap();
        let cfg = ExperimentConfig {
            spec,
            ..micro(vec![Method::Cs])
        };
        match run_trial(&cfg, f64::INFINITY, 108, 0, Method::Cs) {
            TrialOutcome::Estimated { errors, missed } => {
                assert_eq!(missed, 0);
                for e in errors {
                    assert_eq!(e.freq_abs_hz, 0.0);
                    assert!(e.amp_rel < 1e-6 && e.phase_rad < 1e-6, "{e:?}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = micro(vec![Method::Gea, Method::Cs]);
        for m in [Method::Gea, Method::Cs] {
            assert_eq!(run_trial(&cfg, 10.0, 108, 3, m), run_trial(&cfg, 10.0, 108, 3, m));
        }
    }

    #[test]
    fn grid_shape() {
        let cfg = ExperimentConfig {
            trials: 1,
            sample_lengths: vec![16, 20, 24],
            spec: SignalSpec::new(vec![Tone::new(250.0, 1.0, 0.0).unwrap()]).unwrap(),
            full_length_n: 64,
            ..ExperimentConfig::default()
        };
        let res = run_sweep(&cfg).unwrap();
        assert_eq!(res.cells.len(), 2 * 3 * 6);
        assert_eq!(res.to_csv().lines().count(), 37);
    }

    #[test]
    fn all_failed_cell_is_missing() {
        // model order 10 cannot fit in 12 samples
        let cfg = ExperimentConfig {
            sample_lengths: vec![12],
            ..micro(vec![Method::Gea])
        };
        let res = run_sweep(&cfg).unwrap();
        let c = &res.cells[0];
        assert_eq!(c.rmse_freq_hz, None);
        assert_eq!(c.failure_count, cfg.trials);
        assert!(res.to_csv().contains(",NA,NA,NA,1"));
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.snr_grid_db = vec![10.0, 10.0];
        assert!(cfg.validate().is_err());
        cfg.snr_grid_db = vec![20.0, 10.0];
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn snr_grid_json() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"snr_grid_db": [0, 20.5, "inf"], "trials": 2}"#).unwrap();
        assert_eq!(cfg.snr_grid_db, vec![0.0, 20.5, f64::INFINITY]);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn csv_number_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }
}
