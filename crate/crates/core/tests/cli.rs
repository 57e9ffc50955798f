use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pencilcrt::bench_harness::DEFAULT_TONES;
use pencilcrt::cli::stream_io::read_stream;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pencilcrt"));
    c.env_remove("PENCILCRT_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn parse_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn synth_writes_two_streams() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synth": {"n_samples": 50, "snr_db": 20}}"#);
    let prefix = dir.path().join("run");
    let out = run(&["synth", "--config", s(&cfg), "--out", s(&prefix)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);
    let a = read_stream(&dir.path().join("run.ch1.snyq")).unwrap();
    let b = read_stream(&dir.path().join("run.ch2.snyq")).unwrap();
    assert_eq!((a.len(), b.len()), (50, 50));
    assert_eq!((a.rate_hz, b.rate_hz), (101.0, 103.0));
}

#[test]
fn seed_override_changes_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synth": {"n_samples": 16, "snr_db": 10}}"#);
    let read = |seed: &str, tag: &str| {
        let prefix = dir.path().join(tag);
        let out = run(&["synth", "--config", s(&cfg), "--out", s(&prefix), "--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        read_stream(&dir.path().join(format!("{tag}.ch1.snyq"))).unwrap()
    };
    assert_eq!(read("1", "a"), read("1", "b"));
    assert_ne!(read("1", "c"), read("2", "d"));
}

#[test]
fn missing_config_is_config_error() {
    let out = run(&["synth", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synht": {}}"#);
    assert_eq!(run(&["synth", "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn synth_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synth": {"n_samples": 256}}"#);
    let prefix = dir.path().join("rt");
    assert_eq!(run(&["synth", "--config", s(&cfg), "--out", s(&prefix)]).status.code(), Some(0));
    let csv_path = dir.path().join("est.csv");
    let out = run(&[
        "estimate",
        s(&dir.path().join("rt.ch1.snyq")),
        s(&dir.path().join("rt.ch2.snyq")),
        "--config",
        s(&cfg),
        "--out",
        s(&csv_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "freq_hz,amplitude,phase_rad,k1,k2,residual_hz");
    let rows = parse_rows(&csv);
    assert_eq!(rows.len(), DEFAULT_TONES.len());
    for (row, &(f, a, p)) in rows.iter().zip(DEFAULT_TONES.iter()) {
        let got: Vec<f64> = row[..3].iter().map(|x| x.parse().unwrap()).collect();
        assert!((got[0] - f).abs() / f < 1e-6, "{row:?}");
        assert!((got[1] - a).abs() / a < 1e-6, "{row:?}");
        assert!((got[2] - p).abs() < 1e-6, "{row:?}");
        let (k1, k2): (u32, u32) = (row[3].parse().unwrap(), row[4].parse().unwrap());
        assert_eq!(k1, (f / 101.0).floor() as u32);
        assert_eq!(k2, (f / 103.0).floor() as u32);
    }
}

#[test]
fn estimate_to_stdout_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synth": {"n_samples": 256}}"#);
    let prefix = dir.path().join("rt");
    run(&["synth", "--config", s(&cfg), "--out", s(&prefix)]);
    let out = run(&["estimate", s(&dir.path().join("rt.ch1.snyq")), s(&dir.path().join("rt.ch2.snyq"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 11);
}

#[test]
fn identical_rates_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synth": {"n_samples": 64}}"#);
    let prefix = dir.path().join("x");
    run(&["synth", "--config", s(&cfg), "--out", s(&prefix)]);
    let ch1 = dir.path().join("x.ch1.snyq");
    let out = run(&["estimate", s(&ch1), s(&ch1)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rates must differ"));
}

#[test]
fn out_of_range_plant_is_partial() {
    // lcm(7, 8) = 56 < 60, and fold indices up to 20 reach 60 + 56
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "signal": {"tones": [{"freq_hz": 60, "amplitude": 1, "phase_rad": 0.4}]},
            "synth": {"rate1_hz": 7, "rate2_hz": 8, "n_samples": 20},
            "pencil": {"model_order": 1},
            "dealias": {"max_fold_index_n": 20}
        }"#,
    );
    let prefix = dir.path().join("amb");
    assert_eq!(run(&["synth", "--config", s(&cfg), "--out", s(&prefix)]).status.code(), Some(0));
    let csv_path = dir.path().join("amb.csv");
    let out = run(&[
        "estimate",
        s(&dir.path().join("amb.ch1.snyq")),
        s(&dir.path().join("amb.ch2.snyq")),
        "--config",
        s(&cfg),
        "--out",
        s(&csv_path),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let rows = parse_rows(&fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "nan");
    assert_eq!(rows[0][5], "ambiguous");
    assert!((rows[0][1].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn malformed_stream_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.snyq");
    fs::write(&bad, b"SNYQSTRM\x02\0\0\0{}").unwrap();
    assert_eq!(run(&["estimate", s(&bad), s(&bad)]).status.code(), Some(3));
    let missing = dir.path().join("none.snyq");
    assert_eq!(run(&["estimate", s(&missing), s(&bad)]).status.code(), Some(3));
}

const MICRO_BENCH: &str = r#"{"experiment": {"trials": 1, "snr_grid_db": ["inf"], "sample_lengths": [108, 216]}}"#;

#[test]
fn bench_noiseless_micro_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MICRO_BENCH);
    let csv_path = dir.path().join("b.csv");
    let out = run(&["bench", "--config", s(&cfg), "--out", s(&csv_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "method,sample_length,snr_db,rmse_freq_hz,rmse_amp_rel,rmse_phase_rad,failures"
    );
    let rows = parse_rows(&csv);
    assert_eq!(rows.len(), 4);
    let gea: Vec<_> = rows.iter().filter(|r| r[0] == "gea").collect();
    assert_eq!(gea.len(), 2);
    for r in gea {
        assert_eq!(r[2], "inf");
        for v in &r[3..6] {
            assert!(v.parse::<f64>().unwrap() < 1e-6, "{r:?}");
        }
        assert_eq!(r[6], "0");
    }
    let long = fs::read_to_string(dir.path().join("b.long.csv")).unwrap();
    assert_eq!(long.lines().next().unwrap(), "method,sample_length,snr_db,metric,value");
    assert_eq!(long.lines().count(), 1 + 4 * 5);
    assert!(!csv.contains('\r'));
}

#[test]
fn bench_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": {"trials": 3, "snr_grid_db": [10, 30], "sample_lengths": [108]}}"#,
    );
    let go = |name: &str, threads: Option<&str>| {
        let p = dir.path().join(name);
        let mut c = bin();
        c.args(["bench", "--config", s(&cfg), "--out", s(&p), "--seed", "7"]);
        if let Some(t) = threads {
            c.env("PENCILCRT_THREADS", t);
        }
        assert_eq!(c.output().unwrap().status.code(), Some(0));
        fs::read(&p).unwrap()
    };
    let a = go("a.csv", None);
    assert_eq!(a, go("b.csv", None));
    assert_eq!(a, go("c.csv", Some("1")));
    assert_eq!(a, go("d.csv", Some("3")));
}

#[test]
fn bench_rejects_bad_grid_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"experiment": {"snr_grid_db": [20, 10]}}"#);
    assert_eq!(run(&["bench", "--config", s(&cfg), "--out", s(&dir.path().join("x.csv"))]).status.code(), Some(2));
    let ok = write_config(dir.path(), "ok.json", MICRO_BENCH);
    let out = bin()
        .args(["bench", "--config", s(&ok), "--out", s(&dir.path().join("y.csv"))])
        .env("PENCILCRT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MICRO_BENCH);
    let out = run(&["bench", "--config", s(&cfg), "--out", s(&dir.path().join("no/such/dir.csv"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"synth": {"n_samples": 216, "snr_db": 40}}"#);
    let p = dir.path().join("cmp.csv");
    let out = run(&["compare", "--config", s(&cfg), "--out", s(&p)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_rows(&fs::read_to_string(&p).unwrap());
    assert_eq!(rows.len(), 20);
    for r in rows.iter().filter(|r| r[0] == "gea") {
        assert!(r[3].parse::<f64>().unwrap() < 0.05, "{r:?}");
    }
}

#[test]
fn help_documents_defaults() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["unit_circle_tol 1e-2", "PENCILCRT_THREADS", "snr_grid_db", "EXIT STATUS"] {
        assert!(text.contains(needle), "{needle}");
    }
}
