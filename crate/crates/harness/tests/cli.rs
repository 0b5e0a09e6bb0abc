use std::path::{Path, PathBuf};

use panelinfer_harness::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn call(args: &[&str]) -> i32 {
    run(std::iter::once("panelinfer").chain(args.iter().copied()))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(call(&[]), EXIT_USAGE);
    assert_eq!(call(&["infer", "--bogus"]), EXIT_USAGE);
    assert_eq!(call(&["infer", "--mode", "sideways"]), EXIT_USAGE);
    assert_eq!(call(&["--help"]), EXIT_OK);
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "[layout]\nd2 = -3.0\n");
    assert_eq!(call(&["infer", "--config", bad.to_str().unwrap()]), EXIT_USAGE);
    assert_eq!(call(&["infer", "--config", "/nonexistent.toml"]), EXIT_USAGE);
    let missing = write_config(tmp.path(), "scenario = \"multipath-far\"\ndataset = \"nope.csv\"\n");
    assert_eq!(call(&["infer", "--config", missing.to_str().unwrap()]), EXIT_USAGE);
}

#[test]
fn data_errors_exit_two() {
    let corrupt = fixture("mpc_corrupt.csv");
    assert_eq!(call(&["ingest", "--input", corrupt.to_str().unwrap()]), EXIT_DATA);
    assert_eq!(call(&["ingest", "--input", "/nonexistent.csv"]), EXIT_DATA);
    let sample = fixture("mpc_sample.csv");
    assert_eq!(call(&["ingest", "--input", sample.to_str().unwrap()]), EXIT_OK);
}

#[test]
fn infer_then_report_reaggregates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "scenario = \"far-free\"\n[ue]\nkind = \"points\"\npoints = [[10.0, 0.0, 0.0], [30.0, 5.0, 0.0]]\n",
    );
    let out = tmp.path().join("run");
    let code = call(&[
        "infer",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "amplitude-assisted",
    ]);
    assert_eq!(code, EXIT_OK);
    let summary = std::fs::read(out.join("summary.json")).unwrap();
    let again = tmp.path().join("again");
    let report = out.join("report.csv");
    assert_eq!(
        call(&["report", "--input", report.to_str().unwrap(), "--out", again.to_str().unwrap()]),
        EXIT_OK
    );
    assert_eq!(std::fs::read(again.join("summary.json")).unwrap(), summary);
}

#[test]
fn sweep_writes_one_comparison_row_per_dx() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "scenario = \"near-free\"\n[ue]\nkind = \"grid\"\nx_min = 1.0\nx_max = 30.0\ny_min = 0.0\ny_max = 0.0\nspacing = 1.0\n[sweep]\nd2 = [16.0, 20.0]\n",
    );
    let out = tmp.path().join("sweep");
    assert_eq!(
        call(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        EXIT_OK
    );
    for d in ["d2_16", "d2_20"] {
        let text = std::fs::read_to_string(out.join(d).join("comparison.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("dx,f_far,f_near"));
        assert_eq!(lines.count(), 30);
        let curve = std::fs::read_to_string(out.join(d).join("curve.csv")).unwrap();
        assert_eq!(curve.lines().count(), 31);
    }
    assert!(out.join("sweep_summary.json").is_file());
}

#[test]
fn synth_output_ingests_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("synth");
    let cfg = fixture("sample.toml");
    assert_eq!(
        call(&["synth", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        EXIT_OK
    );
    // The bundled sample was produced by exactly this command.
    assert_eq!(
        std::fs::read(out.join("mpc.csv")).unwrap(),
        std::fs::read(fixture("mpc_sample.csv")).unwrap()
    );
}
