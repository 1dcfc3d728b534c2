use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use nalgebra::DMatrix;
use sparse_tls::harness::{generate_problem, top_support, ExperimentSummary, TrialConfig};
use sparse_tls_cli::bench::RunManifest;
use sparse_tls_cli::matrix::{parse_matrix, write_matrix};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-tls")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SNR_SWEEP: &str = "m = 20\nn = 30\ns = 3\nsnr_db = 10, 12, 15, 18, 20\n\
    algorithms = focuss, tls-focuss, sd-focuss\ntrials = 10\n";

const MMV: &str = "m = 20\nn = 30\ns = 7\nL = 2, 5, 6\nsnr_db = 10, 20\n\
    algorithms = reg-focuss, sd-focuss\ntrials = 5\n";

fn bench(dir: &Path, config: &str, extra: &[&str]) -> (Output, String) {
    let cfg = dir.join("sweep.cfg");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec!["bench", p(&cfg), "--out-dir", p(&out)];
    args.extend_from_slice(extra);
    let o = bin(&args);
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap_or_default();
    (o, csv)
}

fn without_timing(csv: &str) -> String {
    ExperimentSummary::from_csv(csv).unwrap().to_csv(false)
}

#[test]
fn identity_dictionary_returns_measurements() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    let x = dir.path().join("x.csv");
    write_matrix(&a, &DMatrix::identity(4, 4)).unwrap();
    let yv = DMatrix::from_column_slice(4, 1, &[0.5, -2.0, 1.25, 3.0]);
    write_matrix(&y, &yv).unwrap();
    let o = bin(&["solve", "-A", p(&a), "-y", p(&y), "--algorithm", "focuss", "-o", p(&x)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&x).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!((parse_matrix(&text).unwrap() - yv).amax() < 1e-12);

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("x.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["algorithm"], "focuss");
    assert!(meta["iterations"].as_u64().unwrap() >= 1);
    assert!(meta["converged"].as_bool().unwrap());
    assert!(!meta["objective_trace"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_row_exits_2_and_cites_line() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    fs::write(&a, "1,0\n0,1\n").unwrap();
    fs::write(&y, "1\n2,3\n").unwrap();
    let o = bin(&["solve", "-A", p(&a), "-y", p(&y)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("y.csv:2"), "{err}");

    fs::write(&y, "1\nabc\n").unwrap();
    let o = bin(&["solve", "-A", p(&a), "-y", p(&y)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("y.csv:2"));
}

#[test]
fn dimension_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    write_matrix(&a, &DMatrix::identity(3, 5)).unwrap();
    write_matrix(&y, &DMatrix::from_element(4, 1, 1.0)).unwrap();
    let o = bin(&["solve", "-A", p(&a), "-y", p(&y)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a.csv"));
}

#[test]
fn negligible_dictionary_with_tls_is_degenerate() {
    // y cannot be explained by A, so the eigenvector puts no weight on -y.
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    write_matrix(&a, &(DMatrix::identity(2, 2) * 1e-8)).unwrap();
    write_matrix(&y, &DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
    let o = bin(&["solve", "-A", p(&a), "-y", p(&y), "--algorithm", "tls-focuss", "--sigma", "0.1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn noise_free_planted_support_is_recovered() {
    let dir = TempDir::new().unwrap();
    let mut cfg = TrialConfig::new(20, 30, 3, f64::INFINITY);
    cfg.amplitude = sparse_tls::harness::AmplitudeMode::Constant;
    let inst = generate_problem(&cfg, 0).unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    write_matrix(&a, &inst.a).unwrap();
    write_matrix(&y, &inst.y).unwrap();
    for alg in ["tls-focuss", "sd-focuss", "reg-focuss"] {
        let o = bin(&["solve", "-A", p(&a), "-y", p(&y), "--algorithm", alg, "--epsilon", "1e-8"]);
        assert!(o.status.success(), "{alg}: {}", String::from_utf8_lossy(&o.stderr));
        let x = parse_matrix(&String::from_utf8(o.stdout).unwrap()).unwrap();
        assert_eq!(top_support(&x, 3), inst.support, "{alg}");
        let meta: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(meta["n"], 30);
    }
}

#[test]
fn unknown_algorithm_exits_2() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    write_matrix(&a, &DMatrix::identity(2, 2)).unwrap();
    let o = bin(&["solve", "-A", p(&a), "-y", p(&a), "--algorithm", "lasso"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn smv_bench_has_one_row_per_algorithm_and_snr() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = bench(dir.path(), SNR_SWEEP, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), sparse_tls::harness::SUMMARY_HEADER);
    let s = ExperimentSummary::from_csv(&csv).unwrap();
    assert_eq!(s.rows.len(), 15);
    for alg in ["focuss", "tls-focuss", "sd-focuss"] {
        for snr in [10.0, 12.0, 15.0, 18.0, 20.0] {
            let row = s.find(alg, snr, 1).expect("row present");
            assert_eq!(row.trials, 10);
            assert!(row.mean_time_s.is_some());
        }
    }
}

#[test]
fn mmv_bench_has_rows_per_l() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("mmv.cfg");
    fs::write(&cfg, MMV).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["mmv-bench", p(&cfg), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = ExperimentSummary::from_csv(&fs::read_to_string(out.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(s.rows.len(), 12);
    for l in [2, 5, 6] {
        for snr in [10.0, 20.0] {
            assert!(s.find("sd-focuss", snr, l).unwrap().relative_mse.is_some());
            assert!(s.find("reg-focuss", snr, l).is_some());
        }
    }
}

#[test]
fn smoke_bench_is_fast() {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let (o, csv) = bench(
        dir.path(),
        "m = 20\nn = 30\ns = 3\nsnr_db = 15\nalgorithms = focuss, reg-focuss, tls-focuss, sd-focuss, omp\ntrials = 1\n",
        &[],
    );
    assert!(o.status.success());
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let (o, _) = bench(dir.path(), "m = 20\nn = 30\ns = 3\nsnr_db = 15\nalgorithms = focuss\ntrials = x\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 6"));

    let (o, _) = bench(dir.path(), "m = 20\nn = 30\ns = 3\nsnr_db = 15\nalgorithms = nope\ntrials = 1\n", &[]);
    assert_eq!(o.status.code(), Some(2));

    let (o, _) = bench(dir.path(), "m = 20\nn = 30\ns = 3\nL = 2\nsnr_db = 15\nalgorithms = tls-focuss\ntrials = 1\n", &[]);
    assert_eq!(o.status.code(), Some(2));

    let (o, _) = bench(dir.path(), SNR_SWEEP, &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_is_deterministic_apart_from_timing() {
    let dir1 = TempDir::new().unwrap();
    let dir2 = TempDir::new().unwrap();
    let (_, a) = bench(dir1.path(), SNR_SWEEP, &["--seed", "77", "--threads", "1"]);
    let (_, b) = bench(dir2.path(), SNR_SWEEP, &["--seed", "77", "--threads", "2"]);
    assert_eq!(without_timing(&a), without_timing(&b));
    let (_, c) = bench(dir2.path(), SNR_SWEEP, &["--seed", "78"]);
    assert_ne!(without_timing(&a), without_timing(&c));
}

#[test]
fn manifest_lists_every_file_and_echo_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = bench(dir.path(), MMV, &["--seed", "5"]);
    assert!(o.status.success());
    let out = dir.path().join("out");
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();

    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let mut listed = manifest.files.clone();
    listed.sort();
    assert_eq!(on_disk, listed);
    assert!(manifest.config.contains("seed = 5"));
    assert!(manifest.prng.contains("chacha20"));
    assert_eq!(manifest.tool_version, env!("CARGO_PKG_VERSION"));
    assert!(chrono::DateTime::parse_from_rfc3339(&manifest.timestamp).is_ok());

    let rerun = TempDir::new().unwrap();
    let (o, again) = bench(rerun.path(), &manifest.config, &[]);
    assert!(o.status.success());
    assert_eq!(without_timing(&csv), without_timing(&again));
}

fn plot(summary: &Path, metric: &str, out: &Path) -> Output {
    bin(&["plot-data", p(summary), "--metric", metric, "--out", p(out)])
}

#[test]
fn plot_data_fans_out_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let (_, csv) = bench(
        dir.path(),
        "m = 20\nn = 30\ns = 3\nsnr_db = 10, 20\nalgorithms = focuss, sd-focuss\ntrials = 4\n",
        &[],
    );
    let summary = dir.path().join("out/summary.csv");
    let curves = dir.path().join("curves");
    let o = plot(&summary, "success_rate", &curves);
    assert!(o.status.success());
    let mut files: Vec<_> = fs::read_dir(&curves).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 2);

    let s = ExperimentSummary::from_csv(&csv).unwrap();
    for metric in ["success_rate", "relative_mse", "mean_time_s"] {
        assert!(plot(&summary, metric, &curves).status.success());
        for alg in ["focuss", "sd-focuss"] {
            let text = fs::read_to_string(curves.join(format!("{metric}_{alg}_L1.csv"))).unwrap();
            let pts = parse_matrix(&text).unwrap();
            assert_eq!(pts.nrows(), 2);
            for (k, snr) in [10.0, 20.0].into_iter().enumerate() {
                let row = s.find(alg, snr, 1).unwrap();
                let want = match metric {
                    "success_rate" => row.success_rate,
                    "relative_mse" => row.relative_mse.unwrap(),
                    _ => row.mean_time_s.unwrap(),
                };
                assert_eq!(pts[(k, 0)], snr);
                assert_eq!(pts[(k, 1)], want);
            }
        }
    }
}

#[test]
fn plot_data_empty_rmse_curve_warns() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("summary.csv");
    fs::write(
        &summary,
        format!(
            "{}\nfocuss,10,1,3,0,0,,0.9,\nfocuss,20,1,3,0,0,,0.8,\n",
            sparse_tls::harness::SUMMARY_HEADER
        ),
    )
    .unwrap();
    let curves = dir.path().join("curves");
    let o = plot(&summary, "rmse", &curves);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(fs::read_to_string(curves.join("rmse_focuss_L1.csv")).unwrap(), "");
}

#[test]
fn plot_data_unknown_metric_exits_2() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("summary.csv");
    fs::write(&summary, format!("{}\n", sparse_tls::harness::SUMMARY_HEADER)).unwrap();
    let o = plot(&summary, "auc", &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(2));
}
