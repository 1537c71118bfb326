use std::path::Path;
use std::process::{Command, Output};

fn grqsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grqsm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_the_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let run = grqsm(&[
        "simulate", "--mode", "grqsm-optimal", "--n-ris", "32", "--n-rx", "4", "--k", "2", "--snr-db", "-30:-20:5",
        "--trials", "50", "--seed", "7", "--out", path(&out), "--format", "csv",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "scheme,n_ris,n_rx,k,snr_db,trials,bit_errors,total_bits,ber,seed");
    assert!(lines[1].starts_with("grqsm-optimal,32,4,2,-30.0,50,"));
    assert!(lines[1].ends_with(",7"));
    assert!(text.ends_with('\n'));
}

#[test]
fn results_do_not_depend_on_threads_or_format_choice() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str, format: &str| {
        let out = dir.path().join(name);
        let r = grqsm(&[
            "simulate", "--mode", "multicast", "--n-ris", "64", "--n-rx", "2", "--snr-db", "-44:-36:4,inf",
            "--trials", "300", "--seed", "11", "--threads", threads, "--out", path(&out), "--format", format,
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "a.csv", "csv"), run("3", "b.csv", "csv"));
    let json = run("2", "c.json", "json");
    assert_eq!(json, run("1", "d.json", "json"));
    let parsed: Vec<serde_json::Value> = serde_json::from_slice(&json).unwrap();
    assert_eq!(parsed.len(), 4);
    assert_eq!(parsed[3]["snr_db"], "inf");
    assert_eq!(parsed[3]["bit_errors"], 0);
    assert_eq!(parsed[0]["scheme"], "multicast");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("lambda.csv");
    std::fs::write(
        &cfg,
        format!(
            "# lambda statistics\nn_ris_list = 16,32\nk = 1\nn_rx = 4\nrealizations = 1000\nseed = 3\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let r = grqsm(&["stats-lambda", "--config", path(&cfg), "--n-ris-list", "16"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_ris,k,n_rx,realizations,mean_lambda1,var_lambda1,seed");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("16,1,4,1000,"));
}

#[test]
fn bench_runtime_sorts_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let r = grqsm(&[
        "bench-runtime", "--n-ris-list", "64,16", "--n-rx", "2", "--realizations", "1000", "--out", path(&out),
        "--format", "json",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let first = text.find("\"n_ris\": 16").unwrap();
    let second = text.find("\"n_ris\": 64").unwrap();
    assert!(first < second);
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = path(&out);
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--mode", "qpsk", "--n-ris", "8", "--n-rx", "4", "--snr-db", "0", "--trials", "1", "--out", o],
        vec!["simulate", "--mode", "grqsm-optimal", "--n-ris", "8", "--n-rx", "4", "--k", "5", "--snr-db", "0", "--trials", "1", "--out", o],
        vec!["simulate", "--mode", "grqsm-optimal", "--n-ris", "8", "--n-rx", "4", "--snr-db", "5:0:1", "--trials", "1", "--out", o],
        vec!["simulate", "--mode", "grqsm-optimal", "--n-ris", "8", "--n-rx", "4", "--snr-db", "0", "--trials", "1"],
        vec!["simulate", "--mode", "grqsm-optimal", "--n-ris", "8", "--n-rx", "4", "--snr-db", "0", "--trials", "1", "--out", o, "--format", "xml"],
        vec!["stats-lambda", "--n-ris-list", "16", "--k", "1", "--n-rx", "4", "--realizations", "10", "--out", o],
        vec!["stats-lambda", "--config", "/nonexistent/run.cfg"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let r = grqsm(&args);
        assert!(!r.status.success(), "{args:?} should fail");
        assert!(!r.stderr.is_empty());
    }
    assert!(!out.exists());
}

#[test]
fn unwritable_output_exits_nonzero_and_names_the_path() {
    let r = grqsm(&[
        "simulate", "--mode", "grqsm-suboptimal", "--n-ris", "8", "--n-rx", "4", "--snr-db", "0", "--trials", "1",
        "--out", "/nonexistent-dir/out.csv",
    ]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("/nonexistent-dir/out.csv"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n_ris = 8\ncolour = blue\n").unwrap();
    let r = grqsm(&["bench-runtime", "--config", path(&cfg)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("colour"));
}
