use std::process::{Command, Output};

fn qsample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsample"))
        .args(args)
        .env("QSAMPLE_THREADS", "2")
        .output()
        .expect("run qsample")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn relay_sweep_all_methods() {
    let o = qsample(&["sweep", "--scenario", "relay", "--method", "all", "--snr-grid-db", "0:30:1", "--trials", "2000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,method,snr_db,ber,std_error");
    assert_eq!(lines.len(), 1 + 31 * 3);
    for method in ["closed_form", "quadrature", "montecarlo"] {
        assert_eq!(lines.iter().filter(|l| l.split(',').nth(1) == Some(method)).count(), 31);
    }
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 5);
        // scientific notation with 13 significant digits
        assert!(f[3].contains('e') && f[3].split('e').next().unwrap().len() >= 12, "{l}");
        assert_eq!(f[4].is_empty(), f[1] != "montecarlo");
    }
}

#[test]
fn i0_closed_form_at_10_db() {
    let o = qsample(&["sweep", "--scenario", "i0", "--method", "closed_form", "--snr-grid-db", "10:10:1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let ber: f64 = row[3].parse().unwrap();
    assert!((ber - 4.340e-2).abs() < 1e-4);
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let o = Command::new(env!("CARGO_BIN_EXE_qsample"))
            .args(["sweep", "--scenario", "network", "--snr-grid-db", "-5:15:5", "--trials", "100000", "--seed", "9"])
            .arg("--output")
            .arg(path)
            .env("QSAMPLE_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["sweep", "--scenario", "relay", "--snr-grid-db", "10:0:1"][..],
        &["sweep", "--scenario", "relay", "--snr-grid-db", "0:10:0"],
        &["sweep", "--scenario", "relay", "--snr-grid-db", "0:10"],
        &["sweep", "--scenario", "nope", "--snr-grid-db", "0:10:1"],
        &["sweep", "--scenario", "i1", "--snr-grid-db", "0:10:1", "--a1", "-1"],
        &["sweep", "--scenario", "i0", "--snr-grid-db", "0:10:1", "--trials", "0"],
        &["critical-point", "--dim", "3"],
        &["validate", "--check", "12"],
    ] {
        let o = qsample(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_qsample"))
        .args(["sweep", "--scenario", "i0", "--method", "montecarlo", "--snr-grid-db", "0:0:1"])
        .env("QSAMPLE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn low_confidence_points_warn_on_stderr() {
    let o = qsample(&[
        "sweep", "--scenario", "relay", "--method", "montecarlo", "--snr-grid-db", "30:30:1", "--trials", "1000",
        "--symbol-level",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("low confidence"));
}

fn numbers(line: &str) -> Vec<f64> {
    line.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect()
}

#[test]
fn critical_point_reports() {
    let o = qsample(&["critical-point", "--dim", "1", "--a1", "1"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!((numbers(lines[0])[0] - 1.4157).abs() < 5e-4);
    assert_eq!(numbers(lines[1])[0], 0.5);
    assert!(numbers(lines[2])[0].abs() < 1e-10);

    let o = qsample(&["critical-point", "--dim", "2", "--a1", "2", "--a2", "2"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    let loc = numbers(lines[0]);
    assert!((loc[0] - 0.8197).abs() < 5e-4 && (loc[1] - 0.8197).abs() < 5e-4);
    assert_eq!(numbers(lines[1])[0], 0.1875);

    let o = qsample(&["critical-point", "--dim", "1", "--a1", "2"]);
    assert!((numbers(stdout(&o).lines().next().unwrap())[0] - 0.7079).abs() < 5e-4);
}

#[test]
fn validate_subset_and_rederive() {
    let o = qsample(&["validate", "--check", "1,2,3,7,8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 5);

    let o = qsample(&["rederive"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 13);
}
