use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polymer_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polymer-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn kappa_subcommand() {
    let o = polymer_lab(&["kappa", "--dim", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("series 0.5163"), "{text}");
    assert_eq!(code(&polymer_lab(&["kappa", "--dim", "2"])), 2);
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = polymer_lab(&["run", "exactness", "--profile", "quick", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("exactness.csv")).unwrap();
    assert!(csv.starts_with("experiment,replicate,d,n,statistic,value,seed\n"));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("criterion  1 [PASS]"));
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let o = polymer_lab(&["run", "E2", "--profile", "quick", "--seed", "5", "--threads", threads, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let x = fs::read(a.path().join("E2.csv")).unwrap();
    let y = fs::read(b.path().join("E2.csv")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"E1\"\nreplicates = 0\n").unwrap();
    assert_eq!(code(&polymer_lab(&["run", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&polymer_lab(&["run", "E9"])), 2);
    assert_eq!(code(&polymer_lab(&["run"])), 2);
    assert_eq!(code(&polymer_lab(&["verify-all", "--profile", "medium"])), 2);
    let d2 = dir.path().join("e1_d2.toml");
    fs::write(&d2, "experiment = \"E1\"\ndimensions = [2]\n").unwrap();
    let o = polymer_lab(&["run", "--config", d2.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsupported dimension"));
    let e1 = configs().join("e1.toml");
    assert_eq!(code(&polymer_lab(&["run", "E2", "--config", e1.to_str().unwrap()])), 2);
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not-a-dir");
    fs::write(&file, "").unwrap();
    let o = polymer_lab(&["run", "exactness", "--profile", "quick", "--out", file.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&polymer_lab(&["run", "--config", "/nonexistent/config.toml"])), 3);
}

#[test]
fn failed_criterion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    fs::write(&cfg, "experiment = \"exactness\"\n[tolerances]\nrelative_error = -1.0\n").unwrap();
    let o = polymer_lab(&["run", "--config", cfg.to_str().unwrap(), "--profile", "quick", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL]"));
}

#[test]
fn simulate_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate.toml");
    let o = polymer_lab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "5000",
        "--dim",
        "1,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for d in [1, 3] {
        let text = fs::read_to_string(dir.path().join(format!("simulate_d{d}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("experiment,replicate,k,H,V,Xi,I,M,N,Xi2"));
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert_eq!(last[2], "5000");
    }
}

#[test]
fn quick_verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = polymer_lab(&["verify-all", "--profile", "quick", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 10);
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("overall: PASS"));
    for exp in ["exactness", "kappa", "E1", "E2", "E3", "E4", "E5", "E6", "E7"] {
        assert!(dir.path().join(format!("{exp}.csv")).is_file(), "{exp}");
    }
}
