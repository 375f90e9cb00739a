use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn conformal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn class_csv(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("x1,x2,label\n");
    for _ in 0..n {
        let y = rng.random_range(0..2);
        let c = if y == 0 { -1.0 } else { 1.0 };
        let (a, b): (f64, f64) = (c + rng.random_range(-1.5..1.5), c + rng.random_range(-1.5..1.5));
        out += &format!("{a},{b},{}\n", ["no", "yes"][y]);
    }
    out
}

fn reg_csv(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("x1,x2,y\n");
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        out += &format!("{a},{b},{}\n", 2.0 * a - b + rng.random_range(-0.5..0.5));
    }
    out
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(conformal(&["--help"]).status.code(), Some(0));
    assert_eq!(conformal(&["--version"]).status.code(), Some(0));
    assert_eq!(conformal(&["classify", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(conformal(&[]).status.code(), Some(1));
    assert_eq!(conformal(&["classify", "--bogus"]).status.code(), Some(1));
    assert_eq!(conformal(&["classify"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &class_csv(10, 1));
    let out = conformal(&["online", "--data", s(&data), "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));
    let out = conformal(&["online", "--data", s(&data), "--teacher", "lazy:0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.csv");
    let out = conformal(&["online", "--data", "/nonexistent.csv", "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));

    let ragged = write(dir.path(), "r.csv", "x1,x2,y\n0,0,A\n1,1,B\n2,A\n");
    let out = conformal(&["online", "--data", s(&ragged), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("r.csv"), "{err}");
    assert!(!out_path.exists());

    let bad = write(dir.path(), "b.csv", "x1,y\n0,A\nzz,B\n");
    let out = conformal(&["online", "--data", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'zz'"));
}

#[test]
fn singular_system_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // duplicated column: X'X is rank one and a = 0 adds no ridge
    let data = write(dir.path(), "d.csv", "x1,x2,y\n1,1,1\n2,2,2\n3,3,2\n");
    let test = write(dir.path(), "t.csv", "x1,x2\n4,4\n");
    let out_path = dir.path().join("o.csv");
    let out = conformal(&[
        "regress", "--data", s(&data), "--test", s(&test), "--ridge-a", "0", "--out", s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_path.exists());
}

#[test]
fn classify_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &class_csv(40, 2));
    let test = write(dir.path(), "t.csv", "x1,x2\n-1,-1\n1,1\n");
    let out = conformal(&[
        "classify", "--data", s(&data), "--test", s(&test), "--measure", "knn", "--k", "1", "--eps", "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "row,p_no,p_yes,prediction,confidence,credibility,set_0.05"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[3], "no");
    assert_eq!(text.lines().count(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("classify n=2"));
}

#[test]
fn regress_and_icp_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &reg_csv(30, 3));
    let test = write(dir.path(), "t.csv", &reg_csv(5, 4));
    let out_path = dir.path().join("r.csv");
    let out = conformal(&[
        "regress", "--data", s(&data), "--test", s(&test), "--eps", "0.1", "--out", s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("row,label,lo_0.1,hi_0.1,set_0.1\n"));
    assert_eq!(text.lines().count(), 6);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("regress n=5 | eps=0.1 err="));

    let out = conformal(&[
        "icp", "--data", s(&data), "--test", s(&test), "--measure", "ridge", "--kernel", "rbf:0.2",
        "--split-m", "20", "--eps", "0.2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("icp m=20 c=10"));

    let cdata = write(dir.path(), "c.csv", &class_csv(30, 5));
    let out = conformal(&["icp", "--data", s(&cdata), "--test", s(&cdata), "--eps", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("row,p_no,p_yes,prediction"));
}

#[test]
fn online_lazy_ledger_export() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &class_csv(200, 6));
    let out_path = dir.path().join("ledger.csv");
    let out = conformal(&[
        "online", "--data", s(&data), "--teacher", "lazy:10", "--smoothed", "--seed", "3", "--eps", "0.2,0.05",
        "--out", s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,Err_0.2,Mult_0.2,Emp_0.2,Err_0.05,Mult_0.05,Emp_0.05"
    );
    assert_eq!(text.lines().count(), 201);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 200.0);
}

#[test]
fn batch_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &class_csv(60, 7));
    let test = write(dir.path(), "t.csv", &class_csv(25, 8));
    let out = conformal(&["batch", "--data", s(&data), "--test", s(&test), "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 26);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &class_csv(30, 9));
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(r#"{{"data": "{}", "eps": [0.3], "teacher": "slow:2", "seed": 4}}"#, s(&data)),
    );
    let from_file = conformal(&["online", "--config", s(&cfg)]);
    assert_eq!(from_file.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert!(String::from_utf8_lossy(&from_file.stdout).starts_with("n,Err_0.3,"));
    let overridden = conformal(&["online", "--config", s(&cfg), "--eps", "0.1"]);
    assert!(String::from_utf8_lossy(&overridden.stdout).starts_with("n,Err_0.1,"));
}

#[test]
fn bayes_compare_writes_four_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("curves");
    let out = conformal(&[
        "bayes-compare", "--a-assumed", "1,1000,10000", "--seed", "7", "--trials", "1", "--out", s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["rrcm_validity", "rrcm_efficiency", "bayes_validity", "bayes_efficiency"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{name}.csv"))).unwrap();
        assert!(text.starts_with("level,a_1,a_1000,a_10000\n"), "{name}");
        assert_eq!(text.lines().count(), 51);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &class_csv(150, 10));
    let args = ["online", "--data", s(&data), "--smoothed", "--shuffle", "--seed", "11"];
    let a = conformal(&args);
    let b = conformal(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = conformal(&["online", "--data", s(&data), "--smoothed", "--shuffle", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}
