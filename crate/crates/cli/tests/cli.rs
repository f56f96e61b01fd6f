use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
version = 1
case = "2.1"
observations = 200
[[axes]]
name = "x"
kind = "space"
lower = -6.0
upper = 6.0
nodes = 25
[[axes]]
name = "t"
kind = "time"
lower = 0.0
upper = 10.0
nodes = 21
[network]
main_hidden = [8, 8]
sub_hidden = [4]
[train]
iterations = 60
log_every = 20
collocation = [8, 8]
residual_batch = 32
observation_batch = 32
[bdmc]
horizon = 20.0
"#;

fn jumpid(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpid")).args(args).current_dir(dir).env("RUST_LOG", "warn").output().unwrap()
}

fn run_tiny(dir: &Path, out: &str) -> Output {
    fs::write(dir.join("tiny.toml"), TINY).unwrap();
    jumpid(&["run", "--config", "tiny.toml", "--out", out], dir)
}

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_tiny(dir.path(), "o");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    for f in [
        "config.toml",
        "reference.csv",
        "observations.csv",
        "checkpoint.json",
        "loss.csv",
        "samples.csv",
        "estimate_c.json",
        "selection_c.json",
        "trace_c.csv",
        "f_c.csv",
        "mask_c.csv",
        "reconstruction.csv",
        "reconstruction.json",
        "report.csv",
        "report.txt",
    ] {
        assert!(o.join(f).exists(), "missing {f}");
    }
    let obs = fs::read_to_string(o.join("observations.csv")).unwrap();
    assert!(obs.starts_with("x,t,u\n"));
    assert_eq!(obs.lines().count(), 201);
    let loss = fs::read_to_string(o.join("loss.csv")).unwrap();
    assert!(loss.starts_with("iter,res,obs,total\n"));
    let trace = fs::read_to_string(o.join("trace_c.csv")).unwrap();
    assert!(trace.starts_with("sweep,k,eta,mu,sigma2,loglik\n"));
    let report = fs::read_to_string(o.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3, "{report}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Birth-death params"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_tiny(dir.path(), "a").status.success());
    assert!(run_tiny(dir.path(), "b").status.success());
    for f in ["observations.csv", "checkpoint.json", "samples.csv", "estimate_c.json", "report.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
}

#[test]
fn stages_run_separately() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    for stage in ["generate", "train", "estimate", "identify", "reconstruct", "report"] {
        let out = jumpid(&[stage, "--config", "tiny.toml", "--out", "o", "--seed", "7"], dir.path());
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn estimate_without_checkpoint_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    let out = jumpid(&["estimate", "--config", "tiny.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn bad_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("noversion.toml", "case = \"2.1\"\n"),
        ("oldversion.toml", "version = 0\ncase = \"2.1\"\n"),
        ("unknown.toml", "version = 1\ncase = \"2.1\"\nbogus = 3\n"),
        ("negative.toml", "version = 1\ncase = \"2.1\"\nnoise_variance = -1.0\n"),
    ] {
        fs::write(dir.path().join(name), text).unwrap();
        let out = jumpid(&["generate", "--config", name], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn config_prints_builtin_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = jumpid(&["config", "--case", "3.3"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("equation = \"burgers\""));
    assert_eq!(jumpid(&["config", "--case", "9.9"], dir.path()).status.code(), Some(2));
}

#[test]
fn report_over_run_directories() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_tiny(dir.path(), "a").status.success());
    let out = jumpid(&["report", "--runs", "a", "a", "--out", "combined"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("combined/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let empty = jumpid(&["report", "--runs", "--out", "none"], dir.path());
    assert!(empty.status.success(), "{}", String::from_utf8_lossy(&empty.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("none/report.csv")).unwrap().lines().count(), 1);

    fs::remove_file(dir.path().join("a/reconstruction.json")).unwrap();
    let broken = jumpid(&["report", "--runs", "a", "--out", "x"], dir.path());
    assert_eq!(broken.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("reconstruction.json"));
}
