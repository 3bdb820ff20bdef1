//! End-to-end runs of the `transdiff` binary: exit codes, output locations
//! and argument validation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_transdiff"));
    c.env_remove("TRANSDIFF_OUT").env_remove("TRANSDIFF_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(file).display()))
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("run").arg(config("weak_residual.toml")).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("PASSED weak_residual"));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["passed"], true);
    for file in summary["files"].as_array().unwrap() {
        assert!(dir.path().join(file.as_str().unwrap()).exists(), "{file}");
    }
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("weak_residual.toml")).unwrap().replace("tolerance = 1e-4", "tolerance = 1e-12");
    let doc = dir.path().join("strict.toml");
    std::fs::write(&doc, text).unwrap();
    let out = bin().arg("run").arg(&doc).arg("--out").arg(dir.path().join("out")).output().unwrap();
    assert_eq!(code(&out), 1, "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).lines().any(|l| l.starts_with("FAIL")));
    assert!(stdout(&out).contains("FAILED weak_residual"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = bin().arg("counterexample").env("TRANSDIFF_OUT", &target).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(target.join("summary.json").exists());
    assert!(target.join("resolved.toml").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (one, many) = (dir.path().join("one"), dir.path().join("many"));
    let doc = config("dirac_curve.toml");
    let a = bin().args(["--threads", "1", "run"]).arg(&doc).arg("--out").arg(&one).output().unwrap();
    let b = bin().args(["--threads", "4", "run"]).arg(&doc).arg("--out").arg(&many).output().unwrap();
    assert_eq!((code(&a), code(&b)), (0, 0), "{}{}", stderr(&a), stderr(&b));
    let mut files: Vec<_> = std::fs::read_dir(&one).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(!files.is_empty());
    for f in files {
        let f = f.to_str().unwrap();
        assert_eq!(read(&one, f), read(&many, f), "{f}");
    }
}

#[test]
fn example_prints_a_parseable_document() {
    for kind in ["counterexample", "cauchy-rate", "quotient_convergence", "dirac-curve", "dirac-approx", "weak-residual", "control"] {
        let out = bin().args(["example", kind]).output().unwrap();
        assert_eq!(code(&out), 0, "{kind}: {}", stderr(&out));
        transdiff::experiment::parse_config(&stdout(&out)).unwrap_or_else(|e| panic!("{kind}: {e}"));
    }
    let out = bin().args(["example", "telepathy"]).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown kind"));
}

#[test]
fn resolve_fills_defaults_and_applies_the_seed() {
    let out = bin().args(["--seed", "77", "resolve"]).arg(config("control.toml")).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cfg = transdiff::experiment::parse_config(&stdout(&out)).unwrap();
    assert_eq!(cfg.seed, 77);
    assert!(stdout(&out).contains("aux_nodes"));
}

#[test]
fn invalid_invocations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["run".into(), "/nonexistent/doc.toml".into()], "reading"),
        (vec!["--seed".into(), u64::MAX.to_string(), "counterexample".into()], "--seed"),
        (vec!["--threads".into(), "0".into(), "counterexample".into()], "--threads"),
        (vec!["counterexample".into(), "--config".into(), config("control.toml").display().to_string()], "not `counterexample`"),
        (vec!["run".into()], "no experiment document"),
        (
            vec!["run".into(), config("control.toml").display().to_string(), "--config".into(), config("dirac_curve.toml").display().to_string()],
            "two different documents",
        ),
    ];
    for (args, needle) in cases {
        let out = bin().args(&args).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn malformed_document_reports_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("bad.toml");
    std::fs::write(&doc, "kind = \"dirac_curve\"\nalpha = 1.5\ncolour = \"red\"\n").unwrap();
    let out = bin().arg("run").arg(&doc).output().unwrap();
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("alpha") && err.contains("colour"), "{err}");
    assert!(err.contains("bad.toml"), "{err}");
}
