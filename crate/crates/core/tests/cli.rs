use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use inexact_fista::trace::Trace;

const BIN: &str = env!("CARGO_BIN_EXE_inexact-fista");

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = "problem gen lsq 20 40 5 0.2 1\nrule constant hint\nperturb: saturate 1 3\niters 300\nreference 3000\n";

#[test]
fn solve_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "small.spec", SMALL);
    let out = cli(dir.path(), &["solve", "small.spec"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let trace = Trace::read(dir.path().join("small.trace.csv")).unwrap();
    assert_eq!(trace.len(), 299);
    let report = std::fs::read_to_string(dir.path().join("small.report.txt")).unwrap();
    assert!(report.lines().any(|l| l == "compliance: 1"), "{report}");
    assert!(report.contains("budget_within: true"));
}

#[test]
fn missing_required_key_reports_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.spec", "problem gen lsq 20 40 5 0.2 1\nrule constant hint\n");
    let out = cli(dir.path(), &["solve", "bad.spec"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("bad.spec:3:") && err.contains("iters"), "{err}");
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.spec", "problem gen lsq 20 40 5 0.2 1\nrule constant hint\nstep 3\niters 10\n");
    let out = cli(dir.path(), &["solve", "bad.spec"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.spec:3:"), "{}", stderr(&out));
}

#[test]
fn mu_is_required_outside_the_l1_family() {
    let dir = tempfile::tempdir().unwrap();
    for inst in ["box_2d.inst", "lsq_zero_2d.inst"] {
        let path = corpus().join(inst);
        let text = format!("problem {}\nrule constant hint\niters 20\n", path.display());
        write(dir.path(), "nomu.spec", &text);
        let out = cli(dir.path(), &["solve", "nomu.spec"]);
        assert_eq!(out.status.code(), Some(1));
        assert!(stderr(&out).contains("supply mu"), "{}", stderr(&out));

        write(dir.path(), "mu.spec", &format!("{text}mu 10\n"));
        let out = cli(dir.path(), &["solve", "mu.spec"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
}

#[test]
fn fault_injection_exits_with_breach_code() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "fault.spec", &format!("{SMALL}fault_scale 1000\n"));
    let out = cli(dir.path(), &["solve", "fault.spec"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let report = std::fs::read_to_string(dir.path().join("fault.report.txt")).unwrap();
    assert!(report.contains("budget_within: false"), "{report}");
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "small.spec", SMALL);
    let out = cli(dir.path(), &["sweep", "small.spec", "--param", "r", "--values", "0,1,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = stdout(&out);
    assert_eq!(table.lines().count(), 4, "{table}");
    for r in ["0", "1", "2"] {
        assert!(dir.path().join(format!("small-r-{r}.trace.csv")).exists());
    }
    assert!(dir.path().join("small.sweep-r.txt").exists());
}

#[test]
fn seed_sweep_of_an_exact_run_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exact.spec", "problem gen lsq 20 40 5 0.2 1\nrule constant hint\niters 200\nreference 3000\n");
    let out = cli(dir.path(), &["sweep", "exact.spec", "--param", "seed", "--values", "1,2,3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let finals: Vec<String> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().to_string())
        .collect();
    assert_eq!(finals.len(), 3);
    assert!(finals.iter().all(|f| *f == finals[0]), "{finals:?}");
}

#[test]
fn sweep_with_no_values_fails() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "small.spec", SMALL);
    let out = cli(dir.path(), &["sweep", "small.spec", "--param", "r", "--values"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_on_the_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["verify", corpus().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains("PASS")).count(), 8);
}

#[test]
fn verify_runs_a_single_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["verify", corpus().to_str().unwrap(), "--suite", "momentum"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("momentum"));
}

#[test]
fn verify_names_a_corrupted_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    std::fs::create_dir(&corpus_dir).unwrap();
    std::fs::copy(corpus().join("lasso_2d.inst"), corpus_dir.join("lasso_2d.inst")).unwrap();
    write(&corpus_dir, "broken.inst", "2 2 1\n1 0\nnot numbers\n");
    let out = cli(dir.path(), &["verify", corpus_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("broken.inst"), "{}", stderr(&out));
}

#[test]
fn written_traces_reserialize_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "tv.spec",
        "problem gen blur 40 2 0.1\nrule backtrack hint/4 2\nperturb: directed tv 0.5\nphi tv\nsigma: sigma_tilde\niters 150\nreference 2000\n",
    );
    let out = cli(dir.path(), &["--quiet", "solve", "tv.spec"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let path = dir.path().join("tv.trace.csv");
    let bytes = std::fs::read_to_string(&path).unwrap();
    let trace = Trace::parse(&bytes, "tv.trace.csv").unwrap();
    assert_eq!(trace.to_text(), bytes);
}
