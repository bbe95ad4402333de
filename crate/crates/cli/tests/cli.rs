use std::fs;
use std::process::Command;

fn uwbsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uwbsim"))
}

fn simulate_csv(threads: &str, extra: &[&str]) -> Vec<u8> {
    let out = uwbsim()
        .env("SIM_THREADS", threads)
        .args(["simulate", "--scenario", "scenario1", "--seed", "1..3", "--set", "scenario.duration=5"])
        .args(extra)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn csv_is_identical_across_runs_and_thread_counts() {
    let a = simulate_csv("1", &["--sweep", "retx"]);
    let b = simulate_csv("1", &["--sweep", "retx"]);
    let c = simulate_csv("4", &["--sweep", "retx"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 7 * 3);
    assert!(text.starts_with("seed,scenario,mac,retx,load_pps,pdr,"));
}

#[test]
fn out_and_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let trace = dir.path().join("run.trace");
    let stdout = simulate_csv(
        "2",
        &["--out", csv.to_str().unwrap(), "--trace", trace.to_str().unwrap()],
    );
    assert!(stdout.is_empty());
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 4);
    let log = fs::read_to_string(&trace).unwrap();
    assert_eq!(log.lines().filter(|l| l.starts_with("# run ")).count(), 3);
    assert!(log.lines().any(|l| l.contains(" tx cbr ")));
}

#[test]
fn scenario_file_round_trips_through_show() {
    let dir = tempfile::tempdir().unwrap();
    let out = uwbsim().args(["show", "--scenario", "scenario1"]).output().unwrap();
    assert!(out.status.success());
    let path = dir.path().join("s1.scn");
    fs::write(&path, &out.stdout).unwrap();
    let again = uwbsim()
        .args(["show", "--scenario", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    fs::write(&path, "scenario.name = bad\nmac.variant = tdma\n").unwrap();
    for args in [
        vec!["simulate", "--scenario", path.to_str().unwrap()],
        vec!["simulate", "--scenario", "no-such-preset"],
        vec!["simulate", "--scenario", "scenario1", "--set", "mac.max_retx=-1"],
        vec!["simulate", "--scenario", "scenario1", "--seed", "9..2"],
    ] {
        let out = uwbsim().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
    let out = uwbsim().args(["simulate", "--scenario", path.to_str().unwrap()]).output().unwrap();
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}
