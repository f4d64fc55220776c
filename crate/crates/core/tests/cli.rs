use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use symboleo::fixtures::{REFINEMENTS, TE_SPEC};
use symboleo::service::ops;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/te").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symboleo")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exit_codes_distinguish_diagnostics_from_usage_errors() {
    let spec = fixture("te.symboleo");
    let o = run(&["validate", p(&spec)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "valid\n");

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.symboleo");
    std::fs::write(&broken, TE_SPEC.replace("Happens(evt_pay)", "Happens(evt_ship)")).unwrap();
    let o = run(&["validate", p(&broken)]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("broken.symboleo:") && err.contains("E201"), "{err}");

    assert_eq!(code(&run(&["validate", "/nonexistent/x.symboleo"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["generate", p(&broken), "--out", p(dir.path())])), 1);
}

#[test]
fn parse_prints_the_canonical_form() {
    let o = run(&["parse", p(&fixture("te.symboleo"))]);
    assert_eq!(code(&o), 0);
    let spec = symboleo::lang::check(TE_SPEC).0.unwrap();
    assert_eq!(stdout(&o), symboleo::lang::print(&spec));
}

#[test]
fn refine_writes_one_spec_per_script() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "refine".to_owned(),
        "--template".into(),
        fixture("te.cttpl.json").display().to_string(),
        "--spec".into(),
        fixture("te.symboleo").display().to_string(),
        "--out".into(),
        dir.path().display().to_string(),
    ];
    for (label, _) in REFINEMENTS {
        args.push("--script".into());
        args.push(fixture(&format!("refinements/{label}.txt")).display().to_string());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for (label, _) in REFINEMENTS {
        let text = std::fs::read_to_string(dir.path().join(format!("{label}.symboleo"))).unwrap();
        assert!(symboleo::lang::check(&text).1.is_empty(), "{label}");
        assert!(dir.path().join(format!("{label}.txt")).exists());
    }
    let specs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "symboleo"))
        .count();
    assert_eq!(specs, 9);
}

#[test]
fn refine_reports_the_failing_script_line() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("bad.txt");
    std::fs::write(&script, "P2: before March 31, 2024\nP1: whenever\n").unwrap();
    let o = run(&[
        "refine",
        "--template",
        p(&fixture("te.cttpl.json")),
        "--spec",
        p(&fixture("te.symboleo")),
        "--script",
        p(&script),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2:"));
}

#[test]
fn generate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let zip = d.path().join("bundle.zip");
        let o = run(&["generate", p(&fixture("te.symboleo")), "--out", p(&d.path().join("out")), "--zip", p(&zip)]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).ends_with("total\n"));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "bundle.zip"), read(&b, "bundle.zip"));
    for f in ["out/contract.js", "out/router.js", "out/manifest.json", "out/lib/symboleo.js"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn simulate_replays_a_scenario() {
    let o = run(&[
        "simulate",
        "--spec",
        p(&fixture("te.symboleo")),
        "--scenario",
        p(&fixture("scenarios/voltage_out_of_range.jsonl")),
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("P_terminate") && out.ends_with("contract: Terminated\n"), "{out}");

    // a rejected step makes the run fail
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.jsonl");
    let lines = std::fs::read_to_string(fixture("scenarios/happy_path.jsonl")).unwrap();
    std::fs::write(&scenario, format!("{lines}{{\"op\":\"exert\",\"power\":\"P_suspend\"}}\n")).unwrap();
    let o = run(&["--json", "simulate", "--spec", p(&fixture("te.symboleo")), "--scenario", p(&scenario)]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().last().unwrap()["errors"][0]["code"], "E804");
}

#[test]
fn report_prints_a_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let pair = symboleo::fixtures::te_pair();
    let mut args = vec!["report".to_owned(), "--csv".into(), "--base".into(), fixture("te.symboleo").display().to_string()];
    for (label, script) in REFINEMENTS {
        let spec = symboleo::cnl::apply_script(&pair, script).unwrap().0.spec;
        let f = dir.path().join(format!("{label}.symboleo"));
        std::fs::write(&f, symboleo::lang::print(&spec)).unwrap();
        args.push("--refined".into());
        args.push(format!("{label}={}", f.display()));
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 11);
    assert_eq!(header[0], "metric");
    assert!(csv.lines().all(|l| l.split(',').count() == 11));
}

#[test]
fn json_output_matches_the_api_payloads() {
    let spec = fixture("te.symboleo");
    let o = run(&["--json", "validate", p(&spec)]);
    let cli: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cli, serde_json::to_value(ops::validate(TE_SPEC)).unwrap());

    let o = run(&["--json", "complete", p(&spec), "--line", "18", "--col", "3"]);
    let cli: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cli, serde_json::to_value(ops::complete(TE_SPEC, 18, 3)).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--json", "generate", p(&spec), "--out", p(dir.path())]);
    let cli: Value = serde_json::from_slice(&o.stdout).unwrap();
    let (_, outcome) = ops::generate_source(TE_SPEC).unwrap();
    assert_eq!(cli, serde_json::to_value(outcome).unwrap());
}
