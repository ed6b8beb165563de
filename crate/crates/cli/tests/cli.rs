use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperstate::io::save_state;
use hyperstate::StateTensor;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyperstate"));
    c.env_remove("HYPERSTATE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn certify_corpus_exit_codes() {
    let out = run(&["certify", "--paper", "bohm"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "certify");
    assert_eq!(r["result"]["overall"], "hyperentangled");

    let out = run(&["certify", "--paper", "ghz"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let failing = r["result"]["failing"].as_array().unwrap();
    assert!(failing.contains(&serde_json::json!([0])));
    assert_eq!(r["result"]["per_subsystem"][0]["zero_eigenvalues"], 2);
}

#[test]
fn reports_match_golden_files() {
    for name in ["bohm", "hardy2", "spin1_singlet", "spin1_two_term", "ghz", "hardy3"] {
        let out = run(&["certify", "--paper", name]);
        let golden = std::fs::read(golden_dir().join(format!("certify_{name}.json"))).unwrap();
        assert_eq!(out.stdout, golden, "{name}");
    }
}

#[test]
fn timing_is_opt_in() {
    let plain = report(&run(&["certify", "--paper", "bohm"]));
    assert!(plain.get("timing").is_none());
    let timed = report(&run(&["--timing", "certify", "--paper", "bohm"]));
    assert!(timed["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn method2_pipeline_certifies_its_windows() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m2.json");
    let out = run(&["construct", "method2", "--stages", "2", "--eps", "0.01,0.005", "--out", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let built = report(&out);
    assert_eq!(built["result"]["dims"], serde_json::json!([26, 26, 26]));

    let out = run(&["certify", path_str(&file), "--windows", "full"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["windows_pass"], true);
    let windows = r["result"]["windows"].as_array().unwrap();
    assert_eq!(windows.len(), 6);
    let sizes: Vec<u64> = windows.iter().map(|w| w["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![4, 4, 4, 25, 25, 25]);
    // Without windows the finite truncation is judged by the plain test.
    assert_eq!(run(&["certify", path_str(&file)]).status.code(), Some(1));
}

#[test]
fn method1_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m1.json");
    let out = run(&["construct", "method1", "--bounds", "3,3,37", "--out", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["certify", path_str(&file), "--windows", "full"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["result"]["windows"].as_array().unwrap().len(), 3);
}

#[test]
fn paper_state_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("spin1.json");
    let out = run(&["construct", "paper", "spin1_singlet", "--out", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let loaded = hyperstate::load_state(&file).unwrap();
    assert_eq!(loaded, hyperstate::paper_state(hyperstate::PaperState::Spin1Singlet));
    assert_eq!(run(&["certify", path_str(&file)]).status.code(), Some(0));
}

#[test]
fn repair_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let product = dir.path().join("product.json");
    save_state(&StateTensor::basis(vec![3, 3], [0, 0]).unwrap(), &product).unwrap();
    assert_eq!(run(&["certify", path_str(&product)]).status.code(), Some(1));

    let repaired = dir.path().join("repaired.json");
    let out = run(&[
        "construct", "repair", path_str(&product), "--split", "0|1", "--delta", "0.1", "--out", path_str(&repaired),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["result"]["distance"].as_f64().unwrap() <= 0.1);
    assert_eq!(r["result"]["filled"], 2);
    assert_eq!(run(&["certify", path_str(&repaired)]).status.code(), Some(0));

    let unequal = dir.path().join("unequal.json");
    save_state(&StateTensor::basis(vec![2, 3], [0, 0]).unwrap(), &unequal).unwrap();
    let out = run(&[
        "construct", "repair", path_str(&unequal), "--split", "0|1", "--delta", "0.1", "--out", path_str(&repaired),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schmidt_of_hardy2() {
    let out = run(&["schmidt", "--paper", "hardy2", "--split", "0|1"]);
    assert_eq!(out.status.code(), Some(0));
    let coeffs: Vec<f64> = serde_json::from_value(report(&out)["result"]["coeffs"].clone()).unwrap();
    let expect = [((3.0 + 5f64.sqrt()) / 6.0).sqrt(), ((3.0 - 5f64.sqrt()) / 6.0).sqrt()];
    for (c, e) in coeffs.iter().zip(expect) {
        assert!((c - e).abs() < 1e-12);
    }
    let out = run(&["schmidt", "--paper", "ghz", "--split", "1,2|0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["rank"], 2);
}

#[test]
fn witness_command() {
    let dir = tempfile::tempdir().unwrap();
    let pprime = dir.path().join("pprime.json");
    std::fs::write(&pprime, r#"{"basis": [[[1.0, 0.0], [0.0, 0.0]]]}"#).unwrap();
    let out = run(&[
        "witness", "--paper", "bohm", "--pprime-file", path_str(&pprime), "--epsilon", "0.01", "--split", "0|1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!((r["result"]["achieved"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["result"]["reevaluated"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    std::fs::write(&pprime, r#"{"basis": [[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]]}"#).unwrap();
    let out = run(&[
        "witness", "--paper", "spin1_two_term", "--pprime-file", path_str(&pprime), "--epsilon", "0.01", "--split",
        "0|1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out)["result"]["not_cyclic"].is_object());

    std::fs::write(&pprime, r#"{"basis": [[[1.0, 0.0]]]}"#).unwrap();
    let out = run(&[
        "witness", "--paper", "bohm", "--pprime-file", path_str(&pprime), "--epsilon", "0.01", "--split", "0|1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degree_command() {
    let out = run(&["degree", "--paper", "ghz", "--restarts", "8", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["result"]["value"].as_f64().unwrap() - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-8);
    assert_eq!(r["result"]["method"], "alternating");
    let out = run(&["degree", "--paper", "bohm", "--split", "0|1"]);
    assert_eq!(report(&out)["result"]["method"], "schmidt");
}

#[test]
fn usage_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &[],
        &["certify"],
        &["certify", "--paper", "w_state"],
        &["certify", "--paper", "bohm", "--tol", "-1"],
        &["certify", "--paper", "bohm", "--windows", "some"],
        &["certify", "/nonexistent/state.json"],
        &["schmidt", "--paper", "bohm", "--split", "0"],
        &["schmidt", "--paper", "ghz", "--split", "0|1"],
        &["schmidt", "--paper", "bohm", "--split", "0,1|"],
        &["construct", "method2", "--stages", "2", "--eps", "0.01", "--out", "/tmp/never.json"],
        &["construct", "method1", "--bounds", "3,3", "--out", "/tmp/never.json"],
        &["degree", "--paper", "bohm", "--restarts", "0"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_variable_is_validated() {
    let out = bin().args(["certify", "--paper", "bohm"]).env("HYPERSTATE_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["certify", "--paper", "bohm"]).env("HYPERSTATE_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_fixtures_exit_with_two() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/malformed");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["certify", path_str(&path)]);
        assert_eq!(out.status.code(), Some(2), "{}", path.display());
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
        count += 1;
    }
    assert_eq!(count, 20);
}
