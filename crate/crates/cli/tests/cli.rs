use std::process::{Command, Output};

use serde_json::Value;

fn katolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_katolab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn body(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(doc["header"]["tool"], "katolab");
    doc["body"].clone()
}

#[test]
fn sphere_suite_passes_with_exit_zero() {
    let out = katolab(&[
        "verify",
        "--manifold",
        "sphere:radius=1,subdiv=1",
        "--alpha",
        "0.5",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let b = body(&out);
    assert_eq!(b["passed"], true);
    assert_eq!(b["reports"].as_array().unwrap().len(), 7);
}

#[test]
fn violated_check_exits_one() {
    let out = katolab(&[
        "verify",
        "--suite",
        "betti",
        "--manifold",
        "flat-torus:1x1",
        "--beta",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(body(&out)["reports"][0]["passed"], false);
}

#[test]
fn input_errors_exit_two() {
    for args in [
        &["verify", "--manifold", "cube:1"][..],
        &[
            "verify",
            "--manifold",
            "torus-rev:R=2,r=1,res=16",
            "--beta",
            "5",
        ],
        &[
            "kato",
            "--manifold",
            "sphere:subdiv=1",
            "--beta-grid",
            "1:0.5:3",
        ],
        &[
            "constants",
            "--n",
            "2",
            "--alpha",
            "1.5",
            "--beta",
            "1",
            "--b",
            "0",
        ],
        &["verify", "--mesh-file", "/nonexistent/mesh.off"],
        &["verify"],
    ] {
        let out = katolab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn quadrature_budget_exits_three() {
    let out = katolab(&[
        "kato",
        "--manifold",
        "torus-rev:R=2,r=1,res=8",
        "--beta",
        "0.05",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn mesh_round_trip_through_off() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.off");
    let p = path.to_str().unwrap();
    let built = katolab(&["mesh", "--manifold", "torus-rev:R=2,r=1,res=16", "--out", p]);
    assert_eq!(built.status.code(), Some(0));
    let loaded = katolab(&["mesh", "--mesh-file", p]);
    let (a, b) = (body(&built), body(&loaded));
    assert_eq!(a["points"], b["points"]);
    assert_eq!(b["euler_characteristic"], 0);
    let rel = (a["volume"].as_f64().unwrap() / b["volume"].as_f64().unwrap() - 1.0).abs();
    assert!(rel < 1e-9);
}

#[test]
fn constants_report_closed_forms() {
    let out = katolab(&[
        "constants",
        "--n",
        "3",
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--b",
        "0",
        "--diam",
        "0.8660254037844386",
    ]);
    let b = body(&out);
    assert!((b["params"]["delta"].as_f64().unwrap() - 2.0 / 13.0).abs() < 1e-15);
    assert!((b["kernel_exponent"].as_f64().unwrap() - 3.25).abs() < 1e-12);
    assert!((b["betti_bound"]["bound"]["value"].as_f64().unwrap() - 1669.3297).abs() < 1e-3);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alpha": 0.3, "beta_grid": "0.5:1.5:3"}"#).unwrap();
    let out = katolab(&[
        "--config",
        cfg.to_str().unwrap(),
        "kato",
        "--manifold",
        "sphere:subdiv=1",
    ]);
    let b = body(&out);
    assert_eq!(b["alpha"], 0.3);
    assert_eq!(b["certificates"].as_array().unwrap().len(), 3);
    assert_eq!(b["largest_admissible"]["beta"], 1.5);

    std::fs::write(&cfg, r#"{"colour": 1}"#).unwrap();
    let out = katolab(&[
        "--config",
        cfg.to_str().unwrap(),
        "kato",
        "--manifold",
        "sphere:subdiv=1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_report_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = katolab(&[
        "verify",
        "--suite",
        "gradient",
        "--manifold",
        "sphere:subdiv=1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report, body(&out));
    let csv = std::fs::read_to_string(dir.path().join("gradient_estimate.csv")).unwrap();
    assert!(csv.starts_with("check,x,y,t1,t2,bound,observed,margin"));
    assert_eq!(
        csv.lines().count() - 1,
        report["reports"][0]["samples_tested"].as_u64().unwrap() as usize
    );
}

#[test]
fn repeated_runs_have_identical_bodies() {
    let args = ["verify", "--manifold", "sphere:subdiv=1", "--seed", "3"];
    assert_eq!(body(&katolab(&args)), body(&katolab(&args)));
}

#[test]
fn sweep_lists_each_alpha() {
    let out = katolab(&[
        "sweep",
        "--manifold",
        "torus-rev:R=2,r=1,res=8",
        "--alpha-grid",
        "0.2:0.8:4",
        "--beta-grid",
        "0.01:0.1:4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body(&out)["rows"].as_array().unwrap().len(), 4);
}
