use std::path::Path;
use std::process::{Command, Output};

use sparsewiener::rates::Report;
use sparsewiener::SpectralFunction;

fn swg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swg"))
        .args(args)
        .env_remove("SWG_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"{
    "scheme": "lagrange",
    "spec": {"p": 2, "q": 2, "alpha": 2, "beta": 0, "gamma": 0, "T": 0,
             "target": "isotropic", "dim": 2},
    "family": {"family": "block_lacunary", "rho": 1.1, "terms": 2},
    "levels": {"start": 2, "end": 5},
    "seed": 3
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn grid_members_of_the_smolyak_set() {
    let o = swg(&["grid", "--dim", "2", "--n", "2", "--T", "0", "--emit", "members"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, ["0,0", "0,1", "0,2", "1,0", "1,1", "2,0"]);
}

#[test]
fn grid_points_are_dyadic_fractions() {
    let o = swg(&["grid", "--dim", "2", "--n", "1", "--T", "0", "--emit", "points"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_1,x_2"));
    let points: Vec<&str> = lines.collect();
    // Δ(1, 0) = {(0,0), (1,0), (0,1)} has nodes (0,0), (1/2,0), (0,1/2).
    assert_eq!(points.len(), 3);
    assert!(points.contains(&"1/2,0/1"));
}

#[test]
fn grid_accepts_the_full_box_and_energy_sets() {
    let o = swg(&["grid", "--dim", "2", "--n", "2", "--T", "-inf", "--emit", "counts"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(1), Some("9,16,49"));
    let o = swg(&["grid", "--dim", "2", "--energy", "2,0,1,0.5,0", "--xi", "3", "--emit", "counts"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = swg(&["grid", "--dim", "2", "--energy", "2,0,1,1.5,0", "--xi", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn lagrange_certificate_passes() {
    let o = swg(&["check-conditions", "--scheme", "lagrange", "--jmax", "8", "--s", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cert["C3"], 0.0);
    assert_eq!(cert["verdict"], "PASS");
}

#[test]
fn failing_certificate_exits_with_one() {
    let o = swg(&["check-conditions", "--scheme", "averaged", "--jmax", "8", "--s", "2.5"]);
    assert_eq!(o.status.code(), Some(1));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cert["verdict"], "FAIL");
    assert_eq!(swg(&["check-conditions", "--scheme", "nope", "--s", "1"]).status.code(), Some(2));
}

#[test]
fn missing_config_is_rejected() {
    let o = swg(&["rates", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));
}

#[test]
fn invalid_config_names_the_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", &CONFIG.replace("\"gamma\": 0", "\"gamma\": 3"));
    let o = swg(&["rates", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("γ − β < α − σ"));
    let path = write(dir.path(), "typo.json", &CONFIG.replace("\"seed\"", "\"sed\""));
    assert_eq!(swg(&["rates", "--config", &path]).status.code(), Some(2));
}

#[test]
fn rate_reports_round_trip_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "exp.json", CONFIG);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = swg(&["rates", "--config", &config, "--out", out.to_str().unwrap()]);
        assert!(o.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text_a = std::fs::read(&a).unwrap();
    assert_eq!(text_a, std::fs::read(&b).unwrap());
    let report: Report = serde_json::from_slice(&text_a).unwrap();
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again.as_bytes(), text_a.as_slice());

    let csv_path = dir.path().join("rows.csv");
    swg(&["rates", "--config", &config, "--out", csv_path.to_str().unwrap()]);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("n,error,uncertainty,omega,index_count,exact"));
    let Report::Rate(r) = &report else { panic!("expected a rate report") };
    assert_eq!(csv.lines().count(), r.rows.len() + 1);

    let svg = dir.path().join("plot.svg");
    let o = swg(&["rates", "--plot", a.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray"));
}

#[test]
fn global_seed_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "exp.json", &CONFIG.replace("\"terms\": 2", "\"terms\": 3, \"placement\": \"random\""));
    let run = |seed: &str| stdout(&swg(&["--seed", seed, "rates", "--config", &config]));
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}

#[test]
fn out_dir_variable_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_swg"))
        .args(["--threads", "2", "grid", "--dim", "3", "--n", "1", "--out", "members.csv"])
        .env("SWG_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("members.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn approx_and_norm_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    // e^{i(x_1 + 3x_2)} + 0.5 e^{−2ix_1}.
    let f = write(dir.path(), "f.json", r#"{"dim": 2, "coeffs": [[1, 3, 1, 0], [-2, 0, 0.5, 0]]}"#);
    let out = dir.path().join("approx.json");
    let o = swg(&["approx", "--scheme", "lagrange", "--set", "T=0", "--n", "5", "--dim", "2", "--function", &f, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let g = SpectralFunction::from_json_str(&text).unwrap();
    let original = SpectralFunction::from_json_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    // 1 ∈ D_2 and 3 ∈ D_3, so |k|_1 ≤ 5 resolves (1, 3) and Lagrange reproduces f.
    assert!(g.sub(&original).unwrap().a1_norm() < 1e-12);
    assert_eq!(SpectralFunction::from_json_str(&g.to_json_string().unwrap()).unwrap(), g);

    let o = swg(&["norm", "--function", &f, "--variant", "iso", "--q", "1", "--gamma", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // (1+3)·1 + (1+2)·0.5.
    assert!((v["norm"].as_f64().unwrap() - 5.5).abs() < 1e-12);
    assert_eq!(v["tail_bound"], 0.0);

    let o = swg(&["approx", "--scheme", "lagrange", "--set", "T=0", "--n", "4", "--dim", "3", "--function", &f]);
    assert_eq!(o.status.code(), Some(2));
}
