use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suborder"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn four_lines_report_values() {
    let out = run(&["report", "--four-lines"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    let r_star = r["r_star"].as_f64().unwrap();
    let r_greedy = r["r_greedy"].as_f64().unwrap();
    assert!((r_star - 5.1033e-4).abs() < 5e-8, "{r_star}");
    assert!((r_greedy - 7.5772e-4).abs() < 5e-8, "{r_greedy}");
    assert_eq!(r["sigma_greedy"], serde_json::json!([1, 4, 3, 2]));
    assert_eq!(r["lower_ok"], true);
    assert_eq!(r["upper_ok"], true);
}

#[test]
fn report_is_deterministic() {
    let a = run(&["report", "--family", "3,0.95,0.95"]);
    let b = run(&["report", "--family", "3,0.95,0.95"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn generate_random_is_seeded() {
    let a = run(&["generate", "--random", "6", "--seed", "11"]);
    let b = run(&["generate", "--random", "6", "--seed", "11"]);
    let c = run(&["generate", "--random", "6", "--seed", "12"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn realize_four_by_four() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&["generate", "--random", "4", "--seed", "3"]);
    let input = write(dir.path(), "m.json", std::str::from_utf8(&m.stdout).unwrap());
    let out = run(&["realize", "--input", &input]);
    assert_eq!(code(&out), 0);
    let k = stdout_json(&out);
    assert_eq!(k["ambient_dim"], 12);
    assert_eq!(k["frames"].as_array().unwrap().len(), 4);
    let err = String::from_utf8_lossy(&out.stderr);
    let tail = err.split("error:").nth(1).unwrap().trim();
    assert!(tail.parse::<f64>().unwrap() < 1e-10, "{err}");
}

#[test]
fn realize_round_trips_through_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&["generate", "--random", "5", "--seed", "9"]);
    let mpath = write(dir.path(), "m.json", std::str::from_utf8(&m.stdout).unwrap());
    let kpath = dir.path().join("k.json");
    let out = run(&["realize", "--input", &mpath, "--output", kpath.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let from_matrix = stdout_json(&run(&["report", "--input", &mpath]));
    let from_frames = stdout_json(&run(&["report", "--input", kpath.to_str().unwrap()]));
    assert_eq!(from_matrix["sigma_star"], from_frames["sigma_star"]);
    let a = from_matrix["r_star"].as_f64().unwrap();
    let b = from_frames["r_star"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9 * a.max(1e-300), "{a} vs {b}");
}

#[test]
fn csv_matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.csv", "0,0.5,0.2\n0.5,0,0.3\n0.2,0.3,0\n");
    let out = run(&["report", "--input", &input]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    assert!((r["r_star"].as_f64().unwrap() - 0.5 * 0.2 * 0.3).abs() < 1e-15);
}

#[test]
fn unit_entries_refused_then_clamped() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.csv", "0,1,0.2\n1,0,0.3\n0.2,0.3,0\n");
    assert_eq!(code(&run(&["realize", "--input", &input])), 3);
    let out = run(&["realize", "--input", &input, "--clamp", "1e-6"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn simulate_unrealizable_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.csv", "0,1,0.2\n1,0,0.3\n0.2,0.3,0\n");
    assert_eq!(code(&run(&["simulate", "--input", &input])), 5);
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let asym = write(dir.path(), "a.csv", "0,0.5\n0.4,0\n");
    let out = run(&["report", "--input", &asym]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not symmetric"));
    let range = write(dir.path(), "r.csv", "0,1.5\n1.5,0\n");
    let out = run(&["report", "--input", &range]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
    let garbage = write(dir.path(), "g.json", "{not json");
    assert_eq!(code(&run(&["report", "--input", &garbage])), 2);
    assert_eq!(code(&run(&["report", "--input", "/nonexistent/file.json"])), 2);
    assert_eq!(code(&run(&["report"])), 2);
    assert_eq!(code(&run(&["report", "--paper-example", "--family", "2,0.9,0.8"])), 2);
    assert_eq!(code(&run(&["simulate", "--four-lines", "--sigma", "1,2,2,4"])), 2);
}

#[test]
fn too_large_for_exact_optimum() {
    let out = run(&["report", "--family", "11,0.9,0.9"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_four_lines_curve() {
    let out = run(&["simulate", "--four-lines", "--optimal", "--n", "6"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,error,bound"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1]);
    }
    for r in &rows {
        assert!(r[1] <= r[2] * (1.0 + 1e-9));
    }
}

#[test]
fn simulate_two_lines_identity() {
    let out = run(&["simulate", "--lines", "2", "--seed", "4", "--n", "8", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let curve = stdout_json(&out);
    assert_eq!(curve["errors"].as_array().unwrap().len(), 8);
    assert!(String::from_utf8_lossy(&out.stderr).contains("verified"));
}

#[test]
fn tsp_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "g.json",
        r#"{"n":4,"weights":[[0,1,5,2],[1,0,1,6],[5,1,0,1],[2,6,1,0]]}"#,
    );
    let mpath = dir.path().join("reduced.json");
    let out = run(&["tsp", "--input", &input, "--output", mpath.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["additive_optimal"]["sigma"], serde_json::json!([1, 2, 3, 4]));
    assert_eq!(v["additive_optimal"]["cost"].as_f64().unwrap(), 5.0);
    let reduced: Value = serde_json::from_str(&fs::read_to_string(&mpath).unwrap()).unwrap();
    assert_eq!(reduced["n"], 4);
}

#[test]
fn generate_family_csv() {
    let out = run(&["generate", "--family", "2,0.9,0.8", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
}
