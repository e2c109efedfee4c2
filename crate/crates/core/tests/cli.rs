use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn mcgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcgeo"))
        .args(args)
        .env_remove("MCGEO_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, v: Value) -> PathBuf {
        write(self.dir.path(), name, &v)
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }
}

fn energies(n: usize) -> Value {
    json!((0..1usize << n).map(|k| (k.count_ones() as f64) * 0.5 + (k % 3) as f64 * 0.25).collect::<Vec<_>>())
}

#[test]
fn divergence_of_a_chain_to_itself_is_zero() {
    let fx = Fixture::new();
    let pi = fx.file("u2.json", json!([0.5, 0.5]));
    let m = fx.file("M.json", json!({"factors": [2], "P": [[0.3, 0.7], [0.6, 0.4]]}));
    let out = mcgeo(&["divergence", "--f", "kl", "--pi", s(&pi), "--m", s(&m), "--l", s(&m)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["value"].as_f64(), Some(0.0));
}

#[test]
fn spectral_gap_of_the_fair_coin_chain() {
    let fx = Fixture::new();
    let p = fx.file("two.json", json!({"factors": [2], "P": [[0.5, 0.5], [0.5, 0.5]]}));
    let out = mcgeo(&["spectral", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["gamma"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = mcgeo(&["spectral", "--p", s(&p), "--cheeger", "--hitting"]);
    let v = stdout_json(&out);
    assert!((v["cheeger"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["hitting"]["t_av"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = mcgeo(&["spectral", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_numeric_option_is_a_usage_error() {
    let fx = Fixture::new();
    let p = fx.file("two.json", json!({"factors": [2], "P": [[0.5, 0.5], [0.5, 0.5]]}));
    let out = mcgeo(&["mix", "--p", s(&p), "--eps", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--eps"));
}

#[test]
fn reducible_chain_is_a_domain_error() {
    let fx = Fixture::new();
    let p = fx.file("id.json", json!({"factors": [2], "P": [[1.0, 0.0], [0.0, 1.0]]}));
    let out = mcgeo(&["spectral", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["error"], "reducible");
    assert!(v["detail"].is_string());
}

#[test]
fn row_sum_error_names_the_row() {
    let fx = Fixture::new();
    let p = fx.file("bad.json", json!({"factors": [2], "P": [[0.5, 0.5], [0.4, 0.5]]}));
    let out = mcgeo(&["spectral", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let detail = stdout_json(&out)["detail"].as_str().unwrap().to_string();
    assert!(detail.contains("row 1"), "{detail}");
    assert!(detail.contains("0.9"), "{detail}");
}

#[test]
fn factor_mismatch_is_rejected() {
    let fx = Fixture::new();
    let p = fx.file(
        "mismatch.json",
        json!({"factors": [2, 2], "P": [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]}),
    );
    let out = mcgeo(&["spectral", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_json(&out)["error"].is_string());
}

#[test]
fn missing_file_reports_an_error() {
    let out = mcgeo(&["spectral", "--p", "/nonexistent/chain.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"], "io");
}

#[test]
fn sampling_requires_a_seed() {
    let fx = Fixture::new();
    let h = fx.file("H.json", energies(2));
    let out = mcgeo(&["swap", "sample", "--N", "2", "--betas", "0,1", "--hamiltonian", s(&h), "--steps", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let fx = Fixture::new();
    let h = fx.file("H.json", energies(3));
    let run = |seed: &str, replicas: &str| {
        mcgeo(&[
            "swap", "sample", "--N", "3", "--d", "2", "--betas", "0,1", "--hamiltonian", s(&h), "--steps", "20000",
            "--seed", seed, "--coordinate", "last", "--replicas", replicas,
        ])
    };
    let a = run("42", "1");
    let b = run("42", "1");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, run("43", "1").stdout);
    assert_eq!(run("7", "4").stdout, run("7", "4").stdout);

    let v = stdout_json(&a);
    let counts: u64 = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 20000);
    assert!(v["total_variation"].as_f64().unwrap() < 0.05);
}

#[test]
fn swap_build_and_compare() {
    let fx = Fixture::new();
    let h = fx.file("H.json", energies(2));
    let out = mcgeo(&["swap", "build", "--N", "2", "--d", "2", "--betas", "0,1", "--hamiltonian", s(&h)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["states"], 16);
    assert!(v["restriction_residual"].as_f64().unwrap() <= 1e-12);
    assert!((v["escape"].as_f64().unwrap() - 0.75).abs() <= 1e-12);
    let doc = mcgeo::io::parse_chain(&v["chain"]).unwrap();
    assert_eq!(doc.0.n(), 16);

    let out = mcgeo(&["swap", "compare", "--N", "2", "--betas", "0,1", "--hamiltonian", s(&h)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(!v["ledger"].as_array().unwrap().is_empty());

    let out = mcgeo(&["swap", "build", "--N", "2", "--d", "3", "--betas", "0,1", "--hamiltonian", s(&h)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn marginal_output_is_a_chain_document() {
    let fx = Fixture::new();
    let p = fx.file(
        "P.json",
        json!({"factors": [2, 2], "P": [
            [0.4, 0.3, 0.2, 0.1],
            [0.1, 0.4, 0.3, 0.2],
            [0.2, 0.1, 0.4, 0.3],
            [0.3, 0.2, 0.1, 0.4]
        ]}),
    );
    let out = mcgeo(&["marginal", "--s", "1", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let (m, pi) = mcgeo::io::parse_chain(&stdout_json(&out)).unwrap();
    assert_eq!(m.n(), 2);
    let pi = pi.expect("marginal law is emitted");
    assert!((pi.get(0) - 0.5).abs() < 1e-12);

    // the emitted chain feeds back into the CLI unchanged
    let path = write(fx.path(), "marg.json", &stdout_json(&out));
    let again = mcgeo(&["marginal", "--s", "1", "--p", s(&path)]);
    let (m2, _) = mcgeo::io::parse_chain(&stdout_json(&again)).unwrap();
    assert!(m.max_abs_diff(&m2) <= 1e-15);
}

#[test]
fn projection_and_checks_round_trip() {
    let fx = Fixture::new();
    let p = fx.file(
        "P.json",
        json!({"factors": [2, 2], "pi": [0.25, 0.25, 0.25, 0.25], "P": [
            [0.4, 0.3, 0.2, 0.1],
            [0.1, 0.4, 0.3, 0.2],
            [0.2, 0.1, 0.4, 0.3],
            [0.3, 0.2, 0.1, 0.4]
        ]}),
    );
    let out = mcgeo(&["project", "--method", "rkl", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    for f in v["factors"].as_array().unwrap() {
        mcgeo::io::parse_chain(&json!({ "P": f })).unwrap();
    }
    let trace: Vec<f64> = v["trace"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));

    let factors = fx.path().join("L");
    std::fs::create_dir(&factors).unwrap();
    write(&factors, "L1.json", &json!({"factors": [2], "P": [[0.5, 0.5], [0.5, 0.5]]}));
    write(&factors, "L2.json", &json!({"factors": [2], "P": [[0.9, 0.1], [0.2, 0.8]]}));
    let out = mcgeo(&["check", "han", "--p", s(&p), "--factors", s(&factors)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["holds"], true);

    let out = mcgeo(&["check", "shearer-ind", "--cover", "1,2", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["holds"], true);

    let out = mcgeo(&["scan", "--functional", "fact", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["holds"], true);

    let out = mcgeo(&["factor", "--blocks", "1|2", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mixing_time_of_the_fair_coin_chain() {
    let fx = Fixture::new();
    let p = fx.file("two.json", json!({"factors": [2], "P": [[0.5, 0.5], [0.5, 0.5]]}));
    let out = mcgeo(&["mix", "--p", s(&p), "--eps", &(-1.0f64).exp().to_string()]);
    assert_eq!(out.status.code(), Some(0));
    assert!((stdout_json(&out)["t_mix"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn table_output_flattens_paths() {
    let fx = Fixture::new();
    let p = fx.file("two.json", json!({"factors": [2], "P": [[0.5, 0.5], [0.5, 0.5]]}));
    let out = mcgeo(&["--output", "table", "spectral", "--p", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("gamma\t")), "{text}");
}

#[test]
fn doubles_survive_the_round_trip() {
    let fx = Fixture::new();
    let a = 0.1 + 0.2;
    let p = fx.file("P.json", json!({"factors": [2], "P": [[a, 1.0 - a], [1.0 / 3.0, 2.0 / 3.0]]}));
    let out = mcgeo(&["marginal", "--s", "1", "--p", s(&p)]);
    let v = stdout_json(&out);
    assert_eq!(v["P"][0][0].as_f64(), Some(a));
    assert_eq!(v["P"][1][0].as_f64(), Some(1.0 / 3.0));
}

#[test]
fn thread_cap_is_validated() {
    let fx = Fixture::new();
    let p = fx.file("two.json", json!({"factors": [2], "P": [[0.5, 0.5], [0.5, 0.5]]}));
    let bad = Command::new(env!("CARGO_BIN_EXE_mcgeo"))
        .args(["spectral", "--p", s(&p)])
        .env("MCGEO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let ok = Command::new(env!("CARGO_BIN_EXE_mcgeo"))
        .args(["spectral", "--p", s(&p)])
        .env("MCGEO_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}
