use std::process::{Command, Output};

use ckn_lab::{CknParams, ExtremalProfile, RadialGrid};
use serde_json::Value;

fn ckn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckn-lab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_degenerate_tuple() {
    let out = ckn(&["classify", "--N", "4", "--p", "2", "--alpha", "0", "--beta", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "classify");
    assert_eq!(v["seed"], 42);
    let r = &v["result"];
    assert_eq!(r["degenerate"], true);
    assert_eq!(r["k"], 2);
    assert_eq!(r["multiplicity"], 9);
    assert_eq!(r["eigenspace_dim"], 10);
    assert!(!out.stderr.is_empty());
}

#[test]
fn classify_sobolev_case_is_mode_one() {
    let out = ckn(&["classify", "--N", "3", "--p", "2", "--alpha", "0", "--beta", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["k"], 1);
}

#[test]
fn invalid_parameters_exit_2_with_reason() {
    let out = ckn(&["classify", "--N", "3", "--p", "2", "--alpha", "2", "--beta", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
    assert!(out.stdout.is_empty());

    assert_eq!(ckn(&["constants", "--N", "3", "--p", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(ckn(&["constants", "--N", "3"]).status.code(), Some(2));
    assert_eq!(ckn(&["constants", "--N", "3", "--p", "2", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(ckn(&["constants", "--N", "3", "--p", "2", "--rmin", "10", "--rmax", "1"]).status.code(), Some(2));
    assert_eq!(ckn(&["--help"]).status.code(), Some(0));
}

#[test]
fn constants_verify_matches_quadrature() {
    let out = ckn(&["constants", "--N", "3", "--p", "2", "--alpha", "0", "--beta", "0", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert!(r["verification"]["relative_difference"].as_f64().unwrap() < 1e-6);
    // ((N - p + alpha)/p)^p
    assert!((r["hardy"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    for key in ["S_r", "C", "K", "t", "p_star"] {
        assert!(r[key].is_number(), "{key}");
    }
}

#[test]
fn spectrum_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.csv");
    let out = ckn(&[
        "spectrum", "--N", "3", "--p", "2", "--kmax", "1", "--neigs", "2", "--format", "csv", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,index,mu,lambda_k,multiplicity,tag"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.ends_with(",threshold")));
}

#[test]
fn deficit_of_sampled_extremal() {
    let params = CknParams::new(3, 2.0, 0.0, 0.0).unwrap();
    let u = ExtremalProfile::unit(params).to_radial_function();
    let nodes = RadialGrid::log_uniform(1e-6, 1e6, 2001).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    u.sample(nodes.nodes()).write_csv(file.as_file()).unwrap();

    let out = ckn(&["deficit", "--N", "3", "--p", "2", "--input", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["result"];
    let d = &r["deficit"];
    assert!(d["deficit"].as_f64().unwrap().abs() / d["norm_p"].as_f64().unwrap() < 1e-5);
    assert!(r["projection"]["d"].as_f64().unwrap() < 1e-3);
}

#[test]
fn deficit_rejects_malformed_input() {
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), "r,u\n1.0,2.0\n0.5,1.0\n").unwrap();
    let out = ckn(&["deficit", "--N", "3", "--p", "2", "--input", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let out = ckn(&["deficit", "--N", "3", "--p", "2", "--input", "/nonexistent/profile.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scan_w0_has_positive_constant() {
    let out = ckn(&["scan", "--N", "3", "--p", "2", "--family", "w0", "--eps", "1e-3:0.5:20"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert_eq!(r["family"], "w0");
    assert_eq!(r["rows"].as_array().unwrap().len(), 20);
    assert!(r["empirical_B"].as_f64().unwrap() > 0.0);
    for key in ["eps", "deficit", "dist", "quotient"] {
        assert!(r["rows"][0][key].is_number(), "{key}");
    }

    let out = ckn(&["scan", "--N", "3", "--p", "2", "--eps", "1e-3:0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ckn(&["scan", "--N", "3", "--p", "2", "--eps", "1e-3:0.5:4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("eps,deficit,dist,quotient\n"));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--N", "3", "--p", "2.5", "--alpha", "0.2", "--beta", "0.4"];
    let a = ckn(&args);
    let b = ckn(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["result"]["passed"], true);

    let c = ckn(&["verify", "--N", "3", "--p", "2.5", "--alpha", "0.2", "--beta", "0.4", "--seed", "7"]);
    assert_eq!(json(&c)["seed"], 7);
    assert_ne!(a.stdout, c.stdout);
}
