use std::path::Path;
use std::process::{Command, Output};

fn pss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pss")).args(args).env_remove("PSS_CONFIG").output().expect("pss runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_sg_eta() {
    let o = pss(&["verify", "--family", "sg-eta", "--eta", "1.5"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("structure equations: OK"));
    assert!(out.contains("immersion closed-form: OK"));
}

#[test]
fn verify_notes_negative_alpha() {
    let o = pss(&["verify", "--family", "hyp-i", "--A", "1", "--B", "2", "--Q", "0"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("α = 1/(A² − B²)") && out.contains("< 0"), "{out}");
    assert!(out.contains("immersion closed-form: none"));
}

#[test]
fn verify_hyp_ii() {
    let o = pss(&["verify", "--family", "hyp-ii", "--gamma", "2", "--delta", "1", "--nu", "1", "--beta", "1", "--A", "1.25", "--B", "0.75", "--eta", "1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("immersion closed-form: none"));
    // A² − B² = 3 while (γ − 1)/δ² = 1.
    let o = pss(&["verify", "--family", "hyp-ii", "--gamma", "2", "--delta", "1", "--nu", "1", "--beta", "1", "--A", "2", "--B", "1", "--eta", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("constraint"));
}

#[test]
fn verify_input_errors() {
    assert_eq!(code(&pss(&["verify"])), 2);
    assert_eq!(code(&pss(&["verify", "--family", "nope"])), 2);
    assert_eq!(code(&pss(&["verify", "--family", "sg-eta", "--eta", "0"])), 2);
    assert_eq!(code(&pss(&["verify", "--family", "sg-eta", "--param", "eta"])), 2);
}

#[test]
fn obstruct_verdicts() {
    let o = pss(&["obstruct", "--family", "hyp-iii-lambda", "--l", "3", "--gamma-im", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("UniversalFamily"), "{}", stdout(&o));
    let o = pss(&["obstruct", "--family", "hyp-ii-gamma1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Inconsistent"));
    let o = pss(&["obstruct", "--family", "hyp-ii-gamma1", "--order", "2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("order 2"));
}

#[test]
fn obstruct_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obstruct.json");
    let o = pss(&["obstruct", "--family", "hyp-i-qa", "--report", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = report(&path);
    assert_eq!(r["verdict"]["outcome"], "ZeroJetFamily");
    assert!(r["verdict"]["trace"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn immerse_kink() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kink.obj");
    let rep = dir.path().join("kink.json");
    let o = pss(&[
        "immerse", "--family", "sg-basic", "--solution", "kink", "--a", "1", "--grid", "-3:3:-3:3:0.02",
        "--out", out.to_str().unwrap(), "--report", rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = report(&rep);
    assert!(r["diagnostics"]["mean_k_error"].as_f64().unwrap() < 1e-2);
    assert_eq!(r["passed"], true);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# pss surface mesh"));
    assert!(dir.path().join("kink.diagnostics.json").exists());
}

#[test]
fn immerse_linear_and_expr() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.obj");
    let o = pss(&["immerse", "--family", "hyp-iii-xi-tau", "--solution", "linear", "--p", "2", "--grid", "-0.3:0.3:-0.3:0.3:0.005", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = pss(&["immerse", "--family", "sg-basic", "--solution", "expr", "--u", "4*arctan(exp(x + t))", "--grid", "-2:2:-2:2:0.04", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = pss(&["immerse", "--family", "sg-basic", "--solution", "expr", "--u", "x*t", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = pss(&["immerse", "--family", "hyp-iii-lambda", "--solution", "kink", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn immerse_fails_on_tolerances() {
    // Coarse grid: the curvature error is far above the default tolerance.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coarse.obj");
    let o = pss(&["immerse", "--family", "hyp-iii-lambda", "--solution", "linear", "--p", "2", "--grid", "-0.15:0.15:-0.15:0.15:0.02", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAILED"));
}

#[test]
fn immerse_input_errors() {
    let o = pss(&["immerse", "--family", "evo-hlzero", "--l", "1", "--gamma-im", "1", "--out", "unused.obj"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("l² > 4γ²"));
    assert_eq!(code(&pss(&["immerse", "--family", "sg-basic", "--solution", "kink"])), 2);
    assert_eq!(code(&pss(&["immerse", "--family", "hyp-ii", "--out", "unused.obj"])), 2);
    assert!(!Path::new("unused.obj").exists());
}

#[test]
fn immerse_from_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("kink.csv");
    let grid = pss_core::solutions::sg_kink(1.0).unwrap().sample(&"0.2:1.2:0.2:1.2:0.02".parse().unwrap(), &[]).unwrap();
    grid.write_csv(&csv).unwrap();
    let out = dir.path().join("file.obj");
    let o = pss(&["immerse", "--family", "sg-basic", "--solution", "file", "--input", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = pss(&["verify", "--family", "hyp-iii-xi-tau", "--seed", "7", "--report", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = dir.path().join("m.obj");
    let mut seen = Vec::new();
    for p in [&a, &b] {
        let o = pss(&["immerse", "--family", "sg-basic", "--grid", "-1:1:-1:1:0.05", "--out", out.to_str().unwrap(), "--report", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        seen.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[family]\nid = \"sg-eta\"\n\n[params]\neta = 2.0\n\n[check]\nseed = 11\n").unwrap();
    let rep = dir.path().join("r.json");
    let (c, r) = (cfg.to_str().unwrap(), rep.to_str().unwrap());

    assert_eq!(code(&pss(&["verify", "--config", c, "--report", r])), 0);
    let v = report(&rep);
    assert_eq!((v["params"]["eta"].as_f64(), v["seed"].as_u64()), (Some(2.0), Some(11)));

    assert_eq!(code(&pss(&["verify", "--config", c, "--eta", "1.5", "--seed", "3", "--report", r])), 0);
    let v = report(&rep);
    assert_eq!((v["params"]["eta"].as_f64(), v["seed"].as_u64()), (Some(1.5), Some(3)));

    let o = Command::new(env!("CARGO_BIN_EXE_pss")).args(["verify", "--report", r]).env("PSS_CONFIG", &cfg).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(report(&rep)["family"], "SG_eta");

    std::fs::write(&cfg, "[family]\nname = \"sg-eta\"\n").unwrap();
    assert_eq!(code(&pss(&["verify", "--config", c])), 2);
}
