use std::process::{Command, Output};

fn pathvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathvar"))
        .args(args)
        .env_remove("VG_SEED")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = pathvar(&a);
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn check_fpar_is_full_rank() {
    let out = pathvar(&["check", "catalog:fpar", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("NotVariational/FullRank"));
    assert!(text.contains("rank:    6/6"));
    assert!(text.contains("witness: {"));

    let j = json(&["check", "catalog:fpar", "--n", "3"]);
    assert_eq!(j["verdict"], "NotVariational/FullRank");
    assert_eq!(j["rank"], 6);
    assert!(j["witness"]["y1"]["num"].is_string());
    assert!(j["witness"]["y1"]["den"].is_string());
}

#[test]
fn check_flat_is_inconclusive() {
    let j = json(&["check", "catalog:flat", "--n", "3"]);
    assert_eq!(j["verdict"], "Inconclusive");
    assert_eq!(j["kernel_dim"], 6);
}

#[test]
fn check_fpa2_is_forced_degenerate() {
    let j = json(&["check", "catalog:fpa2", "--n", "4"]);
    assert_eq!(j["verdict"], "NotVariational/ForcedDegenerate");
    assert_eq!(j["vanishing"], serde_json::json!(["phi11", "phi12", "phi13", "phi14"]));
}

#[test]
fn verify_passes_for_catalog_lagrangians() {
    let out = pathvar(&["verify", "catalog:egorov-lin", "--lagrangian", "catalog"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = pathvar(&["verify", "catalog:submax", "--lagrangian", "catalog", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn verify_fails_for_the_wrong_lagrangian() {
    let out = pathvar(&["verify", "catalog:egorov-lin", "--lagrangian", "free-quadratic"]);
    assert_eq!(out.status.code(), Some(1));
    let j = json(&["verify", "catalog:egorov-lin", "--lagrangian", "free-quadratic"]);
    assert_eq!(j["pass"], false);
    let failing: Vec<_> = j["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["result"]["verdict"] == "Nonzero")
        .collect();
    assert!(!failing.is_empty());
    assert!(failing[0]["result"]["witness"].is_object());
}

#[test]
fn lagrangian_file_is_accepted() {
    let dir = std::env::temp_dir().join(format!("pathvar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("l.txt");
    std::fs::write(&path, "[header]\nkind = lagrangian\nn = 3\n[body]\nL = (dy1 - x*y2)*dy2 + dy3^2\n").unwrap();
    let out = pathvar(&["verify", "catalog:egorov-lin", "--lagrangian", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = pathvar(&["homogenize", path.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kind = homlagrangian"));
    assert!(text.contains("SymbolicZero"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(pathvar(&["check", "catalog:nope"]).status.code(), Some(2));
    assert_eq!(pathvar(&["check", "/definitely/missing.txt"]).status.code(), Some(2));

    let dir = std::env::temp_dir().join(format!("pathvar-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.txt");
    std::fs::write(&path, "[header]\nkind = ode\nn = 2\n[body]\nf1 = y1 +\nf2 = 0\n").unwrap();
    let out = pathvar(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":5:"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sampling_failure_exits_3() {
    let dir = std::env::temp_dir().join(format!("pathvar-cli-sing-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sing.txt");
    std::fs::write(&path, "[header]\nkind = ode\nn = 2\n[body]\nf1 = ln(-(y1^2) - 1)\nf2 = 0\n").unwrap();
    let out = pathvar(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_is_deterministic_per_seed() {
    let a = pathvar(&["check", "catalog:egorov", "--n", "3", "--seed", "9", "--format", "json"]);
    let b = pathvar(&["check", "catalog:egorov", "--n", "3", "--seed", "9", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let c = pathvar(&["check", "catalog:egorov", "--n", "3", "--seed", "10", "--format", "json"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn vg_seed_overrides_the_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_pathvar"))
        .args(["check", "catalog:fpar", "--n", "3", "--seed", "1", "--format", "json"])
        .env("VG_SEED", "42")
        .output()
        .unwrap();
    let j: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(j["seed"], 42);
}

#[test]
fn convexity_on_kropina_finds_an_indefinite_witness() {
    let j = json(&["convexity", "catalog:kropina", "--trials", "100"]);
    let m = &j["members"][0];
    assert_eq!(m["summary"], "indefinite");
    assert!(m["witness"]["u0"].is_object());
}

#[test]
fn reduce2_recovers_the_first_order_lagrangian() {
    let j = json(&["reduce2", "catalog:reduce2"]);
    assert_eq!(j["potential"], "x1*u1*u2");
    assert_eq!(j["reduced"], "u0^2 + x0*u1*u2 - u1^2*u2");
    assert_eq!(j["certificate"]["result"]["verdict"], "SymbolicZero");
}

#[test]
fn dehomogenize_and_hessian() {
    let out = pathvar(&["dehomogenize", "catalog:kropina", "--n", "3"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("kind = lagrangian"));
    let j = json(&["hessian", "catalog:distinguished"]);
    assert_eq!(j["det"], "-(y1 - dy2)^(-4)");
}
