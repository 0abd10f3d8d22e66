use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sndp")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn ecsndp_solves_the_theta_graph() {
    let theta = fixture("theta.txt");
    let out = json(&run(&["solve-ecsndp", theta.to_str().unwrap()]));
    assert_eq!(out["cost"], "3");
}

#[test]
fn vcsndp_solves_the_cycle() {
    let cycle = fixture("cycle_vc.txt");
    let out = json(&run(&["solve-vcsndp", cycle.to_str().unwrap()]));
    assert_eq!(out["cost"], "2");
}

#[test]
fn oracle_matches_the_exact_solver() {
    let theta = fixture("theta.txt");
    let out = json(&run(&["oracle", theta.to_str().unwrap()]));
    assert_eq!(out["cost"], "3");
}

#[test]
fn rounding_is_reproducible_and_exports_the_lp() {
    let groups = fixture("groups.txt");
    let dir = std::env::temp_dir().join(format!("sndp-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let lp = dir.join("tree.lp");
    let args = ["approx-rgsndp", groups.to_str().unwrap(), "--seed", "3", "--lp-export", lp.to_str().unwrap()];
    let first = run(&args);
    let second = run(&args);
    json(&first);
    assert_eq!(first.stdout, second.stdout);
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Minimize"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn generated_csps_are_deterministic() {
    let args = ["gen-csp", "--vars", "2", "--domain", "2", "--constraints", "2", "--seed", "1"];
    let a = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, run(&args).stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("p csp 2 2 2 2"));
}

#[test]
fn malformed_input_fails_with_a_message() {
    let dir = std::env::temp_dir().join(format!("sndp-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "p rgsndp 2 1 1 1 edge edge\ne 0 5 1\n").unwrap();
    let out = run(&["solve-ecsndp", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
    std::fs::remove_dir_all(&dir).unwrap();
}
