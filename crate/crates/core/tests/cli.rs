use std::fs;
use std::process::{Command, Output};

fn stackgda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stackgda")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_examples_passes() {
    let o = stackgda(&["verify-examples"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).matches("PASS").count(), 4);
}

#[test]
fn kkt_prints_multipliers() {
    let o = stackgda(&["kkt", "--a", "1,2", "--b", "0,1", "--c", "2,3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.5 1");
    let bad = stackgda(&["kkt", "--a", "1", "--b", "0", "--c", "0"]);
    assert!(!bad.status.success());
}

#[test]
fn solve_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = stackgda(&[
        "solve", "--game", "lgda-cycle", "--alg", "lgda", "--iters", "4", "--eta", "1", "--x0", "1", "--y0", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[2].starts_with("1,-1,-1,"), "{}", rows[2]);
}

#[test]
fn unknown_game_and_bad_config_fail() {
    assert!(!stackgda(&["solve", "--game", "nope"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"num_markets": 0}"#).unwrap();
    let o = stackgda(&["experiment", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("num_markets"));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"utility_classes": ["cobb-douglas"], "num_markets": 1, "master_seed": 1,
            "cobb_douglas": {"horizon": 20, "eta_price": 1.0, "eta_alloc": 0.01, "delta": 0.0}}"#,
    )
    .unwrap();
    let run = |seed: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_stackgda"));
        cmd.args(["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        match seed {
            Some(s) => cmd.env("STACKGDA_SEED", s),
            None => cmd.env_remove("STACKGDA_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        fs::read_to_string(out.join("config.json")).unwrap()
    };
    assert!(run(None, "a").contains("\"master_seed\": 1,"));
    assert!(run(Some("77"), "b").contains("\"master_seed\": 77,"));
}
