use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn memlang(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memlang"))
        .args(args)
        .current_dir(dir)
        .env("MEMLANG_THREADS", "2")
        .output()
        .expect("failed to start memlang")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn figure_one_has_five_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = memlang(dir.path(), &["figures", "--fig", "1", "--out", "fig1.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "curve_id,delta,tau,q2_normalized");
    let mut ids: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    ids.dedup();
    assert_eq!(ids, ["markov", "trunc1", "trunc2", "trunc3", "exact"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig1.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["fig"], 1);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_kernel_names_valid_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = memlang(dir.path(), &["simulate", "--kernel", "cauchy"]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.starts_with("memlang: error[config]:"), "{msg}");
    for k in ["sharp", "exponential", "gaussian", "lorentzian"] {
        assert!(msg.contains(k), "{msg}");
    }
}

#[test]
fn truncated_sharp_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = memlang(dir.path(), &["simulate", "--integrator", "truncated:2", "--kernel", "sharp"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn ill_posed_truncation_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = memlang(
        dir.path(),
        &["simulate", "--integrator", "truncated:3", "--n-traj", "4", "--t-end", "0.1"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("memlang: error[numeric]:"));
}

#[test]
fn unknown_json_keys_and_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"kernel": "gaussian", "colour": "blue"}"#).unwrap();
    let o = memlang(dir.path(), &["simulate", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
    let o = memlang(dir.path(), &["analytic", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_json_and_manifest_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"kernel": "gaussian", "omega": 5.0, "n_traj": 40, "t_end": 2.0, "dt": 0.01, "seed": 3}"#,
    )
    .unwrap();
    let o = memlang(
        dir.path(),
        &["simulate", "--config", "run.json", "--seed", "11", "--integrator", "full", "--out", "a.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["config"]["kernel"], "gaussian");
    assert_eq!(manifest["seed"], 11);

    let o = memlang(dir.path(), &["simulate", "--config", "a.csv.manifest.json", "--out", "b.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,tau,Q_mean,Q_var,Q_var_stderr,v_mean,v_var");
    assert_eq!(lines.len(), 1 + 3);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--n-traj", "150", "--t-end", "1", "--integrator", "markov"];
    let one = memlang(dir.path(), &[&args[..], &["--threads", "1", "--out", "one.csv"]].concat());
    let two = memlang(dir.path(), &[&args[..], &["--threads", "3", "--out", "two.csv"]].concat());
    assert!(one.status.success() && two.status.success());
    assert_eq!(
        fs::read(dir.path().join("one.csv")).unwrap(),
        fs::read(dir.path().join("two.csv")).unwrap()
    );
}

#[test]
fn every_subcommand_writes_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["kernels", "--n-points", "5"], "kind,omega,quantity,arg,value"),
        (
            &["validate-fdt", "--n-paths", "50", "--n-steps", "64"],
            "kind,lag_time,target,estimate,stderr,z_score",
        ),
        (&["analytic", "--curves", "markov,exact", "--tau-max", "1"], "curve_id,delta,tau,q2_normalized"),
        (
            &["oracle", "--n-modes", "128", "--omega", "2", "--t-end", "0.5", "--n-traj", "4"],
            "t,tau,Q_mean,Q_var,Q_var_stderr,v_mean,v_var",
        ),
    ];
    for (args, header) in cases {
        let o = memlang(dir.path(), &[args, &["--out", "x.csv"]].concat());
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        let text = fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(data_lines(&text)[0], header, "{args:?}");
        assert!(data_lines(&text).len() > 1);
    }
}

#[test]
fn oracle_rejects_coarse_bath() {
    let dir = tempfile::tempdir().unwrap();
    let o = memlang(dir.path(), &["oracle", "--n-modes", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 100 modes"), "{}", stderr(&o));
}

#[test]
fn help_lists_units() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["kernels", "validate-fdt", "simulate", "oracle", "analytic", "figures"] {
        let o = memlang(dir.path(), &[sub, "--help"]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("--out"), "{sub}");
        if sub != "figures" {
            assert!(text.contains('['), "{sub}: no units in help");
        }
    }
}
