use std::path::Path;
use std::process::{Command, Output};

use scorewin::cli::manifest_path;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scorewin"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn fig3_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.csv", "b.csv"] {
        let o = run(d, &["fig3", "--runs", "10", "--seed", "1", "--out", name]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        std::fs::read(d.join("a.csv")).unwrap(),
        std::fs::read(d.join("b.csv")).unwrap()
    );
}

#[test]
fn missing_mdp_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["solve", "--mdp", "missing.json", "--reward", "score"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("missing.json"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn fig4_has_one_row_per_bin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(
        d,
        &[
            "fig4", "--plus", "outcome", "--bins", "100", "--runs", "2000", "--seed", "1", "--out",
            "f4.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.join("f4.csv")).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text.lines().next(), Some("x_low,x_high,count,aggregate"));
}

#[test]
fn usage_and_parameter_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(d, &["fig3", "--bogus", "--out", "x.csv"]).status.code(),
        Some(2)
    );
    let o = run(d, &["fig3", "--runs", "0", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    assert_eq!(
        run(d, &["gen-mdp", "--branch", "1", "--out", "m.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_mdp_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("bad.json"),
        r#"{"branch": 2, "depth": 1, "num_actions": 2}"#,
    )
    .unwrap();
    let o = run(d, &["solve", "--mdp", "bad.json", "--reward", "outcome"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("leaf_scores"), "{}", stderr(&o));
}

#[test]
fn manifest_records_parameters_and_digests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(
        d,
        &[
            "fig4", "--runs", "50", "--seed", "3", "--out", "f.csv", "--svg", "f.svg",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(d.join(manifest_path(Path::new("f.csv")))).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "fig4");
    assert_eq!(manifest["base_seed"], 3);
    assert_eq!(manifest["parameters"]["branch"], 2);
    assert_eq!(manifest["parameters"]["depth"], 6);
    assert_eq!(manifest["parameters"]["actions"], 2);
    assert_eq!(manifest["parameters"]["plus"], "outcome");
    let outputs = manifest["outputs"].as_object().unwrap();
    assert_eq!(outputs.len(), 2);
    assert!(outputs.values().all(|h| h.as_str().unwrap().len() == 64));

    let svg = std::fs::read_to_string(d.join("f.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(!svg.contains("href") && !svg.contains("url("));
}

#[test]
fn pipeline_from_generated_mdp() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(
        d,
        &["gen-mdp", "--depth", "3", "--seed", "4", "--out", "m.json"]
    )
    .status
    .success());
    assert!(d.join("m.json.manifest.json").exists());

    let o = run(
        d,
        &[
            "solve",
            "--mdp",
            "m.json",
            "--reward",
            "score",
            "--out",
            "s.json",
            "--policy-out",
            "p.json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(s["v"].as_array().unwrap().len(), 15);
    assert_eq!(s["policy"].as_array().unwrap().len(), 7);
    let p: Vec<usize> =
        serde_json::from_str(&std::fs::read_to_string(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(p.len(), 7);

    let o = run(
        d,
        &[
            "mcts-match",
            "--mdp",
            "m.json",
            "--visits-a",
            "20",
            "--reward-a",
            "score",
            "--visits-b",
            "20",
            "--reward-b",
            "outcome",
            "--episodes",
            "30",
            "--seed",
            "1",
            "--out",
            "match.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.join("match.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("episode,agent,score,outcome"));
    assert_eq!(text.lines().count(), 61);
}

#[test]
fn bandit_scan_and_elo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(d, &["bandit-scan", "--out", "b.csv"]).status.success());
    let text = std::fs::read_to_string(d.join("b.csv")).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("mu1,sigma1,mu2,sigma2,score_pref,outcome_pref,disagree")
    );
    assert_eq!(text.lines().count(), 1 + 12 * 11 * 16 * 16);
    assert!(text.contains("2,4,1,1,1,2,true"));

    std::fs::write(
        d.join("g.csv"),
        "player_i,player_j,wins_ij,wins_ji\nA,B,75,25\n",
    )
    .unwrap();
    std::fs::write(d.join("a.csv"), "player,elo\nA,0\n").unwrap();
    let o = run(
        d,
        &[
            "elo",
            "--games",
            "g.csv",
            "--anchors",
            "a.csv",
            "--out",
            "r.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let b: f64 = text.lines().find(|l| l.starts_with("B,")).unwrap()[2..]
        .parse()
        .unwrap();
    assert!((b + 400.0 * 3f64.log10()).abs() < 0.01);

    std::fs::write(
        d.join("g.csv"),
        "player_i,player_j,wins_ij,wins_ji\nA,B,10,0\n",
    )
    .unwrap();
    let o = run(
        d,
        &[
            "elo",
            "--games",
            "g.csv",
            "--anchors",
            "a.csv",
            "--out",
            "r.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        d,
        &[
            "elo",
            "--games",
            "g.csv",
            "--anchors",
            "a.csv",
            "--out",
            "r.csv",
            "--virtual-games",
            "0.5",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}
