use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn skirmish(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skirmish"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = skirmish(dir, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}\n{}", stderr(&o));
    stdout(&o)
}

fn maps_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/maps")
}

fn quick_tournament(dir: &Path, out: &str) {
    ok(
        dir,
        &["tournament", "--agent", "rules", "--agent", "random", "--fights", "4", "--shared-seeds", "--logs", "--out", out],
    );
}

#[test]
fn short_training_run_writes_its_outputs() {
    let tmp = TempDir::new().unwrap();
    let text = ok(tmp.path(), &["train", "--iterations", "10", "--maps", "plain", "--out", "run", "--progress", "5"]);
    assert!(text.contains("trained 10 iterations"));
    let run = tmp.path().join("run");
    for f in ["checkpoint.json", "rewards.csv", "manifest.json"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(run.join("rewards.csv")).unwrap();
    assert!(csv.starts_with("iteration,mean_reward\n"));
    assert_eq!(csv.lines().count(), 11);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn training_config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("train.toml"), "iterations = 50\nmaps = [\"plain\"]\nseed = 4\n").unwrap();
    ok(tmp.path(), &["train", "--config", "train.toml", "--iterations", "3", "--out", "run"]);
    let csv = fs::read_to_string(tmp.path().join("run/rewards.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let manifest = fs::read_to_string(tmp.path().join("run/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 4"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["train", "--bogus"][..],
        &["train", "--iterations", "many"],
        &["train", "--adversary", "mixed", "--iterations", "1"],
        &["tournament", "--agent", "rules"],
        &["tournament", "--agent", "x=nonsense", "--agent", "rules"],
        &["plot", "--window", "0", "a.csv"],
        &["frobnicate"],
    ] {
        let o = skirmish(tmp.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}\n{}", stderr(&o));
    }
    assert_eq!(skirmish(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_the_training_defaults() {
    let tmp = TempDir::new().unwrap();
    let help = ok(tmp.path(), &["train", "--help"]);
    for needle in [
        "[default: 1000]",
        "[default: 1024]",
        "[default: 64]",
        "[default: 3000]",
        "[default: 0.001]",
        "[default: 0.99]",
        "[default: 1.0]",
        "[default: 0.01]",
        "[default: 500]",
        "[default: 0.2]",
    ] {
        assert!(help.contains(needle), "missing {needle}");
    }
}

#[test]
fn tournament_writes_tables_and_logs() {
    let tmp = TempDir::new().unwrap();
    quick_tournament(tmp.path(), "t");
    let t = tmp.path().join("t");
    let matrix = fs::read_to_string(t.join("matrix.txt")).unwrap();
    assert!(matrix.contains("4/0/0"), "{matrix}");
    let board = fs::read_to_string(t.join("leaderboard.csv")).unwrap();
    assert!(board.lines().nth(1).unwrap().starts_with("1,rules,"));
    let fights = fs::read_to_string(t.join("fights.csv")).unwrap();
    assert_eq!(fights.lines().count(), 9);
    assert_eq!(fs::read_dir(t.join("logs")).unwrap().count(), 4);
    assert!(t.join("manifest.json").is_file());
}

#[test]
fn roster_file_and_checkpoint_agent() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["train", "--iterations", "2", "--maps", "plain", "--out", "agent"]);
    fs::write(
        tmp.path().join("roster.toml"),
        "[[agent]]\nid = \"rules\"\nkind = \"rules\"\n\n[[agent]]\nid = \"dqn\"\nkind = \"dqn_checkpoint\"\nparams = { path = \"agent/checkpoint.json\" }\n",
    )
    .unwrap();
    let text = ok(tmp.path(), &["tournament", "--roster", "roster.toml", "--fights", "2", "--out", "t"]);
    assert!(text.contains("dqn"));
    let missing = skirmish(
        tmp.path(),
        &["tournament", "--agent", "rules", "--agent", "gone=dqn_checkpoint:path=nope.json", "--fights", "2", "--out", "t2"],
    );
    assert_eq!(missing.status.code(), Some(0));
    assert!(stderr(&missing).contains("nope.json"));
}

#[test]
fn replay_verifies_logged_fights() {
    let tmp = TempDir::new().unwrap();
    quick_tournament(tmp.path(), "t");
    let mut logs: Vec<PathBuf> = fs::read_dir(tmp.path().join("t/logs")).unwrap().map(|e| e.unwrap().path()).collect();
    logs.sort();
    for log in &logs {
        let text = ok(tmp.path(), &["replay", log.to_str().unwrap(), "--quiet"]);
        assert!(text.trim_end().ends_with("verified"), "{text}");
    }
    let full = ok(tmp.path(), &["replay", logs[0].to_str().unwrap()]);
    assert!(full.contains("(P) vs") && full.contains("turn 1 (round"));
    let one = ok(tmp.path(), &["replay", logs[0].to_str().unwrap(), "--turn", "1"]);
    assert!(one.starts_with("turn 1 (round"));
    assert_eq!(one.matches("turn ").count(), 1);
    let none = skirmish(tmp.path(), &["replay", logs[0].to_str().unwrap(), "--turn", "99999"]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn damaged_logs_exit_two() {
    let tmp = TempDir::new().unwrap();
    quick_tournament(tmp.path(), "t");
    let log = fs::read_dir(tmp.path().join("t/logs")).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(&log).unwrap();
    fs::write(tmp.path().join("cut.jsonl"), &text[..text.len() / 2]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let dropped = [&lines[..1], &lines[2..]].concat().join("\n");
    fs::write(tmp.path().join("dropped.jsonl"), dropped).unwrap();
    for f in ["cut.jsonl", "dropped.jsonl", "absent.jsonl"] {
        let o = skirmish(tmp.path(), &["replay", f]);
        assert_eq!(o.status.code(), Some(2), "{f}: {}", stdout(&o));
        assert!(stderr(&o).starts_with("error: "));
    }
}

#[test]
fn plot_overlays_curves() {
    let tmp = TempDir::new().unwrap();
    fs::create_dir(tmp.path().join("a")).unwrap();
    fs::write(tmp.path().join("a/rewards.csv"), "iteration,mean_reward\n0,-5\n1,0\n2,5\n").unwrap();
    fs::write(tmp.path().join("b.csv"), "iteration,mean_reward\n0,1\n1,2\n").unwrap();
    let text = ok(tmp.path(), &["plot", "a/rewards.csv", "b.csv", "--window", "1", "--svg", "out.svg"]);
    assert!(text.contains("  * a\n") && text.contains("  + b\n"));
    let svg = fs::read_to_string(tmp.path().join("out.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    fs::write(tmp.path().join("empty.csv"), "").unwrap();
    fs::write(tmp.path().join("header.csv"), "iteration,mean_reward\n").unwrap();
    fs::write(tmp.path().join("nan.csv"), "iteration,mean_reward\n0,NaN\n").unwrap();
    for f in ["empty.csv", "header.csv", "nan.csv", "missing.csv"] {
        assert_eq!(skirmish(tmp.path(), &["plot", f]).status.code(), Some(2), "{f}");
    }
}

#[test]
fn bundled_maps_validate_and_broken_ones_do_not() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["validate-map".to_string(), "--quiet".to_string()];
    for e in fs::read_dir(maps_dir()).unwrap() {
        args.push(e.unwrap().path().display().to_string());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let text = ok(tmp.path(), &refs);
    assert_eq!(text.matches(": ok, ").count(), args.len() - 2);
    fs::write(tmp.path().join("ragged.map"), "...\n..\n").unwrap();
    let o = skirmish(tmp.path(), &["validate-map", "ragged.map"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ragged.map"));
}

#[test]
fn same_seed_same_files() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        ok(tmp.path(), &["train", "--iterations", "5", "--maps", "plain,wall", "--seed", "9", "--out", &format!("train-{out}")]);
        quick_tournament(tmp.path(), &format!("tour-{out}"));
    }
    let read = |p: &str| fs::read(tmp.path().join(p)).unwrap();
    for f in ["checkpoint.json", "rewards.csv"] {
        assert_eq!(read(&format!("train-a/{f}")), read(&format!("train-b/{f}")), "{f}");
    }
    for f in ["matrix.csv", "leaderboard.csv", "fights.csv"] {
        assert_eq!(read(&format!("tour-a/{f}")), read(&format!("tour-b/{f}")), "{f}");
    }
    let mut logs: Vec<_> = fs::read_dir(tmp.path().join("tour-a/logs")).unwrap().map(|e| e.unwrap().file_name()).collect();
    logs.sort();
    for name in logs {
        let name = name.to_string_lossy();
        assert_eq!(read(&format!("tour-a/logs/{name}")), read(&format!("tour-b/logs/{name}")));
    }
}
