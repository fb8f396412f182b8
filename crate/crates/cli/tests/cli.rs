use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scanforge"))
        .args(args)
        .env_remove("SCANFORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn qa_respects_per_type() {
    let room = fixture("scenes/kitchen_door.json");
    let text = ok(&["qa", "--room", s(&room), "--per-type", "2", "--seed", "5"]);
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty() && lines.len() <= 18, "{} lines", lines.len());
    for l in lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["scene_id"], "kitchen-door");
    }
}

#[test]
fn orbit_scan_writes_72_frames() {
    let house = fixture("scenes/two_room_house.json");
    let text = ok(&["scan", "--room", s(&house), "--room-id", "living", "--mode", "orbit"]);
    assert_eq!(text.lines().count(), 72);
}

#[test]
fn nav_scan_writes_two_trajectories() {
    let room = fixture("scenes/kitchen_door.json");
    let text = ok(&["scan", "--room", s(&room), "--mode", "nav", "--seed", "1"]);
    assert_eq!(text.lines().count(), 2 * 72);
}

#[test]
fn eval_of_gold_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let room = fixture("scenes/kitchen_door.json");
    ok(&["qa", "--room", s(&room), "--out", s(&gold)]);
    let preds: String = std::fs::read_to_string(&gold)
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let value = match &v["answer"] {
                serde_json::Value::String(t) => serde_json::Value::String(t.clone()),
                n => n.clone(),
            };
            format!("{}\n", serde_json::json!({"qa_id": v["qa_id"], "value": value}))
        })
        .collect();
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(&pred, preds).unwrap();
    let report: serde_json::Value = serde_json::from_str(&ok(&["eval", "--pred", s(&pred), "--gold", s(&gold)])).unwrap();
    assert_eq!(report["overall"].as_f64(), Some(1.0));
}

#[test]
fn usage_errors_exit_1_and_data_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["scan", "--mode", "orbit"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = run(&["qa", "--room", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"scene_id\": 3}").unwrap();
    assert_eq!(run(&["qa", "--room", s(&bad)]).status.code(), Some(2));

    let house = fixture("scenes/two_room_house.json");
    // two rooms and no --room-id
    assert_eq!(run(&["qa", "--room", s(&house)]).status.code(), Some(2));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 9, "per_type": 1}"#).unwrap();
    let room = fixture("scenes/kitchen_door.json");
    let r = s(&room);

    let from_config = ok(&["qa", "--room", r, "--config", s(&cfg)]);
    assert_eq!(from_config, ok(&["qa", "--room", r, "--seed", "9", "--per-type", "1"]));

    let overridden = ok(&["qa", "--room", r, "--config", s(&cfg), "--seed", "4"]);
    assert_eq!(overridden, ok(&["qa", "--room", r, "--seed", "4", "--per-type", "1"]));
    assert_ne!(overridden, from_config);

    let defaults = ok(&["qa", "--room", r]);
    assert_eq!(defaults, ok(&["qa", "--room", r, "--seed", "0", "--per-type", "3"]));

    std::fs::write(&cfg, r#"{"sead": 9}"#).unwrap();
    assert_eq!(run(&["qa", "--room", r, "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn lenient_accepts_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("scenes/kitchen_door.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["rooms"][0]["lighting"] = "warm".into();
    let scene = dir.path().join("extra.json");
    std::fs::write(&scene, v.to_string()).unwrap();
    assert_eq!(run(&["qa", "--room", s(&scene)]).status.code(), Some(2));
    ok(&["qa", "--room", s(&scene), "--lenient"]);
}

#[test]
fn disassemble_with_filter_keeps_only_the_bedroom() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["disassemble", "--scene", s(&fixture("scenes/filter_mix.json")), "--out", s(dir.path()), "--filter"]);
    assert_eq!(out.lines().count(), 1);
    let files = read_tree(dir.path());
    assert_eq!(files.len(), 1);
    let scene: serde_json::Value = serde_json::from_slice(&files[0].1).unwrap();
    assert_eq!(scene["rooms"][0]["room_type"], "bedroom");

    let all = tempfile::tempdir().unwrap();
    ok(&["disassemble", "--scene", s(&fixture("scenes/filter_mix.json")), "--out", s(all.path())]);
    assert_eq!(read_tree(all.path()).len(), 3);
}

#[test]
fn cognition_map_feeds_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.json");
    let room = fixture("scenes/kitchen_door.json");
    ok(&["cognition", "--room", s(&room), "--repr", "map3d", "--out", s(&map)]);
    for repr in ["map3d", "grid2d", "description"] {
        let text = ok(&["cognition", "--map", s(&map), "--repr", repr]);
        assert!(serde_json::from_str::<serde_json::Value>(&text).is_ok(), "{repr}");
    }
    let q = "How far is the refrigerator from the microwave in meters?";
    let prompt = ok(&["prompt", "--question", q, "--map", s(&map), "--repr", "description"]);
    assert!(prompt.contains(q));
    assert!(prompt.contains("[Reasoning Steps]"));
    let bundle: serde_json::Value =
        serde_json::from_str(&ok(&["prompt", "--question", q, "--map", s(&map), "--json"])).unwrap();
    assert_eq!(bundle["plan"]["category"], "absolute_distance");
    assert_eq!(run(&["prompt", "--question", "What colour is it?", "--map", s(&map)]).status.code(), Some(2));
}

#[test]
fn pipeline_runs_are_byte_identical() {
    let scenes = [fixture("scenes/two_room_house.json"), fixture("scenes/filter_mix.json"), fixture("scenes/kitchen_door.json")];
    let mut trees = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["pipeline", "--out", s(dir.path()), "--threads", threads, "--seed", "17"];
        for sc in &scenes {
            args.extend(["--scene", s(sc)]);
        }
        ok(&args);
        trees.push(read_tree(dir.path()));
    }
    assert!(trees[0].iter().any(|(p, _)| p.ends_with("dataset.jsonl")));
    assert!(trees[0].iter().any(|(p, _)| p.ends_with("manifest.json")));
    assert_eq!(trees[0], trees[1]);
}
