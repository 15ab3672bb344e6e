//! The `stdqa` binary end to end: exit codes, determinism and the
//! train → generate → import → ask workflow.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use stdqa_core::fixtures::{
    group_pairs, jb4732_records, ner_corpus, JB4732_KB, SAFETY_VALVE_QUERY, STD_CORPUS,
};
use stdqa_core::ner::to_jsonl;

fn stdqa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stdqa"))
        .current_dir(dir)
        .env_remove("QA_CONFIG")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_pairs(path: &Path) {
    let lines: String = group_pairs(&jb4732_records(), 0, 1)
        .iter()
        .map(|p| serde_json::to_string(p).unwrap() + "\n")
        .collect();
    fs::write(path, lines).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdqa(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(
        stdqa(dir.path(), &["train-sim", "--data", "x.jsonl"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        stdqa(dir.path(), &["ask", "--question", "安全阀?"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(stdqa(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdqa(
        dir.path(),
        &["train-sim", "--data", "missing.jsonl", "--out", "m.ckpt"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    // serve refuses to start rather than listening without models
    let out = stdqa(
        dir.path(),
        &[
            "serve",
            "--bind",
            "127.0.0.1:0",
            "--kb",
            "kb.json",
            "--sim-model",
            "nope.ckpt",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.ckpt"));
}

#[test]
fn train_sim_histories_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_pairs(&dir.path().join("pairs.jsonl"));
    for run in ["a", "b"] {
        let args = [
            "train-sim",
            "--data",
            "pairs.jsonl",
            "--epochs",
            "20",
            "--seed",
            "7",
            "--embed-dim",
            "8",
            "--hidden",
            "8",
            "--out",
            &format!("{run}.ckpt"),
            "--history",
            &format!("{run}.json"),
        ];
        ok(&stdqa(dir.path(), &args));
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.ckpt")).unwrap(),
        fs::read(dir.path().join("b.ckpt")).unwrap()
    );
    let history: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(history["epochs"].as_array().unwrap().len(), 20);

    let eval = ok(&stdqa(
        dir.path(),
        &["eval", "--sim-model", "a.ckpt", "--data", "pairs.jsonl"],
    ));
    let eval: Value = serde_json::from_str(&eval).unwrap();
    assert!((0.0..=1.0).contains(&eval["accuracy"].as_f64().unwrap()));
}

#[test]
fn train_ner_then_generate_writes_flange_pair() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tagged.jsonl"), to_jsonl(&ner_corpus())).unwrap();
    fs::write(dir.path().join("std.txt"), STD_CORPUS).unwrap();
    ok(&stdqa(
        dir.path(),
        &[
            "train-ner",
            "--data",
            "tagged.jsonl",
            "--out",
            "ner.ckpt",
            "--history",
            "ner.json",
        ],
    ));
    let history: Value =
        serde_json::from_slice(&fs::read(dir.path().join("ner.json")).unwrap()).unwrap();
    assert_eq!(
        history["epochs"].as_array().unwrap().last().unwrap()["token_accuracy"],
        1.0
    );
    let args = [
        "generate",
        "--corpus",
        "std.txt",
        "--ner",
        "ner.ckpt",
        "--out",
        "pairs.jsonl",
        "--doc",
        "JB4732",
        "--entities",
        "entities.jsonl",
    ];
    ok(&stdqa(dir.path(), &args));
    let pairs = fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    let flange: Value = pairs
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .find(|p| p["answer"] == "对焊法兰")
        .expect("flange pair");
    assert_eq!(
        flange["question"],
        "本规定不适用于什么产品类别的颈部过渡段?"
    );
    assert_eq!(flange["source"]["section"], "5.1.2");
    assert_eq!(
        fs::read_to_string(dir.path().join("entities.jsonl"))
            .unwrap()
            .lines()
            .count(),
        5
    );

    // Generated pairs import straight into a store.
    let out = ok(&stdqa(
        dir.path(),
        &["import", "--kb", "kb.json", "pairs.jsonl"],
    ));
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["added"], 10);
}

#[test]
fn import_and_ask_through_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fixture.json"), JB4732_KB).unwrap();
    let args = [
        "train-sim",
        "--from-kb",
        "fixture.json",
        "--batch-size",
        "8",
        "--seed",
        "7",
        "--out",
        "sim.ckpt",
    ];
    ok(&stdqa(dir.path(), &args));
    let out = ok(&stdqa(
        dir.path(),
        &["import", "--kb", "kb.json", "fixture.json"],
    ));
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["added"], 27);

    let out = ok(&stdqa(
        dir.path(),
        &[
            "ask",
            "--kb",
            "kb.json",
            "--model",
            "sim.ckpt",
            "--question",
            SAFETY_VALVE_QUERY,
            "--top-k",
            "3",
        ],
    ));
    let resp: Value = serde_json::from_str(&out).unwrap();
    let candidates = resp["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 3);
    assert_eq!(candidates[0]["source"]["section"], "E.6.3");

    fs::write(
        dir.path().join("qa.toml"),
        "kb = \"kb.json\"\nsim_model = \"sim.ckpt\"\ntop_k_cap = 2\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stdqa"))
        .current_dir(dir.path())
        .env("QA_CONFIG", dir.path().join("qa.toml"))
        .env("RUST_LOG", "warn")
        .args(["ask", "--question", SAFETY_VALVE_QUERY])
        .output()
        .unwrap();
    let resp: Value = serde_json::from_str(&ok(&out)).unwrap();
    assert_eq!(resp["candidates"].as_array().unwrap().len(), 2);
    assert_eq!(resp["top_k_clamped"], true);
}
