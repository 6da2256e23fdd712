mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::demo_dir;
use serde_json::Value;

fn swan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swan"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn demo(file: &str) -> String {
    demo_dir().join(file).display().to_string()
}

fn demo_inputs() -> Vec<String> {
    [
        ("--schema", "schema.json"),
        ("--sessions", "sessions.jsonl"),
        ("--scores", "scores.jsonl"),
        ("--mentions", "mentions.jsonl"),
        ("--dissatisfaction", "dissatisfaction.jsonl"),
    ]
    .iter()
    .flat_map(|(flag, f)| [flag.to_string(), demo(f)])
    .collect()
}

fn with(cmd: &str, extra: &[&str]) -> Output {
    let mut args = vec![cmd.to_string()];
    args.extend(demo_inputs());
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    swan(&refs)
}

#[test]
fn validate_accepts_demo() {
    let out = with("validate", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("6 session(s)"));
}

#[test]
fn validate_lists_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let scores = fs::read_to_string(demo("golden/scores.jsonl")).unwrap();
    let bad = scores
        .replace("\"score\": 1.0", "\"score\": 1.5")
        .replace("\"n3\"", "\"n9\"");
    let path = tmp.path().join("scores.jsonl");
    fs::write(&path, bad).unwrap();
    let out = swan(&[
        "validate",
        "--schema",
        &demo("golden/schema.json"),
        "--sessions",
        &demo("golden/sessions.jsonl"),
        "--scores",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("out of [0,1]"), "{err}");
    assert!(err.contains("unresolved"), "{err}");
    assert!(
        err.contains("scores.jsonl:1"),
        "violations point at the offending line: {err}"
    );
}

#[test]
fn score_writes_all_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = with(
        "score",
        &[
            "--out",
            dir,
            "--format",
            "json,csv,markdown",
            "--top-n",
            "3",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["inputs"].as_array().unwrap().len(), 5);
    assert!(
        report["provenance"]["inputs"][0]["sha256"]
            .as_str()
            .unwrap()
            .len()
            == 64
    );
    assert!(report["decisions"]["weighting_defaults"]
        .as_str()
        .unwrap()
        .contains("L=20"));
    for w in report["sessions"]["worst"].as_array().unwrap() {
        assert!(w["contributions"].as_array().unwrap().len() <= 3);
    }
    let swan = report["sessions"]["audit"]["swan"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&swan));

    let csv = fs::read_to_string(tmp.path().join("contributions.csv")).unwrap();
    assert!(csv.starts_with("session,turn,nugget,criterion,score,weight,weighted_score\n"));
    assert!(csv.contains("B-s1-t4-harm,harmlessness,0,"));

    let md = fs::read_to_string(tmp.path().join("report.md")).unwrap();
    assert!(md.contains("| harmlessness |"));
    assert!(md.contains("Cumulative fairness"));
}

#[test]
fn compare_carries_caveat() {
    let out = with("compare", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(table["comparable"], false);
    assert_eq!(table["rows"].as_array().unwrap().len(), 6);
    let caveat = table["caveat"].as_str().unwrap();
    for r in table["rankings"].as_array().unwrap() {
        assert_eq!(r["caveat"], caveat);
    }
}

#[test]
fn paths_lists_tree_paths() {
    let out = swan(&[
        "paths",
        "--schema",
        &demo("tree/schema.json"),
        "--trees",
        &demo("tree/tree.json"),
        "--scores",
        &demo("tree/scores.jsonl"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["session_id"], "t1#a1");
    assert_eq!(lines[1]["probability"], 0.3);
}

#[test]
fn tree_score_is_expectation_over_paths() {
    let out = swan(&[
        "score",
        "--schema",
        &demo("tree/schema.json"),
        "--trees",
        &demo("tree/tree.json"),
        "--scores",
        &demo("tree/scores.jsonl"),
    ]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let wan = report["trees"][0]["audit"]["criteria"][0]["wan"]
        .as_f64()
        .unwrap();
    assert!((wan - 0.7).abs() < 1e-12);
}

#[test]
fn path_cap_is_enforced() {
    let out = swan(&[
        "score",
        "--schema",
        &demo("tree/schema.json"),
        "--trees",
        &demo("tree/tree.json"),
        "--scores",
        &demo("tree/scores.jsonl"),
        "--max-paths",
        "1",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("paths"));
}

#[test]
fn strict_undefined_fails_and_skip_drops() {
    let tmp = tempfile::tempdir().unwrap();
    let schema = tmp.path().join("schema.json");
    let mut v: Value =
        serde_json::from_str(&fs::read_to_string(demo("schema.json")).unwrap()).unwrap();
    v["criteria"][3]["derived"]["threshold"] = 1.0.into();
    fs::write(&schema, v.to_string()).unwrap();
    let args = |policy: &str| {
        let mut a = vec!["score".to_string()];
        a.extend(demo_inputs());
        a[2] = schema.display().to_string();
        a.extend(["--policy".into(), policy.into()]);
        a
    };
    let run = |a: Vec<String>| swan(&a.iter().map(String::as_str).collect::<Vec<_>>());

    let strict = run(args("strict"));
    assert_eq!(code(&strict), 1);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("recoverability"));

    let skip = run(args("skip-undefined"));
    assert_eq!(code(&skip), 0);
    let report: Value = serde_json::from_slice(&skip.stdout).unwrap();
    assert_eq!(
        report["sessions"]["audit"]["dropped_criteria"][0],
        "recoverability"
    );
}

#[test]
fn macro_aggregation_reports_components() {
    let out = with("score", &["--aggregation", "macro"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = &report["sessions"]["audit"]["criteria"][0];
    assert_eq!(c["aggregation"], "macro");
    assert_eq!(c["components"].as_array().unwrap().len(), 6);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&swan(&["score", "--bogus"])), 2);
    assert_eq!(
        code(&swan(&["score", "--sessions", &demo("sessions.jsonl")])),
        2
    );
    assert_eq!(
        code(&swan(&[
            "score",
            "--schema",
            "/nonexistent.json",
            "--sessions",
            "x"
        ])),
        2
    );
    assert_eq!(code(&swan(&["score", "--policy", "lenient"])), 2);

    let tmp = tempfile::tempdir().unwrap();
    let broken = tmp.path().join("s.jsonl");
    fs::write(&broken, "{\"session_id\": \n").unwrap();
    let out = swan(&[
        "score",
        "--schema",
        &demo("schema.json"),
        "--sessions",
        broken.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("s.jsonl:1:"));
}

#[test]
fn formats_describes_inputs() {
    let out = swan(&["formats"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for word in [
        "schema",
        "sessions",
        "trees",
        "scores",
        "mentions",
        "dissatisfaction",
    ] {
        assert!(text.contains(word));
    }
}

#[test]
fn reruns_are_byte_identical_to_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = with(
            "score",
            &[
                "--out",
                dir.to_str().unwrap(),
                "--format",
                "json,csv,markdown",
            ],
        );
        assert_eq!(code(&out), 0);
    }
    for f in ["report.json", "contributions.csv", "report.md"] {
        assert_eq!(
            fs::read(Path::new(&a).join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
