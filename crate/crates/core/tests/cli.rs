mod common;

use std::fs;
use std::path::Path;

use common::{fixtures, path_str, sofix};
use serde_json::Value;

fn extract(dir: &Path, name: &str, worker: Option<&str>) -> (std::process::Output, std::path::PathBuf) {
    let out = dir.join(name);
    let pipeline = fixtures().join("pipeline");
    let output = sofix(
        &[
            "extract",
            "--posts",
            path_str(&pipeline.join("posts.jsonl")),
            "--blocks",
            path_str(&pipeline.join("blocks.jsonl")),
            "--out",
            path_str(&out),
            "--workers",
            "2",
        ],
        worker,
    );
    (output, out)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(sofix::manifest::sidecar_path(out)).unwrap()).unwrap()
}

#[test]
fn extract_finds_the_hand_counted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, out_a) = extract(dir.path(), "a.jsonl", None);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let (b, out_b) = extract(dir.path(), "b.jsonl", None);
    assert_eq!(b.status.code(), Some(0));
    let bytes = fs::read(&out_a).unwrap();
    assert_eq!(bytes, fs::read(&out_b).unwrap());

    let ids: Vec<String> = String::from_utf8(bytes)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["pair_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["1-1-1-2", "3-1-2-3", "4-2-1-2"]);

    let m = manifest(&out_a);
    assert_eq!(
        m["filter_counts"],
        serde_json::json!({
            "total_code_blocks": 24, "tag_matched": 20, "ast_parseable": 10,
            "prior_version_exists": 6, "prior_version_parse_error": 3,
        })
    );
    assert_eq!(m["interpreter_version"], "3.6-stub");
    assert_eq!(m["command"], "extract");
    let table = String::from_utf8(a.stdout).unwrap();
    assert!(table.contains("24") && table.contains("3 pairs"), "{table}");
}

#[test]
fn extract_reports_bad_input_and_missing_worker() {
    let dir = tempfile::tempdir().unwrap();
    let missing = sofix(
        &["extract", "--posts", "/nonexistent/posts.jsonl", "--blocks", "/nonexistent/b", "--out", path_str(&dir.path().join("o"))],
        None,
    );
    assert_eq!(missing.status.code(), Some(1));

    let (no_worker, _) = extract(dir.path(), "c.jsonl", Some("/nonexistent/sofix-worker"));
    assert_eq!(no_worker.status.code(), Some(2), "{}", String::from_utf8_lossy(&no_worker.stderr));
}

#[test]
fn empty_dump_needs_no_worker() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = dir.path().join("blocks.jsonl");
    fs::write(&blocks, "").unwrap();
    let out = dir.path().join("pairs.jsonl");
    let run = sofix(
        &[
            "extract",
            "--posts",
            path_str(&fixtures().join("pipeline/posts.jsonl")),
            "--blocks",
            path_str(&blocks),
            "--out",
            path_str(&out),
        ],
        Some("/nonexistent/sofix-worker"),
    );
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read(&out).unwrap(), b"");
    let counts = &manifest(&out)["filter_counts"];
    assert!(counts.as_object().unwrap().values().all(|v| v == 0), "{counts}");
}

#[test]
fn validate_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pairs) = extract(dir.path(), "pairs.jsonl", None);
    let v1 = dir.path().join("v1.jsonl");
    let v2 = dir.path().join("v2.jsonl");
    for (input, out) in [(&pairs, &v1), (&v1, &v2)] {
        let run = sofix(&["validate", "--pairs", path_str(input), "--out", path_str(out), "--timeout-secs", "2"], None);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let strip = |p: &Path| -> Vec<Value> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: Value = serde_json::from_str(l).unwrap();
                v["runtime_outcome"]["duration_ms"] = Value::Null;
                v
            })
            .collect()
    };
    let first = strip(&v1);
    assert_eq!(first, strip(&v2));
    assert_eq!(first.len(), 3);
    assert!(first.iter().all(|p| p["runtime_outcome"]["status"] == "no_error"), "{first:?}");
}

#[test]
fn stats_writes_csv_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pairs) = extract(dir.path(), "pairs.jsonl", None);
    let run = sofix(&["stats", "--pairs", path_str(&pairs), "--table", "kind", "--out-dir", path_str(dir.path())], None);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(dir.path().join("kind.csv")).unwrap();
    assert!(csv.starts_with("label,count,fraction\n"), "{csv}");
    assert!(csv.contains("SyntaxError,2,") && csv.contains("IndentationError,1,"), "{csv}");
    assert!(dir.path().join("kind.md").exists());
}

fn compare(dist: &str, extra: &[&str]) -> (Option<i32>, Option<Value>) {
    let counts = fixtures().join("runtime_counts.csv");
    let mut args = vec!["compare", "--observed", path_str(&counts), "--dist", dist];
    args.extend_from_slice(extra);
    let run = sofix(&args, None);
    (run.status.code(), serde_json::from_slice(&run.stdout).ok())
}

#[test]
fn published_runtime_counts_differ_from_student_errors() {
    for (dist, df) in [("builtin:mit", 5), ("builtin:cscircles", 4)] {
        let (code, json) = compare(dist, &[]);
        assert_eq!(code, Some(0));
        let json = json.unwrap();
        assert_eq!(json["df"], df);
        assert_eq!(json["n"], 62965);
        assert!(json["p_value"].as_f64().unwrap() < 0.01, "{json}");
    }
}

#[test]
fn compare_rejects_unusable_tests() {
    assert_eq!(compare("builtin:mit", &["--no-mapping"]).0, Some(3));
    assert_eq!(compare("builtin:nowhere", &[]).0, Some(1));
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    fs::write(&zero, r#"{"name": "z", "categories": [{"label": "NameError", "p": 1.0}, {"label": "other", "p": 0.0}]}"#).unwrap();
    assert_eq!(compare(path_str(&zero), &["--no-mapping"]).0, Some(3));
}

#[test]
fn audit_sample_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pairs) = extract(dir.path(), "pairs.jsonl", None);
    let mut sheets = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let run = sofix(&["audit", "--pairs", path_str(&pairs), "--sample", "2", "--seed", "5", "--out-dir", path_str(&out)], None);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
        sheets.push((fs::read(out.join("audit.md")).unwrap(), fs::read(out.join("verdicts.csv")).unwrap()));
    }
    assert_eq!(sheets[0], sheets[1]);
    let over = sofix(&["audit", "--pairs", path_str(&pairs), "--sample", "4", "--out-dir", path_str(dir.path())], None);
    assert_eq!(over.status.code(), Some(1));
}

#[test]
fn interval_from_counts() {
    let run = sofix(&["interval", "--successes", "2", "--trials", "100"], None);
    assert_eq!(run.status.code(), Some(0));
    let ci: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert!((ci["lo"].as_f64().unwrap() - 0.00243).abs() < 1e-4);
    assert!((ci["hi"].as_f64().unwrap() - 0.07038).abs() < 1e-4);
    assert_eq!(sofix(&["interval", "--successes", "5", "--trials", "4"], None).status.code(), Some(1));
}

#[test]
fn mutate_is_seeded_and_reports_partial_runs() {
    let dir = tempfile::tempdir().unwrap();
    let snippets = dir.path().join("snippets.jsonl");
    fs::write(&snippets, "\"x = 1\\n\"\n{\"code\": \"def f(a):\\n    return a\\n\"}\n").unwrap();
    let mut outputs = Vec::new();
    for (name, workers) in [("a.csv", "1"), ("b.csv", "3")] {
        let out = dir.path().join(name);
        let run = sofix(
            &["mutate", "--snippets", path_str(&snippets), "--kind", "replace", "--seed", "3", "--trials", "300", "--workers", workers, "--out", path_str(&out)],
            None,
        );
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
        outputs.push(fs::read(&out).unwrap());
        let m = manifest(&out);
        assert_eq!((m["kind"].as_str(), m["seed"].as_u64(), m["trials"].as_u64()), (Some("replace"), Some(3), Some(300)));
        assert_eq!(m["snippet_count"], 2);
        assert!(m.get("partial").is_none());
    }
    assert_eq!(outputs[0], outputs[1]);

    let script = dir.path().join("script.json");
    fs::write(&script, r#"{"rules": [{"action": "parse", "contains": "x 1", "do": "crash"}]}"#).unwrap();
    let out = dir.path().join("partial.csv");
    let run = sofix(
        &["mutate", "--snippets", path_str(&snippets), "--kind", "delete", "--exhaustive", "--trials", "10", "--out", path_str(&out)],
        Some(&common::stub_command(Some(&script))),
    );
    assert_eq!(run.status.code(), Some(2));
    let m = manifest(&out);
    assert!(m["partial"].is_string());
    assert_eq!(m["trials"], 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sofix(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(sofix(&["mutate", "--kind", "swap", "--snippets", "x", "--out", "y"], None).status.code(), Some(1));
    assert_eq!(sofix(&["--help"], None).status.code(), Some(0));
}
