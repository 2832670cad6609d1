use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cq"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("cq runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cq(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn node_count(v: &Value) -> usize {
    v["rule"]["nodes"].as_array().unwrap().len()
}

#[test]
fn two_point_gauss() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["quad", "--dist", "uniform:-1,1", "--kind", "gauss", "--n", "2"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "cq-rule/1");
    assert_eq!(v["metadata"]["command"], "cq quad --dist uniform:-1,1 --kind gauss --n 2");
    let nodes: Vec<f64> = v["rule"]["nodes"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let r = 1.0 / 3f64.sqrt();
    assert!((nodes[0] + r).abs() < 1e-15 && (nodes[1] - r).abs() < 1e-15);
}

#[test]
fn single_node_sits_at_center() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["quad", "--dist", "beta:3,3:2,6", "--kind", "gauss", "--n", "1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rule"]["nodes"][0].as_f64().unwrap(), 4.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_kind = cq(dir.path(), &["quad", "--dist", "uniform:-1,1", "--kind", "simpson", "--n", "2"]);
    assert_eq!(bad_kind.status.code(), Some(2));
    let bad_dist = cq(dir.path(), &["quad", "--dist", "gamma:1,2", "--kind", "gauss", "--n", "2"]);
    assert_eq!(bad_dist.status.code(), Some(2));
    let no_level = cq(dir.path(), &["smolyak", "--cc", "-d", "2"]);
    assert_eq!(no_level.status.code(), Some(2));
    let no_input = cq(dir.path(), &["condition"]);
    assert_eq!(no_input.status.code(), Some(2));
}

#[test]
fn symmetric_family_writes_every_member() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "uniform:-1,1", "--kind", "gauss", "--n", "9", "-o", "g9.json"]);
    ok(
        d,
        &[
            "reduce", "-i", "g9.json", "--mode", "symmetric", "--target-size", "1", "--out-dir", "fam",
            "--family-out", "family.json",
        ],
    );
    let mut sizes: Vec<usize> = std::fs::read_dir(d.join("fam"))
        .unwrap()
        .map(|e| node_count(&json(&e.unwrap().path())))
        .collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    assert_eq!(sizes, [9, 7, 5, 3, 1]);
    let family = json(&d.join("family.json"));
    assert_eq!(family["kind"], "family");
    assert_eq!(family["rule"]["nested"], true);
}

#[test]
fn asymmetric_reduction_drops_one_node_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "beta:2,5", "--kind", "gauss", "--n", "6", "-o", "b.json"]);
    let out = cq(d, &["reduce", "-i", "b.json", "--out-dir", "fam"]);
    assert!(out.status.success());
    let log = String::from_utf8(out.stderr).unwrap();
    let steps: Vec<&str> = log.lines().collect();
    assert_eq!(steps.len(), 5);
    for (i, line) in steps.iter().enumerate() {
        assert!(line.starts_with(&format!("{} -> {} nodes", 6 - i, 5 - i)), "{line}");
    }
}

#[test]
fn negative_reduction_of_cc_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "uniform:-1,1", "--kind", "cc", "--n", "9", "--dim", "2", "-o", "t.json"]);
    ok(d, &["reduce", "-i", "t.json", "--mode", "negative", "--target-degree", "9", "--out-dir", "neg"]);
    let rule = json(&d.join("neg/rule_deg9.json"));
    assert_eq!(node_count(&rule), 37);
    assert_eq!(rule["metadata"]["mode"], "negative");
}

#[test]
fn negative_mode_on_one_dimensional_rule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "uniform:-1,1", "--kind", "gauss", "--n", "5", "-o", "g.json"]);
    let out = cq(d, &["reduce", "-i", "g.json", "--mode", "negative", "--out-dir", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_reduction_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "uniform:-1,1", "--kind", "gauss", "--n", "2", "--dim", "2", "-o", "t.json"]);
    let out = cq(d, &["reduce", "-i", "t.json", "--mode", "symmetric", "--target-degree", "3", "--out-dir", "x"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn smolyak_cc_grids() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let v: Value = serde_json::from_str(&ok(d, &["smolyak", "--cc", "-K", "6", "-d", "2"])).unwrap();
    assert_eq!(node_count(&v), 65);
    let one: Value = serde_json::from_str(&ok(d, &["smolyak", "--cc", "-K", "3", "-d", "1"])).unwrap();
    assert_eq!(node_count(&one), 5);
}

#[test]
fn smolyak_from_family_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "uniform:-1,1", "--kind", "gauss", "--n", "9", "-o", "g9.json"]);
    ok(d, &["reduce", "-i", "g9.json", "--out-dir", "fam", "--family-out", "family.json"]);
    let v: Value = serde_json::from_str(&ok(d, &["smolyak", "--family", "family.json", "-K", "4", "-d", "2"])).unwrap();
    assert_eq!(v["rule"]["degree"], 5);
}

#[test]
fn counts_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["counts", "--dims", "5", "--degrees", "5"]);
    let lines: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines, ["d,K,dim,smolyak", "5,5,252,61"]);
}

#[test]
fn condition_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["quad", "--dist", "uniform:-1,1", "--kind", "gauss", "--n", "4", "-o", "g.json"]);
    let out = ok(d, &["condition", "g.json", "--smolyak-dim", "5", "--max-degree", "9"]);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows[0][0], "g.json");
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 1.0);
    let series: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(series.len(), 5);
    assert!(series.windows(2).all(|p| p[1] >= p[0]), "{series:?}");
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "benchmark", "--family", "f2", "--dim", "2", "--runs", "7", "--seed", "11", "--methods",
        "tensor,smolyak_cc,reduced_negative", "--degrees", "1,3,5",
    ];
    let one = ok(d, &[&args[..], &["--jobs", "1", "-o", "a.csv"]].concat());
    let two = ok(d, &[&args[..], &["--jobs", "4", "-o", "b.csv"]].concat());
    assert!(one.is_empty() && two.is_empty());
    let a = std::fs::read_to_string(d.join("a.csv")).unwrap();
    let b = std::fs::read_to_string(d.join("b.csv")).unwrap();
    let body = |s: &str| s.lines().filter(|l| !l.starts_with("# command")).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&a), body(&b));
    assert!(a.contains("rule_name,N_nodes,degree,mean_error\n"));

    ok(d, &["smolyak", "--cc", "-K", "5", "-d", "3", "-o", "s1.csv"]);
    ok(d, &["smolyak", "--cc", "-K", "5", "-d", "3", "-o", "s1b.csv"]);
    let s1 = std::fs::read(d.join("s1.csv")).unwrap();
    let s2 = std::fs::read(d.join("s1b.csv")).unwrap();
    assert_eq!(
        String::from_utf8_lossy(&s1).replace("s1.csv", ""),
        String::from_utf8_lossy(&s2).replace("s1b.csv", "")
    );
    let again = ok(d, &["smolyak", "--cc", "-K", "5", "-d", "3", "--format", "csv"]);
    assert_eq!(again, ok(d, &["smolyak", "--cc", "-K", "5", "-d", "3", "--format", "csv"]));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), r#"{"dist": "uniform:-1,1", "kind": "gauss", "n": 5}"#).unwrap();
    let v: Value = serde_json::from_str(&ok(d, &["quad", "--config", "c.json", "--n", "3"])).unwrap();
    assert_eq!(node_count(&v), 3);
    let out = cq(d, &["quad", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}
