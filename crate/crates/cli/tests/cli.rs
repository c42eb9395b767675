use std::process::{Command, Output};

use serde_json::Value;

fn mecdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mecdyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn lamp_box_cardinality() {
    let doc = json_of(&mecdyn(&["folner", "--family", "lamp_box", "--n", "4", "--stat", "cardinality"]));
    // (n + 1) · 2^(n + 1) elements: n + 1 shifts times every lamp pattern on n + 1 sites.
    assert_eq!(doc["result"]["rows"][0]["value"]["exact"], (5 * 32).to_string());
    assert_eq!(doc["config"]["family"], "lamp_box");
    assert_eq!(doc["config"]["stat"], "cardinality");
}

#[test]
fn initial_segment_defects_are_reciprocals() {
    let out = mecdyn(&["folner", "--family", "z_initial", "--window", "3:6", "--stat", "defect", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next(), Some("n,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows, ["3,1/3", "4,1/4", "5,1/5", "6,1/6"]);
}

#[test]
fn two_point_reproduces() {
    let out = mecdyn(&["reproduce", "two-point", "--profile", "quick", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["status"] == "MATCH"), "{rows:?}");
    assert_eq!(doc["config"]["profile"], "quick");
}

#[test]
fn lamplighter_ends_are_matched_sensitive() {
    let args = ["detect", "srjms-f", "--gallery", "lamplighter", "--pair", "up_inf,down_inf"];
    let first = mecdyn(&args);
    let doc = json_of(&first);
    assert_eq!(doc["result"]["verdict"], "POSITIVE");
    assert_eq!(doc["result"]["kind"], "SRJMS_F");
    assert!(doc["config"]["seed"].is_u64());
    assert!(doc["config"]["parameters"]["radii"].is_array());
    // Same config, same bytes.
    assert_eq!(first.stdout, mecdyn(&args).stdout);
}

#[test]
fn the_seed_is_echoed() {
    let doc = json_of(&mecdyn(&[
        "detect", "qrms-f", "--gallery", "two-point", "--pair", "-inf@1,+inf@1", "--seed", "7",
    ]));
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["config"]["parameters"]["grid"]["seed"], 7);
}

/// `(1 + s/(1 + |s|)) / 2` as a fraction.
fn position(s: i64) -> (i64, i64) {
    let (num, den) = (1 + s.abs() + s, 2 * (1 + s.abs()));
    let g = gcd(num, den);
    (num / g, den / g)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn exact_averages_in_csv() {
    let out = mecdyn(&[
        "avg", "--gallery", "two-point", "--pair", "0@1,-inf@1", "--window", "1:1", "--exact", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(2).unwrap();
    let (num, den) = position(0);
    assert!(row.starts_with(&format!("1,1,{num}/{den},")), "{row}");
}

#[test]
fn empirical_measure_weights() {
    let doc = json_of(&mecdyn(&["measure", "--gallery", "two-point", "--start", "0@1", "--n", "4"]));
    let atoms = doc["result"]["measure"]["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 4);
    assert!(atoms.iter().all(|a| a["weight"]["exact"] == "1/4"));
}

#[test]
fn three_glued_hull_joins_every_limit_point() {
    let doc = json_of(&mecdyn(&["icer", "--gallery", "three-glued"]));
    let blocks = doc["result"]["blocks"].as_array().unwrap();
    let big: Vec<&Value> = blocks.iter().filter(|b| b.as_array().unwrap().len() > 1).collect();
    assert_eq!(big.len(), 1);
    assert_eq!(big[0].as_array().unwrap().len(), 4);
}

#[test]
fn output_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("mecdyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.json");
    let args = ["folner", "--family", "z_centered", "--n", "3", "--stat", "elements"];
    let to_file = mecdyn(&[&args[..], &["--output", path.to_str().unwrap()]].concat());
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let printed = json_of(&mecdyn(&args));
    assert_eq!(written["result"], printed["result"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["bogus"][..],
        &["folner", "--family", "z_initial", "--n", "0"],
        &["folner", "--family", "no_such_family", "--n", "3"],
        &["detect", "srjms-f", "--gallery", "nowhere", "--pair", "up_inf,down_inf"],
        &["detect", "swsm-f", "--gallery", "two-point", "--pair", "0@1,0@1"],
        &["avg", "--gallery", "two-point", "--pair", "0@1", "--window", "5:1"],
    ] {
        assert_eq!(mecdyn(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn budget_errors_exit_with_three() {
    let out = mecdyn(&["folner", "--family", "lamp_box", "--n", "30", "--stat", "elements"]);
    assert_eq!(out.status.code(), Some(3));
    let out = mecdyn(&["reproduce", "lamplighter", "--max-elements", "100"]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["result"]["rows"].as_array().unwrap().iter().all(|r| r["budget_exceeded"] == true));
}

#[test]
fn table_output_echoes_the_config() {
    let out = mecdyn(&["reproduce", "literature-dock", "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# gallery: literature-dock"));
    assert!(text.contains("0 MISMATCH"));
}
