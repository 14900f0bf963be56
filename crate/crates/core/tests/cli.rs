use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odogibbs")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap_or(-1)
}

#[test]
fn exit_status_contract() {
    assert_eq!(code(&["gibbs-o", "--n-max", "4"]), 2);
    assert_eq!(code(&["vw-scan", "--samples", "0"]), 2);
    assert_eq!(code(&["pressure", "--n-max", "17"]), 2);
    assert_eq!(code(&["nonsense"]), 2);
    assert_eq!(code(&["gibbs-o", "--n-max", "8"]), 0);
    assert_eq!(code(&["gibbs-o", "--n-max", "8", "--threshold-scale", "1e9"]), 1);
    assert_eq!(code(&["measure", "--word", "bbbbbbbb", "--tolerance", "2^-60", "--depth", "14"]), 3);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn json_is_reproducible() {
    let args = ["vw-scan", "--samples", "5", "--ns", "8,16", "--seed", "17", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["meta"]["seed"], 17);
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
}

#[test]
fn measure_rows_and_out_file() {
    let path = std::env::temp_dir().join(format!("odogibbs-measure-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let out = run(&["measure", "--word", "bbbbb", "--tolerance", "2^-24", "--format", "csv", "--out", p]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("event,lo,hi,depth_used,converged"));
    assert!(lines.next().unwrap().starts_with("[bbbbb],"));
    std::fs::remove_file(path).ok();
}

#[test]
fn lemma_rows_have_stable_schema() {
    let out = run(&["lemmas", "--max-len", "32", "--n-max", "8", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["exist1", "exist2", "exists3", "calc", "beta_count"]);
    for r in rows {
        for key in ["instances", "worst_margin", "pass"] {
            assert!(r.get(key).is_some(), "{key}");
        }
    }
    // Words of length 8 and 16 with fewer than l-1 letters β exist.
    assert_eq!(rows[4]["pass"], false);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn language_counts() {
    let out = run(&["language", "--max-len", "8", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "3,7,7,128"));
    assert!(text.lines().any(|l| l == "8,41,41,1458"));
}
