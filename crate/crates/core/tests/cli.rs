mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ppmine::privacy_analysis::{TABLE1_REFERENCE, TABLE1_TOLERANCE};

fn ppmine<P: AsRef<Path>>(dir: P, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppmine")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn sample_path() -> String {
    common::fixture("basket8.txt").to_string_lossy().into_owned()
}

#[test]
fn mine_lists_example_itemsets() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppmine(&dir, &["mine", "-i", &sample_path(), "--s-min", "0.375"]);
    assert!(o.status.success());
    let expect = "5/8 0\n5/8 1\n6/8 3\n4/8 4\n4/8 0 3\n4/8 1 3\n3/8 1 4\n";
    assert_eq!(stdout(&o), expect);
}

#[test]
fn anonymize_with_unit_ratio_doubles_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppmine(&dir, &["anonymize", "-i", &sample_path(), "--scheme", "fs", "--w", "1", "--seed", "7", "-o", "out.txt"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(dir.path().join("out.txt")).unwrap();
    let db = ppmine::market_basket::load_db(bytes.as_slice(), None).unwrap().db;
    assert_eq!(db.len(), 16);
}

#[test]
fn randomized_commands_require_seed() {
    let dir = tempfile::tempdir().unwrap();
    let f = sample_path();
    let cases: [&[&str]; 4] = [
        &["anonymize", "-i", &f, "--scheme", "fs"],
        &["synth", "--n-items", "10", "--n-transactions", "5", "--avg-len", "2"],
        &["attack", "-i", &f, "--mode", "random"],
        &["table3"],
    ];
    for args in cases {
        let o = ppmine(&dir, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error kind=config code=2 msg="), "{err}");
        assert!(err.contains("--seed"), "{err}");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let f = sample_path();
    for run in ["a", "b"] {
        let db = format!("{run}.txt");
        let side = format!("{run}.prov");
        let o = ppmine(&dir, &["anonymize", "-i", &f, "--scheme", "hs", "--w", "2", "--p", "0.8", "--seed", "99", "-o", &db, "--provenance", &side]);
        assert!(o.status.success());
        let o = ppmine(&dir, &["synth", "--n-items", "40", "--n-transactions", "300", "--avg-len", "3", "--zipf", "1.0", "--seed", "5", "-o", &format!("{run}.syn")]);
        assert!(o.status.success());
    }
    for ext in ["txt", "prov", "syn"] {
        let a = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{ext}");
    }
}

#[test]
fn privacy_grid_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppmine(&dir, &["privacy", "--table1", "--limit", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    for (row, reference) in rows.iter().zip(TABLE1_REFERENCE) {
        let cells: Vec<f64> = row.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 10);
        for (c, r) in cells.iter().zip(reference) {
            assert!((c - r).abs() <= TABLE1_TOLERANCE, "{c} vs {r}");
        }
    }
    let o = ppmine(&dir, &["table1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn equivalent_ratio_query() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppmine(&dir, &["privacy", "--target", "0.95", "--p-r-ps", "0.3"]);
    assert_eq!(stdout(&o), "target=0.95\nfs_w=19\nhs_w=5\n");
}

#[test]
fn failures_leave_no_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0 1\n2 x\n").unwrap();
    let o = ppmine(&dir, &["anonymize", "-i", bad.to_str().unwrap(), "--scheme", "fs", "--seed", "1", "-o", "out.txt", "--provenance", "out.prov"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("error kind=data code=3 msg="), "{err}");
    assert!(err.contains("line 2"), "{err}");
    let left: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("bad.txt")]);

    let o = ppmine(&dir, &["mine", "-i", &sample_path(), "--scheme", "fs", "--s-min", "0.3", "-o", "m.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("m.txt").exists());
}

#[test]
fn anonymize_then_mine_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = ppmine(&dir, args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    run(&["synth", "--n-items", "30", "--n-transactions", "3000", "--avg-len", "3", "--zipf", "1.0", "--seed", "2", "-o", "db.txt"]);
    run(&["anonymize", "-i", "db.txt", "--scheme", "fs", "--w", "2", "--l", "3", "--seed", "3", "-o", "fs.txt", "--provenance", "fs.prov"]);
    let mined = run(&["mine", "-i", "fs.txt", "--scheme", "fs", "--w", "2", "--l", "3", "--s-min", "0.05"]);
    assert!(mined.lines().count() > 3);
    let eval = run(&["evaluate", "--original", "db.txt", "--anonymized", "fs.txt", "--scheme", "fs", "--w", "2", "--l", "3", "--s-min", "0.05"]);
    assert!(eval.contains("sigma_plus="));
    assert!(eval.contains("transaction_ratio="));
    assert!(!eval.contains("mining_time_ratio"));
    let attack = run(&["attack", "-i", "fs.txt", "--provenance", "fs.prov", "--mode", "random", "--trials", "200", "--seed", "4", "--steps-csv", "steps.csv"]);
    assert!(attack.contains("empirical_privacy="));
    assert_eq!(fs::read_to_string(dir.path().join("steps.csv")).unwrap().lines().count(), 3001);
    let guided = run(&["attack", "-i", "fs.txt", "--provenance", "fs.prov", "--mode", "guided", "--prior", "db.txt", "--seed", "4"]);
    assert!(guided.contains("gamma_achieved="));
    let stats = run(&["stats", "-i", "fs.txt", "--format", "csv"]);
    assert!(stats.starts_with("n_items,"));
}

#[test]
fn table3_pipeline_reports_privacy_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppmine(&dir, &["table3", "--seed", "1", "--s-mins", "0.005", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let privacy: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(privacy, ["0.667", "0.800", "0.833", "0.900"]);
}
