//! Binary-level behavior: flag parsing, output formats, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wilsonsearch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no line starts with {key:?} in:\n{text}"))
        .strip_prefix(key)
        .unwrap()
        .trim()
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert!(help.status.success());
    let text = stdout(&help);
    for sub in [
        "search",
        "verify",
        "quotient",
        "savings",
        "stats",
        "example-paper",
        "checkpoint-inspect",
    ] {
        assert!(text.contains(sub), "help lists {sub}");
    }
    assert!(run(&["--version"]).status.success());
}

#[test]
fn parse_errors_exit_one() {
    for args in [
        &["nonsense"][..],
        &["search"][..], // --max is required
        &["search", "--max", "10", "--near-ratio", "0/5"],
        &["search", "--max", "10", "--near-ratio", "7"],
        &["search", "--max", "10", "--e-set", "2,five"],
        &["search", "--max", "10", "--e-set", "3"], // odd e is not admissible
        &["quotient", "12"],                        // composite
        &["stats", "--max", "2"],
        &["verify", "2", "--method", "sqrt"], // sqrt needs an odd prime
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn budget_errors_exit_three() {
    let out = run(&["search", "--min", "2", "--max", "2000", "--mem-bytes", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn checkpoint_errors_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bogus.ck");
    std::fs::write(&path, b"not a checkpoint at all").unwrap();
    let out = run(&["checkpoint-inspect", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn search_reports_wilson_primes_and_writes_the_residue_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("near.txt");
    let out = run(&[
        "search",
        "--min",
        "1",
        "--max",
        "600",
        "--near-ratio",
        "1/1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(line_value(&text, "wilson primes"), "5 13 563");
    assert_eq!(line_value(&text, "primes scanned"), "109");

    let file = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = file.lines();
    assert_eq!(lines.next(), Some("wilsonsearch v1"));
    let mut last_p = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 4, "line {line:?}");
        let p: u64 = fields[0].parse().unwrap();
        let w: i64 = fields[1].parse().unwrap();
        let a0: u64 = fields[2].parse().unwrap();
        let a1: u64 = fields[3].parse().unwrap();
        assert!(p > last_p, "sorted by p");
        last_p = p;
        assert_eq!(a0, p - 1);
        assert!(a1 < p);
        if p == 5 || p == 13 || p == 563 {
            assert_eq!(w, 0);
        }
    }
    assert_eq!(last_p, 599);
}

#[test]
fn search_without_out_prints_the_same_format() {
    let out = run(&["search", "--min", "1", "--max", "20", "--near-ratio", "1/1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let body = text.split_once("wilsonsearch v1\n").expect("inline file").1;
    assert!(body.lines().any(|l| l == "5 0 4 4"));
    assert!(body.lines().any(|l| l == "13 0 12 12"));
}

#[test]
fn quotient_routes_agree() {
    for method in ["tree", "naive", "sqrt"] {
        let out = run(&["quotient", "563", "--method", method]);
        assert!(out.status.success(), "method {method}");
        let text = stdout(&out);
        assert_eq!(line_value(&text, "w "), "0", "method {method}");
        assert_eq!(line_value(&text, "residue"), "562 + 562 p");
    }
}

#[test]
fn verify_agrees_on_all_routes() {
    for method in ["tree", "naive", "sqrt"] {
        let out = run(&["verify", "1093", "--method", method]);
        assert!(out.status.success(), "method {method}");
        assert!(stdout(&out).contains("route agrees"));
    }
}

#[test]
fn savings_prints_exact_ratios() {
    let full = stdout(&run(&["savings"]));
    assert_eq!(line_value(&full, "modulus Q"), "6983776800");
    assert_eq!(
        line_value(&full, "cost ratio"),
        "22695187978681/201921527808000"
    );

    let small = stdout(&run(&["savings", "--e-set", "2,4,6"]));
    assert_eq!(line_value(&small, "modulus Q"), "12");
    assert_eq!(line_value(&small, "cost ratio"), "13/48");
}

#[test]
fn stats_prints_both_estimates() {
    let out = stdout(&run(&["stats", "--max", "10"]));
    assert!(line_value(&out, "expected count").starts_with("1.17619"));
    assert!(line_value(&out, "asymptotic").starts_with("1.09"));
}

#[test]
fn checkpoint_inspect_reads_real_files() {
    let dir = tempfile::tempdir().unwrap();
    let search = run(&[
        "search",
        "--min",
        "10",
        "--max",
        "400",
        "--checkpoint-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(search.status.success());
    let a_file = std::fs::read_dir(dir.path())
        .unwrap()
        .next()
        .expect("search left checkpoints")
        .unwrap()
        .path();
    let out = run(&["checkpoint-inspect", a_file.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(Path::new(line_value(&text, "file")).exists());
    assert_eq!(line_value(&text, "config hash").len(), 64);
    assert_eq!(line_value(&text, "interval"), "(10, 400]");
}
