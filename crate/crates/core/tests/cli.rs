use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knapsack-auction")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn run_into(dir: &Path, scenario: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", scenario, "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn bundled_runs_succeed_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), "example1", &[]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("flags {1,0,1,0,0,1,0,1,0}"), "{text}");
    assert!(text.contains("winning price 450"));

    let results = dir.path().join("results.json");
    let trace = dir.path().join("trace.jsonl");
    let ok = run(&["verify", results.to_str().unwrap(), trace.to_str().unwrap()]);
    assert_eq!(code(&ok), 0);

    let tampered = fs::read_to_string(&results).unwrap().replace("\"winning_price\":450", "\"winning_price\":500");
    fs::write(&results, tampered).unwrap();
    let bad = run(&["verify", results.to_str().unwrap(), trace.to_str().unwrap()]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for name in ["example1", "example2", "table1"] {
        assert_eq!(code(&run_into(a.path(), name, &[])), 0);
        assert_eq!(code(&run_into(b.path(), name, &[])), 0);
        for file in ["results.json", "trace.jsonl"] {
            let x = fs::read(a.path().join(file)).unwrap();
            let y = fs::read(b.path().join(file)).unwrap();
            assert_eq!(x, y, "{name} {file}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_into(dir.path(), "no-such-scenario", &[])), 1);

    let malformed = dir.path().join("bad.json");
    fs::write(&malformed, "{\"auction\": ").unwrap();
    assert_eq!(code(&run_into(dir.path(), malformed.to_str().unwrap(), &[])), 2);

    assert_eq!(code(&run_into(dir.path(), "example1", &["--strict"])), 3);

    let void = dir.path().join("void.json");
    fs::write(
        &void,
        r#"{
  "auction": { "auction_id": "v", "prices": [1, 2, 3] },
  "bidders": [ { "id": "A", "price": 2, "fault": { "fault": "withdraw_before_bid" } } ],
  "seed": 3
}"#,
    )
    .unwrap();
    let out = run_into(dir.path(), void.to_str().unwrap(), &[]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("failure"));
}

#[test]
fn export_csv_kinds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_into(dir.path(), "example1", &[])), 0);
    let trace = dir.path().join("trace.jsonl");
    let out = run(&["export-csv", trace.to_str().unwrap(), "--kind", "bids-vs-prices"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "{text}");
    assert!(rows.iter().all(|r| r.ends_with(",1")), "{text}");

    let table = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_into(table.path(), "table1", &["--csv", "timestamps"])), 0);
    let csv = fs::read_to_string(table.path().join("timestamps.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6, "{csv}");

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = run(&["export-csv", empty.to_str().unwrap(), "--kind", "timestamps"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn tiebreak_and_clock_attack() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    fs::write(&table, knapsack_auction::scenario::TABLE1_CSV).unwrap();
    let out = run(&["tiebreak", table.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("120"));

    let out = run(&["ntp-attack", "--delay-ms", "30000"]);
    let text = stdout(&out);
    assert!(text.contains("= 15000 ms"), "{text}");
    assert!(text.contains("= -14500 ms"), "{text}");
}
