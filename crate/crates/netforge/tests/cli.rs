use std::path::Path;
use std::process::{Command, Output};

fn netforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netforge"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn netforge")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_verify_score() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = netforge(d, &["generate", "--profile", "small", "--seed", "1", "-o", "inst.json"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("10 compressed actions"), "{}", stdout(&o));

    let o = netforge(d, &["verify", "inst.json"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.starts_with("valid objective "), "{line}");

    // An empty topology is disconnected and scores the penalty.
    std::fs::write(d.join("empty.json"), "{\"schema_version\": 1, \"n\": 8, \"edges\": []}").unwrap();
    let o = netforge(d, &["verify", "inst.json", "empty.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("invalid "), "{}", stdout(&o));
    let o = netforge(d, &["score", "inst.json", "empty.json"]);
    assert_eq!(stdout(&o).trim(), "-10");
}

#[test]
fn bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = netforge(d, &["verify", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));

    std::fs::write(d.join("bad.json"), "{\"schema_version\": 1, \"nodes\": [").unwrap();
    assert_eq!(netforge(d, &["verify", "bad.json"]).status.code(), Some(1));

    let o = netforge(d, &["generate", "--profile", "small", "--seed", "1", "-o", "inst.json"]);
    assert!(o.status.success());
    std::fs::write(d.join("short.json"), "{\"schema_version\": 1, \"n\": 3, \"edges\": []}").unwrap();
    assert_eq!(netforge(d, &["score", "inst.json", "short.json"]).status.code(), Some(1));

    assert_eq!(netforge(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(netforge(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn brute_force_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(netforge(d, &["generate", "--profile", "small", "--seed", "0", "-o", "inst.json"]).status.success());
    let o = netforge(d, &["optimize", "inst.json", "--method", "brute", "--trials", "5", "--out", "runs/brute"]);
    assert!(o.status.success(), "{o:?}");
    for f in ["report.json", "best_topology.json", "timings.csv"] {
        assert!(d.join("runs/brute").join(f).is_file(), "{f}");
    }
    let best: f64 = stdout(&netforge(d, &["score", "inst.json", "runs/brute/best_topology.json"]))
        .trim()
        .parse()
        .unwrap();
    assert!(stdout(&o).contains(&format!("best {best}")), "{} vs {best}", stdout(&o));

    let o = netforge(d, &["report", "runs", "-o", "summary.csv"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(d.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}
