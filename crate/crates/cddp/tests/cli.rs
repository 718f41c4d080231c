use std::path::Path;
use std::process::{Command, Output};

use cddp::io::write_instance;
use cddp::lpfile::read_lp;
use cddp::report::Table;
use cddp_core::testbed::tiny_instance;

fn cddp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cddp")).args(args).current_dir(dir).env_remove("CDDP_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn table(o: &Output) -> Table {
    Table::parse_csv(&stdout(o)).unwrap()
}

#[test]
fn generate_prints_the_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let t = table(&cddp(&["generate", "--nodes", "8", "--doors", "4", "--seed", "7", "--out", "i1.json", "--format", "csv"], dir.path()));
    assert_eq!(t.rows, [["i1", "5", "4", "4", "8-8", "8-8"]]);
    let o = cddp(&["generate", "--nodes", "10", "--doors", "5", "--out", "i2.json"], dir.path());
    assert!(o.status.success());
    let t = table(&cddp(&["merge", "i1.json", "i2.json", "--out", "i3.json", "--format", "csv"], dir.path()));
    assert_eq!(t.rows, [["i3", "10", "5", "5", "8-10", "8-10"]]);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cddp"))
        .args(["generate", "--nodes", "4", "--doors", "2", "--out", "env.json"])
        .env("CDDP_SEED", "11")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(cddp(&["generate", "--nodes", "4", "--doors", "2", "--seed", "11", "--out", "arg.json"], dir.path()).status.success());
    assert!(cddp(&["generate", "--nodes", "4", "--doors", "2", "--seed", "12", "--out", "other.json"], dir.path()).status.success());
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("env.json"), read("arg.json"));
    assert_ne!(read("env.json"), read("other.json"));
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cddp(&["generate", "--nodes", "4", "--doors", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(cddp(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(cddp(&["generate", "--nodes", "4", "--doors", "2", "--density", "3", "--out", "x.json"], dir.path()).status.code(), Some(2));

    std::fs::write(dir.path().join("bad.json"), r#"{"schema": "cddp-ts/1", "strip_doors": []}"#).unwrap();
    let o = cddp(&["dims", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stack_doors"));
    assert_eq!(cddp(&["dims", "missing.json"], dir.path()).status.code(), Some(3));

    write_instance(&dir.path().join("t.json"), &tiny_instance(1)).unwrap();
    assert_eq!(cddp(&["scs4b", "t.json", "--rho", "1.5"], dir.path()).status.code(), Some(2));
    assert_eq!(cddp(&["scs4b", "t.json", "--kappa", "0"], dir.path()).status.code(), Some(2));
    let o = cddp(&["solve-omega", "t.json", "--scenario", "0", "--design", "d.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dims_reproduce_the_benchmark_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cddp(&["generate", "--nodes", "8", "--doors", "4", "--seed", "1", "--out", "i1.json"], dir.path()).status.success());
    let t = table(&cddp(&["dims", "i1.json", "--clusters", "--kappa", "3", "--format", "csv"], dir.path()));
    let row: Vec<&str> = ["m", "n01", "nc", "nz", "clusters", "largest_cluster", "m_c", "n01_c", "nc_c", "nz_c"]
        .iter()
        .map(|c| t.cell(0, c).unwrap())
        .collect();
    assert_eq!(row, ["3410", "450", "8000", "20360", "2", "3", "2050", "286", "4800", "12248"]);
}

#[test]
fn export_writes_a_readable_lp_file() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(&dir.path().join("t.json"), &tiny_instance(2)).unwrap();
    assert!(cddp(&["export-lip", "t.json", "--out", "t.lp"], dir.path()).status.success());
    let text = std::fs::read_to_string(dir.path().join("t.lp")).unwrap();
    assert!(!read_lp(&text).unwrap().rows.is_empty());
    let o = cddp(&["export-lip", "t.json", "--out", "c.lp", "--cluster", "1", "--part", "strip", "--kappa", "1"], dir.path());
    assert!(o.status.success());
    assert!(read_lp(&std::fs::read_to_string(dir.path().join("c.lp")).unwrap()).is_ok());
}

fn num(t: &Table, col: &str) -> Option<f64> {
    t.cell(0, col).filter(|s| !s.is_empty()).map(|s| s.parse().unwrap())
}

#[test]
fn reports_recompute_from_their_raw_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut checked = 0;
    for seed in 0..12 {
        write_instance(&dir.path().join("t.json"), &tiny_instance(seed)).unwrap();
        let o = cddp(
            &["scs4b", "t.json", "--kappa", "all", "--both-bounds", "--oracle", "--reference-value", "1000", "--no-times", "--report", "r.csv", "--format", "csv"],
            dir.path(),
        );
        let out = stdout(&o);
        assert_eq!(std::fs::read_to_string(dir.path().join("r.csv")).unwrap(), out);
        let t = Table::parse_csv(&out).unwrap();
        let Some(ub) = num(&t, "ub") else { continue };
        let lb = num(&t, "lb_split").unwrap().max(num(&t, "lb_full").unwrap());
        assert_eq!(t.cell(0, "gap_pct").unwrap(), format!("{:.4}", 100.0 * (ub - lb) / ub));
        assert_eq!(t.cell(0, "gr").unwrap(), format!("{:.4}", ub / 1000.0));
        // a single exactly solved cluster gives the optimum of the kept scenarios
        let z = num(&t, "z_star").unwrap();
        assert!((num(&t, "lb_full").unwrap() - z).abs() <= 1e-6 * z.max(1.0), "seed {seed}");
        assert!(ub >= z - 1e-6 * z.max(1.0));
        checked += 1;
    }
    assert!(checked >= 6, "only {checked} runs had an incumbent");
}

#[test]
fn repeated_runs_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cddp(&["generate", "--nodes", "4", "--doors", "2", "--seed", "3", "--out", "g.json"], dir.path()).status.success());
    let args = |report: &'static str, trials: &'static str| {
        vec!["scs4b", "g.json", "--both-bounds", "--node-limit", "200", "--no-times", "--report", report, "--trials", trials]
    };
    assert!(cddp(&args("a.csv", "ta.csv"), dir.path()).status.success());
    assert!(cddp(&args("b.csv", "tb.csv"), dir.path()).status.success());
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("ta.csv"), read("tb.csv"));
}

#[test]
fn scenario_solve_reads_a_design_file() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cddp(&["generate", "--nodes", "3", "--doors", "2", "--seed", "5", "--out", "g.json"], dir.path()).status.success());
    std::fs::write(dir.path().join("d.json"), r#"{"schema": "cddp-design/1", "strip": [5, 5], "stack": [5, 5]}"#).unwrap();
    let t = table(&cddp(&["solve-omega", "g.json", "--scenario", "2", "--design", "d.json", "--format", "csv", "--solution", "a.json"], dir.path()));
    assert_eq!(t.cell(0, "method"), Some("exact"));
    assert_eq!(t.cell(0, "status"), Some("optimal"));
    assert_eq!(t.cell(0, "out"), Some("0"));
    let a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(a["origins"].as_array().unwrap().len(), 3);
}
