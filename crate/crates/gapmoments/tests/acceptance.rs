//! Acceptance gate for the whole crate.
//!
//! `suites_run_clean_at_full_scale` executes every verification suite against
//! full-size prime tables and prints one pass/fail line per criterion.  The
//! build fails on any *surprise*: a check failing that is not one of the two
//! documented discrepancies, a documented discrepancy that silently starts
//! passing (stale documentation), or a check disappearing from a suite.
//!
//! The remaining tests drive the installed binary end to end and pin the
//! command-line contract: the exact CSV header, bit-identical value columns
//! across thread counts, the manifest written alongside every artifact, and
//! the exit-code mapping (0 success, 1 suite failure, 2 usage, 3 domain).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gapmoments::calib::Calibration;
use gapmoments::cli::CSV_HEADER;
use gapmoments::tables::PrimeTables;
use gapmoments::verify::{run_all, SuiteReport, SUITE_NAMES};

/// Every check each suite must report, in order.  Keeping the roster explicit
/// here means a check cannot be dropped or renamed without this gate noticing.
const EXPECTED_CHECKS: &[(&str, &[&str])] = &[
    (
        "exact",
        &[
            "centered-singletons-vanish",
            "first-moment-vanishes",
            "small-moments-match-bruteforce",
            "decomposition-round-trips",
            "residue-routes-agree",
            "circle-triple-identity",
            "abel-2d-reconstruction",
            "convolution-identities",
            "s-function-anchor",
            "majorant-integral-closed-form",
        ],
    ),
    (
        "sharp",
        &[
            "pair-moment-residual-bound",
            "gallagher-ratio-band",
            "s-function-class-average-gap",
            "pair-oracle-error-bars",
        ],
    ),
    (
        "trend",
        &[
            "triple-moment-drift",
            "even-moment-desk-band",
            "cubic-moment-desk-band",
            "triple-count-desk-band",
            "sieve-throughput",
            "variance-bound-flat",
            "average-residual-shape",
        ],
    ),
    ("circle", &["circle-triple-identity"]),
    (
        "determinism",
        &[
            "kernel-sum-thread-invariant",
            "window-split-thread-invariant",
            "variance-thread-invariant",
        ],
    ),
    (
        "calibration",
        &[
            "kappa-pair-moment-stable",
            "kappa-restricted-envelope-stable",
            "kappa-dirichlet-gap-stable",
            "kappa-variance-bound-stable",
            "kappa-average-shape-stable",
        ],
    ),
];

/// The two checks that encode known discrepancies between the implemented
/// quantities and their claimed asymptotics.  They must keep failing, with
/// `documented_failure` set, until the underlying mathematics is revisited.
const DOCUMENTED_FAILURES: &[(&str, &str)] = &[
    ("sharp", "s-function-class-average-gap"),
    ("trend", "triple-moment-drift"),
];

#[test]
fn suites_run_clean_at_full_scale() {
    let tables = PrimeTables::build(1 << 20).expect("prime tables");
    let cal = Calibration::builtin();
    let reports = run_all(&tables, &cal).expect("all suites run to completion");

    for report in &reports {
        for line in report.lines() {
            println!("{line}");
        }
        println!(
            "-- suite {}: {}/{} passed in {:.2}s",
            report.suite,
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len(),
            report.seconds
        );
    }

    let order: Vec<&str> = reports.iter().map(|r| r.suite).collect();
    assert_eq!(order, SUITE_NAMES, "run_all must cover every suite in order");

    for (suite, expected) in EXPECTED_CHECKS {
        let report = find(&reports, suite);
        let got: Vec<&str> = report.checks.iter().map(|c| c.name).collect();
        assert_eq!(&got, expected, "check roster changed in suite {suite}");
    }

    let mut failures: Vec<(String, String, bool)> = Vec::new();
    for report in &reports {
        for c in &report.checks {
            if !c.passed {
                failures.push((report.suite.to_string(), c.name.to_string(), c.documented_failure));
            }
        }
    }
    let surprises: Vec<_> = failures.iter().filter(|f| !f.2).collect();
    assert!(surprises.is_empty(), "surprise failures: {surprises:?}");

    let failed: Vec<(&str, &str)> = failures
        .iter()
        .map(|(s, n, _)| (s.as_str(), n.as_str()))
        .collect();
    assert_eq!(
        failed, DOCUMENTED_FAILURES,
        "the set of failing checks must match the documented discrepancies exactly"
    );
}

fn find<'a>(reports: &'a [SuiteReport], suite: &str) -> &'a SuiteReport {
    reports
        .iter()
        .find(|r| r.suite == suite)
        .unwrap_or_else(|| panic!("suite {suite} missing from run_all"))
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gapmoments"))
}

fn write_config(dir: &Path, table_limit: u64) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, format!("table_limit = {table_limit}\n")).expect("write config");
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn gapmoments binary");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gate(name: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] cli/{name}: {detail}");
    assert!(passed, "cli/{name}: {detail}");
}

/// Strip the wall-clock `seconds` column; every other column is covered by
/// the bit-identity contract.
fn value_columns(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 7, "csv rows carry exactly seven fields: {line}");
            fields[..6].join(",")
        })
        .collect()
}

#[test]
fn csv_value_columns_are_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = write_config(dir.path(), 65_536);

    let mut outputs: Vec<String> = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("rk-{threads}.csv"));
        run_ok(binary().args([
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
            "rk",
            "--k",
            "3",
            "--h",
            "512,1024,2048",
        ]));
        outputs.push(std::fs::read_to_string(&out).expect("read csv"));
    }
    let header = outputs[0].lines().next().expect("header row");
    gate(
        "csv-header-pinned",
        header == CSV_HEADER,
        &format!("first row is {header:?}"),
    );
    gate(
        "rk-thread-invariance",
        value_columns(&outputs[0]) == value_columns(&outputs[1]),
        "rk --k 3 value columns identical under 1 and 3 threads",
    );

    let mut moment_outputs: Vec<String> = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("mk-{threads}.csv"));
        run_ok(binary().args([
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
            "moments",
            "--x",
            "1000000",
            "--h",
            "30",
            "--k",
            "1,2,3",
            "--parts",
            "4",
        ]));
        moment_outputs.push(std::fs::read_to_string(&out).expect("read csv"));
    }
    gate(
        "moments-thread-invariance",
        value_columns(&moment_outputs[0]) == value_columns(&moment_outputs[1]),
        "moments --parts 4 value columns identical under 1 and 3 threads",
    );

    let manifest_path = dir.path().join("rk-1.csv.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).expect("manifest file"))
            .expect("manifest parses as json");
    gate(
        "manifest-alongside-artifact",
        manifest["table_limit"] == 65_536
            && manifest["threads"] == 1
            && manifest["artifact_version"] == env!("CARGO_PKG_VERSION")
            && manifest["calibration_hash"].as_str().map(str::len) == Some(16),
        &format!("manifest records table_limit/threads/version/hash: {manifest}"),
    );
}

#[test]
fn exit_codes_follow_the_documented_contract() {
    let dir = tempfile::tempdir().expect("tempdir");
    let small = write_config(dir.path(), 65_536);
    let ok = binary()
        .args(["--config", small.to_str().unwrap(), "verify", "--suite", "circle"])
        .output()
        .expect("run verify circle");
    gate(
        "exit-zero-on-passing-suite",
        ok.status.code() == Some(0),
        &format!("verify --suite circle exited {:?}", ok.status.code()),
    );

    // The sharp suite needs the default full-size tables: its threshold-sum
    // check evaluates s(T) at T = 10^6.
    let failing = binary()
        .args(["verify", "--suite", "sharp"])
        .output()
        .expect("run verify sharp");
    gate(
        "exit-one-on-failing-suite",
        failing.status.code() == Some(1),
        &format!(
            "verify --suite sharp carries a documented failure and exited {:?}",
            failing.status.code()
        ),
    );

    let usage = binary().args(["frobnicate"]).output().expect("run bad subcommand");
    gate(
        "exit-two-on-usage-error",
        usage.status.code() == Some(2),
        &format!("unknown subcommand exited {:?}", usage.status.code()),
    );

    let domain = binary()
        .args(["--config", small.to_str().unwrap(), "rk", "--k", "9", "--h", "10"])
        .output()
        .expect("run rk with bad order");
    gate(
        "exit-three-on-domain-error",
        domain.status.code() == Some(3),
        &format!("rk --k 9 exited {:?}", domain.status.code()),
    );

    let version = binary().args(["--version"]).output().expect("run --version");
    gate(
        "exit-zero-on-version",
        version.status.code() == Some(0),
        &format!("--version exited {:?}", version.status.code()),
    );
}
