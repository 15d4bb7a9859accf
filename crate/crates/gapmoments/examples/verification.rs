//! Programmatic access to the verification suites.
//!
//! Runs the fast suites (`exact`, `circle`, `determinism`, `calibration`)
//! through the library interface and prints one pass/fail line per
//! criterion, exactly as `gapmoments verify` would. Suites report
//! documented failures honestly: a criterion known not to hold is still
//! executed and shown as `[FAIL (documented)]` with the measurements.
//!
//! The `sharp` and `trend` suites need prime tables covering `10^6` and
//! about ten seconds of sieving; enable them with `--full`.
//!
//! Run with: `cargo run --release --example verification [-- --full]`

use gapmoments::calib::Calibration;
use gapmoments::error::Result;
use gapmoments::tables::PrimeTables;
use gapmoments::verify::run_suite;

fn main() -> Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let (limit, suites): (u64, &[&str]) = if full {
        (1 << 20, &["exact", "sharp", "trend", "circle", "determinism", "calibration"])
    } else {
        (1 << 17, &["exact", "circle", "determinism", "calibration"])
    };
    let tables = PrimeTables::build(limit)?;
    let cal = Calibration::builtin();

    let mut failures = 0usize;
    for name in suites {
        let report = run_suite(name, &tables, &cal)?;
        for line in report.lines() {
            println!("{line}");
        }
        failures += report.checks.iter().filter(|c| !c.passed).count();
    }
    println!("\ntotal criteria failed: {failures}");
    Ok(())
}
