//! Moment sums R_k(h) of the centered singular series.
//!
//! `R_k(h)` sums `S0` over ordered k-tuples of distinct offsets in `[1, h]`.
//! The first moment vanishes identically; the second matches
//! `-h (log h - B - 1)` with a residual far below `h`; the third tracks
//! `(9/2) h log^2 h` up to a slowly varying factor. Small cases are
//! cross-checked against literal tuple enumeration, and the Gallagher-style
//! ratio shows the uncentered second moment is equivalent to `h^2`.
//!
//! Run with: `cargo run --example moment_sums`

use gapmoments::error::Result;
use gapmoments::moments::{
    conjecture_main_term, gallagher_ratio, r3_trend, rk_sum, rk_sum_bruteforce, SumOptions,
};
use gapmoments::singular::SingularSeries;
use gapmoments::tables::PrimeTables;

fn main() -> Result<()> {
    let tables = PrimeTables::build(1 << 17)?;
    let series = SingularSeries::new(&tables)?;
    let opts = SumOptions::default();

    println!("small h against literal tuple enumeration:");
    for k in 1..=3u32 {
        for h in [10u64, 20] {
            let fast = rk_sum(k, h, &tables, &opts)?;
            let brute = rk_sum_bruteforce(k, h, &series)?;
            println!(
                "  R_{k}({h:>2}) = {:>18.12}  (enumeration {:>18.12})",
                fast.value.value, brute.value
            );
        }
    }

    println!("\nsecond moment vs -h (log h - B - 1):");
    for j in [10u32, 12, 14, 16] {
        let h = 1u64 << j;
        let row = rk_sum(2, h, &tables, &opts)?;
        println!(
            "  h = 2^{j:<2}: R_2 = {:>16.6}, main = {:>16.6}, residual/h^0.6 = {:>8.5}",
            row.value.value,
            row.main_term,
            row.residual / (h as f64).powf(0.6)
        );
    }

    println!("\nthird moment against (9/2) h log^2 h:");
    for row in r3_trend(&[1 << 10, 1 << 12, 1 << 14], &tables, &opts)? {
        println!(
            "  h = {:>6}: R_3 = {:>18.6}, ratio to main term = {:.6} ({:.2}s)",
            row.h,
            row.value.value,
            row.value.value / conjecture_main_term(3, row.h)?,
            row.seconds
        );
    }

    let g = gallagher_ratio(2, 10_000, &tables)?;
    println!("\nuncentered second moment over h^2 at h = 1e4: {:.6}", g.value);
    Ok(())
}
