//! Tracked arithmetic constants.
//!
//! Prints the closed-form constants `A` and `B`, the Gaussian moments
//! `mu_k`, the odd-moment coefficients `r_{2k+1}`, and the Euler-product
//! densities `C` and `C_2`, each with its absolute error bar. Values with
//! a rigorous bound are guaranteed to satisfy `|value - exact| <= bar`;
//! the Euler products carry explicit tail majorants rather than guesses.
//!
//! Run with: `cargo run --example constants`

use gapmoments::constants::{const_a, const_b, const_c, const_c2, mu_k, r_odd, DEFAULT_P0};
use gapmoments::error::Result;
use gapmoments::tables::PrimeTables;
use gapmoments::tracked::TrackedValue;

fn show(name: &str, tv: &TrackedValue) {
    println!("{name:>6} = {:>22.16} +/- {:<9.2e}  [{}]", tv.value, tv.abs_error, tv.label);
}

fn main() -> Result<()> {
    let tables = PrimeTables::build(1 << 17)?;
    let p0 = DEFAULT_P0.min(tables.limit());

    show("A", &const_a());
    show("B", &const_b());
    for k in [2u32, 4, 6, 8] {
        show(&format!("mu_{k}"), &mu_k(k)?);
    }
    for k in 1..=4u32 {
        show(&format!("r_{}", 2 * k + 1), &r_odd(k)?);
    }
    show("C", &const_c(p0, &tables)?);
    show("C_2", &const_c2(p0, &tables)?);

    // B governs the second moment: R_2(h) = -h (log h - B - 1) + small.
    // The identity B = A - 1 is exact in closed form.
    let gap = (const_a().value - 1.0 - const_b().value).abs();
    println!("\n|A - 1 - B| = {gap:.2e} (closed-form identity)");
    Ok(())
}
