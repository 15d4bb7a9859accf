//! Singular series for prime tuples.
//!
//! Evaluates the Hardy-Littlewood singular series `S(D)` and its centered
//! companion `S0(D)` for a few offset sets: the twin pair, the admissible
//! triple `{0, 2, 6}`, an inadmissible set (where `S` vanishes exactly),
//! and singletons (where `S0` vanishes exactly). Every value carries a
//! rigorous error bar from the truncated Euler product. The independent
//! modulus-sum oracle cross-checks the pair values.
//!
//! Run with: `cargo run --example singular_series`

use gapmoments::error::Result;
use gapmoments::singular::{OffsetSet, SingularSeries};
use gapmoments::tables::PrimeTables;

fn main() -> Result<()> {
    let tables = PrimeTables::build(1 << 17)?;
    let series = SingularSeries::new(&tables)?;

    for offsets in [vec![0u64, 2], vec![0, 2, 6], vec![0, 1], vec![0, 2, 4]] {
        let set = OffsetSet::new(offsets.clone())?;
        let s = series.singular_s(&set)?;
        let s0 = series.singular_s0(&set)?;
        println!(
            "D = {offsets:?}: S = {:.12} +/- {:.1e}, S0 = {:.12} +/- {:.1e}, admissible = {}",
            s.value.value, s.value.abs_error, s0.value.value, s0.value.abs_error, s.admissible
        );
    }

    // Singletons: S({d}) = 1 and S0({d}) = 0 exactly, for every d.
    let singleton = series.singular_s0(&OffsetSet::new(vec![17])?)?;
    println!("\nS0({{17}}) = {} (exactly zero for every singleton)", singleton.value.value);

    // Independent oracle: S0({0, d}) as a modulus sum with a rigorous tail
    // bound, against the inclusion-exclusion evaluation. The intervals
    // must overlap.
    println!("\npair oracle vs inclusion-exclusion:");
    for d in [2u64, 6, 30, 90] {
        let direct = series.singular_s0(&OffsetSet::new(vec![0, d])?)?.value;
        let oracle = series.pair_s0_oracle(d, 50_000)?;
        let gap = (direct.value - oracle.value).abs();
        let bars = direct.abs_error + oracle.abs_error;
        println!(
            "  d = {d:>2}: direct {: >13.9}, oracle {: >13.9}, |gap| = {gap:.2e} <= {bars:.2e}",
            direct.value, oracle.value
        );
    }
    Ok(())
}
