//! Lemma-scale measurements: restricted sums, variance, averages.
//!
//! Exercises the lemma laboratory end to end: squarefree counts in residue
//! classes against their product main terms and the two-branch envelope;
//! the remainder variance over coprime classes with its scale-free bound
//! ratio; the bivariate w* average against its main term; the exact
//! convolution identities; and Dirichlet partial sums against their limit
//! coefficients.
//!
//! Run with: `cargo run --example lemma_checks`

use gapmoments::error::Result;
use gapmoments::lemmas::{
    convolution_ids, dirichlet_partial, restricted_sum, variance_m2, w_star_average,
    PartialMode, RestrictedSumSpec, SumWeight, XiKind,
};
use gapmoments::tables::PrimeTables;

fn main() -> Result<()> {
    let tables = PrimeTables::build(1 << 17)?;

    println!("restricted sums S(X; q, a, m) with the phi-ratio weight:");
    for (q, a) in [(5u64, Some(2u64)), (5, None), (12, Some(7))] {
        let spec = RestrictedSumSpec {
            x: 100_000,
            q,
            a,
            m: 1,
            weight: SumWeight::Mu2N2OverPhi2,
        };
        let r = restricted_sum(&spec, &tables)?;
        println!(
            "  q = {q:>2}, a = {a:?}: value = {:>12.3}, main = {:>12.3}, envelope ratio = {:.4}",
            r.value.value, r.main_term.value, r.envelope_ratio
        );
    }

    println!("\nremainder variance over coprime classes:");
    for q in [11u64, 101] {
        let v = variance_m2(100_000, q, 1, SumWeight::Mu2N2OverPhi2, &tables)?;
        println!(
            "  q = {q:>3}: variance = {:>12.3} over {} classes, bound ratio = {:.2e}",
            v.value, v.classes, v.bound_ratio
        );
    }

    println!("\nbivariate w* average:");
    for (g, q) in [(1u64, 1u64), (1, 3), (2, 5)] {
        let r = w_star_average(g, q, 5_000, 5_000, &tables)?;
        println!(
            "  (g, q) = ({g}, {q}): sum = {:>14.3}, main = {:>14.3}, residual = {:+.3e}",
            r.sum.value, r.main_term.value, r.residual
        );
    }

    let c = convolution_ids(20_000, &tables)?;
    println!(
        "\nconvolution identities to n = {}: lambda gap {}, f1 rel gap {:.1e}, f2 gap {:.1e}",
        c.n_checked, c.lambda_max_gap, c.f1_max_rel_gap, c.f2_max_gap
    );

    println!("\nDirichlet partial sums (cumulative form):");
    for (xi, name) in [
        (XiKind::MuOverN, "mu/n      -> T/zeta(2)"),
        (XiKind::MuSquaredOverN, "mu^2/n    -> T zeta(2)/zeta(4)"),
        (XiKind::LiouvilleOverN, "lambda/n  -> T zeta(4)/zeta(2)"),
    ] {
        let p = dirichlet_partial(xi, 50_000, PartialMode::Cumulative, &tables)?;
        println!("  {name}: value = {:>14.3}, gap = {:+.4}", p.value, p.gap);
    }
    Ok(())
}
