//! The (g, x, y, z) parameterization of modulus triples.
//!
//! A squarefree triple `(q1, q2, q3)` supports a nonempty residue system
//! exactly when it factors as `q1 = g y z`, `q2 = g x z`, `q3 = g x y`
//! with pairwise coprime parts. This example decomposes a few triples,
//! enumerates their residue systems through both the congruence route and
//! the literal rational-sum route (they must agree element for element),
//! and evaluates the dyadic threshold sum `s(T)` whose limit depends on
//! the fractional class of `log2 T`.
//!
//! Run with: `cargo run --example triple_decomposition`

use gapmoments::error::Result;
use gapmoments::tables::PrimeTables;
use gapmoments::triple::{
    bridge_residual, decompose, enumerate_residues, enumerate_residues_rational, s_function,
    s_function_limit,
};

fn main() -> Result<()> {
    let tables = PrimeTables::build(1 << 17)?;

    println!("decompositions (None = no residue system):");
    for (q1, q2, q3) in [(6u64, 10, 15), (30, 30, 30), (2, 3, 5), (105, 165, 231)] {
        match decompose(q1, q2, q3, &tables)? {
            Some(d) => println!(
                "  ({q1}, {q2}, {q3}) = (g, x, y, z) = ({}, {}, {}, {}), modulus gxyz = {}",
                d.g(),
                d.x(),
                d.y(),
                d.z(),
                d.gxyz()
            ),
            None => println!("  ({q1}, {q2}, {q3}): no residue system"),
        }
    }

    println!("\nresidue systems, congruence route vs rational route:");
    for (q1, q2, q3) in [(6u64, 10, 15), (15, 21, 35), (30, 30, 30)] {
        let d = decompose(q1, q2, q3, &tables)?.expect("admissible triple");
        let fast = enumerate_residues(&d)?;
        let slow = enumerate_residues_rational(&d)?;
        println!(
            "  ({q1}, {q2}, {q3}): {} residue triples, routes agree = {}",
            fast.len(),
            fast == slow
        );
    }

    // s(T) converges along each fractional class of log2 T; the
    // class-averaged reference is 1/(C log 2). Along T = 10^j the gap
    // does not shrink -- that is a property of the sum, not a bug.
    let reference = s_function_limit(tables.limit(), &tables)?;
    println!("\ns(T) against the class average {:.9}:", reference.value);
    for t in [100u64, 10_000, 100_000] {
        let s = s_function(t, &tables)?;
        println!(
            "  s({t:>6}) = {:.9}, gap to class average = {:+.6}",
            s.value,
            s.value - reference.value
        );
    }

    let v3 = bridge_residual(512, &tables)?;
    println!(
        "\nV3(512) from the third-moment identity: {:.6} +/- {:.2e} [{}]",
        v3.value, v3.abs_error, v3.label
    );
    Ok(())
}
