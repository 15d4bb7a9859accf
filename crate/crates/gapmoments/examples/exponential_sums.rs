//! Circle-method checks on the geometric exponential sum E_h.
//!
//! Three independent views of the same analytic objects:
//! the integral `int_0^1 E_h(a)^2 E_h(-2a) da` evaluated by exact
//! trigonometric-grid quadrature against its combinatorial value `h`;
//! the two-dimensional Abel resummation identity reconstructing a weighted
//! double sum from prefix sums and partial derivatives; and the closed
//! form `2 log(1 + h/2)` of the majorant integral `int E_h^+`.
//!
//! Run with: `cargo run --example exponential_sums`

use gapmoments::error::Result;
use gapmoments::expsum::{abel2d, circle_triple_check, ehplus_integrals, ClosureField,
    EhPlusIntegral};

fn main() -> Result<()> {
    println!("circle identity (quadrature vs combinatorial count):");
    for h in [1u64, 7, 16, 33, 64] {
        let (quadrature, count) = circle_triple_check(h)?;
        println!("  h = {h:>2}: quadrature = {quadrature:>18.12}, count = {count}");
    }

    // Abel resummation: sum f(n1, n2) g(n1, n2) rebuilt from the prefix
    // sums of f and the partials of g.
    let field = ClosureField {
        g: |t1: f64, t2: f64| (0.7 * t1).sin() * (1.3 * t2).cos(),
        d1: |t1: f64, t2: f64| 0.7 * (0.7 * t1).cos() * (1.3 * t2).cos(),
        d2: |t1: f64, t2: f64| -1.3 * (0.7 * t1).sin() * (1.3 * t2).sin(),
        d12: |t1: f64, t2: f64| -0.91 * (0.7 * t1).cos() * (1.3 * t2).sin(),
    };
    let f = |n1: u64, n2: u64| 1.0 / (n1 + 2 * n2) as f64;
    let (x1, x2) = (20.5, 15.5);
    let mut direct = 0.0;
    for n1 in 1..=20u64 {
        for n2 in 1..=15u64 {
            direct += f(n1, n2) * (0.7 * n1 as f64).sin() * (1.3 * n2 as f64).cos();
        }
    }
    let rebuilt = abel2d(f, &field, x1, x2, 1e-9)?;
    println!("\nAbel 2d: direct = {direct:.15}, rebuilt = {rebuilt:.15}");

    println!("\nmajorant integrals of E_h^+:");
    for h in [16u64, 256, 4096] {
        let (value, bound_ratio) = ehplus_integrals(h, EhPlusIntegral::Single)?;
        let closed = 2.0 * (1.0 + h as f64 / 2.0).ln();
        println!(
            "  h = {h:>4}: integral = {value:.12} (closed form {closed:.12}), /log h = {bound_ratio:.4}"
        );
    }
    let (value, bound_ratio) = ehplus_integrals(256, EhPlusIntegral::TripleProduct)?;
    println!("  triple product at h = 256: {value:.6}, bound ratio {bound_ratio:.4}");
    Ok(())
}
