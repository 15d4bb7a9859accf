//! Named constants with rigorous error bars.
//!
//! Slowly convergent Euler products are *not* truncated naively. Each one is
//! evaluated as
//!
//! ```text
//! prod_{p <= P0} f(p)  *  exp(c2 T2 + c3 T3),
//! ```
//!
//! where `T_s = sum_{p > P0} p^-s` are prime-zeta tails and `log f(p) =
//! c2/p^2 + c3/p^3 + O(p^-4)`. The neglected orders contribute at most
//! `c4_bound * T4`, which is folded into the reported `abs_error` together
//! with the accumulated floating-point roundoff. With the default
//! `P0 = 10^6` the bounds land around 1e-11 absolute.
//!
//! Prime-zeta values come from `P(s) = sum_k mu(k)/k * log zeta(ks)` with
//! zeta evaluated by Euler-Maclaurin, so the tails cost nothing beyond the
//! partial sums over `p <= P0`.

use crate::error::{Error, Result};
use crate::summation::CompensatedSum;
use crate::tables::PrimeTables;
use crate::tracked::TrackedValue;

/// Euler-Mascheroni constant (rounds to the nearest f64).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Default exact-product cutoff for Euler products.
pub const DEFAULT_P0: u64 = 1_000_000;

/// `A = 2 - gamma - log(2 pi)`: the constant in the second-moment main term
/// `R_2(h) = mu_2 (-h log h + A h) + ...` normalization.
pub fn const_a() -> TrackedValue {
    let v = 2.0 - EULER_GAMMA - (2.0 * std::f64::consts::PI).ln();
    TrackedValue::new(v, 1e-15, "closed-form")
}

/// `B = 1 - gamma - log(2 pi) = A - 1`, the singleton-pair constant in
/// `R_2(h) = -h (log h - B - 1) + O(h^{1/2+eps})`.
pub fn const_b() -> TrackedValue {
    let v = 1.0 - EULER_GAMMA - (2.0 * std::f64::consts::PI).ln();
    TrackedValue::new(v, 1e-15, "closed-form")
}

/// Gaussian moments `mu_k`: `(2m)!/(2^m m!)` for `k = 2m` even, `0` for odd
/// `k`. Exact in f64 for every supported `k <= 16`.
pub fn mu_k(k: u32) -> Result<TrackedValue> {
    if k == 0 || k > 16 {
        return Err(Error::bounds(format!("mu_k supports 1 <= k <= 16, got {k}")));
    }
    if k % 2 == 1 {
        return Ok(TrackedValue::exact(0.0, "gaussian-moment"));
    }
    let m = (k / 2) as u128;
    let fact = |n: u128| -> u128 { (1..=n).product::<u128>().max(1) };
    let v = fact(2 * m) / ((1u128 << m) * fact(m));
    Ok(TrackedValue::exact(v as f64, "gaussian-moment"))
}

/// Conjectural coefficient of the odd moment of index `2k+1`:
/// `r_{2k+1} = (3/2)(2k+1) k mu_{2k}`, so `r_odd(1) = r_3 = 9/2`,
/// `r_odd(2) = r_5 = 45`, `r_odd(3) = r_7 = 945/2`.
pub fn r_odd(k: u32) -> Result<TrackedValue> {
    if !(1..=8).contains(&k) {
        return Err(Error::bounds(format!("r_odd supports 1 <= k <= 8, got {k}")));
    }
    let mu = mu_k(2 * k)?.value;
    Ok(TrackedValue::exact(
        1.5 * (2 * k + 1) as f64 * k as f64 * mu,
        "odd-moment-coefficient",
    ))
}

/// Riemann zeta on the real axis, `s >= 1.5`, via Euler-Maclaurin with 64
/// explicit terms and three Bernoulli corrections (abs error < 1e-16).
pub fn zeta(s: f64) -> f64 {
    assert!(s >= 1.5, "zeta(s) implemented for s >= 1.5, got {s}");
    const N: u64 = 64;
    let mut head = CompensatedSum::new();
    for n in 1..N {
        head.add((n as f64).powf(-s));
    }
    let nf = N as f64;
    let tail = nf.powf(1.0 - s) / (s - 1.0) + nf.powf(-s) / 2.0 + s * nf.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * nf.powf(-s - 5.0) / 30240.0;
    head.value() + tail
}

/// Prime zeta `P(s) = sum_p p^-s` for `s >= 2`, from
/// `P(s) = sum_{k>=1} mu(k)/k log zeta(ks)`.
pub fn prime_zeta(s: f64, tables: &PrimeTables) -> Result<f64> {
    if s < 2.0 {
        return Err(Error::domain(format!("prime_zeta needs s >= 2, got {s}")));
    }
    let mut acc = CompensatedSum::new();
    for k in 1u64.. {
        if (k as f64) * s > 1080.0 {
            break; // zeta(ks) - 1 < 2^-1080: below f64 resolution
        }
        let mu = tables.mobius(k)?;
        if mu == 0 {
            continue;
        }
        let term = f64::from(mu) / k as f64 * zeta(k as f64 * s).ln();
        acc.add(term);
    }
    Ok(acc.value())
}

/// Prime-zeta tail `T_s(P0) = sum_{p > P0} p^-s` with a rigorous bound.
pub fn prime_zeta_tail(s: u32, p0: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    if !(2..=10).contains(&s) {
        return Err(Error::bounds(format!(
            "prime_zeta_tail supports 2 <= s <= 10, got {s}"
        )));
    }
    if p0 < 2 {
        return Err(Error::bounds("prime_zeta_tail needs p0 >= 2"));
    }
    let full = prime_zeta(s as f64, tables)?;
    let mut partial = CompensatedSum::new();
    let mut add = |p: u64| partial.add((p as f64).powi(-(s as i32)));
    if p0 <= tables.limit() {
        for &p in tables.primes() {
            if p as u64 > p0 {
                break;
            }
            add(p as u64);
        }
    } else {
        tables.for_primes_in(2, p0 + 1, add)?;
    }
    let value = full - partial.value();
    // zeta/log roundoff in P(s) is a few eps of O(1) quantities; the partial
    // sum error is bounded by its compensated tally.
    let abs_error = 5e-16 + partial.roundoff_bound();
    Ok(TrackedValue::new(value, abs_error, "prime-zeta-tail"))
}

/// Second- and third-order expansion coefficients of `log f(p)` in `1/p`,
/// plus a bound for everything at fourth order and beyond:
/// `|log f(p) - c2/p^2 - c3/p^3| <= c4_bound / p^4` for all `p > P0`.
#[derive(Debug, Clone, Copy)]
pub struct TailCoeffs {
    pub c2: f64,
    pub c3: f64,
    pub c4_bound: f64,
}

/// Tail-corrected Euler product `prod_{min_p < p <= p0} factor(p)` times
/// `exp(c2 T2 + c3 T3)`, with the truncation and roundoff folded into the
/// error bar. `factor` receives `p` as f64.
pub fn euler_product(
    tables: &PrimeTables,
    p0: u64,
    min_p_exclusive: u64,
    factor: impl Fn(f64) -> f64,
    tail: TailCoeffs,
    label: &'static str,
) -> Result<TrackedValue> {
    if p0 < 100 {
        return Err(Error::bounds(format!("euler_product needs p0 >= 100, got {p0}")));
    }
    let mut prod = 1.0f64;
    let mut count = 0u64;
    let mut visit = |p: u64| {
        if p > min_p_exclusive {
            prod *= factor(p as f64);
            count += 1;
        }
    };
    if p0 <= tables.limit() {
        for &p in tables.primes() {
            if p as u64 > p0 {
                break;
            }
            visit(p as u64);
        }
    } else {
        tables.for_primes_in(2, p0 + 1, visit)?;
    }
    let t2 = prime_zeta_tail(2, p0, tables)?;
    let t3 = prime_zeta_tail(3, p0, tables)?;
    let t4 = prime_zeta_tail(4, p0, tables)?;
    let exponent = tail.c2 * t2.value + tail.c3 * t3.value;
    let value = prod * exponent.exp();
    // Relative error: truncated tail orders, tail-sum uncertainty, one
    // rounding per prime factor (multiply + inner ops ~ 3 eps each), exp/mul.
    let rel = tail.c4_bound * (t4.value + t4.abs_error)
        + tail.c2.abs() * t2.abs_error
        + tail.c3.abs() * t3.abs_error
        + (3.0 * count as f64 + 8.0) * f64::EPSILON;
    Ok(TrackedValue::new(value, value.abs() * rel, label))
}

/// Generic tail product `prod_{p > k} (1 - 1/p)^-k (1 - k/p)`: the local
/// factors of a k-tuple occupying `k` distinct residues mod every `p > k`.
/// For `k = 2` this is the twin-prime constant `prod_{p>2} (1 - 1/(p-1)^2)`.
pub fn hl_tail(k: u32, p0: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    if !(1..=8).contains(&k) {
        return Err(Error::bounds(format!("hl_tail supports 1 <= k <= 8, got {k}")));
    }
    if k == 1 {
        // (1 - 1/p)^-1 (1 - 1/p) = 1 for every p.
        return Ok(TrackedValue::exact(1.0, "hl-tail"));
    }
    let kf = k as f64;
    euler_product(
        tables,
        p0,
        k as u64,
        |p| (1.0 - kf / p) / (1.0 - 1.0 / p).powi(k as i32),
        TailCoeffs {
            // log[(1 - kt)(1-t)^-k] = (k - k^2)/2 t^2 + (k - k^3)/3 t^3 + ...
            c2: (kf - kf * kf) / 2.0,
            c3: (kf - kf * kf * kf) / 3.0,
            c4_bound: kf.powi(4),
        },
        "hl-tail",
    )
}

/// Reference singular-series constant for `1 <= k <= 8`: the singular series
/// of a k-tuple that is fully congruent (`nu_p = 1`) at every prime
/// `p <= k` and generic (`nu_p = k`) at every prime `p > k`, i.e.
///
/// ```text
/// hl_ck(k) = prod_{p <= k} (1 - 1/p)^-(k-1) * prod_{p > k} (1 - 1/p)^-k (1 - k/p).
/// ```
///
/// General offset sets are scored by correcting this baseline prime by
/// prime. `hl_ck(2)` is the Hardy-Littlewood twin constant
/// `2 prod_{p>2} (1 - 1/(p-1)^2) ~ 1.32032363`.
pub fn hl_ck(k: u32, p0: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    let tail = hl_tail(k, p0, tables)?;
    let mut head = 1.0f64;
    for &p in tables.primes() {
        if p as u64 > k as u64 {
            break;
        }
        head *= (p as f64 / (p as f64 - 1.0)).powi(k as i32 - 1);
    }
    Ok(tail.scale(head, "hl-ck"))
}

/// `C = prod_p (1 + 2/p)(1 - 1/p)^2`, the density constant of the dyadic
/// mean-value sum `s(T) -> 1/(C log 2)`.
pub fn const_c(p0: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    euler_product(
        tables,
        p0,
        1,
        |p| (1.0 + 2.0 / p) * (1.0 - 1.0 / p) * (1.0 - 1.0 / p),
        // log[(1+2t)(1-t)^2] = -3 t^2 + 2 t^3 - 9/2 t^4 + ...
        TailCoeffs {
            c2: -3.0,
            c3: 2.0,
            c4_bound: 5.0,
        },
        "density-constant-c",
    )
}

/// `C2 = prod_p (1 - 1/(p^2 (1 + 1/p)))`, the density of the squarefree
/// average `sum_{z <= Z} mu^2(z) / (phi_{-1}(z) phi_1(z)) ~ C2 Z`.
pub fn const_c2(p0: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    euler_product(
        tables,
        p0,
        1,
        |p| 1.0 - 1.0 / (p * (p + 1.0)),
        // u = t^2 - t^3 + ..., log(1-u) = -t^2 + t^3 - 3/2 t^4 + ...
        TailCoeffs {
            c2: -1.0,
            c3: 1.0,
            c4_bound: 2.0,
        },
        "density-constant-c2",
    )
}

/// Identifier for [`constant`], the single dispatch point used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantId {
    Gamma,
    A,
    B,
    MuK(u32),
    ROdd(u32),
    C,
    C2,
    HlCk(u32),
    PrimeZetaTail { s: u32, p0: u64 },
}

/// Evaluate a named constant. `p0` is the Euler-product cutoff (ignored by
/// the closed-form constants).
pub fn constant(id: ConstantId, p0: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    match id {
        ConstantId::Gamma => Ok(TrackedValue::new(EULER_GAMMA, 2e-16, "literal")),
        ConstantId::A => Ok(const_a()),
        ConstantId::B => Ok(const_b()),
        ConstantId::MuK(k) => mu_k(k),
        ConstantId::ROdd(k) => r_odd(k),
        ConstantId::C => const_c(p0, tables),
        ConstantId::C2 => const_c2(p0, tables),
        ConstantId::HlCk(k) => hl_ck(k, p0, tables),
        ConstantId::PrimeZetaTail { s, p0 } => prime_zeta_tail(s, p0, tables),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> PrimeTables {
        PrimeTables::build(1_000_000).unwrap()
    }

    #[test]
    fn zeta_matches_closed_forms() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0) - pi * pi / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - pi.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(6.0) - pi.powi(6) / 945.0).abs() < 1e-14);
        // Reference value of zeta(3) (Apery's constant).
        assert!((zeta(3.0) - 1.202_056_903_159_594_2).abs() < 1e-14);
    }

    #[test]
    fn prime_zeta_reference_values() {
        let t = tables();
        // P(2) and P(3) reference values.
        assert!((prime_zeta(2.0, &t).unwrap() - 0.452_247_420_041_065_5).abs() < 1e-13);
        assert!((prime_zeta(3.0, &t).unwrap() - 0.174_762_639_299_443_2).abs() < 1e-13);
    }

    #[test]
    fn prime_zeta_tail_is_small_and_bounded() {
        let t = tables();
        let tail = prime_zeta_tail(2, 1_000_000, &t).unwrap();
        // Integral comparison: T2(10^6) ~ 7.2e-8.
        assert!(tail.value > 0.0 && tail.value < 1.5e-7, "{tail}");
        assert!(tail.abs_error < 1e-12);
        // Tail at a larger cutoff must be smaller.
        let tail8 = prime_zeta_tail(2, 8_000_000, &t).unwrap();
        assert!(tail8.value < tail.value);
    }

    #[test]
    fn gaussian_moments() {
        assert_eq!(mu_k(2).unwrap().value, 1.0);
        assert_eq!(mu_k(4).unwrap().value, 3.0);
        assert_eq!(mu_k(6).unwrap().value, 15.0);
        assert_eq!(mu_k(8).unwrap().value, 105.0);
        assert_eq!(mu_k(3).unwrap().value, 0.0);
        assert!(mu_k(0).is_err());
    }

    #[test]
    fn odd_moment_coefficients() {
        assert_eq!(r_odd(1).unwrap().value, 4.5);
        assert_eq!(r_odd(2).unwrap().value, 45.0);
        assert_eq!(r_odd(3).unwrap().value, 472.5);
        assert!(r_odd(0).is_err());
    }

    #[test]
    fn a_minus_b_is_one() {
        assert!((const_a().value - const_b().value - 1.0).abs() < 1e-15);
        // B = 1 - gamma - log(2 pi), reference digits from high precision.
        assert!((const_b().value + 1.415_092_731_310_878_3).abs() < 1e-12);
    }

    #[test]
    fn twin_prime_constant_via_hl_ck() {
        let t = tables();
        let v = hl_ck(2, DEFAULT_P0, &t).unwrap();
        // 2 * prod_{p>2} (1 - 1/(p-1)^2), reference to 16 digits.
        let reference = 1.320_323_631_693_739_1;
        assert!(
            v.contains(reference),
            "hl_ck(2) = {v} does not cover {reference}"
        );
        assert!((v.value - reference).abs() < 1e-10);
        assert!(v.abs_error < 1e-9);
        assert_eq!(hl_ck(1, DEFAULT_P0, &t).unwrap().value, 1.0);
    }

    #[test]
    fn hl_ck_cutoffs_agree_within_bounds() {
        let t = tables();
        for k in 2..=8u32 {
            let coarse = hl_ck(k, 10_000, &t).unwrap();
            let fine = hl_ck(k, 1_000_000, &t).unwrap();
            assert!(
                (coarse.value - fine.value).abs() <= coarse.abs_error + fine.abs_error,
                "hl_ck({k}): {coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn density_constants_stable_under_cutoff() {
        let t = tables();
        let (c_a, c_b) = (const_c(10_000, &t).unwrap(), const_c(1_000_000, &t).unwrap());
        assert!((c_a.value - c_b.value).abs() <= c_a.abs_error + c_b.abs_error);
        let (d_a, d_b) = (const_c2(10_000, &t).unwrap(), const_c2(1_000_000, &t).unwrap());
        assert!((d_a.value - d_b.value).abs() <= d_a.abs_error + d_b.abs_error);
        // Loose sanity windows.
        assert!(c_b.value > 0.28 && c_b.value < 0.45, "{c_b}");
        assert!(d_b.value > 0.6 && d_b.value < 0.8, "{d_b}");
    }

    #[test]
    fn c2_matches_empirical_squarefree_average() {
        // sum_{z <= Z} mu^2(z) / prod_{p|z} (1 - 1/p^2)  ~  C2 * Z.
        let t = tables();
        let z_max = 200_000u64;
        let mut acc = CompensatedSum::new();
        for z in 1..=z_max {
            if t.mobius(z).unwrap() != 0 {
                let mut w = 1.0f64;
                t.for_each_prime_factor(z, |p| {
                    let pf = p as f64;
                    w /= 1.0 - 1.0 / (pf * pf);
                });
                acc.add(w);
            }
        }
        let mean = acc.value() / z_max as f64;
        let c2 = const_c2(DEFAULT_P0, &t).unwrap();
        assert!(
            (mean - c2.value).abs() / c2.value < 0.01,
            "empirical {mean} vs constant {c2}"
        );
    }
}
