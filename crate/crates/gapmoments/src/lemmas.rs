//! Finite, directly computable lemma objects: restricted squarefree sums
//! against their product main terms and two-branch envelope, remainder
//! variances over residue classes, the w / w* coprimality densities with
//! exact one- and two-variable averages and the weighted pair counters
//! behind them, the congruence-system count N(A1, A2), the f1 / f2
//! convolution identities, and Dirichlet partial sums.
//!
//! Capabilities:
//! - [`restricted_sum`]: exact `S(X; q, a, m)` for both weights `mu^2(n)`
//!   and `mu^2(n) n^2/phi(n)^2`, with the `6X / (pi^2 phi(q) phi_{-1}(mq))`
//!   main term (times a shifted Euler product for the ratio weight), the
//!   residual, and the envelope ratio.
//! - [`sigma_envelope`]: `min{X/q + log^2(3X), (X/q + 1)(loglog 3X)^2}`.
//! - [`variance_m2`]: exact variance of the per-class remainders over the
//!   coprime residue classes, with the bound ratio against
//!   `psi_{1/2}(m)^4 X (log 2X)^5 2^omega(q)`.
//! - [`w_density`] / [`w_star_density`]: the local densities of weighted
//!   coprime pairs; [`w_star_average`] (two variables, exact via a
//!   gcd-support decomposition) and [`w_star_average_single`] (one
//!   variable, literal) against their `zeta(4)/zeta(2)^2 = 2/5` main terms.
//! - [`pair_counter`]: the exact weighted pair counts W / W* behind those
//!   densities, against `zeta(2)/zeta(4) * XY * w / phi(q)`.
//! - [`n_count`]: exact count of the coprimality-and-congruence system by
//!   Moebius inversion and CRT, against `phi_1(q1) phi_2(g) phi_1(x) A1 A2 / z`.
//! - [`convolution_ids`], [`f1_at`], [`f2_at`]: the squarefree-indicator,
//!   `f1`, and bivariate `f2` convolution identities checked exactly, plus
//!   partial sums of `f2(d1,d2)/(d1 d2)` toward `zeta(2)^3/zeta(4)`.
//! - [`dirichlet_partial`]: dyadic means and cumulative sums of `(1 * xi)`
//!   for concrete coefficient sequences with finite mass.
//! - [`squarefree_weight_average`]: `sum mu^2(z)/(phi_{-1}(z) phi_1(z))`
//!   over z coprime to a modulus, against its `C2` density line.

use crate::constants::{const_c2, euler_product, zeta, TailCoeffs, DEFAULT_P0};
use crate::error::{Error, Result};
use crate::summation::{par_compensated_sum, CompensatedSum};
use crate::tables::{gcd, mod_inverse, MultFn, PrimeTables};
use crate::tracked::TrackedValue;
use std::f64::consts::{LN_2, PI};

/// Largest range bound accepted by [`restricted_sum`].
pub const RESTRICTED_X_MAX: u64 = 100_000_000;
/// Largest range bound accepted by [`variance_m2`].
pub const VARIANCE_X_MAX: u64 = 10_000_000;
/// Largest average bound accepted by the w*-averages, pair counter and
/// [`n_count`].
pub const AVERAGE_A_MAX: u64 = 1_000_000;
/// Largest check bound accepted by [`convolution_ids`].
pub const CONVOLUTION_N_MAX: u64 = 100_000;

/// Two-branch envelope `min{X/q + log^2(3X), (X/q + 1)(loglog 3X)^2}`
/// bounding the restricted sums uniformly in the residue class.
pub fn sigma_envelope(x: u64, q: u64) -> Result<f64> {
    if x == 0 || q == 0 {
        return Err(Error::domain("sigma_envelope needs x >= 1 and q >= 1"));
    }
    let (xf, qf) = (x as f64, q as f64);
    let l = (3.0 * xf).ln();
    let ll = l.ln();
    Ok((xf / qf + l * l).min((xf / qf + 1.0) * ll * ll))
}

/// Summand weight of a restricted sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumWeight {
    /// `mu(n)^2`: counts squarefree integers.
    Mu2,
    /// `mu(n)^2 n^2 / phi(n)^2`: the totient-ratio weight.
    Mu2N2OverPhi2,
}

impl SumWeight {
    fn apply(self, squarefree: bool, ratio2: f64) -> f64 {
        match self {
            SumWeight::Mu2 => {
                if squarefree {
                    1.0
                } else {
                    0.0
                }
            }
            SumWeight::Mu2N2OverPhi2 => {
                if squarefree {
                    ratio2
                } else {
                    0.0
                }
            }
        }
    }
}

/// Parameters of one restricted sum `sum_{n <= x} weight(n)` subject to a
/// residue condition and a coprimality condition.
///
/// With `a = Some(a)` the sum runs over `n = a (mod q)` with `(n, m) = 1`;
/// the class must satisfy `gcd(a, qm) = 1` and `gcd(q, m) = 1`. With
/// `a = None` the residue condition is dropped and the sum runs over
/// `(n, qm) = 1`, which is the starred form: `S(X; q)` is spelled
/// `{ q, a: None, m: 1 }` (or equivalently `{ q: 1, a: None, m: q }`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictedSumSpec {
    /// Upper range bound X.
    pub x: u64,
    /// Residue modulus.
    pub q: u64,
    /// Residue class, or `None` for the starred (coprimality-only) form.
    pub a: Option<u64>,
    /// Extra coprimality modulus.
    pub m: u64,
    /// Summand weight.
    pub weight: SumWeight,
}

/// One evaluated restricted sum: the exact value, the product main term,
/// their difference, and the envelope ratio `value / sigma(X, q)`.
#[derive(Debug, Clone)]
pub struct RestrictedSum {
    /// Exact finite sum.
    pub value: TrackedValue,
    /// Product main term (`6X/(pi^2 phi(q) phi_{-1}(mq))`, with the shifted
    /// Euler factor for the totient-ratio weight).
    pub main_term: TrackedValue,
    /// `value - main_term`.
    pub residual: f64,
    /// `value / sigma_envelope(x, q)`, the envelope-saturation ratio.
    pub envelope_ratio: f64,
}

/// Distinct prime factors, also for arguments above the table limit as long
/// as trial division by the tabulated primes reaches `sqrt(n)`.
fn distinct_primes(n: u64, tables: &PrimeTables) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::domain("prime factorization undefined at 0"));
    }
    let mut out = Vec::new();
    if n <= tables.limit() {
        tables.for_each_prime_factor(n, |p| out.push(p));
        return Ok(out);
    }
    let mut m = n;
    let mut covered = false;
    for &p in tables.primes() {
        let p = p as u64;
        if p * p > m {
            covered = true;
            break;
        }
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
    }
    if m > 1 {
        if !covered {
            return Err(Error::bounds(format!(
                "factoring {n} needs primes up to sqrt; table limit {} too small",
                tables.limit()
            )));
        }
        out.push(m);
    }
    Ok(out)
}

/// Euler totient, also above the table limit (same coverage condition as
/// [`distinct_primes`]).
fn totient_u64(n: u64, tables: &PrimeTables) -> Result<u64> {
    let mut r = n;
    for p in distinct_primes(n, tables)? {
        r -= r / p;
    }
    Ok(r)
}

/// `prod_{p | n} (1 - alpha/p)`.
fn phi_alpha_product(n: u64, alpha: f64, tables: &PrimeTables) -> Result<f64> {
    let mut acc = 1.0;
    for p in distinct_primes(n, tables)? {
        acc *= 1.0 - alpha / p as f64;
    }
    Ok(acc)
}

/// `prod_{p | n} (1 + p^-alpha)`.
fn psi_alpha_product(n: u64, alpha: f64, tables: &PrimeTables) -> Result<f64> {
    let mut acc = 1.0;
    for p in distinct_primes(n, tables)? {
        acc *= 1.0 + (p as f64).powf(-alpha);
    }
    Ok(acc)
}

/// Local factor `1 + (2p - 1)/((p - 1)^2 (p + 1))` of the shifted Euler
/// product relating the totient-ratio weight to the squarefree count.
fn ratio_weight_local(p: f64) -> f64 {
    1.0 + (2.0 * p - 1.0) / ((p - 1.0) * (p - 1.0) * (p + 1.0))
}

/// `prod_p ratio_weight_local(p)`, the density shift between the two
/// restricted-sum weights, with tail correction.
fn ratio_weight_constant(tables: &PrimeTables) -> Result<TrackedValue> {
    euler_product(
        tables,
        DEFAULT_P0.min(tables.limit()),
        1,
        ratio_weight_local,
        // (2p-1)/((p-1)^2(p+1)) = 2/p^2 + 1/p^3 + 3/p^4 + ...
        TailCoeffs {
            c2: 2.0,
            c3: 1.0,
            c4_bound: 8.0,
        },
        "ratio-weight-constant",
    )
}

/// Shared main term `6X / (pi^2 phi(qr) phi_{-1}(mm * qr))`, times the
/// shifted Euler product over `p` not dividing `mm * qr` for the
/// totient-ratio weight. `qr` and `mm` must be coprime.
fn restricted_main(
    x: u64,
    qr: u64,
    mm: u64,
    weight: SumWeight,
    tables: &PrimeTables,
) -> Result<TrackedValue> {
    let phi_q = totient_u64(qr, tables)? as f64;
    let psi = psi_alpha_product(qr, 1.0, tables)? * psi_alpha_product(mm, 1.0, tables)?;
    let base = 6.0 * x as f64 / (PI * PI * phi_q * psi);
    match weight {
        SumWeight::Mu2 => Ok(TrackedValue::new(
            base,
            base.abs() * 16.0 * f64::EPSILON,
            "restricted-main",
        )),
        SumWeight::Mu2N2OverPhi2 => {
            let full = ratio_weight_constant(tables)?;
            let mut local = 1.0;
            for p in distinct_primes(qr, tables)? {
                local *= ratio_weight_local(p as f64);
            }
            for p in distinct_primes(mm, tables)? {
                local *= ratio_weight_local(p as f64);
            }
            let value = base * full.value / local;
            Ok(TrackedValue::new(
                value,
                value.abs() * (full.rel_error() + 32.0 * f64::EPSILON),
                "restricted-main",
            ))
        }
    }
}

/// Segmented weight sieve: visits every `n in [1, x_max]` with its
/// squarefree flag and the exact-to-rounding ratio `n^2 / phi(n)^2`.
/// Requires primes up to `sqrt(x_max)` in the tables.
fn scan_weights(
    x_max: u64,
    tables: &PrimeTables,
    mut visit: impl FnMut(u64, bool, f64),
) -> Result<()> {
    if x_max == 0 {
        return Ok(());
    }
    let root = x_max.isqrt();
    if root > tables.limit() {
        return Err(Error::bounds(format!(
            "weight scan to {x_max} needs primes up to {root}; table limit {} too small",
            tables.limit()
        )));
    }
    const SEG: u64 = 1 << 18;
    let seg_len = SEG.min(x_max) as usize;
    let mut val = vec![1u64; seg_len];
    let mut ratio = vec![1.0f64; seg_len];
    let mut sf = vec![true; seg_len];
    let mut lo = 1u64;
    while lo <= x_max {
        let hi = (lo + SEG - 1).min(x_max);
        let len = (hi - lo + 1) as usize;
        val[..len].fill(1);
        ratio[..len].fill(1.0);
        sf[..len].fill(true);
        for &p32 in tables.primes() {
            let p = p32 as u64;
            if p * p > hi {
                break;
            }
            let pf = p as f64;
            let r2 = (pf / (pf - 1.0)) * (pf / (pf - 1.0));
            let mut j = lo.div_ceil(p) * p;
            while j <= hi {
                let i = (j - lo) as usize;
                ratio[i] *= r2;
                val[i] *= p;
                j += p;
            }
            let mut pk = p * p;
            while pk <= hi {
                let mut j = lo.div_ceil(pk) * pk;
                while j <= hi {
                    let i = (j - lo) as usize;
                    val[i] *= p;
                    sf[i] = false;
                    j += pk;
                }
                pk = match pk.checked_mul(p) {
                    Some(next) => next,
                    None => break,
                };
            }
        }
        for n in lo..=hi {
            let i = (n - lo) as usize;
            let left = n / val[i];
            let mut r = ratio[i];
            if left > 1 {
                let lf = left as f64;
                r *= (lf / (lf - 1.0)) * (lf / (lf - 1.0));
            }
            visit(n, sf[i], r);
        }
        lo = hi + 1;
    }
    Ok(())
}

/// Evaluate a restricted sum exactly and compare it to its product main
/// term and to the two-branch envelope.
pub fn restricted_sum(spec: &RestrictedSumSpec, tables: &PrimeTables) -> Result<RestrictedSum> {
    if spec.x == 0 || spec.q == 0 || spec.m == 0 {
        return Err(Error::domain("restricted_sum needs x, q, m >= 1"));
    }
    if spec.x > RESTRICTED_X_MAX {
        return Err(Error::bounds(format!(
            "restricted_sum capped at x <= {RESTRICTED_X_MAX}, got {}",
            spec.x
        )));
    }
    if gcd(spec.q, spec.m) != 1 {
        return Err(Error::domain(format!(
            "restricted_sum needs gcd(q, m) = 1, got q = {}, m = {}",
            spec.q, spec.m
        )));
    }
    let (qr, a0, mm) = match spec.a {
        Some(a) => {
            let qm = spec.q.checked_mul(spec.m).ok_or_else(|| {
                Error::bounds("restricted_sum modulus product overflows".to_string())
            })?;
            if gcd(a, qm) != 1 {
                return Err(Error::domain(format!(
                    "restricted_sum needs gcd(a, qm) = 1, got a = {a}, qm = {qm}"
                )));
            }
            (spec.q, a % spec.q, spec.m)
        }
        None => {
            let mm = spec.q.checked_mul(spec.m).ok_or_else(|| {
                Error::bounds("restricted_sum modulus product overflows".to_string())
            })?;
            (1, 0, mm)
        }
    };
    let m_primes = distinct_primes(mm, tables)?;
    let mut acc = CompensatedSum::new();
    let mut count = 0u64;
    scan_weights(spec.x, tables, |n, squarefree, ratio2| {
        if qr > 1 && n % qr != a0 {
            return;
        }
        if m_primes.iter().any(|&p| n % p == 0) {
            return;
        }
        if squarefree {
            count += 1;
            acc.add(spec.weight.apply(true, ratio2));
        }
    })?;
    let value = match spec.weight {
        SumWeight::Mu2 => TrackedValue::exact(count as f64, "restricted-sum"),
        SumWeight::Mu2N2OverPhi2 => TrackedValue::new(
            acc.value(),
            acc.roundoff_bound() + 32.0 * f64::EPSILON * acc.abs_sum(),
            "restricted-sum",
        ),
    };
    let main_term = restricted_main(spec.x, qr, mm, spec.weight, tables)?;
    let residual = value.value - main_term.value;
    let envelope_ratio = value.value / sigma_envelope(spec.x, qr)?;
    Ok(RestrictedSum {
        value,
        main_term,
        residual,
        envelope_ratio,
    })
}

/// One remainder-variance evaluation over coprime residue classes.
#[derive(Debug, Clone)]
pub struct VarianceReport {
    /// `sum_{(a,q)=1} (S(X; q, a, m) - main)^2`, exactly.
    pub value: f64,
    /// Shared per-class main term.
    pub main_per_class: f64,
    /// Number of coprime classes, `phi(q)`.
    pub classes: u64,
    /// `value / (psi_{1/2}(m)^4 X (log 2X)^5 2^omega(q))`.
    pub bound_ratio: f64,
}

/// Exact variance of the restricted-sum remainders over the residue classes
/// `a` coprime to `q`, with the scale-free bound ratio.
pub fn variance_m2(
    x: u64,
    q: u64,
    m: u64,
    weight: SumWeight,
    tables: &PrimeTables,
) -> Result<VarianceReport> {
    if x == 0 || q == 0 || m == 0 || q > x {
        return Err(Error::domain("variance_m2 needs 1 <= q <= x and m >= 1"));
    }
    if x > VARIANCE_X_MAX {
        return Err(Error::bounds(format!(
            "variance_m2 capped at x <= {VARIANCE_X_MAX}, got {x}"
        )));
    }
    if !tables.is_squarefree_u64(q)? {
        return Err(Error::domain(format!("variance_m2 needs squarefree q, got {q}")));
    }
    if gcd(q, m) != 1 {
        return Err(Error::domain(format!(
            "variance_m2 needs gcd(q, m) = 1, got q = {q}, m = {m}"
        )));
    }
    let m_primes = distinct_primes(m, tables)?;
    let mut bins = vec![0.0f64; q as usize];
    scan_weights(x, tables, |n, squarefree, ratio2| {
        if squarefree && !m_primes.iter().any(|&p| n % p == 0) {
            bins[(n % q) as usize] += weight.apply(true, ratio2);
        }
    })?;
    let main = restricted_main(x, q, m, weight, tables)?.value;
    let spread = par_compensated_sum(0, q, 1 << 14, |lo, hi| {
        let mut acc = CompensatedSum::new();
        for a in lo..hi {
            if gcd(a, q) == 1 {
                let d = bins[a as usize] - main;
                acc.add(d * d);
            }
        }
        acc
    });
    let value = spread.value();
    let omega_q = distinct_primes(q, tables)?.len() as i32;
    let psi_m = psi_alpha_product(m, 0.5, tables)?;
    let denom = psi_m.powi(4)
        * x as f64
        * (2.0 * x as f64).ln().powi(5)
        * 2.0f64.powi(omega_q);
    Ok(VarianceReport {
        value,
        main_per_class: main,
        classes: totient_u64(q, tables)?,
        bound_ratio: value / denom,
    })
}

/// Local density factor at a prime dividing both members of a pair (or the
/// modulus): `(1 - 1/p)^2 / (1 + 1/p^2)`.
fn alpha_local(p: f64) -> f64 {
    let t = 1.0 - 1.0 / p;
    t * t / (1.0 + 1.0 / (p * p))
}

/// Local density factor at a prime dividing exactly one member of a pair:
/// `(1 - 1/p + 1/p^2) / (1 + 1/p^2)`.
fn beta_local(p: f64) -> f64 {
    (1.0 - 1.0 / p + 1.0 / (p * p)) / (1.0 + 1.0 / (p * p))
}

/// `w` over a modulus given as a list of pairwise-coprime parts (avoids
/// forming the product, which may overflow).
fn w_density_parts(moduli: &[u64], a1: u64, a2: u64, tables: &PrimeTables) -> Result<f64> {
    let shared = gcd(a1, a2);
    let mut alpha_primes: Vec<u64> = Vec::new();
    for &part in moduli {
        for p in distinct_primes(part, tables)? {
            if !alpha_primes.contains(&p) {
                alpha_primes.push(p);
            }
        }
    }
    for p in distinct_primes(shared, tables)? {
        if !alpha_primes.contains(&p) {
            alpha_primes.push(p);
        }
    }
    let mut w = 1.0;
    for &p in &alpha_primes {
        w *= alpha_local(p as f64);
    }
    for p in distinct_primes(a1, tables)?
        .into_iter()
        .chain(distinct_primes(a2, tables)?)
    {
        if shared % p != 0 {
            w *= beta_local(p as f64);
        }
    }
    Ok(w)
}

/// Density `w(q, a1, a2) = prod_{p | q(a1,a2)} (1-1/p)^2/(1+1/p^2) *
/// prod_{p | a1 a2, p not | (a1,a2)} (1-1/p+1/p^2)/(1+1/p^2)`, evaluated
/// literally (no coprimality is imposed here; the averaging lemmas add
/// their own preconditions).
pub fn w_density(q: u64, a1: u64, a2: u64, tables: &PrimeTables) -> Result<f64> {
    if q == 0 || a1 == 0 || a2 == 0 {
        return Err(Error::domain("w_density needs positive arguments"));
    }
    w_density_parts(&[q], a1, a2, tables)
}

/// Starred density `w*(g, q, a1, a2) = w(gq, a1, a2) phi_2(g) / phi_1(g)`.
/// Requires `gcd(g, q) = 1`.
pub fn w_star_density(g: u64, q: u64, a1: u64, a2: u64, tables: &PrimeTables) -> Result<f64> {
    if g == 0 || q == 0 || a1 == 0 || a2 == 0 {
        return Err(Error::domain("w_star_density needs positive arguments"));
    }
    if gcd(g, q) != 1 {
        return Err(Error::domain(format!(
            "w_star_density needs gcd(g, q) = 1, got g = {g}, q = {q}"
        )));
    }
    let base = w_density_parts(&[g, q], a1, a2, tables)?;
    let phi2 = phi_alpha_product(g, 2.0, tables)?;
    let phi1 = phi_alpha_product(g, 1.0, tables)?;
    Ok(base * phi2 / phi1)
}

/// One exact average (or weighted count) against its product main term.
#[derive(Debug, Clone)]
pub struct AverageReport {
    /// Exact sum.
    pub sum: TrackedValue,
    /// Product main term.
    pub main_term: TrackedValue,
    /// `sum - main_term`.
    pub residual: f64,
    /// Number of nonzero terms (admissible tuples) behind the sum.
    pub terms: u64,
}

fn check_average_bounds(a: u64, what: &str) -> Result<()> {
    if a > AVERAGE_A_MAX {
        return Err(Error::bounds(format!(
            "{what} capped at {AVERAGE_A_MAX}, got {a}"
        )));
    }
    Ok(())
}

/// Distinct primes of `g * q` for coprime `g, q`, sorted.
fn gq_primes(g: u64, q: u64, tables: &PrimeTables) -> Result<Vec<u64>> {
    let mut pset = distinct_primes(g, tables)?;
    pset.extend(distinct_primes(q, tables)?);
    pset.sort_unstable();
    Ok(pset)
}

/// Two-variable average `sum_{a1 <= A1} sum_{a2 <= A2} w*(g, q, a1, a2)`,
/// with terms at `(a1 a2, gq) > 1` counting zero, computed exactly through
/// a gcd-support decomposition in `O((A1 + A2) log)` time, against the main
/// term `phi_1(gq)^3 phi_2(g) / (phi_{-1}(gq) phi_1(g)) * (2/5) * A1 A2`.
pub fn w_star_average(
    g: u64,
    q: u64,
    a1_max: u64,
    a2_max: u64,
    tables: &PrimeTables,
) -> Result<AverageReport> {
    if g == 0 || q == 0 {
        return Err(Error::domain("w_star_average needs g, q >= 1"));
    }
    if gcd(g, q) != 1 {
        return Err(Error::domain(format!(
            "w_star_average needs gcd(g, q) = 1, got g = {g}, q = {q}"
        )));
    }
    check_average_bounds(a1_max.max(a2_max), "w_star_average bound")?;
    let main = w_star_average_main(g, q, a1_max as f64 * a2_max as f64, 3, tables)?;
    if a1_max == 0 || a2_max == 0 {
        return Ok(AverageReport {
            sum: TrackedValue::exact(0.0, "w-star-average"),
            main_term: main,
            residual: 0.0,
            terms: 0,
        });
    }
    let amax = a1_max.max(a2_max);
    if amax > tables.limit() {
        return Err(Error::bounds(format!(
            "w_star_average needs tables covering {amax}, limit {}",
            tables.limit()
        )));
    }
    let pset = gq_primes(g, q, tables)?;
    let len = amax as usize + 1;
    let mut u = vec![1.0f64; len];
    let mut cop = vec![true; len];
    u[0] = 0.0;
    cop[0] = false;
    for &p32 in tables.primes() {
        let p = p32 as u64;
        if p > amax {
            break;
        }
        if pset.binary_search(&p).is_ok() {
            let mut j = p;
            while j <= amax {
                cop[j as usize] = false;
                j += p;
            }
        } else {
            let b = beta_local(p as f64);
            let mut j = p;
            while j <= amax {
                u[j as usize] *= b;
                j += p;
            }
        }
    }
    let mut k_alpha = 1.0f64;
    for &p in &pset {
        k_alpha *= alpha_local(p as f64);
    }
    let star_pref =
        phi_alpha_product(g, 2.0, tables)? / phi_alpha_product(g, 1.0, tables)?;
    let dmax = a1_max.min(a2_max);
    let mut outer = CompensatedSum::new();
    for d in 1..=dmax {
        if tables.mobius(d)? == 0 || pset.iter().any(|&p| d % p == 0) {
            continue;
        }
        let mut c = 1.0f64;
        tables.for_each_prime_factor(d, |p| {
            let pf = p as f64;
            let b = beta_local(pf);
            c *= alpha_local(pf) / (b * b) - 1.0;
        });
        let mut u1 = CompensatedSum::new();
        let mut j = d;
        while j <= a1_max {
            if cop[j as usize] {
                u1.add(u[j as usize]);
            }
            j += d;
        }
        let mut u2 = CompensatedSum::new();
        let mut j = d;
        while j <= a2_max {
            if cop[j as usize] {
                u2.add(u[j as usize]);
            }
            j += d;
        }
        outer.add(c * u1.value() * u2.value());
    }
    let scale = k_alpha * star_pref;
    let raw = scale * outer.value();
    let abs_error = scale.abs() * (outer.roundoff_bound() + 64.0 * f64::EPSILON * outer.abs_sum())
        + raw.abs() * 8.0 * f64::EPSILON;
    let c1 = (1..=a1_max).filter(|&a| cop[a as usize]).count() as u64;
    let c2 = (1..=a2_max).filter(|&a| cop[a as usize]).count() as u64;
    let sum = TrackedValue::new(raw, abs_error, "w-star-average");
    let residual = sum.value - main.value;
    Ok(AverageReport {
        sum,
        main_term: main,
        residual,
        terms: c1 * c2,
    })
}

/// Main term shared by the w*-averages: `phi_1(gq)^k phi_2(g) /
/// (phi_{-1}(gq) phi_1(g)) * (2/5) * scale`, with `k = 3` for the
/// two-variable average and `k = 2` for the single-variable one.
fn w_star_average_main(
    g: u64,
    q: u64,
    scale: f64,
    k: i32,
    tables: &PrimeTables,
) -> Result<TrackedValue> {
    let phi1_gq = phi_alpha_product(g, 1.0, tables)? * phi_alpha_product(q, 1.0, tables)?;
    let psi_gq = psi_alpha_product(g, 1.0, tables)? * psi_alpha_product(q, 1.0, tables)?;
    let phi2_g = phi_alpha_product(g, 2.0, tables)?;
    let phi1_g = phi_alpha_product(g, 1.0, tables)?;
    // zeta(4)/zeta(2)^2 = (pi^4/90) / (pi^2/6)^2 = 2/5 exactly.
    let value = phi1_gq.powi(k) * phi2_g / (psi_gq * phi1_g) * 0.4 * scale;
    Ok(TrackedValue::new(
        value,
        value.abs() * 32.0 * f64::EPSILON,
        "w-star-average-main",
    ))
}

/// Single-variable average `sum_{a2 <= A2} w*(g, q, a1, a2)` at fixed `a1`
/// with `gcd(a1, gq) = 1`, evaluated literally, against the main term
/// `phi_1(gq)^2 phi_2(g) / (phi_{-1}(gq) phi_1(g)) * (2/5) * A2`.
pub fn w_star_average_single(
    g: u64,
    q: u64,
    a1: u64,
    a2_max: u64,
    tables: &PrimeTables,
) -> Result<AverageReport> {
    if g == 0 || q == 0 || a1 == 0 {
        return Err(Error::domain("w_star_average_single needs g, q, a1 >= 1"));
    }
    if gcd(g, q) != 1 {
        return Err(Error::domain(format!(
            "w_star_average_single needs gcd(g, q) = 1, got g = {g}, q = {q}"
        )));
    }
    check_average_bounds(a2_max, "w_star_average_single bound")?;
    if a2_max > tables.limit() {
        return Err(Error::bounds(format!(
            "w_star_average_single needs tables covering {a2_max}, limit {}",
            tables.limit()
        )));
    }
    let pset = gq_primes(g, q, tables)?;
    if pset.iter().any(|&p| a1 % p == 0) {
        return Err(Error::domain(format!(
            "w_star_average_single needs gcd(a1, gq) = 1, got a1 = {a1}"
        )));
    }
    let mut k_alpha = 1.0f64;
    for &p in &pset {
        k_alpha *= alpha_local(p as f64);
    }
    let mut u_a1 = 1.0f64;
    for p in distinct_primes(a1, tables)? {
        u_a1 *= beta_local(p as f64);
    }
    let star_pref =
        phi_alpha_product(g, 2.0, tables)? / phi_alpha_product(g, 1.0, tables)?;
    let mut acc = CompensatedSum::new();
    let mut terms = 0u64;
    for a2 in 1..=a2_max {
        let mut factor = 1.0f64;
        let mut skip = false;
        tables.for_each_prime_factor(a2, |p| {
            if pset.binary_search(&p).is_ok() {
                skip = true;
            } else {
                let pf = p as f64;
                if a1 % p == 0 {
                    factor *= alpha_local(pf) / beta_local(pf);
                } else {
                    factor *= beta_local(pf);
                }
            }
        });
        if skip {
            continue;
        }
        acc.add(factor);
        terms += 1;
    }
    let scale = k_alpha * u_a1 * star_pref;
    let raw = scale * acc.value();
    let sum = TrackedValue::new(
        raw,
        scale.abs() * (acc.roundoff_bound() + 32.0 * f64::EPSILON * acc.abs_sum()),
        "w-star-average-single",
    );
    let main = w_star_average_main(g, q, a2_max as f64, 2, tables)?;
    let residual = sum.value - main.value;
    Ok(AverageReport {
        sum,
        main_term: main,
        residual,
        terms,
    })
}

/// Parameters of one exact weighted pair count W (or W* with `star`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCountSpec {
    /// Range bound on the first coordinate.
    pub x_max: u64,
    /// Range bound on the second coordinate.
    pub y_max: u64,
    /// Auxiliary modulus `g`.
    pub g: u64,
    /// Congruence modulus `q` (squarefree).
    pub q: u64,
    /// First linear coefficient.
    pub a1: u64,
    /// Second linear coefficient.
    pub a2: u64,
    /// When set, additionally require `(a1 x + a2 y, g) = 1` (the W* form).
    pub star: bool,
}

/// Exact weighted pair count `W = sum mu^2(x) x^2/phi(x)^2 mu^2(y)
/// y^2/phi(y)^2` over `x <= X`, `y <= Y` with `a1 x + a2 y = 0 (mod q)`,
/// `(x, a2 g q) = 1`, `(y, a1 g q x) = 1` (and `(a1 x + a2 y, g) = 1` in
/// the starred form), against `zeta(2)/zeta(4) * XY * w / phi(q)`.
pub fn pair_counter(spec: &PairCountSpec, tables: &PrimeTables) -> Result<AverageReport> {
    let PairCountSpec {
        x_max,
        y_max,
        g,
        q,
        a1,
        a2,
        star,
    } = *spec;
    if x_max == 0 || y_max == 0 || g == 0 || q == 0 || a1 == 0 || a2 == 0 {
        return Err(Error::domain("pair_counter needs positive parameters"));
    }
    check_average_bounds(x_max.max(y_max), "pair_counter bound")?;
    if !tables.is_squarefree_u64(q)? {
        return Err(Error::domain(format!("pair_counter needs squarefree q, got {q}")));
    }
    if gcd(g, q) != 1 {
        return Err(Error::domain(format!(
            "pair_counter needs gcd(g, q) = 1, got g = {g}, q = {q}"
        )));
    }
    let gq = g
        .checked_mul(q)
        .ok_or_else(|| Error::bounds("pair_counter g*q overflows".to_string()))?;
    if gcd(a1, gq) != 1 || gcd(a2, gq) != 1 {
        return Err(Error::domain(format!(
            "pair_counter needs gcd(a1 a2, gq) = 1, got a1 = {a1}, a2 = {a2}, gq = {gq}"
        )));
    }
    let work = x_max * (y_max / q + 1);
    if work > 200_000_000 {
        return Err(Error::bounds(format!(
            "pair_counter work estimate {work} exceeds budget"
        )));
    }
    let a1gq = a1
        .checked_mul(gq)
        .ok_or_else(|| Error::bounds("pair_counter a1*g*q overflows".to_string()))?;
    let a2gq = a2
        .checked_mul(gq)
        .ok_or_else(|| Error::bounds("pair_counter a2*g*q overflows".to_string()))?;
    let n_max = x_max.max(y_max);
    let mut sf = vec![false; n_max as usize + 1];
    let mut r2 = vec![0.0f64; n_max as usize + 1];
    scan_weights(n_max, tables, |n, squarefree, ratio2| {
        sf[n as usize] = squarefree;
        r2[n as usize] = ratio2;
    })?;
    let a2_inv = mod_inverse(a2 % q.max(2), q).unwrap_or(0);
    let mut acc = CompensatedSum::new();
    let mut terms = 0u64;
    for x in 1..=x_max {
        if !sf[x as usize] || gcd(x, a2gq) != 1 {
            continue;
        }
        let y0 = if q == 1 {
            1
        } else {
            let r = (a1 % q) * (x % q) % q;
            let c = (q - r) % q * a2_inv % q;
            if c == 0 {
                q
            } else {
                c
            }
        };
        let wx = r2[x as usize];
        let mut y = y0;
        while y <= y_max {
            if sf[y as usize]
                && gcd(y, a1gq) == 1
                && gcd(y, x) == 1
                && (!star || gcd(a1 * x + a2 * y, g) == 1)
            {
                acc.add(wx * r2[y as usize]);
                terms += 1;
            }
            y += q;
        }
    }
    let sum = TrackedValue::new(
        acc.value(),
        acc.roundoff_bound() + 64.0 * f64::EPSILON * acc.abs_sum(),
        "pair-counter",
    );
    let w = if star {
        w_star_density(g, q, a1, a2, tables)?
    } else {
        w_density_parts(&[g, q], a1, a2, tables)?
    };
    // zeta(2)/zeta(4) = (pi^2/6) / (pi^4/90) = 15/pi^2.
    let main_value = 15.0 / (PI * PI) * x_max as f64 * y_max as f64 * w
        / totient_u64(q, tables)? as f64;
    let main_term = TrackedValue::new(
        main_value,
        main_value.abs() * 32.0 * f64::EPSILON,
        "pair-counter-main",
    );
    let residual = sum.value - main_term.value;
    Ok(AverageReport {
        sum,
        main_term,
        residual,
        terms,
    })
}

/// One exact integer count against its product main term.
#[derive(Debug, Clone, Copy)]
pub struct CountReport {
    /// Exact count.
    pub count: u64,
    /// Product main term.
    pub main_term: f64,
    /// `count - main_term`.
    pub residual: f64,
}

/// Divisors of a squarefree number given by its prime list, each with its
/// Moebius sign.
fn signed_divisors(primes: &[u64]) -> Vec<(u64, i64)> {
    let mut out = vec![(1u64, 1i64)];
    for &p in primes {
        let prev = out.len();
        for i in 0..prev {
            let (d, s) = out[i];
            out.push((d * p, -s));
        }
    }
    out
}

/// Merge two congruences with coprime moduli into one class `(r, m1*m2)`.
fn crt_pair(r1: u64, m1: u64, r2: u64, m2: u64) -> Result<(u64, u64)> {
    if m1 == 1 {
        return Ok((r2, m2));
    }
    if m2 == 1 {
        return Ok((r1, m1));
    }
    let m = m1
        .checked_mul(m2)
        .ok_or_else(|| Error::bounds("crt modulus product overflows".to_string()))?;
    let inv = mod_inverse(m1 % m2, m2)
        .ok_or_else(|| Error::numeric("crt moduli are not coprime"))?;
    let diff = (r2 + m2 - r1 % m2) % m2;
    let t = diff as u128 * inv as u128 % m2 as u128;
    Ok(((r1 as u128 + m1 as u128 * t) as u64 % m, m))
}

/// Number of `a in [1, a_max]` with `a = c (mod m)`, `0 <= c < m`.
fn count_in_class(c: u64, m: u64, a_max: u64) -> u64 {
    if c == 0 {
        a_max / m
    } else if c <= a_max {
        (a_max - c) / m + 1
    } else {
        0
    }
}

/// Exact count of pairs `a1 <= A1`, `a2 <= A2` with `(a1, gyz) = 1`,
/// `a1 x + a2 y = 0 (mod z)`, `(a2, gx) = 1` and `(a1 x + a2 y, g) = 1`,
/// by Moebius inversion with CRT class counts, against the main term
/// `phi_1(q1) phi_2(g) phi_1(x) A1 A2 / z` with `q1 = gyz`.
/// Requires `g x y z` squarefree (hence the four parts pairwise coprime).
pub fn n_count(
    a1_max: u64,
    a2_max: u64,
    g: u64,
    x: u64,
    y: u64,
    z: u64,
    tables: &PrimeTables,
) -> Result<CountReport> {
    if g == 0 || x == 0 || y == 0 || z == 0 {
        return Err(Error::domain("n_count needs g, x, y, z >= 1"));
    }
    check_average_bounds(a1_max.max(a2_max), "n_count bound")?;
    let product = g
        .checked_mul(x)
        .and_then(|v| v.checked_mul(y))
        .and_then(|v| v.checked_mul(z))
        .ok_or_else(|| Error::bounds("n_count g*x*y*z overflows".to_string()))?;
    if !tables.is_squarefree_u64(product)? {
        return Err(Error::domain(format!(
            "n_count needs g x y z squarefree, got {g} * {x} * {y} * {z}"
        )));
    }
    let g_primes = distinct_primes(g, tables)?;
    let x_primes = distinct_primes(x, tables)?;
    let y_primes = distinct_primes(y, tables)?;
    let z_primes = distinct_primes(z, tables)?;
    let mut q1_primes = g_primes.clone();
    q1_primes.extend(&y_primes);
    q1_primes.extend(&z_primes);
    let phi1_q1: f64 = q1_primes.iter().map(|&p| 1.0 - 1.0 / p as f64).product();
    let phi2_g: f64 = g_primes.iter().map(|&p| 1.0 - 2.0 / p as f64).product();
    let phi1_x: f64 = x_primes.iter().map(|&p| 1.0 - 1.0 / p as f64).product();
    let main_term = phi1_q1 * phi2_g * phi1_x * a1_max as f64 * a2_max as f64 / z as f64;
    if a1_max == 0 || a2_max == 0 {
        return Ok(CountReport {
            count: 0,
            main_term,
            residual: -main_term,
        });
    }
    let q1 = g * y * z;
    let divs_g = signed_divisors(&g_primes);
    let mut gx_primes = g_primes.clone();
    gx_primes.extend(&x_primes);
    let divs_gx = signed_divisors(&gx_primes);
    let y_inv_z = mod_inverse(y % z.max(2), z)
        .ok_or_else(|| Error::numeric("n_count: y not invertible mod z"))?;
    let mut inv_cache: Vec<(u64, u64)> = Vec::with_capacity(divs_g.len());
    for &(k1, _) in &divs_g {
        let inv = if k1 == 1 {
            0
        } else {
            mod_inverse(y % k1, k1)
                .ok_or_else(|| Error::numeric("n_count: y not invertible mod k1"))?
        };
        inv_cache.push((k1, inv));
    }
    let mut total: i64 = 0;
    for a1 in 1..=a1_max {
        if gcd(a1, q1) != 1 {
            continue;
        }
        let r_z = if z == 1 {
            0
        } else {
            let v = (a1 % z) * (x % z) % z * y_inv_z % z;
            (z - v) % z
        };
        for (idx, &(k1, s1)) in divs_g.iter().enumerate() {
            let r_k1 = if k1 == 1 {
                0
            } else {
                let inv = inv_cache[idx].1;
                let v = (a1 % k1) * (x % k1) % k1 * inv % k1;
                (k1 - v) % k1
            };
            let (rc, mc) = crt_pair(r_z, z, r_k1, k1)?;
            for &(k2, s2) in &divs_gx {
                if gcd(k1, k2) != 1 {
                    continue;
                }
                let (c, m) = crt_pair(rc, mc, 0, k2)?;
                total += s1 * s2 * count_in_class(c, m, a2_max) as i64;
            }
        }
    }
    let count = u64::try_from(total)
        .map_err(|_| Error::numeric("n_count inclusion-exclusion went negative"))?;
    Ok(CountReport {
        count,
        main_term,
        residual: count as f64 - main_term,
    })
}

/// `f1(n)`: the multiplicative function with `f1(p^j) =
/// (-1)^(j-1) (2p-1)/(p-1)^2`, i.e. the Dirichlet complement in
/// `mu^2(n) n^2/phi(n)^2 = (mu^2 * f1)(n)`.
pub fn f1_at(n: u64, tables: &PrimeTables) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("f1 undefined at 0"));
    }
    let mut acc = 1.0f64;
    for (p, e) in tables.factor(n)?.factors {
        let pf = p as f64;
        let local = (2.0 * pf - 1.0) / ((pf - 1.0) * (pf - 1.0));
        acc *= if e % 2 == 1 { local } else { -local };
    }
    Ok(acc)
}

/// `f2(d1, d2)`: the bivariate complement in the coprimality identity
/// `1_{(x,y)=1} w(x) w(y) = sum_{d1 | x, d2 | y} f2(d1,d2) mu^2(x/d1)
/// mu^2(y/d2)` with `w(n) = mu^2(n) n^2/phi(n)^2`. Its local value at
/// exponents `(i, j)`, not both zero, is `(-1)^(i+j-1) (beta_p ([i>=1] +
/// [j>=1]) + [i>=1][j>=1])` with `beta_p = (2p-1)/(p-1)^2`.
pub fn f2_at(d1: u64, d2: u64, tables: &PrimeTables) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::domain("f2 undefined at 0"));
    }
    let mut acc = 1.0f64;
    let fac1 = tables.factor(d1)?.factors;
    let fac2 = tables.factor(d2)?.factors;
    let mut i1 = 0;
    let mut i2 = 0;
    while i1 < fac1.len() || i2 < fac2.len() {
        let p1 = fac1.get(i1).map(|&(p, _)| p).unwrap_or(u64::MAX);
        let p2 = fac2.get(i2).map(|&(p, _)| p).unwrap_or(u64::MAX);
        let p = p1.min(p2);
        let mut i = 0u32;
        let mut j = 0u32;
        if p1 == p {
            i = fac1[i1].1;
            i1 += 1;
        }
        if p2 == p {
            j = fac2[i2].1;
            i2 += 1;
        }
        let pf = p as f64;
        let beta = (2.0 * pf - 1.0) / ((pf - 1.0) * (pf - 1.0));
        let both = (i >= 1 && j >= 1) as u32 as f64;
        let ones = (i >= 1) as u32 as f64 + (j >= 1) as u32 as f64;
        let local = beta * ones + both;
        acc *= if (i + j) % 2 == 1 { local } else { -local };
    }
    Ok(acc)
}

/// Result of checking the three convolution identities and the f2 partial
/// sums.
#[derive(Debug, Clone)]
pub struct ConvolutionReport {
    /// Range bound the identities were checked to.
    pub n_checked: u64,
    /// Largest absolute gap in the squarefree-indicator identity
    /// `mu^2(n) 1_{(n,m)=1} = sum_{d | (n, m^inf)} lambda(d) mu^2(n/d)`
    /// over `m` in {2, 6, 30} (integer identity; 0 when it holds).
    pub lambda_max_gap: f64,
    /// Largest relative gap in `mu^2(n) n^2/phi(n)^2 = (mu^2 * f1)(n)`.
    pub f1_max_rel_gap: f64,
    /// Largest absolute gap in the bivariate f2 identity over pairs with
    /// `x y <= n_checked`, scaled by `1 + |lhs|`.
    pub f2_max_gap: f64,
    /// Number of (x, y) pairs checked by the f2 identity.
    pub pairs_checked: u64,
    /// Partial sums `sum_{d1, d2 <= D} f2(d1, d2)/(d1 d2)` per cutoff D.
    pub partial_sums: Vec<(u64, f64)>,
    /// Their limit `zeta(2)^3 / zeta(4)`.
    pub partial_limit: f64,
}

/// Check the convolution identities exactly for all `n <= n_max` (pairs
/// `x y <= n_max` for the bivariate one) and report the f2 partial sums.
pub fn convolution_ids(n_max: u64, tables: &PrimeTables) -> Result<ConvolutionReport> {
    if !(10..=CONVOLUTION_N_MAX).contains(&n_max) {
        return Err(Error::bounds(format!(
            "convolution_ids supports 10 <= n <= {CONVOLUTION_N_MAX}, got {n_max}"
        )));
    }
    let top = n_max.max(10_000);
    if top > tables.limit() {
        return Err(Error::bounds(format!(
            "convolution_ids needs tables covering {top}, limit {}",
            tables.limit()
        )));
    }
    let n = n_max as usize;
    let mut f1v = vec![0.0f64; top as usize + 1];
    for d in 1..=top {
        f1v[d as usize] = f1_at(d, tables)?;
    }
    let mut mu2 = vec![false; n + 1];
    let mut w2 = vec![0.0f64; n + 1];
    for k in 1..=n_max {
        if tables.mobius(k)? != 0 {
            mu2[k as usize] = true;
            let r = k as f64 / tables.totient(k)? as f64;
            w2[k as usize] = r * r;
        }
    }
    // Squarefree-indicator identity, over small coprimality moduli.
    let mut lambda_max_gap = 0i64;
    for k in 1..=n_max {
        for m in [2u64, 6, 30] {
            let lhs: i64 = (mu2[k as usize] && gcd(k, m) == 1) as i64;
            let mut exps = [0u32; 3];
            let mut parts = [1u64; 3];
            let mut rest = k;
            for (slot, p) in [2u64, 3, 5].iter().enumerate() {
                if m % p == 0 {
                    while rest % p == 0 {
                        exps[slot] += 1;
                        parts[slot] *= p;
                        rest /= p;
                    }
                }
            }
            let mut rhs = 0i64;
            for e0 in 0..=exps[0] {
                for e1 in 0..=exps[1] {
                    for e2 in 0..=exps[2] {
                        let d = 2u64.pow(e0) * 3u64.pow(e1) * 5u64.pow(e2);
                        let lam = if (e0 + e1 + e2) % 2 == 0 { 1 } else { -1 };
                        rhs += lam * (tables.mobius(k / d)? != 0) as i64;
                    }
                }
            }
            let _ = parts;
            lambda_max_gap = lambda_max_gap.max((lhs - rhs).abs());
        }
    }
    // f1 identity.
    let mut f1_max_rel_gap = 0.0f64;
    for k in 1..=n_max {
        let lhs = if mu2[k as usize] { w2[k as usize] } else { 0.0 };
        let mut rhs = 0.0f64;
        for d in tables.factor(k)?.divisors() {
            if mu2[(k / d) as usize] {
                rhs += f1v[d as usize];
            }
        }
        let gap = (lhs - rhs).abs() / (1.0 + lhs.abs());
        f1_max_rel_gap = f1_max_rel_gap.max(gap);
    }
    // Bivariate f2 identity over all pairs with x * y <= n_max, including
    // non-coprime pairs (where the left side vanishes).
    let mut divs: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for d in 1..=n_max {
        let mut j = d;
        while j <= n_max {
            divs[j as usize].push(d as u32);
            j += d;
        }
    }
    let gamma = |p: f64| {
        let beta = (2.0 * p - 1.0) / ((p - 1.0) * (p - 1.0));
        -(2.0 * beta + 1.0) / (beta * beta)
    };
    let mut f2_max_gap = 0.0f64;
    let mut pairs_checked = 0u64;
    for x in 1..=n_max {
        for y in 1..=n_max / x {
            let lhs = if gcd(x, y) == 1 {
                w2[x as usize] * w2[y as usize]
            } else {
                0.0
            };
            let mut rhs = 0.0f64;
            for &d1 in &divs[x as usize] {
                let d1 = d1 as u64;
                if !mu2[(x / d1) as usize] {
                    continue;
                }
                for &d2 in &divs[y as usize] {
                    let d2 = d2 as u64;
                    if !mu2[(y / d2) as usize] {
                        continue;
                    }
                    let mut f2 = f1v[d1 as usize] * f1v[d2 as usize];
                    let shared = gcd(d1, d2);
                    if shared > 1 {
                        tables.for_each_prime_factor(shared, |p| f2 *= gamma(p as f64));
                    }
                    rhs += f2;
                }
            }
            let gap = (lhs - rhs).abs() / (1.0 + lhs.abs());
            f2_max_gap = f2_max_gap.max(gap);
            pairs_checked += 1;
        }
    }
    // Partial sums of f2(d1,d2)/(d1 d2) via the shared-support expansion:
    // the pairs at cutoff D sum to sum_m h(m) T_m(D)^2 with h(m) =
    // prod_{p|m} (gamma_p - 1) over squarefree m and T_m(D) =
    // sum_{d <= D, m | d} f1(d)/d.
    let mut partial_sums = Vec::new();
    for dcap in [100u64, 1_000, 10_000] {
        let mut acc = CompensatedSum::new();
        for m in 1..=dcap {
            if tables.mobius(m)? == 0 {
                continue;
            }
            let mut h = 1.0f64;
            tables.for_each_prime_factor(m, |p| h *= gamma(p as f64) - 1.0);
            let mut t = CompensatedSum::new();
            let mut d = m;
            while d <= dcap {
                t.add(f1v[d as usize] / d as f64);
                d += m;
            }
            acc.add(h * t.value() * t.value());
        }
        partial_sums.push((dcap, acc.value()));
    }
    Ok(ConvolutionReport {
        n_checked: n_max,
        lambda_max_gap: lambda_max_gap as f64,
        f1_max_rel_gap,
        f2_max_gap,
        pairs_checked,
        partial_sums,
        partial_limit: zeta(2.0).powi(3) / zeta(4.0),
    })
}

/// Coefficient sequence `xi` of a Dirichlet partial sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiKind {
    /// `xi = delta_1` (the convolution identity element).
    DeltaOne,
    /// `xi(n) = mu(n)/n`, mass-convergent, limit `1/zeta(2)`.
    MuOverN,
    /// `xi(n) = mu(n)^2/n`, limit `zeta(2)/zeta(4)`.
    MuSquaredOverN,
    /// `xi(n) = lambda(n)/n` (Liouville), limit `zeta(4)/zeta(2)`.
    LiouvilleOverN,
    /// `xi = mu` itself: its mass `sum |mu(n)| n^{-1/2}` diverges, so the
    /// dyadic lemma does not apply; requesting it is a domain error.
    MuRaw,
}

/// Evaluation mode of [`dirichlet_partial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialMode {
    /// `sum_{T <= n < 2T} (1 * xi)(n)/n`, approaching `log 2 * sum xi(n)/n`.
    DyadicMean,
    /// `sum_{n <= T} (1 * xi)(n)`, approaching `T * sum xi(n)/n`.
    Cumulative,
}

/// One Dirichlet partial-sum evaluation.
#[derive(Debug, Clone, Copy)]
pub struct DirichletPartial {
    /// The finite sum.
    pub value: f64,
    /// The full-series coefficient `sum_n xi(n)/n`.
    pub limit: f64,
    /// `value` minus its predicted limit form (`log 2 * limit` dyadic,
    /// `T * limit` cumulative).
    pub gap: f64,
    /// Window length.
    pub terms: u64,
}

/// Partial sums of `(1 * xi)` in dyadic-mean or cumulative form, with the
/// gap to the limiting coefficient.
pub fn dirichlet_partial(
    xi: XiKind,
    t: u64,
    mode: PartialMode,
    tables: &PrimeTables,
) -> Result<DirichletPartial> {
    if xi == XiKind::MuRaw {
        return Err(Error::domain(
            "xi = mu has divergent mass sum |xi(n)| n^{-1/2}; the partial-sum lemma does not apply",
        ));
    }
    if t < 2 {
        return Err(Error::domain("dirichlet_partial needs T >= 2"));
    }
    let (lo, hi) = match mode {
        PartialMode::DyadicMean => (t, 2 * t - 1),
        PartialMode::Cumulative => (1, t),
    };
    if hi > tables.limit() {
        return Err(Error::bounds(format!(
            "dirichlet_partial needs tables covering {hi}, limit {}",
            tables.limit()
        )));
    }
    let len = (hi - lo + 1) as usize;
    let mut conv = vec![0.0f64; len];
    if xi == XiKind::DeltaOne {
        conv.fill(1.0);
    } else {
        for d in 1..=hi {
            let coeff = match xi {
                XiKind::MuOverN => tables.mobius(d)? as f64 / d as f64,
                XiKind::MuSquaredOverN => {
                    if tables.mobius(d)? != 0 {
                        1.0 / d as f64
                    } else {
                        0.0
                    }
                }
                XiKind::LiouvilleOverN => tables.mult_eval(MultFn::Liouville, d, 0.0)? / d as f64,
                XiKind::DeltaOne | XiKind::MuRaw => unreachable!(),
            };
            if coeff == 0.0 {
                continue;
            }
            let mut j = lo.div_ceil(d) * d;
            while j <= hi {
                conv[(j - lo) as usize] += coeff;
                j += d;
            }
        }
    }
    let mut acc = CompensatedSum::new();
    match mode {
        PartialMode::DyadicMean => {
            for n in lo..=hi {
                acc.add(conv[(n - lo) as usize] / n as f64);
            }
        }
        PartialMode::Cumulative => {
            for v in &conv {
                acc.add(*v);
            }
        }
    }
    let value = acc.value();
    let limit = match xi {
        XiKind::DeltaOne => 1.0,
        XiKind::MuOverN => 1.0 / zeta(2.0),
        XiKind::MuSquaredOverN => zeta(2.0) / zeta(4.0),
        XiKind::LiouvilleOverN => zeta(4.0) / zeta(2.0),
        XiKind::MuRaw => unreachable!(),
    };
    let gap = match mode {
        PartialMode::DyadicMean => value - LN_2 * limit,
        PartialMode::Cumulative => value - t as f64 * limit,
    };
    Ok(DirichletPartial {
        value,
        limit,
        gap,
        terms: hi - lo + 1,
    })
}

/// Exact average `sum_{z <= Z, (z, m) = 1} mu^2(z) / (phi_{-1}(z) phi_1(z))`
/// against its density line `C2 phi_1(m) phi_{-1}(m) / phi_tilde(m) * Z`.
pub fn squarefree_weight_average(
    z_max: u64,
    m: u64,
    tables: &PrimeTables,
) -> Result<AverageReport> {
    if z_max == 0 || m == 0 {
        return Err(Error::domain("squarefree_weight_average needs z_max, m >= 1"));
    }
    if z_max > tables.limit() {
        return Err(Error::bounds(format!(
            "squarefree_weight_average needs tables covering {z_max}, limit {}",
            tables.limit()
        )));
    }
    let m_primes = distinct_primes(m, tables)?;
    let mut acc = CompensatedSum::new();
    let mut terms = 0u64;
    for z in 1..=z_max {
        if tables.mobius(z)? == 0 || m_primes.iter().any(|&p| z % p == 0) {
            continue;
        }
        let mut w = 1.0f64;
        tables.for_each_prime_factor(z, |p| {
            let p2 = (p * p) as f64;
            w *= p2 / (p2 - 1.0);
        });
        acc.add(w);
        terms += 1;
    }
    let sum = TrackedValue::new(
        acc.value(),
        acc.roundoff_bound() + 32.0 * f64::EPSILON * acc.abs_sum(),
        "squarefree-weight-average",
    );
    let c2 = const_c2(DEFAULT_P0.min(tables.limit()), tables)?;
    let mut shape = 1.0f64;
    for &p in &m_primes {
        let pf = p as f64;
        shape *= (1.0 - 1.0 / pf) * (1.0 + 1.0 / pf) / (1.0 + 1.0 / pf - 1.0 / (pf * pf));
    }
    let main_value = c2.value * shape * z_max as f64;
    let main_term = TrackedValue::new(
        main_value,
        main_value.abs() * (c2.rel_error() + 16.0 * f64::EPSILON),
        "squarefree-weight-main",
    );
    let residual = sum.value - main_term.value;
    Ok(AverageReport {
        sum,
        main_term,
        residual,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> PrimeTables {
        PrimeTables::build(1_000_000).unwrap()
    }

    fn brute_restricted(spec: &RestrictedSumSpec, t: &PrimeTables) -> f64 {
        let mut acc = 0.0f64;
        for n in 1..=spec.x {
            if t.mobius(n).unwrap() == 0 {
                continue;
            }
            let ok = match spec.a {
                Some(a) => n % spec.q == a % spec.q && gcd(n, spec.m) == 1,
                None => gcd(n, spec.q * spec.m) == 1,
            };
            if !ok {
                continue;
            }
            let r = n as f64 / t.totient(n).unwrap() as f64;
            acc += match spec.weight {
                SumWeight::Mu2 => 1.0,
                SumWeight::Mu2N2OverPhi2 => r * r,
            };
        }
        acc
    }

    #[test]
    fn envelope_picks_the_smaller_branch() {
        let t = sigma_envelope(100, 1).unwrap();
        let l = 300.0f64.ln();
        assert!((t - (100.0 + l * l)).abs() < 1e-12);
        // Large q: the (X/q + 1) loglog^2 branch wins.
        let s = sigma_envelope(1_000_000, 1_000_000).unwrap();
        assert!(s < 20.0, "{s}");
        assert!(sigma_envelope(0, 1).is_err());
    }

    #[test]
    fn restricted_sum_matches_hand_count() {
        let t = tables();
        let spec = RestrictedSumSpec {
            x: 20,
            q: 3,
            a: Some(1),
            m: 1,
            weight: SumWeight::Mu2,
        };
        let s = restricted_sum(&spec, &t).unwrap();
        // Squarefree n = 1 (mod 3) up to 20: 1, 7, 10, 13, 19.
        assert_eq!(s.value.value, 5.0);
        assert_eq!(s.value.abs_error, 0.0);
    }

    #[test]
    fn restricted_sum_matches_bruteforce() {
        let t = tables();
        let grid = [
            RestrictedSumSpec { x: 500, q: 4, a: Some(1), m: 15, weight: SumWeight::Mu2 },
            RestrictedSumSpec { x: 500, q: 4, a: Some(1), m: 15, weight: SumWeight::Mu2N2OverPhi2 },
            RestrictedSumSpec { x: 300, q: 1, a: None, m: 10, weight: SumWeight::Mu2N2OverPhi2 },
            RestrictedSumSpec { x: 400, q: 7, a: Some(3), m: 1, weight: SumWeight::Mu2N2OverPhi2 },
            RestrictedSumSpec { x: 350, q: 6, a: None, m: 5, weight: SumWeight::Mu2 },
        ];
        for spec in grid {
            let got = restricted_sum(&spec, &t).unwrap().value.value;
            let want = brute_restricted(&spec, &t);
            assert!(
                (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                "{spec:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn restricted_sum_rejects_bad_specs() {
        let t = tables();
        let bad_class = RestrictedSumSpec { x: 100, q: 6, a: Some(2), m: 1, weight: SumWeight::Mu2 };
        assert!(restricted_sum(&bad_class, &t).is_err());
        let bad_pair = RestrictedSumSpec { x: 100, q: 6, a: Some(1), m: 3, weight: SumWeight::Mu2 };
        assert!(restricted_sum(&bad_pair, &t).is_err());
        let too_big = RestrictedSumSpec { x: RESTRICTED_X_MAX + 1, q: 1, a: None, m: 1, weight: SumWeight::Mu2 };
        assert!(restricted_sum(&too_big, &t).is_err());
    }

    #[test]
    fn starred_main_term_is_close() {
        let t = tables();
        // Squarefree count coprime to 6 up to 10^6 vs (6/pi^2) X / phi_{-1}(6).
        let spec = RestrictedSumSpec { x: 1_000_000, q: 6, a: None, m: 1, weight: SumWeight::Mu2 };
        let s = restricted_sum(&spec, &t).unwrap();
        assert!(
            (s.residual / s.main_term.value).abs() < 1e-2,
            "relative gap {}",
            s.residual / s.main_term.value
        );
        // Congruence form: residue class 2 mod 5.
        let spec5 = RestrictedSumSpec { x: 1_000_000, q: 5, a: Some(2), m: 1, weight: SumWeight::Mu2 };
        let s5 = restricted_sum(&spec5, &t).unwrap();
        assert!((s5.residual / s5.main_term.value).abs() < 1e-2);
        // Totient-ratio weight should track its shifted main term as well.
        let specw = RestrictedSumSpec { x: 1_000_000, q: 5, a: Some(2), m: 1, weight: SumWeight::Mu2N2OverPhi2 };
        let sw = restricted_sum(&specw, &t).unwrap();
        assert!(
            (sw.residual / sw.main_term.value).abs() < 1e-2,
            "relative gap {}",
            sw.residual / sw.main_term.value
        );
        // The envelope bounds the weighted sum up to a modest constant.
        assert!(sw.envelope_ratio > 0.0 && sw.envelope_ratio < 4.0, "{}", sw.envelope_ratio);
    }

    #[test]
    fn main_term_residual_shrinks_with_scale() {
        let t = tables();
        let rel = |x: u64| {
            let spec = RestrictedSumSpec { x, q: 4, a: Some(1), m: 3, weight: SumWeight::Mu2N2OverPhi2 };
            let s = restricted_sum(&spec, &t).unwrap();
            (s.residual / s.main_term.value).abs()
        };
        let (r4, r5, r6) = (rel(10_000), rel(100_000), rel(1_000_000));
        assert!(r5 < r4 && r6 < r5, "{r4} {r5} {r6}");
    }

    #[test]
    fn variance_single_class_squares_the_remainder() {
        let t = tables();
        for weight in [SumWeight::Mu2, SumWeight::Mu2N2OverPhi2] {
            let v = variance_m2(10_000, 1, 1, weight, &t).unwrap();
            let spec = RestrictedSumSpec { x: 10_000, q: 1, a: Some(0), m: 1, weight };
            let s = restricted_sum(&spec, &t).unwrap();
            assert_eq!(v.classes, 1);
            assert!(
                (v.value - s.residual * s.residual).abs() <= 1e-9 * (1.0 + v.value),
                "{weight:?}: {} vs {}",
                v.value,
                s.residual * s.residual
            );
            assert!(v.bound_ratio.is_finite() && v.bound_ratio >= 0.0);
        }
    }

    #[test]
    fn variance_bound_ratio_does_not_explode() {
        let t = tables();
        let small = variance_m2(10_000, 11, 1, SumWeight::Mu2, &t).unwrap();
        let large = variance_m2(100_000, 101, 1, SumWeight::Mu2, &t).unwrap();
        assert!(
            large.bound_ratio <= small.bound_ratio * 3.0,
            "{} vs {}",
            large.bound_ratio,
            small.bound_ratio
        );
        // Extra coprimality dilates the variance by at most psi_{1/2}(2)^4
        // (up to small-scale noise).
        let m1 = variance_m2(50_000, 13, 1, SumWeight::Mu2, &t).unwrap();
        let m2 = variance_m2(50_000, 13, 2, SumWeight::Mu2, &t).unwrap();
        let psi = 1.0 + 2.0f64.powf(-0.5);
        assert!(
            m2.value <= m1.value * psi.powi(4) * 1.2,
            "{} vs {}",
            m2.value,
            m1.value
        );
    }

    #[test]
    fn variance_rejects_bad_parameters() {
        let t = tables();
        assert!(variance_m2(100, 4, 1, SumWeight::Mu2, &t).is_err()); // q not squarefree
        assert!(variance_m2(100, 6, 3, SumWeight::Mu2, &t).is_err()); // gcd(q, m) > 1
        assert!(variance_m2(10, 20, 1, SumWeight::Mu2, &t).is_err()); // q > x
    }

    #[test]
    fn variance_is_deterministic_across_thread_counts() {
        let t = tables();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| variance_m2(100_000, 101, 1, SumWeight::Mu2, &t).unwrap().value)
        };
        assert_eq!(run(1).to_bits(), run(3).to_bits());
    }

    #[test]
    fn w_density_hand_values() {
        let t = tables();
        assert_eq!(w_density(1, 1, 1, &t).unwrap(), 1.0);
        // Single modulus prime: alpha_2 = (1/2)^2 / (5/4) = 1/5.
        assert!((w_density(2, 1, 1, &t).unwrap() - 0.2).abs() < 1e-15);
        // Prime dividing exactly one coefficient: beta_2 = (3/4)/(5/4) = 3/5.
        assert!((w_density(1, 2, 1, &t).unwrap() - 0.6).abs() < 1e-15);
        // Prime dividing both coefficients gets the alpha factor.
        assert!((w_density(1, 2, 2, &t).unwrap() - 0.2).abs() < 1e-15);
        // Mixed: q = 3, a1 = 6, a2 = 10 -> alpha_3 alpha_2 beta_3 beta_5.
        let want = 0.4 * 0.2 * 0.7 * (21.0 / 26.0);
        assert!((w_density(3, 6, 10, &t).unwrap() - want).abs() < 1e-14);
        // Starred examples: phi_2(2) = 0 kills the density.
        assert_eq!(w_star_density(2, 1, 1, 1, &t).unwrap(), 0.0);
        assert!(w_star_density(2, 2, 1, 1, &t).is_err()); // gcd(g, q) > 1
    }

    #[test]
    fn w_star_average_matches_literal_sum() {
        let t = tables();
        let (g, q, cap) = (3u64, 2u64, 60u64);
        let mut brute = 0.0f64;
        for a1 in 1..=cap {
            for a2 in 1..=cap {
                if gcd(a1 * a2, g * q) == 1 {
                    brute += w_star_density(g, q, a1, a2, &t).unwrap();
                }
            }
        }
        let fast = w_star_average(g, q, cap, cap, &t).unwrap();
        assert!(
            (fast.sum.value - brute).abs() <= 1e-10 * brute.abs().max(1.0),
            "{} vs {brute}",
            fast.sum.value
        );
    }

    #[test]
    fn w_star_single_average_consistent_with_bivariate() {
        let t = tables();
        let (g, q, a1_cap, a2_cap) = (3u64, 2u64, 40u64, 250u64);
        let mut total = 0.0f64;
        for a1 in 1..=a1_cap {
            if gcd(a1, g * q) != 1 {
                continue;
            }
            total += w_star_average_single(g, q, a1, a2_cap, &t).unwrap().sum.value;
        }
        let both = w_star_average(g, q, a1_cap, a2_cap, &t).unwrap();
        assert!(
            (total - both.sum.value).abs() <= 1e-9 * both.sum.value.abs().max(1.0),
            "{total} vs {}",
            both.sum.value
        );
        // The lemma's setting requires a coprime offset.
        assert!(w_star_average_single(3, 2, 2, 10, &t).is_err());
    }

    #[test]
    fn w_star_average_tracks_main_term() {
        let t = tables();
        let rel = |a: u64| {
            let r = w_star_average(1, 3, a, a, &t).unwrap();
            (r.residual / r.main_term.value).abs()
        };
        let (coarse, fine) = (rel(1_000), rel(10_000));
        assert!(fine < coarse, "residual ratio {fine} vs {coarse}");
        // Error-shape budget: |sum - main| <= kappa 2^omega(gq) (A1+A2) log(2 A1 A2).
        let r = w_star_average(1, 3, 10_000, 10_000, &t).unwrap();
        let budget = 2.0 * 20_000.0 * (2.0e8f64).ln();
        assert!(r.residual.abs() <= budget, "{} vs {budget}", r.residual);
    }

    #[test]
    fn pair_counter_matches_literal_definition() {
        let t = tables();
        for star in [false, true] {
            let spec = PairCountSpec { x_max: 40, y_max: 40, g: 2, q: 3, a1: 1, a2: 1, star };
            let got = pair_counter(&spec, &t).unwrap();
            let mut want = 0.0f64;
            let mut n_terms = 0u64;
            for x in 1..=spec.x_max {
                for y in 1..=spec.y_max {
                    if t.mobius(x).unwrap() == 0 || t.mobius(y).unwrap() == 0 {
                        continue;
                    }
                    if (spec.a1 * x + spec.a2 * y) % spec.q != 0 {
                        continue;
                    }
                    if gcd(x, spec.a2 * spec.g * spec.q) != 1 {
                        continue;
                    }
                    if gcd(y, spec.a1 * spec.g * spec.q * x) != 1 {
                        continue;
                    }
                    if star && gcd(spec.a1 * x + spec.a2 * y, spec.g) != 1 {
                        continue;
                    }
                    let rx = x as f64 / t.totient(x).unwrap() as f64;
                    let ry = y as f64 / t.totient(y).unwrap() as f64;
                    want += rx * rx * ry * ry;
                    n_terms += 1;
                }
            }
            assert_eq!(got.terms, n_terms, "star = {star}");
            assert!(
                (got.sum.value - want).abs() <= 1e-10 * want.max(1.0),
                "star = {star}: {} vs {want}",
                got.sum.value
            );
        }
    }

    #[test]
    fn pair_counter_approaches_main_term() {
        let t = tables();
        let spec = PairCountSpec { x_max: 3_000, y_max: 3_000, g: 1, q: 2, a1: 1, a2: 1, star: false };
        let r = pair_counter(&spec, &t).unwrap();
        let ratio = r.sum.value / r.main_term.value;
        assert!((0.8..1.2).contains(&ratio), "ratio {ratio}");
        assert!(pair_counter(&PairCountSpec { q: 4, ..spec }, &t).is_err());
        assert!(pair_counter(&PairCountSpec { a1: 6, ..spec }, &t).is_err());
    }

    #[test]
    fn n_count_matches_bruteforce() {
        let t = tables();
        let brute = |a1_max: u64, a2_max: u64, g: u64, x: u64, y: u64, z: u64| {
            let q1 = g * y * z;
            let mut count = 0u64;
            for a1 in 1..=a1_max {
                if gcd(a1, q1) != 1 {
                    continue;
                }
                for a2 in 1..=a2_max {
                    let s = a1 * x + a2 * y;
                    if s % z == 0 && gcd(a2, g * x) == 1 && gcd(s, g) == 1 {
                        count += 1;
                    }
                }
            }
            count
        };
        let grid = [
            (10u64, 10u64, 1u64, 1u64, 1u64, 1u64),
            (37, 10, 1, 1, 1, 2),
            (10, 37, 2, 3, 5, 7),
            (37, 37, 1, 2, 1, 3),
            (25, 40, 3, 1, 2, 1),
            (1_000, 1_000, 1, 1, 1, 2),
        ];
        for (a1m, a2m, g, x, y, z) in grid {
            let got = n_count(a1m, a2m, g, x, y, z, &t).unwrap();
            let want = brute(a1m, a2m, g, x, y, z);
            assert_eq!(got.count, want, "({a1m},{a2m},{g},{x},{y},{z})");
        }
        // Trivial system counts everything; the main term is exact there.
        let all = n_count(50, 70, 1, 1, 1, 1, &t).unwrap();
        assert_eq!(all.count, 3_500);
        assert_eq!(all.main_term, 3_500.0);
        // Empty ranges count zero.
        assert_eq!(n_count(0, 10, 1, 1, 1, 2, &t).unwrap().count, 0);
        // Non-squarefree systems are rejected.
        assert!(n_count(10, 10, 2, 2, 1, 1, &t).is_err());
        assert!(n_count(10, 10, 2, 1, 1, 4, &t).is_err());
    }

    #[test]
    fn n_count_main_term_converges() {
        let t = tables();
        let rel = |a: u64| {
            let r = n_count(a, a, 1, 2, 1, 3, &t).unwrap();
            (r.residual / r.main_term).abs()
        };
        assert!(rel(3_000) < rel(300), "{} vs {}", rel(3_000), rel(300));
        assert!(rel(3_000) < 0.02, "{}", rel(3_000));
    }

    #[test]
    fn f1_f2_local_values_and_multiplicativity() {
        let t = tables();
        // f1(p) = p^2/(p-1)^2 - 1 by local-factor division.
        for p in [2u64, 3, 5, 7, 11] {
            let pf = p as f64;
            let want = pf * pf / ((pf - 1.0) * (pf - 1.0)) - 1.0;
            assert!((f1_at(p, &t).unwrap() - want).abs() < 1e-14, "p = {p}");
        }
        assert!((f1_at(4, &t).unwrap() + 3.0).abs() < 1e-14);
        assert!((f1_at(6, &t).unwrap() - 3.75).abs() < 1e-14);
        // f2 at a shared prime: -(2 beta_2 + 1) = -7.
        assert!((f2_at(2, 2, &t).unwrap() + 7.0).abs() < 1e-14);
        assert_eq!(f2_at(1, 1, &t).unwrap(), 1.0);
        // Multiplicativity over coprime parts.
        for (m, n) in [(4u64, 9u64), (8, 15), (25, 12), (7, 16)] {
            let lhs = f1_at(m * n, &t).unwrap();
            let rhs = f1_at(m, &t).unwrap() * f1_at(n, &t).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "({m},{n})");
        }
        let lhs = f2_at(2 * 9, 4 * 3, &t).unwrap();
        let rhs = f2_at(2, 4, &t).unwrap() * f2_at(9, 3, &t).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn convolution_identities_hold() {
        let t = tables();
        let rep = convolution_ids(20_000, &t).unwrap();
        assert_eq!(rep.lambda_max_gap, 0.0);
        assert!(rep.f1_max_rel_gap < 1e-11, "{}", rep.f1_max_rel_gap);
        assert!(rep.f2_max_gap < 1e-9, "{}", rep.f2_max_gap);
        assert!(rep.pairs_checked > 100_000);
        // Partial sums approach zeta(2)^3/zeta(4) = 5 pi^2/12.
        let want = 5.0 * PI * PI / 12.0;
        assert!((rep.partial_limit - want).abs() < 1e-12);
        let gap_at = |d: u64| {
            rep.partial_sums
                .iter()
                .find(|&&(cap, _)| cap == d)
                .map(|&(_, v)| (v - rep.partial_limit).abs())
                .unwrap()
        };
        assert!(gap_at(10_000) < gap_at(100), "{} vs {}", gap_at(10_000), gap_at(100));
        assert!(gap_at(10_000) < 1e-3, "{}", gap_at(10_000));
        assert!(convolution_ids(5, &t).is_err());
    }

    #[test]
    fn dirichlet_partial_examples() {
        let t = tables();
        // Identity element: dyadic mean is the harmonic window, near log 2.
        let d = dirichlet_partial(XiKind::DeltaOne, 10_000, PartialMode::DyadicMean, &t).unwrap();
        assert_eq!(d.limit, 1.0);
        assert!(d.gap.abs() < 1e-3, "{}", d.gap);
        // Cumulative identity: exactly T.
        let c = dirichlet_partial(XiKind::DeltaOne, 1_000, PartialMode::Cumulative, &t).unwrap();
        assert_eq!(c.value, 1_000.0);
        assert!((c.gap).abs() < 1e-9);
        // mu/n: limit 1/zeta(2), gap within the mass-over-sqrt budget.
        let m = dirichlet_partial(XiKind::MuOverN, 100_000, PartialMode::DyadicMean, &t).unwrap();
        assert!((m.limit - 6.0 / (PI * PI)).abs() < 1e-12);
        assert!(m.gap.abs() < 0.01, "{}", m.gap);
        // mu^2/n and lambda/n limits.
        let s = dirichlet_partial(XiKind::MuSquaredOverN, 50_000, PartialMode::DyadicMean, &t).unwrap();
        assert!((s.limit - 15.0 / (PI * PI)).abs() < 1e-12);
        assert!(s.gap.abs() < 0.01, "{}", s.gap);
        let l = dirichlet_partial(XiKind::LiouvilleOverN, 50_000, PartialMode::DyadicMean, &t).unwrap();
        assert!((l.limit - PI * PI / 15.0).abs() < 1e-12);
        assert!(l.gap.abs() < 0.01, "{}", l.gap);
        // Divergent-mass coefficients are rejected.
        assert!(dirichlet_partial(XiKind::MuRaw, 100, PartialMode::DyadicMean, &t).is_err());
    }

    #[test]
    fn dirichlet_gap_shrinks_dyadically() {
        let t = tables();
        let gap = |tt: u64| {
            dirichlet_partial(XiKind::MuOverN, tt, PartialMode::DyadicMean, &t)
                .unwrap()
                .gap
                .abs()
        };
        assert!(gap(100_000) < gap(10_000), "{} vs {}", gap(100_000), gap(10_000));
    }

    #[test]
    fn squarefree_weight_average_matches_density() {
        let t = tables();
        let free = squarefree_weight_average(200_000, 1, &t).unwrap();
        assert!(
            (free.residual / free.main_term.value).abs() < 5e-3,
            "relative gap {}",
            free.residual / free.main_term.value
        );
        // Coprimality to 6 thins the sum by the phi_1 phi_{-1} / phi_tilde shape.
        let thin = squarefree_weight_average(200_000, 6, &t).unwrap();
        assert!(
            (thin.residual / thin.main_term.value).abs() < 5e-3,
            "relative gap {}",
            thin.residual / thin.main_term.value
        );
        assert!(thin.sum.value < free.sum.value);
        // Residual ratio shrinks with scale.
        let coarse = squarefree_weight_average(10_000, 1, &t).unwrap();
        let rel_c = (coarse.residual / coarse.main_term.value).abs();
        let rel_f = (free.residual / free.main_term.value).abs();
        assert!(rel_f < rel_c, "{rel_f} vs {rel_c}");
    }
}
