//! Sliding-window moments of the prime-counting remainder and weighted
//! constellation counts.
//!
//! Capabilities:
//! - segmented von Mangoldt sieve producing `Lambda(n)` for any window
//!   `[lo, lo + len)` whose square root is covered by the prime tables;
//! - Chebyshev `psi(x)` accumulated segment by segment in a fixed order, so
//!   the segmented value is bit-identical to a single full-array pass;
//! - `moment_mk`: the centered window moment
//!   `M_k(X, h) = (1/X) sum_{1<=n<=X} (psi(n+h) - psi(n) - h)^k` maintained
//!   by a ring-buffered sliding window over one streaming pass (`O(X)` time,
//!   one segment of memory), reported next to the matching leading-order
//!   prediction;
//! - `moment_mk_split`: the same moment computed over disjoint subranges
//!   with overlap `h` and a fixed merge order, so the result does not depend
//!   on the number of worker threads;
//! - closed-form predictions: the Gaussian-moment formula for even `k`, the
//!   second-order main term for `k = 3`, `prediction_mk_odd` for odd
//!   `k >= 5` (leading order only), and `m3_expansion_terms` splitting the
//!   cubic main term into its three source components;
//! - `hl_count`: exact `Lambda`-weighted counts of shifted prime tuples
//!   compared against the singular-series prediction `S(D) x`.
//!
//! Windows weigh prime powers like primes (`psi` and `Lambda`, not `theta`):
//! the moments are defined through `psi`, so the sieve keeps every `p^j`.

use crate::constants::{const_b, mu_k};
use crate::error::{Error, Result};
use crate::singular::{OffsetSet, SingularSeries};
use crate::summation::CompensatedSum;
use crate::tables::PrimeTables;
use crate::tracked::TrackedValue;
use rayon::prelude::*;

/// Largest supported scan range for moments and weighted counts.
pub const MOMENT_X_MAX: u64 = 1_000_000_000;

/// Largest supported moment order.
pub const MOMENT_K_MAX: u32 = 6;

/// Largest tuple size accepted by [`hl_count`].
pub const HL_K_MAX: usize = 3;

/// Values sieved per segment; one segment is the whole working set of the
/// streaming pass.
const SEGMENT_LEN: usize = 1 << 20;

/// Steps between scratch recomputations of the incrementally maintained
/// window sum; keeps the additive float drift far below one unit in the
/// last place of any window value.
const REANCHOR_STEPS: u64 = 1 << 16;

/// Largest offset accepted by [`hl_count`] (bounds the ring buffer).
const HL_OFFSET_MAX: u64 = 1 << 20;

/// `Lambda(lo), Lambda(lo+1), ..., Lambda(lo+len-1)`: `log p` at prime
/// powers `p^j`, `0` elsewhere.
///
/// Marks composites with the base primes `p <= sqrt(lo+len-1)` (which must
/// be covered by `tables`), assigns `log n` to the unmarked entries, then
/// overwrites proper prime powers with `log p`. The value written for a
/// given `n` does not depend on the segment boundaries.
pub fn lambda_segment(lo: u64, len: usize, tables: &PrimeTables) -> Result<Vec<f64>> {
    if lo == 0 {
        return Err(Error::domain("lambda_segment indexes from 1"));
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    let hi = lo
        .checked_add(len as u64 - 1)
        .ok_or_else(|| Error::numeric("lambda_segment range overflows u64"))?;
    let root = hi.isqrt();
    if root > tables.limit() {
        return Err(Error::bounds(format!(
            "lambda_segment up to {hi} needs primes up to {root}, tables stop at {}",
            tables.limit()
        )));
    }

    let mut composite = vec![false; len];
    if lo == 1 {
        composite[0] = true;
    }
    for &p32 in tables.primes() {
        let p = p32 as u64;
        if p > root {
            break;
        }
        let mut m = (p * 2).max(lo.div_ceil(p) * p);
        while m <= hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }

    let mut values = vec![0.0f64; len];
    for (i, flag) in composite.iter().enumerate() {
        if !flag {
            values[i] = ((lo + i as u64) as f64).ln();
        }
    }
    for &p32 in tables.primes() {
        let p = p32 as u64;
        if p > root {
            break;
        }
        let log_p = (p as f64).ln();
        let mut q = p * p;
        loop {
            if q >= lo {
                values[(q - lo) as usize] = log_p;
            }
            match q.checked_mul(p) {
                Some(next) if next <= hi => q = next,
                _ => break,
            }
        }
    }
    Ok(values)
}

/// Chebyshev `psi(x) = sum_{n <= x} Lambda(n)`, accumulated in increasing
/// `n` over segments of [`SEGMENT_LEN`] values.
///
/// The summation order is independent of the segmentation, so the result is
/// bit-identical to a single full-array sieve followed by one compensated
/// pass. The error bar covers float roundoff only.
pub fn psi(x: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    if x == 0 || x > MOMENT_X_MAX {
        return Err(Error::bounds(format!(
            "psi supports 1 <= x <= {MOMENT_X_MAX}, got {x}"
        )));
    }
    let mut sum = CompensatedSum::new();
    let mut lo = 1u64;
    while lo <= x {
        let len = SEGMENT_LEN.min((x - lo + 1) as usize);
        for v in lambda_segment(lo, len, tables)? {
            sum.add(v);
        }
        lo += len as u64;
    }
    Ok(TrackedValue::new(
        sum.value(),
        sum.roundoff_bound() + 4.0 * f64::EPSILON * sum.abs_sum(),
        "chebyshev-psi",
    ))
}

/// Forward-only reader of `Lambda` values, re-sieving one segment at a time.
struct LambdaCursor<'a> {
    tables: &'a PrimeTables,
    values: Vec<f64>,
    lo: u64,
    hi: u64,
    end: u64,
}

impl<'a> LambdaCursor<'a> {
    fn new(end: u64, tables: &'a PrimeTables) -> LambdaCursor<'a> {
        LambdaCursor { tables, values: Vec::new(), lo: 1, hi: 0, end }
    }

    /// `Lambda(m)`; `m` must be non-decreasing across calls.
    fn get(&mut self, m: u64) -> Result<f64> {
        if m > self.hi {
            let len = SEGMENT_LEN.min((self.end - m + 1) as usize);
            self.values = lambda_segment(m, len, self.tables)?;
            self.lo = m;
            self.hi = m + len as u64 - 1;
        }
        Ok(self.values[(m - self.lo) as usize])
    }
}

/// Stream the window sums `W(n) = psi(n+h) - psi(n) = sum_{n < m <= n+h}
/// Lambda(m)` for `n = a..=b`, calling `visit(n, W(n))` in order.
///
/// The window is kept in a ring buffer indexed by `m mod h` and advanced by
/// `W(n) = W(n-1) - Lambda(n) + Lambda(n+h)`; every [`REANCHOR_STEPS`] steps
/// it is recomputed from the ring in fixed slot order, which bounds the
/// additive drift independently of the range length.
fn stream_windows(
    a: u64,
    b: u64,
    h: u64,
    tables: &PrimeTables,
    mut visit: impl FnMut(u64, f64),
) -> Result<()> {
    debug_assert!(a >= 1 && a <= b && h >= 1);
    let slots = h as usize;
    let mut ring = vec![0.0f64; slots];
    let mut cursor = LambdaCursor::new(b + h, tables);
    let mut window = 0.0f64;
    for m in a + 1..=a + h {
        let v = cursor.get(m)?;
        ring[(m % h) as usize] = v;
        window += v;
    }
    visit(a, window);
    let mut since_anchor = 0u64;
    for n in a + 1..=b {
        let fresh = cursor.get(n + h)?;
        let slot = (n % h) as usize;
        window = window - ring[slot] + fresh;
        ring[slot] = fresh;
        since_anchor += 1;
        if since_anchor == REANCHOR_STEPS {
            window = 0.0;
            for &v in ring.iter() {
                window += v;
            }
            since_anchor = 0;
        }
        visit(n, window);
    }
    Ok(())
}

/// One window moment next to its leading-order prediction.
///
/// `empirical = (1/X) sum_{1<=n<=X} (psi(n+h) - psi(n) - h)^k`, accumulated
/// in compensated binary64. `predicted` evaluates the matching asymptotic
/// main term with every `o(1)` set to zero (leading order only), and
/// `ratio = empirical / predicted` when the prediction is nonzero (`NaN`
/// otherwise, as for `k = 1` where the prediction vanishes).
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub x: u64,
    pub h: u64,
    pub k: u32,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
}

fn moment_preconditions(x: u64, h: u64, k: u32, tables: &PrimeTables) -> Result<()> {
    if k == 0 || k > MOMENT_K_MAX {
        return Err(Error::bounds(format!(
            "moment_mk supports 1 <= k <= {MOMENT_K_MAX}, got {k}"
        )));
    }
    if x < 2 || x > MOMENT_X_MAX {
        return Err(Error::bounds(format!(
            "moment_mk supports 2 <= X <= {MOMENT_X_MAX}, got {x}"
        )));
    }
    if h == 0 {
        return Err(Error::domain("moment_mk needs h >= 1"));
    }
    if (h as u128).pow(3) > x as u128 {
        return Err(Error::domain(format!(
            "window h = {h} too large relative to X = {x}: needs h <= X^(1/3)"
        )));
    }
    let top = x + h;
    if top.isqrt() > tables.limit() {
        return Err(Error::bounds(format!(
            "scanning up to {top} needs primes up to {}, tables stop at {}",
            top.isqrt(),
            tables.limit()
        )));
    }
    Ok(())
}

fn assemble_moment(x: u64, h: u64, k: u32, total: f64) -> Result<MomentEstimate> {
    let empirical = total / x as f64;
    let predicted = prediction_mk(x, h, k)?;
    let ratio = if predicted != 0.0 { empirical / predicted } else { f64::NAN };
    Ok(MomentEstimate { x, h, k, empirical, predicted, ratio })
}

/// `M_k(X, h)` by one sequential streaming pass.
///
/// Requires `X <= 10^9`, `h <= X^(1/3)` (larger windows are a domain
/// error), `1 <= k <= 6`, and prime tables covering `sqrt(X + h)`. For
/// `k = 5` the prediction additionally needs `h >= 3`.
pub fn moment_mk(x: u64, h: u64, k: u32, tables: &PrimeTables) -> Result<MomentEstimate> {
    moment_preconditions(x, h, k, tables)?;
    let mut sum = CompensatedSum::new();
    let center = h as f64;
    let power = k as i32;
    stream_windows(1, x, h, tables, |_, w| {
        sum.add((w - center).powi(power));
    })?;
    assemble_moment(x, h, k, sum.value())
}

/// `M_k(X, h)` over `parts` contiguous subranges of `[1, X]`, each streamed
/// independently (re-sieving an overlap of `h` values at its left edge) and
/// merged in fixed index order.
///
/// The split points depend only on `(X, parts)` and the merge order is
/// fixed, so the result is bit-identical under any thread count; it agrees
/// with [`moment_mk`] to relative `1e-9` (exactly, for `parts = 1`).
pub fn moment_mk_split(
    x: u64,
    h: u64,
    k: u32,
    parts: usize,
    tables: &PrimeTables,
) -> Result<MomentEstimate> {
    moment_preconditions(x, h, k, tables)?;
    if parts == 0 {
        return Err(Error::domain("moment_mk_split needs parts >= 1"));
    }
    let chunk = x.div_ceil(parts as u64);
    let ranges: Vec<(u64, u64)> = (0..parts as u64)
        .map(|i| (1 + i * chunk, x.min((i + 1) * chunk)))
        .filter(|&(a, b)| a <= b)
        .collect();
    let center = h as f64;
    let power = k as i32;
    let partials: Result<Vec<CompensatedSum>> = ranges
        .par_iter()
        .map(|&(a, b)| {
            let mut sum = CompensatedSum::new();
            stream_windows(a, b, h, tables, |_, w| {
                sum.add((w - center).powi(power));
            })?;
            Ok(sum)
        })
        .collect();
    let mut total = CompensatedSum::new();
    for part in partials? {
        total.merge(&part);
    }
    assemble_moment(x, h, k, total.value())
}

/// `sum_{j=0..K} (-1)^j K!/(K-j)! u^(K-j)`: the polynomial `P_K` with
/// `d/dX [X P_K(log X + c)] = (log X + c)^K`, evaluated at `u = log X + c`.
fn even_log_poly(u: f64, big_k: u32) -> f64 {
    let mut sum = 0.0f64;
    let mut falling = 1.0f64;
    let mut sign = 1.0f64;
    for j in 0..=big_k {
        if j > 0 {
            falling *= (big_k - j + 1) as f64;
            sign = -sign;
        }
        sum += sign * falling * u.powi((big_k - j) as i32);
    }
    sum
}

/// Even-moment prediction `mu_{2K} h^K (1/X) int_0^X (log(x/h) + B)^K dx`
/// for `k = 2K`, with the integral in closed form.
fn prediction_even(x: u64, h: u64, big_k: u32) -> Result<f64> {
    let u = (x as f64 / h as f64).ln() + const_b().value;
    let mu = mu_k(2 * big_k)?.value;
    Ok(mu * (h as f64).powi(big_k as i32) * even_log_poly(u, big_k))
}

/// Leading-order prediction for `M_k(X, h)`, dispatching on `k`.
///
/// `k = 1` predicts `0` exactly; even `k` uses the Gaussian-moment
/// integral; `k = 3` sums the three components of [`m3_expansion_terms`];
/// `k = 5` delegates to [`prediction_mk_odd`] with `K = 2`. Every `o(1)` is
/// evaluated as `0`, so the values are leading order only.
pub fn prediction_mk(x: u64, h: u64, k: u32) -> Result<f64> {
    if k == 0 || k > MOMENT_K_MAX {
        return Err(Error::bounds(format!(
            "prediction_mk supports 1 <= k <= {MOMENT_K_MAX}, got {k}"
        )));
    }
    if x < 2 || h == 0 {
        return Err(Error::domain("prediction_mk needs X >= 2 and h >= 1"));
    }
    match k {
        1 => Ok(0.0),
        3 => Ok(m3_parts(x as f64, h as f64).total()),
        5 => prediction_mk_odd(2, x, h),
        even => prediction_even(x, h, even / 2),
    }
}

/// Leading-order prediction for the odd moment `M_{2K+1}(X, h)`:
/// `(1/3) mu_{2K+2} K h^K (log(X/h))^(K-1)
///  ((9/2)(log h)^2 - 3 (log h)(log X) + (log X)^2)`,
/// with the `o(1)` factor evaluated as `0` (leading order only).
///
/// At `K = 1` the prefactor `(1/3) mu_4 = 1` reproduces the cubic main term
/// up to its `B`-shift: the difference from the `k = 3` prediction is
/// exactly `3 B h log X`.
pub fn prediction_mk_odd(big_k: u32, x: u64, h: u64) -> Result<f64> {
    if big_k == 0 {
        return Err(Error::bounds("prediction_mk_odd needs K >= 1"));
    }
    if x < 3 || h < 3 {
        return Err(Error::domain("prediction_mk_odd needs X >= 3 and h >= 3"));
    }
    let hf = h as f64;
    let xf = x as f64;
    let log_h = hf.ln();
    let log_x = xf.ln();
    let mu = mu_k(2 * big_k + 2)?.value;
    let quad = 4.5 * log_h * log_h - 3.0 * log_h * log_x + log_x * log_x;
    Ok(mu / 3.0
        * big_k as f64
        * hf.powi(big_k as i32)
        * (xf / hf).ln().powi(big_k as i32 - 1)
        * quad)
}

/// The three sources of the cubic main term, kept separate so an empirical
/// decomposition can be compared term by term.
///
/// `r3_part` is the distinct-triple contribution `(9/2) h (log h)^2`,
/// `r2_log_part` the squared-pair contribution `-3 h (log h - B) log X`,
/// and `diagonal_part` the fully diagonal `h (log X)^2`. Their sum is the
/// `k = 3` prediction, exactly.
#[derive(Debug, Clone, Copy)]
pub struct M3Expansion {
    pub r3_part: f64,
    pub r2_log_part: f64,
    pub diagonal_part: f64,
}

impl M3Expansion {
    /// `r3_part + r2_log_part + diagonal_part`, the cubic main term.
    pub fn total(&self) -> f64 {
        self.r3_part + self.r2_log_part + self.diagonal_part
    }
}

fn m3_parts(xf: f64, hf: f64) -> M3Expansion {
    let log_h = hf.ln();
    let log_x = xf.ln();
    M3Expansion {
        r3_part: 4.5 * hf * log_h * log_h,
        r2_log_part: -3.0 * hf * (log_h - const_b().value) * log_x,
        diagonal_part: hf * log_x * log_x,
    }
}

/// Components of the cubic main term
/// `h ((9/2)(log h)^2 - 3 (log h - B) log X + (log X)^2)`; needs
/// `X, h >= 3`.
pub fn m3_expansion_terms(x: u64, h: u64) -> Result<M3Expansion> {
    if x < 3 || h < 3 {
        return Err(Error::domain("m3_expansion_terms needs X >= 3 and h >= 3"));
    }
    Ok(m3_parts(x as f64, h as f64))
}

/// A `Lambda`-weighted tuple count next to its singular-series prediction.
///
/// `weighted = sum_{1<=n<=x} prod_j Lambda(n + d_j)` exactly as defined (in
/// compensated binary64); `predicted = S(D) x`. `ratio` divides the two
/// when the prediction is nonzero and is `NaN` otherwise; `admissible`
/// mirrors the singular-series admissibility flag (`false` forces a zero
/// prediction).
#[derive(Debug, Clone, Copy)]
pub struct WeightedCount {
    pub x: u64,
    pub weighted: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub admissible: bool,
}

/// Count `sum_{n<=x} prod_j Lambda(n + d_j)` against `S(D) x`.
///
/// Streams one sieve pass over `[1, x + max d_j]` with a ring buffer of
/// `max d_j + 1` values, skipping a tuple as soon as one factor vanishes.
/// Requires `x <= 10^9`, at most [`HL_K_MAX`] offsets, and prime tables
/// covering `sqrt(x + max d_j)`.
pub fn hl_count(d: &OffsetSet, x: u64, series: &SingularSeries) -> Result<WeightedCount> {
    if d.k() > HL_K_MAX {
        return Err(Error::domain(format!(
            "hl_count supports tuples of at most {HL_K_MAX} offsets, got {}",
            d.k()
        )));
    }
    if x == 0 || x > MOMENT_X_MAX {
        return Err(Error::bounds(format!(
            "hl_count supports 1 <= x <= {MOMENT_X_MAX}, got {x}"
        )));
    }
    let offsets = d.offsets();
    let d_max = offsets[offsets.len() - 1];
    if d_max > HL_OFFSET_MAX {
        return Err(Error::bounds(format!(
            "hl_count offsets capped at {HL_OFFSET_MAX}, got {d_max}"
        )));
    }
    let tables = series.tables();
    let top = x + d_max;
    if top.isqrt() > tables.limit() {
        return Err(Error::bounds(format!(
            "scanning up to {top} needs primes up to {}, tables stop at {}",
            top.isqrt(),
            tables.limit()
        )));
    }
    let singular = series.singular_s(d)?;

    let len = d_max + 1;
    let mut ring = vec![0.0f64; len as usize];
    let mut cursor = LambdaCursor::new(top, tables);
    let mut sum = CompensatedSum::new();
    for m in 1..=top {
        ring[(m % len) as usize] = cursor.get(m)?;
        if m > d_max {
            let n = m - d_max;
            let mut product = 1.0f64;
            for &dj in offsets {
                let v = ring[((n + dj) % len) as usize];
                if v == 0.0 {
                    product = 0.0;
                    break;
                }
                product *= v;
            }
            if product != 0.0 {
                sum.add(product);
            }
        }
    }
    let weighted = sum.value();
    let predicted = singular.value.value * x as f64;
    let ratio = if predicted != 0.0 { weighted / predicted } else { f64::NAN };
    Ok(WeightedCount { x, weighted, predicted, ratio, admissible: singular.admissible })
}
