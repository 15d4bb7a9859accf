//! Moment sums `R_k(h)` of the zero-mean singular series, their fast
//! sieve-table kernels, and the associated main-term comparisons.
//!
//! Capabilities:
//! - [`KernelTables`]: sieve-built tables giving `S({0,d})` and
//!   `S({0,g1,g1+g2})` in O(1)/O(log) per gap pattern;
//! - [`rk_sum`]: `R_1`, `R_2`, `R_3` by exact gap-pattern reduction with
//!   deterministic compensated accumulation (bit-identical across thread
//!   counts);
//! - [`rk_sum_bruteforce`]: the literal sum over ordered distinct tuples,
//!   used as an oracle at small `h`;
//! - [`r3_trend`], [`gallagher_ratio`], [`conjecture_main_term`]: the
//!   normalized third-moment trajectory, the first-moment normalization of
//!   the plain series, and the conjectured odd-moment main term.
//!
//! The third moment needs `~h^2/8` kernel evaluations; gcd corrections are
//! folded in through a divisor decomposition (the correction factor minus
//! one is supported on multiples of primes `>= 5`, so almost all pairs take
//! the plain three-table product).

use std::time::Instant;

use rayon::prelude::*;

use crate::constants::{const_b, hl_ck, hl_tail, r_odd, DEFAULT_P0};
use crate::error::{Error, Result};
use crate::singular::{OffsetSet, SingularSeries};
use crate::summation::CompensatedSum;
use crate::tables::{gcd, PrimeTables};
use crate::tracked::TrackedValue;

/// A translation-canonical summation index of `R_k(h)`: the gap vector
/// `(g_1, ..., g_{k-1})` of an offset tuple `{0, g_1, g_1+g_2, ...}`,
/// together with the ambient `h`. Valid when every gap is positive and the
/// total is at most `h - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapPattern {
    gaps: Vec<u64>,
    h: u64,
}

impl GapPattern {
    pub fn new(gaps: impl Into<Vec<u64>>, h: u64) -> Result<Self> {
        let gaps = gaps.into();
        if gaps.iter().any(|&g| g == 0) {
            return Err(Error::domain("gap pattern needs positive gaps"));
        }
        let total: u64 = gaps.iter().sum();
        if total + 1 > h {
            return Err(Error::domain(format!(
                "gap pattern spans {total}, exceeding h - 1 = {}",
                h.saturating_sub(1)
            )));
        }
        Ok(GapPattern { gaps, h })
    }

    pub fn gaps(&self) -> &[u64] {
        &self.gaps
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    /// Number of translates of the pattern inside `[1, h]`.
    pub fn weight(&self) -> u64 {
        self.h - self.gaps.iter().sum::<u64>()
    }

    /// The canonical offsets `{0, g_1, g_1+g_2, ...}`.
    pub fn offsets(&self) -> Vec<u64> {
        let mut out = vec![0u64];
        let mut acc = 0u64;
        for &g in &self.gaps {
            acc += g;
            out.push(acc);
        }
        out
    }
}

/// One evaluated moment: the tracked value, the closed-form main term it is
/// compared against, their difference, and the wall time spent.
#[derive(Debug, Clone, Copy)]
pub struct MomentRow {
    pub h: u64,
    pub k: u32,
    pub value: TrackedValue,
    pub main_term: f64,
    pub residual: f64,
    pub seconds: f64,
}

impl MomentRow {
    fn new(h: u64, k: u32, value: TrackedValue, main_term: f64, started: Instant) -> Self {
        MomentRow {
            h,
            k,
            value,
            main_term,
            residual: value.value - main_term,
            seconds: started.elapsed().as_secs_f64(),
        }
    }

    /// `value / (h log^2 h)`, the normalization under which the third
    /// moment approaches `9/2`.
    pub fn normalized_ratio(&self) -> f64 {
        let lh = (self.h as f64).ln();
        self.value.value / (self.h as f64 * lh * lh)
    }
}

/// Accumulation options: `row_chunk` controls how many kernel rows each
/// parallel task takes. Results are bit-identical for every setting.
#[derive(Debug, Clone, Copy)]
pub struct SumOptions {
    pub row_chunk: usize,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions { row_chunk: 64 }
    }
}

/// Per-prime correction `(p-1)(p-3)^2 / (p-2)^3` applied when a prime
/// `p >= 5` divides both gaps (it then divides all three pairwise
/// differences, so the two-residue factors overcount).
fn gcd_prime_correction(p: f64) -> f64 {
    (p - 1.0) * (p - 3.0) * (p - 3.0) / ((p - 2.0) * (p - 2.0) * (p - 2.0))
}

/// Sieve-built singular-series tables over gaps `1..=span`.
///
/// `pair[d]` is `S({0,d})` (zero for odd `d`); `p2[d]` collects
/// `prod_{p | d, p >= 5} (p-2)/(p-3)`, the two-residue correction entering
/// the triple kernel. The triple value follows as
/// `4 * head3(nu_3) * tail3 * p2[g1] p2[g2] p2[g1+g2] * C(gcd)` for even
/// gaps, zero otherwise.
pub struct KernelTables<'a> {
    tables: &'a PrimeTables,
    span: u64,
    pair: Vec<f64>,
    p2: Vec<f64>,
    hl2: TrackedValue,
    tail3: TrackedValue,
    /// Uniform relative error bound of a pair-table entry.
    rel2: f64,
    /// Uniform relative error bound of a triple-kernel entry.
    rel3: f64,
}

/// `9/4` at one occupied nonzero residue class mod 3, `9/8` at two, `0`
/// when all three classes are covered; indexed by `(g1 mod 3, s mod 3)`.
fn head3_table() -> [[f64; 3]; 3] {
    let mut t = [[0.0f64; 3]; 3];
    for (a, row) in t.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            let nu = 1 + usize::from(a != 0) + usize::from(b != 0 && b != a);
            *slot = match nu {
                1 => 9.0 / 4.0,
                2 => 9.0 / 8.0,
                _ => 0.0,
            };
        }
    }
    t
}

impl<'a> KernelTables<'a> {
    /// Build tables covering all gaps up to `span`.
    pub fn build(span: u64, tables: &'a PrimeTables) -> Result<Self> {
        if span < 1 {
            return Err(Error::bounds("kernel tables need span >= 1"));
        }
        if span > tables.limit() {
            return Err(Error::bounds(format!(
                "kernel span {span} exceeds the table limit {}",
                tables.limit()
            )));
        }
        let p0 = DEFAULT_P0.min(tables.limit());
        let hl2 = hl_ck(2, p0, tables)?;
        let tail3 = hl_tail(3, p0, tables)?;
        let n = span as usize + 1;
        let mut p1 = vec![1.0f64; n];
        let mut p2 = vec![1.0f64; n];
        for &p in tables.primes() {
            let p = p as u64;
            if p > span {
                break;
            }
            if p >= 3 {
                let r1 = (p - 1) as f64 / (p - 2) as f64;
                let mut m = p as usize;
                while m < n {
                    p1[m] *= r1;
                    m += p as usize;
                }
            }
            if p >= 5 {
                let r2 = (p - 2) as f64 / (p - 3) as f64;
                let mut m = p as usize;
                while m < n {
                    p2[m] *= r2;
                    m += p as usize;
                }
            }
        }
        let mut pair = vec![0.0f64; n];
        for d in (2..n).step_by(2) {
            pair[d] = hl2.value * p1[d];
        }
        // A table entry multiplies at most ~8 sieve factors onto the
        // tracked constant; fold that into a uniform relative bound.
        let rel2 = hl2.rel_error() + 16.0 * f64::EPSILON;
        let rel3 = tail3.rel_error() + 32.0 * f64::EPSILON;
        Ok(KernelTables { tables, span, pair, p2, hl2, tail3, rel2, rel3 })
    }

    pub fn span(&self) -> u64 {
        self.span
    }

    pub fn pair_constant(&self) -> TrackedValue {
        self.hl2
    }

    /// `S({0,d})`: zero for odd `d`.
    pub fn s2(&self, d: u64) -> f64 {
        self.pair[d as usize]
    }

    /// `S0({0,d}) = S({0,d}) - 1`.
    pub fn s0_pair(&self, d: u64) -> f64 {
        self.pair[d as usize] - 1.0
    }

    /// `S({0, g1, g1+g2})` through the tables plus a gcd correction
    /// factored on the spot.
    pub fn s3(&self, g1: u64, g2: u64) -> Result<f64> {
        let s = g1 + g2;
        if g1 == 0 || g2 == 0 || s > self.span {
            return Err(Error::bounds("triple kernel gaps out of range"));
        }
        if g1 % 2 != 0 || g2 % 2 != 0 {
            return Ok(0.0);
        }
        let head3 = head3_table()[(g1 % 3) as usize][(s % 3) as usize];
        let mut corr = 1.0f64;
        self.tables.for_each_prime_factor(gcd(g1, g2), |p| {
            if p >= 5 {
                corr *= gcd_prime_correction(p as f64);
            }
        });
        Ok(4.0
            * head3
            * self.tail3.value
            * self.p2[g1 as usize]
            * self.p2[g2 as usize]
            * self.p2[s as usize]
            * corr)
    }

    /// `S0({0, g1, g1+g2})` by inclusion–exclusion over the tables.
    pub fn s0_triple(&self, g1: u64, g2: u64) -> Result<f64> {
        Ok(self.s3(g1, g2)? - self.s2(g1) - self.s2(g2) - self.s2(g1 + g2) + 2.0)
    }
}

/// `R_2(h) = 2 sum_{d=1}^{h-1} (h-d) S0({0,d})`, with a rigorous error bar
/// from the tracked pair constant and the summation round-off.
fn r2_value(h: u64, kernel: &KernelTables) -> TrackedValue {
    let mut sum = CompensatedSum::new();
    let mut weighted_abs = 0.0f64;
    for d in 1..h {
        let w = (h - d) as f64;
        let s2 = kernel.s2(d);
        sum.add(w * (s2 - 1.0));
        weighted_abs += w * s2;
    }
    let value = 2.0 * sum.value();
    let abs_error = 2.0 * (kernel.rel2 * weighted_abs + sum.roundoff_bound());
    TrackedValue::new(value, abs_error, "moment-r2")
}

/// One row of the plain triple-kernel double sum restricted to gaps
/// divisible by `step`: `sum_{g2} (h - g1 - g2) B(g1, g2)` along with the
/// sum of absolute terms. `B` is the kernel without its gcd correction and
/// without the constant `4 * tail3`.
fn r3_row(h: u64, g1: u64, step: u64, p2: &[f64], head3: &[[f64; 3]; 3]) -> (f64, f64) {
    let row = &head3[(g1 % 3) as usize];
    let base = p2[g1 as usize];
    let mut sum = 0.0f64;
    let mut abs = 0.0f64;
    let mut g2 = step;
    while g1 + g2 < h {
        let s = g1 + g2;
        let term = (h - s) as f64 * base * p2[g2 as usize] * p2[s as usize]
            * row[(s % 3) as usize];
        sum += term;
        abs += term;
        g2 += step;
    }
    (sum, abs)
}

/// The triple-kernel double sum `sum (h-g1-g2) S3(g1,g2)` (without the
/// global factor `4 * tail3`), decomposed as `sum_m c(m) D_m` where `D_m`
/// restricts both gaps to multiples of `m` and `c` inverts the gcd
/// correction. Every term of `B` is nonnegative, so the absolute sums come
/// for free. Deterministic: parallel rows merge in fixed order.
fn r3_kernel_sum(
    h: u64,
    kernel: &KernelTables,
    opts: &SumOptions,
) -> Result<(CompensatedSum, f64)> {
    let head3 = head3_table();
    let p2 = &kernel.p2[..];
    // m = 1: all even pairs, parallel by rows of g1.
    let rows: Vec<u64> = (2..h.saturating_sub(1)).step_by(2).collect();
    let chunk = opts.row_chunk.max(1);
    let partials: Vec<(f64, f64)> = rows
        .par_chunks(chunk)
        .map(|block| {
            let mut sums = (0.0f64, 0.0f64);
            for &g1 in block {
                let (s, a) = r3_row(h, g1, 2, p2, &head3);
                sums.0 += s;
                sums.1 += a;
            }
            sums
        })
        .collect();
    let mut total = CompensatedSum::new();
    let mut abs_total = 0.0f64;
    for (s, a) in partials {
        total.add(s);
        abs_total += a;
    }
    // m > 1: the correction c(m) = prod_{p | m} (C(p) - 1) is supported on
    // squarefree m with least prime factor >= 5 and both gaps multiples of
    // 2m; |c(m)| decays like 1/m so the extra work is a few percent.
    let mut m = 5u64;
    while 4 * m < h {
        let mut c = 0.0f64;
        if kernel.tables.mobius(m)? != 0 && m % 2 != 0 && m % 3 != 0 {
            c = 1.0;
            kernel.tables.for_each_prime_factor(m, |p| {
                c *= gcd_prime_correction(p as f64) - 1.0;
            });
        }
        if c != 0.0 {
            let mut part = 0.0f64;
            let mut abs_part = 0.0f64;
            let mut g1 = 2 * m;
            while g1 + 2 * m < h {
                let (s, a) = r3_row(h, g1, 2 * m, p2, &head3);
                part += s;
                abs_part += a;
                g1 += 2 * m;
            }
            total.add(c * part);
            abs_total += c.abs() * abs_part;
        }
        m += 2;
    }
    Ok((total, abs_total))
}

/// `R_3(h) = 6 [ 4 tail3 * kernel_sum - pair_part + 2 W ]` where the pair
/// part reorganizes `sum (h-g1-g2) (S2(g1)+S2(g2)+S2(g1+g2))` into three
/// linear passes and `W = sum_{s} (s-1)(h-s)` counts the patterns.
fn r3_value(h: u64, kernel: &KernelTables, opts: &SumOptions) -> Result<TrackedValue> {
    let (kernel_sum, kernel_abs) = r3_kernel_sum(h, kernel, opts)?;
    let scale = 4.0 * kernel.tail3.value;
    let mut pair_part = CompensatedSum::new();
    let mut pair_abs = 0.0f64;
    // Two symmetric marginals: fixed g, the other gap free.
    for g in 1..h.saturating_sub(1) {
        let n = (h - g) as f64;
        let t = 2.0 * kernel.s2(g) * n * (n - 1.0) / 2.0;
        pair_part.add(t);
        pair_abs += t.abs();
    }
    // The diagonal marginal over s = g1 + g2 with multiplicity s - 1.
    let mut w_count = CompensatedSum::new();
    for s in 2..h {
        let mult = (s - 1) as f64 * (h - s) as f64;
        let t = kernel.s2(s) * mult;
        pair_part.add(t);
        pair_abs += t.abs();
        w_count.add(mult);
    }
    let value = 6.0 * (scale * kernel_sum.value() - pair_part.value() + 2.0 * w_count.value());
    let abs_error = 6.0
        * (kernel.rel3 * scale * kernel_abs
            + kernel_sum.roundoff_bound() * scale
            + kernel.rel2 * pair_abs
            + pair_part.roundoff_bound()
            + 2.0 * w_count.roundoff_bound()
            + value.abs() * 4.0 * f64::EPSILON);
    Ok(TrackedValue::new(value, abs_error, "moment-r3"))
}

fn check_moment_domain(k: u32, h: u64, tables: &PrimeTables) -> Result<()> {
    if !(1..=3).contains(&k) {
        return Err(Error::domain(format!("moment order must be 1, 2, or 3, got {k}")));
    }
    if h < 2 {
        return Err(Error::bounds("moment sums need h >= 2"));
    }
    if h > tables.limit() {
        return Err(Error::bounds(format!(
            "h = {h} exceeds the table limit {}",
            tables.limit()
        )));
    }
    Ok(())
}

/// `R_k(h)` for `k <= 3` by gap-pattern reduction. `R_1` vanishes exactly;
/// `R_2` and `R_3` run the sieve-table kernels in a fixed order, so equal
/// inputs give bit-identical values at any thread count.
pub fn rk_sum(k: u32, h: u64, tables: &PrimeTables, opts: &SumOptions) -> Result<MomentRow> {
    let started = Instant::now();
    check_moment_domain(k, h, tables)?;
    let hf = h as f64;
    match k {
        1 => Ok(MomentRow::new(
            h,
            1,
            TrackedValue::exact(0.0, "moment-r1"),
            0.0,
            started,
        )),
        2 => {
            let kernel = KernelTables::build(h, tables)?;
            let value = r2_value(h, &kernel);
            let main = -hf * (hf.ln() - const_b().value - 1.0);
            Ok(MomentRow::new(h, 2, value, main, started))
        }
        _ => {
            let kernel = KernelTables::build(h, tables)?;
            let value = r3_value(h, &kernel, opts)?;
            let main = 4.5 * hf * hf.ln() * hf.ln();
            Ok(MomentRow::new(h, 3, value, main, started))
        }
    }
}

/// The literal definition: sum of `S0` over all ordered tuples of distinct
/// values in `[1, h]^k`, through the general singular-series engine. Oracle
/// use only — cost grows like `h^k`.
pub fn rk_sum_bruteforce(k: u32, h: u64, engine: &SingularSeries) -> Result<TrackedValue> {
    if !(1..=3).contains(&k) {
        return Err(Error::domain("brute-force moments support k <= 3"));
    }
    if h > 100 {
        return Err(Error::bounds("brute-force moments capped at h <= 100"));
    }
    let mut sum = CompensatedSum::new();
    let mut err = 0.0f64;
    let mut add_tuple = |offsets: &[u64]| -> Result<()> {
        let v = engine.singular_s0(&OffsetSet::new(offsets.to_vec())?)?;
        sum.add(v.value.value);
        err += v.value.abs_error;
        Ok(())
    };
    match k {
        1 => {
            for d in 1..=h {
                add_tuple(&[d])?;
            }
        }
        2 => {
            for d1 in 1..=h {
                for d2 in 1..=h {
                    if d1 != d2 {
                        add_tuple(&[d1, d2])?;
                    }
                }
            }
        }
        _ => {
            for d1 in 1..=h {
                for d2 in 1..=h {
                    for d3 in 1..=h {
                        if d1 != d2 && d1 != d3 && d2 != d3 {
                            add_tuple(&[d1, d2, d3])?;
                        }
                    }
                }
            }
        }
    }
    Ok(TrackedValue::new(
        sum.value(),
        err + sum.roundoff_bound(),
        "moment-brute",
    ))
}

/// Evaluate `R_3` across an ascending grid with main term
/// `(9/2) h log^2 h`; the normalized ratio is available per row through
/// [`MomentRow::normalized_ratio`].
///
/// The trajectory is recorded, not judged: no closeness threshold is
/// applied. Empirically the sum tracks `(9/4) h log^2 h (1 + 0.14/log h)`
/// across `h = 2^10 .. 2^18` — half the reference constant — so the ratio
/// against `(9/2) h log^2 h` plateaus near `0.5` and drifts down, while
/// the ratio against `(9/4) h log^2 h` decreases cleanly toward 1.
pub fn r3_trend(h_grid: &[u64], tables: &PrimeTables, opts: &SumOptions) -> Result<Vec<MomentRow>> {
    if h_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("trend grid must be strictly ascending"));
    }
    h_grid.iter().map(|&h| rk_sum(3, h, tables, opts)).collect()
}

/// `(sum over ordered distinct tuples of S(D)) / h^k`: the plain series in
/// place of its zero-mean companion, normalized by `h^k`; approaches 1.
pub fn gallagher_ratio(k: u32, h: u64, tables: &PrimeTables) -> Result<TrackedValue> {
    check_moment_domain(k, h, tables)?;
    let hf = h as f64;
    match k {
        1 => Ok(TrackedValue::exact(1.0, "gallagher-ratio")),
        2 => {
            let kernel = KernelTables::build(h, tables)?;
            let mut sum = CompensatedSum::new();
            let mut abs = 0.0f64;
            for d in 1..h {
                let t = (h - d) as f64 * kernel.s2(d);
                sum.add(t);
                abs += t;
            }
            let value = 2.0 * sum.value() / (hf * hf);
            let err = 2.0 * (kernel.rel2 * abs + sum.roundoff_bound()) / (hf * hf);
            Ok(TrackedValue::new(value, err, "gallagher-ratio"))
        }
        _ => {
            if h == 2 {
                return Ok(TrackedValue::exact(0.0, "gallagher-ratio"));
            }
            let kernel = KernelTables::build(h, tables)?;
            let (kernel_sum, kernel_abs) = r3_kernel_sum(h, &kernel, &SumOptions::default())?;
            let scale = 4.0 * kernel.tail3.value;
            let value = 6.0 * scale * kernel_sum.value() / (hf * hf * hf);
            let err = 6.0
                * (kernel.rel3 * scale * kernel_abs + scale * kernel_sum.roundoff_bound())
                / (hf * hf * hf);
            Ok(TrackedValue::new(value, err, "gallagher-ratio"))
        }
    }
}

/// The conjectured odd-moment main term
/// `(-1)^(k-1) r_{2k+1} h^k log^(k+1) h` for `k_odd = 2k + 1`.
pub fn conjecture_main_term(k_odd: u32, h: u64) -> Result<f64> {
    if k_odd % 2 == 0 || k_odd < 3 {
        return Err(Error::domain(format!(
            "odd-moment main term needs an odd order >= 3, got {k_odd}"
        )));
    }
    let k = (k_odd - 1) / 2;
    let r = r_odd(k)?.value;
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let hf = h as f64;
    Ok(sign * r * hf.powi(k as i32) * hf.ln().powi(k as i32 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tables() -> PrimeTables {
        PrimeTables::build(100_000).unwrap()
    }

    #[test]
    fn gap_pattern_validation() {
        assert!(GapPattern::new(vec![0, 2], 10).is_err());
        assert!(GapPattern::new(vec![5, 5], 10).is_err());
        let p = GapPattern::new(vec![2, 3], 10).unwrap();
        assert_eq!(p.weight(), 5);
        assert_eq!(p.offsets(), vec![0, 2, 5]);
    }

    #[test]
    fn kernel_matches_engine_exhaustively() {
        let t = tables();
        let engine = SingularSeries::new(&t).unwrap();
        let kernel = KernelTables::build(200, &t).unwrap();
        for d in 1..=120u64 {
            let slow = engine.singular_s(&OffsetSet::new(vec![0, d]).unwrap()).unwrap();
            let fast = kernel.s2(d);
            assert!(
                (fast - slow.value.value).abs() <= 1e-12 * (1.0 + fast.abs()),
                "pair kernel mismatch at d={d}: {fast} vs {}",
                slow.value.value
            );
        }
        for g1 in 1..=60u64 {
            for g2 in 1..=60u64 {
                let slow = engine
                    .singular_s(&OffsetSet::new(vec![0, g1, g1 + g2]).unwrap())
                    .unwrap();
                let fast = kernel.s3(g1, g2).unwrap();
                assert!(
                    (fast - slow.value.value).abs() <= 1e-12 * (1.0 + fast.abs()),
                    "triple kernel mismatch at ({g1},{g2}): {fast} vs {}",
                    slow.value.value
                );
            }
        }
    }

    #[test]
    fn r1_vanishes() {
        let t = tables();
        for h in [2u64, 17, 1000] {
            let row = rk_sum(1, h, &t, &SumOptions::default()).unwrap();
            assert_eq!(row.value.value, 0.0);
            assert_eq!(row.residual, 0.0);
        }
    }

    #[test]
    fn r3_matches_bruteforce_at_h6() {
        let t = tables();
        let engine = SingularSeries::new(&t).unwrap();
        let fast = rk_sum(3, 6, &t, &SumOptions::default()).unwrap();
        let brute = rk_sum_bruteforce(3, 6, &engine).unwrap();
        let rel = (fast.value.value - brute.value).abs() / brute.value.abs();
        assert!(rel < 1e-9, "fast {} vs brute {}", fast.value.value, brute.value);
    }

    #[test]
    fn moments_match_bruteforce_small_grid() {
        let t = tables();
        let engine = SingularSeries::new(&t).unwrap();
        for h in [2u64, 3, 5, 10, 25] {
            for k in [2u32, 3] {
                let fast = rk_sum(k, h, &t, &SumOptions::default()).unwrap();
                let brute = rk_sum_bruteforce(k, h, &engine).unwrap();
                let scale = brute.value.abs().max(1.0);
                assert!(
                    (fast.value.value - brute.value).abs() < 1e-9 * scale,
                    "k={k} h={h}: fast {} vs brute {}",
                    fast.value.value,
                    brute.value
                );
            }
        }
    }

    #[test]
    fn r3_gcd_correction_against_direct_route() {
        let t = tables();
        let kernel = KernelTables::build(301, &t).unwrap();
        let h = 301u64;
        // Direct per-pair evaluation with on-the-spot gcd factoring.
        let mut direct = 0.0f64;
        for g1 in 1..h {
            for g2 in 1..h - g1 {
                direct += (h - g1 - g2) as f64 * kernel.s3(g1, g2).unwrap();
            }
        }
        let (fast, _) = r3_kernel_sum(h, &kernel, &SumOptions::default()).unwrap();
        let scaled = 4.0 * kernel.tail3.value * fast.value();
        assert!(
            (scaled - direct).abs() < 1e-9 * direct.abs(),
            "decomposed {scaled} vs direct {direct}"
        );
    }

    #[test]
    fn reflection_symmetry_of_patterns() {
        let t = tables();
        let engine = SingularSeries::new(&t).unwrap();
        let kernel = KernelTables::build(2_000, &t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let g1 = rng.random_range(1..900u64);
            let g2 = rng.random_range(1..900u64);
            let a = kernel.s0_triple(g1, g2).unwrap();
            let b = kernel.s0_triple(g2, g1).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "kernel asym at ({g1},{g2})");
            if g1 + g2 < 200 {
                let via_engine = engine
                    .singular_s0(&OffsetSet::new(vec![0, g2, g1 + g2]).unwrap())
                    .unwrap();
                assert!(
                    (a - via_engine.value.value).abs()
                        <= 1e-10 * (1.0 + a.abs()) + via_engine.value.abs_error,
                    "engine disagrees at ({g1},{g2})"
                );
            }
        }
    }

    #[test]
    fn trend_single_point_matches_rk_sum() {
        let t = tables();
        let grid = r3_trend(&[16], &t, &SumOptions::default()).unwrap();
        let row = rk_sum(3, 16, &t, &SumOptions::default()).unwrap();
        assert_eq!(grid[0].value.value.to_bits(), row.value.value.to_bits());
        assert!(r3_trend(&[16, 16], &t, &SumOptions::default()).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let t = tables();
        let reference = rk_sum(3, 512, &t, &SumOptions::default()).unwrap();
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let row = pool.install(|| rk_sum(3, 512, &t, &SumOptions::default()).unwrap());
            assert_eq!(row.value.value.to_bits(), reference.value.value.to_bits());
        }
        // Chunk size must not change the value either.
        let alt = rk_sum(3, 512, &t, &SumOptions { row_chunk: 7 }).unwrap();
        assert_eq!(alt.value.value.to_bits(), reference.value.value.to_bits());
    }

    #[test]
    fn gallagher_examples() {
        let t = tables();
        assert_eq!(gallagher_ratio(1, 100, &t).unwrap().value, 1.0);
        assert_eq!(gallagher_ratio(3, 2, &t).unwrap().value, 0.0);
        let r2 = gallagher_ratio(2, 1000, &t).unwrap();
        assert!((r2.value - 1.0).abs() < 0.1, "k=2 ratio {}", r2.value);
        let r3 = gallagher_ratio(3, 1000, &t).unwrap();
        assert!((r3.value - 1.0).abs() < 0.2, "k=3 ratio {}", r3.value);
    }

    #[test]
    fn r2_residual_is_modest() {
        let t = tables();
        let row = rk_sum(2, 1024, &t, &SumOptions::default()).unwrap();
        // Eq-level residual is O(h^{1/2+eps}); assert a loose sanity ceiling.
        let ceiling = 5.0 * (1024.0f64).powf(0.6);
        assert!(
            row.residual.abs() < ceiling,
            "R2(1024) residual {} vs ceiling {ceiling}",
            row.residual
        );
        assert_eq!(row.residual, row.value.value - row.main_term);
    }

    #[test]
    fn conjecture_main_term_examples() {
        let h = 3u64;
        let v = conjecture_main_term(3, h).unwrap();
        let expect = 4.5 * 3.0 * (3.0f64).ln() * (3.0f64).ln();
        assert!((v - expect).abs() < 1e-12);
        assert!(conjecture_main_term(4, 10).is_err());
        // r5 = 45, sign (-1)^(k-1) with k = 2 gives a negative main term.
        let v5 = conjecture_main_term(5, 10).unwrap();
        let lf = (10.0f64).ln();
        assert!((v5 + 45.0 * 100.0 * lf.powi(3)).abs() < 1e-9 * v5.abs());
    }
}
