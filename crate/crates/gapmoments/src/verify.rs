//! Named verification suites over the whole library.
//!
//! Capabilities:
//! - six suites grouping the artifact's checks by the nature of the claim:
//!   `exact` (identities that must hold to 1e-9 or bit-exactly), `sharp`
//!   (asymptotics whose error terms are genuinely small at desk scale),
//!   `trend` (conjectural bands and throughput at the largest desk points),
//!   `circle` (the circle-method identity alone), `determinism`
//!   (thread-count invariance), and `calibration` (fresh-vs-frozen kappa
//!   stability);
//! - one [`CheckOutcome`] per criterion carrying a stable identifier, a
//!   pass flag, a measured-detail string, and wall time, rendered as a
//!   single pass/fail line;
//! - documented failures: two criteria demand a convergence the measured
//!   quantities do not have at any feasible scale (the `s`-function gap to
//!   the class-averaged reference, and the drift of the cubic moment ratio
//!   toward 1). They are executed faithfully, reported as failing, and
//!   flagged [`CheckOutcome::documented_failure`] with the measurements in
//!   the detail line; they are never rewritten to pass.
//!
//! Every check is deterministic: fixed grids, fixed seeds, fixed merge
//! orders. A suite reports through values, never by mutating global state.

use crate::calib::{
    Calibration, KAPPA_BIVARIATE_AVERAGE, KAPPA_DIRICHLET_GAP, KAPPA_R2_RESIDUAL,
    KAPPA_RESTRICTED_ENVELOPE, KAPPA_VARIANCE_BOUND,
};
use crate::constants::DEFAULT_P0;
use crate::error::{Error, Result};
use crate::expsum::{
    abel2d, circle_triple_check, ehplus_integrals, ClosureField, EhPlusIntegral,
};
use crate::lemmas::{
    dirichlet_partial, restricted_sum, sigma_envelope, variance_m2, w_star_average,
    PartialMode, RestrictedSumSpec, SumWeight, XiKind,
};
use crate::moments::{gallagher_ratio, r3_trend, rk_sum, rk_sum_bruteforce, SumOptions};
use crate::prime_moments::{hl_count, moment_mk, moment_mk_split, psi};
use crate::singular::{OffsetSet, SingularSeries};
use crate::tables::PrimeTables;
use crate::triple::{decompose, enumerate_residues, enumerate_residues_rational, s_function,
    s_function_limit};
use std::time::Instant;

/// The suite names accepted by [`run_suite`], in canonical order.
pub const SUITE_NAMES: &[&str] =
    &["exact", "sharp", "trend", "circle", "determinism", "calibration"];

/// Result of one named criterion.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// Stable identifier, unique within the suite.
    pub name: &'static str,
    /// Whether the criterion held.
    pub passed: bool,
    /// True for criteria known not to hold as stated: the failure is
    /// analyzed, expected, and reported honestly rather than masked.
    pub documented_failure: bool,
    /// Measured quantities backing the verdict.
    pub detail: String,
    /// Wall time spent on this check.
    pub seconds: f64,
}

impl CheckOutcome {
    /// One human-readable pass/fail line.
    pub fn line(&self, suite: &str) -> String {
        let tag = if self.passed {
            "PASS"
        } else if self.documented_failure {
            "FAIL (documented)"
        } else {
            "FAIL"
        };
        format!("[{tag}] {suite}/{}: {} ({:.2}s)", self.name, self.detail, self.seconds)
    }
}

/// All outcomes of one suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<CheckOutcome>,
    pub seconds: f64,
}

impl SuiteReport {
    /// True when every criterion passed (documented failures count as
    /// failures: the suite is honest about them).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Failures that are *not* documented; any nonzero count is news.
    pub fn surprise_failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed && !c.documented_failure).count()
    }

    /// The pass/fail lines, one per criterion.
    pub fn lines(&self) -> Vec<String> {
        self.checks.iter().map(|c| c.line(self.suite)).collect()
    }
}

fn check(
    name: &'static str,
    documented_failure: bool,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> Result<CheckOutcome> {
    let started = Instant::now();
    let (passed, detail) = body()?;
    Ok(CheckOutcome {
        name,
        passed,
        documented_failure,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Run one named suite. `tables` must cover the suite's scales (the
/// default CLI limit `2^20` covers every suite); `cal` supplies the frozen
/// kappa values.
pub fn run_suite(
    name: &str,
    tables: &PrimeTables,
    cal: &Calibration,
) -> Result<SuiteReport> {
    let started = Instant::now();
    let checks = match name {
        "exact" => suite_exact(tables)?,
        "sharp" => suite_sharp(tables, cal)?,
        "trend" => suite_trend(tables, cal)?,
        "circle" => vec![check_circle()?],
        "determinism" => suite_determinism(tables)?,
        "calibration" => suite_calibration(tables, cal)?,
        other => {
            return Err(Error::config(format!(
                "unknown suite {other:?}; expected one of {SUITE_NAMES:?}"
            )))
        }
    };
    let suite = SUITE_NAMES
        .iter()
        .find(|&&s| s == name)
        .expect("matched above");
    Ok(SuiteReport { suite, checks, seconds: started.elapsed().as_secs_f64() })
}

/// Run every suite in canonical order.
pub fn run_all(tables: &PrimeTables, cal: &Calibration) -> Result<Vec<SuiteReport>> {
    SUITE_NAMES.iter().map(|name| run_suite(name, tables, cal)).collect()
}

// ---------------------------------------------------------------- exact --

fn suite_exact(tables: &PrimeTables) -> Result<Vec<CheckOutcome>> {
    let series = SingularSeries::new(tables)?;
    let opts = SumOptions::default();
    let mut checks = Vec::new();

    checks.push(check("centered-singletons-vanish", false, || {
        let mut worst = 0.0f64;
        for d in 1..=200u64 {
            let v = series.singular_s0(&OffsetSet::new(vec![d])?)?;
            worst = worst.max(v.value.value.abs());
        }
        Ok((worst <= 1e-9, format!("max |S0({{d}})| over d <= 200 is {worst:.2e}")))
    })?);

    checks.push(check("first-moment-vanishes", false, || {
        let mut worst = 0.0f64;
        for h in [10u64, 100, 1000] {
            let row = rk_sum(1, h, tables, &opts)?;
            worst = worst.max(row.value.value.abs() / h as f64);
        }
        Ok((worst <= 1e-9, format!("max |R_1(h)|/h over h in {{10,100,1000}} is {worst:.2e}")))
    })?);

    checks.push(check("small-moments-match-bruteforce", false, || {
        let mut worst = 0.0f64;
        for k in 1..=3u32 {
            for h in [10u64, 25] {
                let fast = rk_sum(k, h, tables, &opts)?.value.value;
                let brute = rk_sum_bruteforce(k, h, &series)?.value;
                worst = worst.max((fast - brute).abs() / brute.abs().max(1.0));
            }
        }
        Ok((worst <= 1e-9, format!("max relative gap to tuple enumeration {worst:.2e}")))
    })?);

    checks.push(check("decomposition-round-trips", false, || {
        let mut decomposed = 0u64;
        let mut skipped = 0u64;
        for q1 in 1..=60u64 {
            for q2 in 1..=60u64 {
                for q3 in 1..=60u64 {
                    if !(tables.is_squarefree(q1)?
                        && tables.is_squarefree(q2)?
                        && tables.is_squarefree(q3)?)
                    {
                        continue;
                    }
                    match decompose(q1, q2, q3, tables)? {
                        Some(d) => {
                            if d.recompose() != (q1, q2, q3) {
                                return Ok((
                                    false,
                                    format!("({q1},{q2},{q3}) recomposed as {:?}", d.recompose()),
                                ));
                            }
                            decomposed += 1;
                        }
                        None => skipped += 1,
                    }
                }
            }
        }
        Ok((
            decomposed > 0,
            format!(
                "exhaustive q_j <= 60: {decomposed} round trips, {skipped} without a residue system"
            ),
        ))
    })?);

    checks.push(check("residue-routes-agree", false, || {
        let pool: [u64; 8] = [1, 2, 3, 5, 7, 11, 13, 15];
        let mut triples = 0u64;
        for &g in &pool {
            for &x in &pool {
                for &y in &pool {
                    for &z in &pool {
                        let parts = [g, x, y, z];
                        let pairwise_coprime = (0..4).all(|i| {
                            (i + 1..4).all(|j| crate::tables::gcd(parts[i], parts[j]) == 1)
                        });
                        if !pairwise_coprime {
                            continue;
                        }
                        let (q1, q2, q3) = (g * y * z, g * x * z, g * x * y);
                        let product = q1 as u128 * q2 as u128 * q3 as u128;
                        if product > 1_000_000 {
                            continue;
                        }
                        let d = decompose(q1, q2, q3, tables)?
                            .ok_or_else(|| Error::numeric("constructed triple decomposes"))?;
                        let congruence = enumerate_residues(&d)?;
                        let rational = enumerate_residues_rational(&d)?;
                        if congruence != rational {
                            return Ok((
                                false,
                                format!("routes disagree at (q1,q2,q3) = ({q1},{q2},{q3})"),
                            ));
                        }
                        triples += 1;
                    }
                }
            }
        }
        Ok((
            triples >= 100,
            format!("congruence and rational routes identical on {triples} triples"),
        ))
    })?);

    checks.push(check_circle()?);

    checks.push(check("abel-2d-reconstruction", false, || {
        let mut worst = 0.0f64;
        for trial in 0..100u64 {
            let seed = mix64(0xa5eed ^ trial);
            let a = 0.5 + 2.5 * unit(mix64(seed ^ 1));
            let b = 6.28 * unit(mix64(seed ^ 2));
            let c = 0.5 + 2.5 * unit(mix64(seed ^ 3));
            let d = 6.28 * unit(mix64(seed ^ 4));
            let x1 = 4.0 + (20.0 * unit(mix64(seed ^ 5))).floor() + 0.5;
            let x2 = 4.0 + (20.0 * unit(mix64(seed ^ 6))).floor() + 0.5;
            let f = move |n1: u64, n2: u64| {
                2.0 * unit(mix64(seed ^ n1.wrapping_mul(0x9e3779b97f4a7c15)
                    ^ n2.wrapping_mul(0xc2b2ae3d27d4eb4f))) - 1.0
            };
            let field = ClosureField {
                g: move |t1: f64, t2: f64| (a * t1 + b).sin() * (c * t2 + d).sin(),
                d1: move |t1: f64, t2: f64| a * (a * t1 + b).cos() * (c * t2 + d).sin(),
                d2: move |t1: f64, t2: f64| c * (a * t1 + b).sin() * (c * t2 + d).cos(),
                d12: move |t1: f64, t2: f64| a * c * (a * t1 + b).cos() * (c * t2 + d).cos(),
            };
            let mut direct = 0.0f64;
            for n1 in 1..=x1 as u64 {
                for n2 in 1..=x2 as u64 {
                    direct += f(n1, n2) * (a * n1 as f64 + b).sin() * (c * n2 as f64 + d).sin();
                }
            }
            let reconstructed = abel2d(f, &field, x1, x2, 1e-9)?;
            worst = worst.max((reconstructed - direct).abs());
        }
        Ok((worst <= 1e-8, format!("max |Abel - direct| over 100 seeded fields {worst:.2e}")))
    })?);

    checks.push(check("convolution-identities", false, || {
        let report = crate::lemmas::convolution_ids(100_000, tables)?;
        let ok = report.lambda_max_gap == 0.0
            && report.f1_max_rel_gap <= 1e-9
            && report.f2_max_gap <= 1e-9;
        Ok((
            ok,
            format!(
                "n <= 1e5: lambda gap {:.1e}, f1 rel gap {:.1e}, f2 gap {:.1e} over {} pairs",
                report.lambda_max_gap, report.f1_max_rel_gap, report.f2_max_gap,
                report.pairs_checked
            ),
        ))
    })?);

    checks.push(check("s-function-anchor", false, || {
        let v = s_function(2, tables)?.value;
        Ok(((v - 1.0).abs() <= 1e-12, format!("s(2) = {v}")))
    })?);

    checks.push(check("majorant-integral-closed-form", false, || {
        let mut worst = 0.0f64;
        for h in [16u64, 256, 4096] {
            let (numeric, _) = ehplus_integrals(h, EhPlusIntegral::Single)?;
            let closed = 2.0 * (1.0 + h as f64 / 2.0).ln();
            worst = worst.max((numeric - closed).abs() / closed);
        }
        Ok((worst <= 1e-8, format!("max relative gap to 2 log(1 + h/2) is {worst:.2e}")))
    })?);

    Ok(checks)
}

fn check_circle() -> Result<CheckOutcome> {
    check("circle-triple-identity", false, || {
        let mut worst = 0.0f64;
        for h in 1..=64u64 {
            let (quadrature, count) = circle_triple_check(h)?;
            if count != h {
                return Ok((false, format!("combinatorial side at h = {h} counted {count}")));
            }
            worst = worst.max((quadrature - h as f64).abs());
        }
        Ok((worst <= 1e-8, format!("h in 1..=64: max |quadrature - h| = {worst:.2e}")))
    })
}

/// SplitMix64 finalizer; drives the seeded pseudo-random fields.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Map a 64-bit word to `[0, 1)`.
fn unit(word: u64) -> f64 {
    (word >> 11) as f64 / (1u64 << 53) as f64
}

// ---------------------------------------------------------------- sharp --

/// `|R_2(h) + h (log h - B - 1)|   <= kappa h^0.6` measured over the grid
/// `h = 2^10 .. 2^17`; returns the worst ratio.
fn r2_residual_ratio(tables: &PrimeTables) -> Result<f64> {
    let opts = SumOptions::default();
    let mut worst = 0.0f64;
    for j in 10..=17u32 {
        let h = 1u64 << j;
        let row = rk_sum(2, h, tables, &opts)?;
        worst = worst.max(row.residual.abs() / (h as f64).powf(0.6));
    }
    Ok(worst)
}

fn suite_sharp(tables: &PrimeTables, cal: &Calibration) -> Result<Vec<CheckOutcome>> {
    let series = SingularSeries::new(tables)?;
    let mut checks = Vec::new();

    let kappa_r2 = cal.kappa(KAPPA_R2_RESIDUAL)?;
    checks.push(check("pair-moment-residual-bound", false, || {
        let worst = r2_residual_ratio(tables)?;
        Ok((
            worst <= kappa_r2,
            format!("max |residual|/h^0.6 over h = 2^10..2^17 is {worst:.4} (kappa {kappa_r2})"),
        ))
    })?);

    checks.push(check("gallagher-ratio-band", false, || {
        let ratio = gallagher_ratio(2, 10_000, tables)?.value;
        Ok((
            (0.95..=1.05).contains(&ratio),
            format!("second-moment Gallagher ratio at h = 1e4 is {ratio:.5}"),
        ))
    })?);

    checks.push(check("s-function-class-average-gap", true, || {
        let reference = s_function_limit(DEFAULT_P0.min(tables.limit()), tables)?.value;
        let coarse = (s_function(10_000, tables)?.value - reference).abs();
        let fine = (s_function(1_000_000, tables)?.value - reference).abs();
        let passed = fine < coarse && coarse < 0.05 && fine < 0.05;
        Ok((
            passed,
            format!(
                "|s(T) - 1/(C log 2)| = {coarse:.4} at T = 1e4, {fine:.4} at T = 1e6 \
                 (reference {reference:.6}): the pointwise limit depends on the fractional \
                 class of log2 T, so the gap to the class average does not contract"
            ),
        ))
    })?);

    checks.push(check("pair-oracle-error-bars", false, || {
        let mut worst = f64::NEG_INFINITY;
        for d in 1..=100u64 {
            let oracle = series.pair_s0_oracle(d, 100_000)?;
            let direct = series.singular_s0(&OffsetSet::new(vec![0, d])?)?.value;
            let slack = (oracle.value - direct.value).abs()
                - (oracle.abs_error + direct.abs_error);
            worst = worst.max(slack);
        }
        Ok((
            worst <= 0.0,
            format!("max bar overshoot over d <= 100 is {worst:.2e} (<= 0 means contained)"),
        ))
    })?);

    Ok(checks)
}

// ---------------------------------------------------------------- trend --

/// Shape budget for the bivariate average residual at `(g, q, A)`:
/// `2^omega(gq) (A1 + A2) log(2 A1 A2)`.
fn average_shape(g: u64, q: u64, a: u64, tables: &PrimeTables) -> Result<f64> {
    let gq = g * q;
    let omega = if gq == 1 { 0 } else { tables.factor(gq)?.omega() };
    let af = a as f64;
    Ok(2.0f64.powi(omega as i32) * (2.0 * af) * (2.0 * af * af).ln())
}

/// Worst `|residual| / shape` for the pinned average grid.
fn average_shape_ratio(tables: &PrimeTables) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(g, q) in &[(1u64, 1u64), (1, 3), (2, 5)] {
        let report = w_star_average(g, q, 10_000, 10_000, tables)?;
        worst = worst.max(report.residual.abs() / average_shape(g, q, 10_000, tables)?);
    }
    Ok(worst)
}

/// Worst variance `bound_ratio` over the pinned `(X, q, m)` grid.
fn variance_bound_ratio(tables: &PrimeTables) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in &[10_000u64, 100_000, 1_000_000] {
        for &q in &[11u64, 101] {
            for &m in &[1u64, 2] {
                let v = variance_m2(x, q, m, SumWeight::Mu2N2OverPhi2, tables)?;
                worst = worst.max(v.bound_ratio);
            }
        }
    }
    Ok(worst)
}

fn suite_trend(tables: &PrimeTables, cal: &Calibration) -> Result<Vec<CheckOutcome>> {
    let mut checks = Vec::new();

    checks.push(check("triple-moment-drift", true, || {
        let rows = r3_trend(&[1 << 10, 1 << 13, 1 << 16], tables, &SumOptions::default())?;
        let ratios: Vec<f64> = rows.iter().map(|r| r.value.value / r.main_term).collect();
        let all_positive = ratios.iter().all(|&r| r > 0.0);
        let drift = (ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs();
        Ok((
            all_positive && drift,
            format!(
                "R_3/((9/2) h log^2 h) = {:.5}, {:.5}, {:.5} at h = 2^10, 2^13, 2^16: \
                 positive but settling near 1/2 + c/log h, so the distance to 1 grows",
                ratios[0], ratios[1], ratios[2]
            ),
        ))
    })?);

    checks.push(check("even-moment-desk-band", false, || {
        let m2 = moment_mk(100_000_000, 50, 2, tables)?;
        Ok((
            m2.ratio >= 1.0 / 1.5 && m2.ratio <= 1.5,
            format!("M_2(1e8, 50) empirical/predicted = {:.4}", m2.ratio),
        ))
    })?);

    checks.push(check("cubic-moment-desk-band", false, || {
        let m3 = moment_mk(100_000_000, 50, 3, tables)?;
        Ok((
            m3.ratio >= 0.2 && m3.ratio <= 5.0,
            format!("M_3(1e8, 50) empirical/predicted = {:.4}", m3.ratio),
        ))
    })?);

    checks.push(check("triple-count-desk-band", false, || {
        let series = SingularSeries::new(tables)?;
        let count = hl_count(&OffsetSet::new(vec![0, 2, 6])?, 100_000_000, &series)?;
        Ok((
            count.ratio >= 0.9 && count.ratio <= 1.1,
            format!("weighted {{0,2,6}} count at 1e8 over S(D) x = {:.5}", count.ratio),
        ))
    })?);

    checks.push(check("sieve-throughput", false, || {
        let started = Instant::now();
        let value = psi(100_000_000, tables)?.value;
        let rate = 1.0e8 / started.elapsed().as_secs_f64();
        let sane = (value - 1.0e8).abs() / 1.0e8 < 1e-3;
        Ok((
            rate >= 5.0e7 && sane,
            format!("psi(1e8) = {value:.3} at {rate:.2e} n/s (target 5e7)"),
        ))
    })?);

    let kappa_var = cal.kappa(KAPPA_VARIANCE_BOUND)?;
    checks.push(check("variance-bound-flat", false, || {
        let worst = variance_bound_ratio(tables)?;
        Ok((
            worst <= kappa_var,
            format!("max bound_ratio over the (X, q, m) grid is {worst:.2e} (kappa {kappa_var:.1e})"),
        ))
    })?);

    let kappa_w = cal.kappa(KAPPA_BIVARIATE_AVERAGE)?;
    checks.push(check("average-residual-shape", false, || {
        let worst = average_shape_ratio(tables)?;
        Ok((
            worst <= kappa_w,
            format!("max |residual|/shape over (g,q) grid is {worst:.5} (kappa {kappa_w})"),
        ))
    })?);

    Ok(checks)
}

// --------------------------------------------------------- determinism --

fn suite_determinism(tables: &PrimeTables) -> Result<Vec<CheckOutcome>> {
    let with_pool = |threads: usize, body: &(dyn Fn() -> Result<f64> + Sync)| -> Result<f64> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config(format!("cannot build a {threads}-thread pool: {e}")))?;
        pool.install(body)
    };
    let mut checks = Vec::new();

    checks.push(check("kernel-sum-thread-invariant", false, || {
        let body = |_: ()| -> Result<f64> {
            Ok(rk_sum(3, 4096, tables, &SumOptions { row_chunk: 16 })?.value.value)
        };
        let one = with_pool(1, &move || body(()))?;
        let three = with_pool(3, &move || body(()))?;
        Ok((
            one.to_bits() == three.to_bits(),
            format!("R_3(4096) under 1 and 3 threads: {one} vs {three}"),
        ))
    })?);

    checks.push(check("window-split-thread-invariant", false, || {
        let body = |_: ()| -> Result<f64> {
            Ok(moment_mk_split(1_000_000, 30, 3, 7, tables)?.empirical)
        };
        let one = with_pool(1, &move || body(()))?;
        let three = with_pool(3, &move || body(()))?;
        Ok((
            one.to_bits() == three.to_bits(),
            format!("M_3(1e6, 30) split 7 ways under 1 and 3 threads: {one} vs {three}"),
        ))
    })?);

    checks.push(check("variance-thread-invariant", false, || {
        let body = |_: ()| -> Result<f64> {
            Ok(variance_m2(100_000, 101, 1, SumWeight::Mu2N2OverPhi2, tables)?.value)
        };
        let one = with_pool(1, &move || body(()))?;
        let three = with_pool(3, &move || body(()))?;
        Ok((
            one.to_bits() == three.to_bits(),
            format!("progression variance under 1 and 3 threads: {one} vs {three}"),
        ))
    })?);

    Ok(checks)
}

// --------------------------------------------------------- calibration --

fn suite_calibration(tables: &PrimeTables, cal: &Calibration) -> Result<Vec<CheckOutcome>> {
    let mut checks = Vec::new();

    let kappa = cal.kappa(KAPPA_R2_RESIDUAL)?;
    checks.push(check("kappa-pair-moment-stable", false, || {
        let fresh = r2_residual_ratio(tables)?;
        Ok((
            fresh <= 2.0 * kappa,
            format!("fresh max ratio {fresh:.4} vs frozen kappa {kappa} (allowed 2x)"),
        ))
    })?);

    let kappa = cal.kappa(KAPPA_RESTRICTED_ENVELOPE)?;
    checks.push(check("kappa-restricted-envelope-stable", false, || {
        let spec = RestrictedSumSpec {
            x: 1_000_000,
            q: 5,
            a: Some(2),
            m: 1,
            weight: SumWeight::Mu2N2OverPhi2,
        };
        let fresh = restricted_sum(&spec, tables)?.value.value / sigma_envelope(1_000_000, 5)?;
        Ok((
            fresh <= 2.0 * kappa,
            format!("fresh S/sigma = {fresh:.4} vs frozen kappa {kappa} (allowed 2x)"),
        ))
    })?);

    let kappa = cal.kappa(KAPPA_DIRICHLET_GAP)?;
    checks.push(check("kappa-dirichlet-gap-stable", false, || {
        let partial =
            dirichlet_partial(XiKind::MuOverN, 100_000, PartialMode::Cumulative, tables)?;
        let fresh = partial.gap.abs() / (100_000.0f64).sqrt();
        Ok((
            fresh <= 2.0 * kappa,
            format!("fresh |gap|/sqrt(T) = {fresh:.2e} vs frozen kappa {kappa} (allowed 2x)"),
        ))
    })?);

    let kappa = cal.kappa(KAPPA_VARIANCE_BOUND)?;
    checks.push(check("kappa-variance-bound-stable", false, || {
        let fresh = variance_bound_ratio(tables)?;
        Ok((
            fresh <= 2.0 * kappa,
            format!("fresh max bound_ratio {fresh:.2e} vs frozen kappa {kappa:.1e} (allowed 2x)"),
        ))
    })?);

    let kappa = cal.kappa(KAPPA_BIVARIATE_AVERAGE)?;
    checks.push(check("kappa-average-shape-stable", false, || {
        let fresh = average_shape_ratio(tables)?;
        Ok((
            fresh <= 2.0 * kappa,
            format!("fresh max shape ratio {fresh:.5} vs frozen kappa {kappa} (allowed 2x)"),
        ))
    })?);

    Ok(checks)
}
