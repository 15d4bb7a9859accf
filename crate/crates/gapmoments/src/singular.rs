//! Singular series of offset tuples.
//!
//! Capabilities:
//! - [`OffsetSet`]: a validated tuple of distinct offsets `d_1 < ... < d_k`;
//! - [`nu_p`]: the number of residue classes the offsets occupy modulo `p`;
//! - [`SingularSeries::singular_s`]: the Euler product
//!   `S(D) = prod_p (1 - 1/p)^{-k} (1 - nu_p(D)/p)`, evaluated through the
//!   generic constant of its order times finitely many corrected factors;
//! - [`SingularSeries::singular_s0`]: the zero-mean companion defined by
//!   subset inclusion–exclusion over `S`;
//! - [`SingularSeries::pair_s0_oracle`]: an independent Ramanujan-sum
//!   route to `S0({0,d})` with a rigorous tail bound, used to validate the
//!   Euler-product route;
//! - [`SingularSeries::qsum_s_oracle`]: the literal truncated modulus sum
//!   (the definition of `S` as a sum over `q_1, ..., q_k`), heuristic and
//!   test-scale only.
//!
//! All evaluation orders are fixed, so equal inputs produce bit-identical
//! outputs.

use crate::constants::{euler_product, hl_ck, TailCoeffs, DEFAULT_P0};
use crate::error::{Error, Result};
use crate::expsum::e_of;
use crate::summation::CompensatedSum;
use crate::tables::{gcd, PrimeTables};
use crate::tracked::TrackedValue;
use crate::triple::{enumerate_residues, TripleDecomposition};

/// Largest tuple size supported by the singular-series machinery.
pub const MAX_TUPLE: usize = 8;

/// A set of `k` distinct offsets `d_1 < ... < d_k`, `1 <= k <= 8`.
/// Construction sorts the input and rejects repeated offsets; operations
/// that factor pairwise differences additionally require the span to lie
/// within their prime-table range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetSet {
    offsets: Vec<u64>,
}

impl OffsetSet {
    /// Validate and normalize a list of offsets.
    pub fn new(offsets: impl Into<Vec<u64>>) -> Result<Self> {
        let mut offsets = offsets.into();
        if offsets.is_empty() {
            return Err(Error::domain("offset set needs at least one element"));
        }
        if offsets.len() > MAX_TUPLE {
            return Err(Error::domain(format!(
                "offset set capped at {MAX_TUPLE} elements, got {}",
                offsets.len()
            )));
        }
        offsets.sort_unstable();
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("offset set rejects repeated offsets"));
        }
        Ok(OffsetSet { offsets })
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn k(&self) -> usize {
        self.offsets.len()
    }

    /// `d_k - d_1`.
    pub fn span(&self) -> u64 {
        self.offsets[self.offsets.len() - 1] - self.offsets[0]
    }

    /// The set shifted by `t`.
    pub fn translated(&self, t: u64) -> Result<OffsetSet> {
        let shifted: Option<Vec<u64>> =
            self.offsets.iter().map(|&d| d.checked_add(t)).collect();
        Ok(OffsetSet {
            offsets: shifted.ok_or_else(|| Error::bounds("translation overflows u64"))?,
        })
    }
}

/// A singular-series evaluation: the tracked value, the tuple size, and
/// whether the tuple leaves a free residue class modulo every prime
/// (`nu_p < p` for all `p`). When `admissible` is false the plain series
/// [`SingularSeries::singular_s`] vanishes exactly; the inclusion–exclusion
/// companion can still be nonzero for such tuples.
#[derive(Debug, Clone, Copy)]
pub struct SingularValue {
    pub value: TrackedValue,
    pub k: usize,
    pub admissible: bool,
}

/// Deterministic trial-division primality check for moduli of [`nu_p`].
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Number of distinct residue classes modulo `p` occupied by the offsets;
/// always in `[1, min(p, k)]`.
pub fn nu_p(d: &OffsetSet, p: u64) -> Result<u32> {
    if !is_prime_u64(p) {
        return Err(Error::domain(format!("nu_p needs a prime modulus, got {p}")));
    }
    let mut seen = [0u64; MAX_TUPLE];
    let mut count = 0usize;
    for &off in d.offsets() {
        let r = off % p;
        if !seen[..count].contains(&r) {
            seen[count] = r;
            count += 1;
        }
    }
    Ok(count as u32)
}

/// Shared engine for singular-series evaluation: borrows the prime tables
/// and pre-computes the generic tuple constants of each order together with
/// the tail constant of the pair-oracle error bound. Immutable after
/// construction, so concurrent use is safe.
pub struct SingularSeries<'a> {
    tables: &'a PrimeTables,
    hl: [TrackedValue; MAX_TUPLE + 1],
    kw: TrackedValue,
}

impl<'a> SingularSeries<'a> {
    /// Build the engine. The tables must cover at least the default Euler
    /// product cutoff or their own limit, whichever is smaller, and all
    /// pairwise offset differences later passed in.
    pub fn new(tables: &'a PrimeTables) -> Result<Self> {
        let p0 = DEFAULT_P0.min(tables.limit());
        let mut hl = [TrackedValue::exact(1.0, "hl-ck"); MAX_TUPLE + 1];
        for (k, slot) in hl.iter_mut().enumerate().skip(1) {
            *slot = hl_ck(k as u32, p0, tables)?;
        }
        // K_w = prod_p (1 + (2p-1)/(p (p-1)^2)) bounds the phi^{-2} tail:
        // sum_{m > M} 1/phi(m)^2 <= 2 K_w / M.
        let kw = euler_product(
            tables,
            p0,
            1,
            |p| 1.0 + (2.0 * p - 1.0) / (p * (p - 1.0) * (p - 1.0)),
            TailCoeffs { c2: 2.0, c3: 3.0, c4_bound: 8.0 },
            "phi-tail-constant",
        )?;
        Ok(SingularSeries { tables, hl, kw })
    }

    pub fn tables(&self) -> &PrimeTables {
        self.tables
    }

    /// The generic constant of order `k` (the value of the series on a
    /// tuple in "general position": `nu_p = min(p, k)` replaced by the
    /// convention behind [`hl_ck`]).
    pub fn generic_constant(&self, k: usize) -> Result<TrackedValue> {
        if k > MAX_TUPLE {
            return Err(Error::bounds(format!("tuple size capped at {MAX_TUPLE}, got {k}")));
        }
        Ok(self.hl[k])
    }

    fn check_span(&self, offsets: &[u64]) -> Result<()> {
        if let (Some(&lo), Some(&hi)) = (offsets.first(), offsets.last()) {
            if hi - lo > self.tables.limit() {
                return Err(Error::bounds(format!(
                    "offset span {} exceeds the factor-table limit {}",
                    hi - lo,
                    self.tables.limit()
                )));
            }
        }
        Ok(())
    }

    /// Core evaluation on a sorted slice; the empty slice yields the empty
    /// product `1` exactly.
    fn s_on_slice(&self, offsets: &[u64]) -> Result<(TrackedValue, bool)> {
        let k = offsets.len();
        if k == 0 {
            return Ok((TrackedValue::exact(1.0, "singular-series"), true));
        }
        self.check_span(offsets)?;
        let distinct_residues = |p: u64| -> u32 {
            let mut seen = [0u64; MAX_TUPLE];
            let mut count = 0usize;
            for &off in offsets {
                let r = off % p;
                if !seen[..count].contains(&r) {
                    seen[count] = r;
                    count += 1;
                }
            }
            count as u32
        };
        // Primes up to k carry the head correction (nu_p can reach p and
        // kill the product).
        let mut factor = 1.0f64;
        let mut ops = 0u32;
        let mut admissible = true;
        for &p in self.tables.primes() {
            let p = p as u64;
            if p > k as u64 {
                break;
            }
            let nu = distinct_residues(p) as u64;
            if nu == p {
                admissible = false;
                break;
            }
            factor *= (p - nu) as f64 / (p - 1) as f64;
            ops += 1;
        }
        if !admissible {
            return Ok((TrackedValue::new(0.0, 0.0, "singular-series"), false));
        }
        // Exceptional primes beyond k divide some pairwise difference.
        let mut exceptional: Vec<u64> = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                self.tables.for_each_prime_factor(offsets[j] - offsets[i], |p| {
                    if p > k as u64 && !exceptional.contains(&p) {
                        exceptional.push(p);
                    }
                });
            }
        }
        exceptional.sort_unstable();
        for &p in &exceptional {
            let nu = distinct_residues(p) as u64;
            factor *= (p - nu) as f64 / (p - k as u64) as f64;
            ops += 1;
        }
        let base = self.hl[k];
        let value = base.value * factor;
        let abs_error = base.abs_error * factor.abs()
            + value.abs() * (ops as f64 + 2.0) * f64::EPSILON;
        Ok((TrackedValue::new(value, abs_error, "singular-series"), true))
    }

    /// `S(D) = prod_p (1 - 1/p)^{-k} (1 - nu_p(D)/p)`: the generic constant
    /// of order `k` times corrected factors at `p <= k` and at the primes
    /// dividing some pairwise difference. Returns `0` with
    /// `admissible = false` when some prime covers all residues.
    pub fn singular_s(&self, d: &OffsetSet) -> Result<SingularValue> {
        let (value, admissible) = self.s_on_slice(d.offsets())?;
        Ok(SingularValue { value, k: d.k(), admissible })
    }

    /// The inclusion–exclusion companion
    /// `S0(D) = sum_{T subset of D} (-1)^{|D| - |T|} S(T)`, with the empty
    /// subset contributing `(-1)^{|D|}` exactly. The error bar is the sum
    /// of the subset terms' bars.
    pub fn singular_s0(&self, d: &OffsetSet) -> Result<SingularValue> {
        let k = d.k();
        let offsets = d.offsets();
        let mut sum = CompensatedSum::new();
        let mut err = 0.0f64;
        let mut subset: Vec<u64> = Vec::with_capacity(k);
        for mask in 0u32..(1u32 << k) {
            subset.clear();
            for (i, &off) in offsets.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    subset.push(off);
                }
            }
            let (term, _) = self.s_on_slice(&subset)?;
            let sign = if (k - subset.len()) % 2 == 0 { 1.0 } else { -1.0 };
            sum.add(sign * term.value);
            err += term.abs_error;
        }
        let admissible = self
            .s_on_slice(offsets)
            .map(|(_, adm)| adm)
            .unwrap_or(false);
        Ok(SingularValue {
            value: TrackedValue::new(
                sum.value(),
                err + sum.roundoff_bound(),
                "singular-series-zero",
            ),
            k,
            admissible,
        })
    }

    /// Ramanujan sum `c_q(n) = sum_{e | (q, n)} e mu(q/e)`.
    fn ramanujan(&self, q: u64, n: u64) -> Result<i64> {
        let g0 = gcd(q, n);
        let mut sum = 0i64;
        for e in self.tables.factor(g0)?.divisors() {
            sum += e as i64 * self.tables.mobius(q / e)? as i64;
        }
        Ok(sum)
    }

    /// Independent evaluation of `S0({0, d})` as the truncated sum
    /// `sum_{2 <= q <= Q, q squarefree} c_q(d) / phi(q)^2`, with the tail
    /// `sum_{q > Q} (q, d)/phi(q)^2` bounded rigorously through divisor
    /// splitting: it is at most `(2 K_w / Q) sum_{e | d} e^2 / phi(e)^2`.
    pub fn pair_s0_oracle(&self, d: u64, q_cap: u64) -> Result<TrackedValue> {
        if d == 0 {
            return Err(Error::domain("pair oracle needs a positive offset"));
        }
        if q_cap < 2 {
            return Err(Error::bounds("pair oracle needs Q >= 2"));
        }
        if q_cap > self.tables.limit() || d > self.tables.limit() {
            return Err(Error::bounds("pair oracle inputs exceed the table limit"));
        }
        let mut sum = CompensatedSum::new();
        for q in 2..=q_cap {
            if self.tables.mobius(q)? == 0 {
                continue;
            }
            let phi = self.tables.totient(q)? as f64;
            sum.add(self.ramanujan(q, d)? as f64 / (phi * phi));
        }
        let mut divisor_weight = 0.0f64;
        for e in self.tables.factor(d)?.divisors() {
            let phi_e = self.tables.totient(e)? as f64;
            divisor_weight += (e as f64 / phi_e) * (e as f64 / phi_e);
        }
        let tail = 2.0 * (self.kw.value + self.kw.abs_error) * divisor_weight / q_cap as f64;
        Ok(TrackedValue::new(
            sum.value(),
            tail + sum.roundoff_bound(),
            "pair-oracle",
        ))
    }

    /// The literal truncated modulus sum defining `S(D)`:
    /// `sum_{q_j <= Q} prod_j mu(q_j)/phi(q_j) sum_{a_j} e(sum_j a_j d_j / q_j)`
    /// over unit residues with `sum_j a_j/q_j` an integer. For `k = 3` the
    /// inner systems are enumerated through the congruence route of the
    /// triple decomposition. No rigorous tail bound exists at this scale,
    /// so the result is flagged heuristic; trend use only.
    pub fn qsum_s_oracle(&self, d: &OffsetSet, q_cap: u64) -> Result<TrackedValue> {
        if d.k() > 3 {
            return Err(Error::domain(format!(
                "q-sum oracle supports k <= 3, got {}",
                d.k()
            )));
        }
        if q_cap == 0 || q_cap > 200 {
            return Err(Error::domain(format!(
                "q-sum oracle is test-scale only (1 <= Q <= 200), got {q_cap}"
            )));
        }
        let offsets = d.offsets();
        match offsets.len() {
            // Only q = 1 admits a unit residue with a/q integral.
            1 => Ok(TrackedValue::new_heuristic(1.0, 0.0, "q-sum-oracle")),
            2 => {
                let gap = offsets[1] - offsets[0];
                let mut sum = CompensatedSum::new();
                sum.add(1.0);
                for q in 2..=q_cap {
                    if self.tables.mobius(q)? == 0 {
                        continue;
                    }
                    let phi = self.tables.totient(q)? as f64;
                    sum.add(self.ramanujan(q, gap)? as f64 / (phi * phi));
                }
                Ok(TrackedValue::new_heuristic(
                    sum.value(),
                    sum.roundoff_bound(),
                    "q-sum-oracle",
                ))
            }
            3 => self.qsum_triple(offsets, q_cap),
            _ => unreachable!("OffsetSet guarantees 1 <= k"),
        }
    }

    fn qsum_triple(&self, offsets: &[u64], q_cap: u64) -> Result<TrackedValue> {
        let mut domain: Vec<TripleDecomposition> = Vec::new();
        for g in 1..=q_cap {
            if self.tables.mobius(g)? == 0 {
                continue;
            }
            for x in 1..=q_cap / g {
                if self.tables.mobius(x)? == 0 || gcd(g, x) != 1 {
                    continue;
                }
                for y in 1..=q_cap / (g * x) {
                    if self.tables.mobius(y)? == 0 || gcd(g * x, y) != 1 {
                        continue;
                    }
                    let z_cap = (q_cap / (g * x)).min(q_cap / (g * y));
                    for z in 1..=z_cap {
                        if self.tables.mobius(z)? == 0 || gcd(g * x * y, z) != 1 {
                            continue;
                        }
                        let dec = TripleDecomposition::new(g, x, y, z, self.tables)?;
                        let (q1, q2, q3) = dec.recompose();
                        if q1 <= q_cap && q2 <= q_cap && q3 <= q_cap {
                            domain.push(dec);
                        }
                    }
                }
            }
        }
        domain.sort_by_key(|t| (t.gxyz(), t.g(), t.x(), t.y(), t.z()));
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for dec in &domain {
            let (q1, q2, q3) = dec.recompose();
            let weight = self.tables.mobius(dec.g())? as f64
                / (self.tables.totient(q1)?
                    * self.tables.totient(q2)?
                    * self.tables.totient(q3)?) as f64;
            let frac = |a: u64, q: u64, off: u64| -> f64 {
                ((a as u128 * (off % q) as u128) % q as u128) as f64 / q as f64
            };
            for r in enumerate_residues(dec)? {
                let theta = frac(r.a1, q1, offsets[0])
                    + frac(r.a2, q2, offsets[1])
                    + frac(r.a3, q3, offsets[2]);
                let term = e_of(theta);
                re.add(weight * term.re);
                im.add(weight * term.im);
            }
        }
        Ok(TrackedValue::new_heuristic(
            re.value(),
            im.value().abs() + re.roundoff_bound(),
            "q-sum-oracle",
        ))
    }
}
