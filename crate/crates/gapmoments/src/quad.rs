//! Adaptive numerical integration for the exponential-sum checks.
//!
//! One-dimensional adaptive Gauss-Legendre quadrature with interval
//! bisection. The 12-point Legendre nodes are generated once at startup by
//! Newton iteration on the three-term recurrence, so no tabulated constants
//! enter the build. Integrands with known peaks or kinks (the `E_h^+`
//! majorant has both) pass explicit split points; each resulting panel is
//! then refined until a two-level error estimate drops below its share of
//! the tolerance. A nested-call helper covers the two-dimensional integrals.

use crate::error::{Error, Result};

const GL_N: usize = 12;
const MAX_DEPTH: u32 = 52;

/// `(P_n(x), P_n'(x))` by the three-term recurrence; `x` strictly inside
/// `(-1, 1)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed once.
fn gauss_nodes() -> &'static [(f64, f64); GL_N] {
    use std::sync::OnceLock;
    static NODES: OnceLock<[(f64, f64); GL_N]> = OnceLock::new();
    NODES.get_or_init(|| {
        let mut out = [(0.0, 0.0); GL_N];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut x =
                (std::f64::consts::PI * (i as f64 + 0.75) / (GL_N as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(GL_N, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(GL_N, x);
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

fn gauss_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut s = 0.0;
    for &(x, w) in gauss_nodes() {
        s += w * f(c + r * x);
    }
    s * r
}

/// Value and attained error estimate of one integral.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    /// Number of integrand evaluations spent.
    pub evals: u64,
}

fn adaptive(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut u64,
) -> Result<(f64, f64)> {
    let m = 0.5 * (a + b);
    let left = gauss_panel(f, a, m);
    let right = gauss_panel(f, m, b);
    *evals += 2 * GL_N as u64;
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol || m <= a || m >= b {
        return Ok((refined, err));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::numeric(format!(
            "quadrature stalled on [{a:.6e}, {b:.6e}] at depth {depth}: \
             panel error {err:.3e} exceeds {tol:.3e}"
        )));
    }
    let (lv, le) = adaptive(f, a, m, left, 0.5 * tol, depth + 1, evals)?;
    let (rv, re) = adaptive(f, m, b, right, 0.5 * tol, depth + 1, evals)?;
    Ok((lv + rv, le + re))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    integrate_split(f, a, b, &[], tol)
}

/// Integrate `f` over `[a, b]`, forcing panel boundaries at every split
/// point that lies strictly inside the interval. Callers list the peaks and
/// kinks of the integrand here so the adaptive refinement starts on pieces
/// where the integrand is smooth.
pub fn integrate_split(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    splits: &[f64],
    tol: f64,
) -> Result<Quadrature> {
    if !a.is_finite() || !b.is_finite() || !(tol > 0.0) {
        return Err(Error::numeric(format!(
            "integrate needs finite bounds and positive tolerance, got [{a}, {b}], tol {tol}"
        )));
    }
    if b <= a {
        if b == a {
            return Ok(Quadrature { value: 0.0, abs_error: 0.0, evals: 0 });
        }
        return Err(Error::numeric(format!("integration bounds out of order: [{a}, {b}]")));
    }
    let mut edges: Vec<f64> = Vec::with_capacity(splits.len() + 2);
    edges.push(a);
    let mut inner: Vec<f64> = splits.iter().copied().filter(|t| *t > a && *t < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    let per_panel = tol / (edges.len() - 1) as f64;
    let mut value = 0.0;
    let mut abs_error = 0.0;
    let mut evals = 0u64;
    for w in edges.windows(2) {
        let whole = gauss_panel(&mut f, w[0], w[1]);
        evals += GL_N as u64;
        let (v, e) = adaptive(&mut f, w[0], w[1], whole, per_panel, 0, &mut evals)?;
        value += v;
        abs_error += e;
    }
    Ok(Quadrature { value, abs_error, evals })
}

/// Two-dimensional integral over `[a1, b1] x [a2, b2]` by nesting two
/// adaptive passes: the outer variable honors `splits1`, and `inner_splits`
/// supplies the inner split points for each fixed outer value (the kink
/// locations usually move with `t1`). The inner pass runs at a tolerance
/// small enough that its noise does not confuse the outer refinement.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    (a1, b1): (f64, f64),
    (a2, b2): (f64, f64),
    splits1: &[f64],
    inner_splits: impl Fn(f64) -> Vec<f64>,
    tol: f64,
) -> Result<Quadrature> {
    if b1 <= a1 || b2 <= a2 {
        return Ok(Quadrature { value: 0.0, abs_error: 0.0, evals: 0 });
    }
    let inner_tol = tol / (8.0 * (b1 - a1));
    let failure = std::cell::RefCell::new(None);
    let inner_err = std::cell::Cell::new(0.0f64);
    let inner_evals = std::cell::Cell::new(0u64);
    let outer = integrate_split(
        |t1| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            match integrate_split(|t2| f(t1, t2), a2, b2, &inner_splits(t1), inner_tol) {
                Ok(q) => {
                    inner_err.set(inner_err.get().max(q.abs_error));
                    inner_evals.set(inner_evals.get() + q.evals);
                    q.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        a1,
        b1,
        splits1,
        0.5 * tol,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Quadrature {
        value: outer.value,
        abs_error: outer.abs_error + inner_err.get() * (b1 - a1),
        evals: inner_evals.get(),
    })
}
