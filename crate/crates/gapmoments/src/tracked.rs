//! Values that carry a rigorous absolute error bound.
//!
//! Constants assembled from truncated Euler products, tail-corrected prime
//! sums and compensated summation all report *bounds*, not estimates: when
//! [`TrackedValue::heuristic`] is false the implementation guarantees
//! `|value - exact| <= abs_error`. Evaluators that truncate a series without
//! a usable tail majorant (lattice truncations of slowly convergent sums)
//! set `heuristic` instead of inventing a bound.

/// A computed quantity together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedValue {
    /// Best available approximation.
    pub value: f64,
    /// Absolute error bound; always finite and non-negative.
    pub abs_error: f64,
    /// Short provenance tag, e.g. `"euler-product"` or `"mertens-approx"`.
    pub label: &'static str,
    /// True when no rigorous tail bound exists for this number; `abs_error`
    /// then covers floating-point effects only.
    pub heuristic: bool,
}

impl TrackedValue {
    /// A rigorously bounded value. Panics if `abs_error` is negative, NaN or
    /// infinite -- a non-finite "bound" is a programming error, not data.
    pub fn new(value: f64, abs_error: f64, label: &'static str) -> Self {
        assert!(
            abs_error.is_finite() && abs_error >= 0.0,
            "abs_error must be finite and >= 0, got {abs_error}"
        );
        TrackedValue {
            value,
            abs_error,
            label,
            heuristic: false,
        }
    }

    /// A value whose truncation error is not rigorously bounded.
    pub fn new_heuristic(value: f64, abs_error: f64, label: &'static str) -> Self {
        let mut tv = TrackedValue::new(value, abs_error, label);
        tv.heuristic = true;
        tv
    }

    /// An exactly representable value (error bound zero).
    pub fn exact(value: f64, label: &'static str) -> Self {
        TrackedValue::new(value, 0.0, label)
    }

    /// Does the interval `value +/- abs_error` contain `x`?
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.abs_error
    }

    /// Relative error bound (`abs_error / |value|`); infinite for value 0
    /// with a nonzero bound.
    pub fn rel_error(&self) -> f64 {
        if self.abs_error == 0.0 {
            0.0
        } else {
            self.abs_error / self.value.abs()
        }
    }

    /// Product with error propagation:
    /// `|ab - a'b'| <= |a| eb + |b| ea + ea eb`, plus one rounding.
    pub fn mul(&self, other: &TrackedValue, label: &'static str) -> TrackedValue {
        let value = self.value * other.value;
        let abs_error = self.value.abs() * other.abs_error
            + other.value.abs() * self.abs_error
            + self.abs_error * other.abs_error
            + value.abs() * f64::EPSILON;
        TrackedValue {
            value,
            abs_error,
            label,
            heuristic: self.heuristic || other.heuristic,
        }
    }

    /// Sum with error propagation.
    pub fn add(&self, other: &TrackedValue, label: &'static str) -> TrackedValue {
        let value = self.value + other.value;
        let abs_error =
            self.abs_error + other.abs_error + value.abs() * f64::EPSILON;
        TrackedValue {
            value,
            abs_error,
            label,
            heuristic: self.heuristic || other.heuristic,
        }
    }

    /// Scale by an exact floating-point factor.
    pub fn scale(&self, c: f64, label: &'static str) -> TrackedValue {
        TrackedValue {
            value: c * self.value,
            abs_error: c.abs() * self.abs_error + (c * self.value).abs() * f64::EPSILON,
            label,
            heuristic: self.heuristic,
        }
    }
}

impl std::fmt::Display for TrackedValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let marker = if self.heuristic { " (heuristic)" } else { "" };
        write!(
            f,
            "{:.17e} +/- {:.3e} [{}{}]",
            self.value, self.abs_error, self.label, marker
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_respects_bound() {
        let v = TrackedValue::new(1.0, 0.5, "test");
        assert!(v.contains(1.4));
        assert!(v.contains(0.6));
        assert!(!v.contains(1.6));
    }

    #[test]
    fn mul_propagates_errors() {
        let a = TrackedValue::new(2.0, 0.1, "a");
        let b = TrackedValue::new(3.0, 0.2, "b");
        let c = a.mul(&b, "c");
        assert_eq!(c.value, 6.0);
        // 2*0.2 + 3*0.1 + 0.02 = 0.72, plus one ulp of slack.
        assert!(c.abs_error >= 0.72 && c.abs_error < 0.7201);
    }

    #[test]
    fn heuristic_flag_is_sticky() {
        let a = TrackedValue::new_heuristic(1.0, 0.0, "a");
        let b = TrackedValue::exact(2.0, "b");
        assert!(a.mul(&b, "c").heuristic);
        assert!(b.add(&a, "d").heuristic);
        assert!(!b.mul(&b, "e").heuristic);
    }

    #[test]
    #[should_panic(expected = "abs_error")]
    fn rejects_nan_bound() {
        TrackedValue::new(1.0, f64::NAN, "bad");
    }
}
