//! Frozen implied constants ("kappa" values) for lemma-shaped bounds.
//!
//! Capabilities:
//! - flat key=value text format: one pair per line, `#` comments and blank
//!   lines ignored, binary64 values;
//! - built-in defaults compiled in from the checked-in calibration file;
//! - lookup by lemma identifier, with a config error naming unknown keys;
//! - FNV-1a hash of the raw text, recorded in run manifests so every result
//!   file names the exact calibration it was produced under.
//!
//! Each kappa replaces the implied constant of one `<<`-style bound. It was
//! measured once at the scales noted in the file and then frozen; the
//! verification suites remeasure and assert the fresh value stays within a
//! factor two of the stored one, which turns "the bound still holds at desk
//! scale" into a stable, testable statement.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Contents of the checked-in calibration file.
pub const DEFAULT_CALIBRATION_TEXT: &str = include_str!("../calibration.txt");

/// Key for the moment-sum residual bound `|R_2(h) + h(log h - B - 1)| <=
/// kappa h^0.6`.
pub const KAPPA_R2_RESIDUAL: &str = "kappa_r2_residual";

/// Key for the restricted-sum envelope cap `S(X; q, a, m) <= kappa
/// sigma(X, q)`.
pub const KAPPA_RESTRICTED_ENVELOPE: &str = "kappa_restricted_envelope";

/// Key for the cumulative divisor-sum gap `|sum - T/zeta(2)| <= kappa
/// sqrt(T)` at `xi = mu/n`.
pub const KAPPA_DIRICHLET_GAP: &str = "kappa_dirichlet_gap";

/// Key for the squarefree-progression variance cap `bound_ratio <= kappa`.
pub const KAPPA_VARIANCE_BOUND: &str = "kappa_variance_bound";

/// Key for the bivariate weight-average residual shape `|residual| <=
/// kappa 2^omega(gq) (A1 + A2) log(2 A1 A2)`.
pub const KAPPA_BIVARIATE_AVERAGE: &str = "kappa_bivariate_average";

/// Split flat key=value text into trimmed `(key, value)` string pairs.
///
/// Lines are independent; `#` starts a comment, blank lines are skipped,
/// and everything after the first `=` belongs to the value. Keys must be
/// nonempty and unique; a line without `=` is a config error.
pub fn parse_flat_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::config(format!(
                "line {}: expected key = value, got {line:?}",
                idx + 1
            )));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::config(format!("line {}: empty key", idx + 1)));
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(Error::config(format!("line {}: duplicate key {key:?}", idx + 1)));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// FNV-1a over raw bytes; used to fingerprint config and calibration text.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// A parsed calibration table: lemma identifier -> frozen kappa.
#[derive(Debug, Clone)]
pub struct Calibration {
    entries: BTreeMap<String, f64>,
    text_hash: u64,
}

impl Calibration {
    /// Parse flat key=value text; every value must be a finite, positive
    /// binary64.
    pub fn parse(text: &str) -> Result<Calibration> {
        let mut entries = BTreeMap::new();
        for (key, value) in parse_flat_pairs(text)? {
            let kappa: f64 = value.parse().map_err(|_| {
                Error::config(format!("calibration key {key:?}: bad binary64 {value:?}"))
            })?;
            if !kappa.is_finite() || kappa <= 0.0 {
                return Err(Error::config(format!(
                    "calibration key {key:?}: kappa must be finite and positive, got {kappa}"
                )));
            }
            entries.insert(key, kappa);
        }
        Ok(Calibration { entries, text_hash: fnv1a(text.as_bytes()) })
    }

    /// The checked-in defaults.
    pub fn builtin() -> Calibration {
        Calibration::parse(DEFAULT_CALIBRATION_TEXT)
            .expect("the checked-in calibration file parses")
    }

    /// Read and parse a calibration file.
    pub fn from_file(path: &Path) -> Result<Calibration> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read calibration file {}: {e}", path.display()))
        })?;
        Calibration::parse(&text)
    }

    /// The frozen kappa stored under `key`.
    pub fn kappa(&self, key: &str) -> Result<f64> {
        self.entries
            .get(key)
            .copied()
            .ok_or_else(|| Error::config(format!("calibration has no key {key:?}")))
    }

    /// All entries in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// FNV-1a hash of the raw text the table was parsed from.
    pub fn text_hash(&self) -> u64 {
        self.text_hash
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn builtin_calibration_has_every_kappa() {
        let cal = Calibration::builtin();
        for key in [
            KAPPA_R2_RESIDUAL,
            KAPPA_RESTRICTED_ENVELOPE,
            KAPPA_DIRICHLET_GAP,
            KAPPA_VARIANCE_BOUND,
            KAPPA_BIVARIATE_AVERAGE,
        ] {
            let kappa = cal.kappa(key).expect("key present");
            assert!(kappa.is_finite() && kappa > 0.0, "{key} = {kappa}");
        }
        assert_eq!(cal.entries().count(), 5);
        assert!(cal.kappa("kappa_unknown").is_err());
    }

    #[test]
    fn parser_handles_comments_and_spacing() {
        let cal = Calibration::parse(
            "# leading comment\n\n  a = 1.5  # trailing comment\nb_2=0.25\n",
        )
        .expect("parse");
        assert_eq!(cal.kappa("a").expect("a"), 1.5);
        assert_eq!(cal.kappa("b_2").expect("b"), 0.25);
        assert_eq!(cal.entries().count(), 2);
    }

    #[test]
    fn parser_rejects_malformed_text() {
        assert!(Calibration::parse("just words\n").is_err());
        assert!(Calibration::parse("= 1.0\n").is_err());
        assert!(Calibration::parse("a = not_a_number\n").is_err());
        assert!(Calibration::parse("a = -1.0\n").is_err());
        assert!(Calibration::parse("a = inf\n").is_err());
        assert!(Calibration::parse("a = 1.0\na = 2.0\n").is_err());
    }

    #[test]
    fn hash_tracks_the_raw_text() {
        let one = Calibration::parse("a = 1.0\n").expect("one");
        let two = Calibration::parse("a = 1.0 \n").expect("two");
        assert_ne!(one.text_hash(), two.text_hash());
        assert_eq!(
            one.text_hash(),
            Calibration::parse("a = 1.0\n").expect("again").text_hash()
        );
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
    }

    #[test]
    fn calibration_loads_from_disk() {
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("kappas.txt");
        let mut file = std::fs::File::create(&path).expect("create");
        writeln!(file, "kappa_test = 0.125").expect("write");
        drop(file);
        let cal = Calibration::from_file(&path).expect("load");
        assert_eq!(cal.kappa("kappa_test").expect("kappa"), 0.125);
        assert!(Calibration::from_file(&dir.path().join("missing.txt")).is_err());
    }
}
