//! Command-line front end: verification suites, grid sweeps, CSV/JSON
//! output with reproducible manifests.
//!
//! Capabilities:
//! - [`run`] drives one invocation from raw `argv` to a process exit code:
//!   `0` success, `1` verification-suite failure, `2` usage or
//!   configuration error, `3` numeric domain violation (the message names
//!   the failed precondition);
//! - subcommands `constants`, `singular`, `rk`, `trend`, `gallagher`,
//!   `expsum`, `decomp`, `v3`, `lemmas`, `sfunction`, `moments`,
//!   `hlcount`, and `verify`;
//! - grid results serialize as CSV with the fixed header
//!   `h,k,value,abs_error,main_term,residual,seconds` and 17 significant
//!   digits per numeric field (round-trip safe); single results serialize
//!   as JSON; without `--out` a human-readable table goes to stdout;
//! - every `--out` file gets a sibling `<out>.manifest.json` recording the
//!   command line, effective configuration, table limit, `P0`, thread
//!   count, calibration hash, wall time and artifact version. Re-running
//!   with the same manifest reproduces all value fields bit-identically
//!   (the `seconds` column is wall-clock metadata, outside that contract);
//! - optional flat `key=value` config file (keys `p0`, `table_limit`,
//!   `calibration`) overriding the built-in defaults; worker threads from
//!   `--threads`, else the `ARTIFACT_THREADS` environment variable, else
//!   machine parallelism. All parallelism runs inside a dedicated pool of
//!   that size, and results are thread-count invariant by construction.

use crate::calib::{parse_flat_pairs, Calibration};
use crate::constants::{const_a, const_b, const_c, const_c2, mu_k, r_odd, DEFAULT_P0};
use crate::error::{Error, Result};
use crate::expsum::{circle_triple_check, ehplus_integrals, EhPlusIntegral};
use crate::lemmas::{
    convolution_ids, dirichlet_partial, restricted_sum, variance_m2, w_star_average,
    PartialMode, RestrictedSumSpec, SumWeight, XiKind,
};
use crate::moments::{gallagher_ratio, r3_trend, rk_sum, SumOptions};
use crate::prime_moments::{hl_count, moment_mk, moment_mk_split};
use crate::singular::{OffsetSet, SingularSeries};
use crate::tables::PrimeTables;
use crate::tracked::TrackedValue;
use crate::triple::{bridge_residual, decompose, enumerate_residues, s_companion_frac,
    s_companion_log, s_function, s_function_limit};
use crate::verify::{run_all, run_suite, SuiteReport};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Version string recorded in every manifest.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The exact header row of every CSV this tool writes.
pub const CSV_HEADER: &str = "h,k,value,abs_error,main_term,residual,seconds";

/// Default prime-table limit (covers every verification suite).
pub const DEFAULT_TABLE_LIMIT: u64 = 1 << 20;

/// Decimal serialization with 17 significant digits: enough to round-trip
/// any binary64 value exactly.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Reproducibility record written alongside every result file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// The raw argument vector.
    pub command_line: Vec<String>,
    /// Effective configuration (defaults merged with the config file).
    pub config_values: BTreeMap<String, String>,
    /// Prime-table sieve limit.
    pub table_limit: u64,
    /// Euler-product truncation point `P0`.
    pub p0: u64,
    /// Worker threads used.
    pub threads: usize,
    /// FNV-1a hash of the calibration text, as 16 hex digits.
    pub calibration_hash: String,
    /// Wall time of the computation.
    pub wall_seconds: f64,
    /// Crate version that produced the result.
    pub artifact_version: &'static str,
}

/// One CSV row in the fixed column order.
#[derive(Debug, Clone, Copy)]
struct CsvRow {
    h: u64,
    k: u32,
    value: f64,
    abs_error: f64,
    main_term: f64,
    residual: f64,
    seconds: f64,
}

impl CsvRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.h,
            self.k,
            fmt17(self.value),
            fmt17(self.abs_error),
            fmt17(self.main_term),
            fmt17(self.residual),
            fmt17(self.seconds)
        )
    }

    fn human_line(&self) -> String {
        format!(
            "{:>8} {:>3} {:>24} {:>12} {:>24} {:>16} {:>9}",
            self.h,
            self.k,
            format!("{:.12e}", self.value),
            format!("{:.3e}", self.abs_error),
            format!("{:.12e}", self.main_term),
            format!("{:.6e}", self.residual),
            format!("{:.3}", self.seconds)
        )
    }

    fn human_header() -> String {
        format!(
            "{:>8} {:>3} {:>24} {:>12} {:>24} {:>16} {:>9}",
            "h", "k", "value", "abs_error", "main_term", "residual", "seconds"
        )
    }
}

#[derive(Parser)]
#[command(
    name = "gapmoments",
    version,
    about = "Singular series, prime-gap moment sums, and verification suites",
    disable_help_subcommand = true
)]
struct Cli {
    /// Flat key=value config file (keys: p0, table_limit, calibration).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: ARTIFACT_THREADS, else machine parallelism).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Result file (CSV for grids, JSON otherwise); writes
    /// <FILE>.manifest.json alongside.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form and Euler-product constants with error bars.
    Constants,
    /// Singular series S(D), or the centered S0(D) with --centered.
    Singular {
        /// Offset set, comma separated (e.g. 0,2,6).
        #[arg(long, value_delimiter = ',', required = true)]
        offsets: Vec<u64>,
        /// Evaluate the centered series S0 instead of S.
        #[arg(long)]
        centered: bool,
    },
    /// Moment sums R_k(h) over a grid of h values.
    Rk {
        /// Moment order (1, 2, or 3).
        #[arg(long)]
        k: u32,
        /// Grid of h values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<u64>,
    },
    /// Third-moment trend R_3(h) against (9/2) h log^2 h.
    Trend {
        /// Ascending grid of h values.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1024u64, 8192, 65536])]
        h: Vec<u64>,
    },
    /// Moment-to-main-term ratio R_k(h) / (mu_k-style main term).
    Gallagher {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        h: u64,
    },
    /// Exponential-sum checks (circle-method identity, majorant integrals).
    Expsum {
        #[command(subcommand)]
        which: ExpsumCmd,
    },
    /// Decompose a squarefree modulus triple into its (g,x,y,z) parts.
    Decomp {
        /// The triple q1,q2,q3.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        /// Also count the residue system (bounded enumeration).
        #[arg(long)]
        residues: bool,
    },
    /// Inner-sum total V3(h) implied by the third-moment identity.
    V3 {
        #[arg(long)]
        h: u64,
    },
    /// Lemma-scale checks: restricted sums, variance, averages, identities.
    Lemmas {
        #[command(subcommand)]
        which: LemmasCmd,
    },
    /// Dyadic threshold sum s(T) with its class-averaged reference.
    Sfunction {
        #[arg(long)]
        t: u64,
        /// Also evaluate the log and fractional-part companion series.
        #[arg(long)]
        companions: bool,
    },
    /// Prime moments M_k(X, h) of psi-increments against their predictions.
    Moments {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        h: u64,
        /// Moment orders, comma separated (1..=6).
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        /// Split the range into this many parallel parts (1 = sequential).
        #[arg(long, default_value_t = 1)]
        parts: usize,
    },
    /// Weighted Hardy-Littlewood tuple count against S(D) x.
    Hlcount {
        #[arg(long, value_delimiter = ',', required = true)]
        offsets: Vec<u64>,
        #[arg(long)]
        x: u64,
    },
    /// Run verification suites; exits 1 when any check fails.
    Verify {
        /// Suite name (exact, sharp, trend, circle, determinism,
        /// calibration); all suites when omitted.
        #[arg(long)]
        suite: Option<String>,
    },
}

#[derive(Subcommand)]
enum ExpsumCmd {
    /// Circle-method triple identity: quadrature and combinatorial count.
    Circle {
        /// Check every h in 1..=h_max.
        #[arg(long, default_value_t = 64)]
        h_max: u64,
    },
    /// Majorant integrals of E_h^+ with their scale-free bound ratios.
    Ehplus {
        #[arg(long)]
        h: u64,
        #[arg(long, value_enum, default_value_t = EhKind::Single)]
        kind: EhKind,
        /// Offset for the shifted-pair integral.
        #[arg(long)]
        t1: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EhKind {
    Single,
    ShiftedPair,
    TripleProduct,
    TripleFirst,
    TripleMixed,
}

#[derive(Subcommand)]
enum LemmasCmd {
    /// Restricted sum over a residue class with its main term and envelope.
    Restricted {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
        /// Residue class; omitted = the starred coprimality-only form.
        #[arg(long)]
        a: Option<u64>,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, value_enum, default_value_t = WeightArg::PhiRatio)]
        weight: WeightArg,
    },
    /// Remainder variance over coprime residue classes with bound ratio.
    Variance {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, value_enum, default_value_t = WeightArg::PhiRatio)]
        weight: WeightArg,
    },
    /// Bivariate w* average against its product main term.
    Wstar {
        #[arg(long)]
        g: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        a1: u64,
        #[arg(long)]
        a2: u64,
    },
    /// Exact convolution identities up to n, with f2 partial sums.
    Convolution {
        #[arg(long, default_value_t = 100_000)]
        n: u64,
    },
    /// Dirichlet partial sums of (1 * xi) against the limit coefficient.
    Dirichlet {
        #[arg(long, value_enum)]
        xi: XiArg,
        #[arg(long)]
        t: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Cumulative)]
        mode: ModeArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    /// mu(n)^2.
    Mu2,
    /// mu(n)^2 n^2 / phi(n)^2.
    PhiRatio,
}

impl From<WeightArg> for SumWeight {
    fn from(w: WeightArg) -> SumWeight {
        match w {
            WeightArg::Mu2 => SumWeight::Mu2,
            WeightArg::PhiRatio => SumWeight::Mu2N2OverPhi2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum XiArg {
    DeltaOne,
    MuOverN,
    Mu2OverN,
    LiouvilleOverN,
}

impl From<XiArg> for XiKind {
    fn from(x: XiArg) -> XiKind {
        match x {
            XiArg::DeltaOne => XiKind::DeltaOne,
            XiArg::MuOverN => XiKind::MuOverN,
            XiArg::Mu2OverN => XiKind::MuSquaredOverN,
            XiArg::LiouvilleOverN => XiKind::LiouvilleOverN,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Dyadic,
    Cumulative,
}

impl From<ModeArg> for PartialMode {
    fn from(m: ModeArg) -> PartialMode {
        match m {
            ModeArg::Dyadic => PartialMode::DyadicMean,
            ModeArg::Cumulative => PartialMode::Cumulative,
        }
    }
}

/// What a subcommand produced, in both renderings.
enum Payload {
    Rows(Vec<CsvRow>),
    Doc(Value),
    Report(Vec<SuiteReport>),
}

/// Effective settings after merging the config file over the defaults.
struct Settings {
    p0: u64,
    table_limit: u64,
    calibration_path: Option<PathBuf>,
}

impl Settings {
    fn from_config(path: Option<&Path>) -> Result<Settings> {
        let mut s = Settings {
            p0: DEFAULT_P0,
            table_limit: DEFAULT_TABLE_LIMIT,
            calibration_path: None,
        };
        let Some(path) = path else { return Ok(s) };
        let text = std::fs::read_to_string(path)?;
        for (key, value) in parse_flat_pairs(&text)? {
            match key.as_str() {
                "p0" => {
                    s.p0 = value
                        .parse()
                        .map_err(|_| Error::config(format!("p0 must be an integer, got {value:?}")))?
                }
                "table_limit" => {
                    s.table_limit = value.parse().map_err(|_| {
                        Error::config(format!("table_limit must be an integer, got {value:?}"))
                    })?
                }
                "calibration" => s.calibration_path = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::config(format!(
                        "unknown config key {other:?}; expected p0, table_limit, or calibration"
                    )))
                }
            }
        }
        Ok(s)
    }

    fn config_values(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("p0".into(), self.p0.to_string());
        map.insert("table_limit".into(), self.table_limit.to_string());
        map.insert(
            "calibration".into(),
            self.calibration_path
                .as_ref()
                .map_or_else(|| "builtin".into(), |p| p.display().to_string()),
        );
        map
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        return Ok(n);
    }
    if let Ok(raw) = std::env::var("ARTIFACT_THREADS") {
        let n: usize = raw.trim().parse().map_err(|_| {
            Error::config(format!("ARTIFACT_THREADS must be a positive integer, got {raw:?}"))
        })?;
        if n == 0 {
            return Err(Error::config("ARTIFACT_THREADS must be at least 1"));
        }
        return Ok(n);
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run one CLI invocation. Returns the process exit code; never panics on
/// user input.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, argv) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) => 2,
                _ => 3,
            }
        }
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<i32> {
    let settings = Settings::from_config(cli.config.as_deref())?;
    let threads = resolve_threads(cli.threads)?;
    let calibration = match &settings.calibration_path {
        Some(path) => Calibration::from_file(path)?,
        None => Calibration::builtin(),
    };
    let tables = PrimeTables::build(settings.table_limit)?;
    let p0 = settings.p0.min(tables.limit());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot build a {threads}-thread pool: {e}")))?;
    let started = Instant::now();
    let payload = pool.install(|| dispatch(&cli.command, &tables, &calibration, p0))?;
    let manifest = RunManifest {
        command_line: argv.to_vec(),
        config_values: settings.config_values(),
        table_limit: tables.limit(),
        p0,
        threads,
        calibration_hash: format!("{:016x}", calibration.text_hash()),
        wall_seconds: started.elapsed().as_secs_f64(),
        artifact_version: ARTIFACT_VERSION,
    };
    render(&payload, cli.out.as_deref(), &manifest)?;
    Ok(match &payload {
        Payload::Report(reports) => {
            if reports.iter().all(|r| r.all_passed()) {
                0
            } else {
                1
            }
        }
        _ => 0,
    })
}

fn dispatch(
    cmd: &Cmd,
    tables: &PrimeTables,
    cal: &Calibration,
    p0: u64,
) -> Result<Payload> {
    match cmd {
        Cmd::Constants => cmd_constants(tables, p0),
        Cmd::Singular { offsets, centered } => cmd_singular(offsets, *centered, tables),
        Cmd::Rk { k, h } => cmd_rk(*k, h, tables),
        Cmd::Trend { h } => cmd_trend(h, tables),
        Cmd::Gallagher { k, h } => cmd_gallagher(*k, *h, tables),
        Cmd::Expsum { which } => cmd_expsum(which),
        Cmd::Decomp { q, residues } => cmd_decomp(q, *residues, tables),
        Cmd::V3 { h } => cmd_v3(*h, tables),
        Cmd::Lemmas { which } => cmd_lemmas(which, tables),
        Cmd::Sfunction { t, companions } => cmd_sfunction(*t, *companions, p0, tables),
        Cmd::Moments { x, h, k, parts } => cmd_moments(*x, *h, k, *parts, tables),
        Cmd::Hlcount { offsets, x } => cmd_hlcount(offsets, *x, tables),
        Cmd::Verify { suite } => cmd_verify(suite.as_deref(), tables, cal),
    }
}

fn tracked_doc(tv: &TrackedValue) -> Value {
    json!({
        "value": tv.value,
        "abs_error": tv.abs_error,
        "label": tv.label,
        "heuristic": tv.heuristic,
    })
}

fn cmd_constants(tables: &PrimeTables, p0: u64) -> Result<Payload> {
    let mut entries: Vec<(String, TrackedValue)> =
        vec![("A".into(), const_a()), ("B".into(), const_b())];
    for k in [2u32, 4, 6, 8] {
        entries.push((format!("mu_{k}"), mu_k(k)?));
    }
    for k in 1..=4u32 {
        entries.push((format!("r_{}", 2 * k + 1), r_odd(k)?));
    }
    entries.push(("C".into(), const_c(p0, tables)?));
    entries.push(("C_2".into(), const_c2(p0, tables)?));
    let mut constants = serde_json::Map::new();
    for (name, tv) in &entries {
        constants.insert(name.clone(), tracked_doc(tv));
    }
    Ok(Payload::Doc(json!({ "p0": p0, "constants": constants })))
}

fn cmd_singular(offsets: &[u64], centered: bool, tables: &PrimeTables) -> Result<Payload> {
    let set = OffsetSet::new(offsets.to_vec())?;
    let series = SingularSeries::new(tables)?;
    let sv = if centered {
        series.singular_s0(&set)?
    } else {
        series.singular_s(&set)?
    };
    Ok(Payload::Doc(json!({
        "offsets": offsets,
        "k": sv.k,
        "centered": centered,
        "admissible": sv.admissible,
        "value": tracked_doc(&sv.value),
    })))
}

fn cmd_rk(k: u32, grid: &[u64], tables: &PrimeTables) -> Result<Payload> {
    let opts = SumOptions::default();
    let rows = grid
        .iter()
        .map(|&h| {
            let row = rk_sum(k, h, tables, &opts)?;
            Ok(CsvRow {
                h: row.h,
                k: row.k,
                value: row.value.value,
                abs_error: row.value.abs_error,
                main_term: row.main_term,
                residual: row.residual,
                seconds: row.seconds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Payload::Rows(rows))
}

fn cmd_trend(grid: &[u64], tables: &PrimeTables) -> Result<Payload> {
    let rows = r3_trend(grid, tables, &SumOptions::default())?
        .into_iter()
        .map(|row| CsvRow {
            h: row.h,
            k: row.k,
            value: row.value.value,
            abs_error: row.value.abs_error,
            main_term: row.main_term,
            residual: row.residual,
            seconds: row.seconds,
        })
        .collect();
    Ok(Payload::Rows(rows))
}

fn cmd_gallagher(k: u32, h: u64, tables: &PrimeTables) -> Result<Payload> {
    let ratio = gallagher_ratio(k, h, tables)?;
    Ok(Payload::Doc(json!({
        "k": k,
        "h": h,
        "ratio": tracked_doc(&ratio),
    })))
}

fn cmd_expsum(which: &ExpsumCmd) -> Result<Payload> {
    match which {
        ExpsumCmd::Circle { h_max } => {
            let mut rows = Vec::new();
            let mut max_gap = 0.0f64;
            for h in 1..=*h_max {
                let (quadrature, count) = circle_triple_check(h)?;
                max_gap = max_gap.max((quadrature - h as f64).abs());
                rows.push(json!({ "h": h, "quadrature": quadrature, "count": count }));
            }
            Ok(Payload::Doc(json!({
                "h_max": h_max,
                "max_abs_gap": max_gap,
                "rows": rows,
            })))
        }
        ExpsumCmd::Ehplus { h, kind, t1 } => {
            let which = match kind {
                EhKind::Single => EhPlusIntegral::Single,
                EhKind::ShiftedPair => EhPlusIntegral::ShiftedPair {
                    t1: t1.ok_or_else(|| {
                        Error::config("--kind shifted-pair needs --t1 <offset>")
                    })?,
                },
                EhKind::TripleProduct => EhPlusIntegral::TripleProduct,
                EhKind::TripleFirst => EhPlusIntegral::TripleFirstMoment,
                EhKind::TripleMixed => EhPlusIntegral::TripleMixedMoment,
            };
            let (value, bound_ratio) = ehplus_integrals(*h, which)?;
            Ok(Payload::Doc(json!({
                "h": h,
                "kind": format!("{:?}", kind.to_possible_value().expect("not skipped").get_name()),
                "t1": t1,
                "value": value,
                "bound_ratio": bound_ratio,
            })))
        }
    }
}

fn cmd_decomp(q: &[u64], residues: bool, tables: &PrimeTables) -> Result<Payload> {
    let [q1, q2, q3]: [u64; 3] = q
        .try_into()
        .map_err(|_| Error::config(format!("--q needs exactly three moduli, got {}", q.len())))?;
    let mut doc = json!({ "q1": q1, "q2": q2, "q3": q3 });
    match decompose(q1, q2, q3, tables)? {
        None => {
            doc["decomposes"] = json!(false);
        }
        Some(d) => {
            doc["decomposes"] = json!(true);
            doc["g"] = json!(d.g());
            doc["x"] = json!(d.x());
            doc["y"] = json!(d.y());
            doc["z"] = json!(d.z());
            doc["modulus"] = json!(d.gxyz());
            if residues {
                doc["residue_count"] = json!(enumerate_residues(&d)?.len());
            }
        }
    }
    Ok(Payload::Doc(doc))
}

fn cmd_v3(h: u64, tables: &PrimeTables) -> Result<Payload> {
    let v = bridge_residual(h, tables)?;
    Ok(Payload::Doc(json!({ "h": h, "v3": tracked_doc(&v) })))
}

fn cmd_lemmas(which: &LemmasCmd, tables: &PrimeTables) -> Result<Payload> {
    match which {
        LemmasCmd::Restricted { x, q, a, m, weight } => {
            let spec = RestrictedSumSpec {
                x: *x,
                q: *q,
                a: *a,
                m: *m,
                weight: (*weight).into(),
            };
            let r = restricted_sum(&spec, tables)?;
            Ok(Payload::Doc(json!({
                "x": x, "q": q, "a": a, "m": m,
                "value": tracked_doc(&r.value),
                "main_term": tracked_doc(&r.main_term),
                "residual": r.residual,
                "envelope_ratio": r.envelope_ratio,
            })))
        }
        LemmasCmd::Variance { x, q, m, weight } => {
            let v = variance_m2(*x, *q, *m, (*weight).into(), tables)?;
            Ok(Payload::Doc(json!({
                "x": x, "q": q, "m": m,
                "value": v.value,
                "main_per_class": v.main_per_class,
                "classes": v.classes,
                "bound_ratio": v.bound_ratio,
            })))
        }
        LemmasCmd::Wstar { g, q, a1, a2 } => {
            let r = w_star_average(*g, *q, *a1, *a2, tables)?;
            Ok(Payload::Doc(json!({
                "g": g, "q": q, "a1_max": a1, "a2_max": a2,
                "sum": tracked_doc(&r.sum),
                "main_term": tracked_doc(&r.main_term),
                "residual": r.residual,
                "terms": r.terms,
            })))
        }
        LemmasCmd::Convolution { n } => {
            let r = convolution_ids(*n, tables)?;
            Ok(Payload::Doc(json!({
                "n_checked": r.n_checked,
                "lambda_max_gap": r.lambda_max_gap,
                "f1_max_rel_gap": r.f1_max_rel_gap,
                "f2_max_gap": r.f2_max_gap,
                "pairs_checked": r.pairs_checked,
                "partial_sums": r.partial_sums,
                "partial_limit": r.partial_limit,
            })))
        }
        LemmasCmd::Dirichlet { xi, t, mode } => {
            let r = dirichlet_partial((*xi).into(), *t, (*mode).into(), tables)?;
            Ok(Payload::Doc(json!({
                "t": t,
                "value": r.value,
                "limit": r.limit,
                "gap": r.gap,
                "terms": r.terms,
            })))
        }
    }
}

fn cmd_sfunction(t: u64, companions: bool, p0: u64, tables: &PrimeTables) -> Result<Payload> {
    let value = s_function(t, tables)?;
    let reference = s_function_limit(p0, tables)?;
    let mut doc = json!({
        "t": t,
        "value": tracked_doc(&value),
        "class_average_reference": tracked_doc(&reference),
        "gap_to_reference": value.value - reference.value,
    });
    if companions {
        doc["companion_log"] = tracked_doc(&s_companion_log(t, tables)?);
        doc["companion_frac"] = tracked_doc(&s_companion_frac(t, tables)?);
    }
    Ok(Payload::Doc(doc))
}

fn cmd_moments(
    x: u64,
    h: u64,
    orders: &[u32],
    parts: usize,
    tables: &PrimeTables,
) -> Result<Payload> {
    let rows = orders
        .iter()
        .map(|&k| {
            let started = Instant::now();
            let est = if parts > 1 {
                moment_mk_split(x, h, k, parts, tables)?
            } else {
                moment_mk(x, h, k, tables)?
            };
            Ok(CsvRow {
                h,
                k,
                value: est.empirical,
                // The estimate is a plain binary64 average with no tracked
                // enclosure, so the bar column is zero by definition.
                abs_error: 0.0,
                main_term: est.predicted,
                residual: est.empirical - est.predicted,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Payload::Rows(rows))
}

fn cmd_hlcount(offsets: &[u64], x: u64, tables: &PrimeTables) -> Result<Payload> {
    let set = OffsetSet::new(offsets.to_vec())?;
    let series = SingularSeries::new(tables)?;
    let count = hl_count(&set, x, &series)?;
    Ok(Payload::Doc(json!({
        "offsets": offsets,
        "x": count.x,
        "weighted": count.weighted,
        "predicted": count.predicted,
        "ratio": count.ratio,
        "admissible": count.admissible,
    })))
}

fn cmd_verify(
    suite: Option<&str>,
    tables: &PrimeTables,
    cal: &Calibration,
) -> Result<Payload> {
    let reports = match suite {
        Some(name) => vec![run_suite(name, tables, cal)?],
        None => run_all(tables, cal)?,
    };
    Ok(Payload::Report(reports))
}

// ------------------------------------------------------------- rendering --

fn report_doc(reports: &[SuiteReport]) -> Value {
    json!({
        "suites": reports
            .iter()
            .map(|r| {
                json!({
                    "suite": r.suite,
                    "seconds": r.seconds,
                    "all_passed": r.all_passed(),
                    "checks": r
                        .checks
                        .iter()
                        .map(|c| {
                            json!({
                                "name": c.name,
                                "passed": c.passed,
                                "documented_failure": c.documented_failure,
                                "detail": c.detail,
                                "seconds": c.seconds,
                            })
                        })
                        .collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    })
}

/// Render a JSON document as indented `key = value` lines; objects of the
/// `{value, abs_error, ...}` shape collapse to one `value +/- bar` line.
fn human_doc_lines(prefix: &str, doc: &Value, out: &mut Vec<String>) {
    match doc {
        Value::Object(map) => {
            if let (Some(Value::Number(v)), Some(Value::Number(e))) =
                (map.get("value"), map.get("abs_error"))
            {
                let heuristic = map
                    .get("heuristic")
                    .and_then(Value::as_bool)
                    .unwrap_or(false);
                let mark = if heuristic { " (heuristic)" } else { "" };
                out.push(format!("{prefix} = {v} +/- {e}{mark}"));
                return;
            }
            for (key, val) in map {
                let child = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                human_doc_lines(&child, val, out);
            }
        }
        Value::Array(arr) => {
            for (i, val) in arr.iter().enumerate() {
                human_doc_lines(&format!("{prefix}[{i}]"), val, out);
            }
        }
        scalar => out.push(format!("{prefix} = {scalar}")),
    }
}

fn render(payload: &Payload, out: Option<&Path>, manifest: &RunManifest) -> Result<()> {
    match out {
        None => {
            match payload {
                Payload::Rows(rows) => {
                    println!("{}", CsvRow::human_header());
                    for row in rows {
                        println!("{}", row.human_line());
                    }
                }
                Payload::Doc(doc) => {
                    let mut lines = Vec::new();
                    human_doc_lines("", doc, &mut lines);
                    for line in lines {
                        println!("{line}");
                    }
                }
                Payload::Report(reports) => {
                    for report in reports {
                        for line in report.lines() {
                            println!("{line}");
                        }
                        println!(
                            "suite {}: {} checks in {:.2}s, {}",
                            report.suite,
                            report.checks.len(),
                            report.seconds,
                            if report.all_passed() { "all passed" } else { "FAILURES present" }
                        );
                    }
                }
            }
            Ok(())
        }
        Some(path) => {
            let content = match payload {
                Payload::Rows(rows) => {
                    let mut text = String::from(CSV_HEADER);
                    text.push('\n');
                    for row in rows {
                        text.push_str(&row.csv_line());
                        text.push('\n');
                    }
                    text
                }
                Payload::Doc(doc) => {
                    let mut text = serde_json::to_string_pretty(doc)
                        .map_err(|e| Error::numeric(format!("json serialization failed: {e}")))?;
                    text.push('\n');
                    text
                }
                Payload::Report(reports) => {
                    let mut text = serde_json::to_string_pretty(&report_doc(reports))
                        .map_err(|e| Error::numeric(format!("json serialization failed: {e}")))?;
                    text.push('\n');
                    text
                }
            };
            std::fs::write(path, content)?;
            let mut manifest_path = path.as_os_str().to_owned();
            manifest_path.push(".manifest.json");
            let mut manifest_text = serde_json::to_string_pretty(manifest)
                .map_err(|e| Error::numeric(format!("manifest serialization failed: {e}")))?;
            manifest_text.push('\n');
            std::fs::write(PathBuf::from(manifest_path), manifest_text)?;
            Ok(())
        }
    }
}
