//! Singular series, prime-gap moment sums and exponential-sum diagnostics
//! for k-tuple statistics.
//!
//! The crate evaluates, cross-checks and reports on the classical objects of
//! prime k-tuple theory:
//!
//! * Hardy-Littlewood singular series `S(D)` and its normalized companion
//!   `S0(D)`, with rigorous error bars ([`singular`]);
//! * moment sums `R_k(h)` of `S0` over distinct offset tuples and their
//!   asymptotic main terms ([`moments`]);
//! * geometric-series exponential sums `E_h`, their majorant `E_h^+`, the
//!   three-term circle-method identity and a two-dimensional Abel summation
//!   checker ([`expsum`]);
//! * the coprime factor system `(g, x, y, z)` behind triples of moduli
//!   `(q1, q2, q3)`, admissible-residue enumeration, truncated lattice sums
//!   and the dyadic density sums they produce ([`triple`]);
//! * restricted squarefree sums, variance statistics, the `w`/`w*` density
//!   functions and the convolution identities feeding them ([`lemmas`]);
//! * sieve-based moments of primes in short intervals and Hardy-Littlewood
//!   tuple counts ([`prime_moments`]);
//! * a command-line front end with reproducible run manifests ([`cli`]).
//!
//! Everything numeric is accumulated through compensated summation and
//! deterministic chunked reductions ([`summation`]), so results are
//! bit-identical across thread counts; values derived from truncated Euler
//! products carry explicit error bounds ([`tracked`]).

pub mod calib;
pub mod cli;
pub mod constants;
pub mod error;
pub mod expsum;
pub mod lemmas;
pub mod moments;
pub mod prime_moments;
pub mod quad;
pub mod singular;
pub mod summation;
pub mod tables;
pub mod tracked;
pub mod triple;
pub mod verify;

pub use error::{Error, Result};
pub use tables::PrimeTables;
pub use tracked::TrackedValue;
