//! Verified sign witnesses for the Liouville function on `n^2 + d`.
//!
//! For a nonzero integer `d` the crate produces integers `n` together with an
//! exact certificate that `lambda(n^2 + d)` equals -1 (or +1). The -1 witnesses for
//! composite square-free `d` come from an auxiliary square-free `M` built from
//! Legendre-symbol constraints, chosen so that the ambiguous form `(M, 0, -d)`
//! (or `(d, 0, -M)`) is forced into the principal class of discriminant `4dM`;
//! solutions of `M k^2 - d l^2 = 1` then give `n = d l` with `n^2 + d = d M k^2`.
//!
//! Modules, bottom-up:
//! - [`arith`]: Jacobi symbols, genus characters, CRT, primality, prime search.
//! - [`factor`]: factorization, Liouville function, square-free cores.
//! - [`forms`]: binary quadratic forms and ambiguous candidates.
//! - [`genus`]: assigned characters and principal-genus membership.
//! - [`pell`]: continued fractions, Pell and generalized Pell equations.
//! - [`construct`]: the constructed `M`, prime pairs, certificate verification.
//! - [`witness`]: sign witnesses for `lambda(n^2 + d)`.
//! - [`report`]: JSON documents and the command-line front end.

pub mod arith;
pub mod construct;
mod decimal;
pub mod error;
pub mod factor;
pub mod forms;
pub mod genus;
pub mod pell;
pub mod report;
pub mod witness;

pub use error::{Error, Result};
