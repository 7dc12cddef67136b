//! Symmetric-power Hecke eigenvalues of level-one eigenforms, restricted to
//! sums of two squares.
//!
//! The modules follow the pipeline: exact q-expansions ([`qseries`]),
//! normalization and Satake angles ([`hecke`]), the `sym^j` coefficient sieve
//! ([`sympow`]), representation counts ([`twosquares`]), sign-change and
//! moment statistics ([`analysis`]), and Euler products at `s = 1`
//! ([`lvalues`]). The guide in `book/` walks through each step.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod arith;
pub mod error;
pub mod hecke;
pub mod lvalues;
pub mod qseries;
pub mod sum;
pub mod sympow;
pub mod twosquares;

pub use error::{Error, Result};
