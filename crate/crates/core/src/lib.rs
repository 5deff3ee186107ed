//! Solvers and a verification harness for the plasma free boundary problem on
//! unit-area planar domains.

// `!(x >= a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod estimates;
pub mod elliptic;
pub mod io;
pub mod levelset;
pub mod linalg;
pub mod numerics;
pub mod ode;
pub mod radial;
pub mod sobolev;
pub mod variational;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
