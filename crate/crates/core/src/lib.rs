//! Operator-size and size-winding distributions of the large-q SYK model.
//!
//! The crate has two halves. The scramblon side ([`largeq`], [`dist`],
//! [`genfunc`]) evaluates closed-form and finite-N distributions over the
//! reduced size `s = n/N`. The exact side ([`ed`], [`teleport`]) diagonalizes
//! small Majorana systems and decomposes `ρ^{1/2} χ(t)` over Majorana strings.

pub mod cli;
pub mod dist;
pub mod ed;
pub mod error;
pub mod genfunc;
pub mod io;
pub mod largeq;
pub mod quad;
pub mod teleport;

pub use error::{Error, Result};
