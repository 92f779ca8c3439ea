//! Numerical laboratory for operator connections and operator means on
//! finite-dimensional real symmetric matrices.
//!
//! The crate evaluates means two independent ways, through functional
//! calculus in the representing function and through the integral against
//! the associated Borel measure on `[0, ∞]`, and uses norm comparisons over
//! a commuting test family to decide the Löwner order between matrix pairs,
//! producing an explicit witness whenever the order fails.

pub mod error;
pub mod generate;
pub mod io;
pub mod matrix;
pub mod means;
pub mod measure;
pub mod order;
pub mod selftest;

pub use error::{Error, Result};
