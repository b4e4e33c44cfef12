//! Exact computations around quadratic lattices, Weil representations, theta series,
//! imaginary quadratic fields, Eisenstein coefficients and CM degrees.

pub mod arith;
pub mod cli;
pub mod cm;
pub mod eisenstein;
pub mod error;
pub mod imq;
pub mod intmat;
pub mod cyclo;
pub mod lattice;
pub mod ledger;
pub mod loglinear;
pub mod precise;
pub mod qseries;
pub mod quaternion;
pub mod weil;

pub use error::{Error, Result};
