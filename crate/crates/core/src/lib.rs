pub mod blaschke;
pub mod carleson;
pub mod cli;
pub mod compactness;
pub mod error;
pub mod harmonic;
pub mod io;
pub mod nevanlinna;
pub mod orlicz;
pub mod quadrature;
pub mod roots;
pub mod selftest;
pub mod stats;
pub mod symbols;

pub use error::{Error, Result};
