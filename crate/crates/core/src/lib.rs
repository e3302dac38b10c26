pub mod error;
pub mod example;
pub mod geometry;
pub mod jets;
pub mod ode;
pub mod quadrature;
pub mod cases;
pub mod cli;
pub mod quartic;
pub mod roots;

pub use error::{Error, Result};
