//! Open-system dynamics for a finite-level system coupled to a thermal
//! bosonic reservoir: Davies generators from level shift operators, exact
//! finite-bath dynamics, and diagnostics of the initial-correlation term.

pub mod analysis;
pub mod bath;
pub mod davies;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod sector;
pub mod sphere;
pub mod states;
pub mod thermal;

pub use error::{Error, Result};
