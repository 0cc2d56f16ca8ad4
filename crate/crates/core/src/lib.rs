//! Coderivatives of metric projections in Banach spaces, with a numerical
//! limsup oracle and fixed-point characterizations.

pub mod chebyshev;
pub mod coderivatives;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod fixed_points;
pub mod linalg;
pub mod oracle;
pub mod projections;
pub mod spaces;

pub use error::{Error, Result};
pub use exec::Execution;
