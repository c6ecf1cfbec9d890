pub mod cli;
pub mod coupling;
pub mod error;
pub mod interface;
pub mod limits;
pub mod numeric;
pub mod ode;
pub mod oracle;
pub mod point;
pub mod weyl;

pub use error::{Error, Result};
