//! Visibility-based sensor placement with level-set coverage fields.

pub mod cli;
pub mod environment;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod objective;
pub mod optimizer;
pub mod oracle;
pub mod scenario;
pub mod visibility;

pub use error::{Error, Result};
