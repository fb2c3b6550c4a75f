pub mod arch;
pub mod error;
pub mod field;
pub mod harness;
pub mod matcher;
pub mod pss;
pub mod sqfn;
pub mod symmetric;

pub use error::{LabError, Result};
