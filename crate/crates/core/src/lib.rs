//! Process tensors for multi-time quantum processes, with instruments,
//! memory diagnostics and the classical special case.

pub mod error;
pub mod tensor;
pub mod channels;
pub mod process;
pub mod memory;
pub mod models;
pub mod classical;
pub mod io;

pub use error::{Error, Result};
