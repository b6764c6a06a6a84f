pub mod channels;
pub mod circuits;
pub mod classical;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod language;
pub mod learning;
pub mod linalg;
pub mod optimize;
pub mod qhmm;

pub use error::{Error, Result};
