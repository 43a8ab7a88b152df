//! Mining of (syntax-error snippet, fix) pairs from Stack Overflow code block
//! version histories, with the statistics used to characterise them.

pub mod analytics;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod mutation;
pub mod normalize;
pub mod oracle;
pub mod pairing;

pub use error::{Error, ExitCode, Result};
