//! Few-shot text classification on top of a completion backend, with
//! tooling to grow small labeled datasets and to select the in-context
//! examples that make a prompt classify well.

pub mod augment;
pub mod backend;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod ga;
pub mod manifest;
pub mod prompt;
pub mod search;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
