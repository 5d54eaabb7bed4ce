//! Transported group structures on Polish spaces, pushforward Haar measures,
//! haarization of probability and σ-finite measures, and numeric checks of
//! the resulting invariances.

pub mod error;
pub mod expr;
pub mod groups;
pub mod measure;
pub mod haarize;
pub mod transport;
pub mod verify;
pub mod registry;

pub use error::{Error, Result};
