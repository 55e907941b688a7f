//! Day-to-day simulation of a two-platform ride-sourcing market with
//! minimum-wage regulation and driver lockout.

pub mod choice;
pub mod error;
pub mod experiment;
pub mod game;
pub mod network;
pub mod platform;
pub mod withinday;

pub use error::{Error, Result};
