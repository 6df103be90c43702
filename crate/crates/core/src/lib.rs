// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod family;
pub mod fixtures;
pub mod format;
pub mod korobov;
pub mod numerics;
pub mod spectrum;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
