// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod deism;
pub mod directivity;
pub mod error;
pub mod formats;
pub mod ism;
pub mod metrics;
pub mod parallel;
pub mod room;
pub mod spectrum;
pub mod sph;
pub mod studies;

pub use error::{Error, Result};
