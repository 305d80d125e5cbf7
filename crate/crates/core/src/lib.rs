#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod evolve;
pub mod numerics;
pub mod reaction;
pub mod steady;
pub mod wave;

pub use error::{Error, Result};
pub use reaction::{Classification, Kind, Nonlinearity, Variant};
