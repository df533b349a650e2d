// `!(x > 0.0)` style tests deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod conic;
pub mod error;
pub mod linalg;
pub mod lqc;
pub mod mpc;
pub mod oracle;
pub mod problem;
pub mod slemma;
pub mod verify;

pub use error::{Error, Result};
