// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod error;
pub mod functions;
pub mod harness;
pub mod moments;
pub mod noise;
pub mod operators;
pub mod oracle;
pub mod solver;
pub mod spectral;
