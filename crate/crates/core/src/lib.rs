#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cli;
pub mod gauge;
pub mod scale;
pub mod spaces;
pub mod transport;
