// `!(x > 0.0)` deliberately rejects NaN; quadrature constants keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bandit;
pub mod cli;
pub mod confidence;
pub mod experiments;
pub mod learning;
pub mod numerics;
pub mod selection;
pub mod wealth;
