// `!(a < b)` checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anthro;
pub mod cli;
pub mod doe;
pub mod handle;
pub mod mechanism;
pub mod optimizer;
pub mod reba;
pub mod report;
pub mod scooping;
