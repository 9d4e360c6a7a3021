// NaN-rejecting `!(x > 0.0)` guards and index loops in the eigen-solver are deliberate.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::manual_is_multiple_of
)]

pub mod cli;
pub mod demand;
pub mod forecast;
pub mod platform;
pub mod policy;
pub mod polyalg;
pub mod routing;
pub mod scenario;
pub mod seller;
