//! Exact probability algebra on dense finite-alphabet joints: distributions,
//! conditional channels, and Shannon measures. Everything here is a pure
//! function on immutable values.

mod channel;
mod measures;
mod pmf;

pub use channel::Channel;
pub use measures::{
    conditional_mutual_information, entropy, key_identity_residual, mutual_information,
    MI_CLAMP_TOL,
};
pub use pmf::{Axis, Pmf, DEFAULT_MAX_CELLS, NORMALIZATION_TOL};
