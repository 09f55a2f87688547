//! Key-rate region evaluation and optimization over auxiliary channel pairs.

mod evaluate;
mod optimize;
mod oracle;
mod sweep;
mod types;

pub use evaluate::{
    assemble_joint, reduce_tu, region_terms, separation_key_rate, theorem1_key_rate,
    TermEvaluator, FEASIBILITY_TOL,
};
pub use optimize::optimize_key_rate;
pub use oracle::{grid_oracle, grid_oracle_multi, DEFAULT_GRID_CAP};
pub use sweep::{sweep, SweepPoint, VaryAxis};
pub use types::{
    AuxiliaryPair, Baseline, JointSource, OptimizerConfig, RateConstraints, RegionPoint,
    RegionTerms, AXIS_T, AXIS_U, AXIS_X, AXIS_Y, AXIS_Z,
};
