//! Boundary sweeps: optimize the joint scheme and the separation baseline
//! along one varying rate, warm-starting every point from its predecessor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::optimize::optimize_key_rate;
use crate::region::types::{
    AuxiliaryPair, Baseline, JointSource, OptimizerConfig, RateConstraints, RegionPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaryAxis {
    R1,
    R2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub varied_rate: f64,
    pub joint: RegionPoint,
    pub separation: RegionPoint,
}

/// Optimize both curves over `steps` evenly spaced values of the varied rate.
/// The separation winner is fed to the joint optimizer as a warm start, so
/// the joint curve dominates the separation curve pointwise by construction.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    src: &JointSource,
    vary: VaryAxis,
    fixed_value: f64,
    from: f64,
    to: f64,
    steps: usize,
    card_t: usize,
    card_u: usize,
    cfg: &OptimizerConfig,
) -> Result<Vec<SweepPoint>> {
    if steps < 2 {
        return Err(Error::InvalidParameter("sweep needs at least 2 steps".into()));
    }
    if from > to {
        return Err(Error::InvalidParameter(format!(
            "sweep range is inverted: {} > {}",
            from, to
        )));
    }
    let mut out = Vec::with_capacity(steps);
    let mut joint_warm: Vec<AuxiliaryPair> = Vec::new();
    let mut sep_warm: Vec<AuxiliaryPair> = Vec::new();
    for k in 0..steps {
        let v = from + (to - from) * k as f64 / (steps - 1) as f64;
        let rc = match vary {
            VaryAxis::R1 => RateConstraints::new(v, fixed_value)?,
            VaryAxis::R2 => RateConstraints::new(fixed_value, v)?,
        };
        let separation = optimize_key_rate(
            src,
            rc,
            card_t,
            card_u,
            cfg,
            Baseline::Separation,
            &sep_warm,
        )?;
        // the separation witness satisfies the joint constraints as well
        let mut warm = joint_warm.clone();
        warm.push(separation.witness.clone());
        let joint = optimize_key_rate(src, rc, card_t, card_u, cfg, Baseline::Joint, &warm)?;

        sep_warm = vec![separation.witness.clone()];
        joint_warm = vec![joint.witness.clone()];
        out.push(SweepPoint { varied_rate: v, joint, separation });
    }
    Ok(out)
}
