//! Rate bookkeeping of the layered binning scheme: how the two channel
//! budgets are split between the inner-layer bin index, the outer-layer bin
//! index, and fresh key material.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{conditional_mutual_information, mutual_information, Pmf};
use crate::region::{
    assemble_joint, reduce_tu, region_terms, AuxiliaryPair, JointSource, RateConstraints, AXIS_T,
    AXIS_U, AXIS_X, AXIS_Y, AXIS_Z,
};

/// Rates this close to zero are treated as exactly zero.
pub const RATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeCase {
    /// The public channel alone carries the generation scheme; the secure
    /// channel only distributes fresh key bits.
    Separate,
    /// Generation and distribution share the secure channel.
    Joint,
}

/// Per-symbol rates of every component of the scheme, all in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Inner-layer bin rate on the public channel: I(T;X|Y).
    pub r11: f64,
    /// Outer-layer bin rate on the public channel: the leftover r1 - r11.
    pub r12: f64,
    /// Outer-layer bin rate on the secure channel (zero in the separate case).
    pub r21: f64,
    /// Fresh-key rate on the secure channel.
    pub r22: f64,
    /// Inner codebook rate: I(T;X).
    pub r_t: f64,
    /// Outer codebook rate: I(U;X|T).
    pub r_u: f64,
    /// Key sub-bin rate: I(U;Y|T) - I(U;Z|T).
    pub r_k1: f64,
    pub case: SchemeCase,
}

impl DerivedRates {
    /// Per-symbol rate of the assembled key (k1, k2, m21).
    pub fn key_rate(&self) -> f64 {
        self.r_k1 + self.r21 + self.r22
    }
}

/// Everything the simulator needs for one (source, auxiliary, budget) choice:
/// the rates, the effective auxiliary after the T-folding reduction, and the
/// assembled five-variable joint.
#[derive(Debug, Clone)]
pub struct SchemePlan {
    pub rates: DerivedRates,
    pub aux: AuxiliaryPair,
    pub joint: Pmf,
}

fn clamp_rate(v: f64) -> f64 {
    if v.abs() <= RATE_EPS {
        0.0
    } else {
        v
    }
}

/// Split the budgets into component rates. The separate case applies when
/// r1 covers I(U;X|Y) on its own; otherwise the joint split is used, after
/// folding T into U whenever I(T;Y) > I(T;Z). Fails with
/// `RatesInapplicable` when any component would be negative, i.e. when the
/// (aux, rc) pair lies outside the scheme's bookkeeping.
pub fn derive_rates(
    src: &JointSource,
    aux: &AuxiliaryPair,
    rc: RateConstraints,
) -> Result<DerivedRates> {
    Ok(plan_scheme(src, aux, rc)?.rates)
}

/// [`derive_rates`] plus the effective auxiliary and assembled joint.
pub fn plan_scheme(
    src: &JointSource,
    aux: &AuxiliaryPair,
    rc: RateConstraints,
) -> Result<SchemePlan> {
    let first = region_terms(src, aux)?;
    // I(U;X|Y) is invariant under the T-folding reduction, so the case split
    // can be decided before reducing.
    let separate = rc.r1 >= first.i_ux_y - RATE_EPS;
    let aux_eff = if separate {
        aux.clone()
    } else {
        reduce_tu(src, aux)?
    };
    let joint = assemble_joint(src, &aux_eff)?;
    let terms = if separate {
        first
    } else {
        region_terms(src, &aux_eff)?
    };

    let r_t = mutual_information(&joint, &[AXIS_T], &[AXIS_X])?;
    let r_u = conditional_mutual_information(&joint, &[AXIS_U], &[AXIS_X], &[AXIS_T])?;
    let r_k1 = terms.mi_difference();
    let r11 = terms.i_tx_y;

    let rates = if separate {
        let r12 = clamp_rate(rc.r1 - r11);
        if r12 < 0.0 {
            return Err(Error::RatesInapplicable(format!(
                "r1 = {} below the inner bin rate I(T;X|Y) = {}",
                rc.r1, r11
            )));
        }
        DerivedRates {
            r11,
            r12,
            r21: 0.0,
            r22: rc.r2,
            r_t,
            r_u,
            r_k1,
            case: SchemeCase::Separate,
        }
    } else {
        let i_ux_yt =
            conditional_mutual_information(&joint, &[AXIS_U], &[AXIS_X], &[AXIS_Y, AXIS_T])?;
        let r12 = clamp_rate(rc.r1 - r11);
        if r12 < 0.0 {
            return Err(Error::RatesInapplicable(format!(
                "r1 = {} below the inner bin rate I(T;X|Y) = {}",
                rc.r1, r11
            )));
        }
        let r21 = clamp_rate(i_ux_yt - r12);
        if r21 < 0.0 {
            // cannot happen when the case split chose joint, kept as a guard
            return Err(Error::RatesInapplicable(format!(
                "negative secure-channel bin rate r21 = {}",
                r21
            )));
        }
        let r22 = clamp_rate(rc.r2 - r21);
        if r22 < 0.0 {
            return Err(Error::RatesInapplicable(format!(
                "r2 = {} cannot cover the outer bin rate r21 = {}; the pair violates \
                 the sum-rate constraint",
                rc.r2, r21
            )));
        }
        DerivedRates {
            r11,
            r12,
            r21,
            r22,
            r_t,
            r_u,
            r_k1,
            case: SchemeCase::Joint,
        }
    };
    Ok(SchemePlan { rates, aux: aux_eff, joint })
}

/// The unique-decoding conditions of the scheme, checked with the exact
/// rates. Both hold with equality or slack for rates produced by
/// [`derive_rates`]; the check guards hand-built rate tuples.
pub fn check_decodability(rates: &DerivedRates, joint: &Pmf) -> Result<()> {
    let i_ty = mutual_information(joint, &[AXIS_T], &[AXIS_Y])?;
    let i_uy_t = conditional_mutual_information(joint, &[AXIS_U], &[AXIS_Y], &[AXIS_T])?;
    const TOL: f64 = 1e-6;
    if rates.r_t - rates.r11 > i_ty + TOL {
        return Err(Error::UndecodableRates(format!(
            "inner layer: r_t - r11 = {} exceeds I(T;Y) = {}",
            rates.r_t - rates.r11,
            i_ty
        )));
    }
    if rates.r_u - rates.r12 - rates.r21 > i_uy_t + TOL {
        return Err(Error::UndecodableRates(format!(
            "outer layer: r_u - r12 - r21 = {} exceeds I(U;Y|T) = {}",
            rates.r_u - rates.r12 - rates.r21,
            i_uy_t
        )));
    }
    Ok(())
}

/// Marginal tables for sampling and assembling codebooks, derived from the
/// five-variable joint.
#[derive(Debug, Clone)]
pub(crate) struct JointTables {
    pub card_t: usize,
    pub card_u: usize,
    pub card_x: usize,
    pub card_y: usize,
    pub card_z: usize,
    pub p_t: Vec<f64>,
    /// p(u | t), row t.
    pub p_u_given_t: Vec<Vec<f64>>,
    /// p(t, x) row-major.
    pub p_tx: Vec<f64>,
    /// p(t, u, x) row-major.
    pub p_tux: Vec<f64>,
    /// p(t, y) row-major.
    pub p_ty: Vec<f64>,
    /// p(t, u, y) row-major.
    pub p_tuy: Vec<f64>,
    /// p(x, y, z) row-major.
    pub p_xyz: Vec<f64>,
    /// p(z | x), row x.
    pub p_z_given_x: Vec<Vec<f64>>,
}

impl JointTables {
    pub fn from_joint(joint: &Pmf) -> Result<Self> {
        let card_t = joint.axis_size(AXIS_T)?;
        let card_u = joint.axis_size(AXIS_U)?;
        let card_x = joint.axis_size(AXIS_X)?;
        let card_y = joint.axis_size(AXIS_Y)?;
        let card_z = joint.axis_size(AXIS_Z)?;
        let take = |axes: &[&str]| -> Result<Vec<f64>> {
            Ok(joint.marginalize(axes)?.reorder(axes)?.values().to_vec())
        };
        let p_t = take(&[AXIS_T])?;
        let p_tu = take(&[AXIS_T, AXIS_U])?;
        let p_u_given_t = (0..card_t)
            .map(|t| {
                let mass = p_t[t];
                (0..card_u)
                    .map(|u| {
                        if mass > 0.0 {
                            p_tu[t * card_u + u] / mass
                        } else {
                            1.0 / card_u as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let p_x = take(&[AXIS_X])?;
        let p_xz = take(&[AXIS_X, AXIS_Z])?;
        let p_z_given_x = (0..card_x)
            .map(|x| {
                let mass = p_x[x];
                (0..card_z)
                    .map(|z| {
                        if mass > 0.0 {
                            p_xz[x * card_z + z] / mass
                        } else {
                            1.0 / card_z as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            card_t,
            card_u,
            card_x,
            card_y,
            card_z,
            p_t,
            p_u_given_t,
            p_tx: take(&[AXIS_T, AXIS_X])?,
            p_tux: take(&[AXIS_T, AXIS_U, AXIS_X])?,
            p_ty: take(&[AXIS_T, AXIS_Y])?,
            p_tuy: take(&[AXIS_T, AXIS_U, AXIS_Y])?,
            p_xyz: take(&[AXIS_X, AXIS_Y, AXIS_Z])?,
            p_z_given_x,
        })
    }
}
