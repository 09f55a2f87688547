//! Exhaustive grid search over row-stochastic matrices whose entries are
//! multiples of 1/resolution. Ground truth for the local-search optimizer on
//! small instances; exact enough for boundary-slope checks because the grid
//! does not depend on the rate budgets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::region::evaluate::{
    feasible_for, separation_key_rate, theorem1_key_rate, TermEvaluator,
};
use crate::region::types::{
    AuxiliaryPair, Baseline, JointSource, RateConstraints, RegionPoint,
};

/// Cap on the number of (u matrix, t matrix) grid combinations.
pub const DEFAULT_GRID_CAP: u128 = 200_000_000;

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, idx: usize, left: usize) {
        if idx + 1 == cur.len() {
            cur[idx] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[idx] = v;
            rec(out, cur, idx + 1, left - v);
        }
    }
    rec(&mut out, &mut cur, 0, total);
    out
}

fn grid_rows(resolution: usize, cols: usize) -> Vec<Vec<f64>> {
    compositions(resolution, cols)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect()
}

#[derive(Debug, Clone)]
struct GridBest {
    key_rate: f64,
    i_ux_y: f64,
    u_rows: Vec<f64>,
    t_rows: Vec<f64>,
}

fn grid_better(a: &GridBest, b: &GridBest) -> bool {
    if a.key_rate != b.key_rate {
        return a.key_rate > b.key_rate;
    }
    if a.i_ux_y != b.i_ux_y {
        return a.i_ux_y < b.i_ux_y;
    }
    (&a.t_rows, &a.u_rows) < (&b.t_rows, &b.u_rows)
}

/// Enumerate the whole grid once and return the best feasible point for each
/// requested rate pair. The expensive part (term evaluation) is shared across
/// all rate pairs.
pub fn grid_oracle_multi(
    src: &JointSource,
    rcs: &[RateConstraints],
    card_t: usize,
    card_u: usize,
    resolution: usize,
    baseline: Baseline,
) -> Result<Vec<RegionPoint>> {
    if card_t < 1 || card_u < 1 {
        return Err(Error::InvalidParameter(
            "auxiliary cardinalities must be >= 1".into(),
        ));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be >= 2".into()));
    }
    if rcs.is_empty() {
        return Err(Error::EmptyRequest("no rate pairs requested".into()));
    }
    let card_x = src.card_x();
    let u_row_choices = grid_rows(resolution, card_u);
    let t_row_choices = grid_rows(resolution, card_t);
    let n_u: u128 = (u_row_choices.len() as u128)
        .checked_pow(card_x as u32)
        .ok_or(Error::GridTooLarge { points: u128::MAX, cap: DEFAULT_GRID_CAP })?;
    let n_t: u128 = (t_row_choices.len() as u128)
        .checked_pow(card_u as u32)
        .ok_or(Error::GridTooLarge { points: u128::MAX, cap: DEFAULT_GRID_CAP })?;
    let points = n_u.saturating_mul(n_t);
    if points > DEFAULT_GRID_CAP {
        return Err(Error::GridTooLarge { points, cap: DEFAULT_GRID_CAP });
    }

    let n_u = n_u as u64;
    let per_u: Vec<Vec<Option<GridBest>>> = (0..n_u)
        .into_par_iter()
        .map(|u_idx| {
            let mut ev = TermEvaluator::new(src, card_u, card_t);
            // decode the mixed-radix u matrix index
            let mut u_rows = Vec::with_capacity(card_x * card_u);
            let mut rem = u_idx as usize;
            for _ in 0..card_x {
                let choice = rem % u_row_choices.len();
                rem /= u_row_choices.len();
                u_rows.extend_from_slice(&u_row_choices[choice]);
            }
            let mut bests: Vec<Option<GridBest>> = vec![None; rcs.len()];
            let mut t_rows = vec![0.0f64; card_u * card_t];
            let mut t_digits = vec![0usize; card_u];
            loop {
                for (u, &d) in t_digits.iter().enumerate() {
                    t_rows[u * card_t..(u + 1) * card_t].copy_from_slice(&t_row_choices[d]);
                }
                let terms = ev.eval(&u_rows, &t_rows);
                for (slot, &rc) in bests.iter_mut().zip(rcs) {
                    if feasible_for(&terms, rc, baseline) {
                        let cand = GridBest {
                            key_rate: terms.mi_difference() + rc.r2,
                            i_ux_y: terms.i_ux_y,
                            u_rows: u_rows.clone(),
                            t_rows: t_rows.clone(),
                        };
                        if slot.as_ref().map_or(true, |b| grid_better(&cand, b)) {
                            *slot = Some(cand);
                        }
                    }
                }
                // advance the t matrix counter
                let mut carry = true;
                for d in t_digits.iter_mut() {
                    *d += 1;
                    if *d < t_row_choices.len() {
                        carry = false;
                        break;
                    }
                    *d = 0;
                }
                if carry {
                    break;
                }
            }
            bests
        })
        .collect();

    let mut merged: Vec<Option<GridBest>> = vec![None; rcs.len()];
    for bests in per_u {
        for (slot, cand) in merged.iter_mut().zip(bests) {
            if let Some(cand) = cand {
                if slot.as_ref().map_or(true, |b| grid_better(&cand, b)) {
                    *slot = Some(cand);
                }
            }
        }
    }

    let to_rows = |flat: &[f64], rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows).map(|r| flat[r * cols..(r + 1) * cols].to_vec()).collect()
    };
    merged
        .into_iter()
        .zip(rcs)
        .map(|(best, &rc)| {
            let best = best.ok_or_else(|| {
                Error::InvalidParameter("no feasible grid point found".into())
            })?;
            let witness = AuxiliaryPair::from_rows(
                to_rows(&best.u_rows, card_x, card_u),
                to_rows(&best.t_rows, card_u, card_t),
            )?;
            match baseline {
                Baseline::Joint => theorem1_key_rate(src, &witness, rc),
                Baseline::Separation => separation_key_rate(src, &witness, rc),
            }
        })
        .collect()
}

/// Single-rate-pair convenience wrapper around [`grid_oracle_multi`].
pub fn grid_oracle(
    src: &JointSource,
    rc: RateConstraints,
    card_t: usize,
    card_u: usize,
    resolution: usize,
    baseline: Baseline,
) -> Result<RegionPoint> {
    Ok(grid_oracle_multi(src, &[rc], card_t, card_u, resolution, baseline)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::types::OptimizerConfig;

    #[test]
    fn composition_count_is_binomial() {
        assert_eq!(compositions(4, 2).len(), 5);
        assert_eq!(compositions(3, 3).len(), 10);
        for c in compositions(5, 3) {
            assert_eq!(c.iter().sum::<usize>(), 5);
        }
    }

    #[test]
    fn eve_equals_bob_gives_r2() {
        let x = crate::prob::Pmf::uniform(vec![crate::prob::Axis::new("x", 2)]).unwrap();
        let xy = x
            .extend(&crate::prob::Channel::bsc("x", "y", 0.2).unwrap())
            .unwrap();
        let xyz = xy
            .extend(&crate::prob::Channel::identity("y", "z", 2).unwrap())
            .unwrap();
        let src = JointSource::new(xyz).unwrap();
        let p = grid_oracle(
            &src,
            RateConstraints::new(0.5, 0.2).unwrap(),
            2,
            2,
            4,
            Baseline::Joint,
        )
        .unwrap();
        assert!((p.key_rate - 0.2).abs() < 1e-9);
    }

    #[test]
    fn common_bit_hits_one_at_any_resolution() {
        let src = JointSource::common_bit_with_independent_eve(2, 2).unwrap();
        for resolution in [2, 3, 8] {
            let p = grid_oracle(
                &src,
                RateConstraints::new(0.0, 0.0).unwrap(),
                1,
                2,
                resolution,
                Baseline::Joint,
            )
            .unwrap();
            assert!((p.key_rate - 1.0).abs() < 1e-9, "res {}: {}", resolution, p.key_rate);
        }
    }

    #[test]
    fn grid_cap_errors() {
        let src = JointSource::bsc_pair(0.1, 0.2).unwrap();
        let err = grid_oracle(
            &src,
            RateConstraints::new(1.0, 0.0).unwrap(),
            6,
            6,
            64,
            Baseline::Joint,
        )
        .unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
    }

    #[test]
    fn oracle_matches_optimizer_on_degraded_bsc() {
        let src = JointSource::bsc_pair(0.1, 0.2).unwrap();
        let rc = RateConstraints::new(1.0, 0.0).unwrap();
        let oracle = grid_oracle(&src, rc, 1, 2, 32, Baseline::Joint).unwrap();
        let cfg = OptimizerConfig::default();
        let opt = crate::region::optimize_key_rate(
            &src,
            rc,
            1,
            2,
            &cfg,
            Baseline::Joint,
            &[],
        )
        .unwrap();
        assert!(
            (oracle.key_rate - opt.key_rate).abs() < 1e-3,
            "oracle {} vs optimizer {}",
            oracle.key_rate,
            opt.key_rate
        );
    }
}
