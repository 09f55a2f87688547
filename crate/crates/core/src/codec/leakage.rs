//! Key-leakage measurement: the per-symbol information Eve's observation and
//! the public message carry about the key, for one sampled codebook.
//!
//! The key is (k1, k2, m21) with k2 drawn uniformly and independently of
//! everything Eve sees, so I(K; Z^n, M1) = I((k1, m21); Z^n, M1) exactly;
//! the exact enumerator works with the reduced pair. The plug-in estimator
//! follows the full key through a hashed observation, as an empirical
//! cross-check usable beyond the enumeration cap.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::codebook::{generate_codebook, Codebook, CodecParams};
use crate::codec::coding::{encode_with_rng, Key};
use crate::codec::rates::plan_scheme;
use crate::codec::simulate::sample_block;
use crate::error::{Error, Result};
use crate::region::{AuxiliaryPair, JointSource, RateConstraints};

const PLUGIN_STREAM_BASE: u64 = 1 << 34;

/// Cap on enumeration work (source states times codewords scanned per state).
const MAX_EXACT_OPS: u128 = 2_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakageMethod {
    Exact,
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub method: LeakageMethod,
    /// Estimate of I(K; Z^n, M1) / n in bits per symbol.
    pub leakage_per_symbol: f64,
    /// Enumerated source states (exact) or simulated trials (plugin).
    pub samples: u64,
    pub n: usize,
    pub codebook_seed: u64,
}

/// Encoder output law for one source block: explicit outcomes plus, for the
/// no-match fallback, a reference to a whole cloud's bin histogram.
struct BranchDist {
    /// (probability, m11, m12, m21, k1)
    direct: Vec<(f64, u64, u64, u64, u32)>,
    /// (cloud index, probability routed through its histogram)
    hist: Vec<(usize, f64)>,
}

fn digits_of(mut idx: u64, base: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for i in (0..n).rev() {
        out[i] = (idx % base as u64) as u8;
        idx /= base as u64;
    }
    out
}

fn branch_distribution(x: &[u8], cb: &Codebook) -> BranchDist {
    let mut scratch = vec![0u32; cb.test_tx.num_cells().max(cb.test_tux.num_cells())];
    let mut s1_matches: Vec<u64> = Vec::new();
    for s in 0..cb.num_t {
        if cb.test_tx.accepts_pair(cb.t_codeword(s as usize), x, &mut scratch) {
            s1_matches.push(s);
        }
    }
    let (layers, w1): (Vec<u64>, f64) = if s1_matches.is_empty() {
        ((0..cb.num_t).collect(), 1.0 / cb.num_t as f64)
    } else {
        let w = 1.0 / s1_matches.len() as f64;
        (s1_matches, w)
    };

    let mut direct = Vec::new();
    let mut hist = Vec::new();
    for &s1 in &layers {
        let t_cw = cb.t_codeword(s1 as usize);
        let cloud = &cb.clouds[s1 as usize];
        let m11 = cb.t_bins[s1 as usize];
        let mut s2_matches: Vec<u64> = Vec::new();
        for s in 0..cb.num_u {
            let u_cw = cloud.codeword(s as usize, cb.n);
            if cb.test_tux.accepts_triple(t_cw, u_cw, x, &mut scratch) {
                s2_matches.push(s);
            }
        }
        if s2_matches.is_empty() {
            hist.push((s1 as usize, w1));
        } else {
            let w2 = w1 / s2_matches.len() as f64;
            for &s2 in &s2_matches {
                let outer = cloud.outer_bins[s2 as usize];
                direct.push((
                    w2,
                    m11,
                    outer / cb.l21,
                    outer % cb.l21,
                    cloud.key_bins[s2 as usize],
                ));
            }
        }
    }
    BranchDist { direct, hist }
}

/// Mutual information of a dense joint table, in bits.
fn table_mi(table: &[f64], rows: usize, cols: usize) -> f64 {
    let mut row_marg = vec![0.0f64; rows];
    let mut col_marg = vec![0.0f64; cols];
    let mut total = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            let v = table[r * cols + c];
            row_marg[r] += v;
            col_marg[c] += v;
            total += v;
        }
    }
    if total <= 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for r in 0..rows {
        if row_marg[r] <= 0.0 {
            continue;
        }
        for c in 0..cols {
            let v = table[r * cols + c];
            if v > 0.0 {
                mi += (v / total) * ((v * total) / (row_marg[r] * col_marg[c])).log2();
            }
        }
    }
    if mi < 0.0 && mi > -1e-9 {
        0.0
    } else {
        mi
    }
}

/// Exact per-symbol leakage for the sampled codebook: enumerate every source
/// block, average out the encoder's internal randomness analytically, and
/// compute I((k1, m21); Z^n, M11, M12) from the resulting dense joint.
pub fn leakage_exact(
    src: &JointSource,
    aux: &AuxiliaryPair,
    rc: RateConstraints,
    params: &CodecParams,
) -> Result<LeakageReport> {
    params.validate()?;
    let plan = plan_scheme(src, aux, rc)?;
    let cb = generate_codebook(&plan.rates, &plan.joint, params)?;
    let n = params.n;
    let card_x = src.card_x() as u64;
    let card_z = src.card_z() as u64;

    let x_states = (card_x as u128)
        .checked_pow(n as u32)
        .ok_or(Error::EnumerationTooLarge { states: u128::MAX, cap: MAX_EXACT_OPS })?;
    let z_states = (card_z as u128)
        .checked_pow(n as u32)
        .ok_or(Error::EnumerationTooLarge { states: u128::MAX, cap: MAX_EXACT_OPS })?;
    let ops = x_states * (cb.num_t as u128) * (1 + cb.num_u as u128);
    if ops > MAX_EXACT_OPS {
        return Err(Error::EnumerationTooLarge { states: ops, cap: MAX_EXACT_OPS });
    }
    let key_dim = (cb.j1 as u128) * (cb.l21 as u128);
    let col_dim = z_states * (cb.l11 as u128) * (cb.l12 as u128);
    let cells = key_dim * col_dim;
    if cells > params.max_exact_cells as u128 {
        return Err(Error::EnumerationTooLarge {
            states: cells,
            cap: params.max_exact_cells as u128,
        });
    }
    let fallback_cells = (cb.num_t as u128) * z_states;
    if fallback_cells > params.max_exact_cells as u128 {
        return Err(Error::EnumerationTooLarge {
            states: fallback_cells,
            cap: params.max_exact_cells as u128,
        });
    }

    let x_states = x_states as u64;
    let z_states = z_states as usize;
    let key_dim = key_dim as usize;
    let col_dim = col_dim as usize;

    let p_x_letters: Vec<f64> = src.p_x();
    let p_z_given_x = &cb.tables.p_z_given_x;

    // phase 1 (parallel): the encoder law for every source block
    let dists: Vec<(f64, BranchDist)> = (0..x_states)
        .into_par_iter()
        .map(|xi| {
            let x = digits_of(xi, card_x as usize, n);
            let px: f64 = x.iter().map(|&l| p_x_letters[l as usize]).product();
            let dist = if px > 0.0 {
                branch_distribution(&x, &cb)
            } else {
                BranchDist { direct: Vec::new(), hist: Vec::new() }
            };
            (px, dist)
        })
        .collect();

    // phase 2 (sequential, deterministic): dense accumulation
    let mut table = vec![0.0f64; key_dim * col_dim];
    let mut fallback_w = vec![0.0f64; cb.num_t as usize * z_states];
    let l11 = cb.l11 as usize;
    let l12 = cb.l12 as usize;
    let l21 = cb.l21 as usize;
    let mut pz = Vec::with_capacity(z_states);
    for (xi, (px, dist)) in dists.iter().enumerate() {
        if *px <= 0.0 {
            continue;
        }
        let x = digits_of(xi as u64, card_x as usize, n);
        // p(z-block | x-block) as an iterated tensor product
        pz.clear();
        pz.push(1.0);
        for &letter in &x {
            let row = &p_z_given_x[letter as usize];
            let mut next = Vec::with_capacity(pz.len() * row.len());
            for &base in &pz {
                for &pzl in row {
                    next.push(base * pzl);
                }
            }
            pz = next;
        }
        for &(w, m11, m12, m21, k1) in &dist.direct {
            let row = k1 as usize * l21 + m21 as usize;
            let col_base = (m11 as usize) * l12 + m12 as usize;
            let mass = px * w;
            let row_slice = &mut table[row * col_dim..(row + 1) * col_dim];
            for (zi, &pzv) in pz.iter().enumerate() {
                row_slice[(zi * l11) * l12 + col_base] += mass * pzv;
            }
        }
        for &(layer, w) in &dist.hist {
            let mass = px * w;
            let slice = &mut fallback_w[layer * z_states..(layer + 1) * z_states];
            for (zi, &pzv) in pz.iter().enumerate() {
                slice[zi] += mass * pzv;
            }
        }
    }
    // fold the fallback mass through each cloud's bin histogram
    for layer in 0..cb.num_t as usize {
        let weights = &fallback_w[layer * z_states..(layer + 1) * z_states];
        if weights.iter().all(|&w| w == 0.0) {
            continue;
        }
        let m11 = cb.t_bins[layer] as usize;
        let hist = cb.clouds[layer].bin_histogram();
        let total = cb.num_u as f64;
        for (outer, k1, count) in hist {
            let m12 = (outer / cb.l21) as usize;
            let m21 = (outer % cb.l21) as usize;
            let frac = count as f64 / total;
            let row = k1 as usize * l21 + m21;
            let col_base = m11 * l12 + m12;
            let row_slice = &mut table[row * col_dim..(row + 1) * col_dim];
            for (zi, &w) in weights.iter().enumerate() {
                row_slice[(zi * l11) * l12 + col_base] += w * frac;
            }
        }
    }

    let mi = table_mi(&table, key_dim, col_dim);
    Ok(LeakageReport {
        method: LeakageMethod::Exact,
        leakage_per_symbol: mi / n as f64,
        samples: x_states,
        n,
        codebook_seed: params.seed,
    })
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Plug-in estimate of the per-symbol leakage from the empirical joint of
/// the full key and a hash of (Z^n, M1). Positively biased for small sample
/// counts and insensitive to structure the hash collapses; use
/// [`leakage_exact`] whenever the enumeration fits.
pub fn leakage_plugin(
    src: &JointSource,
    aux: &AuxiliaryPair,
    rc: RateConstraints,
    params: &CodecParams,
) -> Result<LeakageReport> {
    params.validate()?;
    if params.trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "plug-in estimation needs >= 1000 trials, got {}",
            params.trials
        )));
    }
    let plan = plan_scheme(src, aux, rc)?;
    let cb = generate_codebook(&plan.rates, &plan.joint, params)?;
    let p_xyz = cb.tables.p_xyz.clone();
    let card_y = cb.tables.card_y;
    let card_z = cb.tables.card_z;
    let buckets = params.plugin_buckets as u64;

    let samples: Vec<Result<(Key, u32)>> = (0..params.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(PLUGIN_STREAM_BASE + trial);
            let (x, _y, z) = sample_block(&p_xyz, card_y, card_z, params.n, &mut rng);
            let enc = encode_with_rng(&x, &cb, &mut rng)?;
            let bytes = z
                .iter()
                .copied()
                .chain(enc.m1.0.to_le_bytes())
                .chain(enc.m1.1.to_le_bytes());
            let bucket = (fnv1a(bytes) % buckets) as u32;
            Ok((enc.key, bucket))
        })
        .collect();

    let mut joint: BTreeMap<(Key, u32), u64> = BTreeMap::new();
    let mut key_marg: BTreeMap<Key, u64> = BTreeMap::new();
    let mut bucket_marg: BTreeMap<u32, u64> = BTreeMap::new();
    for s in samples {
        let (key, bucket) = s?;
        *joint.entry((key, bucket)).or_insert(0) += 1;
        *key_marg.entry(key).or_insert(0) += 1;
        *bucket_marg.entry(bucket).or_insert(0) += 1;
    }
    let t = params.trials as f64;
    let mut mi = 0.0;
    for (&(key, bucket), &c) in &joint {
        let p = c as f64 / t;
        let pk = key_marg[&key] as f64 / t;
        let pb = bucket_marg[&bucket] as f64 / t;
        mi += p * (p / (pk * pb)).log2();
    }
    if mi < 0.0 {
        mi = 0.0;
    }
    Ok(LeakageReport {
        method: LeakageMethod::Plugin,
        leakage_per_symbol: mi / params.n as f64,
        samples: params.trials as u64,
        n: params.n,
        codebook_seed: params.seed,
    })
}
