//! Joint-typicality encoding and two-step unique decoding against a fixed
//! codebook.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::codebook::{Codebook, CodecParams};
use crate::error::{Error, Result};

/// RNG stream reserved for standalone `encode` calls; trial streams live in
/// a disjoint range.
const ENCODE_STREAM: u64 = 1 << 33;

/// What the typicality search found before an index was committed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    /// Exactly one jointly typical codeword; it was chosen.
    Unique,
    /// Several jointly typical codewords; one was chosen uniformly.
    Multiple,
    /// None; an index was drawn uniformly from the whole range.
    Fallback,
}

impl MatchOutcome {
    /// True when a typical codeword was found (unique or not).
    pub fn found(self) -> bool {
        !matches!(self, MatchOutcome::Fallback)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderFlags {
    pub s1: MatchOutcome,
    pub s2: MatchOutcome,
}

impl EncoderFlags {
    pub fn success(&self) -> bool {
        self.s1.found() && self.s2.found()
    }

    pub fn unique(&self) -> bool {
        self.s1 == MatchOutcome::Unique && self.s2 == MatchOutcome::Unique
    }
}

/// The assembled secret key (k1, k2, m21).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Key {
    pub k1: u64,
    pub k2: u64,
    pub m21: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingOutcome {
    /// Public message (m11, m12).
    pub m1: (u64, u64),
    /// Secure message (m21, k2).
    pub m2: (u64, u64),
    pub key: Key,
    pub s1: u64,
    pub s2: u64,
    pub flags: EncoderFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepOutcome {
    Unique,
    NoMatch,
    Ambiguous,
}

impl StepOutcome {
    pub fn ok(self) -> bool {
        self == StepOutcome::Unique
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingOutcome {
    pub key: Key,
    pub step1: StepOutcome,
    pub step2: StepOutcome,
}

fn check_sequence(seq: &[u8], n: usize, alphabet: usize, what: &str) -> Result<()> {
    if seq.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} sequence has {} symbols, expected {}",
            what,
            seq.len(),
            n
        )));
    }
    if let Some(&bad) = seq.iter().find(|&&s| s as usize >= alphabet) {
        return Err(Error::DimensionMismatch(format!(
            "{} letter {} outside alphabet of size {}",
            what, bad, alphabet
        )));
    }
    Ok(())
}

/// Deterministic encoding: seeds a fresh stream from `params.seed`, so equal
/// inputs give equal outcomes.
pub fn encode(x: &[u8], cb: &Codebook, params: &CodecParams) -> Result<EncodingOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(ENCODE_STREAM);
    encode_with_rng(x, cb, &mut rng)
}

pub(crate) fn encode_with_rng(
    x: &[u8],
    cb: &Codebook,
    rng: &mut ChaCha8Rng,
) -> Result<EncodingOutcome> {
    check_sequence(x, cb.n, cb.card_x(), "source")?;

    // step 1: inner codeword jointly typical with x
    let mut scratch = vec![0u32; cb.test_tx.num_cells().max(cb.test_tux.num_cells())];
    let mut s1_matches: Vec<u64> = Vec::new();
    for s in 0..cb.num_t {
        if cb
            .test_tx
            .accepts_pair(cb.t_codeword(s as usize), x, &mut scratch)
        {
            s1_matches.push(s);
        }
    }
    let (s1, s1_outcome) = match s1_matches.len() {
        0 => (rng.gen_range(0..cb.num_t), MatchOutcome::Fallback),
        1 => (s1_matches[0], MatchOutcome::Unique),
        k => (s1_matches[rng.gen_range(0..k)], MatchOutcome::Multiple),
    };

    // step 2: cloud codeword jointly typical with (t, x)
    let t_cw = cb.t_codeword(s1 as usize);
    let cloud = &cb.clouds[s1 as usize];
    let mut s2_matches: Vec<u64> = Vec::new();
    for s in 0..cb.num_u {
        let u_cw = cloud.codeword(s as usize, cb.n);
        if cb.test_tux.accepts_triple(t_cw, u_cw, x, &mut scratch) {
            s2_matches.push(s);
        }
    }
    let (s2, s2_outcome) = match s2_matches.len() {
        0 => (rng.gen_range(0..cb.num_u), MatchOutcome::Fallback),
        1 => (s2_matches[0], MatchOutcome::Unique),
        k => (s2_matches[rng.gen_range(0..k)], MatchOutcome::Multiple),
    };

    let k2 = rng.gen_range(0..cb.l22);
    let m11 = cb.t_bins[s1 as usize];
    let outer = cloud.outer_bins[s2 as usize];
    let m12 = outer / cb.l21;
    let m21 = outer % cb.l21;
    let k1 = cloud.key_bins[s2 as usize] as u64;

    Ok(EncodingOutcome {
        m1: (m11, m12),
        m2: (m21, k2),
        key: Key { k1, k2, m21 },
        s1,
        s2,
        flags: EncoderFlags { s1: s1_outcome, s2: s2_outcome },
    })
}

/// Two-step unique decoding from Bob's observation and the two messages.
/// A failed step is flagged and yields the fixed fallback key component 0.
pub fn decode(
    y: &[u8],
    m1: (u64, u64),
    m2: (u64, u64),
    cb: &Codebook,
    _params: &CodecParams,
) -> Result<DecodingOutcome> {
    check_sequence(y, cb.n, cb.card_y(), "observation")?;
    let (m11, m12) = m1;
    let (m21, k2) = m2;

    let mut scratch = vec![0u32; cb.test_ty.num_cells().max(cb.test_tuy.num_cells())];

    // step 1: unique inner codeword in bin m11 typical with y
    let mut found1: Option<u64> = None;
    let mut step1 = StepOutcome::NoMatch;
    for s in 0..cb.num_t {
        if cb.t_bins[s as usize] != m11 {
            continue;
        }
        if cb
            .test_ty
            .accepts_pair(cb.t_codeword(s as usize), y, &mut scratch)
        {
            if found1.is_some() {
                step1 = StepOutcome::Ambiguous;
                found1 = None;
                break;
            }
            found1 = Some(s);
            step1 = StepOutcome::Unique;
        }
    }
    let fallback = |step1: StepOutcome, step2: StepOutcome| DecodingOutcome {
        key: Key { k1: 0, k2, m21 },
        step1,
        step2,
    };
    let s1 = match found1 {
        Some(s) => s,
        None => return Ok(fallback(step1, StepOutcome::NoMatch)),
    };

    // step 2: unique cloud codeword in outer bin (m12, m21) typical with (t, y)
    let t_cw = cb.t_codeword(s1 as usize);
    let cloud = &cb.clouds[s1 as usize];
    let outer = m12 * cb.l21 + m21;
    let mut found2: Option<u32> = None;
    let mut step2 = StepOutcome::NoMatch;
    for idx in cloud.bin_members(outer) {
        let u_cw = cloud.codeword(idx as usize, cb.n);
        if cb.test_tuy.accepts_triple(t_cw, u_cw, y, &mut scratch) {
            if found2.is_some() {
                step2 = StepOutcome::Ambiguous;
                found2 = None;
                break;
            }
            found2 = Some(idx);
            step2 = StepOutcome::Unique;
        }
    }
    let idx = match found2 {
        Some(i) => i,
        None => return Ok(fallback(step1, step2)),
    };
    let k1 = cloud.key_bins[idx as usize] as u64;
    Ok(DecodingOutcome {
        key: Key { k1, k2, m21 },
        step1,
        step2,
    })
}
