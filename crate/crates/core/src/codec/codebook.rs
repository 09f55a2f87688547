//! Superposition codebook with nested random binning. The inner layer holds
//! `~2^{n(r_t + margin)}` sequences drawn i.i.d. from p(t); each inner
//! codeword carries its own cloud of `~2^{n(r_u + margin)}` sequences drawn
//! i.i.d. from p(u|t). Inner codewords are binned uniformly at rate r11;
//! cloud codewords get an outer bin (rates r12 + r21) and a key sub-bin
//! (rate r_k1). Bin counts use the exact rates; only codeword counts carry
//! the covering margin, and a zero-rate layer degenerates to a single
//! codeword with no margin.

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::rates::{DerivedRates, JointTables, RATE_EPS};
use crate::codec::typicality::TypeTest;
use crate::error::{Error, Result};
use crate::prob::Pmf;

/// Simulation knobs shared by codebook generation, encoding, decoding, and
/// the leakage estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    /// Blocklength in source symbols.
    pub n: usize,
    /// Typicality slack on relative letter frequencies.
    pub delta: f64,
    /// Covering margin added to the codeword rates (bits/symbol).
    pub margin: f64,
    pub seed: u64,
    pub trials: usize,
    /// Cap on total stored codeword letters.
    pub max_codebook_cells: u64,
    /// Cap on dense cells of the exact-leakage table.
    pub max_exact_cells: u64,
    /// Hash range of the plug-in leakage estimator.
    pub plugin_buckets: usize,
}

impl Default for CodecParams {
    fn default() -> Self {
        Self {
            n: 16,
            delta: 0.2,
            margin: 0.1,
            seed: 0,
            trials: 2000,
            max_codebook_cells: 1 << 27,
            max_exact_cells: 40_000_000,
            plugin_buckets: 256,
        }
    }
}

impl CodecParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }
        if !(self.margin > 0.0) {
            return Err(Error::InvalidParameter("margin must be positive".into()));
        }
        if self.plugin_buckets < 2 {
            return Err(Error::InvalidParameter("plugin_buckets must be >= 2".into()));
        }
        Ok(())
    }
}

/// Number of codewords for a layer of the given rate: one for a zero-rate
/// layer, otherwise the ceiling of 2^{n (rate + margin)}.
fn codeword_count(n: usize, rate: f64, margin: f64) -> Result<u64> {
    if rate <= RATE_EPS {
        return Ok(1);
    }
    exp2_ceil(n as f64 * (rate + margin))
}

/// Number of bins for the given rate: the ceiling of 2^{n rate}.
fn bin_count(n: usize, rate: f64) -> Result<u64> {
    if rate <= RATE_EPS {
        return Ok(1);
    }
    exp2_ceil(n as f64 * rate)
}

fn exp2_ceil(exponent: f64) -> Result<u64> {
    if exponent > 62.0 {
        return Err(Error::CodebookTooLarge {
            cells: u128::MAX,
            cap: 1 << 62,
        });
    }
    Ok(exponent.exp2().ceil() as u64)
}

/// One inner codeword's cloud: its codewords, their bin assignments, and a
/// bin-sorted index for decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudLayer {
    /// `num x n` letters, row-major.
    pub codewords: Vec<u8>,
    /// Outer bin per codeword, flattened as m12 * l21 + m21.
    pub outer_bins: Vec<u64>,
    /// Key sub-bin per codeword.
    pub key_bins: Vec<u32>,
    /// (outer bin, codeword index) sorted ascending, for bin lookups.
    sorted: Vec<(u64, u32)>,
}

impl CloudLayer {
    pub fn num_codewords(&self) -> usize {
        self.outer_bins.len()
    }

    pub fn codeword(&self, idx: usize, n: usize) -> &[u8] {
        &self.codewords[idx * n..(idx + 1) * n]
    }

    /// Codeword indices assigned to one outer bin, ascending.
    pub fn bin_members(&self, outer: u64) -> impl Iterator<Item = u32> + '_ {
        let start = self.sorted.partition_point(|&(b, _)| b < outer);
        self.sorted[start..]
            .iter()
            .take_while(move |&&(b, _)| b == outer)
            .map(|&(_, i)| i)
    }

    /// Empirical distribution of (outer bin, key sub-bin) over the cloud,
    /// as (outer, key, count) triples in codeword order of first appearance.
    pub fn bin_histogram(&self) -> Vec<(u64, u32, u32)> {
        use std::collections::HashMap;
        let mut counts: HashMap<(u64, u32), u32> = HashMap::new();
        for (&o, &k) in self.outer_bins.iter().zip(&self.key_bins) {
            *counts.entry((o, k)).or_insert(0) += 1;
        }
        let mut out: Vec<(u64, u32, u32)> =
            counts.into_iter().map(|((o, k), c)| (o, k, c)).collect();
        out.sort_unstable();
        out
    }
}

/// The generated code: inner codewords with bins, one cloud per inner
/// codeword, the alphabet sizes, and the joint-distribution snapshot the
/// encoder and decoder test against.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub n: usize,
    pub seed: u64,
    pub rates: DerivedRates,
    pub num_t: u64,
    pub l11: u64,
    pub l12: u64,
    pub l21: u64,
    pub j1: u64,
    pub l22: u64,
    pub num_u: u64,
    /// `num_t x n` letters, row-major.
    pub t_codewords: Vec<u8>,
    pub t_bins: Vec<u64>,
    pub clouds: Vec<CloudLayer>,
    /// The five-variable joint the codebook was drawn from.
    pub joint: Pmf,
    pub(crate) tables: JointTables,
    pub(crate) test_tx: TypeTest,
    pub(crate) test_tux: TypeTest,
    pub(crate) test_ty: TypeTest,
    pub(crate) test_tuy: TypeTest,
}

struct LetterSampler {
    cumulative: Vec<f64>,
}

impl LetterSampler {
    fn new(probs: &[f64]) -> Self {
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cumulative.push(acc);
        }
        Self { cumulative }
    }
}

impl Distribution<u8> for LetterSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        let v: f64 = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        match self
            .cumulative
            .iter()
            .position(|&c| v < c)
        {
            Some(i) => i as u8,
            None => (self.cumulative.len() - 1) as u8,
        }
    }
}

/// Draw the full superposition codebook. Deterministic for a fixed
/// `params.seed`: the inner layer uses stream 0 of the seeded generator and
/// cloud `l` uses stream `l + 1`.
pub fn generate_codebook(rates: &DerivedRates, joint: &Pmf, params: &CodecParams) -> Result<Codebook> {
    params.validate()?;
    let n = params.n;
    let tables = JointTables::from_joint(joint)?;
    if tables.card_t > 255 || tables.card_u > 255 || tables.card_x > 255 {
        return Err(Error::InvalidParameter(
            "alphabets larger than 255 letters are not supported".into(),
        ));
    }

    let num_t = codeword_count(n, rates.r_t, params.margin)?;
    let num_u = codeword_count(n, rates.r_u, params.margin)?;
    let l11 = bin_count(n, rates.r11)?;
    let l12 = bin_count(n, rates.r12)?;
    let l21 = bin_count(n, rates.r21)?;
    let j1 = bin_count(n, rates.r_k1)?;
    let l22 = bin_count(n, rates.r22)?;
    l12.checked_mul(l21)
        .ok_or(Error::CodebookTooLarge { cells: u128::MAX, cap: 1 << 62 })?;

    let cells = (num_t as u128) * (n as u128) + (num_t as u128) * (num_u as u128) * (n as u128);
    if cells > params.max_codebook_cells as u128 {
        return Err(Error::CodebookTooLarge { cells, cap: params.max_codebook_cells as u128 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(0);
    let t_sampler = LetterSampler::new(&tables.p_t);
    let mut t_codewords = vec![0u8; num_t as usize * n];
    for slot in t_codewords.iter_mut() {
        *slot = t_sampler.sample(&mut rng);
    }
    let t_bins: Vec<u64> = (0..num_t).map(|_| rng.gen_range(0..l11)).collect();

    let u_samplers: Vec<LetterSampler> = tables
        .p_u_given_t
        .iter()
        .map(|row| LetterSampler::new(row))
        .collect();

    let outer_bins_total = l12 * l21;
    let clouds: Vec<CloudLayer> = (0..num_t as usize)
        .map(|layer| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(1 + layer as u64);
            let t_cw = &t_codewords[layer * n..(layer + 1) * n];
            let mut codewords = vec![0u8; num_u as usize * n];
            for (i, slot) in codewords.iter_mut().enumerate() {
                let t_letter = t_cw[i % n] as usize;
                *slot = u_samplers[t_letter].sample(&mut rng);
            }
            let outer_bins: Vec<u64> =
                (0..num_u).map(|_| rng.gen_range(0..outer_bins_total)).collect();
            let key_bins: Vec<u32> = (0..num_u).map(|_| rng.gen_range(0..j1) as u32).collect();
            let mut sorted: Vec<(u64, u32)> = outer_bins
                .iter()
                .enumerate()
                .map(|(i, &b)| (b, i as u32))
                .collect();
            sorted.sort_unstable();
            CloudLayer { codewords, outer_bins, key_bins, sorted }
        })
        .collect();

    let test_tx = TypeTest::new(
        &tables.p_tx,
        vec![tables.card_t, tables.card_x],
        n,
        params.delta,
    );
    let test_tux = TypeTest::new(
        &tables.p_tux,
        vec![tables.card_t, tables.card_u, tables.card_x],
        n,
        params.delta,
    );
    let test_ty = TypeTest::new(
        &tables.p_ty,
        vec![tables.card_t, tables.card_y],
        n,
        params.delta,
    );
    let test_tuy = TypeTest::new(
        &tables.p_tuy,
        vec![tables.card_t, tables.card_u, tables.card_y],
        n,
        params.delta,
    );

    Ok(Codebook {
        n,
        seed: params.seed,
        rates: *rates,
        num_t,
        l11,
        l12,
        l21,
        j1,
        l22,
        num_u,
        t_codewords,
        t_bins,
        clouds,
        joint: joint.clone(),
        tables,
        test_tx,
        test_tux,
        test_ty,
        test_tuy,
    })
}

impl Codebook {
    pub fn t_codeword(&self, idx: usize) -> &[u8] {
        &self.t_codewords[idx * self.n..(idx + 1) * self.n]
    }

    pub fn card_x(&self) -> usize {
        self.tables.card_x
    }

    pub fn card_y(&self) -> usize {
        self.tables.card_y
    }
}
