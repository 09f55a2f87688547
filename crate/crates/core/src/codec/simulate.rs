//! Monte Carlo estimation of the key-disagreement probability. One codebook
//! is drawn per report; trials run in parallel on derived RNG streams and
//! merge through order-independent counters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::codebook::{generate_codebook, Codebook, CodecParams};
use crate::codec::coding::encode_with_rng;
use crate::codec::coding::{decode, DecodingOutcome, EncodingOutcome};
use crate::codec::rates::{check_decodability, plan_scheme};
use crate::error::{Error, Result};
use crate::region::{AuxiliaryPair, JointSource, RateConstraints};

/// Trial RNG streams start here; codebook layers use 1..=num_t and plain
/// encode calls use 1 << 33.
const TRIAL_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub agreements: u64,
    pub encoder_fallbacks: u64,
    /// Agreements restricted to trials whose encoder found typical matches.
    pub encoder_success_agreements: u64,
    pub decoder_step1_failures: u64,
    pub decoder_step2_failures: u64,
    /// Estimated disagreement probability, 1 - agreements / trials.
    pub p_e_hat: f64,
    /// 95% Wilson interval for the disagreement probability.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub codebook_seed: u64,
}

fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z = 1.959_963_984_540_054_f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sample one i.i.d. block of (x, y, z) symbols from the source.
pub(crate) fn sample_block(
    p_xyz: &[f64],
    card_y: usize,
    card_z: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let mut x = vec![0u8; n];
    let mut y = vec![0u8; n];
    let mut z = vec![0u8; n];
    for i in 0..n {
        let v: f64 = rng.gen();
        let mut acc = 0.0;
        let mut cell = p_xyz.len() - 1;
        for (j, &p) in p_xyz.iter().enumerate() {
            acc += p;
            if v < acc {
                cell = j;
                break;
            }
        }
        z[i] = (cell % card_z) as u8;
        y[i] = ((cell / card_z) % card_y) as u8;
        x[i] = (cell / (card_z * card_y)) as u8;
    }
    (x, y, z)
}

struct TrialResult {
    agreed: bool,
    encoder_fallback: bool,
    step1_failed: bool,
    step2_failed: bool,
}

impl TrialResult {
    fn success_agreement(&self) -> bool {
        self.agreed && !self.encoder_fallback
    }
}

fn run_one(
    cb: &Codebook,
    params: &CodecParams,
    p_xyz: &[f64],
    card_y: usize,
    card_z: usize,
    trial: u64,
) -> Result<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(TRIAL_STREAM_BASE + trial);
    let (x, y, _z) = sample_block(p_xyz, card_y, card_z, params.n, &mut rng);
    let enc: EncodingOutcome = encode_with_rng(&x, cb, &mut rng)?;
    let dec: DecodingOutcome = decode(&y, enc.m1, enc.m2, cb, params)?;
    Ok(TrialResult {
        agreed: dec.key == enc.key,
        encoder_fallback: !enc.flags.success(),
        step1_failed: !dec.step1.ok(),
        step2_failed: dec.step1.ok() && !dec.step2.ok(),
    })
}

/// Draw one codebook and measure key agreement over `params.trials` blocks.
pub fn run_trials(
    src: &JointSource,
    aux: &AuxiliaryPair,
    rc: RateConstraints,
    params: &CodecParams,
) -> Result<SimulationReport> {
    params.validate()?;
    if params.trials == 0 {
        return Err(Error::EmptyRequest("trials must be >= 1".into()));
    }
    let plan = plan_scheme(src, aux, rc)?;
    check_decodability(&plan.rates, &plan.joint)?;
    let cb = generate_codebook(&plan.rates, &plan.joint, params)?;
    simulate_with_codebook(&cb, params)
}

/// Measurement loop against an already generated codebook.
pub fn simulate_with_codebook(cb: &Codebook, params: &CodecParams) -> Result<SimulationReport> {
    if params.trials == 0 {
        return Err(Error::EmptyRequest("trials must be >= 1".into()));
    }
    let p_xyz = cb.tables.p_xyz.clone();
    let card_y = cb.tables.card_y;
    let card_z = cb.tables.card_z;

    let results: Vec<Result<TrialResult>> = (0..params.trials as u64)
        .into_par_iter()
        .map(|trial| run_one(cb, params, &p_xyz, card_y, card_z, trial))
        .collect();

    let mut agreements = 0u64;
    let mut encoder_fallbacks = 0u64;
    let mut success_agreements = 0u64;
    let mut step1 = 0u64;
    let mut step2 = 0u64;
    for r in results {
        let r = r?;
        agreements += r.agreed as u64;
        encoder_fallbacks += r.encoder_fallback as u64;
        success_agreements += r.success_agreement() as u64;
        step1 += r.step1_failed as u64;
        step2 += r.step2_failed as u64;
    }
    let trials = params.trials as u64;
    let errors = trials - agreements;
    let (ci_lo, ci_hi) = wilson_interval(errors, trials);
    Ok(SimulationReport {
        trials,
        agreements,
        encoder_fallbacks,
        encoder_success_agreements: success_agreements,
        decoder_step1_failures: step1,
        decoder_step2_failures: step2,
        p_e_hat: errors as f64 / trials as f64,
        ci_lo,
        ci_hi,
        codebook_seed: params.seed,
    })
}
