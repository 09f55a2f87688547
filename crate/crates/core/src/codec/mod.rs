//! Finite-blocklength simulation of the layered random-binning key scheme:
//! rate bookkeeping, superposition codebook with nested bins, typicality
//! encoding/decoding, disagreement statistics, and leakage measurement.

mod codebook;
mod coding;
mod leakage;
mod rates;
mod simulate;
mod typicality;

pub use codebook::{generate_codebook, CloudLayer, Codebook, CodecParams};
pub use coding::{
    decode, encode, DecodingOutcome, EncoderFlags, EncodingOutcome, Key, MatchOutcome,
    StepOutcome,
};
pub use leakage::{leakage_exact, leakage_plugin, LeakageMethod, LeakageReport};
pub use rates::{
    check_decodability, derive_rates, plan_scheme, DerivedRates, SchemeCase, SchemePlan,
    RATE_EPS,
};
pub use simulate::{run_trials, simulate_with_codebook, SimulationReport};
pub use typicality::TypeTest;
