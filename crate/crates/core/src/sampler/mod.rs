//! Exact sampling of Majorana strings and stabilizer Renyi entropy estimation.

mod estimate;
mod rng;
mod sequential;

pub use estimate::{
    batch_means_error, estimate_from_log2, estimate_sre, estimate_sres, exact_sre_enumeration,
    exact_sre_enumeration_bounded, exact_sres_bounded, sample_log2_probabilities, SamplingOptions, SreEstimate,
    ENUMERATION_LIMIT,
};
pub use rng::{StreamKey, EVENT_STREAM};
pub use sequential::{Sample, SamplerState, SequentialSampler, DEFAULT_REFRESH_EVERY};
