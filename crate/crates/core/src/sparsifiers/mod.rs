//! Column-sampling primitives: two deterministic dual-set samplers and a
//! randomized leverage-score sampler, each producing a [`SamplingPlan`].

mod deterministic;
mod plan;
mod potential;
mod randomized;

pub use deterministic::{
    deterministic_sampling_one, deterministic_sampling_one_traced, deterministic_sampling_two,
    deterministic_sampling_two_identity, deterministic_sampling_two_identity_traced,
    deterministic_sampling_two_traced, spectral_shift, BarrierStep, SamplerTrace, BARRIER_SLACK,
    ORTHONORMAL_TOL,
};
pub use plan::{apply_plan, SamplingPlan};
pub use potential::{lower_gain, lower_potential, upper_gain_frob, upper_gain_spec, upper_potential};
pub use randomized::{leverage_probabilities, randomized_sampling};
