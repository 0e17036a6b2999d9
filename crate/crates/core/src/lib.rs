//! Single-cell massive MIMO downlink simulator.
//!
//! Compares two ways of running downlink power control:
//!
//! * the statistical design solves once per large-scale drop from
//!   hardening-bound SINR terms (channel means and variances), and
//! * the instantaneous design re-solves per small-scale realization from
//!   the true effective gains, paying extra training overhead for it.
//!
//! The crate provides the channel models (i.i.d. Rayleigh, which hardens,
//! and keyhole, which does not), MR/ZF precoding, MMSE channel estimation,
//! SINR/rate/net-throughput evaluation, the two power-control solvers
//! (sum-rate maximization via the quadratic transform and max-min fairness
//! via bisection over linear feasibility programs), and a seeded Monte
//! Carlo campaign engine that aggregates net-throughput CDFs.

// Validation guards are written as negated comparisons on purpose: they
// must reject NaN inputs, which direct comparisons would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod performance;
pub mod power_control;
pub mod precoding;
pub mod rng;

pub use channel::{
    compute_pathloss, drop_users, hardening_coefficient, mmse_estimate, sample_keyhole,
    sample_rayleigh, ChannelEstimate, ChannelModel, ChannelRealization, ChannelSampler,
    KeyholeSpec, LargeScaleDrop, PathLossParams, SystemConfig,
};
pub use error::{Error, Result};
pub use experiments::{
    compute_cdf, keyhole_gap_sweep, recompute_counts, run_scenario, run_scenario_with_sampler,
    KeyholeCount, NrNumerology, Objective, RecomputeCounts, Scenario, ScenarioOutcome,
    ThroughputCdf,
};
pub use performance::{
    achievable_rates, ergodic_rates, net_throughput, prelog, sinr, sinr_terms_instantaneous,
    sinr_terms_statistical, CsiMode, PowerAllocation, RateResult, SinrTerms,
};
pub use power_control::{
    check_feasibility, eval_f, solve_inner_concave, solve_max_min, solve_sum_rate, update_y,
    Feasibility, MaxMinSolution, SolverOptions, SumRateSolution,
};
pub use precoding::{build_precoder, mr_precoder, zf_precoder, Precoder, Scheme};
pub use rng::{RngStream, SeedTree};
