//! Monte Carlo campaign engine.
//!
//! A campaign runs many independent large-scale drops. For each drop the
//! statistical design estimates hardening-bound SINR terms once, solves the
//! chosen power-control problem once, and scores the drop with the
//! statistical prelog. The instantaneous design re-solves per small-scale
//! realization from the true effective gains, averages `log2(1 + SINR)` per
//! user across realizations, and pays the larger training prelog. Drop
//! metrics aggregate into an empirical CDF of net throughput.
//!
//! Seeding: the root seed splits into one substream per drop; each drop
//! splits further so statistical-term estimation and instantaneous
//! evaluation never share a stream. Results are bit-reproducible for a
//! fixed scenario and independent of worker count.

use rayon::prelude::*;

use crate::channel::{drop_users, ChannelModel, ChannelSampler, LargeScaleDrop, SystemConfig};
use crate::error::{Error, Result};
use crate::performance::{
    achievable_rates, net_throughput, sinr_terms_instantaneous, sinr_terms_statistical, CsiMode,
    PowerAllocation, RateResult,
};
use crate::power_control::{solve_max_min, solve_sum_rate, SolverOptions};
use crate::precoding::build_precoder;
use crate::rng::SeedTree;

const TAG_DROP: u64 = 1;
const TAG_STAT_TERMS: u64 = 2;
const TAG_INST_EVAL: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    SumRate,
    MaxMin,
}

impl Objective {
    pub fn label(self) -> &'static str {
        match self {
            Objective::SumRate => "sum_rate",
            Objective::MaxMin => "max_min",
        }
    }
}

/// One campaign: a system configuration, a channel model, a precoding
/// scheme, an objective, a CSI design, and the Monte Carlo counts.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: SystemConfig,
    pub channel_model: ChannelModel,
    pub scheme: crate::precoding::Scheme,
    pub objective: Objective,
    pub design: CsiMode,
    /// Number of large-scale drops (one CDF sample each).
    pub n_drops: usize,
    /// Small-scale realizations per drop for the instantaneous design.
    pub n_smallscale: usize,
    /// Monte Carlo samples per drop for statistical term estimation.
    pub n_mc_stat: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.n_drops < 1 {
            return Err(Error::InvalidConfig("n_drops must be at least 1".into()));
        }
        if self.n_smallscale < 1 {
            return Err(Error::InvalidConfig(
                "n_smallscale must be at least 1".into(),
            ));
        }
        if self.n_mc_stat < 100 {
            return Err(Error::InvalidConfig(
                "n_mc_stat must be at least 100".into(),
            ));
        }
        if let ChannelModel::Keyhole(spec) = &self.channel_model {
            spec.validate()?;
            if spec.users() != self.cfg.users {
                return Err(Error::InvalidConfig(format!(
                    "keyhole spec covers {} users but the config has {}",
                    spec.users(),
                    self.cfg.users
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one drop.
#[derive(Debug, Clone)]
pub struct DropRecord {
    pub drop_index: usize,
    pub betas: Vec<f64>,
    /// Per-user spectral rates in bits/s/Hz under the scenario's design.
    pub per_user_rate: Vec<f64>,
    /// The scenario metric: sum (or minimum per-user) net throughput in
    /// bits/s.
    pub metric_throughput_bps: f64,
}

/// Empirical CDF of net throughput across drops.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputCdf {
    /// Sorted ascending.
    pub samples: Vec<f64>,
    /// `(i + 1) / n` for the i-th sorted sample.
    pub probabilities: Vec<f64>,
    pub median: f64,
    pub p05: f64,
}

/// Linearly interpolated quantile of sorted samples.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Build the empirical CDF of a non-empty sample set.
pub fn compute_cdf(samples: &[f64]) -> Result<ThroughputCdf> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build a CDF from zero samples".into(),
        ));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "CDF samples must be finite".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let probabilities = (0..n).map(|i| (i + 1) as f64 / n as f64).collect();
    let median = quantile(&sorted, 0.5);
    let p05 = quantile(&sorted, 0.05);
    Ok(ThroughputCdf {
        samples: sorted,
        probabilities,
        median,
        p05,
    })
}

/// Full campaign result: the CDF plus per-drop records in drop order.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub cdf: ThroughputCdf,
    pub drops: Vec<DropRecord>,
}

fn evaluate_drop(
    scenario: &Scenario,
    sampler: &(dyn ChannelSampler + Sync),
    options: &SolverOptions,
    drop_index: usize,
) -> Result<DropRecord> {
    let cfg = &scenario.cfg;
    let drop_tree = SeedTree::new(cfg.rng_seed)
        .child(TAG_DROP)
        .child(drop_index as u64);
    let mut drop_rng = drop_tree.stream();
    let drop: LargeScaleDrop = drop_users(cfg, &mut drop_rng)?;
    let rho_d = cfg.rho_d();

    let rates: RateResult = match scenario.design {
        CsiMode::Statistical => {
            let mut stat_rng = drop_tree.child(TAG_STAT_TERMS).stream();
            let terms = sinr_terms_statistical(
                &drop,
                sampler,
                scenario.scheme,
                cfg.antennas,
                rho_d,
                scenario.n_mc_stat,
                &mut stat_rng,
            )?;
            match scenario.objective {
                Objective::SumRate => solve_sum_rate(&terms, options)?.rates,
                Objective::MaxMin => solve_max_min(&terms, options)?.rates,
            }
        }
        CsiMode::Instantaneous => {
            let inst_tree = drop_tree.child(TAG_INST_EVAL);
            let k = cfg.users;
            // Welford per-user mean of log2(1 + SINR) across realizations.
            let mut mean_rate = vec![0.0; k];
            for real_index in 0..scenario.n_smallscale {
                let mut rng = inst_tree.child(real_index as u64).stream();
                let mut inner = || -> Result<RateResult> {
                    let real = sampler.sample(&drop, cfg.antennas, &mut rng)?;
                    let precoder = build_precoder(scenario.scheme, &real.matrix)?;
                    let terms = sinr_terms_instantaneous(&real.matrix, &precoder, rho_d);
                    let alloc: PowerAllocation = match scenario.objective {
                        Objective::SumRate => solve_sum_rate(&terms, options)?.allocation,
                        Objective::MaxMin => solve_max_min(&terms, options)?.allocation,
                    };
                    Ok(achievable_rates(&terms, &alloc))
                };
                let rates = inner()
                    .map_err(|e| e.at_drop(drop_index, Some(real_index)))?;
                for (m, r) in mean_rate.iter_mut().zip(&rates.per_user) {
                    *m += (r - *m) / (real_index + 1) as f64;
                }
            }
            RateResult::from_per_user(mean_rate)
        }
    };

    let metric_rate = match scenario.objective {
        Objective::SumRate => rates.sum,
        Objective::MaxMin => rates.min,
    };
    let metric_throughput_bps = net_throughput(metric_rate, cfg, scenario.design)?;
    Ok(DropRecord {
        drop_index,
        betas: drop.betas,
        per_user_rate: rates.per_user,
        metric_throughput_bps,
    })
}

/// Run a campaign with the scenario's own channel model.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutcome> {
    run_scenario_with_sampler(scenario, &scenario.channel_model)
}

/// Run a campaign with an externally supplied small-scale sampler (the
/// scenario's channel model field is ignored; everything else applies).
/// Drops execute in parallel; records are merged in drop order, so the
/// outcome does not depend on the worker count.
pub fn run_scenario_with_sampler(
    scenario: &Scenario,
    sampler: &(dyn ChannelSampler + Sync),
) -> Result<ScenarioOutcome> {
    scenario.validate()?;
    let options = SolverOptions::default();
    let results: Vec<Result<DropRecord>> = (0..scenario.n_drops)
        .into_par_iter()
        .map(|drop_index| {
            evaluate_drop(scenario, sampler, &options, drop_index).map_err(|e| match e {
                tagged @ Error::Campaign { .. } => tagged,
                other => other.at_drop(drop_index, None),
            })
        })
        .collect();
    // Surface the lowest-indexed failure deterministically.
    let mut drops = Vec::with_capacity(scenario.n_drops);
    for r in results {
        drops.push(r?);
    }
    let samples: Vec<f64> = drops.iter().map(|d| d.metric_throughput_bps).collect();
    Ok(ScenarioOutcome {
        cdf: compute_cdf(&samples)?,
        drops,
    })
}

/// Keyhole count for a gap sweep; `Infinite` is the Rayleigh limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyholeCount {
    Finite(usize),
    Infinite,
}

impl std::fmt::Display for KeyholeCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KeyholeCount::Finite(o) => write!(f, "{o}"),
            KeyholeCount::Infinite => f.write_str("inf"),
        }
    }
}

/// One row of a keyhole sweep: medians of both designs and the relative
/// median gap `(inst - stat) / inst`.
#[derive(Debug, Clone)]
pub struct KeyholeGapRow {
    pub keyholes: KeyholeCount,
    pub median_stat_bps: f64,
    pub median_inst_bps: f64,
    pub relative_gap: f64,
}

/// Sweep the keyhole count, running both designs per count, and report the
/// relative median gap of the scenario metric. `Infinite` rows run the
/// Rayleigh model through the identical code path.
pub fn keyhole_gap_sweep(
    base: &Scenario,
    keyhole_counts: &[KeyholeCount],
) -> Result<Vec<KeyholeGapRow>> {
    if keyhole_counts.is_empty() {
        return Err(Error::InvalidArgument(
            "keyhole sweep needs at least one count".into(),
        ));
    }
    let mut rows = Vec::with_capacity(keyhole_counts.len());
    for &count in keyhole_counts {
        let model = match count {
            KeyholeCount::Finite(o) => ChannelModel::Keyhole(
                crate::channel::KeyholeSpec::uniform(base.cfg.users, o)?,
            ),
            KeyholeCount::Infinite => ChannelModel::Rayleigh,
        };
        let stat = run_scenario(&Scenario {
            channel_model: model.clone(),
            design: CsiMode::Statistical,
            ..base.clone()
        })?;
        let inst = run_scenario(&Scenario {
            channel_model: model,
            design: CsiMode::Instantaneous,
            ..base.clone()
        })?;
        let median_stat_bps = stat.cdf.median;
        let median_inst_bps = inst.cdf.median;
        rows.push(KeyholeGapRow {
            keyholes: count,
            median_stat_bps,
            median_inst_bps,
            relative_gap: (median_inst_bps - median_stat_bps) / median_inst_bps,
        });
    }
    Ok(rows)
}

/// 5G NR-style numerology for the power-allocation recomputation count.
#[derive(Debug, Clone, PartialEq)]
pub struct NrNumerology {
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers_per_granularity: u32,
    pub ttis_per_frame: u32,
    pub frames: u32,
}

impl Default for NrNumerology {
    /// 100 MHz bandwidth, 15 kHz spacing, 24 subcarriers (2 resource
    /// blocks) per frequency granularity, 10 TTIs per 10 ms frame,
    /// 10 frames.
    fn default() -> Self {
        Self {
            bandwidth_hz: 100e6,
            subcarrier_spacing_hz: 15e3,
            subcarriers_per_granularity: 24,
            ttis_per_frame: 10,
            frames: 10,
        }
    }
}

/// How often an instantaneous-CSI design must recompute its power
/// allocation; the statistical design computes once and reuses the result
/// across all granularity intervals and frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecomputeCounts {
    pub per_tti: u64,
    pub per_frame: u64,
    pub per_n_frames: u64,
}

/// Count frequency-granularity intervals in the bandwidth and scale by
/// TTIs and frames.
pub fn recompute_counts(numerology: &NrNumerology) -> Result<RecomputeCounts> {
    if !(numerology.subcarrier_spacing_hz > 0.0) {
        return Err(Error::InvalidArgument(
            "subcarrier spacing must be positive".into(),
        ));
    }
    if !(numerology.bandwidth_hz > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    if numerology.subcarriers_per_granularity == 0
        || numerology.ttis_per_frame == 0
        || numerology.frames == 0
    {
        return Err(Error::InvalidArgument(
            "granularity size, TTIs, and frames must be positive".into(),
        ));
    }
    let granularity_hz =
        numerology.subcarriers_per_granularity as f64 * numerology.subcarrier_spacing_hz;
    let intervals = (numerology.bandwidth_hz / granularity_hz).floor() as u64;
    if intervals == 0 {
        return Err(Error::InvalidArgument(
            "bandwidth holds no complete granularity interval".into(),
        ));
    }
    let per_tti = intervals;
    let per_frame = per_tti * numerology.ttis_per_frame as u64;
    let per_n_frames = per_frame * numerology.frames as u64;
    Ok(RecomputeCounts {
        per_tti,
        per_frame,
        per_n_frames,
    })
}
