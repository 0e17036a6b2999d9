//! SINR coefficient extraction, achievable rates, and net throughput.
//!
//! Both CSI designs share one SINR shape,
//! `SINR_k = rho_d eta_k a_k / (rho_d sum_t eta_t b_tk + 1)`,
//! and differ only in where the coefficients come from:
//!
//! * instantaneous: `a_k = |g_k^H w_k|^2`, `b_tk = |g_k^H w_t|^2` for
//!   `t != k`, and `b_kk = 0` (the effective gain is fully known);
//! * statistical (hardening bound): `a_k = |E{g_k^H w_k}|^2`,
//!   `b_tk = E{|g_k^H w_t|^2}` for `t != k`, and
//!   `b_kk = E{|g_k^H w_k|^2} - |E{g_k^H w_k}|^2`, the beamforming gain
//!   uncertainty paid for not knowing the instantaneous gain.
//!
//! Statistical expectations are Monte Carlo estimates over fresh small-scale
//! realizations; the rate under fixed terms is `log2(1 + SINR_k)` and the
//! instantaneous design averages that over realizations.

use crate::channel::{ChannelSampler, LargeScaleDrop, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{dot_conj, CMat};
use crate::precoding::{build_precoder, Precoder, Scheme};
use crate::rng::RngStream;
use num_complex::Complex64;

/// Which CSI the power allocation is designed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    Statistical,
    Instantaneous,
}

impl CsiMode {
    pub fn label(self) -> &'static str {
        match self {
            CsiMode::Statistical => "stat",
            CsiMode::Instantaneous => "inst",
        }
    }
}

impl std::fmt::Display for CsiMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// SINR coefficient pairs (a_k, b_tk) plus the normalized transmit power.
/// `b` is stored row-major as `b[t * K + k]`: the weight of user t's power
/// in user k's denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTerms {
    pub flavor: CsiMode,
    a: Vec<f64>,
    b: Vec<f64>,
    rho_d: f64,
}

impl SinrTerms {
    pub fn new(flavor: CsiMode, a: Vec<f64>, b: Vec<f64>, rho_d: f64) -> Result<Self> {
        let k = a.len();
        if k == 0 {
            return Err(Error::InvalidArgument("no users in SINR terms".into()));
        }
        if b.len() != k * k {
            return Err(Error::InvalidArgument(format!(
                "b has {} entries, expected {}",
                b.len(),
                k * k
            )));
        }
        if !(rho_d > 0.0) || !rho_d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rho_d must be positive and finite, got {rho_d}"
            )));
        }
        if a.iter().any(|v| !(*v >= 0.0)) || b.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "SINR coefficients must be non-negative".into(),
            ));
        }
        if flavor == CsiMode::Instantaneous {
            for user in 0..k {
                if b[user * k + user] != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "instantaneous terms require b_kk = 0, got {} for user {user}",
                        b[user * k + user]
                    )));
                }
            }
        }
        Ok(Self { flavor, a, b, rho_d })
    }

    pub fn users(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, k: usize) -> f64 {
        self.a[k]
    }

    pub fn a_slice(&self) -> &[f64] {
        &self.a
    }

    /// Weight of user t's power in user k's interference-plus-uncertainty.
    pub fn b(&self, t: usize, k: usize) -> f64 {
        self.b[t * self.a.len() + k]
    }

    pub fn rho_d(&self) -> f64 {
        self.rho_d
    }

    /// Denominator of user k's SINR at allocation `eta`.
    pub fn denominator(&self, eta: &[f64], k: usize) -> f64 {
        let mut acc = 1.0;
        for (t, e) in eta.iter().enumerate() {
            acc += self.rho_d * e * self.b(t, k);
        }
        acc
    }
}

/// Downlink power-control coefficients with `eta_k >= 0` and
/// `sum eta_k <= 1` (tolerance 1e-9 for solver round-off).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    eta: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::InvalidArgument("empty power allocation".into()));
        }
        if eta.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "power coefficients must be non-negative".into(),
            ));
        }
        let total: f64 = eta.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "power coefficients sum to {total}, exceeding the unit budget"
            )));
        }
        Ok(Self { eta })
    }

    /// Uniform split `eta_k = 1/K`.
    pub fn uniform(users: usize) -> Self {
        Self {
            eta: vec![1.0 / users as f64; users],
        }
    }

    pub fn zeros(users: usize) -> Self {
        Self {
            eta: vec![0.0; users],
        }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn users(&self) -> usize {
        self.eta.len()
    }
}

/// Per-user and aggregate spectral rates in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub per_user: Vec<f64>,
    pub sum: f64,
    pub min: f64,
}

impl RateResult {
    pub fn from_per_user(per_user: Vec<f64>) -> Self {
        let sum = per_user.iter().sum();
        let min = per_user.iter().cloned().fold(f64::INFINITY, f64::min);
        Self { per_user, sum, min }
    }
}

/// Instantaneous SINR terms from one true channel and its precoder.
pub fn sinr_terms_instantaneous(channel: &CMat, precoder: &Precoder, rho_d: f64) -> SinrTerms {
    let k = channel.cols();
    debug_assert_eq!(precoder.w.cols(), k);
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k * k];
    for user in 0..k {
        for t in 0..k {
            let gain = dot_conj(channel.col(user), precoder.w.col(t));
            if t == user {
                a[user] = gain.norm_sqr();
            } else {
                b[t * k + user] = gain.norm_sqr();
            }
        }
    }
    SinrTerms {
        flavor: CsiMode::Instantaneous,
        a,
        b,
        rho_d,
    }
}

/// Statistical (hardening-bound) SINR terms estimated over `n_mc` fresh
/// small-scale realizations; each sample rebuilds the precoder from its own
/// realization. The beamforming gain uncertainty `b_kk` is the sample second
/// moment minus the squared sample mean, clamped at zero.
pub fn sinr_terms_statistical(
    drop: &LargeScaleDrop,
    sampler: &dyn ChannelSampler,
    scheme: Scheme,
    antennas: usize,
    rho_d: f64,
    n_mc: usize,
    rng: &mut RngStream,
) -> Result<SinrTerms> {
    if n_mc < 100 {
        return Err(Error::InvalidArgument(format!(
            "statistical terms need at least 100 Monte Carlo samples, got {n_mc}"
        )));
    }
    let k = drop.users();
    // Welford accumulators: complex means of the own gains (with their sum of
    // squared deviations) and real means of the cross powers.
    let mut own_mean = vec![Complex64::new(0.0, 0.0); k];
    let mut own_m2 = vec![0.0; k];
    let mut cross_mean = vec![0.0; k * k];
    for i in 0..n_mc {
        let real = sampler.sample(drop, antennas, rng)?;
        let precoder = build_precoder(scheme, &real.matrix)?;
        let count = (i + 1) as f64;
        for user in 0..k {
            for t in 0..k {
                let gain = dot_conj(real.matrix.col(user), precoder.w.col(t));
                if t == user {
                    let delta = gain - own_mean[user];
                    own_mean[user] += delta / count;
                    own_m2[user] += (delta.conj() * (gain - own_mean[user])).re;
                } else {
                    let x = gain.norm_sqr();
                    cross_mean[t * k + user] += (x - cross_mean[t * k + user]) / count;
                }
            }
        }
    }
    let mut a = vec![0.0; k];
    let mut b = cross_mean;
    for user in 0..k {
        a[user] = own_mean[user].norm_sqr();
        // Population variance = second moment - |mean|^2; Welford keeps it
        // non-negative, the clamp guards round-off.
        b[user * k + user] = (own_m2[user] / n_mc as f64).max(0.0);
    }
    SinrTerms::new(CsiMode::Statistical, a, b, rho_d)
}

/// `SINR_k = rho_d eta_k a_k / (rho_d sum_t eta_t b_tk + 1)`.
pub fn sinr(terms: &SinrTerms, alloc: &PowerAllocation, k: usize) -> f64 {
    let eta = alloc.eta();
    terms.rho_d * eta[k] * terms.a(k) / terms.denominator(eta, k)
}

/// Per-user rates `log2(1 + SINR_k)` under fixed terms. For statistical
/// terms this is the hardening bound; for instantaneous terms it is the
/// rate of that single realization.
pub fn achievable_rates(terms: &SinrTerms, alloc: &PowerAllocation) -> RateResult {
    let per_user = (0..terms.users())
        .map(|k| (1.0 + sinr(terms, alloc, k)).log2())
        .collect();
    RateResult::from_per_user(per_user)
}

/// Instantaneous-design rates: the per-user sample average of
/// `log2(1 + SINR_k)` across realizations, each with its own allocation.
pub fn ergodic_rates(
    realization_terms: &[SinrTerms],
    allocations: &[PowerAllocation],
) -> Result<RateResult> {
    if realization_terms.is_empty() {
        return Err(Error::InvalidArgument(
            "rate average needs at least one realization".into(),
        ));
    }
    if realization_terms.len() != allocations.len() {
        return Err(Error::InvalidArgument(format!(
            "{} realizations but {} allocations",
            realization_terms.len(),
            allocations.len()
        )));
    }
    let k = realization_terms[0].users();
    let mut mean = vec![0.0; k];
    for (i, (terms, alloc)) in realization_terms.iter().zip(allocations).enumerate() {
        if terms.users() != k || alloc.users() != k {
            return Err(Error::InvalidArgument(
                "inconsistent user counts across realizations".into(),
            ));
        }
        let rates = achievable_rates(terms, alloc);
        for (m, r) in mean.iter_mut().zip(&rates.per_user) {
            *m += (r - *m) / (i + 1) as f64;
        }
    }
    Ok(RateResult::from_per_user(mean))
}

/// Training-overhead prelog: `1 - tau_u / tau_c` when only statistical CSI
/// is needed at the users, `1 - (tau_u + tau_d) / tau_c` when downlink
/// training must also be spent.
pub fn prelog(cfg: &SystemConfig, mode: CsiMode) -> Result<f64> {
    let tau_c = cfg.tau_c as f64;
    let training = match mode {
        CsiMode::Statistical => cfg.tau_u as f64,
        CsiMode::Instantaneous => (cfg.tau_u + cfg.tau_d) as f64,
    };
    let phi = 1.0 - training / tau_c;
    if !(phi > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "prelog factor {phi} is not positive (training {training} of tau_c {tau_c})"
        )));
    }
    Ok(phi)
}

/// Net throughput in bits/s: `S = B * phi * R`.
pub fn net_throughput(rate_bits_per_hz: f64, cfg: &SystemConfig, mode: CsiMode) -> Result<f64> {
    Ok(cfg.bandwidth_hz * prelog(cfg, mode)? * rate_bits_per_hz)
}
