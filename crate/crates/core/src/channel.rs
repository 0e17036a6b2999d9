//! Large-scale fading drops, small-scale channel models, channel-hardening
//! statistics, and pilot-based MMSE channel estimation.
//!
//! The channel to user k is `g_k = sqrt(beta_k) * h_k`: a large-scale gain
//! `beta_k` (path loss and optional shadowing) times a small-scale vector
//! `h_k` with uncorrelated zero-mean unit-variance entries. Two small-scale
//! models are provided:
//!
//! * i.i.d. Rayleigh: `h_k` has i.i.d. CN(0,1) entries; the squared norm
//!   hardens, HC_k = Var{||g||^2} / (E{||g||^2})^2 = 1/M.
//! * keyhole (double scattering): `g_k = sqrt(beta_k) sum_j c_j p_j q_j`
//!   with scalar CN(0,1) keyhole gains `p_j`, i.i.d. CN(0,1) vectors `q_j`,
//!   and deterministic complex gains `c_j`. Here
//!   HC_k = (1 + 1/M) sum_j |c_j|^4 + 1/M, which does not vanish with M:
//!   keyhole channels do not harden.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, CMat};
use crate::rng::RngStream;

/// Three-slope distance-dependent path loss. The loss exponent is
/// `exponent_far` beyond `d1`, `exponent_mid` between `d0` and `d1`, and 0
/// (a constant plateau) inside `d0`; the three branches are stitched
/// continuously. `reference_loss_db` anchors the far slope at 1 m.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossParams {
    pub d0_m: f64,
    pub d1_m: f64,
    pub exponent_mid: f64,
    pub exponent_far: f64,
    pub reference_loss_db: f64,
}

impl Default for PathLossParams {
    /// Breakpoints at 10 m / 50 m, exponents 2 / 3.5, and 128.2 dB loss at
    /// 1 km on the far slope (128.2 - 35 log10(1000) = 23.2 dB at 1 m).
    ///
    /// The far-slope anchor is the macro-cell convention (140.7 dB at 1 km
    /// for 1.9 GHz, 15 m BS height) minus 12.5 dB of BS antenna gain, which
    /// the large-scale coefficient absorbs. The statistical design's SINR is
    /// capped by beamforming-gain uncertainty, so unlike a plain SNR shift
    /// this anchor decides whether typical drops sit in the regime where
    /// that cap binds; 128.2 dB reproduces the reference behaviors (a large
    /// statistical penalty at M = 6, a small one for hardened ZF at
    /// M = 100, and a ~10% Rayleigh gap at M = 50).
    fn default() -> Self {
        Self {
            d0_m: 10.0,
            d1_m: 50.0,
            exponent_mid: 2.0,
            exponent_far: 3.5,
            reference_loss_db: 23.2,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0_m > 0.0 && self.d1_m > self.d0_m) {
            return Err(Error::InvalidConfig(format!(
                "path-loss breakpoints must satisfy 0 < d0 < d1, got d0 = {}, d1 = {}",
                self.d0_m, self.d1_m
            )));
        }
        if !(self.exponent_mid.is_finite()
            && self.exponent_far.is_finite()
            && self.reference_loss_db.is_finite())
        {
            return Err(Error::InvalidConfig(
                "path-loss exponents and reference loss must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Path loss as a linear power gain for a BS-user distance in meters.
pub fn compute_pathloss(distance_m: f64, params: &PathLossParams) -> Result<f64> {
    params.validate()?;
    if !(distance_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    let far = 10.0 * params.exponent_far;
    let mid = 10.0 * params.exponent_mid;
    // Continuity at d1 fixes the mid-branch offset; continuity at d0 fixes
    // the plateau.
    let loss_db = if distance_m > params.d1_m {
        params.reference_loss_db + far * distance_m.log10()
    } else if distance_m > params.d0_m {
        params.reference_loss_db + (far - mid) * params.d1_m.log10() + mid * distance_m.log10()
    } else {
        params.reference_loss_db + (far - mid) * params.d1_m.log10() + mid * params.d0_m.log10()
    };
    Ok(10f64.powf(-loss_db / 10.0))
}

/// All physical-layer and protocol constants for one simulated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antenna count M.
    pub antennas: usize,
    /// User count K.
    pub users: usize,
    /// Cell radius D in meters.
    pub cell_radius_m: f64,
    /// System bandwidth B in Hz.
    pub bandwidth_hz: f64,
    /// Maximum BS transmit power in watts.
    pub bs_power_w: f64,
    /// Noise power in dBm.
    pub noise_power_dbm: f64,
    /// Per-symbol pilot power in watts (0 disables estimation).
    pub pilot_power_w: f64,
    /// Coherence interval length in samples.
    pub tau_c: usize,
    /// Uplink training length in samples.
    pub tau_u: usize,
    /// Downlink training length in samples.
    pub tau_d: usize,
    pub rng_seed: u64,
    pub pathloss: PathLossParams,
    /// Log-normal shadowing standard deviation in dB (0 disables; applied
    /// only beyond the outer breakpoint).
    pub shadowing_sigma_db: f64,
}

impl Default for SystemConfig {
    /// The reference single-cell setup: 20 MHz bandwidth, 1 W BS power,
    /// -92 dBm noise, K = 5 users in a 500 m cell, tau_u = tau_d = K,
    /// tau_c = 200 samples.
    fn default() -> Self {
        Self {
            antennas: 100,
            users: 5,
            cell_radius_m: 500.0,
            bandwidth_hz: 20e6,
            bs_power_w: 1.0,
            noise_power_dbm: -92.0,
            pilot_power_w: 0.1,
            tau_c: 200,
            tau_u: 5,
            tau_d: 5,
            rng_seed: 1,
            pathloss: PathLossParams::default(),
            shadowing_sigma_db: 0.0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users < 1 || self.antennas <= self.users {
            return Err(Error::InvalidConfig(format!(
                "need M > K >= 1, got M = {}, K = {}",
                self.antennas, self.users
            )));
        }
        if self.tau_u < self.users {
            return Err(Error::InvalidConfig(format!(
                "orthogonal pilots need tau_u >= K, got tau_u = {}, K = {}",
                self.tau_u, self.users
            )));
        }
        if self.tau_u + self.tau_d > self.tau_c {
            return Err(Error::InvalidConfig(format!(
                "tau_u + tau_d = {} exceeds tau_c = {}",
                self.tau_u + self.tau_d,
                self.tau_c
            )));
        }
        if !(self.bs_power_w > 0.0) {
            return Err(Error::InvalidConfig("bs_power must be positive".into()));
        }
        if !(self.pilot_power_w >= 0.0) {
            return Err(Error::InvalidConfig(
                "pilot_power must be non-negative".into(),
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidConfig("bandwidth must be positive".into()));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(Error::InvalidConfig("cell radius must be positive".into()));
        }
        if !self.noise_power_dbm.is_finite() {
            return Err(Error::InvalidConfig("noise power must be finite".into()));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::InvalidConfig(
                "shadowing sigma must be non-negative".into(),
            ));
        }
        self.pathloss.validate()
    }

    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_power_dbm - 30.0) / 10.0)
    }

    /// Normalized downlink transmit power: BS power over noise power.
    pub fn rho_d(&self) -> f64 {
        self.bs_power_w / self.noise_power_w()
    }

    /// Normalized pilot power: pilot symbol power over noise power.
    pub fn rho_u(&self) -> f64 {
        self.pilot_power_w / self.noise_power_w()
    }
}

/// One realization of user positions and large-scale gains, held fixed
/// across many small-scale realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleDrop {
    /// User coordinates in meters; the BS sits at the origin.
    pub positions: Vec<[f64; 2]>,
    /// BS-user distances in meters.
    pub distances: Vec<f64>,
    /// Large-scale power gains beta_k (linear).
    pub betas: Vec<f64>,
}

impl LargeScaleDrop {
    pub fn users(&self) -> usize {
        self.betas.len()
    }

    /// Synthetic drop with unit gain for all users, for statistics that are
    /// independent of the large-scale scale (e.g. hardening estimates).
    pub fn unit_gain(users: usize) -> Self {
        Self {
            positions: vec![[0.0, 0.0]; users],
            distances: vec![0.0; users],
            betas: vec![1.0; users],
        }
    }
}

/// Place K users uniformly at random on the disk of radius D and compute
/// their large-scale gains (path loss times optional log-normal shadowing).
pub fn drop_users(cfg: &SystemConfig, rng: &mut RngStream) -> Result<LargeScaleDrop> {
    cfg.validate()?;
    let k = cfg.users;
    let mut positions = Vec::with_capacity(k);
    let mut distances = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k);
    for _ in 0..k {
        // Area-uniform: r = D sqrt(u) with u in (0, 1] so r > 0.
        let r = cfg.cell_radius_m * rng.uniform_open_low().sqrt();
        let theta = std::f64::consts::TAU * rng.uniform();
        positions.push([r * theta.cos(), r * theta.sin()]);
        distances.push(r);
        let mut beta = compute_pathloss(r, &cfg.pathloss)?;
        if cfg.shadowing_sigma_db > 0.0 && r > cfg.pathloss.d1_m {
            let shadow_db = cfg.shadowing_sigma_db * rng.standard_normal();
            beta *= 10f64.powf(shadow_db / 10.0);
        }
        betas.push(beta);
    }
    Ok(LargeScaleDrop {
        positions,
        distances,
        betas,
    })
}

/// Deterministic keyhole gains: user k propagates through `gains[k].len()`
/// keyholes with complex gains `c_j`; each user's gains are normalized so
/// that `sum_j |c_j|^2 = 1` and beta_k keeps its large-scale meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyholeSpec {
    gains: Vec<Vec<Complex64>>,
}

impl KeyholeSpec {
    pub fn new(gains: Vec<Vec<Complex64>>) -> Result<Self> {
        let spec = Self { gains };
        spec.validate()?;
        Ok(spec)
    }

    /// Equal normalized gains `c_j = 1/sqrt(o)` for every user.
    pub fn uniform(users: usize, keyholes: usize) -> Result<Self> {
        if keyholes == 0 {
            return Err(Error::InvalidArgument(
                "keyhole count must be at least 1".into(),
            ));
        }
        let c = Complex64::new(1.0 / (keyholes as f64).sqrt(), 0.0);
        Ok(Self {
            gains: vec![vec![c; keyholes]; users],
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (k, user_gains) in self.gains.iter().enumerate() {
            if user_gains.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "user {k} has zero keyholes"
                )));
            }
            let total: f64 = user_gains.iter().map(Complex64::norm_sqr).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "user {k} keyhole gains are not normalized: sum |c|^2 = {total}"
                )));
            }
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self, user: usize) -> &[Complex64] {
        &self.gains[user]
    }

    /// `sum_j |c_j|^4` for one user; the non-vanishing part of the hardening
    /// coefficient.
    pub fn quartic_gain_sum(&self, user: usize) -> f64 {
        self.gains[user]
            .iter()
            .map(|c| c.norm_sqr() * c.norm_sqr())
            .sum()
    }
}

/// Which small-scale model generated a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    Rayleigh,
    Keyhole,
}

/// One small-scale realization: the M x K matrix with columns g_k.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub matrix: CMat,
    pub kind: FadingKind,
}

/// Small-scale channel model selected for a campaign.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Rayleigh,
    Keyhole(KeyholeSpec),
}

impl ChannelModel {
    /// Short label used in result tables.
    pub fn label(&self) -> String {
        match self {
            ChannelModel::Rayleigh => "rayleigh".into(),
            ChannelModel::Keyhole(spec) => format!("keyhole{}", spec.gains(0).len()),
        }
    }
}

/// Anything that can draw small-scale realizations for a given drop. The
/// two physical models implement this; tests may plug in deterministic
/// stubs.
pub trait ChannelSampler: Sync {
    fn sample(
        &self,
        drop: &LargeScaleDrop,
        antennas: usize,
        rng: &mut RngStream,
    ) -> Result<ChannelRealization>;
}

impl ChannelSampler for ChannelModel {
    fn sample(
        &self,
        drop: &LargeScaleDrop,
        antennas: usize,
        rng: &mut RngStream,
    ) -> Result<ChannelRealization> {
        match self {
            ChannelModel::Rayleigh => Ok(sample_rayleigh(drop, antennas, rng)),
            ChannelModel::Keyhole(spec) => sample_keyhole(drop, spec, antennas, rng),
        }
    }
}

/// i.i.d. Rayleigh realization: `g_k = sqrt(beta_k) h_k`, `h_k` i.i.d.
/// CN(0,1).
pub fn sample_rayleigh(
    drop: &LargeScaleDrop,
    antennas: usize,
    rng: &mut RngStream,
) -> ChannelRealization {
    let k = drop.users();
    let mut g = CMat::zeros(antennas, k);
    for user in 0..k {
        let amp = drop.betas[user].sqrt();
        for entry in g.col_mut(user) {
            *entry = rng.complex_gaussian() * amp;
        }
    }
    ChannelRealization {
        matrix: g,
        kind: FadingKind::Rayleigh,
    }
}

/// Keyhole realization: `g_k = sqrt(beta_k) sum_j c_j p_j q_j` with fresh
/// scalar gains `p_j ~ CN(0,1)` and vectors `q_j` of i.i.d. CN(0,1) entries.
/// Each user draws an independent set of keyhole variables.
pub fn sample_keyhole(
    drop: &LargeScaleDrop,
    spec: &KeyholeSpec,
    antennas: usize,
    rng: &mut RngStream,
) -> Result<ChannelRealization> {
    if spec.users() != drop.users() {
        return Err(Error::InvalidArgument(format!(
            "keyhole spec covers {} users but the drop has {}",
            spec.users(),
            drop.users()
        )));
    }
    spec.validate()?;
    let k = drop.users();
    let mut g = CMat::zeros(antennas, k);
    for user in 0..k {
        let amp = drop.betas[user].sqrt();
        let col = g.col_mut(user);
        for c in spec.gains(user) {
            let p = rng.complex_gaussian();
            let weight = c * p * amp;
            for entry in col.iter_mut() {
                *entry += weight * rng.complex_gaussian();
            }
        }
    }
    Ok(ChannelRealization {
        matrix: g,
        kind: FadingKind::Keyhole,
    })
}

/// Monte Carlo estimate of the hardening coefficient
/// `HC = Var{||g||^2} / (E{||g||^2})^2` for a single-user unit-gain drop.
/// Values near 1/M indicate hardening; values that stay bounded away from
/// zero as M grows indicate a non-hardening environment.
pub fn hardening_coefficient(
    sampler: &dyn ChannelSampler,
    antennas: usize,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "hardening estimate needs at least 2 samples, got {n_samples}"
        )));
    }
    let drop = LargeScaleDrop::unit_gain(1);
    // Welford accumulation: exact zero variance for constant inputs.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let real = sampler.sample(&drop, antennas, rng)?;
        let x = norm_sq(real.matrix.col(0));
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    if !(mean > 0.0) {
        return Err(Error::DegenerateChannel(
            "squared channel norm has zero mean; hardening coefficient undefined".into(),
        ));
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(var / (mean * mean))
}

/// MMSE channel estimates from orthogonal uplink pilots.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub matrix: CMat,
}

/// Linear MMSE estimate of each user's channel:
/// `ghat_k = [tau_u rho_u beta_k / (tau_u rho_u beta_k + 1)] g_k
///         + [sqrt(tau_u rho_u) beta_k / (tau_u rho_u beta_k + 1)] n_k`
/// with fresh estimation noise `n_k ~ CN(0, I)`.
pub fn mmse_estimate(
    realization: &ChannelRealization,
    drop: &LargeScaleDrop,
    cfg: &SystemConfig,
    rng: &mut RngStream,
) -> Result<ChannelEstimate> {
    cfg.validate()?;
    mmse_estimate_raw(realization, drop, cfg.tau_u as f64, cfg.rho_u(), rng)
}

/// `mmse_estimate` with the pilot length and normalized pilot power given
/// directly; zero pilot power yields the all-zero estimate.
pub fn mmse_estimate_raw(
    realization: &ChannelRealization,
    drop: &LargeScaleDrop,
    tau_u: f64,
    rho_u: f64,
    rng: &mut RngStream,
) -> Result<ChannelEstimate> {
    let k = drop.users();
    let m = realization.matrix.rows();
    if realization.matrix.cols() != k {
        return Err(Error::InvalidArgument(format!(
            "realization has {} columns but the drop has {k} users",
            realization.matrix.cols()
        )));
    }
    if !(rho_u >= 0.0) || !(tau_u > 0.0) {
        return Err(Error::InvalidArgument(
            "pilot power must be non-negative and pilot length positive".into(),
        ));
    }
    let mut ghat = CMat::zeros(m, k);
    for user in 0..k {
        let beta = drop.betas[user];
        let denom = tau_u * rho_u * beta + 1.0;
        let signal_coeff = tau_u * rho_u * beta / denom;
        let noise_coeff = (tau_u * rho_u).sqrt() * beta / denom;
        let src = realization.matrix.col(user);
        let dst = ghat.col_mut(user);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = s * signal_coeff + rng.complex_gaussian() * noise_coeff;
        }
    }
    Ok(ChannelEstimate { matrix: ghat })
}
