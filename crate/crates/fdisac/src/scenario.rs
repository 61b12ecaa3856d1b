//! Scenario construction: geometry, path loss, and channel realizations.
//!
//! All randomness flows through a seeded ChaCha stream so that a
//! (config, seed) pair fully determines every channel draw. Angles are
//! degrees at the API surface and radians internally. Linear powers are in
//! milliwatts throughout, matching the dBm-referenced definitions of the
//! residual-SI and noise levels.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{CMat, C64};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Kappa at or above this is treated as a pure line-of-sight channel.
pub const KAPPA_LOS_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Every scenario constant in one place. Defaults reproduce the reference
/// simulation setup (16x16 transceiver, 2.4 GHz, 20 MHz, -94 dBm noise).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub n_u: usize,
    pub n_d: usize,
    /// carrier frequency, Hz
    pub f_c: f64,
    /// bandwidth, Hz; the sample period is 1/bandwidth
    pub bandwidth: f64,
    /// transceiver transmit power, dBm
    pub p_d_dbm: f64,
    /// uplink user transmit power, dBm
    pub p_u_dbm: f64,
    /// receiver thermal noise floor, dBm
    pub noise_dbm: f64,
    pub pathloss_exponent: f64,
    /// pathloss reference distance, m
    pub d0: f64,
    /// Rician factor for the uplink/downlink channels
    pub rician_kappa: f64,
    /// Rician factor for the self-interference channel
    pub rician_kappa_si: f64,
    /// SI power above the noise floor, dB
    pub si_level_db: f64,
    /// line-of-sight angle of the SI coupling, degrees
    pub si_angle_deg: f64,
    /// radar cross-section, m^2
    pub rcs: f64,
    /// objective weights alpha_1..alpha_4
    pub alpha: [f64; 4],
    /// penalty parameter beta
    pub beta: f64,
    /// convergence tolerance epsilon
    pub epsilon: f64,
    /// half-duplex uplink/downlink resource split
    pub delta: f64,
    /// fraction of NSP transmit power on the target beam
    pub nsp_tx_split: f64,
    /// whether NSP also nulls the downlink steering direction
    pub nsp_null_downlink: bool,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_t: 16,
            n_r: 16,
            n_u: 2,
            n_d: 2,
            f_c: 2.4e9,
            bandwidth: 20.0e6,
            p_d_dbm: 20.0,
            p_u_dbm: 10.0,
            noise_dbm: -94.0,
            pathloss_exponent: 2.2,
            d0: 1.0,
            rician_kappa: 1.0,
            rician_kappa_si: 10.0,
            si_level_db: 60.0,
            si_angle_deg: 0.0,
            rcs: 1.0,
            alpha: [1.0, 1.0, 1.0, 1.0],
            beta: 1e-25,
            epsilon: 1e-5,
            delta: 0.5,
            nsp_tx_split: 0.5,
            nsp_null_downlink: false,
            rng_seed: 1,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_t == 0 || self.n_r == 0 || self.n_u == 0 || self.n_d == 0 {
            return Err(ScenarioError::InvalidConfig("antenna counts must be positive".into()));
        }
        if !(self.n_u < self.n_t && self.n_t <= self.n_r) {
            return Err(ScenarioError::InvalidConfig(format!(
                "need N_u < N_t <= N_r, got N_u={} N_t={} N_r={}",
                self.n_u, self.n_t, self.n_r
            )));
        }
        if !(self.n_d < self.n_t) {
            return Err(ScenarioError::InvalidConfig(format!(
                "need N_d < N_t, got N_d={} N_t={}",
                self.n_d, self.n_t
            )));
        }
        for (name, v) in [
            ("f_c", self.f_c),
            ("bandwidth", self.bandwidth),
            ("d0", self.d0),
            ("rcs", self.rcs),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ScenarioError::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        if !(self.rician_kappa >= 0.0 && self.rician_kappa_si >= 0.0) {
            return Err(ScenarioError::InvalidConfig("rician kappa must be >= 0".into()));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(ScenarioError::InvalidConfig("weights alpha must be >= 0 and finite".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(ScenarioError::InvalidConfig("delta must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.nsp_tx_split) {
            return Err(ScenarioError::InvalidConfig("nsp_tx_split must lie in [0, 1]".into()));
        }
        if ![self.p_d_dbm, self.p_u_dbm, self.noise_dbm].iter().all(|p| p.is_finite()) {
            return Err(ScenarioError::InvalidConfig("powers must be finite".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth
    }

    /// Transceiver transmit power, linear mW.
    pub fn p_d_lin(&self) -> f64 {
        dbm_to_mw(self.p_d_dbm)
    }

    /// Uplink transmit power, linear mW.
    pub fn p_u_lin(&self) -> f64 {
        dbm_to_mw(self.p_u_dbm)
    }

    /// Noise floor, linear mW. Used as sigma^2 at both receivers.
    pub fn noise_lin(&self) -> f64 {
        dbm_to_mw(self.noise_dbm)
    }

    /// Large-scale SI gain calibrated so that the mean per-entry received SI
    /// power at full transmit power sits `si_level_db` above the noise floor.
    pub fn eta_si(&self) -> f64 {
        dbm_to_mw(self.noise_dbm + self.si_level_db) / self.p_d_lin()
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Direction, range and radial velocity of a target or user.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Bearing {
    pub theta_deg: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
}

impl Bearing {
    pub fn new(theta_deg: f64, range_m: f64, velocity_mps: f64) -> Self {
        Bearing { theta_deg, range_m, velocity_mps }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(-90.0 < self.theta_deg && self.theta_deg < 90.0) {
            return Err(ScenarioError::InvalidConfig(format!("bearing angle {} out of (-90, 90)", self.theta_deg)));
        }
        if !(self.range_m > 0.0) {
            return Err(ScenarioError::InvalidConfig("bearing range must be positive".into()));
        }
        Ok(())
    }
}

/// The four realized channels plus the aggregate H = H_r + H_si.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub h_u: CMat,
    pub h_d: CMat,
    pub h_r: CMat,
    pub h_si: CMat,
    pub h: CMat,
}

/// Target truth used to generate the radar channel and to score estimates.
#[derive(Clone, Copy, Debug)]
pub struct RadarGroundTruth {
    pub theta_deg: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
    /// attenuation from the radar range equation, linear
    pub eta: f64,
    pub doppler_hz: f64,
    pub rcs: f64,
}

impl RadarGroundTruth {
    pub fn from_bearing(target: Bearing, cfg: &SystemConfig) -> Self {
        let lambda = cfg.wavelength();
        let eta = (lambda * lambda * cfg.rcs / ((4.0 * std::f64::consts::PI).powi(3) * target.range_m.powi(4))).sqrt();
        let doppler_hz = 2.0 * target.velocity_mps * cfg.f_c / SPEED_OF_LIGHT;
        RadarGroundTruth {
            theta_deg: target.theta_deg,
            range_m: target.range_m,
            velocity_mps: target.velocity_mps,
            eta,
            doppler_hz,
            rcs: cfg.rcs,
        }
    }
}

/// Half-wavelength ULA steering vector: entry k is exp(j 2 pi 0.5 k sin(theta)).
pub fn steering(theta_deg: f64, n: usize) -> Vec<C64> {
    let s = theta_deg.to_radians().sin();
    (0..n)
        .map(|k| {
            let ph = std::f64::consts::PI * (k as f64) * s;
            C64::new(ph.cos(), ph.sin())
        })
        .collect()
}

/// Log-distance pathloss in dB with free-space intercept at d0.
pub fn pathloss_db(d: f64, cfg: &SystemConfig) -> f64 {
    let lambda = cfg.wavelength();
    -20.0 * (lambda / (4.0 * std::f64::consts::PI * cfg.d0)).log10()
        + 10.0 * cfg.pathloss_exponent * (d / cfg.d0).log10()
}

fn cn01(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rician small-scale fading scaled by a large-scale gain:
/// sqrt(eta) * ( sqrt(k/(k+1)) a(arrive) b^T(depart) + sqrt(1/(k+1)) Gtilde ).
pub fn rician_channel(
    theta_arrive_deg: f64,
    theta_depart_deg: f64,
    rows: usize,
    cols: usize,
    kappa: f64,
    eta_linear: f64,
    rng: &mut ChaCha8Rng,
) -> CMat {
    let a = steering(theta_arrive_deg, rows);
    let b = steering(theta_depart_deg, cols);
    let (los_w, nlos_w) = if kappa >= KAPPA_LOS_LIMIT {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    };
    let scale = eta_linear.sqrt();
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            // LoS uses b^T, not b^H
            let los = a[i] * b[j];
            let nlos = if nlos_w > 0.0 { cn01(rng) } else { C64::new(0.0, 0.0) };
            m[(i, j)] = scale * (los_w * los + nlos_w * nlos);
        }
    }
    m
}

/// Rank-1 radar channel eta * exp(j 2 pi f_d t) a(theta) b^T(theta).
pub fn radar_channel(gt: &RadarGroundTruth, t: f64, n_r: usize, n_t: usize) -> CMat {
    let a = steering(gt.theta_deg, n_r);
    let b = steering(gt.theta_deg, n_t);
    let ph = 2.0 * std::f64::consts::PI * gt.doppler_hz * t;
    let factor = gt.eta * C64::new(ph.cos(), ph.sin());
    let mut m = CMat::zeros(n_r, n_t);
    for i in 0..n_r {
        for j in 0..n_t {
            // b^T, not b^H
            m[(i, j)] = factor * a[i] * b[j];
        }
    }
    m
}

/// Self-interference channel sqrt(eta_si) G_si with Rician-structured G_si.
pub fn si_channel(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> CMat {
    rician_channel(
        cfg.si_angle_deg,
        cfg.si_angle_deg,
        cfg.n_r,
        cfg.n_t,
        cfg.rician_kappa_si,
        cfg.eta_si(),
        rng,
    )
}

/// Builds every channel for one trial. Deterministic in the rng state.
pub fn synthesize(
    cfg: &SystemConfig,
    target: Bearing,
    uplink: Bearing,
    downlink: Bearing,
    rng: &mut ChaCha8Rng,
) -> Result<(ChannelSet, RadarGroundTruth), ScenarioError> {
    cfg.validate()?;
    target.validate()?;
    uplink.validate()?;
    downlink.validate()?;

    let eta_u = 10f64.powf(-pathloss_db(uplink.range_m, cfg) / 10.0);
    let eta_d = 10f64.powf(-pathloss_db(downlink.range_m, cfg) / 10.0);

    let h_u = rician_channel(uplink.theta_deg, uplink.theta_deg, cfg.n_r, cfg.n_u, cfg.rician_kappa, eta_u, rng);
    let h_d = rician_channel(downlink.theta_deg, downlink.theta_deg, cfg.n_d, cfg.n_t, cfg.rician_kappa, eta_d, rng);
    let gt = RadarGroundTruth::from_bearing(target, cfg);
    let h_r = radar_channel(&gt, 0.0, cfg.n_r, cfg.n_t);
    let h_si = si_channel(cfg, rng);
    let h = h_r.add(&h_si).expect("radar and SI channels share dimensions");
    Ok((ChannelSet { h_u, h_d, h_r, h_si, h }, gt))
}

/// Reference scenario bearings: target (45 deg, 7.5 m, 20 m/s), uplink user
/// (-50 deg, 10 m), downlink user (-30 deg, 100 m).
pub fn reference_bearings() -> (Bearing, Bearing, Bearing) {
    (
        Bearing::new(45.0, 7.5, 20.0),
        Bearing::new(-50.0, 10.0, 0.0),
        Bearing::new(-30.0, 100.0, 0.0),
    )
}

/// Independent, collision-free random stream for one (cell, trial) lattice
/// point: the master seed keys the cipher, the stream id separates draws.
pub fn trial_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::numerics::norm_sqr;

    #[test]
    fn steering_broadside_is_all_ones() {
        let a = steering(0.0, 4);
        for z in &a {
            assert_relative_eq!(z.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_thirty_degrees_two_elements() {
        // 2 pi * 0.5 * sin(30deg) = pi/2, so the second entry is j
        let a = steering(30.0, 2);
        assert_relative_eq!(a[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_phase_increment_at_45() {
        let a = steering(45.0, 4);
        let inc = std::f64::consts::PI * 45.0f64.to_radians().sin();
        assert_relative_eq!(inc, 2.2214, epsilon = 1e-4);
        for k in 0..4 {
            let expect = C64::new((inc * k as f64).cos(), (inc * k as f64).sin());
            assert!((a[k] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_unit_modulus_and_energy() {
        for theta in [-80.0, -12.5, 0.0, 33.0, 89.0] {
            let a = steering(theta, 16);
            for z in &a {
                assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-12);
            }
            assert_relative_eq!(norm_sqr(&a), 16.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn pathloss_reference_values() {
        let cfg = SystemConfig::default();
        assert_relative_eq!(pathloss_db(1.0, &cfg), 40.046, epsilon = 1e-2);
        assert_relative_eq!(pathloss_db(10.0, &cfg), 40.046 + 22.0, epsilon = 1e-2);
        // doubling d adds 10 * n * log10(2)
        let step = pathloss_db(20.0, &cfg) - pathloss_db(10.0, &cfg);
        assert_relative_eq!(step, 10.0 * 2.2 * 2f64.log10(), epsilon = 1e-10);
    }

    #[test]
    fn rician_pure_los_and_pure_nlos() {
        let mut rng = trial_rng(3, 0);
        let m = rician_channel(10.0, -20.0, 4, 3, KAPPA_LOS_LIMIT, 1.0, &mut rng);
        let a = steering(10.0, 4);
        let b = steering(-20.0, 3);
        for i in 0..4 {
            for j in 0..3 {
                assert!((m[(i, j)] - a[i] * b[j]).norm() < 1e-12);
            }
        }

        // kappa = 0: mean entry tends to zero over many draws
        let mut rng = trial_rng(4, 0);
        let trials = 2000;
        let mut mean = C64::new(0.0, 0.0);
        for _ in 0..trials {
            let m = rician_channel(10.0, -20.0, 2, 2, 0.0, 1.0, &mut rng);
            mean += m[(0, 0)];
        }
        mean /= trials as f64;
        assert!(mean.norm() < 0.05, "sample mean {mean}");
    }

    #[test]
    fn rician_unit_second_moment() {
        // kappa = 1, eta = 1: E|entry|^2 = 1 within 2%
        let mut rng = trial_rng(5, 0);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let m = rician_channel(25.0, 5.0, 1, 1, 1.0, 1.0, &mut rng);
            acc += m[(0, 0)].norm_sqr();
        }
        let second_moment = acc / draws as f64;
        assert!((second_moment - 1.0).abs() < 0.02, "E|entry|^2 = {second_moment}");
    }

    #[test]
    fn radar_channel_reference_attenuation() {
        let cfg = SystemConfig::default();
        let gt = RadarGroundTruth::from_bearing(Bearing::new(45.0, 7.5, 20.0), &cfg);
        assert_relative_eq!(gt.eta, 4.99e-5, max_relative = 2e-3);
        assert_relative_eq!(gt.doppler_hz, 320.0, epsilon = 1e-9);
    }

    #[test]
    fn radar_channel_broadside_and_norm() {
        let gt = RadarGroundTruth {
            theta_deg: 0.0,
            range_m: 1.0,
            velocity_mps: 0.0,
            eta: 1.0,
            doppler_hz: 0.0,
            rcs: 1.0,
        };
        let h = radar_channel(&gt, 0.0, 3, 2);
        for i in 0..3 {
            for j in 0..2 {
                assert!((h[(i, j)] - C64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
        // rank-1 Frobenius identity at any t
        let gt2 = RadarGroundTruth { doppler_hz: 1234.0, eta: 0.5, ..gt };
        for t in [0.0, 1e-4, 3.3e-3] {
            let h = radar_channel(&gt2, t, 4, 5);
            assert_relative_eq!(h.frobenius_norm(), 0.5 * (20f64).sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn eta_r_monotone_in_range() {
        let cfg = SystemConfig::default();
        let mut last = f64::INFINITY;
        for r in [2.0, 5.0, 10.0, 50.0, 200.0] {
            let gt = RadarGroundTruth::from_bearing(Bearing::new(45.0, r, 0.0), &cfg);
            assert!(gt.eta < last);
            last = gt.eta;
        }
    }

    #[test]
    fn si_calibration_monte_carlo() {
        // empirical per-entry SI power at full TX power should land on the
        // configured level within 0.5 dB
        let cfg = SystemConfig { si_level_db: 40.0, ..SystemConfig::default() };
        let mut rng = trial_rng(6, 0);
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = si_channel(&cfg, &mut rng);
            acc += h[(0, 0)].norm_sqr();
        }
        let mean_gain = acc / draws as f64;
        let si_dbm = mw_to_dbm(cfg.p_d_lin() * mean_gain);
        assert!(
            (si_dbm - cfg.noise_dbm - cfg.si_level_db).abs() < 0.5,
            "calibrated level {si_dbm} dBm"
        );
    }

    #[test]
    fn si_pure_los_is_rank_one() {
        let cfg = SystemConfig { rician_kappa_si: KAPPA_LOS_LIMIT, ..SystemConfig::default() };
        let mut rng = trial_rng(7, 0);
        let h = si_channel(&cfg, &mut rng);
        // every 2x2 minor vanishes for a rank-1 matrix
        for i in 1..h.rows() {
            for j in 1..h.cols() {
                let det = h[(0, 0)] * h[(i, j)] - h[(0, j)] * h[(i, 0)];
                assert!(det.norm() < 1e-12 * h.max_abs().powi(2));
            }
        }
    }

    #[test]
    fn synthesize_deterministic_and_consistent() {
        let cfg = SystemConfig::default();
        let (t, u, d) = reference_bearings();
        let (c1, gt1) = synthesize(&cfg, t, u, d, &mut trial_rng(cfg.rng_seed, 0)).unwrap();
        let (c2, _) = synthesize(&cfg, t, u, d, &mut trial_rng(cfg.rng_seed, 0)).unwrap();
        assert_eq!(c1.h_u, c2.h_u);
        assert_eq!(c1.h_si, c2.h_si);
        // aggregate identity
        let diff = c1.h.add(&c1.h_r.scale(-1.0)).unwrap().add(&c1.h_si.scale(-1.0)).unwrap();
        assert!(diff.max_abs() < 1e-15);
        assert_relative_eq!(gt1.doppler_hz, 320.0, epsilon = 1e-9);
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let cfg = SystemConfig { n_u: 16, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig { n_t: 0, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig { beta: 0.0, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
