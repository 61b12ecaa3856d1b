//! Link and sensing figures of merit: per-link SINR and rate, transmit and
//! receive beampattern power, residual self-interference relative to the
//! noise floor, SoI/SI ratio, and unit-resource sum rates.

use serde::Serialize;

use crate::baselines::half_duplex_rate;
use crate::numerics::{dot, norm_sqr, C64};
use crate::scenario::ChannelSet;
use crate::solver::BeamformerState;

/// dB floor substituted for exact zeros so logs stay plottable.
pub const DB_FLOOR: f64 = -300.0;

/// One row of evaluation output for a single design on a single channel
/// realization.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsRecord {
    pub sinr_u: f64,
    pub sinr_d: f64,
    pub r_u: f64,
    pub r_d: f64,
    pub g_t: f64,
    pub g_r: f64,
    pub p_res_db: f64,
    pub soi_over_si_db: f64,
    pub sumrate_fd: f64,
    pub sumrate_hd: f64,
}

/// Uplink SINR at the transceiver: the downlink-induced interference
/// (radar return included in the aggregate channel) is treated as noise.
pub fn sinr_uplink(state: &BeamformerState, ch: &ChannelSet, sigma2_u: f64) -> f64 {
    let signal = dot(&state.w, &ch.h_u.matvec(&state.omega_u).expect("H_u omega_u")).norm_sqr();
    let interference = dot(&state.w, &ch.h.matvec(&state.p).expect("H p")).norm_sqr();
    signal / (interference + norm_sqr(&state.w) * sigma2_u)
}

/// Downlink SINR at the user.
pub fn sinr_downlink(state: &BeamformerState, ch: &ChannelSet, sigma2_d: f64) -> f64 {
    let signal = dot(&state.u_d, &ch.h_d.matvec(&state.p).expect("H_d p")).norm_sqr();
    signal / (norm_sqr(&state.u_d) * sigma2_d)
}

/// Default evaluation grid: -90..90 degrees in half-degree steps.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=360).map(|i| -90.0 + 0.5 * i as f64).collect()
}

/// Beampattern power |s(θ)ᴴ v|² over a grid, for any steering map
/// (transmit side uses b(θ), receive side a(θ)).
pub fn beampattern<F: Fn(f64) -> Vec<C64>>(vec: &[C64], steering_fn: F, theta_grid: &[f64]) -> Vec<f64> {
    theta_grid
        .iter()
        .map(|&theta| dot(&steering_fn(theta), vec).norm_sqr())
        .collect()
}

/// Residual SI power in dB relative to the noise floor:
/// 10·log10(|wᴴ H_si p|² / 1mW) − P_noise[dBm]. Exact zeros clamp to
/// `DB_FLOOR`.
pub fn residual_si_db(state: &BeamformerState, ch: &ChannelSet, noise_dbm: f64) -> f64 {
    let res = dot(&state.w, &ch.h_si.matvec(&state.p).expect("H_si p")).norm_sqr();
    if res <= 0.0 {
        return DB_FLOOR;
    }
    (10.0 * res.log10() - noise_dbm).max(DB_FLOOR)
}

/// Ratio of the signal of interest (radar echo + uplink data) to the
/// residual SI, in dB. Clamps to ±`DB_FLOOR` on exact zeros.
pub fn soi_over_si_db(state: &BeamformerState, ch: &ChannelSet) -> f64 {
    let echo = dot(&state.w, &ch.h_r.matvec(&state.p).expect("H_r p")).norm_sqr();
    let uplink = dot(&state.w, &ch.h_u.matvec(&state.omega_u).expect("H_u omega_u")).norm_sqr();
    let si = dot(&state.w, &ch.h_si.matvec(&state.p).expect("H_si p")).norm_sqr();
    let soi = echo + uplink;
    if si <= 0.0 {
        return -DB_FLOOR; // no SI at all: best possible ratio
    }
    if soi <= 0.0 {
        return DB_FLOOR;
    }
    (10.0 * (soi / si).log10()).clamp(DB_FLOOR, -DB_FLOOR)
}

/// Full-duplex and half-duplex sum rates on one time-frequency unit.
pub fn sum_rates(r_u: f64, r_d: f64, delta: f64) -> (f64, f64) {
    (r_u + r_d, half_duplex_rate(r_u, r_d, delta))
}

/// Evaluates every scalar metric for one design on one channel draw.
pub fn evaluate(
    state: &BeamformerState,
    ch: &ChannelSet,
    sigma2: f64,
    noise_dbm: f64,
    delta: f64,
    theta_r_deg: f64,
) -> MetricsRecord {
    let sinr_u = sinr_uplink(state, ch, sigma2);
    let sinr_d = sinr_downlink(state, ch, sigma2);
    let r_u = (1.0 + sinr_u).log2();
    let r_d = (1.0 + sinr_d).log2();
    let g_t = dot(&crate::scenario::steering(theta_r_deg, state.p.len()), &state.p).norm_sqr();
    let g_r = dot(&crate::scenario::steering(theta_r_deg, state.w.len()), &state.w).norm_sqr();
    let (sumrate_fd, sumrate_hd) = sum_rates(r_u, r_d, delta);
    MetricsRecord {
        sinr_u,
        sinr_d,
        r_u,
        r_d,
        g_t,
        g_r,
        p_res_db: residual_si_db(state, ch, noise_dbm),
        soi_over_si_db: soi_over_si_db(state, ch),
        sumrate_fd,
        sumrate_hd,
    }
}
