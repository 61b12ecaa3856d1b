//! Reference beamformer designs used for comparison: matched beams toward
//! a single direction (radar-only / communication-only), null-space
//! projection (NSP) receive combining, and half-duplex rate accounting.

use serde::Serialize;

use crate::numerics::{dot, norm, norm_sqr, scale_vec, C64};
use crate::scenario::{steering, ChannelSet, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaselineKind {
    Nsp,
    RadarOnly,
    CommOnly,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::Nsp => "nsp",
            BaselineKind::RadarOnly => "radar_only",
            BaselineKind::CommOnly => "comm_only",
        }
    }
}

fn matched_pair(theta_deg: f64, cfg: &SystemConfig) -> (Vec<C64>, Vec<C64>) {
    let b = steering(theta_deg, cfg.n_t);
    let p = scale_vec(&b, (cfg.p_d_lin() / norm_sqr(&b)).sqrt());
    let a = steering(theta_deg, cfg.n_r);
    let w = scale_vec(&a, 1.0 / norm(&a));
    (p, w)
}

/// Matched transmit/receive beams toward the radar target.
pub fn radar_only(theta_r_deg: f64, cfg: &SystemConfig) -> (Vec<C64>, Vec<C64>) {
    matched_pair(theta_r_deg, cfg)
}

/// Matched transmit/receive beams toward the uplink user direction.
pub fn comm_only(theta_u_deg: f64, cfg: &SystemConfig) -> (Vec<C64>, Vec<C64>) {
    matched_pair(theta_u_deg, cfg)
}

/// Orthogonal projection of `x` onto the complement of the span of
/// `columns`, built by Gram-Schmidt so rank-deficient inputs degrade
/// gracefully (dependent columns are dropped).
fn project_out(x: &[C64], columns: &[Vec<C64>]) -> Vec<C64> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for col in columns {
        let mut v = col.clone();
        for b in &basis {
            let c = dot(b, &v);
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= c * bi;
            }
        }
        let n = norm(&v);
        if n > 1e-12 * norm(col).max(1e-300) {
            basis.push(scale_vec(&v, 1.0 / n));
        }
    }
    let mut out = x.to_vec();
    // two Gram-Schmidt passes for orthogonality near machine precision
    for _ in 0..2 {
        for b in &basis {
            let c = dot(b, &out);
            for (oi, bi) in out.iter_mut().zip(b.iter()) {
                *oi -= c * bi;
            }
        }
    }
    out
}

/// NSP design: the transmit beam splits power between the target and the
/// downlink user; the receive beam is the target steering vector projected
/// onto the null space of the resulting self-interference direction.
///
/// `nsp_tx_split` is the fraction of beam weight on the target direction;
/// `nsp_null_downlink` additionally nulls the downlink steering direction
/// at the receiver.
pub fn nsp_beamformers(
    ch: &ChannelSet,
    theta_r_deg: f64,
    theta_d_deg: f64,
    cfg: &SystemConfig,
) -> (Vec<C64>, Vec<C64>) {
    let b_r = steering(theta_r_deg, cfg.n_t);
    let b_d = steering(theta_d_deg, cfg.n_t);
    let s = cfg.nsp_tx_split;
    let mut p: Vec<C64> = b_r
        .iter()
        .zip(b_d.iter())
        .map(|(r, d)| {
            s.sqrt() * r / (cfg.n_t as f64).sqrt() + (1.0 - s).sqrt() * d / (cfg.n_t as f64).sqrt()
        })
        .collect();
    let scale = (cfg.p_d_lin() / norm_sqr(&p)).sqrt();
    p = scale_vec(&p, scale);

    let mut nulled: Vec<Vec<C64>> = Vec::new();
    let si_dir = ch.h_si.matvec(&p).expect("H_si p");
    if norm(&si_dir) > 0.0 {
        nulled.push(si_dir);
    }
    if cfg.nsp_null_downlink {
        nulled.push(steering(theta_d_deg, cfg.n_r));
    }
    let a_r = steering(theta_r_deg, cfg.n_r);
    let mut w = project_out(&a_r, &nulled);
    let n = norm(&w);
    if n > 0.0 {
        w = scale_vec(&w, 1.0 / n);
    } else {
        // target direction entirely inside the nulled subspace; fall back
        // to the unprojected beam
        w = scale_vec(&a_r, 1.0 / norm(&a_r));
    }
    (p, w)
}

/// Rate of a half-duplex system that splits one time-frequency unit
/// between the two links.
pub fn half_duplex_rate(r_ul: f64, r_dl: f64, delta: f64) -> f64 {
    delta * r_dl + (1.0 - delta) * r_ul
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::CMat;
    use crate::scenario::{reference_bearings, synthesize, trial_rng};
    use approx::assert_relative_eq;

    #[test]
    fn radar_only_broadside_is_uniform() {
        let cfg = SystemConfig::default();
        let (p, w) = radar_only(0.0, &cfg);
        for x in &p {
            assert_relative_eq!(x.re, p[0].re, epsilon = 1e-12);
            assert!(x.im.abs() < 1e-12);
        }
        assert_relative_eq!(norm_sqr(&p), cfg.p_d_lin(), max_relative = 1e-10);
        assert_relative_eq!(norm(&w), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matched_beams_hit_array_gain() {
        let cfg = SystemConfig::default();
        let (p, w) = radar_only(45.0, &cfg);
        let b = steering(45.0, cfg.n_t);
        let a = steering(45.0, cfg.n_r);
        // transmit beampattern power at the pointing angle: N_t * P_d
        let g_t = dot(&b, &p).norm_sqr();
        assert_relative_eq!(g_t, cfg.n_t as f64 * cfg.p_d_lin(), max_relative = 1e-10);
        // receive gain after normalization: N_r
        let g_r = dot(&a, &w).norm_sqr();
        assert_relative_eq!(g_r, cfg.n_r as f64, max_relative = 1e-10);
    }

    #[test]
    fn comm_only_mirrors_radar_only() {
        let cfg = SystemConfig::default();
        let (p1, w1) = radar_only(-50.0, &cfg);
        let (p2, w2) = comm_only(-50.0, &cfg);
        assert_eq!(p1, p2);
        assert_eq!(w1, w2);
    }

    #[test]
    fn nsp_nulls_si_direction() {
        let cfg = SystemConfig::default();
        let (t, u, d) = reference_bearings();
        let (ch, gt) = synthesize(&cfg, t, u, d, &mut trial_rng(31, 0)).unwrap();
        let (p, w) = nsp_beamformers(&ch, gt.theta_deg, d.theta_deg, &cfg);
        assert_relative_eq!(norm_sqr(&p), cfg.p_d_lin(), max_relative = 1e-10);
        assert_relative_eq!(norm(&w), 1.0, epsilon = 1e-12);
        let si = ch.h_si.matvec(&p).unwrap();
        let leak = dot(&w, &si).norm();
        assert!(leak <= 1e-10 * norm(&si), "leak {leak}");
    }

    #[test]
    fn nsp_null_downlink_flag_nulls_both() {
        let mut cfg = SystemConfig::default();
        cfg.nsp_null_downlink = true;
        let (t, u, d) = reference_bearings();
        let (ch, gt) = synthesize(&cfg, t, u, d, &mut trial_rng(32, 0)).unwrap();
        let (p, w) = nsp_beamformers(&ch, gt.theta_deg, d.theta_deg, &cfg);
        let si = ch.h_si.matvec(&p).unwrap();
        assert!(dot(&w, &si).norm() <= 1e-10 * norm(&si));
        let a_d = steering(d.theta_deg, cfg.n_r);
        assert!(dot(&w, &a_d).norm() <= 1e-10 * norm(&a_d));
    }

    #[test]
    fn nsp_empty_null_set_is_matched_beam() {
        let cfg = SystemConfig::default();
        let (t, u, d) = reference_bearings();
        let (mut ch, gt) = synthesize(&cfg, t, u, d, &mut trial_rng(33, 0)).unwrap();
        ch.h_si = CMat::zeros(cfg.n_r, cfg.n_t);
        let (_, w) = nsp_beamformers(&ch, gt.theta_deg, d.theta_deg, &cfg);
        let a_r = steering(gt.theta_deg, cfg.n_r);
        let expect = scale_vec(&a_r, 1.0 / norm(&a_r));
        for (x, y) in w.iter().zip(expect.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_drops_dependent_columns() {
        let cfg = SystemConfig::default();
        let x = steering(10.0, cfg.n_r);
        let col = steering(-20.0, cfg.n_r);
        // duplicated column: the second copy must be dropped, not break
        let cols = vec![col.clone(), col.clone()];
        let once = project_out(&x, &cols);
        let twice = project_out(&once, &cols);
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(dot(&col, &once).norm() <= 1e-10 * norm(&col) * norm(&once).max(1.0));
    }

    #[test]
    fn half_duplex_rate_combinations() {
        assert_relative_eq!(half_duplex_rate(4.0, 4.0, 0.5), 4.0);
        assert_relative_eq!(half_duplex_rate(7.0, 3.0, 1.0), 3.0);
        assert_relative_eq!(half_duplex_rate(2.0, 6.0, 0.5), 4.0);
    }
}
