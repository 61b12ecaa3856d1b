//! Penalty-based joint transmit/receive beamformer design.
//!
//! Block coordinate descent over (rho_u, rho_d, omega_u, w, u_d, p), every
//! block in closed form. The two norm constraints are enforced through KKT
//! multipliers found by bisection; the SI-suppression constraint enters as a
//! quadratic penalty with weight 1/(2 beta).
//!
//! The w and p systems contain the rank-1 penalty term scaled by 1/beta,
//! which at beta = 1e-25 dwarfs every other entry by ~20 orders of
//! magnitude. Forming those matrices explicitly in f64 would erase the
//! non-penalty part below the rounding of the sum, so both solves are
//! evaluated through the Sherman-Morrison identity: factor the moderate
//! part, then apply the rank-1 correction exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, dot, norm, norm_sqr, scale_vec, solve_linear, solve_linear_multi, CMat, C64, NumericsError};
use crate::scenario::{steering, ChannelSet, SystemConfig};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("uplink direction degenerate: H_u^H w vanished")]
    DegenerateUplink,
    #[error("transmit update degenerate: zero right-hand side")]
    DegenerateTransmit,
    #[error("bisection bracket not found for {what} after widening {grow} times")]
    BracketFailure { what: &'static str, grow: u32 },
    #[error("MSE is non-positive ({0}); state violates an internal invariant")]
    NonPositiveMse(f64),
}

/// The six optimization variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerState {
    pub p: Vec<C64>,
    pub w: Vec<C64>,
    pub omega_u: Vec<C64>,
    pub u_d: Vec<C64>,
    pub rho_u: f64,
    pub rho_d: f64,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub bisection_tol: f64,
    pub alpha: [f64; 4],
}

impl SolverOptions {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        SolverOptions {
            max_iters: 200,
            epsilon: cfg.epsilon,
            beta: cfg.beta,
            bisection_tol: 1e-10,
            alpha: cfg.alpha,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub zeta_trace: Vec<f64>,
    pub converged: bool,
    pub residual_si_linear: f64,
}

/// Concave surrogate for the beampattern power at `theta`:
/// Z = s s^H - ||s||^2 I, negative semidefinite with Z s = 0.
pub fn build_z(theta_deg: f64, n: usize) -> CMat {
    let s = steering(theta_deg, n);
    let mut z = CMat::outer(&s, &s);
    z.add_diag(-(n as f64));
    z
}

fn quad_form(m: &CMat, x: &[C64]) -> f64 {
    dot(x, &m.matvec(x).expect("quadratic form dimensions")).re
}

/// Transceiver-side MSE of the uplink symbol estimate.
pub fn mse_bs(state: &BeamformerState, ch: &ChannelSet, sigma2_u: f64) -> f64 {
    let huo = ch.h_u.matvec(&state.omega_u).expect("H_u omega_u");
    let hp = ch.h.matvec(&state.p).expect("H p");
    let s = dot(&state.w, &huo);
    s.norm_sqr() - 2.0 * s.re + dot(&state.w, &hp).norm_sqr() + sigma2_u * norm_sqr(&state.w) + 1.0
}

/// Downlink-user MSE of the downlink symbol estimate.
pub fn mse_dl(state: &BeamformerState, ch: &ChannelSet, sigma2_d: f64) -> f64 {
    let hdp = ch.h_d.matvec(&state.p).expect("H_d p");
    let s = dot(&state.u_d, &hdp);
    s.norm_sqr() - 2.0 * s.re + sigma2_d * norm_sqr(&state.u_d) + 1.0
}

/// Auxiliary-variable block: rho = 1/MSE for both links.
pub fn update_rho(state: &BeamformerState, ch: &ChannelSet, sigma2_u: f64, sigma2_d: f64) -> Result<(f64, f64), SolverError> {
    let e_bs = mse_bs(state, ch, sigma2_u);
    let e_d = mse_dl(state, ch, sigma2_d);
    if e_bs <= 0.0 {
        return Err(SolverError::NonPositiveMse(e_bs));
    }
    if e_d <= 0.0 {
        return Err(SolverError::NonPositiveMse(e_d));
    }
    Ok((1.0 / e_bs, 1.0 / e_d))
}

/// Uplink precoder block: scaled matched direction H_u^H w with the KKT
/// multiplier mu* >= 0 activating the power constraint.
///
/// Returns (omega_u, mu*).
pub fn update_omega_u(
    state: &BeamformerState,
    ch: &ChannelSet,
    alpha1: f64,
    p_u: f64,
    tol: f64,
) -> Result<(Vec<C64>, f64), SolverError> {
    let h = ch.h_u.matvec_herm(&state.w).expect("H_u^H w");
    let nh2 = norm_sqr(&h);
    if nh2 == 0.0 || alpha1 == 0.0 {
        return Err(SolverError::DegenerateUplink);
    }
    let omega_at = |mu: f64| scale_vec(&h, alpha1 / (alpha1 * nh2 + mu));
    let power = |mu: f64| (alpha1 / (alpha1 * nh2 + mu)).powi(2) * nh2;
    if power(0.0) <= p_u {
        // unconstrained minimizer already feasible
        return Ok((omega_at(0.0), 0.0));
    }
    let mut hi = 1.0;
    let mut grow = 0u32;
    while power(hi) - p_u > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(SolverError::BracketFailure { what: "mu", grow });
        }
    }
    let mu = numerics::bisect(|m| power(m) - p_u, 0.0, hi, tol)?;
    // land exactly on the constraint: the closed form fixes the direction,
    // the multiplier only sets the length
    let mut omega = omega_at(mu);
    let s = (p_u / norm_sqr(&omega)).sqrt();
    omega = scale_vec(&omega, s);
    Ok((omega, mu))
}

/// Solves (B + c u u^H) x = g via Sherman-Morrison with one factorization
/// of B for both right-hand sides.
fn solve_rank1(b: &CMat, c: f64, u: &[C64], g: &[C64]) -> Result<Vec<C64>, NumericsError> {
    let mut sols = solve_linear_multi(b, &[g.to_vec(), u.to_vec()])?;
    let z = sols.pop().unwrap();
    let y = sols.pop().unwrap();
    let uy = dot(u, &y);
    let uz = dot(u, &z);
    let denom = C64::new(1.0, 0.0) + c * uz;
    let coeff = c * uy / denom;
    Ok(y.iter().zip(z.iter()).map(|(yi, zi)| yi - coeff * zi).collect())
}

/// Receive beamformer block: unconstrained quadratic minimum of the
/// uplink-MSE + receive-beampattern + SI-penalty objective.
pub fn update_w(
    state: &BeamformerState,
    ch: &ChannelSet,
    alpha1: f64,
    alpha4: f64,
    beta: f64,
    sigma2_u: f64,
    z_r: &CMat,
) -> Result<Vec<C64>, SolverError> {
    let huo = ch.h_u.matvec(&state.omega_u).expect("H_u omega_u");
    let hp = ch.h.matvec(&state.p).expect("H p");
    let a1r = alpha1 * state.rho_u;

    let mut b = CMat::outer(&huo, &huo).add(&CMat::outer(&hp, &hp)).expect("same size").scale(2.0 * a1r);
    b = b.add(&z_r.scale(-2.0 * alpha4)).expect("same size");
    b.add_diag(2.0 * a1r * sigma2_u);

    let u = ch.h_si.matvec(&state.p).expect("H_si p");
    let g = scale_vec(&huo, 2.0 * a1r);
    Ok(solve_rank1(&b, 1.0 / beta, &u, &g)?)
}

/// Downlink combiner block: the MMSE solution, always well posed for
/// sigma2_d > 0.
pub fn update_u_d(state: &BeamformerState, ch: &ChannelSet, sigma2_d: f64) -> Result<Vec<C64>, SolverError> {
    let hdp = ch.h_d.matvec(&state.p).expect("H_d p");
    let mut a = CMat::outer(&hdp, &hdp);
    a.add_diag(sigma2_d);
    Ok(solve_linear(&a, &hdp)?)
}

/// Transmit precoder block. The KKT multiplier Gamma is found by bisection
/// on the monotone map Gamma -> ||p(Gamma)||^2, with the bracket grown
/// geometrically. Returns (p, Gamma*).
pub fn update_p(
    state: &BeamformerState,
    ch: &ChannelSet,
    alpha: [f64; 4],
    beta: f64,
    p_d: f64,
    z_t: &CMat,
    tol: f64,
) -> Result<(Vec<C64>, f64), SolverError> {
    let hw = ch.h.matvec_herm(&state.w).expect("H^H w");
    let hd_ud = ch.h_d.matvec_herm(&state.u_d).expect("H_d^H u_d");
    let a1r = alpha[0] * state.rho_u;
    let a2r = alpha[1] * state.rho_d;

    let mut b0 = CMat::outer(&hw, &hw).scale(2.0 * a1r);
    b0 = b0.add(&CMat::outer(&hd_ud, &hd_ud).scale(2.0 * a2r)).expect("same size");
    b0 = b0.add(&z_t.scale(-2.0 * alpha[2])).expect("same size");

    let v = ch.h_si.matvec_herm(&state.w).expect("H_si^H w");
    let g = scale_vec(&hd_ud, 2.0 * a2r);
    if norm_sqr(&g) == 0.0 {
        return Err(SolverError::DegenerateTransmit);
    }
    let c = 1.0 / beta;

    // excess power at a given multiplier; +inf when the shifted system is
    // singular (the norm diverges approaching the singular point)
    let phi = |gamma: f64| -> f64 {
        let mut b = b0.clone();
        b.add_diag(2.0 * gamma);
        match solve_rank1(&b, c, &v, &g) {
            Ok(p) => norm_sqr(&p) - p_d,
            Err(_) => f64::INFINITY,
        }
    };

    let mut hi = 1.0;
    let mut grow = 0u32;
    while phi(hi) > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(SolverError::BracketFailure { what: "gamma", grow });
        }
    }
    let mut lo = 0.0;
    if phi(lo) <= 0.0 {
        // The unconstrained solution at Gamma = 0 is strictly inside the
        // power ball, so the equality root is negative: ||p(Gamma)||^2
        // blows up as 2*Gamma approaches -lambda_min of the full system
        // matrix from above and is monotone decreasing past it. Locate
        // that boundary, then back off just enough that the power excess
        // turns positive.
        let nv2 = norm_sqr(&v);
        let scale = b0.max_abs().max(1e-300);
        let lambda_min = if c * nv2 <= 1e8 * scale {
            // penalty term is moderate: form the full matrix directly
            let full = b0.add(&CMat::outer(&v, &v).scale(c)).expect("same size");
            numerics::min_eigenvalue_hermitian(&full)?
        } else {
            // penalty term is overwhelming: in the limit the smallest
            // eigenvalue lives in the orthogonal complement of v, i.e.
            // it is lambda_min of B0 compressed onto v-perp. Realize the
            // compression as P B0 P + tau vv^H/||v||^2 with tau above
            // every eigenvalue of B0 so the v direction stays out of the
            // minimum.
            let n = b0.rows();
            let vhat = scale_vec(&v, 1.0 / nv2.sqrt());
            let proj = {
                let mut p = CMat::outer(&vhat, &vhat).scale(-1.0);
                p.add_diag(1.0);
                p
            };
            let compressed = proj.matmul(&b0).expect("same size").matmul(&proj).expect("same size");
            let tau = 2.0 * (n as f64) * scale + 1.0;
            let m = compressed.add(&CMat::outer(&vhat, &vhat).scale(tau)).expect("same size");
            numerics::min_eigenvalue_hermitian(&m)?
        };
        let pole = -lambda_min.max(0.0) / 2.0;
        let mut margin = 1e-9 * lambda_min.abs().max(1.0);
        let mut tries = 0u32;
        loop {
            lo = pole + margin;
            let f = phi(lo);
            if f.is_finite() && f > 0.0 {
                break;
            }
            if f.is_infinite() {
                // landed on a singular shift of the unpenalized part;
                // step away from it
                margin *= 4.0;
            } else {
                margin /= 16.0;
            }
            tries += 1;
            if tries > 120 {
                return Err(SolverError::BracketFailure { what: "gamma_lo", grow: tries });
            }
        }
    }
    let gamma = numerics::bisect(phi, lo, hi, tol)?;
    let mut b = b0;
    b.add_diag(2.0 * gamma);
    let p = solve_rank1(&b, c, &v, &g)?;
    Ok((p, gamma))
}

/// Value of the penalized WMMSE surrogate objective at the current state.
pub fn evaluate_objective(
    state: &BeamformerState,
    ch: &ChannelSet,
    alpha: [f64; 4],
    beta: f64,
    z_t: &CMat,
    z_r: &CMat,
    sigma2_u: f64,
    sigma2_d: f64,
) -> f64 {
    let e_bs = mse_bs(state, ch, sigma2_u);
    let e_d = mse_dl(state, ch, sigma2_d);
    let si = dot(&state.w, &ch.h_si.matvec(&state.p).expect("H_si p")).norm_sqr();
    // natural log: the closed-form rho = 1/MSE is the exact stationary
    // point of ln(rho) - rho*E, which keeps every block update an exact
    // conditional maximizer of this surrogate
    alpha[0] * (state.rho_u.ln() - state.rho_u * e_bs)
        + alpha[1] * (state.rho_d.ln() - state.rho_d * e_d)
        + alpha[2] * quad_form(z_t, &state.p)
        + alpha[3] * quad_form(z_r, &state.w)
        - si / (2.0 * beta)
}

fn random_cvec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

/// Feasible random initialization: p and omega_u on their power spheres,
/// w unit norm, u_d unscaled, rho set by one auxiliary update.
pub fn initial_state(ch: &ChannelSet, cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> Result<BeamformerState, SolverError> {
    let mut p = random_cvec(cfg.n_t, rng);
    let s = (cfg.p_d_lin() / norm_sqr(&p)).sqrt();
    p = scale_vec(&p, s);
    let mut w = random_cvec(cfg.n_r, rng);
    let s = 1.0 / norm(&w);
    w = scale_vec(&w, s);
    let mut omega_u = random_cvec(cfg.n_u, rng);
    let s = (cfg.p_u_lin() / norm_sqr(&omega_u)).sqrt();
    omega_u = scale_vec(&omega_u, s);
    let u_d = random_cvec(cfg.n_d, rng);
    let mut state = BeamformerState { p, w, omega_u, u_d, rho_u: 1.0, rho_d: 1.0 };
    let (rho_u, rho_d) = update_rho(&state, ch, cfg.noise_lin(), cfg.noise_lin())?;
    state.rho_u = rho_u;
    state.rho_d = rho_d;
    Ok(state)
}

/// Full block-coordinate descent until the relative objective difference
/// drops below epsilon or max_iters is hit. The receive beamformer is
/// normalized once, after the loop.
pub fn solve(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    theta_r_deg: f64,
    options: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(BeamformerState, SolverReport), SolverError> {
    let sigma2_u = cfg.noise_lin();
    let sigma2_d = cfg.noise_lin();
    let z_t = build_z(theta_r_deg, cfg.n_t);
    let z_r = build_z(theta_r_deg, cfg.n_r);
    let alpha = options.alpha;

    let mut state = initial_state(ch, cfg, rng)?;
    let mut objective_trace: Vec<f64> = Vec::new();
    let mut zeta_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..options.max_iters {
        iterations += 1;
        let (rho_u, rho_d) = update_rho(&state, ch, sigma2_u, sigma2_d)?;
        state.rho_u = rho_u;
        state.rho_d = rho_d;

        match update_omega_u(&state, ch, alpha[0], cfg.p_u_lin(), options.bisection_tol) {
            Ok((omega, _mu)) => state.omega_u = omega,
            // unreachable uplink this sweep; keep the previous precoder
            Err(SolverError::DegenerateUplink) => {}
            Err(e) => return Err(e),
        }

        state.w = match update_w(&state, ch, alpha[0], alpha[3], options.beta, sigma2_u, &z_r) {
            Ok(w) => w,
            Err(SolverError::Numerics(NumericsError::NearSingular { .. })) => {
                update_w(&state, ch, alpha[0], alpha[3], options.beta * 10.0, sigma2_u, &z_r)?
            }
            Err(e) => return Err(e),
        };

        state.u_d = update_u_d(&state, ch, sigma2_d)?;

        let (p, _gamma) = update_p(&state, ch, alpha, options.beta, cfg.p_d_lin(), &z_t, options.bisection_tol)?;
        state.p = p;

        let f = evaluate_objective(&state, ch, alpha, options.beta, &z_t, &z_r, sigma2_u, sigma2_d);
        if let Some(&prev) = objective_trace.last() {
            let diff = f - prev;
            let zeta = if prev != 0.0 { diff / prev.abs() } else { f64::INFINITY };
            zeta_trace.push(zeta);
            objective_trace.push(f);
            if zeta <= options.epsilon && diff.abs() <= options.epsilon * f.abs().max(1.0) {
                converged = true;
                break;
            }
        } else {
            objective_trace.push(f);
        }
    }

    let s = 1.0 / norm(&state.w);
    state.w = scale_vec(&state.w, s);
    let residual_si_linear = dot(&state.w, &ch.h_si.matvec(&state.p).expect("H_si p")).norm_sqr();

    Ok((
        state,
        SolverReport { iterations, objective_trace, zeta_trace, converged, residual_si_linear },
    ))
}
