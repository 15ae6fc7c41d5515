//! The constants of the contour energy estimates.
//!
//! For a tile side `delta <= R0 / (2 sqrt 2)` and the correctness radius
//! `L = ceil(2 R1 / delta)`, the domino construction gives the density
//! `r0 = 1 / #(Z^2 ball of radius 5L)` of (occupied, empty) tile pairs in
//! any contour, the spin-ratio constant is `r1 = 1 / #(ball of radius 2L)`,
//! and the contour energy satisfies
//! `H_support >= #occupied * delta^2 + rho0 * #support` whenever
//! `theta1 > -theta1*` and `theta2` stays below the admissible threshold.

use serde::{Deserialize, Serialize};

use super::ContourError;
use crate::lattice::euclidean_ball_count;
use crate::model::QuermassParams;

/// `ln(1 + e^x)` without overflow.
pub(crate) fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// All constants of the Peierls estimate and of the re-parametrised model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeierlsConstants {
    pub delta: f64,
    /// Correctness radius `L = ceil(2 R1 / delta)`.
    pub correctness_radius: i32,
    /// Domino density `1 / #(ball 5L)`.
    pub r0: f64,
    /// Spin-ratio constant `1 / #(ball 2L)`.
    pub r1: f64,
    /// `R0 / 2`, the admissibility threshold for negative theta1.
    pub theta1_star: f64,
    /// Admissible theta2 threshold in the small-delta limit. For
    /// `theta1 < 0` the exact supremum needs `theta1^delta` for every tile
    /// side; the value reported here is the certified threshold at the
    /// given `delta`, a lower estimate of the supremum.
    pub theta2_star: f64,
    /// Admissible theta2 threshold at this `delta`.
    pub theta2_delta: f64,
    /// User-supplied lower bound for `theta1^delta` (used when theta1 < 0).
    pub theta1_delta_lower: f64,
    /// Surface threshold `t`, the midpoint of its admissible interval;
    /// only meaningful for `theta1 < 0`.
    pub surface_threshold: Option<f64>,
    /// The Peierls density `rho0 > 0`.
    pub rho0: f64,
    /// `tau = beta * rho0 / 2 - 8`.
    pub tau: f64,
    /// Empty-tile weight `exp(-z delta^2)`.
    pub g0: f64,
    /// Occupied-tile weight `exp(-beta delta^2) (1 - exp(-z delta^2))`.
    pub g1: f64,
    /// Half-width `a = min(2 / (1 - r1), exp(-c beta))`, `c = rho0 l0 / 12`.
    pub activity_halfwidth: f64,
    /// `s_beta = ln(1 + e^{beta delta^2}) / (beta delta^2)`, where the two
    /// tile weights coincide.
    pub s_beta: f64,
    /// The interval `U_beta` of admissible `s = z / beta` values.
    pub u_beta: (f64, f64),
    /// Smallest support of a non-empty contour, `#(ball L)`.
    pub min_contour_size: u64,
    /// `eta = 2 exp(-tau l0 / 3)`.
    pub eta: f64,
}

impl PeierlsConstants {
    /// The tile weights at activity `z = s * beta`.
    pub fn tile_weights_at(&self, s: f64, beta: f64) -> (f64, f64) {
        let d2 = self.delta * self.delta;
        let z = s * beta;
        let g0 = (-z * d2).exp();
        let g1 = (-beta * d2).exp() * -(-z * d2).exp_m1();
        (g0, g1)
    }
}

/// Computes every constant of the contour machinery for the given
/// parameters and tile side. `theta1_delta_lower` must be supplied (or the
/// default `0.9 * theta1_star` is taken, a heuristic with no certificate:
/// the exact `theta1^delta` is an infimum over all configurations and is
/// deliberately left as a user input) whenever `theta1 < 0`.
pub fn peierls_constants(
    p: &QuermassParams,
    delta: f64,
    theta1_delta_lower: Option<f64>,
) -> Result<PeierlsConstants, ContourError> {
    p.validate().map_err(|e| ContourError::ParameterDomain(e.to_string()))?;
    if !(p.beta > 0.0) {
        return Err(ContourError::ParameterDomain(
            "beta must be positive for the contour constants".into(),
        ));
    }
    let delta_max = p.radius_min / (2.0 * std::f64::consts::SQRT_2);
    if !(delta > 0.0) || delta > delta_max * (1.0 + 1e-12) {
        return Err(ContourError::ParameterDomain(format!(
            "tile side must lie in (0, R0 / (2 sqrt 2)] = (0, {delta_max}], got {delta}"
        )));
    }
    let theta1_star = p.radius_min / 2.0;
    if !(p.theta1 > -theta1_star) {
        return Err(ContourError::ParameterDomain(format!(
            "theta1 must exceed -theta1* = {}, got {}",
            -theta1_star,
            p.theta1
        )));
    }

    let l = (2.0 * p.radius_max / delta).ceil() as i32;
    let r0 = 1.0 / euclidean_ball_count(5 * l) as f64;
    let r1 = 1.0 / euclidean_ball_count(2 * l) as f64;
    let ball_r0 = std::f64::consts::PI * p.radius_min * p.radius_min;
    let d2 = delta * delta;

    // r0 at the largest admissible tile side, entering the theta2 limit.
    let l_star = (2.0 * p.radius_max / delta_max).ceil() as i32;
    let r0_star = 1.0 / euclidean_ball_count(5 * l_star) as f64;

    let (theta2_star, theta2_delta, theta1_delta, surface_threshold);
    if p.theta1 >= 0.0 {
        theta1_delta = theta1_star;
        theta2_star = r0_star * ball_r0;
        theta2_delta = theta2_star;
        surface_threshold = None;
    } else {
        let t1d = theta1_delta_lower.unwrap_or(0.9 * theta1_star);
        if !(t1d > 0.0) || !(p.theta1 > -t1d) {
            return Err(ContourError::ParameterDomain(format!(
                "need a positive theta1^delta lower bound above -theta1 = {}, got {t1d}",
                -p.theta1
            )));
        }
        theta1_delta = t1d;
        theta2_delta = r0 * ball_r0 * (1.0 + p.theta1 / theta1_delta);
        theta2_star = theta2_delta;
        surface_threshold = Some(f64::NAN); // replaced below
    }
    if !(p.theta2 < theta2_delta) {
        return Err(ContourError::ParameterDomain(format!(
            "theta2 must stay below theta2^delta = {theta2_delta}, got {}",
            p.theta2
        )));
    }

    let rho0;
    let surface_threshold = if p.theta1 >= 0.0 {
        rho0 = r0 * d2 - p.theta2 * d2 / ball_r0;
        surface_threshold
    } else {
        // Open interval for the surface threshold; nonempty exactly when
        // theta2 < theta2^delta.
        let lo = p.theta2 / (theta1_delta + p.theta1) * d2 / ball_r0;
        let hi = (p.theta2 * d2 / ball_r0 - r0 * d2) / p.theta1;
        if !(lo < hi) {
            return Err(ContourError::ParameterDomain(format!(
                "empty surface-threshold interval ({lo}, {hi})"
            )));
        }
        let t = 0.5 * (lo + hi);
        rho0 = ((theta1_delta + p.theta1) * t - p.theta2 * d2 / ball_r0)
            .min(r0 * d2 + p.theta1 * t - p.theta2 * d2 / ball_r0);
        Some(t)
    };
    if !(rho0 > 0.0) {
        return Err(ContourError::ParameterDomain(format!(
            "non-positive Peierls density rho0 = {rho0}"
        )));
    }

    let tau = 0.5 * p.beta * rho0 - 8.0;
    let g0 = (-p.z * d2).exp();
    let g1 = (-p.beta * d2).exp() * -(-p.z * d2).exp_m1();
    let min_contour_size = euclidean_ball_count(l);
    let c = rho0 * min_contour_size as f64 / 12.0;
    let a = (2.0 / (1.0 - r1)).min((-c * p.beta).exp());
    let bd2 = p.beta * d2;
    let s_beta = log1p_exp(bd2) / bd2;
    let u_beta = (log1p_exp(bd2 - a) / bd2, log1p_exp(bd2 + a) / bd2);
    let eta = 2.0 * (-tau * min_contour_size as f64 / 3.0).exp();

    Ok(PeierlsConstants {
        delta,
        correctness_radius: l,
        r0,
        r1,
        theta1_star,
        theta2_star,
        theta2_delta,
        theta1_delta_lower: theta1_delta,
        surface_threshold,
        rho0,
        tau,
        g0,
        g1,
        activity_halfwidth: a,
        s_beta,
        u_beta,
        min_contour_size,
        eta,
    })
}
