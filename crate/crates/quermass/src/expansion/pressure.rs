//! Truncated pressures and the gap between the two boundary types.
//!
//! At order zero the pressures are explicit: in the variable `s = z / beta`
//! the empty-boundary pressure is exactly `-s` and the occupied-boundary
//! pressure is `-1 + ln(1 - exp(-s beta delta^2)) / (beta delta^2)`. Their
//! gap vanishes exactly at `s_beta = ln(1 + e^{beta delta^2}) / (beta
//! delta^2)`; the corrections `f^(0)`, `f^(1)` coming from the cluster
//! series shift the root inside `U_beta`.

use serde::{Deserialize, Serialize};

use super::{cluster_pressure, ExpansionError, IncompatibilityRule, Polymer};
use crate::contours::PeierlsConstants;

/// Truncated pressures of the two boundary types at one order.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncatedPressure {
    pub order: u32,
    /// Pressure with empty-type boundary.
    pub psi0: f64,
    /// Pressure with occupied-type boundary.
    pub psi1: f64,
}

impl TruncatedPressure {
    pub fn psi_max(&self) -> f64 {
        self.psi0.max(self.psi1)
    }

    /// `a^# = psi_max - psi^#`, both nonnegative.
    pub fn deficits(&self) -> (f64, f64) {
        let m = self.psi_max();
        (m - self.psi0, m - self.psi1)
    }
}

/// `ln(1 - e^{-x})` for `x > 0`.
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    (-(-x).exp_m1()).ln()
}

/// Order-zero truncated pressures at `s = z / beta`: exactly `-s` for the
/// empty type.
pub fn truncated_pressure_order0(s: f64, beta: f64, delta: f64) -> TruncatedPressure {
    let bd2 = beta * delta * delta;
    TruncatedPressure {
        order: 0,
        psi0: -s,
        psi1: -1.0 + ln_one_minus_exp_neg(s * bd2) / bd2,
    }
}

/// The gap `G(s) = (s - 1) + ln(1 - e^{-s beta delta^2})/(beta delta^2)
/// + f1 - f0` between the truncated pressures.
pub fn gap_value(s: f64, beta: f64, delta: f64, f1: f64, f0: f64) -> f64 {
    let bd2 = beta * delta * delta;
    (s - 1.0) + ln_one_minus_exp_neg(s * bd2) / bd2 + f1 - f0
}

/// Root of the gap on `U_beta` by bisection; the gap is strictly
/// increasing there, so a sign change pins the unique critical `s`.
pub fn gap_root(
    constants: &PeierlsConstants,
    beta: f64,
    f1: f64,
    f0: f64,
) -> Result<f64, ExpansionError> {
    let (mut lo, mut hi) = constants.u_beta;
    let delta = constants.delta;
    let g_lo = gap_value(lo, beta, delta, f1, f0);
    let g_hi = gap_value(hi, beta, delta, f1, f0);
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(ExpansionError::RootNotBracketed(lo, hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap_value(mid, beta, delta, f1, f0) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The C1 cut-off: 1 below `rho0 / 8`, 0 above `rho0 / 4`, a descending
/// cubic smoothstep in between.
pub fn cutoff_kappa(s: f64, rho0: f64) -> f64 {
    let lo = rho0 / 8.0;
    let hi = rho0 / 4.0;
    if s <= lo {
        1.0
    } else if s >= hi {
        0.0
    } else {
        let u = (s - lo) / (hi - lo);
        1.0 - (3.0 * u * u - 2.0 * u * u * u)
    }
}

/// `sup |kappa'| = 1.5 / (rho0 / 8) = 12 / rho0`.
pub fn kappa_derivative_sup(rho0: f64) -> f64 {
    12.0 / rho0
}

/// One enumerated contour entering the estimate-grade truncated-pressure
/// recursion: its support as a polymer (type tag = exterior spin), the
/// Monte Carlo estimate of its integral, and the size of the
/// opposite-label interior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourWeightInput {
    pub polymer: Polymer,
    pub i_gamma: f64,
    pub interior_opposite: usize,
    pub class: usize,
}

/// Estimate-grade truncated pressures beyond order zero.
///
/// The recursion follows the cut-off construction: a contour of class
/// `k <= n` enters the order-`n` series with weight
/// `g_#^{-|support|} I kappa((psi_{n-1}^{#*} - psi_{n-1}^#) delta^2
/// |Int_{#*}|^{1/2}) R`, where the interior partition-function ratio `R` is
/// approximated by the bulk pressures,
/// `R ~ exp(beta delta^2 (psi_{n-1}^{#*} - psi_{n-1}^#) |Int_{#*}|)`.
/// Everything built on Monte Carlo contour integrals is an estimate, not a
/// bound; the cluster sums themselves are evaluated by the exact engine.
#[allow(clippy::too_many_arguments)]
pub fn truncated_pressure_series(
    inputs: &[ContourWeightInput],
    order_max: u32,
    s: f64,
    beta: f64,
    delta: f64,
    rho0: f64,
    l0: u64,
    size_cutoff: usize,
) -> Result<Vec<TruncatedPressure>, ExpansionError> {
    let bd2 = beta * delta * delta;
    let d2 = delta * delta;
    let z = s * beta;
    let g = [(-z * d2).exp(), (-beta * d2).exp() * -(-z * d2).exp_m1()];
    let psi0 = truncated_pressure_order0(s, beta, delta);
    let mut orders = vec![psi0];
    let tau = 0.5 * beta * rho0 - 8.0;
    for order in 1..=order_max {
        let prev = *orders.last().unwrap();
        let psi_prev = [prev.psi0, prev.psi1];
        let mut f = [0.0f64; 2];
        for tag in 0..2usize {
            let opposite = 1 - tag;
            let weighted: Vec<(Polymer, f64)> = inputs
                .iter()
                .filter(|c| c.polymer.type_tag as usize == tag && c.class < order as usize + 1)
                .map(|c| {
                    let diff = psi_prev[opposite] - psi_prev[tag];
                    let kappa = cutoff_kappa(
                        diff * d2 * (c.interior_opposite as f64).sqrt(),
                        rho0,
                    );
                    let ratio = (bd2 * diff * c.interior_opposite as f64).exp();
                    let w = g[tag].powi(-(c.polymer.size() as i32)) * c.i_gamma * kappa * ratio;
                    (c.polymer.clone(), w.max(0.0))
                })
                .collect();
            let res = cluster_pressure(
                &weighted,
                IncompatibilityRule::Contour,
                tau,
                l0,
                size_cutoff,
                None,
            )?;
            f[tag] = res.pressure / bd2;
        }
        orders.push(TruncatedPressure {
            order,
            psi0: psi0.psi0 + f[0],
            psi1: psi0.psi1 + f[1],
        });
    }
    Ok(orders)
}
