//! Numeric checker for the beta conditions behind the truncated-weight
//! stability induction, and the minimal inverse temperature satisfying all
//! of them.
//!
//! The conditions, for `tau = beta rho0 / 2 - 8` and
//! `eta = 2 exp(-tau l0 / 3)`:
//!
//! 1. `tau > tau0`, the convergence threshold of the derivative series;
//! 2. `D eta <= 1`;
//! 3. `2 beta^{-1} sqrt(k) exp(-tau sqrt(k)/2) <= rho0 / 16` for every
//!    integer `k >= 1` (maximised by calculus plus integer neighbours);
//! 4. `exp(-max(rho0/(16 delta^2 x), l0) tau / 2) / (beta delta^2) <= x/2`
//!    for every `x > 0`, reduced to closed-form checks at the crossover
//!    `x* = rho0 / (16 delta^2 l0)` and at the interior minimum, plus a
//!    log-spaced verification sweep.
//!
//! The constant `D` follows the induction's recipe
//! `D = (2 + 2K) delta^2 beta + 4 beta + 4 delta^2 |kappa'| + C1 beta
//! delta^2 + C2`, with `C1 = e + sup |psi_0^# / s|` and `C2 = sup 1/s` over
//! `U_beta`. `K` has no closed formula in the source analysis; it defaults
//! to `1 - r1`, the visible bound, and can be overridden.

use serde::{Deserialize, Serialize};

use super::convergence::{tau_zero, DEFAULT_ANIMAL_CAP};
use super::pressure::{kappa_derivative_sup, truncated_pressure_order0};
use crate::contours::PeierlsConstants;

/// Inputs of the condition checker; everything beyond the geometry can be
/// overridden.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PszInputs {
    pub delta: f64,
    pub rho0: f64,
    pub l0: u64,
    pub r1: f64,
    /// The constant `K`; defaults to `1 - r1`.
    pub k_constant: Option<f64>,
    /// `sup |kappa'|`; defaults to `12 / rho0`.
    pub kappa_derivative: Option<f64>,
    pub d_override: Option<f64>,
    pub c1_override: Option<f64>,
    pub c2_override: Option<f64>,
}

impl PszInputs {
    pub fn from_constants(c: &PeierlsConstants) -> PszInputs {
        PszInputs {
            delta: c.delta,
            rho0: c.rho0,
            l0: c.min_contour_size,
            r1: c.r1,
            k_constant: None,
            kappa_derivative: None,
            d_override: None,
            c1_override: None,
            c2_override: None,
        }
    }
}

/// Per-condition verdicts at one inverse temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PszReport {
    pub beta: f64,
    pub tau: f64,
    pub tau0: f64,
    pub eta: f64,
    pub d_constant: f64,
    pub c1: f64,
    pub c2: f64,
    pub cond_tau_above_threshold: bool,
    pub cond_d_eta: bool,
    pub cond_point_count: bool,
    pub cond_crossover: bool,
    pub all_satisfied: bool,
}

fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn u_beta_interval(beta: f64, delta: f64, rho0: f64, l0: u64, r1: f64) -> (f64, f64) {
    let c = rho0 * l0 as f64 / 12.0;
    let a = (2.0 / (1.0 - r1)).min((-c * beta).exp());
    let bd2 = beta * delta * delta;
    (log1p_exp(bd2 - a) / bd2, log1p_exp(bd2 + a) / bd2)
}

/// Checks all four conditions at the given beta.
pub fn psz_conditions_check(beta: f64, inputs: &PszInputs) -> PszReport {
    let d2 = inputs.delta * inputs.delta;
    let rho0 = inputs.rho0;
    let l0 = inputs.l0;
    let tau = 0.5 * beta * rho0 - 8.0;
    let eta = 2.0 * (-tau * l0 as f64 / 3.0).exp();
    let tau0 = tau_zero(l0, DEFAULT_ANIMAL_CAP);

    // C1 and C2 over U_beta.
    let (s_lo, s_hi) = u_beta_interval(beta, inputs.delta, rho0, l0, inputs.r1);
    let c1 = inputs.c1_override.unwrap_or_else(|| {
        let mut sup = 0.0f64;
        let n = 64;
        for k in 0..=n {
            let s = s_lo + (s_hi - s_lo) * k as f64 / n as f64;
            let p = truncated_pressure_order0(s, beta, inputs.delta);
            sup = sup.max((p.psi0 / s).abs()).max((p.psi1 / s).abs());
        }
        std::f64::consts::E + sup
    });
    let c2 = inputs.c2_override.unwrap_or(1.0 / s_lo);
    let k_const = inputs.k_constant.unwrap_or(1.0 - inputs.r1);
    let kd = inputs.kappa_derivative.unwrap_or_else(|| kappa_derivative_sup(rho0));
    let d_constant = inputs
        .d_override
        .unwrap_or((2.0 + 2.0 * k_const) * d2 * beta + 4.0 * beta + 4.0 * d2 * kd + c1 * beta * d2 + c2);

    let cond_tau_above_threshold = tau > tau0;
    let cond_d_eta = d_constant * eta <= 1.0;

    // Condition 3: maximise 2 sqrt(k) exp(-tau sqrt(k)/2) / beta over
    // integers k >= 1. In u = sqrt(k) the maximum sits at u = 2 / tau.
    let cond_point_count = {
        let bound = rho0 / 16.0;
        let eval = |k: f64| 2.0 / beta * k.sqrt() * (-tau * k.sqrt() / 2.0).exp();
        if tau <= 0.0 {
            false // the expression diverges in k
        } else {
            let k_star = (2.0 / tau) * (2.0 / tau);
            let mut worst = eval(1.0);
            for k in [k_star.floor().max(1.0), k_star.ceil().max(1.0)] {
                worst = worst.max(eval(k));
            }
            worst <= bound
        }
    };

    // Condition 4 via the crossover x* and the interior minimum of
    // phi(x) = ln x + tau rho0 / (32 delta^2 x) on (0, x*].
    let cond_crossover = if tau <= 0.0 {
        false
    } else {
        let x_star = rho0 / (16.0 * d2 * l0 as f64);
        let flat_ok = (-tau * l0 as f64 / 2.0).exp() / (beta * d2) <= x_star / 2.0;
        let rhs = (2.0 / (beta * d2)).ln();
        let phi = |x: f64| x.ln() + tau * rho0 / (32.0 * d2 * x);
        let x_min = (tau * rho0 / (32.0 * d2)).min(x_star);
        let analytic_ok = phi(x_min) >= rhs;
        // Verification sweep with guaranteed bracketing of the minimum.
        let mut sweep_ok = true;
        for k in 0..=200 {
            let x = x_star * 10f64.powf(-6.0 + 6.0 * k as f64 / 200.0);
            let lhs = (-(rho0 / (16.0 * d2 * x)).max(l0 as f64) * tau / 2.0).exp() / (beta * d2);
            if lhs > x / 2.0 {
                sweep_ok = false;
                break;
            }
        }
        flat_ok && analytic_ok && sweep_ok
    };

    let all_satisfied =
        cond_tau_above_threshold && cond_d_eta && cond_point_count && cond_crossover;
    PszReport {
        beta,
        tau,
        tau0,
        eta,
        d_constant,
        c1,
        c2,
        cond_tau_above_threshold,
        cond_d_eta,
        cond_point_count,
        cond_crossover,
        all_satisfied,
    }
}

/// Smallest beta satisfying all conditions, by doubling then bisection,
/// with a final re-check of the returned value.
pub fn minimal_rigorous_beta(inputs: &PszInputs) -> f64 {
    let mut hi = 1.0;
    let mut guard = 0;
    while !psz_conditions_check(hi, inputs).all_satisfied && guard < 80 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if psz_conditions_check(mid, inputs).all_satisfied {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    debug_assert!(psz_conditions_check(hi, inputs).all_satisfied);
    hi
}
