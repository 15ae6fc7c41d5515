//! The contour energy bound and the Monte Carlo contour integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Contour, ContourError, PeierlsConstants, Tiling};
use crate::geometry::tile_rect;
use crate::model::{tile_energies, Configuration, MarkedPoint, QuermassParams};

/// Contour energy `H_support = sum of tile energies over the support`.
pub fn contour_energy(
    cfg: &Configuration,
    contour: &Contour,
    p: &QuermassParams,
    delta: f64,
) -> Result<f64, ContourError> {
    Ok(tile_energies(cfg, &contour.support, delta, p)?
        .values()
        .sum())
}

/// Checks the contour energy lower bound
/// `H_support >= #occupied * delta^2 + rho0 * #support`
/// for a configuration achieving the contour.
pub fn verify_peierls_bound(
    cfg: &Configuration,
    contour: &Contour,
    p: &QuermassParams,
    constants: &PeierlsConstants,
) -> Result<bool, ContourError> {
    let d2 = constants.delta * constants.delta;
    let h = contour_energy(cfg, contour, p, constants.delta)?;
    let bound =
        contour.spin_count(1) as f64 * d2 + constants.rho0 * contour.support_size() as f64;
    Ok(h >= bound - 1e-9)
}

/// Monte Carlo estimate of the contour integral.
#[derive(Debug, Clone, Copy)]
pub struct IGammaEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Exact probability of the spin pattern under the Poisson reference.
    pub pattern_probability: f64,
    pub samples: usize,
}

const SUPPORT_CAP: usize = 64;

/// Unbiased estimate of
/// `I = int exp(-beta * H_support) 1{spins match} d Poisson(z)`
/// over the support tiles: the spin-pattern probability is exact and the
/// energy factor is averaged over conditioned Poisson draws (each occupied
/// tile receives a zero-truncated Poisson number of uniform points).
pub fn estimate_i_gamma(
    contour: &Contour,
    p: &QuermassParams,
    tiling: &Tiling,
    samples: usize,
    seed: u64,
) -> Result<IGammaEstimate, ContourError> {
    if contour.support_size() > SUPPORT_CAP {
        return Err(ContourError::SupportTooLarge {
            found: contour.support_size(),
            cap: SUPPORT_CAP,
        });
    }
    if samples == 0 {
        return Err(ContourError::ParameterDomain("need at least one sample".into()));
    }
    let delta = tiling.delta;
    let lambda = p.z * delta * delta;
    let occupied: Vec<_> = contour
        .support
        .iter()
        .zip(&contour.spins)
        .filter(|(_, &s)| s == 1)
        .map(|(&t, _)| t)
        .collect();
    let n0 = (contour.support_size() - occupied.len()) as f64;
    let p_occ = -(-lambda).exp_m1();
    let pattern_probability = (-lambda * n0).exp() * p_occ.powi(occupied.len() as i32);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut points = Vec::new();
        for &t in &occupied {
            let (x0, y0, x1, y1) = tile_rect(t, delta);
            let k = truncated_poisson(lambda, &mut rng);
            for _ in 0..k {
                points.push(MarkedPoint::new(
                    rng.random_range(x0..x1),
                    rng.random_range(y0..y1),
                    p.sample_radius(&mut rng),
                ));
            }
        }
        let cfg = Configuration::new(points);
        let h = contour_energy(&cfg, contour, p, delta)?;
        let w = (-p.beta * h).exp();
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0) / samples.max(2) as f64;
    Ok(IGammaEstimate {
        estimate: pattern_probability * mean,
        std_error: pattern_probability * var.sqrt(),
        pattern_probability,
        samples,
    })
}

/// Poisson(level) conditioned on being at least one, by inverse transform.
fn truncated_poisson<R: Rng>(lambda: f64, rng: &mut R) -> u32 {
    let p0 = (-lambda).exp();
    let target = rng.random::<f64>() * (1.0 - p0);
    let mut k = 1u32;
    let mut pk = p0 * lambda;
    let mut cum = pk;
    while cum < target && k < 1000 {
        k += 1;
        pk *= lambda / k as f64;
        cum += pk;
    }
    k
}
