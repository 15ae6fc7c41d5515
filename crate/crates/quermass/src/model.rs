//! The Quermass Hamiltonian and its local and per-tile forms.
//!
//! The energy of a finite marked configuration is
//! `V(halo) + theta1 * S(halo) - theta2 * chi(halo)` where the halo is the
//! union of closed disks centred at the points with their marked radii.
//! Because all three functionals are additive over the tile facets, the
//! energy splits as a sum of tile energies, and the local energy of a
//! bounded window only depends on the points within distance `2 * R1` of it.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, tile_of_point, Disk, DiskUnion, GeometryError, MinkowskiValues, Point,
};
use crate::lattice::Site;

/// A disk-marked point: position plus radius in `[radius_min, radius_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub position: Point,
    pub radius: f64,
}

impl MarkedPoint {
    pub fn new(x: f64, y: f64, radius: f64) -> MarkedPoint {
        MarkedPoint {
            position: Point::new(x, y),
            radius,
        }
    }

    pub fn disk(&self) -> Disk {
        Disk {
            center: self.position,
            radius: self.radius,
        }
    }
}

/// A finite set of marked points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<MarkedPoint>,
}

impl Configuration {
    pub fn new(points: Vec<MarkedPoint>) -> Configuration {
        Configuration { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn halo(&self) -> DiskUnion {
        DiskUnion::new(self.points.iter().map(MarkedPoint::disk).collect())
    }

    /// Points whose position lies in the half-open window.
    pub fn restrict(&self, w: &Window) -> Configuration {
        Configuration::new(
            self.points
                .iter()
                .copied()
                .filter(|p| w.contains(p.position))
                .collect(),
        )
    }
}

/// Distribution of the radius mark on `[radius_min, radius_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadiusLaw {
    /// Point mass at `radius_min` (the equal-disks case).
    #[default]
    Fixed,
    /// Uniform on `[radius_min, radius_max]`.
    Uniform,
}

/// Model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuermassParams {
    /// Weight of the boundary-length term.
    pub theta1: f64,
    /// Weight of the Euler term, non-negative.
    pub theta2: f64,
    /// Inverse temperature, non-negative.
    pub beta: f64,
    /// Activity of the reference Poisson process, positive.
    pub z: f64,
    /// Smallest admissible radius, positive.
    pub radius_min: f64,
    /// Largest admissible radius, at least `radius_min`.
    pub radius_max: f64,
    pub radius_law: RadiusLaw,
}

impl QuermassParams {
    /// Equal unit disks, volume interaction only.
    pub fn volume_only(beta: f64, z: f64) -> QuermassParams {
        QuermassParams {
            theta1: 0.0,
            theta2: 0.0,
            beta,
            z,
            radius_min: 1.0,
            radius_max: 1.0,
            radius_law: RadiusLaw::Fixed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.theta2 >= 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "theta2 must be >= 0, got {}",
                self.theta2
            )));
        }
        if !(self.z > 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "z must be > 0, got {}",
                self.z
            )));
        }
        if !(self.beta >= 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.radius_min > 0.0 && self.radius_max >= self.radius_min) {
            return Err(ModelError::InvalidParams(format!(
                "need 0 < R0 <= R1, got R0 = {}, R1 = {}",
                self.radius_min, self.radius_max
            )));
        }
        if !self.theta1.is_finite() {
            return Err(ModelError::InvalidParams("theta1 must be finite".into()));
        }
        Ok(())
    }

    /// Interaction range: points farther than this do not interact.
    pub fn interaction_range(&self) -> f64 {
        2.0 * self.radius_max
    }

    pub fn combine(&self, m: MinkowskiValues) -> f64 {
        m.volume + self.theta1 * m.surface - self.theta2 * m.euler as f64
    }

    pub fn sample_radius<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.radius_law {
            RadiusLaw::Fixed => self.radius_min,
            RadiusLaw::Uniform => {
                if self.radius_max > self.radius_min {
                    rng.random_range(self.radius_min..=self.radius_max)
                } else {
                    self.radius_min
                }
            }
        }
    }

    /// Mean Boltzmann weight of a single isolated point under the radius
    /// law, the dilute-limit insertion factor.
    pub fn single_point_weight(&self) -> f64 {
        let h1 = |r: f64| {
            std::f64::consts::PI * r * r + self.theta1 * std::f64::consts::TAU * r - self.theta2
        };
        match self.radius_law {
            RadiusLaw::Fixed => (-self.beta * h1(self.radius_min)).exp(),
            RadiusLaw::Uniform => {
                // 64-point midpoint rule on the radius interval.
                let n = 64;
                let w = (self.radius_max - self.radius_min) / n as f64;
                if w == 0.0 {
                    return (-self.beta * h1(self.radius_min)).exp();
                }
                (0..n)
                    .map(|k| {
                        let r = self.radius_min + (k as f64 + 0.5) * w;
                        (-self.beta * h1(r)).exp() * w
                    })
                    .sum::<f64>()
                    / (self.radius_max - self.radius_min)
            }
        }
    }
}

/// An axis-aligned rectangle, half-open on its upper edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Window {
        Window { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    /// Distance from a point to the closed rectangle, zero inside.
    pub fn distance(&self, p: Point) -> f64 {
        let dx = (self.x0 - p.x).max(0.0).max(p.x - self.x1);
        let dy = (self.y0 - p.y).max(0.0).max(p.y - self.y1);
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Total energy `V + theta1*S - theta2*chi` of the halo.
pub fn hamiltonian(cfg: &Configuration, p: &QuermassParams) -> Result<f64, ModelError> {
    let m = geometry::minkowski_functionals(&cfg.halo())?;
    Ok(p.combine(m))
}

/// Local energy of `window`: the cost of the points seen from the window,
/// `H(w') - H(w'_{outside})` for the configuration clipped to the
/// finite-range neighbourhood of the window.
pub fn local_energy(
    cfg: &Configuration,
    window: &Window,
    p: &QuermassParams,
) -> Result<f64, ModelError> {
    let range = p.interaction_range();
    let near = Configuration::new(
        cfg.points
            .iter()
            .copied()
            .filter(|q| window.distance(q.position) <= range)
            .collect(),
    );
    let outside = Configuration::new(
        near.points
            .iter()
            .copied()
            .filter(|q| !window.contains(q.position))
            .collect(),
    );
    Ok(hamiltonian(&near, p)? - hamiltonian(&outside, p)?)
}

/// Per-tile energies `H_i = V_i + theta1*S_i - theta2*chi_i`.
pub fn tile_energies(
    cfg: &Configuration,
    tiles: &[Site],
    delta: f64,
    p: &QuermassParams,
) -> Result<BTreeMap<Site, f64>, ModelError> {
    let u = cfg.halo();
    let per = geometry::tile_functionals_batch(&u, tiles, delta)?;
    Ok(tiles
        .iter()
        .zip(per)
        .map(|(&t, f)| {
            (
                t,
                f.volume + p.theta1 * f.surface - p.theta2 * f.euler as f64,
            )
        })
        .collect())
}

/// Superset of the tiles meeting the halo (by bounding box).
pub fn relevant_tiles(cfg: &Configuration, delta: f64) -> Vec<Site> {
    if cfg.is_empty() {
        return Vec::new();
    }
    let mut lo = (i32::MAX, i32::MAX);
    let mut hi = (i32::MIN, i32::MIN);
    for q in &cfg.points {
        let a = tile_of_point(
            Point::new(q.position.x - q.radius, q.position.y - q.radius),
            delta,
        );
        let b = tile_of_point(
            Point::new(q.position.x + q.radius, q.position.y + q.radius),
            delta,
        );
        lo = (lo.0.min(a.0), lo.1.min(a.1));
        hi = (hi.0.max(b.0), hi.1.max(b.1));
    }
    let mut tiles = Vec::new();
    for i in lo.0..=hi.0 {
        for j in lo.1..=hi.1 {
            tiles.push(Site(i, j));
        }
    }
    tiles
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(theta1: f64, theta2: f64) -> QuermassParams {
        QuermassParams {
            theta1,
            theta2,
            beta: 1.0,
            z: 1.0,
            radius_min: 0.5,
            radius_max: 1.0,
            radius_law: RadiusLaw::Uniform,
        }
    }

    #[test]
    fn empty_configuration_has_zero_energy() {
        let p = params(0.3, 0.1);
        assert_eq!(hamiltonian(&Configuration::default(), &p).unwrap(), 0.0);
    }

    #[test]
    fn single_disk_energy() {
        let p = params(0.3, 0.1);
        let cfg = Configuration::new(vec![MarkedPoint::new(0.0, 0.0, 1.0)]);
        let h = hamiltonian(&cfg, &p).unwrap();
        let pi = std::f64::consts::PI;
        assert!((h - (pi + 0.3 * 2.0 * pi - 0.1)).abs() < 1e-10);
        assert!((h - 4.9265).abs() < 1e-3);
    }

    #[test]
    fn two_disjoint_disks_volume_only() {
        let p = params(0.0, 0.0);
        let cfg = Configuration::new(vec![
            MarkedPoint::new(0.0, 0.0, 1.0),
            MarkedPoint::new(10.0, 0.0, 1.0),
        ]);
        let h = hamiltonian(&cfg, &p).unwrap();
        assert!((h - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn local_energy_of_empty_neighbourhood_is_zero() {
        let p = params(0.2, 0.05);
        let cfg = Configuration::new(vec![MarkedPoint::new(100.0, 0.0, 1.0)]);
        let w = Window::new(0.0, 0.0, 4.0, 4.0);
        assert_eq!(local_energy(&cfg, &w, &p).unwrap(), 0.0);
    }

    #[test]
    fn local_energy_of_isolated_disk_is_its_hamiltonian() {
        let p = params(0.2, 0.05);
        let inside = Configuration::new(vec![MarkedPoint::new(2.0, 2.0, 1.0)]);
        let mut cfg = inside.clone();
        cfg.points.push(MarkedPoint::new(50.0, 50.0, 1.0));
        let w = Window::new(0.0, 0.0, 4.0, 4.0);
        let le = local_energy(&cfg, &w, &p).unwrap();
        assert!((le - hamiltonian(&inside, &p).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn local_energy_saturates_in_covered_region() {
        // The tile neighbourhood of the new point is fully covered, so the
        // increment vanishes for the volume-only model.
        let p = QuermassParams::volume_only(1.0, 1.0);
        let base = Configuration::new(vec![MarkedPoint::new(0.0, 0.0, 1.0)]);
        let mut with = base.clone();
        with.points.push(MarkedPoint::new(0.05, 0.0, 0.5));
        let w = Window::new(-0.2, -0.2, 0.3, 0.2);
        let delta = local_energy(&with, &w, &p).unwrap() - local_energy(&base, &w, &p).unwrap();
        assert!(delta.abs() < 1e-10, "saturated insertion, got {delta}");
    }

    #[test]
    fn finite_range_property() {
        let p = params(0.4, 0.2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w = Window::new(0.0, 0.0, 3.0, 3.0);
        for _ in 0..20 {
            let near: Vec<MarkedPoint> = (0..6)
                .map(|_| {
                    MarkedPoint::new(
                        rng.random_range(-1.0..4.0),
                        rng.random_range(-1.0..4.0),
                        rng.random_range(0.5..1.0),
                    )
                })
                .collect();
            let cfg = Configuration::new(near.clone());
            let mut far = near;
            // Farther than 2*R1 from the window.
            far.push(MarkedPoint::new(
                5.0 + rng.random_range(0.11..3.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(0.5..1.0),
            ));
            let far_cfg = Configuration::new(far);
            let a = local_energy(&cfg, &w, &p).unwrap();
            let b = local_energy(&far_cfg, &w, &p).unwrap();
            assert_eq!(a, b, "adding a far point changed the local energy");
        }
    }

    #[test]
    fn tile_energy_saturation_and_domino() {
        // delta <= R0 / (2 sqrt(2)) makes every occupied tile and every
        // adjacent tile fully covered, hence energy exactly delta^2.
        let p = QuermassParams::volume_only(1.0, 1.0);
        let delta = 1.0 / (2.0 * 2f64.sqrt());
        let cfg = Configuration::new(vec![MarkedPoint::new(0.1, -0.05, 1.0)]);
        let e = tile_energies(&cfg, &[Site(0, 0), Site(1, 0), Site(1, 1)], delta, &p).unwrap();
        for (_, h) in e {
            assert!((h - delta * delta).abs() < 1e-9);
        }
    }

    #[test]
    fn tile_energies_sum_to_hamiltonian() {
        let p = params(-0.2, 0.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let cfg = Configuration::new(
                (0..10)
                    .map(|_| {
                        MarkedPoint::new(
                            rng.random_range(-2.0..2.0),
                            rng.random_range(-2.0..2.0),
                            rng.random_range(0.5..1.0),
                        )
                    })
                    .collect(),
            );
            let delta = 0.45;
            let tiles = relevant_tiles(&cfg, delta);
            let sum: f64 = tile_energies(&cfg, &tiles, delta, &p)
                .unwrap()
                .values()
                .sum();
            let h = hamiltonian(&cfg, &p).unwrap();
            assert!((sum - h).abs() < 1e-9, "sum {sum} vs H {h}");
        }
    }

    #[test]
    fn stability_witness_on_random_configurations() {
        // H >= -theta2 * (2N - 5)+ via the hole-count bound.
        let p = params(0.0, 0.5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(3..25usize);
            let cfg = Configuration::new(
                (0..n)
                    .map(|_| {
                        MarkedPoint::new(
                            rng.random_range(-2.0..2.0),
                            rng.random_range(-2.0..2.0),
                            rng.random_range(0.5..1.0),
                        )
                    })
                    .collect(),
            );
            let h = hamiltonian(&cfg, &p).unwrap();
            let bound = -p.theta2 * ((2 * n) as f64 - 5.0).max(0.0);
            assert!(h >= bound - 1e-9, "H = {h} below stability bound {bound}");
        }
    }

    #[test]
    fn restriction_heredity() {
        let p = params(0.1, 0.1);
        let cfg = Configuration::new(vec![
            MarkedPoint::new(0.0, 0.0, 1.0),
            MarkedPoint::new(9.0, 9.0, 0.6),
        ]);
        let w = Window::new(-2.0, -2.0, 2.0, 2.0);
        let r = cfg.restrict(&w);
        assert_eq!(r.len(), 1);
        let h1 = hamiltonian(&r, &p).unwrap();
        let h2 = hamiltonian(&r, &p).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = params(0.0, 0.0);
        p.theta2 = -0.1;
        assert!(p.validate().is_err());
        let mut p2 = params(0.0, 0.0);
        p2.z = 0.0;
        assert!(p2.validate().is_err());
        let mut p3 = params(0.0, 0.0);
        p3.radius_min = 0.0;
        assert!(p3.validate().is_err());
    }
}
