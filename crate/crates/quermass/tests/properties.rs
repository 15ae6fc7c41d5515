//! Property tests of the spec-level invariants that are not tied to one
//! module's internals.

use proptest::prelude::*;

use quermass::contours::{estimate_i_gamma, peierls_constants, Contour, Tiling};
use quermass::geometry::{
    boundary_arcs, minkowski_functionals, Disk, DiskUnion, Point,
};
use quermass::lattice::Site;
use quermass::model::QuermassParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk_strategy() -> impl Strategy<Value = Disk> {
    (
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.3f64..1.2,
    )
        .prop_map(|(x, y, r)| Disk::new(x, y, r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Functionals are independent of the disk ordering, bit for bit:
    /// the arrangement canonicalizes the summation order.
    #[test]
    fn permutation_invariance_bit_for_bit(
        disks in prop::collection::vec(disk_strategy(), 1..12),
        seed in 0u64..1000,
    ) {
        let base = minkowski_functionals(&DiskUnion::new(disks.clone())).unwrap();
        let mut shuffled = disks;
        // Fisher-Yates with a seeded generator.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        let permuted = minkowski_functionals(&DiskUnion::new(shuffled)).unwrap();
        prop_assert_eq!(base.volume.to_bits(), permuted.volume.to_bits());
        prop_assert_eq!(base.surface.to_bits(), permuted.surface.to_bits());
        prop_assert_eq!(base.euler, permuted.euler);
    }

    /// Adding a disk never decreases the covered area.
    #[test]
    fn volume_monotone_under_insertion(
        disks in prop::collection::vec(disk_strategy(), 1..10),
        extra in disk_strategy(),
    ) {
        let before = minkowski_functionals(&DiskUnion::new(disks.clone())).unwrap();
        let mut bigger = disks;
        bigger.push(extra);
        let after = minkowski_functionals(&DiskUnion::new(bigger)).unwrap();
        prop_assert!(after.volume >= before.volume - 1e-9);
    }

    /// Translating everything moves no functional (tile grids translated
    /// consistently are covered by the unit tests; here the globals).
    #[test]
    fn translation_invariance(
        disks in prop::collection::vec(disk_strategy(), 1..10),
        dx in -5.0f64..5.0,
        dy in -5.0f64..5.0,
    ) {
        let base = minkowski_functionals(&DiskUnion::new(disks.clone())).unwrap();
        let moved = DiskUnion::new(
            disks
                .iter()
                .map(|d| Disk::new(d.center.x + dx, d.center.y + dy, d.radius))
                .collect(),
        );
        let shifted = minkowski_functionals(&moved).unwrap();
        prop_assert!((base.volume - shifted.volume).abs() < 1e-9);
        prop_assert!((base.surface - shifted.surface).abs() < 1e-9);
        prop_assert_eq!(base.euler, shifted.euler);
    }
}

/// The boundary arcs cover exactly the uncovered parts of the circles:
/// their total length is the surface functional and sampled arc points are
/// never strictly inside another disk.
#[test]
fn boundary_arcs_are_exterior_and_sum_to_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let n = rng.random_range(1..14usize);
        let disks: Vec<Disk> = (0..n)
            .map(|_| {
                Disk::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(0.4..1.0),
                )
            })
            .collect();
        let u = DiskUnion::new(disks);
        let arcs = boundary_arcs(&u).unwrap();
        let m = minkowski_functionals(&u).unwrap();
        assert!((arcs.total_length() - m.surface).abs() < 1e-9);
        for arc in &arcs.arcs {
            let d = arcs.disks[arc.disk];
            for k in 0..8 {
                let t = arc.start + (arc.end - arc.start) * (k as f64 + 0.5) / 8.0;
                let p = Point::new(
                    d.center.x + d.radius * t.cos(),
                    d.center.y + d.radius * t.sin(),
                );
                for (j, other) in arcs.disks.iter().enumerate() {
                    if j != arc.disk {
                        assert!(
                            p.dist2(other.center) >= other.radius * other.radius * (1.0 - 1e-9),
                            "arc point strictly inside another disk"
                        );
                    }
                }
            }
        }
    }
}

/// Monte Carlo contour integrals never exceed the contour-energy upper
/// bound `g0^{empty} g1^{occupied} exp(-beta rho0 size)` beyond three
/// standard errors, over fifty random small mixed-spin supports in the
/// admissible domain.
#[test]
fn contour_integral_respects_energy_bound() {
    let mut p = QuermassParams::volume_only(3.0, 3.3);
    p.theta1 = 0.1;
    p.theta2 = 0.0004; // below pi / 2821
    let tiling = Tiling::for_params(&p).unwrap();
    let constants = peierls_constants(&p, tiling.delta, None).unwrap();
    let d2 = tiling.delta * tiling.delta;
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for case in 0..50 {
        // Random connected support with at least one tile of each spin.
        let size = rng.random_range(2..=8usize);
        let mut support = vec![Site(0, 0)];
        while support.len() < size {
            let &base = &support[rng.random_range(0..support.len())];
            let n = base.neighbors_inf()[rng.random_range(0..8)];
            if !support.contains(&n) {
                support.push(n);
            }
        }
        support.sort_unstable();
        let mut spins: Vec<u8> = (0..support.len()).map(|_| rng.random_range(0..2)).collect();
        spins[0] = 1;
        let last = spins.len() - 1;
        spins[last] = 0;
        let n1 = spins.iter().filter(|&&s| s == 1).count();
        let n0 = spins.len() - n1;
        let contour = Contour {
            support,
            spins,
            contour_type: 0,
            interior0: vec![],
            interior1: vec![],
            class: 0,
        };
        let est = estimate_i_gamma(&contour, &p, &tiling, 600, 9_000 + case).unwrap();
        let bound = constants.g0.powi(n0 as i32)
            * constants.g1.powi(n1 as i32)
            * (-p.beta * constants.rho0 * contour.support_size() as f64).exp();
        assert!(
            est.estimate - 3.0 * est.std_error <= bound * (1.0 + 1e-9),
            "case {case}: estimate {} (se {}) above bound {bound}",
            est.estimate,
            est.std_error
        );
        let _ = d2;
    }
}
