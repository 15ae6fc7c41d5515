use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cluster::cluster_log_partition;
use super::convergence::{animal_counts, derivative_series_check};
use super::*;
use crate::lattice::Site;

fn poly(sites: &[(i32, i32)], tag: u8) -> Polymer {
    Polymer::new(sites.iter().map(|&(x, y)| Site(x, y)).collect(), tag).unwrap()
}

#[test]
fn polymer_validation() {
    assert!(Polymer::new(vec![], 0).is_err());
    assert!(Polymer::new(vec![Site(0, 0), Site(3, 3)], 0).is_err());
    assert!(Polymer::new(vec![Site(0, 0), Site(1, 1)], 0).is_ok());
}

#[test]
fn zeta_cases() {
    let a = poly(&[(0, 0), (0, 1)], 0);
    assert_eq!(zeta(&a, &a), -1);
    let far = poly(&[(3, 0)], 0);
    assert_eq!(zeta(&a, &far), 0);
    let far_other_type = poly(&[(3, 0)], 1);
    assert_eq!(zeta(&a, &far_other_type), -1);
    let adjacent = poly(&[(1, 1)], 0);
    assert_eq!(zeta(&a, &adjacent), -1);
}

#[test]
fn ursell_examples() {
    let a = poly(&[(0, 0)], 0);
    let b = poly(&[(1, 0)], 0);
    let single = PolymerCluster::new(vec![(a.clone(), 1)]);
    assert_eq!(ursell_alpha(&single).unwrap(), Rational::new(1, 1));

    let pair = PolymerCluster::new(vec![(a.clone(), 1), (b.clone(), 1)]);
    assert_eq!(ursell_alpha(&pair).unwrap(), Rational::new(-1, 1));

    let double = PolymerCluster::new(vec![(a.clone(), 2)]);
    assert_eq!(ursell_alpha(&double).unwrap(), Rational::new(-1, 2));

    let c = poly(&[(0, 1)], 0);
    let triple = PolymerCluster::new(vec![(a, 1), (b, 1), (c, 1)]);
    assert_eq!(ursell_alpha(&triple).unwrap(), Rational::new(2, 1));
}

#[test]
fn ursell_cap_is_enforced() {
    let a = poly(&[(0, 0)], 0);
    let big = PolymerCluster::new(vec![(a, URSELL_CAP + 1)]);
    assert!(matches!(
        ursell_alpha(&big),
        Err(ExpansionError::MultiplicityCap { .. })
    ));
}

/// Brute-force oracle: enumerate every subset of the incompatibility edges
/// and keep the connected spanning ones.
fn brute_connected_sum(adj: &[u16]) -> i128 {
    let n = adj.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i] & (1 << j) != 0 {
                edges.push((i, j));
            }
        }
    }
    let mut total = 0i128;
    for mask in 0..(1u64 << edges.len()) {
        // Union-find connectivity over the chosen edges.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut count = 0;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask & (1 << e) != 0 {
                count += 1;
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        if (0..n).all(|i| find(&mut parent, i) == root) {
            total += if count % 2 == 0 { 1 } else { -1 };
        }
    }
    total
}

#[test]
fn ursell_matches_brute_force_up_to_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 1..=6usize {
        for _ in 0..40 {
            let mut adj = vec![0u16; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < 0.6 {
                        adj[i] |= 1 << j;
                        adj[j] |= 1 << i;
                    }
                }
            }
            assert_eq!(
                connected_alternating_sum(&adj),
                brute_connected_sum(&adj),
                "n = {n}, adj = {adj:?}"
            );
        }
    }
}

#[test]
fn zero_weights_give_zero_pressure() {
    let polymers = vec![(poly(&[(0, 0)], 0), 0.0), (poly(&[(1, 1)], 0), 0.0)];
    let r = cluster_pressure(&polymers, IncompatibilityRule::Contour, 10.0, 1, 6, None).unwrap();
    assert_eq!(r.pressure, 0.0);
}

#[test]
fn single_polymer_series_is_log1p() {
    // One polymer at the origin only: clusters are its powers and
    // g = sum (-1)^{m-1} w^m / m / |support| = ln(1 + w) / |support|.
    let w = 0.2;
    let p = poly(&[(0, 0), (1, 0), (0, 1)], 0);
    let r = cluster_pressure(&[(p, w)], IncompatibilityRule::Contour, 5.0, 3, 8, None).unwrap();
    let expected = (1.0f64 + w).ln() / 3.0;
    // Truncated at multiplicity 9; the remainder is below w^10.
    assert!(
        (r.pressure - expected).abs() < w.powi(10),
        "{} vs {}",
        r.pressure,
        expected
    );
}

#[test]
fn dimer_gas_matches_transfer_matrix() {
    let lmax = 12usize;
    for w in [0.001, 0.01, 0.05] {
        let polymers: Vec<(Polymer, f64)> = (-(lmax as i32 + 2)..=(lmax as i32 + 2))
            .map(|i| (poly(&[(i, 0), (i + 1, 0)], 0), w))
            .collect();
        let tau = -(w as f64).ln() / 2.0;
        let r = cluster_pressure(
            &polymers,
            IncompatibilityRule::SharedSite,
            tau,
            2,
            lmax,
            None,
        )
        .unwrap();
        let exact = ((1.0 + (1.0f64 + 4.0 * w).sqrt()) / 2.0).ln();
        assert!(
            (r.pressure - exact).abs() <= r.tail_bound,
            "w = {w}: engine {} vs exact {exact}, tail {}",
            r.pressure,
            r.tail_bound
        );
    }
}

#[test]
fn engine_matches_direct_enumeration_on_small_windows() {
    // Windows of at most 14 sites; polymers are the connected subsets of
    // size at most two, weights at most exp(-tau0 * size) with random
    // factors.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tau0: f64 = 12.0;
    for (w, h) in [(4, 3), (7, 2), (5, 2)] {
        let mut sites = Vec::new();
        for x in 0..w {
            for y in 0..h {
                sites.push(Site(x, y));
            }
        }
        let n = sites.len();
        assert!(n <= 14);
        let mut polymers = Vec::new();
        for i in 0..n {
            let c: f64 = rng.random_range(0.2..1.0);
            polymers.push((
                Polymer::new(vec![sites[i]], 0).unwrap(),
                c * (-tau0).exp(),
            ));
            for j in (i + 1)..n {
                if sites[i].dist_inf(sites[j]) == 1 {
                    let c: f64 = rng.random_range(0.2..1.0);
                    polymers.push((
                        Polymer::new(vec![sites[i], sites[j]], 0).unwrap(),
                        c * (-2.0 * tau0).exp(),
                    ));
                }
            }
        }
        let direct = direct_log_partition(&polymers, IncompatibilityRule::Contour);
        let engine = cluster_log_partition(&polymers, IncompatibilityRule::Contour).unwrap();
        // The exact expansion converges within the rigorous tail at the
        // window scale; the engine truncation sits far below it.
        let tol = (n as f64) * (-tau0 / 2.0f64).exp();
        assert!(
            (direct - engine).abs() <= tol,
            "window {w}x{h}: direct {direct} vs engine {engine}, tol {tol}"
        );
    }
}

#[test]
fn tail_monotonicity_and_cauchy_partial_sums() {
    let w = 0.05;
    let polymers: Vec<(Polymer, f64)> = (-16..=16)
        .map(|i| (poly(&[(i, 0), (i + 1, 0)], 0), w))
        .collect();
    let tau = -(w as f64).ln() / 2.0;
    let mut prev: Option<ExpansionResult> = None;
    for lmax in [4usize, 6, 8, 10, 12] {
        let r = cluster_pressure(
            &polymers,
            IncompatibilityRule::SharedSite,
            tau,
            2,
            lmax,
            None,
        )
        .unwrap();
        if let Some(p) = &prev {
            assert!(r.tail_bound <= p.tail_bound);
            assert!(
                (r.pressure - p.pressure).abs() <= p.tail_bound,
                "partial sums must be Cauchy within successive tails"
            );
        }
        prev = Some(r);
    }
}

#[test]
fn animal_counts_match_known_values() {
    let c = animal_counts(6);
    assert_eq!(&c[1..=6], &[1, 4, 20, 110, 638, 3832]);
}

#[test]
fn convergence_examples() {
    let r = convergence_check(100.0, 1, 6);
    assert!(r.satisfied);
    assert!(r.partial_sum + r.tail_bound < 1e-30);

    // tau of order 3^d ln 2: the first term alone already exceeds one.
    let bad = convergence_check(9.0 * 2f64.ln(), 1, 6);
    assert!(!bad.satisfied);
    assert!(bad.partial_sum > 1.0);

    // Vacuous class: the minimal size is beyond any feasible animal.
    let empty = convergence_check(30.0, 1_000_000, 6);
    assert!(empty.satisfied);
    assert_eq!(empty.partial_sum, 0.0);
}

#[test]
fn tau_zero_is_a_threshold() {
    // At l0 = 1 the first term alone forces tau/6 >= 10, so the threshold
    // sits at 60.
    let t0 = tau_zero(1, 6);
    assert!(t0 > 59.0 && t0 < 70.0, "tau0 = {t0}");
    assert!(derivative_series_check(t0 + 0.1, 1, 6));
    assert!(!derivative_series_check(t0 - 0.5, 1, 6));
}

#[test]
fn order0_pressure_identities() {
    for (s, beta, delta) in [(0.7, 5.0, 0.5), (1.0, 10.0, 0.5), (1.3, 20.0, 0.25)] {
        let p = truncated_pressure_order0(s, beta, delta);
        assert_eq!(p.psi0, -s, "psi0 must be exactly -s");
        let bd2 = beta * delta * delta;
        let expected1 = -1.0 + (1.0 - (-s * bd2).exp()).ln() / bd2;
        assert!((p.psi1 - expected1).abs() < 1e-12);
    }
    // s -> infinity: psi1 -> -1.
    let p = truncated_pressure_order0(1e6, 10.0, 0.5);
    assert!((p.psi1 + 1.0).abs() < 1e-12);
}

#[test]
fn gap_vanishes_at_s_beta_and_root_is_found() {
    // Disks of radius 2 admit the tile side 0.5 used by the worked value.
    let mut params = crate::model::QuermassParams::volume_only(10.0, 10.0);
    params.radius_min = 2.0;
    params.radius_max = 2.0;
    let delta = 0.5;
    let c = crate::contours::peierls_constants(&params, delta, None).unwrap();
    // Closed-form critical point of the order-0 gap.
    let bd2 = params.beta * delta * delta;
    let s_beta = (1.0 + bd2.exp()).ln() / bd2;
    assert!((s_beta - 1.0315558f64).abs() < 1e-6);
    assert!(gap_value(s_beta, params.beta, delta, 0.0, 0.0).abs() < 1e-12);
    let root = gap_root(&c, params.beta, 0.0, 0.0).unwrap();
    assert!((root - s_beta).abs() < 1e-10);
}

#[test]
fn gap_root_not_bracketed_is_reported() {
    let params = crate::model::QuermassParams::volume_only(10.0, 10.0);
    let c = crate::contours::peierls_constants(&params, 0.25, None).unwrap();
    let _ = &c;
    assert!(matches!(
        gap_root(&c, params.beta, 10.0, 0.0),
        Err(ExpansionError::RootNotBracketed(_, _))
    ));
}

#[test]
fn kappa_shape() {
    let rho0 = 0.8;
    assert_eq!(cutoff_kappa(0.0, rho0), 1.0);
    assert_eq!(cutoff_kappa(rho0 / 8.0, rho0), 1.0);
    assert_eq!(cutoff_kappa(rho0 / 4.0, rho0), 0.0);
    assert_eq!(cutoff_kappa(1.0, rho0), 0.0);
    let mid = cutoff_kappa(3.0 * rho0 / 16.0, rho0);
    assert!((mid - 0.5).abs() < 1e-12);
    // Numerical derivative stays below the reported supremum.
    let sup = kappa_derivative_sup(rho0);
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let s = rho0 / 8.0 + (rho0 / 8.0) * k as f64 / 1000.0;
        let d = (cutoff_kappa(s + 1e-7, rho0) - cutoff_kappa(s - 1e-7, rho0)) / 2e-7;
        worst = worst.max(d.abs());
    }
    assert!(worst <= sup * 1.001);
}

#[test]
fn psz_example_values() {
    let inputs = PszInputs {
        delta: 0.5,
        rho0: 0.4,
        l0: 1,
        r1: 0.01,
        k_constant: None,
        kappa_derivative: None,
        d_override: None,
        c1_override: None,
        c2_override: None,
    };
    let r = psz_conditions_check(100.0, &inputs);
    assert!((r.tau - 12.0).abs() < 1e-12);
    assert!((r.eta - 2.0 * (-4.0f64).exp()).abs() < 1e-12);
    // tau = 12 sits below the over-counted threshold, so condition 1 fails
    // at beta = 100 even though eta is already small.
    assert!(!r.cond_tau_above_threshold);
    let beta_min = minimal_rigorous_beta(&inputs);
    assert!(psz_conditions_check(beta_min, &inputs).all_satisfied);
    assert!(!psz_conditions_check(beta_min * 0.9, &inputs).all_satisfied);
}

#[test]
fn truncated_series_reduces_to_order0_without_contours() {
    let s = 1.1;
    let orders = truncated_pressure_series(&[], 3, s, 10.0, 0.5, 0.1, 5, 8).unwrap();
    let base = truncated_pressure_order0(s, 10.0, 0.5);
    for o in &orders {
        assert_eq!(o.psi0, base.psi0);
        assert_eq!(o.psi1, base.psi1);
    }
    assert_eq!(orders.len(), 4);
}
