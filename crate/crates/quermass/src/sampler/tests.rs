use super::*;
use crate::model::hamiltonian;

fn wr_params(beta: f64, z: f64) -> QuermassParams {
    QuermassParams::volume_only(beta, z)
}

fn small_window() -> TileWindow {
    TileWindow::square(12, 1.0 / (2.0 * 2f64.sqrt()))
}

#[test]
fn window_too_small_is_rejected() {
    let w = TileWindow {
        tiles: LatticeBox::new(0, 0, -1, -1),
        delta: 0.5,
    };
    assert!(matches!(
        ChainState::new(&wr_params(1.0, 1.0), w, BoundaryCondition::Free, 1),
        Err(SamplerError::WindowTooSmall)
    ));
}

#[test]
fn traces_are_deterministic() {
    let p = wr_params(0.8, 1.5);
    let w = small_window();
    let s = RunSettings::new(40, 10, 12345);
    let a = run_chain(&p, w, BoundaryCondition::Free, &s).unwrap();
    let b = run_chain(&p, w, BoundaryCondition::Free, &s).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn beta_zero_density_matches_poisson() {
    let p = wr_params(0.0, 2.0);
    let w = TileWindow::square(10, 1.0);
    let mut s = RunSettings::new(4000, 200, 7);
    s.revalidate_every = 0;
    let trace = run_chain(&p, w, BoundaryCondition::Free, &s).unwrap();
    let (rho, se) = estimate_density(&trace).unwrap();
    assert!(
        (rho - 2.0).abs() < 3.0 * se.max(0.01),
        "rho = {rho}, se = {se}"
    );
}

#[test]
fn detailed_balance_ratios_on_hand_built_states() {
    // Birth/death and translate pairs on one- and two-point states: each
    // ratio matches the density ratio computed from scratch, and forward
    // times backward equals one exactly.
    let p = QuermassParams {
        theta1: 0.3,
        theta2: 0.1,
        beta: 1.4,
        z: 2.0,
        radius_min: 0.6,
        radius_max: 1.0,
        radius_law: crate::model::RadiusLaw::Uniform,
    };
    let w = TileWindow::square(14, 0.6 / (2.0 * 2f64.sqrt()));
    let volume = w.area();
    let mut state = ChainState::new(&p, w, BoundaryCondition::Free, 99).unwrap();
    // Clear the random initialization to take full control.
    state.clear_points();
    let a = MarkedPoint::new(1.0, 1.0, 0.8);
    let b = MarkedPoint::new(1.5, 1.2, 0.7);
    state.insert_point(a);

    // Birth of b on top of {a}.
    let r_birth = state.acceptance_ratio(&Proposal::Birth(b)).unwrap();
    let h1 = hamiltonian(&Configuration::new(vec![a]), &p).unwrap();
    let h2 = hamiltonian(&Configuration::new(vec![a, b]), &p).unwrap();
    let expected = p.z * volume / 2.0 * (-p.beta * (h2 - h1)).exp();
    assert!((r_birth - expected).abs() < 1e-9 * expected.max(1.0));

    // Death of b from {a, b}: the product with the birth ratio is one.
    state.insert_point(b);
    let r_death = state.acceptance_ratio(&Proposal::Death(1)).unwrap();
    assert!(
        (r_birth * r_death - 1.0).abs() < 1e-10,
        "birth {r_birth} x death {r_death} != 1"
    );

    // Translate b -> b' and back.
    let target = Point::new(1.8, 0.9);
    let r_fwd = state
        .acceptance_ratio(&Proposal::Translate(1, target))
        .unwrap();
    let moved = MarkedPoint {
        position: target,
        radius: b.radius,
    };
    let h3 = hamiltonian(&Configuration::new(vec![a, moved]), &p).unwrap();
    let expected_fwd = (-p.beta * (h3 - h2)).exp();
    assert!((r_fwd - expected_fwd).abs() < 1e-9 * expected_fwd.max(1.0));
    state.clear_points();
    state.insert_point(a);
    state.insert_point(moved);
    let r_bwd = state
        .acceptance_ratio(&Proposal::Translate(1, b.position))
        .unwrap();
    assert!((r_fwd * r_bwd - 1.0).abs() < 1e-10);
}

#[test]
fn incremental_energy_matches_recomputation() {
    let p = QuermassParams {
        theta1: -0.2,
        theta2: 0.3,
        beta: 1.0,
        z: 3.0,
        radius_min: 0.5,
        radius_max: 0.9,
        radius_law: crate::model::RadiusLaw::Uniform,
    };
    let w = TileWindow::square(10, 0.5 / (2.0 * 2f64.sqrt()));
    let mut state = ChainState::new(&p, w, BoundaryCondition::Free, 3).unwrap();
    for _ in 0..600 {
        state.step().unwrap();
    }
    let fresh = state.energy_from_scratch().unwrap();
    assert!(
        (fresh - state.energy()).abs() < 1e-7 * fresh.abs().max(1.0),
        "cached {} vs fresh {fresh}",
        state.energy()
    );
}

#[test]
fn incremental_energy_matches_for_wired_boundary() {
    let p = wr_params(1.5, 3.0);
    let w = TileWindow::square(10, 1.0 / (2.0 * 2f64.sqrt()));
    let mut state = ChainState::new(&p, w, BoundaryCondition::SpinWired(1), 11).unwrap();
    for _ in 0..400 {
        state.step().unwrap();
    }
    let fresh = state.energy_from_scratch().unwrap();
    assert!(
        (fresh - state.energy()).abs() < 1e-7 * fresh.abs().max(1.0),
        "cached {} vs fresh {fresh}",
        state.energy()
    );
}

#[test]
fn wired_constraints_are_preserved() {
    let p = wr_params(1.0, 2.0);
    let w = TileWindow::square(16, 1.0 / (2.0 * 2f64.sqrt()));
    for spin in [0u8, 1] {
        let mut s = RunSettings::new(60, 5, 21 + spin as u64);
        s.revalidate_every = 0;
        let trace = run_chain(&p, w, BoundaryCondition::SpinWired(spin), &s).unwrap();
        assert!(!trace.rows.is_empty());
        // run_chain hard-asserts the constraint at every record; reaching
        // here means it held throughout.
    }
}

#[test]
fn outer_boundary_points_interact() {
    // A single outer disk just outside the window raises the local energy
    // of insertions near the edge.
    let p = wr_params(1.0, 1.0);
    let w = TileWindow::square(8, 0.5);
    let rect = w.rect();
    let outer_cfg = Configuration::new(vec![MarkedPoint::new(rect.x1 + 0.4, 0.0, 1.0)]);
    let mut with_outer =
        ChainState::new(&p, w, BoundaryCondition::Outer(outer_cfg), 5).unwrap();
    with_outer.clear_points();
    let mut free = ChainState::new(&p, w, BoundaryCondition::Free, 5).unwrap();
    free.clear_points();
    // Insertion overlapping the outer halo costs less volume than in the
    // free chain.
    let q = MarkedPoint::new(rect.x1 - 0.2, 0.0, 1.0);
    let r_outer = with_outer.acceptance_ratio(&Proposal::Birth(q)).unwrap();
    let r_free = free.acceptance_ratio(&Proposal::Birth(q)).unwrap();
    assert!(r_outer > r_free);
}

#[test]
fn saturated_insertion_has_zero_delta() {
    let p = wr_params(2.0, 1.0);
    let w = TileWindow::square(12, 1.0 / (2.0 * 2f64.sqrt()));
    let mut state = ChainState::new(&p, w, BoundaryCondition::Free, 8).unwrap();
    state.clear_points();
    let center = Point::new(
        0.5 * (w.rect().x0 + w.rect().x1),
        0.5 * (w.rect().y0 + w.rect().y1),
    );
    state.insert_point(MarkedPoint::new(center.x, center.y, 1.0));
    // A small disk fully inside the existing halo costs nothing.
    let q = MarkedPoint::new(center.x + 0.1, center.y, 0.5);
    let ratio = state.acceptance_ratio(&Proposal::Birth(q)).unwrap();
    let expected = p.z * w.area() / 2.0;
    assert!(
        (ratio - expected).abs() < 1e-9 * expected,
        "saturated birth should see delta H = 0"
    );
}

#[test]
fn volume_fraction_bound_for_equal_disks() {
    // theta1 = theta2 = 0: the energy is the covered area, at most the
    // window area plus the halo margin.
    let p = wr_params(1.0, 2.0);
    let w = TileWindow::square(10, 1.0 / (2.0 * 2f64.sqrt()));
    let mut s = RunSettings::new(120, 20, 17);
    s.revalidate_every = 64;
    let trace = run_chain(&p, w, BoundaryCondition::Free, &s).unwrap();
    let halo_area = {
        let r = w.rect();
        (r.x1 - r.x0 + 2.0) * (r.y1 - r.y0 + 2.0)
    };
    for row in &trace.rows {
        assert!(row.energy >= -1e-9 && row.energy <= halo_area);
    }
}

#[test]
fn density_vanishes_with_activity() {
    let p = wr_params(1.0, 1e-4);
    let w = TileWindow::square(10, 0.5);
    let mut s = RunSettings::new(600, 100, 9);
    s.revalidate_every = 0;
    let trace = run_chain(&p, w, BoundaryCondition::Free, &s).unwrap();
    let mean_n: f64 =
        trace.rows.iter().map(|r| r.n_points as f64).sum::<f64>() / trace.rows.len() as f64;
    assert!(mean_n < 0.5, "mean N = {mean_n}");
}

#[test]
fn pressure_curve_is_zero_at_beta_zero() {
    // With H ignored (beta = 0) the partition function is one for the free
    // boundary: the raw log curve vanishes within error.
    let p = wr_params(0.0, 2.0);
    let w = TileWindow::square(8, 1.0);
    let mut s = RunSettings::new(3000, 300, 31);
    s.revalidate_every = 0;
    let grid = [0.25, 0.5, 1.0, 2.0];
    let curve =
        estimate_pressure_curve(&p, w, &grid, BoundaryCondition::Free, &s).unwrap();
    for (k, &lz) in curve.log_partition.iter().enumerate() {
        let tol = 4.0 * curve.std_error[k].max(0.05) + curve.first_segment_bias_scale.abs() + 0.3;
        assert!(lz.abs() < tol, "ln Z({}) = {lz} (tol {tol})", curve.z_grid[k]);
        assert!(curve.pressure[k].is_nan());
    }
}

#[test]
fn batch_means_needs_enough_samples() {
    let trace = Trace {
        rows: (0..20)
            .map(|k| TraceRow {
                sweep: k,
                n_points: 1,
                n_core: 0,
                energy: 0.0,
                acc_birth: 0.0,
                acc_death: 0.0,
                acc_move: 0.0,
            })
            .collect(),
        snapshots: vec![],
        window_area: 1.0,
        core_area: 1.0,
        seed: 0,
        boundary: "free".into(),
    };
    assert!(matches!(
        estimate_density(&trace),
        Err(SamplerError::InsufficientSamples { .. })
    ));
}

#[test]
fn single_point_scan_grid() {
    let p = wr_params(2.0, 2.0);
    let w = TileWindow::square(14, 1.0 / (2.0 * 2f64.sqrt()));
    let mut s = RunSettings::new(300, 50, 13);
    s.core_margin = Some(5);
    s.revalidate_every = 0;
    let scan = density_gap_scan(&p, w, &[1.0], &s).unwrap();
    assert_eq!(scan.rows.len(), 2);
    assert_eq!(scan.gap_peak_s, 1.0);
    assert_eq!(scan.critical_activity_estimate, 2.0);
}
