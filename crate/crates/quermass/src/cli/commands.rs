//! The five subcommands and their CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{CliError, RunConfig};
use crate::contours::{
    self, domino_set, extract_contours, peierls_constants, spin_field, verify_peierls_bound,
    LatticeBox, Tiling,
};
use crate::expansion::{
    cluster_pressure, convergence_check, minimal_rigorous_beta, psz_conditions_check,
    IncompatibilityRule, Polymer, PszInputs,
};
use crate::lattice::euclidean_ball_count;
use crate::model::Configuration;
use crate::sampler::{
    density_gap_scan, estimate_density, estimate_pressure_curve, run_chain, BoundaryCondition,
};

/// Inverse temperatures above this are treated as beyond desk-scale
/// simulation in the constants report.
const DESK_BETA_LIMIT: f64 = 1e3;

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn csv_header(cfg: &RunConfig) -> String {
    let mut out = String::new();
    for line in cfg.header_lines() {
        out.push_str("# ");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))
}

/// Runs one chain; writes `trace.csv`, `summary.json` and, when snapshots
/// were recorded, `snapshots.json`.
pub fn cmd_sample(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let trace = run_chain(
        &cfg.params(),
        cfg.window(),
        cfg.boundary_condition(),
        &cfg.settings(),
    )?;
    let mut csv = csv_header(cfg);
    csv.push_str("sweep,N,H,acc_birth,acc_death,acc_move\n");
    for r in &trace.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.sweep, r.n_points, r.energy, r.acc_birth, r.acc_death, r.acc_move
        ));
    }
    write_file(&out.join("trace.csv"), csv.as_bytes())?;

    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a RunConfig,
        rho: f64,
        rho_se: f64,
        mean_energy: f64,
        acc_birth: f64,
        acc_death: f64,
        acc_move: f64,
        records: usize,
    }
    let (rho, rho_se) = estimate_density(&trace)?;
    let n = trace.rows.len().max(1) as f64;
    let summary = Summary {
        config: cfg,
        rho,
        rho_se,
        mean_energy: trace.rows.iter().map(|r| r.energy).sum::<f64>() / n,
        acc_birth: trace.rows.iter().map(|r| r.acc_birth).sum::<f64>() / n,
        acc_death: trace.rows.iter().map(|r| r.acc_death).sum::<f64>() / n,
        acc_move: trace.rows.iter().map(|r| r.acc_move).sum::<f64>() / n,
        records: trace.rows.len(),
    };
    write_file(&out.join("summary.json"), to_json(&summary)?.as_bytes())?;
    if !trace.snapshots.is_empty() {
        write_file(
            &out.join("snapshots.json"),
            to_json(&trace.snapshots)?.as_bytes(),
        )?;
    }
    Ok(())
}

/// Density-gap scan over `s_grid` with pressure curves for both wired
/// boundary types; writes `scan.csv` and `scan.json`.
pub fn cmd_scan(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    if cfg.s_grid.is_empty() {
        return Err(CliError::Config("scan needs a non-empty `s_grid`".into()));
    }
    let params = cfg.params();
    let window = cfg.window();
    let settings = cfg.settings();
    let mut result = density_gap_scan(&params, window, &cfg.s_grid, &settings)?;

    // Pressure along the same activities for each wired type.
    let z_grid: Vec<f64> = cfg.s_grid.iter().map(|s| s * params.beta).collect();
    for spin in [0u8, 1] {
        let curve = estimate_pressure_curve(
            &params,
            window,
            &z_grid,
            BoundaryCondition::SpinWired(spin),
            &settings,
        )?;
        let label = if spin == 0 { "wired0" } else { "wired1" };
        for row in result.rows.iter_mut().filter(|r| r.boundary == label) {
            if let Some(k) = curve.z_grid.iter().position(|&z| (z - row.z).abs() < 1e-12) {
                row.psi = Some(curve.pressure[k]);
                row.psi_se = Some(curve.std_error[k] / (params.beta * curve.window_area));
            }
        }
    }

    let mut csv = csv_header(cfg);
    csv.push_str("s,z,bc,rho,rho_se,psi,psi_se\n");
    for r in &result.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.s,
            r.z,
            r.boundary,
            r.rho,
            r.rho_se,
            r.psi.map(|v| v.to_string()).unwrap_or_default(),
            r.psi_se.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    write_file(&out.join("scan.csv"), csv.as_bytes())?;

    #[derive(Serialize)]
    struct ScanReport<'a> {
        config: &'a RunConfig,
        gap_peak_s: f64,
        gap_peak: f64,
        gap_peak_se: f64,
        critical_activity_estimate: f64,
        order0_s_beta: f64,
    }
    let report = ScanReport {
        config: cfg,
        gap_peak_s: result.gap_peak_s,
        gap_peak: result.gap_peak,
        gap_peak_se: result.gap_peak_se,
        critical_activity_estimate: result.critical_activity_estimate,
        order0_s_beta: result.order0_s_beta,
    };
    write_file(&out.join("scan.json"), to_json(&report)?.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct ContourReport<'a> {
    config: &'a RunConfig,
    snapshots: usize,
    contours: usize,
    size_histogram: Vec<(usize, usize)>,
    domino_checked: usize,
    domino_passed: usize,
    ratio_checked: usize,
    ratio_passed: usize,
    peierls_checked: usize,
    peierls_passed: usize,
    chi_checked: usize,
    chi_passed: usize,
    admissible: bool,
}

/// Contour statistics over snapshots (from a file or a fresh chain);
/// writes `contours.json` and dumps the extracted contours to
/// `contour_dump.json`.
pub fn cmd_analyze_contours(
    cfg: &RunConfig,
    snapshots_path: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let snapshots: Vec<(u64, Configuration)> = match snapshots_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => {
            let mut settings = cfg.settings();
            if settings.snapshot_every == 0 {
                settings.snapshot_every = (cfg.sweeps / 32).max(1);
            }
            run_chain(
                &cfg.params(),
                cfg.window(),
                cfg.boundary_condition(),
                &settings,
            )?
            .snapshots
        }
    };
    if snapshots.is_empty() {
        return Err(CliError::Config(
            "no snapshots: pass --snapshots or set snapshot_every".into(),
        ));
    }

    let params = cfg.params();
    let tiling = Tiling::new(cfg.delta, cfg.correctness_radius)?;
    let constants = if params.beta > 0.0 {
        peierls_constants(&params, cfg.delta, cfg.theta1_delta_lower).ok()
    } else {
        None
    };
    let r0 = 1.0 / euclidean_ball_count(5 * cfg.correctness_radius) as f64;
    let r1 = 1.0 / euclidean_ball_count(2 * cfg.correctness_radius) as f64;
    let chi_cap_per_site = cfg.delta * cfg.delta
        / (std::f64::consts::PI * params.radius_min * params.radius_min);

    let domain = LatticeBox::square(cfg.window_tiles);
    let mut report = ContourReport {
        config: cfg,
        snapshots: snapshots.len(),
        contours: 0,
        size_histogram: Vec::new(),
        domino_checked: 0,
        domino_passed: 0,
        ratio_checked: 0,
        ratio_passed: 0,
        peierls_checked: 0,
        peierls_passed: 0,
        chi_checked: 0,
        chi_passed: 0,
        admissible: constants.is_some(),
    };
    let mut hist: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut extracted = Vec::new();
    for (_, snapshot) in &snapshots {
        let field = spin_field(snapshot, &tiling, domain);
        let contours = extract_contours(&field, &tiling)?;
        for contour in contours {
            report.contours += 1;
            *hist.entry(contour.support_size()).or_insert(0) += 1;

            let d = domino_set(&contour, &field, &tiling)?;
            report.domino_checked += 1;
            if d.len() as f64 >= r0 * contour.support_size() as f64 {
                report.domino_passed += 1;
            }

            let size = contour.support_size() as f64;
            let ones = contour.spin_count(1) as f64;
            let zeros = contour.spin_count(0) as f64;
            report.ratio_checked += 1;
            if ones >= r1 * size - 1e-9
                && ones <= (1.0 - r1) * size + 1e-9
                && zeros >= r1 * size - 1e-9
                && zeros <= (1.0 - r1) * size + 1e-9
            {
                report.ratio_passed += 1;
            }

            if let Some(c) = &constants {
                report.peierls_checked += 1;
                if verify_peierls_bound(snapshot, &contour, &params, c)? {
                    report.peierls_passed += 1;
                }
            }

            // Euler bound over the support.
            let chi_sum: f64 = crate::geometry::tile_functionals_batch(
                &snapshot.halo(),
                &contour.support,
                cfg.delta,
            )?
            .iter()
            .map(|f| f.euler as f64)
            .sum();
            report.chi_checked += 1;
            if chi_sum <= chi_cap_per_site * size + 1e-9 {
                report.chi_passed += 1;
            }
            extracted.push(contour);
        }
    }
    report.size_histogram = hist.into_iter().collect();
    write_file(&out.join("contours.json"), to_json(&report)?.as_bytes())?;
    write_file(&out.join("contour_dump.json"), to_json(&extracted)?.as_bytes())?;
    Ok(())
}

/// Expansion report: convergence certificate, dimer self-test against the
/// transfer matrix, and the beta-condition checks; writes
/// `expansion.json`.
pub fn cmd_expansion_report(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.params();
    let constants = if params.beta > 0.0 {
        peierls_constants(&params, cfg.delta, cfg.theta1_delta_lower).ok()
    } else {
        None
    };
    let tau = cfg.tau.or(constants.as_ref().map(|c| c.tau)).unwrap_or(12.0);
    let l0 = cfg
        .l0
        .or(constants.as_ref().map(|c| c.min_contour_size))
        .unwrap_or(1);

    let convergence = convergence_check(tau, l0, 8);

    // Dimer gas self-test: engine versus the closed-form free energy.
    let w = 0.01;
    let lmax = cfg.lmax.max(6);
    let dimers: Vec<(Polymer, f64)> = (-(lmax as i32 + 2)..=(lmax as i32 + 2))
        .map(|i| {
            (
                Polymer::new(
                    vec![crate::lattice::Site(i, 0), crate::lattice::Site(i + 1, 0)],
                    0,
                )
                .expect("dimer support"),
                w,
            )
        })
        .collect();
    let dimer_tau = -(w as f64).ln() / 2.0;
    let dimer = cluster_pressure(
        &dimers,
        IncompatibilityRule::SharedSite,
        dimer_tau,
        2,
        lmax,
        None,
    )?;
    let dimer_exact = ((1.0 + (1.0f64 + 4.0 * w).sqrt()) / 2.0).ln();
    let dimer_pass = (dimer.pressure - dimer_exact).abs() <= dimer.tail_bound;

    let psz = constants.as_ref().map(|c| {
        let inputs = PszInputs::from_constants(c);
        let report = psz_conditions_check(params.beta, &inputs);
        let beta_min = minimal_rigorous_beta(&inputs);
        (report, beta_min, beta_min <= DESK_BETA_LIMIT)
    });

    #[derive(Serialize)]
    struct ExpansionReport<'a> {
        config: &'a RunConfig,
        tau: f64,
        l0: u64,
        eta: f64,
        lmax: usize,
        convergence: crate::expansion::ConvergenceReport,
        dimer_pressure: f64,
        dimer_exact: f64,
        dimer_tail: f64,
        dimer_pass: bool,
        psz: Option<crate::expansion::PszReport>,
        minimal_rigorous_beta: Option<f64>,
        desk_simulable: Option<bool>,
    }
    let report = ExpansionReport {
        config: cfg,
        tau,
        l0,
        eta: 2.0 * (-tau * l0 as f64 / 3.0).exp(),
        lmax,
        convergence,
        dimer_pressure: dimer.pressure,
        dimer_exact,
        dimer_tail: dimer.tail_bound,
        dimer_pass,
        psz: psz.as_ref().map(|(r, _, _)| r.clone()),
        minimal_rigorous_beta: psz.as_ref().map(|(_, b, _)| *b),
        desk_simulable: psz.as_ref().map(|(_, _, d)| *d),
    };
    write_file(&out.join("expansion.json"), to_json(&report)?.as_bytes())?;
    Ok(())
}

/// Contour constants plus the minimal rigorous inverse temperature; writes
/// `constants.json`.
pub fn cmd_check_constants(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.params();
    let constants = peierls_constants(&params, cfg.delta, cfg.theta1_delta_lower)?;
    let inputs = PszInputs::from_constants(&constants);
    let beta_min = minimal_rigorous_beta(&inputs);
    let report_at_beta = psz_conditions_check(params.beta, &inputs);

    #[derive(Serialize)]
    struct ConstantsReport<'a> {
        config: &'a RunConfig,
        constants: contours::PeierlsConstants,
        psz_at_beta: crate::expansion::PszReport,
        minimal_rigorous_beta: f64,
        desk_simulable: bool,
    }
    let report = ConstantsReport {
        config: cfg,
        constants,
        psz_at_beta: report_at_beta,
        minimal_rigorous_beta: beta_min,
        desk_simulable: beta_min <= DESK_BETA_LIMIT,
    };
    write_file(&out.join("constants.json"), to_json(&report)?.as_bytes())?;
    Ok(())
}
