//! Configuration parsing and the command line interface.
//!
//! Configuration files are line-oriented `key = value` text; `#` starts a
//! comment. Grids accept either comma lists (`0.5,0.75,1.0`) or
//! `start:end:count` ranges. Every output file embeds the fully resolved
//! configuration and seed in its header, and re-running a command with the
//! same configuration reproduces the file byte for byte.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commands::{
    cmd_analyze_contours, cmd_check_constants, cmd_expansion_report, cmd_sample, cmd_scan,
};

use crate::contours::ContourError;
use crate::expansion::ExpansionError;
use crate::geometry::GeometryError;
use crate::model::{ModelError, QuermassParams, RadiusLaw};
use crate::sampler::SamplerError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical domain error: {0}")]
    Domain(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ContourError> for CliError {
    fn from(e: ContourError) -> Self {
        match e {
            ContourError::ParameterDomain(_) | ContourError::LabelInconsistency => {
                CliError::Domain(e.to_string())
            }
            ContourError::Model(m) => CliError::Config(m.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Model(m) => CliError::Config(m.to_string()),
            SamplerError::InvalidSettings(_) | SamplerError::WindowTooSmall => {
                CliError::Config(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<ExpansionError> for CliError {
    fn from(e: ExpansionError) -> Self {
        CliError::Domain(e.to_string())
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    /// Activity; the file gives either `z` or `s`.
    pub z: f64,
    /// `z / beta` when the file used the re-parametrised activity.
    pub s: Option<f64>,
    pub r0: f64,
    pub r1: f64,
    pub radius_law: RadiusLaw,
    pub delta: f64,
    /// Correctness radius; defaults to `ceil(2 R1 / delta)`.
    pub correctness_radius: i32,
    pub window_tiles: i32,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub snapshot_every: u64,
    pub seed: u64,
    pub boundary: String,
    pub s_grid: Vec<f64>,
    pub z_grid: Vec<f64>,
    pub core_margin: Option<i32>,
    pub theta1_delta_lower: Option<f64>,
    /// Cluster-size cutoff of expansion reports.
    pub lmax: usize,
    /// Stability rate used by expansion reports; defaults to the contour
    /// constants' value when admissible.
    pub tau: Option<f64>,
    pub l0: Option<u64>,
    pub samples: usize,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta1: 0.0,
            theta2: 0.0,
            beta: 1.0,
            z: 1.0,
            s: None,
            r0: 1.0,
            r1: 1.0,
            radius_law: RadiusLaw::Fixed,
            delta: 0.0, // resolved from r0
            correctness_radius: 0,
            window_tiles: 20,
            sweeps: 2000,
            burn_in: 500,
            thinning: 1,
            snapshot_every: 0,
            seed: 1,
            boundary: "free".into(),
            s_grid: Vec::new(),
            z_grid: Vec::new(),
            core_margin: None,
            theta1_delta_lower: None,
            lmax: 10,
            tau: None,
            l0: None,
            samples: 2000,
            threads: 0,
        }
    }
}

impl RunConfig {
    /// Parses the `key = value` file format with line diagnostics.
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let mut saw_z = false;
        let mut saw_s = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nline = lineno + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {nline}: expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            let value = value.trim().to_string();
            let bad = |what: &str| {
                CliError::Config(format!("line {nline}: field `{key}`: {what} (`{value}`)"))
            };
            macro_rules! num {
                ($t:ty) => {
                    value.parse::<$t>().map_err(|_| bad("not a number"))
                };
            }
            match key {
                "theta1" => cfg.theta1 = num!(f64)?,
                "theta2" => cfg.theta2 = num!(f64)?,
                "beta" => cfg.beta = num!(f64)?,
                "z" => {
                    cfg.z = num!(f64)?;
                    saw_z = true;
                }
                "s" => {
                    cfg.s = Some(num!(f64)?);
                    saw_s = true;
                }
                "R0" => cfg.r0 = num!(f64)?,
                "R1" => cfg.r1 = num!(f64)?,
                "radius_law" => {
                    cfg.radius_law = match value.as_str() {
                        "fixed" => RadiusLaw::Fixed,
                        "uniform" => RadiusLaw::Uniform,
                        _ => return Err(bad("expected `fixed` or `uniform`")),
                    }
                }
                "delta" => cfg.delta = num!(f64)?,
                "L" => cfg.correctness_radius = num!(i32)?,
                "window" | "window_tiles" => cfg.window_tiles = num!(i32)?,
                "sweeps" => cfg.sweeps = num!(u64)?,
                "burn_in" => cfg.burn_in = num!(u64)?,
                "thinning" => cfg.thinning = num!(u64)?,
                "snapshot_every" => cfg.snapshot_every = num!(u64)?,
                "seed" => cfg.seed = num!(u64)?,
                "boundary" | "bc" => cfg.boundary = value.clone(),
                "s_grid" => cfg.s_grid = parse_grid(&value).map_err(|w| bad(&w))?,
                "z_grid" => cfg.z_grid = parse_grid(&value).map_err(|w| bad(&w))?,
                "core_margin" => cfg.core_margin = Some(num!(i32)?),
                "theta1_delta_lower" => cfg.theta1_delta_lower = Some(num!(f64)?),
                "lmax" => cfg.lmax = num!(u64)? as usize,
                "tau" => cfg.tau = Some(num!(f64)?),
                "l0" => cfg.l0 = Some(num!(u64)?),
                "samples" => cfg.samples = num!(u64)? as usize,
                "threads" => cfg.threads = num!(u64)? as usize,
                _ => return Err(bad("unknown key")),
            }
        }
        if saw_z && saw_s {
            return Err(CliError::Config("give either `z` or `s`, not both".into()));
        }
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Fills derived defaults and validates everything a run relies on.
    fn resolve(&mut self) -> Result<(), CliError> {
        if let Some(s) = self.s {
            self.z = s * self.beta;
        }
        if self.delta == 0.0 {
            self.delta = self.r0 / (2.0 * std::f64::consts::SQRT_2);
        }
        if self.correctness_radius == 0 {
            self.correctness_radius = (2.0 * self.r1 / self.delta).ceil() as i32;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.params();
        p.validate()?;
        if self.window_tiles < 1 {
            return Err(CliError::Config("window must be at least one tile".into()));
        }
        if !["free", "wired0", "wired1"].contains(&self.boundary.as_str()) {
            return Err(CliError::Config(format!(
                "boundary must be free, wired0 or wired1, got `{}`",
                self.boundary
            )));
        }
        // Tiling admissibility of the coarse graining.
        let t = crate::contours::Tiling::new(self.delta, self.correctness_radius)?;
        if !t.saturation_ok(&p) {
            return Err(CliError::Domain(format!(
                "tiling violates the saturation assumptions (delta <= R0/(2 sqrt 2), delta L > 2 R1): delta = {}, L = {}",
                self.delta, self.correctness_radius
            )));
        }
        // Interaction-domain admissibility whenever the contour machinery
        // is meaningful (it needs beta > 0).
        if p.beta > 0.0 {
            crate::contours::peierls_constants(&p, self.delta, self.theta1_delta_lower)?;
        }
        Ok(())
    }

    pub fn params(&self) -> QuermassParams {
        QuermassParams {
            theta1: self.theta1,
            theta2: self.theta2,
            beta: self.beta,
            z: self.z,
            radius_min: self.r0,
            radius_max: self.r1,
            radius_law: self.radius_law,
        }
    }

    pub fn window(&self) -> crate::sampler::TileWindow {
        crate::sampler::TileWindow::square(self.window_tiles, self.delta)
    }

    pub fn settings(&self) -> crate::sampler::RunSettings {
        let mut s = crate::sampler::RunSettings::new(self.sweeps, self.burn_in, self.seed);
        s.thinning = self.thinning;
        s.snapshot_every = self.snapshot_every;
        s.core_margin = self.core_margin;
        s
    }

    pub fn boundary_condition(&self) -> crate::sampler::BoundaryCondition {
        match self.boundary.as_str() {
            "wired0" => crate::sampler::BoundaryCondition::SpinWired(0),
            "wired1" => crate::sampler::BoundaryCondition::SpinWired(1),
            _ => crate::sampler::BoundaryCondition::Free,
        }
    }

    /// Stable `key = value` dump embedded in output headers.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("theta1 = {}", self.theta1),
            format!("theta2 = {}", self.theta2),
            format!("beta = {}", self.beta),
            format!("z = {}", self.z),
            format!("R0 = {}", self.r0),
            format!("R1 = {}", self.r1),
            format!(
                "radius_law = {}",
                match self.radius_law {
                    RadiusLaw::Fixed => "fixed",
                    RadiusLaw::Uniform => "uniform",
                }
            ),
            format!("delta = {}", self.delta),
            format!("L = {}", self.correctness_radius),
            format!("window = {}", self.window_tiles),
            format!("sweeps = {}", self.sweeps),
            format!("burn_in = {}", self.burn_in),
            format!("thinning = {}", self.thinning),
            format!("snapshot_every = {}", self.snapshot_every),
            format!("seed = {}", self.seed),
            format!("boundary = {}", self.boundary),
        ];
        if let Some(s) = self.s {
            out.push(format!("s = {s}"));
        }
        for (key, grid) in [("s_grid", &self.s_grid), ("z_grid", &self.z_grid)] {
            if !grid.is_empty() {
                out.push(format!(
                    "{key} = {}",
                    grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
                ));
            }
        }
        out
    }
}

fn parse_grid(value: &str) -> Result<Vec<f64>, String> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err("range grids are start:end:count".into());
        }
        let start: f64 = parts[0].parse().map_err(|_| "bad range start".to_string())?;
        let end: f64 = parts[1].parse().map_err(|_| "bad range end".to_string())?;
        let count: usize = parts[2].parse().map_err(|_| "bad range count".to_string())?;
        if count < 1 {
            return Err("range count must be positive".into());
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        Ok((0..count)
            .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
            .collect())
    } else {
        value
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad grid entry `{v}`")))
            .collect()
    }
}

#[derive(Parser)]
#[command(
    name = "quermass",
    about = "Gibbs point processes with volume, boundary-length and Euler interactions on unions of disks"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Path to the key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel grid nodes (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain and write its trace and summary.
    Sample,
    /// Density-gap scan over the activity grid with pressure curves.
    Scan,
    /// Contour statistics over sampled snapshots.
    Contours {
        /// JSON snapshot file from a previous `sample` run.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Cluster-expansion report: convergence, dimer self-test, beta
    /// conditions.
    Expand,
    /// Contour constants and the minimal rigorous inverse temperature.
    CheckConstants,
}

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    let args = Args::parse();
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(args: Args) -> Result<(), CliError> {
    let path = args
        .config
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    if cfg.threads > 0 {
        // The global pool can only be installed once; later calls fail
        // harmlessly.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    match args.command {
        Command::Sample => cmd_sample(&cfg, &out),
        Command::Scan => cmd_scan(&cfg, &out),
        Command::Contours { snapshots } => cmd_analyze_contours(&cfg, snapshots.as_deref(), &out),
        Command::Expand => cmd_expansion_report(&cfg, &out),
        Command::CheckConstants => cmd_check_constants(&cfg, &out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_config() {
        let cfg = RunConfig::parse("beta = 0\nz = 1\nR0 = 1\nR1 = 1\nwindow = 10\n").unwrap();
        assert_eq!(cfg.z, 1.0);
        assert!((cfg.delta - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(cfg.correctness_radius, 6);
    }

    #[test]
    fn s_resolves_to_activity() {
        let cfg = RunConfig::parse("beta = 4\ns = 1.5\n").unwrap();
        assert_eq!(cfg.z, 6.0);
    }

    #[test]
    fn invalid_theta2_is_rejected_with_diagnostic() {
        let err = RunConfig::parse("theta2 = -0.5\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("theta2"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("beta = 1\nwhatever = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn out_of_domain_theta2_is_a_domain_error() {
        // A legal parameter value beyond the admissible contour threshold.
        let err = RunConfig::parse("beta = 2\nz = 1\ntheta2 = 0.5\n").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn grids_parse_both_forms() {
        assert_eq!(parse_grid("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let g = parse_grid("0:1:5").unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[4], 1.0);
    }

    #[test]
    fn bad_tiling_is_domain_error() {
        let err = RunConfig::parse("beta = 1\nz = 1\ndelta = 0.9\n").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
