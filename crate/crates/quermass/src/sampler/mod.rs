//! Finite-volume Gibbs sampling of the model.
//!
//! The chain targets the unnormalized density `z^N exp(-beta H)` with
//! respect to the Poisson process on the tile window, where `H` is the full
//! Hamiltonian under the free and outer boundary conditions and the
//! tile-restricted sum over the window sites under the spin-wired ones,
//! which additionally condition every interior-boundary tile to carry the
//! wired spin (moves violating the indicator are rejected). Moves are
//! birth, death and Gaussian translation; energy differences are computed
//! locally from the disks within interaction range, with per-tile
//! corrections for halo mass spilling outside the window in the
//! tile-restricted case.

mod estimators;
#[cfg(test)]
mod tests;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use estimators::{
    density_gap_scan, derive_seed, estimate_core_density, estimate_density, estimate_energy_mean,
    estimate_pressure_curve, PressureAnchor, PressureCurve, ScanResult, ScanRow,
};

use crate::contours::{ContourError, LatticeBox, Spin};
use crate::geometry::{
    clip_region, tile_of_point, Arrangement, BoundaryScratch, GeometryError, GeometryOptions,
    Point, RegionClip,
};
use crate::lattice::Site;
use crate::model::{Configuration, MarkedPoint, ModelError, QuermassParams, Window};

/// A window made of whole tiles: the sites and the tile side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileWindow {
    pub tiles: LatticeBox,
    pub delta: f64,
}

impl TileWindow {
    pub fn square(side: i32, delta: f64) -> TileWindow {
        TileWindow {
            tiles: LatticeBox::square(side),
            delta,
        }
    }

    /// The continuous region covered by the tiles.
    pub fn rect(&self) -> Window {
        Window::new(
            (self.tiles.x0 as f64 - 0.5) * self.delta,
            (self.tiles.y0 as f64 - 0.5) * self.delta,
            (self.tiles.x1 as f64 + 0.5) * self.delta,
            (self.tiles.y1 as f64 + 0.5) * self.delta,
        )
    }

    pub fn area(&self) -> f64 {
        self.tiles.len() as f64 * self.delta * self.delta
    }

    pub fn site_count(&self) -> usize {
        self.tiles.len()
    }

    /// Sites within Euclidean distance `l + 1` of the complement: the
    /// constrained band of the wired measures.
    pub fn interior_boundary(&self, l: i32) -> Vec<Site> {
        self.tiles.interior_boundary(l)
    }

    /// Bulk box for core-density estimates: tiles deeper than `margin`.
    pub fn core_box(&self, margin: i32) -> LatticeBox {
        LatticeBox::new(
            self.tiles.x0 + margin,
            self.tiles.y0 + margin,
            self.tiles.x1 - margin,
            self.tiles.y1 - margin,
        )
    }
}

/// Boundary condition of the finite-volume measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Free boundary: the full Hamiltonian of the window configuration.
    Free,
    /// Conditioning on a fixed outer configuration.
    Outer(Configuration),
    /// Every interior-boundary tile carries the given spin; the energy is
    /// the tile-restricted sum over the window sites.
    SpinWired(Spin),
}

impl BoundaryCondition {
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::Outer(_) => "outer",
            BoundaryCondition::SpinWired(0) => "wired0",
            BoundaryCondition::SpinWired(_) => "wired1",
        }
    }
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("window smaller than one tile")]
    WindowTooSmall,
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("constraint violated at sweep {sweep}: {what}")]
    ConstraintViolated { sweep: u64, what: String },
    #[error("cached energy drifted from recomputation: cached {cached}, fresh {fresh}")]
    EnergyDrift { cached: f64, fresh: f64 },
    #[error("insufficient samples: need at least {needed} batches, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Contour(#[from] ContourError),
}

/// Chain settings; a sweep performs roughly `z |window|` proposals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    /// Relative weights of birth / death / translate proposals.
    pub proposal_weights: (f64, f64, f64),
    /// Record a configuration snapshot every this many sweeps (0 = never).
    pub snapshot_every: u64,
    /// Recompute the cached energy from scratch this often.
    pub revalidate_every: u64,
    /// Core margin in tiles for bulk densities; the default keeps the
    /// constrained band plus the interaction range out of the core.
    pub core_margin: Option<i32>,
}

impl RunSettings {
    pub fn new(sweeps: u64, burn_in: u64, seed: u64) -> RunSettings {
        RunSettings {
            sweeps,
            burn_in,
            thinning: 1,
            seed,
            proposal_weights: (0.35, 0.35, 0.30),
            snapshot_every: 0,
            revalidate_every: 512,
            core_margin: None,
        }
    }

    fn validate(&self) -> Result<(), SamplerError> {
        if self.sweeps == 0 {
            return Err(SamplerError::InvalidSettings("need at least one sweep".into()));
        }
        if self.burn_in >= self.sweeps {
            return Err(SamplerError::InvalidSettings(
                "burn-in must be smaller than the sweep count".into(),
            ));
        }
        if self.thinning == 0 {
            return Err(SamplerError::InvalidSettings("thinning must be positive".into()));
        }
        let (b, d, t) = self.proposal_weights;
        if !(b >= 0.0 && d >= 0.0 && t >= 0.0 && b + d + t > 0.0) {
            return Err(SamplerError::InvalidSettings("bad proposal weights".into()));
        }
        Ok(())
    }
}

/// One recorded sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: u64,
    pub n_points: usize,
    pub n_core: usize,
    pub energy: f64,
    pub acc_birth: f64,
    pub acc_death: f64,
    pub acc_move: f64,
}

/// Recorded output of one chain; reproducible from `(seed, params)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub snapshots: Vec<(u64, Configuration)>,
    pub window_area: f64,
    pub core_area: f64,
    pub seed: u64,
    pub boundary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Birth = 0,
    Death = 1,
    Translate = 2,
}

/// A fully drawn proposal, public so acceptance ratios can be validated
/// against direct density evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Proposal {
    Birth(MarkedPoint),
    /// Index of the point to delete; `usize::MAX` marks the empty-state
    /// no-op proposal.
    Death(usize),
    Translate(usize, Point),
}

struct NeighborGrid {
    cell: f64,
    cells: std::collections::HashMap<(i32, i32), Vec<u32>>,
}

impl NeighborGrid {
    fn new(cell: f64) -> NeighborGrid {
        NeighborGrid {
            cell,
            cells: std::collections::HashMap::new(),
        }
    }

    fn key(&self, p: Point) -> (i32, i32) {
        (
            (p.x / self.cell).floor() as i32,
            (p.y / self.cell).floor() as i32,
        )
    }

    fn insert(&mut self, p: Point, idx: u32) {
        self.cells.entry(self.key(p)).or_default().push(idx);
    }

    fn remove(&mut self, p: Point, idx: u32) {
        let key = self.key(p);
        let v = self.cells.get_mut(&key).expect("grid cell exists");
        let pos = v.iter().position(|&i| i == idx).expect("index in cell");
        v.swap_remove(pos);
    }

    fn reindex(&mut self, p: Point, old: u32, new: u32) {
        let key = self.key(p);
        let v = self.cells.get_mut(&key).expect("grid cell exists");
        let pos = v.iter().position(|&i| i == old).expect("index in cell");
        v[pos] = new;
    }

    /// Candidate indices within `radius` of `p` (superset by cells).
    fn query(&self, p: Point, radius: f64, out: &mut Vec<u32>) {
        out.clear();
        let r = (radius / self.cell).ceil() as i32;
        let (kx, ky) = self.key(p);
        for dx in -r..=r {
            for dy in -r..=r {
                if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                    out.extend_from_slice(v);
                }
            }
        }
    }
}

/// The live state of one chain.
pub struct ChainState {
    pub params: QuermassParams,
    pub window: TileWindow,
    pub bc: BoundaryCondition,
    pub proposal_weights: (f64, f64, f64),
    points: Vec<MarkedPoint>,
    grid: NeighborGrid,
    outer: Vec<MarkedPoint>,
    outer_grid: NeighborGrid,
    /// Occupancy count per window tile, row-major over the tile box.
    occupancy: Vec<u32>,
    /// Interior-boundary membership per window tile.
    band: Vec<bool>,
    energy: f64,
    rng: ChaCha8Rng,
    pub step_count: u64,
    correctness_radius: i32,
    opts: GeometryOptions,
    scratch: Vec<u32>,
    boundary_scratch: BoundaryScratch,
}

impl ChainState {
    pub fn new(
        params: &QuermassParams,
        window: TileWindow,
        bc: BoundaryCondition,
        seed: u64,
    ) -> Result<ChainState, SamplerError> {
        params.validate()?;
        if window.tiles.is_empty() {
            return Err(SamplerError::WindowTooSmall);
        }
        if !(window.delta > 0.0) {
            return Err(SamplerError::InvalidSettings("tile side must be positive".into()));
        }
        let l = (2.0 * params.radius_max / window.delta).ceil() as i32;
        let rect = window.rect();
        let range = params.interaction_range();
        let mut outer = Vec::new();
        if let BoundaryCondition::Outer(cfg) = &bc {
            outer = cfg
                .points
                .iter()
                .copied()
                .filter(|q| rect.distance(q.position) <= range && !rect.contains(q.position))
                .collect();
        }
        let cell = range.max(window.delta);
        let mut outer_grid = NeighborGrid::new(cell);
        for (i, q) in outer.iter().enumerate() {
            outer_grid.insert(q.position, i as u32);
        }
        let mut band = vec![false; window.site_count()];
        for s in window.interior_boundary(l) {
            band[window_index(&window, s)] = true;
        }
        let mut state = ChainState {
            params: *params,
            window,
            bc,
            proposal_weights: (0.35, 0.35, 0.30),
            points: Vec::new(),
            grid: NeighborGrid::new(cell),
            outer,
            outer_grid,
            occupancy: vec![0; window.site_count()],
            band,
            energy: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            step_count: 0,
            correctness_radius: l,
            opts: GeometryOptions::default(),
            scratch: Vec::new(),
            boundary_scratch: BoundaryScratch::default(),
        };
        state.initialize()?;
        Ok(state)
    }

    pub fn correctness_radius(&self) -> i32 {
        self.correctness_radius
    }

    /// Start inside the constraint set: empty for the empty-wired chain,
    /// one point per constrained tile plus a Poisson bulk for the
    /// occupied-wired chain, a plain Poisson draw otherwise.
    fn initialize(&mut self) -> Result<(), SamplerError> {
        match self.bc.clone() {
            BoundaryCondition::SpinWired(0) => {}
            BoundaryCondition::SpinWired(_) => {
                let tiles = self.window.tiles;
                for s in tiles.sites() {
                    if !self.band[window_index(&self.window, s)] {
                        continue;
                    }
                    let (x0, y0, x1, y1) = crate::geometry::tile_rect(s, self.window.delta);
                    let q = MarkedPoint::new(
                        self.rng.random_range(x0..x1),
                        self.rng.random_range(y0..y1),
                        self.params.sample_radius(&mut self.rng),
                    );
                    self.push_point(q);
                }
                self.scatter_poisson(true);
            }
            _ => self.scatter_poisson(false),
        }
        self.energy = self.energy_from_scratch()?;
        Ok(())
    }

    fn scatter_poisson(&mut self, skip_band: bool) {
        let rect = self.window.rect();
        let mean = self.params.z * self.window.area();
        let n = sample_poisson(mean, &mut self.rng);
        for _ in 0..n {
            let q = MarkedPoint::new(
                self.rng.random_range(rect.x0..rect.x1),
                self.rng.random_range(rect.y0..rect.y1),
                self.params.sample_radius(&mut self.rng),
            );
            let tile = tile_of_point(q.position, self.window.delta);
            if skip_band && self.band[window_index(&self.window, tile)] {
                continue;
            }
            self.push_point(q);
        }
    }

    fn push_point(&mut self, q: MarkedPoint) {
        let idx = self.points.len() as u32;
        self.points.push(q);
        self.grid.insert(q.position, idx);
        let tile = tile_of_point(q.position, self.window.delta);
        self.occupancy[window_index(&self.window, tile)] += 1;
    }

    fn remove_point(&mut self, idx: usize) -> MarkedPoint {
        let q = self.points[idx];
        let last = self.points.len() - 1;
        self.grid.remove(q.position, idx as u32);
        if idx != last {
            let moved = self.points[last];
            self.grid.reindex(moved.position, last as u32, idx as u32);
        }
        self.points.swap_remove(idx);
        let tile = tile_of_point(q.position, self.window.delta);
        self.occupancy[window_index(&self.window, tile)] -= 1;
        q
    }

    /// Removes every live point; scaffolding for hand-built states. The
    /// cached energy is refreshed on the next from-scratch evaluation.
    pub fn clear_points(&mut self) {
        while !self.points.is_empty() {
            self.remove_point(0);
        }
    }

    /// Inserts a point directly, bypassing the dynamics; scaffolding for
    /// hand-built states.
    pub fn insert_point(&mut self, q: MarkedPoint) {
        self.push_point(q);
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.points.clone())
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn tile_restricted(&self) -> bool {
        matches!(self.bc, BoundaryCondition::SpinWired(_))
    }

    /// Target energy recomputed from scratch.
    pub fn energy_from_scratch(&self) -> Result<f64, SamplerError> {
        if self.tile_restricted() {
            let cfg = self.configuration();
            let tiles: Vec<Site> = self.window.tiles.sites().collect();
            let e = crate::model::tile_energies(&cfg, &tiles, self.window.delta, &self.params)?;
            Ok(e.values().sum())
        } else {
            let mut all = self.points.clone();
            all.extend_from_slice(&self.outer);
            let with = crate::model::hamiltonian(&Configuration::new(all), &self.params)?;
            let base =
                crate::model::hamiltonian(&Configuration::new(self.outer.clone()), &self.params)?;
            Ok(with - base)
        }
    }

    /// Disks within interaction reach of a disk at `q` (live and outer),
    /// optionally widened for the boundary-tile corrections; `exclude`
    /// hides one live point.
    fn neighbor_disks(
        &mut self,
        q: MarkedPoint,
        widen: f64,
        exclude: Option<usize>,
    ) -> Vec<crate::geometry::Disk> {
        let radius = q.radius + self.params.radius_max + widen;
        let mut disks = Vec::new();
        let mut scratch = std::mem::take(&mut self.scratch);
        self.grid.query(q.position, radius, &mut scratch);
        for &i in scratch.iter() {
            if exclude == Some(i as usize) {
                continue;
            }
            let p = self.points[i as usize];
            if p.position.dist(q.position) <= q.radius + p.radius + widen {
                disks.push(p.disk());
            }
        }
        self.outer_grid.query(q.position, radius, &mut scratch);
        for &i in scratch.iter() {
            let p = self.outer[i as usize];
            if p.position.dist(q.position) <= q.radius + p.radius + widen {
                disks.push(p.disk());
            }
        }
        self.scratch = scratch;
        disks
    }

    /// Energy difference of inserting `q` into the current state (with
    /// `exclude` hidden), local to the interaction neighbourhood of `q`.
    /// The tile-restricted target sums tile energies over the window
    /// sites, which equals the clipped functionals of the window rectangle
    /// corrected by the facets owned by the outside tiles along the right
    /// and top boundary.
    fn delta_insert(&mut self, q: MarkedPoint, exclude: Option<usize>) -> Result<f64, SamplerError> {
        let disks = self.neighbor_disks(q, 0.0, exclude);
        let (arr_without, arr_with) =
            Arrangement::build_boundary_pair(&disks, q.disk(), &self.opts, &mut self.boundary_scratch)?;
        if self.tile_restricted() {
            // The tile-restricted energy over the window equals the
            // window-clipped functionals plus the facet terms along the
            // window's right/top boundary (owned by outside tiles).
            let r = self.window.rect();
            let clip = (r.x0, r.y0, r.x1, r.y1);
            let c0 = clip_region(&arr_without, clip, &self.opts)?;
            let c1 = clip_region(&arr_with, clip, &self.opts)?;
            let mut delta = (c1.volume - c0.volume)
                + self.params.theta1 * (c1.arc_length - c0.arc_length);
            if self.params.theta2 != 0.0 {
                let chi0 = c0.chi + self.boundary_facet_chi(&c0, clip);
                let chi1 = c1.chi + self.boundary_facet_chi(&c1, clip);
                delta -= self.params.theta2 * (chi1 - chi0) as f64;
            }
            Ok(delta)
        } else {
            let m0 = arr_without.global_functionals()?;
            let m1 = arr_with.global_functionals()?;
            Ok(self.params.combine(m1) - self.params.combine(m0))
        }
    }

    /// Facet terms along the window's right and top boundary visible in a
    /// clip rectangle: `sum over right/top boundary edge segments of
    /// chi(A cap e)` minus `sum over right/top boundary corners of
    /// chi(A cap v)`, restricted to the clip span. The tile-restricted
    /// energy over the window sites equals the window-clipped functionals
    /// plus these corrections (they belong to outside tiles), and clip
    /// differences confined to the span are exact because the inserted
    /// disk's coverage never reaches the span ends.
    fn boundary_facet_chi(&self, c: &RegionClip, clip: (f64, f64, f64, f64)) -> i64 {
        let d = self.window.delta;
        let eps = self.opts.vertex_pos_eps;
        let r = self.window.rect();
        let mut total = 0i64;
        if (clip.2 - r.x1).abs() < 1e-9 {
            // The clip's right edge lies on the window's right boundary;
            // its directed param starts at y = clip.1, with the tile grid
            // at absolute y = r.y0 + k d.
            let offset = clip.1 - r.y0;
            let shifted: Vec<(f64, f64)> = c.edge_cover[1]
                .iter()
                .map(|&(a, b)| (a + offset, b + offset))
                .collect();
            let ny = ((r.y1 - r.y0) / d).round() as i64;
            total += segment_components(&shifted, ny, d, eps);
            total -= covered_grid_points(&shifted, 0, ny, d, eps);
        }
        if (clip.3 - r.y1).abs() < 1e-9 {
            // Top edge, directed right to left from (clip.2, clip.3); the
            // window's top-edge param runs from (r.x1, r.y1).
            let offset = r.x1 - clip.2;
            let shifted: Vec<(f64, f64)> = c.edge_cover[2]
                .iter()
                .map(|&(a, b)| (a + offset, b + offset))
                .collect();
            let nx = ((r.x1 - r.x0) / d).round() as i64;
            total += segment_components(&shifted, nx, d, eps);
            // The window's own top-right corner (param 0) belongs to the
            // right-edge count; skip it here.
            total -= covered_grid_points(&shifted, 1, nx, d, eps);
        }
        total
    }

    /// Draws the next proposal.
    pub fn propose(&mut self) -> Proposal {
        let (wb, wd, wt) = self.proposal_weights;
        let u: f64 = self.rng.random::<f64>() * (wb + wd + wt);
        let rect = self.window.rect();
        if u < wb {
            Proposal::Birth(MarkedPoint::new(
                self.rng.random_range(rect.x0..rect.x1),
                self.rng.random_range(rect.y0..rect.y1),
                self.params.sample_radius(&mut self.rng),
            ))
        } else if u < wb + wd {
            if self.points.is_empty() {
                Proposal::Death(usize::MAX)
            } else {
                Proposal::Death(self.rng.random_range(0..self.points.len()))
            }
        } else {
            if self.points.is_empty() {
                return Proposal::Translate(usize::MAX, Point::new(0.0, 0.0));
            }
            let idx = self.rng.random_range(0..self.points.len());
            let scale = self.params.radius_min / 2.0;
            let normal = rand_distr::Normal::new(0.0, scale).expect("valid scale");
            let dx: f64 = rand_distr::Distribution::sample(&normal, &mut self.rng);
            let dy: f64 = rand_distr::Distribution::sample(&normal, &mut self.rng);
            let p = self.points[idx].position;
            Proposal::Translate(idx, Point::new(p.x + dx, p.y + dy))
        }
    }

    /// Whether applying the proposal would violate the wired indicator.
    fn violates_constraint(&self, proposal: &Proposal) -> bool {
        match (&self.bc, proposal) {
            (BoundaryCondition::SpinWired(0), Proposal::Birth(q)) => {
                let t = tile_of_point(q.position, self.window.delta);
                self.band[window_index(&self.window, t)]
            }
            (BoundaryCondition::SpinWired(0), Proposal::Translate(_, to)) => {
                let t = tile_of_point(*to, self.window.delta);
                self.band[window_index(&self.window, t)]
            }
            (BoundaryCondition::SpinWired(s), Proposal::Death(idx)) if *s != 0 => {
                let t = tile_of_point(self.points[*idx].position, self.window.delta);
                let k = window_index(&self.window, t);
                self.band[k] && self.occupancy[k] == 1
            }
            (BoundaryCondition::SpinWired(s), Proposal::Translate(idx, to)) if *s != 0 => {
                let from = tile_of_point(self.points[*idx].position, self.window.delta);
                let to_t = tile_of_point(*to, self.window.delta);
                let k = window_index(&self.window, from);
                from != to_t && self.band[k] && self.occupancy[k] == 1
            }
            _ => false,
        }
    }

    /// Acceptance ratio and energy difference of a proposal; the ratio is
    /// zero for outright rejections, where the energy difference is unset.
    fn evaluate(&mut self, proposal: &Proposal) -> Result<(f64, f64), SamplerError> {
        let rect = self.window.rect();
        let volume = self.window.area();
        let beta = self.params.beta;
        match *proposal {
            Proposal::Birth(q) => {
                if self.violates_constraint(proposal) {
                    return Ok((0.0, 0.0));
                }
                let dh = if beta == 0.0 {
                    0.0
                } else {
                    self.delta_insert(q, None)?
                };
                let n = self.points.len() as f64;
                Ok((self.params.z * volume / (n + 1.0) * (-beta * dh).exp(), dh))
            }
            Proposal::Death(idx) => {
                if idx == usize::MAX || self.violates_constraint(proposal) {
                    return Ok((0.0, 0.0));
                }
                let q = self.points[idx];
                let dh = if beta == 0.0 {
                    0.0
                } else {
                    -self.delta_insert(q, Some(idx))?
                };
                let n = self.points.len() as f64;
                Ok((n / (self.params.z * volume) * (-beta * dh).exp(), dh))
            }
            Proposal::Translate(idx, to) => {
                if idx == usize::MAX || !rect.contains(to) || self.violates_constraint(proposal) {
                    return Ok((0.0, 0.0));
                }
                if beta == 0.0 {
                    return Ok((1.0, 0.0));
                }
                let q = self.points[idx];
                let moved = MarkedPoint {
                    position: to,
                    radius: q.radius,
                };
                let dh_rem = -self.delta_insert(q, Some(idx))?;
                // Insertion evaluated with the point temporarily removed.
                let removed = self.remove_point(idx);
                let dh_ins = self.delta_insert(moved, None);
                let last = self.points.len();
                self.push_point(removed);
                if idx != last {
                    self.swap_points(idx, last);
                }
                let dh = dh_rem + dh_ins?;
                Ok(((-beta * dh).exp(), dh))
            }
        }
    }

    /// Acceptance ratio of a proposal before the min with one, exposed for
    /// direct detailed-balance checks.
    pub fn acceptance_ratio(&mut self, proposal: &Proposal) -> Result<f64, SamplerError> {
        Ok(self.evaluate(proposal)?.0)
    }

    fn swap_points(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let pa = self.points[a];
        let pb = self.points[b];
        self.grid.reindex(pa.position, a as u32, u32::MAX);
        self.grid.reindex(pb.position, b as u32, a as u32);
        self.grid.reindex(pa.position, u32::MAX, b as u32);
        self.points.swap(a, b);
    }

    fn apply(&mut self, proposal: &Proposal, dh: f64) {
        if self.params.beta != 0.0 {
            self.energy += dh;
        }
        match *proposal {
            Proposal::Birth(q) => self.push_point(q),
            Proposal::Death(idx) => {
                self.remove_point(idx);
            }
            Proposal::Translate(idx, to) => {
                let q = self.remove_point(idx);
                self.push_point(MarkedPoint {
                    position: to,
                    radius: q.radius,
                });
            }
        }
    }

    /// One Metropolis-Hastings step.
    pub fn step(&mut self) -> Result<(MoveKind, bool), SamplerError> {
        self.step_count += 1;
        let proposal = self.propose();
        let kind = match proposal {
            Proposal::Birth(_) => MoveKind::Birth,
            Proposal::Death(_) => MoveKind::Death,
            Proposal::Translate(_, _) => MoveKind::Translate,
        };
        let (ratio, dh) = self.evaluate(&proposal)?;
        let accept = ratio >= 1.0 || (ratio > 0.0 && self.rng.random::<f64>() < ratio);
        if accept {
            self.apply(&proposal, dh);
        }
        Ok((kind, accept))
    }

    /// Hard check of the wired indicator over the constrained band.
    pub fn constraint_holds(&self) -> bool {
        match &self.bc {
            BoundaryCondition::SpinWired(0) => self
                .occupancy
                .iter()
                .zip(&self.band)
                .all(|(&n, &b)| !b || n == 0),
            BoundaryCondition::SpinWired(_) => self
                .occupancy
                .iter()
                .zip(&self.band)
                .all(|(&n, &b)| !b || n > 0),
            _ => true,
        }
    }
}

/// One Metropolis-Hastings step on the chain state.
pub fn mh_step(state: &mut ChainState) -> Result<(MoveKind, bool), SamplerError> {
    state.step()
}

/// Number of (interval, delta-segment) incidences along a directed edge:
/// the total chi of the coverage split at the tile facets.
fn segment_components(intervals: &[(f64, f64)], nseg: i64, delta: f64, eps: f64) -> i64 {
    let mut count = 0;
    for &(a, b) in intervals {
        let k_lo = (((a - eps) / delta).floor() as i64).max(0);
        let k_hi = (((b + eps) / delta).floor() as i64).min(nseg - 1);
        if k_hi >= k_lo {
            count += k_hi - k_lo + 1;
        }
    }
    count
}

/// Number of covered grid points `k * delta` for `k` in `k0..=k1`.
fn covered_grid_points(intervals: &[(f64, f64)], k0: i64, k1: i64, delta: f64, eps: f64) -> i64 {
    let mut count = 0;
    for k in k0..=k1 {
        let t = k as f64 * delta;
        if intervals.iter().any(|&(a, b)| a - eps <= t && t <= b + eps) {
            count += 1;
        }
    }
    count
}

fn window_index(w: &TileWindow, s: Site) -> usize {
    let b = w.tiles;
    let width = (b.x1 - b.x0 + 1) as usize;
    (s.1 - b.y0) as usize * width + (s.0 - b.x0) as usize
}

fn sample_poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = rand_distr::Poisson::new(mean).expect("positive mean");
    rand_distr::Distribution::sample(&dist, rng) as u64
}

/// Runs one chain and records its trace.
pub fn run_chain(
    params: &QuermassParams,
    window: TileWindow,
    bc: BoundaryCondition,
    settings: &RunSettings,
) -> Result<Trace, SamplerError> {
    settings.validate()?;
    let mut state = ChainState::new(params, window, bc, settings.seed)?;
    state.proposal_weights = settings.proposal_weights;
    let l = state.correctness_radius;
    let range_tiles = (params.interaction_range() / window.delta).ceil() as i32;
    let margin = settings.core_margin.unwrap_or(l + 1 + range_tiles);
    let core = window.core_box(margin);
    let core_area = core.len() as f64 * window.delta * window.delta;

    let proposals_per_sweep = (params.z * window.area()).round().max(16.0) as u64;
    let mut trace = Trace {
        rows: Vec::new(),
        snapshots: Vec::new(),
        window_area: window.area(),
        core_area,
        seed: settings.seed,
        boundary: state.bc.label().to_string(),
    };
    for sweep in 1..=settings.sweeps {
        let mut proposed = [0u64; 3];
        let mut accepted = [0u64; 3];
        for _ in 0..proposals_per_sweep {
            let (kind, ok) = state.step()?;
            proposed[kind as usize] += 1;
            accepted[kind as usize] += ok as u64;
        }
        if settings.revalidate_every > 0
            && sweep % settings.revalidate_every == 0
            && params.beta != 0.0
        {
            let fresh = state.energy_from_scratch()?;
            if (fresh - state.energy).abs() > 1e-7 * state.energy.abs().max(1.0) {
                return Err(SamplerError::EnergyDrift {
                    cached: state.energy,
                    fresh,
                });
            }
            state.energy = fresh;
        }
        let recording =
            sweep > settings.burn_in && (sweep - settings.burn_in - 1) % settings.thinning == 0;
        if recording {
            if !state.constraint_holds() {
                return Err(SamplerError::ConstraintViolated {
                    sweep,
                    what: "wired spin indicator".into(),
                });
            }
            let energy = if params.beta == 0.0 {
                state.energy_from_scratch()?
            } else {
                state.energy
            };
            let n_core = state
                .points
                .iter()
                .filter(|p| core.contains(tile_of_point(p.position, window.delta)))
                .count();
            let rate = |a: u64, p: u64| if p == 0 { 0.0 } else { a as f64 / p as f64 };
            trace.rows.push(TraceRow {
                sweep,
                n_points: state.point_count(),
                n_core,
                energy,
                acc_birth: rate(accepted[0], proposed[0]),
                acc_death: rate(accepted[1], proposed[1]),
                acc_move: rate(accepted[2], proposed[2]),
            });
        }
        if settings.snapshot_every > 0
            && sweep > settings.burn_in
            && sweep % settings.snapshot_every == 0
        {
            trace.snapshots.push((sweep, state.configuration()));
        }
    }
    Ok(trace)
}
