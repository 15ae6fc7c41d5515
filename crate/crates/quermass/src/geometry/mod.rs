//! Exact Minkowski functionals of finite unions of closed disks in the plane.
//!
//! The exact route builds the arrangement of circle arcs: intersection points
//! sorted by angle on each circle, the uncovered arcs forming the boundary of
//! the union. Area comes from the divergence-theorem line integral over the
//! oriented boundary, the boundary length from the arc lengths, and the Euler
//! characteristic from the total turning of the boundary (Gauss-Bonnet),
//! which only needs degree-2 algebraic predicates.
//!
//! [`raster`] provides an independent pixel-based oracle used by the tests.

mod arrangement;
pub mod raster;
mod tiles;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use arrangement::Arrangement;
pub use arrangement::BoundaryScratch;
pub use tiles::{tile_functionals, tile_of_point, tile_rect, TileFunctionals};

pub(crate) use tiles::{clip_region, RegionClip};


use crate::lattice::Site;

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// A closed disk, the grain of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(x: f64, y: f64, radius: f64) -> Disk {
        Disk {
            center: Point::new(x, y),
            radius,
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.dist2(self.center) <= self.radius * self.radius
    }
}

/// A finite union of closed disks; duplicates are permitted and the derived
/// functionals do not depend on the ordering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiskUnion {
    pub disks: Vec<Disk>,
}

impl DiskUnion {
    pub fn new(disks: Vec<Disk>) -> DiskUnion {
        DiskUnion { disks }
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    /// Closed membership in the union.
    pub fn contains(&self, p: Point) -> bool {
        self.disks.iter().any(|d| d.contains(p))
    }
}

/// The triple (area, boundary length, Euler characteristic) of a disk union.
///
/// `euler` is the number of connected components minus the number of holes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiValues {
    pub volume: f64,
    pub surface: f64,
    pub euler: i64,
}

impl MinkowskiValues {
    pub const ZERO: MinkowskiValues = MinkowskiValues {
        volume: 0.0,
        surface: 0.0,
        euler: 0,
    };
}

/// One uncovered circular arc of the union boundary. Arcs are always stored
/// counterclockwise on their own circle (`end > start`), which is the
/// orientation leaving the union on the left; `ccw` records it explicitly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryArc {
    /// Index into the deduplicated disk list of [`BoundaryArcs`].
    pub disk: usize,
    /// Start angle in radians, in [0, 2*pi).
    pub start: f64,
    /// End angle, with `end > start` (a full circle spans 2*pi).
    pub end: f64,
    pub ccw: bool,
}

impl BoundaryArc {
    pub fn angular_width(&self) -> f64 {
        self.end - self.start
    }
}

/// The decomposition of the boundary of a disk union into circular arcs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryArcs {
    /// Deduplicated disks the arc indices refer to.
    pub disks: Vec<Disk>,
    pub arcs: Vec<BoundaryArc>,
}

impl BoundaryArcs {
    /// Total length of the boundary; equals the `surface` functional.
    pub fn total_length(&self) -> f64 {
        self.arcs
            .iter()
            .map(|a| self.disks[a.disk].radius * a.angular_width())
            .sum()
    }
}

/// Numeric tolerances of the arrangement construction.
#[derive(Debug, Clone, Copy)]
pub struct GeometryOptions {
    /// Coincidence threshold for deduplicating disks, in squared-distance
    /// units applied to both centers and radii.
    pub coincidence_eps_sq: f64,
    /// Relative margin on r^2 deciding whether a probe point lies strictly
    /// inside a disk.
    pub coverage_rel_eps: f64,
    /// Absolute tolerance used to identify coinciding arc endpoints.
    pub vertex_pos_eps: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions {
            coincidence_eps_sq: 1e-12,
            coverage_rel_eps: 1e-10,
            vertex_pos_eps: 1e-9,
        }
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("disk {index} has non-positive radius {radius}")]
    InvalidRadius { index: usize, radius: f64 },
    #[error("degenerate arrangement: {0}")]
    DegenerateArrangement(String),
    #[error("invalid pixel size {0} for raster oracle")]
    InvalidPixel(f64),
    #[error("invalid tile side {0}")]
    InvalidTileSide(f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Exact area, boundary length and Euler characteristic of the union.
pub fn minkowski_functionals(u: &DiskUnion) -> Result<MinkowskiValues> {
    minkowski_functionals_with(u, &GeometryOptions::default())
}

pub fn minkowski_functionals_with(
    u: &DiskUnion,
    opts: &GeometryOptions,
) -> Result<MinkowskiValues> {
    let arr = Arrangement::build(&u.disks, opts)?;
    arr.global_functionals()
}

/// The uncovered circular arcs forming the boundary of the union.
pub fn boundary_arcs(u: &DiskUnion) -> Result<BoundaryArcs> {
    boundary_arcs_with(u, &GeometryOptions::default())
}

pub fn boundary_arcs_with(u: &DiskUnion, opts: &GeometryOptions) -> Result<BoundaryArcs> {
    let arr = Arrangement::build(&u.disks, opts)?;
    Ok(arr.boundary_arcs())
}

/// Number of connected components of the union, from the overlap graph of
/// the disks (two closed disks are linked iff they intersect).
pub fn component_count(u: &DiskUnion) -> usize {
    let n = u.disks.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let rsum = u.disks[i].radius + u.disks[j].radius;
            if u.disks[i].center.dist2(u.disks[j].center) <= rsum * rsum {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Writes the line-oriented configuration dump: one `x y r` per line under
/// the header `# quermass-config d=2`.
pub fn write_disks<W: std::io::Write>(w: &mut W, disks: &[Disk]) -> std::io::Result<()> {
    writeln!(w, "# quermass-config d=2")?;
    for d in disks {
        writeln!(w, "{} {} {}", d.center.x, d.center.y, d.radius)?;
    }
    Ok(())
}

/// Parses the `x y r` configuration dump format.
pub fn read_disks(text: &str) -> std::result::Result<Vec<Disk>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(format!("line {}: expected `x y r`", lineno + 1));
        }
        let parse = |s: &str| -> std::result::Result<f64, String> {
            s.parse::<f64>()
                .map_err(|e| format!("line {}: {}", lineno + 1, e))
        };
        out.push(Disk::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
    }
    Ok(out)
}

/// Per-tile functionals of the union for a batch of tiles, sharing one
/// arrangement pass.
pub fn tile_functionals_batch(
    u: &DiskUnion,
    tiles: &[Site],
    delta: f64,
) -> Result<Vec<TileFunctionals>> {
    if !(delta > 0.0) {
        return Err(GeometryError::InvalidTileSide(delta));
    }
    let opts = GeometryOptions::default();
    let arr = Arrangement::build(&u.disks, &opts)?;
    tiles
        .iter()
        .map(|&t| tiles::clip_tile(&arr, t, delta, &opts))
        .collect()
}
