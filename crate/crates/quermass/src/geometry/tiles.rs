//! Functionals of the union restricted to lattice tiles.
//!
//! Tiles are the half-open squares `[-d/2, d/2)^2` translated by `i*d`. The
//! per-tile surface is the plain boundary length inside the half-open tile
//! (the boundary of a disk union is a union of circular arcs and never
//! contains a straight segment of a tile edge, so the lower-dimensional
//! facet correction for the surface vanishes identically). The per-tile
//! Euler term alternates over the facets owned by the tile: the closed tile
//! itself, its left and bottom closed edges, and its lower-left corner.
//! Each closed facet is owned by the unique tile whose half-open square
//! contains its lexicographically minimal point, so summing the per-tile
//! values over all tiles telescopes exactly to the global functionals.
//!
//! The Euler characteristic of the clipped region is again total boundary
//! turning / 2*pi, with straight pieces contributing no curvature and tile
//! corners inside the union contributing a right angle.

use super::arrangement::{
    angle_point, angle_tangent, vertex_turning, Arrangement, PieceEnd,
};
use super::{Disk, DiskUnion, GeometryError, GeometryOptions, Point, Result};
use crate::lattice::Site;

const TAU: f64 = std::f64::consts::TAU;

/// Per-tile restriction of the three functionals. `euler` is the alternating
/// facet sum, not the Euler characteristic of the clipped set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileFunctionals {
    pub volume: f64,
    pub surface: f64,
    pub euler: i64,
}

impl TileFunctionals {
    pub const ZERO: TileFunctionals = TileFunctionals {
        volume: 0.0,
        surface: 0.0,
        euler: 0,
    };
}

/// The closed square of tile `i`: `[i*d - d/2, i*d + d/2]` per axis.
pub fn tile_rect(tile: Site, delta: f64) -> (f64, f64, f64, f64) {
    let x0 = (tile.0 as f64 - 0.5) * delta;
    let y0 = (tile.1 as f64 - 0.5) * delta;
    (x0, y0, x0 + delta, y0 + delta)
}

/// The unique half-open tile containing `p`.
pub fn tile_of_point(p: Point, delta: f64) -> Site {
    Site(
        (p.x / delta + 0.5).floor() as i32,
        (p.y / delta + 0.5).floor() as i32,
    )
}

/// Volume, surface and Euler contribution of one tile.
pub fn tile_functionals(u: &DiskUnion, tile: Site, delta: f64) -> Result<(f64, f64, i64)> {
    if !(delta > 0.0) {
        return Err(GeometryError::InvalidTileSide(delta));
    }
    let opts = GeometryOptions::default();
    let arr = Arrangement::build(&u.disks, &opts)?;
    let t = clip_tile(&arr, tile, delta, &opts)?;
    Ok((t.volume, t.surface, t.euler))
}

/// Directed edges of the rectangle, counterclockwise (interior on the left):
/// bottom, right, top, left.
fn rect_edges(rect: (f64, f64, f64, f64)) -> [(Point, (f64, f64), f64); 4] {
    let (x0, y0, x1, y1) = rect;
    [
        (Point::new(x0, y0), (1.0, 0.0), x1 - x0),
        (Point::new(x1, y0), (0.0, 1.0), y1 - y0),
        (Point::new(x1, y1), (-1.0, 0.0), x1 - x0),
        (Point::new(x0, y1), (0.0, -1.0), y1 - y0),
    ]
}

fn in_rect(p: Point, rect: (f64, f64, f64, f64)) -> bool {
    p.x >= rect.0 && p.x <= rect.2 && p.y >= rect.1 && p.y <= rect.3
}

/// Angles at which the circle crosses the rectangle boundary.
fn circle_rect_crossings(d: &Disk, rect: (f64, f64, f64, f64)) -> Vec<f64> {
    let (x0, y0, x1, y1) = rect;
    let (cx, cy, r) = (d.center.x, d.center.y, d.radius);
    let mut out = Vec::new();
    for x in [x0, x1] {
        let u = (x - cx) / r;
        if u.abs() < 1.0 {
            let t = u.acos();
            for tt in [t, TAU - t] {
                let y = cy + r * tt.sin();
                if (y0..=y1).contains(&y) {
                    out.push(tt);
                }
            }
        }
    }
    for y in [y0, y1] {
        let u = (y - cy) / r;
        if u.abs() < 1.0 {
            let t = u.asin();
            for tt in [t.rem_euclid(TAU), (std::f64::consts::PI - t).rem_euclid(TAU)] {
                let x = cx + r * tt.cos();
                if (x0..=x1).contains(&x) {
                    out.push(tt);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

/// Closed coverage intervals of a directed edge by the disks, merged.
fn edge_intervals(
    start: Point,
    dir: (f64, f64),
    len: f64,
    disks: &[Disk],
    active: &[usize],
    eps: f64,
) -> Vec<(f64, f64)> {
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for &i in active {
        let d = &disks[i];
        // Signed distance of the center from the edge line and the chord.
        let wx = d.center.x - start.x;
        let wy = d.center.y - start.y;
        let along = wx * dir.0 + wy * dir.1;
        let perp = wx * -dir.1 + wy * dir.0;
        let h2 = d.radius * d.radius - perp * perp;
        if h2 < 0.0 {
            continue;
        }
        let h = h2.sqrt();
        let lo = (along - h).max(0.0);
        let hi = (along + h).min(len);
        if hi >= lo {
            raw.push((lo, hi));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + eps => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

struct ClipVertexIndex {
    eps: f64,
    verts: Vec<(Point, Vec<PieceEnd>)>,
}

impl ClipVertexIndex {
    fn push(&mut self, p: Point, end: PieceEnd) {
        for (q, ends) in self.verts.iter_mut() {
            if q.dist2(p) <= self.eps * self.eps {
                ends.push(end);
                return;
            }
        }
        self.verts.push((p, vec![end]));
    }
}

/// A clip of the arrangement to an arbitrary rectangle: area, boundary
/// length and Euler characteristic of the intersection, plus the merged
/// coverage intervals of the four directed edges (bottom, right, top,
/// left, counterclockwise), for facet bookkeeping by the callers.
#[derive(Debug, Clone)]
pub(crate) struct RegionClip {
    pub volume: f64,
    pub arc_length: f64,
    pub chi: i64,
    pub edge_cover: [Vec<(f64, f64)>; 4],
}

/// Clip the arrangement to one tile and evaluate the tile functionals,
/// alternating over the facets the tile owns (left and bottom closed
/// edges, lower-left corner).
pub(crate) fn clip_tile(
    arr: &Arrangement,
    tile: Site,
    delta: f64,
    opts: &GeometryOptions,
) -> Result<TileFunctionals> {
    let rect = tile_rect(tile, delta);
    let clip = clip_region(arr, rect, opts)?;
    let eps = opts.vertex_pos_eps;
    let comp_bottom = clip.edge_cover[0].len() as i64;
    let comp_left = clip.edge_cover[3].len() as i64;
    let corner_ll = clip.edge_cover[0]
        .first()
        .map(|&(lo, _)| lo <= eps)
        .unwrap_or(false) as i64;
    Ok(TileFunctionals {
        volume: clip.volume,
        surface: clip.arc_length,
        euler: clip.chi - comp_bottom - comp_left + corner_ll,
    })
}

/// Clip the arrangement to a rectangle.
pub(crate) fn clip_region(
    arr: &Arrangement,
    rect: (f64, f64, f64, f64),
    opts: &GeometryOptions,
) -> Result<RegionClip> {
    let (x0, y0, x1, y1) = rect;
    let half_diag = 0.5 * ((x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0)).sqrt();
    let center = Point::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));

    // Disks whose bounding box meets the closed tile.
    let active: Vec<usize> = arr
        .disks
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            d.center.x + d.radius >= x0
                && d.center.x - d.radius <= x1
                && d.center.y + d.radius >= y0
                && d.center.y - d.radius <= y1
        })
        .map(|(i, _)| i)
        .collect();
    if active.is_empty() {
        return Ok(RegionClip {
            volume: 0.0,
            arc_length: 0.0,
            chi: 0,
            edge_cover: [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
        });
    }
    // Saturated rectangle: entirely inside a single disk.
    for &i in &active {
        let d = &arr.disks[i];
        if center.dist(d.center) + half_diag < d.radius * (1.0 - opts.coverage_rel_eps) {
            return Ok(RegionClip {
                volume: (x1 - x0) * (y1 - y0),
                arc_length: 0.0,
                chi: 1,
                edge_cover: [
                    vec![(0.0, x1 - x0)],
                    vec![(0.0, y1 - y0)],
                    vec![(0.0, x1 - x0)],
                    vec![(0.0, y1 - y0)],
                ],
            });
        }
    }

    let eps = opts.vertex_pos_eps;
    let mut verts = ClipVertexIndex {
        eps,
        verts: Vec::new(),
    };
    let n = arr.disks.len();
    let mut volume = 0.0;
    let mut surface = 0.0;
    let mut turning = 0.0;

    // Arc pieces inside the tile.
    for a in &arr.arcs {
        let d = &arr.disks[a.disk];
        if d.center.x + d.radius < x0
            || d.center.x - d.radius > x1
            || d.center.y + d.radius < y0
            || d.center.y - d.radius > y1
        {
            continue;
        }
        let crossings = circle_rect_crossings(d, rect);
        let mut cuts: Vec<f64> = vec![a.t0];
        for &c in &crossings {
            for k in -1..=1 {
                let t = c + TAU * k as f64;
                if t > a.t0 + 1e-12 && t < a.t1 - 1e-12 {
                    cuts.push(t);
                }
            }
        }
        cuts.push(a.t1);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 - t0 < 1e-12 {
                continue;
            }
            let mid = angle_point(d, 0.5 * (t0 + t1));
            if !in_rect(mid, rect) {
                continue;
            }
            volume += 0.5
                * (d.radius * d.center.x * (t1.sin() - t0.sin())
                    - d.radius * d.center.y * (t1.cos() - t0.cos())
                    + d.radius * d.radius * (t1 - t0));
            surface += d.radius * (t1 - t0);
            turning += t1 - t0;
            if a.is_full && (t1 - t0 - TAU).abs() < 1e-9 {
                continue; // closed loop inside the tile
            }
            verts.push(
                angle_point(d, t0),
                PieceEnd {
                    circle: a.disk,
                    tangent: angle_tangent(t0),
                    outgoing: true,
                },
            );
            verts.push(
                angle_point(d, t1),
                PieceEnd {
                    circle: a.disk,
                    tangent: angle_tangent(t1),
                    outgoing: false,
                },
            );
        }
    }

    // Straight pieces along the tile boundary, counterclockwise.
    let edges = rect_edges(rect);
    let mut edge_cover: [Vec<(f64, f64)>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (k, (start, dir, len)) in edges.iter().enumerate() {
        edge_cover[k] = edge_intervals(*start, *dir, *len, &arr.disks, &active, eps);
        for &(lo, hi) in &edge_cover[k] {
            if hi - lo < eps {
                continue;
            }
            let p0 = Point::new(start.x + lo * dir.0, start.y + lo * dir.1);
            let p1 = Point::new(start.x + hi * dir.0, start.y + hi * dir.1);
            volume += 0.5 * (p0.x * p1.y - p0.y * p1.x);
            verts.push(
                p0,
                PieceEnd {
                    circle: n + k,
                    tangent: *dir,
                    outgoing: true,
                },
            );
            verts.push(
                p1,
                PieceEnd {
                    circle: n + k,
                    tangent: *dir,
                    outgoing: false,
                },
            );
        }
    }

    if verts.verts.is_empty() && turning == 0.0 {
        return Ok(RegionClip {
            volume: 0.0,
            arc_length: 0.0,
            chi: 0,
            edge_cover,
        });
    }

    let ends: Vec<Vec<PieceEnd>> = verts.verts.into_iter().map(|(_, e)| e).collect();
    turning += vertex_turning(&ends)?;
    let chi = turning / TAU;
    let chi_closed = chi.round();
    if (chi - chi_closed).abs() > 0.25 {
        return Err(GeometryError::DegenerateArrangement(format!(
            "rectangle clip turning {chi} is not close to an integer"
        )));
    }

    Ok(RegionClip {
        volume,
        arc_length: surface,
        chi: chi_closed as i64,
        edge_cover,
    })
}
