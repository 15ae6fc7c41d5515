//! The circle-arc arrangement behind the exact functionals.
//!
//! Construction: deduplicate coincident disks, intersect every pair of
//! circles, sort the intersection angles on each circle and keep the arcs
//! whose midpoint is not strictly covered by another disk. Those arcs are
//! exactly the boundary of the union, each oriented counterclockwise on its
//! own circle (the union lies on the left).
//!
//! The Euler characteristic is the total turning of the oriented boundary
//! divided by 2*pi: arc contributions are their angular widths, and at every
//! vertex the exterior angle between the incoming and outgoing tangent is
//! added. Pinch points coming from tangencies get the exterior angle -pi,
//! the limit of the overlapping case; outward cusps cannot occur on a union
//! of closed disks.

use std::collections::HashMap;

use super::{
    BoundaryArc, BoundaryArcs, Disk, GeometryError, GeometryOptions, MinkowskiValues, Point,
    Result,
};

const TAU: f64 = std::f64::consts::TAU;
const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ArcPiece {
    pub disk: usize,
    pub t0: f64,
    /// End angle; `t1 > t0` and a full circle spans exactly 2*pi.
    pub t1: f64,
    pub is_full: bool,
}

impl ArcPiece {
    pub fn width(&self) -> f64 {
        self.t1 - self.t0
    }
}

pub(crate) struct Arrangement {
    pub disks: Vec<Disk>,
    pub arcs: Vec<ArcPiece>,
    pub opts: GeometryOptions,
}

pub(crate) fn angle_point(d: &Disk, t: f64) -> Point {
    Point::new(d.center.x + d.radius * t.cos(), d.center.y + d.radius * t.sin())
}

/// Counterclockwise unit tangent of the circle at angle `t`.
pub(crate) fn angle_tangent(t: f64) -> (f64, f64) {
    (-t.sin(), t.cos())
}

/// Signed angle from `a` to `b`, with the anti-parallel case resolved to
/// -pi (pinch-point convention for unions).
pub(crate) fn exterior_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    if dot < -1.0 + 1e-9 {
        return -std::f64::consts::PI;
    }
    cross.atan2(dot)
}

fn normalize_angle(t: f64) -> f64 {
    let mut t = t.rem_euclid(TAU);
    if t >= TAU {
        t -= TAU;
    }
    t
}

struct VertexIndex {
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    positions: Vec<Point>,
}

impl VertexIndex {
    fn new(eps: f64) -> Self {
        VertexIndex {
            eps,
            cells: HashMap::new(),
            positions: Vec::new(),
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.eps).floor() as i64, (p.y / self.eps).floor() as i64)
    }

    fn find_or_insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &v in list {
                        if self.positions[v].dist2(p) <= self.eps * self.eps {
                            return v;
                        }
                    }
                }
            }
        }
        let v = self.positions.len();
        self.positions.push(p);
        self.cells.entry((kx, ky)).or_default().push(v);
        v
    }
}

/// One piece-end at a vertex: the tangent of the boundary there and whether
/// the piece starts (outgoing) or ends (incoming) at the vertex.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PieceEnd {
    pub circle: usize,
    pub tangent: (f64, f64),
    pub outgoing: bool,
}

/// Sums exterior angles over a set of vertices given their piece-ends,
/// pairing each incoming end with an outgoing end, preferring a different
/// circle (the crossing rule; at tangency pinches this picks the branch the
/// overlapping limit selects).
pub(crate) fn vertex_turning(ends_by_vertex: &[Vec<PieceEnd>]) -> Result<f64> {
    let mut total = 0.0;
    for ends in ends_by_vertex {
        let mut ins: Vec<PieceEnd> = ends.iter().copied().filter(|e| !e.outgoing).collect();
        let mut outs: Vec<PieceEnd> = ends.iter().copied().filter(|e| e.outgoing).collect();
        if ins.len() != outs.len() {
            return Err(GeometryError::DegenerateArrangement(format!(
                "vertex with {} incoming and {} outgoing boundary pieces",
                ins.len(),
                outs.len()
            )));
        }
        ins.sort_by_key(|e| e.circle);
        outs.sort_by_key(|e| e.circle);
        let mut used = vec![false; outs.len()];
        for e_in in &ins {
            let idx = (0..outs.len())
                .find(|&k| !used[k] && outs[k].circle != e_in.circle)
                .or_else(|| (0..outs.len()).find(|&k| !used[k]))
                .expect("in/out counts match");
            used[idx] = true;
            total += exterior_angle(e_in.tangent, outs[idx].tangent);
        }
    }
    Ok(total)
}

impl Arrangement {
    pub fn build(input: &[Disk], opts: &GeometryOptions) -> Result<Arrangement> {
        for (index, d) in input.iter().enumerate() {
            if !(d.radius > 0.0) || !d.radius.is_finite() || !d.center.x.is_finite() || !d.center.y.is_finite() {
                return Err(GeometryError::InvalidRadius {
                    index,
                    radius: d.radius,
                });
            }
        }

        // Canonical order makes every downstream sum independent of the
        // input permutation, bit for bit.
        let eps = opts.coincidence_eps_sq;
        let disks = canonical_dedup(input, eps);
        let n = disks.len();

        let mut splits: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut covered = vec![false; n];

        for i in 0..n {
            for j in (i + 1)..n {
                let (di, dj) = (disks[i], disks[j]);
                let (ri, rj) = (di.radius, dj.radius);
                let dx = dj.center.x - di.center.x;
                let dy = dj.center.y - di.center.y;
                let rsum = ri + rj;
                if dx.abs() > rsum || dy.abs() > rsum {
                    continue;
                }
                let d2 = dx * dx + dy * dy;
                let rsum2 = rsum * rsum;
                if d2 >= rsum2 - eps {
                    if d2 <= rsum2 + eps {
                        // External tangency: one shared point, recorded on
                        // both circles so the pinch shows up as a vertex.
                        splits[i].push(normalize_angle(dy.atan2(dx)));
                        splits[j].push(normalize_angle((-dy).atan2(-dx)));
                    }
                    continue;
                }
                let rdiff2 = (ri - rj) * (ri - rj);
                if d2 <= rdiff2 + eps {
                    if ri <= rj {
                        covered[i] = true;
                    } else {
                        covered[j] = true;
                    }
                    continue;
                }
                // Proper crossing: two intersection points.
                let d = d2.sqrt();
                let a = (d2 + ri * ri - rj * rj) / (2.0 * d);
                let h = (ri * ri - a * a).max(0.0).sqrt();
                let (ex, ey) = (dx / d, dy / d);
                let (px, py) = (di.center.x + a * ex, di.center.y + a * ey);
                for sgn in [1.0f64, -1.0] {
                    let q = Point::new(px - sgn * h * ey, py + sgn * h * ex);
                    splits[i].push(normalize_angle((q.y - di.center.y).atan2(q.x - di.center.x)));
                    splits[j].push(normalize_angle((q.y - dj.center.y).atan2(q.x - dj.center.x)));
                }
            }
        }

        let mut arcs = Vec::new();
        for i in 0..n {
            if covered[i] {
                continue;
            }
            let angs = &mut splits[i];
            angs.sort_by(f64::total_cmp);
            angs.dedup_by(|a, b| (*a - *b).abs() < ANGLE_EPS);
            if angs.len() >= 2 && angs[0] + TAU - angs[angs.len() - 1] < ANGLE_EPS {
                angs.pop();
            }
            if angs.is_empty() {
                let probe = angle_point(&disks[i], 0.0);
                if !strictly_covered(&disks, probe, i, opts.coverage_rel_eps) {
                    arcs.push(ArcPiece {
                        disk: i,
                        t0: 0.0,
                        t1: TAU,
                        is_full: true,
                    });
                }
                continue;
            }
            let m = angs.len();
            for k in 0..m {
                let t0 = angs[k];
                let t1 = if k + 1 < m { angs[k + 1] } else { angs[0] + TAU };
                if t1 - t0 < ANGLE_EPS {
                    continue;
                }
                let mid = angle_point(&disks[i], 0.5 * (t0 + t1));
                if !strictly_covered(&disks, mid, i, opts.coverage_rel_eps) {
                    arcs.push(ArcPiece {
                        disk: i,
                        t0,
                        t1,
                        is_full: false,
                    });
                }
            }
        }

        Ok(Arrangement {
            disks,
            arcs,
            opts: *opts,
        })
    }

    /// Boundary arcs of `base` and of `base + q` in one pass, built by
    /// per-circle angular-interval merging: every overlapping disk covers
    /// one angular interval of a circle, the intervals are merged
    /// nearest-disk-first with an early exit once the circle is fully
    /// covered, and the complement is exactly the boundary. Exact tangency
    /// pinches are not resolved into vertices here (a null event for
    /// sampled configurations); [`Arrangement::build`] remains the exact
    /// path and periodic revalidation checks this one against it.
    pub fn build_boundary_pair(
        base: &[Disk],
        q: Disk,
        opts: &GeometryOptions,
        scratch: &mut BoundaryScratch,
    ) -> Result<(Arrangement, Arrangement)> {
        let without = Self::build_fast_with(base, opts, scratch)?;
        let mut with_disks = without.disks.clone();
        let q_index = with_disks.len();
        with_disks.push(q);
        let mut with_arcs: Vec<ArcPiece> = Vec::with_capacity(without.arcs.len() + 4);
        let mut idx = 0usize;
        while idx < without.arcs.len() {
            let disk = without.arcs[idx].disk;
            let circle = without.disks[disk];
            let cover = covering_interval(&circle, &q);
            while idx < without.arcs.len() && without.arcs[idx].disk == disk {
                let piece = (without.arcs[idx].t0, without.arcs[idx].t1);
                idx += 1;
                match cover {
                    Cover::Full => {}
                    Cover::None => push_arc(&mut with_arcs, disk, piece.0, piece.1),
                    Cover::Arc(a, b) => {
                        for (t0, t1) in subtract_interval(piece, (a, b)) {
                            push_arc(&mut with_arcs, disk, t0, t1);
                        }
                    }
                }
            }
        }
        // q's own uncovered arcs against the base disks.
        let mut order: Vec<(f64, u32)> = Vec::new();
        for (j, d) in without.disks.iter().enumerate() {
            let dx = d.center.x - q.center.x;
            let dy = d.center.y - q.center.y;
            let rsum = d.radius + q.radius;
            if dx.abs() > rsum || dy.abs() > rsum {
                continue;
            }
            let d2 = dx * dx + dy * dy;
            if d2 < rsum * rsum {
                order.push((d2, j as u32));
            }
        }
        if let Some(pieces) = uncovered_pieces(&q, &mut order, &without.disks) {
            for (t0, t1) in pieces {
                push_arc(&mut with_arcs, q_index, t0, t1);
            }
        }
        with_arcs.sort_by(|a, b| a.disk.cmp(&b.disk).then(a.t0.total_cmp(&b.t0)));
        let with = Arrangement {
            disks: with_disks,
            arcs: with_arcs,
            opts: *opts,
        };
        Ok((without, with))
    }

    /// Interval-merging construction of the boundary arcs.
    #[allow(dead_code)]
    pub fn build_fast(input: &[Disk], opts: &GeometryOptions) -> Result<Arrangement> {
        let mut scratch = BoundaryScratch::default();
        Self::build_fast_with(input, opts, &mut scratch)
    }

    /// [`Arrangement::build_fast`] with reusable scratch buffers; the hot
    /// sampling loop avoids reallocating the overlap table per proposal.
    pub fn build_fast_with(
        input: &[Disk],
        opts: &GeometryOptions,
        scratch: &mut BoundaryScratch,
    ) -> Result<Arrangement> {
        for (index, d) in input.iter().enumerate() {
            if !(d.radius > 0.0) || !d.radius.is_finite() {
                return Err(GeometryError::InvalidRadius {
                    index,
                    radius: d.radius,
                });
            }
        }
        let disks = canonical_dedup(input, opts.coincidence_eps_sq);
        let n = disks.len();
        // Overlap table in compressed rows.
        let counts = &mut scratch.counts;
        counts.clear();
        counts.resize(n + 1, 0u32);
        let pairs = &mut scratch.pairs;
        pairs.clear();
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = disks[j].center.x - disks[i].center.x;
                let dy = disks[j].center.y - disks[i].center.y;
                let rsum = disks[i].radius + disks[j].radius;
                if dx.abs() > rsum || dy.abs() > rsum {
                    continue;
                }
                let d2 = dx * dx + dy * dy;
                if d2 < rsum * rsum {
                    pairs.push((i as u32, j as u32, d2));
                    counts[i + 1] += 1;
                    counts[j + 1] += 1;
                }
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let table = &mut scratch.table;
        table.clear();
        table.resize(pairs.len() * 2, (0.0, 0));
        let cursor = &mut scratch.cursor;
        cursor.clear();
        cursor.extend_from_slice(&counts[..n]);
        for &(i, j, d2) in pairs.iter() {
            table[cursor[i as usize] as usize] = (d2, j);
            cursor[i as usize] += 1;
            table[cursor[j as usize] as usize] = (d2, i);
            cursor[j as usize] += 1;
        }
        let mut arcs = Vec::new();
        for i in 0..n {
            let row = &mut table[counts[i] as usize..counts[i + 1] as usize];
            if let Some(pieces) = uncovered_pieces(&disks[i], row, &disks) {
                for (t0, t1) in pieces {
                    push_arc(&mut arcs, i, t0, t1);
                }
            }
        }
        Ok(Arrangement {
            disks,
            arcs,
            opts: *opts,
        })
    }


    pub fn boundary_arcs(&self) -> BoundaryArcs {
        BoundaryArcs {
            disks: self.disks.clone(),
            arcs: self
                .arcs
                .iter()
                .map(|a| BoundaryArc {
                    disk: a.disk,
                    start: a.t0,
                    end: a.t1,
                    ccw: true,
                })
                .collect(),
        }
    }

    /// Area contribution of one oriented arc via the divergence theorem.
    pub fn green_term(&self, a: &ArcPiece) -> f64 {
        let d = &self.disks[a.disk];
        let (r, cx, cy) = (d.radius, d.center.x, d.center.y);
        0.5 * (r * cx * (a.t1.sin() - a.t0.sin()) - r * cy * (a.t1.cos() - a.t0.cos())
            + r * r * (a.t1 - a.t0))
    }

    pub fn global_functionals(&self) -> Result<MinkowskiValues> {
        if self.disks.is_empty() {
            return Ok(MinkowskiValues::ZERO);
        }
        let mut volume = 0.0;
        let mut surface = 0.0;
        let mut turning = 0.0;
        let mut verts = VertexIndex::new(self.opts.vertex_pos_eps);
        let mut ends: Vec<Vec<PieceEnd>> = Vec::new();
        for a in &self.arcs {
            volume += self.green_term(a);
            surface += self.disks[a.disk].radius * a.width();
            turning += a.width();
            if a.is_full {
                continue;
            }
            let d = &self.disks[a.disk];
            for (t, outgoing) in [(a.t0, true), (a.t1, false)] {
                let v = verts.find_or_insert(angle_point(d, t));
                if v == ends.len() {
                    ends.push(Vec::new());
                }
                ends[v].push(PieceEnd {
                    circle: a.disk,
                    tangent: angle_tangent(t),
                    outgoing,
                });
            }
        }
        turning += vertex_turning(&ends)?;
        let chi = turning / TAU;
        let euler = chi.round();
        if (chi - euler).abs() > 0.25 {
            return Err(GeometryError::DegenerateArrangement(format!(
                "boundary turning {chi} is not close to an integer"
            )));
        }
        Ok(MinkowskiValues {
            volume,
            surface,
            euler: euler as i64,
        })
    }
}

fn strictly_covered(disks: &[Disk], p: Point, exclude: usize, rel_eps: f64) -> bool {
    disks.iter().enumerate().any(|(j, d)| {
        j != exclude && p.dist2(d.center) < d.radius * d.radius * (1.0 - rel_eps)
    })
}

/// Canonical sort plus coincidence deduplication shared by the builders.
fn canonical_dedup(input: &[Disk], eps: f64) -> Vec<Disk> {
    let mut disks: Vec<Disk> = input.to_vec();
    disks.sort_by(|a, b| {
        a.center
            .x
            .total_cmp(&b.center.x)
            .then(a.center.y.total_cmp(&b.center.y))
            .then(a.radius.total_cmp(&b.radius))
    });
    let mut dedup: Vec<Disk> = Vec::with_capacity(disks.len());
    'next: for d in disks {
        for kept in dedup.iter().rev() {
            if (kept.center.x - d.center.x).abs() > 2.0 * eps.sqrt().max(1e-15) {
                break;
            }
            let dr = kept.radius - d.radius;
            if kept.center.dist2(d.center) <= eps && dr * dr <= eps {
                continue 'next;
            }
        }
        dedup.push(d);
    }
    dedup
}

/// The angular interval of a circle covered by one disk.
#[derive(Debug, Clone, Copy)]
enum Cover {
    None,
    Full,
    /// `(start, end)` with `start` in `[0, 2 pi)` and `end > start`.
    Arc(f64, f64),
}

/// Interval of the circle `c` strictly inside the disk `d`.
fn covering_interval(c: &Disk, d: &Disk) -> Cover {
    let dx = d.center.x - c.center.x;
    let dy = d.center.y - c.center.y;
    let rsum = c.radius + d.radius;
    let d2 = dx * dx + dy * dy;
    if d2 >= rsum * rsum {
        return Cover::None;
    }
    if d.radius >= c.radius && d2 <= (d.radius - c.radius) * (d.radius - c.radius) {
        return Cover::Full;
    }
    if c.radius > d.radius && d2 <= (c.radius - d.radius) * (c.radius - d.radius) {
        return Cover::None; // d sits inside c and misses its boundary
    }
    let dist = d2.sqrt();
    let cos_alpha = (d2 + c.radius * c.radius - d.radius * d.radius) / (2.0 * dist * c.radius);
    let alpha = cos_alpha.clamp(-1.0, 1.0).acos();
    if alpha <= ANGLE_EPS {
        return Cover::None;
    }
    let phi = dy.atan2(dx);
    let a = normalize_angle(phi - alpha);
    Cover::Arc(a, a + 2.0 * alpha)
}

/// Uncovered pieces of a circle against overlapping disks, or `None` when
/// the circle is fully covered. The closest few disks are tried first:
/// they cover the widest intervals, so densely packed circles terminate
/// after a handful of trigonometric evaluations.
fn uncovered_pieces(c: &Disk, row: &mut [(f64, u32)], disks: &[Disk]) -> Option<Vec<(f64, f64)>> {
    let lead = 8.min(row.len());
    if lead > 0 {
        row.select_nth_unstable_by(lead - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        row[..lead].sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    let mut merged = IntervalSet::new();
    for &(_, j) in row.iter() {
        match covering_interval(c, &disks[j as usize]) {
            Cover::Full => return None,
            Cover::None => {}
            Cover::Arc(a, b) => {
                merged.insert(a, b);
                if merged.full() {
                    return None;
                }
            }
        }
    }
    Some(merged.complement())
}

/// Reusable buffers of [`Arrangement::build_fast_with`].
#[derive(Default)]
pub struct BoundaryScratch {
    counts: Vec<u32>,
    cursor: Vec<u32>,
    pairs: Vec<(u32, u32, f64)>,
    table: Vec<(f64, u32)>,
}

/// Disjoint sorted angular intervals within `[0, 2 pi)`.
struct IntervalSet {
    iv: Vec<(f64, f64)>,
}

impl IntervalSet {
    fn new() -> IntervalSet {
        IntervalSet { iv: Vec::new() }
    }

    /// Inserts `(start, end)` with `start` in `[0, 2 pi)`, `end > start`,
    /// splitting at the wrap point.
    fn insert(&mut self, start: f64, end: f64) {
        if end > TAU {
            self.insert_linear(start, TAU);
            self.insert_linear(0.0, end - TAU);
        } else {
            self.insert_linear(start, end);
        }
    }

    fn insert_linear(&mut self, a: f64, b: f64) {
        if b - a < ANGLE_EPS {
            return;
        }
        let mut lo = a;
        let mut hi = b;
        let mut k = 0;
        while k < self.iv.len() {
            let (s, e) = self.iv[k];
            if e < lo - ANGLE_EPS {
                k += 1;
                continue;
            }
            if s > hi + ANGLE_EPS {
                break;
            }
            lo = lo.min(s);
            hi = hi.max(e);
            self.iv.remove(k);
        }
        self.iv.insert(
            self.iv.iter().position(|&(s, _)| s > lo).unwrap_or(self.iv.len()),
            (lo, hi),
        );
    }

    fn full(&self) -> bool {
        self.iv.len() == 1 && self.iv[0].0 <= ANGLE_EPS && self.iv[0].1 >= TAU - ANGLE_EPS
    }

    /// Complement pieces, joined across the wrap point so endpoints sit at
    /// genuine crossing vertices; a fully uncovered circle yields one full
    /// piece `(0, 2 pi)`.
    fn complement(&self) -> Vec<(f64, f64)> {
        if self.iv.is_empty() {
            return vec![(0.0, TAU)];
        }
        let mut out = Vec::with_capacity(self.iv.len());
        for w in self.iv.windows(2) {
            if w[1].0 - w[0].1 >= ANGLE_EPS {
                out.push((w[0].1, w[1].0));
            }
        }
        // Wrap gap from the last end around to the first start.
        let last = self.iv[self.iv.len() - 1].1;
        let first = self.iv[0].0;
        if TAU - last >= ANGLE_EPS || first >= ANGLE_EPS {
            let gap = (TAU - last) + first;
            if gap >= ANGLE_EPS {
                out.push((last, last + gap));
            }
        }
        out
    }
}

/// Removes one covering interval (given in normalized circle coordinates)
/// from an arc piece, lifting the cover across the wrap as needed.
fn subtract_interval(piece: (f64, f64), cover: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = vec![piece];
    for k in -1..=1 {
        let ca = cover.0 + TAU * k as f64;
        let cb = cover.1 + TAU * k as f64;
        let mut next = Vec::with_capacity(out.len() + 1);
        for (t0, t1) in out {
            if cb <= t0 + ANGLE_EPS || ca >= t1 - ANGLE_EPS {
                next.push((t0, t1));
                continue;
            }
            if ca > t0 + ANGLE_EPS {
                next.push((t0, ca));
            }
            if cb < t1 - ANGLE_EPS {
                next.push((cb, t1));
            }
        }
        out = next;
    }
    out
}

fn push_arc(arcs: &mut Vec<ArcPiece>, disk: usize, t0: f64, t1: f64) {
    if t1 - t0 < ANGLE_EPS {
        return;
    }
    arcs.push(ArcPiece {
        disk,
        t0,
        t1,
        is_full: t1 - t0 >= TAU - ANGLE_EPS,
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn functionals(disks: Vec<Disk>) -> MinkowskiValues {
        let arr = Arrangement::build(&disks, &GeometryOptions::default()).unwrap();
        arr.global_functionals().unwrap()
    }

    #[test]
    fn single_disk() {
        let m = functionals(vec![Disk::new(0.0, 0.0, 1.0)]);
        assert!((m.volume - std::f64::consts::PI).abs() < 1e-12);
        assert!((m.surface - TAU).abs() < 1e-12);
        assert_eq!(m.euler, 1);
    }

    #[test]
    fn empty_union() {
        let m = functionals(vec![]);
        assert_eq!(m, MinkowskiValues::ZERO);
    }

    #[test]
    fn two_unit_disks_distance_one() {
        let m = functionals(vec![Disk::new(0.0, 0.0, 1.0), Disk::new(1.0, 0.0, 1.0)]);
        let pi = std::f64::consts::PI;
        // Analytic union area: 2*pi - lens, lens = 2*acos(1/2) - sqrt(3)/2.
        let expected_v = 4.0 * pi / 3.0 + 3f64.sqrt() / 2.0;
        let expected_s = 8.0 * pi / 3.0;
        assert!((m.volume - expected_v).abs() < 1e-9, "got {}", m.volume);
        assert!((m.surface - expected_s).abs() < 1e-9);
        assert_eq!(m.euler, 1);
    }

    #[test]
    fn two_unit_disks_monte_carlo_cross_check() {
        // Hit-or-miss oracle for the same union, independent of the
        // arrangement path.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let disks = [Disk::new(0.0, 0.0, 1.0), Disk::new(1.0, 0.0, 1.0)];
        let (x0, y0, x1, y1) = (-1.0, -1.0, 2.0, 1.0);
        let total = 2_000_000u64;
        let mut hit = 0u64;
        for _ in 0..total {
            let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
            if disks.iter().any(|d| d.contains(p)) {
                hit += 1;
            }
        }
        let area_box = (x1 - x0) * (y1 - y0);
        let est = hit as f64 / total as f64 * area_box;
        let exact = 4.0 * std::f64::consts::PI / 3.0 + 3f64.sqrt() / 2.0;
        // 3 sigma of the binomial estimator.
        let p = exact / area_box;
        let sigma = area_box * (p * (1.0 - p) / total as f64).sqrt();
        assert!((est - exact).abs() < 3.0 * sigma, "mc {est} vs exact {exact}");
    }

    #[test]
    fn three_disjoint_disks() {
        let m = functionals(vec![
            Disk::new(0.0, 0.0, 1.0),
            Disk::new(10.0, 0.0, 1.0),
            Disk::new(5.0, 10.0 * 3f64.sqrt() / 2.0, 1.0),
        ]);
        let pi = std::f64::consts::PI;
        assert!((m.volume - 3.0 * pi).abs() < 1e-9);
        assert!((m.surface - 6.0 * pi).abs() < 1e-9);
        assert_eq!(m.euler, 3);
    }

    #[test]
    fn contained_disk_gives_outer_circle_only() {
        let arr = Arrangement::build(
            &[Disk::new(0.0, 0.0, 2.0), Disk::new(0.3, 0.1, 0.5)],
            &GeometryOptions::default(),
        )
        .unwrap();
        let arcs = arr.boundary_arcs();
        assert_eq!(arcs.arcs.len(), 1);
        assert!((arcs.total_length() - 2.0 * TAU).abs() < 1e-12);
        let m = arr.global_functionals().unwrap();
        assert_eq!(m.euler, 1);
        assert!((m.volume - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn coincident_disks_deduplicate() {
        let a = functionals(vec![Disk::new(0.5, -0.25, 1.25); 3]);
        let b = functionals(vec![Disk::new(0.5, -0.25, 1.25)]);
        assert_eq!(a, b);
    }

    #[test]
    fn external_tangency_is_one_component() {
        let m = functionals(vec![Disk::new(0.0, 0.0, 1.0), Disk::new(2.0, 0.0, 1.0)]);
        assert_eq!(m.euler, 1);
        assert!((m.volume - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn internal_tangency_keeps_outer_boundary() {
        let m = functionals(vec![Disk::new(0.0, 0.0, 2.0), Disk::new(1.0, 0.0, 1.0)]);
        assert_eq!(m.euler, 1);
        assert!((m.surface - 2.0 * TAU).abs() < 1e-9);
        assert!((m.volume - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn ring_of_disks_has_a_hole() {
        // Eight overlapping unit disks around a circle of radius 2.5 leave
        // an empty middle: one component, one hole.
        let disks: Vec<Disk> = (0..8)
            .map(|k| {
                let t = TAU * k as f64 / 8.0;
                Disk::new(2.5 * t.cos(), 2.5 * t.sin(), 1.0)
            })
            .collect();
        let m = functionals(disks);
        assert_eq!(m.euler, 0);
    }

    #[test]
    fn three_mutually_tangent_disks_enclose_a_hole() {
        let h = 3f64.sqrt();
        let m = functionals(vec![
            Disk::new(0.0, 0.0, 1.0),
            Disk::new(2.0, 0.0, 1.0),
            Disk::new(1.0, h, 1.0),
        ]);
        assert_eq!(m.euler, 0);
    }

    #[test]
    fn invalid_radius_is_an_error() {
        let r = Arrangement::build(&[Disk::new(0.0, 0.0, 0.0)], &GeometryOptions::default());
        assert!(matches!(r, Err(GeometryError::InvalidRadius { .. })));
    }
}

#[cfg(test)]
mod fast_builder_tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn fast_boundary_matches_exact_builder() {
        let opts = GeometryOptions::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for case in 0..60 {
            let n = rng.random_range(1..40usize);
            let spread = if case % 3 == 0 { 3.0 } else { 6.0 };
            let disks: Vec<Disk> = (0..n)
                .map(|_| {
                    Disk::new(
                        rng.random_range(0.0..spread),
                        rng.random_range(0.0..spread),
                        rng.random_range(0.4..1.2),
                    )
                })
                .collect();
            let exact = Arrangement::build(&disks, &opts).unwrap();
            let fast = Arrangement::build_fast(&disks, &opts).unwrap();
            let me = exact.global_functionals().unwrap();
            let mf = fast.global_functionals().unwrap();
            assert!(
                (me.volume - mf.volume).abs() < 1e-9,
                "case {case}: volume {} vs {}",
                me.volume,
                mf.volume
            );
            assert!((me.surface - mf.surface).abs() < 1e-9, "case {case}");
            assert_eq!(me.euler, mf.euler, "case {case}");
        }
    }

    #[test]
    fn boundary_pair_matches_two_exact_builds() {
        let opts = GeometryOptions::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut scratch = BoundaryScratch::default();
        for _ in 0..40 {
            let n = rng.random_range(0..30usize);
            let disks: Vec<Disk> = (0..n)
                .map(|_| {
                    Disk::new(
                        rng.random_range(0.0..4.0),
                        rng.random_range(0.0..4.0),
                        rng.random_range(0.5..1.0),
                    )
                })
                .collect();
            let q = Disk::new(
                rng.random_range(0.5..3.5),
                rng.random_range(0.5..3.5),
                rng.random_range(0.5..1.0),
            );
            let (without, with) =
                Arrangement::build_boundary_pair(&disks, q, &opts, &mut scratch).unwrap();
            let m_without = without.global_functionals().unwrap();
            let m_with = with.global_functionals().unwrap();
            let mut all = disks.clone();
            all.push(q);
            let e_without = Arrangement::build(&disks, &opts)
                .unwrap()
                .global_functionals()
                .unwrap();
            let e_with = Arrangement::build(&all, &opts)
                .unwrap()
                .global_functionals()
                .unwrap();
            assert!((m_without.volume - e_without.volume).abs() < 1e-9);
            assert!((m_with.volume - e_with.volume).abs() < 1e-9);
            assert!((m_without.surface - e_without.surface).abs() < 1e-9);
            assert!((m_with.surface - e_with.surface).abs() < 1e-9);
            assert_eq!(m_without.euler, e_without.euler);
            assert_eq!(m_with.euler, e_with.euler);
        }
    }
}
