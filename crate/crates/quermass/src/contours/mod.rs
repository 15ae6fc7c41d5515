//! Lattice coarse-graining: spins, correctness, contours and their labels.
//!
//! A tile carries spin 1 when the configuration puts at least one point in
//! it. A site is `#`-correct when every site within the correctness radius
//! `L` carries spin `#`; the non-correct sites split into maximal
//! sup-norm-connected components, the contour supports. Every component of
//! a support's complement carries a single spin on its inner and outer
//! boundary bands, its label; the label of the unbounded component is the
//! type of the contour, and the bounded components grouped by label form
//! its interiors.

mod constants;
mod domino;
mod peierls;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use constants::{peierls_constants, PeierlsConstants};

/// `ln(1 + e^x)` without overflow, shared by the re-parametrised formulas.
pub fn log1p_exp_pub(x: f64) -> f64 {
    constants::log1p_exp(x)
}
pub use domino::domino_set;
pub use peierls::{contour_energy, estimate_i_gamma, verify_peierls_bound, IGammaEstimate};

use crate::geometry::{tile_of_point, GeometryError};
use crate::lattice::Site;
use crate::model::{Configuration, ModelError, QuermassParams};

/// Spin of a tile: 0 empty, 1 occupied.
pub type Spin = u8;

/// Which norm defines the correctness ball. The boundary bands always use
/// the Euclidean distance; the sup-norm ball is exposed for sensitivity
/// experiments only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectnessNorm {
    #[default]
    Euclidean,
    SupNorm,
}

/// Tile side and correctness radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    pub delta: f64,
    /// The radius `L` of the correctness ball, a positive integer.
    pub correctness_radius: i32,
    pub norm: CorrectnessNorm,
}

impl Tiling {
    pub fn new(delta: f64, correctness_radius: i32) -> Result<Tiling, ContourError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(ContourError::InvalidTiling(format!(
                "tile side must be positive, got {delta}"
            )));
        }
        if correctness_radius < 1 {
            return Err(ContourError::InvalidTiling(format!(
                "correctness radius must be >= 1, got {correctness_radius}"
            )));
        }
        Ok(Tiling {
            delta,
            correctness_radius,
            norm: CorrectnessNorm::Euclidean,
        })
    }

    /// Model defaults: the largest saturating tile side `R0 / (2 sqrt 2)`
    /// and the smallest admissible correctness radius `ceil(2 R1 / delta)`.
    pub fn for_params(p: &QuermassParams) -> Result<Tiling, ContourError> {
        let delta = p.radius_min / (2.0 * std::f64::consts::SQRT_2);
        let l = (2.0 * p.radius_max / delta).ceil() as i32;
        Tiling::new(delta, l)
    }

    /// The standing assumptions `R0 >= 2 delta sqrt(2)` and
    /// `delta L > 2 R1` behind the saturation arguments.
    pub fn saturation_ok(&self, p: &QuermassParams) -> bool {
        p.radius_min >= 2.0 * self.delta * std::f64::consts::SQRT_2 - 1e-12
            && self.delta * self.correctness_radius as f64 > 2.0 * p.radius_max
    }

    pub fn within_correctness_ball(&self, a: Site, b: Site) -> bool {
        let l = self.correctness_radius;
        match self.norm {
            CorrectnessNorm::Euclidean => a.dist2_sq(b) <= (l as i64) * (l as i64),
            CorrectnessNorm::SupNorm => a.dist_inf(b) <= l,
        }
    }

    /// Offsets of the correctness ball, origin included.
    fn ball_offsets(&self) -> Vec<(i32, i32)> {
        let l = self.correctness_radius;
        let mut out = Vec::new();
        for dx in -l..=l {
            for dy in -l..=l {
                let keep = match self.norm {
                    CorrectnessNorm::Euclidean => {
                        (dx as i64) * (dx as i64) + (dy as i64) * (dy as i64)
                            <= (l as i64) * (l as i64)
                    }
                    CorrectnessNorm::SupNorm => true,
                };
                if keep {
                    out.push((dx, dy));
                }
            }
        }
        out
    }
}

/// An inclusive rectangle of lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl LatticeBox {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> LatticeBox {
        LatticeBox { x0, y0, x1, y1 }
    }

    /// A square of `side` tiles with lower-left site at the origin.
    pub fn square(side: i32) -> LatticeBox {
        LatticeBox::new(0, 0, side - 1, side - 1)
    }

    pub fn contains(&self, s: Site) -> bool {
        s.0 >= self.x0 && s.0 <= self.x1 && s.1 >= self.y0 && s.1 <= self.y1
    }

    pub fn len(&self) -> usize {
        if self.x1 < self.x0 || self.y1 < self.y0 {
            0
        } else {
            (self.x1 - self.x0 + 1) as usize * (self.y1 - self.y0 + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Site(x, y)))
    }

    pub fn inflate(&self, m: i32) -> LatticeBox {
        LatticeBox::new(self.x0 - m, self.y0 - m, self.x1 + m, self.y1 + m)
    }

    /// Euclidean distance from a site of the box to the complement; for a
    /// box the nearest outside site sits straight across the nearest side.
    pub fn depth_to_complement(&self, s: Site) -> i32 {
        debug_assert!(self.contains(s));
        (s.0 - self.x0)
            .min(self.x1 - s.0)
            .min(s.1 - self.y0)
            .min(self.y1 - s.1)
            + 1
    }

    /// Sites of the box within Euclidean distance `l + 1` of the complement.
    pub fn interior_boundary(&self, l: i32) -> Vec<Site> {
        self.sites()
            .filter(|&s| self.depth_to_complement(s) <= l + 1)
            .collect()
    }
}

/// Correctness classification of a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correctness {
    Correct(Spin),
    NonCorrect,
}

/// A finite spin field on a rectangular domain, with an optional constant
/// spin for every site outside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinField {
    domain: LatticeBox,
    spins: Vec<Spin>,
    exterior: Option<Spin>,
}

impl SpinField {
    pub fn from_spins(domain: LatticeBox, spins: Vec<Spin>, exterior: Option<Spin>) -> SpinField {
        assert_eq!(spins.len(), domain.len());
        SpinField {
            domain,
            spins,
            exterior,
        }
    }

    pub fn constant(domain: LatticeBox, spin: Spin, exterior: Option<Spin>) -> SpinField {
        SpinField::from_spins(domain, vec![spin; domain.len()], exterior)
    }

    pub fn domain(&self) -> LatticeBox {
        self.domain
    }

    pub fn exterior(&self) -> Option<Spin> {
        self.exterior
    }

    pub fn set_exterior(&mut self, exterior: Option<Spin>) {
        self.exterior = exterior;
    }

    fn index(&self, s: Site) -> usize {
        let w = (self.domain.x1 - self.domain.x0 + 1) as usize;
        (s.1 - self.domain.y0) as usize * w + (s.0 - self.domain.x0) as usize
    }

    /// Spin of a site, the exterior spin outside the domain.
    pub fn get(&self, s: Site) -> Option<Spin> {
        if self.domain.contains(s) {
            Some(self.spins[self.index(s)])
        } else {
            self.exterior
        }
    }

    pub fn set(&mut self, s: Site, spin: Spin) {
        let i = self.index(s);
        self.spins[i] = spin;
    }

    pub fn occupied_count(&self) -> usize {
        self.spins.iter().filter(|&&s| s == 1).count()
    }
}

#[derive(Debug, Error)]
pub enum ContourError {
    #[error("invalid tiling: {0}")]
    InvalidTiling(String),
    #[error("correctness ball around site ({0}, {1}) exits the field domain and no exterior spin is set")]
    PaddingExceeded(i32, i32),
    #[error("mixed spins on the boundary bands of a complement component; the field is not achievable or the extraction is buggy")]
    LabelInconsistency,
    #[error("contour has no spin-{0} site in its support")]
    EmptySpinClass(Spin),
    #[error("contour support of {found} tiles exceeds the cap {cap}")]
    SupportTooLarge { found: usize, cap: usize },
    #[error("parameter domain: {0}")]
    ParameterDomain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Spin field of a configuration on a tile domain: spin 1 exactly on the
/// occupied half-open tiles. Sites outside the domain are empty, as for any
/// finite configuration whose points lie in the domain.
pub fn spin_field(cfg: &Configuration, tiling: &Tiling, domain: LatticeBox) -> SpinField {
    let mut field = SpinField::constant(domain, 0, Some(0));
    for p in &cfg.points {
        let t = tile_of_point(p.position, tiling.delta);
        if domain.contains(t) {
            field.set(t, 1);
        }
    }
    field
}

/// Classifies every site of the field domain. Errors when the correctness
/// ball leaves the domain and the field declares no exterior spin.
pub fn classify_correctness(
    field: &SpinField,
    tiling: &Tiling,
) -> Result<BTreeMap<Site, Correctness>, ContourError> {
    let offsets = tiling.ball_offsets();
    let mut out = BTreeMap::new();
    for s in field.domain().sites() {
        out.insert(s, classify_site(field, s, &offsets)?);
    }
    Ok(out)
}

fn classify_site(
    field: &SpinField,
    s: Site,
    offsets: &[(i32, i32)],
) -> Result<Correctness, ContourError> {
    let mut seen0 = false;
    let mut seen1 = false;
    for &(dx, dy) in offsets {
        let q = Site(s.0 + dx, s.1 + dy);
        match field.get(q) {
            Some(0) => seen0 = true,
            Some(_) => seen1 = true,
            None => return Err(ContourError::PaddingExceeded(q.0, q.1)),
        }
        if seen0 && seen1 {
            return Ok(Correctness::NonCorrect);
        }
    }
    Ok(Correctness::Correct(if seen1 { 1 } else { 0 }))
}

/// A contour: the support with its spins, the label of the unbounded
/// complement component (its type) and the bounded complement components
/// grouped by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Sorted support sites.
    pub support: Vec<Site>,
    /// Spins aligned with `support`.
    pub spins: Vec<Spin>,
    pub contour_type: Spin,
    pub interior0: Vec<Site>,
    pub interior1: Vec<Site>,
    /// `|Int|`, the class of the contour.
    pub class: usize,
}

impl Contour {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn spin_count(&self, spin: Spin) -> usize {
        self.spins.iter().filter(|&&s| s == spin).count()
    }

    pub fn interior_size(&self) -> usize {
        self.interior0.len() + self.interior1.len()
    }

    pub fn spin_at(&self, s: Site) -> Option<Spin> {
        self.support.binary_search(&s).ok().map(|i| self.spins[i])
    }

    pub fn support_distance_inf(&self, other: &Contour) -> i32 {
        let mut best = i32::MAX;
        for &a in &self.support {
            for &b in &other.support {
                best = best.min(a.dist_inf(b));
            }
        }
        best
    }
}

/// Extracts all contours of the field. The unbounded complement component
/// of each support is identified on a window padded by `2L` tiles of the
/// exterior spin, flood-filled from the pad frame.
pub fn extract_contours(field: &SpinField, tiling: &Tiling) -> Result<Vec<Contour>, ContourError> {
    let l = tiling.correctness_radius;
    let work = field.domain().inflate(l);
    let offsets = tiling.ball_offsets();

    let w = (work.x1 - work.x0 + 1) as usize;
    let idx = |s: Site| -> usize { (s.1 - work.y0) as usize * w + (s.0 - work.x0) as usize };
    let mut non_correct = vec![false; work.len()];
    let mut any = false;
    for s in work.sites() {
        if classify_site(field, s, &offsets)? == Correctness::NonCorrect {
            non_correct[idx(s)] = true;
            any = true;
        }
    }
    if !any {
        return Ok(Vec::new());
    }

    // Maximal sup-norm components of the non-correct set.
    let mut seen = vec![false; work.len()];
    let mut contours = Vec::new();
    for seed in work.sites() {
        if !non_correct[idx(seed)] || seen[idx(seed)] {
            continue;
        }
        let mut stack = vec![seed];
        seen[idx(seed)] = true;
        let mut support = Vec::new();
        while let Some(s) = stack.pop() {
            support.push(s);
            for q in s.neighbors_inf() {
                if work.contains(q) && non_correct[idx(q)] && !seen[idx(q)] {
                    seen[idx(q)] = true;
                    stack.push(q);
                }
            }
        }
        support.sort_unstable();
        contours.push(build_contour(field, tiling, support)?);
    }
    Ok(contours)
}

/// Builds one contour from its support, labelling every complement
/// component over its inner and outer boundary bands.
fn build_contour(
    field: &SpinField,
    tiling: &Tiling,
    support: Vec<Site>,
) -> Result<Contour, ContourError> {
    let l = tiling.correctness_radius;
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for &s in &support {
        x0 = x0.min(s.0);
        y0 = y0.min(s.1);
        x1 = x1.max(s.0);
        y1 = y1.max(s.1);
    }
    // Pad by 2L so the frame belongs to the unbounded component and all
    // boundary bands stay inside the working box.
    let work = LatticeBox::new(x0, y0, x1, y1).inflate(2 * l);
    let w = (work.x1 - work.x0 + 1) as usize;
    let idx = |s: Site| -> usize { (s.1 - work.y0) as usize * w + (s.0 - work.x0) as usize };

    const IN_SUPPORT: i32 = -1;
    const UNSEEN: i32 = -2;
    let mut comp = vec![UNSEEN; work.len()];
    for &s in &support {
        comp[idx(s)] = IN_SUPPORT;
    }

    fn flood(
        work: &LatticeBox,
        comp: &mut [i32],
        idx: &dyn Fn(Site) -> usize,
        seed: Site,
        id: i32,
    ) -> Vec<Site> {
        let mut sites = Vec::new();
        let mut stack = vec![seed];
        comp[idx(seed)] = id;
        while let Some(s) = stack.pop() {
            sites.push(s);
            for q in s.neighbors_inf() {
                if work.contains(q) && comp[idx(q)] == UNSEEN {
                    comp[idx(q)] = id;
                    stack.push(q);
                }
            }
        }
        sites
    }

    // Component 0 is the unbounded one, seeded from the frame.
    let mut components: Vec<Vec<Site>> = Vec::new();
    components.push(flood(&work, &mut comp, &idx, Site(work.x0, work.y0), 0));
    for seed in work.sites() {
        if comp[idx(seed)] == UNSEEN {
            let id = components.len() as i32;
            components.push(flood(&work, &mut comp, &idx, seed, id));
        }
    }

    // Label each complement component: all spins over
    // ext-band = { s not in A : d2(s, A) <= L } and
    // int-band = { q in A : d2(q, A^c) <= L+1 } must agree.
    let l2 = (l as i64) * (l as i64);
    let l12 = (l as i64 + 1) * (l as i64 + 1);
    let lim = l + 1;
    // Bounding box per component, to skip far-away complement sites when
    // labelling a bounded component.
    let comp_bbox: Vec<LatticeBox> = components
        .iter()
        .map(|sites| {
            let mut b = LatticeBox::new(i32::MAX, i32::MAX, i32::MIN, i32::MIN);
            for &s in sites {
                b.x0 = b.x0.min(s.0);
                b.y0 = b.y0.min(s.1);
                b.x1 = b.x1.max(s.0);
                b.y1 = b.y1.max(s.1);
            }
            b
        })
        .collect();
    let mut labels: Vec<Option<Spin>> = Vec::with_capacity(components.len());
    for id in 0..components.len() as i32 {
        let near_box = comp_bbox[id as usize].inflate(lim);
        let mut label: Option<Spin> = None;
        let mut ok = true;
        let mut check = |spin: Spin, ok: &mut bool| match label {
            None => label = Some(spin),
            Some(s) if s != spin => *ok = false,
            _ => {}
        };
        // Iterate over the finite part of A^c; every band site of either
        // kind is within lim of one of these.
        for s in work.sites() {
            if comp[idx(s)] == id || (id != 0 && !near_box.contains(s)) {
                continue;
            }
            let mut s_near_a = false;
            for dx in -lim..=lim {
                for dy in -lim..=lim {
                    let d2 = (dx as i64) * (dx as i64) + (dy as i64) * (dy as i64);
                    if d2 > l12 {
                        continue;
                    }
                    let q = Site(s.0 + dx, s.1 + dy);
                    if !work.contains(q) || comp[idx(q)] != id {
                        continue;
                    }
                    if d2 <= l2 {
                        s_near_a = true;
                    }
                    let spin = field.get(q).ok_or(ContourError::PaddingExceeded(q.0, q.1))?;
                    check(spin, &mut ok);
                }
            }
            if s_near_a {
                let spin = field.get(s).ok_or(ContourError::PaddingExceeded(s.0, s.1))?;
                check(spin, &mut ok);
            }
            if !ok {
                return Err(ContourError::LabelInconsistency);
            }
        }
        labels.push(label);
    }

    let contour_type = labels[0].unwrap_or_else(|| field.exterior().unwrap_or(0));
    let mut interior0 = Vec::new();
    let mut interior1 = Vec::new();
    for (id, sites) in components.iter().enumerate().skip(1) {
        match labels[id] {
            Some(0) => interior0.extend(sites.iter().copied()),
            Some(_) => interior1.extend(sites.iter().copied()),
            None => {}
        }
    }
    interior0.sort_unstable();
    interior1.sort_unstable();
    let spins = support
        .iter()
        .map(|&s| field.get(s).ok_or(ContourError::PaddingExceeded(s.0, s.1)))
        .collect::<Result<Vec<_>, _>>()?;
    let class = interior0.len() + interior1.len();
    Ok(Contour {
        support,
        spins,
        contour_type,
        interior0,
        interior1,
        class,
    })
}

/// True iff the contours are pairwise farther than 1 apart in sup-norm and
/// all share the same type.
pub fn geometric_compatibility(contours: &[Contour]) -> bool {
    for (i, a) in contours.iter().enumerate() {
        for b in contours.iter().skip(i + 1) {
            if a.contour_type != b.contour_type || a.support_distance_inf(b) <= 1 {
                return false;
            }
        }
    }
    true
}
