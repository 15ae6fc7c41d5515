//! Greedy domino extraction inside a contour.
//!
//! A domino is an adjacent (occupied, empty) pair of tiles of the support.
//! The greedy sweep picks an occupied site, walks to the nearest empty
//! support site within the correctness radius, takes the occupied neighbour
//! of that empty site closest to the walk origin, then discards every
//! occupied candidate within Euclidean distance `4L` before repeating. The
//! selected dominoes are pairwise distinct and their number is at least
//! `r0 * #support`.

use std::collections::HashMap;

use super::{Contour, ContourError, SpinField, Tiling};
use crate::lattice::Site;

/// The domino set `D` of a contour: pairs `(occupied, empty)` of adjacent
/// support sites chosen by the greedy `4L`-separated sweep.
pub fn domino_set(
    contour: &Contour,
    field: &SpinField,
    tiling: &Tiling,
) -> Result<Vec<(Site, Site)>, ContourError> {
    let l = tiling.correctness_radius as i64;
    let spin_of: HashMap<Site, u8> = contour
        .support
        .iter()
        .copied()
        .zip(contour.spins.iter().copied())
        .collect();
    for (&s, &spin) in &spin_of {
        if field.get(s) != Some(spin) {
            return Err(ContourError::ParameterDomain(format!(
                "contour spins disagree with the field at site ({}, {})",
                s.0, s.1
            )));
        }
    }
    let ones: Vec<Site> = contour
        .support
        .iter()
        .copied()
        .filter(|s| spin_of[s] == 1)
        .collect();
    let zeros: Vec<Site> = contour
        .support
        .iter()
        .copied()
        .filter(|s| spin_of[s] == 0)
        .collect();
    if ones.is_empty() {
        return Err(ContourError::EmptySpinClass(1));
    }
    if zeros.is_empty() {
        return Err(ContourError::EmptySpinClass(0));
    }

    let mut remaining = ones;
    let mut dominoes = Vec::new();
    let sep2 = 16 * l * l;
    while let Some(&k) = remaining.first() {
        // Nearest empty support site within the correctness radius; it
        // exists because k is non-correct.
        let j = zeros
            .iter()
            .copied()
            .filter(|&j| j.dist2_sq(k) <= l * l)
            .min_by_key(|&j| (j.dist2_sq(k), j))
            .ok_or(ContourError::EmptySpinClass(0))?;
        // An occupied support neighbour of j, towards k.
        let i = j
            .neighbors_inf()
            .into_iter()
            .filter(|q| spin_of.get(q) == Some(&1))
            .min_by_key(|&q| (q.dist2_sq(k), q))
            .ok_or(ContourError::EmptySpinClass(1))?;
        dominoes.push((i, j));
        remaining.retain(|&s| s.dist2_sq(k) > sep2);
    }
    Ok(dominoes)
}
