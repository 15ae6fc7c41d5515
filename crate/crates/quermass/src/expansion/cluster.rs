//! Cluster enumeration and the pressure-like series
//! `g = sum over clusters with 0 in the support of Ursell(X) prod w / |support|`.
//!
//! Clusters are enumerated as connected sets of distinct polymers in the
//! incompatibility graph (copies of one polymer glue a multiset together,
//! so multiset connectivity reduces to set connectivity), breadth-grown
//! from each root with the standard forbidden-candidate discipline so every
//! set appears exactly once, then expanded over multiplicity vectors up to
//! the Ursell cap. The truncation error in the support size is covered by
//! the reported tail bound `exp(-tau * Lmax / 2)` for tau-stable weights;
//! the multiplicity truncation is dominated by that tail because an extra
//! copy of a polymer costs at least `exp(-tau * l0)`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{connected_alternating_sum, ExpansionError, Polymer, URSELL_CAP};

/// Branches whose weight product (times the worst-case Ursell growth)
/// falls below this threshold are pruned; sound when every weight is at
/// most one, which tau-stable classes satisfy.
const PRUNE_EPSILON: f64 = 1e-18;
/// `9^7 * e^2`, a bound on the Ursell factor times the multiplicity series
/// of a cluster within the cap.
const URSELL_GROWTH_BOUND: f64 = 4_782_969.0 * 7.389_056_098_930_65;
/// Defensive ceiling on enumeration work per root.
const VISIT_BUDGET: u64 = 20_000_000;
use crate::lattice::Site;

/// The two incompatibility rules the engine ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncompatibilityRule {
    /// Contour rule: incompatible unless same type and sup-norm distance
    /// above one.
    Contour,
    /// Hard-core rule: incompatible exactly when the supports share a site.
    SharedSite,
}

impl IncompatibilityRule {
    pub fn incompatible(self, a: &Polymer, b: &Polymer) -> bool {
        match self {
            IncompatibilityRule::Contour => {
                a.type_tag != b.type_tag || a.distance_inf(b) <= 1
            }
            IncompatibilityRule::SharedSite => {
                a.support.iter().any(|s| b.contains(*s))
            }
        }
    }
}

/// Output of [`cluster_pressure`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionResult {
    /// The per-site pressure contribution `g`.
    pub pressure: f64,
    /// Summed cluster terms grouped by support size.
    pub terms_by_size: Vec<(usize, f64)>,
    pub cluster_count: usize,
    pub size_cutoff: usize,
    /// `exp(-tau * Lmax / 2)`, rigorous for tau-stable weights above the
    /// convergence threshold.
    pub tail_bound: f64,
    pub tau: f64,
    pub l0: u64,
    /// `eta = 2 exp(-tau l0 / 3)`.
    pub eta: f64,
    /// Whether the over-counting convergence certificate held for this tau.
    pub convergence_certified: bool,
    /// `g * |Lambda|` for the requested window, if any.
    pub log_phi_volume: Option<f64>,
    /// `eta * |exterior boundary of Lambda|` for the requested window.
    pub boundary_bound: Option<f64>,
}

/// Evaluates the cluster series for the polymers that matter near the
/// origin. `polymers` carries nonnegative weights; clusters whose support
/// misses the origin or exceeds `size_cutoff` sites are dropped (the tail
/// bound accounts for the latter). `window` optionally asks for the
/// finite-volume form `log Phi(Lambda) = g |Lambda| + Delta_Lambda` as the
/// pair `(|Lambda|, |exterior boundary|)`.
pub fn cluster_pressure(
    polymers: &[(Polymer, f64)],
    rule: IncompatibilityRule,
    tau: f64,
    l0: u64,
    size_cutoff: usize,
    window: Option<(usize, usize)>,
) -> Result<ExpansionResult, ExpansionError> {
    for (p, w) in polymers {
        if !(*w >= 0.0) || !w.is_finite() {
            return Err(ExpansionError::InvalidInput(format!(
                "negative or non-finite weight {w} on a polymer of size {}",
                p.size()
            )));
        }
    }
    // Canonical order makes the reduction deterministic.
    let mut items: Vec<(Polymer, f64)> = polymers.to_vec();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let m = items.len();
    let adj: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| j != i && rule.incompatible(&items[i].0, &items[j].0))
                .collect()
        })
        .collect();

    let per_root = enumerate_clusters(&items, &adj, rule, size_cutoff, Some(Site(0, 0)), true)?;

    let mut pressure = 0.0;
    let mut by_size: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    let mut cluster_count = 0;
    for r in per_root {
        pressure += r.pressure;
        cluster_count += r.count;
        for (s, v) in r.by_size {
            *by_size.entry(s).or_insert(0.0) += v;
        }
    }

    let eta = 2.0 * (-tau * l0 as f64 / 3.0).exp();
    let convergence_certified =
        super::convergence::convergence_check(tau, l0, super::convergence::DEFAULT_ANIMAL_CAP)
            .satisfied;
    let tail_bound = (-tau * size_cutoff as f64 / 2.0).exp();
    Ok(ExpansionResult {
        pressure,
        terms_by_size: by_size.into_iter().collect(),
        cluster_count,
        size_cutoff,
        tail_bound,
        tau,
        l0,
        eta,
        convergence_certified,
        log_phi_volume: window.map(|(vol, _)| pressure * vol as f64),
        boundary_bound: window.map(|(_, bnd)| eta * bnd as f64),
    })
}

#[derive(Default)]
struct RootSums {
    pressure: f64,
    by_size: Vec<(usize, f64)>,
    count: usize,
    visits: u64,
    budget_exhausted: bool,
}

/// Runs the connected-set enumeration from every root in parallel; the
/// reduction order is fixed by the root index.
fn enumerate_clusters(
    items: &[(Polymer, f64)],
    adj: &[Vec<usize>],
    rule: IncompatibilityRule,
    size_cutoff: usize,
    origin: Option<Site>,
    divide_by_support: bool,
) -> Result<Vec<RootSums>, ExpansionError> {
    // Weight pruning is only sound when weights cannot grow a product.
    let prunable = items.iter().all(|(_, w)| *w <= 1.0);
    let out: Vec<RootSums> = (0..items.len())
        .into_par_iter()
        .map(|root| {
            let mut sums = RootSums::default();
            let mut set = vec![root];
            let mut support: BTreeSet<Site> = items[root].0.support.iter().copied().collect();
            if support.len() <= size_cutoff {
                let ext: Vec<usize> = adj[root].iter().copied().filter(|&v| v > root).collect();
                let mut forbidden = vec![false; items.len()];
                grow_sets(
                    items,
                    adj,
                    rule,
                    size_cutoff,
                    origin,
                    divide_by_support,
                    prunable,
                    items[root].1,
                    &mut set,
                    &mut support,
                    &ext,
                    &mut forbidden,
                    &mut sums,
                );
            }
            sums
        })
        .collect();
    if out.iter().any(|r| r.budget_exhausted) {
        return Err(ExpansionError::InvalidInput(
            "cluster enumeration budget exceeded; the polymer class is too dense or the weights too large".into(),
        ));
    }
    Ok(out)
}

/// Cluster form of the finite-window log partition function:
/// `sum over all clusters of alpha(X) prod w`, truncated at the
/// multiplicity cap (the polymers already live inside the window).
pub fn cluster_log_partition(
    polymers: &[(Polymer, f64)],
    rule: IncompatibilityRule,
) -> Result<f64, ExpansionError> {
    let mut items: Vec<(Polymer, f64)> = polymers.to_vec();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let m = items.len();
    let total_support: usize = {
        let mut all: Vec<Site> = items
            .iter()
            .flat_map(|(p, _)| p.support.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    };
    let adj: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| j != i && rule.incompatible(&items[i].0, &items[j].0))
                .collect()
        })
        .collect();
    let per_root = enumerate_clusters(&items, &adj, rule, total_support, None, false)?;
    Ok(per_root.iter().map(|r| r.pressure).sum())
}

/// Enumerates every connected polymer set whose minimum index is the root,
/// each exactly once: candidates are processed in order and, once explored,
/// excluded from the sibling branches.
#[allow(clippy::too_many_arguments)]
fn grow_sets(
    items: &[(Polymer, f64)],
    adj: &[Vec<usize>],
    rule: IncompatibilityRule,
    size_cutoff: usize,
    origin: Option<Site>,
    divide_by_support: bool,
    prunable: bool,
    weight_product: f64,
    set: &mut Vec<usize>,
    support: &mut BTreeSet<Site>,
    ext: &[usize],
    forbidden: &mut Vec<bool>,
    sums: &mut RootSums,
) {
    sums.visits += 1;
    if sums.visits > VISIT_BUDGET {
        sums.budget_exhausted = true;
        return;
    }
    if origin.map_or(true, |o| support.contains(&o)) {
        accumulate_multiplicities(items, rule, set, support.len(), divide_by_support, sums);
    }
    if set.len() >= URSELL_CAP {
        return;
    }
    let mut local: Vec<usize> = Vec::new();
    for (k, &v) in ext.iter().enumerate() {
        if sums.budget_exhausted {
            break;
        }
        if forbidden[v] {
            continue;
        }
        let next_weight = weight_product * items[v].1;
        if prunable && next_weight * URSELL_GROWTH_BOUND < PRUNE_EPSILON {
            continue;
        }
        let added: Vec<Site> = items[v]
            .0
            .support
            .iter()
            .copied()
            .filter(|s| !support.contains(s))
            .collect();
        if support.len() + added.len() > size_cutoff {
            continue;
        }
        for &s in &added {
            support.insert(s);
        }
        set.push(v);
        let mut next_ext: Vec<usize> = ext[k + 1..]
            .iter()
            .copied()
            .filter(|&u| !forbidden[u])
            .collect();
        for &u in &adj[v] {
            if u > set[0] && !forbidden[u] && !set.contains(&u) && !next_ext.contains(&u) {
                next_ext.push(u);
            }
        }
        grow_sets(
            items,
            adj,
            rule,
            size_cutoff,
            origin,
            divide_by_support,
            prunable,
            next_weight,
            set,
            support,
            &next_ext,
            forbidden,
            sums,
        );
        set.pop();
        for s in &added {
            support.remove(s);
        }
        forbidden[v] = true;
        local.push(v);
    }
    for v in local {
        forbidden[v] = false;
    }
}

/// Expands one connected polymer set over multiplicity vectors and adds
/// every cluster term `alpha(X) prod w^n / |support|`.
fn accumulate_multiplicities(
    items: &[(Polymer, f64)],
    rule: IncompatibilityRule,
    set: &[usize],
    support_size: usize,
    divide_by_support: bool,
    sums: &mut RootSums,
) {
    let k = set.len();
    // Pairwise incompatibility among the distinct polymers of the set.
    let pair_inc: Vec<Vec<bool>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| i != j && rule.incompatible(&items[set[i]].0, &items[set[j]].0))
                .collect()
        })
        .collect();
    let mut mults = vec![1usize; k];
    loop {
        let n: usize = mults.iter().sum();
        if n <= URSELL_CAP {
            let mut wprod = 1.0;
            for (i, &m) in mults.iter().enumerate() {
                wprod *= items[set[i]].1.powi(m as i32);
            }
            if wprod > 0.0 {
                let mut owner = Vec::with_capacity(n);
                for (i, &m) in mults.iter().enumerate() {
                    for _ in 0..m {
                        owner.push(i);
                    }
                }
                let mut adj_bits = vec![0u16; n];
                for a in 0..n {
                    for b in (a + 1)..n {
                        if owner[a] == owner[b] || pair_inc[owner[a]][owner[b]] {
                            adj_bits[a] |= 1 << b;
                            adj_bits[b] |= 1 << a;
                        }
                    }
                }
                let c = connected_alternating_sum(&adj_bits);
                if c != 0 {
                    let mut den = 1.0;
                    for &m in &mults {
                        for j in 2..=m {
                            den *= j as f64;
                        }
                    }
                    let scale = if divide_by_support {
                        support_size as f64
                    } else {
                        1.0
                    };
                    let term = c as f64 / den * wprod / scale;
                    sums.pressure += term;
                    sums.count += 1;
                    match sums.by_size.iter_mut().find(|(s, _)| *s == support_size) {
                        Some((_, v)) => *v += term,
                        None => sums.by_size.push((support_size, term)),
                    }
                }
            }
        }
        // Next multiplicity vector with total at most the cap.
        let mut i = 0;
        loop {
            if i == k {
                return;
            }
            mults[i] += 1;
            if mults.iter().sum::<usize>() <= URSELL_CAP {
                break;
            }
            mults[i] = 1;
            i += 1;
        }
    }
}

/// Direct evaluation of `log sum over pairwise-compatible polymer families
/// of prod w`, the finite-window oracle the engine is checked against.
pub fn direct_log_partition(polymers: &[(Polymer, f64)], rule: IncompatibilityRule) -> f64 {
    let mut items: Vec<(Polymer, f64)> = polymers.to_vec();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let m = items.len();
    let compat: Vec<Vec<bool>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| i != j && !rule.incompatible(&items[i].0, &items[j].0))
                .collect()
        })
        .collect();
    fn rec(
        items: &[(Polymer, f64)],
        compat: &[Vec<bool>],
        start: usize,
        chosen: &mut Vec<usize>,
        weight: f64,
        total: &mut f64,
    ) {
        *total += weight;
        for v in start..items.len() {
            if chosen.iter().all(|&u| compat[u][v]) {
                chosen.push(v);
                rec(items, compat, v + 1, chosen, weight * items[v].1, total);
                chosen.pop();
            }
        }
    }
    let mut total = 0.0;
    rec(&items, &compat, 0, &mut Vec::new(), 1.0, &mut total);
    total.ln()
}
