//! Abstract polymer / cluster-expansion engine.
//!
//! A polymer is a nonempty sup-norm-connected set of lattice sites with an
//! opaque type tag; incompatibility is either the contour rule (different
//! type or supports within sup-norm distance one) or the shared-site rule
//! used by hard-core gases. The logarithm of the polymer partition function
//! expands over clusters, non-decomposable multisets of polymers, each
//! weighted by its Ursell coefficient: the alternating sum over connected
//! spanning subgraphs of the incompatibility graph divided by the
//! multiplicities' factorials.

mod cluster;
mod convergence;
pub mod oracle;
mod pressure;
mod psz;
#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cluster::{
    cluster_log_partition, cluster_pressure, direct_log_partition, ExpansionResult,
    IncompatibilityRule,
};
pub use convergence::{convergence_check, tau_zero, ConvergenceReport};
pub use pressure::{
    cutoff_kappa, gap_root, gap_value, kappa_derivative_sup, truncated_pressure_order0,
    truncated_pressure_series, ContourWeightInput, TruncatedPressure,
};
pub use oracle::ursell_alpha_brute_oracle;
pub use psz::{minimal_rigorous_beta, psz_conditions_check, PszInputs, PszReport};

use crate::lattice::Site;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("invalid polymer: {0}")]
    InvalidPolymer(String),
    #[error("cluster multiplicity {found} exceeds the exact-enumeration cap {cap}")]
    MultiplicityCap { found: usize, cap: usize },
    #[error("gap function does not change sign on ({0}, {1}); outside the contour regime")]
    RootNotBracketed(f64, f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// A polymer: a connected support plus a type tag the engine treats as an
/// opaque payload (contours carry the spin type here).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Polymer {
    /// Sorted, deduplicated support sites.
    pub support: Vec<Site>,
    pub type_tag: u8,
}

impl Polymer {
    pub fn new(mut support: Vec<Site>, type_tag: u8) -> Result<Polymer, ExpansionError> {
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(ExpansionError::InvalidPolymer("empty support".into()));
        }
        let set: std::collections::HashSet<Site> = support.iter().copied().collect();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![support[0]];
        seen.insert(support[0]);
        while let Some(s) = stack.pop() {
            for q in s.neighbors_inf() {
                if set.contains(&q) && seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        if seen.len() != support.len() {
            return Err(ExpansionError::InvalidPolymer(
                "support is not sup-norm connected".into(),
            ));
        }
        Ok(Polymer { support, type_tag })
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.support.binary_search(&s).is_ok()
    }

    /// Smallest sup-norm distance between the supports.
    pub fn distance_inf(&self, other: &Polymer) -> i32 {
        let mut best = i32::MAX;
        for &a in &self.support {
            for &b in &other.support {
                best = best.min(a.dist_inf(b));
                if best == 0 {
                    return 0;
                }
            }
        }
        best
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Polymer {
        Polymer {
            support: self
                .support
                .iter()
                .map(|s| Site(s.0 + dx, s.1 + dy))
                .collect(),
            type_tag: self.type_tag,
        }
    }
}

/// The pair interaction of the expansion: 0 for geometrically compatible
/// polymers (sup-norm distance above one and equal types), -1 otherwise.
pub fn zeta(a: &Polymer, b: &Polymer) -> i32 {
    if a.type_tag == b.type_tag && a.distance_inf(b) > 1 {
        0
    } else {
        -1
    }
}

/// A multiset of polymers with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerCluster {
    pub polymers: Vec<(Polymer, usize)>,
}

impl PolymerCluster {
    pub fn new(polymers: Vec<(Polymer, usize)>) -> PolymerCluster {
        PolymerCluster { polymers }
    }

    pub fn total_multiplicity(&self) -> usize {
        self.polymers.iter().map(|(_, n)| n).sum()
    }

    /// The union of the supports.
    pub fn support(&self) -> Vec<Site> {
        let mut out: Vec<Site> = self
            .polymers
            .iter()
            .flat_map(|(p, _)| p.support.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// An exact rational, kept reduced with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Rational {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
        let sign = if den < 0 { -1 } else { 1 };
        Rational {
            num: sign * num / g,
            den: (sign * den) / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Cap on the total multiplicity of the exact Ursell computation.
pub const URSELL_CAP: usize = 9;

/// Exact Ursell coefficient of a cluster under the contour interaction:
/// `(prod 1/n_i!) * sum over connected spanning subgraphs of the
/// incompatibility graph of (-1)^{#edges}`.
pub fn ursell_alpha(cluster: &PolymerCluster) -> Result<Rational, ExpansionError> {
    ursell_alpha_with(cluster, |a, b| zeta(a, b) == -1)
}

/// Same with an arbitrary incompatibility predicate. Distinct copies of one
/// polymer are always mutually incompatible.
pub fn ursell_alpha_with(
    cluster: &PolymerCluster,
    incompatible: impl Fn(&Polymer, &Polymer) -> bool,
) -> Result<Rational, ExpansionError> {
    let n = cluster.total_multiplicity();
    if n == 0 {
        return Err(ExpansionError::InvalidPolymer("empty cluster".into()));
    }
    if n > URSELL_CAP {
        return Err(ExpansionError::MultiplicityCap {
            found: n,
            cap: URSELL_CAP,
        });
    }
    let mut owner = Vec::with_capacity(n);
    for (k, (_, mult)) in cluster.polymers.iter().enumerate() {
        for _ in 0..*mult {
            owner.push(k);
        }
    }
    let mut adj = vec![0u16; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let inc = owner[i] == owner[j]
                || incompatible(
                    &cluster.polymers[owner[i]].0,
                    &cluster.polymers[owner[j]].0,
                );
            if inc {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    let sum = connected_alternating_sum(&adj);
    let mut den: i128 = 1;
    for (_, mult) in &cluster.polymers {
        for k in 2..=*mult {
            den *= k as i128;
        }
    }
    Ok(Rational::new(sum, den))
}

/// `sum_{G connected spanning subgraph} (-1)^{#edges}` for the graph given
/// by adjacency bitmasks, via the subset recursion
/// `c(S) = f(S) - sum_{T proper subset of S, v0 in T} c(T) f(S \ T)`
/// with `f(S) = 1` iff `S` spans no edge (`v0` the lowest vertex of `S`).
pub(crate) fn connected_alternating_sum(adj: &[u16]) -> i128 {
    let n = adj.len();
    debug_assert!(n <= 16 && n >= 1);
    let full: u32 = (1u32 << n) - 1;
    let edge_free = |s: u32| -> bool {
        let mut m = s;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            if (adj[i] as u32) & s != 0 {
                return false;
            }
        }
        true
    };
    let mut c = vec![0i128; (full + 1) as usize];
    for s in 1..=full {
        let f_s = edge_free(s) as i128;
        let v0 = 1u32 << s.trailing_zeros();
        let rest = s & !v0;
        let mut acc = 0i128;
        if rest != 0 {
            // u runs over the proper subsets of `rest` (T = v0 | u != s).
            let mut u = (rest - 1) & rest;
            loop {
                let t = v0 | u;
                let comp = s & !t;
                if edge_free(comp) {
                    acc += c[t as usize];
                }
                if u == 0 {
                    break;
                }
                u = (u - 1) & rest;
            }
        }
        c[s as usize] = f_s - acc;
    }
    c[full as usize]
}
