//! Independent brute-force oracles for the test suites. These enumerate
//! exhaustively and stay separate from the engine's recursion so the two
//! routes can be compared.

use rand::Rng;

use super::{ursell_alpha_with, Polymer, PolymerCluster, Rational};
use crate::lattice::Site;

/// `sum over connected spanning subgraphs of (-1)^{#edges}` by enumerating
/// every subset of the incompatibility edges. Exponential in the edge
/// count; test scale only.
pub fn brute_connected_alternating_sum(adj: &[u16]) -> i128 {
    let n = adj.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i] & (1 << j) != 0 {
                edges.push((i, j));
            }
        }
    }
    let mut total = 0i128;
    for mask in 0..(1u64 << edges.len()) {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut count = 0u32;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask & (1 << e) != 0 {
                count += 1;
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        if (0..n).all(|i| find(&mut parent, i) == root) {
            total += if count % 2 == 0 { 1 } else { -1 };
        }
    }
    total
}

/// Draws a random cluster of total multiplicity `n` with a random
/// incompatibility pattern and checks the engine's Ursell coefficient
/// against the brute-force enumeration; returns whether the two exact
/// rationals agree.
pub fn ursell_alpha_brute_oracle<R: Rng>(n: usize, rng: &mut R) -> bool {
    assert!(n >= 1 && n <= 9);
    // Random multiplicities over distinct polymers.
    let mut mults = Vec::new();
    let mut left = n;
    while left > 0 {
        let m = rng.random_range(1..=left);
        mults.push(m);
        left -= m;
    }
    let k = mults.len();
    // Distant single-site polymers; the interaction is overridden below.
    let polymers: Vec<Polymer> = (0..k)
        .map(|i| Polymer::new(vec![Site(10 * i as i32, 0)], 0).unwrap())
        .collect();
    let mut incompatible = vec![vec![false; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = rng.random::<f64>() < 0.6;
            incompatible[i][j] = v;
            incompatible[j][i] = v;
        }
    }
    let cluster = PolymerCluster::new(polymers.iter().cloned().zip(mults.iter().copied()).collect());
    let index_of = |p: &Polymer| (p.support[0].0 / 10) as usize;
    let engine = ursell_alpha_with(&cluster, |a, b| incompatible[index_of(a)][index_of(b)]);

    // Expanded brute force: copies of a polymer are always incompatible.
    let mut owner = Vec::with_capacity(n);
    for (i, &m) in mults.iter().enumerate() {
        for _ in 0..m {
            owner.push(i);
        }
    }
    let mut adj = vec![0u16; n];
    for a in 0..n {
        for b in (a + 1)..n {
            if owner[a] == owner[b] || incompatible[owner[a]][owner[b]] {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
    }
    let mut den = 1i128;
    for &m in &mults {
        for j in 2..=m {
            den *= j as i128;
        }
    }
    let brute = Rational::new(brute_connected_alternating_sum(&adj), den);
    engine.map(|e| e == brute).unwrap_or(false)
}
