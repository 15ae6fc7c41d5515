//! Lattice sites shared by the tiling, contour and expansion code.

use serde::{Deserialize, Serialize};

/// A site of the square lattice indexing the tiles of side `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site(pub i32, pub i32);

impl Site {
    /// Sup-norm distance between two sites.
    pub fn dist_inf(self, other: Site) -> i32 {
        (self.0 - other.0).abs().max((self.1 - other.1).abs())
    }

    /// Squared Euclidean distance between two sites.
    pub fn dist2_sq(self, other: Site) -> i64 {
        let dx = (self.0 - other.0) as i64;
        let dy = (self.1 - other.1) as i64;
        dx * dx + dy * dy
    }

    /// The eight sup-norm neighbours at distance exactly one.
    pub fn neighbors_inf(self) -> [Site; 8] {
        let Site(x, y) = self;
        [
            Site(x - 1, y - 1),
            Site(x, y - 1),
            Site(x + 1, y - 1),
            Site(x - 1, y),
            Site(x + 1, y),
            Site(x - 1, y + 1),
            Site(x, y + 1),
            Site(x + 1, y + 1),
        ]
    }
}

/// Number of lattice points in the closed Euclidean ball of radius `r`
/// centred at the origin.
pub fn euclidean_ball_count(r: i32) -> u64 {
    let rr = (r as i64) * (r as i64);
    let mut n = 0u64;
    for x in -r..=r {
        let xx = (x as i64) * (x as i64);
        for y in -r..=r {
            if xx + (y as i64) * (y as i64) <= rr {
                n += 1;
            }
        }
    }
    n
}

/// Sites of the closed Euclidean ball of radius `r` around `center`.
pub fn euclidean_ball_sites(center: Site, r: i32) -> Vec<Site> {
    let rr = (r as i64) * (r as i64);
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            let s = Site(center.0 + x, center.1 + y);
            if s.dist2_sq(center) <= rr {
                out.push(s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_counts_match_sqrt_formula() {
        // Independent route: N(r) = sum_x (2*floor(sqrt(r^2 - x^2)) + 1).
        for r in [1, 2, 6, 12, 30] {
            let rr = (r as i64) * (r as i64);
            let mut n = 0u64;
            for x in -r..=r {
                let rem = rr - (x as i64) * (x as i64);
                let mut y = (rem as f64).sqrt().floor() as i64;
                while y * y > rem {
                    y -= 1;
                }
                while (y + 1) * (y + 1) <= rem {
                    y += 1;
                }
                n += (2 * y + 1) as u64;
            }
            assert_eq!(euclidean_ball_count(r), n);
        }
    }

    #[test]
    fn known_ball_counts() {
        assert_eq!(euclidean_ball_count(6), 113);
        assert_eq!(euclidean_ball_count(30), 2821);
    }

    #[test]
    fn ball_sites_agree_with_count() {
        assert_eq!(
            euclidean_ball_sites(Site(3, -2), 6).len() as u64,
            euclidean_ball_count(6)
        );
    }
}
