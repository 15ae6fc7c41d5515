//! Gibbs point processes with Quermass interaction on unions of disks in the
//! plane, together with the lattice coarse-graining (spins, contours, Peierls
//! constants), an abstract polymer / cluster-expansion engine, and Monte Carlo
//! experiments that probe the liquid-gas density gap between free-type and
//! wired-type boundary conditions.
//!
//! The crate is organized by subsystem:
//!
//! * [`geometry`] — exact Minkowski functionals (area, boundary length, Euler
//!   characteristic) of finite unions of closed disks, globally and restricted
//!   to lattice tiles, plus an independent rasterization oracle used by tests.
//! * [`model`] — the Hamiltonian `V + theta1*S - theta2*chi` of the halo, local
//!   energies with finite range, per-tile energies and the parameter set.
//! * [`sampler`] — birth/death/translate Metropolis-Hastings under free, outer
//!   and spin-wired boundary conditions; density and pressure estimators.
//! * [`contours`] — spin fields, correctness classification, contour
//!   extraction with labels/types/interiors, dominoes and the Peierls
//!   constants.
//! * [`expansion`] — Ursell coefficients, cluster sums with rigorous tails,
//!   convergence certificates, truncated pressures and the gap function.
//! * [`cli`] — configuration parsing and the `quermass` command line tool.

pub mod cli;
pub mod contours;
pub mod expansion;
pub mod geometry;
pub mod lattice;
pub mod model;
pub mod sampler;

pub use geometry::{Disk, DiskUnion, MinkowskiValues, Point};
pub use lattice::Site;
pub use model::{Configuration, MarkedPoint, QuermassParams, RadiusLaw};
