//! Deterministic diffusion in piecewise-linear lifting maps.
//!
//! A lifting map `f(k + x) = k + f(x)` on the real line spreads an ensemble of
//! points like a random walk. This crate computes the diffusion coefficient
//! three independent ways (closed-form integral, leading eigenvalue of the
//! transfer operator on a Markov partition, Monte Carlo), solves for slopes
//! that admit a Markov partition, evolves lattice densities toward their
//! Gaussian limit, and simulates a billiard-channel model whose variance grows
//! cubically.

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod billiard;
pub mod density;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod map;
pub mod montecarlo;
pub mod partition;
pub mod poly;
pub mod report;
pub mod surd;
pub mod transfer;

pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
pub use map::{nearest_integer, Cylinder, Interval, LiftMap, MapSpec, Route};
pub use partition::{
    solve_partition_system, solve_three_interval, validate_consistency, MarkovPartition,
    PartitionEquationSystem, PartitionSolution,
};
pub use transfer::{
    build_transition_matrices, diffusion_spectral, stationary_density, DiffusionReport, Method,
    TransitionMatrixSet,
};
pub use density::{
    closed_form_d, evolve, gaussian_profile, heuristic_d, kolmogorov_distance, omega_approx_d,
    second_moment, LatticeDensity,
};
pub use montecarlo::{estimate_stats, scan_lambda, simulate_ensemble, EnsembleConfig, EnsembleStats};
pub use billiard::{simulate_channel, theoretical_variance, Channel, ChannelReport, Force, Wall};
