//! Simulation and verification toolkit for the Moran birth-death process on
//! undirected graphs.
//!
//! * [`graph`]: compressed adjacency graphs, volume, harmonic volume,
//!   conductance.
//! * [`families`]: the layered strong-suppressor and strong-amplifier
//!   constructions, baselines, random regular graphs.
//! * [`engine`]: exact-distribution simulation, full-step and jump-chain.
//! * [`exact`]: exact fixation probabilities (2^V solve, closed forms,
//!   lumped star, birth-death chains).
//! * [`chains`]: the auxiliary birth-death chain, its coupling with the
//!   Moran process on the amplifier, and the constrained gambler's ruin.
//! * [`bounds`]: graph-level fixation and extinction bounds.
//! * [`estimator`]: Monte Carlo estimation with Wilson intervals and sweeps.

pub mod bounds;
pub mod chains;
pub mod engine;
pub mod estimator;
pub mod exact;
pub mod families;
pub mod graph;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use graph::{Graph, GraphError, VertexSet};
