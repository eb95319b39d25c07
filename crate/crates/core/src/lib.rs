//! Thermo-economic governance primitives for a simulated compute cluster.
//!
//! The crate is split along the layers of the architecture:
//!
//! * [`dualfield`] – the lattice manifold, GPR field projection, dual-number
//!   time extension, entropic price caps and the virtual magnetic field.
//! * [`agents`] – Langevin workload particles: mass/charge, maximum-entropy
//!   initialization, the force law integrator, virtual probing and JIT bidding.
//! * [`ledger`] – federated zone ledgers: sequenced ingestion, the quad-tree
//!   FOK order book, Vickrey settlement and token evaporation.
//! * [`nodesim`] – per-node memory semantics: glassy throttling and the airlock
//!   evacuation mutex.
//! * [`governor`] – the macro controller: Reynolds analog, entropy production,
//!   Landau damping and the high-order barrier filter.
//!
//! Everything is deterministic given a seed.

pub mod agents;
pub mod dualfield;
pub mod governor;
pub mod ledger;
pub mod nodesim;
pub mod rng;

pub use dualfield::{DualScalar, Grid, LatticeDomain, Vec2};
pub use ledger::Tokens;
