//! Discrete time-slot simulator for adaptive-clustering entanglement routing
//! on quantum networks.
//!
//! The library is organized along the stages of the protocol:
//!
//! - [`topo`]: network graphs, topology generators (grid, Waxman) and
//!   time/space-varying parameter schedules.
//! - [`percolate`]: per-request link sampling, the local fusion protocol,
//!   and link-graph connectivity checks.
//! - [`cluster`]: cluster partitions, Girvan-Newman splitting, Kemeny-based
//!   merge selection, threshold tables, and epoch reconfiguration.
//! - [`route`]: cluster-path selection and randomized-priority qubit
//!   assignment.
//! - [`engine`]: the slot/epoch simulation loop and metric logging.
//! - [`calibrate`]: threshold derivation via static-configuration sweeps.
//!
//! All randomness flows from a single master seed through named sub-streams
//! (see [`rng`]), so any run is bit-reproducible from its config and seed.

pub mod calibrate;
pub mod cluster;
pub mod engine;
pub mod error;
pub mod percolate;
pub mod rng;
pub mod route;
pub mod topo;

pub use error::{Error, Result};
