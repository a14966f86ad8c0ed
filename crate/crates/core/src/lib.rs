//! Geospatial decentralization analysis for Proof-of-Stake validator sets.
//!
//! * [`geodata`]: snapshot loading, great-circle distances, proximity merging
//!   and latency matrices.
//! * [`metrics`]: Gini, eigenvector-centrality Gini (GEC), Nakamoto
//!   coefficient, entropy, country and proximity Gini, KDE grids.
//! * [`gpos`]: geospatial diversity index and geospatially-aware voting power,
//!   proposer selection, coalition and sybil analyses.
//! * [`reconfig`]: epoch reconfiguration and the location-dispute ledger.
//! * [`simnet`]: discrete-event simulation of weighted-quorum BFT consensus.

pub mod geodata;
pub mod gpos;
pub mod metrics;
pub mod reconfig;
pub mod simnet;

pub use geodata::{Coordinates, ValidatorRecord, ValidatorSet};
pub use gpos::{GdiVector, WeightVector};
pub use metrics::MetricReport;
