//! Boltzmann-weighted bipartite planar maps in the condensation regime.
//!
//! The pipeline is
//!
//! ```text
//! weights ──► simply generated tree ──(G_n⁻¹)──► two-coloured tree
//!         ──(uniform labels, ε)──► mobile ──(BDG)──► rooted pointed map
//! ```
//!
//! and every arrow is exact: trees are sampled by divide-and-conquer
//! conditioned convolutions, both bijections are implemented in both
//! directions, and the small cases are checked exhaustively.
//!
//! Module map:
//!
//! * [`weights`]: weight sequences `(q_i)/(w_i)`, generating-function
//!   analytics and regime classification.
//! * [`trees`]: planar trees, enumeration, exact `ν_n` sampling and the
//!   condensate decomposition around the maximal black vertex.
//! * [`bijections`]: the tree-to-tree bijection `G_n` and the BDG bijection.
//! * [`labels`]: label counting and sampling, label/distance processes.
//! * [`planarmap`]: half-edge maps, BFS, face tracing and certificates.
//! * [`stats`]: the correspondence/distortion machinery, Kolmogorov–Smirnov
//!   and χ² tests, and the experiment runners.
//! * [`gw`]: Galton–Watson views of the weights (tilting, two-type trees,
//!   leaf counts, twigs).
//! * [`harness`]: run configuration, persistence and the exhaustive
//!   verification driver used by the CLI.

pub mod bijections;
pub mod error;
pub mod gw;
pub mod harness;
pub mod io;
pub mod labels;
pub mod planarmap;
pub mod rng;
pub mod stats;
pub mod trees;
pub mod weights;

mod numeric;

pub use bijections::{bdg_forward, bdg_inverse, gn_forward, gn_inverse, Mobile};
pub use error::{Error, Result};
pub use labels::{ProcessKind, ProcessTrace};
pub use planarmap::PlanarMap;
pub use gw::GwSpec;
pub use harness::RunConfig;
pub use stats::{ExperimentSummary, Model};
pub use trees::{CondensateView, PlanarTree, TreeSampler};
pub use weights::{Regime, RegimeReport, WeightSequence};
