//! Low-dimensional ℓ1 embeddings for capped metrics.
//!
//! * [`snake`]: lazy snaking of line metrics under a fixed or Lipschitz cap.
//! * [`caterpillar`]: heavy-light decomposition, snipped isometric embedding
//!   and the fixed-cap tree embedder.
//! * [`build_clean`]: the build/clean tree embedder for Lipschitz caps.
//! * [`ising`]: tree Ising models, exact disagreement oracles and the two
//!   model embedders.
//! * [`capped_l1`]: capped ℓ1 point sets.
//! * [`gen`], [`diamond`], [`eval`]: instance generators and the distortion
//!   harness used by the CLI.

pub mod build_clean;
pub mod capped_l1;
pub mod caterpillar;
pub mod diamond;
pub mod error;
pub mod eval;
pub mod gen;
pub mod io;
pub mod ising;
pub mod metric;
pub mod rng;
pub mod snake;

pub use error::{Error, Result};
pub use metric::{
    capped_distance, eval_distortion, log_scale, tree_distance, CapAssignment, CapMode, Distortion,
    Embedding, LineMetric, PointSet, WeightedTree,
};
pub use rng::RngSeed;
