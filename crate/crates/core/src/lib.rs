//! Overlapping community detection with deep residual graph convolutional
//! networks and dynamic dilated neighborhood aggregation.
//!
//! The pipeline is:
//!
//! 1. [`graph`]: load an edge list into a canonical sparse [`Graph`].
//! 2. [`augment`]: extend each neighborhood with random two-hop nodes and
//!    draw a fresh 50% sample of it for every layer ([`LayerPlan`]).
//! 3. [`encoder`]: a deep residual GCN maps node features to a nonnegative
//!    affiliation matrix `F`.
//! 4. [`loss`]: a Bernoulli–Poisson reconstruction loss scores `F` against
//!    the graph; [`training`] backpropagates it with Adam.
//! 5. [`metrics`]: threshold `F` into a cover and score it.

pub mod augment;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod loss;
pub mod metrics;
pub mod optim;
pub mod synth;
pub mod training;

pub use augment::{augment_graph, build_layer_plan, layer_plan_stats, AugmentedNeighborhoods, LayerPlan};
pub use encoder::{init_model, Checkpoint, Mode, Model, ModelConfig, NormPlacement};
pub use error::{Error, Result};
pub use graph::{
    normalize_adjacency, normalize_sampled_adjacency, AffiliationMatrix, Cover, Graph, GroundTruthCover,
    NodeFeatures, NormalizedAdjacency,
};
pub use loss::{bp_balanced_loss, bp_full_nll, bp_stochastic_loss, LossMode, LossReport};
pub use metrics::{evaluate, overlapping_nmi, MetricReport};
pub use training::{grid_search, train, train_free_variable_baseline, GridSpec, RunResult, TrainConfig};
