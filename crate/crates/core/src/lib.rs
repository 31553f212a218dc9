//! Ordinal causal discovery.
//!
//! Fits ordinal cumulative-link Bayesian networks by maximum likelihood,
//! scores directed acyclic graphs with BIC, and searches for the causal
//! structure exhaustively (tiny graphs) or by greedy hill-climbing. Includes
//! synthetic-data generators, discretization utilities, and structure-
//! recovery metrics.

pub mod dataset;
pub mod error;
pub mod graph;
pub mod link;
pub mod metrics;
mod optim;
pub mod regression;
pub mod score;
pub mod search;
pub mod simulate;

pub use dataset::{quantile_discretize, trichotomize_zero_median, LevelsMode, OrdinalDataset};
pub use error::{Error, Result};
pub use graph::{enumerate_dags, is_acyclic, Dag, Move, MoveKind, NodeId};
pub use link::LinkFunction;
pub use metrics::{
    accuracy, auc_ranked, forced_decision, shd, total_variation, Direction, PairDecision,
};
pub use regression::{
    fit, negative_log_likelihood, nll_gradient, FitOptions, FittedNodeModel, NodeSpec,
};
pub use score::{global_bic, local_bic, LocalScore, ScoreCache, ScoreOptions};
pub use search::{exhaustive_search, greedy_search, DiscoveryResult, SearchOptions};
pub use simulate::{
    balanced_cutpoints, confounder_scenario, draw_parameters, random_dag, GroundTruthModel,
    NodeParams,
};
