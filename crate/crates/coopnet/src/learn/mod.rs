//! Trainable ranking recommender: featurization, scoring network, and
//! score-function policy-gradient training.

mod net;
mod train;

pub use net::{
    pick_by_cdf, select_action, Checkpoint, CheckpointArchitecture, CheckpointTheta,
    RankingPolicy, Scored, FEATURE_DIM,
};
pub use train::{
    evaluate_policy, policy_gradient_update, rollout, train, Baseline, Decision, EvalReport,
    Trajectory, TrainerConfig, UpdateDiagnostics,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::graph::NodeId;
use crate::policy::{candidate_pool, CandidatePool};
use crate::state::WorldView;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("no valid action: every node is masked")]
    NoValidAction,
    #[error("degenerate batch: no trajectory contains a decision")]
    DegenerateBatch,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

/// How the scored distribution turns into an action: sampling during
/// training, argmax (ties to the lowest node id) during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMode {
    Train,
    Eval,
}

/// What the ranking network sees for one rewire request: per-node features
/// (strategy bit, degree normalized by N-1), the requesting node, the
/// current adjacency, and a validity mask mirroring the candidate pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub n: usize,
    pub focus: NodeId,
    pub features: Vec<[f64; 2]>,
    pub mask: Vec<bool>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Observation {
    pub fn from_pool(view: WorldView<'_>, focus: NodeId, pool: &CandidatePool) -> Observation {
        let n = view.graph.node_count();
        let norm = (n.max(2) - 1) as f64;
        let features = (0..n)
            .map(|v| {
                [
                    view.strategies[v].as_bit(),
                    view.graph.degree(v) as f64 / norm,
                ]
            })
            .collect();
        let mut mask = vec![false; n];
        for &v in pool.members() {
            mask[v] = true;
        }
        Observation {
            n,
            focus,
            features,
            mask,
            edges: view.graph.edge_list(),
        }
    }

    /// Raw degree of `v` at observation time, recovered from the
    /// normalized feature.
    pub fn degree_of(&self, v: NodeId) -> f64 {
        self.features[v][1] * (self.n.max(2) - 1) as f64
    }

    pub fn strategy_bit(&self, v: NodeId) -> f64 {
        self.features[v][0]
    }
}

/// Observation for the request in which `focus` wants to leave `dropping`.
pub fn featurize(
    view: WorldView<'_>,
    focus: NodeId,
    dropping: NodeId,
) -> Result<Observation, DynamicsError> {
    let n = view.graph.node_count();
    if focus >= n {
        return Err(DynamicsError::UnknownNode(focus));
    }
    if dropping >= n {
        return Err(DynamicsError::UnknownNode(dropping));
    }
    let pool = candidate_pool(view, focus, dropping, None);
    Ok(Observation::from_pool(view, focus, &pool))
}
