//! Evolutionary game dynamics on adaptive networks with pluggable rewiring
//! recommenders.
//!
//! Nodes play a two-player social dilemma against their neighbors, imitate
//! fitter strategies, and break links with defecting partners. When a link
//! breaks, a recommender proposes the replacement partner — heuristics,
//! a learned ranking policy, or nothing at all. On top of that sit mediator
//! competition (several recommenders with exclusive user bases, adopted by
//! payoff imitation) and a REINFORCE trainer for the learned policy.
//!
//! Everything is deterministic given a seed: replicate batches produce
//! identical results whether run sequentially or on the rayon pool
//! (`parallel` feature, on by default).

pub mod competition;
pub mod config;
pub mod dynamics;
pub mod game;
pub mod graph;
pub mod learn;
pub mod metrics;
pub mod policy;
pub mod replicate;
pub mod rng;
pub mod state;

pub use competition::{
    run_adoption_experiment, run_competition_episode, AdoptionSummary, CompetitionConfig,
};
pub use config::SimConfig;
pub use dynamics::{run_episode, simulation_step, StepCounters};
pub use game::{GameMatrix, Strategy};
pub use graph::{Graph, NodeId};
pub use learn::{evaluate_policy, train, RankingPolicy, SelectionMode, TrainerConfig};
pub use metrics::{aggregate, EpisodeResult, RewardKind, RunRow, Summary};
pub use policy::{PolicyRecommender, Recommender, RewirePolicy};
pub use state::NetworkState;
