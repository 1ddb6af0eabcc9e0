//! Rewiring recommenders: who should a dissatisfied node reconnect to?

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::graph::NodeId;
use crate::learn::{select_action, Observation, RankingPolicy, SelectionMode};
use crate::rng::SimRng;
use crate::state::WorldView;

pub type MediatorId = usize;

/// Anything that can answer a rewire request. `focus` is the node about to
/// drop its edge to `dropping`; a `None` answer leaves the edge in place.
pub trait Recommender {
    fn recommend(
        &mut self,
        view: WorldView<'_>,
        focus: NodeId,
        dropping: NodeId,
        rng: &mut SimRng,
    ) -> Option<NodeId>;
}

/// Restriction of the pool to one mediator's user base (competition mode).
#[derive(Debug, Clone, Copy)]
pub struct MediatorScope<'a> {
    pub assignment: &'a [MediatorId],
    pub mediator: MediatorId,
}

/// Nodes eligible as new neighbors for a given request, ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePool {
    members: Vec<NodeId>,
}

impl CandidatePool {
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// Everyone except `focus`, its current neighbors, and `dropping`; under a
/// mediator scope, only that mediator's own users.
pub fn candidate_pool(
    view: WorldView<'_>,
    focus: NodeId,
    dropping: NodeId,
    scope: Option<MediatorScope<'_>>,
) -> CandidatePool {
    let n = view.graph.node_count();
    let mut excluded = vec![false; n];
    excluded[focus] = true;
    excluded[dropping] = true;
    for &w in view.graph.neighbors(focus) {
        excluded[w] = true;
    }
    let members = (0..n)
        .filter(|&v| !excluded[v] && scope.is_none_or(|s| s.assignment[v] == s.mediator))
        .collect();
    CandidatePool { members }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyFilter {
    DefectorsOnly,
    Any,
    CooperatorsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeSelector {
    Lowest,
    Random,
    Highest,
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown policy name {0:?}")]
pub struct UnknownPolicyName(pub String);

/// A rewiring rule. The grid variants cover every combination of strategy
/// filter and degree preference; the named aliases below are the corners
/// studied most.
#[derive(Debug, Clone)]
pub enum RewirePolicy {
    /// Never recommends anything.
    Null,
    /// Word of mouth: uniform among the dropped neighbor's own neighbors.
    /// The only rule without global knowledge.
    Local,
    Grid {
        filter: StrategyFilter,
        selector: DegreeSelector,
    },
    /// Like-for-like: cooperators get cooperators, defectors get defectors.
    Fair,
    /// Trained ranking network; selection mode decides sampling vs argmax.
    Learned(Arc<RankingPolicy>),
}

impl RewirePolicy {
    pub const GOOD: RewirePolicy = RewirePolicy::Grid {
        filter: StrategyFilter::CooperatorsOnly,
        selector: DegreeSelector::Random,
    };
    pub const BAD: RewirePolicy = RewirePolicy::Grid {
        filter: StrategyFilter::DefectorsOnly,
        selector: DegreeSelector::Random,
    };
    pub const RANDOM: RewirePolicy = RewirePolicy::Grid {
        filter: StrategyFilter::Any,
        selector: DegreeSelector::Random,
    };

    /// Resolves a registry name: the specials `GOOD`, `BAD`, `RANDOM`,
    /// `FAIR`, `NO_MED`, `NULL` plus the nine grid cells
    /// `{coop,any,defect}_{min,rand,max}`.
    pub fn from_name(name: &str) -> Result<RewirePolicy, UnknownPolicyName> {
        use DegreeSelector::*;
        use StrategyFilter::*;
        let grid = |filter, selector| RewirePolicy::Grid { filter, selector };
        Ok(match name {
            "GOOD" => RewirePolicy::GOOD,
            "BAD" => RewirePolicy::BAD,
            "RANDOM" => RewirePolicy::RANDOM,
            "FAIR" => RewirePolicy::Fair,
            "NO_MED" => RewirePolicy::Local,
            "NULL" => RewirePolicy::Null,
            "coop_min" => grid(CooperatorsOnly, Lowest),
            "coop_rand" => grid(CooperatorsOnly, Random),
            "coop_max" => grid(CooperatorsOnly, Highest),
            "any_min" => grid(Any, Lowest),
            "any_rand" => grid(Any, Random),
            "any_max" => grid(Any, Highest),
            "defect_min" => grid(DefectorsOnly, Lowest),
            "defect_rand" => grid(DefectorsOnly, Random),
            "defect_max" => grid(DefectorsOnly, Highest),
            _ => return Err(UnknownPolicyName(name.to_string())),
        })
    }

    /// All registry names, for CLI help and docs.
    pub fn registry_names() -> &'static [&'static str] {
        &[
            "GOOD", "BAD", "RANDOM", "FAIR", "NO_MED", "NULL", "coop_min", "coop_rand",
            "coop_max", "any_min", "any_rand", "any_max", "defect_min", "defect_rand",
            "defect_max",
        ]
    }

    /// Applies the rule to a precomputed pool. Empty result means no rewire.
    pub fn select(
        &self,
        view: WorldView<'_>,
        focus: NodeId,
        dropping: NodeId,
        pool: &CandidatePool,
        mode: SelectionMode,
        rng: &mut SimRng,
    ) -> Option<NodeId> {
        match self {
            RewirePolicy::Null => None,
            RewirePolicy::Local => {
                let cands: Vec<NodeId> = view
                    .graph
                    .neighbors(dropping)
                    .iter()
                    .copied()
                    .filter(|&v| pool.contains(v))
                    .collect();
                pick_uniform(&cands, rng)
            }
            RewirePolicy::Grid { filter, selector } => {
                let cands = filter.apply(view, pool);
                selector.pick(view, &cands, rng)
            }
            RewirePolicy::Fair => {
                let filter = if view.strategies[focus].is_cooperator() {
                    StrategyFilter::CooperatorsOnly
                } else {
                    StrategyFilter::DefectorsOnly
                };
                let cands = filter.apply(view, pool);
                pick_uniform(&cands, rng)
            }
            RewirePolicy::Learned(net) => {
                let obs = Observation::from_pool(view, focus, pool);
                let scored = net.score(&obs).ok()?;
                Some(select_action(&scored, mode, rng))
            }
        }
    }
}

impl StrategyFilter {
    fn apply(self, view: WorldView<'_>, pool: &CandidatePool) -> Vec<NodeId> {
        pool.members()
            .iter()
            .copied()
            .filter(|&v| match self {
                StrategyFilter::Any => true,
                StrategyFilter::CooperatorsOnly => view.strategies[v].is_cooperator(),
                StrategyFilter::DefectorsOnly => !view.strategies[v].is_cooperator(),
            })
            .collect()
    }
}

impl DegreeSelector {
    fn pick(self, view: WorldView<'_>, cands: &[NodeId], rng: &mut SimRng) -> Option<NodeId> {
        match self {
            DegreeSelector::Random => pick_uniform(cands, rng),
            DegreeSelector::Lowest => {
                let best = cands.iter().map(|&v| view.graph.degree(v)).min()?;
                let tied: Vec<NodeId> = cands
                    .iter()
                    .copied()
                    .filter(|&v| view.graph.degree(v) == best)
                    .collect();
                pick_uniform(&tied, rng)
            }
            DegreeSelector::Highest => {
                let best = cands.iter().map(|&v| view.graph.degree(v)).max()?;
                let tied: Vec<NodeId> = cands
                    .iter()
                    .copied()
                    .filter(|&v| view.graph.degree(v) == best)
                    .collect();
                pick_uniform(&tied, rng)
            }
        }
    }
}

fn pick_uniform(cands: &[NodeId], rng: &mut SimRng) -> Option<NodeId> {
    if cands.is_empty() {
        None
    } else {
        Some(cands[rng.gen_range(0..cands.len())])
    }
}

/// Plain single-policy recommender: everyone is served by the same rule,
/// pools are unrestricted.
pub struct PolicyRecommender {
    pub policy: RewirePolicy,
    pub mode: SelectionMode,
}

impl PolicyRecommender {
    pub fn new(policy: RewirePolicy) -> Self {
        PolicyRecommender {
            policy,
            mode: SelectionMode::Eval,
        }
    }

    pub fn with_mode(policy: RewirePolicy, mode: SelectionMode) -> Self {
        PolicyRecommender { policy, mode }
    }
}

impl Recommender for PolicyRecommender {
    fn recommend(
        &mut self,
        view: WorldView<'_>,
        focus: NodeId,
        dropping: NodeId,
        rng: &mut SimRng,
    ) -> Option<NodeId> {
        let pool = candidate_pool(view, focus, dropping, None);
        self.policy.select(view, focus, dropping, &pool, self.mode, rng)
    }
}
