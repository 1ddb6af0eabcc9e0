//! Event-level update rule and episode driver.
//!
//! Each step picks a focus node `x` and a uniform neighbor `y`, then flips a
//! coin: with probability `1/(1+W)` the step is a strategy update (x imitates
//! y by the fermi rule), otherwise it is a structural update in which a node
//! unhappy about a defecting neighbor may drop that edge and reconnect to a
//! node suggested by a [`Recommender`].

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::game::{fermi, GameMatrix};
use crate::graph::NodeId;
use crate::metrics::{finalize_episode, EpisodeResult};
use crate::policy::Recommender;
use crate::state::{InitError, NetworkState, WorldView};

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("node {0} out of range")]
    UnknownNode(NodeId),
    #[error("nodes {0} and {1} are not neighbors")]
    NotNeighbors(NodeId, NodeId),
    #[error("failed to sample a non-isolated focus node in {budget} tries")]
    IsolatedFocus { budget: usize },
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Event counts accumulated over an episode.
///
/// Totals are nested: every executed rewire came from a request, every
/// request from an opportunity (a structural event whose neighbor defects),
/// every opportunity from a structural update, and strategy plus structural
/// updates partition the steps.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounters {
    pub steps: u64,
    pub strategy_updates: u64,
    pub structural_updates: u64,
    pub rewire_opportunities: u64,
    pub rewire_requests: u64,
    pub rewires_executed: u64,
    /// Step index at which the episode stopped (time limit or absorption).
    pub stop_time: u64,
}

impl StepCounters {
    pub fn is_consistent(&self) -> bool {
        self.rewires_executed <= self.rewire_requests
            && self.rewire_requests <= self.rewire_opportunities
            && self.rewire_opportunities <= self.structural_updates
            && self.structural_updates <= self.steps
            && self.strategy_updates + self.structural_updates == self.steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewireOutcome {
    /// The neighbor cooperates; nobody wants to move.
    Satisfied,
    /// A cooperator lost the fitness draw against its defecting neighbor
    /// and stays put.
    KeptEdge,
    /// `actor` replaced its edge to `dropped` with one to `adopted`.
    Rewired {
        actor: NodeId,
        dropped: NodeId,
        adopted: NodeId,
    },
    /// The winning node asked for a recommendation but none was available.
    NoCandidate { actor: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Strategy { changed: bool },
    Structural(RewireOutcome),
}

fn ensure_edge(view: WorldView<'_>, x: NodeId, y: NodeId) -> Result<(), DynamicsError> {
    let n = view.graph.node_count();
    if x >= n {
        return Err(DynamicsError::UnknownNode(x));
    }
    if y >= n {
        return Err(DynamicsError::UnknownNode(y));
    }
    if !view.graph.has_edge(x, y) {
        return Err(DynamicsError::NotNeighbors(x, y));
    }
    Ok(())
}

fn payoff_of(view: WorldView<'_>, game: &GameMatrix, v: NodeId) -> f64 {
    let mine = view.strategies[v];
    view.graph
        .neighbors(v)
        .iter()
        .map(|&w| game.payoff(mine, view.strategies[w]))
        .sum()
}

/// Sum of one-shot payoffs of `v` against each current neighbor.
pub fn cumulative_payoff(
    view: WorldView<'_>,
    game: &GameMatrix,
    v: NodeId,
) -> Result<f64, DynamicsError> {
    if v >= view.graph.node_count() {
        return Err(DynamicsError::UnknownNode(v));
    }
    Ok(payoff_of(view, game, v))
}

/// `x` imitates neighbor `y` with probability `fermi(payoff_y - payoff_x)`.
/// Returns whether `x`'s strategy actually changed. Consumes exactly one
/// uniform draw.
pub fn strategy_update(
    state: &mut NetworkState,
    game: &GameMatrix,
    beta: f64,
    x: NodeId,
    y: NodeId,
) -> Result<bool, DynamicsError> {
    ensure_edge(state.view(), x, y)?;
    let px = payoff_of(state.view(), game, x);
    let py = payoff_of(state.view(), game, y);
    let p = fermi(py - px, beta);
    if state.rng.gen::<f64>() < p {
        let target = state.strategy(y);
        let changed = state.strategy(x) != target;
        state.set_strategy(x, target);
        Ok(changed)
    } else {
        Ok(false)
    }
}

/// Structural event on the edge `x`-`y`.
///
/// If `y` cooperates nothing happens. Otherwise this is a rewire
/// opportunity: when `x` cooperates it walks away with probability
/// `fermi(payoff_x - payoff_y)`; when both defect that same draw decides
/// which endpoint escapes. The winner asks `resolver` for a replacement
/// neighbor; an empty recommendation still counts as a request.
pub fn structural_update(
    state: &mut NetworkState,
    game: &GameMatrix,
    beta: f64,
    resolver: &mut dyn Recommender,
    x: NodeId,
    y: NodeId,
    counters: &mut StepCounters,
) -> Result<RewireOutcome, DynamicsError> {
    ensure_edge(state.view(), x, y)?;
    counters.structural_updates += 1;
    if state.strategy(y).is_cooperator() {
        return Ok(RewireOutcome::Satisfied);
    }
    counters.rewire_opportunities += 1;

    let px = payoff_of(state.view(), game, x);
    let py = payoff_of(state.view(), game, y);
    let x_wins = state.rng.gen::<f64>() < fermi(px - py, beta);
    let (actor, dropped) = if state.strategy(x).is_cooperator() {
        if x_wins {
            (x, y)
        } else {
            return Ok(RewireOutcome::KeptEdge);
        }
    } else if x_wins {
        (x, y)
    } else {
        (y, x)
    };

    counters.rewire_requests += 1;
    let choice = {
        let (view, rng) = state.view_and_rng();
        resolver.recommend(view, actor, dropped, rng)
    };
    match choice {
        Some(z) => {
            debug_assert!(
                z != actor && z != dropped && !state.graph.has_edge(actor, z),
                "recommender returned invalid candidate {z}"
            );
            state.graph.rewire(actor, dropped, z);
            counters.rewires_executed += 1;
            Ok(RewireOutcome::Rewired {
                actor,
                dropped,
                adopted: z,
            })
        }
        None => Ok(RewireOutcome::NoCandidate { actor }),
    }
}

const ISOLATED_RETRY_FACTOR: usize = 8;

/// Uniform focus node (resampled while isolated, bounded retries) plus a
/// uniform neighbor. Shared by every event type so that alternative drivers
/// consume the exact same draw schedule.
pub(crate) fn sample_interacting_pair(
    state: &mut NetworkState,
) -> Result<(NodeId, NodeId), DynamicsError> {
    let n = state.node_count();
    let budget = (ISOLATED_RETRY_FACTOR * n).max(64);
    let mut x = state.rng.gen_range(0..n);
    let mut tries = 0;
    while state.graph.degree(x) == 0 {
        tries += 1;
        if tries >= budget {
            return Err(DynamicsError::IsolatedFocus { budget });
        }
        x = state.rng.gen_range(0..n);
    }
    let y = state
        .graph
        .random_neighbor(x, &mut state.rng)
        .expect("focus has positive degree");
    Ok((x, y))
}

/// One event: samples the focus pair, branches on the `W` coin, delegates.
pub fn simulation_step(
    state: &mut NetworkState,
    game: &GameMatrix,
    config: &SimConfig,
    resolver: &mut dyn Recommender,
    counters: &mut StepCounters,
) -> Result<StepOutcome, DynamicsError> {
    let (x, y) = sample_interacting_pair(state)?;

    // Strategy update with probability 1/(1+W); the expression handles both
    // W = 0 (always strategy) and W = inf (never) without special cases.
    let strategy_branch = state.rng.gen::<f64>() < 1.0 / (1.0 + config.w);

    counters.steps += 1;
    let outcome = if strategy_branch {
        counters.strategy_updates += 1;
        let changed = strategy_update(state, game, config.beta, x, y)?;
        StepOutcome::Strategy { changed }
    } else {
        StepOutcome::Structural(structural_update(
            state,
            game,
            config.beta,
            resolver,
            x,
            y,
            counters,
        )?)
    };
    debug_assert!(counters.is_consistent());
    Ok(outcome)
}

/// Full run: fresh random state from `config.seed`, stepping until the time
/// limit or strategy absorption (all-C / all-D), then final measurements.
pub fn run_episode(
    config: &SimConfig,
    game: &GameMatrix,
    resolver: &mut dyn Recommender,
) -> Result<EpisodeResult, EpisodeError> {
    let mut state = NetworkState::init_random(config)?;
    let mut counters = StepCounters::default();
    while counters.steps < config.time_limit && !state.is_strategy_homogeneous() {
        simulation_step(&mut state, game, config, resolver, &mut counters)?;
    }
    counters.stop_time = counters.steps;
    Ok(finalize_episode(state.view(), counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Strategy::{self, Cooperate, Defect};
    use crate::graph::Graph;
    use crate::policy::{DegreeSelector, PolicyRecommender, RewirePolicy, StrategyFilter};

    const HARD: f64 = 50.0; // selection so strong that fermi saturates

    fn any_random() -> PolicyRecommender {
        PolicyRecommender::new(RewirePolicy::Grid {
            filter: StrategyFilter::Any,
            selector: DegreeSelector::Random,
        })
    }

    /// 0-1 edge plus some padding nodes connected to 1 so pools exist.
    fn line_state(s0: Strategy, s1: Strategy, seed: u64) -> NetworkState {
        let g = Graph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        NetworkState::from_parts(g, vec![s0, s1, Cooperate, Cooperate, Cooperate], seed)
    }

    #[test]
    fn cumulative_payoff_sums_neighbors() {
        let g = Graph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3)]);
        let state = NetworkState::from_parts(g, vec![Cooperate, Cooperate, Defect, Defect], 0);
        let game = GameMatrix::new(1.5, -0.5).unwrap();
        // C against C, D, D: 1 - 0.5 - 0.5 = 0
        assert_eq!(cumulative_payoff(state.view(), &game, 0).unwrap(), 0.0);
        // leaf C against C
        assert_eq!(cumulative_payoff(state.view(), &game, 1).unwrap(), 1.0);
        // leaf D against C
        assert_eq!(cumulative_payoff(state.view(), &game, 2).unwrap(), 1.5);
        assert_eq!(
            cumulative_payoff(state.view(), &game, 9),
            Err(DynamicsError::UnknownNode(9))
        );
    }

    #[test]
    fn strategy_update_follows_fitness() {
        let game = GameMatrix::prisoners_dilemma();
        // 0 is a cooperator earning S = -1 from its lone defecting neighbor;
        // 1 earns T twice (against 0 and 2) for a payoff of 4. At HARD
        // selection the poorer node copies the richer one with certainty.
        for seed in 0..50 {
            let mut st = line_state(Cooperate, Defect, seed);
            let changed = strategy_update(&mut st, &game, HARD, 0, 1).unwrap();
            assert!(changed, "seed {seed}");
            assert_eq!(st.strategy(0), Defect);
        }
        // Mirror: the fitter node essentially never copies the poorer one.
        for seed in 0..50 {
            let mut st = line_state(Cooperate, Defect, seed);
            let changed = strategy_update(&mut st, &game, HARD, 1, 0).unwrap();
            assert!(!changed);
            assert_eq!(st.strategy(1), Defect);
        }
    }

    #[test]
    fn strategy_update_requires_edge() {
        let mut st = line_state(Cooperate, Defect, 0);
        assert_eq!(
            strategy_update(&mut st, &GameMatrix::prisoners_dilemma(), 1.0, 0, 3),
            Err(DynamicsError::NotNeighbors(0, 3))
        );
    }

    #[test]
    fn structural_update_satisfied_when_neighbor_cooperates() {
        let mut st = line_state(Defect, Cooperate, 0);
        let mut c = StepCounters::default();
        let out = structural_update(
            &mut st,
            &GameMatrix::prisoners_dilemma(),
            1.0,
            &mut any_random(),
            0,
            1,
            &mut c,
        )
        .unwrap();
        assert_eq!(out, RewireOutcome::Satisfied);
        assert_eq!(c.structural_updates, 1);
        assert_eq!(c.rewire_opportunities, 0);
        assert_eq!(c.rewire_requests, 0);
    }

    #[test]
    fn cooperator_escapes_when_fitter() {
        let game = GameMatrix::prisoners_dilemma();
        for seed in 0..30 {
            // 0: C with four cooperator friends plus defector 1 -> 4 + S = 3.
            // 1: D whose only neighbor is 0 -> T = 2. 0 is fitter, so at
            // HARD selection it always wins the right to walk away.
            let g = Graph::from_edge_list(
                7,
                &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (5, 6), (4, 6)],
            );
            let strat = vec![
                Cooperate, Defect, Cooperate, Cooperate, Cooperate, Cooperate, Cooperate,
            ];
            let mut st = NetworkState::from_parts(g, strat, seed);
            let mut c = StepCounters::default();
            let out = structural_update(&mut st, &game, HARD, &mut any_random(), 0, 1, &mut c)
                .unwrap();
            match out {
                RewireOutcome::Rewired {
                    actor,
                    dropped,
                    adopted,
                } => {
                    assert_eq!(actor, 0);
                    assert_eq!(dropped, 1);
                    // pool excludes 0, its neighbors, and 1 => only 6 remains
                    assert_eq!(adopted, 6);
                    assert!(!st.graph.has_edge(0, 1));
                    assert!(st.graph.has_edge(0, 6));
                    assert_eq!(st.graph.degree(0), 5);
                    assert_eq!(st.graph.degree(1), 0);
                }
                other => panic!("expected rewire, got {other:?} (seed {seed})"),
            }
            assert_eq!(
                (c.rewire_opportunities, c.rewire_requests, c.rewires_executed),
                (1, 1, 1)
            );
        }
    }

    #[test]
    fn losing_cooperator_keeps_edge() {
        let game = GameMatrix::prisoners_dilemma();
        for seed in 0..30 {
            // 0: C with payoff S = -1; 1: D milking two cooperators -> 2T = 4.
            let g = Graph::from_edge_list(4, &[(0, 1), (1, 2), (2, 3)]);
            let mut st =
                NetworkState::from_parts(g, vec![Cooperate, Defect, Cooperate, Cooperate], seed);
            let mut c = StepCounters::default();
            let out = structural_update(&mut st, &game, HARD, &mut any_random(), 0, 1, &mut c)
                .unwrap();
            assert_eq!(out, RewireOutcome::KeptEdge);
            assert!(st.graph.has_edge(0, 1));
            // the lost contest is an opportunity but no request was made
            assert_eq!((c.rewire_opportunities, c.rewire_requests), (1, 0));
        }
    }

    #[test]
    fn defector_pair_loser_is_rewired_away_from() {
        let game = GameMatrix::prisoners_dilemma();
        for seed in 0..30 {
            // 0 and 1 both defect; 1 exploits cooperators 2,3 (payoff 4),
            // 0 has only the 0-1 edge (payoff 0). 1 wins and escapes.
            let g = Graph::from_edge_list(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
            let strat = vec![Defect, Defect, Cooperate, Cooperate, Cooperate];
            let mut st = NetworkState::from_parts(g, strat, seed);
            let mut c = StepCounters::default();
            let out = structural_update(&mut st, &game, HARD, &mut any_random(), 0, 1, &mut c)
                .unwrap();
            match out {
                RewireOutcome::Rewired {
                    actor,
                    dropped,
                    adopted,
                } => {
                    assert_eq!((actor, dropped), (1, 0));
                    // 1's pool: everyone minus {1, neighbors of 1, 0} = {4}
                    assert_eq!(adopted, 4);
                    assert_eq!(st.graph.degree(0), 0);
                }
                other => panic!("expected rewire, got {other:?}"),
            }
            assert_eq!((c.rewire_requests, c.rewires_executed), (1, 1));
        }
    }

    #[test]
    fn null_policy_counts_requests_without_rewiring() {
        let game = GameMatrix::prisoners_dilemma();
        let g = Graph::from_edge_list(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
        let strat = vec![Defect, Defect, Cooperate, Cooperate, Cooperate];
        let mut st = NetworkState::from_parts(g, strat, 7);
        let mut c = StepCounters::default();
        let mut null = PolicyRecommender::new(RewirePolicy::Null);
        let out =
            structural_update(&mut st, &game, HARD, &mut null, 0, 1, &mut c).unwrap();
        assert!(matches!(out, RewireOutcome::NoCandidate { actor: 1 }));
        assert_eq!((c.rewire_requests, c.rewires_executed), (1, 0));
        assert!(st.graph.has_edge(0, 1));
    }

    #[test]
    fn step_branch_respects_w() {
        let game = GameMatrix::prisoners_dilemma();
        let mut cfg = SimConfig::new(10, 4, 0.1, 0.0, 1000, 3).unwrap();
        let mut st = NetworkState::init_random(&cfg).unwrap();
        let mut c = StepCounters::default();
        for _ in 0..200 {
            let out = simulation_step(&mut st, &game, &cfg, &mut any_random(), &mut c).unwrap();
            assert!(matches!(out, StepOutcome::Strategy { .. }));
        }
        assert_eq!(c.strategy_updates, 200);
        assert_eq!(c.structural_updates, 0);

        cfg.w = f64::INFINITY;
        let mut st = NetworkState::init_random(&cfg).unwrap();
        let mut c = StepCounters::default();
        for _ in 0..200 {
            let out = simulation_step(&mut st, &game, &cfg, &mut any_random(), &mut c).unwrap();
            assert!(matches!(out, StepOutcome::Structural(_)));
        }
        assert_eq!(c.structural_updates, 200);
        assert!(c.is_consistent());
    }

    #[test]
    fn step_resamples_isolated_focus() {
        let game = GameMatrix::prisoners_dilemma();
        // node 2 is isolated; must never be chosen as focus
        let g = Graph::from_edge_list(3, &[(0, 1)]);
        let mut st = NetworkState::from_parts(g, vec![Cooperate, Defect, Cooperate], 5);
        let cfg = SimConfig {
            n: 3,
            k: 2,
            beta: 0.1,
            w: 0.0,
            time_limit: 100,
            seed: 5,
            coop_init: 0.5,
        };
        let mut c = StepCounters::default();
        let mut null = PolicyRecommender::new(RewirePolicy::Null);
        for _ in 0..100 {
            simulation_step(&mut st, &game, &cfg, &mut null, &mut c).unwrap();
        }
        assert_eq!(c.steps, 100);
    }

    #[test]
    fn episode_stops_at_absorption_or_limit() {
        let game = GameMatrix::prisoners_dilemma();
        let cfg = SimConfig::new(10, 4, 0.1, 1.0, 2_000, 42).unwrap();
        let r = run_episode(&cfg, &game, &mut any_random()).unwrap();
        assert!(r.counters.is_consistent());
        assert!(r.stop_time <= 2_000);
        assert_eq!(r.stop_time, r.counters.steps);
        if r.stop_time < 2_000 {
            assert!(r.coop_fraction == 0.0 || r.coop_fraction == 1.0);
        }
    }

    #[test]
    fn all_cooperator_init_stops_immediately() {
        let game = GameMatrix::prisoners_dilemma();
        let mut cfg = SimConfig::new(10, 4, 0.1, 1.0, 1_000, 1).unwrap();
        cfg.coop_init = 1.0;
        let r = run_episode(&cfg, &game, &mut any_random()).unwrap();
        assert_eq!(r.stop_time, 0);
        assert_eq!(r.coop_fraction, 1.0);
        assert_eq!(r.counters, StepCounters::default());
    }

    #[test]
    fn episodes_are_reproducible() {
        let game = GameMatrix::new(1.3, -0.4).unwrap();
        let cfg = SimConfig::new(30, 8, 0.05, 1.0, 3_000, 2024).unwrap();
        let a = run_episode(&cfg, &game, &mut any_random()).unwrap();
        let b = run_episode(&cfg, &game, &mut any_random()).unwrap();
        assert_eq!(a, b);
    }
}
