//! Mutable simulation state: topology, strategy vector, generator.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::game::Strategy;
use crate::graph::{Graph, NodeId};
use crate::rng::{dynamics_rng, SimRng};

/// Read-only view of topology plus strategies, the input every policy and
/// payoff computation works from.
#[derive(Clone, Copy)]
pub struct WorldView<'a> {
    pub graph: &'a Graph,
    pub strategies: &'a [Strategy],
}

#[derive(Debug, Error)]
pub enum InitError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no connected graph found in {attempts} attempts (N = {n}, k = {k})")]
    Disconnected { attempts: usize, n: usize, k: usize },
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("strategy vector length {got} does not match N = {n}")]
    StrategyLength { n: usize, got: usize },
    #[error("edge ({0}, {1}) is invalid (out of range, loop, or duplicate)")]
    BadEdge(NodeId, NodeId),
}

/// Serializable copy of a state, without the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub n: usize,
    pub strategies: Vec<Strategy>,
    pub edges: Vec<(NodeId, NodeId)>,
}

const CONNECT_ATTEMPTS: usize = 100;

pub struct NetworkState {
    pub graph: Graph,
    strategies: Vec<Strategy>,
    pub(crate) rng: SimRng,
    coop_count: usize,
}

impl NetworkState {
    /// Draws a uniform random graph with exactly `N * k / 2` edges,
    /// retrying until connected, then assigns strategies by independent
    /// coin flips with cooperator probability `coop_init`.
    pub fn init_random(config: &SimConfig) -> Result<Self, InitError> {
        config.validate()?;
        let n = config.n;
        let m = config.edge_target();
        let mut rng = dynamics_rng(config.seed);

        let mut graph = None;
        for _ in 0..CONNECT_ATTEMPTS {
            let g = random_graph(n, m, &mut rng);
            if g.is_connected() {
                graph = Some(g);
                break;
            }
        }
        let graph = graph.ok_or(InitError::Disconnected {
            attempts: CONNECT_ATTEMPTS,
            n,
            k: config.k,
        })?;

        let strategies: Vec<Strategy> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < config.coop_init {
                    Strategy::Cooperate
                } else {
                    Strategy::Defect
                }
            })
            .collect();
        let coop_count = strategies.iter().filter(|s| s.is_cooperator()).count();

        Ok(NetworkState {
            graph,
            strategies,
            rng,
            coop_count,
        })
    }

    /// Assembles a state from explicit parts; for tests and replays.
    ///
    /// Panics if the strategy vector length differs from the node count.
    pub fn from_parts(graph: Graph, strategies: Vec<Strategy>, seed: u64) -> Self {
        assert_eq!(graph.node_count(), strategies.len());
        let coop_count = strategies.iter().filter(|s| s.is_cooperator()).count();
        NetworkState {
            graph,
            strategies,
            rng: dynamics_rng(seed),
            coop_count,
        }
    }

    pub fn view(&self) -> WorldView<'_> {
        WorldView {
            graph: &self.graph,
            strategies: &self.strategies,
        }
    }

    /// Splits the borrow so callers can read the world while drawing from
    /// the generator (recommenders take both).
    pub fn view_and_rng(&mut self) -> (WorldView<'_>, &mut SimRng) {
        (
            WorldView {
                graph: &self.graph,
                strategies: &self.strategies,
            },
            &mut self.rng,
        )
    }

    pub fn node_count(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn strategy(&self, v: NodeId) -> Strategy {
        self.strategies[v]
    }

    pub fn set_strategy(&mut self, v: NodeId, s: Strategy) {
        let old = self.strategies[v];
        if old != s {
            match s {
                Strategy::Cooperate => self.coop_count += 1,
                Strategy::Defect => self.coop_count -= 1,
            }
            self.strategies[v] = s;
        }
    }

    pub fn coop_count(&self) -> usize {
        self.coop_count
    }

    /// All-cooperator or all-defector populations are absorbing: no
    /// strategy update can change anything and no rewiring dissatisfaction
    /// remains (or matters), so episodes stop here.
    pub fn is_strategy_homogeneous(&self) -> bool {
        self.coop_count == 0 || self.coop_count == self.strategies.len()
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            n: self.strategies.len(),
            strategies: self.strategies.clone(),
            edges: self.graph.edge_list(),
        }
    }

    pub fn from_snapshot(snap: &StateSnapshot, seed: u64) -> Result<Self, SnapshotError> {
        if snap.strategies.len() != snap.n {
            return Err(SnapshotError::StrategyLength {
                n: snap.n,
                got: snap.strategies.len(),
            });
        }
        let mut graph = Graph::with_nodes(snap.n);
        for &(a, b) in &snap.edges {
            if a >= snap.n || b >= snap.n || a == b || graph.has_edge(a, b) {
                return Err(SnapshotError::BadEdge(a, b));
            }
            graph.add_edge(a, b);
        }
        Ok(NetworkState::from_parts(graph, snap.strategies.clone(), seed))
    }
}

/// Uniform simple graph with exactly `m` edges: rejection-sample pairs
/// until `m` distinct ones are placed.
fn random_graph(n: usize, m: usize, rng: &mut SimRng) -> Graph {
    let mut g = Graph::with_nodes(n);
    while g.edge_count() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !g.has_edge(a, b) {
            g.add_edge(a, b);
        }
    }
    g
}
