//! Undirected simple graph on a fixed node set, adjacency-list backed.
//!
//! The node set never changes after construction; edges move one at a time
//! through [`Graph::rewire`], which conserves the edge count. Self-loops and
//! parallel edges are rejected in debug builds and never produced by the
//! dynamics.

use rand::Rng;

use crate::rng::SimRng;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    edges: usize,
}

impl Graph {
    pub fn with_nodes(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edges: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        let (probe, other) = if self.adj[a].len() <= self.adj[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adj[probe].contains(&other)
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) {
        debug_assert_ne!(a, b, "self-loop");
        debug_assert!(!self.has_edge(a, b), "parallel edge {a}-{b}");
        self.adj[a].push(b);
        self.adj[b].push(a);
        self.edges += 1;
    }

    /// Removes `a`-`b` if present. Neighbor order is not preserved.
    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        let Some(ia) = self.adj[a].iter().position(|&x| x == b) else {
            return false;
        };
        self.adj[a].swap_remove(ia);
        let ib = self.adj[b]
            .iter()
            .position(|&x| x == a)
            .expect("asymmetric adjacency");
        self.adj[b].swap_remove(ib);
        self.edges -= 1;
        true
    }

    /// Replaces edge `from`-`drop` with `from`-`to`. The caller guarantees
    /// `from`-`drop` exists and `from`-`to` does not.
    pub fn rewire(&mut self, from: NodeId, drop: NodeId, to: NodeId) {
        let removed = self.remove_edge(from, drop);
        debug_assert!(removed, "rewire of missing edge {from}-{drop}");
        self.add_edge(from, to);
    }

    pub fn random_neighbor(&self, v: NodeId, rng: &mut SimRng) -> Option<NodeId> {
        let nbrs = &self.adj[v];
        if nbrs.is_empty() {
            None
        } else {
            Some(nbrs[rng.gen_range(0..nbrs.len())])
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut visited = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    visited += 1;
                    stack.push(w);
                }
            }
        }
        visited == n
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Population variance of the degree sequence (divides by N).
    pub fn degree_variance(&self) -> f64 {
        let n = self.node_count();
        if n == 0 {
            return 0.0;
        }
        let mean = 2.0 * self.edges as f64 / n as f64;
        self.adj
            .iter()
            .map(|nbrs| {
                let d = nbrs.len() as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64
    }

    /// Edges as ordered pairs `(a, b)` with `a < b`, sorted; canonical form
    /// for snapshots and comparisons.
    pub fn edge_list(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges = Vec::with_capacity(self.edges);
        for (a, nbrs) in self.adj.iter().enumerate() {
            for &b in nbrs {
                if a < b {
                    edges.push((a, b));
                }
            }
        }
        edges.sort_unstable();
        edges
    }

    pub fn from_edge_list(n: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut g = Graph::with_nodes(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }
}
