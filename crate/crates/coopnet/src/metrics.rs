//! Per-episode measurements, reward functions, and cross-run aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::rate_serde;
use crate::dynamics::StepCounters;
use crate::game::Strategy;
use crate::graph::Graph;
use crate::policy::MediatorId;
use crate::state::WorldView;

/// Final share and request volume of one mediator in a competition episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediatorStats {
    pub share: f64,
    pub rewire_requests: u64,
}

/// Everything measured at the end of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub coop_fraction: f64,
    pub counters: StepCounters,
    /// Population variance of the final degree sequence.
    pub heterogeneity: f64,
    pub max_degree: u64,
    pub stop_time: u64,
    /// Present only for competition episodes.
    pub per_mediator: Option<BTreeMap<MediatorId, MediatorStats>>,
}

pub fn coop_fraction(strategies: &[Strategy]) -> f64 {
    let coops = strategies.iter().filter(|s| s.is_cooperator()).count();
    coops as f64 / strategies.len() as f64
}

pub fn heterogeneity(graph: &Graph) -> f64 {
    graph.degree_variance()
}

/// Executed rewires normalized by opportunities; comparable across `W`.
pub fn rewires_per_opportunity(c: &StepCounters) -> f64 {
    c.rewires_executed as f64 / (c.rewire_opportunities.max(1)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// 2 * (cooperator fraction - 1/2): +1 for full cooperation, -1 for none.
    Cooperation,
    /// Total rewire requests made to the recommender.
    Engagement,
}

pub fn reward(kind: RewardKind, result: &EpisodeResult) -> f64 {
    match kind {
        RewardKind::Cooperation => 2.0 * (result.coop_fraction - 0.5),
        RewardKind::Engagement => result.counters.rewire_requests as f64,
    }
}

/// Reward from one mediator's point of view in a competition episode.
/// Cooperation is a global outcome; engagement counts only the requests the
/// given mediator answered. `None` if the episode has no such mediator.
pub fn mediator_reward(
    kind: RewardKind,
    result: &EpisodeResult,
    mediator: MediatorId,
) -> Option<f64> {
    let stats = result.per_mediator.as_ref()?.get(&mediator)?;
    Some(match kind {
        RewardKind::Cooperation => 2.0 * (result.coop_fraction - 0.5),
        RewardKind::Engagement => stats.rewire_requests as f64,
    })
}

/// Builds the result for a finished episode from the final state.
pub fn finalize_episode(view: WorldView<'_>, counters: StepCounters) -> EpisodeResult {
    EpisodeResult {
        coop_fraction: coop_fraction(view.strategies),
        heterogeneity: heterogeneity(view.graph),
        max_degree: view.graph.max_degree() as u64,
        stop_time: counters.stop_time,
        counters,
        per_mediator: None,
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("cannot aggregate an empty result list")]
pub struct EmptyInput;

/// Mean / sd / extremes of one scalar metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricSummary {
    /// Population statistics. Values are sorted before summing so the
    /// result is bit-identical under any input permutation.
    fn of(values: &[f64]) -> MetricSummary {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = sorted.iter().map(|v| (v - mean) * (v - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let sd = (sq.iter().sum::<f64>() / n).sqrt();
        MetricSummary {
            mean,
            sd,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub coop_fraction: MetricSummary,
    pub rewire_requests: MetricSummary,
    pub rewires_executed: MetricSummary,
    pub rewire_opportunities: MetricSummary,
    pub rewires_per_opportunity: MetricSummary,
    pub heterogeneity: MetricSummary,
    pub max_degree: MetricSummary,
    pub stop_time: MetricSummary,
}

pub fn aggregate(results: &[EpisodeResult]) -> Result<Summary, EmptyInput> {
    if results.is_empty() {
        return Err(EmptyInput);
    }
    let col = |f: &dyn Fn(&EpisodeResult) -> f64| {
        MetricSummary::of(&results.iter().map(f).collect::<Vec<_>>())
    };
    Ok(Summary {
        count: results.len(),
        coop_fraction: col(&|r| r.coop_fraction),
        rewire_requests: col(&|r| r.counters.rewire_requests as f64),
        rewires_executed: col(&|r| r.counters.rewires_executed as f64),
        rewire_opportunities: col(&|r| r.counters.rewire_opportunities as f64),
        rewires_per_opportunity: col(&|r| rewires_per_opportunity(&r.counters)),
        heterogeneity: col(&|r| r.heterogeneity),
        max_degree: col(&|r| r.max_degree as f64),
        stop_time: col(&|r| r.stop_time as f64),
    })
}

/// One CSV row of an experiment: run identity, environment, measurements.
/// Field order here *is* the column contract; serializers must not reorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub policy: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    #[serde(rename = "W", with = "rate_serde")]
    pub w: f64,
    #[serde(rename = "W2", with = "rate_serde")]
    pub w2: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub coop_fraction: f64,
    pub rewire_requests: u64,
    pub rewires_executed: u64,
    pub rewire_opportunities: u64,
    pub heterogeneity: f64,
    pub max_degree: u64,
    pub stop_time: u64,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "seed",
    "policy",
    "N",
    "k",
    "beta",
    "W",
    "W2",
    "T",
    "S",
    "coop_fraction",
    "rewire_requests",
    "rewires_executed",
    "rewire_opportunities",
    "heterogeneity",
    "max_degree",
    "stop_time",
];

pub struct RowMeta<'a> {
    pub seed: u64,
    pub policy: &'a str,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub w: f64,
    pub w2: f64,
    pub t: f64,
    pub s: f64,
}

impl RunRow {
    pub fn new(meta: RowMeta<'_>, r: &EpisodeResult) -> RunRow {
        RunRow {
            seed: meta.seed,
            policy: meta.policy.to_string(),
            n: meta.n,
            k: meta.k,
            beta: meta.beta,
            w: meta.w,
            w2: meta.w2,
            t: meta.t,
            s: meta.s,
            coop_fraction: r.coop_fraction,
            rewire_requests: r.counters.rewire_requests,
            rewires_executed: r.counters.rewires_executed,
            rewire_opportunities: r.counters.rewire_opportunities,
            heterogeneity: r.heterogeneity,
            max_degree: r.max_degree,
            stop_time: r.stop_time,
        }
    }
}
