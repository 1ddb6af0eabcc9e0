//! Competing recommenders ("mediators"): each node subscribes to one, pools
//! are exclusive to each mediator's user base, and nodes occasionally
//! imitate a fitter neighbor's mediator at timescale `W2`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{rate_serde, ConfigError, SimConfig, DEFAULT_BETA_MED};
use crate::dynamics::{
    sample_interacting_pair, simulation_step, DynamicsError, EpisodeError, StepCounters,
};
use crate::game::{fermi, GameMatrix};
use crate::graph::NodeId;
use crate::metrics::{finalize_episode, EpisodeResult, MediatorStats};
use crate::policy::{
    candidate_pool, MediatorId, MediatorScope, Recommender, RewirePolicy, UnknownPolicyName,
};
use crate::replicate::run_replicates;
use crate::rng::{assignment_rng, replicate_seed, SimRng};
use crate::state::{NetworkState, WorldView};
use crate::learn::SelectionMode;

#[derive(Debug, Error)]
pub enum CompetitionConfigError {
    #[error(transparent)]
    Base(#[from] ConfigError),
    #[error("mediator mix is empty")]
    EmptyMix,
    #[error(transparent)]
    UnknownPolicy(#[from] UnknownPolicyName),
    #[error("mix fraction {fraction} for {name:?} outside [0, 1]")]
    BadFraction { name: String, fraction: f64 },
    #[error("mix fractions sum to {0}, expected 1 within 1e-9")]
    FractionSum(f64),
    #[error("beta_med = {0} must be positive")]
    BadBetaMed(f64),
    #[error("W2 = {0} must be >= 0 (may be infinite)")]
    BadW2(f64),
}

#[derive(Debug, Error)]
pub enum CompetitionError {
    #[error(transparent)]
    Config(#[from] CompetitionConfigError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
}

impl From<DynamicsError> for CompetitionError {
    fn from(e: DynamicsError) -> Self {
        CompetitionError::Episode(EpisodeError::Dynamics(e))
    }
}

/// Environment for a competition run: the core environment plus the
/// mediator timescale `W2`, the mediator imitation temperature, and the
/// initial (policy name, population fraction) mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionConfig {
    pub base: SimConfig,
    #[serde(with = "rate_serde")]
    pub w2: f64,
    pub beta_med: f64,
    pub mix: Vec<(String, f64)>,
}

impl CompetitionConfig {
    pub fn new(base: SimConfig, w2: f64, mix: Vec<(String, f64)>) -> CompetitionConfig {
        CompetitionConfig {
            base,
            w2,
            beta_med: DEFAULT_BETA_MED,
            mix,
        }
    }

    /// Checks everything and resolves the mix's policies, in mix order.
    pub fn validate(&self) -> Result<Vec<RewirePolicy>, CompetitionConfigError> {
        self.base.validate()?;
        if self.mix.is_empty() {
            return Err(CompetitionConfigError::EmptyMix);
        }
        let mut policies = Vec::with_capacity(self.mix.len());
        let mut total = 0.0;
        for (name, fraction) in &self.mix {
            if !(0.0..=1.0).contains(fraction) {
                return Err(CompetitionConfigError::BadFraction {
                    name: name.clone(),
                    fraction: *fraction,
                });
            }
            total += fraction;
            policies.push(RewirePolicy::from_name(name)?);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(CompetitionConfigError::FractionSum(total));
        }
        if self.beta_med.is_nan() || self.beta_med <= 0.0 {
            return Err(CompetitionConfigError::BadBetaMed(self.beta_med));
        }
        if self.w2.is_nan() || self.w2 < 0.0 {
            return Err(CompetitionConfigError::BadW2(self.w2));
        }
        Ok(policies)
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.mix.iter().map(|(_, f)| *f).collect()
    }
}

/// Who serves whom, with maintained per-mediator population counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MediatorAssignment {
    of: Vec<MediatorId>,
    counts: Vec<usize>,
}

impl MediatorAssignment {
    pub fn new(of: Vec<MediatorId>, mediators: usize) -> MediatorAssignment {
        let mut counts = vec![0; mediators];
        for &m in &of {
            counts[m] += 1;
        }
        MediatorAssignment { of, counts }
    }

    pub fn mediator_of(&self, v: NodeId) -> MediatorId {
        self.of[v]
    }

    pub fn as_slice(&self) -> &[MediatorId] {
        &self.of
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn shares(&self) -> Vec<f64> {
        let n = self.of.len() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    fn adopt(&mut self, v: NodeId, m: MediatorId) {
        let old = self.of[v];
        if old != m {
            self.counts[old] -= 1;
            self.counts[m] += 1;
            self.of[v] = m;
        }
        debug_assert_eq!(self.counts.iter().sum::<usize>(), self.of.len());
    }
}

/// Exact proportional allocation (largest-remainder rounding) followed by a
/// random placement shuffle. Node counts per mediator are deterministic in
/// the mix; only who gets which mediator depends on the rng.
pub fn assign_initial_mediators(
    n: usize,
    fractions: &[f64],
    rng: &mut SimRng,
) -> MediatorAssignment {
    let mut counts: Vec<usize> = fractions
        .iter()
        .map(|f| (n as f64 * f).floor() as usize)
        .collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..fractions.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = n as f64 * fractions[a] - (n as f64 * fractions[a]).floor();
        let rb = n as f64 * fractions[b] - (n as f64 * fractions[b]).floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in 0..n.saturating_sub(assigned) {
        counts[by_remainder[i % by_remainder.len()]] += 1;
    }
    let mut of = Vec::with_capacity(n);
    for (id, &c) in counts.iter().enumerate() {
        of.extend(std::iter::repeat_n(id, c));
    }
    of.shuffle(rng);
    MediatorAssignment::new(of, fractions.len())
}

/// `x` adopts neighbor `y`'s mediator with probability
/// `fermi(payoff_y - payoff_x, beta_med)`. Game strategies are untouched;
/// the draw is consumed even when both already share a mediator.
pub fn mediator_update(
    state: &mut NetworkState,
    game: &GameMatrix,
    assignment: &mut MediatorAssignment,
    beta_med: f64,
    x: NodeId,
    y: NodeId,
) -> Result<bool, DynamicsError> {
    let n = state.node_count();
    if x >= n {
        return Err(DynamicsError::UnknownNode(x));
    }
    if y >= n {
        return Err(DynamicsError::UnknownNode(y));
    }
    if !state.graph.has_edge(x, y) {
        return Err(DynamicsError::NotNeighbors(x, y));
    }
    let view = state.view();
    let px = crate::dynamics::cumulative_payoff(view, game, x)?;
    let py = crate::dynamics::cumulative_payoff(view, game, y)?;
    let adopt = state.rng.gen::<f64>() < fermi(py - px, beta_med);
    if !adopt {
        return Ok(false);
    }
    let target = assignment.mediator_of(y);
    let changed = assignment.mediator_of(x) != target;
    assignment.adopt(x, target);
    Ok(changed)
}

/// Recommender that routes each request to the requesting node's own
/// mediator, restricts the pool to that mediator's users, and counts
/// requests per mediator.
pub struct MediatedRecommender {
    policies: Vec<RewirePolicy>,
    pub assignment: MediatorAssignment,
    requests: Vec<u64>,
}

impl MediatedRecommender {
    pub fn new(policies: Vec<RewirePolicy>, assignment: MediatorAssignment) -> Self {
        let m = policies.len();
        MediatedRecommender {
            policies,
            assignment,
            requests: vec![0; m],
        }
    }

    pub fn requests(&self) -> &[u64] {
        &self.requests
    }
}

impl Recommender for MediatedRecommender {
    fn recommend(
        &mut self,
        view: WorldView<'_>,
        focus: NodeId,
        dropping: NodeId,
        rng: &mut SimRng,
    ) -> Option<NodeId> {
        let med = self.assignment.mediator_of(focus);
        self.requests[med] += 1;
        let pool = candidate_pool(
            view,
            focus,
            dropping,
            Some(MediatorScope {
                assignment: self.assignment.as_slice(),
                mediator: med,
            }),
        );
        let z = self.policies[med].select(view, focus, dropping, &pool, SelectionMode::Eval, rng)?;
        debug_assert_eq!(
            self.assignment.mediator_of(z),
            med,
            "recommendation crossed a mediator boundary"
        );
        Some(z)
    }
}

/// Event counts for a competition episode: the core counters plus how many
/// events were mediator updates. The time limit counts *all* events.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompetitionCounters {
    pub base: StepCounters,
    pub mediator_updates: u64,
    pub mediator_switches: u64,
}

impl CompetitionCounters {
    pub fn total_events(&self) -> u64 {
        self.base.steps + self.mediator_updates
    }
}

/// One competition event: with probability `W2/(1+W2)` a mediator update on
/// a freshly sampled neighbor pair, otherwise a standard core step. At
/// `W2 = 0` the branch consumes no randomness, so trajectories coincide
/// bit-for-bit with single-recommender runs of the same seed.
pub fn competition_step(
    state: &mut NetworkState,
    game: &GameMatrix,
    cfg: &CompetitionConfig,
    world: &mut MediatedRecommender,
    counters: &mut CompetitionCounters,
) -> Result<(), DynamicsError> {
    let mediator_event = if cfg.w2 == 0.0 {
        false
    } else if cfg.w2.is_infinite() {
        true
    } else {
        state.rng.gen::<f64>() < cfg.w2 / (1.0 + cfg.w2)
    };
    if mediator_event {
        let (x, y) = sample_interacting_pair(state)?;
        counters.mediator_updates += 1;
        let switched =
            mediator_update(state, game, &mut world.assignment, cfg.beta_med, x, y)?;
        if switched {
            counters.mediator_switches += 1;
        }
    } else {
        simulation_step(state, game, &cfg.base, world, &mut counters.base)?;
    }
    Ok(())
}

/// Full competition episode. Stops at the time limit (counting every event)
/// or at strategy absorption, then reports the core measurements plus final
/// share and request volume per mediator.
pub fn run_competition_episode(
    cfg: &CompetitionConfig,
    game: &GameMatrix,
) -> Result<EpisodeResult, CompetitionError> {
    let policies = cfg.validate()?;
    let mut state = NetworkState::init_random(&cfg.base).map_err(EpisodeError::from)?;
    let assignment = assign_initial_mediators(
        cfg.base.n,
        &cfg.fractions(),
        &mut assignment_rng(cfg.base.seed),
    );
    let mut world = MediatedRecommender::new(policies, assignment);
    let mut counters = CompetitionCounters::default();

    while counters.total_events() < cfg.base.time_limit && !state.is_strategy_homogeneous() {
        competition_step(&mut state, game, cfg, &mut world, &mut counters)?;
    }
    counters.base.stop_time = counters.total_events();

    let mut result = finalize_episode(state.view(), counters.base);
    let shares = world.assignment.shares();
    let per: BTreeMap<MediatorId, MediatorStats> = (0..cfg.mix.len())
        .map(|m| {
            (
                m,
                MediatorStats {
                    share: shares[m],
                    rewire_requests: world.requests()[m],
                },
            )
        })
        .collect();
    result.per_mediator = Some(per);
    Ok(result)
}

/// Cross-run adoption report: share distributions per mediator, means, and
/// the fate of the starting majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdoptionSummary {
    pub runs: usize,
    pub mediators: Vec<String>,
    pub initial_shares: Vec<f64>,
    /// `share_histograms[m][r]` = final share of mediator `m` in run `r`.
    pub share_histograms: Vec<Vec<f64>>,
    pub mean_shares: Vec<f64>,
    pub mean_coop_fraction: f64,
    pub mean_rewire_requests: f64,
    /// Index into `mediators`; absent when the top initial share is tied.
    pub starting_majority: Option<usize>,
    pub final_share_of_starting_majority: Option<f64>,
}

impl AdoptionSummary {
    pub fn from_runs(cfg: &CompetitionConfig, results: &[EpisodeResult]) -> AdoptionSummary {
        let m = cfg.mix.len();
        let runs = results.len();
        let mut hist = vec![Vec::with_capacity(runs); m];
        let mut req_total = 0.0;
        let mut coop_total = 0.0;
        for r in results {
            let per = r.per_mediator.as_ref().expect("competition episode");
            for id in 0..m {
                hist[id].push(per[&id].share);
            }
            req_total += r.counters.rewire_requests as f64;
            coop_total += r.coop_fraction;
        }
        let mean_shares: Vec<f64> = hist
            .iter()
            .map(|h| h.iter().sum::<f64>() / runs as f64)
            .collect();

        let fractions = cfg.fractions();
        let top = fractions
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let leaders: Vec<usize> = (0..m).filter(|&i| fractions[i] == top).collect();
        let starting_majority = if leaders.len() == 1 {
            Some(leaders[0])
        } else {
            None
        };

        AdoptionSummary {
            runs,
            mediators: cfg.mix.iter().map(|(n, _)| n.clone()).collect(),
            initial_shares: fractions,
            mean_coop_fraction: coop_total / runs as f64,
            mean_rewire_requests: req_total / runs as f64,
            final_share_of_starting_majority: starting_majority.map(|i| mean_shares[i]),
            mean_shares,
            share_histograms: hist,
            starting_majority,
        }
    }
}

/// `runs` independent episodes with seeds `base.seed + i`, executed through
/// the replicate harness (parallel when enabled), plus the adoption report.
pub fn run_adoption_experiment(
    cfg: &CompetitionConfig,
    game: &GameMatrix,
    runs: usize,
) -> Result<(Vec<EpisodeResult>, AdoptionSummary), CompetitionError> {
    cfg.validate()?;
    let results: Vec<EpisodeResult> = run_replicates(runs, |i| {
        let mut c = cfg.clone();
        c.base.seed = replicate_seed(cfg.base.seed, i);
        run_competition_episode(&c, game)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let summary = AdoptionSummary::from_runs(cfg, &results);
    Ok((results, summary))
}
