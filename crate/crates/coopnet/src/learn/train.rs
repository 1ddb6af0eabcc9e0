//! Episode rollouts and score-function policy-gradient training.

use serde::Serialize;
use thiserror::Error;

use super::net::{accumulate_decision, select_action, Grads, RankingPolicy};
use super::{LearnError, Observation, SelectionMode};
use crate::config::SimConfig;
use crate::dynamics::{run_episode, EpisodeError};
use crate::game::GameMatrix;
use crate::graph::NodeId;
use crate::metrics::{self, aggregate, EpisodeResult, RewardKind, Summary};
use crate::policy::{candidate_pool, Recommender};
use crate::replicate::run_replicates;
use crate::rng::{replicate_seed, SimRng};
use crate::state::WorldView;

/// One recommendation made during an episode, with everything needed to
/// recompute its log-probability later.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub obs: Observation,
    pub action: NodeId,
    pub logp: f64,
}

/// A full episode from the learner's point of view.
///
/// `reward` is the training signal: the cooperation reward as-is, or the
/// request count normalized by the time limit so both kinds are O(1).
/// `episode` keeps the raw measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub decisions: Vec<Decision>,
    pub reward: f64,
    pub episode: EpisodeResult,
}

struct RecordingRecommender<'p> {
    policy: &'p RankingPolicy,
    mode: SelectionMode,
    log: Vec<Decision>,
}

impl Recommender for RecordingRecommender<'_> {
    fn recommend(
        &mut self,
        view: WorldView<'_>,
        focus: NodeId,
        dropping: NodeId,
        rng: &mut SimRng,
    ) -> Option<NodeId> {
        let pool = candidate_pool(view, focus, dropping, None);
        let obs = Observation::from_pool(view, focus, &pool);
        let scored = self.policy.score(&obs).ok()?;
        let action = select_action(&scored, self.mode, rng);
        self.log.push(Decision {
            logp: scored.probs[action].ln(),
            obs,
            action,
        });
        Some(action)
    }
}

fn training_reward(kind: RewardKind, episode: &EpisodeResult, config: &SimConfig) -> f64 {
    match kind {
        RewardKind::Cooperation => metrics::reward(kind, episode),
        RewardKind::Engagement => {
            episode.counters.rewire_requests as f64 / config.time_limit as f64
        }
    }
}

/// Runs one episode with the learned recommender, logging every decision.
pub fn rollout(
    config: &SimConfig,
    game: &GameMatrix,
    policy: &RankingPolicy,
    reward_kind: RewardKind,
    mode: SelectionMode,
) -> Result<Trajectory, EpisodeError> {
    let mut rec = RecordingRecommender {
        policy,
        mode,
        log: Vec::new(),
    };
    let episode = run_episode(config, game, &mut rec)?;
    let reward = training_reward(reward_kind, &episode, config);
    Ok(Trajectory {
        decisions: rec.log,
        reward,
        episode,
    })
}

/// Exponential moving average of batch mean rewards, the variance-reduction
/// baseline. Starts at zero (the neutral cooperation reward).
#[derive(Debug, Clone, Copy)]
pub struct Baseline {
    value: f64,
    decay: f64,
}

impl Baseline {
    pub fn new(decay: f64) -> Baseline {
        Baseline { value: 0.0, decay }
    }

    pub fn starting_at(value: f64, decay: f64) -> Baseline {
        Baseline { value, decay }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    fn update(&mut self, batch_mean: f64) {
        self.value = self.decay * self.value + (1.0 - self.decay) * batch_mean;
    }
}

/// What one update step looked like; the training-curve quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateDiagnostics {
    pub mean_reward: f64,
    /// Mean strategy bit of recommended nodes (1 = all cooperators).
    pub mean_action_strategy: f64,
    /// Mean (raw) degree of recommended nodes at decision time.
    pub mean_action_degree: f64,
    pub decision_count: usize,
}

/// One ascent step on the batch objective
/// `(1/B) * sum_traj (R - b) * sum_decisions log p(a | obs)`,
/// with gradients computed analytically through the score head, softmax,
/// and shared trunk. The baseline is updated after the step.
pub fn policy_gradient_update(
    policy: &mut RankingPolicy,
    batch: &[Trajectory],
    baseline: &mut Baseline,
    learning_rate: f64,
) -> Result<UpdateDiagnostics, LearnError> {
    if batch.iter().all(|t| t.decisions.is_empty()) {
        return Err(LearnError::DegenerateBatch);
    }
    let b = baseline.value();
    let scale = 1.0 / batch.len() as f64;

    let mut grads = Grads::zeros_like(policy);
    for traj in batch {
        let coeff = scale * (traj.reward - b);
        if coeff == 0.0 {
            continue;
        }
        for d in &traj.decisions {
            accumulate_decision(policy, &d.obs, d.action, coeff, &mut grads)?;
        }
    }
    grads.apply(policy, learning_rate);

    let mean_reward = batch.iter().map(|t| t.reward).sum::<f64>() / batch.len() as f64;
    baseline.update(mean_reward);

    let mut strat_sum = 0.0;
    let mut degree_sum = 0.0;
    let mut count = 0usize;
    for d in batch.iter().flat_map(|t| &t.decisions) {
        strat_sum += d.obs.strategy_bit(d.action);
        degree_sum += d.obs.degree_of(d.action);
        count += 1;
    }
    Ok(UpdateDiagnostics {
        mean_reward,
        mean_action_strategy: strat_sum / count as f64,
        mean_action_degree: degree_sum / count as f64,
        decision_count: count,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TrainerConfig {
    pub updates: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub baseline_decay: f64,
    pub reward: RewardKind,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            updates: 300,
            batch_size: 16,
            learning_rate: 1e-2,
            baseline_decay: 0.99,
            reward: RewardKind::Cooperation,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Full training loop. Rollout `i` of update `u` uses seed
/// `config.seed + u * batch_size + i`; batches may run in parallel since
/// parameters are frozen during collection.
pub fn train(
    policy: &mut RankingPolicy,
    config: &SimConfig,
    game: &GameMatrix,
    trainer: &TrainerConfig,
) -> Result<Vec<UpdateDiagnostics>, TrainError> {
    let mut baseline = Baseline::new(trainer.baseline_decay);
    let mut log = Vec::with_capacity(trainer.updates);
    for u in 0..trainer.updates {
        let frozen = &*policy;
        let batch: Vec<Trajectory> = run_replicates(trainer.batch_size, |i| {
            let mut cfg = *config;
            cfg.seed = replicate_seed(config.seed, u * trainer.batch_size + i);
            rollout(&cfg, game, frozen, trainer.reward, SelectionMode::Train)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
        log.push(policy_gradient_update(
            policy,
            &batch,
            &mut baseline,
            trainer.learning_rate,
        )?);
    }
    Ok(log)
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Mean of the un-normalized reward (cooperation in [-1,1], engagement
    /// in raw request counts).
    pub mean_reward: f64,
    pub summary: Summary,
    pub results: Vec<EpisodeResult>,
}

/// Argmax-mode evaluation over `episodes` fresh seeds starting at
/// `config.seed`.
pub fn evaluate_policy(
    policy: &RankingPolicy,
    config: &SimConfig,
    game: &GameMatrix,
    reward_kind: RewardKind,
    episodes: usize,
) -> Result<EvalReport, EpisodeError> {
    let results: Vec<EpisodeResult> = run_replicates(episodes, |i| {
        let mut cfg = *config;
        cfg.seed = replicate_seed(config.seed, i);
        rollout(&cfg, game, policy, reward_kind, SelectionMode::Eval).map(|t| t.episode)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let mean_reward = results
        .iter()
        .map(|r| metrics::reward(reward_kind, r))
        .sum::<f64>()
        / results.len() as f64;
    let summary = aggregate(&results).expect("episodes >= 1");
    Ok(EvalReport {
        mean_reward,
        summary,
        results,
    })
}
