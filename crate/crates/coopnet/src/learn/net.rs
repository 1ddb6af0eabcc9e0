//! Ranking network: shared per-node MLP trunk, sum-aggregated global
//! embedding, linear score head, masked softmax.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LearnError, Observation, SelectionMode};
use crate::graph::NodeId;
use crate::rng::SimRng;

pub const FEATURE_DIM: usize = 2;

/// Parameters of the ranking policy.
///
/// Per node i: h_i = tanh(W_h x_i + b_h). The score of a candidate is
/// linear in the global embedding (sum of all h_i), the requester's
/// embedding, and the candidate's own: s_i = w_g.h_g + w_f.h_f + w_n.h_i + b.
/// Masked nodes get probability exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingPolicy {
    hidden_width: usize,
    /// H x FEATURE_DIM, row-major.
    w_hidden: Vec<f64>,
    b_hidden: Vec<f64>,
    /// 3H: [global | focus | node] blocks.
    w_score: Vec<f64>,
    b_score: f64,
}

/// Forward pass result, with the caches backpropagation needs.
#[derive(Debug, Clone)]
pub struct Scored {
    /// Per node; zero for masked nodes, sums to one over valid ones.
    pub probs: Vec<f64>,
    /// Valid node ids, ascending.
    pub valid: Vec<NodeId>,
    pub(super) hidden: Vec<f64>,
    pub(super) h_global: Vec<f64>,
}

impl RankingPolicy {
    pub fn zeros(hidden_width: usize) -> RankingPolicy {
        RankingPolicy {
            hidden_width,
            w_hidden: vec![0.0; hidden_width * FEATURE_DIM],
            b_hidden: vec![0.0; hidden_width],
            w_score: vec![0.0; 3 * hidden_width],
            b_score: 0.0,
        }
    }

    /// Fresh parameters, uniform in [-0.1, 0.1], reproducible from `seed`.
    pub fn init(hidden_width: usize, seed: u64) -> RankingPolicy {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = RankingPolicy::zeros(hidden_width);
        let mut draw = |v: &mut Vec<f64>| {
            for x in v.iter_mut() {
                *x = rng.gen_range(-0.1..0.1);
            }
        };
        draw(&mut p.w_hidden);
        draw(&mut p.b_hidden);
        draw(&mut p.w_score);
        p.b_score = rng.gen_range(-0.1..0.1);
        p
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    pub fn param_count(&self) -> usize {
        self.hidden_width * FEATURE_DIM + self.hidden_width + 3 * self.hidden_width + 1
    }

    /// Flat parameter vector: w_hidden, b_hidden, w_score, b_score.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(&self.w_hidden);
        v.extend_from_slice(&self.b_hidden);
        v.extend_from_slice(&self.w_score);
        v.push(self.b_score);
        v
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let h = self.hidden_width;
        let mut at = 0;
        self.w_hidden.copy_from_slice(&flat[at..at + h * FEATURE_DIM]);
        at += h * FEATURE_DIM;
        self.b_hidden.copy_from_slice(&flat[at..at + h]);
        at += h;
        self.w_score.copy_from_slice(&flat[at..at + 3 * h]);
        at += 3 * h;
        self.b_score = flat[at];
    }

    fn hidden_of(&self, x: &[f64; FEATURE_DIM]) -> Vec<f64> {
        let h = self.hidden_width;
        let mut out = vec![0.0; h];
        for (k, o) in out.iter_mut().enumerate() {
            let mut z = self.b_hidden[k];
            for (d, &xd) in x.iter().enumerate() {
                z += self.w_hidden[k * FEATURE_DIM + d] * xd;
            }
            *o = z.tanh();
        }
        out
    }

    /// Scores every node, masks, and normalizes. Fails only when the mask
    /// admits nothing.
    pub fn score(&self, obs: &Observation) -> Result<Scored, LearnError> {
        let n = obs.n;
        let h = self.hidden_width;
        let valid: Vec<NodeId> = (0..n).filter(|&v| obs.mask[v]).collect();
        if valid.is_empty() {
            return Err(LearnError::NoValidAction);
        }

        let mut hidden = vec![0.0; n * h];
        let mut h_global = vec![0.0; h];
        for v in 0..n {
            let hv = self.hidden_of(&obs.features[v]);
            for k in 0..h {
                h_global[k] += hv[k];
            }
            hidden[v * h..(v + 1) * h].copy_from_slice(&hv);
        }

        let (w_g, rest) = self.w_score.split_at(h);
        let (w_f, w_n) = rest.split_at(h);
        let h_f = &hidden[obs.focus * h..(obs.focus + 1) * h];
        let shared: f64 = self.b_score
            + dot(w_g, &h_global)
            + dot(w_f, h_f);

        let scores: Vec<f64> = valid
            .iter()
            .map(|&v| shared + dot(w_n, &hidden[v * h..(v + 1) * h]))
            .collect();

        // max-shifted softmax over the valid set only
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expd: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let z: f64 = expd.iter().sum();
        let mut probs = vec![0.0; n];
        for (i, &v) in valid.iter().enumerate() {
            probs[v] = expd[i] / z;
        }

        Ok(Scored {
            probs,
            valid,
            hidden,
            h_global,
        })
    }

    /// Log-probability of choosing `action` under the current parameters.
    pub fn log_prob(&self, obs: &Observation, action: NodeId) -> Result<f64, LearnError> {
        Ok(self.score(obs)?.probs[action].ln())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: 1,
            architecture: CheckpointArchitecture {
                feature_dim: FEATURE_DIM,
                hidden_width: self.hidden_width,
                activation: "tanh".into(),
                aggregation: "sum".into(),
                score_inputs: vec!["global".into(), "focus".into(), "node".into()],
                degree_normalization: "n_minus_1".into(),
            },
            theta: CheckpointTheta {
                w_hidden: self.w_hidden.clone(),
                b_hidden: self.b_hidden.clone(),
                w_score: self.w_score.clone(),
                b_score: self.b_score,
            },
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<RankingPolicy, LearnError> {
        let bad = |msg: &str| LearnError::BadCheckpoint(msg.to_string());
        if ck.version != 1 {
            return Err(bad(&format!("unsupported version {}", ck.version)));
        }
        let a = &ck.architecture;
        if a.feature_dim != FEATURE_DIM {
            return Err(bad("feature_dim mismatch"));
        }
        if a.activation != "tanh" || a.aggregation != "sum" {
            return Err(bad("unsupported activation/aggregation"));
        }
        let h = a.hidden_width;
        let t = &ck.theta;
        if t.w_hidden.len() != h * FEATURE_DIM
            || t.b_hidden.len() != h
            || t.w_score.len() != 3 * h
        {
            return Err(bad("theta shape does not match architecture"));
        }
        Ok(RankingPolicy {
            hidden_width: h,
            w_hidden: t.w_hidden.clone(),
            b_hidden: t.b_hidden.clone(),
            w_score: t.w_score.clone(),
            b_score: t.b_score,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic CDF inversion over the valid nodes, ascending id order.
/// Exposed separately so the mapping from a uniform draw is testable.
pub fn pick_by_cdf(scored: &Scored, draw: f64) -> NodeId {
    let mut acc = 0.0;
    for &v in &scored.valid {
        acc += scored.probs[v];
        if draw < acc {
            return v;
        }
    }
    *scored.valid.last().expect("non-empty valid set")
}

pub fn select_action(scored: &Scored, mode: SelectionMode, rng: &mut SimRng) -> NodeId {
    match mode {
        SelectionMode::Train => pick_by_cdf(scored, rng.gen::<f64>()),
        SelectionMode::Eval => {
            let mut best = scored.valid[0];
            for &v in &scored.valid[1..] {
                if scored.probs[v] > scored.probs[best] {
                    best = v;
                }
            }
            best
        }
    }
}

/// Gradient accumulator shaped like the parameters.
#[derive(Debug, Clone)]
pub(super) struct Grads {
    w_hidden: Vec<f64>,
    b_hidden: Vec<f64>,
    w_score: Vec<f64>,
    b_score: f64,
}

impl Grads {
    pub(super) fn zeros_like(p: &RankingPolicy) -> Grads {
        Grads {
            w_hidden: vec![0.0; p.w_hidden.len()],
            b_hidden: vec![0.0; p.b_hidden.len()],
            w_score: vec![0.0; p.w_score.len()],
            b_score: 0.0,
        }
    }

    /// Ascent step: theta += lr * grad.
    pub(super) fn apply(&self, p: &mut RankingPolicy, lr: f64) {
        for (w, g) in p.w_hidden.iter_mut().zip(&self.w_hidden) {
            *w += lr * g;
        }
        for (w, g) in p.b_hidden.iter_mut().zip(&self.b_hidden) {
            *w += lr * g;
        }
        for (w, g) in p.w_score.iter_mut().zip(&self.w_score) {
            *w += lr * g;
        }
        p.b_score += lr * self.b_score;
    }
}

/// Adds `coeff * d(log p(action | obs)) / d(theta)` to `grads`.
///
/// Backpropagates through the masked softmax, the linear score head, and
/// the shared tanh trunk (including the sum-aggregated global embedding and
/// the focus embedding, whose softmax contributions cancel analytically but
/// are kept for generality).
pub(super) fn accumulate_decision(
    p: &RankingPolicy,
    obs: &Observation,
    action: NodeId,
    coeff: f64,
    grads: &mut Grads,
) -> Result<(), LearnError> {
    let h = p.hidden_width;
    let n = obs.n;
    let scored = p.score(obs)?;
    debug_assert!(obs.mask[action], "gradient for a masked action");

    // d(log p_a)/d(s_i) = delta_ia - p_i over the valid set
    let mut ds = vec![0.0; n];
    let mut ds_sum = 0.0;
    for &v in &scored.valid {
        let d = coeff * ((v == action) as u8 as f64 - scored.probs[v]);
        ds[v] = d;
        ds_sum += d;
    }

    let (w_g, rest) = p.w_score.split_at(h);
    let (w_f, w_n) = rest.split_at(h);

    // score-head gradients
    let gs = grads.w_score.as_mut_slice();
    for k in 0..h {
        gs[k] += ds_sum * scored.h_global[k]; // global block
        gs[h + k] += ds_sum * scored.hidden[obs.focus * h + k]; // focus block
    }
    for &v in &scored.valid {
        for k in 0..h {
            gs[2 * h + k] += ds[v] * scored.hidden[v * h + k]; // node block
        }
    }
    grads.b_score += ds_sum;

    // backprop into each node's hidden vector:
    //   dh_v = ds_sum * w_g           (every node, via the global sum)
    //        + [v == focus] * ds_sum * w_f
    //        + [v valid] * ds[v] * w_n
    #[allow(clippy::needless_range_loop)] // v indexes four parallel arrays
    for v in 0..n {
        let hv = &scored.hidden[v * h..(v + 1) * h];
        let x = &obs.features[v];
        for k in 0..h {
            let mut dh = ds_sum * w_g[k];
            if v == obs.focus {
                dh += ds_sum * w_f[k];
            }
            if obs.mask[v] {
                dh += ds[v] * w_n[k];
            }
            if dh == 0.0 {
                continue;
            }
            let dz = dh * (1.0 - hv[k] * hv[k]);
            for (d, &xd) in x.iter().enumerate() {
                grads.w_hidden[k * FEATURE_DIM + d] += dz * xd;
            }
            grads.b_hidden[k] += dz;
        }
    }
    Ok(())
}

/// On-disk form: flat parameter arrays plus enough architecture description
/// to refuse mismatched loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub architecture: CheckpointArchitecture,
    pub theta: CheckpointTheta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointArchitecture {
    pub feature_dim: usize,
    pub hidden_width: usize,
    pub activation: String,
    pub aggregation: String,
    pub score_inputs: Vec<String>,
    pub degree_normalization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTheta {
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_score: Vec<f64>,
    pub b_score: f64,
}
