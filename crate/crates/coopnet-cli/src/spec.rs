//! Experiment specification: JSON config files with flat keys, command-line
//! overrides (last-wins), and validation into a fully resolved spec.
//!
//! The resolved spec is what the manifest records; feeding a manifest back
//! through `--config` reruns the identical experiment.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use coopnet::config::{env_defaults, parse_rate, rate_serde, SimConfig, DEFAULT_BETA_MED};
use coopnet::metrics::RewardKind;
use coopnet::policy::RewirePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Run,
    #[serde(rename = "SweepTS")]
    SweepTs,
    SweepW,
    SweepW1W2,
    Compete,
    Train,
    Eval,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Run => "Run",
            Kind::SweepTs => "SweepTS",
            Kind::SweepW => "SweepW",
            Kind::SweepW1W2 => "SweepW1W2",
            Kind::Compete => "Compete",
            Kind::Train => "Train",
            Kind::Eval => "Eval",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub enum SpecError {
    Io(String),
    Parse(String),
    Field { field: String, message: String },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Io(m) => write!(f, "{m}"),
            SpecError::Parse(m) => write!(f, "config parse error: {m}"),
            SpecError::Field { field, message } => write!(f, "field `{field}`: {message}"),
        }
    }
}

impl std::error::Error for SpecError {}

fn field_err(field: &str, message: impl Into<String>) -> SpecError {
    SpecError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A number or the string "inf"/"infinity", as accepted anywhere a
/// timescale appears.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Num(f64),
    Text(String),
}

impl Rate {
    fn resolve(&self, field: &str) -> Result<f64, SpecError> {
        match self {
            Rate::Num(x) => Ok(*x),
            Rate::Text(s) => {
                parse_rate(s).map_err(|_| field_err(field, format!("not a rate: {s:?}")))
            }
        }
    }
}

/// Raw (possibly partial) spec as read from a config file; every field is
/// optional so that flags can fill the gaps. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: Option<Kind>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    #[serde(rename = "W")]
    pub w: Option<Rate>,
    pub time_limit: Option<u64>,
    pub seed: Option<u64>,
    pub coop_init: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub replicates: Option<usize>,
    pub policy: Option<String>,
    pub checkpoint: Option<String>,
    #[serde(rename = "W2")]
    pub w2: Option<Rate>,
    pub beta_med: Option<f64>,
    pub mix: Option<Vec<(String, f64)>>,
    pub grid: Option<usize>,
    #[serde(rename = "W_list")]
    pub w_list: Option<Vec<Rate>>,
    #[serde(rename = "W2_list")]
    pub w2_list: Option<Vec<Rate>>,
    pub updates: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub baseline_decay: Option<f64>,
    pub reward: Option<RewardKind>,
    pub hidden_width: Option<usize>,
    pub eval_episodes: Option<usize>,
}

impl SpecFile {
    /// Reads a config file. A reproducibility manifest (object with a
    /// `spec` key) is unwrapped transparently, so manifests double as
    /// configs for exact reruns.
    pub fn load(path: &Path) -> Result<SpecFile, SpecError> {
        let text = fs::read_to_string(path)
            .map_err(|e| SpecError::Io(format!("cannot read {}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| SpecError::Parse(e.to_string()))?;
        let spec_value = match &value {
            Value::Object(map) if map.contains_key("spec") => map["spec"].clone(),
            _ => value,
        };
        SpecFile::from_value(spec_value)
    }

    pub fn from_value(value: Value) -> Result<SpecFile, SpecError> {
        serde_json::from_value(value).map_err(|e| SpecError::Parse(e.to_string()))
    }
}

/// Flag-supplied overrides; applied after the file so flags win.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub w: Option<String>,
    pub time_limit: Option<u64>,
    pub seed: Option<u64>,
    pub coop_init: Option<f64>,
    pub t: Option<f64>,
    pub s: Option<f64>,
    pub replicates: Option<usize>,
    pub policy: Option<String>,
    pub checkpoint: Option<String>,
    pub w2: Option<String>,
    pub beta_med: Option<f64>,
    pub mix: Option<String>,
    pub grid: Option<usize>,
    pub w_list: Option<String>,
    pub w2_list: Option<String>,
    pub updates: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub baseline_decay: Option<f64>,
    pub reward: Option<String>,
    pub hidden_width: Option<usize>,
    pub eval_episodes: Option<usize>,
}

fn parse_mix(text: &str) -> Result<Vec<(String, f64)>, SpecError> {
    text.split(',')
        .map(|part| {
            let (name, frac) = part
                .split_once(':')
                .ok_or_else(|| field_err("mix", format!("expected NAME:FRACTION, got {part:?}")))?;
            let fraction: f64 = frac
                .trim()
                .parse()
                .map_err(|_| field_err("mix", format!("bad fraction in {part:?}")))?;
            Ok((name.trim().to_string(), fraction))
        })
        .collect()
}

fn parse_rate_list(field: &str, text: &str) -> Result<Vec<Rate>, SpecError> {
    text.split(',')
        .map(|part| {
            let t = part.trim();
            if t.is_empty() {
                return Err(field_err(field, "empty list entry"));
            }
            Ok(Rate::Text(t.to_string()))
        })
        .collect()
}

impl Overrides {
    pub fn apply(self, file: &mut SpecFile) -> Result<(), SpecError> {
        macro_rules! set {
            ($f:ident) => {
                if let Some(v) = self.$f {
                    file.$f = Some(v);
                }
            };
        }
        set!(n);
        set!(k);
        set!(beta);
        set!(time_limit);
        set!(seed);
        set!(coop_init);
        set!(t);
        set!(s);
        set!(replicates);
        set!(policy);
        set!(checkpoint);
        set!(beta_med);
        set!(grid);
        set!(updates);
        set!(batch_size);
        set!(learning_rate);
        set!(baseline_decay);
        set!(hidden_width);
        set!(eval_episodes);
        if let Some(w) = self.w {
            file.w = Some(Rate::Text(w));
        }
        if let Some(w2) = self.w2 {
            file.w2 = Some(Rate::Text(w2));
        }
        if let Some(mix) = self.mix {
            file.mix = Some(parse_mix(&mix)?);
        }
        if let Some(list) = self.w_list {
            file.w_list = Some(parse_rate_list("W_list", &list)?);
        }
        if let Some(list) = self.w2_list {
            file.w2_list = Some(parse_rate_list("W2_list", &list)?);
        }
        if let Some(r) = self.reward {
            let kind = match r.to_ascii_lowercase().as_str() {
                "cooperation" => RewardKind::Cooperation,
                "engagement" => RewardKind::Engagement,
                other => {
                    return Err(field_err(
                        "reward",
                        format!("unknown reward {other:?}; use cooperation or engagement"),
                    ))
                }
            };
            file.reward = Some(kind);
        }
        Ok(())
    }
}

/// Fully validated experiment description. Serializing this (inside the
/// manifest) and re-resolving reproduces it field for field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSpec {
    pub kind: Kind,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    #[serde(rename = "W", with = "rate_serde")]
    pub w: f64,
    pub time_limit: u64,
    pub seed: u64,
    pub coop_init: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub replicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(
        rename = "W2",
        skip_serializing_if = "Option::is_none",
        with = "opt_rate_serde",
        default
    )]
    pub w2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_med: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mix: Option<Vec<(String, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(
        rename = "W_list",
        skip_serializing_if = "Option::is_none",
        with = "opt_rate_list_serde",
        default
    )]
    pub w_list: Option<Vec<f64>>,
    #[serde(
        rename = "W2_list",
        skip_serializing_if = "Option::is_none",
        with = "opt_rate_list_serde",
        default
    )]
    pub w2_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_episodes: Option<usize>,
}

mod opt_rate_serde {
    use coopnet::config::rate_serde;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
        // skip_serializing_if guarantees Some here
        rate_serde::serialize(v.as_ref().expect("skipped when None"), ser)
    }
}

mod opt_rate_list_serde {
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, ser: S) -> Result<S::Ok, S::Error> {
        let list = v.as_ref().expect("skipped when None");
        let mut seq = ser.serialize_seq(Some(list.len()))?;
        for x in list {
            if x.is_infinite() {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element(x)?;
            }
        }
        seq.end()
    }
}

impl ResolvedSpec {
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.n, self.k, self.beta, self.w, self.time_limit, self.seed)
            .expect("resolved spec was validated");
        cfg.coop_init = self.coop_init;
        cfg
    }
}

const DEFAULT_REWARD: RewardKind = RewardKind::Cooperation;

/// Merges defaults into the partial spec and validates everything relevant
/// to `kind`. Field errors name the offending key.
pub fn resolve(kind: Kind, file: SpecFile) -> Result<ResolvedSpec, SpecError> {
    if let Some(stated) = file.kind {
        if stated != kind {
            return Err(field_err(
                "kind",
                format!("config says {stated}, but the subcommand runs {kind}"),
            ));
        }
    }

    let n = file.n.ok_or_else(|| field_err("N", "required"))?;
    let env = env_defaults(n);
    let k = file
        .k
        .or(env.as_ref().map(|e| e.k))
        .ok_or_else(|| field_err("k", format!("required (no built-in defaults for N={n})")))?;
    let beta = file
        .beta
        .or(env.as_ref().map(|e| e.beta))
        .ok_or_else(|| field_err("beta", format!("required (no built-in defaults for N={n})")))?;
    let time_limit = file.time_limit.or(env.as_ref().map(|e| e.time_limit)).ok_or_else(|| {
        field_err("time_limit", format!("required (no built-in defaults for N={n})"))
    })?;

    let w = match &file.w {
        Some(r) => r.resolve("W")?,
        None => 1.0,
    };
    let seed = file.seed.unwrap_or(1);
    let coop_init = file.coop_init.unwrap_or(0.5);
    let t = file.t.unwrap_or(2.0);
    let s = file.s.unwrap_or(-1.0);
    let replicates = file.replicates.unwrap_or(1);
    if replicates == 0 {
        return Err(field_err("replicates", "must be at least 1"));
    }

    let mut cfg = SimConfig::new(n, k, beta, w, time_limit, seed)
        .map_err(|e| field_err("N/k/beta/W/time_limit", e.to_string()))?;
    cfg.coop_init = coop_init;
    cfg.validate()
        .map_err(|e| field_err("coop_init", e.to_string()))?;
    coopnet::game::GameMatrix::new(t, s).map_err(|e| field_err("T/S", e.to_string()))?;

    let policy = file.policy.clone();
    if let Some(name) = &policy {
        RewirePolicy::from_name(name).map_err(|e| field_err("policy", e.to_string()))?;
    }
    let checkpoint = file.checkpoint.clone();

    let mut spec = ResolvedSpec {
        kind,
        n,
        k,
        beta,
        w,
        time_limit,
        seed,
        coop_init,
        t,
        s,
        replicates,
        policy: None,
        checkpoint: None,
        w2: None,
        beta_med: None,
        mix: None,
        grid: None,
        w_list: None,
        w2_list: None,
        updates: None,
        batch_size: None,
        learning_rate: None,
        baseline_decay: None,
        reward: None,
        hidden_width: None,
        eval_episodes: None,
    };

    let needs_one_recommender = matches!(kind, Kind::Run | Kind::SweepTs | Kind::SweepW);
    if needs_one_recommender {
        match (&policy, &checkpoint) {
            (Some(_), Some(_)) => {
                return Err(field_err("policy", "give either policy or checkpoint, not both"))
            }
            (None, None) => {
                return Err(field_err("policy", "required (a registry name or a checkpoint)"))
            }
            _ => {}
        }
        spec.policy = policy.clone();
        spec.checkpoint = checkpoint.clone();
    }

    match kind {
        Kind::Run => {}
        Kind::SweepTs => {
            let grid = file.grid.unwrap_or(21);
            if grid == 0 {
                return Err(field_err("grid", "must be at least 1"));
            }
            spec.grid = Some(grid);
        }
        Kind::SweepW => {
            let list = file
                .w_list
                .as_ref()
                .ok_or_else(|| field_err("W_list", "required for SweepW"))?;
            spec.w_list = Some(resolve_rates("W_list", list)?);
        }
        Kind::SweepW1W2 | Kind::Compete => {
            let mix = file
                .mix
                .clone()
                .ok_or_else(|| field_err("mix", "required (e.g. NO_MED:0.9,GOOD:0.1)"))?;
            for (name, fraction) in &mix {
                RewirePolicy::from_name(name).map_err(|e| field_err("mix", e.to_string()))?;
                if !(0.0..=1.0).contains(fraction) {
                    return Err(field_err("mix", format!("fraction {fraction} outside [0, 1]")));
                }
            }
            let total: f64 = mix.iter().map(|(_, f)| f).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(field_err("mix", format!("fractions sum to {total}, expected 1")));
            }
            spec.mix = Some(mix);
            spec.beta_med = Some(file.beta_med.unwrap_or(DEFAULT_BETA_MED));
            if spec.beta_med.unwrap() <= 0.0 {
                return Err(field_err("beta_med", "must be positive"));
            }
            if kind == Kind::Compete {
                let w2 = match &file.w2 {
                    Some(r) => r.resolve("W2")?,
                    None => 0.1,
                };
                if w2.is_nan() || w2 < 0.0 {
                    return Err(field_err("W2", "must be >= 0 (may be \"inf\")"));
                }
                spec.w2 = Some(w2);
            } else {
                let w_list = match &file.w_list {
                    Some(l) => resolve_rates("W_list", l)?,
                    None => vec![w],
                };
                let w2_list = file
                    .w2_list
                    .as_ref()
                    .ok_or_else(|| field_err("W2_list", "required for SweepW1W2"))?;
                spec.w_list = Some(w_list);
                spec.w2_list = Some(resolve_rates("W2_list", w2_list)?);
            }
        }
        Kind::Train => {
            let reward = file.reward.unwrap_or(DEFAULT_REWARD);
            let updates = file.updates.unwrap_or(300);
            let batch_size = file.batch_size.unwrap_or(16);
            let learning_rate = file.learning_rate.unwrap_or(1e-2);
            let baseline_decay = file.baseline_decay.unwrap_or(0.99);
            let hidden_width = file.hidden_width.unwrap_or(32);
            if updates == 0 || batch_size == 0 || hidden_width == 0 {
                return Err(field_err(
                    "updates/batch_size/hidden_width",
                    "must be at least 1",
                ));
            }
            if learning_rate <= 0.0 {
                return Err(field_err("learning_rate", "must be positive"));
            }
            if !(0.0..1.0).contains(&baseline_decay) {
                return Err(field_err("baseline_decay", "must lie in [0, 1)"));
            }
            spec.reward = Some(reward);
            spec.updates = Some(updates);
            spec.batch_size = Some(batch_size);
            spec.learning_rate = Some(learning_rate);
            spec.baseline_decay = Some(baseline_decay);
            spec.hidden_width = Some(hidden_width);
            spec.eval_episodes = Some(file.eval_episodes.unwrap_or(100));
        }
        Kind::Eval => {
            spec.checkpoint =
                Some(checkpoint.ok_or_else(|| field_err("checkpoint", "required for Eval"))?);
            spec.reward = Some(file.reward.unwrap_or(DEFAULT_REWARD));
            spec.eval_episodes = Some(file.eval_episodes.unwrap_or(100));
        }
    }

    Ok(spec)
}

fn resolve_rates(field: &str, list: &[Rate]) -> Result<Vec<f64>, SpecError> {
    if list.is_empty() {
        return Err(field_err(field, "must not be empty"));
    }
    let out: Vec<f64> = list
        .iter()
        .map(|r| r.resolve(field))
        .collect::<Result<_, _>>()?;
    for x in &out {
        if x.is_nan() || *x < 0.0 {
            return Err(field_err(field, format!("rate {x} must be >= 0")));
        }
    }
    Ok(out)
}
