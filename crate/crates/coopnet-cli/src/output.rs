//! Artifact emission: results.csv, summary.json, manifest.json, and the
//! training extras. Output is deterministic byte for byte given the same
//! resolved spec.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use coopnet::learn::UpdateDiagnostics;
use coopnet::metrics::RunRow;

use crate::spec::ResolvedSpec;

/// What reruns need: the exact resolved spec, the code version that wrote
/// it, and the derived per-episode seeds.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub spec: ResolvedSpec,
    pub run_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl Manifest {
    pub fn new(spec: ResolvedSpec, run_seeds: Vec<u64>) -> Manifest {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            run_seeds,
            warning: None,
        }
    }
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<OutDir> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_results(&self, rows: &[RunRow]) -> Result<()> {
        self.write_csv("results.csv", rows)
    }

    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    pub fn write_training_log(&self, log: &[UpdateDiagnostics]) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            update: usize,
            mean_reward: f64,
            mean_action_strategy: f64,
            mean_action_degree: f64,
        }
        let rows: Vec<Row> = log
            .iter()
            .enumerate()
            .map(|(update, d)| Row {
                update,
                mean_reward: d.mean_reward,
                mean_action_strategy: d.mean_action_strategy,
                mean_action_degree: d.mean_action_degree,
            })
            .collect();
        self.write_csv("training_log.csv", &rows)
    }
}

/// Per-mediator final outcome of one competition run; violin-plot food.
#[derive(Debug, Serialize)]
pub struct AdoptionRow {
    pub run: usize,
    pub seed: u64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W2")]
    pub w2: f64,
    pub mediator: usize,
    pub policy: String,
    pub initial_share: f64,
    pub final_share: f64,
    pub rewire_requests: u64,
}

/// The csv crate emits a header row even for empty input only when it has
/// seen a struct; force one so downstream tooling always finds the schema.
pub fn ensure_header_only_csv(path: &Path, columns: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(columns)?;
    w.flush()?;
    Ok(())
}
