//! Forecast caches: one JSON object per (instance, module) pair.
//!
//! ```text
//! {"instance_id":"q1","module_id":"pmi","probs":[2.5000000000000000e-1,7.5000000000000000e-1]}
//! ```
//!
//! Probabilities are written with 17 significant digits so they re-read
//! bit for bit.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use lexfuse_core::{Distribution, ForecastSet, QuestionSet};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::io::{format_float, read_text};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheRecord {
    pub instance_id: String,
    pub module_id: String,
    pub probs: Vec<f64>,
}

/// Cache records in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastCache {
    pub records: Vec<CacheRecord>,
}

impl ForecastCache {
    /// Records for every instance of `questions` (in question order) and
    /// every module of `forecasts` (in module order).
    pub fn from_forecasts(questions: &QuestionSet, forecasts: &ForecastSet) -> CliResult<Self> {
        if questions.len() != forecasts.n_instances() {
            return Err(CliError::Consistency(format!(
                "{} questions but {} forecast rows",
                questions.len(),
                forecasts.n_instances()
            )));
        }
        let mut records = Vec::with_capacity(questions.len() * forecasts.n_modules());
        for (h, inst) in questions.instances().iter().enumerate() {
            for (i, module) in forecasts.module_ids().iter().enumerate() {
                records.push(CacheRecord {
                    instance_id: inst.id.clone(),
                    module_id: module.clone(),
                    probs: forecasts.get(h, i).probs().to_vec(),
                });
            }
        }
        Ok(Self { records })
    }

    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let at = format!("{source}:{}", i + 1);
            let record: CacheRecord =
                serde_json::from_str(line).map_err(|e| CliError::Input(format!("{at}: {e}")))?;
            Distribution::ingest(record.probs.clone()).map_err(|e| CliError::from(e).context(&at))?;
            if !seen.insert((record.instance_id.clone(), record.module_id.clone())) {
                return Err(CliError::Input(format!(
                    "{at}: duplicate record for instance {} and module {}",
                    record.instance_id, record.module_id
                )));
            }
            records.push(record);
        }
        Ok(Self { records })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let probs: Vec<String> = r.probs.iter().map(|&p| format_float(p)).collect();
            out.push_str(&format!(
                "{{\"instance_id\":{},\"module_id\":{},\"probs\":[{}]}}\n",
                serde_json::Value::from(r.instance_id.as_str()),
                serde_json::Value::from(r.module_id.as_str()),
                probs.join(",")
            ));
        }
        out
    }

    /// Module ids in order of first appearance.
    pub fn module_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.module_id.as_str()))
            .map(|r| r.module_id.clone())
            .collect()
    }

    /// Assembles the m×n forecast grid for `questions`. The cache must hold
    /// exactly one record per (question, module) pair and nothing else.
    pub fn to_forecast_set(&self, questions: &QuestionSet) -> CliResult<ForecastSet> {
        let modules = self.module_ids();
        if modules.is_empty() {
            return Err(CliError::Consistency("forecast cache is empty".into()));
        }
        let row_of: HashMap<&str, usize> = questions
            .instances()
            .iter()
            .enumerate()
            .map(|(h, inst)| (inst.id.as_str(), h))
            .collect();
        let col_of: HashMap<&str, usize> = modules.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let k = questions.k();
        let mut grid: Vec<Vec<Option<Distribution>>> = vec![vec![None; modules.len()]; questions.len()];
        for r in &self.records {
            let h = *row_of.get(r.instance_id.as_str()).ok_or_else(|| {
                CliError::Consistency(format!("cache instance {} is not in the question set", r.instance_id))
            })?;
            if r.probs.len() != k {
                return Err(CliError::Consistency(format!(
                    "instance {} module {}: {} probabilities for {k} choices",
                    r.instance_id,
                    r.module_id,
                    r.probs.len()
                )));
            }
            grid[h][col_of[r.module_id.as_str()]] = Some(Distribution::ingest(r.probs.clone())?);
        }
        let mut rows = Vec::with_capacity(grid.len());
        for (h, row) in grid.into_iter().enumerate() {
            let mut cells = Vec::with_capacity(row.len());
            for (i, cell) in row.into_iter().enumerate() {
                cells.push(cell.ok_or_else(|| {
                    CliError::Consistency(format!(
                        "cache is missing instance {} for module {}",
                        questions.instances()[h].id,
                        modules[i]
                    ))
                })?);
            }
            rows.push(cells);
        }
        Ok(ForecastSet::new(modules, rows)?)
    }
}
