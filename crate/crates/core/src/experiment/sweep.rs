use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{run_pipeline, AuditReport};
use crate::analysis::emit_report;
use crate::codec::to_json_fixed;
use crate::error::{Error, Result};

/// Environment variable capping the number of concurrent sweep workers.
pub const THREADS_ENV: &str = "AUDIT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    /// Runs that reported this metric.
    pub runs: usize,
}

/// Per-metric mean and spread over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, MetricSummary>,
}

impl SweepAggregate {
    pub fn mean(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.mean)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub reports: Vec<AuditReport>,
    pub aggregate: SweepAggregate,
}

/// Seeds of a `k`-run sweep: the config's master seed and the next `k - 1`.
pub fn sweep_seeds(cfg: &ExperimentConfig, k: usize) -> Vec<u64> {
    (0..k as u64)
        .map(|i| cfg.master_seed.wrapping_add(i))
        .collect()
}

pub fn aggregate(reports: &[AuditReport]) -> SweepAggregate {
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reports {
        for (name, v) in r.metrics() {
            values.entry(name).or_default().push(v);
        }
    }
    let metrics = values
        .into_iter()
        .map(|(name, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let std = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (
                name,
                MetricSummary {
                    mean,
                    std,
                    runs: xs.len(),
                },
            )
        })
        .collect();
    SweepAggregate {
        seeds: reports.iter().map(|r| r.master_seed).collect(),
        metrics,
    }
}

/// Worker count from `AUDIT_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(
                THREADS_ENV,
                format!("expected a positive integer, got `{s}`"),
            )),
        },
    }
}

/// Runs `k` experiments with consecutive master seeds on at most `threads`
/// workers (`None`: one per core). Reports come back in seed order.
pub fn sweep_with_threads(
    cfg: &ExperimentConfig,
    k: usize,
    threads: Option<usize>,
) -> Result<SweepResult> {
    if k == 0 {
        return Err(Error::config("seeds", "a sweep needs at least one seed"));
    }
    cfg.validate()?;
    let configs: Vec<ExperimentConfig> = sweep_seeds(cfg, k)
        .into_iter()
        .map(|s| ExperimentConfig {
            master_seed: s,
            ..cfg.clone()
        })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let reports = pool.install(|| {
        configs
            .par_iter()
            .map(run_pipeline)
            .collect::<Result<Vec<_>>>()
    })?;
    let aggregate = aggregate(&reports);
    Ok(SweepResult { reports, aggregate })
}

/// [`sweep_with_threads`] honoring `AUDIT_THREADS`.
pub fn sweep(cfg: &ExperimentConfig, k: usize) -> Result<SweepResult> {
    sweep_with_threads(cfg, k, thread_cap()?)
}

/// Writes `seed-<s>/` report directories and `aggregate.json`. Returns the
/// aggregate path.
pub fn emit_sweep(result: &SweepResult, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for r in &result.reports {
        emit_report(r, &[], out_dir.join(format!("seed-{}", r.master_seed)))?;
    }
    let path = out_dir.join("aggregate.json");
    fs::write(&path, to_json_fixed(&result.aggregate)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
