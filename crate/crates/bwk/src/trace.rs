//! JSON-lines episode traces: one line per round, tagged with its cell.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use bwk_core::env::Observation;
use bwk_core::episode::{EpisodeResult, TraceRecord};
use bwk_core::estimator::EstimatorState;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::sweep::Cell;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub policy_id: String,
    pub cell: Cell,
    pub budget: f64,
    #[serde(flatten)]
    pub record: TraceRecord,
}

pub fn write_trace<W: Write>(
    cfg: &ExperimentConfig,
    episodes: &[(Cell, EpisodeResult)],
    mut out: W,
) -> Result<()> {
    let io = |e: std::io::Error| Error::Trace(e.to_string());
    for (cell, ep) in episodes {
        let Some(records) = &ep.trace else { continue };
        for record in records {
            let line = TraceLine {
                policy_id: ep.policy_id.clone(),
                cell: *cell,
                budget: cfg.b_grid[cell.budget],
                record: record.clone(),
            };
            serde_json::to_writer(&mut out, &line).map_err(|e| Error::Trace(e.to_string()))?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceLine>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(n, l)| {
            let l = l.map_err(|e| Error::Trace(e.to_string()))?;
            serde_json::from_str(&l).map_err(|e| Error::Trace(format!("line {}: {e}", n + 1)))
        })
        .collect()
}

/// Rebuilds the estimator of every traced episode.
pub fn replay(
    lines: &[TraceLine],
    arms: usize,
    resources: usize,
) -> BTreeMap<(usize, usize, usize), EstimatorState> {
    let mut grouped: BTreeMap<(usize, usize, usize), Vec<&TraceRecord>> = BTreeMap::new();
    for l in lines {
        grouped
            .entry((l.cell.policy, l.cell.budget, l.cell.rep))
            .or_default()
            .push(&l.record);
    }
    grouped
        .into_iter()
        .map(|(key, records)| {
            let est = EstimatorState::replay(
                arms,
                resources,
                records
                    .into_iter()
                    .map(|r| (r.action, &r.observation as &Observation, &r.selection)),
            );
            (key, est)
        })
        .collect()
}
