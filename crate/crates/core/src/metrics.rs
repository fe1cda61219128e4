//! Per-episode metrics and run-level aggregates.

use serde::Serialize;

use crate::env::Action;
use crate::mapio::CellCoord;
use crate::oracle::DistanceTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub state: CellCoord,
    pub action: Action,
    pub reward: f64,
    pub next_state: CellCoord,
    pub reached_goal: bool,
    pub respawned: bool,
}

/// Everything that happened in one episode.
///
/// `spawn_points[i]` is where segment `i` starts; a segment ends at the
/// record that reaches the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub records: Vec<StepRecord>,
    pub spawn_points: Vec<CellCoord>,
    pub goal: CellCoord,
}

impl EpisodeLog {
    pub fn new(spawn: CellCoord, goal: CellCoord) -> EpisodeLog {
        EpisodeLog { records: Vec::new(), spawn_points: vec![spawn], goal }
    }

    /// Appends a step; `respawn_at` is the new spawn point after a goal hit.
    pub fn push(&mut self, record: StepRecord, respawn_at: Option<CellCoord>) {
        self.records.push(record);
        if let Some(c) = respawn_at {
            self.spawn_points.push(c);
        }
    }

    pub fn goals_reached(&self) -> usize {
        self.records.iter().filter(|r| r.reached_goal).count()
    }
}

pub fn total_reward(log: &EpisodeLog) -> f64 {
    log.records.iter().map(|r| r.reward).sum()
}

/// Distance actually walked over completed segments divided by the sum of
/// their shortest spawn-to-goal distances. Bumps count as zero distance
/// and respawn jumps are not counted. `None` if no segment completed.
pub fn distance_inefficiency(log: &EpisodeLog, oracle: &DistanceTable) -> Option<f64> {
    let mut walked = 0usize;
    let mut shortest = 0.0;
    let mut segment = 0;
    let mut moves = 0usize;
    for r in &log.records {
        if r.next_state != r.state {
            moves += 1;
        }
        if r.reached_goal {
            let spawn = log.spawn_points.get(segment).copied()?;
            walked += moves;
            shortest += oracle.between(spawn, log.goal)?;
            segment += 1;
            moves = 0;
        }
    }
    (shortest > 0.0).then(|| walked as f64 / shortest)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub total_reward: f64,
    pub dist_ineff: Option<f64>,
    pub goals_reached: usize,
    pub steps: usize,
}

impl EpisodeSummary {
    pub fn from_log(log: &EpisodeLog, oracle: &DistanceTable) -> EpisodeSummary {
        EpisodeSummary {
            total_reward: total_reward(log),
            dist_ineff: distance_inefficiency(log, oracle),
            goals_reached: log.goals_reached(),
            steps: log.records.len(),
        }
    }
}

/// Aggregates over one seed's sequence of episodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub rewards: Vec<f64>,
    pub median_reward_last20: f64,
    pub efficiency_index: usize,
    pub mean_dist_ineff: Option<f64>,
}

pub fn summarize_run(episodes: &[EpisodeSummary]) -> RunSummary {
    let rewards: Vec<f64> = episodes.iter().map(|e| e.total_reward).collect();
    RunSummary {
        median_reward_last20: median(last_fifth(&rewards)).unwrap_or(f64::NAN),
        efficiency_index: efficiency_index(&rewards).unwrap_or(0),
        mean_dist_ineff: mean(episodes.iter().filter_map(|e| e.dist_ineff)),
        rewards,
    }
}

/// The final 20% of a series (at least one element when non-empty).
pub fn last_fifth(series: &[f64]) -> &[f64] {
    let k = series.len().div_ceil(5);
    &series[series.len() - k..]
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub const TRAILING_WINDOW: usize = 10;

/// Mean of the (up to) `TRAILING_WINDOW` episodes ending at each index.
pub fn trailing_means(series: &[f64]) -> Vec<f64> {
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(TRAILING_WINDOW);
            let w = &series[lo..=i];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// First episode (1-based) whose trailing mean gets within 10% of the
/// final trailing mean, i.e. reaches `final - 0.1 * |final|`.
pub fn efficiency_index(series: &[f64]) -> Option<usize> {
    let trailing = trailing_means(series);
    let last = *trailing.last()?;
    let threshold = last - 0.1 * last.abs();
    trailing.iter().position(|&m| m >= threshold).map(|i| i + 1)
}
