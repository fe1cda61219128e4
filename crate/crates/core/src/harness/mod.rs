//! Experiment runner: seeded (agent x seed) jobs, CSV/JSON output, plots
//! and the scripted qualitative scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agents::{act, build_agent, Agent, AgentKind, AgentRng, Transition};
use crate::env::{derive_seed, Env, EnvError};
use crate::metrics::{
    efficiency_index, last_fifth, mean, median, summarize_run, EpisodeLog, EpisodeSummary, StepRecord,
};
use crate::oracle::DistanceTable;

pub mod config;
pub mod plot;
pub mod scenario;

pub use config::{ConfigError, RunConfig};
pub use scenario::{run_scenario, ScenarioReport, ScenarioScript};

pub const RESULTS_HEADER: &str = "algo,seed,episode,steps,total_reward,goals_reached,dist_ineff";

const ENV_STREAM: u64 = 1;
const AGENT_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("results.csv line {line}: {message}")]
    Results { line: usize, message: String },
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}

/// Runs one episode, feeding every transition to the agent.
pub fn run_episode(
    agent: &mut dyn Agent,
    env: &Env,
    episode_seed: u64,
    epsilon: f64,
    rng: &mut AgentRng,
) -> EpisodeLog {
    let map = env.map();
    let mut state = env.begin_episode(episode_seed);
    let goal = map.state_index(state.goal).expect("goal is a free cell");
    agent.begin_episode(goal);
    let mut log = EpisodeLog::new(state.agent, state.goal);
    while !state.is_done() {
        let pos = state.agent;
        let s = map.state_index(pos).expect("agent on a free cell");
        let action = act(agent, s, goal, epsilon, rng);
        let out = env.step(&mut state, action).expect("episode not finished");
        let next = map.state_index(out.next_state).expect("landing cell is free");
        agent.observe(&Transition {
            state: s,
            action,
            reward: out.reward,
            next_state: next,
            goal,
            reached_goal: out.reached_goal,
        });
        let record = StepRecord {
            state: pos,
            action,
            reward: out.reward,
            next_state: out.next_state,
            reached_goal: out.reached_goal,
            respawned: out.respawned,
        };
        log.push(record, out.respawned.then_some(out.agent));
    }
    log
}

/// Trains a fresh agent of `kind` for `episodes` episodes under `seed`.
/// `on_episode` sees every log as it is produced.
pub fn run_seed(
    config: &RunConfig,
    kind: AgentKind,
    seed: u64,
    oracle: &DistanceTable,
    mut on_episode: impl FnMut(&EpisodeLog),
) -> Result<(Box<dyn Agent>, Vec<EpisodeSummary>), HarnessError> {
    let env = Env::new(config.env.clone())?;
    let mut agent = build_agent(kind, &config.agent, env.map().num_states(), env.config());
    let mut rng = AgentRng::seed_from_u64(derive_seed(seed, AGENT_STREAM, 0));
    let mut summaries = Vec::with_capacity(config.episodes);
    for ep in 0..config.episodes {
        let log =
            run_episode(agent.as_mut(), &env, derive_seed(seed, ENV_STREAM, ep as u64), config.agent.epsilon, &mut rng);
        on_episode(&log);
        summaries.push(EpisodeSummary::from_log(&log, oracle));
    }
    Ok((agent, summaries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub algo: AgentKind,
    pub seed: u64,
    /// 1-based.
    pub episode: usize,
    pub summary: EpisodeSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub median_reward_last20: f64,
    pub efficiency_index: usize,
    pub mean_dist_ineff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSummary {
    /// Median over the last 20% of episodes, pooled across seeds.
    pub median_reward_last20: f64,
    /// Efficiency index of the across-seed mean reward curve.
    pub efficiency_index: usize,
    /// Mean over every episode (all seeds) where it is defined.
    pub mean_dist_ineff: Option<f64>,
    pub per_seed: Vec<SeedSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsBundle {
    /// Sorted by `(algo, seed, episode)`.
    pub rows: Vec<EpisodeRow>,
    pub summary: BTreeMap<AgentKind, AgentSummary>,
}

impl ResultsBundle {
    pub fn from_rows(mut rows: Vec<EpisodeRow>) -> ResultsBundle {
        rows.sort_by_key(|r| (r.algo, r.seed, r.episode));
        let mut summary = BTreeMap::new();
        for algo in rows.iter().map(|r| r.algo).collect::<std::collections::BTreeSet<_>>() {
            let mine: Vec<&EpisodeRow> = rows.iter().filter(|r| r.algo == algo).collect();
            summary.insert(algo, summarize_agent(&mine));
        }
        ResultsBundle { rows, summary }
    }

    pub fn agents(&self) -> Vec<AgentKind> {
        self.summary.keys().copied().collect()
    }

    /// Reward series per seed for one agent, ordered by seed.
    pub fn reward_series(&self, algo: AgentKind) -> Vec<(u64, Vec<f64>)> {
        let mut out: Vec<(u64, Vec<f64>)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.algo == algo) {
            match out.last_mut() {
                Some((seed, series)) if *seed == r.seed => series.push(r.summary.total_reward),
                _ => out.push((r.seed, vec![r.summary.total_reward])),
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let s = &r.summary;
            let ineff = s.dist_ineff.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.algo, r.seed, r.episode, s.steps, s.total_reward, s.goals_reached, ineff
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ResultsBundle, HarnessError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == RESULTS_HEADER => {}
            _ => return Err(HarnessError::Results { line: 1, message: format!("expected header {RESULTS_HEADER:?}") }),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| HarnessError::Results { line: i + 1, message };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(format!("expected 7 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
            rows.push(EpisodeRow {
                algo: f[0].parse().map_err(bad)?,
                seed: f[1].parse().map_err(|e| bad(format!("{:?}: {e}", f[1])))?,
                episode: int(f[2])?,
                summary: EpisodeSummary {
                    steps: int(f[3])?,
                    total_reward: num(f[4])?,
                    goals_reached: int(f[5])?,
                    dist_ineff: if f[6].is_empty() { None } else { Some(num(f[6])?) },
                },
            });
        }
        Ok(ResultsBundle::from_rows(rows))
    }

    pub fn summary_json(&self) -> String {
        let named: BTreeMap<&str, &AgentSummary> = self.summary.iter().map(|(k, v)| (k.name(), v)).collect();
        serde_json::to_string_pretty(&named).expect("summary serialises") + "\n"
    }

    /// Writes `results.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        create_dir(dir)?;
        write_file(&dir.join("results.csv"), &self.to_csv())?;
        write_file(&dir.join("summary.json"), &self.summary_json())
    }
}

fn summarize_agent(rows: &[&EpisodeRow]) -> AgentSummary {
    let mut per_seed = Vec::new();
    let mut pooled_tail = Vec::new();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let seed = rows[start].seed;
        let end = start + rows[start..].iter().take_while(|r| r.seed == seed).count();
        let eps: Vec<EpisodeSummary> = rows[start..end].iter().map(|r| r.summary).collect();
        let run = summarize_run(&eps);
        pooled_tail.extend_from_slice(last_fifth(&run.rewards));
        per_seed.push(SeedSummary {
            seed,
            median_reward_last20: run.median_reward_last20,
            efficiency_index: run.efficiency_index,
            mean_dist_ineff: run.mean_dist_ineff,
        });
        curves.push(run.rewards);
        start = end;
    }
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let mean_curve: Vec<f64> =
        (0..len).map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64).collect();
    AgentSummary {
        median_reward_last20: median(&pooled_tail).unwrap_or(f64::NAN),
        efficiency_index: efficiency_index(&mean_curve).unwrap_or(0),
        mean_dist_ineff: mean(rows.iter().filter_map(|r| r.summary.dist_ineff)),
        per_seed,
    }
}

/// Runs every `(agent, seed)` job of the configuration. Jobs run in
/// parallel; the result does not depend on scheduling.
pub fn run_experiment(config: &RunConfig) -> Result<ResultsBundle, HarnessError> {
    config.validate()?;
    let oracle = DistanceTable::from_bfs(&config.env.map, 1.0);
    let jobs: Vec<(AgentKind, u64)> =
        config.agents.iter().flat_map(|&a| config.seeds.iter().map(move |&s| (a, s))).collect();
    let results: Vec<Result<Vec<EpisodeRow>, HarnessError>> = jobs
        .par_iter()
        .map(|&(algo, seed)| {
            let (_, summaries) = run_seed(config, algo, seed, &oracle, |_| {})?;
            Ok(summaries
                .into_iter()
                .enumerate()
                .map(|(i, summary)| EpisodeRow { algo, seed, episode: i + 1, summary })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(ResultsBundle::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapio::bundled_map;

    fn small_config() -> RunConfig {
        let mut cfg = RunConfig::with_map(bundled_map("four_room").unwrap());
        cfg.episodes = 3;
        cfg.seeds = vec![7, 8];
        cfg.env.steps_per_episode = 60;
        cfg
    }

    #[test]
    fn one_row_per_episode() {
        let mut cfg = small_config();
        cfg.agents = vec![AgentKind::Ql];
        cfg.episodes = 1;
        cfg.seeds = vec![7];
        let bundle = run_experiment(&cfg).unwrap();
        assert_eq!(bundle.to_csv().lines().count(), 2);
    }

    #[test]
    fn csv_round_trip_and_order() {
        let bundle = run_experiment(&small_config()).unwrap();
        assert_eq!(bundle.rows.len(), 4 * 2 * 3);
        let csv = bundle.to_csv();
        assert_eq!(csv.lines().next(), Some(RESULTS_HEADER));
        let back = ResultsBundle::from_csv(&csv).unwrap();
        assert_eq!(back.to_csv(), csv);
        assert_eq!(back.summary_json(), bundle.summary_json());
        let keys: Vec<_> = bundle.rows.iter().map(|r| (r.algo, r.seed, r.episode)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn seed_order_does_not_matter() {
        let a = run_experiment(&small_config()).unwrap();
        let mut cfg = small_config();
        cfg.seeds.reverse();
        cfg.agents.reverse();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.summary_json(), b.summary_json());
    }

    #[test]
    fn every_episode_runs_the_horizon() {
        let bundle = run_experiment(&small_config()).unwrap();
        assert!(bundle.rows.iter().all(|r| r.summary.steps == 60));
        for r in &bundle.rows {
            // reward decomposes into goal hits and plain steps
            let s = r.summary;
            let expected = s.goals_reached as f64 * 10.0 + -((s.steps - s.goals_reached) as f64);
            assert_eq!(s.total_reward, expected);
        }
    }

    #[test]
    fn bad_results_csv() {
        assert!(matches!(ResultsBundle::from_csv("nope\n"), Err(HarnessError::Results { line: 1, .. })));
        let text = format!("{RESULTS_HEADER}\nFWRL,1,1,10,-10,0\n");
        assert!(matches!(ResultsBundle::from_csv(&text), Err(HarnessError::Results { line: 2, .. })));
    }
}
