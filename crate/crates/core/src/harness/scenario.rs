//! Scripted transfer scenario.
//!
//! FWRL and QLCAT are trained on a short list of scripted `(start, goal)`
//! episodes and then evaluated greedily, without learning, on a pair that
//! combines a goal seen in one training episode with a start seen in
//! another.

use std::path::Path;

use rand::SeedableRng;
use serde::Serialize;

use super::config::{load_map, parse_entries, ConfigError, Entry};
use super::{create_dir, plot, write_file, HarnessError};
use crate::agents::{
    act, snapshot_csv, Agent, AgentConfig, AgentKind, AgentRng, FwrlAgent, QlAgent, QlMode, TieBreak, Transition,
};
use crate::env::{derive_seed, Env, EnvConfig, GoalMode};
use crate::mapio::{bundled_map, CellCoord, GridMap};
use crate::oracle::bfs_distances;

const SCENARIO_STREAM: u64 = 3;
const REPEAT: usize = 6;

#[derive(Debug, Clone)]
pub struct ScenarioScript {
    pub map: GridMap,
    pub training: Vec<(CellCoord, CellCoord)>,
    pub test: (CellCoord, CellCoord),
    pub terminate_on_goal: bool,
    /// Step budget of every episode, training and test.
    pub max_steps: usize,
    pub epsilon: f64,
    pub alpha: f64,
    /// Tie rule while training; evaluation always uses fixed order.
    pub train_tie_break: TieBreak,
    pub seed: u64,
    /// Consecutive episodes run on each training pair.
    pub repeat: usize,
}

const SCRIPT_KEYS: &[&str] =
    &["map", "train", "test", "repeat", "terminate_on_goal", "max_steps", "epsilon", "alpha", "tie_break", "seed"];

fn parse_pair(e: &Entry) -> Result<(CellCoord, CellCoord), ConfigError> {
    let cell = |s: &str| -> Result<CellCoord, ConfigError> {
        let (x, y) = s.trim().split_once(',').ok_or_else(|| e.invalid(format!("expected `x,y`, got {s:?}")))?;
        let x = x.trim().parse().map_err(|_| e.invalid(format!("bad x coordinate {x:?}")))?;
        let y = y.trim().parse().map_err(|_| e.invalid(format!("bad y coordinate {y:?}")))?;
        Ok(CellCoord::new(x, y))
    };
    let (start, goal) = e.value.split_once("->").ok_or_else(|| e.invalid("expected `x,y -> x,y`"))?;
    Ok((cell(start)?, cell(goal)?))
}

impl ScenarioScript {
    /// Two training runs through the H-maze whose paths share the
    /// connecting corridor; the test asks for the first goal from the
    /// second start.
    pub fn h_maze() -> ScenarioScript {
        ScenarioScript {
            map: bundled_map("h_maze").expect("bundled"),
            training: vec![(CellCoord::new(1, 1), CellCoord::new(4, 4)), (CellCoord::new(7, 1), CellCoord::new(1, 7))],
            test: (CellCoord::new(7, 1), CellCoord::new(4, 4)),
            terminate_on_goal: true,
            max_steps: 500,
            epsilon: 0.1,
            alpha: 1.0,
            train_tie_break: TieBreak::SeededRandom,
            seed: 0,
            repeat: REPEAT,
        }
    }

    pub fn from_file(path: &Path) -> Result<ScenarioScript, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        ScenarioScript::parse(&text, path.parent())
    }

    /// Parses a script; unspecified keys keep their [`ScenarioScript::h_maze`]
    /// values, except that any `train` line replaces the whole training list.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<ScenarioScript, ConfigError> {
        let entries = parse_entries(text, SCRIPT_KEYS, &["train"])?;
        let mut script = ScenarioScript::h_maze();
        let mut training = Vec::new();
        for e in &entries {
            match e.key.as_str() {
                "map" => script.map = load_map(&e.value, base_dir)?,
                "train" => training.push(parse_pair(e)?),
                "test" => script.test = parse_pair(e)?,
                "terminate_on_goal" => script.terminate_on_goal = e.parse_bool()?,
                "max_steps" => script.max_steps = e.parse()?,
                "epsilon" => script.epsilon = e.parse()?,
                "alpha" => script.alpha = e.parse()?,
                "tie_break" => script.train_tie_break = e.parse()?,
                "seed" => script.seed = e.parse()?,
                "repeat" => script.repeat = e.parse()?,
                _ => unreachable!(),
            }
        }
        if !training.is_empty() {
            script.training = training;
        }
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.training.is_empty() {
            return bad("scenario needs at least one training episode".into());
        }
        for &(s, g) in self.training.iter().chain(std::iter::once(&self.test)) {
            for c in [s, g] {
                if self.map.is_wall(c) {
                    return bad(format!("cell {c} is a wall or outside the map"));
                }
            }
            if s == g {
                return bad(format!("start and goal coincide at {s}"));
            }
        }
        if !self.training.iter().any(|&(_, g)| g == self.test.1) {
            return bad(format!("test goal {} is not a training goal", self.test.1));
        }
        if !self.training.iter().any(|&(s, _)| s == self.test.0) {
            return bad(format!("test start {} is not a training start", self.test.0));
        }
        if self.max_steps == 0 || self.repeat == 0 {
            return bad("max_steps and repeat must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("epsilon must lie in [0, 1] and alpha in (0, 1]".into());
        }
        Ok(())
    }

    /// True when the test start and goal come from different training
    /// episodes, i.e. the pair was never trained on directly.
    pub fn is_transfer(&self) -> bool {
        !self.training.contains(&self.test)
    }

    /// Training pairs in episode order, each repeated `repeat` times.
    pub fn episodes(&self) -> Vec<(CellCoord, CellCoord)> {
        self.training.iter().flat_map(|&p| std::iter::repeat_n(p, self.repeat)).collect()
    }

    fn env(&self) -> Result<Env, HarnessError> {
        let mut cfg = EnvConfig::new(self.map.clone());
        cfg.steps_per_episode = self.max_steps;
        cfg.goal_mode = if self.terminate_on_goal { GoalMode::Terminate } else { GoalMode::Respawn };
        Ok(Env::new(cfg)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub start: CellCoord,
    pub goal: CellCoord,
    pub reached: bool,
    pub steps: usize,
    /// Cells visited, starting with `start`.
    pub trajectory: Vec<CellCoord>,
}

/// State values `max_a Q(s, a, goal)` after an episode, in state order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub label: String,
    pub goal: CellCoord,
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentReport {
    pub agent: AgentKind,
    pub training: Vec<Trace>,
    pub test: Trace,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub map: String,
    pub transfer: bool,
    /// Shortest-path length of the test pair.
    pub oracle_test_steps: Option<u32>,
    pub agents: Vec<AgentReport>,
}

impl ScenarioReport {
    pub fn agent(&self, kind: AgentKind) -> Option<&AgentReport> {
        self.agents.iter().find(|a| a.agent == kind)
    }
}

fn state_values(agent: &dyn Agent, map: &GridMap, goal: usize) -> Vec<f64> {
    (0..map.num_states()).map(|s| agent.action_values(s, goal).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect()
}

fn train_episode(
    agent: &mut dyn Agent,
    env: &Env,
    (start, goal): (CellCoord, CellCoord),
    seed: u64,
    epsilon: f64,
    rng: &mut AgentRng,
) -> Result<Trace, HarnessError> {
    let map = env.map();
    let mut state = env.begin_episode_at(start, goal, seed)?;
    let g = map.state_index(goal).expect("validated");
    agent.begin_episode(g);
    let mut trajectory = vec![start];
    let mut reached = false;
    let mut steps = 0;
    while !state.is_done() {
        let s = map.state_index(state.agent).expect("free cell");
        let action = act(agent, s, g, epsilon, rng);
        let out = env.step(&mut state, action)?;
        steps += 1;
        let next = map.state_index(out.next_state).expect("free cell");
        agent.observe(&Transition {
            state: s,
            action,
            reward: out.reward,
            next_state: next,
            goal: g,
            reached_goal: out.reached_goal,
        });
        trajectory.push(out.next_state);
        reached |= out.reached_goal;
    }
    Ok(Trace { start, goal, reached, steps, trajectory })
}

/// Greedy rollout with fixed-order ties and no learning.
fn evaluate(agent: &mut dyn Agent, env: &Env, (start, goal): (CellCoord, CellCoord), rng: &mut AgentRng) -> Trace {
    let map = env.map();
    agent.set_tie_break(TieBreak::FixedOrder);
    let g = map.state_index(goal).expect("validated");
    let mut pos = start;
    let mut trajectory = vec![start];
    let mut steps = 0;
    while pos != goal && steps < env.config().steps_per_episode {
        let s = map.state_index(pos).expect("free cell");
        let action = agent.greedy_action(s, g, rng);
        pos = map.intended_move(pos, action);
        trajectory.push(pos);
        steps += 1;
    }
    Trace { start, goal, reached: pos == goal, steps, trajectory }
}

pub fn run_scenario(script: &ScenarioScript) -> Result<ScenarioReport, HarnessError> {
    script.validate()?;
    let env = script.env()?;
    let map = env.map();
    let cfg = AgentConfig {
        epsilon: script.epsilon,
        alpha: script.alpha,
        tie_break: script.train_tie_break,
        ..AgentConfig::default()
    };
    let n = map.num_states();
    let mut agents: Vec<Box<dyn Agent>> = vec![
        Box::new(FwrlAgent::new(n, &cfg, env.config().goal_reward)),
        Box::new(QlAgent::new(QlMode::Concat, n, &cfg)),
    ];

    let mut reports = Vec::new();
    for agent in agents.iter_mut() {
        let agent = agent.as_mut();
        let mut rng = AgentRng::seed_from_u64(derive_seed(script.seed, SCENARIO_STREAM, 0));
        let mut training = Vec::new();
        let mut snapshots = Vec::new();
        for (i, &pair) in script.episodes().iter().enumerate() {
            let seed = derive_seed(script.seed, SCENARIO_STREAM, i as u64 + 1);
            training.push(train_episode(agent, &env, pair, seed, script.epsilon, &mut rng)?);
            let g = map.state_index(pair.1).expect("validated");
            snapshots.push(Snapshot {
                label: format!("train {}", i + 1),
                goal: pair.1,
                values: state_values(agent, map, g),
                csv: snapshot_csv(agent, map),
            });
        }
        let test = evaluate(agent, &env, script.test, &mut rng);
        let g = map.state_index(script.test.1).expect("validated");
        snapshots.push(Snapshot {
            label: "test".into(),
            goal: script.test.1,
            values: state_values(agent, map, g),
            csv: snapshot_csv(agent, map),
        });
        reports.push(AgentReport { agent: agent.kind(), training, test, snapshots });
    }

    let start = map.state_index(script.test.0).expect("validated");
    let goal = map.state_index(script.test.1).expect("validated");
    Ok(ScenarioReport {
        map: map.name().to_string(),
        transfer: script.is_transfer(),
        oracle_test_steps: bfs_distances(map, start)[goal],
        agents: reports,
    })
}

impl ScenarioReport {
    /// Writes `scenario.json`, `heatmap.svg` and one snapshot CSV per
    /// agent and episode under `dir`.
    pub fn write(&self, script: &ScenarioScript, dir: &Path) -> Result<(), HarnessError> {
        create_dir(dir)?;
        let json = serde_json::to_string_pretty(self).expect("report serialises") + "\n";
        write_file(&dir.join("scenario.json"), &json)?;
        write_file(&dir.join("heatmap.svg"), &plot::scenario_heatmap(self, script))?;
        let snap_dir = dir.join("snapshots");
        create_dir(&snap_dir)?;
        for a in &self.agents {
            for s in &a.snapshots {
                let name = format!("{}_{}.csv", a.agent.name().to_lowercase(), s.label.replace(' ', "_"));
                write_file(&snap_dir.join(name), &s.csv)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_script_is_a_transfer_pair() {
        let s = ScenarioScript::h_maze();
        assert!(s.validate().is_ok());
        assert!(s.is_transfer());
    }

    #[test]
    fn parse_script() {
        let text =
            "map = h_maze\ntrain = 1,1 -> 4,4\ntrain = 7,1 -> 1,7\ntest = 7,1 -> 4,4\nseed = 3\nmax_steps = 200\n";
        let s = ScenarioScript::parse(text, None).unwrap();
        assert_eq!(s.training.len(), 2);
        assert_eq!(s.test, (CellCoord::new(7, 1), CellCoord::new(4, 4)));
        assert_eq!((s.seed, s.max_steps), (3, 200));
    }

    #[test]
    fn script_validation() {
        let err = ScenarioScript::parse("test = 0,0 -> 4,4\n", None).unwrap_err();
        assert!(err.to_string().contains("wall"), "{err}");
        let err = ScenarioScript::parse("test = 7,1 -> 1,1\n", None).unwrap_err();
        assert!(err.to_string().contains("not a training goal"), "{err}");
        let err = ScenarioScript::parse("test = 1,7 -> 4,4\n", None).unwrap_err();
        assert!(err.to_string().contains("not a training start"), "{err}");
        let err = ScenarioScript::parse("train = 1,1 4,4\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { line: 1, .. }), "{err}");
    }

    #[test]
    fn memorised_pair_is_reached_by_both() {
        // the memorised pair comes last so QLCAT's values along it are fresh
        let mut s = ScenarioScript::h_maze();
        s.training.reverse();
        s.test = s.training[1];
        assert!(!s.is_transfer());
        let report = run_scenario(&s).unwrap();
        for a in &report.agents {
            assert!(a.test.reached, "{:?} did not reach a trained pair", a.agent);
        }
    }
}
