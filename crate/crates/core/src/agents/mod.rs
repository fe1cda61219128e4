//! Learning agents and the interface the harness drives them through.
//!
//! All agents work on state indices (see [`GridMap::states`]) rather than
//! coordinates. Four agents are provided:
//!
//! * [`FwrlAgent`]: goal-conditioned table `F(s, a, s')` updated by
//!   Floyd-Warshall style relaxation, never using the goal reward.
//! * [`QlAgent`] in [`QlMode::Reset`]: Q-learning over `s`, wiped every episode.
//! * [`QlAgent`] in [`QlMode::Concat`]: Q-learning over `(s, g)`, kept across episodes.
//! * [`MbrlAgent`]: transition counts plus finite-horizon value iteration.
//!
//! [`GridMap::states`]: crate::mapio::GridMap::states

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvConfig};
use crate::mapio::{CellCoord, Direction, GridMap};

mod fwrl;
mod mbrl;
mod qlearning;

pub use fwrl::{FwTable, FwrlAgent, RelaxPivot};
pub use mbrl::{plan, MbrlAgent, ModelTables, Plan};
pub use qlearning::{QTable, QlAgent, QlMode};

pub type AgentRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "FWRL")]
    Fwrl,
    #[serde(rename = "QL")]
    Ql,
    #[serde(rename = "QLCAT")]
    Qlcat,
    #[serde(rename = "MBRL")]
    Mbrl,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Fwrl, AgentKind::Ql, AgentKind::Qlcat, AgentKind::Mbrl];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Fwrl => "FWRL",
            AgentKind::Ql => "QL",
            AgentKind::Qlcat => "QLCAT",
            AgentKind::Mbrl => "MBRL",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown agent {s:?} (expected one of fwrl, ql, qlcat, mbrl)"))
    }
}

/// How ties between equally valued actions are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// First maximum in the order up, down, left, right.
    FixedOrder,
    /// Uniform among the maxima, drawn from the agent's RNG.
    SeededRandom,
}

impl FromStr for TieBreak {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" | "fixed_order" | "fixedorder" => Ok(TieBreak::FixedOrder),
            "random" | "seeded_random" | "seededrandom" => Ok(TieBreak::SeededRandom),
            _ => Err(format!("unknown tie_break {s:?} (expected fixed or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub q_init: f64,
    pub tie_break: TieBreak,
    pub relax_pivot: RelaxPivot,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            epsilon: 0.1,
            alpha: 0.1,
            gamma: 1.0,
            q_init: 0.0,
            tie_break: TieBreak::SeededRandom,
            relax_pivot: RelaxPivot::Next,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !self.q_init.is_finite() {
            return Err(format!("q_init must be finite, got {}", self.q_init));
        }
        Ok(())
    }
}

/// One environment transition in state-index form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub next_state: usize,
    pub goal: usize,
    pub reached_goal: bool,
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    /// Called before the first action of every episode.
    fn begin_episode(&mut self, goal: usize);

    fn set_tie_break(&mut self, tie: TieBreak);

    fn greedy_action(&mut self, state: usize, goal: usize, rng: &mut AgentRng) -> Action;

    fn observe(&mut self, transition: &Transition);

    /// Current action values at `state` towards `goal`, in
    /// [`Direction::ALL`] order. `-inf` where the agent has no estimate.
    fn action_values(&self, state: usize, goal: usize) -> [f64; 4];
}

/// Epsilon-greedy action selection.
pub fn act(agent: &mut dyn Agent, state: usize, goal: usize, epsilon: f64, rng: &mut AgentRng) -> Action {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        Direction::ALL[rng.gen_range(0..Direction::COUNT)]
    } else {
        agent.greedy_action(state, goal, rng)
    }
}

/// Arg-max over four action values with the given tie rule. When every
/// value is `-inf` all four actions tie.
pub fn select_greedy(values: &[f64; 4], tie: TieBreak, rng: &mut AgentRng) -> Action {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ties = [Direction::Up; 4];
    let mut n = 0;
    for (d, &v) in Direction::ALL.iter().zip(values) {
        if v == best {
            ties[n] = *d;
            n += 1;
        }
    }
    if n <= 1 || tie == TieBreak::FixedOrder {
        return ties[0];
    }
    ties[rng.gen_range(0..n)]
}

pub const SNAPSHOT_HEADER: &str = "state_x,state_y,action,goal_x,goal_y,value";

pub(crate) fn format_value(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Dumps every `(state, action, goal)` value of an agent as CSV with the
/// [`SNAPSHOT_HEADER`] columns; unknown values are written as `-inf`.
pub fn snapshot_csv(agent: &dyn Agent, map: &GridMap) -> String {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for s in 0..map.num_states() {
        let sc = map.coord(s);
        for g in 0..map.num_states() {
            let gc = map.coord(g);
            for (a, v) in Direction::ALL.iter().zip(agent.action_values(s, g)) {
                let _ = writeln!(out, "{},{},{},{},{},{}", sc.x, sc.y, a, gc.x, gc.y, format_value(v));
            }
        }
    }
    out
}

/// One parsed line of a snapshot CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub state: CellCoord,
    pub action: Direction,
    pub goal: CellCoord,
    pub value: f64,
}

pub fn parse_snapshot_csv(text: &str) -> Result<Vec<SnapshotRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_HEADER) {
        return Err(format!("expected header {SNAPSHOT_HEADER:?}"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line_no = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("line {line_no}: expected 6 fields"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| format!("line {line_no}: {s:?}: {e}"));
        let action = Direction::from_name(f[2]).ok_or_else(|| format!("line {line_no}: unknown action {:?}", f[2]))?;
        let value = if f[5] == "-inf" {
            f64::NEG_INFINITY
        } else {
            f[5].parse::<f64>().map_err(|e| format!("line {line_no}: {:?}: {e}", f[5]))?
        };
        rows.push(SnapshotRow {
            state: CellCoord::new(int(f[0])?, int(f[1])?),
            action,
            goal: CellCoord::new(int(f[3])?, int(f[4])?),
            value,
        });
    }
    Ok(rows)
}

/// Builds a fresh agent for a map with `num_states` cells.
pub fn build_agent(kind: AgentKind, cfg: &AgentConfig, num_states: usize, env: &EnvConfig) -> Box<dyn Agent> {
    match kind {
        AgentKind::Fwrl => Box::new(FwrlAgent::new(num_states, cfg, env.goal_reward)),
        AgentKind::Ql => Box::new(QlAgent::new(QlMode::Reset, num_states, cfg)),
        AgentKind::Qlcat => Box::new(QlAgent::new(QlMode::Concat, num_states, cfg)),
        AgentKind::Mbrl => {
            Box::new(MbrlAgent::new(num_states, cfg.tie_break, env.steps_per_episode, env.goal_reward, env.step_reward))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    /// Always-"down" agent for testing `act`.
    struct Fixed;

    impl Agent for Fixed {
        fn kind(&self) -> AgentKind {
            AgentKind::Fwrl
        }
        fn begin_episode(&mut self, _: usize) {}
        fn set_tie_break(&mut self, _: TieBreak) {}
        fn greedy_action(&mut self, _: usize, _: usize, _: &mut AgentRng) -> Action {
            Direction::Down
        }
        fn observe(&mut self, _: &Transition) {}
        fn action_values(&self, _: usize, _: usize) -> [f64; 4] {
            [0.0; 4]
        }
    }

    fn counts(epsilon: f64, draws: usize) -> [usize; 4] {
        let mut rng = AgentRng::seed_from_u64(11);
        let mut counts = [0; 4];
        for _ in 0..draws {
            counts[act(&mut Fixed, 0, 0, epsilon, &mut rng).index()] += 1;
        }
        counts
    }

    #[test]
    fn epsilon_zero_is_greedy() {
        assert_eq!(counts(0.0, 1000), [0, 1000, 0, 0]);
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let n = 10_000;
        let c = counts(1.0, n);
        // each count is Binomial(n, 1/4); sigma = sqrt(n * 1/4 * 3/4)
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for k in c {
            assert!((k as f64 - n as f64 / 4.0).abs() < 5.0 * sigma, "{c:?}");
        }
        let chi2: f64 = c.iter().map(|&k| (k as f64 - 2500.0).powi(2) / 2500.0).sum();
        // 3 dof, p = 0.001 critical value
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn epsilon_tenth_greedy_frequency() {
        let n = 100_000;
        let c = counts(0.1, n);
        let p = 0.1 / 4.0 + 0.9;
        let freq = c[Direction::Down.index()] as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 5.0 * sigma, "freq = {freq}");
    }

    #[test]
    fn greedy_selection() {
        let mut rng = AgentRng::seed_from_u64(0);
        let v = [-3.0, -2.0, -5.0, f64::NEG_INFINITY];
        assert_eq!(select_greedy(&v, TieBreak::FixedOrder, &mut rng), Direction::Down);
        assert_eq!(select_greedy(&v, TieBreak::SeededRandom, &mut rng), Direction::Down);
        let unknown = [f64::NEG_INFINITY; 4];
        assert_eq!(select_greedy(&unknown, TieBreak::FixedOrder, &mut rng), Direction::Up);
        let mut seen = [false; 4];
        for _ in 0..200 {
            seen[select_greedy(&unknown, TieBreak::SeededRandom, &mut rng).index()] = true;
        }
        assert_eq!(seen, [true; 4]);
        let tie = [-1.0, 0.0, 0.0, -1.0];
        assert_eq!(select_greedy(&tie, TieBreak::FixedOrder, &mut rng), Direction::Down);
    }

    #[test]
    fn parse_names() {
        assert_eq!("qlcat".parse::<AgentKind>(), Ok(AgentKind::Qlcat));
        assert_eq!("FWRL".parse::<AgentKind>(), Ok(AgentKind::Fwrl));
        assert!("dqn".parse::<AgentKind>().is_err());
        assert_eq!("fixed".parse::<TieBreak>(), Ok(TieBreak::FixedOrder));
    }
}
