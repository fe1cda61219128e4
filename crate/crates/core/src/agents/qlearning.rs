//! Tabular Q-learning baselines.

use super::{select_greedy, Agent, AgentConfig, AgentKind, AgentRng, TieBreak, Transition};
use crate::env::Action;
use crate::mapio::Direction;

const A: usize = Direction::COUNT;

/// Dense Q table over integer keys. Every entry starts at `q_init`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    q_init: f64,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_keys: usize, q_init: f64) -> QTable {
        QTable { q_init, values: vec![q_init; num_keys * A] }
    }

    pub fn num_keys(&self) -> usize {
        self.values.len() / A
    }

    pub fn get(&self, key: usize, a: Action) -> f64 {
        self.values[key * A + a.index()]
    }

    pub fn set(&mut self, key: usize, a: Action, v: f64) {
        self.values[key * A + a.index()] = v;
    }

    pub fn action_values(&self, key: usize) -> [f64; 4] {
        let row = &self.values[key * A..key * A + A];
        [row[0], row[1], row[2], row[3]]
    }

    pub fn max(&self, key: usize) -> f64 {
        self.action_values(key).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q(k, a) += alpha * (r + gamma * max_a' Q(k', a') - Q(k, a))`;
    /// `next_key = None` marks a terminal transition (no bootstrap).
    pub fn update(&mut self, key: usize, a: Action, r: f64, next_key: Option<usize>, alpha: f64, gamma: f64) {
        let bootstrap = next_key.map_or(0.0, |k| self.max(k));
        let q = self.get(key, a);
        self.set(key, a, q + alpha * (r + gamma * bootstrap - q));
    }

    pub fn reset(&mut self) {
        self.values.fill(self.q_init);
    }

    pub fn is_uniform(&self) -> bool {
        self.values.iter().all(|&v| v == self.q_init)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlMode {
    /// Key is the state alone; the table is wiped at every episode start.
    Reset,
    /// Key is the `(state, goal)` pair; the table persists.
    Concat,
}

pub struct QlAgent {
    mode: QlMode,
    n: usize,
    table: QTable,
    alpha: f64,
    gamma: f64,
    tie_break: TieBreak,
    resets: usize,
}

impl QlAgent {
    pub fn new(mode: QlMode, num_states: usize, cfg: &AgentConfig) -> QlAgent {
        let keys = match mode {
            QlMode::Reset => num_states,
            QlMode::Concat => num_states * num_states,
        };
        QlAgent {
            mode,
            n: num_states,
            table: QTable::new(keys, cfg.q_init),
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            tie_break: cfg.tie_break,
            resets: 0,
        }
    }

    fn key(&self, s: usize, g: usize) -> usize {
        match self.mode {
            QlMode::Reset => s,
            QlMode::Concat => s * self.n + g,
        }
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    /// Number of times the table has been wiped.
    pub fn resets(&self) -> usize {
        self.resets
    }
}

impl Agent for QlAgent {
    fn kind(&self) -> AgentKind {
        match self.mode {
            QlMode::Reset => AgentKind::Ql,
            QlMode::Concat => AgentKind::Qlcat,
        }
    }

    fn begin_episode(&mut self, _goal: usize) {
        if self.mode == QlMode::Reset {
            self.table.reset();
            self.resets += 1;
        }
    }

    fn set_tie_break(&mut self, tie: TieBreak) {
        self.tie_break = tie;
    }

    fn greedy_action(&mut self, state: usize, goal: usize, rng: &mut AgentRng) -> Action {
        select_greedy(&self.table.action_values(self.key(state, goal)), self.tie_break, rng)
    }

    fn observe(&mut self, t: &Transition) {
        let key = self.key(t.state, t.goal);
        // entering the goal ends the segment: the respawn is not a successor
        let next = (!t.reached_goal).then(|| self.key(t.next_state, t.goal));
        self.table.update(key, t.action, t.reward, next, self.alpha, self.gamma);
    }

    fn action_values(&self, state: usize, goal: usize) -> [f64; 4] {
        self.table.action_values(self.key(state, goal))
    }
}
