//! Floyd-Warshall reinforcement learning.
//!
//! `F(s, a, s')` holds the best known cumulative reward for taking `a` in
//! `s` and then travelling to `s'`. Entries start at `-inf` (no known
//! path). Every non-goal transition writes its edge directly and then runs
//! one max-plus relaxation pass through a single pivot state:
//!
//! ```text
//! F(k, a, l) <- max(F(k, a, l), F(k, a, pivot) + max_p F(pivot, p, l))
//! ```
//!
//! Transitions paying the goal reward are ignored entirely, which keeps the
//! table independent of where the goal happens to be.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{
    format_value, select_greedy, Agent, AgentConfig, AgentKind, AgentRng, TieBreak, Transition, SNAPSHOT_HEADER,
};
use crate::env::Action;
use crate::mapio::{Direction, GridMap};

const A: usize = Direction::COUNT;

/// Which state of a fresh transition `s -> s'` serves as relaxation pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxPivot {
    /// Pivot on `s'`: the new edge is extended by known paths out of `s'`.
    Next,
    /// Pivot on `s`: known paths into `s` are extended by the new edge.
    Current,
}

impl FromStr for RelaxPivot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "next" => Ok(RelaxPivot::Next),
            "current" => Ok(RelaxPivot::Current),
            _ => Err(format!("unknown relax_pivot {s:?} (expected next or current)")),
        }
    }
}

/// Dense `|S| x |A| x |S|` goal-conditioned value table.
#[derive(Debug, Clone, PartialEq)]
pub struct FwTable {
    n: usize,
    values: Vec<f64>,
    // scratch row for max_p F(pivot, p, .)
    pivot_best: Vec<f64>,
}

impl FwTable {
    pub fn new(num_states: usize) -> FwTable {
        FwTable {
            n: num_states,
            values: vec![f64::NEG_INFINITY; num_states * A * num_states],
            pivot_best: vec![f64::NEG_INFINITY; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, s: usize, a: Action, g: usize) -> usize {
        (s * A + a.index()) * self.n + g
    }

    pub fn get(&self, s: usize, a: Action, g: usize) -> f64 {
        self.values[self.idx(s, a, g)]
    }

    pub fn set(&mut self, s: usize, a: Action, g: usize, v: f64) {
        let i = self.idx(s, a, g);
        self.values[i] = v;
    }

    pub fn action_values(&self, s: usize, g: usize) -> [f64; 4] {
        Direction::ALL.map(|a| self.get(s, a, g))
    }

    /// `max_a F(s, a, g)`.
    pub fn best(&self, s: usize, g: usize) -> f64 {
        self.action_values(s, g).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Raw values in `(s, a, g)` row-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn finite_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }

    /// Applies one observed transition. Returns `false` (and leaves the
    /// table untouched) for goal-reward transitions.
    pub fn observe(&mut self, s: usize, a: Action, r: f64, s_next: usize, goal_reward: f64, pivot: RelaxPivot) -> bool {
        if r >= goal_reward {
            return false;
        }
        self.set(s, a, s_next, r);
        match pivot {
            RelaxPivot::Next => self.relax_through(s_next),
            RelaxPivot::Current => self.relax_through(s),
        }
        true
    }

    /// One relaxation pass through `pivot` over every `(k, a, l)`.
    pub fn relax_through(&mut self, pivot: usize) {
        let n = self.n;
        for l in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..A {
                best = best.max(self.values[(pivot * A + a) * n + l]);
            }
            self.pivot_best[l] = best;
        }
        let pivot_best = &self.pivot_best;
        for row in self.values.chunks_exact_mut(n) {
            let to_pivot = row[pivot];
            if to_pivot == f64::NEG_INFINITY {
                continue;
            }
            // to_pivot is finite, so to_pivot + -inf stays -inf and max keeps the entry
            for (entry, &via) in row.iter_mut().zip(pivot_best) {
                let candidate = to_pivot + via;
                if candidate > *entry {
                    *entry = candidate;
                }
            }
        }
    }

    /// Flat CSV export: `state_x,state_y,action,goal_x,goal_y,value`, with
    /// `-inf` for unknown entries.
    pub fn to_csv(&self, map: &GridMap) -> String {
        let mut out = String::from(SNAPSHOT_HEADER);
        out.push('\n');
        for s in 0..self.n {
            let sc = map.coord(s);
            for a in Direction::ALL {
                for g in 0..self.n {
                    let gc = map.coord(g);
                    let _ =
                        writeln!(out, "{},{},{},{},{},{}", sc.x, sc.y, a, gc.x, gc.y, format_value(self.get(s, a, g)));
                }
            }
        }
        out
    }
}

pub struct FwrlAgent {
    table: FwTable,
    goal_reward: f64,
    tie_break: TieBreak,
    pivot: RelaxPivot,
}

impl FwrlAgent {
    pub fn new(num_states: usize, cfg: &AgentConfig, goal_reward: f64) -> FwrlAgent {
        FwrlAgent { table: FwTable::new(num_states), goal_reward, tie_break: cfg.tie_break, pivot: cfg.relax_pivot }
    }

    pub fn table(&self) -> &FwTable {
        &self.table
    }
}

impl Agent for FwrlAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Fwrl
    }

    fn begin_episode(&mut self, _goal: usize) {}

    fn set_tie_break(&mut self, tie: TieBreak) {
        self.tie_break = tie;
    }

    fn greedy_action(&mut self, state: usize, goal: usize, rng: &mut AgentRng) -> Action {
        select_greedy(&self.table.action_values(state, goal), self.tie_break, rng)
    }

    fn observe(&mut self, t: &Transition) {
        self.table.observe(t.state, t.action, t.reward, t.next_state, self.goal_reward, self.pivot);
    }

    fn action_values(&self, state: usize, goal: usize) -> [f64; 4] {
        self.table.action_values(state, goal)
    }
}
