//! Tabular model-based baseline: frequentist dynamics estimate plus
//! finite-horizon value iteration towards the current goal.

use super::{select_greedy, Agent, AgentKind, AgentRng, TieBreak, Transition};
use crate::env::Action;
use crate::mapio::Direction;

const A: usize = Direction::COUNT;

/// Transition counts and summed rewards per `(s, a)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelTables {
    n: usize,
    counts: Vec<u32>,
    reward_sum: Vec<f64>,
    visits: Vec<u32>,
    // observed successors per (s, a), in first-seen order
    successors: Vec<Vec<usize>>,
}

impl ModelTables {
    pub fn new(num_states: usize) -> ModelTables {
        ModelTables {
            n: num_states,
            counts: vec![0; num_states * A * num_states],
            reward_sum: vec![0.0; num_states * A],
            visits: vec![0; num_states * A],
            successors: vec![Vec::new(); num_states * A],
        }
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    /// Records one transition. Returns `true` if `s_next` had never been
    /// seen as a successor of `(s, a)` before.
    pub fn observe(&mut self, s: usize, a: Action, r: f64, s_next: usize) -> bool {
        let sa = s * A + a.index();
        let c = &mut self.counts[sa * self.n + s_next];
        *c += 1;
        self.visits[sa] += 1;
        self.reward_sum[sa] += r;
        let new = *c == 1;
        if new {
            self.successors[sa].push(s_next);
        }
        new
    }

    pub fn visits(&self, s: usize, a: Action) -> u32 {
        self.visits[s * A + a.index()]
    }

    pub fn count(&self, s: usize, a: Action, s_next: usize) -> u32 {
        self.counts[(s * A + a.index()) * self.n + s_next]
    }

    pub fn reward_sum(&self, s: usize, a: Action) -> f64 {
        self.reward_sum[s * A + a.index()]
    }

    /// Estimated `P(s_next | s, a)`; `None` when `(s, a)` is unvisited.
    pub fn probability(&self, s: usize, a: Action, s_next: usize) -> Option<f64> {
        let v = self.visits(s, a);
        (v > 0).then(|| self.count(s, a, s_next) as f64 / v as f64)
    }

    pub fn mean_reward(&self, s: usize, a: Action) -> Option<f64> {
        let v = self.visits(s, a);
        (v > 0).then(|| self.reward_sum(s, a) / v as f64)
    }

    pub fn successors(&self, s: usize, a: Action) -> &[usize] {
        &self.successors[s * A + a.index()]
    }
}

/// Action values of a planned greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    q: Vec<[f64; 4]>,
}

impl Plan {
    pub fn action_values(&self, s: usize) -> [f64; 4] {
        self.q[s]
    }

    pub fn action(&self, s: usize, tie: TieBreak, rng: &mut AgentRng) -> Action {
        select_greedy(&self.q[s], tie, rng)
    }
}

/// Undiscounted value iteration over `horizon` sweeps on the estimated
/// MDP. Entering `goal` pays `goal_reward` and absorbs; unvisited `(s, a)`
/// pairs are self-loops paying `step_reward`.
pub fn plan(model: &ModelTables, goal: usize, horizon: usize, goal_reward: f64, step_reward: f64) -> Plan {
    let n = model.n;
    let mut v = vec![0.0; n];
    let mut next_v = vec![0.0; n];
    let q_of = |v: &[f64], s: usize, a: Action| -> f64 {
        let visits = model.visits(s, a);
        if visits == 0 {
            return step_reward + v[s];
        }
        let r = model.reward_sum(s, a) / visits as f64;
        let mut q = 0.0;
        for &t in model.successors(s, a) {
            let p = model.count(s, a, t) as f64 / visits as f64;
            q += p * if t == goal { goal_reward } else { r + v[t] };
        }
        q
    };
    for _ in 0..horizon {
        for (s, nv) in next_v.iter_mut().enumerate() {
            *nv = if s == goal {
                0.0
            } else {
                Direction::ALL.iter().map(|&a| q_of(&v, s, a)).fold(f64::NEG_INFINITY, f64::max)
            };
        }
        if next_v == v {
            break;
        }
        std::mem::swap(&mut v, &mut next_v);
    }
    let q = (0..n).map(|s| Direction::ALL.map(|a| q_of(&v, s, a))).collect();
    Plan { q }
}

/// Model-based agent. Replans lazily whenever the goal changes or a new
/// successor is discovered. Goal-reward transitions are not recorded, so
/// the reward model stays goal independent.
pub struct MbrlAgent {
    model: ModelTables,
    plan: Option<Plan>,
    goal: usize,
    tie_break: TieBreak,
    horizon: usize,
    goal_reward: f64,
    step_reward: f64,
    replans: usize,
}

impl MbrlAgent {
    pub fn new(
        num_states: usize,
        tie_break: TieBreak,
        horizon: usize,
        goal_reward: f64,
        step_reward: f64,
    ) -> MbrlAgent {
        MbrlAgent {
            model: ModelTables::new(num_states),
            plan: None,
            goal: 0,
            tie_break,
            horizon,
            goal_reward,
            step_reward,
            replans: 0,
        }
    }

    pub fn model(&self) -> &ModelTables {
        &self.model
    }

    pub fn replans(&self) -> usize {
        self.replans
    }

    fn current_plan(&mut self) -> &Plan {
        if self.plan.is_none() {
            self.replans += 1;
            self.plan = Some(plan(&self.model, self.goal, self.horizon, self.goal_reward, self.step_reward));
        }
        self.plan.as_ref().unwrap()
    }
}

impl Agent for MbrlAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Mbrl
    }

    fn begin_episode(&mut self, goal: usize) {
        if goal != self.goal || self.plan.is_none() {
            self.goal = goal;
            self.plan = None;
        }
    }

    fn set_tie_break(&mut self, tie: TieBreak) {
        self.tie_break = tie;
    }

    fn greedy_action(&mut self, state: usize, goal: usize, rng: &mut AgentRng) -> Action {
        if goal != self.goal {
            self.goal = goal;
            self.plan = None;
        }
        let tie = self.tie_break;
        self.current_plan().action(state, tie, rng)
    }

    fn observe(&mut self, t: &Transition) {
        if t.reached_goal {
            return;
        }
        if self.model.observe(t.state, t.action, t.reward, t.next_state) {
            self.plan = None;
        }
    }

    fn action_values(&self, state: usize, goal: usize) -> [f64; 4] {
        match &self.plan {
            Some(p) if goal == self.goal => p.action_values(state),
            _ => [f64::NEG_INFINITY; 4],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapio::{bundled_map, GridMap};
    use crate::oracle::bfs_distances;
    use rand::SeedableRng;

    #[test]
    fn frequentist_estimates() {
        let mut m = ModelTables::new(3);
        assert!(m.observe(0, Direction::Right, -1.0, 1));
        assert_eq!(m.probability(0, Direction::Right, 1), Some(1.0));
        assert!(m.observe(0, Direction::Right, -1.0, 2));
        assert!(!m.observe(0, Direction::Right, -1.0, 2));
        assert!(!m.observe(0, Direction::Right, -1.0, 1));
        assert_eq!(m.probability(0, Direction::Right, 1), Some(0.5));
        assert_eq!(m.probability(0, Direction::Right, 2), Some(0.5));
        assert_eq!(m.visits(0, Direction::Right), 4);
        assert_eq!(m.probability(0, Direction::Left, 1), None);
        assert_eq!(m.mean_reward(0, Direction::Right), Some(-1.0));
    }

    #[test]
    fn empty_model_defaults_to_first_action() {
        let m = ModelTables::new(5);
        let p = plan(&m, 3, 50, 10.0, -1.0);
        let mut rng = AgentRng::seed_from_u64(0);
        for s in 0..5 {
            assert_eq!(p.action(s, TieBreak::FixedOrder, &mut rng), Direction::Up);
        }
    }

    fn observe_all(map: &GridMap, m: &mut ModelTables, states: impl Iterator<Item = usize>) {
        for s in states {
            for a in Direction::ALL {
                m.observe(s, a, -1.0, map.next_state(s, a));
            }
        }
    }

    #[test]
    fn full_model_plans_shortest_paths() {
        let map = bundled_map("four_room").unwrap();
        let mut m = ModelTables::new(map.num_states());
        observe_all(&map, &mut m, 0..map.num_states());
        let mut rng = AgentRng::seed_from_u64(0);
        for goal in [0, 17, 40, 67] {
            let p = plan(&m, goal, 300, 10.0, -1.0);
            let d = bfs_distances(&map, goal);
            for (start, want) in d.iter().enumerate() {
                let mut s = start;
                let mut steps = 0;
                while s != goal && steps < 100 {
                    s = map.next_state(s, p.action(s, TieBreak::FixedOrder, &mut rng));
                    steps += 1;
                }
                assert_eq!(Some(steps), *want, "start {start} goal {goal}");
            }
        }
    }

    #[test]
    fn corridor_only_model() {
        // corridor along the top row of an open room; only that row observed
        let map = GridMap::parse("#######\n#.....#\n#.....#\n#######").unwrap();
        let mut m = ModelTables::new(map.num_states());
        observe_all(&map, &mut m, 0..5);
        let p = plan(&m, 4, 20, 10.0, -1.0);
        let mut rng = AgentRng::seed_from_u64(0);
        for s in 0..4 {
            assert_eq!(p.action(s, TieBreak::FixedOrder, &mut rng), Direction::Right);
        }
        // by hand: v(3) = 10 and v(s) = v(s + 1) - 1 along the corridor
        assert_eq!(p.action_values(0)[Direction::Right.index()], 7.0);
    }

    #[test]
    fn agent_skips_goal_transitions_and_replans() {
        let mut agent = MbrlAgent::new(3, TieBreak::FixedOrder, 10, 10.0, -1.0);
        let mut rng = AgentRng::seed_from_u64(0);
        agent.begin_episode(2);
        agent.greedy_action(0, 2, &mut rng);
        assert_eq!(agent.replans(), 1);
        agent.observe(&Transition {
            state: 1,
            action: Direction::Right,
            reward: 10.0,
            next_state: 2,
            goal: 2,
            reached_goal: true,
        });
        assert_eq!(agent.model().visits(1, Direction::Right), 0);
        agent.observe(&Transition {
            state: 0,
            action: Direction::Right,
            reward: -1.0,
            next_state: 1,
            goal: 2,
            reached_goal: false,
        });
        agent.greedy_action(0, 2, &mut rng);
        assert_eq!(agent.replans(), 2);
        // repeated transition: no replan
        agent.observe(&Transition {
            state: 0,
            action: Direction::Right,
            reward: -1.0,
            next_state: 1,
            goal: 2,
            reached_goal: false,
        });
        agent.greedy_action(0, 2, &mut rng);
        assert_eq!(agent.replans(), 2);
    }
}
