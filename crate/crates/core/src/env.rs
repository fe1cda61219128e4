//! Episodic multi-goal grid world.
//!
//! Each episode draws a goal and a start cell uniformly at random. When the
//! agent enters the goal it collects the goal reward and is respawned at a
//! random cell while the goal stays fixed, until `steps_per_episode` steps
//! have elapsed. Wind cells override the chosen action with probability
//! `wind_prob`.
//!
//! Randomness comes from ChaCha8 seeded per episode, so trajectories are
//! reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mapio::{CellCoord, CellKind, Direction, GridMap};

pub type Action = Direction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("steps_per_episode must be positive")]
    ZeroHorizon,
    #[error("goal_reward must be positive, got {0}")]
    NonPositiveGoalReward(f64),
    #[error("step_reward must be non-positive, got {0}")]
    PositiveStepReward(f64),
    #[error("goal_reward {goal} must exceed |step_reward| = {step}")]
    GoalRewardTooSmall { goal: f64, step: f64 },
    #[error("wind_prob must lie in [0, 1], got {0}")]
    BadWindProb(f64),
    #[error("cell {0} is a wall")]
    WallCell(CellCoord),
    #[error("start and goal are the same cell {0}")]
    StartIsGoal(CellCoord),
    #[error("step called after the episode finished")]
    EpisodeOver,
}

/// What happens when the agent enters the goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalMode {
    /// Respawn at a random cell and keep going until the horizon.
    Respawn,
    /// End the episode immediately.
    Terminate,
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub map: GridMap,
    pub steps_per_episode: usize,
    pub goal_reward: f64,
    pub step_reward: f64,
    pub wind_prob: f64,
    pub goal_mode: GoalMode,
}

impl EnvConfig {
    pub const DEFAULT_STEPS: usize = 300;
    pub const DEFAULT_GOAL_REWARD: f64 = 10.0;
    pub const DEFAULT_STEP_REWARD: f64 = -1.0;
    pub const DEFAULT_WIND_PROB: f64 = 0.25;

    pub fn new(map: GridMap) -> EnvConfig {
        EnvConfig {
            map,
            steps_per_episode: Self::DEFAULT_STEPS,
            goal_reward: Self::DEFAULT_GOAL_REWARD,
            step_reward: Self::DEFAULT_STEP_REWARD,
            wind_prob: Self::DEFAULT_WIND_PROB,
            goal_mode: GoalMode::Respawn,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.steps_per_episode == 0 {
            return Err(EnvError::ZeroHorizon);
        }
        if self.goal_reward.is_nan() || self.goal_reward <= 0.0 {
            return Err(EnvError::NonPositiveGoalReward(self.goal_reward));
        }
        if self.step_reward.is_nan() || self.step_reward > 0.0 {
            return Err(EnvError::PositiveStepReward(self.step_reward));
        }
        if self.goal_reward <= self.step_reward.abs() {
            return Err(EnvError::GoalRewardTooSmall { goal: self.goal_reward, step: self.step_reward.abs() });
        }
        if !(0.0..=1.0).contains(&self.wind_prob) {
            return Err(EnvError::BadWindProb(self.wind_prob));
        }
        Ok(())
    }
}

/// Mutable part of an episode. Cloning it forks the episode, RNG included.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub agent: CellCoord,
    pub goal: CellCoord,
    pub step_index: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl EnvState {
    pub fn is_done(&self) -> bool {
        self.done
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Cell the move landed on (the goal cell on a goal hit).
    pub next_state: CellCoord,
    pub reward: f64,
    pub reached_goal: bool,
    pub respawned: bool,
    pub episode_done: bool,
    /// Where the agent stands after the step: `next_state`, or the respawn
    /// cell after a goal hit.
    pub agent: CellCoord,
}

/// Mixes a base seed with a stream tag and an index (splitmix64 finaliser).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z =
        base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn intended_move(pos: CellCoord, action: Action, map: &GridMap) -> CellCoord {
    map.intended_move(pos, action)
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Env, EnvError> {
        config.validate()?;
        Ok(Env { config })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn map(&self) -> &GridMap {
        &self.config.map
    }

    /// Fresh episode with uniformly drawn goal and start (start != goal).
    pub fn begin_episode(&self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = self.map().states();
        let goal = states[rng.gen_range(0..states.len())];
        let agent = sample_excluding(&mut rng, states, goal);
        EnvState { agent, goal, step_index: 0, done: false, rng }
    }

    /// Fresh episode with a scripted start and goal.
    pub fn begin_episode_at(&self, start: CellCoord, goal: CellCoord, seed: u64) -> Result<EnvState, EnvError> {
        for c in [start, goal] {
            if self.map().is_wall(c) {
                return Err(EnvError::WallCell(c));
            }
        }
        if start == goal {
            return Err(EnvError::StartIsGoal(start));
        }
        Ok(EnvState { agent: start, goal, step_index: 0, done: false, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn step(&self, state: &mut EnvState, action: Action) -> Result<StepOutcome, EnvError> {
        if state.done {
            return Err(EnvError::EpisodeOver);
        }
        let cfg = &self.config;
        let pos = state.agent;
        let direction = match cfg.map.cell(pos) {
            CellKind::Wind(wind) if wind_blows(&mut state.rng, cfg.wind_prob) => wind,
            _ => action,
        };
        let next = cfg.map.intended_move(pos, direction);
        state.step_index += 1;
        let horizon_done = state.step_index >= cfg.steps_per_episode;

        if next == state.goal {
            let (agent, respawned, done) = match cfg.goal_mode {
                GoalMode::Respawn => {
                    (sample_excluding(&mut state.rng, cfg.map.states(), state.goal), true, horizon_done)
                }
                GoalMode::Terminate => (next, false, true),
            };
            state.agent = agent;
            state.done = done;
            Ok(StepOutcome {
                next_state: next,
                reward: cfg.goal_reward,
                reached_goal: true,
                respawned,
                episode_done: done,
                agent,
            })
        } else {
            state.agent = next;
            state.done = horizon_done;
            Ok(StepOutcome {
                next_state: next,
                reward: cfg.step_reward,
                reached_goal: false,
                respawned: false,
                episode_done: horizon_done,
                agent: next,
            })
        }
    }
}

fn wind_blows(rng: &mut ChaCha8Rng, p: f64) -> bool {
    // no draw at the extremes, so a zero-probability windy map consumes the
    // same random stream as its wind-free twin
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen::<f64>() < p
    }
}

fn sample_excluding(rng: &mut ChaCha8Rng, states: &[CellCoord], excluded: CellCoord) -> CellCoord {
    let skip = states.iter().position(|&c| c == excluded);
    let n = states.len() - usize::from(skip.is_some());
    let mut i = rng.gen_range(0..n);
    if let Some(skip) = skip {
        if i >= skip {
            i += 1;
        }
    }
    states[i]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapio::bundled_map;

    fn env_on(text: &str) -> Env {
        Env::new(EnvConfig::new(GridMap::parse(text).unwrap())).unwrap()
    }

    #[test]
    fn config_validation() {
        let map = bundled_map("four_room").unwrap();
        let mut cfg = EnvConfig::new(map);
        assert!(cfg.validate().is_ok());
        cfg.step_reward = 0.5;
        assert_eq!(cfg.validate(), Err(EnvError::PositiveStepReward(0.5)));
        cfg.step_reward = -20.0;
        assert!(matches!(cfg.validate(), Err(EnvError::GoalRewardTooSmall { .. })));
        cfg.step_reward = -1.0;
        cfg.wind_prob = 1.5;
        assert_eq!(cfg.validate(), Err(EnvError::BadWindProb(1.5)));
        cfg.wind_prob = 0.25;
        cfg.steps_per_episode = 0;
        assert_eq!(cfg.validate(), Err(EnvError::ZeroHorizon));
    }

    #[test]
    fn begin_episode_is_deterministic() {
        let env = Env::new(EnvConfig::new(bundled_map("four_room").unwrap())).unwrap();
        assert_eq!(env.begin_episode(42), env.begin_episode(42));
        let s = env.begin_episode(42);
        assert_ne!(s.agent, s.goal);
        assert_eq!(s.step_index, 0);
    }

    #[test]
    fn two_cell_map_forces_placement() {
        let env = env_on("####\n#..#\n####");
        for seed in 0..50 {
            let s = env.begin_episode(seed);
            assert_ne!(s.agent, s.goal);
            assert!(!env.map().is_wall(s.agent) && !env.map().is_wall(s.goal));
        }
    }

    #[test]
    fn plain_step_and_goal_hit() {
        let env = env_on("#####\n#...#\n#...#\n#####");
        let mut s = env.begin_episode_at(CellCoord::new(1, 2), CellCoord::new(3, 1), 0).unwrap();
        let out = env.step(&mut s, Direction::Up).unwrap();
        assert_eq!(out.next_state, CellCoord::new(1, 1));
        assert_eq!(out.reward, -1.0);
        assert!(!out.reached_goal && !out.respawned);

        let mut s = env.begin_episode_at(CellCoord::new(2, 1), CellCoord::new(3, 1), 0).unwrap();
        let out = env.step(&mut s, Direction::Right).unwrap();
        assert_eq!(out.next_state, CellCoord::new(3, 1));
        assert_eq!(out.reward, 10.0);
        assert!(out.reached_goal && out.respawned);
        assert_ne!(s.agent, s.goal);
        assert_eq!(s.goal, CellCoord::new(3, 1));
    }

    #[test]
    fn episode_runs_exactly_horizon_steps() {
        let mut cfg = EnvConfig::new(GridMap::parse("####\n#..#\n####").unwrap());
        cfg.steps_per_episode = 7;
        let env = Env::new(cfg).unwrap();
        let mut s = env.begin_episode(3);
        let mut goals = 0;
        for i in 0..7 {
            // on a two-cell map moving towards the other cell always scores
            let a = if s.agent.x == 1 { Direction::Right } else { Direction::Left };
            let out = env.step(&mut s, a).unwrap();
            goals += usize::from(out.reached_goal);
            assert_eq!(out.episode_done, i == 6);
        }
        assert_eq!(goals, 7);
        assert_eq!(env.step(&mut s, Direction::Up), Err(EnvError::EpisodeOver));
    }

    #[test]
    fn terminate_mode_ends_on_goal() {
        let mut cfg = EnvConfig::new(GridMap::parse("#####\n#...#\n#####").unwrap());
        cfg.goal_mode = GoalMode::Terminate;
        let env = Env::new(cfg).unwrap();
        let mut s = env.begin_episode_at(CellCoord::new(2, 1), CellCoord::new(3, 1), 0).unwrap();
        let out = env.step(&mut s, Direction::Right).unwrap();
        assert!(out.reached_goal && out.episode_done && !out.respawned);
        assert!(s.is_done());
    }

    #[test]
    fn scripted_start_validation() {
        let env = env_on("#####\n#...#\n#####");
        assert_eq!(
            env.begin_episode_at(CellCoord::new(0, 0), CellCoord::new(1, 1), 0),
            Err(EnvError::WallCell(CellCoord::new(0, 0)))
        );
        assert_eq!(
            env.begin_episode_at(CellCoord::new(1, 1), CellCoord::new(1, 1), 0),
            Err(EnvError::StartIsGoal(CellCoord::new(1, 1)))
        );
    }

    #[test]
    fn derive_seed_spreads() {
        let a = derive_seed(1, 2, 3);
        assert_eq!(a, derive_seed(1, 2, 3));
        assert_ne!(a, derive_seed(1, 2, 4));
        assert_ne!(a, derive_seed(1, 3, 3));
        assert_ne!(a, derive_seed(2, 2, 3));
    }
}
