//! Goal-conditioned tabular reinforcement learning on grid worlds.
//!
//! * [`mapio`]: ASCII grid maps and the bundled layouts.
//! * [`env`]: seeded multi-goal grid environment with optional wind.
//! * [`agents`]: Floyd-Warshall RL plus Q-learning and model-based baselines.
//! * [`oracle`]: exact shortest-path distances (BFS, Dijkstra, Floyd-Warshall).
//! * [`metrics`]: per-episode and per-run statistics.
//! * [`harness`]: experiment runner, scripted scenario, SVG plots.

pub mod agents;
pub mod env;
pub mod harness;
pub mod mapio;
pub mod metrics;
pub mod oracle;
