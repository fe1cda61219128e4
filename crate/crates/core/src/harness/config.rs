//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once unless the schema says otherwise. See `docs/config.md`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::agents::{AgentConfig, AgentKind};
use crate::env::EnvConfig;
use crate::mapio::{bundled_map, GridMap, MapError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue { line: usize, key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("map {path}: {source}")]
    Map { path: String, source: MapError },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn parse<T: FromStr>(&self) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.value.parse::<T>().map_err(|e| self.invalid(e.to_string()))
    }

    pub fn invalid(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue { line: self.line, key: self.key.clone(), message: message.into() }
    }

    pub fn parse_bool(&self) -> Result<bool, ConfigError> {
        match self.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.invalid(format!("expected true or false, got {:?}", self.value))),
        }
    }

    pub fn parse_list<T: FromStr>(&self) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| self.invalid(format!("{s:?}: {e}"))))
            .collect()
    }
}

/// Splits text into entries, rejecting keys not in `known` and duplicates
/// of keys not in `repeatable`.
pub fn parse_entries(text: &str, known: &[&str], repeatable: &[&str]) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: raw.to_string() });
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, text: raw.to_string() });
        }
        if !known.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if !repeatable.contains(&key.as_str()) && entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate { line, key });
        }
        entries.push(Entry { line, key, value: value.trim().to_string() });
    }
    Ok(entries)
}

/// Resolves a bundled map name, or else a path relative to `base_dir`.
pub fn load_map(name_or_path: &str, base_dir: Option<&Path>) -> Result<GridMap, ConfigError> {
    if let Some(m) = bundled_map(name_or_path) {
        return Ok(m);
    }
    let path = match base_dir {
        Some(dir) if Path::new(name_or_path).is_relative() => dir.join(name_or_path),
        _ => PathBuf::from(name_or_path),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
    GridMap::parse_named(name, &text).map_err(|source| ConfigError::Map { path: path.display().to_string(), source })
}

/// Full parameterisation of a quantitative experiment.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agents: Vec<AgentKind>,
    pub agent: AgentConfig,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

const RUN_KEYS: &[&str] = &[
    "map",
    "agents",
    "agent",
    "episodes",
    "seeds",
    "steps_per_episode",
    "goal_reward",
    "step_reward",
    "wind_prob",
    "epsilon",
    "alpha",
    "gamma",
    "q_init",
    "tie_break",
    "relax_pivot",
    "output_dir",
];

impl RunConfig {
    pub const DEFAULT_EPISODES: usize = 100;
    pub const DEFAULT_SEEDS: usize = 10;

    /// Default protocol on a map: all four agents, 100 episodes, seeds 0..10.
    pub fn with_map(map: GridMap) -> RunConfig {
        RunConfig {
            env: EnvConfig::new(map),
            agents: AgentKind::ALL.to_vec(),
            agent: AgentConfig::default(),
            episodes: Self::DEFAULT_EPISODES,
            seeds: (0..Self::DEFAULT_SEEDS as u64).collect(),
            output_dir: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        RunConfig::parse(&text, path.parent())
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<RunConfig, ConfigError> {
        let entries = parse_entries(text, RUN_KEYS, &[])?;
        if entries.iter().any(|e| e.key == "agent") && entries.iter().any(|e| e.key == "agents") {
            return Err(ConfigError::Invalid("give either `agent` or `agents`, not both".into()));
        }
        let map = match entries.iter().find(|e| e.key == "map") {
            Some(e) => load_map(&e.value, base_dir)?,
            None => bundled_map("four_room").expect("bundled"),
        };
        let mut cfg = RunConfig::with_map(map);
        for e in &entries {
            match e.key.as_str() {
                "map" => {}
                "agents" | "agent" => {
                    cfg.agents = e.parse_list()?;
                    if cfg.agents.is_empty() {
                        return Err(e.invalid("no agents listed"));
                    }
                }
                "episodes" => cfg.episodes = e.parse()?,
                "seeds" => cfg.seeds = e.parse_list()?,
                "steps_per_episode" => cfg.env.steps_per_episode = e.parse()?,
                "goal_reward" => cfg.env.goal_reward = e.parse()?,
                "step_reward" => cfg.env.step_reward = e.parse()?,
                "wind_prob" => cfg.env.wind_prob = e.parse()?,
                "epsilon" => cfg.agent.epsilon = e.parse()?,
                "alpha" => cfg.agent.alpha = e.parse()?,
                "gamma" => cfg.agent.gamma = e.parse()?,
                "q_init" => cfg.agent.q_init = e.parse()?,
                "tie_break" => cfg.agent.tie_break = e.parse()?,
                "relax_pivot" => cfg.agent.relax_pivot = e.parse()?,
                "output_dir" => {
                    let p = PathBuf::from(&e.value);
                    cfg.output_dir = Some(match base_dir {
                        Some(dir) if p.is_relative() => dir.join(p),
                        _ => p,
                    });
                }
                _ => unreachable!("key list checked by parse_entries"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.agent.validate().map_err(ConfigError::Invalid)?;
        if self.episodes == 0 {
            return Err(ConfigError::Invalid("episodes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("seeds must be distinct".into()));
        }
        let mut agents = self.agents.clone();
        agents.sort_unstable();
        if agents.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("agents must be distinct".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::TieBreak;

    #[test]
    fn defaults_without_keys() {
        let cfg = RunConfig::parse("# nothing\n\n", None).unwrap();
        assert_eq!(cfg.env.map.name(), "four_room");
        assert_eq!(cfg.episodes, 100);
        assert_eq!(cfg.seeds.len(), 10);
        assert_eq!(cfg.env.steps_per_episode, 300);
        assert_eq!(cfg.agent.epsilon, 0.1);
        assert_eq!(cfg.agents, AgentKind::ALL.to_vec());
    }

    #[test]
    fn full_config() {
        let text = "map = windy_four_room\nagents = fwrl, qlcat\nepisodes = 5\nseeds = 3,4\n\
                    steps_per_episode = 50\nwind_prob = 0.5\nepsilon = 0.2\nalpha = 1\ntie_break = fixed\n";
        let cfg = RunConfig::parse(text, None).unwrap();
        assert_eq!(cfg.env.map.name(), "windy_four_room");
        assert_eq!(cfg.agents, vec![AgentKind::Fwrl, AgentKind::Qlcat]);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.env.wind_prob, 0.5);
        assert_eq!(cfg.agent.tie_break, TieBreak::FixedOrder);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = RunConfig::parse("episodes = 3\nbogus = 1\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }), "{err}");
        let err = RunConfig::parse("\nepisodes = three\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { line: 2, ref key, .. } if key == "episodes"), "{err}");
        let err = RunConfig::parse("episodes\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
        let err = RunConfig::parse("seeds = 1\nseeds = 2\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::Duplicate { line: 2, .. }));
        let err = RunConfig::parse("agents = fwrl, dqn\n", None).unwrap_err();
        assert!(err.to_string().contains("dqn"));
    }

    #[test]
    fn semantic_validation() {
        for bad in ["episodes = 0", "seeds = 1, 1", "step_reward = 2", "epsilon = 1.5", "agents = ql, ql"] {
            assert!(matches!(RunConfig::parse(bad, None), Err(ConfigError::Invalid(_))), "{bad}");
        }
        assert!(matches!(RunConfig::parse("seeds = ", None), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn map_from_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("tiny.map"), "#####\n#...#\n#####\n").unwrap();
        let cfg = RunConfig::parse("map = tiny.map\noutput_dir = out\n", Some(dir.path())).unwrap();
        assert_eq!(cfg.env.map.name(), "tiny");
        assert_eq!(cfg.env.map.num_states(), 3);
        assert_eq!(cfg.output_dir, Some(dir.path().join("out")));
        let err = RunConfig::parse("map = missing.map\n", Some(dir.path())).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }
}
