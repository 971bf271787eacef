//! Flat key-value run configuration.
//!
//! The file format is one `key = value` per line; `#` starts a comment and
//! blank lines are ignored. Every key is optional: an empty file is the
//! default scenario (the four-node topology with powers 1000, SINR threshold
//! 3, arrival rate 0.8, 10-slot windows, 1000 training and 500 evaluation
//! slots). Unknown keys, malformed values, and duplicate keys are reported
//! with their line number; invariant violations name the offending field.
//!
//! Positions are written as `x,y`; `modes` is a comma-separated subset of
//! `baseline`, `poison`, `jam`.

use coglink::simulation::{CollectPolicy, SplitMode};
use coglink::{AttackMode, Normalization, Position, Scenario};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Parse {
            line,
            message: message.into(),
        }
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// A full run request: the scenario plus the sweep parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Modes evaluated per replication, all sharing the trained models.
    pub modes: Vec<AttackMode>,
    pub replications: usize,
    /// Replication `i` runs with seed `base_seed + i`.
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            modes: vec![AttackMode::None, AttackMode::Poison],
            replications: 1,
            base_seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario
            .validate()
            .map_err(|e| ConfigError::invalid(e.field, e.message))?;
        if self.modes.is_empty() {
            return Err(ConfigError::invalid(
                "modes",
                "at least one run mode is required",
            ));
        }
        if self.replications < 1 {
            return Err(ConfigError::invalid("replications", "must be at least 1"));
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::parse(line, format!("key {key}: {e}")))
}

fn parse_position(line: usize, key: &str, value: &str) -> Result<Position, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(ConfigError::parse(
            line,
            format!("key {key}: expected \"x,y\", got {value:?}"),
        ));
    }
    Ok(Position::new(
        parse_value::<f64>(line, key, parts[0])?,
        parse_value::<f64>(line, key, parts[1])?,
    ))
}

fn parse_modes(line: usize, value: &str) -> Result<Vec<AttackMode>, ConfigError> {
    value
        .split(',')
        .map(|m| {
            m.trim()
                .parse::<AttackMode>()
                .map_err(|e| ConfigError::parse(line, format!("key modes: {e}")))
        })
        .collect()
}

/// Parse config text onto the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::parse(
                line,
                format!("expected \"key = value\", got {content:?}"),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::parse(line, format!("duplicate key {key:?}")));
        }
        seen.push(key.to_string());

        let sc = &mut cfg.scenario;
        match key {
            "pos_b" => sc.pos_b = parse_position(line, key, value)?,
            "pos_t" => sc.pos_t = parse_position(line, key, value)?,
            "pos_r" => sc.pos_r = parse_position(line, key, value)?,
            "pos_a" => sc.pos_a = parse_position(line, key, value)?,
            "power_b" => sc.power_b = parse_value(line, key, value)?,
            "power_t" => sc.power_t = parse_value(line, key, value)?,
            "power_a" => sc.power_a = parse_value(line, key, value)?,
            "sinr_threshold" => sc.sinr_threshold = parse_value(line, key, value)?,
            "arrival_rate" => sc.arrival_rate = parse_value(line, key, value)?,
            "gain_rel_std" => sc.gain_rel_std = parse_value(line, key, value)?,
            "noise_rel_std" => sc.noise_rel_std = parse_value(line, key, value)?,
            "noise_mean" => sc.noise_mean = parse_value(line, key, value)?,
            "pathloss_exponent" => sc.pathloss_exponent = parse_value(line, key, value)?,
            "window_len" => sc.window_len = parse_value(line, key, value)?,
            "n_train_slots" => sc.n_train_slots = parse_value(line, key, value)?,
            "n_eval_slots" => sc.n_eval_slots = parse_value(line, key, value)?,
            "sensing_fraction" => sc.sensing_fraction = parse_value(line, key, value)?,
            "data_fraction" => sc.data_fraction = parse_value(line, key, value)?,
            "ack_miss_prob" => sc.ack_miss_prob = parse_value(line, key, value)?,
            "defense_flip_prob" => sc.defense_flip_prob = parse_value(line, key, value)?,
            "collect_policy" => sc.collect_policy = parse_value::<CollectPolicy>(line, key, value)?,
            "split" => sc.split = parse_value::<SplitMode>(line, key, value)?,
            "redraw_gains" => sc.redraw_gains = parse_value(line, key, value)?,
            "hidden_layers" => sc.hidden_layers = parse_value(line, key, value)?,
            "hidden_width" => sc.hidden_width = parse_value(line, key, value)?,
            "batch_size" => sc.batch_size = parse_value(line, key, value)?,
            "train_steps" => sc.train_steps = parse_value(line, key, value)?,
            "learning_rate" => sc.learning_rate = parse_value(line, key, value)?,
            "momentum" => sc.momentum = parse_value(line, key, value)?,
            "feature_norm" => sc.feature_norm = parse_value::<Normalization>(line, key, value)?,
            "modes" => cfg.modes = parse_modes(line, value)?,
            "replications" => cfg.replications = parse_value(line, key, value)?,
            "base_seed" => cfg.base_seed = parse_value(line, key, value)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            other => {
                return Err(ConfigError::parse(line, format!("unknown key {other:?}")));
            }
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Load and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Render a config in the canonical key order. `load` of the result is the
/// identity.
pub fn render_config(cfg: &RunConfig) -> String {
    let sc = &cfg.scenario;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("pos_b", format!("{},{}", sc.pos_b.x, sc.pos_b.y));
    kv("pos_t", format!("{},{}", sc.pos_t.x, sc.pos_t.y));
    kv("pos_r", format!("{},{}", sc.pos_r.x, sc.pos_r.y));
    kv("pos_a", format!("{},{}", sc.pos_a.x, sc.pos_a.y));
    kv("power_b", sc.power_b.to_string());
    kv("power_t", sc.power_t.to_string());
    kv("power_a", sc.power_a.to_string());
    kv("sinr_threshold", sc.sinr_threshold.to_string());
    kv("arrival_rate", sc.arrival_rate.to_string());
    kv("gain_rel_std", sc.gain_rel_std.to_string());
    kv("noise_rel_std", sc.noise_rel_std.to_string());
    kv("noise_mean", sc.noise_mean.to_string());
    kv("pathloss_exponent", sc.pathloss_exponent.to_string());
    kv("window_len", sc.window_len.to_string());
    kv("n_train_slots", sc.n_train_slots.to_string());
    kv("n_eval_slots", sc.n_eval_slots.to_string());
    kv("sensing_fraction", sc.sensing_fraction.to_string());
    kv("data_fraction", sc.data_fraction.to_string());
    kv("ack_miss_prob", sc.ack_miss_prob.to_string());
    kv("defense_flip_prob", sc.defense_flip_prob.to_string());
    kv("collect_policy", sc.collect_policy.to_string());
    kv("split", sc.split.to_string());
    kv("redraw_gains", sc.redraw_gains.to_string());
    kv("hidden_layers", sc.hidden_layers.to_string());
    kv("hidden_width", sc.hidden_width.to_string());
    kv("batch_size", sc.batch_size.to_string());
    kv("train_steps", sc.train_steps.to_string());
    kv("learning_rate", sc.learning_rate.to_string());
    kv("momentum", sc.momentum.to_string());
    kv("feature_norm", sc.feature_norm.to_string());
    let modes = cfg
        .modes
        .iter()
        .map(AttackMode::to_string)
        .collect::<Vec<_>>()
        .join(",");
    kv("modes", modes);
    kv("replications", cfg.replications.to_string());
    kv("base_seed", cfg.base_seed.to_string());
    kv("output_dir", cfg.output_dir.display().to_string());
    out
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, render_config(cfg))?;
    Ok(())
}
