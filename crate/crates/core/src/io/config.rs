//! `key = value` run configuration with `#` comments.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::learner::TrainConfig;
use crate::mls::{EvolutionConfig, DEFAULT_CLASSIC_RHO};

/// Everything a CLI run can be configured with.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub evolution: EvolutionConfig,
    /// Margin threshold used instead of `evolution.rho` in classic mode.
    pub rho_classic: f64,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            evolution: EvolutionConfig::default(),
            rho_classic: DEFAULT_CLASSIC_RHO,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    /// Evolution settings for classic (image likelihood) mode.
    pub fn classic_evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            rho: self.rho_classic,
            ..self.evolution.clone()
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_str(&text, path)
}

/// Parses configuration text; errors name the path `<string>`.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    parse_str(text, Path::new("<string>"))
}

fn parse_str(text: &str, path: &Path) -> Result<RunConfig> {
    let err = |line: usize, reason: String| Error::Config {
        path: PathBuf::from(path),
        line,
        reason,
    };
    let mut cfg = RunConfig::default();
    let mut weights_set = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(line_no, format!("expected `key = value`, got `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        let real = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line_no, format!("`{key}` needs a finite number, got `{value}`")))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("`{key}` needs a non-negative integer, got `{value}`")))
        };
        match key {
            "epsilon" => cfg.evolution.epsilon = real()?,
            "rho" => cfg.evolution.rho = real()?,
            "rho_classic" => cfg.rho_classic = real()?,
            "dt" => cfg.evolution.dt = real()?,
            "iters" => cfg.evolution.max_iters = count()?,
            "stop_frac" => cfg.evolution.stop_frac = real()?,
            "reinit_every" => cfg.evolution.reinit_every = count()?,
            "steps" => {
                let steps = count()?;
                if !weights_set {
                    cfg.train.per_step_loss_weights = TrainConfig::with_steps(steps).per_step_loss_weights;
                }
                cfg.train.steps = steps;
            }
            "step_weights" => {
                cfg.train.per_step_loss_weights = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(line_no, format!("`{key}` needs comma-separated numbers, got `{value}`")))?;
                weights_set = true;
            }
            "lr" => cfg.train.learning_rate = real()?,
            "decay" => cfg.train.weight_decay = real()?,
            "momentum" => cfg.train.momentum = real()?,
            "epochs" => cfg.train.epochs = count()?,
            "seed" => {
                cfg.train.seed = value
                    .parse()
                    .map_err(|_| err(line_no, format!("`seed` needs an unsigned integer, got `{value}`")))?
            }
            _ => return Err(err(line_no, format!("unknown key `{key}`"))),
        }
    }
    cfg.evolution
        .validate()
        .and_then(|_| cfg.train.validate())
        .map_err(|e| err(0, e.to_string()))?;
    Ok(cfg)
}
