//! Bundled experiment configurations.

use super::config::{ConfigError, ExperimentConfig};

macro_rules! preset {
    ($name:literal) => {
        ($name, include_str!(concat!("../../presets/", $name, ".toml")))
    };
}

const PRESETS: &[(&str, &str)] = &[
    preset!("thm22-gaussian-replacing"),
    preset!("thm22-gaussian-random-lambda"),
    preset!("thm22-ar1-replacing"),
    preset!("thm23-chi-d2"),
    preset!("thm23-chi-d3"),
    preset!("thm24-orderstat-d3-r1"),
    preset!("thm24-orderstat-d3-r2"),
    preset!("contrast-missing-vs-replacing"),
    preset!("power-decay-beta-lambda"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: String,
}

/// Raw config text of a bundled preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Option<Result<ExperimentConfig, ConfigError>> {
    preset_text(name).map(ExperimentConfig::parse)
}

/// Names and one-line descriptions, in catalogue order.
pub fn list_presets() -> Vec<PresetInfo> {
    PRESETS
        .iter()
        .map(|(name, text)| PresetInfo {
            name,
            description: ExperimentConfig::parse(text).map(|c| c.description).unwrap_or_default(),
        })
        .collect()
}
