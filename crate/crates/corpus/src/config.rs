use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};
use crate::rules::Step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupMode {
    /// Drop exact repeats of a (src, tgt) pair.
    #[default]
    Pair,
    /// Drop a pair when either side has been seen before.
    PerSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub punct_ratio_max: f64,
    pub length_ratio_max: f64,
    pub max_tokens: usize,
    pub script_foreign_ratio_max: f64,
    pub enabled_steps: BTreeSet<Step>,
    pub dedup: DedupMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            punct_ratio_max: 0.5,
            length_ratio_max: 3.0,
            max_tokens: 250,
            script_foreign_ratio_max: 0.5,
            enabled_steps: [Step::Punctuation, Step::Dedup, Step::Script, Step::Length]
                .into_iter()
                .collect(),
            dedup: DedupMode::Pair,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("punct_ratio_max", self.punct_ratio_max),
            ("script_foreign_ratio_max", self.script_foreign_ratio_max),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(CorpusError::InvalidConfig(format!(
                    "{name} must be in (0, 1], got {v}"
                )));
            }
        }
        if self.length_ratio_max.is_nan() || self.length_ratio_max < 1.0 {
            return Err(CorpusError::InvalidConfig(format!(
                "length_ratio_max must be ≥ 1, got {}",
                self.length_ratio_max
            )));
        }
        if self.max_tokens == 0 {
            return Err(CorpusError::InvalidConfig("max_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn enabled(&self, step: Step) -> bool {
        self.enabled_steps.contains(&step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = FilterConfig::default();
        c.validate().unwrap();
        assert!(!c.enabled(Step::External));
    }

    #[test]
    fn rejects_bad_ratios() {
        let c = FilterConfig {
            punct_ratio_max: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = FilterConfig {
            length_ratio_max: 0.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
