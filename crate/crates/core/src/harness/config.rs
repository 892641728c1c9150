//! Run configuration, read from a TOML file with strict key checking.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bakeoff::BakeoffConfig;
use super::fig5::Fig5Config;
use super::fig6::Fig6Config;
use crate::acquisition::AcquisitionConfig;
use crate::error::{Error, Result};
use crate::hierarchy::HierarchyConfig;
use crate::illumination::IlluminationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MapElites,
    Sail,
    Fig5,
    Fig6,
    Bakeoff,
    Export,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MapElites => "map-elites",
            Self::Sail => "sail",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Bakeoff => "bakeoff",
            Self::Export => "export",
        }
    }
}

/// Settings for the `export` experiment: illuminate, then build and
/// describe a hierarchical surrogate over the resulting elites.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    pub hierarchy: HierarchyConfig,
}

/// One experiment run. Every section is optional and falls back to the
/// experiment's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// When set, must agree with the subcommand.
    pub experiment: Option<ExperimentKind>,
    /// Problem name; each experiment has its own default.
    pub problem: Option<String>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub illumination: IlluminationConfig,
    pub acquisition: AcquisitionConfig,
    pub fig5: Fig5Config,
    pub fig6: Fig6Config,
    pub bakeoff: BakeoffConfig,
    pub export: ExportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            problem: None,
            seed: 0,
            output_dir: None,
            illumination: IlluminationConfig::default(),
            acquisition: AcquisitionConfig::default(),
            fig5: Fig5Config::default(),
            fig6: Fig6Config::default(),
            bakeoff: BakeoffConfig::default(),
            export: ExportConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file `{}`: {e}", path.display()))
        })?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn problem_or<'a>(&'a self, default: &'a str) -> &'a str {
        self.problem.as_deref().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::SurrogateConfig;

    #[test]
    fn parses_sections() {
        let cfg = RunConfig::from_toml_str(
            r#"
            experiment = "sail"
            problem = "foil-proxy"
            seed = 9

            [illumination]
            init_count = 50
            resolution = [16, 16]

            [acquisition]
            kappa = 1.0
            [acquisition.surrogate]
            kind = "hierarchical"
            depth = 1
            [acquisition.surrogate.model]
            kind = "mlp"
            hidden = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Some(ExperimentKind::Sail));
        assert_eq!(cfg.illumination.init_count, 50);
        assert_eq!(
            cfg.illumination.total_evaluations,
            IlluminationConfig::default().total_evaluations
        );
        match &cfg.acquisition.surrogate {
            SurrogateConfig::Hierarchical(h) => assert_eq!(h.depth, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err =
            RunConfig::from_toml_str("seed = 1\n\n[illumination]\nsigma = 0.2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sigma"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");
    }
}
