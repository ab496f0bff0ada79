use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stlcluster::trace::Preprocess;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything one `pipeline` run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub traces: Vec<TraceSource>,
    #[serde(default)]
    pub preprocess: Vec<Preprocess>,
    /// A file path or `builtin:<name>`.
    pub template: String,
    pub clustering: ClusteringSpec,
    #[serde(default)]
    pub learning: LearningSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    /// CSV files; an empty schema keeps every column.
    Files {
        paths: Vec<PathBuf>,
        #[serde(default)]
        schema: Vec<String>,
    },
    /// Every `*.csv` in a directory, in name order.
    Dir {
        path: PathBuf,
        #[serde(default)]
        schema: Vec<String>,
    },
    Synth {
        family: String,
        count: usize,
        seed: u64,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        /// Replaces the family name in generated ids.
        #[serde(default)]
        prefix: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gmm,
    Kmeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringSpec {
    pub algorithm: Algorithm,
    pub k: usize,
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_iter() -> usize {
    200
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerMode {
    #[default]
    Essential,
    None,
    Bits(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningSpec {
    /// Per-parameter relaxation; parameters left out use their template ε.
    #[serde(default)]
    pub eps: BTreeMap<String, f64>,
    #[serde(default)]
    pub open_dims: Vec<String>,
    /// Adds the suggested open dimensions of each cluster to `open_dims`.
    #[serde(default)]
    pub suggest_open_dims: bool,
    #[serde(default)]
    pub corners: CornerMode,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        if self.traces.is_empty() {
            return bad("no trace sources".into());
        }
        if self.clustering.k == 0 {
            return bad("clustering.k must be at least 1".into());
        }
        if let Some((name, e)) = self.learning.eps.iter().find(|(_, &e)| !(e > 0.0)) {
            return bad(format!("learning.eps.{name} must be positive, got {e}"));
        }
        Ok(())
    }
}
