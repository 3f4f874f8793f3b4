//! The JSON pipeline configuration.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mediabias_core::corpus::DateWindow;
use mediabias_core::learn::{ClassifierSpec, NbVariant, SvmParams, TreeParams};
use mediabias_core::{Representation, Scheme, Window};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_lambda() -> f64 {
    SvmParams::default().lambda
}

fn default_epochs() -> usize {
    SvmParams::default().epochs
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: default_lambda(),
            epochs: default_epochs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Unset: Bernoulli for boolean vectors, multinomial otherwise.
    #[serde(default)]
    pub variant: Option<NbVariant>,
}

fn default_alpha() -> f64 {
    1.0
}

impl Default for NbConfig {
    fn default() -> Self {
        NbConfig {
            alpha: default_alpha(),
            variant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
}

fn default_max_depth() -> usize {
    TreeParams::default().max_depth
}

fn default_min_leaf() -> usize {
    TreeParams::default().min_leaf
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: default_max_depth(),
            min_leaf: default_min_leaf(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierName {
    Nb,
    Svm,
    Tree,
}

impl ClassifierName {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierName::Nb => "nb",
            ClassifierName::Svm => "svm",
            ClassifierName::Tree => "tree",
        }
    }
}

/// Pipeline settings. Relative paths are resolved against the directory
/// of the config file when it is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub articles: PathBuf,
    pub registry: PathBuf,
    #[serde(default)]
    pub stoplist: Option<PathBuf>,
    /// Replaces the built-in list of gendered words when set.
    #[serde(default)]
    pub gendered_signals: Option<PathBuf>,
    #[serde(default)]
    pub lexicons: Vec<PathBuf>,
    #[serde(default)]
    pub pos_lexicon: Option<PathBuf>,

    #[serde(default)]
    pub date_from: Option<NaiveDate>,
    /// Exclusive.
    #[serde(default)]
    pub date_to: Option<NaiveDate>,

    #[serde(default)]
    pub remove_stopwords: bool,
    #[serde(default)]
    pub stem: bool,

    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_windows")]
    pub windows: Vec<Window>,
    #[serde(default = "default_representations")]
    pub representations: Vec<Representation>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierName>,
    #[serde(default)]
    pub svm: SvmConfig,
    #[serde(default)]
    pub nb: NbConfig,
    #[serde(default)]
    pub tree: TreeConfig,

    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub undersample: bool,

    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Unigram]
}

fn default_windows() -> Vec<Window> {
    vec![Window::Article]
}

fn default_representations() -> Vec<Representation> {
    vec![Representation::Boolean]
}

fn default_classifiers() -> Vec<ClassifierName> {
    vec![ClassifierName::Svm, ClassifierName::Nb, ClassifierName::Tree]
}

fn default_k() -> usize {
    10
}

fn default_min_df() -> usize {
    3
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A run manifest embeds the config it ran with, so it can be loaded in
/// place of a config file.
#[derive(Deserialize)]
struct ManifestShape {
    config: PipelineConfig,
}

impl PipelineConfig {
    /// A config with every optional key at its default.
    pub fn new(articles: impl Into<PathBuf>, registry: impl Into<PathBuf>) -> Self {
        let text = serde_json::json!({ "articles": articles.into(), "registry": registry.into() });
        serde_json::from_value(text).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let parsed = if value.get("config").is_some() && value.get("config_hash").is_some() {
            serde_json::from_value::<ManifestShape>(value).map(|m| m.config)
        } else {
            serde_json::from_value(value)
        };
        parsed.map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Reads a config (or run manifest) and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text).map_err(|e| e.context(path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.articles);
        fix(&mut self.registry);
        self.stoplist.iter_mut().for_each(fix);
        self.gendered_signals.iter_mut().for_each(fix);
        self.lexicons.iter_mut().for_each(fix);
        self.pos_lexicon.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
    }

    /// Checks value ranges and that every referenced input exists.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut inputs = vec![&self.articles, &self.registry];
        inputs.extend(&self.stoplist);
        inputs.extend(&self.gendered_signals);
        inputs.extend(&self.lexicons);
        inputs.extend(&self.pos_lexicon);
        for p in inputs {
            if !p.is_file() {
                return Err(CliError::Config(format!("input file {} does not exist", p.display())));
            }
        }
        if self.remove_stopwords && self.stoplist.is_none() {
            return Err(CliError::Config("remove_stopwords needs a stoplist".into()));
        }
        if self.k < 2 {
            return Err(CliError::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.min_df < 1 {
            return Err(CliError::Config("min_df must be at least 1".into()));
        }
        for (name, empty) in [
            ("schemes", self.schemes.is_empty()),
            ("windows", self.windows.is_empty()),
            ("representations", self.representations.is_empty()),
            ("classifiers", self.classifiers.is_empty()),
        ] {
            if empty {
                return Err(CliError::Config(format!("{name} must not be empty")));
            }
        }
        self.date_window()?;
        Ok(())
    }

    pub fn date_window(&self) -> Result<DateWindow, CliError> {
        let all = DateWindow::all_time();
        let start = self.date_from.unwrap_or(all.start);
        let end = self.date_to.unwrap_or(all.end);
        DateWindow::new(start, end).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn classifier_spec(&self, name: ClassifierName) -> ClassifierSpec {
        match name {
            ClassifierName::Svm => ClassifierSpec::Svm {
                lambda: self.svm.lambda,
                epochs: self.svm.epochs,
            },
            ClassifierName::Nb => ClassifierSpec::Nb {
                alpha: self.nb.alpha,
                variant: self.nb.variant,
            },
            ClassifierName::Tree => ClassifierSpec::Tree {
                max_depth: self.tree.max_depth,
                min_leaf: self.tree.min_leaf,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}
