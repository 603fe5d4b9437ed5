//! `ner.toml`: listen address, limits, transliteration and the model table.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! request_limit = 2000            # characters
//! timeout_ms = 10000
//! wikipedia_base = "https://ar.wikipedia.org"
//!
//! [transliteration]
//! external = false
//! endpoint = "https://inputtools.google.com/request"
//!
//! [models.gazetteer]
//! backend = "gazetteer"           # lexicon defaults to the built-in one
//!
//! [models.aner]
//! backend = "external"
//! path = "models/aner"
//! overflow = { policy = "window", stride = 128 }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ner_core::arabizi::ExternalConfig;
use ner_core::classifier::{LexiconSource, TransliterationSpec};
use ner_core::{
    default_inventory, AlignmentApproach, ClassifierSpec, LabelInventory, OverflowPolicy, PipelineConfig,
    TokenizerConfig,
};
use serde::Deserialize;

use crate::links::DEFAULT_WIKIPEDIA_BASE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Mock,
    Gazetteer,
    External,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub backend: Backend,
    /// Gazetteer lexicon; the built-in one when absent.
    pub lexicon: Option<PathBuf>,
    /// External model directory.
    pub path: Option<PathBuf>,
    /// Class list; the built-in 50 classes when absent.
    pub classes: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    #[serde(default = "default_max_len")]
    pub max_sequence_length: usize,
    #[serde(default)]
    pub overflow: OverflowPolicy,
    #[serde(default)]
    pub approach: AlignmentApproach,
}

fn default_max_len() -> usize {
    256
}

impl ModelConfig {
    pub fn builtin(backend: Backend) -> Self {
        ModelConfig {
            backend,
            lexicon: None,
            path: None,
            classes: None,
            vocabulary: None,
            max_sequence_length: default_max_len(),
            overflow: OverflowPolicy::default(),
            approach: AlignmentApproach::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TransliterationConfig {
    pub external: bool,
    /// Local rule table; the built-in one when absent.
    pub rules: Option<PathBuf>,
    #[serde(flatten)]
    pub client: ExternalConfig,
}

impl Default for TransliterationConfig {
    fn default() -> Self {
        TransliterationConfig {
            external: false,
            rules: None,
            client: ExternalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub request_limit: usize,
    pub timeout_ms: u64,
    pub wikipedia_base: String,
    pub transliteration: TransliterationConfig,
    pub models: BTreeMap<String, ModelConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ServiceConfig {
    /// Built-in gazetteer and mock models, local transliteration.
    fn default() -> Self {
        ServiceConfig {
            listen: ([127, 0, 0, 1], 8080).into(),
            request_limit: 2000,
            timeout_ms: 10_000,
            wikipedia_base: DEFAULT_WIKIPEDIA_BASE.to_string(),
            transliteration: TransliterationConfig::default(),
            models: BTreeMap::from([
                ("gazetteer".to_string(), ModelConfig::builtin(Backend::Gazetteer)),
                ("mock".to_string(), ModelConfig::builtin(Backend::Mock)),
            ]),
            base_dir: PathBuf::from("."),
        }
    }
}

impl ServiceConfig {
    pub fn parse(text: &str, base_dir: &Path) -> anyhow::Result<Self> {
        let mut config: ServiceConfig = toml::from_str(text)?;
        config.base_dir = base_dir.to_path_buf();
        if config.models.is_empty() {
            config.models = ServiceConfig::default().models;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        ServiceConfig::parse(&text, dir).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.models.is_empty() {
            bail!("no models configured");
        }
        if self.request_limit == 0 {
            bail!("request_limit must be positive");
        }
        if self.timeout_ms == 0 {
            bail!("timeout_ms must be positive");
        }
        for (id, model) in &self.models {
            if id.trim().is_empty() {
                bail!("empty model id");
            }
            if model.backend == Backend::External && model.path.is_none() {
                bail!("model {id}: external backend needs `path`");
            }
        }
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    /// The pipeline configuration for one model id.
    pub fn pipeline_config(&self, id: &str) -> anyhow::Result<PipelineConfig> {
        let model = self.models.get(id).with_context(|| format!("unknown model {id:?}"))?;
        let inventory = match &model.classes {
            Some(path) => {
                let path = self.resolve(path);
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                LabelInventory::from_class_list(&text)?
            }
            None if model.backend == Backend::External => {
                let dir = self.resolve(model.path.as_ref().expect("validated"));
                ner_core::external_model_inventory(&dir)?
            }
            None => default_inventory(),
        };
        let classifier = match model.backend {
            Backend::Mock => ClassifierSpec::MockHash,
            Backend::Gazetteer => ClassifierSpec::Gazetteer(match &model.lexicon {
                Some(path) => LexiconSource::File(self.resolve(path)),
                None => LexiconSource::Builtin,
            }),
            Backend::External => ClassifierSpec::ExternalModel(self.resolve(model.path.as_ref().expect("validated"))),
        };
        let mut config = PipelineConfig::new(id, inventory, classifier);
        config.vocabulary = model.vocabulary.as_ref().map(|p| self.resolve(p));
        config.tokenizer = TokenizerConfig::new(model.max_sequence_length, model.overflow)
            .with_context(|| format!("model {id}"))?;
        config.approach = model.approach;
        config.transliteration = if self.transliteration.external {
            TransliterationSpec::External(self.transliteration.client.clone().with_env_override())
        } else {
            match &self.transliteration.rules {
                Some(path) => TransliterationSpec::LocalFile(self.resolve(path)),
                None => TransliterationSpec::Local,
            }
        };
        Ok(config)
    }
}
