//! Pipeline configuration, read from TOML or JSON. Every field has a default,
//! so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use dyntopic_core::corpus::{Granularity, PreprocessConfig};
use dyntopic_core::embeddings::SkipGramConfig;
use dyntopic_core::nmf::{NmfConfig, UpdateRule};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::fsutil::read_to_string;
use crate::ingest::{read_lemma_table, read_word_list};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub granularity: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub preprocess: PreprocessSection,
    pub window: KRange,
    pub dynamic: KRange,
    pub t_coherence: usize,
    pub t_truncation: usize,
    /// Sliding-window length for C_v coherence.
    pub cv_window: usize,
    pub nmf: NmfSection,
    pub embedding: EmbeddingSection,
    pub taxonomy: Option<PathBuf>,
    pub taxonomy_level: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub k_min: usize,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub min_token_length: usize,
    pub min_document_frequency: usize,
    pub generic_stopwords: Option<PathBuf>,
    pub domain_stopwords: Option<PathBuf>,
    pub name_stopwords: Option<PathBuf>,
    pub lemma_table: Option<PathBuf>,
    pub strip_line_prefixes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmfSection {
    /// `hals` or `multiplicative`.
    pub rule: String,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Train,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub source: EmbeddingSource,
    /// word2vec text file, required when `source = "load"`.
    pub path: Option<PathBuf>,
    pub dimension: usize,
    pub context_window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Vec::new(),
            granularity: "quarter".into(),
            out_dir: PathBuf::from("out"),
            seed: 1,
            threads: None,
            preprocess: PreprocessSection::default(),
            window: KRange { k_min: 10, k_max: 25 },
            dynamic: KRange { k_min: 25, k_max: 90 },
            t_coherence: 10,
            t_truncation: 20,
            cv_window: dyntopic_core::coherence::DEFAULT_CV_WINDOW,
            nmf: NmfSection::default(),
            embedding: EmbeddingSection::default(),
            taxonomy: None,
            taxonomy_level: 1,
        }
    }
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let d = PreprocessConfig::default();
        PreprocessSection {
            min_token_length: d.min_token_length,
            min_document_frequency: d.min_document_frequency,
            generic_stopwords: None,
            domain_stopwords: None,
            name_stopwords: None,
            lemma_table: None,
            strip_line_prefixes: Vec::new(),
        }
    }
}

impl Default for NmfSection {
    fn default() -> Self {
        let d = NmfConfig::default();
        NmfSection {
            rule: "hals".into(),
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let d = SkipGramConfig::default();
        EmbeddingSection {
            source: EmbeddingSource::Train,
            path: None,
            dimension: d.dimension,
            context_window: d.context_window,
            negative_samples: d.negative_samples,
            epochs: d.epochs,
            min_count: d.min_count,
            learning_rate: d.learning_rate,
        }
    }
}

impl PipelineConfig {
    /// Parse by extension: `.json` is JSON, anything else TOML. Relative
    /// paths inside the file are resolved against the file's directory.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = read_to_string(path)?;
        let mut config: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| AppError::input(path, e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| AppError::input(path, e.to_string()))?
        };
        if let Some(base) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            config.rebase(base);
        }
        config.validate().map_err(|m| AppError::input(path, m))?;
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        let pre = &mut self.preprocess;
        for p in [
            &mut pre.generic_stopwords,
            &mut pre.domain_stopwords,
            &mut pre.name_stopwords,
            &mut pre.lemma_table,
            &mut self.embedding.path,
            &mut self.taxonomy,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.granularity()?;
        self.update_rule()?;
        for (name, r) in [("window", &self.window), ("dynamic", &self.dynamic)] {
            if r.k_min == 0 || r.k_min > r.k_max {
                return Err(format!("{name} k range [{}, {}] is empty or starts at 0", r.k_min, r.k_max));
            }
        }
        if self.t_coherence < 2 {
            return Err("t_coherence must be at least 2".into());
        }
        if self.t_truncation == 0 {
            return Err("t_truncation must be at least 1".into());
        }
        if self.cv_window == 0 {
            return Err("cv_window must be at least 1".into());
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        if self.taxonomy_level == 0 {
            return Err("taxonomy_level must be at least 1".into());
        }
        if self.embedding.source == EmbeddingSource::Load && self.embedding.path.is_none() {
            return Err("embedding source `load` needs `embedding.path`".into());
        }
        self.skip_gram().validate().map_err(|e| e.to_string())?;
        if self.nmf.max_iter == 0 || self.nmf.tol.is_nan() || self.nmf.tol <= 0.0 {
            return Err("nmf needs max_iter >= 1 and tol > 0".into());
        }
        Ok(())
    }

    pub fn granularity(&self) -> Result<Granularity, String> {
        Granularity::parse(&self.granularity).ok_or_else(|| {
            format!("unknown granularity `{}`, expected month, quarter or year", self.granularity)
        })
    }

    fn update_rule(&self) -> Result<UpdateRule, String> {
        match self.nmf.rule.as_str() {
            "hals" => Ok(UpdateRule::Hals),
            "multiplicative" | "mu" => Ok(UpdateRule::Multiplicative),
            other => Err(format!("unknown nmf rule `{other}`, expected hals or multiplicative")),
        }
    }

    pub fn nmf_config(&self) -> NmfConfig {
        NmfConfig {
            rule: self.update_rule().expect("validated"),
            max_iter: self.nmf.max_iter,
            tol: self.nmf.tol,
            ..NmfConfig::default()
        }
    }

    pub fn skip_gram(&self) -> SkipGramConfig {
        let e = &self.embedding;
        SkipGramConfig {
            dimension: e.dimension,
            context_window: e.context_window,
            negative_samples: e.negative_samples,
            epochs: e.epochs,
            min_count: e.min_count,
            learning_rate: e.learning_rate,
            seed: self.seed,
        }
    }

    /// Load the word lists named in the config.
    pub fn preprocess_config(&self) -> AppResult<PreprocessConfig> {
        let p = &self.preprocess;
        let words = |path: &Option<PathBuf>| path.as_deref().map(read_word_list).transpose().map(Option::unwrap_or_default);
        let config = PreprocessConfig {
            min_token_length: p.min_token_length,
            min_document_frequency: p.min_document_frequency,
            generic_stopwords: words(&p.generic_stopwords)?,
            domain_stopwords: words(&p.domain_stopwords)?,
            name_stopwords: words(&p.name_stopwords)?,
            lemma_table: p.lemma_table.as_deref().map(read_lemma_table).transpose()?.unwrap_or_default(),
            strip_line_prefixes: p.strip_line_prefixes.clone(),
        };
        config.validate().map_err(|e| AppError::Usage(e.to_string()))?;
        Ok(config)
    }
}
