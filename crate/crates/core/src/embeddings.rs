//! Term vectors for embedding-based coherence: a single-threaded skip-gram
//! trainer with negative sampling, and cosine similarity lookups.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;

/// Immutable term → vector map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dimension: usize,
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
    vectors: Vec<f64>,
    pub trained_on: String,
}

impl EmbeddingSpace {
    pub fn new(dimension: usize, entries: Vec<(String, Vec<f64>)>, trained_on: impl Into<String>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Validation("embedding dimension must be at least 1".into()));
        }
        let mut terms = Vec::with_capacity(entries.len());
        let mut index = BTreeMap::new();
        let mut vectors = Vec::with_capacity(entries.len() * dimension);
        for (term, v) in entries {
            if v.len() != dimension {
                return Err(Error::Validation(format!(
                    "vector for `{term}` has {} values, expected {dimension}",
                    v.len()
                )));
            }
            if index.insert(term.clone(), terms.len()).is_some() {
                return Err(Error::Validation(format!("duplicate term `{term}`")));
            }
            terms.push(term);
            vectors.extend(v);
        }
        Ok(EmbeddingSpace {
            dimension,
            terms,
            index,
            vectors,
            trained_on: trained_on.into(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in insertion order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        let i = *self.index.get(term)?;
        Some(&self.vectors[i * self.dimension..(i + 1) * self.dimension])
    }

    /// `dot(a, b) / (‖a‖‖b‖)`, or 0 when either vector has zero norm.
    pub fn cosine(&self, term_a: &str, term_b: &str) -> Result<f64> {
        let a = self.get(term_a).ok_or_else(|| Error::MissingTerm(term_a.into()))?;
        let b = self.get(term_b).ok_or_else(|| Error::MissingTerm(term_b.into()))?;
        Ok(math::cosine(a, b))
    }
}

pub fn cosine(space: &EmbeddingSpace, term_a: &str, term_b: &str) -> Result<f64> {
    space.cosine(term_a, term_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipGramConfig {
    pub dimension: usize,
    pub context_window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dimension: 100,
            context_window: 5,
            negative_samples: 5,
            epochs: 5,
            min_count: 5,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("dimension", self.dimension),
            ("context_window", self.context_window),
            ("negative_samples", self.negative_samples),
            ("epochs", self.epochs),
            ("min_count", self.min_count),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be at least 1")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::Parameter("learning_rate must be in (0, 1)".into()));
        }
        Ok(())
    }

    fn provenance(&self) -> String {
        format!(
            "sgns dim={} window={} negative={} epochs={} min_count={} lr={} seed={}",
            self.dimension,
            self.context_window,
            self.negative_samples,
            self.epochs,
            self.min_count,
            self.learning_rate,
            self.seed
        )
    }
}

/// Exponent applied to term counts for the negative-sampling distribution.
const NEGATIVE_POWER: f64 = 0.75;
const MIN_LR_FRACTION: f64 = 1e-4;

/// Train skip-gram vectors with negative sampling on tokenized documents.
/// Context windows never cross document boundaries. Deterministic for a
/// fixed seed.
pub fn train_embeddings(docs: &[Vec<String>], config: &SkipGramConfig) -> Result<EmbeddingSpace> {
    config.validate()?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        for t in doc {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count)
        .collect();
    if vocab.is_empty() {
        return Err(Error::Training(format!(
            "no term occurs at least {} times",
            config.min_count
        )));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let ids: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, (t, _))| (*t, i)).collect();
    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| ids.get(t.as_str()).copied()).collect())
        .collect();

    let mut cumulative = Vec::with_capacity(vocab.len());
    let mut acc = 0.0;
    for &(_, c) in &vocab {
        acc += math::pow(c as f64, NEGATIVE_POWER);
        cumulative.push(acc);
    }

    let dim = config.dimension;
    let v = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<f64> = (0..v * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; v * dim];
    let mut grad = vec![0.0; dim];

    let words_per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let total = (words_per_epoch * config.epochs) as f64 + 1.0;
    let mut processed = 0usize;

    for _ in 0..config.epochs {
        for doc in &encoded {
            for (pos, &center) in doc.iter().enumerate() {
                let lr = config.learning_rate * (1.0 - processed as f64 / total).max(MIN_LR_FRACTION);
                processed += 1;
                let reach = config.context_window - rng.random_range(0..config.context_window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(doc.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let ctx = doc[ctx_pos];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for d in 0..=config.negative_samples {
                        let (target, label) = if d == 0 {
                            (center, 1.0)
                        } else {
                            let draw = rng.random::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= draw).min(v - 1);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let inp = &input[ctx * dim..(ctx + 1) * dim];
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let f = math::dot(inp, out);
                        let g = (label - sigmoid(f)) * lr;
                        for i in 0..dim {
                            grad[i] += g * out[i];
                            out[i] += g * inp[i];
                        }
                    }
                    let inp = &mut input[ctx * dim..(ctx + 1) * dim];
                    for i in 0..dim {
                        inp[i] += grad[i];
                    }
                }
            }
        }
    }

    let entries = vocab
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (String::from(*t), input[i * dim..(i + 1) * dim].to_vec()))
        .collect();
    EmbeddingSpace::new(dim, entries, config.provenance())
}

fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-20.0, 20.0);
    1.0 / (1.0 + math::exp(-x))
}
