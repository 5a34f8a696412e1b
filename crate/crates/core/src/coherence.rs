//! Topic coherence and coherence-driven choice of the number of topics.
//!
//! TC-W2V scores a topic by the mean pairwise cosine similarity of its top
//! terms in an embedding space; a model scores the mean over its topics.
//! C_v scores a topic from NPMI values of term co-occurrence in boolean
//! sliding windows over a background corpus.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::math;
use crate::nmf::{factorize, Factorization, NmfConfig, TopicDescriptor};

/// Sliding window length for C_v co-occurrence counts.
pub const DEFAULT_CV_WINDOW: usize = 110;
/// Smoothing added to joint probabilities inside NPMI.
pub const NPMI_EPSILON: f64 = 1e-12;
/// Model scores closer than this count as tied in [`select_k`].
pub const SCORE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    TcW2v,
    Cv,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::TcW2v => "tc-w2v",
            Measure::Cv => "c-v",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub measure: Measure,
    pub t_terms: usize,
    pub per_topic: Vec<(usize, f64)>,
    /// Arithmetic mean of the per-topic scores.
    pub model_score: f64,
    pub median: f64,
}

impl CoherenceReport {
    fn from_scores(measure: Measure, t_terms: usize, per_topic: Vec<(usize, f64)>) -> Self {
        let scores: Vec<f64> = per_topic.iter().map(|&(_, s)| s).collect();
        CoherenceReport {
            measure,
            t_terms,
            model_score: mean(&scores),
            median: median(&scores),
            per_topic,
        }
    }

    pub fn score(&self, topic: usize) -> Option<f64> {
        self.per_topic.iter().find(|(t, _)| *t == topic).map(|&(_, s)| s)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Mean pairwise cosine similarity of the terms present in `space`.
/// Terms missing from the space are skipped.
pub fn topic_coherence_w2v<S: AsRef<str>>(terms: &[S], space: &EmbeddingSpace) -> Result<f64> {
    let vectors: Vec<&[f64]> = terms.iter().filter_map(|t| space.get(t.as_ref())).collect();
    if vectors.len() < 2 {
        return Err(Error::CoherenceUndefined(format!(
            "{} of {} terms are in the embedding space, need at least 2",
            vectors.len(),
            terms.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for j in 1..vectors.len() {
        for i in 0..j {
            total += math::cosine(vectors[i], vectors[j]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// TC-W2V of each descriptor's first `t` terms.
pub fn descriptor_coherence(descriptors: &[TopicDescriptor], t: usize, space: &EmbeddingSpace) -> Result<CoherenceReport> {
    if t < 2 {
        return Err(Error::Parameter(format!("t = {t}, coherence needs at least 2 terms")));
    }
    let per_topic = descriptors
        .iter()
        .map(|d| {
            let terms: Vec<&str> = d.terms.iter().take(t).map(|(w, _)| w.as_str()).collect();
            topic_coherence_w2v(&terms, space)
                .map(|s| (d.topic_index, s))
                .map_err(|e| e.context(format_args!("topic {}", d.topic_index)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoherenceReport::from_scores(Measure::TcW2v, t, per_topic))
}

/// TC-W2V report for every topic of a factorization.
pub fn model_coherence(
    model: &Factorization,
    vocabulary: &[String],
    t: usize,
    space: &EmbeddingSpace,
) -> Result<CoherenceReport> {
    if t < 2 {
        return Err(Error::Parameter(format!("t = {t}, coherence needs at least 2 terms")));
    }
    let descriptors = model.descriptors(vocabulary, t)?;
    descriptor_coherence(&descriptors, t, space)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelectionResult {
    pub k_min: usize,
    pub k_max: usize,
    /// Model coherence for every `k` in the range, ascending in `k`.
    pub scores: Vec<(usize, f64)>,
    /// Smallest `k` whose score is within [`SCORE_TIE_TOLERANCE`] of the maximum.
    pub chosen_k: usize,
}

impl KSelectionResult {
    pub fn score(&self, k: usize) -> Option<f64> {
        self.scores.iter().find(|(kk, _)| *kk == k).map(|&(_, s)| s)
    }
}

/// Result of a coherence sweep together with the chosen model.
#[derive(Debug, Clone)]
pub struct Selection {
    pub result: KSelectionResult,
    pub factorization: Factorization,
    pub report: CoherenceReport,
}

/// Fit one model per `k` in `[k_min, k_max]` and keep the most coherent.
pub fn select_k(
    matrix: &CsrMatrix,
    vocabulary: &[String],
    k_min: usize,
    k_max: usize,
    t: usize,
    space: &EmbeddingSpace,
    nmf: &NmfConfig,
) -> Result<Selection> {
    let limit = matrix.rows().min(matrix.cols());
    if k_min == 0 || k_min > k_max || k_max > limit {
        return Err(Error::Parameter(format!(
            "k range [{k_min}, {k_max}] invalid for a {}x{} matrix",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if t < 2 {
        return Err(Error::Parameter(format!("t = {t}, coherence needs at least 2 terms")));
    }
    let mut scores = Vec::with_capacity(k_max - k_min + 1);
    // fits still within tolerance of the running maximum, ascending in k
    let mut candidates: Vec<(f64, Factorization, CoherenceReport)> = Vec::new();
    let mut max = f64::NEG_INFINITY;
    for k in k_min..=k_max {
        let fit = factorize(matrix, k, nmf).map_err(|e| e.context(format_args!("k = {k}")))?;
        let report = model_coherence(&fit, vocabulary, t, space).map_err(|e| e.context(format_args!("k = {k}")))?;
        let score = report.model_score;
        scores.push((k, score));
        if score > max {
            max = score;
            candidates.retain(|(s, _, _)| *s >= max - SCORE_TIE_TOLERANCE);
        }
        if score >= max - SCORE_TIE_TOLERANCE {
            candidates.push((score, fit, report));
        }
    }
    let (_, factorization, report) = candidates.into_iter().next().expect("non-empty k range");
    Ok(Selection {
        result: KSelectionResult {
            k_min,
            k_max,
            scores,
            chosen_k: factorization.k,
        },
        factorization,
        report,
    })
}

/// Boolean sliding-window occurrence counts over a background corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceIndex {
    pub window_size: usize,
    pub window_count: usize,
    pub term_counts: BTreeMap<String, usize>,
    /// Keyed by the lexicographically ordered pair.
    pub pair_counts: BTreeMap<(String, String), usize>,
}

impl CooccurrenceIndex {
    /// Count windows of `window_size` consecutive tokens in every document;
    /// a document shorter than the window counts as one window. When
    /// `restrict` is given only those terms are tracked.
    pub fn build(docs: &[Vec<String>], window_size: usize, restrict: Option<&BTreeSet<String>>) -> Result<Self> {
        if window_size == 0 {
            return Err(Error::Parameter("window size must be at least 1".into()));
        }
        let mut term_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut pair_counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut window_count = 0;
        for doc in docs {
            let tracked: Vec<Option<&str>> = doc
                .iter()
                .map(|t| match restrict {
                    Some(set) if !set.contains(t) => None,
                    _ => Some(t.as_str()),
                })
                .collect();
            if tracked.is_empty() {
                continue;
            }
            let span = window_size.min(tracked.len());
            for start in 0..=tracked.len() - span {
                window_count += 1;
                let present: BTreeSet<&str> = tracked[start..start + span].iter().flatten().copied().collect();
                let present: Vec<&str> = present.into_iter().collect();
                for (i, a) in present.iter().enumerate() {
                    *term_counts.entry(String::from(*a)).or_insert(0) += 1;
                    for b in &present[i + 1..] {
                        *pair_counts
                            .entry((String::from(*a), String::from(*b)))
                            .or_insert(0) += 1;
                    }
                }
            }
        }
        Ok(CooccurrenceIndex {
            window_size,
            window_count,
            term_counts,
            pair_counts,
        })
    }

    pub fn count(&self, term: &str) -> usize {
        self.term_counts.get(term).copied().unwrap_or(0)
    }

    pub fn pair_count(&self, a: &str, b: &str) -> usize {
        if a == b {
            return self.count(a);
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.pair_counts
            .get(&(String::from(key.0), String::from(key.1)))
            .copied()
            .unwrap_or(0)
    }

    /// `[ln(p(a,b) + ε) − ln p(a) − ln p(b)] / −ln(p(a,b) + ε)`
    pub fn npmi(&self, a: &str, b: &str) -> Option<f64> {
        let (ca, cb) = (self.count(a), self.count(b));
        if ca == 0 || cb == 0 || self.window_count == 0 {
            return None;
        }
        let n = self.window_count as f64;
        let pab = self.pair_count(a, b) as f64 / n + NPMI_EPSILON;
        let pa = ca as f64 / n;
        let pb = cb as f64 / n;
        let denom = -math::ln(pab);
        if denom == 0.0 {
            // both terms occur in every window
            return Some(1.0);
        }
        Some((math::ln(pab) - math::ln(pa) - math::ln(pb)) / denom)
    }
}

/// C_v with one-set segmentation: each term's NPMI context vector against all
/// usable terms is compared by cosine with the sum of all context vectors.
pub fn coherence_cv<S: AsRef<str>>(terms: &[S], index: &CooccurrenceIndex) -> Result<f64> {
    let mut seen = BTreeSet::new();
    let usable: Vec<&str> = terms
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| index.count(t) > 0 && seen.insert(*t))
        .collect();
    if usable.len() < 2 {
        return Err(Error::CoherenceUndefined(format!(
            "{} of {} terms occur in the background corpus, need at least 2",
            usable.len(),
            terms.len()
        )));
    }
    let vectors: Vec<Vec<f64>> = usable
        .iter()
        .map(|a| usable.iter().map(|b| index.npmi(a, b).unwrap_or(0.0)).collect())
        .collect();
    let mut total = alloc::vec![0.0; usable.len()];
    for v in &vectors {
        for (t, x) in total.iter_mut().zip(v) {
            *t += x;
        }
    }
    Ok(mean(&vectors.iter().map(|v| math::cosine(v, &total)).collect::<Vec<_>>()))
}

/// C_v report over descriptors' first `t` terms.
pub fn descriptor_coherence_cv(
    descriptors: &[TopicDescriptor],
    t: usize,
    index: &CooccurrenceIndex,
) -> Result<CoherenceReport> {
    if t < 2 {
        return Err(Error::Parameter(format!("t = {t}, coherence needs at least 2 terms")));
    }
    let per_topic = descriptors
        .iter()
        .map(|d| {
            let terms: Vec<&str> = d.terms.iter().take(t).map(|(w, _)| w.as_str()).collect();
            coherence_cv(&terms, index)
                .map(|s| (d.topic_index, s))
                .map_err(|e| e.context(format_args!("topic {}", d.topic_index)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoherenceReport::from_scores(Measure::Cv, t, per_topic))
}
