//! JSON envelopes for persisted artifacts and conversions to and from the
//! core types.

use std::path::Path;

use dyntopic_core::coherence::{CoherenceReport, KSelectionResult, Measure};
use dyntopic_core::corpus::{DocumentTermMatrix, PreprocessConfig, Weighting};
use dyntopic_core::dynamic::{DynamicTopicModel, WindowTopicModel};
use dyntopic_core::linalg::{CsrMatrix, DenseMatrix};
use dyntopic_core::nmf::{Factorization, TopicDescriptor};
use dyntopic_core::validation::Dendrogram;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::fsutil::{read_to_string, write_atomic};

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    write_atomic(path, &to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| AppError::input(path, e.to_string()))
}

fn dense(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DenseMatrix, String> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("{what}: ragged rows, expected {cols} columns"));
    }
    let data = rows.concat();
    DenseMatrix::from_vec(rows.len(), cols, data).map_err(|e| format!("{what}: {e}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    pub weighting: String,
    pub triplets: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub dropped_doc_ids: Vec<String>,
}

impl From<&DocumentTermMatrix> for MatrixJson {
    fn from(m: &DocumentTermMatrix) -> Self {
        MatrixJson {
            vocabulary: m.vocabulary.clone(),
            doc_ids: m.doc_ids.clone(),
            weighting: m.weighting.as_str().to_string(),
            triplets: m.matrix().triplets().collect(),
            dropped_doc_ids: m.dropped_doc_ids.clone(),
        }
    }
}

impl MatrixJson {
    pub fn into_matrix(self) -> Result<DocumentTermMatrix, String> {
        let weighting =
            Weighting::parse(&self.weighting).ok_or_else(|| format!("unknown weighting `{}`", self.weighting))?;
        let csr = CsrMatrix::from_triplets(self.doc_ids.len(), self.vocabulary.len(), &self.triplets)
            .map_err(|e| e.to_string())?;
        let mut m = DocumentTermMatrix::from_parts(self.doc_ids, self.vocabulary, weighting, csr)
            .map_err(|e| e.to_string())?;
        m.dropped_doc_ids = self.dropped_doc_ids;
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizationJson {
    pub k: usize,
    pub vocabulary_ref: String,
    pub doc_ids_ref: String,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub final_error: f64,
    pub iterations_run: usize,
    pub objective_trace: Vec<f64>,
}

impl FactorizationJson {
    pub fn new(f: &Factorization, vocabulary_ref: &str, doc_ids_ref: &str) -> Self {
        FactorizationJson {
            k: f.k,
            vocabulary_ref: vocabulary_ref.to_string(),
            doc_ids_ref: doc_ids_ref.to_string(),
            w: f.w.to_rows(),
            h: f.h.to_rows(),
            final_error: f.final_error,
            iterations_run: f.iterations_run,
            objective_trace: f.objective_trace.clone(),
        }
    }

    pub fn into_factorization(self, m: usize) -> Result<Factorization, String> {
        Ok(Factorization {
            w: dense(&self.w, self.k, "W")?,
            h: dense(&self.h, m, "H")?,
            k: self.k,
            iterations_run: self.iterations_run,
            final_error: self.final_error,
            objective_trace: self.objective_trace,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescriptorJson {
    pub topic_index: usize,
    pub terms: Vec<(String, f64)>,
}

impl From<&TopicDescriptor> for DescriptorJson {
    fn from(d: &TopicDescriptor) -> Self {
        DescriptorJson {
            topic_index: d.topic_index,
            terms: d.terms.clone(),
        }
    }
}

impl From<DescriptorJson> for TopicDescriptor {
    fn from(d: DescriptorJson) -> Self {
        TopicDescriptor {
            topic_index: d.topic_index,
            terms: d.terms,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceJson {
    pub measure: String,
    pub t_terms: usize,
    pub per_topic: Vec<(usize, f64)>,
    pub model_score: f64,
    pub median: f64,
}

impl From<&CoherenceReport> for CoherenceJson {
    fn from(r: &CoherenceReport) -> Self {
        CoherenceJson {
            measure: r.measure.as_str().to_string(),
            t_terms: r.t_terms,
            per_topic: r.per_topic.clone(),
            model_score: r.model_score,
            median: r.median,
        }
    }
}

impl CoherenceJson {
    pub fn into_report(self) -> Result<CoherenceReport, String> {
        let measure = match self.measure.as_str() {
            "tc-w2v" => Measure::TcW2v,
            "c-v" => Measure::Cv,
            other => return Err(format!("unknown coherence measure `{other}`")),
        };
        Ok(CoherenceReport {
            measure,
            t_terms: self.t_terms,
            per_topic: self.per_topic,
            model_score: self.model_score,
            median: self.median,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionJson {
    pub k_min: usize,
    pub k_max: usize,
    pub scores: Vec<(usize, f64)>,
    pub chosen_k: usize,
}

impl From<&KSelectionResult> for SelectionJson {
    fn from(r: &KSelectionResult) -> Self {
        SelectionJson {
            k_min: r.k_min,
            k_max: r.k_max,
            scores: r.scores.clone(),
            chosen_k: r.chosen_k,
        }
    }
}

impl From<SelectionJson> for KSelectionResult {
    fn from(r: SelectionJson) -> Self {
        KSelectionResult {
            k_min: r.k_min,
            k_max: r.k_max,
            scores: r.scores,
            chosen_k: r.chosen_k,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowModelJson {
    pub window_index: usize,
    pub label: String,
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    pub factorization: FactorizationJson,
    pub descriptors: Vec<DescriptorJson>,
    pub selection: Option<SelectionJson>,
    pub coherence: Option<CoherenceJson>,
}

impl From<&WindowTopicModel> for WindowModelJson {
    fn from(m: &WindowTopicModel) -> Self {
        WindowModelJson {
            window_index: m.window_index,
            label: m.label.clone(),
            doc_ids: m.doc_ids.clone(),
            vocabulary: m.vocabulary.clone(),
            factorization: FactorizationJson::new(&m.factorization, "vocabulary", "doc_ids"),
            descriptors: m.descriptors.iter().map(DescriptorJson::from).collect(),
            selection: m.selection.as_ref().map(SelectionJson::from),
            coherence: m.coherence.as_ref().map(CoherenceJson::from),
        }
    }
}

impl WindowModelJson {
    pub fn into_model(self) -> Result<WindowTopicModel, String> {
        let factorization = self.factorization.into_factorization(self.vocabulary.len())?;
        let terms = self.descriptors.first().map_or(0, |d| d.terms.len());
        let mut model = WindowTopicModel::new(
            self.window_index,
            self.label,
            self.doc_ids,
            self.vocabulary,
            factorization,
            terms.max(1),
        )
        .map_err(|e| e.to_string())?;
        model.descriptors = self.descriptors.into_iter().map(TopicDescriptor::from).collect();
        model.selection = self.selection.map(KSelectionResult::from);
        model.coherence = self.coherence.map(CoherenceJson::into_report).transpose()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicModelJson {
    pub k_prime: usize,
    pub t_truncation: usize,
    pub descriptors: Vec<DescriptorJson>,
    /// `[window_index, topic_index, dynamic_topic]` per window topic, in row order.
    pub assignment: Vec<(usize, usize, usize)>,
    pub vocabulary: Vec<String>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub coherence: Option<CoherenceJson>,
}

impl DynamicModelJson {
    pub fn new(m: &DynamicTopicModel, t_truncation: usize) -> Self {
        DynamicModelJson {
            k_prime: m.k_prime,
            t_truncation,
            descriptors: m.descriptors.iter().map(DescriptorJson::from).collect(),
            assignment: m
                .rows
                .iter()
                .zip(&m.assignment)
                .map(|(&(w, t), &d)| (w, t, d))
                .collect(),
            vocabulary: m.columns.clone(),
            u: m.u.to_rows(),
            v: m.v.to_rows(),
            coherence: m.coherence.as_ref().map(CoherenceJson::from),
        }
    }

    /// Rebuild the model and check the stored assignment against the factors.
    pub fn into_model(self) -> Result<DynamicTopicModel, String> {
        let rows: Vec<(usize, usize)> = self.assignment.iter().map(|&(w, t, _)| (w, t)).collect();
        let u = dense(&self.u, self.k_prime, "U")?;
        let v = dense(&self.v, self.vocabulary.len(), "V")?;
        let mut model = DynamicTopicModel::from_factors(rows, self.vocabulary, u, v, self.t_truncation)
            .map_err(|e| e.to_string())?;
        let stored: Vec<usize> = self.assignment.iter().map(|&(_, _, d)| d).collect();
        if stored != model.assignment {
            return Err("stored assignment disagrees with the argmax of U".into());
        }
        model.descriptors = self.descriptors.into_iter().map(TopicDescriptor::from).collect();
        model.coherence = self.coherence.map(CoherenceJson::into_report).transpose()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeJson {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DendrogramJson {
    pub linkage: String,
    pub distance: String,
    pub leaves: Vec<String>,
    pub merges: Vec<MergeJson>,
    pub newick: String,
}

impl From<&Dendrogram> for DendrogramJson {
    fn from(d: &Dendrogram) -> Self {
        DendrogramJson {
            linkage: d.linkage.to_string(),
            distance: "(1 - pearson) / 2".to_string(),
            leaves: d.leaves.clone(),
            merges: d
                .merges
                .iter()
                .map(|m| MergeJson {
                    a: m.a,
                    b: m.b,
                    height: m.height,
                    size: m.size,
                })
                .collect(),
            newick: d.newick(),
        }
    }
}

/// Preprocessing settings as stored next to the ingested corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessJson {
    pub min_token_length: usize,
    pub min_document_frequency: usize,
    pub generic_stopwords: Vec<String>,
    pub domain_stopwords: Vec<String>,
    pub name_stopwords: Vec<String>,
    pub lemma_table: Vec<(String, String)>,
    pub strip_line_prefixes: Vec<String>,
}

impl From<&PreprocessConfig> for PreprocessJson {
    fn from(c: &PreprocessConfig) -> Self {
        PreprocessJson {
            min_token_length: c.min_token_length,
            min_document_frequency: c.min_document_frequency,
            generic_stopwords: c.generic_stopwords.iter().cloned().collect(),
            domain_stopwords: c.domain_stopwords.iter().cloned().collect(),
            name_stopwords: c.name_stopwords.iter().cloned().collect(),
            lemma_table: c.lemma_table.clone().into_iter().collect(),
            strip_line_prefixes: c.strip_line_prefixes.clone(),
        }
    }
}

impl From<PreprocessJson> for PreprocessConfig {
    fn from(p: PreprocessJson) -> Self {
        PreprocessConfig {
            min_token_length: p.min_token_length,
            min_document_frequency: p.min_document_frequency,
            generic_stopwords: p.generic_stopwords.into_iter().collect(),
            domain_stopwords: p.domain_stopwords.into_iter().collect(),
            name_stopwords: p.name_stopwords.into_iter().collect(),
            lemma_table: p.lemma_table.into_iter().collect(),
            strip_line_prefixes: p.strip_line_prefixes,
        }
    }
}
