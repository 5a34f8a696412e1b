//! Second layer: window topics become rows of a topic-term matrix `B`, and a
//! factorization `B ≈ U V` groups them into dynamic topics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::coherence::{select_k, CoherenceReport, KSelectionResult};
use crate::corpus::{DocumentTermMatrix, Speech, TimeWindow};
use crate::embeddings::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::math;
use crate::nmf::{top_terms, Factorization, NmfConfig, TopicDescriptor};

/// Default number of top terms kept per window topic in `B`.
pub const DEFAULT_T_TRUNCATION: usize = 20;

/// The topic model `M_i` fitted on one time window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTopicModel {
    pub window_index: usize,
    pub label: String,
    /// Row labels of `W`.
    pub doc_ids: Vec<String>,
    /// Column labels of `H`.
    pub vocabulary: Vec<String>,
    pub factorization: Factorization,
    pub descriptors: Vec<TopicDescriptor>,
    pub selection: Option<KSelectionResult>,
    pub coherence: Option<CoherenceReport>,
}

impl WindowTopicModel {
    pub fn new(
        window_index: usize,
        label: impl Into<String>,
        doc_ids: Vec<String>,
        vocabulary: Vec<String>,
        factorization: Factorization,
        descriptor_terms: usize,
    ) -> Result<Self> {
        let f = &factorization;
        if f.w.rows() != doc_ids.len() || f.h.cols() != vocabulary.len() || f.w.cols() != f.k || f.h.rows() != f.k {
            return Err(Error::Parameter(format!(
                "window {window_index}: factors {}x{} and {}x{} do not match {} documents and {} terms",
                f.w.rows(),
                f.w.cols(),
                f.h.rows(),
                f.h.cols(),
                doc_ids.len(),
                vocabulary.len()
            )));
        }
        let descriptors = factorization.descriptors(&vocabulary, descriptor_terms.max(1))?;
        Ok(WindowTopicModel {
            window_index,
            label: label.into(),
            doc_ids,
            vocabulary,
            factorization,
            descriptors,
            selection: None,
            coherence: None,
        })
    }

    pub fn chosen_k(&self) -> usize {
        self.factorization.k
    }

    /// The top `t` terms of topic `topic` ranked from `H`.
    pub fn top_terms(&self, topic: usize, t: usize) -> Result<TopicDescriptor> {
        top_terms(&self.factorization.h, &self.vocabulary, topic, t.min(self.vocabulary.len()))
    }
}

/// Parameters for fitting one window model.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowModelConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub t_coherence: usize,
    /// Terms stored per descriptor.
    pub descriptor_terms: usize,
    pub nmf: NmfConfig,
}

impl Default for WindowModelConfig {
    fn default() -> Self {
        WindowModelConfig {
            k_min: 10,
            k_max: 25,
            t_coherence: 10,
            descriptor_terms: DEFAULT_T_TRUNCATION,
            nmf: NmfConfig::default(),
        }
    }
}

/// Select `k` by coherence on one window's matrix and wrap the winner.
///
/// Both ends of the `k` range are clamped to `min(documents, terms)`.
pub fn fit_window_model(
    window: &TimeWindow,
    matrix: &DocumentTermMatrix,
    space: &EmbeddingSpace,
    config: &WindowModelConfig,
) -> Result<WindowTopicModel> {
    if config.k_min == 0 || config.k_min > config.k_max {
        return Err(Error::Parameter(format!("k range [{}, {}] is empty", config.k_min, config.k_max)));
    }
    let k_max = config.k_max.min(matrix.n_docs()).min(matrix.n_terms());
    let k_min = config.k_min.min(k_max);
    let selection = select_k(
        matrix.matrix(),
        &matrix.vocabulary,
        k_min,
        k_max,
        config.t_coherence,
        space,
        &config.nmf,
    )
    .map_err(|e| e.context(format_args!("window {}", window.label)))?;
    let mut model = WindowTopicModel::new(
        window.index,
        window.label.clone(),
        matrix.doc_ids.clone(),
        matrix.vocabulary.clone(),
        selection.factorization,
        config.descriptor_terms,
    )?;
    model.selection = Some(selection.result);
    model.coherence = Some(selection.report);
    Ok(model)
}

/// The layer-2 matrix `B`: one row per window topic, holding that topic's
/// top-`t` term weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDocumentMatrix {
    /// `(window_index, topic_index)` per row, in lexicographic order.
    pub rows: Vec<(usize, usize)>,
    pub columns: Vec<String>,
    pub values: CsrMatrix,
    pub t_truncation: usize,
}

impl TopicDocumentMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
}

fn sorted_models(models: &[WindowTopicModel]) -> Result<Vec<&WindowTopicModel>> {
    let mut sorted: Vec<&WindowTopicModel> = models.iter().collect();
    sorted.sort_by_key(|m| m.window_index);
    for pair in sorted.windows(2) {
        if pair[0].window_index == pair[1].window_index {
            return Err(Error::Parameter(format!(
                "two models for window {}",
                pair[0].window_index
            )));
        }
    }
    Ok(sorted)
}

pub fn build_topic_document_matrix(models: &[WindowTopicModel], t: usize) -> Result<TopicDocumentMatrix> {
    if models.is_empty() {
        return Err(Error::Parameter("no window topic models".into()));
    }
    if t == 0 {
        return Err(Error::Parameter("t must be at least 1".into()));
    }
    let sorted = sorted_models(models)?;
    let mut rows = Vec::new();
    let mut selections: Vec<Vec<(String, f64)>> = Vec::new();
    for model in sorted {
        for topic in 0..model.chosen_k() {
            let descriptor = model.top_terms(topic, t)?;
            let kept: Vec<(String, f64)> = descriptor.terms.into_iter().filter(|(_, w)| *w > 0.0).collect();
            if kept.is_empty() {
                return Err(Error::Numeric(format!(
                    "window {} topic {topic} has no positive term weight",
                    model.window_index
                )));
            }
            rows.push((model.window_index, topic));
            selections.push(kept);
        }
    }
    let columns: Vec<String> = selections
        .iter()
        .flatten()
        .map(|(term, _)| term.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let position: BTreeMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let triplets: Vec<(usize, usize, f64)> = selections
        .iter()
        .enumerate()
        .flat_map(|(r, terms)| terms.iter().map(move |(term, w)| (r, term, *w)))
        .map(|(r, term, w)| (r, position[term.as_str()], w))
        .collect();
    let values = CsrMatrix::from_triplets(rows.len(), columns.len(), &triplets)?;
    Ok(TopicDocumentMatrix {
        rows,
        columns,
        values,
        t_truncation: t,
    })
}

/// Dynamic topics found by factorizing `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicTopicModel {
    /// `n′ × k′` window-topic memberships.
    pub u: DenseMatrix,
    /// `k′ × m′` dynamic-topic term weights.
    pub v: DenseMatrix,
    pub k_prime: usize,
    /// Window topic of each row of `U`.
    pub rows: Vec<(usize, usize)>,
    /// Term of each column of `V`.
    pub columns: Vec<String>,
    /// Dynamic topic of each row of `U`.
    pub assignment: Vec<usize>,
    pub descriptors: Vec<TopicDescriptor>,
    pub coherence: Option<CoherenceReport>,
}

impl DynamicTopicModel {
    /// Assemble a model from layer-2 factors, assigning rows by argmax of `U`.
    pub fn from_factors(
        rows: Vec<(usize, usize)>,
        columns: Vec<String>,
        u: DenseMatrix,
        v: DenseMatrix,
        descriptor_terms: usize,
    ) -> Result<Self> {
        let k_prime = u.cols();
        if k_prime == 0 || v.rows() != k_prime || u.rows() != rows.len() || v.cols() != columns.len() {
            return Err(Error::Parameter(format!(
                "factors {}x{} and {}x{} do not match {} window topics and {} terms",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols(),
                rows.len(),
                columns.len()
            )));
        }
        let assignment = (0..u.rows())
            .map(|r| math::argmax(u.row(r)).unwrap_or(0))
            .collect();
        let t = descriptor_terms.max(1).min(columns.len());
        let descriptors = (0..k_prime)
            .map(|i| top_terms(&v, &columns, i, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(DynamicTopicModel {
            u,
            v,
            k_prime,
            rows,
            columns,
            assignment,
            descriptors,
            coherence: None,
        })
    }

    pub fn assignment_of(&self, window_index: usize, topic_index: usize) -> Option<usize> {
        self.rows
            .iter()
            .position(|&r| r == (window_index, topic_index))
            .map(|i| self.assignment[i])
    }

    /// Window topics assigned to `dynamic_topic`, ordered by window.
    pub fn members(&self, dynamic_topic: usize) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .zip(&self.assignment)
            .filter(|(_, &a)| a == dynamic_topic)
            .map(|(&r, _)| r)
            .collect()
    }

    fn lookup(&self) -> BTreeMap<(usize, usize), usize> {
        self.rows.iter().copied().zip(self.assignment.iter().copied()).collect()
    }

    fn check_topic(&self, dynamic_topic: usize) -> Result<()> {
        if dynamic_topic >= self.k_prime {
            return Err(Error::Parameter(format!(
                "dynamic topic {dynamic_topic} out of range for k' = {}",
                self.k_prime
            )));
        }
        Ok(())
    }
}

/// Choose `k′` by coherence over `V`-row descriptors and assign window topics.
pub fn fit_dynamic(
    b: &TopicDocumentMatrix,
    k_min: usize,
    k_max: usize,
    t: usize,
    space: &EmbeddingSpace,
    nmf: &NmfConfig,
) -> Result<(DynamicTopicModel, KSelectionResult)> {
    let selection = select_k(&b.values, &b.columns, k_min, k_max, t, space, nmf)
        .map_err(|e| e.context("dynamic model"))?;
    let Factorization { w, h, .. } = selection.factorization;
    let mut model = DynamicTopicModel::from_factors(b.rows.clone(), b.columns.clone(), w, h, b.t_truncation)?;
    model.coherence = Some(selection.report);
    Ok((model, selection.result))
}

/// Speech-to-window-topic assignment by argmax of `W` rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpeechAssignment {
    pub assigned: BTreeMap<String, usize>,
    /// Speeches whose `W` row is entirely zero.
    pub unassigned: Vec<String>,
}

pub fn assign_speeches(model: &WindowTopicModel) -> SpeechAssignment {
    let w = &model.factorization.w;
    let mut out = SpeechAssignment::default();
    for (r, id) in model.doc_ids.iter().enumerate() {
        let row = w.row(r);
        if row.iter().all(|&x| x <= 0.0) {
            out.unassigned.push(id.clone());
        } else if let Some(topic) = math::argmax(row) {
            out.assigned.insert(id.clone(), topic);
        }
    }
    out
}

/// Speeches whose window topic belongs to `dynamic_topic`.
pub fn collect_speeches(
    dtm: &DynamicTopicModel,
    models: &[WindowTopicModel],
    dynamic_topic: usize,
) -> Result<BTreeSet<String>> {
    dtm.check_topic(dynamic_topic)?;
    let lookup = dtm.lookup();
    let mut out = BTreeSet::new();
    for model in models {
        for (id, topic) in assign_speeches(model).assigned {
            if lookup.get(&(model.window_index, topic)) == Some(&dynamic_topic) {
                out.insert(id);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowPoint {
    pub window_index: usize,
    pub label: String,
    pub speech_count: usize,
    pub weight_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicTimeSeries {
    pub dynamic_topic: usize,
    /// One point per corpus window, in window order.
    pub per_window: Vec<WindowPoint>,
    /// Number of windows with a positive speech count.
    pub temporal_frequency: usize,
}

/// Per dynamic topic and window: the number of speeches assigned by argmax and
/// the sum of their soft `W` weights on member window topics.
pub fn topic_time_series(
    dtm: &DynamicTopicModel,
    models: &[WindowTopicModel],
    windows: &[TimeWindow],
) -> Result<Vec<TopicTimeSeries>> {
    let lookup = dtm.lookup();
    let slot: BTreeMap<usize, usize> = windows.iter().enumerate().map(|(i, w)| (w.index, i)).collect();
    let mut counts = vec![vec![0usize; windows.len()]; dtm.k_prime];
    let mut weights = vec![vec![0.0f64; windows.len()]; dtm.k_prime];
    for model in models {
        let Some(&s) = slot.get(&model.window_index) else {
            return Err(Error::Parameter(format!(
                "model for window {} has no matching time window",
                model.window_index
            )));
        };
        let dynamic: Vec<Option<usize>> = (0..model.chosen_k())
            .map(|topic| lookup.get(&(model.window_index, topic)).copied())
            .collect();
        for topic in assign_speeches(model).assigned.values() {
            if let Some(d) = dynamic[*topic] {
                counts[d][s] += 1;
            }
        }
        let w = &model.factorization.w;
        for r in 0..w.rows() {
            for (topic, &x) in w.row(r).iter().enumerate() {
                if let Some(d) = dynamic[topic] {
                    weights[d][s] += x;
                }
            }
        }
    }
    Ok((0..dtm.k_prime)
        .map(|d| {
            let per_window: Vec<WindowPoint> = windows
                .iter()
                .enumerate()
                .map(|(s, w)| WindowPoint {
                    window_index: w.index,
                    label: w.label.clone(),
                    speech_count: counts[d][s],
                    weight_sum: weights[d][s],
                })
                .collect();
            TopicTimeSeries {
                dynamic_topic: d,
                temporal_frequency: per_window.iter().filter(|p| p.speech_count > 0).count(),
                per_window,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContributionMode {
    WeightSum,
    Count,
}

/// Speaker × dynamic-topic contributions in both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionTable {
    /// Every speaker in the corpus, sorted.
    pub speakers: Vec<String>,
    pub k_prime: usize,
    pub weight_sum: Vec<Vec<f64>>,
    pub count: Vec<Vec<usize>>,
}

impl ContributionTable {
    pub fn get(&self, speaker: usize, dynamic_topic: usize, mode: ContributionMode) -> f64 {
        match mode {
            ContributionMode::WeightSum => self.weight_sum[speaker][dynamic_topic],
            ContributionMode::Count => self.count[speaker][dynamic_topic] as f64,
        }
    }

    pub fn speaker_index(&self, speaker_id: &str) -> Option<usize> {
        self.speakers.binary_search_by(|s| s.as_str().cmp(speaker_id)).ok()
    }
}

pub fn speaker_contributions(
    dtm: &DynamicTopicModel,
    models: &[WindowTopicModel],
    corpus: &[Speech],
) -> Result<ContributionTable> {
    let speaker_of: BTreeMap<&str, &str> = corpus.iter().map(|s| (s.id.as_str(), s.speaker_id.as_str())).collect();
    let speakers: Vec<String> = corpus
        .iter()
        .map(|s| s.speaker_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut table = ContributionTable {
        weight_sum: vec![vec![0.0; dtm.k_prime]; speakers.len()],
        count: vec![vec![0; dtm.k_prime]; speakers.len()],
        speakers,
        k_prime: dtm.k_prime,
    };
    let lookup = dtm.lookup();
    for model in models {
        let dynamic: Vec<Option<usize>> = (0..model.chosen_k())
            .map(|topic| lookup.get(&(model.window_index, topic)).copied())
            .collect();
        let assignment = assign_speeches(model);
        for (r, id) in model.doc_ids.iter().enumerate() {
            let speaker = speaker_of
                .get(id.as_str())
                .and_then(|sp| table.speaker_index(sp))
                .ok_or_else(|| Error::Validation(format!("speech {id} is not in the corpus")))?;
            for (topic, &x) in model.factorization.w.row(r).iter().enumerate() {
                if let Some(d) = dynamic[topic] {
                    table.weight_sum[speaker][d] += x;
                }
            }
            if let Some(d) = assignment.assigned.get(id).and_then(|&topic| dynamic[topic]) {
                table.count[speaker][d] += 1;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use chrono::NaiveDate;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn model(window: usize, ids: &[&str], vocab: &[&str], w: Vec<Vec<f64>>, h: Vec<Vec<f64>>) -> WindowTopicModel {
        let k = h.len();
        let f = Factorization {
            w: DenseMatrix::from_rows(&w).unwrap(),
            h: DenseMatrix::from_rows(&h).unwrap(),
            k,
            iterations_run: 0,
            final_error: 0.0,
            objective_trace: Vec::new(),
        };
        WindowTopicModel::new(window, format!("w{window}"), strings(ids), strings(vocab), f, 20).unwrap()
    }

    #[test]
    fn b_has_t_nonzeros_per_row() {
        let vocab = ["a", "b", "c", "d", "e"];
        let m0 = model(
            0,
            &["s1", "s2"],
            &vocab,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.5, 0.4, 0.1, 0.0, 0.0], vec![0.0, 0.0, 0.2, 0.3, 0.9]],
        );
        let m1 = model(
            2,
            &["s3", "s4"],
            &vocab,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.9, 0.0, 0.0, 0.0, 0.8], vec![0.0, 0.7, 0.6, 0.0, 0.0]],
        );
        let b = build_topic_document_matrix(&[m1.clone(), m0.clone()], 2).unwrap();
        assert_eq!(b.rows, vec![(0, 0), (0, 1), (2, 0), (2, 1)]);
        for r in 0..4 {
            assert_eq!(b.values.row(r).0.len(), 2);
        }
        assert_eq!(b.columns, strings(&["a", "b", "c", "d", "e"]));
        assert_eq!(b.values.get(1, 4), 0.9);
        assert_eq!(b.values.get(1, 2), 0.0);

        let full = build_topic_document_matrix(&[m0.clone()], 5).unwrap();
        assert_eq!(full.n_columns(), 5);
        assert!(build_topic_document_matrix(&[], 2).is_err());
        assert!(build_topic_document_matrix(&[m0.clone(), m0], 2).is_err());
    }

    #[test]
    fn speech_assignment_conventions() {
        let m = model(
            0,
            &["a", "b", "c"],
            &["x", "y", "z"],
            vec![vec![0.1, 0.7, 0.2], vec![0.0, 0.0, 0.0], vec![0.5, 0.5, 0.0]],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        );
        let a = assign_speeches(&m);
        assert_eq!(a.assigned.get("a"), Some(&1));
        assert_eq!(a.assigned.get("c"), Some(&0));
        assert_eq!(a.unassigned, strings(&["b"]));
    }

    #[test]
    fn u_argmax_ties_to_lowest() {
        let u = DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        let v = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = DynamicTopicModel::from_factors(vec![(0, 0), (0, 1)], strings(&["a", "b"]), u, v, 20).unwrap();
        assert_eq!(d.assignment, vec![0, 1]);
        assert_eq!(d.members(1), vec![(0, 1)]);
        assert_eq!(d.assignment_of(0, 1), Some(1));
    }

    fn speech(id: &str, speaker: &str) -> Speech {
        Speech {
            id: id.into(),
            date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            speaker_id: speaker.into(),
            speaker_name: None,
            text: "x".into(),
        }
    }

    #[test]
    fn contributions_arithmetic() {
        let m = model(
            0,
            &["s1"],
            &["x", "y"],
            vec![vec![0.2, 0.8]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let u = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let v = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let d = DynamicTopicModel::from_factors(vec![(0, 0), (0, 1)], strings(&["x", "y"]), u, v, 20).unwrap();
        let corpus = [speech("s1", "alice"), speech("s9", "bob")];
        let t = speaker_contributions(&d, &[m.clone()], &corpus).unwrap();
        let alice = t.speaker_index("alice").unwrap();
        let bob = t.speaker_index("bob").unwrap();
        assert!((t.get(alice, 0, ContributionMode::WeightSum) - 1.0).abs() < 1e-15);
        assert_eq!(t.get(alice, 0, ContributionMode::Count), 1.0);
        assert_eq!(t.weight_sum[bob], vec![0.0]);
        assert_eq!(t.count[bob], vec![0]);

        assert_eq!(collect_speeches(&d, &[m.clone()], 0).unwrap().len(), 1);
        assert!(collect_speeches(&d, &[m], 1).is_err());
    }

    #[test]
    fn time_series_frequency() {
        let windows: Vec<TimeWindow> = (0..6)
            .map(|i| TimeWindow {
                index: i,
                label: format!("w{i}"),
                start: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                end: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                speech_ids: Vec::new(),
            })
            .collect();
        let models: Vec<WindowTopicModel> = [3usize, 5]
            .iter()
            .map(|&w| {
                model(
                    w,
                    &[&format!("s{w}")],
                    &["x", "y"],
                    vec![vec![0.3]],
                    vec![vec![1.0, 0.0]],
                )
            })
            .collect();
        let u = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let v = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = DynamicTopicModel::from_factors(vec![(3, 0), (5, 0)], strings(&["x", "y"]), u, v, 20).unwrap();
        let series = topic_time_series(&d, &models, &windows).unwrap();
        assert_eq!(series[1].temporal_frequency, 2);
        assert_eq!(series[0].temporal_frequency, 0);
        assert_eq!(series[1].per_window[3].speech_count, 1);
        assert!((series[1].per_window[5].weight_sum - 0.3).abs() < 1e-15);
    }
}
