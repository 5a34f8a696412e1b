//! Validation of dynamic topics: term stability across windows, hierarchical
//! clustering of the dynamic topics, and matching against a coded subject
//! taxonomy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::corpus::{preprocess_text, PreprocessConfig};
use crate::dynamic::{DynamicTopicModel, WindowTopicModel};
use crate::error::{Error, Result};
use crate::math;

/// `|A ∩ B| / |A ∪ B|`.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::Validation("jaccard of two empty sets is undefined".into()));
    }
    let common = a.intersection(b).count();
    Ok(common as f64 / (a.len() + b.len() - common) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub dynamic_topic: usize,
    /// `None` when the topic has fewer than two member window topics.
    pub mean_jaccard: Option<f64>,
    pub n_members: usize,
}

/// Mean Jaccard agreement of consecutive member window topics' top-`t` terms.
pub fn term_stability(dtm: &DynamicTopicModel, models: &[WindowTopicModel], t: usize) -> Result<Vec<StabilityRow>> {
    if t == 0 {
        return Err(Error::Parameter("t must be at least 1".into()));
    }
    let by_window: BTreeMap<usize, &WindowTopicModel> = models.iter().map(|m| (m.window_index, m)).collect();
    (0..dtm.k_prime)
        .map(|d| {
            let members = dtm.members(d);
            let sets = members
                .iter()
                .map(|&(w, topic)| {
                    let model = by_window
                        .get(&w)
                        .ok_or_else(|| Error::Validation(format!("no window model for window {w}")))?;
                    let descriptor = model.top_terms(topic, t)?;
                    Ok(descriptor.terms.into_iter().map(|(term, _)| term).collect::<BTreeSet<String>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let mean_jaccard = if sets.len() < 2 {
                None
            } else {
                let total = sets
                    .windows(2)
                    .map(|p| jaccard(&p[0], &p[1]))
                    .sum::<Result<f64>>()?;
                Some(total / (sets.len() - 1) as f64)
            };
            Ok(StabilityRow {
                dynamic_topic: d,
                mean_jaccard,
                n_members: members.len(),
            })
        })
        .collect()
}

/// Pearson correlation; zero when either vector has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / math::sqrt(saa * sbb)).clamp(-1.0, 1.0)
}

/// `1 − (1 + ρ) / 2`.
pub fn correlation_distance(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - pearson(a, b)) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Clusters `0..n` are leaves; merge `i` creates cluster `n + i`.
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
    pub linkage: &'static str,
}

impl Dendrogram {
    /// Newick string with branch lengths taken from merge heights.
    pub fn newick(&self) -> String {
        let n = self.leaves.len();
        if n == 1 {
            return format!("{};", self.leaves[0]);
        }
        let height = |c: usize| if c < n { 0.0 } else { self.merges[c - n].height };
        let mut text: Vec<String> = self.leaves.clone();
        for m in &self.merges {
            let mut node = String::new();
            let _ = write!(
                node,
                "({}:{:.6},{}:{:.6})",
                text[m.a],
                m.height - height(m.a),
                text[m.b],
                m.height - height(m.b)
            );
            text.push(node);
        }
        let mut root = text.pop().unwrap_or_default();
        root.push(';');
        root
    }
}

/// Average-linkage agglomerative clustering of `rows` under `distance`.
/// Among equally close pairs the one with the lowest cluster ids merges first.
pub fn average_linkage(rows: &[Vec<f64>], labels: Vec<String>, distance: fn(&[f64], &[f64]) -> f64) -> Result<Dendrogram> {
    let n = rows.len();
    if n == 0 || labels.len() != n {
        return Err(Error::Parameter(format!("{n} rows with {} labels", labels.len())));
    }
    // dist[i][j] for active clusters, indexed by cluster id
    let total = 2 * n - 1;
    let mut dist = vec![vec![0.0f64; total]; total];
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(&rows[i], &rows[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut floor = f64::NEG_INFINITY;
    while active.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                if dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (height, a, b) = best;
        let height = height.max(floor);
        floor = height;
        let c = n + merges.len();
        size[c] = size[a] + size[b];
        active.retain(|&x| x != a && x != b);
        for &k in &active {
            let d = (size[a] as f64 * dist[k][a] + size[b] as f64 * dist[k][b]) / size[c] as f64;
            dist[k][c] = d;
            dist[c][k] = d;
        }
        active.push(c);
        merges.push(Merge {
            a,
            b,
            height,
            size: size[c],
        });
    }
    Ok(Dendrogram {
        leaves: labels,
        merges,
        linkage: "average",
    })
}

/// Cluster the rows of `V` by correlation distance.
pub fn cluster_topics(dtm: &DynamicTopicModel) -> Result<Dendrogram> {
    if dtm.k_prime < 2 {
        return Err(Error::Parameter("clustering needs at least 2 dynamic topics".into()));
    }
    let rows: Vec<Vec<f64>> = (0..dtm.k_prime).map(|i| dtm.v.row(i).to_vec()).collect();
    let labels = (0..dtm.k_prime).map(|i| format!("D{i}")).collect();
    average_linkage(&rows, labels, correlation_distance)
}

/// One line of a coded subject taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyEntry {
    pub code: String,
    pub title: String,
    pub description: String,
}

impl TaxonomyEntry {
    /// Number of dotted components in the code.
    pub fn depth(&self) -> usize {
        self.code.split('.').count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectDocument {
    pub code: String,
    pub title: String,
    /// Descriptions of the subject and all of its sub-branches.
    pub text: String,
}

/// Subject documents for every entry at code depth `level`. Entries whose
/// combined text is empty are returned separately by code.
pub fn subject_documents(entries: &[TaxonomyEntry], level: usize) -> Result<(Vec<SubjectDocument>, Vec<String>)> {
    let mut by_code: BTreeMap<&str, &TaxonomyEntry> = BTreeMap::new();
    for e in entries {
        if e.code.is_empty() || by_code.insert(e.code.as_str(), e).is_some() {
            return Err(Error::Validation(format!("duplicate or empty subject code {:?}", e.code)));
        }
    }
    let mut docs = Vec::new();
    let mut empty = Vec::new();
    for (code, entry) in &by_code {
        if entry.depth() != level {
            continue;
        }
        let prefix = format!("{code}.");
        let text = by_code
            .iter()
            .filter(|(c, _)| *c == code || c.starts_with(&prefix))
            .map(|(_, e)| e.description.trim())
            .filter(|d| !d.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        if text.is_empty() {
            empty.push(String::from(*code));
        } else {
            docs.push(SubjectDocument {
                code: String::from(*code),
                title: entry.title.clone(),
                text,
            });
        }
    }
    Ok((docs, empty))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMatch {
    pub code: String,
    pub title: String,
    pub dynamic_topic: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyMatching {
    /// Sorted by similarity descending, then code.
    pub matches: Vec<SubjectMatch>,
    /// Subjects whose processed text is empty.
    pub skipped: Vec<String>,
}

/// Smoothed inverse document frequency over the subject collection.
pub fn smoothed_idf(df: usize, n: usize) -> f64 {
    math::ln((1 + n) as f64 / (1 + df) as f64) + 1.0
}

/// Match every subject to its most similar dynamic topic (ties to the lowest
/// topic) by cosine of TF-IDF vectors over the subject vocabulary.
pub fn match_taxonomy(
    dtm: &DynamicTopicModel,
    subjects: &[SubjectDocument],
    t: usize,
    preprocess: &PreprocessConfig,
) -> Result<TaxonomyMatching> {
    if subjects.is_empty() {
        return Err(Error::Parameter("no subject documents".into()));
    }
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for s in subjects {
        let tokens = preprocess_text(&s.text, preprocess);
        if tokens.is_empty() {
            skipped.push(s.code.clone());
        } else {
            kept.push((s, tokens));
        }
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, tokens) in &kept {
        for term in tokens.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let vocabulary: Vec<&str> = df.keys().copied().collect();
    let idf: Vec<f64> = vocabulary.iter().map(|w| smoothed_idf(df[w], kept.len())).collect();
    let vectorize = |terms: &mut dyn Iterator<Item = &str>| {
        let mut v = vec![0.0; vocabulary.len()];
        for term in terms {
            if let Ok(i) = vocabulary.binary_search(&term) {
                v[i] += 1.0;
            }
        }
        for (x, w) in v.iter_mut().zip(&idf) {
            *x *= w;
        }
        v
    };
    let topic_vectors: Vec<Vec<f64>> = (0..dtm.k_prime)
        .map(|d| {
            let descriptor = &dtm.descriptors[d];
            vectorize(&mut descriptor.terms.iter().take(t).map(|(w, _)| w.as_str()))
        })
        .collect();
    let mut matches: Vec<SubjectMatch> = kept
        .iter()
        .map(|(s, tokens)| {
            let v = vectorize(&mut tokens.iter().map(String::as_str));
            let mut best = (0usize, f64::NEG_INFINITY);
            for (d, tv) in topic_vectors.iter().enumerate() {
                let c = math::cosine(&v, tv);
                if c > best.1 {
                    best = (d, c);
                }
            }
            SubjectMatch {
                code: s.code.clone(),
                title: s.title.clone(),
                dynamic_topic: best.0,
                similarity: best.1.max(0.0),
            }
        })
        .collect();
    matches.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.code.cmp(&b.code)));
    Ok(TaxonomyMatching { matches, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jaccard_fixtures() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])).unwrap(), 0.0);
        assert_eq!(jaccard(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])).unwrap(), 0.5);
        assert!(jaccard(&set(&[]), &set(&[])).is_err());
    }

    #[test]
    fn pearson_edge_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(correlation_distance(&[1.0, 1.0], &[0.0, 5.0]), 0.5);
    }

    #[test]
    fn identical_rows_merge_first_at_zero() {
        let rows = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0], vec![1.0, 0.0, 2.0]];
        let d = average_linkage(&rows, vec!["x".into(), "y".into(), "z".into()], correlation_distance).unwrap();
        assert_eq!((d.merges[0].a, d.merges[0].b), (0, 2));
        assert_eq!(d.merges[0].height, 0.0);
        assert_eq!(d.merges.len(), 2);
        assert_eq!(d.merges[1].size, 3);
        assert!(d.newick().starts_with("(y:"));
        assert!(d.newick().ends_with(";"));

        let opposite = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let two = average_linkage(&opposite, vec!["x".into(), "y".into()], correlation_distance).unwrap();
        assert_eq!(two.merges.len(), 1);
        assert_eq!(two.newick(), "(x:1.000000,y:1.000000);");
    }

    #[test]
    fn subject_documents_follow_code_prefixes() {
        let e = |c: &str, d: &str| TaxonomyEntry {
            code: c.into(),
            title: format!("title {c}"),
            description: d.into(),
        };
        let entries = [
            e("3", "agriculture"),
            e("3.20", "fisheries"),
            e("3.20.01", "quotas"),
            e("3.21", ""),
            e("3.2", "transport"),
        ];
        let (docs, empty) = subject_documents(&entries, 2).unwrap();
        let codes: Vec<&str> = docs.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, ["3.2", "3.20"]);
        assert_eq!(docs[1].text, "fisheries quotas");
        assert_eq!(docs[0].text, "transport");
        assert_eq!(empty, ["3.21"]);
        assert!(subject_documents(&[e("1", "a"), e("1", "b")], 1).is_err());
    }
}
