//! Speeches, preprocessing, calendar windows and TF-IDF document-term matrices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::math;

/// One timestamped speech.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Speech {
    pub id: String,
    pub date: NaiveDate,
    pub speaker_id: String,
    pub speaker_name: Option<String>,
    pub text: String,
}

/// Check corpus invariants and sort by date (stable, so file order breaks ties).
pub fn prepare_corpus(mut speeches: Vec<Speech>) -> Result<Vec<Speech>> {
    let mut seen = BTreeSet::new();
    for (i, s) in speeches.iter().enumerate() {
        if s.id.is_empty() {
            return Err(Error::Validation(format!("record {}: empty id", i + 1)));
        }
        if !seen.insert(s.id.as_str()) {
            return Err(Error::Validation(format!("duplicate speech id `{}`", s.id)));
        }
        if s.text.trim().is_empty() {
            return Err(Error::Validation(format!("record {}: empty text", i + 1)));
        }
    }
    speeches.sort_by_key(|s| s.date);
    Ok(speeches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    Month,
    #[default]
    Quarter,
    Year,
}

impl Granularity {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "month" => Some(Granularity::Month),
            "quarter" => Some(Granularity::Quarter),
            "year" => Some(Granularity::Year),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Month => "month",
            Granularity::Quarter => "quarter",
            Granularity::Year => "year",
        }
    }

    fn months(self) -> u32 {
        match self {
            Granularity::Month => 1,
            Granularity::Quarter => 3,
            Granularity::Year => 12,
        }
    }

    /// First day of the window containing `date`.
    pub fn window_start(self, date: NaiveDate) -> NaiveDate {
        let span = self.months();
        let month = (date.month0() / span) * span + 1;
        NaiveDate::from_ymd_opt(date.year(), month, 1).expect("valid calendar month")
    }

    /// First day of the window after the one starting at `start`.
    pub fn next_start(self, start: NaiveDate) -> NaiveDate {
        let total = start.year() * 12 + start.month0() as i32 + self.months() as i32;
        NaiveDate::from_ymd_opt(total.div_euclid(12), total.rem_euclid(12) as u32 + 1, 1)
            .expect("valid calendar month")
    }

    pub fn label(self, start: NaiveDate) -> String {
        match self {
            Granularity::Month => format!("{:04}-{:02}", start.year(), start.month()),
            Granularity::Quarter => format!("{:04}-Q{}", start.year(), start.month0() / 3 + 1),
            Granularity::Year => format!("{:04}", start.year()),
        }
    }
}

/// A calendar-aligned slice `[start, end)` of the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeWindow {
    pub index: usize,
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub speech_ids: Vec<String>,
}

impl TimeWindow {
    /// Empty windows are kept so indices stay calendar-aligned.
    pub fn is_empty(&self) -> bool {
        self.speech_ids.is_empty()
    }
}

/// Consecutive disjoint windows from the first to the last speech date.
pub fn partition_windows(speeches: &[Speech], granularity: Granularity) -> Vec<TimeWindow> {
    let Some(first) = speeches.iter().map(|s| s.date).min() else {
        return Vec::new();
    };
    let last = speeches.iter().map(|s| s.date).max().unwrap_or(first);

    let mut windows = Vec::new();
    let mut start = granularity.window_start(first);
    while start <= last {
        let end = granularity.next_start(start);
        windows.push(TimeWindow {
            index: windows.len(),
            label: granularity.label(start),
            start,
            end,
            speech_ids: Vec::new(),
        });
        start = end;
    }
    let first_start = windows[0].start;
    for s in speeches {
        let ws = granularity.window_start(s.date);
        let offset = (ws.year() - first_start.year()) * 12 + ws.month0() as i32 - first_start.month0() as i32;
        let idx = offset as usize / granularity.months() as usize;
        windows[idx].speech_ids.push(s.id.clone());
    }
    windows
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub min_token_length: usize,
    pub min_document_frequency: usize,
    pub generic_stopwords: BTreeSet<String>,
    pub domain_stopwords: BTreeSet<String>,
    pub name_stopwords: BTreeSet<String>,
    /// Surface form → lemma. Terms not in the table pass through.
    pub lemma_table: BTreeMap<String, String>,
    /// Lines starting with any of these (after leading whitespace) are dropped
    /// as headers or footers.
    pub strip_line_prefixes: Vec<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_token_length: 3,
            min_document_frequency: 5,
            generic_stopwords: BTreeSet::new(),
            domain_stopwords: BTreeSet::new(),
            name_stopwords: BTreeSet::new(),
            lemma_table: BTreeMap::new(),
            strip_line_prefixes: Vec::new(),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_length == 0 {
            return Err(Error::Parameter("min_token_length must be at least 1".into()));
        }
        if self.min_document_frequency == 0 {
            return Err(Error::Parameter("min_document_frequency must be at least 1".into()));
        }
        let sets = [&self.generic_stopwords, &self.domain_stopwords, &self.name_stopwords];
        if let Some(bad) = sets
            .iter()
            .flat_map(|s| s.iter())
            .find(|w| w.chars().any(char::is_uppercase))
        {
            return Err(Error::Parameter(format!("stopword `{bad}` is not lowercase")));
        }
        Ok(())
    }

    fn is_stopword(&self, token: &str) -> bool {
        self.generic_stopwords.contains(token)
            || self.domain_stopwords.contains(token)
            || self.name_stopwords.contains(token)
    }
}

/// Lowercase unigram tokens of `text`, in order, after header/footer removal,
/// lemmatization and the length and stopword filters.
pub fn preprocess_text(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if config
            .strip_line_prefixes
            .iter()
            .any(|p| !p.is_empty() && trimmed.starts_with(p.as_str()))
        {
            continue;
        }
        for raw in line.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            let lower = raw.to_lowercase();
            let token = match config.lemma_table.get(&lower) {
                Some(lemma) => lemma.clone(),
                None => lower,
            };
            if token.chars().count() < config.min_token_length || config.is_stopword(&token) {
                continue;
            }
            out.push(token);
        }
    }
    out
}

pub fn preprocess(speech: &Speech, config: &PreprocessConfig) -> Vec<String> {
    preprocess_text(&speech.text, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    RawCount,
    TfidfL2,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::RawCount => "raw-count",
            Weighting::TfidfL2 => "tfidf-l2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw-count" => Some(Weighting::RawCount),
            "tfidf-l2" => Some(Weighting::TfidfL2),
            _ => None,
        }
    }
}

/// Sublinear TF-IDF weight `(1 + ln tf) · ln(n / df)`.
pub fn tfidf_weight(tf: usize, df: usize, n: usize) -> f64 {
    (1.0 + math::ln(tf as f64)) * math::ln(n as f64 / df as f64)
}

/// Sparse non-negative document × term matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTermMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    pub weighting: Weighting,
    /// Documents with no retained term, left out of the rows.
    pub dropped_doc_ids: Vec<String>,
    matrix: CsrMatrix,
}

impl DocumentTermMatrix {
    /// Assemble from parts, checking the structural invariants.
    pub fn from_parts(
        doc_ids: Vec<String>,
        vocabulary: Vec<String>,
        weighting: Weighting,
        matrix: CsrMatrix,
    ) -> Result<Self> {
        if matrix.rows() != doc_ids.len() || matrix.cols() != vocabulary.len() {
            return Err(Error::Validation(format!(
                "matrix is {}x{} but there are {} documents and {} terms",
                matrix.rows(),
                matrix.cols(),
                doc_ids.len(),
                vocabulary.len()
            )));
        }
        if matrix.nnz() > 0 && matrix.min_value() <= 0.0 {
            return Err(Error::Validation("stored values must be positive".into()));
        }
        if let Some(c) = matrix.column_counts().iter().position(|&n| n == 0) {
            return Err(Error::Validation(format!("term `{}` has an all-zero column", vocabulary[c])));
        }
        Ok(DocumentTermMatrix {
            doc_ids,
            vocabulary,
            weighting,
            dropped_doc_ids: Vec::new(),
            matrix,
        })
    }

    /// Build from tokenized documents. Terms must occur in at least `min_df`
    /// documents; under TF-IDF, terms present in every document carry zero
    /// weight and are removed.
    pub fn from_tokens(
        docs: &[(String, Vec<String>)],
        min_df: usize,
        weighting: Weighting,
    ) -> Result<Self> {
        let n = docs.len();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        let counts: Vec<BTreeMap<&str, usize>> = docs
            .iter()
            .map(|(_, tokens)| {
                let mut c = BTreeMap::new();
                for t in tokens {
                    *c.entry(t.as_str()).or_insert(0) += 1;
                }
                c
            })
            .collect();
        for c in &counts {
            for term in c.keys() {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let keep = |d: usize| d >= min_df && (weighting == Weighting::RawCount || d < n);
        let vocabulary: Vec<String> = df
            .iter()
            .filter(|(_, &d)| keep(d))
            .map(|(t, _)| t.to_string())
            .collect();
        let column: BTreeMap<&str, usize> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();

        let mut triplets = Vec::new();
        let mut doc_ids = Vec::new();
        let mut dropped = Vec::new();
        for ((id, _), c) in docs.iter().zip(&counts) {
            let mut row: Vec<(usize, f64)> = c
                .iter()
                .filter_map(|(term, &tf)| {
                    let col = *column.get(term)?;
                    let value = match weighting {
                        Weighting::RawCount => tf as f64,
                        Weighting::TfidfL2 => tfidf_weight(tf, df[term], n),
                    };
                    Some((col, value))
                })
                .collect();
            if row.is_empty() {
                dropped.push(id.clone());
                continue;
            }
            if weighting == Weighting::TfidfL2 {
                let norm = math::sqrt(row.iter().map(|(_, v)| v * v).sum());
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            let r = doc_ids.len();
            triplets.extend(row.into_iter().map(|(c, v)| (r, c, v)));
            doc_ids.push(id.clone());
        }
        let matrix = CsrMatrix::from_triplets(doc_ids.len(), vocabulary.len(), &triplets)?;
        let mut dtm = DocumentTermMatrix::from_parts(doc_ids, vocabulary, weighting, matrix)?;
        dtm.dropped_doc_ids = dropped;
        Ok(dtm)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }
}

/// TF-IDF matrix for the speeches of one window.
pub fn build_matrix(
    window: &TimeWindow,
    speeches: &[Speech],
    config: &PreprocessConfig,
) -> Result<DocumentTermMatrix> {
    config.validate()?;
    let by_id: BTreeMap<&str, &Speech> = speeches.iter().map(|s| (s.id.as_str(), s)).collect();
    let docs: Vec<(String, Vec<String>)> = window
        .speech_ids
        .iter()
        .map(|id| {
            let speech = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::Validation(format!("window {} lists unknown speech `{id}`", window.label)))?;
            Ok((id.clone(), preprocess(speech, config)))
        })
        .collect::<Result<_>>()?;
    let dtm = DocumentTermMatrix::from_tokens(&docs, config.min_document_frequency, Weighting::TfidfL2)?;
    if dtm.n_docs() == 0 {
        return Err(Error::EmptyWindow {
            window: window.label.clone(),
        });
    }
    Ok(dtm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn speech(id: &str, date: &str, text: &str) -> Speech {
        Speech {
            id: id.into(),
            date: date.parse().unwrap(),
            speaker_id: "mep".into(),
            speaker_name: None,
            text: text.into(),
        }
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn preprocess_rules() {
        let mut cfg = PreprocessConfig::default();
        cfg.generic_stopwords = set(&["the", "are"]);
        assert_eq!(
            preprocess_text("The Commission ARE proposing", &cfg),
            vec!["commission", "proposing"]
        );

        let mut cfg = PreprocessConfig::default();
        cfg.generic_stopwords = set(&["is"]);
        assert!(preprocess_text("EU is ok", &cfg).is_empty());

        let mut cfg = PreprocessConfig::default();
        cfg.lemma_table.insert("proposals".into(), "proposal".into());
        assert_eq!(preprocess_text("proposals adopted", &cfg), vec!["proposal", "adopted"]);
    }

    #[test]
    fn all_stopword_classes_and_header_lines_removed() {
        let mut cfg = PreprocessConfig::default();
        cfg.domain_stopwords = set(&["adjourn"]);
        cfg.name_stopwords = set(&["barroso"]);
        cfg.strip_line_prefixes = vec!["(Applause".into()];
        let text = "(Applause from the left)\nWe adjourn, Mr Barroso; fisheries matter.";
        assert_eq!(preprocess_text(text, &cfg), vec!["fisheries", "matter"]);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = PreprocessConfig::default();
        cfg.min_token_length = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = PreprocessConfig::default();
        cfg.min_document_frequency = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = PreprocessConfig::default();
        cfg.generic_stopwords = set(&["The"]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn quarterly_windows_and_labels() {
        let speeches = vec![speech("a", "1999-07-15", "x"), speech("b", "1999-11-02", "y")];
        let w = partition_windows(&speeches, Granularity::Quarter);
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].label, "1999-Q3");
        assert_eq!(w[1].label, "1999-Q4");
        assert_eq!(w[1].speech_ids, vec!["b"]);

        let single = partition_windows(&speeches[..1], Granularity::Quarter);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].speech_ids, vec!["a"]);
    }

    #[test]
    fn sixty_quarters_and_sixteen_years() {
        let speeches = vec![speech("a", "1999-07-20", "x"), speech("b", "2014-06-30", "y")];
        let q = partition_windows(&speeches, Granularity::Quarter);
        assert_eq!(q.len(), 60);
        assert_eq!(q[59].label, "2014-Q2");
        assert!(q[1..59].iter().all(TimeWindow::is_empty));
        assert_eq!(partition_windows(&speeches, Granularity::Year).len(), 16);
        let m = partition_windows(&speeches, Granularity::Month);
        assert_eq!(m.len(), 180);
        assert_eq!(m[0].label, "1999-07");
        assert_eq!(m[179].end, NaiveDate::from_ymd_opt(2014, 7, 1).unwrap());
    }

    #[test]
    fn prepare_corpus_rejects_duplicates_and_sorts() {
        let ok = prepare_corpus(vec![speech("b", "2000-02-01", "x"), speech("a", "2000-01-01", "y")]).unwrap();
        assert_eq!(ok[0].id, "a");
        let dup = prepare_corpus(vec![speech("s1", "2000-02-01", "x"), speech("s1", "2000-01-01", "y")]);
        assert!(matches!(dup, Err(Error::Validation(m)) if m.contains("s1")));
        assert!(prepare_corpus(vec![speech("s", "2000-02-01", "  ")]).is_err());
    }

    #[test]
    fn tfidf_weight_hand_computed() {
        // (1 + ln 1) · ln(6/5)
        assert!((tfidf_weight(1, 5, 6) - 0.182_321_556_793_954_6).abs() < 1e-12);
        assert!((tfidf_weight(3, 1, 4) - (1.0 + 3f64.ln()) * 4f64.ln()).abs() < 1e-12);
    }

    fn docs(texts: &[&str]) -> Vec<(String, Vec<String>)> {
        let cfg = PreprocessConfig::default();
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("d{i}"), preprocess_text(t, &cfg)))
            .collect()
    }

    #[test]
    fn df_threshold_and_idf_zero_columns() {
        let d = docs(&[
            "fishery quota quota common",
            "fishery quota common",
            "fishery quota common",
            "fishery quota common",
            "fishery quota common",
            "budget common",
        ]);
        let dtm = DocumentTermMatrix::from_tokens(&d, 5, Weighting::TfidfL2).unwrap();
        // `common` is everywhere (idf 0) and `budget` is below min_df
        assert_eq!(dtm.vocabulary, vec!["fishery", "quota"]);
        assert_eq!(dtm.dropped_doc_ids, vec!["d5"]);
        assert_eq!(dtm.n_docs(), 5);
        let m = dtm.matrix();
        // row 0: quota tf = 2 vs fishery tf = 1, same idf
        assert!((m.get(0, 1) / m.get(0, 0) - (1.0 + 2f64.ln())).abs() < 1e-12);
        for r in 0..m.rows() {
            let (_, vals) = m.row(r);
            let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_window_is_an_error() {
        let speeches = vec![speech("a", "2000-01-01", "the an of")];
        let windows = partition_windows(&speeches, Granularity::Quarter);
        let err = build_matrix(&windows[0], &speeches, &PreprocessConfig::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyWindow { .. }));
    }

    #[test]
    fn raw_counts_keep_ubiquitous_terms() {
        let d = docs(&["alpha alpha beta", "alpha gamma"]);
        let dtm = DocumentTermMatrix::from_tokens(&d, 1, Weighting::RawCount).unwrap();
        assert_eq!(dtm.vocabulary, vec!["alpha", "beta", "gamma"]);
        assert_eq!(dtm.matrix().get(0, 0), 2.0);
    }
}
