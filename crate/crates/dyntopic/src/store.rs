//! Layout of the output directory and the ingested corpus store.
//!
//! ```text
//! <out>/synth/          corpus.csv, plant.json, taxonomy.tsv
//! <out>/corpus/         speeches.jsonl, windows.json, preprocess.json
//! <out>/embeddings/     vectors.txt, embedding.json
//! <out>/window-models/  window-NNN.json, matrix-NNN.json, chosen_k.csv, k_coherence.csv
//! <out>/dynamic/        model.json, selection.json, k_coherence.csv, time_series.csv,
//!                       contributions.csv, descriptors.csv, coherence_cv.csv
//! <out>/validation/     stability.csv, dendrogram.json, dendrogram.nwk, taxonomy_matches.csv
//! <out>/report/         report.html
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use dyntopic_core::corpus::{Granularity, PreprocessConfig, Speech, TimeWindow};
use dyntopic_core::dynamic::WindowTopicModel;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::{read_json, PreprocessJson, WindowModelJson};
use crate::fsutil::read_to_string;

pub const SYNTH: &str = "synth";
pub const CORPUS: &str = "corpus";
pub const EMBEDDINGS: &str = "embeddings";
pub const WINDOW_MODELS: &str = "window-models";
pub const DYNAMIC: &str = "dynamic";
pub const VALIDATION: &str = "validation";
pub const REPORT: &str = "report";

pub const SPEECHES_FILE: &str = "speeches.jsonl";
pub const WINDOWS_FILE: &str = "windows.json";
pub const PREPROCESS_FILE: &str = "preprocess.json";
pub const VECTORS_FILE: &str = "vectors.txt";

pub fn window_model_file(index: usize) -> String {
    format!("window-{index:03}.json")
}

pub fn matrix_file(index: usize) -> String {
    format!("matrix-{index:03}.json")
}

/// A speech with its preprocessed tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSpeech {
    pub id: String,
    pub date: NaiveDate,
    pub speaker_id: String,
    pub speaker_name: Option<String>,
    pub text: String,
    pub tokens: Vec<String>,
}

impl StoredSpeech {
    pub fn speech(&self) -> Speech {
        Speech {
            id: self.id.clone(),
            date: self.date,
            speaker_id: self.speaker_id.clone(),
            speaker_name: self.speaker_name.clone(),
            text: self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub index: usize,
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub empty: bool,
    pub speech_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowManifest {
    pub granularity: String,
    pub n_windows: usize,
    pub n_speeches: usize,
    pub windows: Vec<WindowEntry>,
}

impl WindowManifest {
    pub fn new(granularity: Granularity, windows: &[TimeWindow]) -> Self {
        WindowManifest {
            granularity: granularity.as_str().to_string(),
            n_windows: windows.len(),
            n_speeches: windows.iter().map(|w| w.speech_ids.len()).sum(),
            windows: windows
                .iter()
                .map(|w| WindowEntry {
                    index: w.index,
                    label: w.label.clone(),
                    start: w.start,
                    end: w.end,
                    empty: w.is_empty(),
                    speech_ids: w.speech_ids.clone(),
                })
                .collect(),
        }
    }

    pub fn time_windows(&self) -> Vec<TimeWindow> {
        self.windows
            .iter()
            .map(|w| TimeWindow {
                index: w.index,
                label: w.label.clone(),
                start: w.start,
                end: w.end,
                speech_ids: w.speech_ids.clone(),
            })
            .collect()
    }
}

pub fn render_speeches(speeches: &[StoredSpeech]) -> Vec<u8> {
    let mut out = Vec::new();
    for s in speeches {
        serde_json::to_writer(&mut out, s).expect("speech serializes");
        out.push(b'\n');
    }
    out
}

/// The ingested corpus, loaded from `<out>/corpus`.
pub struct CorpusStore {
    pub speeches: Vec<StoredSpeech>,
    pub manifest: WindowManifest,
    pub preprocess: PreprocessConfig,
}

impl CorpusStore {
    pub fn load(out_dir: &Path) -> AppResult<Self> {
        let dir = out_dir.join(CORPUS);
        require(&[dir.join(SPEECHES_FILE), dir.join(WINDOWS_FILE), dir.join(PREPROCESS_FILE)], "dyntopic ingest")?;
        let path = dir.join(SPEECHES_FILE);
        let text = read_to_string(&path)?;
        let speeches = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| AppError::input(&path, format!("line {}: {e}", i + 1)))
            })
            .collect::<AppResult<Vec<StoredSpeech>>>()?;
        let manifest = read_json(&dir.join(WINDOWS_FILE))?;
        let preprocess: PreprocessJson = read_json(&dir.join(PREPROCESS_FILE))?;
        Ok(CorpusStore {
            speeches,
            manifest,
            preprocess: preprocess.into(),
        })
    }

    pub fn corpus(&self) -> Vec<Speech> {
        self.speeches.iter().map(StoredSpeech::speech).collect()
    }

    pub fn token_lists(&self) -> Vec<Vec<String>> {
        self.speeches.iter().map(|s| s.tokens.clone()).collect()
    }
}

/// Fail with the list of missing files and the command that produces them.
pub fn require(paths: &[PathBuf], producer: &str) -> AppResult<()> {
    let missing: Vec<String> = paths.iter().filter(|p| !p.exists()).map(|p| p.display().to_string()).collect();
    if missing.is_empty() {
        return Ok(());
    }
    Err(AppError::Usage(format!(
        "missing inputs: {} (run `{producer}` first)",
        missing.join(", ")
    )))
}

/// Window models in `<out>/window-models`, ordered by window index.
pub fn load_window_models(out_dir: &Path) -> AppResult<Vec<WindowTopicModel>> {
    let dir = out_dir.join(WINDOW_MODELS);
    if !dir.is_dir() {
        return Err(AppError::Usage(format!(
            "no window models: {} does not exist (run `dyntopic window-model` first)",
            dir.display()
        )));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| AppError::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("window-") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AppError::Usage(format!("no window models in {}", dir.display())));
    }
    let mut models = files
        .iter()
        .map(|p| {
            read_json::<WindowModelJson>(p)?
                .into_model()
                .map_err(|m| AppError::input(p, m))
        })
        .collect::<AppResult<Vec<_>>>()?;
    models.sort_by_key(|m| m.window_index);
    Ok(models)
}
