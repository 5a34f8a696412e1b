use std::collections::BTreeMap;

use dyntopic_core::corpus::{DocumentTermMatrix, TimeWindow, Weighting};
use dyntopic_core::dynamic::{fit_window_model, WindowModelConfig, WindowTopicModel};
use rayon::prelude::*;

use super::{csv_bytes, load_space, num, Context};
use crate::error::{AppError, AppResult};
use crate::formats::{to_json, MatrixJson, WindowModelJson};
use crate::fsutil::Staging;
use crate::store::{matrix_file, window_model_file, CorpusStore, WINDOW_MODELS};

#[derive(Debug, Clone, clap::Args)]
pub struct WindowArgs {
    /// Smallest k tried per window.
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest k tried per window.
    #[arg(long)]
    pub k_max: Option<usize>,
}

enum Outcome {
    Fitted(Box<(DocumentTermMatrix, WindowTopicModel)>),
    Skipped(String),
}

fn fit_one(
    window: &TimeWindow,
    tokens: &BTreeMap<&str, &[String]>,
    min_df: usize,
    space: &dyntopic_core::embeddings::EmbeddingSpace,
    config: &WindowModelConfig,
) -> AppResult<Outcome> {
    let docs: Vec<(String, Vec<String>)> = window
        .speech_ids
        .iter()
        .map(|id| (id.clone(), tokens.get(id.as_str()).map_or_else(Vec::new, |t| t.to_vec())))
        .collect();
    let matrix = DocumentTermMatrix::from_tokens(&docs, min_df, Weighting::TfidfL2)?;
    if matrix.n_docs() < 2 || matrix.n_terms() < 2 {
        return Ok(Outcome::Skipped(format!(
            "window {} skipped: {} usable documents and {} terms, need at least 2 of each",
            window.label,
            matrix.n_docs(),
            matrix.n_terms()
        )));
    }
    let model = fit_window_model(window, &matrix, space, config)?;
    Ok(Outcome::Fitted(Box::new((matrix, model))))
}

/// Fit one coherence-selected NMF model per non-empty window.
pub fn window_model(ctx: &Context, args: &WindowArgs) -> AppResult<()> {
    let store = CorpusStore::load(&ctx.out_dir)?;
    let space = load_space(&ctx.out_dir)?;
    let cfg = &ctx.config;
    let config = WindowModelConfig {
        k_min: args.k_min.unwrap_or(cfg.window.k_min),
        k_max: args.k_max.unwrap_or(cfg.window.k_max),
        t_coherence: cfg.t_coherence,
        descriptor_terms: cfg.t_truncation,
        nmf: cfg.nmf_config(),
    };
    if config.k_min == 0 || config.k_min > config.k_max {
        return Err(AppError::Usage(format!("k range [{}, {}] is empty", config.k_min, config.k_max)));
    }
    let tokens: BTreeMap<&str, &[String]> =
        store.speeches.iter().map(|s| (s.id.as_str(), s.tokens.as_slice())).collect();
    let min_df = store.preprocess.min_document_frequency;
    let windows: Vec<TimeWindow> = store.manifest.time_windows().into_iter().filter(|w| !w.is_empty()).collect();

    // collected in window order regardless of scheduling
    let outcomes: Vec<AppResult<Outcome>> = windows
        .par_iter()
        .map(|w| fit_one(w, &tokens, min_df, &space, &config))
        .collect();

    let staging = Staging::new(&ctx.dir(WINDOW_MODELS))?;
    let mut chosen = Vec::new();
    let mut curves = Vec::new();
    for outcome in outcomes {
        let (matrix, model) = match outcome? {
            Outcome::Fitted(fit) => *fit,
            Outcome::Skipped(msg) => {
                log::warn!("{msg}");
                continue;
            }
        };
        let i = model.window_index;
        staging.write(&matrix_file(i), &to_json(&MatrixJson::from(&matrix)))?;
        staging.write(&window_model_file(i), &to_json(&WindowModelJson::from(&model)))?;
        let coherence = model.coherence.as_ref().map_or(f64::NAN, |c| c.model_score);
        chosen.push(vec![
            i.to_string(),
            model.label.clone(),
            matrix.n_docs().to_string(),
            matrix.n_terms().to_string(),
            model.chosen_k().to_string(),
            num(coherence),
        ]);
        if let Some(sel) = &model.selection {
            for &(k, score) in &sel.scores {
                curves.push(vec![
                    i.to_string(),
                    model.label.clone(),
                    k.to_string(),
                    num(score),
                    (k == sel.chosen_k).to_string(),
                ]);
            }
        }
    }
    if chosen.is_empty() {
        return Err(AppError::Usage("no window had enough documents to model".into()));
    }
    let n = chosen.len();
    let total_topics: usize = chosen.iter().map(|r| r[4].parse::<usize>().expect("k")).sum();
    staging.write(
        "chosen_k.csv",
        &csv_bytes(&["window_index", "window_label", "n_docs", "n_terms", "chosen_k", "coherence"], chosen),
    )?;
    staging.write(
        "k_coherence.csv",
        &csv_bytes(&["window_index", "window_label", "k", "coherence", "chosen"], curves),
    )?;
    staging.publish()?;
    println!("window-model: {n} windows modeled, {total_topics} window topics");
    Ok(())
}
