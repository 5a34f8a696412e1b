use std::path::PathBuf;

use dyntopic_core::validation::{cluster_topics, match_taxonomy, subject_documents, term_stability};

use super::{csv_bytes, num, Context};
use crate::error::{AppError, AppResult};
use crate::formats::{read_json, to_json, DendrogramJson, DynamicModelJson};
use crate::fsutil::Staging;
use crate::ingest::read_taxonomy;
use crate::store::{load_window_models, require, CorpusStore, DYNAMIC, VALIDATION};

#[derive(Debug, Clone, clap::Args)]
pub struct ValidateArgs {
    /// Coded subject list (`code<TAB>title<TAB>description`) to match against.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Code depth used to build subject documents (1 = top level).
    #[arg(long)]
    pub level: Option<usize>,
    /// Descriptor terms compared by the stability metric.
    #[arg(long, default_value_t = 10)]
    pub stability_terms: usize,
}

/// Term stability, topic clustering and optional taxonomy matching.
pub fn validate(ctx: &Context, args: &ValidateArgs) -> AppResult<()> {
    let cfg = &ctx.config;
    let model_path = ctx.dir(DYNAMIC).join("model.json");
    require(std::slice::from_ref(&model_path), "dyntopic dynamic-model")?;
    let model = read_json::<DynamicModelJson>(&model_path)?
        .into_model()
        .map_err(|m| AppError::input(&model_path, m))?;
    let models = load_window_models(&ctx.out_dir)?;
    if args.stability_terms == 0 {
        return Err(AppError::Usage("--stability-terms must be at least 1".into()));
    }

    let staging = Staging::new(&ctx.dir(VALIDATION))?;
    let stability = term_stability(&model, &models, args.stability_terms)?;
    staging.write(
        "stability.csv",
        &csv_bytes(
            &["dynamic_topic", "mean_jaccard", "n_members"],
            stability.iter().map(|r| {
                vec![
                    r.dynamic_topic.to_string(),
                    r.mean_jaccard.map_or(String::new(), num),
                    r.n_members.to_string(),
                ]
            }),
        ),
    )?;

    if model.k_prime >= 2 {
        let dendrogram = cluster_topics(&model)?;
        staging.write("dendrogram.json", &to_json(&DendrogramJson::from(&dendrogram)))?;
        staging.write("dendrogram.nwk", format!("{}\n", dendrogram.newick()).as_bytes())?;
    } else {
        log::warn!("clustering skipped: a single dynamic topic has no dendrogram");
    }

    let taxonomy = args.taxonomy.clone().or_else(|| cfg.taxonomy.clone());
    let mut matched = None;
    match taxonomy {
        None => log::info!("no taxonomy supplied, taxonomy matching skipped"),
        Some(path) => {
            let entries = read_taxonomy(&path)?;
            let level = args.level.unwrap_or(cfg.taxonomy_level);
            let (subjects, empty) = subject_documents(&entries, level).map_err(|e| AppError::input(&path, e.to_string()))?;
            for code in &empty {
                log::warn!("subject {code} has no description text at level {level}");
            }
            let preprocess = CorpusStore::load(&ctx.out_dir)?.preprocess;
            let matching = match_taxonomy(&model, &subjects, cfg.t_truncation, &preprocess)?;
            for code in &matching.skipped {
                log::warn!("subject {code} shares no usable term with the topic descriptors");
            }
            staging.write(
                "taxonomy_matches.csv",
                &csv_bytes(
                    &["code", "title", "dynamic_topic", "similarity"],
                    matching.matches.iter().map(|m| {
                        vec![m.code.clone(), m.title.clone(), m.dynamic_topic.to_string(), num(m.similarity)]
                    }),
                ),
            )?;
            matched = Some(matching.matches.len());
        }
    }
    staging.publish()?;
    let scored: Vec<f64> = stability.iter().filter_map(|r| r.mean_jaccard).collect();
    let mean = if scored.is_empty() {
        f64::NAN
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    println!(
        "validate: mean term stability {:.4} over {} topics{}",
        mean,
        scored.len(),
        matched.map_or(String::new(), |n| format!(", {n} subjects matched"))
    );
    Ok(())
}
