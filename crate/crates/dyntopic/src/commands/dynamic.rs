use std::collections::BTreeSet;

use dyntopic_core::coherence::{descriptor_coherence_cv, CooccurrenceIndex};
use dyntopic_core::dynamic::{
    build_topic_document_matrix, fit_dynamic, speaker_contributions, topic_time_series,
};

use super::{csv_bytes, load_space, num, Context};
use crate::error::{AppError, AppResult};
use crate::formats::{to_json, DynamicModelJson, SelectionJson};
use crate::fsutil::Staging;
use crate::store::{load_window_models, CorpusStore, DYNAMIC};

/// Terms shown per dynamic topic in the descriptor table.
pub const TABLE_TERMS: usize = 10;

#[derive(Debug, Clone, clap::Args)]
pub struct DynamicArgs {
    /// Smallest k′ tried.
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest k′ tried.
    #[arg(long)]
    pub k_max: Option<usize>,
}

/// Factorize the stacked window topics and derive series and contributions.
pub fn dynamic_model(ctx: &Context, args: &DynamicArgs) -> AppResult<()> {
    let cfg = &ctx.config;
    let models = load_window_models(&ctx.out_dir)?;
    let store = CorpusStore::load(&ctx.out_dir)?;
    let space = load_space(&ctx.out_dir)?;
    let k_min = args.k_min.unwrap_or(cfg.dynamic.k_min);
    let k_max = args.k_max.unwrap_or(cfg.dynamic.k_max);
    if k_min == 0 || k_min > k_max {
        return Err(AppError::Usage(format!("k′ range [{k_min}, {k_max}] is empty")));
    }
    let b = build_topic_document_matrix(&models, cfg.t_truncation)?;
    let limit = b.n_rows().min(b.n_columns());
    let (k_lo, k_hi) = (k_min.min(limit), k_max.min(limit));
    if (k_lo, k_hi) != (k_min, k_max) {
        log::warn!(
            "k′ range [{k_min}, {k_max}] clamped to [{k_lo}, {k_hi}] for {} window topics and {} terms",
            b.n_rows(),
            b.n_columns()
        );
    }
    let (model, selection) = fit_dynamic(&b, k_lo, k_hi, cfg.t_coherence, &space, &cfg.nmf_config())?;

    let windows = store.manifest.time_windows();
    let series = topic_time_series(&model, &models, &windows)?;
    let corpus = store.corpus();
    let contributions = speaker_contributions(&model, &models, &corpus)?;

    let terms: BTreeSet<String> = model
        .descriptors
        .iter()
        .flat_map(|d| d.terms.iter().take(cfg.t_coherence).map(|(t, _)| t.clone()))
        .collect();
    let index = CooccurrenceIndex::build(&store.token_lists(), cfg.cv_window, Some(&terms))?;
    let cv = descriptor_coherence_cv(&model.descriptors, cfg.t_coherence, &index)?;

    let staging = Staging::new(&ctx.dir(DYNAMIC))?;
    staging.write("model.json", &to_json(&DynamicModelJson::new(&model, cfg.t_truncation)))?;
    staging.write("selection.json", &to_json(&SelectionJson::from(&selection)))?;
    staging.write(
        "k_coherence.csv",
        &csv_bytes(
            &["k", "coherence", "chosen"],
            selection
                .scores
                .iter()
                .map(|&(k, s)| vec![k.to_string(), num(s), (k == selection.chosen_k).to_string()]),
        ),
    )?;
    staging.write(
        "time_series.csv",
        &csv_bytes(
            &["dynamic_topic", "window_label", "speech_count", "weight_sum"],
            series.iter().flat_map(|s| {
                s.per_window.iter().map(move |p| {
                    vec![
                        s.dynamic_topic.to_string(),
                        p.label.clone(),
                        p.speech_count.to_string(),
                        num(p.weight_sum),
                    ]
                })
            }),
        ),
    )?;
    let mut rows = Vec::new();
    for (s, speaker) in contributions.speakers.iter().enumerate() {
        for d in 0..contributions.k_prime {
            rows.push(vec![
                speaker.clone(),
                d.to_string(),
                num(contributions.weight_sum[s][d]),
                contributions.count[s][d].to_string(),
            ]);
        }
    }
    staging.write(
        "contributions.csv",
        &csv_bytes(&["speaker_id", "dynamic_topic", "weight_sum", "count"], rows),
    )?;
    let coherence = model.coherence.as_ref();
    staging.write(
        "descriptors.csv",
        &csv_bytes(
            &["dynamic_topic", "label", "top_terms", "coherence", "frequency"],
            model.descriptors.iter().zip(&series).map(|(d, s)| {
                let top: Vec<&str> = d.term_names().into_iter().take(TABLE_TERMS).collect();
                vec![
                    d.topic_index.to_string(),
                    String::new(),
                    top.join(" "),
                    coherence.and_then(|c| c.score(d.topic_index)).map_or(String::new(), num),
                    s.temporal_frequency.to_string(),
                ]
            }),
        ),
    )?;
    staging.write(
        "coherence_cv.csv",
        &csv_bytes(
            &["dynamic_topic", "c_v"],
            cv.per_topic.iter().map(|&(d, s)| vec![d.to_string(), num(s)]),
        ),
    )?;
    staging.publish()?;
    println!(
        "dynamic-model: k′ = {} from [{k_lo}, {k_hi}] over {} window topics, mean coherence {:.4}",
        model.k_prime,
        b.n_rows(),
        coherence.map_or(f64::NAN, |c| c.model_score)
    );
    Ok(())
}
