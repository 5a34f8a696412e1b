use std::path::PathBuf;

use dyntopic_core::corpus::{partition_windows, preprocess, Granularity};

use super::Context;
use crate::error::{AppError, AppResult};
use crate::formats::{to_json, PreprocessJson};
use crate::fsutil::Staging;
use crate::ingest::{ingest as read_corpus, InputFormat};
use crate::store::{render_speeches, StoredSpeech, WindowManifest, CORPUS, PREPROCESS_FILE, SPEECHES_FILE, WINDOWS_FILE};

#[derive(Debug, Clone, clap::Args)]
pub struct IngestArgs {
    /// CSV or JSONL files; defaults to `inputs` from the config.
    pub inputs: Vec<PathBuf>,
    /// Input format; guessed from each file's extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Window length: month, quarter or year.
    #[arg(long)]
    pub granularity: Option<String>,
}

/// Read, preprocess and window the corpus.
pub fn ingest(ctx: &Context, args: &IngestArgs) -> AppResult<()> {
    let inputs = if args.inputs.is_empty() {
        &ctx.config.inputs
    } else {
        &args.inputs
    };
    if inputs.is_empty() {
        return Err(AppError::Usage("no input files given on the command line or in the config".into()));
    }
    let granularity = match &args.granularity {
        Some(g) => Granularity::parse(g)
            .ok_or_else(|| AppError::Usage(format!("unknown granularity `{g}`, expected month, quarter or year")))?,
        None => ctx.config.granularity().map_err(AppError::Usage)?,
    };
    let preprocess_config = ctx.config.preprocess_config()?;
    let sources: Vec<_> = inputs
        .iter()
        .map(|p| (p.as_path(), args.format.unwrap_or_else(|| InputFormat::from_path(p))))
        .collect();
    let speeches = read_corpus(&sources)?;
    let windows = partition_windows(&speeches, granularity);
    let stored: Vec<StoredSpeech> = speeches
        .iter()
        .map(|s| StoredSpeech {
            id: s.id.clone(),
            date: s.date,
            speaker_id: s.speaker_id.clone(),
            speaker_name: s.speaker_name.clone(),
            text: s.text.clone(),
            tokens: preprocess(s, &preprocess_config),
        })
        .collect();
    let manifest = WindowManifest::new(granularity, &windows);
    let empty = windows.iter().filter(|w| w.is_empty()).count();
    if empty > 0 {
        log::warn!("{empty} of {} windows contain no speeches", windows.len());
    }

    let staging = Staging::new(&ctx.dir(CORPUS))?;
    staging.write(SPEECHES_FILE, &render_speeches(&stored))?;
    staging.write(WINDOWS_FILE, &to_json(&manifest))?;
    staging.write(PREPROCESS_FILE, &to_json(&PreprocessJson::from(&preprocess_config)))?;
    staging.publish()?;
    println!(
        "ingest: {} speeches in {} {} windows ({} to {})",
        stored.len(),
        windows.len(),
        granularity.as_str(),
        windows.first().map_or("", |w| w.label.as_str()),
        windows.last().map_or("", |w| w.label.as_str()),
    );
    Ok(())
}
