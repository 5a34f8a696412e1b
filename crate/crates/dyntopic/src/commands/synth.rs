use std::collections::BTreeMap;
use std::fmt::Write as _;

use dyntopic_core::synth::{generate, SynthConfig, ThemePlan};
use serde::Serialize;

use super::{csv_bytes, Context};
use crate::error::{AppError, AppResult};
use crate::formats::to_json;
use crate::ingest::parse_date;
use crate::fsutil::Staging;
use crate::store::SYNTH;

#[derive(Debug, Clone, clap::Args)]
pub struct SynthArgs {
    /// Number of planted themes.
    #[arg(long, default_value_t = 3)]
    pub themes: usize,
    /// Number of quarterly windows.
    #[arg(long, default_value_t = 12)]
    pub windows: usize,
    /// Inclusive 0-based window range `A-B` in which the last theme is
    /// active; `none` keeps every theme active throughout.
    #[arg(long, default_value = "8-10")]
    pub burst: String,
    /// Speeches per active theme and window.
    #[arg(long, default_value_t = 40)]
    pub docs_per_theme: usize,
    /// First day of the first window (ISO date, aligned to a quarter).
    #[arg(long, default_value = "2010-01-01")]
    pub start: String,
}

#[derive(Serialize)]
struct PlantTheme {
    theme: usize,
    active_windows: Vec<usize>,
    vocabulary: Vec<String>,
}

#[derive(Serialize)]
struct Plant {
    seed: u64,
    start: String,
    granularity: String,
    n_windows: usize,
    themes: Vec<PlantTheme>,
    noise_vocabulary: Vec<String>,
    generic_vocabulary: Vec<String>,
    speaker_theme: BTreeMap<String, Option<usize>>,
    speech_theme: BTreeMap<String, usize>,
    speech_window: BTreeMap<String, usize>,
}

fn parse_burst(s: &str, n_windows: usize) -> AppResult<Option<Vec<usize>>> {
    if s == "none" {
        return Ok(None);
    }
    let bad = || AppError::Usage(format!("--burst expects `A-B` or `none`, got `{s}`"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b || b >= n_windows {
        return Err(AppError::Usage(format!("burst {a}-{b} does not fit {n_windows} windows")));
    }
    Ok(Some((a..=b).collect()))
}

pub fn synth_config(args: &SynthArgs, seed: u64) -> AppResult<SynthConfig> {
    let all: Vec<usize> = (0..args.windows).collect();
    let mut themes: Vec<ThemePlan> = (0..args.themes)
        .map(|_| ThemePlan {
            active_windows: all.clone(),
        })
        .collect();
    if let Some(burst) = parse_burst(&args.burst, args.windows)? {
        if args.themes < 2 {
            return Err(AppError::Usage("a burst theme needs at least 2 themes".into()));
        }
        themes.last_mut().expect("themes").active_windows = burst;
    }
    let start = parse_date(&args.start)
        .ok_or_else(|| AppError::Usage(format!("--start expects an ISO date, got `{}`", args.start)))?;
    let config = SynthConfig {
        seed,
        start,
        n_windows: args.windows,
        themes,
        docs_per_theme: args.docs_per_theme,
        ..SynthConfig::default()
    };
    config.validate()?;
    Ok(config)
}

/// Generate a planted corpus with its ground truth and a matching taxonomy.
pub fn synth(ctx: &Context, args: &SynthArgs) -> AppResult<()> {
    let config = synth_config(args, ctx.config.seed)?;
    let corpus = generate(&config)?;
    let truth = &corpus.truth;
    let staging = Staging::new(&ctx.dir(SYNTH))?;

    let rows = corpus.speeches.iter().map(|s| {
        vec![
            s.id.clone(),
            s.date.to_string(),
            s.speaker_id.clone(),
            s.speaker_name.clone().unwrap_or_default(),
            s.text.clone(),
        ]
    });
    staging.write(
        "corpus.csv",
        &csv_bytes(&["id", "date", "speaker_id", "speaker_name", "text"], rows),
    )?;

    let plant = Plant {
        seed: config.seed,
        start: config.start.to_string(),
        granularity: config.granularity.as_str().to_string(),
        n_windows: config.n_windows,
        themes: truth
            .theme_vocabulary
            .iter()
            .zip(&truth.theme_windows)
            .enumerate()
            .map(|(theme, (vocabulary, windows))| PlantTheme {
                theme,
                active_windows: windows.clone(),
                vocabulary: vocabulary.clone(),
            })
            .collect(),
        noise_vocabulary: truth.noise_vocabulary.clone(),
        generic_vocabulary: truth.generic_vocabulary.clone(),
        speaker_theme: truth.speaker_theme.clone(),
        speech_theme: truth.speech_theme.clone(),
        speech_window: truth.speech_window.clone(),
    };
    staging.write("plant.json", &to_json(&plant))?;

    let mut taxonomy = String::from("code\ttitle\tdescription\n");
    for (i, vocabulary) in truth.theme_vocabulary.iter().enumerate() {
        writeln!(taxonomy, "{}\ttheme {i}\t{}", i + 1, vocabulary.join(" ")).expect("write to string");
    }
    staging.write("taxonomy.tsv", taxonomy.as_bytes())?;
    staging.publish()?;
    println!(
        "synth: {} speeches, {} themes, {} windows -> {}",
        corpus.speeches.len(),
        config.themes.len(),
        config.n_windows,
        ctx.dir(SYNTH).display()
    );
    Ok(())
}
