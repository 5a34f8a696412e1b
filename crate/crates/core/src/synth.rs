//! Seeded synthetic corpora with planted themes, burst windows and speaker
//! affinities. The generator records its plant so that downstream models can
//! be scored against it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Granularity, Speech};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};

const SYLLABLES: [&str; 16] = [
    "ba", "de", "fi", "go", "ku", "la", "me", "ni", "po", "ru", "sa", "te", "vi", "wo", "xa", "zu",
];

/// Pseudo-word number `i`: three syllables, unique for `i < 4096`.
pub fn pseudo_word(i: usize) -> String {
    let mut s = String::new();
    let mut x = i;
    for _ in 0..3 {
        s.push_str(SYLLABLES[x % 16]);
        x /= 16;
    }
    s
}

/// A theme and the windows in which it is discussed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThemePlan {
    pub active_windows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub granularity: Granularity,
    pub n_windows: usize,
    pub themes: Vec<ThemePlan>,
    /// Speeches per theme per active window.
    pub docs_per_theme: usize,
    pub theme_vocabulary: usize,
    /// Theme tokens per speech.
    pub words_per_doc: usize,
    /// Exponent of the within-theme Zipf word distribution.
    pub zipf_exponent: f64,
    pub noise_vocabulary: usize,
    /// Noise tokens per speech, drawn uniformly from the noise vocabulary.
    pub noise_per_doc: usize,
    /// Procedural words shared by all themes.
    pub generic_vocabulary: usize,
    /// Probability that a given generic word occurs in a speech (one to three times).
    pub generic_rate: f64,
    pub loyal_speakers_per_theme: usize,
    pub generalist_speakers: usize,
    /// Probability that a speech is given by a generalist.
    pub generalist_share: f64,
}

impl Default for SynthConfig {
    /// Three themes over twelve quarters, the third active only in windows 8 to 10.
    fn default() -> Self {
        let all: Vec<usize> = (0..12).collect();
        SynthConfig {
            seed: 1,
            start: NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date"),
            granularity: Granularity::Quarter,
            n_windows: 12,
            themes: alloc::vec![
                ThemePlan { active_windows: all.clone() },
                ThemePlan { active_windows: all },
                ThemePlan { active_windows: alloc::vec![8, 9, 10] },
            ],
            docs_per_theme: 40,
            theme_vocabulary: 15,
            words_per_doc: 60,
            zipf_exponent: 0.8,
            noise_vocabulary: 200,
            noise_per_doc: 6,
            generic_vocabulary: 4,
            generic_rate: 0.4,
            loyal_speakers_per_theme: 3,
            generalist_speakers: 3,
            generalist_share: 0.2,
        }
    }
}

impl SynthConfig {
    /// One window with `g` themes.
    pub fn single_window(g: usize, seed: u64) -> Self {
        SynthConfig {
            seed,
            n_windows: 1,
            themes: (0..g).map(|_| ThemePlan { active_windows: alloc::vec![0] }).collect(),
            docs_per_theme: 60,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.themes.is_empty() || self.n_windows == 0 {
            return Err(Error::Parameter("need at least one theme and one window".into()));
        }
        if self.theme_vocabulary == 0 || self.words_per_doc == 0 || self.docs_per_theme == 0 {
            return Err(Error::Parameter("theme vocabulary, words and documents must be positive".into()));
        }
        if self.noise_per_doc > 0 && self.noise_vocabulary == 0 {
            return Err(Error::Parameter("noise tokens requested without a noise vocabulary".into()));
        }
        let words = self.themes.len() * self.theme_vocabulary + self.noise_vocabulary + self.generic_vocabulary;
        if words > 4096 {
            return Err(Error::Parameter(format!("{words} distinct words requested, at most 4096 available")));
        }
        if self.loyal_speakers_per_theme == 0 && self.generalist_speakers == 0 {
            return Err(Error::Parameter("no speakers".into()));
        }
        if !(0.0..=1.0).contains(&self.generic_rate) {
            return Err(Error::Parameter("generic rate must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.generalist_share) {
            return Err(Error::Parameter("generalist share must lie in [0, 1]".into()));
        }
        for (i, theme) in self.themes.iter().enumerate() {
            if theme.active_windows.iter().any(|&w| w >= self.n_windows) {
                return Err(Error::Parameter(format!("theme {i} is active outside the {} windows", self.n_windows)));
            }
        }
        Ok(())
    }
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub speech_theme: BTreeMap<String, usize>,
    pub speech_window: BTreeMap<String, usize>,
    pub theme_vocabulary: Vec<Vec<String>>,
    pub noise_vocabulary: Vec<String>,
    pub generic_vocabulary: Vec<String>,
    pub theme_windows: Vec<Vec<usize>>,
    /// Home theme of each loyal speaker; generalists map to `None`.
    pub speaker_theme: BTreeMap<String, Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub speeches: Vec<Speech>,
    pub truth: GroundTruth,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, table: &[f64]) -> usize {
    let x = rng.random::<f64>() * table[table.len() - 1];
    table.partition_point(|&c| c <= x).min(table.len() - 1)
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let g = config.themes.len();
    let theme_vocabulary: Vec<Vec<String>> = (0..g)
        .map(|t| (0..config.theme_vocabulary).map(|j| pseudo_word(t * config.theme_vocabulary + j)).collect())
        .collect();
    let noise_vocabulary: Vec<String> = (0..config.noise_vocabulary)
        .map(|j| pseudo_word(g * config.theme_vocabulary + j))
        .collect();
    let generic_vocabulary: Vec<String> = (0..config.generic_vocabulary)
        .map(|j| pseudo_word(g * config.theme_vocabulary + config.noise_vocabulary + j))
        .collect();
    let zipf = cumulative((0..config.theme_vocabulary).map(|r| 1.0 / libm::pow((r + 1) as f64, config.zipf_exponent)));

    let mut speaker_theme = BTreeMap::new();
    let loyal: Vec<Vec<String>> = (0..g)
        .map(|t| {
            (0..config.loyal_speakers_per_theme)
                .map(|j| {
                    let id = format!("L{t:02}{j:02}");
                    speaker_theme.insert(id.clone(), Some(t));
                    id
                })
                .collect()
        })
        .collect();
    let generalists: Vec<String> = (0..config.generalist_speakers)
        .map(|j| {
            let id = format!("G{j:02}");
            speaker_theme.insert(id.clone(), None);
            id
        })
        .collect();

    let mut speeches = Vec::new();
    let mut speech_theme = BTreeMap::new();
    let mut speech_window = BTreeMap::new();
    let mut window_start = config.granularity.window_start(config.start);
    for w in 0..config.n_windows {
        let next = config.granularity.next_start(window_start);
        let days = (next - window_start).num_days().max(1);
        for (t, plan) in config.themes.iter().enumerate() {
            if !plan.active_windows.contains(&w) {
                continue;
            }
            for _ in 0..config.docs_per_theme {
                let id = format!("S{:06}", speeches.len());
                let use_generalist = loyal[t].is_empty()
                    || (!generalists.is_empty() && rng.random::<f64>() < config.generalist_share);
                let speaker = if use_generalist {
                    generalists[rng.random_range(0..generalists.len())].clone()
                } else {
                    loyal[t][rng.random_range(0..loyal[t].len())].clone()
                };
                let mut tokens: Vec<&str> = (0..config.words_per_doc)
                    .map(|_| theme_vocabulary[t][draw(&mut rng, &zipf)].as_str())
                    .collect();
                for _ in 0..config.noise_per_doc {
                    let word = noise_vocabulary[rng.random_range(0..noise_vocabulary.len())].as_str();
                    let at = rng.random_range(0..=tokens.len());
                    tokens.insert(at, word);
                }
                for word in &generic_vocabulary {
                    if rng.random::<f64>() < config.generic_rate {
                        for _ in 0..rng.random_range(1..=3) {
                            let at = rng.random_range(0..=tokens.len());
                            tokens.insert(at, word.as_str());
                        }
                    }
                }
                let text = tokens
                    .chunks(12)
                    .map(|c| c.join(" "))
                    .collect::<Vec<_>>()
                    .join(". ");
                let date = window_start + chrono::Duration::days(rng.random_range(0..days));
                speech_theme.insert(id.clone(), t);
                speech_window.insert(id.clone(), w);
                speeches.push(Speech {
                    id,
                    date,
                    speaker_name: Some(format!("Speaker {speaker}")),
                    speaker_id: speaker,
                    text: text + ".",
                });
            }
        }
        window_start = next;
    }
    speeches.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.id.cmp(&b.id)));
    Ok(SynthCorpus {
        speeches,
        truth: GroundTruth {
            speech_theme,
            speech_window,
            theme_vocabulary,
            noise_vocabulary,
            generic_vocabulary,
            theme_windows: config.themes.iter().map(|p| p.active_windows.clone()).collect(),
            speaker_theme,
        },
    })
}

/// `A = W H` from random sparse non-negative factors: entries are `U(0, 1)`
/// kept with probability `density`.
pub fn planted_factors(n: usize, m: usize, k: usize, density: f64, seed: u64) -> Result<(CsrMatrix, DenseMatrix, DenseMatrix)> {
    if n == 0 || m == 0 || k == 0 || !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!("invalid planted factor shape {n}x{m}, k = {k}, density {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factor = |rows: usize, cols: usize| {
        let mut f = DenseMatrix::zeros(rows, cols);
        for x in f.as_mut_slice() {
            if rng.random::<f64>() < density {
                *x = rng.random::<f64>();
            }
        }
        f
    };
    let w = factor(n, k);
    let h = factor(k, m);
    let a = CsrMatrix::from_dense(&w.matmul(&h)?);
    Ok((a, w, h))
}

/// Fraction of items whose cluster's majority label equals their own label.
pub fn purity(clusters: &[usize], labels: &[usize]) -> f64 {
    if clusters.is_empty() {
        return 0.0;
    }
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&c, &l) in clusters.iter().zip(labels) {
        *table.entry(c).or_default().entry(l).or_insert(0) += 1;
    }
    let majority: usize = table.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    majority as f64 / clusters.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_distinct_and_alphabetic() {
        let words: alloc::collections::BTreeSet<String> = (0..4096).map(pseudo_word).collect();
        assert_eq!(words.len(), 4096);
        assert!(words.iter().all(|w| w.len() == 6 && w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn plant_matches_config() {
        let cfg = SynthConfig::default();
        let corpus = generate(&cfg).unwrap();
        assert_eq!(corpus.speeches.len(), 40 * (12 + 12 + 3));
        let burst: alloc::collections::BTreeSet<usize> = corpus
            .truth
            .speech_theme
            .iter()
            .filter(|(_, &t)| t == 2)
            .map(|(id, _)| corpus.truth.speech_window[id])
            .collect();
        assert_eq!(burst.into_iter().collect::<Vec<_>>(), [8, 9, 10]);
        assert_eq!(generate(&cfg).unwrap(), corpus);
        let other = generate(&SynthConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(other.speeches[0].text, corpus.speeches[0].text);
    }

    #[test]
    fn purity_counts_majorities() {
        assert_eq!(purity(&[0, 0, 1, 1], &[5, 5, 6, 6]), 1.0);
        assert_eq!(purity(&[0, 0, 0, 0], &[5, 5, 6, 6]), 0.5);
    }
}
