use std::path::{Path, PathBuf};

use dyntopic_core::embeddings::{train_embeddings, EmbeddingSpace};
use serde::Serialize;

use super::Context;
use crate::config::EmbeddingSource;
use crate::error::{AppError, AppResult};
use crate::formats::to_json;
use crate::fsutil::Staging;
use crate::store::{CorpusStore, EMBEDDINGS, VECTORS_FILE};
use crate::w2v;

#[derive(Debug, Clone, clap::Args)]
pub struct EmbedArgs {
    /// Use a pretrained word2vec text file instead of training on the corpus.
    #[arg(long)]
    pub load: Option<PathBuf>,
}

#[derive(Serialize)]
struct EmbeddingMeta<'a> {
    trained_on: &'a str,
    dimension: usize,
    terms: usize,
}

/// Train skip-gram vectors on the ingested corpus or import a word2vec file.
pub fn embed(ctx: &Context, args: &EmbedArgs) -> AppResult<()> {
    let load = args.load.clone().or_else(|| match ctx.config.embedding.source {
        EmbeddingSource::Load => ctx.config.embedding.path.clone(),
        EmbeddingSource::Train => None,
    });
    let space = match load {
        Some(path) => w2v::load(&path)?,
        None => {
            let store = CorpusStore::load(&ctx.out_dir)?;
            train_embeddings(&store.token_lists(), &ctx.config.skip_gram())?
        }
    };
    if space.is_empty() {
        return Err(AppError::Usage(
            "embedding space is empty; lower `embedding.min_count` or supply vectors with --load".into(),
        ));
    }
    let staging = Staging::new(&ctx.dir(EMBEDDINGS))?;
    w2v::save(&space, &staging.path(VECTORS_FILE))?;
    let meta = EmbeddingMeta {
        trained_on: &space.trained_on,
        dimension: space.dimension(),
        terms: space.len(),
    };
    staging.write("embedding.json", &to_json(&meta))?;
    staging.publish()?;
    println!("embed: {} terms, dimension {}", space.len(), space.dimension());
    Ok(())
}

/// The embedding space written by `embed`.
pub fn load_space(out_dir: &Path) -> AppResult<EmbeddingSpace> {
    let path = out_dir.join(EMBEDDINGS).join(VECTORS_FILE);
    if !path.exists() {
        return Err(AppError::Usage(format!(
            "no embedding space at {}: run `dyntopic embed` to train one on the corpus, \
             or `dyntopic embed --load <word2vec.txt>` to use pretrained vectors",
            path.display()
        )));
    }
    w2v::load(&path)
}
