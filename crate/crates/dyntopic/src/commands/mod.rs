//! One function per subcommand. Each command stages its output directory and
//! publishes it only after every artifact was written.

mod dynamic;
mod embed;
mod ingest;
mod synth;
mod validate;
mod window;

use std::path::PathBuf;

pub use dynamic::{dynamic_model, DynamicArgs};
pub use embed::{embed, load_space, EmbedArgs};
pub use ingest::{ingest, IngestArgs};
pub use synth::{synth, SynthArgs};
pub use validate::{validate, ValidateArgs};
pub use window::{window_model, WindowArgs};

use crate::config::PipelineConfig;

/// Resolved configuration shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(config: PipelineConfig) -> Self {
        Context {
            out_dir: config.out_dir.clone(),
            config,
        }
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// CSV bytes with a header row.
pub fn csv_bytes<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(&row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

/// Lossless, locale-free float text.
pub fn num(x: f64) -> String {
    format!("{x}")
}
