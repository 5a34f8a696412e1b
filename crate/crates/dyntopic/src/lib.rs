//! File formats, ingestion and the `dyntopic` command line on top of
//! `dyntopic-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod fsutil;
pub mod ingest;
pub mod report;
pub mod store;
pub mod w2v;

pub use error::{AppError, AppResult};
