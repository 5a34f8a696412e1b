//! Reading speeches and auxiliary word lists from disk.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use dyntopic_core::corpus::{prepare_corpus, Speech};
use dyntopic_core::validation::TaxonomyEntry;
use serde_json::Value;

use crate::error::{AppError, AppResult};
use crate::fsutil::read_to_string;

const FIELDS: [&str; 5] = ["id", "date", "speaker_id", "speaker_name", "text"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// Guess from the file extension; anything but `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        }
    }
}

/// Parse an ISO-8601 date, accepting a full timestamp and keeping its date.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.date_naive());
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.date())
}

struct RawRecord {
    fields: [Option<String>; 5],
}

fn build_speech(path: &Path, record: usize, line: u64, raw: RawRecord) -> AppResult<Speech> {
    let at = |msg: String| AppError::input(path, format!("record {record} (line {line}): {msg}"));
    let [id, date, speaker_id, speaker_name, text] = raw.fields;
    let require = |v: Option<String>, name: &str| -> AppResult<String> {
        match v {
            Some(s) if !s.trim().is_empty() => Ok(s),
            _ => Err(at(format!("missing `{name}`"))),
        }
    };
    let id = require(id, "id")?.trim().to_string();
    let date_raw = require(date, "date")?;
    let speaker_id = require(speaker_id, "speaker_id")?.trim().to_string();
    let text = require(text, "text")?;
    let date = parse_date(&date_raw).ok_or_else(|| at(format!("unparseable date `{date_raw}`")))?;
    Ok(Speech {
        id,
        date,
        speaker_id,
        speaker_name: speaker_name.filter(|s| !s.trim().is_empty()),
        text,
    })
}

fn read_csv(path: &Path) -> AppResult<Vec<Speech>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| AppError::input(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| AppError::input(path, e.to_string()))?
        .clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Ok(Vec::new());
    }
    let column: Vec<Option<usize>> = FIELDS
        .iter()
        .map(|f| headers.iter().position(|h| h.trim() == *f))
        .collect();
    for (name, col) in FIELDS.iter().zip(&column) {
        if col.is_none() && *name != "speaker_name" {
            return Err(AppError::input(path, format!("header lacks column `{name}`")));
        }
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| AppError::input(path, format!("record {}: {e}", i + 1)))?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |c: Option<usize>| c.and_then(|c| row.get(c)).map(str::to_string);
        let raw = RawRecord {
            fields: [
                get(column[0]),
                get(column[1]),
                get(column[2]),
                get(column[3]),
                get(column[4]),
            ],
        };
        out.push(build_speech(path, i + 1, line, raw)?);
    }
    Ok(out)
}

fn json_field(obj: &serde_json::Map<String, Value>, name: &str) -> Option<String> {
    match obj.get(name)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn read_jsonl(path: &Path) -> AppResult<Vec<Speech>> {
    let content = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = out.len() + 1;
        let line_no = i as u64 + 1;
        let value: Value = serde_json::from_str(line)
            .map_err(|e| AppError::input(path, format!("record {record} (line {line_no}): {e}")))?;
        let Value::Object(obj) = value else {
            return Err(AppError::input(
                path,
                format!("record {record} (line {line_no}): expected a JSON object"),
            ));
        };
        let raw = RawRecord {
            fields: FIELDS.map(|f| json_field(&obj, f)),
        };
        out.push(build_speech(path, record, line_no, raw)?);
    }
    Ok(out)
}

/// Read one input file without corpus-level checks.
pub fn read_records(path: &Path, format: InputFormat) -> AppResult<Vec<Speech>> {
    if !path.is_file() {
        return Err(AppError::input(path, "no such file"));
    }
    match format {
        InputFormat::Csv => read_csv(path),
        InputFormat::Jsonl => read_jsonl(path),
    }
}

/// Read and validate a corpus spread over one or more files. The result is
/// sorted by date with file order breaking ties.
pub fn ingest(paths: &[(&Path, InputFormat)]) -> AppResult<Vec<Speech>> {
    let mut all = Vec::new();
    for (path, format) in paths {
        all.extend(read_records(path, *format)?);
    }
    if all.is_empty() {
        let names: Vec<String> = paths.iter().map(|(p, _)| p.display().to_string()).collect();
        return Err(AppError::Usage(format!("no records in {}", names.join(", "))));
    }
    prepare_corpus(all).map_err(|e| match paths {
        [(p, _)] => AppError::input(p, e.to_string()),
        _ => AppError::Model(e),
    })
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim_end_matches(['\r', '\n']);
        (!l.trim().is_empty()).then_some((i + 1, l))
    })
}

/// One term per line; `#` starts a comment. Terms are lowercased.
pub fn read_word_list(path: &Path) -> AppResult<BTreeSet<String>> {
    let text = read_to_string(path)?;
    Ok(content_lines(&text).map(|(_, l)| l.trim().to_lowercase()).collect())
}

/// Two-column TSV `surface<TAB>lemma`.
pub fn read_lemma_table(path: &Path) -> AppResult<BTreeMap<String, String>> {
    let text = read_to_string(path)?;
    let mut table = BTreeMap::new();
    for (line, l) in content_lines(&text) {
        let cols: Vec<&str> = l.split('\t').map(str::trim).collect();
        match cols.as_slice() {
            [surface, lemma] if !surface.is_empty() && !lemma.is_empty() => {
                table.insert(surface.to_lowercase(), lemma.to_lowercase());
            }
            _ => {
                return Err(AppError::input(
                    path,
                    format!("line {line}: expected `surface<TAB>lemma`"),
                ))
            }
        }
    }
    Ok(table)
}

/// TSV `code<TAB>title<TAB>description`. A first line starting with `code`
/// is taken as a header.
pub fn read_taxonomy(path: &Path) -> AppResult<Vec<TaxonomyEntry>> {
    let text = read_to_string(path)?;
    let mut entries = Vec::new();
    let mut codes = BTreeSet::new();
    for (line, l) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))) {
        if l.trim().is_empty() || l.starts_with('#') || (line == 1 && l.starts_with("code\t")) {
            continue;
        }
        let cols: Vec<&str> = l.splitn(3, '\t').collect();
        if cols.len() < 2 || cols[0].trim().is_empty() {
            return Err(AppError::input(
                path,
                format!("line {line}: expected `code<TAB>title<TAB>description`"),
            ));
        }
        let code = cols[0].trim().to_string();
        if !codes.insert(code.clone()) {
            return Err(AppError::input(path, format!("line {line}: duplicate code `{code}`")));
        }
        entries.push(TaxonomyEntry {
            code,
            title: cols[1].trim().to_string(),
            description: cols.get(2).map_or(String::new(), |d| d.trim().to_string()),
        });
    }
    if entries.is_empty() {
        return Err(AppError::input(path, "no taxonomy entries"));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dates_accept_timestamps() {
        let d = NaiveDate::from_ymd_opt(1999, 7, 15).unwrap();
        assert_eq!(parse_date("1999-07-15"), Some(d));
        assert_eq!(parse_date("1999-07-15T10:30:00Z"), Some(d));
        assert_eq!(parse_date("1999-07-15 10:30:00"), Some(d));
        assert_eq!(parse_date("15/07/1999"), None);
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let lines: Vec<_> = content_lines("# head\nthe\n\nof # trailing\n").collect();
        assert_eq!(lines, vec![(2, "the"), (4, "of ")]);
    }
}
