//! word2vec text format: a `<count> <dimension>` header, then one
//! `<term> <v1> ... <vd>` line per term.

use std::fmt::Write as _;
use std::path::Path;

use dyntopic_core::embeddings::EmbeddingSpace;

use crate::error::{AppError, AppResult};
use crate::fsutil::{read_to_string, write_atomic};

pub fn parse(text: &str, source: &str) -> Result<EmbeddingSpace, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty file")?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let [count, dim] = head.as_slice() else {
        return Err("line 1: header must be `<vocab_count> <dimension>`".into());
    };
    let count: usize = count.parse().map_err(|_| format!("line 1: bad vocabulary count `{count}`"))?;
    let dim: usize = dim.parse().map_err(|_| format!("line 1: bad dimension `{dim}`"))?;
    let mut entries = Vec::with_capacity(count);
    for (i, line) in lines {
        let n = i + 1;
        let mut parts = line.split_whitespace();
        let term = parts.next().expect("non-blank line");
        let vector = parts
            .map(|v| v.parse::<f64>().map_err(|_| format!("line {n}: bad value `{v}`")))
            .collect::<Result<Vec<f64>, _>>()?;
        if vector.len() != dim {
            return Err(format!(
                "line {n}: `{term}` has {} values, header says {dim}",
                vector.len()
            ));
        }
        entries.push((term.to_string(), vector));
    }
    if entries.len() != count {
        return Err(format!("header announces {count} terms, file has {}", entries.len()));
    }
    EmbeddingSpace::new(dim, entries, source).map_err(|e| e.to_string())
}

pub fn load(path: &Path) -> AppResult<EmbeddingSpace> {
    let text = read_to_string(path)?;
    parse(&text, &format!("loaded from {}", path.display())).map_err(|m| AppError::input(path, m))
}

/// Serialize with shortest round-trip float formatting, in space order.
pub fn render(space: &EmbeddingSpace) -> String {
    let mut out = format!("{} {}\n", space.len(), space.dimension());
    for term in space.terms() {
        out.push_str(term);
        for v in space.get(term).expect("term from the space") {
            write!(out, " {v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn save(space: &EmbeddingSpace, path: &Path) -> AppResult<()> {
    write_atomic(path, render(space).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "2 3\nalpha 1 0 0.5\nbeta -0.25 1e-3 2\n";
        let space = parse(text, "t").unwrap();
        assert_eq!(space.get("beta").unwrap(), &[-0.25, 1e-3, 2.0]);
        assert_eq!(parse(&render(&space), "t").unwrap().get("alpha"), space.get("alpha"));
    }

    #[test]
    fn row_length_mismatch_names_line() {
        let err = parse("2 2\na 1 2\nb 1\n", "t").unwrap_err();
        assert!(err.starts_with("line 3:"), "{err}");
        let err = parse("3 2\na 1 2\nb 1 1\n", "t").unwrap_err();
        assert!(err.contains("announces 3"), "{err}");
    }
}
