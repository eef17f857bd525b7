//! Plain-text edge lists: one `src dst` pair per line, decimal, separated by
//! whitespace. `#` starts a comment that runs to the end of the line.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct EdgeListError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>, EdgeListError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut fields = line.split_whitespace();
        let Some(first) = fields.next() else {
            continue;
        };
        let err = |reason: String| EdgeListError { line: i + 1, reason };
        let second = fields
            .next()
            .ok_or_else(|| err("expected two node indices".into()))?;
        if let Some(extra) = fields.next() {
            return Err(err(format!("unexpected trailing field {extra:?}")));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| err(format!("bad node index {s:?}: {e}")))
        };
        edges.push((parse(first)?, parse(second)?));
    }
    Ok(edges)
}

pub fn format_edge_list(edges: impl IntoIterator<Item = (usize, usize)>) -> String {
    let mut out = String::new();
    for (u, v) in edges {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# header\n0 1\n\n  2\t3  # trailing\n";
        assert_eq!(parse_edge_list(text).unwrap(), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(parse_edge_list("0 1\n5\n").unwrap_err().line, 2);
        assert!(parse_edge_list("0 1 2").is_err());
        assert!(parse_edge_list("0 -1").is_err());
        assert!(parse_edge_list("a b").is_err());
    }

    #[test]
    fn format_then_parse() {
        let edges = vec![(0, 1), (10, 3)];
        assert_eq!(parse_edge_list(&format_edge_list(edges.clone())).unwrap(), edges);
    }
}
