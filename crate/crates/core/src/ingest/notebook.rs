//! Code extraction from notebook interchange documents.

use std::path::Path;

use serde_json::Value;

use super::{normalize_newlines, CellPos, IngestError, OriginLine, SourceText};

/// Code cells of a notebook flattened into one analyzable text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotebookCode {
    pub source: SourceText,
    /// Magic/shell/help lines that were dropped, by cell position.
    pub skipped: Vec<CellPos>,
}

/// Cell magics whose body is still ordinary code.
const TRANSPARENT_CELL_MAGICS: &[&str] = &["time", "timeit", "capture", "prun", "debug", "memit"];

/// Reads and flattens the notebook at `path`.
pub fn extract_notebook_code(path: &Path) -> Result<NotebookCode, IngestError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::MalformedNotebook {
        path: display.clone(),
        reason: e.to_string(),
    })?;
    extract_from_json(&display, &text)
}

fn cell_source(cell: &Value, key: &str) -> Option<String> {
    match cell.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => parts
            .iter()
            .map(|p| p.as_str().map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .map(|v| v.concat()),
        _ => None,
    }
}

fn is_line_magic(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('%') || t.starts_with('!') || (t.ends_with('?') && !t.starts_with('#'))
}

/// Flattens notebook JSON `text`; `path` labels the result and errors.
pub fn extract_from_json(path: &str, text: &str) -> Result<NotebookCode, IngestError> {
    let malformed = |reason: String| IngestError::MalformedNotebook {
        path: path.to_string(),
        reason,
    };
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    // nbformat 4 keeps cells at the top level; nbformat 3 nests them in worksheets.
    let (cells, key): (Vec<&Value>, &str) = if let Some(cells) = doc.get("cells") {
        let cells = cells
            .as_array()
            .ok_or_else(|| malformed("`cells` is not a list".into()))?;
        (cells.iter().collect(), "source")
    } else if let Some(sheets) = doc.get("worksheets").and_then(Value::as_array) {
        let cells = sheets
            .iter()
            .filter_map(|s| s.get("cells").and_then(Value::as_array))
            .flatten()
            .collect();
        (cells, "input")
    } else {
        return Err(malformed("no `cells` list".into()));
    };

    let mut out = String::new();
    let mut origin = Vec::new();
    let mut skipped = Vec::new();
    let mut listing_line = 0u32;
    for (index, cell) in cells.iter().enumerate() {
        let kind = cell
            .get("cell_type")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(format!("cell {index} has no cell_type")))?;
        if kind != "code" {
            continue;
        }
        let src = cell_source(cell, key)
            .ok_or_else(|| malformed(format!("cell {index} has no readable source")))?;
        let src = normalize_newlines(&src);
        let lines = src.lines().enumerate();
        let opaque_cell = src.trim_start().starts_with("%%") && {
            let magic = src.trim_start()[2..]
                .split(|c: char| c.is_whitespace())
                .next()
                .unwrap_or("");
            !TRANSPARENT_CELL_MAGICS.contains(&magic)
        };
        for (i, line) in lines {
            listing_line += 1;
            let pos = CellPos {
                cell: index,
                line: i as u32 + 1,
            };
            if opaque_cell || is_line_magic(line) {
                skipped.push(pos);
                continue;
            }
            out.push_str(line);
            out.push('\n');
            origin.push(OriginLine {
                line: listing_line,
                cell: Some(pos),
                substituted: false,
            });
        }
    }
    Ok(NotebookCode {
        source: SourceText {
            path: path.to_string(),
            text: out,
            origin,
        },
        skipped,
    })
}
