//! Project acquisition, file discovery, notebook extraction and
//! syntax-error-tolerant sanitization.

mod notebook;
mod sanitize;

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::diag::{Diagnostic, Stage};

pub use notebook::{extract_from_json, extract_notebook_code, NotebookCode};
pub use sanitize::{parse_module, sanitize_source, Sanitized};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("acquisition of `{input}` failed: {cause}")]
    AcquisitionFailed { input: String, cause: String },
    #[error("malformed notebook {path}: {reason}")]
    MalformedNotebook { path: String, reason: String },
    #[error("{path} is unsalvageable: no parseable lines remain")]
    Unsalvageable { path: String },
    #[error("cannot read {path}: {cause}")]
    Unreadable { path: String, cause: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Local,
    Cloned,
}

/// A checked-out project tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Workspace {
    pub root: PathBuf,
    pub origin: Origin,
    pub repo_name: String,
}

impl Workspace {
    /// Wraps an existing directory without copying it.
    pub fn local(root: &Path) -> Result<Self, IngestError> {
        let fail = |cause: String| IngestError::AcquisitionFailed {
            input: root.display().to_string(),
            cause,
        };
        let root = root.canonicalize().map_err(|e| fail(e.to_string()))?;
        if !root.is_dir() {
            return Err(fail("not a directory".into()));
        }
        let repo_name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .filter(|n| !n.is_empty())
            .unwrap_or_else(|| "root".to_string());
        Ok(Workspace {
            root,
            origin: Origin::Local,
            repo_name,
        })
    }
}

fn looks_like_url(source: &str) -> bool {
    source.contains("://") || source.starts_with("git@")
}

/// Slug of a repository URL: its last path segment without `.git`.
fn repo_slug(url: &str) -> String {
    let trimmed = url.trim_end_matches('/');
    let last = trimmed
        .rsplit(['/', ':'])
        .next()
        .unwrap_or(trimmed);
    let slug = last.strip_suffix(".git").unwrap_or(last);
    if slug.is_empty() {
        "repo".to_string()
    } else {
        slug.to_string()
    }
}

/// Resolves `source` to a workspace: local directories are used in place,
/// repository URLs are shallow-cloned (default branch) under `scratch_dir`.
pub fn acquire(source: &str, scratch_dir: &Path) -> Result<Workspace, IngestError> {
    if !looks_like_url(source) {
        return Workspace::local(Path::new(source));
    }
    let fail = |cause: String| IngestError::AcquisitionFailed {
        input: source.to_string(),
        cause,
    };
    let slug = repo_slug(source);
    std::fs::create_dir_all(scratch_dir).map_err(|e| fail(e.to_string()))?;
    let mut dest = scratch_dir.join(&slug);
    let mut n = 1;
    while dest.exists() {
        dest = scratch_dir.join(format!("{slug}-{n}"));
        n += 1;
    }
    let output = Command::new("git")
        .args(["clone", "--quiet", "--depth", "1", "--single-branch", "--"])
        .arg(source)
        .arg(&dest)
        .env("GIT_TERMINAL_PROMPT", "0")
        .output()
        .map_err(|e| fail(format!("cannot run git: {e}")))?;
    if !output.status.success() {
        return Err(fail(String::from_utf8_lossy(&output.stderr).trim().to_string()));
    }
    let root = dest.canonicalize().map_err(|e| fail(e.to_string()))?;
    Ok(Workspace {
        root,
        origin: Origin::Cloned,
        repo_name: slug,
    })
}

/// Analyzable files of a workspace, as `/`-separated paths relative to its root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FileSet {
    pub source_files: Vec<String>,
    pub notebooks: Vec<String>,
    pub config_files: Vec<String>,
    #[serde(skip)]
    pub skipped: Vec<Diagnostic>,
}

const SKIPPED_DIRS: &[&str] = &["node_modules", "site-packages", "__pycache__"];

fn is_config_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    if lower == ".env" || lower.starts_with(".env.") || lower.ends_with(".env") {
        return true;
    }
    if lower.starts_with("requirements") && lower.ends_with(".txt") {
        return true;
    }
    matches!(
        Path::new(&lower).extension().and_then(|e| e.to_str()),
        Some("yaml" | "yml" | "json" | "toml" | "ini" | "cfg")
    )
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Enumerates Python sources, notebooks and configuration files, skipping
/// hidden and VCS directories.
pub fn discover_files(ws: &Workspace) -> FileSet {
    let mut set = FileSet::default();
    let walker = WalkDir::new(&ws.root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|entry| {
            if entry.depth() == 0 || !entry.file_type().is_dir() {
                return true;
            }
            let name = entry.file_name().to_string_lossy();
            !name.starts_with('.') && !SKIPPED_DIRS.contains(&name.as_ref())
        });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e
                    .path()
                    .map(|p| relative(&ws.root, p))
                    .unwrap_or_default();
                set.skipped
                    .push(Diagnostic::new(path, Stage::Discover, e.to_string()));
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        let rel = relative(&ws.root, entry.path());
        if name.ends_with(".py") {
            set.source_files.push(rel);
        } else if name.ends_with(".ipynb") {
            set.notebooks.push(rel);
        } else if is_config_name(&name) {
            set.config_files.push(rel);
        }
    }
    set.source_files.sort();
    set.notebooks.sort();
    set.config_files.sort();
    set
}

/// Notebook position of an extracted line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellPos {
    /// Index of the cell in the notebook (all cell types counted).
    pub cell: usize,
    /// 1-based line inside the cell.
    pub line: u32,
}

/// Where a line of analyzed text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OriginLine {
    /// 1-based original line. For notebooks, the line in the listing of all
    /// code-cell lines in document order.
    pub line: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellPos>,
    /// Set when sanitization replaced the line's text.
    pub substituted: bool,
}

/// Text to analyze plus a total map from its lines to original positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceText {
    pub path: String,
    pub text: String,
    pub origin: Vec<OriginLine>,
}

impl SourceText {
    /// Identity-mapped text of a plain source file.
    pub fn from_plain(path: impl Into<String>, text: &str) -> Self {
        let text = normalize_newlines(text);
        let count = line_count(&text);
        SourceText {
            path: path.into(),
            origin: (1..=count as u32)
                .map(|line| OriginLine {
                    line,
                    cell: None,
                    substituted: false,
                })
                .collect(),
            text,
        }
    }

    /// Original line for a 1-based line of `text`.
    pub fn original_line(&self, line: usize) -> u32 {
        self.origin
            .get(line.saturating_sub(1))
            .or(self.origin.last())
            .map(|o| o.line)
            .unwrap_or(1)
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.text.lines()
    }
}

/// Reads a plain source file; invalid UTF-8 is replaced, not rejected.
pub fn read_source(ws: &Workspace, rel: &str) -> Result<SourceText, IngestError> {
    let bytes = std::fs::read(ws.root.join(rel)).map_err(|e| IngestError::Unreadable {
        path: rel.to_string(),
        cause: e.to_string(),
    })?;
    Ok(SourceText::from_plain(rel, &String::from_utf8_lossy(&bytes)))
}

pub(crate) fn normalize_newlines(text: &str) -> String {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    text.replace("\r\n", "\n").replace('\r', "\n")
}

pub(crate) fn line_count(text: &str) -> usize {
    text.lines().count()
}
