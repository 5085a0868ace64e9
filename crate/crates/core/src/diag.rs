//! Non-fatal problems encountered while analyzing a project.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Discover,
    Notebook,
    Sanitize,
    Parse,
    Config,
    Detect,
}

/// A structured warning: `{path, stage, reason}` plus an optional original line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, stage: Stage, reason: impl Into<String>) -> Self {
        Diagnostic {
            path: path.into(),
            stage,
            line: None,
            reason: reason.into(),
        }
    }

    pub fn at_line(mut self, line: u32) -> Self {
        self.line = Some(line);
        self
    }
}
