//! The project model: syntax facts extracted from every analyzable unit plus
//! the derived views (call graph, providers, datasets, HTTP calls,
//! configuration) that detectors query.

mod build;
mod callgraph;
mod config;
mod facts;
mod parse;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::ingest::{FileSet, SourceText, Workspace};
use crate::kb::Provider;

pub use build::build_model;
pub use callgraph::{build_call_graph, loop_reachable, CallEdge, CallGraph, GraphNode, NodeKind};
pub use config::{scan_config_env, scan_config_file};
pub use facts::{detect_datasets, detect_http, detect_providers, is_sleep_call, RetryIndex};
pub use parse::{module_name, parse_unit, UnitFacts};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no parseable Python units in {root}")]
    EmptyModel { root: String },
}

/// One bound name introduced by an import statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportFact {
    /// Dotted module path; relative imports keep their leading dots.
    pub module_path: String,
    /// The `X` of `from m import X`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imported_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
    pub file: String,
    pub line: u32,
}

impl ImportFact {
    /// Fully qualified imported entity: `module.name` or the module itself.
    pub fn full_path(&self) -> String {
        match &self.imported_name {
            Some(name) if name != "*" => format!("{}.{}", self.module_path, name),
            _ => self.module_path.clone(),
        }
    }
}

/// A call expression with its alias-expanded callee name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallFact {
    /// Position in [`ProjectModel::calls`].
    pub id: usize,
    pub resolved_name: String,
    /// Callee text before alias expansion.
    pub raw_name: String,
    /// Segments of the callee before the final name, as written.
    pub receiver_chain: Vec<String>,
    pub argument_names: Vec<String>,
    pub positional_arity: usize,
    pub file: String,
    pub line: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enclosing_function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enclosing_class: Option<String>,
    pub lexical_loop_depth: u32,
    /// Ids (per file) of the enclosing loops, outermost first.
    pub loop_ids: Vec<u32>,
    /// Names bound by the assignment this call is the value of; positions
    /// that are not plain names are `_`.
    pub assigned_to: Vec<String>,
    /// Variable names mentioned anywhere in the arguments.
    pub arg_symbols: Vec<String>,
    /// Positional string literals (directly or through a constant binding).
    pub string_args: Vec<String>,
    /// Keyword arguments with string-literal values.
    pub keyword_strings: BTreeMap<String, String>,
    /// Literal keys of dictionaries passed as keyword arguments.
    pub keyword_dict_keys: BTreeMap<String, Vec<String>>,
}

impl CallFact {
    /// Last segment of the resolved callee.
    pub fn simple_name(&self) -> &str {
        self.resolved_name
            .rsplit('.')
            .next()
            .unwrap_or(&self.resolved_name)
    }
}

/// A read of an attribute, a string subscript key, or a `.get("key")`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributeAccessFact {
    pub base_expression_key: String,
    pub attribute: String,
    pub file: String,
    pub line: u32,
}

/// A function or method definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionDef {
    pub qualified_name: String,
    pub file: String,
    /// First and last original line.
    pub span: (u32, u32),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    /// Resolved decorator names (call decorators by their callee).
    pub decorators: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    For,
    While,
    Comprehension,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopSpan {
    pub id: u32,
    pub kind: LoopKind,
    pub file: String,
    pub span: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExceptHandlerFact {
    /// Resolved names of the caught exception types; empty for a bare `except`.
    pub exception_names: Vec<String>,
    pub file: String,
    pub line: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enclosing_function: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnvRead {
    pub name: String,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfigModel {
    pub entries: Vec<ConfigEntry>,
    pub env_var_reads: Vec<EnvRead>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetUsage {
    pub split_sites: Vec<CallFact>,
    pub train_calls: Vec<CallFact>,
    pub eval_calls: Vec<CallFact>,
    pub train_symbols: BTreeSet<String>,
    pub test_symbols: BTreeSet<String>,
}

impl DatasetUsage {
    pub fn is_empty(&self) -> bool {
        self.split_sites.is_empty() && self.train_calls.is_empty() && self.eval_calls.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HttpCallFact {
    /// The call this fact describes.
    pub call: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url_literal: Option<String>,
    pub header_keys: BTreeSet<String>,
    pub param_keys: BTreeSet<String>,
    pub wrapped_in_retry: bool,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    Import,
    Call,
}

/// Why a provider was detected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProviderEvidence {
    pub provider: Provider,
    pub kind: EvidenceKind,
    /// The import path or resolved call name that matched.
    pub name: String,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProviderSet {
    pub providers: BTreeSet<Provider>,
    pub evidence: Vec<ProviderEvidence>,
}

impl ProviderSet {
    pub fn is_empty(&self) -> bool {
        self.providers.is_empty()
    }
}

/// Everything detectors know about a project. Immutable once built.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectModel {
    pub workspace: Workspace,
    pub files: FileSet,
    pub units: Vec<SourceText>,
    pub imports: Vec<ImportFact>,
    pub calls: Vec<CallFact>,
    pub attribute_accesses: Vec<AttributeAccessFact>,
    pub functions: Vec<FunctionDef>,
    pub loops: Vec<LoopSpan>,
    pub except_handlers: Vec<ExceptHandlerFact>,
    pub call_graph: CallGraph,
    pub datasets: DatasetUsage,
    pub http_calls: Vec<HttpCallFact>,
    pub config: ConfigModel,
    pub providers: ProviderSet,
    pub retry: RetryIndex,
    pub skipped: Vec<Diagnostic>,
}

impl ProjectModel {
    /// Whether a call sits inside a retry construct: a loop that also
    /// sleeps, or a function with a retry decorator.
    pub fn in_retry_construct(&self, call: &CallFact) -> bool {
        self.retry.covers(call)
    }

    /// Function definitions by qualified name.
    pub fn function(&self, qualified_name: &str) -> Option<&FunctionDef> {
        self.functions
            .iter()
            .find(|f| f.qualified_name == qualified_name)
    }
}
