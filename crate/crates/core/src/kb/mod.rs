//! Curated catalog of ML cloud provider API patterns.
//!
//! The catalog is a TOML document with four top-level keys: `version`,
//! `entries`, `batch_apis` and `output_groups`. A default catalog is compiled
//! into the library; `KnowledgeBase::default_catalog_text` returns it verbatim
//! so it can be dumped, edited and loaded back with [`load_kb`].

mod pattern;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

pub use pattern::{MatchKind, Pattern};

const DEFAULT_CATALOG: &str = include_str!("../../catalog/default.toml");

#[derive(Debug, Error)]
pub enum KbError {
    #[error("malformed catalog {file}{}: {reason}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    MalformedCatalog {
        file: String,
        line: Option<usize>,
        reason: String,
    },
    #[error("ambiguous batch pattern for `{call}`: {first} and {second} both match")]
    AmbiguousPattern {
        call: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    Aws,
    Azure,
    Gcp,
    /// Provider-agnostic entry; as a query argument, matches every provider.
    Any,
}

impl Provider {
    pub const CONCRETE: [Provider; 3] = [Provider::Aws, Provider::Azure, Provider::Gcp];

    pub fn as_str(self) -> &'static str {
        match self {
            Provider::Aws => "aws",
            Provider::Azure => "azure",
            Provider::Gcp => "gcp",
            Provider::Any => "any",
        }
    }

    /// Whether an entry tagged `self` applies to a query for `query`.
    pub fn applies_to(self, query: Provider) -> bool {
        query == Provider::Any || self == Provider::Any || self == query
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ProviderSignature,
    BatchSingleItemApi,
    TrainingCall,
    DataSplitCall,
    EvaluationCall,
    CheckpointSave,
    CheckpointRestore,
    EarlyStoppingLibrary,
    EarlyStoppingParameter,
    SchemaValidationLibrary,
    SchemaValidationCall,
    DriftMonitoringLibrary,
    DriftMonitoringCall,
    RateLimitLibrary,
    RateLimitHandlingCall,
    RateLimitHeader,
    MlHttpEndpoint,
    OutputAccessor,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::ProviderSignature => "provider_signature",
            Category::BatchSingleItemApi => "batch_single_item_api",
            Category::TrainingCall => "training_call",
            Category::DataSplitCall => "data_split_call",
            Category::EvaluationCall => "evaluation_call",
            Category::CheckpointSave => "checkpoint_save",
            Category::CheckpointRestore => "checkpoint_restore",
            Category::EarlyStoppingLibrary => "early_stopping_library",
            Category::EarlyStoppingParameter => "early_stopping_parameter",
            Category::SchemaValidationLibrary => "schema_validation_library",
            Category::SchemaValidationCall => "schema_validation_call",
            Category::DriftMonitoringLibrary => "drift_monitoring_library",
            Category::DriftMonitoringCall => "drift_monitoring_call",
            Category::RateLimitLibrary => "rate_limit_library",
            Category::RateLimitHandlingCall => "rate_limit_handling_call",
            Category::RateLimitHeader => "rate_limit_header",
            Category::MlHttpEndpoint => "ml_http_endpoint",
            Category::OutputAccessor => "output_accessor",
        }
    }
}

/// One catalog pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternEntry {
    pub category: Category,
    pub provider: Provider,
    pub match_kind: MatchKind,
    #[serde(flatten)]
    pub pattern: Pattern,
    pub notes: String,
}

impl PatternEntry {
    pub fn matches(&self, candidate: &str) -> bool {
        self.pattern.matches(self.match_kind, candidate)
    }
}

/// A single-item API that has a batch counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchApiEntry {
    pub provider: Provider,
    pub single_item_call: Pattern,
    pub batch_equivalent: String,
    pub notes: String,
}

/// Response fields that must be read together to interpret an API result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputGroup {
    pub provider: Provider,
    pub api_context: Pattern,
    pub required_fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnowledgeBase {
    pub version: String,
    pub entries: Vec<PatternEntry>,
    pub batch_apis: Vec<BatchApiEntry>,
    pub output_groups: Vec<OutputGroup>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default)]
    version: Option<String>,
    #[serde(default)]
    entries: Vec<Spanned<RawEntry>>,
    #[serde(default)]
    batch_apis: Vec<Spanned<RawBatch>>,
    #[serde(default)]
    output_groups: Vec<Spanned<RawGroup>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    category: Category,
    provider: Provider,
    match_kind: MatchKind,
    pattern: String,
    #[serde(default)]
    is_regex: bool,
    #[serde(default)]
    notes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBatch {
    provider: Provider,
    single_item_call: String,
    #[serde(default)]
    is_regex: bool,
    batch_equivalent: String,
    #[serde(default)]
    notes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    provider: Provider,
    api_context: String,
    #[serde(default)]
    is_regex: bool,
    required_fields: Vec<String>,
}

/// Loads a catalog from `path`, or the embedded default when `path` is `None`.
pub fn load_kb(path: Option<&Path>) -> Result<KnowledgeBase, KbError> {
    match path {
        None => KnowledgeBase::default_catalog(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| KbError::MalformedCatalog {
                file: path.display().to_string(),
                line: None,
                reason: e.to_string(),
            })?;
            KnowledgeBase::from_toml_str(&text, &path.display().to_string())
        }
    }
}

impl KnowledgeBase {
    pub fn default_catalog_text() -> &'static str {
        DEFAULT_CATALOG
    }

    pub fn default_catalog() -> Result<Self, KbError> {
        Self::from_toml_str(DEFAULT_CATALOG, "<default catalog>")
    }

    /// Parses and validates catalog text. `origin` names the source in errors.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, KbError> {
        let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
        let malformed = |line: Option<usize>, reason: String| KbError::MalformedCatalog {
            file: origin.to_string(),
            line,
            reason,
        };

        let raw: RawCatalog = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(s.start));
            malformed(line, e.message().to_string())
        })?;

        let compile = |text: &str, is_regex: bool, line: usize| -> Result<Pattern, KbError> {
            if text.trim().is_empty() {
                return Err(malformed(Some(line), "pattern must be non-empty".into()));
            }
            Pattern::new(text, is_regex)
                .map_err(|e| malformed(Some(line), format!("pattern `{text}` does not compile: {e}")))
        };

        let mut seen: HashSet<(Category, Provider, String)> = HashSet::new();
        let mut check_unique = |category: Category, provider: Provider, pattern: &str, line: usize| {
            if seen.insert((category, provider, pattern.to_string())) {
                Ok(())
            } else {
                Err(malformed(
                    Some(line),
                    format!(
                        "duplicate entry ({}, {}, `{}`)",
                        category.as_str(),
                        provider,
                        pattern
                    ),
                ))
            }
        };

        let mut entries = Vec::with_capacity(raw.entries.len());
        for spanned in &raw.entries {
            let line = line_of(spanned.span().start);
            let raw_entry = spanned.get_ref();
            if raw_entry.category == Category::ProviderSignature
                && raw_entry.provider == Provider::Any
            {
                return Err(malformed(
                    Some(line),
                    "provider_signature entries must name a concrete provider".into(),
                ));
            }
            let pattern = compile(&raw_entry.pattern, raw_entry.is_regex, line)?;
            check_unique(raw_entry.category, raw_entry.provider, &raw_entry.pattern, line)?;
            entries.push(PatternEntry {
                category: raw_entry.category,
                provider: raw_entry.provider,
                match_kind: raw_entry.match_kind,
                pattern,
                notes: raw_entry.notes.clone(),
            });
        }

        let mut batch_apis = Vec::with_capacity(raw.batch_apis.len());
        for spanned in &raw.batch_apis {
            let line = line_of(spanned.span().start);
            let raw_batch = spanned.get_ref();
            let pattern = compile(&raw_batch.single_item_call, raw_batch.is_regex, line)?;
            // Batch APIs are the catalog's batch_single_item_api category.
            check_unique(
                Category::BatchSingleItemApi,
                raw_batch.provider,
                &raw_batch.single_item_call,
                line,
            )?;
            entries.push(PatternEntry {
                category: Category::BatchSingleItemApi,
                provider: raw_batch.provider,
                match_kind: MatchKind::DottedCallName,
                pattern: pattern.clone(),
                notes: format!("batch equivalent: {}", raw_batch.batch_equivalent),
            });
            batch_apis.push(BatchApiEntry {
                provider: raw_batch.provider,
                single_item_call: pattern,
                batch_equivalent: raw_batch.batch_equivalent.clone(),
                notes: raw_batch.notes.clone(),
            });
        }

        let mut output_groups = Vec::with_capacity(raw.output_groups.len());
        for spanned in &raw.output_groups {
            let line = line_of(spanned.span().start);
            let raw_group = spanned.get_ref();
            let api_context = compile(&raw_group.api_context, raw_group.is_regex, line)?;
            let mut required_fields: Vec<String> = Vec::new();
            for field in &raw_group.required_fields {
                if field.is_empty() {
                    return Err(malformed(Some(line), "empty required field".into()));
                }
                if !required_fields.contains(field) {
                    required_fields.push(field.clone());
                }
            }
            if required_fields.len() < 2 {
                return Err(malformed(
                    Some(line),
                    "output group needs at least two distinct required_fields".into(),
                ));
            }
            output_groups.push(OutputGroup {
                provider: raw_group.provider,
                api_context,
                required_fields,
            });
        }

        let signed: HashSet<Provider> = entries
            .iter()
            .filter(|e| e.category == Category::ProviderSignature)
            .map(|e| e.provider)
            .collect();
        if signed.is_empty() {
            return Err(malformed(
                None,
                "catalog must define at least one provider_signature entry".into(),
            ));
        }
        let referenced = raw
            .batch_apis
            .iter()
            .map(|b| (b.get_ref().provider, line_of(b.span().start)))
            .chain(
                raw.output_groups
                    .iter()
                    .map(|g| (g.get_ref().provider, line_of(g.span().start))),
            );
        for (provider, line) in referenced {
            if provider != Provider::Any && !signed.contains(&provider) {
                return Err(malformed(
                    Some(line),
                    format!("provider {provider} has no provider_signature entry"),
                ));
            }
        }

        Ok(KnowledgeBase {
            version: raw.version.unwrap_or_else(|| "unversioned".to_string()),
            entries,
            batch_apis,
            output_groups,
        })
    }

    /// Entries of `category` that apply to `provider`, in catalog order.
    ///
    /// `Provider::Any` as the query selects the entries of every provider.
    pub fn patterns_for(&self, category: Category, provider: Provider) -> Vec<&PatternEntry> {
        self.entries
            .iter()
            .filter(|e| e.category == category && e.provider.applies_to(provider))
            .collect()
    }

    /// Whether any entry of `category` (for any provider) matches `candidate`.
    pub fn any_match(&self, category: Category, candidate: &str) -> bool {
        self.entries
            .iter()
            .any(|e| e.category == category && e.matches(candidate))
    }

    /// The unique batch API entry whose single-item pattern matches `dotted_call`.
    pub fn lookup_batch_api(
        &self,
        dotted_call: &str,
        provider: Provider,
    ) -> Result<Option<&BatchApiEntry>, KbError> {
        let mut found: Option<&BatchApiEntry> = None;
        for entry in &self.batch_apis {
            if !entry.provider.applies_to(provider)
                || !entry.single_item_call.matches(MatchKind::DottedCallName, dotted_call)
            {
                continue;
            }
            if let Some(first) = found {
                return Err(KbError::AmbiguousPattern {
                    call: dotted_call.to_string(),
                    first: first.single_item_call.text().to_string(),
                    second: entry.single_item_call.text().to_string(),
                });
            }
            found = Some(entry);
        }
        Ok(found)
    }

    /// Providers whose signature matches `name` (an import path or call name).
    pub fn signature_providers(&self, name: &str) -> Vec<Provider> {
        let mut out: Vec<Provider> = self
            .entries
            .iter()
            .filter(|e| e.category == Category::ProviderSignature && e.matches(name))
            .map(|e| e.provider)
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests;
