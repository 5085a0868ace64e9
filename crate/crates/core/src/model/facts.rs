//! Derived views over merged facts: providers, datasets, HTTP calls and the
//! retry-construct index.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::{
    CallFact, DatasetUsage, EvidenceKind, FunctionDef, HttpCallFact, ImportFact, ProviderEvidence,
    ProviderSet,
};
use crate::kb::{Category, KnowledgeBase, MatchKind};

/// Providers whose signatures match an import path or a call name.
pub fn detect_providers(imports: &[ImportFact], calls: &[CallFact], kb: &KnowledgeBase) -> ProviderSet {
    let mut set = ProviderSet::default();
    let mut seen = HashSet::new();
    let mut record = |name: &str, kind: EvidenceKind, file: &str, line: u32, set: &mut ProviderSet| {
        for provider in kb.signature_providers(name) {
            if seen.insert((provider, name.to_string())) {
                set.providers.insert(provider);
                set.evidence.push(ProviderEvidence {
                    provider,
                    kind,
                    name: name.to_string(),
                    file: file.to_string(),
                    line,
                });
            }
        }
    };
    for imp in imports {
        if imp.module_path.starts_with('.') {
            continue;
        }
        record(&imp.module_path, EvidenceKind::Import, &imp.file, imp.line, &mut set);
        let full = imp.full_path();
        if full != imp.module_path {
            record(&full, EvidenceKind::Import, &imp.file, imp.line, &mut set);
        }
    }
    for call in calls {
        record(&call.resolved_name, EvidenceKind::Call, &call.file, call.line, &mut set);
    }
    set
}

/// Split, training and evaluation calls, with the variables bound from
/// tuple-unpacked split results (even positions train, odd positions test).
pub fn detect_datasets(calls: &[CallFact], kb: &KnowledgeBase) -> DatasetUsage {
    let mut usage = DatasetUsage::default();
    for call in calls {
        let name = call.resolved_name.as_str();
        if kb.any_match(Category::DataSplitCall, name) {
            usage.split_sites.push(call.clone());
            if call.assigned_to.len() >= 2 {
                for (i, sym) in call.assigned_to.iter().enumerate() {
                    if sym == "_" {
                        continue;
                    }
                    if i % 2 == 0 {
                        usage.train_symbols.insert(sym.clone());
                    } else {
                        usage.test_symbols.insert(sym.clone());
                    }
                }
            }
        }
        if kb.any_match(Category::TrainingCall, name) {
            usage.train_calls.push(call.clone());
        }
        if kb.any_match(Category::EvaluationCall, name) {
            usage.eval_calls.push(call.clone());
        }
    }
    usage
}

const HTTP_CLIENT_ROOTS: &[&str] = &["requests", "httpx", "aiohttp", "urllib", "urllib3"];
const HTTP_VERBS: &[&str] = &["get", "post", "put", "patch", "delete", "head", "options"];
const HTTP_GENERIC: &[&str] = &["request", "urlopen", "stream", "Request"];

fn http_method(call: &CallFact) -> Option<String> {
    let root = call.resolved_name.split('.').next().unwrap_or("");
    if !HTTP_CLIENT_ROOTS.contains(&root) {
        return None;
    }
    let last = call.simple_name();
    if HTTP_VERBS.contains(&last) {
        return Some(last.to_ascii_uppercase());
    }
    if HTTP_GENERIC.contains(&last) {
        let explicit = call
            .keyword_strings
            .get("method")
            .or_else(|| {
                call.string_args
                    .first()
                    .filter(|s| HTTP_VERBS.contains(&s.to_ascii_lowercase().as_str()))
            })
            .map(|s| s.to_ascii_uppercase());
        return Some(explicit.unwrap_or_else(|| "GET".to_string()));
    }
    None
}

fn url_literal(call: &CallFact) -> Option<String> {
    call.keyword_strings
        .get("url")
        .or_else(|| {
            call.string_args
                .iter()
                .find(|s| !HTTP_VERBS.contains(&s.to_ascii_lowercase().as_str()))
        })
        .cloned()
}

/// HTTP requests issued with a known client, or carrying a literal URL of an
/// ML service endpoint.
pub fn detect_http(calls: &[CallFact], retry: &RetryIndex, kb: &KnowledgeBase) -> Vec<HttpCallFact> {
    let endpoints = kb.patterns_for(Category::MlHttpEndpoint, crate::kb::Provider::Any);
    let mut out = Vec::new();
    for call in calls {
        let method = http_method(call);
        let url = url_literal(call);
        let ml_endpoint = url
            .as_deref()
            .is_some_and(|u| endpoints.iter().any(|e| e.pattern.matches(MatchKind::UrlSubstring, u)));
        if method.is_none() && !ml_endpoint {
            continue;
        }
        let mut header_keys = BTreeSet::new();
        let mut param_keys = BTreeSet::new();
        for (kw, keys) in &call.keyword_dict_keys {
            match kw.as_str() {
                "headers" => header_keys.extend(keys.iter().cloned()),
                "params" | "json" | "data" => param_keys.extend(keys.iter().cloned()),
                _ => {}
            }
        }
        out.push(HttpCallFact {
            call: call.id,
            method,
            url_literal: url,
            header_keys,
            param_keys,
            wrapped_in_retry: retry.covers(call),
            file: call.file.clone(),
            line: call.line,
        });
    }
    out
}

/// Whether a call belongs to the sleep family (`time.sleep`, `asyncio.sleep`, ...).
pub fn is_sleep_call(call: &CallFact) -> bool {
    call.simple_name() == "sleep"
}

/// Where retry constructs are: loops that contain a sleep-family call, and
/// functions carrying a catalog retry decorator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RetryIndex {
    pub sleep_loops: BTreeSet<(String, u32)>,
    pub retry_decorated: BTreeSet<String>,
}

impl RetryIndex {
    pub fn build(calls: &[CallFact], functions: &[FunctionDef], kb: &KnowledgeBase) -> Self {
        let mut index = RetryIndex::default();
        for call in calls.iter().filter(|c| is_sleep_call(c)) {
            for &l in &call.loop_ids {
                index.sleep_loops.insert((call.file.clone(), l));
            }
        }
        for f in functions {
            if f.decorators
                .iter()
                .any(|d| kb.any_match(Category::RateLimitHandlingCall, d))
            {
                index.retry_decorated.insert(f.qualified_name.clone());
            }
        }
        index
    }

    /// Whether `call` sits in a loop that also sleeps, or directly in a
    /// retry-decorated function.
    pub fn covers(&self, call: &CallFact) -> bool {
        call.loop_ids
            .iter()
            .any(|&l| self.sleep_loops.contains(&(call.file.clone(), l)))
            || call
                .enclosing_function
                .as_ref()
                .is_some_and(|f| self.retry_decorated.contains(f))
    }
}
