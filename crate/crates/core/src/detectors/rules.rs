use std::collections::BTreeSet;

use super::{normalize_findings, DetectorContext, Finding, MisuseId};
use crate::diag::{Diagnostic, Stage};
use crate::kb::{Category, MatchKind};
use crate::model::{loop_reachable, CallFact};

fn loc(call: &CallFact) -> String {
    format!("{}:{}", call.file, call.line)
}

fn first_by_location<'a>(calls: &[&'a CallFact]) -> Option<&'a CallFact> {
    calls.iter().copied().min_by(|a, b| (&a.file, a.line).cmp(&(&b.file, b.line)))
}

/// Single-item provider calls executed inside a loop, lexically or through
/// a bounded chain of callers.
pub fn detect_batch_misuse(ctx: &DetectorContext) -> Vec<Finding> {
    let mut out = Vec::new();
    for call in &ctx.model.calls {
        let mut entry = None;
        for &provider in ctx.providers() {
            match ctx.kb.lookup_batch_api(&call.resolved_name, provider) {
                Ok(Some(e)) => {
                    entry = Some(e);
                    break;
                }
                Ok(None) => {}
                Err(err) => ctx.note(
                    Diagnostic::new(call.file.clone(), Stage::Detect, err.to_string()).at_line(call.line),
                ),
            }
        }
        let Some(entry) = entry else { continue };
        if !loop_reachable(&ctx.model.call_graph, call, ctx.max_loop_depth) {
            continue;
        }
        let how = if call.lexical_loop_depth > 0 {
            "inside a loop"
        } else {
            "from a function called inside a loop"
        };
        out.push(Finding::call_site(
            MisuseId::BatchApiNotUsed,
            &call.file,
            call.line,
            format!(
                "`{}` is called once per item {how}; use {}",
                call.resolved_name, entry.batch_equivalent
            ),
        ));
    }
    normalize_findings(&mut out);
    out
}

/// Provider SDK present and some training happens.
fn training_gate<'a>(ctx: &DetectorContext<'a>) -> Option<&'a CallFact> {
    if ctx.providers().is_empty() {
        return None;
    }
    let calls: Vec<&CallFact> = ctx.model.datasets.train_calls.iter().collect();
    first_by_location(&calls)
}

pub fn detect_missing_checkpoints(ctx: &DetectorContext) -> Vec<Finding> {
    let Some(train) = training_gate(ctx) else {
        return Vec::new();
    };
    let saves = ctx.matching_calls(Category::CheckpointSave);
    let Some(first_save) = first_by_location(&saves) else {
        return vec![Finding::project(
            MisuseId::TrainingCheckpointsMissing,
            format!("training (`{}` at {}) never saves a checkpoint", train.resolved_name, loc(train)),
        )];
    };
    if ctx.matching_calls(Category::CheckpointRestore).is_empty() {
        return vec![Finding::call_site(
            MisuseId::TrainingCheckpointsMissing,
            &first_save.file,
            first_save.line,
            format!("checkpoints saved by `{}` but never restored", first_save.resolved_name),
        )];
    }
    Vec::new()
}

pub fn detect_missing_early_stopping(ctx: &DetectorContext) -> Vec<Finding> {
    let Some(train) = training_gate(ctx) else {
        return Vec::new();
    };
    if !ctx.library_present(Category::EarlyStoppingLibrary) {
        return vec![Finding::project(
            MisuseId::EarlyStoppingUnspecified,
            format!(
                "training (`{}` at {}) without any early-stopping library",
                train.resolved_name,
                loc(train)
            ),
        )];
    }
    // Configured: an early-stopping keyword on some call, or an
    // early-stopping policy/callback object constructed somewhere.
    if ctx.matching_calls(Category::EarlyStoppingParameter).is_empty() {
        return vec![Finding::project(
            MisuseId::EarlyStoppingUnspecified,
            "early-stopping library imported but not configured on any training or tuning call",
        )];
    }
    Vec::new()
}

pub fn detect_schema_mismatch_ignored(ctx: &DetectorContext) -> Vec<Finding> {
    let datasets = &ctx.model.datasets;
    if ctx.providers().is_empty() || datasets.is_empty() {
        return Vec::new();
    }
    if !ctx.library_present(Category::SchemaValidationLibrary) {
        return vec![Finding::project(
            MisuseId::SchemaMismatchIgnored,
            "datasets are used but no schema validation library is imported",
        )];
    }
    let calls = ctx.matching_calls(Category::SchemaValidationCall);
    if calls.is_empty() {
        return vec![Finding::project(
            MisuseId::SchemaMismatchIgnored,
            "schema validation library imported but never called",
        )];
    }
    let compares = calls.iter().any(|c| {
        let syms: BTreeSet<&str> = c.arg_symbols.iter().map(String::as_str).collect();
        let train = syms.iter().any(|s| datasets.train_symbols.contains(*s));
        let test = syms.iter().any(|s| datasets.test_symbols.contains(*s));
        (train && test) || syms.len() >= 2
    });
    if !compares {
        return vec![Finding::project(
            MisuseId::SchemaMismatchIgnored,
            "no validation call compares training and evaluation data",
        )];
    }
    Vec::new()
}

pub fn detect_output_misinterpretation(ctx: &DetectorContext) -> Vec<Finding> {
    let mut out = Vec::new();
    let providers = ctx.providers();
    for group in &ctx.kb.output_groups {
        if !providers.iter().any(|p| group.provider.applies_to(*p)) {
            continue;
        }
        let Some(api) = ctx
            .model
            .calls
            .iter()
            .find(|c| group.api_context.matches(MatchKind::DottedCallName, &c.resolved_name))
        else {
            continue;
        };
        let mut accesses: Vec<_> = ctx
            .model
            .attribute_accesses
            .iter()
            .filter(|a| group.required_fields.contains(&a.attribute))
            .collect();
        if accesses.is_empty() {
            continue;
        }
        accesses.sort_by(|a, b| (&a.file, a.line).cmp(&(&b.file, b.line)));
        let used: BTreeSet<&str> = accesses.iter().map(|a| a.attribute.as_str()).collect();
        let missing: Vec<&str> = group
            .required_fields
            .iter()
            .map(String::as_str)
            .filter(|f| !used.contains(f))
            .collect();
        if missing.is_empty() {
            continue;
        }
        let first = accesses[0];
        out.push(Finding::call_site(
            MisuseId::OutputMisinterpreted,
            &first.file,
            first.line,
            format!(
                "output of `{}` is read via `{}` but `{}` is never used",
                api.resolved_name,
                used.into_iter().collect::<Vec<_>>().join("`, `"),
                missing.join("`, `")
            ),
        ));
    }
    normalize_findings(&mut out);
    out
}

pub fn detect_api_limit_mishandling(ctx: &DetectorContext) -> Vec<Finding> {
    let model = ctx.model;
    if ctx.providers().is_empty() {
        return Vec::new();
    }
    let ml_calls: Vec<&CallFact> = model
        .calls
        .iter()
        .filter(|c| !ctx.kb.signature_providers(&c.resolved_name).is_empty())
        .collect();
    if ml_calls.is_empty() && model.http_calls.is_empty() {
        return Vec::new();
    }

    let handling = ctx.entries(Category::RateLimitHandlingCall);
    // (a) a rate-limit library and one of its handling constructs.
    let library = ctx.library_present(Category::RateLimitLibrary)
        && (model.calls.iter().any(|c| super::call_matches(&handling, c))
            || model
                .functions
                .iter()
                .flat_map(|f| &f.decorators)
                .any(|d| handling.iter().any(|e| e.matches(d))));
    // (b) a handler catching a rate-limit exception.
    let caught = model
        .except_handlers
        .iter()
        .flat_map(|h| &h.exception_names)
        .any(|n| handling.iter().any(|e| e.matches(n)));
    // (c) rate-limit headers sent or inspected.
    let headers = ctx.entries(Category::RateLimitHeader);
    let is_header = |k: &str| headers.iter().any(|e| e.matches(k));
    let inspected = model
        .http_calls
        .iter()
        .any(|h| h.header_keys.iter().chain(&h.param_keys).any(|k| is_header(k)))
        || model.attribute_accesses.iter().any(|a| is_header(&a.attribute));
    // (d) a retry construct around an ML or HTTP call.
    let retried = ml_calls.iter().any(|c| model.in_retry_construct(c))
        || model.http_calls.iter().any(|h| h.wrapped_in_retry);

    if library || caught || inspected || retried {
        return Vec::new();
    }
    let example = first_by_location(&ml_calls)
        .map(|c| (c.resolved_name.clone(), loc(c)))
        .or_else(|| {
            model
                .http_calls
                .first()
                .map(|h| (model.calls[h.call].resolved_name.clone(), format!("{}:{}", h.file, h.line)))
        });
    let evidence = match example {
        Some((name, at)) => format!(
            "ML service calls (e.g. `{name}` at {at}) have no retry, backoff or rate-limit handling"
        ),
        None => "ML service calls have no retry, backoff or rate-limit handling".to_string(),
    };
    vec![Finding::project(MisuseId::ApiLimitsMishandled, evidence)]
}

pub fn detect_drift_monitoring_ignored(ctx: &DetectorContext) -> Vec<Finding> {
    if ctx.providers().is_empty() {
        return Vec::new();
    }
    if !ctx.library_present(Category::DriftMonitoringLibrary) {
        return vec![Finding::project(
            MisuseId::DriftMonitoringIgnored,
            "no drift monitoring library is used",
        )];
    }
    if ctx.matching_calls(Category::DriftMonitoringCall).is_empty() {
        return vec![Finding::project(
            MisuseId::DriftMonitoringIgnored,
            "drift monitoring library imported but no monitor is instantiated",
        )];
    }
    Vec::new()
}
