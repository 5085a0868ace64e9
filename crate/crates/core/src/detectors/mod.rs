//! The seven misuse rules. Each rule is a pure function of the project
//! model, the catalog and the loop-depth bound; [`run_all`] runs a selection
//! of them and assembles a [`Report`].

mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::kb::{Category, KnowledgeBase, MatchKind, PatternEntry, Provider};
use crate::model::{CallFact, ProjectModel};
use crate::report::Report;

pub use rules::{
    detect_api_limit_mishandling, detect_batch_misuse, detect_drift_monitoring_ignored,
    detect_missing_checkpoints, detect_missing_early_stopping, detect_output_misinterpretation,
    detect_schema_mismatch_ignored,
};

/// Default bound on caller-chain length for loop reachability.
pub const DEFAULT_MAX_LOOP_DEPTH: u32 = 3;

/// The seven misuse kinds, with stable string codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisuseId {
    BatchApiNotUsed,
    TrainingCheckpointsMissing,
    EarlyStoppingUnspecified,
    SchemaMismatchIgnored,
    OutputMisinterpreted,
    ApiLimitsMishandled,
    DriftMonitoringIgnored,
}

impl MisuseId {
    pub const ALL: [MisuseId; 7] = [
        MisuseId::BatchApiNotUsed,
        MisuseId::TrainingCheckpointsMissing,
        MisuseId::EarlyStoppingUnspecified,
        MisuseId::SchemaMismatchIgnored,
        MisuseId::OutputMisinterpreted,
        MisuseId::ApiLimitsMishandled,
        MisuseId::DriftMonitoringIgnored,
    ];

    pub fn code(self) -> &'static str {
        match self {
            MisuseId::BatchApiNotUsed => "batch_api_not_used",
            MisuseId::TrainingCheckpointsMissing => "training_checkpoints_missing",
            MisuseId::EarlyStoppingUnspecified => "early_stopping_unspecified",
            MisuseId::SchemaMismatchIgnored => "schema_mismatch_ignored",
            MisuseId::OutputMisinterpreted => "output_misinterpreted",
            MisuseId::ApiLimitsMishandled => "api_limits_mishandled",
            MisuseId::DriftMonitoringIgnored => "drift_monitoring_ignored",
        }
    }

    /// One-line human description, used as the rule text in reports.
    pub fn title(self) -> &'static str {
        match self {
            MisuseId::BatchApiNotUsed => "Single-item API called repeatedly where a batch API exists",
            MisuseId::TrainingCheckpointsMissing => "Training without saving or restoring checkpoints",
            MisuseId::EarlyStoppingUnspecified => "Training without an early-stopping criterion",
            MisuseId::SchemaMismatchIgnored => "Training and evaluation data schemas never compared",
            MisuseId::OutputMisinterpreted => "Only part of a jointly-interpreted API output is used",
            MisuseId::ApiLimitsMishandled => "ML service calls without rate-limit handling",
            MisuseId::DriftMonitoringIgnored => "Deployed model inputs are not monitored for drift",
        }
    }

    fn detector(self) -> fn(&DetectorContext) -> Vec<Finding> {
        match self {
            MisuseId::BatchApiNotUsed => detect_batch_misuse,
            MisuseId::TrainingCheckpointsMissing => detect_missing_checkpoints,
            MisuseId::EarlyStoppingUnspecified => detect_missing_early_stopping,
            MisuseId::SchemaMismatchIgnored => detect_schema_mismatch_ignored,
            MisuseId::OutputMisinterpreted => detect_output_misinterpretation,
            MisuseId::ApiLimitsMishandled => detect_api_limit_mishandling,
            MisuseId::DriftMonitoringIgnored => detect_drift_monitoring_ignored,
        }
    }
}

impl fmt::Display for MisuseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MisuseId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MisuseId::ALL
            .into_iter()
            .find(|m| m.code() == s.trim())
            .ok_or_else(|| format!("unknown misuse code `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingScope {
    CallSite,
    Project,
}

/// One detected misuse occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub misuse: MisuseId,
    pub file: Option<String>,
    pub line: Option<u32>,
    pub evidence: String,
    pub scope: FindingScope,
}

impl Finding {
    pub fn call_site(misuse: MisuseId, file: &str, line: u32, evidence: impl Into<String>) -> Self {
        Finding {
            misuse,
            file: Some(file.to_string()),
            line: Some(line),
            evidence: evidence.into(),
            scope: FindingScope::CallSite,
        }
    }

    pub fn project(misuse: MisuseId, evidence: impl Into<String>) -> Self {
        Finding {
            misuse,
            file: None,
            line: None,
            evidence: evidence.into(),
            scope: FindingScope::Project,
        }
    }

    /// Report ordering: misuse code, then file, then line.
    pub fn sort_key(&self) -> (&'static str, Option<&str>, Option<u32>) {
        (self.misuse.code(), self.file.as_deref(), self.line)
    }
}

/// Everything a detector reads.
pub struct DetectorContext<'a> {
    pub model: &'a ProjectModel,
    pub kb: &'a KnowledgeBase,
    pub max_loop_depth: u32,
    notes: Mutex<Vec<Diagnostic>>,
}

impl<'a> DetectorContext<'a> {
    pub fn new(model: &'a ProjectModel, kb: &'a KnowledgeBase) -> Self {
        Self::with_depth(model, kb, DEFAULT_MAX_LOOP_DEPTH)
    }

    pub fn with_depth(model: &'a ProjectModel, kb: &'a KnowledgeBase, max_loop_depth: u32) -> Self {
        DetectorContext {
            model,
            kb,
            max_loop_depth,
            notes: Mutex::new(Vec::new()),
        }
    }

    /// Records an anomaly met while detecting; detectors never fail.
    pub(crate) fn note(&self, diag: Diagnostic) {
        self.notes.lock().expect("diagnostic list poisoned").push(diag);
    }

    /// Diagnostics recorded so far.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.notes.lock().expect("diagnostic list poisoned").clone()
    }

    pub(crate) fn providers(&self) -> &BTreeSet<Provider> {
        &self.model.providers.providers
    }

    /// Catalog entries of `category` that apply to this project: generic
    /// entries plus those of every detected provider.
    pub(crate) fn entries(&self, category: Category) -> Vec<&'a PatternEntry> {
        let providers = &self.model.providers.providers;
        self.kb
            .entries
            .iter()
            .filter(|e| {
                e.category == category && (e.provider == Provider::Any || providers.contains(&e.provider))
            })
            .collect()
    }

    /// Calls matching `category` by callee name or by keyword-argument name.
    pub(crate) fn matching_calls(&self, category: Category) -> Vec<&'a CallFact> {
        let entries = self.entries(category);
        self.model
            .calls
            .iter()
            .filter(|c| call_matches(&entries, c))
            .collect()
    }

    /// Whether a library of `category` is in use: imported, or named by a
    /// fully qualified call.
    pub(crate) fn library_present(&self, category: Category) -> bool {
        let entries: Vec<&PatternEntry> = self
            .entries(category)
            .into_iter()
            .filter(|e| e.match_kind == MatchKind::ImportPrefix)
            .collect();
        let hit = |name: &str| entries.iter().any(|e| e.matches(name));
        self.model
            .imports
            .iter()
            .filter(|i| !i.module_path.starts_with('.'))
            .any(|i| hit(&i.module_path) || hit(&i.full_path()))
            || self.model.calls.iter().any(|c| hit(&c.resolved_name))
    }
}

pub(crate) fn call_matches(entries: &[&PatternEntry], call: &CallFact) -> bool {
    entries.iter().any(|e| match e.match_kind {
        MatchKind::DottedCallName => e.matches(&call.resolved_name),
        MatchKind::ParameterName => call.argument_names.iter().any(|a| e.matches(a)),
        _ => false,
    })
}

/// Sorts by (misuse code, file, line) and keeps one Finding per misuse and
/// location.
pub fn normalize_findings(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then(a.evidence.cmp(&b.evidence)));
    findings.dedup_by(|b, a| a.misuse == b.misuse && a.file == b.file && a.line == b.line);
}

/// Runs the selected detectors and assembles a report. Per-detector wall
/// time is recorded under the misuse code.
pub fn run_all(ctx: &DetectorContext, selection: &BTreeSet<MisuseId>) -> Report {
    let mut findings = Vec::new();
    let mut timings = BTreeMap::new();
    let started = Instant::now();
    for misuse in MisuseId::ALL.into_iter().filter(|m| selection.contains(m)) {
        let t = Instant::now();
        let mut found = (misuse.detector())(ctx);
        timings.insert(misuse.code().to_string(), t.elapsed().as_secs_f64());
        found.retain(|f| f.misuse == misuse);
        findings.extend(found);
    }
    timings.insert("detectors".to_string(), started.elapsed().as_secs_f64());
    normalize_findings(&mut findings);

    let mut diagnostics = ctx.model.skipped.clone();
    diagnostics.extend(ctx.diagnostics());
    Report::new(
        ctx.model.workspace.repo_name.clone(),
        ctx.kb.version.clone(),
        findings,
        timings,
        diagnostics,
    )
}
