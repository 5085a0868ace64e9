//! The end-to-end scan: model construction followed by the detectors.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::detectors::{run_all, DetectorContext, MisuseId, DEFAULT_MAX_LOOP_DEPTH};
use crate::ingest::Workspace;
use crate::kb::KnowledgeBase;
use crate::model::{build_model, ModelError, ProjectModel};
use crate::report::Report;

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub selection: BTreeSet<MisuseId>,
    pub max_loop_depth: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            selection: MisuseId::ALL.into_iter().collect(),
            max_loop_depth: DEFAULT_MAX_LOOP_DEPTH,
        }
    }
}

/// Runs the selected detectors over an already built model.
pub fn detect(model: &ProjectModel, kb: &KnowledgeBase, opts: &ScanOptions) -> Report {
    let ctx = DetectorContext::with_depth(model, kb, opts.max_loop_depth);
    run_all(&ctx, &opts.selection)
}

/// Builds the model of `ws` and runs the detectors; the report's timings
/// include the model build and the total.
pub fn analyze(ws: &Workspace, kb: &KnowledgeBase, opts: &ScanOptions) -> Result<Report, ModelError> {
    let started = Instant::now();
    let model = build_model(ws, kb)?;
    let build = started.elapsed().as_secs_f64();
    let mut report = detect(&model, kb, opts);
    report.record_model_build(build);
    Ok(report)
}
