use std::collections::BTreeMap;

use serde::Serialize;

use super::Corpus;
use crate::ingest::{line_count, Workspace};
use crate::kb::KnowledgeBase;
use crate::pipeline::{analyze, ScanOptions};

/// Median wall time of one project's full runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRecord {
    pub project: String,
    pub lines_of_code: usize,
    pub file_count: usize,
    /// Seconds per detector code, plus `detectors` and `model_build`.
    pub stage_seconds: BTreeMap<String, f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimingRun {
    pub records: Vec<TimingRecord>,
    /// `(project id, reason)` for projects that could not be analyzed.
    pub failures: Vec<(String, String)>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Times `repetitions` full runs of every corpus project, in manifest order.
/// A project that fails is recorded and skipped.
pub fn time_pipeline(corpus: &Corpus, kb: &KnowledgeBase, repetitions: usize) -> TimingRun {
    let opts = ScanOptions::default();
    let repetitions = repetitions.max(1);
    let mut run = TimingRun::default();
    for p in &corpus.projects {
        let ws = match Workspace::local(&p.path) {
            Ok(ws) => ws,
            Err(e) => {
                run.failures.push((p.id.clone(), e.to_string()));
                continue;
            }
        };
        let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut size = (0, 0);
        let mut failed = None;
        for _ in 0..repetitions {
            match analyze(&ws, kb, &opts) {
                Ok(report) => {
                    for (k, v) in report.timings {
                        samples.entry(k).or_default().push(v);
                    }
                }
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(reason) = failed {
            run.failures.push((p.id.clone(), reason));
            continue;
        }
        if let Ok(model) = crate::model::build_model(&ws, kb) {
            size = (
                model.units.iter().map(|u| line_count(&u.text)).sum(),
                model.units.len(),
            );
        }
        let mut stage_seconds: BTreeMap<String, f64> =
            samples.iter_mut().map(|(k, v)| (k.clone(), median(v))).collect();
        let total_seconds = stage_seconds.remove("total").unwrap_or(0.0);
        run.records.push(TimingRecord {
            project: p.id.clone(),
            lines_of_code: size.0,
            file_count: size.1,
            stage_seconds,
            total_seconds,
        });
    }
    run
}

/// Ordinary least-squares line through the points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
}

pub fn fit_linear(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r2 })
}
