//! Evaluation harness: scoring reports against hand labels, timing the
//! pipeline over a corpus, and generating synthetic projects of a chosen
//! size.
//!
//! A corpus manifest is a TOML file of `[[project]]` tables with `id`,
//! `path` and an optional `labels` file, both relative to the manifest.
//! A label file lists the expected findings of one project:
//!
//! ```toml
//! project = "listing1"          # optional; must match the manifest id
//!
//! [[finding]]
//! misuse = "batch_api_not_used"
//! count = 1
//! locations = ["text_analysis.py:9"]   # call-site misuses only
//! ```

pub mod synth;
mod timing;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detectors::{FindingScope, MisuseId};
use crate::report::Report;

pub use timing::{fit_linear, median, time_pipeline, LinearFit, TimingRecord, TimingRun};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {cause}")]
    Io { path: String, cause: String },
    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: String, reason: String },
    #[error("malformed annotations in {path} ({record}): {reason}")]
    MalformedAnnotations {
        path: String,
        record: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusProject {
    pub id: String,
    pub path: PathBuf,
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub manifest: PathBuf,
    pub projects: Vec<CorpusProject>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    project: Vec<RawProject>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProject {
    id: String,
    path: String,
    #[serde(default)]
    labels: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabels {
    #[serde(default)]
    project: Option<String>,
    #[serde(default)]
    finding: Vec<RawLabel>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    misuse: String,
    count: usize,
    #[serde(default)]
    locations: Vec<String>,
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        cause: e.to_string(),
    })
}

/// Reads a corpus manifest; paths are resolved against its directory.
pub fn load_manifest(path: &Path) -> Result<Corpus, EvalError> {
    let text = read(path)?;
    let malformed = |reason: String| EvalError::MalformedManifest {
        path: path.display().to_string(),
        reason,
    };
    let raw: RawManifest = toml::from_str(&text).map_err(|e| malformed(e.message().to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seen = BTreeSet::new();
    let mut projects = Vec::new();
    for p in raw.project {
        if !seen.insert(p.id.clone()) {
            return Err(malformed(format!("duplicate project id `{}`", p.id)));
        }
        projects.push(CorpusProject {
            id: p.id,
            path: base.join(p.path),
            labels: p.labels.map(|l| base.join(l)),
        });
    }
    Ok(Corpus {
        manifest: path.to_path_buf(),
        projects,
    })
}

/// Expected occurrences of one misuse in one project.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub count: usize,
    /// `(file, line)` of each call-site occurrence; empty for project-scope
    /// misuses, which are matched by presence.
    pub locations: BTreeSet<(String, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub projects: BTreeMap<String, BTreeMap<MisuseId, Expected>>,
}

/// Loads the labels of every project in the manifest at `path`. Projects
/// without a label file are expected to be clean.
pub fn load_ground_truth(path: &Path) -> Result<GroundTruth, EvalError> {
    let corpus = load_manifest(path)?;
    let mut gt = GroundTruth::default();
    for p in &corpus.projects {
        let labels = match &p.labels {
            Some(file) => parse_labels(file, &read(file)?, &p.id)?,
            None => BTreeMap::new(),
        };
        gt.projects.insert(p.id.clone(), labels);
    }
    Ok(gt)
}

/// Parses one label file belonging to manifest project `id`.
pub fn parse_labels(
    path: &Path,
    text: &str,
    id: &str,
) -> Result<BTreeMap<MisuseId, Expected>, EvalError> {
    let bad = |record: String, reason: String| EvalError::MalformedAnnotations {
        path: path.display().to_string(),
        record,
        reason,
    };
    let raw: RawLabels =
        toml::from_str(text).map_err(|e| bad("document".into(), e.message().to_string()))?;
    if let Some(named) = &raw.project {
        if named != id {
            return Err(bad(
                format!("project = {named:?}"),
                format!("unknown project; the manifest lists this file under `{id}`"),
            ));
        }
    }
    let mut out = BTreeMap::new();
    for (i, label) in raw.finding.into_iter().enumerate() {
        let record = format!("finding #{} ({})", i + 1, label.misuse);
        let misuse: MisuseId = label.misuse.parse().map_err(|e: String| bad(record.clone(), e))?;
        let mut locations = BTreeSet::new();
        for loc in &label.locations {
            let parsed = loc
                .rsplit_once(':')
                .and_then(|(f, l)| Some((f.to_string(), l.parse::<u32>().ok()?)))
                .ok_or_else(|| bad(record.clone(), format!("location `{loc}` is not file:line")))?;
            if !locations.insert(parsed) {
                return Err(bad(record.clone(), format!("duplicate location `{loc}`")));
            }
        }
        if !locations.is_empty() && locations.len() != label.count {
            return Err(bad(
                record,
                format!("count {} but {} locations", label.count, locations.len()),
            ));
        }
        if out.insert(misuse, Expected { count: label.count, locations }).is_some() {
            return Err(bad(record, "misuse listed twice".into()));
        }
    }
    Ok(out)
}

/// True/false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Tally {
    /// TP/(TP+FP); 1.0 when nothing was reported.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// TP/(TP+FN); 1.0 when nothing was expected.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: Tally) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl Serialize for Tally {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Tally", 6)?;
        st.serialize_field("tp", &self.tp)?;
        st.serialize_field("fp", &self.fp)?;
        st.serialize_field("fn", &self.fn_)?;
        st.serialize_field("precision", &self.precision())?;
        st.serialize_field("recall", &self.recall())?;
        st.serialize_field("f1", &self.f1())?;
        st.end()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub per_misuse: BTreeMap<MisuseId, Tally>,
    /// Micro-average: the sum of the per-misuse tallies.
    pub overall: Tally,
}

/// Compares each report (matched to its labels by `repo_name`) with the
/// ground truth. Call-site findings match by `(file, line)`; project-scope
/// findings match by presence.
pub fn score(reports: &[Report], gt: &GroundTruth) -> Metrics {
    let empty = BTreeMap::new();
    let mut metrics = Metrics {
        per_misuse: MisuseId::ALL.iter().map(|m| (*m, Tally::default())).collect(),
        overall: Tally::default(),
    };
    for report in reports {
        let labels = gt.projects.get(&report.repo_name).unwrap_or(&empty);
        for misuse in MisuseId::ALL {
            let expected = labels.get(&misuse);
            let mut got_sites = BTreeSet::new();
            let mut got_project = false;
            for f in report.findings.iter().filter(|f| f.misuse == misuse) {
                match (f.scope, &f.file, f.line) {
                    (FindingScope::CallSite, Some(file), Some(line)) => {
                        got_sites.insert((file.clone(), line));
                    }
                    _ => got_project = true,
                }
            }
            let want_sites = expected.map(|e| e.locations.clone()).unwrap_or_default();
            let want_project = expected.is_some_and(|e| e.locations.is_empty() && e.count > 0);

            let mut t = Tally {
                tp: got_sites.intersection(&want_sites).count(),
                fp: got_sites.difference(&want_sites).count(),
                fn_: want_sites.difference(&got_sites).count(),
            };
            match (got_project, want_project) {
                (true, true) => t.tp += 1,
                (true, false) => t.fp += 1,
                (false, true) => t.fn_ += 1,
                (false, false) => {}
            }
            metrics.per_misuse.entry(misuse).or_default().add(t);
            metrics.overall.add(t);
        }
    }
    metrics
}

#[cfg(test)]
mod tests;
