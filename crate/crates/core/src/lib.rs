//! Static detection of machine-learning cloud-service misuses in Python
//! projects.
//!
//! The pipeline is `ingest` (acquire, discover, sanitize) → `model` (parse
//! and instantiate the project model) → `detectors` (seven misuse rules) →
//! `report` (render). `eval` scores detector output against hand labels and
//! measures analysis time against project size.

pub mod detectors;
pub mod diag;
pub mod eval;
pub mod ingest;
pub mod kb;
pub mod model;
pub mod pipeline;
pub mod report;

pub use detectors::{run_all, DetectorContext, Finding, FindingScope, MisuseId};
pub use ingest::{acquire, Workspace};
pub use kb::{KnowledgeBase, Provider};
pub use model::{build_model, ProjectModel};
pub use pipeline::{analyze, ScanOptions};
pub use report::{render, OutputFormat, Report};
