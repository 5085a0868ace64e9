//! Orchestration: discover → extract → sanitize → parse → derived views.

use rayon::prelude::*;

use super::facts::{detect_datasets, detect_http, detect_providers, RetryIndex};
use super::{build_call_graph, parse_unit, scan_config_env, ModelError, ProjectModel, UnitFacts};
use crate::diag::{Diagnostic, Stage};
use crate::ingest::{discover_files, extract_notebook_code, read_source, sanitize_source, SourceText, Workspace};
use crate::kb::KnowledgeBase;

struct UnitOutcome {
    unit: Option<(SourceText, UnitFacts)>,
    diags: Vec<Diagnostic>,
}

fn process_unit(ws: &Workspace, rel: &str, notebook: bool) -> UnitOutcome {
    let mut diags = Vec::new();
    let st = if notebook {
        match extract_notebook_code(&ws.root.join(rel)) {
            Ok(nb) => {
                for pos in &nb.skipped {
                    diags.push(Diagnostic::new(
                        rel,
                        Stage::Notebook,
                        format!("magic skipped (cell {}, line {})", pos.cell, pos.line),
                    ));
                }
                let mut st = nb.source;
                st.path = rel.to_string();
                st
            }
            Err(e) => {
                diags.push(Diagnostic::new(rel, Stage::Notebook, e.to_string()));
                return UnitOutcome { unit: None, diags };
            }
        }
    } else {
        match read_source(ws, rel) {
            Ok(st) => st,
            Err(e) => {
                diags.push(Diagnostic::new(rel, Stage::Discover, e.to_string()));
                return UnitOutcome { unit: None, diags };
            }
        }
    };
    match sanitize_source(st) {
        Ok(s) => {
            for (line, note) in &s.repairs {
                diags.push(Diagnostic::new(rel, Stage::Sanitize, note.clone()).at_line(*line));
            }
            let facts = parse_unit(&s.source, &s.suite);
            UnitOutcome {
                unit: Some((s.source, facts)),
                diags,
            }
        }
        Err(e) => {
            diags.push(Diagnostic::new(rel, Stage::Sanitize, e.to_string()));
            UnitOutcome { unit: None, diags }
        }
    }
}

/// Builds the project model of `ws`. Per-file failures become diagnostics;
/// only a project without a single parseable unit is an error.
pub fn build_model(ws: &Workspace, kb: &KnowledgeBase) -> Result<ProjectModel, ModelError> {
    let files = discover_files(ws);
    let mut skipped = files.skipped.clone();

    let mut jobs: Vec<(&str, bool)> = files
        .source_files
        .iter()
        .map(|p| (p.as_str(), false))
        .chain(files.notebooks.iter().map(|p| (p.as_str(), true)))
        .collect();
    jobs.sort();
    let outcomes: Vec<UnitOutcome> = jobs
        .par_iter()
        .map(|(rel, nb)| process_unit(ws, rel, *nb))
        .collect();

    let mut units = Vec::new();
    let mut merged = UnitFacts::default();
    for outcome in outcomes {
        skipped.extend(outcome.diags);
        let Some((st, facts)) = outcome.unit else { continue };
        units.push(st);
        let offset = merged.calls.len();
        merged.calls.extend(facts.calls.into_iter().enumerate().map(|(i, mut c)| {
            c.id = offset + i;
            c
        }));
        merged.imports.extend(facts.imports);
        merged.attribute_accesses.extend(facts.attribute_accesses);
        merged.functions.extend(facts.functions);
        merged.loops.extend(facts.loops);
        merged.except_handlers.extend(facts.except_handlers);
        merged.env_reads.extend(facts.env_reads);
    }
    if units.is_empty() {
        return Err(ModelError::EmptyModel {
            root: ws.root.display().to_string(),
        });
    }

    let unit_paths: Vec<String> = units.iter().map(|u| u.path.clone()).collect();
    let call_graph = build_call_graph(&unit_paths, &merged.functions, &merged.calls);
    let retry = RetryIndex::build(&merged.calls, &merged.functions, kb);
    let providers = detect_providers(&merged.imports, &merged.calls, kb);
    let datasets = detect_datasets(&merged.calls, kb);
    let http_calls = detect_http(&merged.calls, &retry, kb);
    let (config, config_diags) = scan_config_env(&ws.root, &files.config_files, merged.env_reads);
    skipped.extend(config_diags);

    Ok(ProjectModel {
        workspace: ws.clone(),
        files,
        units,
        imports: merged.imports,
        calls: merged.calls,
        attribute_accesses: merged.attribute_accesses,
        functions: merged.functions,
        loops: merged.loops,
        except_handlers: merged.except_handlers,
        call_graph,
        datasets,
        http_calls,
        config,
        providers,
        retry,
        skipped,
    })
}
