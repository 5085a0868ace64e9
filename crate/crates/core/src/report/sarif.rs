//! SARIF 2.1.0 rendering: one rule per misuse, one result per finding.

use serde_json::{json, Value};

use super::Report;
use crate::detectors::MisuseId;

const SCHEMA: &str = "https://json.schemastore.org/sarif-2.1.0.json";

pub(super) fn render(report: &Report) -> String {
    let rules: Vec<Value> = MisuseId::ALL
        .iter()
        .map(|m| {
            json!({
                "id": m.code(),
                "shortDescription": { "text": m.title() },
                "defaultConfiguration": { "level": "warning" },
            })
        })
        .collect();
    let results: Vec<Value> = report
        .findings
        .iter()
        .map(|f| {
            let rule_index = MisuseId::ALL.iter().position(|m| *m == f.misuse);
            let mut result = json!({
                "ruleId": f.misuse.code(),
                "ruleIndex": rule_index,
                "level": "warning",
                "message": { "text": f.evidence },
                "properties": { "scope": f.scope },
            });
            if let Some(file) = &f.file {
                let mut physical = json!({ "artifactLocation": { "uri": file } });
                if let Some(line) = f.line {
                    physical["region"] = json!({ "startLine": line });
                }
                result["locations"] = json!([{ "physicalLocation": physical }]);
            }
            result
        })
        .collect();
    let notifications: Vec<Value> = report
        .diagnostics
        .iter()
        .map(|d| {
            let mut physical = json!({ "artifactLocation": { "uri": d.path } });
            if let Some(line) = d.line {
                physical["region"] = json!({ "startLine": line });
            }
            json!({
                "level": "note",
                "message": { "text": d.reason },
                "locations": [{ "physicalLocation": physical }],
                "properties": { "stage": d.stage },
            })
        })
        .collect();
    let log = json!({
        "$schema": SCHEMA,
        "version": "2.1.0",
        "runs": [{
            "tool": { "driver": {
                "name": "svclint",
                "version": env!("CARGO_PKG_VERSION"),
                "rules": rules,
            }},
            "automationDetails": { "id": report.repo_name },
            "properties": {
                "kb_version": report.kb_version,
                "counts": report.counts,
                "timings": report.timings,
            },
            "invocations": [{
                "executionSuccessful": true,
                "toolExecutionNotifications": notifications,
            }],
            "results": results,
        }],
    });
    let mut s = serde_json::to_string_pretty(&log).expect("log serializes");
    s.push('\n');
    s
}

fn field<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T, String> {
    if v.is_null() {
        return Err(format!("missing {what}"));
    }
    serde_json::from_value(v.clone()).map_err(|e| format!("bad {what}: {e}"))
}

/// Reconstructs a report from a log written by [`render`].
pub(super) fn parse(text: &str) -> Result<Report, String> {
    use crate::detectors::{Finding, FindingScope};
    use crate::diag::{Diagnostic, Stage};

    let log: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let run = &log["runs"][0];
    let location = |v: &Value| -> (Option<String>, Option<u32>) {
        let phys = &v["locations"][0]["physicalLocation"];
        (
            phys["artifactLocation"]["uri"].as_str().map(str::to_string),
            phys["region"]["startLine"].as_u64().map(|l| l as u32),
        )
    };

    let mut findings = Vec::new();
    for r in run["results"].as_array().ok_or("missing results")? {
        let misuse: MisuseId = field(&r["ruleId"], "ruleId")?;
        let scope: FindingScope = field(&r["properties"]["scope"], "scope")?;
        let (file, line) = location(r);
        findings.push(Finding {
            misuse,
            file,
            line,
            evidence: r["message"]["text"].as_str().unwrap_or_default().to_string(),
            scope,
        });
    }
    let mut diagnostics = Vec::new();
    for n in run["invocations"][0]["toolExecutionNotifications"]
        .as_array()
        .ok_or("missing notifications")?
    {
        let stage: Stage = field(&n["properties"]["stage"], "stage")?;
        let (path, line) = location(n);
        diagnostics.push(Diagnostic {
            path: path.unwrap_or_default(),
            stage,
            line,
            reason: n["message"]["text"].as_str().unwrap_or_default().to_string(),
        });
    }
    let props = &run["properties"];
    Ok(Report {
        repo_name: run["automationDetails"]["id"].as_str().unwrap_or_default().to_string(),
        kb_version: props["kb_version"].as_str().unwrap_or_default().to_string(),
        counts: field(&props["counts"], "counts")?,
        findings,
        timings: field(&props["timings"], "timings")?,
        diagnostics,
    })
}
