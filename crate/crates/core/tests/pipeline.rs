use std::path::{Path, PathBuf};
use std::process::Command;

use svclint_core::report::{parse_interchange, parse_structured};
use svclint_core::{acquire, analyze, render, KnowledgeBase, MisuseId, OutputFormat, ScanOptions, Workspace};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn git(dir: &Path, args: &[&str]) {
    let status = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_NAME", "t")
        .env("GIT_AUTHOR_EMAIL", "t@example.com")
        .env("GIT_COMMITTER_NAME", "t")
        .env("GIT_COMMITTER_EMAIL", "t@example.com")
        .status()
        .expect("git runs");
    assert!(status.success(), "git {args:?}");
}

#[test]
fn clones_a_repository_url_and_scans_it() {
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path().join("work");
    std::fs::create_dir(&work).unwrap();
    std::fs::copy(fixture("listing1/text_analysis.py"), work.join("text_analysis.py")).unwrap();
    git(&work, &["init", "--quiet"]);
    git(&work, &["add", "."]);
    git(&work, &["commit", "--quiet", "-m", "init"]);
    git(tmp.path(), &["clone", "--quiet", "--bare", "work", "sentiment.git"]);

    let url = format!("file://{}", tmp.path().join("sentiment.git").display());
    let scratch = tmp.path().join("scratch");
    let ws = acquire(&url, &scratch).unwrap();
    assert_eq!(ws.repo_name, "sentiment");
    assert!(ws.root.starts_with(scratch.canonicalize().unwrap()));

    let kb = KnowledgeBase::default_catalog().unwrap();
    let report = analyze(&ws, &kb, &ScanOptions::default()).unwrap();
    assert_eq!(report.repo_name, "sentiment");
    assert_eq!(report.counts[&MisuseId::BatchApiNotUsed], 1);

    // A second clone of the same URL lands next to the first one.
    let again = acquire(&url, &scratch).unwrap();
    assert_ne!(again.root, ws.root);
}

#[test]
fn unreachable_repository_is_an_acquisition_error() {
    let tmp = tempfile::tempdir().unwrap();
    let url = format!("file://{}/missing.git", tmp.path().display());
    let err = acquire(&url, tmp.path()).unwrap_err();
    assert!(err.to_string().contains("missing.git"), "{err}");
}

#[test]
fn reports_survive_both_serialized_formats() {
    let kb = KnowledgeBase::default_catalog().unwrap();
    for name in ["listing1", "listing2_fix", "listing3", "listing4_fix", "corpus/output/positive"] {
        let ws = Workspace::local(&fixture(name)).unwrap();
        let report = analyze(&ws, &kb, &ScanOptions::default()).unwrap().without_timings();
        let structured = parse_structured(&render(&report, OutputFormat::Structured)).unwrap();
        assert_eq!(structured, report, "{name}");
        let sarif = parse_interchange(&render(&report, OutputFormat::Interchange)).unwrap();
        assert_eq!(sarif, report, "{name}");
    }
}

#[test]
fn selection_limits_findings_but_not_counts_keys() {
    let kb = KnowledgeBase::default_catalog().unwrap();
    let ws = Workspace::local(&fixture("listing1")).unwrap();
    let opts = ScanOptions {
        selection: [MisuseId::BatchApiNotUsed].into(),
        ..ScanOptions::default()
    };
    let report = analyze(&ws, &kb, &opts).unwrap();
    assert_eq!(report.counts.len(), 7);
    assert!(report.findings.iter().all(|f| f.misuse == MisuseId::BatchApiNotUsed));
    assert_eq!(report.findings.len(), 1);
}

#[test]
fn loop_depth_zero_only_sees_lexical_loops() {
    let kb = KnowledgeBase::default_catalog().unwrap();
    let ws = Workspace::local(&fixture("corpus/batch/linked")).unwrap();
    let shallow = ScanOptions { max_loop_depth: 0, ..ScanOptions::default() };
    let report = analyze(&ws, &kb, &shallow).unwrap();
    assert_eq!(report.counts[&MisuseId::BatchApiNotUsed], 0);
    let report = analyze(&ws, &kb, &ScanOptions::default()).unwrap();
    assert_eq!(report.counts[&MisuseId::BatchApiNotUsed], 1);
}
