use super::*;
use crate::detectors::Finding;
use proptest::prelude::*;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    std::fs::write(&p, text).unwrap();
    p
}

fn report(id: &str, findings: Vec<Finding>) -> Report {
    let mut findings = findings;
    crate::detectors::normalize_findings(&mut findings);
    Report::new(id.into(), "v".into(), findings, BTreeMap::new(), Vec::new())
}

fn batch(line: u32) -> Finding {
    Finding::call_site(MisuseId::BatchApiNotUsed, "app.py", line, "")
}

fn gt_with(id: &str, misuse: MisuseId, locations: &[(&str, u32)], count: usize) -> GroundTruth {
    let expected = Expected {
        count,
        locations: locations.iter().map(|(f, l)| (f.to_string(), *l)).collect(),
    };
    GroundTruth {
        projects: BTreeMap::from([(id.to_string(), BTreeMap::from([(misuse, expected)]))]),
    }
}

#[test]
fn manifest_and_labels_load() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p1/a.py", "x = 1\n");
    write(
        dir.path(),
        "p1/labels.toml",
        "project = \"p1\"\n[[finding]]\nmisuse = \"batch_api_not_used\"\ncount = 2\nlocations = [\"a.py:3\", \"a.py:9\"]\n\n[[finding]]\nmisuse = \"drift_monitoring_ignored\"\ncount = 1\n",
    );
    let manifest = write(
        dir.path(),
        "corpus.toml",
        "[[project]]\nid = \"p1\"\npath = \"p1\"\nlabels = \"p1/labels.toml\"\n\n[[project]]\nid = \"clean\"\npath = \"p1\"\n",
    );
    let gt = load_ground_truth(&manifest).unwrap();
    let p1 = &gt.projects["p1"];
    assert_eq!(p1[&MisuseId::BatchApiNotUsed].count, 2);
    assert!(p1[&MisuseId::BatchApiNotUsed].locations.contains(&("a.py".to_string(), 9)));
    assert!(p1[&MisuseId::DriftMonitoringIgnored].locations.is_empty());
    assert!(gt.projects["clean"].is_empty());
}

#[test]
fn empty_manifest_is_empty_truth() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(dir.path(), "corpus.toml", "");
    assert!(load_ground_truth(&manifest).unwrap().projects.is_empty());
}

#[test]
fn labels_for_unknown_project_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "l.toml", "project = \"ghost\"\n");
    let manifest = write(dir.path(), "corpus.toml", "[[project]]\nid = \"real\"\npath = \".\"\nlabels = \"l.toml\"\n");
    let err = load_ground_truth(&manifest).unwrap_err();
    assert!(matches!(err, EvalError::MalformedAnnotations { .. }), "{err}");
    assert!(err.to_string().contains("ghost"));
}

#[test]
fn inconsistent_labels_are_rejected() {
    let p = Path::new("l.toml");
    let bad_count = "[[finding]]\nmisuse = \"batch_api_not_used\"\ncount = 3\nlocations = [\"a.py:1\"]\n";
    assert!(parse_labels(p, bad_count, "x").is_err());
    let bad_code = "[[finding]]\nmisuse = \"nope\"\ncount = 1\n";
    assert!(parse_labels(p, bad_code, "x").is_err());
    let bad_loc = "[[finding]]\nmisuse = \"batch_api_not_used\"\ncount = 1\nlocations = [\"a.py\"]\n";
    assert!(parse_labels(p, bad_loc, "x").is_err());
    let twice = "[[finding]]\nmisuse = \"drift_monitoring_ignored\"\ncount = 1\n[[finding]]\nmisuse = \"drift_monitoring_ignored\"\ncount = 1\n";
    assert!(parse_labels(p, twice, "x").is_err());
}

#[test]
fn duplicate_manifest_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "c.toml", "[[project]]\nid = \"a\"\npath = \".\"\n[[project]]\nid = \"a\"\npath = \".\"\n");
    assert!(matches!(load_manifest(&m), Err(EvalError::MalformedManifest { .. })));
}

#[test]
fn edge_conventions() {
    let t = Tally::default();
    assert_eq!((t.precision(), t.recall(), t.f1()), (1.0, 1.0, 1.0));
    let none_right = Tally { tp: 0, fp: 2, fn_: 3 };
    assert_eq!((none_right.precision(), none_right.recall(), none_right.f1()), (0.0, 0.0, 0.0));
    let only_fp = Tally { tp: 0, fp: 1, fn_: 0 };
    assert_eq!((only_fp.precision(), only_fp.recall()), (0.0, 1.0));
}

#[test]
fn perfect_agreement() {
    let gt = gt_with("p", MisuseId::BatchApiNotUsed, &[("app.py", 4), ("app.py", 7)], 2);
    let m = score(&[report("p", vec![batch(4), batch(7)])], &gt);
    let t = m.per_misuse[&MisuseId::BatchApiNotUsed];
    assert_eq!((t.tp, t.fp, t.fn_), (2, 0, 0));
    for t in m.per_misuse.values() {
        assert_eq!((t.precision(), t.recall(), t.f1()), (1.0, 1.0, 1.0));
    }
}

#[test]
fn spurious_finding_only_touches_its_misuse() {
    let gt = gt_with("p", MisuseId::BatchApiNotUsed, &[("app.py", 4)], 1);
    let base = score(&[report("p", vec![batch(4)])], &gt);
    let extra = score(
        &[report("p", vec![batch(4), Finding::project(MisuseId::DriftMonitoringIgnored, "")])],
        &gt,
    );
    for m in MisuseId::ALL {
        let (a, b) = (base.per_misuse[&m], extra.per_misuse[&m]);
        if m == MisuseId::DriftMonitoringIgnored {
            assert_eq!(b.fp, a.fp + 1);
            assert_eq!((b.tp, b.fn_), (a.tp, a.fn_));
        } else {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn nine_of_ten_sites_plus_one_extra() {
    let expected: Vec<(&str, u32)> = (1..=10).map(|i| ("app.py", i * 10)).collect();
    let gt = gt_with("p", MisuseId::BatchApiNotUsed, &expected, 10);
    let mut found: Vec<Finding> = (1..=9).map(|i| batch(i * 10)).collect();
    found.push(batch(5));
    let t = score(&[report("p", found)], &gt).per_misuse[&MisuseId::BatchApiNotUsed];
    assert_eq!((t.tp, t.fp, t.fn_), (9, 1, 1));
    assert!((t.precision() - 0.9).abs() < 1e-12);
    assert!((t.recall() - 0.9).abs() < 1e-12);
}

#[test]
fn project_scope_matches_by_presence() {
    let gt = gt_with("p", MisuseId::DriftMonitoringIgnored, &[], 1);
    let hit = score(&[report("p", vec![Finding::project(MisuseId::DriftMonitoringIgnored, "")])], &gt);
    assert_eq!(hit.overall, Tally { tp: 1, fp: 0, fn_: 0 });
    let miss = score(&[report("p", vec![])], &gt);
    assert_eq!(miss.overall, Tally { tp: 0, fp: 0, fn_: 1 });
}

#[test]
fn overall_is_micro_average() {
    let mut gt = gt_with("p", MisuseId::BatchApiNotUsed, &[("app.py", 1)], 1);
    gt.projects.get_mut("p").unwrap().insert(
        MisuseId::DriftMonitoringIgnored,
        Expected { count: 1, locations: BTreeSet::new() },
    );
    let m = score(&[report("p", vec![batch(1), batch(2)])], &gt);
    assert_eq!(m.overall, Tally { tp: 1, fp: 1, fn_: 1 });
}

#[test]
fn linear_fit_recovers_a_line() {
    let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 + 2.0)).collect();
    let fit = fit_linear(&pts).unwrap();
    assert!((fit.slope - 3.0).abs() < 1e-9 && (fit.intercept - 2.0).abs() < 1e-9);
    assert!((fit.r2 - 1.0).abs() < 1e-9);
    assert!(fit_linear(&[(1.0, 1.0)]).is_none());
}

#[test]
fn medians() {
    assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    assert_eq!(median(&mut []), 0.0);
}

#[test]
fn generator_is_seeded_and_sized() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let n = synth::generate_project(a.path(), 1000, 7).unwrap();
    synth::generate_project(b.path(), 1000, 7).unwrap();
    assert!((1000..1300).contains(&n), "{n}");
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let entry = entry.unwrap();
        let other = std::fs::read(b.path().join(entry.file_name())).unwrap();
        assert_eq!(std::fs::read(entry.path()).unwrap(), other);
    }
}

#[test]
fn timing_records_follow_manifest_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::new();
    for (i, loc) in [100, 400, 900].iter().enumerate() {
        synth::generate_project(&dir.path().join(format!("p{i}")), *loc, i as u64).unwrap();
        manifest.push_str(&format!("[[project]]\nid = \"p{i}\"\npath = \"p{i}\"\n"));
    }
    manifest.push_str("[[project]]\nid = \"gone\"\npath = \"missing\"\n");
    let m = write(dir.path(), "corpus.toml", &manifest);
    let kb = crate::kb::KnowledgeBase::default_catalog().unwrap();
    let run = time_pipeline(&load_manifest(&m).unwrap(), &kb, 3);
    assert_eq!(run.records.len(), 3);
    assert_eq!(run.failures.len(), 1);
    let locs: Vec<usize> = run.records.iter().map(|r| r.lines_of_code).collect();
    assert!(locs.windows(2).all(|w| w[0] <= w[1]), "{locs:?}");
    for r in &run.records {
        let max_stage = r.stage_seconds.values().cloned().fold(0.0, f64::max);
        assert!(r.total_seconds >= max_stage && r.total_seconds >= 0.0);
    }
}

fn finding_strategy() -> impl Strategy<Value = Finding> {
    (0usize..7, proptest::option::of(1u32..6)).prop_map(|(m, line)| match line {
        Some(l) => Finding::call_site(MisuseId::ALL[m], "f.py", l, ""),
        None => Finding::project(MisuseId::ALL[m], ""),
    })
}

proptest! {
    #[test]
    fn score_ignores_report_order(
        a in proptest::collection::vec(finding_strategy(), 0..8),
        b in proptest::collection::vec(finding_strategy(), 0..8),
        truth in proptest::collection::vec(finding_strategy(), 0..8),
    ) {
        let mut labels: BTreeMap<MisuseId, Expected> = BTreeMap::new();
        for f in &truth {
            let e = labels.entry(f.misuse).or_default();
            match (f.file.clone(), f.line) {
                (Some(file), Some(line)) => { e.locations.insert((file, line)); }
                _ => {}
            }
            e.count = e.locations.len().max(1);
        }
        let gt = GroundTruth {
            projects: BTreeMap::from([("a".to_string(), labels.clone()), ("b".to_string(), labels)]),
        };
        let ra = report("a", a);
        let rb = report("b", b);
        let m1 = score(&[ra.clone(), rb.clone()], &gt);
        let m2 = score(&[rb, ra], &gt);
        prop_assert_eq!(m1, m2);
    }
}
