use super::*;

fn default_kb() -> KnowledgeBase {
    KnowledgeBase::default_catalog().expect("default catalog loads")
}

const MINIMAL: &str = r#"
version = "t"

[[entries]]
category = "provider_signature"
provider = "gcp"
match_kind = "import_prefix"
pattern = "vertexai"
"#;

#[test]
fn default_catalog_names_the_three_provider_sdks() {
    let kb = default_kb();
    let sigs = kb.patterns_for(Category::ProviderSignature, Provider::Any);
    for (provider, name) in [
        (Provider::Aws, "boto3"),
        (Provider::Azure, "azureml"),
        (Provider::Gcp, "vertexai"),
    ] {
        assert!(
            sigs.iter()
                .any(|e| e.provider == provider && e.pattern.text() == name),
            "missing signature {name}"
        );
    }
}

#[test]
fn empty_catalog_is_malformed() {
    let err = KnowledgeBase::from_toml_str("", "empty.toml").unwrap_err();
    match err {
        KbError::MalformedCatalog { reason, .. } => assert!(reason.contains("provider_signature")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn duplicate_triple_is_reported_with_its_line() {
    let text = format!("{MINIMAL}\n[[entries]]\ncategory = \"provider_signature\"\nprovider = \"gcp\"\nmatch_kind = \"import_prefix\"\npattern = \"vertexai\"\n");
    let err = KnowledgeBase::from_toml_str(&text, "dup.toml").unwrap_err();
    match err {
        KbError::MalformedCatalog { file, line, reason } => {
            assert_eq!(file, "dup.toml");
            assert_eq!(line, Some(10));
            assert!(reason.contains("duplicate"), "{reason}");
            assert!(reason.contains("vertexai"), "{reason}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_compiling_regex_is_malformed() {
    let text = format!("{MINIMAL}\n[[entries]]\ncategory = \"training_call\"\nprovider = \"any\"\nmatch_kind = \"dotted_call_name\"\npattern = \"(fit\"\nis_regex = true\n");
    let err = KnowledgeBase::from_toml_str(&text, "re.toml").unwrap_err();
    assert!(matches!(err, KbError::MalformedCatalog { line: Some(10), .. }), "{err}");
}

#[test]
fn single_field_output_group_is_rejected() {
    let text = format!("{MINIMAL}\n[[output_groups]]\nprovider = \"gcp\"\napi_context = \"x\"\nrequired_fields = [\"score\", \"score\"]\n");
    assert!(KnowledgeBase::from_toml_str(&text, "g.toml").is_err());
}

#[test]
fn unsigned_provider_in_batch_apis_is_rejected() {
    let text = format!("{MINIMAL}\n[[batch_apis]]\nprovider = \"aws\"\nsingle_item_call = \"x.y\"\nbatch_equivalent = \"z\"\n");
    let err = KnowledgeBase::from_toml_str(&text, "b.toml").unwrap_err();
    assert!(err.to_string().contains("aws"), "{err}");
}

#[test]
fn checkpoint_save_for_aws_is_non_empty() {
    assert!(!default_kb()
        .patterns_for(Category::CheckpointSave, Provider::Aws)
        .is_empty());
}

#[test]
fn any_query_is_superset_of_each_provider() {
    let kb = default_kb();
    let all = kb.patterns_for(Category::DriftMonitoringLibrary, Provider::Any);
    for p in Provider::CONCRETE {
        for e in kb.patterns_for(Category::DriftMonitoringLibrary, p) {
            assert!(all.iter().any(|a| std::ptr::eq(*a, e)));
        }
    }
}

#[test]
fn any_query_is_union_of_provider_queries() {
    let kb = default_kb();
    for category in [
        Category::ProviderSignature,
        Category::CheckpointSave,
        Category::DriftMonitoringCall,
        Category::RateLimitHeader,
    ] {
        let all: Vec<*const PatternEntry> = kb
            .patterns_for(category, Provider::Any)
            .into_iter()
            .map(|e| e as *const _)
            .collect();
        let mut union: Vec<*const PatternEntry> = Provider::CONCRETE
            .iter()
            .flat_map(|p| kb.patterns_for(category, *p))
            .map(|e| e as *const _)
            .collect();
        union.sort();
        union.dedup();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, union, "{category:?}");
    }
}

#[test]
fn zero_drift_entries_yield_empty_list() {
    let kb = KnowledgeBase::from_toml_str(MINIMAL, "m.toml").unwrap();
    assert!(kb
        .patterns_for(Category::DriftMonitoringLibrary, Provider::Gcp)
        .is_empty());
}

#[test]
fn detect_language_maps_to_multi_document_call() {
    let kb = default_kb();
    let entry = kb
        .lookup_batch_api(
            "azure.ai.textanalytics.TextAnalyticsClient.detect_language",
            Provider::Azure,
        )
        .unwrap()
        .expect("batch entry");
    assert!(entry.batch_equivalent.contains("documents=[...]"));
}

#[test]
fn print_has_no_batch_entry() {
    assert!(default_kb()
        .lookup_batch_api("print", Provider::Azure)
        .unwrap()
        .is_none());
}

#[test]
fn batch_lookup_is_provider_scoped() {
    let kb = default_kb();
    let name = "google.cloud.vision.ImageAnnotatorClient.label_detection";
    assert!(kb.lookup_batch_api(name, Provider::Gcp).unwrap().is_some());
    assert!(kb.lookup_batch_api(name, Provider::Aws).unwrap().is_none());
}

#[test]
fn overlapping_batch_patterns_surface_as_ambiguous() {
    let text = format!("{MINIMAL}\n[[batch_apis]]\nprovider = \"gcp\"\nsingle_item_call = \"a.b\"\nbatch_equivalent = \"x\"\n\n[[batch_apis]]\nprovider = \"gcp\"\nsingle_item_call = 'a\\..*'\nis_regex = true\nbatch_equivalent = \"y\"\n");
    let kb = KnowledgeBase::from_toml_str(&text, "amb.toml").unwrap();
    assert!(matches!(
        kb.lookup_batch_api("a.b", Provider::Gcp),
        Err(KbError::AmbiguousPattern { .. })
    ));
}

#[test]
fn default_catalog_has_no_ambiguous_batch_lookups_for_known_calls() {
    let kb = default_kb();
    for name in [
        "client.detect_sentiment",
        "client.translate_text",
        "client.analyze_sentiment",
        "client.recognize_entities",
        "client.invoke_endpoint",
    ] {
        for p in Provider::CONCRETE {
            kb.lookup_batch_api(name, p).unwrap();
        }
    }
}

#[test]
fn loading_twice_is_structurally_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kb.toml");
    std::fs::write(&path, KnowledgeBase::default_catalog_text()).unwrap();
    let a = load_kb(Some(&path)).unwrap();
    let b = load_kb(Some(&path)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, load_kb(None).unwrap());
}

#[test]
fn missing_file_is_malformed_catalog() {
    let err = load_kb(Some(Path::new("/nonexistent/kb.toml"))).unwrap_err();
    assert!(matches!(err, KbError::MalformedCatalog { .. }));
}

#[test]
fn openai_import_is_an_azure_signature() {
    assert_eq!(default_kb().signature_providers("openai"), vec![Provider::Azure]);
    assert_eq!(
        default_kb().signature_providers("google.cloud.language_v1"),
        vec![Provider::Gcp]
    );
    assert!(default_kb().signature_providers("google.cloud.storage").is_empty());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // No fuzzy matching: a name the pattern does not textually match never
        // yields a batch entry.
        #[test]
        fn batch_lookup_requires_textual_match(name in "[a-z_]{1,12}(\\.[a-z_]{1,12}){0,3}") {
            let kb = default_kb();
            for p in Provider::CONCRETE {
                let hit = kb.lookup_batch_api(&name, p).unwrap();
                let textual = kb.batch_apis.iter().any(|b| {
                    b.provider.applies_to(p)
                        && b.single_item_call.matches(MatchKind::DottedCallName, &name)
                });
                prop_assert_eq!(hit.is_some(), textual);
            }
        }
    }
}
