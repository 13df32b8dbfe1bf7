mod common;

use common::*;
use cptgen::document::{ElicitationDocument, ErrorKind, Strictness};
use cptgen_core::{generate_cpt, ParentalConfiguration};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fixtures_are_canonical() {
    for name in ["fig1.cpt.json", "pt3.cpt.json"] {
        let bytes = fixture_bytes(name);
        let doc = ElicitationDocument::load(&bytes, Strictness::Strict).unwrap();
        assert_eq!(doc.to_canonical_bytes(), &bytes[..], "{name} is not in canonical form");
    }
}

#[test]
fn fig1_fixture_regenerates_reference_row() {
    let doc = load_fixture("fig1.cpt.json");
    assert_eq!(doc.spec().weights(), vec![0.5, 0.25, 0.25]);
    let result = generate_cpt(doc.spec(), doc.anchors()).unwrap();
    assert_eq!(result.cpt.len(), 125);
    assert_eq!(doc.anchors().len(), 5);
    let target = doc.configuration(&labels(&[("PM", "vh"), ("PT", "vl"), ("ME", "vl")])).unwrap();
    let row = result.cpt.row(&target).unwrap();
    assert!(max_abs_diff(row.values(), &COL1) <= 1e-12, "{:?}", row.values());
}

#[test]
fn pt3_fixture_needs_seven_anchors() {
    let doc = load_fixture("pt3.cpt.json");
    assert_eq!(doc.anchors().compat().distinct_anchor_count(), 7);
    assert_eq!(doc.spec().configuration_count(), 75);
}

#[test]
fn missing_anchor_is_listed() {
    let mut raw = load_fixture("pt3.cpt.json").raw().clone();
    let gap = labels(&[("PM", "vl"), ("PT", "l"), ("ME", "l")]);
    raw.anchors.retain(|a| a.configuration != gap);
    assert_eq!(raw.anchors.len(), 6);
    let err = ElicitationDocument::from_raw(raw).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Invalid);
    let p = &err.problems[0];
    assert_eq!(p.path, "anchors");
    assert_eq!(p.code, "missing_anchors");
    assert!(p.message.contains("{PM=vl, PT=l, ME=l}"), "{}", p.message);
}

#[test]
fn weights_summing_above_one_are_located() {
    let text = String::from_utf8(fixture_bytes("fig1.cpt.json")).unwrap();
    let text = text.replacen("\"weight\": 0.5", "\"weight\": 0.7", 1);
    let err = ElicitationDocument::load_str(&text, Strictness::Strict).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Invalid);
    assert_eq!(err.problems[0].code, "weights_sum");
    assert!(err.problems[0].path.starts_with("network.parents"));
    assert!(err.to_string().contains("weights must sum to 1"));
}

#[test]
fn diagonal_directive_needs_equal_state_lists() {
    let mut raw = load_fixture("fig1.cpt.json").raw().clone();
    raw.network.parents[1].states.truncate(3);
    let err = ElicitationDocument::from_raw(raw).unwrap_err();
    assert_eq!(err.problems[0].path, "compatibility.diagonal");
    assert_eq!(err.problems[0].code, "one_to_one_unavailable");
}

#[test]
fn diagonal_directive_mixes_with_explicit_entries() {
    // PT=l steered to a non-diagonal configuration; everything else diagonal
    let mut raw = load_fixture("fig1.cpt.json").raw().clone();
    let steered = labels(&[("PM", "vl"), ("PT", "l"), ("ME", "l")]);
    raw.compatibility.entries.push(cptgen::document::RawEntry {
        parent: "PT".into(),
        state: "l".into(),
        configuration: steered.clone(),
    });
    raw.anchors.push(cptgen::document::RawAnchor {
        configuration: steered.clone(),
        distribution: vec![0.3, 0.5, 0.1, 0.05, 0.05],
    });
    let doc = ElicitationDocument::from_raw(raw).unwrap();
    assert_eq!(doc.anchors().len(), 6);
    let pt_l = doc.anchors().compat().resolve("PT", "l").unwrap();
    assert_eq!(*pt_l, doc.configuration(&steered).unwrap());
    let again = ElicitationDocument::load(doc.to_canonical_bytes(), Strictness::Strict).unwrap();
    assert_eq!(again.to_canonical_bytes(), doc.to_canonical_bytes());
}

#[test]
fn self_inconsistent_entry_is_rejected() {
    let mut raw = load_fixture("pt3.cpt.json").raw().clone();
    let entry = raw.compatibility.entries.iter_mut().find(|e| e.parent == "PT" && e.state == "l").unwrap();
    entry.configuration = labels(&[("PM", "vl"), ("PT", "a"), ("ME", "l")]);
    let err = ElicitationDocument::from_raw(raw).unwrap_err();
    assert_eq!(err.problems[0].code, "self_inconsistent");
}

#[test]
fn lenient_mode_preserves_annotations() {
    let text = String::from_utf8(fixture_bytes("fig1.cpt.json")).unwrap();
    let text = text.replacen("\"compatibility\": {", "\"compatibility\": {\n    \"note\": \"agreed in workshop 2\",", 1);
    let strict = ElicitationDocument::load_str(&text, Strictness::Strict).unwrap_err();
    assert_eq!(strict.problems[0].path, "compatibility.note");
    let lenient = ElicitationDocument::load_str(&text, Strictness::Lenient).unwrap();
    assert_eq!(lenient.to_value()["compatibility"]["note"], "agreed in workshop 2");
    let again = ElicitationDocument::load(lenient.to_canonical_bytes(), Strictness::Lenient).unwrap();
    assert_eq!(again.to_canonical_bytes(), lenient.to_canonical_bytes());
}

#[test]
fn random_documents_round_trip_byte_stably() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd0c);
    for _ in 0..200 {
        let doc = random_document(&mut rng, 4, 5, 4);
        let once = doc.to_canonical_bytes().to_vec();
        let twice = ElicitationDocument::load(&once, Strictness::Strict).unwrap();
        assert_eq!(twice.to_canonical_bytes(), &once[..]);
        assert_eq!(twice.revision(), doc.revision());
        assert_eq!(twice.spec(), doc.spec());
        for (config, dist) in doc.anchors().iter() {
            assert_eq!(twice.anchors().get(config).unwrap(), dist);
        }
    }
}

#[test]
fn configuration_lookup_reports_unknown_labels() {
    let doc = load_fixture("fig1.cpt.json");
    assert!(doc.configuration(&labels(&[("PM", "vh"), ("PT", "vl")])).is_err());
    assert!(doc.configuration(&labels(&[("PM", "vh"), ("PT", "vl"), ("ME", "huge")])).is_err());
    let c = doc.configuration(&labels(&[("ME", "vl"), ("PM", "vh"), ("PT", "vl")])).unwrap();
    assert_eq!(c, ParentalConfiguration::new(doc.spec(), vec![4, 0, 0]).unwrap());
}

/// Every key the loader writes must be declared in the published schema.
#[test]
fn published_schema_covers_canonical_output() {
    fn resolve<'a>(root: &'a serde_json::Value, node: &'a serde_json::Value) -> &'a serde_json::Value {
        match node.get("$ref").and_then(|r| r.as_str()) {
            Some(r) => root.pointer(r.trim_start_matches('#')).expect("ref resolves"),
            None => node,
        }
    }
    fn walk(root: &serde_json::Value, schema: &serde_json::Value, value: &serde_json::Value, path: &str) {
        let schema = resolve(root, schema);
        match value {
            serde_json::Value::Object(map) => {
                let Some(props) = schema.get("properties") else { return };
                for (k, v) in map {
                    let sub = props.get(k).unwrap_or_else(|| panic!("{path}.{k} missing from schema"));
                    walk(root, sub, v, &format!("{path}.{k}"));
                }
            }
            serde_json::Value::Array(items) => {
                if let Some(sub) = schema.get("items") {
                    for v in items {
                        walk(root, sub, v, &format!("{path}[]"));
                    }
                }
            }
            _ => {}
        }
    }
    let schema_path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/elicitation-document.schema.json");
    let schema: serde_json::Value = serde_json::from_slice(&std::fs::read(schema_path).unwrap()).unwrap();
    for name in ["fig1.cpt.json", "pt3.cpt.json"] {
        walk(&schema, &schema, &load_fixture(name).to_value(), "");
    }
    let mut raw = load_fixture("fig1.cpt.json").raw().clone();
    raw.compatibility.entries.push(cptgen::document::RawEntry {
        parent: "PM".into(),
        state: "vl".into(),
        configuration: labels(&[("PM", "vl"), ("PT", "vl"), ("ME", "vl")]),
    });
    walk(&schema, &schema, &ElicitationDocument::from_raw(raw).unwrap().to_value(), "");
}
