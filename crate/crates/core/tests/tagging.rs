use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pressflow::cli::{tag_records, TagConfig};
use pressflow::corpus::YearRange;

#[test]
fn tagger_corpus_matches_expected_tags() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let records = tag_records(&TagConfig {
        input: vec![fixtures.join("tagger_corpus.jsonl")],
        years: YearRange::new(2015, 2015).unwrap(),
        ..TagConfig::default()
    })
    .unwrap();
    let mut got: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in records {
        got.entry(r.article_id).or_default().insert(r.state);
    }
    let expected = std::fs::read_to_string(fixtures.join("tagger_expected.tsv")).unwrap();
    for line in expected.lines() {
        let (id, states) = line.split_once('\t').unwrap();
        let want: BTreeSet<String> = states.split(',').filter(|s| !s.is_empty()).map(String::from).collect();
        assert_eq!(got.remove(id).unwrap_or_default(), want, "{id}");
    }
    assert!(got.is_empty(), "unexpected articles {got:?}");
}
