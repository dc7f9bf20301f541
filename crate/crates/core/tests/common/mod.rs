#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use vdmslice::slicer::SliceResult;
use vdmslice::syntax::{NodeId, NodeKind};
use vdmslice::Specification;

pub const CORPUS: [&str; 6] = [
    "twoops",
    "memberbook_bad",
    "memberbook_fixed",
    "memberbook_refactored",
    "memberbook_simplified",
    "valuesem",
];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("corpus/{name}.vdmsl"))
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/{name}.vdmsl"))
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap()
}

pub fn load(src: &str) -> Specification {
    Specification::parse(src).unwrap_or_else(|e| panic!("{:?}", e.diagnostics()))
}

pub fn corpus(name: &str) -> Specification {
    load(&source(name))
}

pub fn fixture(name: &str) -> Specification {
    load(&std::fs::read_to_string(fixture_path(name)).unwrap())
}

/// `(kind, text)` of every node in `nodes`.
pub fn texts(spec: &Specification, nodes: &BTreeSet<NodeId>) -> BTreeSet<(String, String)> {
    nodes
        .iter()
        .map(|n| {
            let info = spec.document.info(*n).unwrap();
            (info.kind.as_str().to_string(), spec.document.text_of(info.span).to_string())
        })
        .collect()
}

/// Source text of the statement-level nodes in a slice.
pub fn statements(spec: &Specification, r: &SliceResult) -> BTreeSet<String> {
    r.nodes
        .iter()
        .filter_map(|n| {
            let info = spec.document.info(*n).unwrap();
            (info.kind.is_statement() || info.kind == NodeKind::DclItem)
                .then(|| spec.document.text_of(info.span).to_string())
        })
        .collect()
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}
