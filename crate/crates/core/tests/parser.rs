mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use vdmslice::parser::{
    parse_document, parse_expression, parse_pattern, parse_position, parse_statement, tokenize, TokenKind,
};
use vdmslice::syntax::{children_of, sexpr, smallest_node_covering, walk, NodeKind, NodeRef, Position, StmtKind};

use common::*;

fn all_documents() -> Vec<(String, String)> {
    let mut docs: Vec<(String, String)> = CORPUS.iter().map(|n| (n.to_string(), source(n))).collect();
    docs.push(("loops".into(), std::fs::read_to_string(fixture_path("loops")).unwrap()));
    docs
}

#[test]
fn every_listing_parses() {
    for (name, src) in all_documents() {
        assert!(parse_document(&src).is_ok(), "{name}");
    }
}

#[test]
fn memberbook_shape() {
    let doc = parse_document(&source("memberbook_bad")).unwrap();
    let state = doc.state.as_ref().unwrap();
    assert_eq!(state.fields.len(), 3);
    assert!(state.invariant.is_some() && state.init.is_some());
    assert_eq!(doc.operations.len(), 1);
    assert!(doc.operations[0].post.is_some());
}

#[test]
fn value_semantics_block_shape() {
    let doc = parse_document(&source("valuesem")).unwrap();
    match &doc.operations[0].body.kind {
        StmtKind::Block { dcls, stmts } => {
            assert_eq!(dcls.len(), 2);
            assert_eq!(stmts.len(), 4);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn tokenize_examples() {
    let texts = |s: &str| -> Vec<String> { tokenize(s).unwrap().into_iter().map(|t| t.text).collect() };
    assert_eq!(texts("NextId := NextId + 1"), ["NextId", ":=", "NextId", "+", "1"]);
    let toks = tokenize("NameBook~ munion {RESULT |-> name}").unwrap();
    let kinds: Vec<TokenKind> = toks.iter().map(|t| t.kind).collect();
    assert_eq!(
        kinds,
        [
            TokenKind::OldName,
            TokenKind::Keyword,
            TokenKind::Op,
            TokenKind::Keyword,
            TokenKind::Op,
            TokenKind::Ident,
            TokenKind::Op
        ]
    );
    assert_eq!(texts("{|->}"), ["{", "|->", "}"]);
    assert_eq!(texts("a -- comment\nb"), ["a", "b"]);
    assert!(tokenize("a # b").is_err());
}

#[test]
fn positions() {
    assert_eq!(parse_position("18:12").unwrap(), Position::new(18, 12));
    assert_eq!(parse_position("1:1").unwrap(), Position::new(1, 1));
    assert!(parse_position("0:5").is_err());
    assert!(parse_position("5").is_err());
}

#[test]
fn node_ids_are_unique() {
    for (name, src) in all_documents() {
        let doc = parse_document(&src).unwrap();
        let mut seen = BTreeSet::new();
        walk(doc.root(), &mut |n| assert!(seen.insert(n.id()), "{name}: duplicate {}", n.id()));
        assert_eq!(seen.len(), doc.node_ids().count(), "{name}");
    }
}

#[test]
fn spans_nest_and_siblings_are_ordered() {
    for (name, src) in all_documents() {
        let doc = parse_document(&src).unwrap();
        walk(doc.root(), &mut |n| {
            let kids = children_of(n);
            for k in &kids {
                assert!(n.span().contains(&k.span()), "{name}: {} escapes {}", k.span(), n.span());
            }
            for w in kids.windows(2) {
                assert!(w[0].span().end <= w[1].span().start, "{name}: {} then {}", w[0].span(), w[1].span());
            }
        });
    }
}

/// Each expression, statement, and pattern re-parses from its own text.
#[test]
fn node_text_round_trips() {
    for (name, src) in all_documents() {
        let doc = parse_document(&src).unwrap();
        let ops: Vec<&str> = doc.operations.iter().map(|o| o.name.name.as_str()).collect();
        let mut checked = 0;
        walk(doc.root(), &mut |n| {
            let text = doc.text_of(n.span());
            let again = match n {
                NodeRef::Expr(_) => parse_expression(text).map(|e| sexpr(NodeRef::Expr(&e))),
                NodeRef::Stmt(_) => parse_statement(text, &ops).map(|s| sexpr(NodeRef::Stmt(&s))),
                NodeRef::Pattern(_) => parse_pattern(text).map(|p| sexpr(NodeRef::Pattern(&p))),
                _ => return,
            };
            assert_eq!(again.as_deref(), Ok(sexpr(n).as_str()), "{name}: `{text}`");
            checked += 1;
        });
        assert!(checked > 0);
    }
}

#[test]
fn parsing_is_deterministic() {
    for (_, src) in all_documents() {
        let a = parse_document(&src).unwrap();
        let b = parse_document(&src).unwrap();
        assert_eq!(sexpr(a.root()), sexpr(b.root()));
    }
}

#[test]
fn smallest_covering_node() {
    let doc = parse_document(&source("twoops")).unwrap();
    let line = source("twoops").lines().position(|l| l.contains("return b")).unwrap() as u32 + 1;
    let col = source("twoops").lines().nth(line as usize - 1).unwrap().find("b)").unwrap() as u32 + 1;
    let n = smallest_node_covering(&doc, Position::new(line, col)).unwrap();
    assert_eq!(n.kind(), NodeKind::Name);
    assert_eq!(doc.text_of(n.span()), "b");
    // the blank line between the operations
    let blank = source("twoops").lines().position(|l| l.is_empty()).unwrap() as u32 + 1;
    assert!(smallest_node_covering(&doc, Position::new(blank, 1)).is_none_or(|n| n.kind() == NodeKind::Document));

    let src = source("memberbook_bad");
    let doc = parse_document(&src).unwrap();
    let line = src.lines().position(|l| l.contains("email <> nil")).unwrap();
    let col = src.lines().nth(line).unwrap().find("<>").unwrap();
    let n = smallest_node_covering(&doc, Position::new(line as u32 + 1, col as u32 + 1)).unwrap();
    let chain: Vec<String> = doc
        .ancestors(n.id())
        .into_iter()
        .map(|a| doc.text_of(doc.span_of(a).unwrap()).to_string())
        .collect();
    assert!(chain.iter().any(|t| t == "email <> nil"), "{chain:?}");
}

fn vocabulary() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "state", "S", "of", "a", ":", "nat", "end", "operations", "op", "()", "==>", "==", "(", ")", ";",
        "dcl", ":=", "if", "then", "else", "while", "do", "return", "1", "+", "x", "{", "|->", "}", "[",
        "]", "post", "RESULT", "a~", "let", "in", "=", "<>", "and", "or", "not", ",", "mk_S", "skip",
        "\"s\"", "'c'", "-- note\n", "\n", "values", "functions", "f", "->", "pre", "init", "inv",
    ])
    .prop_map(str::to_string)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn arbitrary_text_terminates(src in "\\PC{0,120}") {
        let _ = tokenize(&src);
        let _ = parse_document(&src);
    }

    #[test]
    fn token_soup_terminates(words in prop::collection::vec(vocabulary(), 0..60)) {
        let src = words.join(" ");
        if let Ok(doc) = parse_document(&src) {
            let mut seen = BTreeSet::new();
            walk(doc.root(), &mut |n| assert!(seen.insert(n.id())));
        }
    }

    #[test]
    fn parse_errors_lie_within_source(words in prop::collection::vec(vocabulary(), 1..40)) {
        let src = words.join(" ");
        let end = Position::new(src.lines().count().max(1) as u32 + 1, 1);
        if let Err(errors) = parse_document(&src) {
            prop_assert!(!errors.is_empty());
            for e in errors {
                prop_assert!(e.span.start >= Position::new(1, 1) && e.span.end <= end, "{:?}", e.span);
            }
        }
    }
}
