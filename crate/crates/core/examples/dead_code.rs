//! Statements outside the slice of a weakened postcondition are candidates
//! for removal.
//!
//! Run with `cargo run --example dead_code`

use std::collections::BTreeSet;

use vdmslice::slicer::{Criterion, Target, UpdateMode};
use vdmslice::syntax::{walk, NodeRef};
use vdmslice::Specification;

fn main() {
    let spec = Specification::parse(include_str!("../corpus/memberbook_refactored.vdmsl")).unwrap();
    let doc = &spec.document;
    // keep only the NameBook conjunct
    let result = spec
        .slice(&Criterion::new("register", Target::Postcondition(Some(1))), UpdateMode::Weak)
        .unwrap();

    let mut live = BTreeSet::new();
    for n in &result.nodes {
        live.extend(doc.ancestors(*n));
    }
    let op = doc.operation("register").unwrap();
    walk(NodeRef::Stmt(&op.body), &mut |n| {
        if let NodeRef::Stmt(s) = n {
            let parent_live = doc.parent_of(s.id).is_none_or(|p| live.contains(&p));
            if !live.contains(&s.id) && parent_live {
                println!("unused at {}: {}", s.span, doc.text_of(s.span));
            }
        }
    });
    println!("visited: {:?}", result.visited_definitions);
}
