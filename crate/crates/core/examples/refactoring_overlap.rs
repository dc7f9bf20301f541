//! Per-variable slices show which statements each state variable needs.
//! Slices that barely overlap suggest the operation can be split.
//!
//! Run with `cargo run --example refactoring_overlap`

use std::collections::BTreeSet;

use vdmslice::slicer::{Criterion, Target, UpdateMode};
use vdmslice::Specification;

fn main() {
    let spec = Specification::parse(include_str!("../corpus/memberbook_fixed.vdmsl")).unwrap();
    let doc = &spec.document;
    let vars = doc.state_field_names();
    let mut lines = Vec::new();
    for v in &vars {
        let result = spec
            .slice(&Criterion::new("register", Target::StateVariable(v.to_string())), UpdateMode::Weak)
            .unwrap();
        let ls: BTreeSet<u32> = result.spans(doc).iter().map(|(_, _, s)| s.start.line).collect();
        println!("{v:>10}: lines {ls:?}");
        lines.push(ls);
    }
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            let shared: Vec<&u32> = lines[i].intersection(&lines[j]).collect();
            println!("{} & {}: {shared:?}", vars[i], vars[j]);
        }
    }
}
