//! Compound values are copied on assignment: updating `l2` leaves `l1`
//! alone, and the slice agrees.
//!
//! Run with `cargo run --example value_semantics`

use vdmslice::interp::RunOptions;
use vdmslice::slicer::{Criterion, Target, UpdateMode};
use vdmslice::Specification;

fn main() {
    let spec = Specification::parse(include_str!("../corpus/valuesem.vdmsl")).unwrap();
    println!("{}", spec.run("valueSemantics", vec![], RunOptions::default()));

    let result = spec
        .slice(&Criterion::new("valueSemantics", Target::ReturnValue), UpdateMode::Weak)
        .unwrap();
    for (_, kind, span) in result.spans(&spec.document) {
        if kind.is_statement() {
            println!("  {span} {}", spec.document.text_of(span));
        }
    }
}
