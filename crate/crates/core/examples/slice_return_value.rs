//! Backward slice for an operation's return value, following a call into
//! another operation.
//!
//! Run with `cargo run --example slice_return_value`

use vdmslice::report::annotate;
use vdmslice::slicer::{Criterion, Target, UpdateMode};
use vdmslice::Specification;

fn main() {
    let spec = Specification::parse(include_str!("../corpus/twoops.vdmsl")).expect("corpus parses");
    let criterion = Criterion::new("op2", Target::ReturnValue);
    let result = spec.slice(&criterion, UpdateMode::Weak).expect("op2 returns a value");

    print!("{}", annotate(&spec.document, &criterion, UpdateMode::Weak, &result));
    // `b := 2` is overwritten by the call to op1, so it stays out
    println!(
        "statements: {}, summaries computed: {}",
        result
            .spans(&spec.document)
            .iter()
            .filter(|(_, k, _)| k.is_statement())
            .count(),
        result.stats.summaries_computed
    );
}
