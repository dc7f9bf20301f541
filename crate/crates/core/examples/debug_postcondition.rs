//! Find the statements behind a failing postcondition, then check the fix.
//!
//! Run with `cargo run --example debug_postcondition`

use vdmslice::interp::{Outcome, RunOptions, Value};
use vdmslice::report::annotate;
use vdmslice::slicer::{conjuncts, Criterion, Target, UpdateMode};
use vdmslice::Specification;

fn args() -> Vec<Value> {
    vec![Value::Text("John Doe".into()), Value::Text("jd@example.com".into())]
}

fn main() {
    let bad = Specification::parse(include_str!("../corpus/memberbook_bad.vdmsl")).unwrap();
    let outcome = bad.run("register", args(), RunOptions::default());
    println!("register(\"John Doe\", \"jd@example.com\"): {outcome}");

    let Outcome::AssertionViolation { node, .. } = outcome else {
        println!("no violation to explain");
        return;
    };
    // slice the conjunct that failed
    let post = bad.document.operation("register").unwrap().post.as_ref().unwrap();
    let k = conjuncts(post).iter().position(|c| c.id == node).map_or(1, |i| i + 1);
    let criterion = Criterion::new("register", Target::Postcondition(Some(k)));
    let result = bad.slice(&criterion, UpdateMode::Weak).unwrap();
    print!("{}", annotate(&bad.document, &criterion, UpdateMode::Weak, &result));

    let fixed = Specification::parse(include_str!("../corpus/memberbook_fixed.vdmsl")).unwrap();
    println!("after the fix: {}", fixed.run("register", args(), RunOptions::default()));
}
