//! Execute each slice against the original program on generated inputs.
//!
//! Run with `cargo run --example oracle_check -- [trials] [seed]`

use vdmslice::interp::oracle::{check, named_criteria, CheckOptions};
use vdmslice::Specification;

const CORPUS: [(&str, &str); 6] = [
    ("twoops", include_str!("../corpus/twoops.vdmsl")),
    ("memberbook_bad", include_str!("../corpus/memberbook_bad.vdmsl")),
    ("memberbook_fixed", include_str!("../corpus/memberbook_fixed.vdmsl")),
    ("memberbook_refactored", include_str!("../corpus/memberbook_refactored.vdmsl")),
    ("memberbook_simplified", include_str!("../corpus/memberbook_simplified.vdmsl")),
    ("valuesem", include_str!("../corpus/valuesem.vdmsl")),
];

fn main() {
    let mut args = std::env::args().skip(1);
    let mut options = CheckOptions::default();
    if let Some(t) = args.next() {
        options.trials = t.parse().expect("trials is a number");
    }
    if let Some(s) = args.next() {
        options.seed = s.parse().expect("seed is a number");
    }

    let mut failures = 0;
    for (name, src) in CORPUS {
        let spec = Specification::parse(src).unwrap();
        for c in named_criteria(&spec.document) {
            let report = check(&spec.document, &spec.symbols, &c, options).unwrap();
            let verdict = if report.passed() { "ok" } else { "DISAGREE" };
            println!("{name:>22}  {c}: {}/{} compared, {verdict}", report.compared, report.trials);
            for m in &report.mismatches {
                println!("    args {:?}: original {}, reduced {:?}", m.args, m.original, m.reduced);
            }
            failures += report.mismatches.len();
        }
    }
    std::process::exit(i32::from(failures > 0));
}
