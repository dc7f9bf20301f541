//! Acceptance gate: one PASS/FAIL line per criterion against the bundled
//! corpus. Exits non-zero if any criterion fails.
//!
//! Pinned limits: 50 oracle trials with seed 7, 10 repeated slicing runs,
//! and 5 s wall time per criterion in release builds (debug builds get 4x).

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use vdmslice::interp::oracle::{check, named_criteria, CheckOptions};
use vdmslice::interp::{AssertionKind, Outcome, RunOptions, Value};
use vdmslice::slicer::{Criterion, SliceResult, Target, UpdateMode};
use vdmslice::syntax::{NodeId, NodeKind, Position};
use vdmslice::Specification;

const CORPUS: [&str; 6] = [
    "twoops",
    "memberbook_bad",
    "memberbook_fixed",
    "memberbook_refactored",
    "memberbook_simplified",
    "valuesem",
];
const TRIALS: usize = 50;
const SEED: u64 = 7;
const REPEATS: usize = 10;

fn time_limit() -> Duration {
    if cfg!(debug_assertions) {
        Duration::from_secs(20)
    } else {
        Duration::from_secs(5)
    }
}

fn load_path(path: PathBuf) -> Specification {
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Specification::parse(&src).unwrap_or_else(|e| panic!("{}: {:?}", path.display(), e.diagnostics()))
}

fn corpus(name: &str) -> Specification {
    load_path(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("corpus/{name}.vdmsl")))
}

fn fixture(name: &str) -> Specification {
    load_path(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/{name}.vdmsl")))
}

fn sliced(spec: &Specification, op: &str, target: Target, mode: UpdateMode) -> Result<SliceResult, String> {
    spec.slice(&Criterion::new(op, target), mode).map_err(|e| e.to_string())
}

/// `(kind, source text)` for each node.
fn texts(spec: &Specification, nodes: &BTreeSet<NodeId>) -> BTreeSet<(String, String)> {
    let doc = &spec.document;
    nodes
        .iter()
        .map(|n| {
            let info = doc.info(*n).expect("slice nodes exist");
            (info.kind.as_str().to_string(), doc.text_of(info.span).to_string())
        })
        .collect()
}

fn has(spec: &Specification, r: &SliceResult, kind: NodeKind, text: &str) -> bool {
    r.nodes.iter().any(|n| {
        let info = spec.document.info(*n).unwrap();
        info.kind == kind && spec.document.text_of(info.span) == text
    })
}

fn text_args(items: &[&str]) -> Vec<Value> {
    items.iter().map(|s| Value::Text(s.to_string())).collect()
}

type Verdict = Result<String, String>;
type Check = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn twoops_golden() -> Verdict {
    let spec = corpus("twoops");
    let expected: BTreeSet<(String, String)> = [
        ("Assign", "b := a + x"),
        ("BinExp", "a + x"),
        ("Assign", "a := 7"),
        ("Call", "op1(5)"),
        ("Return", "return b"),
    ]
    .iter()
    .map(|(k, t)| (k.to_string(), t.to_string()))
    .collect();
    for mode in [UpdateMode::Weak, UpdateMode::StrongLiteral] {
        let r = sliced(&spec, "op2", Target::ReturnValue, mode)?;
        let got = texts(&spec, &r.nodes);
        ensure(got == expected, format!("{} mode: got {got:?}", mode.as_str()))?;
        let crit = texts(&spec, &r.criterion_nodes);
        ensure(
            crit == BTreeSet::from([("Name".to_string(), "b".to_string())]),
            format!("criterion nodes {crit:?}"),
        )?;
    }
    Ok("5 nodes in both modes, `b := 2` excluded".into())
}

fn debugging_scenario() -> Verdict {
    let args = text_args(&["John Doe", "john@example.com"]);
    let bad = corpus("memberbook_bad");
    match bad.run("register", args.clone(), RunOptions::default()) {
        Outcome::AssertionViolation { kind: AssertionKind::Post, .. } => {}
        other => return Err(format!("erroneous run: expected a postcondition violation, got {other}")),
    }
    let r = sliced(&bad, "register", Target::Postcondition(Some(1)), UpdateMode::Weak)?;
    ensure(has(&bad, &r, NodeKind::BinExp, "email <> nil"), "If condition missing from slice")?;
    ensure(has(&bad, &r, NodeKind::Assign, "i := NextId"), "then-branch `i := NextId` missing")?;
    let fixed = corpus("memberbook_fixed");
    match fixed.run("register", args, RunOptions::default()) {
        Outcome::Returned(Value::Int(1)) => {}
        other => return Err(format!("corrected run: expected 1, got {other}")),
    }
    Ok("violation reproduced; slice holds cond and reassignment; fix returns 1".into())
}

fn refactoring_overlap() -> Verdict {
    let spec = corpus("memberbook_fixed");
    let vars = ["NameBook", "EmailBook", "NextId"];
    let mut slices = Vec::new();
    for v in vars {
        let r = sliced(&spec, "register", Target::StateVariable(v.into()), UpdateMode::Weak)?;
        ensure(!r.nodes.is_empty(), format!("{v}: empty slice"))?;
        slices.push(r.nodes);
    }
    let dcl_line = spec
        .document
        .node_ids()
        .find(|n| spec.document.kind_of(*n) == Some(NodeKind::DclItem))
        .and_then(|n| spec.document.span_of(n))
        .map(|s| s.start.line)
        .ok_or("no dcl in corpus")?;
    let mut shared = BTreeSet::new();
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            for n in slices[i].intersection(&slices[j]) {
                let line = spec.document.span_of(*n).unwrap().start.line;
                ensure(
                    line == dcl_line,
                    format!("{} and {} share line {line}", vars[i], vars[j]),
                )?;
                shared.insert(*n);
            }
        }
    }
    ensure(!shared.is_empty(), "slices share nothing, expected the dcl line")?;
    Ok(format!("pairwise overlap confined to line {dcl_line}"))
}

fn dead_code() -> Verdict {
    let spec = corpus("memberbook_refactored");
    let r = sliced(&spec, "register", Target::Postcondition(Some(1)), UpdateMode::Weak)?;
    let conj = texts(&spec, &r.criterion_nodes);
    ensure(
        conj.iter().any(|(_, t)| t == "NameBook = NameBook~ munion {RESULT |-> name}"),
        format!("criterion is {conj:?}"),
    )?;
    let ifs: Vec<NodeId> = spec
        .document
        .node_ids()
        .filter(|n| spec.document.kind_of(*n) == Some(NodeKind::If))
        .collect();
    ensure(ifs.len() == 1, "expected one if statement")?;
    let under_if = r
        .nodes
        .iter()
        .filter(|n| spec.document.ancestors(**n).contains(&ifs[0]))
        .count();
    ensure(under_if == 0, format!("{under_if} slice nodes inside the if statement"))?;
    ensure(has(&spec, &r, NodeKind::Assign, "NameBook(i) := name"), "NameBook update missing")?;
    Ok("if statement and its branch excluded".into())
}

fn value_semantics() -> Verdict {
    let spec = corpus("valuesem");
    match spec.run("valueSemantics", vec![], RunOptions::default()) {
        Outcome::Returned(Value::Int(1)) => Ok("returns 1".into()),
        other => Err(format!("got {other}")),
    }
}

fn oracle_soundness() -> Verdict {
    let mut criteria = 0;
    let mut compared = 0;
    for name in CORPUS {
        let spec = corpus(name);
        for c in named_criteria(&spec.document) {
            let opts = CheckOptions { trials: TRIALS, seed: SEED, mode: UpdateMode::Weak };
            let report = check(&spec.document, &spec.symbols, &c, opts).map_err(|e| format!("{name} {c}: {e}"))?;
            if let Some(m) = report.mismatches.first() {
                return Err(format!(
                    "{name} {c}: {} disagreements, first original {} reduced {:?}",
                    report.mismatches.len(),
                    m.original,
                    m.reduced
                ));
            }
            criteria += 1;
            compared += report.compared;
        }
    }
    ensure(compared > 0, "no trial terminated normally")?;
    Ok(format!("{criteria} criteria, {compared} compared runs, 0 disagreements"))
}

fn loop_termination() -> Verdict {
    let spec = fixture("loops");
    let doc = &spec.document;
    // dependency tokens: one per declaration, one per expression node
    let universe = spec.symbols.declarations().len() + doc.node_ids().count();
    let mut criteria = named_criteria(doc);
    criteria.push(Criterion::new("grid", Target::ExpressionAt(Position::new(14, 21))));
    criteria.push(Criterion::new("collatz", Target::ExpressionAt(Position::new(27, 18))));
    let mut worst = 0;
    for c in &criteria {
        for mode in [UpdateMode::Weak, UpdateMode::StrongLiteral] {
            let first = spec.slice(c, mode).map_err(|e| format!("{c}: {e}"))?;
            ensure(first.stats.loop_iterations > 0, format!("{c}: no loop visited"))?;
            ensure(
                first.stats.loop_iterations <= universe,
                format!("{c}: {} loop passes exceed {universe}", first.stats.loop_iterations),
            )?;
            worst = worst.max(first.stats.loop_iterations);
            for _ in 1..REPEATS {
                let again = spec.slice(c, mode).map_err(|e| e.to_string())?;
                ensure(again == first, format!("{c}: result changed between runs"))?;
            }
        }
    }
    Ok(format!(
        "{} criteria x 2 modes x {REPEATS} runs identical; at most {worst} loop passes, bound {universe}",
        criteria.len()
    ))
}

fn mode_ordering() -> Verdict {
    let mut pairs = 0;
    for name in CORPUS {
        let spec = corpus(name);
        for c in named_criteria(&spec.document) {
            let weak = spec.slice(&c, UpdateMode::Weak).map_err(|e| e.to_string())?;
            let strong = spec.slice(&c, UpdateMode::StrongLiteral).map_err(|e| e.to_string())?;
            ensure(
                strong.nodes.is_subset(&weak.nodes),
                format!("{name} {c}: strong slice not contained in weak slice"),
            )?;
            pairs += 1;
        }
    }
    Ok(format!("strong within weak for {pairs} pairs"))
}

fn main() {
    let criteria: [Check; 8] = [
        ("two-operation golden slice", twoops_golden),
        ("debugging scenario", debugging_scenario),
        ("refactoring overlap", refactoring_overlap),
        ("dead code", dead_code),
        ("value semantics", value_semantics),
        ("oracle soundness", oracle_soundness),
        ("loop termination and determinism", loop_termination),
        ("mode ordering", mode_ordering),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed > time_limit() {
                Err(format!("took {elapsed:?}, limit {:?}", time_limit()))
            } else {
                Ok(detail)
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({} ms)", elapsed.as_millis()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
