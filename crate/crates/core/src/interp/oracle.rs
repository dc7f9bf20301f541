//! Executable check of slices.
//!
//! A slice is sound for an input when the program reduced to the slice
//! observes the same criterion value as the original program. Statements
//! without any slice node beneath them become `skip`; declarations stay so
//! the reduced program still binds, but unsliced initializers are dropped.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Interpreter, Outcome, RunOptions, Value};
use crate::binder::SymbolTable;
use crate::slicer::{
    conjuncts, expression_at, postcondition_targets, slice, Criterion, CriterionError,
    SliceOptions, SliceResult, Target, UpdateMode,
};
use crate::syntax::*;

/// What a run shows about the criterion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observation {
    Value(Value),
    /// Values of a body expression, one per evaluation.
    Trace(Vec<Value>),
    /// The criterion could not be evaluated at exit.
    Failed(String),
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Value(v) => write!(f, "{v}"),
            Observation::Trace(vs) => {
                let parts: Vec<String> = vs.iter().map(Value::to_string).collect();
                write!(f, "trace [{}]", parts.join(", "))
            }
            Observation::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

/// Copy of `doc` reduced to the nodes in `keep`.
pub fn reduce(doc: &Document, keep: &BTreeSet<NodeId>) -> Document {
    let mut live = BTreeSet::new();
    for n in keep {
        live.extend(doc.ancestors(*n));
    }
    let mut out = doc.clone();
    for op in &mut out.operations {
        op.body = reduce_stmt(&op.body, &live);
    }
    out
}

fn reduce_stmt(s: &Statement, live: &BTreeSet<NodeId>) -> Statement {
    if !live.contains(&s.id) {
        return Statement {
            id: s.id,
            span: s.span,
            kind: StmtKind::Skip,
        };
    }
    let kind = match &s.kind {
        StmtKind::Block { dcls, stmts } => StmtKind::Block {
            dcls: dcls
                .iter()
                .map(|d| DclItem {
                    init: d.init.clone().filter(|_| live.contains(&d.id)),
                    ..d.clone()
                })
                .collect(),
            stmts: stmts.iter().map(|x| reduce_stmt(x, live)).collect(),
        },
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => StmtKind::If {
            cond: cond.clone(),
            then_branch: Box::new(reduce_stmt(then_branch, live)),
            else_branch: else_branch.as_ref().map(|e| Box::new(reduce_stmt(e, live))),
        },
        StmtKind::While { cond, body } => StmtKind::While {
            cond: cond.clone(),
            body: Box::new(reduce_stmt(body, live)),
        },
        StmtKind::Let { bindings, body } => StmtKind::Let {
            bindings: bindings
                .iter()
                .map(|b| {
                    if live.contains(&b.id) {
                        b.clone()
                    } else {
                        // nothing kept reads these names
                        LetBinding {
                            pattern: Pattern {
                                kind: PatternKind::DontCare,
                                ..b.pattern.clone()
                            },
                            value: Expr {
                                kind: ExprKind::Literal(Literal::Nil),
                                ..b.value.clone()
                            },
                            ..b.clone()
                        }
                    }
                })
                .collect(),
            body: Box::new(reduce_stmt(body, live)),
        },
        other => other.clone(),
    };
    Statement {
        id: s.id,
        span: s.span,
        kind,
    }
}

/// Runs `criterion.operation` on `args` and observes the criterion.
/// `Err` carries the outcome of a run that did not finish normally.
pub fn observe(
    doc: &Document,
    table: &SymbolTable,
    criterion: &Criterion,
    args: &[Value],
    lenient: bool,
) -> Result<Observation, Outcome> {
    let op = doc
        .operation(&criterion.operation)
        .expect("criterion was resolved");
    let watch = match &criterion.target {
        Target::ExpressionAt(p) => expression_at(doc, op, *p).ok(),
        _ => None,
    };
    let options = RunOptions {
        check_assertions: false,
        step_limit: 200_000,
        lenient_return: lenient,
        watch,
    };
    let mut it = Interpreter::new(doc, table, options)?;
    let outcome = it.call_operation(&criterion.operation, args.to_vec());
    if !outcome.is_normal() {
        return Err(outcome);
    }
    Ok(match &criterion.target {
        Target::ReturnValue => match outcome {
            Outcome::Returned(v) => Observation::Value(v),
            _ => Observation::Value(Value::Nil),
        },
        Target::StateVariable(name) => match it.state_value(name) {
            Some(v) => Observation::Value(v.clone()),
            None => Observation::Failed(format!("`{name}` has no value")),
        },
        Target::Postcondition(k) => {
            let targets = postcondition_targets(op, *k).expect("criterion was resolved");
            let mut values = Vec::new();
            for e in targets {
                match it.eval_at_exit(e) {
                    Ok(v) => values.push(v),
                    Err(o) => return Ok(Observation::Failed(o.to_string())),
                }
            }
            Observation::Value(Value::Seq(values))
        }
        Target::ExpressionAt(_) => Observation::Trace(it.trace().to_vec()),
    })
}

/// Original and reduced observations for one input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedRun {
    pub original: Result<Observation, Outcome>,
    pub reduced: Result<Observation, Outcome>,
}

impl ReducedRun {
    /// The original finished normally and the reduced program agrees.
    pub fn agrees(&self) -> bool {
        self.original.is_ok() && self.original == self.reduced
    }
}

pub fn run_reduced(
    doc: &Document,
    table: &SymbolTable,
    criterion: &Criterion,
    result: &SliceResult,
    args: &[Value],
) -> ReducedRun {
    let keep: BTreeSet<NodeId> = result.nodes.union(&result.criterion_nodes).copied().collect();
    let reduced = reduce(doc, &keep);
    ReducedRun {
        original: observe(doc, table, criterion, args, false),
        reduced: observe(&reduced, table, criterion, args, true),
    }
}

/// Random value of type `ty`. Named types outside the basic ones are
/// treated as text.
pub fn generate(ty: &TypeExpr, rng: &mut impl Rng) -> Value {
    match &ty.kind {
        TypeKind::Named(n) => match n.as_str() {
            "nat" | "int" => Value::Int(rng.gen_range(0..=9)),
            "nat1" => Value::Int(rng.gen_range(1..=9)),
            "bool" => Value::Bool(rng.gen()),
            "char" => Value::Char(rng.gen_range('a'..='e')),
            _ => {
                let len = rng.gen_range(0..=3);
                Value::Text((0..len).map(|_| rng.gen_range('a'..='c')).collect())
            }
        },
        TypeKind::Quote(q) => Value::Quote(q.clone()),
        TypeKind::Optional(t) => {
            if rng.gen_ratio(1, 3) {
                Value::Nil
            } else {
                generate(t, rng)
            }
        }
        TypeKind::SetOf(t) => {
            let n = rng.gen_range(0..=3);
            Value::Set((0..n).map(|_| generate(t, rng)).collect())
        }
        TypeKind::SeqOf { elem, nonempty } => {
            let n = rng.gen_range(usize::from(*nonempty)..=3);
            Value::Seq((0..n).map(|_| generate(elem, rng)).collect())
        }
        TypeKind::Map { from, to, .. } => {
            let n = rng.gen_range(0..=3);
            Value::Map((0..n).map(|_| (generate(from, rng), generate(to, rng))).collect())
        }
        TypeKind::Product(ts) => Value::Tuple(ts.iter().map(|t| generate(t, rng)).collect()),
        TypeKind::Union(ts) => {
            let i = rng.gen_range(0..ts.len());
            generate(&ts[i], rng)
        }
    }
}

/// Every criterion the tools name directly for `doc`: each return value,
/// postcondition conjunct, and state variable of each operation.
pub fn named_criteria(doc: &Document) -> Vec<Criterion> {
    let mut out = Vec::new();
    for op in &doc.operations {
        let name = &op.name.name;
        if op.result_type.is_some() {
            out.push(Criterion::new(name, Target::ReturnValue));
        }
        if let Some(post) = &op.post {
            for k in 1..=conjuncts(post).len() {
                out.push(Criterion::new(name, Target::Postcondition(Some(k))));
            }
        }
        for v in doc.state_field_names() {
            out.push(Criterion::new(name, Target::StateVariable(v.to_string())));
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub trials: usize,
    pub seed: u64,
    pub mode: UpdateMode,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            trials: 50,
            seed: 7,
            mode: UpdateMode::Weak,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mismatch {
    pub args: Vec<Value>,
    pub original: Observation,
    pub reduced: Result<Observation, Outcome>,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub criterion: Criterion,
    pub trials: usize,
    /// Trials whose original run finished normally.
    pub compared: usize,
    pub mismatches: Vec<Mismatch>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares original and reduced runs on `options.trials` generated inputs.
pub fn check(
    doc: &Document,
    table: &SymbolTable,
    criterion: &Criterion,
    options: CheckOptions,
) -> Result<CheckReport, CriterionError> {
    let result = slice(doc, table, criterion, SliceOptions { mode: options.mode })?;
    let op = doc
        .operation(&criterion.operation)
        .expect("resolved by slice");
    let keep: BTreeSet<NodeId> = result.nodes.union(&result.criterion_nodes).copied().collect();
    let reduced = reduce(doc, &keep);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut report = CheckReport {
        criterion: criterion.clone(),
        trials: options.trials,
        compared: 0,
        mismatches: Vec::new(),
    };
    for _ in 0..options.trials {
        let args: Vec<Value> = op.param_types.iter().map(|t| generate(t, &mut rng)).collect();
        let Ok(original) = observe(doc, table, criterion, &args, false) else {
            continue;
        };
        report.compared += 1;
        let red = observe(&reduced, table, criterion, &args, true);
        if red.as_ref() != Ok(&original) {
            report.mismatches.push(Mismatch {
                args,
                original,
                reduced: red,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binder::bind;
    use crate::parser::parse_document;

    #[test]
    fn full_slice_reduction_agrees() {
        let doc = parse_document(include_str!("../../corpus/memberbook_fixed.vdmsl")).unwrap();
        let table = bind(&doc).unwrap();
        let c = Criterion::new("register", Target::StateVariable("NameBook".into()));
        let mut r = slice(&doc, &table, &c, SliceOptions::default()).unwrap();
        r.nodes = doc.node_ids().collect();
        let args = [Value::Text("A".into()), Value::Nil];
        assert!(run_reduced(&doc, &table, &c, &r, &args).agrees());
    }

    #[test]
    fn empty_reduction_changes_return() {
        let doc = parse_document(include_str!("../../corpus/twoops.vdmsl")).unwrap();
        let table = bind(&doc).unwrap();
        let c = Criterion::new("op2", Target::ReturnValue);
        let mut r = slice(&doc, &table, &c, SliceOptions::default()).unwrap();
        r.nodes.clear();
        let run = run_reduced(&doc, &table, &c, &r, &[]);
        assert_eq!(run.original, Ok(Observation::Value(Value::Int(12))));
        assert!(!run.agrees());
    }

    #[test]
    fn generator_is_seeded() {
        let ty = crate::parser::parse_document(
            "operations op : seq of nat * [bool] ==> () op(a, b) == skip",
        )
        .unwrap()
        .operations[0]
            .param_types
            .clone();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ty.iter().map(|t| generate(t, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        for v in draw(3) {
            assert!(matches!(v, Value::Seq(_) | Value::Bool(_) | Value::Nil));
        }
    }
}
