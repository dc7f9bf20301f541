//! Reference interpreter for the executable subset.

pub mod oracle;
mod value;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

pub use value::Value;

use crate::binder::{DeclId, DeclKind, SymbolTable};
use crate::slicer::conjuncts;
use crate::syntax::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssertionKind {
    Pre,
    Post,
    Inv,
}

impl AssertionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AssertionKind::Pre => "precondition",
            AssertionKind::Post => "postcondition",
            AssertionKind::Inv => "invariant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuntimeErrorKind {
    MissingKey,
    IndexOutOfRange,
    MunionConflict,
    TypeMismatch,
    DivisionByZero,
    EmptySequence,
    PatternMismatch,
    Undefined,
    MissingReturn,
    ArityMismatch,
    UnknownOperation,
    Unsupported,
    Overflow,
    StepLimit,
    DepthLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Returned(Value),
    CompletedVoid,
    AssertionViolation {
        kind: AssertionKind,
        node: NodeId,
    },
    RuntimeError {
        kind: RuntimeErrorKind,
        node: NodeId,
        message: String,
    },
}

impl Outcome {
    pub fn is_normal(&self) -> bool {
        matches!(self, Outcome::Returned(_) | Outcome::CompletedVoid)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Returned(v) => write!(f, "returned {v}"),
            Outcome::CompletedVoid => f.write_str("completed"),
            Outcome::AssertionViolation { kind, .. } => write!(f, "{} violated", kind.as_str()),
            Outcome::RuntimeError { kind, message, .. } => write!(f, "runtime error ({kind:?}): {message}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Evaluate preconditions, postconditions, and the state invariant.
    pub check_assertions: bool,
    /// Statements plus expressions evaluated before giving up.
    pub step_limit: u64,
    /// A value-returning operation that finishes without `return` yields `nil`.
    pub lenient_return: bool,
    /// Record every value the expression with this id evaluates to.
    pub watch: Option<NodeId>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            check_assertions: true,
            step_limit: 1_000_000,
            lenient_return: false,
            watch: None,
        }
    }
}

const MAX_DEPTH: usize = 48;

/// Values of the state variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuntimeState {
    pub values: BTreeMap<DeclId, Value>,
}

enum Stop {
    Violation(AssertionKind, NodeId),
    Error(RuntimeErrorKind, NodeId, String),
}

impl From<Stop> for Outcome {
    fn from(s: Stop) -> Outcome {
        match s {
            Stop::Violation(kind, node) => Outcome::AssertionViolation { kind, node },
            Stop::Error(kind, node, message) => Outcome::RuntimeError {
                kind,
                node,
                message,
            },
        }
    }
}

type R<T> = Result<T, Stop>;

fn err<T>(kind: RuntimeErrorKind, node: NodeId, message: impl Into<String>) -> R<T> {
    Err(Stop::Error(kind, node, message.into()))
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

#[derive(Clone, Debug, Default)]
struct Frame {
    locals: HashMap<DeclId, Value>,
    old: Option<BTreeMap<DeclId, Value>>,
    result: Option<Value>,
}

pub struct Interpreter<'d> {
    doc: &'d Document,
    table: &'d SymbolTable,
    options: RunOptions,
    pub state: RuntimeState,
    values: HashMap<DeclId, Value>,
    frames: Vec<Frame>,
    steps: u64,
    trace: Vec<Value>,
    last_exit: Option<Frame>,
}

impl<'d> Interpreter<'d> {
    /// Evaluates value definitions and the state `init` clause.
    pub fn new(
        doc: &'d Document,
        table: &'d SymbolTable,
        options: RunOptions,
    ) -> Result<Self, Outcome> {
        let mut it = Interpreter {
            doc,
            table,
            options,
            state: RuntimeState::default(),
            values: HashMap::new(),
            frames: vec![Frame::default()],
            steps: 0,
            trace: Vec::new(),
            last_exit: None,
        };
        it.initialize().map_err(Outcome::from)?;
        Ok(it)
    }

    fn initialize(&mut self) -> R<()> {
        let doc = self.doc;
        for v in &doc.values {
            let val = self.eval(&v.value)?;
            let mut binds = Vec::new();
            if !self.match_pattern(&v.pattern, &val, &mut binds)? {
                return err(RuntimeErrorKind::PatternMismatch, v.id, "value definition does not match");
            }
            self.values.extend(binds);
        }
        let Some(state) = &doc.state else { return Ok(()) };
        let Some((_, init)) = &state.init else { return Ok(()) };
        let ExprKind::Binary {
            op: BinOp::Eq, rhs, ..
        } = &init.kind
        else {
            return err(RuntimeErrorKind::Unsupported, init.id, "init must have the form `s = mk_S(...)`");
        };
        match self.eval(rhs)? {
            Value::Record(_, fields) if fields.len() == state.fields.len() => {
                for (d, v) in self.table.state_fields().iter().zip(fields) {
                    self.state.values.insert(*d, v);
                }
            }
            other => {
                return err(
                    RuntimeErrorKind::TypeMismatch,
                    rhs.id,
                    format!("init value {other} does not match the state record"),
                )
            }
        }
        self.check_invariant()
    }

    /// Current value of the named state variable.
    pub fn state_value(&self, name: &str) -> Option<&Value> {
        self.state.values.get(&self.table.state_field(name)?)
    }

    /// Values recorded for the watched expression.
    pub fn trace(&self) -> &[Value] {
        &self.trace
    }

    pub fn call_operation(&mut self, name: &str, args: Vec<Value>) -> Outcome {
        let Some(op) = self.doc.operation(name) else {
            return Outcome::RuntimeError {
                kind: RuntimeErrorKind::UnknownOperation,
                node: self.doc.id,
                message: format!("unknown operation `{name}`"),
            };
        };
        match self.invoke_operation(op, args, op.id) {
            Ok(Some(v)) => Outcome::Returned(v),
            Ok(None) => Outcome::CompletedVoid,
            Err(stop) => stop.into(),
        }
    }

    /// Evaluates `expr` where the last completed top-level call's
    /// postcondition would be evaluated.
    pub fn eval_at_exit(&mut self, expr: &'d Expr) -> Result<Value, Outcome> {
        let frame = self.last_exit.clone().unwrap_or_default();
        self.frames.push(frame);
        let r = self.eval(expr);
        self.frames.pop();
        r.map_err(Outcome::from)
    }

    fn step(&mut self, node: NodeId) -> R<()> {
        self.steps += 1;
        if self.steps > self.options.step_limit {
            return err(RuntimeErrorKind::StepLimit, node, "step limit exceeded");
        }
        Ok(())
    }

    fn frame(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("a frame is always present")
    }

    fn watches(&self, part: &Expr) -> bool {
        self.options.watch.is_some_and(|w| {
            self.doc.ancestors(w).contains(&part.id)
        })
    }

    fn bind_params(&mut self, params: &'d [Pattern], args: &[Value], site: NodeId) -> R<Frame> {
        if params.len() != args.len() {
            return err(
                RuntimeErrorKind::ArityMismatch,
                site,
                format!("expected {} arguments, got {}", params.len(), args.len()),
            );
        }
        if self.frames.len() > MAX_DEPTH {
            return err(RuntimeErrorKind::DepthLimit, site, "call depth limit exceeded");
        }
        let mut binds = Vec::new();
        for (p, a) in params.iter().zip(args) {
            if !self.match_pattern(p, a, &mut binds)? {
                return err(RuntimeErrorKind::PatternMismatch, p.id, format!("argument {a} does not match"));
            }
        }
        Ok(Frame {
            locals: binds.into_iter().collect(),
            ..Frame::default()
        })
    }

    /// Evaluates `cond` and fails with its first false conjunct.
    fn assert(&mut self, cond: &'d Expr, kind: AssertionKind) -> R<()> {
        for c in conjuncts(cond) {
            match self.eval(c)? {
                Value::Bool(true) => {}
                Value::Bool(false) => return Err(Stop::Violation(kind, c.id)),
                other => return err(RuntimeErrorKind::TypeMismatch, c.id, format!("{} is not a bool", other)),
            }
        }
        Ok(())
    }

    /// Checks or, when only observed, evaluates an assertion.
    fn assertion(&mut self, cond: Option<&'d Expr>, kind: AssertionKind) -> R<()> {
        let Some(cond) = cond else { return Ok(()) };
        if self.options.check_assertions {
            self.assert(cond, kind)
        } else {
            if self.watches(cond) {
                let _ = self.eval(cond);
            }
            Ok(())
        }
    }

    fn invoke_operation(
        &mut self,
        op: &'d OperationDefinition,
        args: Vec<Value>,
        site: NodeId,
    ) -> R<Option<Value>> {
        let frame = self.bind_params(&op.params, &args, site)?;
        let old = self.state.values.clone();
        self.frames.push(frame);
        let r = self.run_operation(op, old);
        let frame = self.frames.pop().expect("pushed above");
        if self.frames.len() == 1 {
            self.last_exit = Some(frame.clone());
        }
        r.map(|_| frame.result)
    }

    fn run_operation(&mut self, op: &'d OperationDefinition, old: BTreeMap<DeclId, Value>) -> R<()> {
        self.assertion(op.pre.as_ref(), AssertionKind::Pre)?;
        let mut result = match self.exec(&op.body)? {
            Flow::Return(v) => v,
            Flow::Normal => None,
        };
        if op.result_type.is_some() && result.is_none() {
            if self.options.lenient_return {
                result = Some(Value::Nil);
            } else {
                return err(
                    RuntimeErrorKind::MissingReturn,
                    op.id,
                    format!("`{}` finished without returning a value", op.name.name),
                );
            }
        }
        let frame = self.frame();
        frame.old = Some(old);
        frame.result = result;
        self.assertion(op.post.as_ref(), AssertionKind::Post)
    }

    fn invoke_function(&mut self, f: &'d FunctionDefinition, args: Vec<Value>, site: NodeId) -> R<Value> {
        let frame = self.bind_params(&f.params, &args, site)?;
        self.frames.push(frame);
        let r = (|| {
            self.assertion(f.pre.as_ref(), AssertionKind::Pre)?;
            let v = self.eval(&f.body)?;
            self.frame().result = Some(v.clone());
            self.assertion(f.post.as_ref(), AssertionKind::Post)?;
            Ok(v)
        })();
        self.frames.pop();
        r
    }

    fn check_invariant(&mut self) -> R<()> {
        if !self.options.check_assertions {
            return Ok(());
        }
        let Some(state) = &self.doc.state else { return Ok(()) };
        let Some((pat, inv)) = &state.invariant else { return Ok(()) };
        let fields: Option<Vec<Value>> = self
            .table
            .state_fields()
            .iter()
            .map(|d| self.state.values.get(d).cloned())
            .collect();
        let Some(fields) = fields else { return Ok(()) };
        let record = Value::Record(state.name.name.clone(), fields);
        let mut binds = Vec::new();
        if !self.match_pattern(pat, &record, &mut binds)? {
            return err(RuntimeErrorKind::PatternMismatch, pat.id, "invariant pattern does not match the state");
        }
        self.frames.push(Frame {
            locals: binds.into_iter().collect(),
            ..Frame::default()
        });
        let r = self.assert(inv, AssertionKind::Inv);
        self.frames.pop();
        r.map_err(|s| match s {
            Stop::Violation(_, _) => Stop::Violation(AssertionKind::Inv, inv.id),
            other => other,
        })
    }

    fn condition(&mut self, e: &'d Expr) -> R<bool> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            other => err(RuntimeErrorKind::TypeMismatch, e.id, format!("condition is {other}, not a bool")),
        }
    }

    fn exec(&mut self, s: &'d Statement) -> R<Flow> {
        self.step(s.id)?;
        match &s.kind {
            StmtKind::Block { dcls, stmts } => {
                for d in dcls {
                    let decl = self.table.declared_by(d.id).expect("dcl is declared");
                    match &d.init {
                        Some(init) => {
                            let v = self.eval(init)?;
                            self.frame().locals.insert(decl, v);
                        }
                        None => {
                            self.frame().locals.remove(&decl);
                        }
                    }
                }
                for st in stmts {
                    if let Flow::Return(v) = self.exec(st)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value)?;
                let base = self.table.resolve(target.id).expect("designator is bound");
                let new = if target.accessors.is_empty() {
                    v
                } else {
                    let cur = self.read(base, target.id)?;
                    self.update(cur, &target.accessors, v, target.id)?
                };
                if self.table.is_state_field(base) {
                    self.state.values.insert(base, new);
                    self.check_invariant()?;
                } else {
                    self.frame().locals.insert(base, new);
                }
                Ok(Flow::Normal)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.condition(cond)? {
                    self.exec(then_branch)
                } else if let Some(e) = else_branch {
                    self.exec(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                while self.condition(cond)? {
                    if let Flow::Return(v) = self.exec(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Call { args, .. } => {
                let callee = self.table.resolve(s.id).expect("call target is bound");
                let vals = self.eval_all(args)?;
                let node = self.table.decl(callee).node;
                let op = self
                    .doc
                    .operations
                    .iter()
                    .find(|o| o.id == node)
                    .expect("call target is an operation");
                self.invoke_operation(op, vals, s.id)?;
                Ok(Flow::Normal)
            }
            StmtKind::Let { bindings, body } => {
                self.bind_all(bindings)?;
                self.exec(body)
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Skip => Ok(Flow::Normal),
        }
    }

    fn bind_all(&mut self, bindings: &'d [LetBinding]) -> R<()> {
        for b in bindings {
            let v = self.eval(&b.value)?;
            let mut binds = Vec::new();
            if !self.match_pattern(&b.pattern, &v, &mut binds)? {
                return err(RuntimeErrorKind::PatternMismatch, b.id, format!("{v} does not match the pattern"));
            }
            self.frame().locals.extend(binds);
        }
        Ok(())
    }

    fn read(&self, d: DeclId, node: NodeId) -> R<Value> {
        let decl = self.table.decl(d);
        let v = match decl.kind {
            DeclKind::StateField => self.state.values.get(&d),
            DeclKind::Value => self.values.get(&d),
            DeclKind::Operation | DeclKind::Function => {
                return err(RuntimeErrorKind::Unsupported, node, format!("`{}` is not a value", decl.name))
            }
            _ => self.frames.last().and_then(|f| f.locals.get(&d)),
        };
        match v {
            Some(v) => Ok(v.clone()),
            None => err(RuntimeErrorKind::Undefined, node, format!("`{}` has no value", decl.name)),
        }
    }

    fn field_index(&self, record: &str, field: &Ident, node: NodeId) -> R<usize> {
        let pos = self
            .doc
            .state
            .as_ref()
            .filter(|s| s.name.name == record)
            .and_then(|s| s.fields.iter().position(|f| f.name.name == field.name));
        match pos {
            Some(i) => Ok(i),
            None => err(
                RuntimeErrorKind::Unsupported,
                node,
                format!("record type `{record}` has no known field `{}`", field.name),
            ),
        }
    }

    /// `cur` with the element at `path` replaced by `v`.
    fn update(&mut self, cur: Value, path: &'d [Accessor], v: Value, node: NodeId) -> R<Value> {
        let Some((first, rest)) = path.split_first() else { return Ok(v) };
        match (first, cur) {
            (Accessor::Field(f), Value::Record(name, mut fields)) => {
                let i = self.field_index(&name, f, node)?;
                let inner = std::mem::replace(&mut fields[i], Value::Nil);
                fields[i] = self.update(inner, rest, v, node)?;
                Ok(Value::Record(name, fields))
            }
            (Accessor::Index(e), Value::Map(mut m)) => {
                let k = self.eval(e)?;
                let inner = if rest.is_empty() {
                    Value::Nil
                } else {
                    match m.remove(&k) {
                        Some(x) => x,
                        None => return err(RuntimeErrorKind::MissingKey, e.id, format!("key {k} not in map")),
                    }
                };
                let new = self.update(inner, rest, v, node)?;
                m.insert(k, new);
                Ok(Value::Map(m))
            }
            (Accessor::Index(e), Value::Seq(mut xs)) => {
                let i = self.index(e, xs.len())?;
                let inner = std::mem::replace(&mut xs[i], Value::Nil);
                xs[i] = self.update(inner, rest, v, node)?;
                Ok(Value::Seq(xs))
            }
            (_, other) => err(
                RuntimeErrorKind::TypeMismatch,
                node,
                format!("cannot update a component of {}", other.type_name()),
            ),
        }
    }

    /// 0-based position for the 1-based index expression `e`.
    fn index(&mut self, e: &'d Expr, len: usize) -> R<usize> {
        match self.eval(e)? {
            Value::Int(i) if i >= 1 && (i as usize) <= len => Ok(i as usize - 1),
            Value::Int(i) => err(RuntimeErrorKind::IndexOutOfRange, e.id, format!("index {i} out of range 1..{len}")),
            other => err(RuntimeErrorKind::TypeMismatch, e.id, format!("index {other} is not an integer")),
        }
    }

    fn eval_all(&mut self, es: &'d [Expr]) -> R<Vec<Value>> {
        es.iter().map(|e| self.eval(e)).collect()
    }

    fn eval(&mut self, e: &'d Expr) -> R<Value> {
        self.step(e.id)?;
        let v = self.eval_inner(e)?;
        if self.options.watch == Some(e.id) {
            self.trace.push(v.clone());
        }
        Ok(v)
    }

    fn eval_inner(&mut self, e: &'d Expr) -> R<Value> {
        use RuntimeErrorKind::*;
        match &e.kind {
            ExprKind::Literal(l) => Ok(match l {
                Literal::Int(i) => Value::Int(*i),
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Nil => Value::Nil,
                Literal::Text(s) => Value::Text(s.clone()),
                Literal::Char(c) => Value::Char(*c),
                Literal::Quote(q) => Value::Quote(q.clone()),
            }),
            ExprKind::Name(_) => {
                let d = self.table.resolve(e.id).expect("name is bound");
                self.read(d, e.id)
            }
            ExprKind::OldName(n) => {
                let d = self.table.resolve(e.id).expect("old name is bound");
                let v = self
                    .frames
                    .last()
                    .and_then(|f| f.old.as_ref())
                    .and_then(|old| old.get(&d));
                match v {
                    Some(v) => Ok(v.clone()),
                    None => err(Undefined, e.id, format!("`{n}~` has no value here")),
                }
            }
            ExprKind::Result => match self.frames.last().and_then(|f| f.result.clone()) {
                Some(v) => Ok(v),
                None => err(Undefined, e.id, "`RESULT` has no value here"),
            },
            ExprKind::Binary { op, lhs, rhs } => self.binary(e, *op, lhs, rhs),
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                unary(*op, v, e.id)
            }
            ExprKind::Apply { callee, args } => {
                if let Some(d) = self.table.callee(callee) {
                    let vals = self.eval_all(args)?;
                    let node = self.table.decl(d).node;
                    if let Some(op) = self.doc.operations.iter().find(|o| o.id == node) {
                        return match self.invoke_operation(op, vals, e.id)? {
                            Some(v) => Ok(v),
                            None => err(TypeMismatch, e.id, format!("`{}` returns no value", op.name.name)),
                        };
                    }
                    let f = self
                        .doc
                        .functions
                        .iter()
                        .find(|f| f.id == node)
                        .expect("callable is an operation or function");
                    return self.invoke_function(f, vals, e.id);
                }
                let target = self.eval(callee)?;
                let [arg] = args.as_slice() else {
                    return err(ArityMismatch, e.id, "map and sequence application take one argument");
                };
                match target {
                    Value::Map(m) => {
                        let k = self.eval(arg)?;
                        match m.get(&k) {
                            Some(v) => Ok(v.clone()),
                            None => err(MissingKey, e.id, format!("key {k} not in map")),
                        }
                    }
                    Value::Seq(xs) => {
                        let i = self.index(arg, xs.len())?;
                        Ok(xs[i].clone())
                    }
                    Value::Text(s) => {
                        let chars: Vec<char> = s.chars().collect();
                        let i = self.index(arg, chars.len())?;
                        Ok(Value::Char(chars[i]))
                    }
                    other => err(TypeMismatch, e.id, format!("cannot apply {}", other.type_name())),
                }
            }
            ExprKind::Field { record, field } => match self.eval(record)? {
                Value::Record(name, fields) => {
                    let i = self.field_index(&name, field, e.id)?;
                    Ok(fields[i].clone())
                }
                other => err(TypeMismatch, e.id, format!("field access on {}", other.type_name())),
            },
            ExprKind::Let { bindings, body } => {
                self.bind_all(bindings)?;
                self.eval(body)
            }
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.condition(cond)? {
                    self.eval(then_branch)
                } else {
                    self.eval(else_branch)
                }
            }
            ExprKind::MapEnum(pairs) => {
                let mut m = BTreeMap::new();
                for (k, v) in pairs {
                    let k = self.eval(k)?;
                    let v = self.eval(v)?;
                    if let Some(prev) = m.get(&k) {
                        if *prev != v {
                            return err(MunionConflict, e.id, format!("key {k} maps to two values"));
                        }
                    }
                    m.insert(k, v);
                }
                Ok(Value::Map(m))
            }
            ExprKind::SetEnum(xs) => Ok(Value::Set(self.eval_all(xs)?.into_iter().collect())),
            ExprKind::SeqEnum(xs) => Ok(Value::Seq(self.eval_all(xs)?)),
            ExprKind::Record { name, args } => {
                let vals = self.eval_all(args)?;
                if let Some(state) = self.doc.state.as_ref().filter(|s| s.name.name == name.name) {
                    if state.fields.len() != vals.len() {
                        return err(ArityMismatch, e.id, format!("mk_{} takes {} fields", name.name, state.fields.len()));
                    }
                }
                Ok(Value::Record(name.name.clone(), vals))
            }
            ExprKind::Tuple(xs) => Ok(Value::Tuple(self.eval_all(xs)?)),
        }
    }

    fn binary(&mut self, e: &'d Expr, op: BinOp, lhs: &'d Expr, rhs: &'d Expr) -> R<Value> {
        let short = |this: &mut Self, x: &'d Expr| -> R<bool> {
            match this.eval(x)? {
                Value::Bool(b) => Ok(b),
                other => err(RuntimeErrorKind::TypeMismatch, x.id, format!("{other} is not a bool")),
            }
        };
        match op {
            BinOp::And => return Ok(Value::Bool(short(self, lhs)? && short(self, rhs)?)),
            BinOp::Or => return Ok(Value::Bool(short(self, lhs)? || short(self, rhs)?)),
            BinOp::Implies => return Ok(Value::Bool(!short(self, lhs)? || short(self, rhs)?)),
            _ => {}
        }
        let a = self.eval(lhs)?;
        let b = self.eval(rhs)?;
        binary(op, a, b, e.id)
    }

    fn match_pattern(&mut self, p: &'d Pattern, v: &Value, binds: &mut Vec<(DeclId, Value)>) -> R<bool> {
        match (&p.kind, v) {
            (PatternKind::Identifier(_), _) => {
                let d = self.table.declared_by(p.id).expect("pattern identifier is declared");
                binds.push((d, v.clone()));
                Ok(true)
            }
            (PatternKind::DontCare, _) => Ok(true),
            (PatternKind::MatchValue(e), _) => Ok(self.eval(e)? == *v),
            (PatternKind::Record { name, fields }, Value::Record(n, vals)) => {
                if name.name != *n || fields.len() != vals.len() {
                    return Ok(false);
                }
                self.match_all(fields, vals, binds)
            }
            (PatternKind::Tuple(ps), Value::Tuple(vals)) => {
                if ps.len() != vals.len() {
                    return Ok(false);
                }
                self.match_all(ps, vals, binds)
            }
            (PatternKind::SetUnion(l, r), Value::Set(s)) => {
                let items: Vec<&Value> = s.iter().collect();
                if items.len() > 12 {
                    return err(RuntimeErrorKind::Unsupported, p.id, "set too large for a union pattern");
                }
                for mask in 0u32..(1 << items.len()) {
                    let (mut left, mut right) = (BTreeSet::new(), BTreeSet::new());
                    for (i, x) in items.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            left.insert((*x).clone());
                        } else {
                            right.insert((*x).clone());
                        }
                    }
                    let mut trial = Vec::new();
                    if self.match_pattern(l, &Value::Set(left), &mut trial)?
                        && self.match_pattern(r, &Value::Set(right), &mut trial)?
                    {
                        binds.extend(trial);
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            _ => Ok(false),
        }
    }

    fn match_all(&mut self, ps: &'d [Pattern], vals: &[Value], binds: &mut Vec<(DeclId, Value)>) -> R<bool> {
        for (p, v) in ps.iter().zip(vals) {
            if !self.match_pattern(p, v, binds)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn int(v: &Value, node: NodeId) -> R<i64> {
    match v {
        Value::Int(i) => Ok(*i),
        other => err(RuntimeErrorKind::TypeMismatch, node, format!("{other} is not an integer")),
    }
}

fn set(v: Value, node: NodeId) -> R<BTreeSet<Value>> {
    match v {
        Value::Set(s) => Ok(s),
        other => err(RuntimeErrorKind::TypeMismatch, node, format!("{other} is not a set")),
    }
}

fn map(v: Value, node: NodeId) -> R<BTreeMap<Value, Value>> {
    match v {
        Value::Map(m) => Ok(m),
        other => err(RuntimeErrorKind::TypeMismatch, node, format!("{other} is not a map")),
    }
}

fn seq(v: Value, node: NodeId) -> R<Vec<Value>> {
    match v {
        Value::Seq(xs) => Ok(xs),
        Value::Text(s) => Ok(s.chars().map(Value::Char).collect()),
        other => err(RuntimeErrorKind::TypeMismatch, node, format!("{other} is not a sequence")),
    }
}

/// Rebuilds text when every element of a sequence result is a character
/// and an operand was text.
fn seq_result(xs: Vec<Value>, was_text: bool) -> Value {
    if was_text && xs.iter().all(|x| matches!(x, Value::Char(_))) {
        Value::Text(
            xs.into_iter()
                .map(|x| match x {
                    Value::Char(c) => c,
                    _ => unreachable!(),
                })
                .collect(),
        )
    } else {
        Value::Seq(xs)
    }
}

fn binary(op: BinOp, a: Value, b: Value, node: NodeId) -> R<Value> {
    use RuntimeErrorKind::*;
    let arith = |r: Option<i64>| match r {
        Some(i) => Ok(Value::Int(i)),
        None => err(Overflow, node, "integer overflow"),
    };
    match op {
        BinOp::Add => arith(int(&a, node)?.checked_add(int(&b, node)?)),
        BinOp::Sub => arith(int(&a, node)?.checked_sub(int(&b, node)?)),
        BinOp::Mul => arith(int(&a, node)?.checked_mul(int(&b, node)?)),
        BinOp::Div | BinOp::IntDiv | BinOp::Mod | BinOp::Rem => {
            let (x, y) = (int(&a, node)?, int(&b, node)?);
            if y == 0 {
                return err(DivisionByZero, node, "division by zero");
            }
            match op {
                BinOp::Div if x % y != 0 => err(Unsupported, node, format!("{x} / {y} is not an integer")),
                BinOp::Div | BinOp::IntDiv => arith(x.checked_div(y)),
                BinOp::Rem => arith(x.checked_rem(y)),
                _ => arith(x.checked_rem(y).map(|r| if r != 0 && (r < 0) != (y < 0) { r + y } else { r })),
            }
        }
        BinOp::Concat => {
            let text = matches!(a, Value::Text(_)) || matches!(b, Value::Text(_));
            let mut xs = seq(a, node)?;
            xs.extend(seq(b, node)?);
            Ok(seq_result(xs, text))
        }
        BinOp::Munion => {
            let mut m = map(a, node)?;
            for (k, v) in map(b, node)? {
                if let Some(prev) = m.get(&k) {
                    if *prev != v {
                        return err(MunionConflict, node, format!("munion conflict at key {k}"));
                    }
                }
                m.insert(k, v);
            }
            Ok(Value::Map(m))
        }
        BinOp::Override => match a {
            Value::Seq(_) | Value::Text(_) => {
                let text = matches!(a, Value::Text(_));
                let mut xs = seq(a, node)?;
                for (k, v) in map(b, node)? {
                    let i = int(&k, node)?;
                    if i < 1 || i as usize > xs.len() {
                        return err(IndexOutOfRange, node, format!("index {i} out of range"));
                    }
                    xs[i as usize - 1] = v;
                }
                Ok(seq_result(xs, text))
            }
            _ => {
                let mut m = map(a, node)?;
                m.extend(map(b, node)?);
                Ok(Value::Map(m))
            }
        },
        BinOp::Union => {
            let mut s = set(a, node)?;
            s.extend(set(b, node)?);
            Ok(Value::Set(s))
        }
        BinOp::Inter => {
            let t = set(b, node)?;
            Ok(Value::Set(set(a, node)?.into_iter().filter(|x| t.contains(x)).collect()))
        }
        BinOp::Difference => {
            let t = set(b, node)?;
            Ok(Value::Set(set(a, node)?.into_iter().filter(|x| !t.contains(x)).collect()))
        }
        BinOp::Eq => Ok(Value::Bool(a == b)),
        BinOp::Ne => Ok(Value::Bool(a != b)),
        BinOp::Lt => Ok(Value::Bool(int(&a, node)? < int(&b, node)?)),
        BinOp::Le => Ok(Value::Bool(int(&a, node)? <= int(&b, node)?)),
        BinOp::Gt => Ok(Value::Bool(int(&a, node)? > int(&b, node)?)),
        BinOp::Ge => Ok(Value::Bool(int(&a, node)? >= int(&b, node)?)),
        BinOp::InSet => Ok(Value::Bool(set(b, node)?.contains(&a))),
        BinOp::NotInSet => Ok(Value::Bool(!set(b, node)?.contains(&a))),
        BinOp::Subset => Ok(Value::Bool(set(a, node)?.is_subset(&set(b, node)?))),
        BinOp::PSubset => {
            let (x, y) = (set(a, node)?, set(b, node)?);
            Ok(Value::Bool(x.len() < y.len() && x.is_subset(&y)))
        }
        BinOp::And | BinOp::Or | BinOp::Implies => unreachable!("short-circuit operators"),
    }
}

fn unary(op: UnOp, v: Value, node: NodeId) -> R<Value> {
    use RuntimeErrorKind::*;
    match op {
        UnOp::Not => match v {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => err(TypeMismatch, node, format!("{other} is not a bool")),
        },
        UnOp::Neg => match int(&v, node)?.checked_neg() {
            Some(i) => Ok(Value::Int(i)),
            None => err(Overflow, node, "integer overflow"),
        },
        UnOp::Dom => Ok(Value::Set(map(v, node)?.into_keys().collect())),
        UnOp::Rng => Ok(Value::Set(map(v, node)?.into_values().collect())),
        UnOp::Card => Ok(Value::Int(set(v, node)?.len() as i64)),
        UnOp::Len => Ok(Value::Int(seq(v, node)?.len() as i64)),
        UnOp::Hd => match seq(v, node)?.into_iter().next() {
            Some(x) => Ok(x),
            None => err(EmptySequence, node, "hd of an empty sequence"),
        },
        UnOp::Tl => {
            let text = matches!(v, Value::Text(_));
            let xs = seq(v, node)?;
            if xs.is_empty() {
                return err(EmptySequence, node, "tl of an empty sequence");
            }
            Ok(seq_result(xs[1..].to_vec(), text))
        }
        UnOp::Elems => Ok(Value::Set(seq(v, node)?.into_iter().collect())),
        UnOp::Inds => Ok(Value::Set(
            (1..=seq(v, node)?.len() as i64).map(Value::Int).collect(),
        )),
    }
}
