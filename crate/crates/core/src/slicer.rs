//! Static backward slicing.
//!
//! The slicer walks an operation body in reverse interpretation order while
//! tracking an agenda of [`DependencyToken`]s whose values still have to be
//! explained. A node joins the slice when it writes something on the agenda;
//! its reads then replace the writes it explained.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::binder::{tokens_read_by, DeclId, DeclKind, DependencyToken, SymbolTable};
use crate::syntax::*;

type Tokens = BTreeSet<DependencyToken>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    ReturnValue,
    /// 1-based index over the top-level `and` conjuncts; `None` is the whole postcondition.
    Postcondition(Option<usize>),
    StateVariable(String),
    ExpressionAt(Position),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Criterion {
    pub operation: String,
    pub target: Target,
}

impl Criterion {
    pub fn new(operation: impl Into<String>, target: Target) -> Self {
        Criterion {
            operation: operation.into(),
            target,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.target {
            Target::ReturnValue => write!(f, "{}: return value", self.operation),
            Target::Postcondition(None) => write!(f, "{}: postcondition", self.operation),
            Target::Postcondition(Some(k)) => {
                write!(f, "{}: postcondition conjunct {k}", self.operation)
            }
            Target::StateVariable(v) => write!(f, "{}: state variable {v} at exit", self.operation),
            Target::ExpressionAt(p) => write!(f, "{}: expression at {p}", self.operation),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    /// `M(k) := v` also reads the old `M`.
    #[default]
    Weak,
    /// `M(k) := v` only reads `v` and `k`.
    StrongLiteral,
}

impl UpdateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateMode::Weak => "weak",
            UpdateMode::StrongLiteral => "strong",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SliceOptions {
    pub mode: UpdateMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CriterionError {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("operation `{0}` does not return a value")]
    NoReturnValue(String),
    #[error("operation `{0}` has no postcondition")]
    NoPostcondition(String),
    #[error("postcondition conjunct {index} is out of range (1..={count})")]
    ConjunctOutOfRange { index: usize, count: usize },
    #[error("unknown state variable `{0}`")]
    UnknownStateVariable(String),
    #[error("no expression at {0}")]
    NoExpressionAt(Position),
    #[error("the expression at {position} is not inside operation `{operation}`")]
    OutsideOperation { position: Position, operation: String },
}

/// Working sets of one traversal.
#[derive(Clone, Debug, Default)]
pub struct SlicerState {
    pub criteria: Tokens,
    /// Operation definition the criterion belongs to.
    pub toplevel: Option<NodeId>,
    pub agenda: Tokens,
    pub reads: Tokens,
    pub writes: Tokens,
    pub slice: BTreeSet<NodeId>,
    /// Callable whose body is being traversed; owner of `Result` tokens.
    owner: Option<DeclId>,
    /// Agenda at the callable's exit, restored by `return`.
    exit: Tokens,
    /// Number of dependency hits so far; used to detect relevant branches.
    hits: u64,
    /// Criterion node inside the body and the tokens to inject on reaching it.
    pending: Option<(NodeId, Tokens)>,
}

impl SlicerState {
    pub fn new(criteria: Tokens) -> Self {
        SlicerState {
            agenda: criteria.clone(),
            criteria,
            ..SlicerState::default()
        }
    }

    /// Resolves `writes` against the agenda. Returns whether `node` joined
    /// the slice. Clears `reads` and `writes` in all cases.
    pub fn process_dependency(&mut self, node: NodeId) -> bool {
        let common: Tokens = self.agenda.intersection(&self.writes).copied().collect();
        let hit = !common.is_empty();
        if hit {
            for t in &common {
                self.agenda.remove(t);
            }
            self.agenda.extend(self.reads.iter().copied());
            self.mark(node);
        }
        self.reads.clear();
        self.writes.clear();
        hit
    }

    fn mark(&mut self, node: NodeId) {
        self.slice.insert(node);
        self.hits += 1;
    }
}

/// Where the criterion is anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Placement {
    Exit,
    Post(NodeId),
    Body(NodeId),
    Pre(NodeId),
}

/// Initialized slicer state plus what the criterion resolved to.
#[derive(Clone, Debug)]
pub struct Seeded {
    pub state: SlicerState,
    pub criterion_nodes: BTreeSet<NodeId>,
    placement: Placement,
    operation: DeclId,
}

/// Top-level `and` conjuncts of `expr`, left to right.
pub fn conjuncts(expr: &Expr) -> Vec<&Expr> {
    match &expr.kind {
        ExprKind::Binary {
            op: BinOp::And,
            lhs,
            rhs,
        } => {
            let mut out = conjuncts(lhs);
            out.extend(conjuncts(rhs));
            out
        }
        _ => vec![expr],
    }
}

/// Selected postcondition expressions of `op` for `index`.
pub fn postcondition_targets(
    op: &OperationDefinition,
    index: Option<usize>,
) -> Result<Vec<&Expr>, CriterionError> {
    let post = op
        .post
        .as_ref()
        .ok_or_else(|| CriterionError::NoPostcondition(op.name.name.clone()))?;
    match index {
        None => Ok(vec![post]),
        Some(k) => {
            let parts = conjuncts(post);
            if k == 0 || k > parts.len() {
                return Err(CriterionError::ConjunctOutOfRange {
                    index: k,
                    count: parts.len(),
                });
            }
            Ok(vec![parts[k - 1]])
        }
    }
}

/// Expression the `ExpressionAt` target designates, and the operation part
/// it lies in.
pub fn expression_at(
    doc: &Document,
    op: &OperationDefinition,
    position: Position,
) -> Result<NodeId, CriterionError> {
    let node = smallest_node_covering(doc, position)
        .ok_or(CriterionError::NoExpressionAt(position))?;
    let expr = doc
        .ancestors(node.id())
        .into_iter()
        .find(|a| doc.kind_of(*a).is_some_and(NodeKind::is_expression))
        .ok_or(CriterionError::NoExpressionAt(position))?;
    if doc.enclosing_definition(expr) != Some(op.id) {
        return Err(CriterionError::OutsideOperation {
            position,
            operation: op.name.name.clone(),
        });
    }
    Ok(expr)
}

fn find_expr(doc: &Document, id: NodeId) -> &Expr {
    match doc.node(id) {
        Some(NodeRef::Expr(e)) => e,
        _ => unreachable!("criterion node {id} is an expression"),
    }
}

fn is_leaf(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Literal(_) | ExprKind::Name(_) | ExprKind::OldName(_) | ExprKind::Result
    )
}

/// Seeds the agenda for `criterion`.
pub fn set_criterion(
    doc: &Document,
    table: &SymbolTable,
    criterion: &Criterion,
) -> Result<Seeded, CriterionError> {
    let op = doc
        .operation(&criterion.operation)
        .ok_or_else(|| CriterionError::UnknownOperation(criterion.operation.clone()))?;
    let op_decl = table
        .definition(&op.name.name)
        .expect("bound operations are declared");
    let mut criterion_nodes = BTreeSet::new();
    let mut criteria = Tokens::new();
    let mut placement = Placement::Exit;
    match &criterion.target {
        Target::ReturnValue => {
            if op.result_type.is_none() {
                return Err(CriterionError::NoReturnValue(op.name.name.clone()));
            }
            criteria.insert(DependencyToken::Result(op_decl));
            walk(NodeRef::Stmt(&op.body), &mut |n| {
                if let NodeRef::Stmt(Statement {
                    kind: StmtKind::Return(Some(e)),
                    ..
                }) = n
                {
                    criterion_nodes.insert(e.id);
                }
            });
        }
        Target::Postcondition(index) => {
            for e in postcondition_targets(op, *index)? {
                criteria.extend(tokens_read_by(e, table));
                criterion_nodes.insert(e.id);
            }
        }
        Target::StateVariable(name) => {
            let d = table
                .state_field(name)
                .ok_or_else(|| CriterionError::UnknownStateVariable(name.clone()))?;
            criteria.insert(DependencyToken::Var(d));
            criterion_nodes.insert(table.decl(d).node);
        }
        Target::ExpressionAt(pos) => {
            let id = expression_at(doc, op, *pos)?;
            let e = find_expr(doc, id);
            criteria.extend(tokens_read_by(e, table));
            if !is_leaf(e) {
                criteria.insert(DependencyToken::Expr(id));
            }
            criterion_nodes.insert(id);
            let within = |part: Option<&Expr>| {
                part.is_some_and(|p| p.span.contains(&e.span) && doc.ancestors(id).contains(&p.id))
            };
            placement = if within(op.post.as_ref()) {
                Placement::Post(id)
            } else if within(op.pre.as_ref()) {
                Placement::Pre(id)
            } else {
                Placement::Body(id)
            };
        }
    }
    let mut state = SlicerState::new(criteria);
    state.toplevel = Some(op.id);
    state.owner = Some(op_decl);
    Ok(Seeded {
        state,
        criterion_nodes,
        placement,
        operation: op_decl,
    })
}

/// Source a callee's residual dependency maps back to at the call site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SummaryInput {
    /// Value of the argument at this 0-based position.
    Param(usize),
    /// A state variable or value definition at call entry.
    Token(DependencyToken),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSummary {
    pub callee: DeclId,
    pub requested: Tokens,
    pub input_dependencies: BTreeMap<DependencyToken, BTreeSet<SummaryInput>>,
    pub callee_slice_nodes: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct TokenSummary {
    inputs: BTreeSet<SummaryInput>,
    nodes: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SliceStats {
    /// Largest number of passes any single loop needed to stabilize.
    pub max_loop_iterations: usize,
    pub loop_iterations: usize,
    pub summaries_computed: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceResult {
    pub nodes: BTreeSet<NodeId>,
    pub criterion_nodes: BTreeSet<NodeId>,
    pub visited_definitions: BTreeSet<String>,
    /// Tokens still unexplained at the operation's entry.
    pub residual: Tokens,
    pub stats: SliceStats,
}

impl SliceResult {
    /// Slice nodes with their kinds and spans, ordered by start position.
    pub fn spans(&self, doc: &Document) -> Vec<(NodeId, NodeKind, Span)> {
        spans_of(doc, &self.nodes)
    }

    pub fn criterion_spans(&self, doc: &Document) -> Vec<(NodeId, NodeKind, Span)> {
        spans_of(doc, &self.criterion_nodes)
    }
}

fn spans_of(doc: &Document, nodes: &BTreeSet<NodeId>) -> Vec<(NodeId, NodeKind, Span)> {
    let mut out: Vec<_> = nodes
        .iter()
        .filter_map(|n| doc.info(*n).map(|i| (*n, i.kind, i.span)))
        .collect();
    out.sort_by_key(|(n, _, s)| (s.start, s.end, *n));
    out
}

/// Computes the backward slice of `doc` for `criterion`.
pub fn slice(
    doc: &Document,
    table: &SymbolTable,
    criterion: &Criterion,
    options: SliceOptions,
) -> Result<SliceResult, CriterionError> {
    let seeded = set_criterion(doc, table, criterion)?;
    let op = doc
        .operation(&criterion.operation)
        .expect("resolved by set_criterion");
    let mut engine = Slicer::new(doc, table, options);
    let mut st = seeded.state;

    match seeded.placement {
        Placement::Exit => {}
        Placement::Post(id) => {
            st.agenda.clear();
            st.pending = Some((id, st.criteria.clone()));
            engine.process_expression(&mut st, op.post.as_ref().expect("placed in post"));
        }
        Placement::Body(id) | Placement::Pre(id) => {
            st.agenda.clear();
            st.pending = Some((id, st.criteria.clone()));
        }
    }
    st.exit = st.agenda.clone();
    if !matches!(seeded.placement, Placement::Pre(_)) {
        engine.process_statement(&mut st, &op.body);
    }
    if let Placement::Pre(_) = seeded.placement {
        engine.process_expression(&mut st, op.pre.as_ref().expect("placed in pre"));
    }
    st.pending = None;
    engine.process_values(&mut st);

    let visited_definitions = st
        .slice
        .iter()
        .filter_map(|n| doc.enclosing_definition(*n))
        .filter_map(|d| doc.definition_name(d))
        .collect();
    debug_assert_eq!(seeded.operation, st.owner.expect("toplevel owner"));
    Ok(SliceResult {
        nodes: st.slice,
        criterion_nodes: seeded.criterion_nodes,
        visited_definitions,
        residual: st.agenda,
        stats: engine.stats,
    })
}

/// Summary of `callee` (an operation or function name) for `requested`.
pub fn summarize(
    doc: &Document,
    table: &SymbolTable,
    callee: &str,
    requested: &Tokens,
    options: SliceOptions,
) -> Option<CallSummary> {
    let d = table.definition(callee)?;
    Some(Slicer::new(doc, table, options).summarize_callable(d, requested))
}

/// Traversal engine. Holds the call-summary memo for one slicing run.
pub struct Slicer<'d> {
    doc: &'d Document,
    table: &'d SymbolTable,
    options: SliceOptions,
    memo: HashMap<(DeclId, DependencyToken), TokenSummary>,
    in_progress: HashSet<(DeclId, DependencyToken)>,
    reentered: HashSet<(DeclId, DependencyToken)>,
    stats: SliceStats,
}

impl<'d> Slicer<'d> {
    pub fn new(doc: &'d Document, table: &'d SymbolTable, options: SliceOptions) -> Self {
        Slicer {
            doc,
            table,
            options,
            memo: HashMap::new(),
            in_progress: HashSet::new(),
            reentered: HashSet::new(),
            stats: SliceStats::default(),
        }
    }

    pub fn stats(&self) -> &SliceStats {
        &self.stats
    }

    /// Token carrying the value of `e` into its consumer.
    fn flow(&self, e: &Expr) -> Option<DependencyToken> {
        if is_leaf(e) {
            self.table.leaf_token(e)
        } else {
            Some(DependencyToken::Expr(e.id))
        }
    }

    fn flows<'e>(&self, es: impl IntoIterator<Item = &'e Expr>) -> Tokens {
        es.into_iter().filter_map(|e| self.flow(e)).collect()
    }

    pub fn process_statement(&mut self, st: &mut SlicerState, s: &Statement) {
        match &s.kind {
            StmtKind::Block { dcls, stmts } => {
                for inner in stmts.iter().rev() {
                    self.process_statement(st, inner);
                }
                for d in dcls.iter().rev() {
                    let decl = self.table.declared_by(d.id).expect("dcl is declared");
                    st.writes.insert(DependencyToken::Var(decl));
                    if let Some(init) = &d.init {
                        st.reads.extend(self.flow(init));
                    }
                    st.process_dependency(d.id);
                    if let Some(init) = &d.init {
                        self.process_expression(st, init);
                    }
                }
            }
            StmtKind::Assign { target, value } => {
                let base = self.table.resolve(target.id).expect("designator is bound");
                let base = DependencyToken::Var(base);
                let indexes: Vec<&Expr> = target
                    .accessors
                    .iter()
                    .filter_map(|a| match a {
                        Accessor::Index(e) => Some(e),
                        Accessor::Field(_) => None,
                    })
                    .collect();
                st.writes.insert(base);
                st.reads.extend(self.flow(value));
                st.reads.extend(self.flows(indexes.iter().copied()));
                if self.options.mode == UpdateMode::Weak && !target.accessors.is_empty() {
                    st.reads.insert(base);
                }
                st.process_dependency(s.id);
                for e in indexes.iter().rev() {
                    self.process_expression(st, e);
                }
                self.process_expression(st, value);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let saved = st.agenda.clone();

                let mark = st.hits;
                if let Some(e) = else_branch {
                    self.process_statement(st, e);
                }
                self.branch_condition(st, s.id, cond, &saved, mark);
                let else_agenda = std::mem::replace(&mut st.agenda, saved.clone());

                let mark = st.hits;
                self.process_statement(st, then_branch);
                self.branch_condition(st, s.id, cond, &saved, mark);

                st.agenda.extend(else_agenda);
            }
            StmtKind::While { cond, body } => {
                self.process_expression(st, cond);
                let mut acc = st.agenda.clone();
                let mut passes = 0;
                loop {
                    passes += 1;
                    let before = st.slice.len();
                    st.agenda = acc.clone();
                    let mark = st.hits;
                    self.process_statement(st, body);
                    self.branch_condition(st, s.id, cond, &acc, mark);
                    let grown: Tokens = acc.union(&st.agenda).copied().collect();
                    if grown == acc && st.slice.len() == before {
                        break;
                    }
                    acc = grown;
                }
                st.agenda = acc;
                self.stats.loop_iterations += passes;
                self.stats.max_loop_iterations = self.stats.max_loop_iterations.max(passes);
            }
            StmtKind::Call { args, .. } => {
                let callee = self.table.resolve(s.id).expect("call target is bound");
                self.process_call(st, s.id, callee, args, None);
            }
            StmtKind::Let { bindings, body } => {
                self.process_statement(st, body);
                self.process_bindings(st, bindings);
            }
            StmtKind::Return(value) => {
                // Statements after a return are unreachable from it; the
                // agenda flowing into it is the one at the callable's exit.
                let successor = std::mem::replace(&mut st.agenda, st.exit.clone());
                let diverts = successor != st.exit;
                if let Some(owner) = st.owner {
                    st.writes.insert(DependencyToken::Result(owner));
                }
                let flow = value.as_ref().and_then(|e| self.flow(e));
                st.reads.extend(flow);
                let hit = st.process_dependency(s.id);
                if diverts && !hit {
                    // skipping this return would run the statements after it
                    st.agenda.extend(flow);
                    st.mark(s.id);
                }
                if let Some(e) = value {
                    self.process_expression(st, e);
                }
            }
            StmtKind::Skip => {}
        }
    }

    /// Adds the condition when the branch just processed was relevant, then
    /// processes the condition expression.
    fn branch_condition(
        &mut self,
        st: &mut SlicerState,
        node: NodeId,
        cond: &Expr,
        saved: &Tokens,
        mark: u64,
    ) {
        if st.agenda != *saved || st.hits > mark {
            st.agenda.extend(self.flow(cond));
            st.mark(node);
        }
        self.process_expression(st, cond);
    }

    fn process_bindings(&mut self, st: &mut SlicerState, bindings: &[LetBinding]) {
        for b in bindings.iter().rev() {
            let mark = st.hits;
            let source = self.flows([&b.value]);
            self.process_pattern(st, &b.pattern, source);
            if st.hits > mark {
                st.mark(b.id);
            }
            self.process_expression(st, &b.value);
        }
    }

    pub fn process_expression(&mut self, st: &mut SlicerState, e: &Expr) {
        if let Some((node, seeds)) = &st.pending {
            if *node == e.id {
                st.agenda.extend(seeds.iter().copied());
                // how often the criterion is evaluated depends on enclosing branches
                st.hits += 1;
            }
        }
        match &e.kind {
            ExprKind::Literal(_) | ExprKind::Name(_) | ExprKind::OldName(_) | ExprKind::Result => {}
            ExprKind::Apply { callee, args } if self.table.callee(callee).is_some() => {
                let d = self.table.callee(callee).expect("checked above");
                self.process_call(st, e.id, d, args, Some(DependencyToken::Expr(e.id)));
            }
            ExprKind::Let { bindings, body } => {
                st.writes.insert(DependencyToken::Expr(e.id));
                st.reads.extend(self.flow(body));
                st.process_dependency(e.id);
                self.process_expression(st, body);
                self.process_bindings(st, bindings);
            }
            _ => {
                let children: Vec<&Expr> = children_of(NodeRef::Expr(e))
                    .into_iter()
                    .filter_map(|c| match c {
                        NodeRef::Expr(x) => Some(x),
                        _ => None,
                    })
                    .collect();
                st.writes.insert(DependencyToken::Expr(e.id));
                st.reads.extend(self.flows(children.iter().copied()));
                st.process_dependency(e.id);
                for c in children.iter().rev() {
                    self.process_expression(st, c);
                }
            }
        }
    }

    /// Processes a pattern matched against a value carried by `source`.
    pub fn process_pattern(&mut self, st: &mut SlicerState, p: &Pattern, source: Tokens) {
        match &p.kind {
            PatternKind::Identifier(_) => {
                if let Some(d) = self.table.declared_by(p.id) {
                    st.writes.insert(DependencyToken::Var(d));
                    st.reads = source;
                    st.process_dependency(p.id);
                }
            }
            PatternKind::DontCare => {}
            PatternKind::MatchValue(e) => self.process_expression(st, e),
            PatternKind::SetUnion(..) | PatternKind::Record { .. } | PatternKind::Tuple(_) => {
                let me = DependencyToken::Expr(p.id);
                let subs: Vec<&Pattern> = match &p.kind {
                    PatternKind::SetUnion(l, r) => vec![l, r],
                    PatternKind::Record { fields, .. } => fields.iter().collect(),
                    PatternKind::Tuple(ps) => ps.iter().collect(),
                    _ => unreachable!(),
                };
                for sub in subs.iter().rev() {
                    if !matches!(sub.kind, PatternKind::MatchValue(_)) {
                        self.process_pattern(st, sub, [me].into());
                    }
                }
                if st.agenda.contains(&me) {
                    // match values decide which parts the identifiers receive
                    for sub in &subs {
                        if let PatternKind::MatchValue(e) = &sub.kind {
                            st.agenda.extend(self.flow(e));
                            st.mark(sub.id);
                            self.process_expression(st, e);
                        }
                    }
                }
                st.writes.insert(me);
                st.reads = source;
                st.process_dependency(p.id);
            }
        }
    }

    /// Processes a call of `callee` at `site`. `result` is the token that
    /// carries the call's value to its consumer, if it has one.
    pub fn process_call(
        &mut self,
        st: &mut SlicerState,
        site: NodeId,
        callee: DeclId,
        args: &[Expr],
        result: Option<DependencyToken>,
    ) {
        let is_operation = self.table.decl(callee).kind == DeclKind::Operation;
        let mut requested = Tokens::new();
        if is_operation {
            requested.extend(
                st.agenda
                    .iter()
                    .filter(|t| matches!(t, DependencyToken::Var(d) if self.table.is_state_field(*d)))
                    .copied(),
            );
        }
        let wants_result = result.is_some_and(|r| st.agenda.contains(&r));
        if wants_result {
            requested.insert(DependencyToken::Result(callee));
        }

        if !requested.is_empty() {
            let summary = self.summarize_callable(callee, &requested);
            for t in &requested {
                match t {
                    DependencyToken::Result(_) => st.agenda.remove(&result.expect("wanted")),
                    other => st.agenda.remove(other),
                };
            }
            for inputs in summary.input_dependencies.values() {
                for input in inputs {
                    match input {
                        SummaryInput::Param(i) => {
                            if let Some(arg) = args.get(*i) {
                                st.agenda.extend(self.flow(arg));
                            }
                        }
                        SummaryInput::Token(t) => {
                            st.agenda.insert(*t);
                        }
                    }
                }
            }
            if !summary.callee_slice_nodes.is_empty() {
                st.slice.extend(summary.callee_slice_nodes.iter().copied());
                st.mark(site);
            }
        }
        for a in args.iter().rev() {
            self.process_expression(st, a);
        }
    }

    /// Dependencies of `requested` tokens at the exit of `callee` on its
    /// inputs at entry.
    pub fn summarize_callable(&mut self, callee: DeclId, requested: &Tokens) -> CallSummary {
        let mut summary = CallSummary {
            callee,
            requested: requested.clone(),
            input_dependencies: BTreeMap::new(),
            callee_slice_nodes: BTreeSet::new(),
        };
        for t in requested {
            let ts = self.summarize_token(callee, *t);
            summary.callee_slice_nodes.extend(ts.nodes);
            summary.input_dependencies.insert(*t, ts.inputs);
        }
        summary
    }

    fn summarize_token(&mut self, callee: DeclId, token: DependencyToken) -> TokenSummary {
        let key = (callee, token);
        if self.in_progress.contains(&key) {
            self.reentered.insert(key);
            return self.memo.get(&key).cloned().unwrap_or_default();
        }
        if let Some(done) = self.memo.get(&key) {
            return done.clone();
        }
        self.in_progress.insert(key);
        loop {
            let fresh = self.traverse_callee(callee, token);
            let prev = self.memo.get(&key).cloned().unwrap_or_default();
            let merged = TokenSummary {
                inputs: prev.inputs.union(&fresh.inputs).copied().collect(),
                nodes: prev.nodes.union(&fresh.nodes).copied().collect(),
            };
            let changed = merged != prev;
            self.memo.insert(key, merged);
            if !(self.reentered.remove(&key) && changed) {
                break;
            }
        }
        self.in_progress.remove(&key);
        self.stats.summaries_computed += 1;
        self.memo[&key].clone()
    }

    fn traverse_callee(&mut self, callee: DeclId, token: DependencyToken) -> TokenSummary {
        let doc = self.doc;
        let def_node = self.table.decl(callee).node;
        let mut st = SlicerState::new([token].into());
        st.owner = Some(callee);
        st.exit = st.agenda.clone();
        if let Some(op) = doc.operations.iter().find(|o| o.id == def_node) {
            self.process_statement(&mut st, &op.body);
        } else if let Some(f) = doc.functions.iter().find(|f| f.id == def_node) {
            st.writes.insert(DependencyToken::Result(callee));
            st.reads.extend(self.flow(&f.body));
            st.process_dependency(f.body.id);
            self.process_expression(&mut st, &f.body);
        }
        let inputs = st
            .agenda
            .iter()
            .filter_map(|t| match t {
                DependencyToken::Var(d) => match self.table.decl(*d).kind {
                    DeclKind::Parameter { index } if self.table.decl(*d).owner == Some(def_node) => {
                        Some(SummaryInput::Param(index))
                    }
                    DeclKind::StateField | DeclKind::Value => Some(SummaryInput::Token(*t)),
                    _ => None,
                },
                _ => None,
            })
            .collect();
        TokenSummary {
            inputs,
            nodes: st.slice,
        }
    }

    /// Explains value-definition tokens left on the agenda.
    fn process_values(&mut self, st: &mut SlicerState) {
        let doc = self.doc;
        let mut done = BTreeSet::new();
        loop {
            let next = doc.values.iter().rev().find(|v| {
                !done.contains(&v.id)
                    && v.pattern.identifiers().iter().any(|p| {
                        self.table
                            .declared_by(p.id)
                            .is_some_and(|d| st.agenda.contains(&DependencyToken::Var(d)))
                    })
            });
            let Some(v) = next else { break };
            done.insert(v.id);
            let source = self.flows([&v.value]);
            self.process_pattern(st, &v.pattern, source);
            self.process_expression(st, &v.value);
        }
    }
}
