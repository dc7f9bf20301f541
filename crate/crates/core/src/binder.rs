//! Name resolution.
//!
//! Every name occurrence is resolved to the declaration site that introduces
//! it. The slicer never compares occurrence nodes directly: a write to `x`
//! and a later read of `x` are different nodes, so both are normalized to
//! `Var(decl)` tokens before intersection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::syntax::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeclId(pub u32);

impl fmt::Display for DeclId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    StateField,
    /// `dcl` local.
    Local,
    /// Identifier inside parameter pattern `index` of its definition.
    Parameter { index: usize },
    /// Identifier bound by a `let`, an invariant, or an init pattern.
    PatternVar,
    /// Identifier bound by a value definition.
    Value,
    Operation,
    Function,
}

impl DeclKind {
    pub fn is_value_bearing(self) -> bool {
        !matches!(self, DeclKind::Operation | DeclKind::Function)
    }
}

#[derive(Clone, Debug)]
pub struct Declaration {
    pub id: DeclId,
    pub name: String,
    pub kind: DeclKind,
    /// Declaring node: field decl, dcl item, pattern identifier, or definition.
    pub node: NodeId,
    /// Enclosing definition node, when there is one.
    pub owner: Option<NodeId>,
}

/// Element of the slicer's agenda/reads/writes sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DependencyToken {
    /// Current value of a declared variable.
    Var(DeclId),
    /// Value returned by an operation or function.
    Result(DeclId),
    /// Pre-state value `X~` of a state variable.
    Entry(DeclId),
    /// Value flowing out of an expression (or a pattern) node.
    Expr(NodeId),
}

impl fmt::Display for DependencyToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependencyToken::Var(d) => write!(f, "Var({d})"),
            DependencyToken::Result(d) => write!(f, "Result({d})"),
            DependencyToken::Entry(d) => write!(f, "Entry({d})"),
            DependencyToken::Expr(n) => write!(f, "Expr({n})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindErrorKind {
    Unresolved,
    ResultOutsidePostcondition,
    ResultInVoidOperation,
    OldNameOutsidePostcondition,
    OldNameNotStateVariable,
    NotAnOperation,
    InvalidDesignatorBase,
    DuplicateDefinition,
    DuplicateBinder,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct BindError {
    pub kind: BindErrorKind,
    pub message: String,
    pub span: Span,
}

#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    decls: Vec<Declaration>,
    uses: HashMap<NodeId, DeclId>,
    by_node: HashMap<NodeId, DeclId>,
    definitions: BTreeMap<String, DeclId>,
    state_fields: Vec<DeclId>,
}

impl SymbolTable {
    pub fn decl(&self, id: DeclId) -> &Declaration {
        &self.decls[id.0 as usize]
    }

    pub fn declarations(&self) -> &[Declaration] {
        &self.decls
    }

    /// Declaration a use-site node resolves to. Use sites are `Name`,
    /// `OldName`, `RESULT` (resolves to the operation or function),
    /// designators (their base), and call statements (their callee).
    pub fn resolve(&self, node: NodeId) -> Option<DeclId> {
        self.uses.get(&node).copied()
    }

    /// Declaration introduced by `node`, if it is a declaring node.
    pub fn declared_by(&self, node: NodeId) -> Option<DeclId> {
        self.by_node.get(&node).copied()
    }

    /// Operation or function declaration by name.
    pub fn definition(&self, name: &str) -> Option<DeclId> {
        self.definitions.get(name).copied()
    }

    pub fn state_fields(&self) -> &[DeclId] {
        &self.state_fields
    }

    pub fn state_field(&self, name: &str) -> Option<DeclId> {
        self.state_fields
            .iter()
            .copied()
            .find(|d| self.decl(*d).name == name)
    }

    pub fn is_state_field(&self, id: DeclId) -> bool {
        self.decl(id).kind == DeclKind::StateField
    }

    /// Token for a leaf expression that names a value, or `None` for
    /// literals, compound expressions, and callee names.
    pub fn leaf_token(&self, expr: &Expr) -> Option<DependencyToken> {
        let decl = self.resolve(expr.id)?;
        match &expr.kind {
            ExprKind::Name(_) if self.decl(decl).kind.is_value_bearing() => {
                Some(DependencyToken::Var(decl))
            }
            ExprKind::OldName(_) => Some(DependencyToken::Entry(decl)),
            ExprKind::Result => Some(DependencyToken::Result(decl)),
            _ => None,
        }
    }

    /// Callable declaration an `Apply` callee names, if any.
    pub fn callee(&self, callee: &Expr) -> Option<DeclId> {
        if !matches!(callee.kind, ExprKind::Name(_)) {
            return None;
        }
        let d = self.resolve(callee.id)?;
        (!self.decl(d).kind.is_value_bearing()).then_some(d)
    }
}

/// Value tokens for the free name occurrences in `expr`.
pub fn tokens_read_by(expr: &Expr, table: &SymbolTable) -> BTreeSet<DependencyToken> {
    let mut bound = BTreeSet::new();
    walk(NodeRef::Expr(expr), &mut |n| {
        if let NodeRef::Pattern(p) = n {
            if let Some(d) = table.declared_by(p.id) {
                bound.insert(d);
            }
        }
    });
    let mut out = BTreeSet::new();
    walk(NodeRef::Expr(expr), &mut |n| {
        if let NodeRef::Expr(e) = n {
            if let Some(tok) = table.leaf_token(e) {
                let local = matches!(tok, DependencyToken::Var(d) if bound.contains(&d));
                if !local {
                    out.insert(tok);
                }
            }
        }
    });
    out
}

/// Resolves every name in `doc`.
pub fn bind(doc: &Document) -> Result<SymbolTable, Vec<BindError>> {
    let mut b = Binder {
        table: SymbolTable::default(),
        scopes: Vec::new(),
        errors: Vec::new(),
        doc,
    };
    b.run();
    if b.errors.is_empty() {
        Ok(b.table)
    } else {
        Err(b.errors)
    }
}

#[derive(Clone, Copy)]
struct PostContext {
    /// Operation or function the postcondition belongs to.
    owner: DeclId,
    void: bool,
}

struct Binder<'d> {
    table: SymbolTable,
    scopes: Vec<HashMap<String, DeclId>>,
    errors: Vec<BindError>,
    doc: &'d Document,
}

impl<'d> Binder<'d> {
    fn error(&mut self, kind: BindErrorKind, message: String, span: Span) {
        self.errors.push(BindError {
            kind,
            message,
            span,
        });
    }

    fn declare(
        &mut self,
        name: &str,
        kind: DeclKind,
        node: NodeId,
        owner: Option<NodeId>,
    ) -> DeclId {
        let id = DeclId(self.table.decls.len() as u32);
        self.table.decls.push(Declaration {
            id,
            name: name.to_string(),
            kind,
            node,
            owner,
        });
        self.table.by_node.insert(node, id);
        if let Some(scope) = self.scopes.last_mut() {
            scope.insert(name.to_string(), id);
        }
        id
    }

    fn lookup(&self, name: &str) -> Option<DeclId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn run(&mut self) {
        let doc = self.doc;
        self.scopes.push(HashMap::new());

        let mut seen: HashMap<String, Span> = HashMap::new();
        let mut check_dup = |b: &mut Self, name: &Ident| {
            if let Some(prev) = seen.get(&name.name) {
                b.error(
                    BindErrorKind::DuplicateDefinition,
                    format!("`{}` is already defined at {}", name.name, prev.start),
                    name.span,
                );
            } else {
                seen.insert(name.name.clone(), name.span);
            }
        };

        for f in &doc.functions {
            check_dup(self, &f.name);
            let d = self.declare(&f.name.name, DeclKind::Function, f.id, None);
            self.table.definitions.insert(f.name.name.clone(), d);
        }
        for o in &doc.operations {
            check_dup(self, &o.name);
            let d = self.declare(&o.name.name, DeclKind::Operation, o.id, None);
            self.table.definitions.insert(o.name.name.clone(), d);
        }
        // Value definitions are visible document-wide, so declare first.
        for v in &doc.values {
            for p in v.pattern.identifiers() {
                if let PatternKind::Identifier(n) = &p.kind {
                    let ident = Ident {
                        name: n.clone(),
                        span: p.span,
                    };
                    check_dup(self, &ident);
                    self.declare(n, DeclKind::Value, p.id, Some(v.id));
                }
            }
        }
        if let Some(state) = &doc.state {
            let mut field_scope = HashMap::new();
            for f in &state.fields {
                check_dup(self, &f.name);
                let id = DeclId(self.table.decls.len() as u32);
                self.table.decls.push(Declaration {
                    id,
                    name: f.name.name.clone(),
                    kind: DeclKind::StateField,
                    node: f.id,
                    owner: Some(state.id),
                });
                self.table.by_node.insert(f.id, id);
                self.table.state_fields.push(id);
                field_scope.insert(f.name.name.clone(), id);
            }
            self.scopes.push(field_scope);
        }

        for v in &doc.values {
            self.check_distinct_binders(&v.pattern);
            self.bind_match_values(&v.pattern, None);
            self.bind_expr(&v.value, None);
        }
        if let Some(state) = &doc.state {
            for (pat, e) in state.invariant.iter().chain(state.init.iter()) {
                self.scopes.push(HashMap::new());
                self.bind_pattern(pat, DeclKind::PatternVar, Some(state.id), None);
                self.bind_expr(e, None);
                self.scopes.pop();
            }
        }
        for f in &doc.functions {
            // functions do not see the state
            let saved = self.hide_state();
            let owner = self.table.definition(&f.name.name).expect("declared above");
            self.scopes.push(HashMap::new());
            for (i, p) in f.params.iter().enumerate() {
                self.bind_pattern(p, DeclKind::Parameter { index: i }, Some(f.id), None);
            }
            self.bind_expr(&f.body, None);
            if let Some(pre) = &f.pre {
                self.bind_expr(pre, None);
            }
            if let Some(post) = &f.post {
                let ctx = PostContext { owner, void: false };
                self.bind_expr(post, Some(ctx));
            }
            self.scopes.pop();
            self.restore_state(saved);
        }
        for o in &doc.operations {
            let owner = self.table.definition(&o.name.name).expect("declared above");
            self.scopes.push(HashMap::new());
            for (i, p) in o.params.iter().enumerate() {
                self.bind_pattern(p, DeclKind::Parameter { index: i }, Some(o.id), None);
            }
            self.bind_stmt(&o.body, o.id);
            if let Some(pre) = &o.pre {
                self.bind_expr(pre, None);
            }
            if let Some(post) = &o.post {
                let ctx = PostContext {
                    owner,
                    void: o.result_type.is_none(),
                };
                self.bind_expr(post, Some(ctx));
            }
            self.scopes.pop();
        }
    }

    fn hide_state(&mut self) -> Option<HashMap<String, DeclId>> {
        if self.doc.state.is_some() {
            Some(std::mem::take(&mut self.scopes[1]))
        } else {
            None
        }
    }

    fn restore_state(&mut self, saved: Option<HashMap<String, DeclId>>) {
        if let Some(s) = saved {
            self.scopes[1] = s;
        }
    }

    fn check_distinct_binders(&mut self, pat: &Pattern) {
        let mut seen = BTreeSet::new();
        for p in pat.identifiers() {
            if let PatternKind::Identifier(n) = &p.kind {
                if !seen.insert(n.clone()) {
                    self.error(
                        BindErrorKind::DuplicateBinder,
                        format!("`{n}` is bound more than once in one pattern"),
                        p.span,
                    );
                }
            }
        }
    }

    /// Resolves match-value expressions in the enclosing scope.
    fn bind_match_values(&mut self, pat: &Pattern, post: Option<PostContext>) {
        match &pat.kind {
            PatternKind::MatchValue(e) => self.bind_expr(e, post),
            PatternKind::SetUnion(l, r) => {
                self.bind_match_values(l, post);
                self.bind_match_values(r, post);
            }
            PatternKind::Record { fields, .. } => {
                fields.iter().for_each(|p| self.bind_match_values(p, post))
            }
            PatternKind::Tuple(ps) => ps.iter().for_each(|p| self.bind_match_values(p, post)),
            PatternKind::Identifier(_) | PatternKind::DontCare => {}
        }
    }

    fn bind_pattern(
        &mut self,
        pat: &Pattern,
        kind: DeclKind,
        owner: Option<NodeId>,
        post: Option<PostContext>,
    ) {
        self.check_distinct_binders(pat);
        self.bind_match_values(pat, post);
        for p in pat.identifiers() {
            if let PatternKind::Identifier(n) = &p.kind {
                self.declare(n, kind, p.id, owner);
            }
        }
    }

    fn bind_stmt(&mut self, s: &Statement, owner: NodeId) {
        match &s.kind {
            StmtKind::Block { dcls, stmts } => {
                self.scopes.push(HashMap::new());
                for d in dcls {
                    if let Some(init) = &d.init {
                        self.bind_expr(init, None);
                    }
                    self.declare(&d.name.name, DeclKind::Local, d.id, Some(owner));
                }
                for st in stmts {
                    self.bind_stmt(st, owner);
                }
                self.scopes.pop();
            }
            StmtKind::Assign { target, value } => {
                match self.lookup(&target.base.name) {
                    Some(d)
                        if matches!(
                            self.table.decl(d).kind,
                            DeclKind::StateField | DeclKind::Local
                        ) =>
                    {
                        self.table.uses.insert(target.id, d);
                    }
                    Some(_) => self.error(
                        BindErrorKind::InvalidDesignatorBase,
                        format!(
                            "`{}` is neither a state variable nor a dcl local",
                            target.base.name
                        ),
                        target.base.span,
                    ),
                    None => self.error(
                        BindErrorKind::Unresolved,
                        format!("unresolved name `{}`", target.base.name),
                        target.base.span,
                    ),
                }
                for acc in &target.accessors {
                    if let Accessor::Index(e) = acc {
                        self.bind_expr(e, None);
                    }
                }
                self.bind_expr(value, None);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.bind_expr(cond, None);
                self.bind_stmt(then_branch, owner);
                if let Some(e) = else_branch {
                    self.bind_stmt(e, owner);
                }
            }
            StmtKind::While { cond, body } => {
                self.bind_expr(cond, None);
                self.bind_stmt(body, owner);
            }
            StmtKind::Call { callee, args } => {
                match self.table.definition(&callee.name) {
                    Some(d) if self.table.decl(d).kind == DeclKind::Operation => {
                        self.table.uses.insert(s.id, d);
                    }
                    Some(_) => self.error(
                        BindErrorKind::NotAnOperation,
                        format!("`{}` is not an operation", callee.name),
                        callee.span,
                    ),
                    None => self.error(
                        BindErrorKind::Unresolved,
                        format!("unresolved operation `{}`", callee.name),
                        callee.span,
                    ),
                }
                for a in args {
                    self.bind_expr(a, None);
                }
            }
            StmtKind::Let { bindings, body } => {
                let depth = self.scopes.len();
                for b in bindings {
                    self.bind_expr(&b.value, None);
                    self.scopes.push(HashMap::new());
                    self.bind_pattern(&b.pattern, DeclKind::PatternVar, Some(owner), None);
                }
                self.bind_stmt(body, owner);
                self.scopes.truncate(depth);
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.bind_expr(e, None);
                }
            }
            StmtKind::Skip => {}
        }
    }

    fn bind_expr(&mut self, e: &Expr, post: Option<PostContext>) {
        match &e.kind {
            ExprKind::Literal(_) => {}
            ExprKind::Name(n) => match self.lookup(n) {
                Some(d) => {
                    self.table.uses.insert(e.id, d);
                }
                None => self.error(
                    BindErrorKind::Unresolved,
                    format!("unresolved name `{n}`"),
                    e.span,
                ),
            },
            ExprKind::OldName(n) => {
                if post.is_none() {
                    self.error(
                        BindErrorKind::OldNameOutsidePostcondition,
                        format!("old name `{n}~` outside a postcondition"),
                        e.span,
                    );
                    return;
                }
                match self.table.state_field(n) {
                    Some(d) => {
                        self.table.uses.insert(e.id, d);
                    }
                    None => self.error(
                        BindErrorKind::OldNameNotStateVariable,
                        format!("`{n}~` does not name a state variable"),
                        e.span,
                    ),
                }
            }
            ExprKind::Result => match post {
                Some(ctx) if ctx.void => self.error(
                    BindErrorKind::ResultInVoidOperation,
                    "`RESULT` in the postcondition of an operation without a result".into(),
                    e.span,
                ),
                Some(ctx) => {
                    self.table.uses.insert(e.id, ctx.owner);
                }
                None => self.error(
                    BindErrorKind::ResultOutsidePostcondition,
                    "`RESULT` outside a postcondition".into(),
                    e.span,
                ),
            },
            ExprKind::Let { bindings, body } => {
                let depth = self.scopes.len();
                for b in bindings {
                    self.bind_expr(&b.value, post);
                    self.scopes.push(HashMap::new());
                    let owner = self.doc.enclosing_definition(e.id);
                    self.bind_pattern(&b.pattern, DeclKind::PatternVar, owner, post);
                }
                self.bind_expr(body, post);
                self.scopes.truncate(depth);
            }
            _ => {
                for child in children_of(NodeRef::Expr(e)) {
                    if let NodeRef::Expr(c) = child {
                        self.bind_expr(c, post);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_document;

    fn bound(src: &str) -> (Document, SymbolTable) {
        let doc = parse_document(src).unwrap();
        let table = bind(&doc).unwrap();
        (doc, table)
    }

    fn find_expr(doc: &Document, pred: impl Fn(&Expr) -> bool) -> Vec<&Expr> {
        let mut out = Vec::new();
        walk(doc.root(), &mut |n| {
            if let NodeRef::Expr(e) = n {
                if pred(e) {
                    out.push(e);
                }
            }
        });
        out
    }

    #[test]
    fn unresolved_return_name() {
        let doc = parse_document("operations op : () ==> nat op() == return x").unwrap();
        let errs = bind(&doc).unwrap_err();
        assert_eq!(errs[0].kind, BindErrorKind::Unresolved);
    }

    #[test]
    fn dcl_local_shadows_state_field() {
        let src = "state S of x : nat init s == s = mk_S(0) end\n\
                   operations op : () ==> nat op() == (dcl x : nat := 1; x := x + 1; return x)";
        let (doc, table) = bound(src);
        let uses = find_expr(&doc, |e| matches!(&e.kind, ExprKind::Name(n) if n == "x"));
        assert_eq!(uses.len(), 2);
        for u in uses {
            let d = table.resolve(u.id).unwrap();
            assert_eq!(table.decl(d).kind, DeclKind::Local);
        }
    }

    #[test]
    fn result_and_old_names_only_in_postconditions() {
        let doc = parse_document("state S of x : nat end operations op : () ==> nat op() == return x~")
            .unwrap();
        assert_eq!(
            bind(&doc).unwrap_err()[0].kind,
            BindErrorKind::OldNameOutsidePostcondition
        );
        let doc = parse_document("operations op : () ==> nat op() == return RESULT").unwrap();
        assert_eq!(
            bind(&doc).unwrap_err()[0].kind,
            BindErrorKind::ResultOutsidePostcondition
        );
        let doc = parse_document("state S of x : nat end operations op : () ==> () op() == x := 1 post RESULT = 1")
            .unwrap();
        assert_eq!(
            bind(&doc).unwrap_err()[0].kind,
            BindErrorKind::ResultInVoidOperation
        );
    }

    #[test]
    fn call_target_must_be_an_operation() {
        let src = "functions f : nat -> nat f(n) == n\n\
                   operations op : () ==> () op() == f(1)";
        let doc = parse_document(src);
        // `f` is not an operation, so the parser already refuses the call
        assert!(doc.is_err());
    }

    #[test]
    fn designator_base_must_be_assignable() {
        let doc = parse_document("operations op : nat ==> () op(p) == p := 1").unwrap();
        assert_eq!(
            bind(&doc).unwrap_err()[0].kind,
            BindErrorKind::InvalidDesignatorBase
        );
    }

    #[test]
    fn functions_do_not_see_state() {
        let doc = parse_document("state S of x : nat end functions f : () -> nat f() == x").unwrap();
        assert_eq!(bind(&doc).unwrap_err()[0].kind, BindErrorKind::Unresolved);
    }

    #[test]
    fn duplicate_definitions_and_binders() {
        let doc = parse_document(
            "operations a : () ==> () a() == skip; a : () ==> () a() == skip",
        )
        .unwrap();
        assert_eq!(
            bind(&doc).unwrap_err()[0].kind,
            BindErrorKind::DuplicateDefinition
        );
        let doc = parse_document("operations a : () ==> () a() == let mk_(x, x) = mk_(1, 2) in skip")
            .unwrap();
        assert_eq!(bind(&doc).unwrap_err()[0].kind, BindErrorKind::DuplicateBinder);
    }

    #[test]
    fn let_expression_binders_are_not_free() {
        let (doc, table) = bound(
            "values k = 3\n\
             functions f : nat -> nat f(n) == let m = n + k in m * 2",
        );
        let toks = tokens_read_by(&doc.functions[0].body, &table);
        let names: Vec<String> = toks
            .iter()
            .map(|t| match t {
                DependencyToken::Var(d) => table.decl(*d).name.clone(),
                other => other.to_string(),
            })
            .collect();
        assert_eq!(names, vec!["k".to_string(), "n".to_string()]);
    }

    #[test]
    fn bind_is_deterministic() {
        let src = include_str!("../corpus/memberbook_refactored.vdmsl");
        let doc = parse_document(src).unwrap();
        let a = bind(&doc).unwrap();
        let b = bind(&doc).unwrap();
        let mut ua: Vec<_> = a.uses.iter().collect();
        let mut ub: Vec<_> = b.uses.iter().collect();
        ua.sort();
        ub.sort();
        assert_eq!(ua, ub);
        assert_eq!(a.decls.len(), b.decls.len());
    }
}
