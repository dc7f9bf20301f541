//! Span-annotated syntax tree for the supported VDM-SL subset.
//!
//! Every node carries a [`NodeId`] assigned densely at parse time and a
//! [`Span`] into the original source text. Slices, criteria, and symbol
//! tables all refer to nodes through their ids, so a parsed [`Document`] is
//! never mutated afterwards.

use std::fmt;

/// 1-based line/column pair, counted in Unicode scalar values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl Position {
    pub fn new(line: u32, column: u32) -> Self {
        Position { line, column }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Half-open source range; `end` is exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: Position,
    pub end: Position,
}

impl Span {
    pub fn new(start: Position, end: Position) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn contains_pos(&self, pos: Position) -> bool {
        self.start <= pos && pos < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An identifier occurrence that is not itself a node (definition names,
/// field names, callee names).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

/// Uninterpreted type expression. Only the input generator looks inside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeExpr {
    pub kind: TypeKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeKind {
    Named(String),
    Quote(String),
    Optional(Box<TypeExpr>),
    SetOf(Box<TypeExpr>),
    SeqOf { elem: Box<TypeExpr>, nonempty: bool },
    Map { from: Box<TypeExpr>, to: Box<TypeExpr>, injective: bool },
    Product(Vec<TypeExpr>),
    Union(Vec<TypeExpr>),
}

#[derive(Clone, Debug)]
pub struct Document {
    pub id: NodeId,
    pub span: Span,
    pub state: Option<StateDefinition>,
    pub values: Vec<ValueDefinition>,
    pub functions: Vec<FunctionDefinition>,
    pub operations: Vec<OperationDefinition>,
    pub source: String,
    pub(crate) index: NodeIndex,
}

#[derive(Clone, Debug)]
pub struct StateDefinition {
    pub id: NodeId,
    pub span: Span,
    pub name: Ident,
    pub fields: Vec<FieldDecl>,
    pub invariant: Option<(Pattern, Expr)>,
    pub init: Option<(Pattern, Expr)>,
}

#[derive(Clone, Debug)]
pub struct FieldDecl {
    pub id: NodeId,
    pub span: Span,
    pub name: Ident,
    pub ty: TypeExpr,
}

#[derive(Clone, Debug)]
pub struct ValueDefinition {
    pub id: NodeId,
    pub span: Span,
    pub pattern: Pattern,
    pub ty: Option<TypeExpr>,
    pub value: Expr,
}

#[derive(Clone, Debug)]
pub struct FunctionDefinition {
    pub id: NodeId,
    pub span: Span,
    pub name: Ident,
    pub param_types: Vec<TypeExpr>,
    pub result_type: TypeExpr,
    pub params: Vec<Pattern>,
    pub body: Expr,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
}

#[derive(Clone, Debug)]
pub struct OperationDefinition {
    pub id: NodeId,
    pub span: Span,
    pub name: Ident,
    pub param_types: Vec<TypeExpr>,
    /// `None` for `()`.
    pub result_type: Option<TypeExpr>,
    pub params: Vec<Pattern>,
    pub body: Statement,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
}

#[derive(Clone, Debug)]
pub struct Statement {
    pub id: NodeId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Clone, Debug)]
pub enum StmtKind {
    Block {
        dcls: Vec<DclItem>,
        stmts: Vec<Statement>,
    },
    Assign {
        target: StateDesignator,
        value: Expr,
    },
    If {
        cond: Expr,
        then_branch: Box<Statement>,
        else_branch: Option<Box<Statement>>,
    },
    While {
        cond: Expr,
        body: Box<Statement>,
    },
    Call {
        callee: Ident,
        args: Vec<Expr>,
    },
    Let {
        bindings: Vec<LetBinding>,
        body: Box<Statement>,
    },
    Return(Option<Expr>),
    Skip,
}

/// One `name : type [:= init]` item of a `dcl` declaration.
#[derive(Clone, Debug)]
pub struct DclItem {
    pub id: NodeId,
    pub span: Span,
    pub name: Ident,
    pub ty: TypeExpr,
    pub init: Option<Expr>,
}

/// `pattern = expr` inside a `let`.
#[derive(Clone, Debug)]
pub struct LetBinding {
    pub id: NodeId,
    pub span: Span,
    pub pattern: Pattern,
    pub value: Expr,
}

#[derive(Clone, Debug)]
pub struct StateDesignator {
    pub id: NodeId,
    pub span: Span,
    pub base: Ident,
    pub accessors: Vec<Accessor>,
}

#[derive(Clone, Debug)]
pub enum Accessor {
    Field(Ident),
    Index(Expr),
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub id: NodeId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Literal(Literal),
    Name(String),
    /// `X~`
    OldName(String),
    /// `RESULT`
    Result,
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Apply {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Field {
        record: Box<Expr>,
        field: Ident,
    },
    Let {
        bindings: Vec<LetBinding>,
        body: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
    MapEnum(Vec<(Expr, Expr)>),
    SetEnum(Vec<Expr>),
    SeqEnum(Vec<Expr>),
    Record {
        name: Ident,
        args: Vec<Expr>,
    },
    Tuple(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Nil,
    Text(String),
    Char(char),
    Quote(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Mul,
    Div,
    IntDiv,
    Mod,
    Rem,
    Add,
    Sub,
    Concat,
    Munion,
    Override,
    Union,
    Inter,
    Difference,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    InSet,
    NotInSet,
    Subset,
    PSubset,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::IntDiv => "div",
            BinOp::Mod => "mod",
            BinOp::Rem => "rem",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Concat => "^",
            BinOp::Munion => "munion",
            BinOp::Override => "++",
            BinOp::Union => "union",
            BinOp::Inter => "inter",
            BinOp::Difference => "\\",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::InSet => "in set",
            BinOp::NotInSet => "not in set",
            BinOp::Subset => "subset",
            BinOp::PSubset => "psubset",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "=>",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    Dom,
    Rng,
    Card,
    Len,
    Hd,
    Tl,
    Elems,
    Inds,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Not => "not",
            UnOp::Neg => "-",
            UnOp::Dom => "dom",
            UnOp::Rng => "rng",
            UnOp::Card => "card",
            UnOp::Len => "len",
            UnOp::Hd => "hd",
            UnOp::Tl => "tl",
            UnOp::Elems => "elems",
            UnOp::Inds => "inds",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Pattern {
    pub id: NodeId,
    pub span: Span,
    pub kind: PatternKind,
}

#[derive(Clone, Debug)]
pub enum PatternKind {
    Identifier(String),
    DontCare,
    SetUnion(Box<Pattern>, Box<Pattern>),
    MatchValue(Box<Expr>),
    Record { name: Ident, fields: Vec<Pattern> },
    Tuple(Vec<Pattern>),
}

impl Pattern {
    /// Identifier patterns in source order.
    pub fn identifiers(&self) -> Vec<&Pattern> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a Pattern>) {
        match &self.kind {
            PatternKind::Identifier(_) => out.push(self),
            PatternKind::DontCare | PatternKind::MatchValue(_) => {}
            PatternKind::SetUnion(l, r) => {
                l.collect_identifiers(out);
                r.collect_identifiers(out);
            }
            PatternKind::Record { fields, .. } => fields.iter().for_each(|p| p.collect_identifiers(out)),
            PatternKind::Tuple(ps) => ps.iter().for_each(|p| p.collect_identifiers(out)),
        }
    }
}

/// Node kind tag, used for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Document,
    StateDefinition,
    FieldDecl,
    ValueDefinition,
    FunctionDefinition,
    OperationDefinition,
    Block,
    Assign,
    If,
    While,
    Call,
    LetStmt,
    Return,
    Skip,
    DclItem,
    LetBinding,
    StateDesignator,
    Literal,
    Name,
    OldName,
    ResultName,
    BinExp,
    UnaryExp,
    Apply,
    FieldRef,
    LetExpr,
    IfExpr,
    MapEnum,
    SetEnum,
    SeqEnum,
    RecordConstructor,
    TupleConstructor,
    PatternIdentifier,
    DontCare,
    SetUnionPattern,
    MatchValuePattern,
    RecordPattern,
    TuplePattern,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Document => "Document",
            NodeKind::StateDefinition => "StateDefinition",
            NodeKind::FieldDecl => "FieldDecl",
            NodeKind::ValueDefinition => "ValueDefinition",
            NodeKind::FunctionDefinition => "FunctionDefinition",
            NodeKind::OperationDefinition => "OperationDefinition",
            NodeKind::Block => "Block",
            NodeKind::Assign => "Assign",
            NodeKind::If => "If",
            NodeKind::While => "While",
            NodeKind::Call => "Call",
            NodeKind::LetStmt => "LetStmt",
            NodeKind::Return => "Return",
            NodeKind::Skip => "Skip",
            NodeKind::DclItem => "DclItem",
            NodeKind::LetBinding => "LetBinding",
            NodeKind::StateDesignator => "StateDesignator",
            NodeKind::Literal => "Literal",
            NodeKind::Name => "Name",
            NodeKind::OldName => "OldName",
            NodeKind::ResultName => "ResultName",
            NodeKind::BinExp => "BinExp",
            NodeKind::UnaryExp => "UnaryExp",
            NodeKind::Apply => "Apply",
            NodeKind::FieldRef => "FieldRef",
            NodeKind::LetExpr => "LetExpr",
            NodeKind::IfExpr => "IfExpr",
            NodeKind::MapEnum => "MapEnum",
            NodeKind::SetEnum => "SetEnum",
            NodeKind::SeqEnum => "SeqEnum",
            NodeKind::RecordConstructor => "RecordConstructor",
            NodeKind::TupleConstructor => "TupleConstructor",
            NodeKind::PatternIdentifier => "PatternIdentifier",
            NodeKind::DontCare => "DontCare",
            NodeKind::SetUnionPattern => "SetUnionPattern",
            NodeKind::MatchValuePattern => "MatchValuePattern",
            NodeKind::RecordPattern => "RecordPattern",
            NodeKind::TuplePattern => "TuplePattern",
        }
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::Block
                | NodeKind::Assign
                | NodeKind::If
                | NodeKind::While
                | NodeKind::Call
                | NodeKind::LetStmt
                | NodeKind::Return
                | NodeKind::Skip
        )
    }

    pub fn is_expression(self) -> bool {
        matches!(
            self,
            NodeKind::Literal
                | NodeKind::Name
                | NodeKind::OldName
                | NodeKind::ResultName
                | NodeKind::BinExp
                | NodeKind::UnaryExp
                | NodeKind::Apply
                | NodeKind::FieldRef
                | NodeKind::LetExpr
                | NodeKind::IfExpr
                | NodeKind::MapEnum
                | NodeKind::SetEnum
                | NodeKind::SeqEnum
                | NodeKind::RecordConstructor
                | NodeKind::TupleConstructor
        )
    }

    pub fn is_definition(self) -> bool {
        matches!(
            self,
            NodeKind::StateDefinition
                | NodeKind::ValueDefinition
                | NodeKind::FunctionDefinition
                | NodeKind::OperationDefinition
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Borrowed view of any node in the tree.
#[derive(Clone, Copy, Debug)]
pub enum NodeRef<'a> {
    Document(&'a Document),
    State(&'a StateDefinition),
    Field(&'a FieldDecl),
    Value(&'a ValueDefinition),
    Function(&'a FunctionDefinition),
    Operation(&'a OperationDefinition),
    Stmt(&'a Statement),
    Dcl(&'a DclItem),
    Binding(&'a LetBinding),
    Designator(&'a StateDesignator),
    Expr(&'a Expr),
    Pattern(&'a Pattern),
}

impl<'a> NodeRef<'a> {
    pub fn id(&self) -> NodeId {
        match self {
            NodeRef::Document(n) => n.id,
            NodeRef::State(n) => n.id,
            NodeRef::Field(n) => n.id,
            NodeRef::Value(n) => n.id,
            NodeRef::Function(n) => n.id,
            NodeRef::Operation(n) => n.id,
            NodeRef::Stmt(n) => n.id,
            NodeRef::Dcl(n) => n.id,
            NodeRef::Binding(n) => n.id,
            NodeRef::Designator(n) => n.id,
            NodeRef::Expr(n) => n.id,
            NodeRef::Pattern(n) => n.id,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            NodeRef::Document(n) => n.span,
            NodeRef::State(n) => n.span,
            NodeRef::Field(n) => n.span,
            NodeRef::Value(n) => n.span,
            NodeRef::Function(n) => n.span,
            NodeRef::Operation(n) => n.span,
            NodeRef::Stmt(n) => n.span,
            NodeRef::Dcl(n) => n.span,
            NodeRef::Binding(n) => n.span,
            NodeRef::Designator(n) => n.span,
            NodeRef::Expr(n) => n.span,
            NodeRef::Pattern(n) => n.span,
        }
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            NodeRef::Document(_) => NodeKind::Document,
            NodeRef::State(_) => NodeKind::StateDefinition,
            NodeRef::Field(_) => NodeKind::FieldDecl,
            NodeRef::Value(_) => NodeKind::ValueDefinition,
            NodeRef::Function(_) => NodeKind::FunctionDefinition,
            NodeRef::Operation(_) => NodeKind::OperationDefinition,
            NodeRef::Dcl(_) => NodeKind::DclItem,
            NodeRef::Binding(_) => NodeKind::LetBinding,
            NodeRef::Designator(_) => NodeKind::StateDesignator,
            NodeRef::Stmt(s) => match &s.kind {
                StmtKind::Block { .. } => NodeKind::Block,
                StmtKind::Assign { .. } => NodeKind::Assign,
                StmtKind::If { .. } => NodeKind::If,
                StmtKind::While { .. } => NodeKind::While,
                StmtKind::Call { .. } => NodeKind::Call,
                StmtKind::Let { .. } => NodeKind::LetStmt,
                StmtKind::Return(_) => NodeKind::Return,
                StmtKind::Skip => NodeKind::Skip,
            },
            NodeRef::Expr(e) => match &e.kind {
                ExprKind::Literal(_) => NodeKind::Literal,
                ExprKind::Name(_) => NodeKind::Name,
                ExprKind::OldName(_) => NodeKind::OldName,
                ExprKind::Result => NodeKind::ResultName,
                ExprKind::Binary { .. } => NodeKind::BinExp,
                ExprKind::Unary { .. } => NodeKind::UnaryExp,
                ExprKind::Apply { .. } => NodeKind::Apply,
                ExprKind::Field { .. } => NodeKind::FieldRef,
                ExprKind::Let { .. } => NodeKind::LetExpr,
                ExprKind::If { .. } => NodeKind::IfExpr,
                ExprKind::MapEnum(_) => NodeKind::MapEnum,
                ExprKind::SetEnum(_) => NodeKind::SetEnum,
                ExprKind::SeqEnum(_) => NodeKind::SeqEnum,
                ExprKind::Record { .. } => NodeKind::RecordConstructor,
                ExprKind::Tuple(_) => NodeKind::TupleConstructor,
            },
            NodeRef::Pattern(p) => match &p.kind {
                PatternKind::Identifier(_) => NodeKind::PatternIdentifier,
                PatternKind::DontCare => NodeKind::DontCare,
                PatternKind::SetUnion(..) => NodeKind::SetUnionPattern,
                PatternKind::MatchValue(_) => NodeKind::MatchValuePattern,
                PatternKind::Record { .. } => NodeKind::RecordPattern,
                PatternKind::Tuple(_) => NodeKind::TuplePattern,
            },
        }
    }
}

/// Direct children of `node` in source order.
pub fn children_of<'a>(node: NodeRef<'a>) -> Vec<NodeRef<'a>> {
    let mut out = Vec::new();
    match node {
        NodeRef::Document(d) => {
            // definitions may interleave by section, so order by position
            if let Some(s) = &d.state {
                out.push(NodeRef::State(s));
            }
            out.extend(d.values.iter().map(NodeRef::Value));
            out.extend(d.functions.iter().map(NodeRef::Function));
            out.extend(d.operations.iter().map(NodeRef::Operation));
            out.sort_by_key(|n| n.span().start);
        }
        NodeRef::State(s) => {
            out.extend(s.fields.iter().map(NodeRef::Field));
            if let Some((p, e)) = &s.invariant {
                out.push(NodeRef::Pattern(p));
                out.push(NodeRef::Expr(e));
            }
            if let Some((p, e)) = &s.init {
                out.push(NodeRef::Pattern(p));
                out.push(NodeRef::Expr(e));
            }
        }
        NodeRef::Field(_) => {}
        NodeRef::Value(v) => {
            out.push(NodeRef::Pattern(&v.pattern));
            out.push(NodeRef::Expr(&v.value));
        }
        NodeRef::Function(f) => {
            out.extend(f.params.iter().map(NodeRef::Pattern));
            out.push(NodeRef::Expr(&f.body));
            out.extend(f.pre.iter().map(NodeRef::Expr));
            out.extend(f.post.iter().map(NodeRef::Expr));
        }
        NodeRef::Operation(o) => {
            out.extend(o.params.iter().map(NodeRef::Pattern));
            out.push(NodeRef::Stmt(&o.body));
            out.extend(o.pre.iter().map(NodeRef::Expr));
            out.extend(o.post.iter().map(NodeRef::Expr));
        }
        NodeRef::Stmt(s) => match &s.kind {
            StmtKind::Block { dcls, stmts } => {
                out.extend(dcls.iter().map(NodeRef::Dcl));
                out.extend(stmts.iter().map(NodeRef::Stmt));
            }
            StmtKind::Assign { target, value } => {
                out.push(NodeRef::Designator(target));
                out.push(NodeRef::Expr(value));
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                out.push(NodeRef::Expr(cond));
                out.push(NodeRef::Stmt(then_branch));
                if let Some(e) = else_branch {
                    out.push(NodeRef::Stmt(e));
                }
            }
            StmtKind::While { cond, body } => {
                out.push(NodeRef::Expr(cond));
                out.push(NodeRef::Stmt(body));
            }
            StmtKind::Call { args, .. } => out.extend(args.iter().map(NodeRef::Expr)),
            StmtKind::Let { bindings, body } => {
                out.extend(bindings.iter().map(NodeRef::Binding));
                out.push(NodeRef::Stmt(body));
            }
            StmtKind::Return(e) => out.extend(e.iter().map(NodeRef::Expr)),
            StmtKind::Skip => {}
        },
        NodeRef::Dcl(d) => out.extend(d.init.iter().map(NodeRef::Expr)),
        NodeRef::Binding(b) => {
            out.push(NodeRef::Pattern(&b.pattern));
            out.push(NodeRef::Expr(&b.value));
        }
        NodeRef::Designator(d) => {
            for acc in &d.accessors {
                if let Accessor::Index(e) = acc {
                    out.push(NodeRef::Expr(e));
                }
            }
        }
        NodeRef::Expr(e) => match &e.kind {
            ExprKind::Literal(_) | ExprKind::Name(_) | ExprKind::OldName(_) | ExprKind::Result => {}
            ExprKind::Binary { lhs, rhs, .. } => {
                out.push(NodeRef::Expr(lhs));
                out.push(NodeRef::Expr(rhs));
            }
            ExprKind::Unary { operand, .. } => out.push(NodeRef::Expr(operand)),
            ExprKind::Apply { callee, args } => {
                out.push(NodeRef::Expr(callee));
                out.extend(args.iter().map(NodeRef::Expr));
            }
            ExprKind::Field { record, .. } => out.push(NodeRef::Expr(record)),
            ExprKind::Let { bindings, body } => {
                out.extend(bindings.iter().map(NodeRef::Binding));
                out.push(NodeRef::Expr(body));
            }
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                out.push(NodeRef::Expr(cond));
                out.push(NodeRef::Expr(then_branch));
                out.push(NodeRef::Expr(else_branch));
            }
            ExprKind::MapEnum(pairs) => {
                for (k, v) in pairs {
                    out.push(NodeRef::Expr(k));
                    out.push(NodeRef::Expr(v));
                }
            }
            ExprKind::SetEnum(es) | ExprKind::SeqEnum(es) | ExprKind::Tuple(es) => {
                out.extend(es.iter().map(NodeRef::Expr))
            }
            ExprKind::Record { args, .. } => out.extend(args.iter().map(NodeRef::Expr)),
        },
        NodeRef::Pattern(p) => match &p.kind {
            PatternKind::Identifier(_) | PatternKind::DontCare => {}
            PatternKind::SetUnion(l, r) => {
                out.push(NodeRef::Pattern(l));
                out.push(NodeRef::Pattern(r));
            }
            PatternKind::MatchValue(e) => out.push(NodeRef::Expr(e)),
            PatternKind::Record { fields, .. } => out.extend(fields.iter().map(NodeRef::Pattern)),
            PatternKind::Tuple(ps) => out.extend(ps.iter().map(NodeRef::Pattern)),
        },
    }
    out
}

/// Pre-order walk.
pub fn walk<'a>(node: NodeRef<'a>, f: &mut impl FnMut(NodeRef<'a>)) {
    f(node);
    for child in children_of(node) {
        walk(child, f);
    }
}

#[derive(Clone, Debug)]
pub struct NodeInfo {
    pub kind: NodeKind,
    pub span: Span,
    pub parent: Option<NodeId>,
}

/// Flat per-node table indexed by `NodeId`.
#[derive(Clone, Debug, Default)]
pub(crate) struct NodeIndex {
    infos: Vec<Option<NodeInfo>>,
}

impl NodeIndex {
    fn build(doc: &Document, capacity: usize) -> NodeIndex {
        fn go(node: NodeRef<'_>, parent: Option<NodeId>, infos: &mut Vec<Option<NodeInfo>>) {
            let id = node.id();
            if infos.len() <= id.index() {
                infos.resize(id.index() + 1, None);
            }
            infos[id.index()] = Some(NodeInfo {
                kind: node.kind(),
                span: node.span(),
                parent,
            });
            for child in children_of(node) {
                go(child, Some(id), infos);
            }
        }
        let mut infos = vec![None; capacity];
        go(NodeRef::Document(doc), None, &mut infos);
        NodeIndex { infos }
    }
}

impl Document {
    pub(crate) fn finish(mut self, node_count: usize) -> Document {
        self.index = NodeIndex::build(&self, node_count);
        self
    }

    pub fn root(&self) -> NodeRef<'_> {
        NodeRef::Document(self)
    }

    pub fn info(&self, id: NodeId) -> Option<&NodeInfo> {
        self.index.infos.get(id.index()).and_then(Option::as_ref)
    }

    pub fn kind_of(&self, id: NodeId) -> Option<NodeKind> {
        self.info(id).map(|i| i.kind)
    }

    pub fn span_of(&self, id: NodeId) -> Option<Span> {
        self.info(id).map(|i| i.span)
    }

    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.info(id).and_then(|i| i.parent)
    }

    /// Ids of all nodes reachable from the root.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.index
            .infos
            .iter()
            .enumerate()
            .filter(|(_, i)| i.is_some())
            .map(|(n, _)| NodeId(n as u32))
    }

    pub fn node_count(&self) -> usize {
        self.index.infos.iter().filter(|i| i.is_some()).count()
    }

    /// `id` and its ancestors, innermost first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent_of(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn operation(&self, name: &str) -> Option<&OperationDefinition> {
        self.operations.iter().find(|o| o.name.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDefinition> {
        self.functions.iter().find(|f| f.name.name == name)
    }

    pub fn state_field_names(&self) -> Vec<&str> {
        self.state
            .iter()
            .flat_map(|s| s.fields.iter().map(|f| f.name.name.as_str()))
            .collect()
    }

    /// Definition (operation, function, value, or state) enclosing `id`.
    pub fn enclosing_definition(&self, id: NodeId) -> Option<NodeId> {
        self.ancestors(id)
            .into_iter()
            .find(|a| self.kind_of(*a).is_some_and(NodeKind::is_definition))
    }

    /// Name shown for a definition node in reports.
    pub fn definition_name(&self, id: NodeId) -> Option<String> {
        if let Some(o) = self.operations.iter().find(|o| o.id == id) {
            return Some(o.name.name.clone());
        }
        if let Some(f) = self.functions.iter().find(|f| f.id == id) {
            return Some(f.name.name.clone());
        }
        if let Some(v) = self.values.iter().find(|v| v.id == id) {
            let names: Vec<String> = v
                .pattern
                .identifiers()
                .iter()
                .filter_map(|p| match &p.kind {
                    PatternKind::Identifier(n) => Some(n.clone()),
                    _ => None,
                })
                .collect();
            return Some(if names.is_empty() {
                format!("value@{}", v.span.start)
            } else {
                names.join(",")
            });
        }
        self.state
            .as_ref()
            .filter(|s| s.id == id)
            .map(|s| s.name.name.clone())
    }

    /// Source text covered by `span`.
    pub fn text_of(&self, span: Span) -> &str {
        let start = byte_offset(&self.source, span.start).unwrap_or(self.source.len());
        let end = byte_offset(&self.source, span.end).unwrap_or(self.source.len());
        &self.source[start..end.max(start)]
    }

    pub fn node(&self, id: NodeId) -> Option<NodeRef<'_>> {
        let target = self.span_of(id)?;
        find_node(self.root(), id, target)
    }
}

fn find_node(node: NodeRef<'_>, id: NodeId, target: Span) -> Option<NodeRef<'_>> {
    if node.id() == id {
        return Some(node);
    }
    children_of(node)
        .into_iter()
        .filter(|c| c.span().contains(&target))
        .find_map(|c| find_node(c, id, target))
}

/// Byte offset of `pos` in `text`, or `None` past the end.
pub fn byte_offset(text: &str, pos: Position) -> Option<usize> {
    let mut line = 1u32;
    let mut col = 1u32;
    for (off, ch) in text.char_indices() {
        if line == pos.line && col == pos.column {
            return Some(off);
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line == pos.line && col == pos.column).then_some(text.len())
}

/// Deepest node whose span contains `position`.
pub fn smallest_node_covering(doc: &Document, position: Position) -> Option<NodeRef<'_>> {
    let root = doc.root();
    if !root.span().contains_pos(position) {
        return None;
    }
    let mut best: Option<NodeRef<'_>> = None;
    let mut cur = root;
    loop {
        let next = children_of(cur)
            .into_iter()
            .find(|c| c.span().contains_pos(position));
        match next {
            Some(c) => {
                best = Some(c);
                cur = c;
            }
            None => break,
        }
    }
    best
}

/// Structural rendering that ignores ids and spans. Two subtrees are
/// structurally equal iff their renderings are equal.
pub fn sexpr(node: NodeRef<'_>) -> String {
    let mut out = String::new();
    write_sexpr(node, &mut out);
    out
}

fn write_sexpr(node: NodeRef<'_>, out: &mut String) {
    out.push('(');
    out.push_str(node.kind().as_str());
    let extra = match node {
        NodeRef::State(s) => Some(s.name.name.clone()),
        NodeRef::Field(f) => Some(format!("{} {}", f.name.name, type_sexpr(&f.ty))),
        NodeRef::Function(f) => Some(f.name.name.clone()),
        NodeRef::Operation(o) => Some(o.name.name.clone()),
        NodeRef::Dcl(d) => Some(format!("{} {}", d.name.name, type_sexpr(&d.ty))),
        NodeRef::Designator(d) => {
            let mut s = d.base.name.clone();
            for acc in &d.accessors {
                match acc {
                    Accessor::Field(f) => {
                        s.push('.');
                        s.push_str(&f.name);
                    }
                    Accessor::Index(_) => s.push_str("()"),
                }
            }
            Some(s)
        }
        NodeRef::Stmt(s) => match &s.kind {
            StmtKind::Call { callee, .. } => Some(callee.name.clone()),
            _ => None,
        },
        NodeRef::Expr(e) => match &e.kind {
            ExprKind::Literal(l) => Some(format!("{l:?}")),
            ExprKind::Name(n) | ExprKind::OldName(n) => Some(n.clone()),
            ExprKind::Binary { op, .. } => Some(op.symbol().to_string()),
            ExprKind::Unary { op, .. } => Some(op.symbol().to_string()),
            ExprKind::Field { field, .. } => Some(field.name.clone()),
            ExprKind::Record { name, .. } => Some(name.name.clone()),
            _ => None,
        },
        NodeRef::Pattern(p) => match &p.kind {
            PatternKind::Identifier(n) => Some(n.clone()),
            PatternKind::Record { name, .. } => Some(name.name.clone()),
            _ => None,
        },
        _ => None,
    };
    if let Some(extra) = extra {
        out.push(' ');
        out.push_str(&extra);
    }
    for child in children_of(node) {
        out.push(' ');
        write_sexpr(child, out);
    }
    out.push(')');
}

pub fn type_sexpr(ty: &TypeExpr) -> String {
    match &ty.kind {
        TypeKind::Named(n) => n.clone(),
        TypeKind::Quote(q) => format!("<{q}>"),
        TypeKind::Optional(t) => format!("[{}]", type_sexpr(t)),
        TypeKind::SetOf(t) => format!("(set {})", type_sexpr(t)),
        TypeKind::SeqOf { elem, nonempty } => {
            format!("({} {})", if *nonempty { "seq1" } else { "seq" }, type_sexpr(elem))
        }
        TypeKind::Map { from, to, injective } => format!(
            "({} {} {})",
            if *injective { "inmap" } else { "map" },
            type_sexpr(from),
            type_sexpr(to)
        ),
        TypeKind::Product(ts) => {
            let parts: Vec<String> = ts.iter().map(type_sexpr).collect();
            format!("(* {})", parts.join(" "))
        }
        TypeKind::Union(ts) => {
            let parts: Vec<String> = ts.iter().map(type_sexpr).collect();
            format!("(| {})", parts.join(" "))
        }
    }
}
