//! Recursive-descent parser for the VDM-SL subset.
//!
//! `elseif` chains are desugared here into nested `If` nodes; each nested
//! node spans from its `elseif` keyword to the end of the chain so
//! highlighting still lines up with the text.

pub mod lexer;

use std::collections::HashSet;

use thiserror::Error;

pub use lexer::{tokenize, Token, TokenKind};

use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: Span) -> Self {
        ParseError {
            message: message.into(),
            span,
            expected: Vec::new(),
        }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses a whole specification.
pub fn parse_document(source: &str) -> Result<Document, Vec<ParseError>> {
    let tokens = tokenize(source).map_err(|e| vec![e])?;
    let mut p = Parser::new(source, tokens);
    p.operations = p.scan_operation_names();
    p.document()
}

/// Parses a standalone expression.
pub fn parse_expression(source: &str) -> PResult<Expr> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(source, tokens);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a standalone statement; `operations` names the callable
/// operations so that `op(args)` is recognized as a call.
pub fn parse_statement(source: &str, operations: &[&str]) -> PResult<Statement> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(source, tokens);
    p.operations = operations.iter().map(|s| s.to_string()).collect();
    let s = p.statement()?;
    p.expect_eof()?;
    Ok(s)
}

pub fn parse_pattern(source: &str) -> PResult<Pattern> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(source, tokens);
    let pat = p.pattern()?;
    p.expect_eof()?;
    Ok(pat)
}

/// Parses the `L:C` position form used on the command line.
pub fn parse_position(text: &str) -> PResult<Position> {
    let whole = Span::new(Position::new(1, 1), Position::new(1, text.chars().count() as u32 + 1));
    let bad = |msg: &str| ParseError {
        message: format!("{msg}: `{text}`"),
        span: whole,
        expected: vec!["LINE:COLUMN".to_string()],
    };
    let (l, c) = text.split_once(':').ok_or_else(|| bad("missing `:`"))?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(l) || !digits(c) {
        return Err(bad("expected digits"));
    }
    let line: u32 = l.parse().map_err(|_| bad("line out of range"))?;
    let column: u32 = c.parse().map_err(|_| bad("column out of range"))?;
    if line == 0 || column == 0 {
        return Err(bad("line and column are 1-based"));
    }
    Ok(Position::new(line, column))
}

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
    operations: HashSet<String>,
}

const SECTION_KEYWORDS: &[&str] = &["state", "values", "functions", "operations"];

impl<'s> Parser<'s> {
    fn new(src: &'s str, toks: Vec<Token>) -> Self {
        Parser {
            src,
            toks,
            pos: 0,
            next_id: 0,
            operations: HashSet::new(),
        }
    }

    /// Names declared by `Name : ... ==>` signatures.
    fn scan_operation_names(&self) -> HashSet<String> {
        let mut names = HashSet::new();
        for (i, t) in self.toks.iter().enumerate() {
            if !t.is_op("==>") {
                continue;
            }
            let mut j = i;
            while j >= 2 {
                j -= 1;
                if self.toks[j].is_op(":") {
                    if self.toks[j - 1].kind == TokenKind::Ident {
                        names.insert(self.toks[j - 1].text.clone());
                    }
                    break;
                }
                if self.toks[j].is_op("==") || self.toks[j].is_op(";") {
                    break;
                }
            }
        }
        names
    }

    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.toks.get(self.pos + n)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eof_pos(&self) -> Position {
        let mut line = 1;
        let mut col = 1;
        for c in self.src.chars() {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        Position::new(line, col)
    }

    fn here(&self) -> Span {
        match self.peek() {
            Some(t) => t.span,
            None => {
                let p = self.eof_pos();
                Span::new(p, p)
            }
        }
    }

    /// Start of the next token.
    fn start(&self) -> Position {
        self.here().start
    }

    /// End of the last consumed token.
    fn last_end(&self) -> Position {
        if self.pos == 0 {
            Position::new(1, 1)
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn span_from(&self, start: Position) -> Span {
        Span::new(start, self.last_end().max(start))
    }

    fn error_expected(&self, expected: &[&str]) -> ParseError {
        let found = self
            .peek()
            .map(Token::describe)
            .unwrap_or_else(|| "end of input".to_string());
        let list = expected.join(", ");
        ParseError {
            message: format!("expected {list}, found {found}"),
            span: self.here(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            Err(self.error_expected(&[&format!("`{op}`")]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.error_expected(&[&format!("`{kw}`")]))
        }
    }

    fn expect_ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let t = self.bump();
                Ok(Ident {
                    name: t.text,
                    span: t.span,
                })
            }
            _ => Err(self.error_expected(&["identifier"])),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error_expected(&["end of input"]))
        }
    }

    // ---------------------------------------------------------------- document

    fn document(&mut self) -> Result<Document, Vec<ParseError>> {
        let mut errors = Vec::new();
        let mut state: Option<StateDefinition> = None;
        let mut values = Vec::new();
        let mut functions = Vec::new();
        let mut operations = Vec::new();
        let mut section = "";

        while !self.at_eof() {
            let result: PResult<()> = (|| {
                if self.at_kw("state") {
                    let def = self.state_definition()?;
                    if state.is_some() {
                        return Err(ParseError::new("duplicate state definition", def.span));
                    }
                    state = Some(def);
                    section = "";
                    return Ok(());
                }
                for kw in ["values", "functions", "operations"] {
                    if self.eat_kw(kw) {
                        section = kw;
                        return Ok(());
                    }
                }
                match section {
                    "values" => values.push(self.value_definition()?),
                    "functions" => functions.push(self.function_definition()?),
                    "operations" => operations.push(self.operation_definition()?),
                    _ => {
                        return Err(self.error_expected(&[
                            "`state`",
                            "`values`",
                            "`functions`",
                            "`operations`",
                        ]))
                    }
                }
                Ok(())
            })();
            if let Err(e) = result {
                errors.push(e);
                self.recover();
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let id = self.fresh();
        let doc = Document {
            id,
            span: Span::new(Position::new(1, 1), self.eof_pos()),
            state,
            values,
            functions,
            operations,
            source: self.src.to_string(),
            index: Default::default(),
        };
        Ok(doc.finish(self.next_id as usize))
    }

    /// Skips to the next section keyword or a plausible definition start.
    fn recover(&mut self) {
        if !self.at_eof() {
            self.pos += 1;
        }
        while let Some(t) = self.peek() {
            if SECTION_KEYWORDS.iter().any(|kw| t.is_kw(kw)) {
                return;
            }
            let after_semicolon = self.pos > 0 && self.toks[self.pos - 1].is_op(";");
            if after_semicolon
                && t.kind == TokenKind::Ident
                && self.peek_at(1).is_some_and(|n| n.is_op(":"))
            {
                return;
            }
            self.pos += 1;
        }
    }

    fn state_definition(&mut self) -> PResult<StateDefinition> {
        let start = self.start();
        self.expect_kw("state")?;
        let name = self.expect_ident()?;
        self.expect_kw("of")?;
        let mut fields = Vec::new();
        while self.peek().is_some_and(|t| t.kind == TokenKind::Ident)
            && self.peek_at(1).is_some_and(|t| t.is_op(":"))
        {
            let fstart = self.start();
            let fname = self.expect_ident()?;
            self.expect_op(":")?;
            let ty = self.type_expr()?;
            let span = self.span_from(fstart);
            fields.push(FieldDecl {
                id: self.fresh(),
                span,
                name: fname,
                ty,
            });
            self.eat_op(";");
        }
        if fields.is_empty() {
            return Err(self.error_expected(&["state field"]));
        }
        let mut invariant = None;
        let mut init = None;
        if self.eat_kw("inv") {
            let pat = self.pattern()?;
            self.expect_op("==")?;
            invariant = Some((pat, self.expr()?));
        }
        if self.eat_kw("init") {
            let pat = self.pattern()?;
            self.expect_op("==")?;
            init = Some((pat, self.expr()?));
        }
        self.expect_kw("end")?;
        let span = self.span_from(start);
        Ok(StateDefinition {
            id: self.fresh(),
            span,
            name,
            fields,
            invariant,
            init,
        })
    }

    fn value_definition(&mut self) -> PResult<ValueDefinition> {
        let start = self.start();
        let pattern = self.pattern()?;
        let ty = if self.eat_op(":") {
            Some(self.type_expr()?)
        } else {
            None
        };
        self.expect_op("=")?;
        let value = self.expr()?;
        let span = self.span_from(start);
        self.eat_op(";");
        Ok(ValueDefinition {
            id: self.fresh(),
            span,
            pattern,
            ty,
            value,
        })
    }

    /// `()` or `T1 * T2 * ...`
    fn param_type_list(&mut self) -> PResult<Vec<TypeExpr>> {
        if self.at_op("(") && self.peek_at(1).is_some_and(|t| t.is_op(")")) {
            self.pos += 2;
            return Ok(Vec::new());
        }
        let mut out = vec![self.type_expr()?];
        while self.eat_op("*") {
            out.push(self.type_expr()?);
        }
        Ok(out)
    }

    fn signature_head(&mut self, arrow: &str) -> PResult<(Ident, Vec<TypeExpr>)> {
        let name = self.expect_ident()?;
        self.expect_op(":")?;
        let params = self.param_type_list()?;
        self.expect_op(arrow)?;
        Ok((name, params))
    }

    fn definition_params(&mut self, name: &Ident, arity: usize) -> PResult<Vec<Pattern>> {
        let again = self.expect_ident()?;
        if again.name != name.name {
            return Err(ParseError::new(
                format!(
                    "definition of `{}` does not match its signature `{}`",
                    again.name, name.name
                ),
                again.span,
            ));
        }
        let open = self.expect_op("(")?;
        let mut params = Vec::new();
        if !self.at_op(")") {
            params.push(self.pattern()?);
            while self.eat_op(",") {
                params.push(self.pattern()?);
            }
        }
        self.expect_op(")")?;
        if params.len() != arity {
            return Err(ParseError::new(
                format!(
                    "`{}` declares {} parameter type(s) but binds {} parameter(s)",
                    name.name,
                    arity,
                    params.len()
                ),
                open.span.to(self.span_from(open.span.start)),
            ));
        }
        self.expect_op("==")?;
        Ok(params)
    }

    fn pre_post(&mut self) -> PResult<(Option<Expr>, Option<Expr>)> {
        let pre = if self.eat_kw("pre") { Some(self.expr()?) } else { None };
        let post = if self.eat_kw("post") { Some(self.expr()?) } else { None };
        Ok((pre, post))
    }

    fn function_definition(&mut self) -> PResult<FunctionDefinition> {
        let start = self.start();
        let (name, param_types) = self.signature_head("->")?;
        let result_type = self.type_expr()?;
        let params = self.definition_params(&name, param_types.len())?;
        let body = self.expr()?;
        let (pre, post) = self.pre_post()?;
        let span = self.span_from(start);
        self.eat_op(";");
        Ok(FunctionDefinition {
            id: self.fresh(),
            span,
            name,
            param_types,
            result_type,
            params,
            body,
            pre,
            post,
        })
    }

    fn operation_definition(&mut self) -> PResult<OperationDefinition> {
        let start = self.start();
        let (name, param_types) = self.signature_head("==>")?;
        let result_type = if self.at_op("(") && self.peek_at(1).is_some_and(|t| t.is_op(")")) {
            self.pos += 2;
            None
        } else {
            Some(self.type_expr()?)
        };
        let params = self.definition_params(&name, param_types.len())?;
        let body = self.statement()?;
        let (pre, post) = self.pre_post()?;
        let span = self.span_from(start);
        self.eat_op(";");
        Ok(OperationDefinition {
            id: self.fresh(),
            span,
            name,
            param_types,
            result_type,
            params,
            body,
            pre,
            post,
        })
    }

    // ------------------------------------------------------------------ types

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let start = self.start();
        let first = self.basic_type()?;
        if !self.at_op("|") {
            return Ok(first);
        }
        let mut alts = vec![first];
        while self.eat_op("|") {
            alts.push(self.basic_type()?);
        }
        Ok(TypeExpr {
            kind: TypeKind::Union(alts),
            span: self.span_from(start),
        })
    }

    fn basic_type(&mut self) -> PResult<TypeExpr> {
        let start = self.start();
        let kind = match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => TypeKind::Named(self.bump().text),
            Some(t) if t.kind == TokenKind::Quote => {
                let text = self.bump().text;
                TypeKind::Quote(text[1..text.len() - 1].to_string())
            }
            Some(t) if t.is_op("[") => {
                self.bump();
                let inner = self.type_expr()?;
                self.expect_op("]")?;
                TypeKind::Optional(Box::new(inner))
            }
            Some(t) if t.is_op("(") => {
                self.bump();
                let mut parts = vec![self.type_expr()?];
                while self.eat_op("*") {
                    parts.push(self.type_expr()?);
                }
                self.expect_op(")")?;
                if parts.len() == 1 {
                    return Ok(parts.pop().expect("one element"));
                }
                TypeKind::Product(parts)
            }
            Some(t) if t.is_kw("set") => {
                self.bump();
                self.expect_kw("of")?;
                TypeKind::SetOf(Box::new(self.basic_type()?))
            }
            Some(t) if t.is_kw("seq") || t.is_kw("seq1") => {
                let nonempty = self.bump().text == "seq1";
                self.expect_kw("of")?;
                TypeKind::SeqOf {
                    elem: Box::new(self.basic_type()?),
                    nonempty,
                }
            }
            Some(t) if t.is_kw("map") || t.is_kw("inmap") => {
                let injective = self.bump().text == "inmap";
                let from = self.basic_type()?;
                self.expect_kw("to")?;
                let to = self.basic_type()?;
                TypeKind::Map {
                    from: Box::new(from),
                    to: Box::new(to),
                    injective,
                }
            }
            _ => return Err(self.error_expected(&["type"])),
        };
        Ok(TypeExpr {
            kind,
            span: self.span_from(start),
        })
    }

    // ------------------------------------------------------------- statements

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.start();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_expected(&["statement"]));
        };
        if tok.is_op("(") {
            return self.block();
        }
        if tok.is_kw("if") {
            return self.if_statement();
        }
        let kind = if self.eat_kw("while") {
            let cond = self.expr()?;
            self.expect_kw("do")?;
            let body = self.statement()?;
            StmtKind::While {
                cond,
                body: Box::new(body),
            }
        } else if self.eat_kw("let") {
            let bindings = self.let_bindings()?;
            self.expect_kw("in")?;
            let body = self.statement()?;
            StmtKind::Let {
                bindings,
                body: Box::new(body),
            }
        } else if self.eat_kw("return") {
            if self.can_start_expr() {
                StmtKind::Return(Some(self.expr()?))
            } else {
                StmtKind::Return(None)
            }
        } else if self.eat_kw("skip") {
            StmtKind::Skip
        } else if tok.kind == TokenKind::Ident {
            self.assign_or_call()?
        } else {
            return Err(self.error_expected(&["statement"]));
        };
        let span = self.span_from(start);
        Ok(Statement {
            id: self.fresh(),
            span,
            kind,
        })
    }

    fn block(&mut self) -> PResult<Statement> {
        let start = self.start();
        self.expect_op("(")?;
        let mut dcls = Vec::new();
        while self.eat_kw("dcl") {
            loop {
                dcls.push(self.dcl_item()?);
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op(";")?;
        }
        let mut stmts = vec![self.statement()?];
        while self.eat_op(";") {
            if self.at_op(")") {
                break;
            }
            stmts.push(self.statement()?);
        }
        self.expect_op(")")?;
        let span = self.span_from(start);
        Ok(Statement {
            id: self.fresh(),
            span,
            kind: StmtKind::Block { dcls, stmts },
        })
    }

    fn dcl_item(&mut self) -> PResult<DclItem> {
        let start = self.start();
        let name = self.expect_ident()?;
        self.expect_op(":")?;
        let ty = self.type_expr()?;
        let init = if self.eat_op(":=") {
            Some(self.expr()?)
        } else {
            None
        };
        let span = self.span_from(start);
        Ok(DclItem {
            id: self.fresh(),
            span,
            name,
            ty,
            init,
        })
    }

    fn if_statement(&mut self) -> PResult<Statement> {
        let start = self.start();
        self.expect_kw("if")?;
        let cond = self.expr()?;
        self.expect_kw("then")?;
        let then_branch = self.statement()?;
        let mut clauses = Vec::new();
        while self.at_kw("elseif") {
            let cstart = self.start();
            self.bump();
            let c = self.expr()?;
            self.expect_kw("then")?;
            let s = self.statement()?;
            clauses.push((cstart, c, s));
        }
        let mut else_branch = if self.eat_kw("else") {
            Some(Box::new(self.statement()?))
        } else {
            None
        };
        let end = self.last_end();
        while let Some((cstart, c, s)) = clauses.pop() {
            let nested = Statement {
                id: self.fresh(),
                span: Span::new(cstart, end),
                kind: StmtKind::If {
                    cond: c,
                    then_branch: Box::new(s),
                    else_branch: else_branch.take(),
                },
            };
            else_branch = Some(Box::new(nested));
        }
        Ok(Statement {
            id: self.fresh(),
            span: Span::new(start, end),
            kind: StmtKind::If {
                cond,
                then_branch: Box::new(then_branch),
                else_branch,
            },
        })
    }

    fn assign_or_call(&mut self) -> PResult<StmtKind> {
        let base = self.expect_ident()?;
        if self.operations.contains(&base.name) && self.at_op("(") {
            let args = self.call_args()?;
            return Ok(StmtKind::Call { callee: base, args });
        }
        let start = base.span.start;
        let mut accessors = Vec::new();
        loop {
            if self.eat_op(".") {
                accessors.push(Accessor::Field(self.expect_ident()?));
            } else if self.eat_op("(") {
                let e = self.expr()?;
                self.expect_op(")")?;
                accessors.push(Accessor::Index(e));
            } else {
                break;
            }
        }
        let span = self.span_from(start);
        let target = StateDesignator {
            id: self.fresh(),
            span,
            base,
            accessors,
        };
        self.expect_op(":=")?;
        let value = self.expr()?;
        Ok(StmtKind::Assign { target, value })
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        if !self.at_op(")") {
            args.push(self.expr()?);
            while self.eat_op(",") {
                args.push(self.expr()?);
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn let_bindings(&mut self) -> PResult<Vec<LetBinding>> {
        let mut out = Vec::new();
        loop {
            let start = self.start();
            let pattern = self.pattern()?;
            self.expect_op("=")?;
            let value = self.expr()?;
            let span = self.span_from(start);
            out.push(LetBinding {
                id: self.fresh(),
                span,
                pattern,
                value,
            });
            if !self.eat_op(",") {
                return Ok(out);
            }
        }
    }

    fn can_start_expr(&self) -> bool {
        let Some(t) = self.peek() else { return false };
        match t.kind {
            TokenKind::Number
            | TokenKind::Str
            | TokenKind::Char
            | TokenKind::Quote
            | TokenKind::OldName => true,
            TokenKind::Ident => !self.peek_at(1).is_some_and(|n| n.is_op(":")),
            TokenKind::Keyword => [
                "nil", "true", "false", "RESULT", "not", "dom", "rng", "card", "len", "hd", "tl",
                "elems", "inds", "let", "if",
            ]
            .contains(&t.text.as_str()),
            TokenKind::Op => ["(", "{", "[", "-"].contains(&t.text.as_str()),
        }
    }

    // ------------------------------------------------------------ expressions

    fn expr(&mut self) -> PResult<Expr> {
        self.implies()
    }

    fn binary(&mut self, op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let span = lhs.span.to(rhs.span);
        Expr {
            id: self.fresh(),
            span,
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
        }
    }

    fn implies(&mut self) -> PResult<Expr> {
        let lhs = self.or_expr()?;
        if self.eat_op("=>") {
            let rhs = self.implies()?;
            return Ok(self.binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            let rhs = self.and_expr()?;
            lhs = self.binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.comparison()?;
        while self.eat_kw("and") {
            let rhs = self.comparison()?;
            lhs = self.binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison_op(&mut self) -> Option<BinOp> {
        let t = self.peek()?;
        let op = match (t.kind, t.text.as_str()) {
            (TokenKind::Op, "=") => BinOp::Eq,
            (TokenKind::Op, "<>") => BinOp::Ne,
            (TokenKind::Op, "<") => BinOp::Lt,
            (TokenKind::Op, "<=") => BinOp::Le,
            (TokenKind::Op, ">") => BinOp::Gt,
            (TokenKind::Op, ">=") => BinOp::Ge,
            (TokenKind::Keyword, "subset") => BinOp::Subset,
            (TokenKind::Keyword, "psubset") => BinOp::PSubset,
            (TokenKind::Keyword, "in") if self.peek_at(1).is_some_and(|n| n.is_kw("set")) => {
                self.pos += 2;
                return Some(BinOp::InSet);
            }
            (TokenKind::Keyword, "not")
                if self.peek_at(1).is_some_and(|n| n.is_kw("in"))
                    && self.peek_at(2).is_some_and(|n| n.is_kw("set")) =>
            {
                self.pos += 3;
                return Some(BinOp::NotInSet);
            }
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let mut lhs = self.map_set()?;
        while let Some(op) = self.comparison_op() {
            let rhs = self.map_set()?;
            lhs = self.binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn map_set(&mut self) -> PResult<Expr> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is_kw("munion") => BinOp::Munion,
                Some(t) if t.is_kw("union") => BinOp::Union,
                Some(t) if t.is_kw("inter") => BinOp::Inter,
                Some(t) if t.is_op("++") => BinOp::Override,
                Some(t) if t.is_op("\\") => BinOp::Difference,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.additive()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is_op("+") => BinOp::Add,
                Some(t) if t.is_op("-") => BinOp::Sub,
                Some(t) if t.is_op("^") => BinOp::Concat,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is_op("*") => BinOp::Mul,
                Some(t) if t.is_op("/") => BinOp::Div,
                Some(t) if t.is_kw("div") => BinOp::IntDiv,
                Some(t) if t.is_kw("mod") => BinOp::Mod,
                Some(t) if t.is_kw("rem") => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let op = match self.peek() {
            Some(t) if t.is_op("-") => UnOp::Neg,
            Some(t) if t.kind == TokenKind::Keyword => match t.text.as_str() {
                "not" => UnOp::Not,
                "dom" => UnOp::Dom,
                "rng" => UnOp::Rng,
                "card" => UnOp::Card,
                "len" => UnOp::Len,
                "hd" => UnOp::Hd,
                "tl" => UnOp::Tl,
                "elems" => UnOp::Elems,
                "inds" => UnOp::Inds,
                _ => return self.postfix(),
            },
            _ => return self.postfix(),
        };
        self.bump();
        let operand = self.unary()?;
        let span = self.span_from(start);
        Ok(Expr {
            id: self.fresh(),
            span,
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.at_op("(") {
                let args = self.call_args()?;
                let span = self.span_from(e.span.start);
                e = Expr {
                    id: self.fresh(),
                    span,
                    kind: ExprKind::Apply {
                        callee: Box::new(e),
                        args,
                    },
                };
            } else if self.eat_op(".") {
                let field = self.expect_ident()?;
                let span = self.span_from(e.span.start);
                e = Expr {
                    id: self.fresh(),
                    span,
                    kind: ExprKind::Field {
                        record: Box::new(e),
                        field,
                    },
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn literal_token(&mut self) -> PResult<Option<Literal>> {
        let Some(t) = self.peek() else { return Ok(None) };
        let lit = match t.kind {
            TokenKind::Number => {
                let v = t.text.parse::<i64>().map_err(|_| {
                    ParseError::new(format!("integer literal `{}` out of range", t.text), t.span)
                })?;
                Literal::Int(v)
            }
            TokenKind::Str => Literal::Text(lexer::unescape_string(&t.text)),
            TokenKind::Char => Literal::Char(lexer::unescape_char(&t.text)),
            TokenKind::Quote => Literal::Quote(t.text[1..t.text.len() - 1].to_string()),
            TokenKind::Keyword => match t.text.as_str() {
                "nil" => Literal::Nil,
                "true" => Literal::Bool(true),
                "false" => Literal::Bool(false),
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        self.bump();
        Ok(Some(lit))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        if let Some(lit) = self.literal_token()? {
            let span = self.span_from(start);
            return Ok(Expr {
                id: self.fresh(),
                span,
                kind: ExprKind::Literal(lit),
            });
        }
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_expected(&["expression"]));
        };
        let kind = match tok.kind {
            TokenKind::OldName => {
                self.bump();
                ExprKind::OldName(tok.text.trim_end_matches('~').to_string())
            }
            TokenKind::Ident if tok.text.starts_with("mk_") => {
                self.bump();
                let args = self.call_args()?;
                if tok.text == "mk_" {
                    ExprKind::Tuple(args)
                } else {
                    ExprKind::Record {
                        name: Ident {
                            name: tok.text["mk_".len()..].to_string(),
                            span: tok.span,
                        },
                        args,
                    }
                }
            }
            TokenKind::Ident => {
                self.bump();
                ExprKind::Name(tok.text)
            }
            TokenKind::Keyword if tok.text == "RESULT" => {
                self.bump();
                ExprKind::Result
            }
            TokenKind::Keyword if tok.text == "let" => {
                self.bump();
                let bindings = self.let_bindings()?;
                self.expect_kw("in")?;
                let body = self.expr()?;
                ExprKind::Let {
                    bindings,
                    body: Box::new(body),
                }
            }
            TokenKind::Keyword if tok.text == "if" => return self.if_expr(),
            TokenKind::Op if tok.text == "(" => {
                self.bump();
                let mut inner = self.expr()?;
                self.expect_op(")")?;
                inner.span = self.span_from(start);
                return Ok(inner);
            }
            TokenKind::Op if tok.text == "[" => {
                self.bump();
                let elems = self.expr_list("]")?;
                ExprKind::SeqEnum(elems)
            }
            TokenKind::Op if tok.text == "{" => {
                self.bump();
                self.set_or_map()?
            }
            _ => return Err(self.error_expected(&["expression"])),
        };
        let span = self.span_from(start);
        Ok(Expr {
            id: self.fresh(),
            span,
            kind,
        })
    }

    fn expr_list(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if !self.at_op(close) {
            out.push(self.expr()?);
            while self.eat_op(",") {
                out.push(self.expr()?);
            }
        }
        self.expect_op(close)?;
        Ok(out)
    }

    fn set_or_map(&mut self) -> PResult<ExprKind> {
        if self.eat_op("|->") {
            self.expect_op("}")?;
            return Ok(ExprKind::MapEnum(Vec::new()));
        }
        if self.eat_op("}") {
            return Ok(ExprKind::SetEnum(Vec::new()));
        }
        let first = self.expr()?;
        if self.eat_op("|->") {
            let v = self.expr()?;
            let mut pairs = vec![(first, v)];
            while self.eat_op(",") {
                let k = self.expr()?;
                self.expect_op("|->")?;
                let v = self.expr()?;
                pairs.push((k, v));
            }
            self.expect_op("}")?;
            return Ok(ExprKind::MapEnum(pairs));
        }
        let mut elems = vec![first];
        while self.eat_op(",") {
            elems.push(self.expr()?);
        }
        self.expect_op("}")?;
        Ok(ExprKind::SetEnum(elems))
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_kw("if")?;
        let cond = self.expr()?;
        self.expect_kw("then")?;
        let then_e = self.expr()?;
        let mut clauses = Vec::new();
        while self.at_kw("elseif") {
            let cstart = self.start();
            self.bump();
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            clauses.push((cstart, c, t));
        }
        self.expect_kw("else")?;
        let mut else_e = self.expr()?;
        let end = self.last_end();
        while let Some((cstart, c, t)) = clauses.pop() {
            else_e = Expr {
                id: self.fresh(),
                span: Span::new(cstart, end),
                kind: ExprKind::If {
                    cond: Box::new(c),
                    then_branch: Box::new(t),
                    else_branch: Box::new(else_e),
                },
            };
        }
        Ok(Expr {
            id: self.fresh(),
            span: Span::new(start, end),
            kind: ExprKind::If {
                cond: Box::new(cond),
                then_branch: Box::new(then_e),
                else_branch: Box::new(else_e),
            },
        })
    }

    // --------------------------------------------------------------- patterns

    fn pattern(&mut self) -> PResult<Pattern> {
        let start = self.start();
        let mut lhs = self.primary_pattern()?;
        while self.eat_kw("union") {
            let rhs = self.primary_pattern()?;
            let span = self.span_from(start);
            lhs = Pattern {
                id: self.fresh(),
                span,
                kind: PatternKind::SetUnion(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn primary_pattern(&mut self) -> PResult<Pattern> {
        let start = self.start();
        let kind = if let Some(lit) = self.literal_token()? {
            let span = self.span_from(start);
            let e = Expr {
                id: self.fresh(),
                span,
                kind: ExprKind::Literal(lit),
            };
            PatternKind::MatchValue(Box::new(e))
        } else if self.eat_op("-") {
            PatternKind::DontCare
        } else if self.eat_op("(") {
            let e = self.expr()?;
            self.expect_op(")")?;
            PatternKind::MatchValue(Box::new(e))
        } else {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Ident && t.text.starts_with("mk_") => {
                    let tok = self.bump();
                    self.expect_op("(")?;
                    let mut fields = Vec::new();
                    if !self.at_op(")") {
                        fields.push(self.pattern()?);
                        while self.eat_op(",") {
                            fields.push(self.pattern()?);
                        }
                    }
                    self.expect_op(")")?;
                    if tok.text == "mk_" {
                        PatternKind::Tuple(fields)
                    } else {
                        PatternKind::Record {
                            name: Ident {
                                name: tok.text["mk_".len()..].to_string(),
                                span: tok.span,
                            },
                            fields,
                        }
                    }
                }
                Some(t) if t.kind == TokenKind::Ident => PatternKind::Identifier(self.bump().text),
                _ => return Err(self.error_expected(&["pattern"])),
            }
        };
        let span = self.span_from(start);
        Ok(Pattern {
            id: self.fresh(),
            span,
            kind,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr_shape(src: &str) -> String {
        sexpr(NodeRef::Expr(&parse_expression(src).unwrap()))
    }

    #[test]
    fn minimal_operation() {
        let doc = parse_document("operations op : () ==> nat op() == return 1").unwrap();
        assert_eq!(doc.operations.len(), 1);
        let op = &doc.operations[0];
        match &op.body.kind {
            StmtKind::Return(Some(e)) => {
                assert!(matches!(e.kind, ExprKind::Literal(Literal::Int(1))))
            }
            other => panic!("unexpected body {other:?}"),
        }
    }

    #[test]
    fn precedence_ladder() {
        assert_eq!(
            expr_shape("a + b * c = d and e or f => g"),
            expr_shape("((((a + (b * c)) = d) and e) or f) => g")
        );
        assert_eq!(
            expr_shape("x munion y = z"),
            expr_shape("(x munion y) = z")
        );
        assert_eq!(
            expr_shape("next not in set dom emails"),
            expr_shape("next not in set (dom emails)")
        );
        assert_eq!(expr_shape("a => b => c"), expr_shape("a => (b => c)"));
        assert_eq!(expr_shape("- a + b"), expr_shape("(-a) + b"));
    }

    #[test]
    fn application_binds_tighter_than_unary() {
        assert_eq!(expr_shape("dom m(k)"), expr_shape("dom (m(k))"));
        let e = parse_expression("r.f(1)").unwrap();
        assert!(matches!(e.kind, ExprKind::Apply { .. }));
    }

    #[test]
    fn set_map_seq_enumerations() {
        assert!(matches!(
            parse_expression("{|->}").unwrap().kind,
            ExprKind::MapEnum(ref v) if v.is_empty()
        ));
        assert!(matches!(
            parse_expression("{}").unwrap().kind,
            ExprKind::SetEnum(ref v) if v.is_empty()
        ));
        assert!(matches!(
            parse_expression("{1 |-> 2, 3 |-> 4}").unwrap().kind,
            ExprKind::MapEnum(ref v) if v.len() == 2
        ));
        assert!(matches!(
            parse_expression("[1,2,3]").unwrap().kind,
            ExprKind::SeqEnum(ref v) if v.len() == 3
        ));
        assert!(matches!(
            parse_expression("mk_(1, 2)").unwrap().kind,
            ExprKind::Tuple(ref v) if v.len() == 2
        ));
    }

    #[test]
    fn elseif_desugars_into_nested_if() {
        let s = parse_statement("if a then x := 1 elseif b then x := 2 else x := 3", &[]).unwrap();
        let StmtKind::If { else_branch, .. } = &s.kind else {
            panic!("not an if")
        };
        let nested = else_branch.as_ref().unwrap();
        assert!(matches!(nested.kind, StmtKind::If { .. }));
        assert_eq!(nested.span.start, Position::new(1, 18));
        assert_eq!(nested.span.end, s.span.end);
    }

    #[test]
    fn statement_call_requires_known_operation() {
        let s = parse_statement("op1(5)", &["op1"]).unwrap();
        assert!(matches!(s.kind, StmtKind::Call { .. }));
        let err = parse_statement("f(5)", &[]).unwrap_err();
        assert!(err.expected.iter().any(|e| e.contains(":=")));
    }

    #[test]
    fn designator_with_accessors() {
        let s = parse_statement("r.f(i).g := 3", &[]).unwrap();
        let StmtKind::Assign { target, .. } = &s.kind else {
            panic!()
        };
        assert_eq!(target.base.name, "r");
        assert_eq!(target.accessors.len(), 3);
    }

    #[test]
    fn trailing_semicolon_in_block() {
        let s = parse_statement("(x := 1; y := 2;)", &[]).unwrap();
        let StmtKind::Block { stmts, .. } = &s.kind else {
            panic!()
        };
        assert_eq!(stmts.len(), 2);
    }

    #[test]
    fn patterns() {
        assert!(matches!(parse_pattern("-").unwrap().kind, PatternKind::DontCare));
        assert!(matches!(
            parse_pattern("(x + 1)").unwrap().kind,
            PatternKind::MatchValue(_)
        ));
        assert!(matches!(
            parse_pattern("a union (b)").unwrap().kind,
            PatternKind::SetUnion(..)
        ));
        let rec = parse_pattern("mk_MemberBook(emails, names, next)").unwrap();
        assert_eq!(rec.identifiers().len(), 3);
    }

    #[test]
    fn parameter_count_must_match_signature() {
        let err = parse_document("operations op : nat ==> nat op(a, b) == return a").unwrap_err();
        assert!(err[0].message.contains("parameter"));
    }

    #[test]
    fn errors_recover_at_next_definition() {
        let src = "operations\n op : () ==> nat\n op() == return 1 +;\n q : () ==> nat\n q() == return ;\n";
        let errs = parse_document(src).unwrap_err();
        assert!(!errs.is_empty());
        for e in &errs {
            assert!(e.span.start.line >= 1);
        }
    }

    #[test]
    fn positions() {
        assert_eq!(parse_position("18:12").unwrap(), Position::new(18, 12));
        assert_eq!(parse_position("1:1").unwrap(), Position::new(1, 1));
        assert!(parse_position("0:5").is_err());
        assert!(parse_position("3").is_err());
        assert!(parse_position("a:b").is_err());
        assert!(parse_position("3:").is_err());
    }

    #[test]
    fn node_ids_are_dense() {
        let doc = parse_document("operations op : nat ==> nat op(x) == (dcl y : nat := x + 1; return y)")
            .unwrap();
        let ids: Vec<u32> = doc.node_ids().map(|n| n.0).collect();
        let expected: Vec<u32> = (0..ids.len() as u32).collect();
        assert_eq!(ids, expected);
    }
}
