use crate::syntax::{Position, Span};

use super::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Ident,
    /// `X~`; text keeps the tilde.
    OldName,
    Number,
    Str,
    Char,
    /// `<Name>`
    Quote,
    Op,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_kw(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn describe(&self) -> String {
        match self.kind {
            TokenKind::Ident => format!("identifier `{}`", self.text),
            TokenKind::Number => format!("number `{}`", self.text),
            _ => format!("`{}`", self.text),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "RESULT", "and", "card", "dcl", "div", "do", "dom", "elems", "else", "elseif", "end", "false",
    "functions", "hd", "if", "in", "inds", "init", "inmap", "inter", "inv", "len", "let", "map",
    "mod", "munion", "nil", "not", "of", "operations", "or", "post", "pre", "psubset", "rem",
    "return", "rng", "seq", "seq1", "set", "skip", "state", "subset", "then", "tl", "to", "true",
    "union", "values", "while",
];

const OPERATORS: &[&str] = &[
    "==>", "|->", "<>", "==", ">=", "<=", ":=", "=>", "->", "++", "+", "-", "*", "/", "^", "\\",
    "=", "<", ">", ":", ";", ",", ".", "(", ")", "{", "}", "[", "]", "|", "&",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

struct Cursor<'s> {
    src: &'s str,
    off: usize,
    line: u32,
    col: u32,
}

impl<'s> Cursor<'s> {
    fn pos(&self) -> Position {
        Position::new(self.line, self.col)
    }

    fn rest(&self) -> &'s str {
        &self.src[self.off..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.off += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }
}

/// Splits `source` into tokens, skipping whitespace and `--` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src: source,
        off: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    loop {
        // trivia
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('-') if cur.peek_at(1) == Some('-') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                _ => break,
            }
        }
        let Some(c) = cur.peek() else { break };
        let start = cur.off;
        let start_pos = cur.pos();
        let kind = if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            let word = &source[start..cur.off];
            if cur.peek() == Some('~') && !KEYWORDS.contains(&word) {
                cur.bump();
                TokenKind::OldName
            } else if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            }
        } else if c.is_ascii_digit() {
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
            TokenKind::Number
        } else if c == '"' {
            cur.bump();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('\\') => {
                        cur.bump();
                    }
                    Some(_) => {}
                    None => {
                        return Err(ParseError::new(
                            "unterminated string literal",
                            Span::new(start_pos, cur.pos()),
                        ))
                    }
                }
            }
            TokenKind::Str
        } else if c == '\'' {
            cur.bump();
            if cur.peek() == Some('\\') {
                cur.bump();
            }
            let ok = cur.bump().is_some() && cur.bump() == Some('\'');
            if !ok {
                return Err(ParseError::new(
                    "malformed character literal",
                    Span::new(start_pos, cur.pos()),
                ));
            }
            TokenKind::Char
        } else if c == '<' && quote_len(cur.rest()).is_some() {
            cur.bump_n(quote_len(cur.rest()).unwrap_or(0));
            TokenKind::Quote
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            cur.bump_n(op.chars().count());
            TokenKind::Op
        } else {
            cur.bump();
            return Err(ParseError::new(
                format!("unrecognized character `{c}`"),
                Span::new(start_pos, cur.pos()),
            ));
        };
        tokens.push(Token {
            kind,
            text: source[start..cur.off].to_string(),
            span: Span::new(start_pos, cur.pos()),
            start,
            end: cur.off,
        });
    }
    Ok(tokens)
}

/// Length in chars of a `<Name>` quote literal at the start of `rest`.
fn quote_len(rest: &str) -> Option<usize> {
    let mut chars = rest.chars();
    chars.next().filter(|c| *c == '<')?;
    chars.next().filter(|c| is_ident_start(*c))?;
    for (n, c) in (2..).zip(chars) {
        if c == '>' {
            return Some(n + 1);
        }
        if !is_ident_continue(c) {
            return None;
        }
    }
    None
}

/// Decodes the body of a string literal token.
pub fn unescape_string(text: &str) -> String {
    let inner = &text[1..text.len() - 1];
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn unescape_char(text: &str) -> char {
    let inner: Vec<char> = text[1..text.len() - 1].chars().collect();
    match inner.as_slice() {
        ['\\', 'n'] => '\n',
        ['\\', 't'] => '\t',
        ['\\', c] => *c,
        [c] => *c,
        _ => '\0',
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn assignment_tokens() {
        use TokenKind::*;
        assert_eq!(
            shape("NextId := NextId + 1"),
            vec![
                (Ident, "NextId".into()),
                (Op, ":=".into()),
                (Ident, "NextId".into()),
                (Op, "+".into()),
                (Number, "1".into()),
            ]
        );
    }

    #[test]
    fn old_name_and_maplet() {
        use TokenKind::*;
        assert_eq!(
            shape("NameBook~ munion {RESULT |-> name}"),
            vec![
                (OldName, "NameBook~".into()),
                (Keyword, "munion".into()),
                (Op, "{".into()),
                (Keyword, "RESULT".into()),
                (Op, "|->".into()),
                (Ident, "name".into()),
                (Op, "}".into()),
            ]
        );
    }

    #[test]
    fn empty_map_enumeration() {
        let toks = shape("{|->}");
        let texts: Vec<&str> = toks.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(texts, ["{", "|->", "}"]);
    }

    #[test]
    fn multi_char_operators_are_single_tokens() {
        let toks = shape("==> |-> <> == >= <= := =>");
        assert!(toks.iter().all(|(k, _)| *k == TokenKind::Op));
        assert_eq!(toks.len(), 8);
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("-- header\n  x := 1 -- trailing\n").unwrap();
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].span.start, Position::new(2, 3));
        assert_eq!(toks[2].span.end, Position::new(2, 9));
    }

    #[test]
    fn quote_literal_vs_less_than() {
        use TokenKind::*;
        assert_eq!(shape("<RED>")[0].0, Quote);
        let lt = shape("a < b");
        assert_eq!(lt[1], (Op, "<".into()));
        assert_eq!(shape("a<>b")[1], (Op, "<>".into()));
    }

    #[test]
    fn strings_and_chars() {
        let toks = tokenize(r#""jd@example.com" 'x' "a\"b""#).unwrap();
        assert_eq!(unescape_string(&toks[0].text), "jd@example.com");
        assert_eq!(unescape_char(&toks[1].text), 'x');
        assert_eq!(unescape_string(&toks[2].text), "a\"b");
    }

    #[test]
    fn unrecognized_character_is_an_error() {
        let err = tokenize("x := 1 # 2").unwrap_err();
        assert!(err.message.contains('#'));
        assert_eq!(err.span.start, Position::new(1, 8));
    }

    #[test]
    fn unicode_columns_count_scalar_values() {
        let toks = tokenize("\"é\" x").unwrap();
        assert_eq!(toks[1].span.start, Position::new(1, 5));
    }
}
