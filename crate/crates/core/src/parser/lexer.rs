//! A forgiving Java lexer.
//!
//! Every input produces a token stream. Characters that do not start any
//! Java token are emitted as single-character [`TokenKind::Unknown`] tokens,
//! and unterminated literals stop at the end of their line.

/// Lexical category of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    TextBlock,
    Punct,
    LineComment,
    BlockComment,
    Whitespace,
    Unknown,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(
            self,
            TokenKind::LineComment | TokenKind::BlockComment | TokenKind::Whitespace
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the first character.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    /// 1-based line of the first character.
    pub line: u32,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

/// Result of lexing a whole file.
#[derive(Debug, Clone, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    /// Set when a block comment or text block ran to end of input.
    pub unterminated: bool,
}

// Longest first so maximal munch works with a linear scan.
const PUNCTUATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>", "(", ")", "{", "}", "[",
    "]", ";", ",", ".", "@", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|",
    "^", "%",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, mut pred: impl FnMut(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
    }
}

/// Splits `src` into tokens, trivia included.
pub fn lex(src: &str) -> Lexed {
    let mut cur = Cursor { src, pos: 0, line: 1 };
    let mut out = Lexed::default();
    while let Some(c) = cur.peek() {
        let start = cur.pos;
        let line = cur.line;
        let kind = if c.is_whitespace() {
            cur.eat_while(char::is_whitespace);
            TokenKind::Whitespace
        } else if cur.rest().starts_with("//") {
            cur.eat_while(|c| c != '\n');
            TokenKind::LineComment
        } else if cur.rest().starts_with("/*") {
            cur.pos += 2;
            match cur.rest().find("*/") {
                Some(off) => {
                    let body_end = cur.pos + off + 2;
                    while cur.pos < body_end {
                        cur.bump();
                    }
                }
                None => {
                    out.unterminated = true;
                    while cur.bump().is_some() {}
                }
            }
            TokenKind::BlockComment
        } else if cur.rest().starts_with("\"\"\"") {
            cur.pos += 3;
            lex_text_block(&mut cur, &mut out.unterminated);
            TokenKind::TextBlock
        } else if c == '"' {
            cur.bump();
            lex_quoted(&mut cur, '"');
            TokenKind::Str
        } else if c == '\'' {
            cur.bump();
            lex_quoted(&mut cur, '\'');
            TokenKind::Char
        } else if c.is_ascii_digit()
            || (c == '.' && cur.peek_nth(1).is_some_and(|d| d.is_ascii_digit()))
        {
            lex_number(&mut cur);
            TokenKind::Number
        } else if is_ident_start(c) {
            cur.eat_while(is_ident_continue);
            TokenKind::Ident
        } else if let Some(p) = PUNCTUATORS.iter().find(|p| cur.rest().starts_with(**p)) {
            cur.pos += p.len();
            TokenKind::Punct
        } else {
            cur.bump();
            TokenKind::Unknown
        };
        out.tokens.push(Token {
            kind,
            start,
            end: cur.pos,
            line,
        });
    }
    out
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char) {
    while let Some(c) = cur.peek() {
        match c {
            '\n' => return,
            '\\' => {
                cur.bump();
                if cur.peek().is_some_and(|n| n != '\n') {
                    cur.bump();
                }
            }
            _ => {
                cur.bump();
                if c == quote {
                    return;
                }
            }
        }
    }
}

fn lex_text_block(cur: &mut Cursor<'_>, unterminated: &mut bool) {
    loop {
        if cur.rest().starts_with("\"\"\"") {
            cur.pos += 3;
            return;
        }
        match cur.bump() {
            Some('\\') => {
                cur.bump();
            }
            Some(_) => {}
            None => {
                *unterminated = true;
                return;
            }
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) {
    let rest = cur.rest();
    if rest.starts_with("0x") || rest.starts_with("0X") || rest.starts_with("0b") || rest.starts_with("0B") {
        cur.pos += 2;
        cur.eat_while(|c| c.is_ascii_hexdigit() || c == '_');
        cur.eat_while(|c| matches!(c, 'l' | 'L'));
        return;
    }
    cur.eat_while(|c| c.is_ascii_digit() || c == '_');
    let exponent_after_dot = matches!(cur.peek_nth(1), Some('e' | 'E'))
        && cur
            .peek_nth(2)
            .is_some_and(|d| d.is_ascii_digit() || d == '+' || d == '-');
    if cur.peek() == Some('.')
        && (exponent_after_dot || cur.peek_nth(1).is_none_or(|d| !is_ident_start(d) && d != '.'))
    {
        cur.bump();
        cur.eat_while(|c| c.is_ascii_digit() || c == '_');
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let sign = matches!(cur.peek_nth(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if cur.peek_nth(digit_at).is_some_and(|d| d.is_ascii_digit()) {
            for _ in 0..digit_at {
                cur.bump();
            }
            cur.eat_while(|c| c.is_ascii_digit() || c == '_');
        }
    }
    if matches!(cur.peek(), Some('f' | 'F' | 'd' | 'D' | 'l' | 'L')) {
        cur.bump();
    }
}

/// Significant tokens of `body` as strings: comments and whitespace dropped,
/// string and char literals kept whole.
pub fn normalize_tokens(body: &str) -> Vec<String> {
    lex(body)
        .tokens
        .iter()
        .filter(|t| !t.kind.is_trivia())
        .map(|t| t.text(body).to_owned())
        .collect()
}
