//! Method extraction from Java source text.
//!
//! The parser is boundary driven: it only understands enough Java to find
//! type declarations, their members and the brace-delimited method bodies.
//! Statements inside bodies are never parsed, so a syntax error inside one
//! method cannot hide its siblings. When braces do not balance, block ends
//! are recovered from indentation before the file is given up on.

pub mod lexer;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use lexer::normalize_tokens;
use lexer::{Token, TokenKind};

/// Stable key under which a method's statistics accumulate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodIdentity {
    pub file_path: String,
    /// `pkg.Outer.Inner#name`
    pub qualified_name: String,
    pub param_types: Vec<String>,
}

impl MethodIdentity {
    pub fn new(
        file_path: impl Into<String>,
        qualified_name: impl Into<String>,
        param_types: Vec<String>,
    ) -> Self {
        MethodIdentity {
            file_path: file_path.into(),
            qualified_name: qualified_name.into(),
            param_types,
        }
    }

    /// `path::pkg.Outer#name(T1,T2)`
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Inverse of [`MethodIdentity::canonical`].
    pub fn parse_canonical(s: &str) -> Option<Self> {
        let open = s.rfind('(')?;
        let params = s[open..].strip_prefix('(')?.strip_suffix(')')?;
        let head = &s[..open];
        let hash = head.rfind('#')?;
        let sep = head[..hash].rfind("::")?;
        let param_types = if params.is_empty() {
            Vec::new()
        } else {
            params.split(',').map(str::to_owned).collect()
        };
        Some(MethodIdentity {
            file_path: head[..sep].to_owned(),
            qualified_name: head[sep + 2..].to_owned(),
            param_types,
        })
    }

    /// The method's simple name, the part after `#`.
    pub fn method_name(&self) -> &str {
        self.qualified_name
            .rsplit_once('#')
            .map_or(self.qualified_name.as_str(), |(_, n)| n)
    }

    /// The qualified name of the declaring class, the part before `#`.
    pub fn class_name(&self) -> &str {
        self.qualified_name
            .rsplit_once('#')
            .map_or("", |(c, _)| c)
    }
}

impl fmt::Display for MethodIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}::{}({})",
            self.file_path,
            self.qualified_name,
            self.param_types.join(",")
        )
    }
}

/// One method or constructor declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub qualified_name: String,
    pub param_types: Vec<String>,
    pub file_path: String,
    pub start_line: u32,
    pub end_line: u32,
    /// Body tokens without the enclosing braces. Empty for abstract methods.
    pub body_tokens: Vec<String>,
    /// Tokens from the first modifier or annotation up to the body.
    pub signature_tokens: Vec<String>,
    pub enclosing_class: String,
    pub superclass: Option<String>,
}

impl MethodDecl {
    pub fn identity(&self) -> MethodIdentity {
        MethodIdentity::new(
            self.file_path.clone(),
            self.qualified_name.clone(),
            self.param_types.clone(),
        )
    }

    pub fn name(&self) -> &str {
        self.qualified_name
            .rsplit_once('#')
            .map_or(self.qualified_name.as_str(), |(_, n)| n)
    }

    /// Name plus parameter types; the key for exact matching across revisions.
    pub fn signature_key(&self) -> (&str, &[String]) {
        (&self.qualified_name, &self.param_types)
    }
}

/// A class, interface, enum, record or annotation type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub qualified_name: String,
    pub simple_name: String,
    pub superclass: Option<String>,
    pub start_line: u32,
    pub end_line: u32,
}

/// Outcome of [`extract_methods`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedFile {
    pub methods: Vec<MethodDecl>,
    pub classes: Vec<ClassDecl>,
    /// The file's structure could not be recovered; `methods` is empty.
    pub degraded: bool,
}

/// Extracts every named method and constructor of `source` in source order.
///
/// Never fails. Methods of anonymous classes and lambdas stay part of the
/// enclosing method's body; initializer blocks are not methods.
///
/// ```
/// let parsed = churnscope::parser::extract_methods("class A { void f() { int x = 1; } }", "A.java");
/// let f = &parsed.methods[0];
/// assert_eq!(f.qualified_name, "A#f");
/// assert_eq!(f.body_tokens, ["int", "x", "=", "1", ";"]);
/// ```
pub fn extract_methods(source: &str, file_path: &str) -> ParsedFile {
    let lexed = lexer::lex(source);
    if lexed.unterminated {
        return ParsedFile {
            degraded: true,
            ..ParsedFile::default()
        };
    }
    let toks: Vec<Token> = lexed
        .tokens
        .into_iter()
        .filter(|t| !t.kind.is_trivia())
        .collect();
    let mut p = Parser {
        src: source,
        line_starts: line_starts(source),
        toks,
        file_path,
        package: None,
        methods: Vec::new(),
        classes: Vec::new(),
        seen: HashSet::new(),
        degraded: false,
    };
    p.compilation_unit();
    if p.degraded {
        return ParsedFile {
            degraded: true,
            ..ParsedFile::default()
        };
    }
    ParsedFile {
        methods: p.methods,
        classes: p.classes,
        degraded: false,
    }
}

fn line_starts(src: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(src.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

// Words that can never end a type or name a method.
const STATEMENT_WORDS: &[&str] = &[
    "return", "new", "if", "else", "for", "while", "do", "switch", "case", "try", "catch",
    "finally", "throw", "break", "continue", "assert", "this", "super", "instanceof", "import",
    "package", "class", "interface", "enum", "synchronized", "yield",
];

/// Block extent: `close` is the index of the closing brace, or of the first
/// token past the block when the brace was missing and had to be recovered.
struct BlockEnd {
    close: usize,
    has_brace: bool,
}

struct Parser<'a> {
    src: &'a str,
    line_starts: Vec<usize>,
    toks: Vec<Token>,
    file_path: &'a str,
    package: Option<String>,
    methods: Vec<MethodDecl>,
    classes: Vec<ClassDecl>,
    seen: HashSet<(String, Vec<String>)>,
    degraded: bool,
}

impl<'a> Parser<'a> {
    fn text(&self, i: usize) -> &'a str {
        self.toks.get(i).map_or("", |t| t.text(self.src))
    }

    fn is(&self, i: usize, s: &str) -> bool {
        self.text(i) == s
    }

    fn is_ident(&self, i: usize) -> bool {
        self.toks.get(i).is_some_and(|t| t.kind == TokenKind::Ident)
    }

    fn line(&self, i: usize) -> u32 {
        self.toks
            .get(i)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    /// Column of the first significant token on the line holding token `i`.
    fn line_indent(&self, i: usize) -> usize {
        let line = self.line(i);
        let mut j = i;
        while j > 0 && self.toks[j - 1].line == line {
            j -= 1;
        }
        self.column(j)
    }

    fn column(&self, i: usize) -> usize {
        let t = &self.toks[i];
        let ls = self.line_starts[(t.line - 1) as usize];
        self.src[ls..t.start].chars().count()
    }

    fn first_on_line(&self, i: usize) -> bool {
        i == 0 || self.toks[i - 1].line != self.toks[i].line
    }

    fn compilation_unit(&mut self) {
        let mut i = 0;
        let end = self.toks.len();
        while i < end {
            match self.text(i) {
                "package" => {
                    let (name, next) = self.qualified_name_at(i + 1);
                    self.package = Some(name).filter(|n| !n.is_empty());
                    i = self.skip_past(next, ";", end);
                }
                "import" => i = self.skip_past(i + 1, ";", end),
                _ => {
                    let decl_start = i;
                    let j = self.skip_modifiers(i, end);
                    if let Some(kw) = self.type_keyword(j) {
                        let outer = self.package.clone();
                        i = self.type_decl(decl_start, kw, outer.as_deref(), end);
                    } else {
                        i = j.max(i + 1);
                    }
                }
            }
        }
    }

    fn qualified_name_at(&self, mut i: usize) -> (String, usize) {
        let mut name = String::new();
        while self.is_ident(i) {
            name.push_str(self.text(i));
            if self.is(i + 1, ".") && self.is_ident(i + 2) {
                name.push('.');
                i += 2;
            } else {
                i += 1;
                break;
            }
        }
        (name, i)
    }

    /// Index after the next `stop` token, or `end`.
    fn skip_past(&self, mut i: usize, stop: &str, end: usize) -> usize {
        while i < end {
            if self.is(i, stop) {
                return i + 1;
            }
            i += 1;
        }
        end
    }

    fn skip_modifiers(&self, mut i: usize, end: usize) -> usize {
        while i < end {
            let t = self.text(i);
            if t == "@" && !self.is(i + 1, "interface") {
                i = self.skip_annotation(i, end);
            } else if MODIFIERS.contains(&t) && !self.is(i + 1, ":") {
                i += 1;
            } else if t == "non" && self.is(i + 1, "-") && self.is(i + 2, "sealed") {
                i += 3;
            } else {
                break;
            }
        }
        i
    }

    fn skip_annotation(&self, at: usize, end: usize) -> usize {
        let (_, mut i) = self.qualified_name_at(at + 1);
        if i == at + 1 {
            return at + 1;
        }
        if self.is(i, "(") {
            i = self.skip_annotation_args(i, end).unwrap_or(i + 1);
        }
        i
    }

    /// Like `skip_parens`, but element values may hold `{...}` arrays.
    fn skip_annotation_args(&self, open: usize, end: usize) -> Option<usize> {
        let mut depth = 0usize;
        for i in open..end {
            match self.text(i) {
                "(" | "{" => depth += 1,
                ")" | "}" => {
                    depth = depth.checked_sub(1)?;
                    if depth == 0 {
                        return self.is(i, ")").then_some(i + 1);
                    }
                }
                ";" => return None,
                _ => {}
            }
        }
        None
    }

    /// Index after the `)` matching the `(` at `open`. Gives up at a brace
    /// or semicolon so a missing `)` cannot swallow the rest of the file.
    fn skip_parens(&self, open: usize, end: usize) -> Option<usize> {
        let mut depth = 0usize;
        let mut i = open;
        while i < end {
            match self.text(i) {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i + 1);
                    }
                }
                "{" | "}" | ";" => return None,
                _ => {}
            }
            i += 1;
        }
        None
    }

    fn type_keyword(&self, i: usize) -> Option<&'static str> {
        match self.text(i) {
            "class" if self.is_ident(i + 1) => Some("class"),
            "interface" if self.is_ident(i + 1) => Some("interface"),
            "enum" if self.is_ident(i + 1) => Some("enum"),
            "@" if self.is(i + 1, "interface") && self.is_ident(i + 2) => Some("@interface"),
            "record"
                if self.is_ident(i + 1) && (self.is(i + 2, "(") || self.is(i + 2, "<")) =>
            {
                Some("record")
            }
            _ => None,
        }
    }

    /// Finds the end of the brace block opened at `open`, searching no
    /// further than `limit`. Falls back to indentation when the braces do
    /// not balance inside the limit.
    fn block_end(&self, open: usize, limit: usize, anchor_col: usize) -> Option<BlockEnd> {
        let mut depth = 0usize;
        for i in open..limit {
            match self.text(i) {
                "{" => depth += 1,
                "}" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(BlockEnd {
                            close: i,
                            has_brace: true,
                        });
                    }
                }
                _ => {}
            }
        }
        // Unbalanced: the block ends at the first line that dedents to the
        // declaration's own indentation.
        let anchor_line = self.line(open);
        for i in open + 1..limit {
            if self.toks[i].line == anchor_line || !self.first_on_line(i) {
                continue;
            }
            if self.column(i) <= anchor_col {
                return Some(BlockEnd {
                    close: i,
                    has_brace: self.is(i, "}"),
                });
            }
        }
        None
    }

    /// Parses a type declaration whose keyword is at or after `decl_start`.
    /// Returns the index after the declaration.
    fn type_decl(&mut self, decl_start: usize, kw: &str, outer: Option<&str>, limit: usize) -> usize {
        let kw_at = self.skip_modifiers(decl_start, limit);
        let name_at = if kw == "@interface" { kw_at + 2 } else { kw_at + 1 };
        let simple = self.text(name_at).to_owned();
        let qualified = match outer {
            Some(o) => format!("{o}.{simple}"),
            None => simple.clone(),
        };

        let mut superclass = None;
        let mut i = name_at + 1;
        let mut angle = 0i32;
        let mut paren = 0i32;
        let open = loop {
            if i >= limit {
                return limit;
            }
            match self.text(i) {
                "<" => angle += 1,
                ">" => angle -= 1,
                ">>" => angle -= 2,
                ">>>" => angle -= 3,
                "(" => paren += 1,
                ")" => paren -= 1,
                "extends" if angle <= 0 && paren <= 0 && superclass.is_none() => {
                    superclass = Some(self.simple_type_name(i + 1));
                }
                "{" if paren <= 0 => break i,
                ";" | "}" if paren <= 0 => return i + 1,
                _ => {}
            }
            i += 1;
        };

        let anchor_col = self.line_indent(decl_start);
        let Some(block) = self.block_end(open, limit, anchor_col) else {
            self.degraded = true;
            return limit;
        };
        self.classes.push(ClassDecl {
            qualified_name: qualified.clone(),
            simple_name: simple,
            superclass: superclass.clone(),
            start_line: self.line(decl_start),
            end_line: self.line(if block.has_brace { block.close } else { block.close - 1 }),
        });
        self.class_body(open + 1, block.close, &qualified, superclass.as_deref(), kw == "enum");
        if block.has_brace {
            block.close + 1
        } else {
            block.close
        }
    }

    /// Simple name of the type starting at `i`: `a.b.C<T>` gives `C`.
    fn simple_type_name(&self, i: usize) -> String {
        let (name, _) = self.qualified_name_at(i);
        name.rsplit('.').next().unwrap_or_default().to_owned()
    }

    fn class_body(
        &mut self,
        start: usize,
        end: usize,
        class: &str,
        superclass: Option<&str>,
        is_enum: bool,
    ) {
        let mut i = start;
        if is_enum {
            i = self.skip_enum_constants(i, end);
        }
        while i < end {
            let decl_start = i;
            let j = self.skip_modifiers(i, end);
            if j >= end {
                break;
            }
            i = match self.text(j) {
                ";" => j + 1,
                "{" => {
                    let col = self.line_indent(j);
                    match self.block_end(j, end, col) {
                        Some(b) if b.has_brace => b.close + 1,
                        Some(b) => b.close.max(j + 1),
                        None => end,
                    }
                }
                _ => match self.type_keyword(j) {
                    Some(kw) => self.type_decl(decl_start, kw, Some(class), end),
                    None => self.member(decl_start, j, end, class, superclass),
                },
            };
            i = i.max(decl_start + 1);
        }
    }

    fn skip_enum_constants(&self, mut i: usize, end: usize) -> usize {
        let mut depth = 0usize;
        while i < end {
            match self.text(i) {
                "(" | "{" | "[" => depth += 1,
                ")" | "}" | "]" => depth = depth.saturating_sub(1),
                ";" if depth == 0 => return i + 1,
                _ => {}
            }
            i += 1;
        }
        end
    }

    /// Skips a field or unparseable member ending at `;` or a balanced block.
    fn skip_member(&self, mut i: usize, end: usize) -> usize {
        let mut depth = 0usize;
        while i < end {
            match self.text(i) {
                "(" | "{" | "[" => depth += 1,
                ")" | "]" => depth = depth.saturating_sub(1),
                "}" => {
                    if depth <= 1 {
                        return i + 1;
                    }
                    depth -= 1;
                }
                ";" if depth == 0 => return i + 1,
                _ => {}
            }
            i += 1;
        }
        end
    }

    /// `decl_start` is the first annotation or modifier, `i` the first token
    /// after them.
    fn member(
        &mut self,
        decl_start: usize,
        i: usize,
        end: usize,
        class: &str,
        superclass: Option<&str>,
    ) -> usize {
        let mut j = i;
        while j < end && !matches!(self.text(j), "(" | "=" | ";" | "{" | "}") {
            j += 1;
        }
        if j >= end || !self.is(j, "(") {
            return self.skip_member(i, end);
        }
        let name_at = j.wrapping_sub(1);
        if j == i || !self.is_ident(name_at) || !self.plausible_type(i, name_at, class) {
            return self.skip_member(i, end);
        }
        let Some(params_end) = self.skip_parens(j, end) else {
            return self.skip_member(i, end);
        };
        let param_types = self.param_types(j + 1, params_end - 1);

        // Dims, throws clause, annotation defaults.
        let mut k = params_end;
        while k < end && !matches!(self.text(k), "{" | ";" | "}" | "default") {
            k += 1;
        }
        let (body, last, next) = match self.text(k) {
            "{" => {
                let col = self.line_indent(decl_start);
                match self.block_end(k, end, col) {
                    Some(b) if b.has_brace => (k + 1..b.close, b.close, b.close + 1),
                    Some(b) => (k + 1..b.close, b.close - 1, b.close),
                    None => (k + 1..end, end - 1, end),
                }
            }
            "default" => {
                let stop = self.skip_member(k, end);
                (k..k, stop - 1, stop)
            }
            ";" => (k..k, k, k + 1),
            _ => (k..k, k.saturating_sub(1), k),
        };

        let name = self.text(name_at);
        let qualified_name = format!("{class}#{name}");
        if self.seen.insert((qualified_name.clone(), param_types.clone())) {
            let body_tokens = body.clone().map(|t| self.text(t).to_owned()).collect();
            let signature_tokens = (decl_start..k).map(|t| self.text(t).to_owned()).collect();
            self.methods.push(MethodDecl {
                qualified_name,
                param_types,
                file_path: self.file_path.to_owned(),
                start_line: self.line(decl_start),
                end_line: self.line(last).max(self.line(decl_start)),
                body_tokens,
                signature_tokens,
                enclosing_class: class.to_owned(),
                superclass: superclass.map(str::to_owned),
            });
        }
        next
    }

    /// True when the tokens `from..name_at` can be a return type plus type
    /// parameters, or are empty for a constructor of `class`.
    fn plausible_type(&self, from: usize, name_at: usize, class: &str) -> bool {
        if from == name_at {
            let simple = class.rsplit('.').next().unwrap_or(class);
            return self.text(name_at) == simple;
        }
        if STATEMENT_WORDS.contains(&self.text(name_at)) {
            return false;
        }
        (from..name_at).all(|t| {
            let s = self.text(t);
            match self.toks[t].kind {
                // `? super T` in a bound
                TokenKind::Ident if s == "super" => t > from && self.is(t - 1, "?"),
                TokenKind::Ident => !STATEMENT_WORDS.contains(&s),
                TokenKind::Punct => {
                    matches!(s, "." | "<" | ">" | ">>" | ">>>" | "," | "?" | "[" | "]" | "&" | "@")
                }
                _ => false,
            }
        })
    }

    fn param_types(&self, from: usize, to: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut start = from;
        let mut angle = 0i32;
        let mut paren = 0i32;
        for i in from..=to {
            if i == to {
                if i > start {
                    out.extend(self.param_type(start, i));
                }
                break;
            }
            match self.text(i) {
                "<" => angle += 1,
                ">" => angle -= 1,
                ">>" => angle -= 2,
                ">>>" => angle -= 3,
                "(" => paren += 1,
                ")" => paren -= 1,
                "," if angle <= 0 && paren <= 0 => {
                    out.extend(self.param_type(start, i));
                    start = i + 1;
                }
                _ => {}
            }
        }
        out
    }

    /// Erased simple type name of one parameter, `None` for a receiver
    /// parameter.
    fn param_type(&self, from: usize, to: usize) -> Option<String> {
        let mut toks: Vec<&str> = Vec::new();
        let mut i = from;
        while i < to {
            let t = self.text(i);
            if t == "@" {
                i = self.skip_annotation(i, to);
                continue;
            }
            if t != "final" {
                toks.push(t);
            }
            i += 1;
        }
        // Trailing `name[]` dims belong to the type.
        let mut dims = 0;
        while toks.len() >= 2 && toks[toks.len() - 1] == "]" && toks[toks.len() - 2] == "[" {
            toks.truncate(toks.len() - 2);
            dims += 1;
        }
        if toks.len() >= 2 {
            if toks.last() == Some(&"this") {
                return None;
            }
            toks.pop();
        }
        let mut angle = 0i32;
        let mut simple = "";
        for t in toks {
            match t {
                "<" => angle += 1,
                ">" => angle -= 1,
                ">>" => angle -= 2,
                ">>>" => angle -= 3,
                "[" if angle <= 0 => dims += 1,
                "..." if angle <= 0 => dims += 1,
                "." | "]" => {}
                _ if angle <= 0 => simple = t,
                _ => {}
            }
        }
        if simple.is_empty() {
            return None;
        }
        Some(format!("{simple}{}", "[]".repeat(dims)))
    }
}
