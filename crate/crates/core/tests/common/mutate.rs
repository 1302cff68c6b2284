//! Source mutations for robustness tests.

/// Inserts comments and whitespace only where Java ignores them and where
/// the layout the parser looks at (line starts, indentation) is kept.
/// Each pick is (token index, kind of insertion).
pub fn sprinkle(src: &str, picks: &[(usize, u8)]) -> String {
    use churnscope::parser::lexer::lex;
    let toks: Vec<_> = lex(src).tokens.into_iter().filter(|t| !t.kind.is_trivia()).collect();
    let mut inserts: Vec<(usize, &str)> = Vec::new();
    for &(pick, what) in picks {
        let t = &toks[pick % toks.len()];
        let next_is_newline = src[t.end..].starts_with('\n');
        let text = match what % 5 {
            0 => " ",
            1 => "\t",
            2 => "/* note { } */",
            3 if next_is_newline => " // trailing { comment",
            3 => " ",
            _ if next_is_newline => "\n",
            _ => "/**/",
        };
        // A bare newline goes after the existing one: a new blank line.
        let at = if text == "\n" { t.end + 1 } else { t.end };
        inserts.push((at, text));
    }
    inserts.sort_by_key(|&(at, _)| std::cmp::Reverse(at));
    let mut out = src.to_owned();
    for (at, text) in inserts {
        out.insert_str(at, text);
    }
    out
}


/// Arbitrary byte-level damage: (offset, length, operation, text) edits
/// that delete, duplicate, insert or truncate.
pub fn scramble(src: &str, edits: &[(usize, usize, u8, String)]) -> String {
    let mut bytes = src.as_bytes().to_vec();
    for (at, len, op, text) in edits {
        let at = at % (bytes.len() + 1);
        let end = (at + len).min(bytes.len());
        match op % 4 {
            0 => {
                bytes.drain(at..end);
            }
            1 => {
                let dup = bytes[at..end].to_vec();
                bytes.splice(at..at, dup);
            }
            2 => {
                bytes.splice(at..at, text.bytes());
            }
            _ => bytes.truncate(at),
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}
