use super::{Diagnostic, FrontendError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub line: u32,
    pub col: u32,
}

const PUNCTS: [&str; 30] = [
    "++", "--", "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "!", "=", "(", ")", "{", "}",
    "[", "]", ";", ",", ".", "&", "?", "@", ":",
];

/// Split MiniLang source into tokens. Accepts LF and CRLF line endings,
/// `//` line comments and `/* */` block comments.
pub fn lex(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut errors = Vec::new();

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    errors.push(Diagnostic::new(tl, tc, "unterminated block comment"));
                    break;
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Token { kind: TokKind::Ident(chars[start..i].iter().collect()), line: tl, col: tc });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<i64>() {
                Ok(v) => out.push(Token { kind: TokKind::Int(v), line: tl, col: tc }),
                Err(_) => errors.push(Diagnostic::new(tl, tc, format!("integer literal {text} out of range"))),
            }
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            let mut closed = false;
            while i < chars.len() && chars[i] != '\n' {
                match chars[i] {
                    '"' => {
                        bump!();
                        closed = true;
                        break;
                    }
                    '\\' if i + 1 < chars.len() => {
                        bump!();
                        s.push(match chars[i] {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        bump!();
                    }
                    ch => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            if closed {
                out.push(Token { kind: TokKind::Str(s), line: tl, col: tc });
            } else {
                errors.push(Diagnostic::new(tl, tc, "unterminated string literal"));
            }
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    for _ in 0..p.len() {
                        bump!();
                    }
                    out.push(Token { kind: TokKind::Punct(p), line: tl, col: tc });
                }
                None => {
                    errors.push(Diagnostic::new(tl, tc, format!("illegal character {c:?}")));
                    bump!();
                }
            }
        }
        if errors.len() >= super::MAX_ERRORS {
            break;
        }
    }
    if !errors.is_empty() {
        return Err(FrontendError::Lex(errors));
    }
    out.push(Token { kind: TokKind::Eof, line, col });
    Ok(out)
}
