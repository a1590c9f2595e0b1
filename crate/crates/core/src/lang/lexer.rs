use super::ast::Pos;
use super::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Lowercase or qualified (`List.fold_left`) identifier.
    Ident(String),
    /// Uppercase identifier (constructor).
    Ctor(String),
    /// `'a`
    TyVar(String),
    Int(i64),
    Float(f64),
    Str(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

pub const KEYWORDS: &[&str] = &[
    "type", "letrepr", "letop", "letimpl", "let", "rec", "in", "fun", "match", "begin", "end",
    "with", "if", "then", "else", "external", "of", "true", "false",
];

// Longest first.
const SYMBOLS: &[&str] = &[
    "->", "||", "&&", "<>", "<=", ">=", ";;", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=",
    "|", "*", "+", "-", "/", "<", ">", "^", "!", "@", "_",
];

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

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
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let pos = Pos { line, col };
        // (* nested comments *)
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0;
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(pos, "unterminated comment"));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::new(pos, "unterminated string literal")),
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        let esc = match chars.get(i) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('\\') => '\\',
                            Some('"') => '"',
                            _ => return Err(ParseError::new(Pos { line, col }, "bad escape")),
                        };
                        s.push(esc);
                        bump!();
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        if c == '\'' {
            bump!();
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                bump!();
            }
            if start == i {
                return Err(ParseError::new(pos, "expected type variable name after '"));
            }
            let name: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::TyVar(name), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let mut is_float = false;
            if i < chars.len() && chars[i] == '.' && chars.get(i + 1).map_or(false, |d| d.is_ascii_digit()) {
                is_float = true;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                let mut j = i + 1;
                if chars.get(j) == Some(&'-') || chars.get(j) == Some(&'+') {
                    j += 1;
                }
                if chars.get(j).map_or(false, |d| d.is_ascii_digit()) {
                    is_float = true;
                    while i < j {
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if is_float {
                Tok::Float(text.parse().map_err(|_| ParseError::new(pos, "bad number"))?)
            } else {
                Tok::Int(text.parse().map_err(|_| ParseError::new(pos, "integer literal too large"))?)
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c.is_alphabetic() || (c == '_' && chars.get(i + 1).map_or(false, |d| is_ident_char(*d))) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                bump!();
            }
            let mut text: String = chars[start..i].iter().collect();
            // Qualified names: Upper(.Upper)*.lower
            if text.starts_with(|ch: char| ch.is_uppercase()) {
                while i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_alphabetic() {
                    bump!();
                    let seg_start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        bump!();
                    }
                    let seg: String = chars[seg_start..i].iter().collect();
                    text.push('.');
                    text.push_str(&seg);
                    if !seg.starts_with(|ch: char| ch.is_uppercase()) {
                        break;
                    }
                }
            }
            let last = text.rsplit('.').next().unwrap_or("");
            let tok = if let Some(kw) = KEYWORDS.iter().find(|k| **k == text) {
                Tok::Kw(kw)
            } else if last.starts_with(|ch: char| ch.is_uppercase()) {
                Tok::Ctor(text)
            } else {
                Tok::Ident(text)
            };
            out.push(Token { tok, pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| ParseError::new(pos, format!("unexpected character '{c}'")))?;
        for _ in 0..sym.chars().count() {
            bump!();
        }
        out.push(Token { tok: Tok::Sym(sym), pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn qualified_names() {
        assert_eq!(
            toks("List.fold_left IntSet.t Some"),
            vec![
                Tok::Ident("List.fold_left".into()),
                Tok::Ident("IntSet.t".into()),
                Tok::Ctor("Some".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_nest_and_positions_advance() {
        let t = tokenize("(* a (* b *) c *)\n  letop").unwrap();
        assert_eq!(t[0].tok, Tok::Kw("letop"));
        assert_eq!(t[0].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn tyvars_wildcards_and_numbers() {
        assert_eq!(
            toks("'a _ 1.0 42 ->"),
            vec![
                Tok::TyVar("a".into()),
                Tok::Sym("_"),
                Tok::Float(1.0),
                Tok::Int(42),
                Tok::Sym("->"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("\"abc").is_err());
    }
}
