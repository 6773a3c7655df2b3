use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    // keywords
    All,
    Some,
    No,
    Lone,
    One,
    Not,
    In,
    And,
    Or,
    Implies,
    Iff,
    Iden,
    None,
    Univ,
    Disj,
    // punctuation
    Dot,
    Arrow,
    Plus,
    Minus,
    Amp,
    Caret,
    Star,
    Tilde,
    Hash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Bar,
    Eq,
    NotEq,
    Bang,
    AndAnd,
    OrOr,
    FatArrow,
    IffArrow,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::All => "all",
            Tok::Some => "some",
            Tok::No => "no",
            Tok::Lone => "lone",
            Tok::One => "one",
            Tok::Not => "not",
            Tok::In => "in",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::Implies => "implies",
            Tok::Iff => "iff",
            Tok::Iden => "iden",
            Tok::None => "none",
            Tok::Univ => "univ",
            Tok::Disj => "disj",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Amp => "&",
            Tok::Caret => "^",
            Tok::Star => "*",
            Tok::Tilde => "~",
            Tok::Hash => "#",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Bar => "|",
            Tok::Eq => "=",
            Tok::NotEq => "!=",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::FatArrow => "=>",
            Tok::IffArrow => "<=>",
            Tok::Ident(_) | Tok::Int(_) => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub text: String,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "all" => Tok::All,
        "some" => Tok::Some,
        "no" => Tok::No,
        "lone" => Tok::Lone,
        "one" => Tok::One,
        "not" => Tok::Not,
        "in" => Tok::In,
        "and" => Tok::And,
        "or" => Tok::Or,
        "implies" => Tok::Implies,
        "iff" => Tok::Iff,
        "iden" => Tok::Iden,
        "none" => Tok::None,
        "univ" => Tok::Univ,
        "disj" => Tok::Disj,
        _ => return None,
    })
}

const SYMBOLS: &[(&str, Tok)] = &[
    ("<=>", Tok::IffArrow),
    ("->", Tok::Arrow),
    ("=>", Tok::FatArrow),
    ("!=", Tok::NotEq),
    ("&&", Tok::AndAnd),
    ("||", Tok::OrOr),
    (".", Tok::Dot),
    ("+", Tok::Plus),
    ("-", Tok::Minus),
    ("&", Tok::Amp),
    ("^", Tok::Caret),
    ("*", Tok::Star),
    ("~", Tok::Tilde),
    ("#", Tok::Hash),
    ("(", Tok::LParen),
    (")", Tok::RParen),
    ("{", Tok::LBrace),
    ("}", Tok::RBrace),
    ("[", Tok::LBracket),
    ("]", Tok::RBracket),
    (",", Tok::Comma),
    (":", Tok::Colon),
    ("|", Tok::Bar),
    ("=", Tok::Eq),
    ("!", Tok::Bang),
];

/// Tokenizes formula text. `--` and `//` line comments, `/* */` block
/// comments and markdown fence lines are skipped.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = Vec::new();
    for (li, line_text) in text.split('\n').enumerate() {
        let line = li + 1;
        if line_text.trim_start().starts_with("```") {
            continue;
        }
        let chars: Vec<(usize, char)> = line_text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (byte, c) = chars[i];
            let column = i + 1;
            let rest = &line_text[byte..];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if rest.starts_with("--") || rest.starts_with("//") {
                break;
            }
            if let Some(inner) = rest.strip_prefix("/*") {
                // Block comments are rare in candidate bodies; only same-line
                // blocks are supported.
                match inner.find("*/") {
                    Some(end) => {
                        let skip = rest[..end + 4].chars().count();
                        i += skip;
                        continue;
                    }
                    None => {
                        return Err(ParseError::new(line, column, "unterminated block comment", rest));
                    }
                }
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_' || chars[i].1 == '\'') {
                    i += 1;
                }
                let end = chars.get(i).map_or(line_text.len(), |&(b, _)| b);
                let word = &line_text[byte..end];
                let tok = keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()));
                out.push(Token { tok, line, column: start + 1, text: word.to_string() });
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let end = chars.get(i).map_or(line_text.len(), |&(b, _)| b);
                let word = &line_text[byte..end];
                let value = word
                    .parse::<i64>()
                    .map_err(|_| ParseError::new(line, start + 1, "integer literal too large", word))?;
                out.push(Token { tok: Tok::Int(value), line, column: start + 1, text: word.to_string() });
                continue;
            }
            match SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
                Some((s, tok)) => {
                    out.push(Token { tok: tok.clone(), line, column, text: s.to_string() });
                    i += s.len();
                }
                None => {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("unknown token `{c}`"),
                        c.to_string(),
                    ));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_keywords() {
        assert_eq!(
            toks("s->t !in r <=> a=>b"),
            vec![
                Tok::Ident("s".into()),
                Tok::Arrow,
                Tok::Ident("t".into()),
                Tok::Bang,
                Tok::In,
                Tok::Ident("r".into()),
                Tok::IffArrow,
                Tok::Ident("a".into()),
                Tok::FatArrow,
                Tok::Ident("b".into()),
            ]
        );
        assert_eq!(toks("#Node = 0"), vec![Tok::Hash, Tok::Ident("Node".into()), Tok::Eq, Tok::Int(0)]);
    }

    #[test]
    fn comments_and_fences() {
        let t = toks("```alloy\n-- note\nno r // trailing\n/* x */ some r\n```");
        assert_eq!(t, vec![Tok::No, Tok::Ident("r".into()), Tok::Some, Tok::Ident("r".into())]);
    }

    #[test]
    fn positions_and_unknown_tokens() {
        let t = tokenize("no r\n  some s").unwrap();
        assert_eq!((t[2].line, t[2].column), (2, 3));
        let e = tokenize("all s: S | s @ r").unwrap_err();
        assert_eq!((e.line, e.column), (1, 14));
        assert_eq!(e.snippet, "@");
    }
}
