use std::fmt;

use serde::{Deserialize, Serialize};

use super::RelError;

/// Field multiplicity as written in a `sig` body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Set,
    One,
    Lone,
}

impl Multiplicity {
    pub fn keyword(self) -> &'static str {
        match self {
            Multiplicity::Set => "set",
            Multiplicity::One => "one",
            Multiplicity::Lone => "lone",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub target: String,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
}

/// A binary field resolved to sig indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldInfo<'a> {
    pub index: usize,
    pub name: &'a str,
    pub source: usize,
    pub target: usize,
    pub multiplicity: Multiplicity,
}

/// Declared signatures and their binary fields.
///
/// Names are unique across sigs and fields, and every field target is a
/// declared sig. Both are checked by [`Schema::new`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SigDecl>", into = "Vec<SigDecl>")]
pub struct Schema {
    sigs: Vec<SigDecl>,
    // (source sig, target sig) per field, in declaration order.
    field_index: Vec<(usize, usize, usize)>,
}

impl Schema {
    pub fn new(sigs: Vec<SigDecl>) -> Result<Self, RelError> {
        let mut seen = std::collections::BTreeSet::new();
        for sig in &sigs {
            if !seen.insert(sig.name.as_str()) {
                return Err(RelError::DuplicateName(sig.name.clone()));
            }
        }
        for sig in &sigs {
            for field in &sig.fields {
                if !seen.insert(field.name.as_str()) {
                    return Err(RelError::DuplicateName(field.name.clone()));
                }
            }
        }
        let mut field_index = Vec::new();
        for (s, sig) in sigs.iter().enumerate() {
            for (f, field) in sig.fields.iter().enumerate() {
                let target = sigs
                    .iter()
                    .position(|t| t.name == field.target)
                    .ok_or_else(|| RelError::UnknownSig(field.target.clone()))?;
                field_index.push((s, f, target));
            }
        }
        Ok(Schema { sigs, field_index })
    }

    /// `sig S { r: set S }`
    pub fn single(sig: &str, field: &str) -> Self {
        Schema::new(vec![SigDecl {
            name: sig.to_string(),
            fields: vec![FieldDecl {
                name: field.to_string(),
                target: sig.to_string(),
                multiplicity: Multiplicity::Set,
            }],
        }])
        .expect("single-sig schema is valid")
    }

    /// Parses one or more declarations of the form `sig Name { f: set T, ... }`.
    pub fn parse(text: &str) -> Result<Self, RelError> {
        let mut tokens = SchemaTokens::new(text);
        let mut sigs = Vec::new();
        while let Some(tok) = tokens.next() {
            if tok != "sig" {
                return Err(RelError::Syntax(format!("expected `sig`, found `{tok}`")));
            }
            let name = tokens.ident()?;
            tokens.expect("{")?;
            let mut fields = Vec::new();
            loop {
                match tokens.peek() {
                    Some("}") => {
                        tokens.next();
                        break;
                    }
                    Some(_) => {}
                    None => return Err(RelError::Syntax("unterminated sig body".into())),
                }
                let field = tokens.ident()?;
                tokens.expect(":")?;
                let mult = match tokens.ident()?.as_str() {
                    "set" => Multiplicity::Set,
                    "one" => Multiplicity::One,
                    "lone" => Multiplicity::Lone,
                    other => {
                        return Err(RelError::Syntax(format!(
                            "unsupported multiplicity `{other}`"
                        )))
                    }
                };
                let target = tokens.ident()?;
                fields.push(FieldDecl {
                    name: field,
                    target,
                    multiplicity: mult,
                });
                if tokens.peek() == Some(",") {
                    tokens.next();
                }
            }
            sigs.push(SigDecl { name, fields });
        }
        if sigs.is_empty() {
            return Err(RelError::Syntax("no sig declarations".into()));
        }
        Schema::new(sigs)
    }

    pub fn sigs(&self) -> &[SigDecl] {
        &self.sigs
    }

    pub fn sig_index(&self, name: &str) -> Option<usize> {
        self.sigs.iter().position(|s| s.name == name)
    }

    pub fn fields(&self) -> impl Iterator<Item = FieldInfo<'_>> + '_ {
        self.field_index
            .iter()
            .enumerate()
            .map(move |(index, &(s, f, target))| {
                let decl = &self.sigs[s].fields[f];
                FieldInfo {
                    index,
                    name: &decl.name,
                    source: s,
                    target,
                    multiplicity: decl.multiplicity,
                }
            })
    }

    pub fn field(&self, name: &str) -> Option<FieldInfo<'_>> {
        self.fields().find(|f| f.name == name)
    }

    pub fn field_count(&self) -> usize {
        self.field_index.len()
    }

    /// Multi-line rendering used in prompts:
    ///
    /// ```text
    /// sig Node {
    ///   link: set Node
    /// }
    /// ```
    pub fn to_block_text(&self) -> String {
        let mut out = String::new();
        for (i, sig) in self.sigs.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("sig {} {{\n", sig.name));
            for (j, f) in sig.fields.iter().enumerate() {
                let sep = if j + 1 < sig.fields.len() { "," } else { "" };
                out.push_str(&format!(
                    "  {}: {} {}{}\n",
                    f.name,
                    f.multiplicity.keyword(),
                    f.target,
                    sep
                ));
            }
            out.push('}');
        }
        out
    }
}

impl fmt::Display for Schema {
    /// Single-line form: `sig S { r: set S }`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, sig) in self.sigs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let fields: Vec<String> = sig
                .fields
                .iter()
                .map(|fd| format!("{}: {} {}", fd.name, fd.multiplicity.keyword(), fd.target))
                .collect();
            if fields.is_empty() {
                write!(f, "sig {} {{}}", sig.name)?;
            } else {
                write!(f, "sig {} {{ {} }}", sig.name, fields.join(", "))?;
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<SigDecl>> for Schema {
    type Error = RelError;
    fn try_from(sigs: Vec<SigDecl>) -> Result<Self, Self::Error> {
        Schema::new(sigs)
    }
}

impl From<Schema> for Vec<SigDecl> {
    fn from(s: Schema) -> Self {
        s.sigs
    }
}

struct SchemaTokens {
    toks: Vec<String>,
    pos: usize,
}

impl SchemaTokens {
    fn new(text: &str) -> Self {
        let mut toks = Vec::new();
        let mut cur = String::new();
        for c in text.chars() {
            if c.is_alphanumeric() || c == '_' || c == '\'' {
                cur.push(c);
            } else {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                if !c.is_whitespace() {
                    toks.push(c.to_string());
                }
            }
        }
        if !cur.is_empty() {
            toks.push(cur);
        }
        SchemaTokens { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    fn next(&mut self) -> Option<String> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn ident(&mut self) -> Result<String, RelError> {
        match self.next() {
            Some(t) if t.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') => Ok(t),
            Some(t) => Err(RelError::Syntax(format!("expected identifier, found `{t}`"))),
            None => Err(RelError::Syntax("unexpected end of schema".into())),
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), RelError> {
        match self.next() {
            Some(t) if t == s => Ok(()),
            Some(t) => Err(RelError::Syntax(format!("expected `{s}`, found `{t}`"))),
            None => Err(RelError::Syntax(format!("expected `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_inline_and_block_forms() {
        let a = Schema::parse("sig S { r: set S }").unwrap();
        let b = Schema::parse("sig S {\n  r: set S\n}").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "sig S { r: set S }");
        assert_eq!(
            Schema::single("Node", "link").to_block_text(),
            "sig Node {\n  link: set Node\n}"
        );
    }

    #[test]
    fn rejects_duplicates_and_unknown_targets() {
        assert!(matches!(
            Schema::parse("sig S { S: set S }"),
            Err(RelError::DuplicateName(_))
        ));
        assert!(matches!(
            Schema::parse("sig S { r: set T }"),
            Err(RelError::UnknownSig(_))
        ));
        assert!(Schema::parse("sig S { r: seq S }").is_err());
        assert!(Schema::parse("").is_err());
    }

    #[test]
    fn resolves_fields_across_sigs() {
        let s = Schema::parse("sig A { f: one B } sig B { g: lone A, h: set B }").unwrap();
        let g = s.field("g").unwrap();
        assert_eq!((g.source, g.target, g.index), (1, 0, 1));
        assert_eq!(s.field("f").unwrap().multiplicity, Multiplicity::One);
        assert_eq!(s.field_count(), 3);
    }
}
