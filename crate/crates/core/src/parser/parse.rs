use crate::relcore::{
    arity_of, CompareOp, Expr, Formula, IntCompareOp, IntExpr, Quantifier, Schema, TypeError, VarScope,
};

use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Parses a predicate body into a formula.
///
/// Juxtaposed formulas (one per line, as in a predicate body) become a
/// [`Formula::Conj`]; a single formula is returned as is and an empty body is
/// [`Formula::True`]. A surrounding `pred Name { ... }`, comments and
/// markdown fences are ignored.
pub fn parse_formula_body(text: &str, schema: &Schema) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let tokens = strip_pred_wrapper(tokens)?;
    let mut p = Parser::new(&tokens, schema);
    let mut parts = Vec::new();
    while !p.at_end() {
        parts.push(p.formula()?);
    }
    Ok(match parts.len() {
        0 => Formula::True,
        1 => parts.pop().expect("one"),
        _ => Formula::Conj(parts),
    })
}

/// Like [`parse_formula_body`], but an empty body is an error. Used for
/// candidate answers, where emptiness means the model produced nothing.
pub fn parse_candidate(text: &str, schema: &Schema) -> Result<Formula, ParseError> {
    let tokens = strip_pred_wrapper(tokenize(text)?)?;
    if tokens.is_empty() {
        return Err(ParseError::new(1, 1, "empty formula", text.lines().next().unwrap_or("")));
    }
    parse_formula_body(text, schema)
}

fn strip_pred_wrapper(tokens: Vec<Token>) -> Result<Vec<Token>, ParseError> {
    let is_pred = matches!(tokens.first(), Some(Token { tok: Tok::Ident(w), .. }) if w == "pred");
    if !is_pred {
        return Ok(tokens);
    }
    let mut i = 1;
    match tokens.get(i) {
        Some(Token { tok: Tok::Ident(_), .. }) => i += 1,
        Some(t) => return Err(err_at(t, format!("expected predicate name, found {}", t.tok.describe()))),
        None => return Err(err_at(&tokens[0], "expected predicate name")),
    }
    // Optional empty parameter list.
    for (open, close) in [(Tok::LParen, Tok::RParen), (Tok::LBracket, Tok::RBracket)] {
        if tokens.get(i).map(|t| &t.tok) == Some(&open) {
            if tokens.get(i + 1).map(|t| &t.tok) != Some(&close) {
                return Err(err_at(&tokens[i], "predicate parameters are not supported"));
            }
            i += 2;
        }
    }
    match tokens.get(i) {
        Some(Token { tok: Tok::LBrace, .. }) => {}
        Some(t) => return Err(err_at(t, format!("expected `{{`, found {}", t.tok.describe()))),
        None => return Err(err_at(tokens.last().expect("nonempty"), "expected `{`")),
    }
    let open = i;
    let mut depth = 0usize;
    for (j, t) in tokens.iter().enumerate().skip(open) {
        match t.tok {
            Tok::LBrace => depth += 1,
            Tok::RBrace => {
                depth -= 1;
                if depth == 0 {
                    if j + 1 != tokens.len() {
                        return Err(err_at(&tokens[j + 1], "unexpected text after predicate"));
                    }
                    return Ok(tokens[open + 1..j].to_vec());
                }
            }
            _ => {}
        }
    }
    Err(err_at(tokens.last().expect("nonempty"), "unterminated predicate body"))
}

fn err_at(t: &Token, msg: impl Into<String>) -> ParseError {
    ParseError::new(t.line, t.column, msg, t.text.clone())
}

enum Comparand {
    Rel(Expr, usize),
    Int(IntExpr),
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    schema: &'a Schema,
    scope: VarScope,
}

type PResult<T> = Result<T, (usize, ParseError)>;

impl<'a> Parser<'a> {
    fn new(toks: &'a [Token], schema: &'a Schema) -> Self {
        Parser { toks, pos: 0, schema, scope: VarScope::new() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, msg: impl Into<String>) -> (usize, ParseError) {
        let msg = msg.into();
        match self.toks.get(self.pos) {
            Some(t) => (self.pos, ParseError::new(t.line, t.column, msg, t.text.clone())),
            None => {
                let last = self.toks.last().expect("error on empty input");
                let msg = format!("{msg} (unexpected end of input)");
                (self.pos, ParseError::new(last.line, last.column, msg, last.text.clone()))
            }
        }
    }

    fn error_at(&self, at: usize, msg: impl Into<String>) -> (usize, ParseError) {
        let t = &self.toks[at.min(self.toks.len() - 1)];
        (at, ParseError::new(t.line, t.column, msg, t.text.clone()))
    }

    fn type_error(&self, at: usize, e: TypeError) -> (usize, ParseError) {
        self.error_at(at, e.to_string())
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), Tok::describe);
            Err(self.error(format!("expected {}, found {found}", tok.describe())))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.iff().map_err(|(_, e)| e)
    }

    fn iff(&mut self) -> PResult<Formula> {
        let mut left = self.implies()?;
        while matches!(self.peek(), Some(Tok::Iff | Tok::IffArrow)) {
            self.pos += 1;
            let right = self.implies()?;
            left = Formula::iff(left, right);
        }
        Ok(left)
    }

    fn implies(&mut self) -> PResult<Formula> {
        let left = self.or()?;
        if matches!(self.peek(), Some(Tok::Implies | Tok::FatArrow)) {
            self.pos += 1;
            let right = self.implies()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut left = self.and()?;
        while matches!(self.peek(), Some(Tok::Or | Tok::OrOr)) {
            self.pos += 1;
            let right = self.and()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut left = self.unary()?;
        while matches!(self.peek(), Some(Tok::And | Tok::AndAnd)) {
            self.pos += 1;
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if matches!(self.peek(), Some(Tok::Not | Tok::Bang)) {
            self.pos += 1;
            return Ok(Formula::not(self.unary()?));
        }
        self.primary()
    }

    fn quantifier_at(&self) -> Option<Quantifier> {
        Some(match self.peek()? {
            Tok::All => Quantifier::All,
            Tok::Some => Quantifier::Some,
            Tok::No => Quantifier::No,
            Tok::Lone => Quantifier::Lone,
            Tok::One => Quantifier::One,
            _ => return None,
        })
    }

    fn primary(&mut self) -> PResult<Formula> {
        match self.peek() {
            None => Err(self.error("expected a formula")),
            Some(Tok::LBrace) => {
                self.pos += 1;
                self.block()
            }
            Some(_) if self.quantifier_at().is_some() => {
                let kind = self.quantifier_at().expect("checked");
                match (self.peek_at(1), self.peek_at(2)) {
                    (Some(Tok::Disj), _) => {
                        self.pos += 1;
                        Err(self.error("`disj` declarations are not supported"))
                    }
                    (Some(Tok::Ident(_)), Some(Tok::Comma | Tok::Colon)) => {
                        self.pos += 1;
                        self.quantified(kind)
                    }
                    _ => {
                        self.pos += 1;
                        let (e, _) = self.typed_expr()?;
                        Ok(Formula::Mult(kind, e))
                    }
                }
            }
            Some(Tok::LParen) => {
                let (saved, depth) = (self.pos, self.scope.len());
                match self.comparison() {
                    Ok(f) => Ok(f),
                    Err(first) => {
                        self.pos = saved;
                        self.scope.truncate(depth);
                        self.pos += 1;
                        let inner = self.iff().and_then(|f| self.expect(Tok::RParen).map(|_| f));
                        match inner {
                            Ok(f) => Ok(f),
                            Err(second) => {
                                self.pos = saved;
                                self.scope.truncate(depth);
                                Err(if second.0 >= first.0 { second } else { first })
                            }
                        }
                    }
                }
            }
            Some(_) => self.comparison(),
        }
    }

    // After `{`.
    fn block(&mut self) -> PResult<Formula> {
        let mut parts = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                None => return Err(self.error("expected `}`")),
                _ => parts.push(self.iff()?),
            }
        }
        Ok(if parts.is_empty() { Formula::True } else { Formula::Conj(parts) })
    }

    // After the quantifier keyword.
    fn quantified(&mut self, kind: Quantifier) -> PResult<Formula> {
        let mut decls: Vec<(Vec<String>, Expr)> = Vec::new();
        loop {
            let mut vars = Vec::new();
            loop {
                match self.peek() {
                    Some(Tok::Ident(name)) => {
                        vars.push(name.clone());
                        self.pos += 1;
                    }
                    _ => return Err(self.error("expected a variable name")),
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Colon)?;
            let at = self.pos;
            // Earlier declarations are in scope for later domains.
            let (domain, arity) = self.typed_expr()?;
            if arity != 1 {
                return Err(self.type_error(at, TypeError::QuantDomain(arity)));
            }
            for v in &vars {
                self.scope.push(v, 1);
            }
            decls.push((vars, domain));
            let more = self.peek() == Some(&Tok::Comma)
                && matches!(self.peek_at(1), Some(Tok::Ident(_)))
                && matches!(self.peek_at(2), Some(Tok::Colon | Tok::Comma));
            if !more {
                break;
            }
            self.pos += 1;
        }
        let body = match self.peek() {
            Some(Tok::Bar) => {
                self.pos += 1;
                self.iff()?
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                self.block()?
            }
            _ => return Err(self.error("expected `|` or `{` after quantifier declarations")),
        };
        let bound: usize = decls.iter().map(|(v, _)| v.len()).sum();
        self.scope.truncate(self.scope.len() - bound);

        if decls.len() > 1 {
            let same_domain = decls.windows(2).all(|w| w[0].1 == w[1].1)
                && !decls.iter().skip(1).any(|(_, d)| mentions_any(d, &decls));
            if same_domain {
                let domain = decls[0].1.clone();
                let vars = decls.into_iter().flat_map(|(v, _)| v).collect();
                return Ok(Formula::Quant { kind, vars, domain, body: Box::new(body) });
            }
            if !matches!(kind, Quantifier::All | Quantifier::Some) {
                return Err(self.error(format!(
                    "`{}` with declarations over different domains is not supported",
                    kind.keyword()
                )));
            }
        }
        Ok(decls.into_iter().rev().fold(body, |acc, (vars, domain)| Formula::Quant {
            kind,
            vars,
            domain,
            body: Box::new(acc),
        }))
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let left = self.comparand()?;
        let op = match self.peek() {
            Some(Tok::In) => {
                self.pos += 1;
                CompareOp::In
            }
            Some(Tok::Eq) => {
                self.pos += 1;
                CompareOp::Eq
            }
            Some(Tok::NotEq) => {
                self.pos += 1;
                CompareOp::NotEq
            }
            Some(Tok::Not | Tok::Bang) if self.peek_at(1) == Some(&Tok::In) => {
                self.pos += 2;
                CompareOp::NotIn
            }
            Some(Tok::Not | Tok::Bang) if self.peek_at(1) == Some(&Tok::Eq) => {
                self.pos += 2;
                CompareOp::NotEq
            }
            Some(t) => {
                let t = t.describe();
                return Err(self.error(format!("expected a comparison operator, found {t}")));
            }
            None => return Err(self.error("expected a comparison operator")),
        };
        let op_at = self.pos - 1;
        let right = self.comparand()?;
        match (left, right) {
            (Comparand::Rel(a, la), Comparand::Rel(b, lb)) => {
                let wild = |e: &Expr| matches!(e, Expr::None);
                if la != lb && !wild(&a) && !wild(&b) {
                    return Err(self.type_error(
                        op_at,
                        TypeError::ArityMismatch { op: op.symbol(), left: la, right: lb },
                    ));
                }
                Ok(Formula::Compare(a, op, b))
            }
            (Comparand::Int(a), Comparand::Int(b)) => {
                let op = match op {
                    CompareOp::Eq => IntCompareOp::Eq,
                    CompareOp::NotEq => IntCompareOp::NotEq,
                    _ => return Err(self.error_at(op_at, format!("`{}` cannot compare integers", op.symbol()))),
                };
                Ok(Formula::IntCompare(a, op, b))
            }
            _ => Err(self.error_at(op_at, "cannot compare an integer with a relation")),
        }
    }

    fn comparand(&mut self) -> PResult<Comparand> {
        match self.peek() {
            Some(Tok::Hash) => {
                self.pos += 1;
                let (e, _) = self.typed_expr()?;
                Ok(Comparand::Int(IntExpr::Card(e)))
            }
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(Comparand::Int(IntExpr::Literal(v)))
            }
            _ => {
                let (e, a) = self.typed_expr()?;
                Ok(Comparand::Rel(e, a))
            }
        }
    }

    fn typed_expr(&mut self) -> PResult<(Expr, usize)> {
        let at = self.pos;
        let e = self.union()?;
        match arity_of(&e, self.schema, &self.scope) {
            Ok(a) => Ok((e, a)),
            Err(err) => Err(self.type_error(at, err)),
        }
    }

    fn union(&mut self) -> PResult<Expr> {
        let mut left = self.intersect()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    left = Expr::union(left, self.intersect()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    left = Expr::minus(left, self.intersect()?);
                }
                _ => return Ok(left),
            }
        }
    }

    fn intersect(&mut self) -> PResult<Expr> {
        let mut left = self.product()?;
        while self.eat(&Tok::Amp) {
            left = Expr::intersect(left, self.product()?);
        }
        Ok(left)
    }

    fn product(&mut self) -> PResult<Expr> {
        let mut left = self.join()?;
        while self.eat(&Tok::Arrow) {
            left = Expr::product(left, self.join()?);
        }
        Ok(left)
    }

    fn join(&mut self) -> PResult<Expr> {
        let mut left = self.unary_expr()?;
        while self.eat(&Tok::Dot) {
            left = Expr::join(left, self.unary_expr()?);
        }
        Ok(left)
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(Tok::Caret) => {
                self.pos += 1;
                Ok(Expr::closure(self.unary_expr()?))
            }
            Some(Tok::Star) => {
                self.pos += 1;
                Ok(Expr::refl_closure(self.unary_expr()?))
            }
            Some(Tok::Tilde) => {
                self.pos += 1;
                Ok(Expr::transpose(self.unary_expr()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expected an expression"));
        };
        match tok {
            Tok::Iden => {
                self.pos += 1;
                Ok(Expr::Iden)
            }
            Tok::None => {
                self.pos += 1;
                Ok(Expr::None)
            }
            Tok::Univ => {
                self.pos += 1;
                Ok(Expr::Univ)
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.union()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let e = if self.scope.contains(&name) {
                    Expr::Var(name)
                } else if self.schema.sig_index(&name).is_some() {
                    Expr::Sig(name)
                } else if self.schema.field(&name).is_some() {
                    Expr::Field(name)
                } else {
                    return Err(self.error(format!("unresolvable name `{name}`")));
                };
                self.bump();
                Ok(e)
            }
            other => Err(self.error(format!("expected an expression, found {}", other.describe()))),
        }
    }
}

// Whether a later domain mentions a variable declared earlier, in which
// case the declarations cannot be merged into one variable list.
fn mentions_any(e: &Expr, decls: &[(Vec<String>, Expr)]) -> bool {
    match e {
        Expr::Var(v) => decls.iter().any(|(vs, _)| vs.contains(v)),
        Expr::Join(a, b) | Expr::Product(a, b) | Expr::Union(a, b) | Expr::Intersect(a, b) | Expr::Minus(a, b) => {
            mentions_any(a, decls) || mentions_any(b, decls)
        }
        Expr::Closure(a) | Expr::ReflClosure(a) | Expr::Transpose(a) => mentions_any(a, decls),
        _ => false,
    }
}
