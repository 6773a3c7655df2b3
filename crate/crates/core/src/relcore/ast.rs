use std::fmt;

/// Quantifier or multiplicity keyword. `All` as a multiplicity means the
/// expression holds every tuple of its type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    All,
    Some,
    No,
    Lone,
    One,
}

impl Quantifier {
    pub const ALL: [Quantifier; 5] = [
        Quantifier::All,
        Quantifier::Some,
        Quantifier::No,
        Quantifier::Lone,
        Quantifier::One,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::All => "all",
            Quantifier::Some => "some",
            Quantifier::No => "no",
            Quantifier::Lone => "lone",
            Quantifier::One => "one",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.keyword() == s)
    }

    /// Whether a count of satisfying items passes this quantifier, given
    /// the total number of candidates.
    pub fn accepts(self, count: usize, total: usize) -> bool {
        match self {
            Quantifier::All => count == total,
            Quantifier::Some => count >= 1,
            Quantifier::No => count == 0,
            Quantifier::Lone => count <= 1,
            Quantifier::One => count == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompareOp {
    In,
    NotIn,
    Eq,
    NotEq,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::In => "in",
            CompareOp::NotIn => "not in",
            CompareOp::Eq => "=",
            CompareOp::NotEq => "!=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntCompareOp {
    Eq,
    NotEq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Sig(String),
    Field(String),
    Var(String),
    Iden,
    None,
    Univ,
    Join(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Intersect(Box<Expr>, Box<Expr>),
    Minus(Box<Expr>, Box<Expr>),
    Closure(Box<Expr>),
    ReflClosure(Box<Expr>),
    Transpose(Box<Expr>),
}

impl Expr {
    pub fn sig(n: &str) -> Expr {
        Expr::Sig(n.into())
    }
    pub fn field(n: &str) -> Expr {
        Expr::Field(n.into())
    }
    pub fn var(n: &str) -> Expr {
        Expr::Var(n.into())
    }
    pub fn join(a: Expr, b: Expr) -> Expr {
        Expr::Join(Box::new(a), Box::new(b))
    }
    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Product(Box::new(a), Box::new(b))
    }
    pub fn union(a: Expr, b: Expr) -> Expr {
        Expr::Union(Box::new(a), Box::new(b))
    }
    pub fn intersect(a: Expr, b: Expr) -> Expr {
        Expr::Intersect(Box::new(a), Box::new(b))
    }
    pub fn minus(a: Expr, b: Expr) -> Expr {
        Expr::Minus(Box::new(a), Box::new(b))
    }
    pub fn closure(a: Expr) -> Expr {
        Expr::Closure(Box::new(a))
    }
    pub fn refl_closure(a: Expr) -> Expr {
        Expr::ReflClosure(Box::new(a))
    }
    pub fn transpose(a: Expr) -> Expr {
        Expr::Transpose(Box::new(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntExpr {
    Literal(i64),
    Card(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Quant {
        kind: Quantifier,
        vars: Vec<String>,
        domain: Expr,
        body: Box<Formula>,
    },
    Mult(Quantifier, Expr),
    Compare(Expr, CompareOp, Expr),
    IntCompare(IntExpr, IntCompareOp, IntExpr),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// Juxtaposed formulas of a predicate body or `{ ... }` block.
    Conj(Vec<Formula>),
    True,
}

impl Formula {
    pub fn quant(kind: Quantifier, vars: &[&str], domain: Expr, body: Formula) -> Formula {
        Formula::Quant {
            kind,
            vars: vars.iter().map(|v| v.to_string()).collect(),
            domain,
            body: Box::new(body),
        }
    }
    pub fn compare(a: Expr, op: CompareOp, b: Expr) -> Formula {
        Formula::Compare(a, op, b)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render_expr(self))
    }
}
