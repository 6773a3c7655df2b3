use crate::relcore::{CompareOp, Expr, Formula, IntCompareOp, IntExpr};

// Expression precedence, loosest first.
const E_UNION: u8 = 1;
const E_INTERSECT: u8 = 2;
const E_PRODUCT: u8 = 3;
const E_JOIN: u8 = 4;
const E_UNARY: u8 = 5;
const E_ATOM: u8 = 6;

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Union(..) | Expr::Minus(..) => E_UNION,
        Expr::Intersect(..) => E_INTERSECT,
        Expr::Product(..) => E_PRODUCT,
        Expr::Join(..) => E_JOIN,
        Expr::Closure(_) | Expr::ReflClosure(_) | Expr::Transpose(_) => E_UNARY,
        _ => E_ATOM,
    }
}

fn expr_at(e: &Expr, min: u8) -> String {
    let s = render_expr(e);
    if expr_prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

/// Canonical expression text with minimal parentheses.
pub fn render_expr(e: &Expr) -> String {
    match e {
        Expr::Sig(n) | Expr::Field(n) | Expr::Var(n) => n.clone(),
        Expr::Iden => "iden".into(),
        Expr::None => "none".into(),
        Expr::Univ => "univ".into(),
        Expr::Join(a, b) => format!("{}.{}", expr_at(a, E_JOIN), expr_at(b, E_UNARY)),
        Expr::Product(a, b) => format!("{}->{}", expr_at(a, E_PRODUCT), expr_at(b, E_JOIN)),
        Expr::Intersect(a, b) => format!("{} & {}", expr_at(a, E_INTERSECT), expr_at(b, E_PRODUCT)),
        Expr::Union(a, b) => format!("{} + {}", expr_at(a, E_UNION), expr_at(b, E_INTERSECT)),
        Expr::Minus(a, b) => format!("{} - {}", expr_at(a, E_UNION), expr_at(b, E_INTERSECT)),
        Expr::Closure(a) => format!("^{}", expr_at(a, E_UNARY)),
        Expr::ReflClosure(a) => format!("*{}", expr_at(a, E_UNARY)),
        Expr::Transpose(a) => format!("~{}", expr_at(a, E_UNARY)),
    }
}

fn int_expr(e: &IntExpr) -> String {
    match e {
        IntExpr::Literal(v) => v.to_string(),
        // `#` takes a whole union, but parenthesizing anything looser than a
        // join reads better and parses the same.
        IntExpr::Card(x) => format!("#{}", expr_at(x, E_JOIN)),
    }
}

// Formula precedence, loosest first.
const F_IFF: u8 = 1;
const F_IMPLIES: u8 = 2;
const F_OR: u8 = 3;
const F_AND: u8 = 4;
const F_NOT: u8 = 5;
const F_ATOM: u8 = 6;

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => F_IFF,
        Formula::Implies(..) => F_IMPLIES,
        Formula::Or(..) => F_OR,
        Formula::And(..) => F_AND,
        Formula::Not(_) => F_NOT,
        _ => F_ATOM,
    }
}

// A quantifier body extends as far right as possible, so a quantifier (or a
// `not` chain ending in one) needs parentheses unless nothing follows it.
fn ends_open(f: &Formula) -> bool {
    match f {
        Formula::Quant { .. } => true,
        Formula::Not(a) => ends_open(a),
        Formula::And(_, b) | Formula::Or(_, b) | Formula::Implies(_, b) | Formula::Iff(_, b) => ends_open(b),
        _ => false,
    }
}

fn formula_at(f: &Formula, min: u8, open_right: bool) -> String {
    let needs = formula_prec(f) < min || (!open_right && ends_open(f));
    if needs {
        format!("({})", formula(f, true))
    } else {
        formula(f, open_right)
    }
}

fn formula(f: &Formula, open_right: bool) -> String {
    match f {
        Formula::Quant { kind, vars, domain, body } => format!(
            "{} {}: {} | {}",
            kind.keyword(),
            vars.join(", "),
            render_expr(domain),
            formula(body, true)
        ),
        Formula::Mult(kind, e) => format!("{} {}", kind.keyword(), render_expr(e)),
        Formula::Compare(a, op, b) => {
            let op = match op {
                CompareOp::In => "in",
                CompareOp::NotIn => "not in",
                CompareOp::Eq => "=",
                CompareOp::NotEq => "!=",
            };
            format!("{} {op} {}", render_expr(a), render_expr(b))
        }
        Formula::IntCompare(a, op, b) => {
            let op = match op {
                IntCompareOp::Eq => "=",
                IntCompareOp::NotEq => "!=",
            };
            format!("{} {op} {}", int_expr(a), int_expr(b))
        }
        Formula::Not(a) => format!("not {}", formula_at(a, F_NOT, open_right)),
        Formula::And(a, b) => format!(
            "{} and {}",
            formula_at(a, F_AND, false),
            formula_at(b, F_NOT, open_right)
        ),
        Formula::Or(a, b) => format!(
            "{} or {}",
            formula_at(a, F_OR, false),
            formula_at(b, F_AND, open_right)
        ),
        Formula::Implies(a, b) => format!(
            "{} implies {}",
            formula_at(a, F_OR, false),
            formula_at(b, F_IMPLIES, open_right)
        ),
        Formula::Iff(a, b) => format!(
            "{} iff {}",
            formula_at(a, F_IFF, false),
            formula_at(b, F_IMPLIES, open_right)
        ),
        Formula::Conj(fs) => {
            let inner: Vec<String> = fs.iter().map(|g| formula(g, true)).collect();
            if inner.is_empty() {
                "{ }".into()
            } else {
                format!("{{ {} }}", inner.join(" "))
            }
        }
        Formula::True => "{ }".into(),
    }
}

/// Canonical text: single spaces, keyword connectives, minimal parentheses.
/// A top-level conjunction of two or more formulas is rendered one per line
/// and `True` as the empty string.
pub fn render(f: &Formula) -> String {
    match f {
        Formula::True => String::new(),
        Formula::Conj(fs) if fs.len() >= 2 => {
            fs.iter().map(|g| formula(g, true)).collect::<Vec<_>>().join("\n")
        }
        other => formula(other, true),
    }
}
