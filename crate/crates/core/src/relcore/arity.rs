use super::ast::{Expr, Formula, IntExpr};
use super::schema::Schema;
use super::TypeError;

/// Variables in scope, innermost last. Quantified variables are scalars.
#[derive(Debug, Clone, Default)]
pub struct VarScope {
    vars: Vec<(String, usize)>,
}

impl VarScope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(vars: &[(&str, usize)]) -> Self {
        VarScope {
            vars: vars.iter().map(|(n, a)| (n.to_string(), *a)).collect(),
        }
    }

    pub fn push(&mut self, name: &str, arity: usize) {
        self.vars.push((name.to_string(), arity));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.vars.truncate(len);
    }
}

#[derive(Clone, Copy)]
struct Ar {
    arity: usize,
    // `none`, compatible with any arity
    wildcard: bool,
}

impl Ar {
    fn fixed(arity: usize) -> Ar {
        Ar { arity, wildcard: false }
    }
}

fn infer(expr: &Expr, schema: &Schema, scope: &VarScope) -> Result<Ar, TypeError> {
    Ok(match expr {
        Expr::Sig(n) => {
            schema.sig_index(n).ok_or_else(|| TypeError::UnknownName(n.clone()))?;
            Ar::fixed(1)
        }
        Expr::Field(n) => {
            schema.field(n).ok_or_else(|| TypeError::UnknownName(n.clone()))?;
            Ar::fixed(2)
        }
        Expr::Var(n) => Ar::fixed(scope.lookup(n).ok_or_else(|| TypeError::UnknownName(n.clone()))?),
        Expr::Iden => Ar::fixed(2),
        Expr::Univ => Ar::fixed(1),
        Expr::None => Ar { arity: 1, wildcard: true },
        Expr::Join(a, b) => {
            let (l, r) = (infer(a, schema, scope)?, infer(b, schema, scope)?);
            if l.arity + r.arity < 3 {
                return Err(TypeError::JoinArity(l.arity, r.arity));
            }
            Ar::fixed(l.arity + r.arity - 2)
        }
        Expr::Product(a, b) => {
            Ar::fixed(infer(a, schema, scope)?.arity + infer(b, schema, scope)?.arity)
        }
        Expr::Union(a, b) | Expr::Intersect(a, b) | Expr::Minus(a, b) => {
            let op = match expr {
                Expr::Union(..) => "+",
                Expr::Intersect(..) => "&",
                _ => "-",
            };
            unify(op, infer(a, schema, scope)?, infer(b, schema, scope)?)?
        }
        Expr::Closure(a) | Expr::ReflClosure(a) | Expr::Transpose(a) => {
            let inner = infer(a, schema, scope)?;
            if inner.arity != 2 && !inner.wildcard {
                let op = match expr {
                    Expr::Closure(_) => "^",
                    Expr::ReflClosure(_) => "*",
                    _ => "~",
                };
                return Err(TypeError::NotBinary(op, inner.arity));
            }
            Ar::fixed(2)
        }
    })
}

fn unify(op: &'static str, l: Ar, r: Ar) -> Result<Ar, TypeError> {
    if l.arity == r.arity {
        Ok(Ar { arity: l.arity, wildcard: l.wildcard && r.wildcard })
    } else if l.wildcard {
        Ok(r)
    } else if r.wildcard {
        Ok(l)
    } else {
        Err(TypeError::ArityMismatch { op, left: l.arity, right: r.arity })
    }
}

/// Arity of an expression: atoms and variables 1, fields 2, products add,
/// joins of a and b give a+b-2 (which must be at least 1), closures and
/// transposes require 2. Set operators require matching arities; `none`
/// matches any arity.
pub fn arity_of(expr: &Expr, schema: &Schema, scope: &VarScope) -> Result<usize, TypeError> {
    infer(expr, schema, scope).map(|a| a.arity)
}

/// Type-checks a whole formula: names resolve, arities line up, quantifier
/// domains are unary.
pub fn check_formula(f: &Formula, schema: &Schema, scope: &mut VarScope) -> Result<(), TypeError> {
    match f {
        Formula::Quant { vars, domain, body, .. } => {
            let d = arity_of(domain, schema, scope)?;
            if d != 1 {
                return Err(TypeError::QuantDomain(d));
            }
            for v in vars {
                scope.push(v, 1);
            }
            let res = check_formula(body, schema, scope);
            for _ in vars {
                scope.pop();
            }
            res
        }
        Formula::Mult(_, e) => arity_of(e, schema, scope).map(drop),
        Formula::Compare(a, op, b) => {
            let l = infer(a, schema, scope)?;
            let r = infer(b, schema, scope)?;
            unify(op.symbol(), l, r).map(drop)
        }
        Formula::IntCompare(a, _, b) => {
            for side in [a, b] {
                if let IntExpr::Card(e) = side {
                    arity_of(e, schema, scope)?;
                }
            }
            Ok(())
        }
        Formula::Not(a) => check_formula(a, schema, scope),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            check_formula(a, schema, scope)?;
            check_formula(b, schema, scope)
        }
        Formula::Conj(fs) => fs.iter().try_for_each(|g| check_formula(g, schema, scope)),
        Formula::True => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st() -> VarScope {
        VarScope::with(&[("s", 1), ("t", 1)])
    }

    #[test]
    fn basic_arities() {
        let schema = Schema::single("S", "r");
        let prod = Expr::product(Expr::var("s"), Expr::var("t"));
        assert_eq!(arity_of(&prod, &schema, &st()), Ok(2));
        let image = Expr::join(Expr::var("s"), Expr::field("r"));
        assert_eq!(arity_of(&image, &schema, &st()), Ok(1));
        let tri = Expr::product(prod.clone(), Expr::sig("S"));
        assert_eq!(arity_of(&tri, &schema, &st()), Ok(3));
        assert_eq!(arity_of(&Expr::join(tri, Expr::field("r")), &schema, &st()), Ok(3));
    }

    #[test]
    fn ill_typed() {
        let schema = Schema::single("S", "r");
        assert_eq!(
            arity_of(&Expr::closure(Expr::var("s")), &schema, &st()),
            Err(TypeError::NotBinary("^", 1))
        );
        assert_eq!(
            arity_of(&Expr::join(Expr::var("s"), Expr::var("t")), &schema, &st()),
            Err(TypeError::JoinArity(1, 1))
        );
        assert!(matches!(
            arity_of(&Expr::union(Expr::var("s"), Expr::field("r")), &schema, &st()),
            Err(TypeError::ArityMismatch { .. })
        ));
        assert!(matches!(
            arity_of(&Expr::var("u"), &schema, &st()),
            Err(TypeError::UnknownName(_))
        ));
    }

    #[test]
    fn none_is_polymorphic() {
        let schema = Schema::single("S", "r");
        let e = Expr::union(Expr::None, Expr::field("r"));
        assert_eq!(arity_of(&e, &schema, &st()), Ok(2));
        let f = Formula::compare(Expr::field("r"), super::super::ast::CompareOp::Eq, Expr::None);
        assert!(check_formula(&f, &schema, &mut VarScope::new()).is_ok());
    }
}
