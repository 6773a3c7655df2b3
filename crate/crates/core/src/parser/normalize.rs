use std::collections::BTreeMap;

use crate::relcore::{CompareOp, Expr, Formula, IntCompareOp, IntExpr};

use super::render::{render, render_expr};

/// Canonical form for syntactic deduplication.
///
/// Bound variables are renamed by binding depth (`v0` for the outermost,
/// `v1` for the next, ...), so sibling subtrees are named independently of
/// their order. Nested `Conj`/`and`/`or`/`+`/`&` chains are flattened, and
/// operands of commutative operators are sorted by their rendered text.
pub fn normalize(f: &Formula) -> Formula {
    Normalizer::default().formula(f)
}

#[derive(Default)]
struct Normalizer {
    // original name -> stack of canonical names
    bound: BTreeMap<String, Vec<String>>,
    depth: usize,
}

fn sorted_pair<T, F: Fn(&T) -> String>(a: T, b: T, key: F) -> (T, T) {
    if key(&b) < key(&a) {
        (b, a)
    } else {
        (a, b)
    }
}

impl Normalizer {
    fn formula(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Quant { kind, vars, domain, body } => {
                let domain = self.expr(domain);
                let mut renamed = Vec::new();
                for v in vars {
                    let name = format!("v{}", self.depth);
                    self.depth += 1;
                    self.bound.entry(v.clone()).or_default().push(name.clone());
                    renamed.push(name);
                }
                let body = self.formula(body);
                for v in vars {
                    self.depth -= 1;
                    self.bound.get_mut(v).expect("bound").pop();
                }
                Formula::Quant { kind: *kind, vars: renamed, domain, body: Box::new(body) }
            }
            Formula::Mult(k, e) => Formula::Mult(*k, self.expr(e)),
            Formula::Compare(a, op, b) => {
                let (a, b) = (self.expr(a), self.expr(b));
                match op {
                    CompareOp::Eq | CompareOp::NotEq => {
                        let (a, b) = sorted_pair(a, b, render_expr);
                        Formula::Compare(a, *op, b)
                    }
                    _ => Formula::Compare(a, *op, b),
                }
            }
            Formula::IntCompare(a, op, b) => {
                let a = self.int_expr(a);
                let b = self.int_expr(b);
                let (a, b) = sorted_pair(a, b, |x| format!("{x:?}"));
                let op: IntCompareOp = *op;
                Formula::IntCompare(a, op, b)
            }
            Formula::Not(a) => Formula::not(self.formula(a)),
            Formula::And(..) => self.chain(f, split_and, Formula::and),
            Formula::Or(..) => self.chain(f, split_or, Formula::or),
            Formula::Implies(a, b) => Formula::implies(self.formula(a), self.formula(b)),
            Formula::Iff(a, b) => {
                let (a, b) = sorted_pair(self.formula(a), self.formula(b), render);
                Formula::iff(a, b)
            }
            Formula::Conj(fs) => {
                let mut parts = Vec::new();
                for g in fs {
                    match self.formula(g) {
                        Formula::Conj(inner) => parts.extend(inner),
                        Formula::True => {}
                        other => parts.push(other),
                    }
                }
                parts.sort_by_cached_key(render);
                match parts.len() {
                    0 => Formula::True,
                    1 => parts.pop().expect("one"),
                    _ => Formula::Conj(parts),
                }
            }
            Formula::True => Formula::True,
        }
    }

    // Flattens a left- or right-nested chain of one associative,
    // commutative connective, sorts it, and rebuilds it left-nested.
    fn chain(&mut self, f: &Formula, split: Split, build: fn(Formula, Formula) -> Formula) -> Formula {
        let mut leaves = Vec::new();
        collect(f, split, &mut leaves);
        let mut parts: Vec<Formula> = leaves.into_iter().map(|g| self.formula(g)).collect();
        // Normalized leaves may themselves be chains of the same connective.
        let mut flat = Vec::new();
        for p in parts.drain(..) {
            let mut sub = Vec::new();
            collect(&p, split, &mut sub);
            if sub.len() > 1 {
                flat.extend(sub.into_iter().cloned());
            } else {
                flat.push(p);
            }
        }
        flat.sort_by_cached_key(render);
        let mut it = flat.into_iter();
        let first = it.next().expect("chain has operands");
        it.fold(first, build)
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Var(v) => match self.bound.get(v).and_then(|s| s.last()) {
                Some(n) => Expr::Var(n.clone()),
                None => Expr::Var(v.clone()),
            },
            Expr::Sig(_) | Expr::Field(_) | Expr::Iden | Expr::None | Expr::Univ => e.clone(),
            Expr::Join(a, b) => Expr::join(self.expr(a), self.expr(b)),
            Expr::Product(a, b) => Expr::product(self.expr(a), self.expr(b)),
            Expr::Minus(a, b) => Expr::minus(self.expr(a), self.expr(b)),
            Expr::Union(..) => self.expr_chain(e, true),
            Expr::Intersect(..) => self.expr_chain(e, false),
            Expr::Closure(a) => Expr::closure(self.expr(a)),
            Expr::ReflClosure(a) => Expr::refl_closure(self.expr(a)),
            Expr::Transpose(a) => Expr::transpose(self.expr(a)),
        }
    }

    fn expr_chain(&mut self, e: &Expr, union: bool) -> Expr {
        fn leaves<'e>(e: &'e Expr, union: bool, out: &mut Vec<&'e Expr>) {
            match (e, union) {
                (Expr::Union(a, b), true) | (Expr::Intersect(a, b), false) => {
                    leaves(a, union, out);
                    leaves(b, union, out);
                }
                _ => out.push(e),
            }
        }
        let mut ls = Vec::new();
        leaves(e, union, &mut ls);
        let mut parts = Vec::new();
        for l in ls {
            let n = self.expr(l);
            let mut sub = Vec::new();
            leaves(&n, union, &mut sub);
            parts.extend(sub.into_iter().cloned());
        }
        parts.sort_by_cached_key(render_expr);
        let mut it = parts.into_iter();
        let first = it.next().expect("operands");
        it.fold(first, |acc, x| if union { Expr::union(acc, x) } else { Expr::intersect(acc, x) })
    }

    fn int_expr(&mut self, e: &IntExpr) -> IntExpr {
        match e {
            IntExpr::Literal(v) => IntExpr::Literal(*v),
            IntExpr::Card(x) => IntExpr::Card(self.expr(x)),
        }
    }
}

type Split = for<'a> fn(&'a Formula) -> Option<(&'a Formula, &'a Formula)>;

fn split_and(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::And(a, b) => Some((a, b)),
        _ => None,
    }
}

fn split_or(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Or(a, b) => Some((a, b)),
        _ => None,
    }
}

fn collect<'a>(f: &'a Formula, split: Split, out: &mut Vec<&'a Formula>) {
    match split(f) {
        Some((a, b)) => {
            collect(a, split, out);
            collect(b, split, out);
        }
        None => out.push(f),
    }
}
