//! Evaluation of formulas and expressions on a concrete instance.

use smallvec::SmallVec;

use crate::relcore::{Atom, CompareOp, Expr, Formula, Instance, IntCompareOp, IntExpr, Quantifier, TupleSet, TypeError};

// Bitmask of sigs per column, used for the `all e` multiplicity.
type ColumnTypes = SmallVec<[u64; 4]>;

#[derive(Debug, Clone)]
struct Binding {
    name: String,
    atom: Atom,
    // sigs of the quantifier domain the variable ranges over
    sigs: u64,
}

/// Variable bindings, innermost last. Each variable denotes one atom.
#[derive(Debug, Clone, Default)]
pub struct Env {
    bindings: Vec<Binding>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `name` to `atom`, typed by the atom's own sig.
    pub fn bind(&mut self, name: &str, atom: Atom, inst: &Instance) {
        let sig = inst.universe().sig_of(atom);
        self.bindings.push(Binding { name: name.to_string(), atom, sigs: 1 << sig });
    }

    pub fn lookup(&self, name: &str) -> Option<Atom> {
        self.find(name).map(|b| b.atom)
    }

    fn find(&self, name: &str) -> Option<&Binding> {
        self.bindings.iter().rev().find(|b| b.name == name)
    }
}

/// Evaluates an expression to its tuple set.
pub fn eval_expr(e: &Expr, inst: &Instance, env: &Env) -> Result<TupleSet, TypeError> {
    Evaluator { inst, env: env.clone() }.expr(e)
}

/// Evaluates a formula. Free variables must be bound in `env`.
pub fn eval_formula(f: &Formula, inst: &Instance, env: &Env) -> Result<bool, TypeError> {
    Evaluator { inst, env: env.clone() }.formula(f)
}

struct Evaluator<'a> {
    inst: &'a Instance,
    env: Env,
}

// `none` evaluates to an empty unary set; stretch an empty operand to the
// other side's arity so set operators line up.
fn coerce(a: TupleSet, b: TupleSet) -> (TupleSet, TupleSet) {
    if a.arity() == b.arity() {
        (a, b)
    } else if a.is_empty() {
        (TupleSet::empty(b.arity(), b.universe_size()), b)
    } else if b.is_empty() {
        let n = a.universe_size();
        let arity = a.arity();
        (a, TupleSet::empty(arity, n))
    } else {
        (a, b)
    }
}

fn binary(s: TupleSet, op: &'static str) -> Result<TupleSet, TypeError> {
    match s.arity() {
        2 => Ok(s),
        _ if s.is_empty() => Ok(TupleSet::empty(2, s.universe_size())),
        k => Err(TypeError::NotBinary(op, k)),
    }
}

fn same_arity(op: &'static str, a: &TupleSet, b: &TupleSet) -> Result<(), TypeError> {
    if a.arity() == b.arity() {
        Ok(())
    } else {
        Err(TypeError::ArityMismatch { op, left: a.arity(), right: b.arity() })
    }
}

impl Evaluator<'_> {
    fn atoms(&self) -> usize {
        self.inst.universe().atom_count()
    }

    fn sig(&self, name: &str) -> Result<usize, TypeError> {
        self.inst
            .universe()
            .sig_index(name)
            .ok_or_else(|| TypeError::UnknownName(name.to_string()))
    }

    fn field(&self, name: &str) -> Result<usize, TypeError> {
        self.inst
            .field_index(name)
            .ok_or_else(|| TypeError::UnknownName(name.to_string()))
    }

    fn expr(&mut self, e: &Expr) -> Result<TupleSet, TypeError> {
        let n = self.atoms();
        Ok(match e {
            Expr::Sig(name) => self.inst.universe().sig_set(self.sig(name)?),
            Expr::Field(name) => self.inst.relation(self.field(name)?).clone(),
            Expr::Var(name) => {
                let b = self.env.find(name).ok_or_else(|| TypeError::UnknownName(name.clone()))?;
                TupleSet::unary(n, [b.atom])
            }
            Expr::Iden => TupleSet::identity(n),
            Expr::None => TupleSet::empty(1, n),
            Expr::Univ => self.inst.universe().univ(),
            Expr::Join(a, b) => {
                let (l, r) = (self.expr(a)?, self.expr(b)?);
                l.join(&r).ok_or(TypeError::JoinArity(l.arity(), r.arity()))?
            }
            Expr::Product(a, b) => {
                let (l, r) = (self.expr(a)?, self.expr(b)?);
                l.product(&r).ok_or(TypeError::TooLarge)?
            }
            Expr::Union(a, b) | Expr::Intersect(a, b) | Expr::Minus(a, b) => {
                let (l, r) = coerce(self.expr(a)?, self.expr(b)?);
                match e {
                    Expr::Union(..) => {
                        same_arity("+", &l, &r)?;
                        l.union(&r)
                    }
                    Expr::Intersect(..) => {
                        same_arity("&", &l, &r)?;
                        l.intersection(&r)
                    }
                    _ => {
                        same_arity("-", &l, &r)?;
                        l.difference(&r)
                    }
                }
            }
            Expr::Closure(a) => binary(self.expr(a)?, "^")?.closure(),
            Expr::ReflClosure(a) => binary(self.expr(a)?, "*")?.closure().union(&TupleSet::identity(n)),
            Expr::Transpose(a) => binary(self.expr(a)?, "~")?.transpose(),
        })
    }

    // Per-column sig masks of an expression.
    fn types(&self, e: &Expr) -> Result<ColumnTypes, TypeError> {
        let all = (1u64 << self.inst.universe().sig_count()) - 1;
        Ok(match e {
            Expr::Sig(name) => smallvec::smallvec![1 << self.sig(name)?],
            Expr::Field(name) => {
                let (s, t) = self.inst.field_sigs(self.field(name)?);
                smallvec::smallvec![1 << s, 1 << t]
            }
            Expr::Var(name) => {
                let b = self.env.find(name).ok_or_else(|| TypeError::UnknownName(name.clone()))?;
                smallvec::smallvec![b.sigs]
            }
            Expr::Iden => smallvec::smallvec![all, all],
            Expr::None => smallvec::smallvec![0],
            Expr::Univ => smallvec::smallvec![all],
            Expr::Join(a, b) => {
                let (l, r) = (self.types(a)?, self.types(b)?);
                l[..l.len() - 1].iter().chain(&r[1..]).copied().collect()
            }
            Expr::Product(a, b) => {
                let mut l = self.types(a)?;
                l.extend(self.types(b)?);
                l
            }
            Expr::Union(a, b) | Expr::Intersect(a, b) | Expr::Minus(a, b) => {
                let (l, r) = (self.types(a)?, self.types(b)?);
                if l.len() != r.len() {
                    // one side is `none`
                    return Ok(if l.len() > r.len() { l } else { r });
                }
                match e {
                    Expr::Union(..) => l.iter().zip(&r).map(|(x, y)| x | y).collect(),
                    Expr::Intersect(..) => l.iter().zip(&r).map(|(x, y)| x & y).collect(),
                    _ => l,
                }
            }
            Expr::Closure(a) | Expr::ReflClosure(a) => {
                let t = self.types(a)?;
                let both = t.iter().fold(0, |acc, x| acc | x);
                smallvec::smallvec![both, both]
            }
            Expr::Transpose(a) => {
                let mut t = self.types(a)?;
                t.reverse();
                t
            }
        })
    }

    // Every tuple the expression's type admits.
    fn full(&self, types: &[u64]) -> TupleSet {
        let u = self.inst.universe();
        let n = u.atom_count();
        let column = |mask: u64| {
            TupleSet::unary(n, (0..u.sig_count()).filter(|s| mask >> s & 1 == 1).flat_map(|s| u.atoms_of(s)))
        };
        let mut out = column(types[0]);
        for &m in &types[1..] {
            out = out.product(&column(m)).expect("small tuple space");
        }
        out
    }

    fn formula(&mut self, f: &Formula) -> Result<bool, TypeError> {
        Ok(match f {
            Formula::Quant { kind, vars, domain, body } => self.quant(*kind, vars, domain, body)?,
            Formula::Mult(kind, e) => {
                let s = self.expr(e)?;
                match kind {
                    Quantifier::All => {
                        let full = self.full(&self.types(e)?);
                        let (s, full) = coerce(s, full);
                        s.set_eq(&full)
                    }
                    k => k.accepts(s.len(), 0),
                }
            }
            Formula::Compare(a, op, b) => {
                let (l, r) = coerce(self.expr(a)?, self.expr(b)?);
                same_arity(op.symbol(), &l, &r)?;
                match op {
                    CompareOp::In => l.is_subset(&r),
                    CompareOp::NotIn => !l.is_subset(&r),
                    CompareOp::Eq => l.set_eq(&r),
                    CompareOp::NotEq => !l.set_eq(&r),
                }
            }
            Formula::IntCompare(a, op, b) => {
                let (l, r) = (self.int(a)?, self.int(b)?);
                match op {
                    IntCompareOp::Eq => l == r,
                    IntCompareOp::NotEq => l != r,
                }
            }
            Formula::Not(a) => !self.formula(a)?,
            Formula::And(a, b) => self.formula(a)? && self.formula(b)?,
            Formula::Or(a, b) => self.formula(a)? || self.formula(b)?,
            Formula::Implies(a, b) => !self.formula(a)? || self.formula(b)?,
            Formula::Iff(a, b) => self.formula(a)? == self.formula(b)?,
            Formula::Conj(fs) => {
                for g in fs {
                    if !self.formula(g)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::True => true,
        })
    }

    fn int(&mut self, e: &IntExpr) -> Result<i128, TypeError> {
        Ok(match e {
            IntExpr::Literal(v) => i128::from(*v),
            IntExpr::Card(x) => self.expr(x)?.len() as i128,
        })
    }

    // Multi-variable quantifiers range over every assignment of domain atoms
    // to the variables; no/lone/one count satisfying assignments.
    fn quant(&mut self, kind: Quantifier, vars: &[String], domain: &Expr, body: &Formula) -> Result<bool, TypeError> {
        let d = self.expr(domain)?;
        if d.arity() != 1 {
            return Err(TypeError::QuantDomain(d.arity()));
        }
        let sigs = self.types(domain)?[0];
        let atoms: Vec<Atom> = d.atoms().collect();
        let base = self.env.bindings.len();
        for v in vars {
            self.env.bindings.push(Binding { name: v.clone(), atom: 0, sigs });
        }
        let result = self.sweep(kind, &atoms, base, body);
        self.env.bindings.truncate(base);
        result
    }

    fn sweep(&mut self, kind: Quantifier, atoms: &[Atom], base: usize, body: &Formula) -> Result<bool, TypeError> {
        let k = self.env.bindings.len() - base;
        if atoms.is_empty() {
            return Ok(kind != Quantifier::Some && kind != Quantifier::One);
        }
        let mut idx = vec![0usize; k];
        let mut hits = 0usize;
        loop {
            for (j, &i) in idx.iter().enumerate() {
                self.env.bindings[base + j].atom = atoms[i];
            }
            let sat = self.formula(body)?;
            match (kind, sat) {
                (Quantifier::All, false) => return Ok(false),
                (Quantifier::Some, true) => return Ok(true),
                (Quantifier::No, true) => return Ok(false),
                (Quantifier::Lone | Quantifier::One, true) => {
                    hits += 1;
                    if hits > 1 {
                        return Ok(false);
                    }
                }
                _ => {}
            }
            // odometer, last variable fastest
            let mut j = k;
            loop {
                if j == 0 {
                    return Ok(match kind {
                        Quantifier::All | Quantifier::No | Quantifier::Lone => true,
                        Quantifier::Some => false,
                        Quantifier::One => hits == 1,
                    });
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < atoms.len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}
