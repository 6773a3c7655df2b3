//! Test support: a deliberately naive second evaluator, its own instance
//! enumerator and random generators for well-typed formulas.
//!
//! Nothing here shares code with [`crate::eval`] or the relcore
//! enumerator. Relations are sorted lists of atom-name tuples; instances
//! are built from scratch and converted with [`Instance::from_data`].

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::relcore::{
    CompareOp, Expr, Formula, Instance, InstanceData, IntCompareOp, IntExpr, Multiplicity, Quantifier, Schema,
};

type Tuple = Vec<String>;

/// A relation as a sorted, duplicate-free tuple list with a nominal arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rel {
    pub arity: usize,
    pub tuples: Vec<Tuple>,
}

impl Rel {
    fn new(arity: usize, mut tuples: Vec<Tuple>) -> Rel {
        tuples.sort();
        tuples.dedup();
        Rel { arity, tuples }
    }

    fn contains(&self, t: &Tuple) -> bool {
        self.tuples.binary_search(t).is_ok()
    }

    fn subset_of(&self, other: &Rel) -> bool {
        self.tuples.iter().all(|t| other.contains(t))
    }

    // An empty relation adopts the other side's arity.
    fn align(a: Rel, b: Rel) -> (Rel, Rel) {
        if a.arity != b.arity && a.tuples.is_empty() {
            (Rel::new(b.arity, vec![]), b)
        } else if a.arity != b.arity && b.tuples.is_empty() {
            let n = a.arity;
            (a, Rel::new(n, vec![]))
        } else {
            (a, b)
        }
    }
}

/// An instance as plain names: the atoms of each sig and each field's pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveInstance {
    pub sigs: Vec<(String, Vec<String>)>,
    pub fields: BTreeMap<String, (String, String, Vec<Tuple>)>,
}

impl NaiveInstance {
    pub fn to_data(&self) -> InstanceData {
        InstanceData {
            universe: self.sigs.iter().map(|(s, a)| (s.clone(), a.len())).collect(),
            relations: self.fields.iter().map(|(f, (_, _, t))| (f.clone(), t.clone())).collect(),
        }
    }

    pub fn to_instance(&self, schema: &Schema) -> Instance {
        Instance::from_data(schema, &self.to_data()).expect("naive instance is valid")
    }

    fn atoms(&self, sig: &str) -> Vec<String> {
        self.sigs.iter().find(|(s, _)| s == sig).map(|(_, a)| a.clone()).unwrap_or_default()
    }

    fn univ(&self) -> Vec<String> {
        let mut all: Vec<String> = self.sigs.iter().flat_map(|(_, a)| a.clone()).collect();
        all.sort();
        all
    }
}

fn pairs(src: &[String], tgt: &[String]) -> Vec<Tuple> {
    src.iter().flat_map(|a| tgt.iter().map(move |b| vec![a.clone(), b.clone()])).collect()
}

// All legal valuations of one field, as tuple lists.
fn field_values(mult: Multiplicity, src: &[String], tgt: &[String]) -> Vec<Vec<Tuple>> {
    match mult {
        Multiplicity::Set => {
            let all = pairs(src, tgt);
            (0..1u64 << all.len())
                .map(|mask| all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| t.clone()).collect())
                .collect()
        }
        Multiplicity::One | Multiplicity::Lone => {
            // Per source atom: a list of possible image sets.
            let mut options: Vec<Vec<Option<&String>>> = Vec::new();
            for _ in src {
                let mut o: Vec<Option<&String>> = tgt.iter().map(Some).collect();
                if mult == Multiplicity::Lone {
                    o.push(None);
                }
                options.push(o);
            }
            let mut out = vec![Vec::new()];
            for (a, opts) in src.iter().zip(&options) {
                let mut next = Vec::new();
                for partial in &out {
                    for o in opts {
                        let mut p: Vec<Tuple> = partial.clone();
                        if let Some(b) = o {
                            p.push(vec![a.clone(), (*b).clone()]);
                        }
                        next.push(p);
                    }
                }
                out = next;
            }
            out
        }
    }
}

/// Every instance with each sig sized 0..=scope, computed independently of
/// the main enumerator. Order is unspecified.
pub fn naive_instances(schema: &Schema, scope: usize) -> Vec<NaiveInstance> {
    let sig_names: Vec<String> = schema.sigs().iter().map(|s| s.name.clone()).collect();
    let mut sizes = vec![Vec::new()];
    for _ in &sig_names {
        sizes = sizes.into_iter().flat_map(|p: Vec<usize>| (0..=scope).map(move |k| [p.clone(), vec![k]].concat())).collect();
    }
    let mut out = Vec::new();
    for counts in sizes {
        let sigs: Vec<(String, Vec<String>)> =
            sig_names.iter().zip(&counts).map(|(s, &k)| (s.clone(), (0..k).map(|i| format!("{s}{i}")).collect())).collect();
        let mut partial = vec![BTreeMap::new()];
        for sig in schema.sigs() {
            for f in &sig.fields {
                let src = &sigs.iter().find(|(s, _)| *s == sig.name).unwrap().1;
                let tgt = &sigs.iter().find(|(s, _)| *s == f.target).unwrap().1;
                let values = field_values(f.multiplicity, src, tgt);
                let mut next = Vec::new();
                for p in &partial {
                    for v in &values {
                        let mut m: BTreeMap<String, (String, String, Vec<Tuple>)> = p.clone();
                        m.insert(f.name.clone(), (sig.name.clone(), f.target.clone(), v.clone()));
                        next.push(m);
                    }
                }
                partial = next;
            }
        }
        out.extend(partial.into_iter().map(|fields| NaiveInstance { sigs: sigs.clone(), fields }));
    }
    out
}

/// A uniformly random instance with each sig sized 0..=scope.
pub fn random_instance(rng: &mut impl Rng, schema: &Schema, scope: usize) -> NaiveInstance {
    let sigs: Vec<(String, Vec<String>)> = schema
        .sigs()
        .iter()
        .map(|s| (s.name.clone(), (0..rng.gen_range(0..=scope)).map(|i| format!("{}{i}", s.name)).collect()))
        .collect();
    let atoms = |name: &str| sigs.iter().find(|(s, _)| s == name).unwrap().1.clone();
    let mut fields = BTreeMap::new();
    for sig in schema.sigs() {
        for f in &sig.fields {
            let (src, tgt) = (atoms(&sig.name), atoms(&f.target));
            let tuples: Vec<Tuple> = match f.multiplicity {
                Multiplicity::Set => pairs(&src, &tgt).into_iter().filter(|_| rng.gen_bool(0.5)).collect(),
                m => src
                    .iter()
                    .filter_map(|a| {
                        let skip = m == Multiplicity::Lone && rng.gen_bool(0.3);
                        tgt.choose(rng).filter(|_| !skip).map(|b| vec![a.clone(), b.clone()])
                    })
                    .collect(),
            };
            if f.multiplicity == Multiplicity::One && tgt.is_empty() && !src.is_empty() {
                // No legal valuation; retry with fresh sizes.
                return random_instance(rng, schema, scope);
            }
            fields.insert(f.name.clone(), (sig.name.clone(), f.target.clone(), tuples));
        }
    }
    NaiveInstance { sigs, fields }
}

/// Bindings from variable name to (atom, column type of its domain).
type Env = Vec<(String, String, BTreeSet<String>)>;

/// Reference evaluator. Panics on ill-typed input.
pub struct Oracle<'a> {
    inst: &'a NaiveInstance,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a NaiveInstance) -> Self {
        Oracle { inst }
    }

    pub fn formula(&self, f: &Formula) -> bool {
        self.f(f, &mut Vec::new())
    }

    pub fn expr(&self, e: &Expr) -> Rel {
        self.e(e, &Vec::new())
    }

    fn all_sigs(&self) -> BTreeSet<String> {
        self.inst.sigs.iter().map(|(s, _)| s.clone()).collect()
    }

    fn sig_of_atom(&self, atom: &str) -> Option<&str> {
        self.inst.sigs.iter().find(|(_, a)| a.iter().any(|x| x == atom)).map(|(s, _)| s.as_str())
    }

    // Column types as sets of sig names.
    fn ty(&self, e: &Expr, env: &Env) -> Vec<BTreeSet<String>> {
        let one = |s: &str| BTreeSet::from([s.to_string()]);
        match e {
            Expr::Sig(s) => vec![one(s)],
            Expr::Field(f) => {
                let (s, t, _) = &self.inst.fields[f];
                vec![one(s), one(t)]
            }
            Expr::Var(v) => vec![env.iter().rev().find(|(n, _, _)| n == v).expect("bound").2.clone()],
            Expr::Iden => vec![self.all_sigs(), self.all_sigs()],
            Expr::Univ => vec![self.all_sigs()],
            Expr::None => vec![BTreeSet::new()],
            Expr::Join(a, b) => {
                let (mut l, r) = (self.ty(a, env), self.ty(b, env));
                l.pop();
                l.extend(r.into_iter().skip(1));
                l
            }
            Expr::Product(a, b) => [self.ty(a, env), self.ty(b, env)].concat(),
            Expr::Union(a, b) | Expr::Intersect(a, b) | Expr::Minus(a, b) => {
                let (l, r) = (self.ty(a, env), self.ty(b, env));
                if l.len() != r.len() {
                    return if l.len() > r.len() { l } else { r };
                }
                match e {
                    Expr::Union(..) => l.iter().zip(&r).map(|(x, y)| x.union(y).cloned().collect()).collect(),
                    Expr::Intersect(..) => l.iter().zip(&r).map(|(x, y)| x.intersection(y).cloned().collect()).collect(),
                    _ => l,
                }
            }
            Expr::Closure(a) | Expr::ReflClosure(a) => {
                let both: BTreeSet<String> = self.ty(a, env).into_iter().flatten().collect();
                vec![both.clone(), both]
            }
            Expr::Transpose(a) => {
                let mut t = self.ty(a, env);
                t.reverse();
                t
            }
        }
    }

    fn full(&self, ty: &[BTreeSet<String>]) -> Rel {
        let mut tuples: Vec<Tuple> = vec![vec![]];
        for col in ty {
            let atoms: Vec<String> = col.iter().flat_map(|s| self.inst.atoms(s)).collect();
            tuples = tuples.iter().flat_map(|t| atoms.iter().map(move |a| [t.clone(), vec![a.clone()]].concat())).collect();
        }
        Rel::new(ty.len(), tuples)
    }

    fn e(&self, e: &Expr, env: &Env) -> Rel {
        match e {
            Expr::Sig(s) => Rel::new(1, self.inst.atoms(s).into_iter().map(|a| vec![a]).collect()),
            Expr::Field(f) => Rel::new(2, self.inst.fields[f].2.clone()),
            Expr::Var(v) => {
                let atom = &env.iter().rev().find(|(n, _, _)| n == v).expect("bound").1;
                Rel::new(1, vec![vec![atom.clone()]])
            }
            Expr::Iden => Rel::new(2, self.inst.univ().into_iter().map(|a| vec![a.clone(), a]).collect()),
            Expr::Univ => Rel::new(1, self.inst.univ().into_iter().map(|a| vec![a]).collect()),
            Expr::None => Rel::new(1, vec![]),
            Expr::Join(a, b) => {
                let (l, r) = (self.e(a, env), self.e(b, env));
                let mut out = Vec::new();
                for x in &l.tuples {
                    for y in &r.tuples {
                        if x.last() == y.first() {
                            out.push([&x[..x.len() - 1], &y[1..]].concat());
                        }
                    }
                }
                Rel::new(l.arity + r.arity - 2, out)
            }
            Expr::Product(a, b) => {
                let (l, r) = (self.e(a, env), self.e(b, env));
                let out = l.tuples.iter().flat_map(|x| r.tuples.iter().map(move |y| [x.clone(), y.clone()].concat())).collect();
                Rel::new(l.arity + r.arity, out)
            }
            Expr::Union(a, b) | Expr::Intersect(a, b) | Expr::Minus(a, b) => {
                let (l, r) = Rel::align(self.e(a, env), self.e(b, env));
                let tuples = match e {
                    Expr::Union(..) => [l.tuples.clone(), r.tuples.clone()].concat(),
                    Expr::Intersect(..) => l.tuples.iter().filter(|t| r.contains(t)).cloned().collect(),
                    _ => l.tuples.iter().filter(|t| !r.contains(t)).cloned().collect(),
                };
                Rel::new(l.arity, tuples)
            }
            Expr::Closure(a) => self.closure(self.e(a, env)),
            Expr::ReflClosure(a) => {
                let c = self.closure(self.e(a, env));
                let iden = self.e(&Expr::Iden, env);
                Rel::new(2, [c.tuples, iden.tuples].concat())
            }
            Expr::Transpose(a) => {
                let r = self.e(a, env);
                Rel::new(2, r.tuples.into_iter().map(|t| vec![t[1].clone(), t[0].clone()]).collect())
            }
        }
    }

    // Union of r, r.r, r.r.r, ... until nothing new appears.
    fn closure(&self, r: Rel) -> Rel {
        let mut acc = Rel::new(2, r.tuples.clone());
        let mut power = acc.clone();
        loop {
            let mut next = Vec::new();
            for x in &power.tuples {
                for y in &r.tuples {
                    if x[1] == y[0] {
                        next.push(vec![x[0].clone(), y[1].clone()]);
                    }
                }
            }
            power = Rel::new(2, next);
            let grown = Rel::new(2, [acc.tuples.clone(), power.tuples.clone()].concat());
            if grown == acc {
                return acc;
            }
            acc = grown;
        }
    }

    fn int(&self, i: &IntExpr, env: &Env) -> i128 {
        match i {
            IntExpr::Literal(n) => *n as i128,
            IntExpr::Card(e) => self.e(e, env).tuples.len() as i128,
        }
    }

    fn f(&self, f: &Formula, env: &mut Env) -> bool {
        match f {
            Formula::True => true,
            Formula::Not(a) => !self.f(a, env),
            Formula::And(a, b) => {
                let (x, y) = (self.f(a, env), self.f(b, env));
                x && y
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.f(a, env), self.f(b, env));
                x || y
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.f(a, env), self.f(b, env));
                !x || y
            }
            Formula::Iff(a, b) => self.f(a, env) == self.f(b, env),
            Formula::Conj(fs) => fs.iter().all(|g| self.f(g, env)),
            Formula::Compare(a, op, b) => {
                let (l, r) = Rel::align(self.e(a, env), self.e(b, env));
                let sub = l.subset_of(&r);
                let eq = sub && r.subset_of(&l);
                match op {
                    CompareOp::In => sub,
                    CompareOp::NotIn => !sub,
                    CompareOp::Eq => eq,
                    CompareOp::NotEq => !eq,
                }
            }
            Formula::IntCompare(a, op, b) => {
                let eq = self.int(a, env) == self.int(b, env);
                match op {
                    IntCompareOp::Eq => eq,
                    IntCompareOp::NotEq => !eq,
                }
            }
            Formula::Mult(q, e) => {
                let r = self.e(e, env);
                let n = r.tuples.len();
                match q {
                    Quantifier::All => r.tuples == self.full(&self.ty(e, env)).tuples,
                    Quantifier::Some => n >= 1,
                    Quantifier::No => n == 0,
                    Quantifier::Lone => n <= 1,
                    Quantifier::One => n == 1,
                }
            }
            Formula::Quant { kind, vars, domain, body } => {
                let dom = self.e(domain, env);
                assert_eq!(dom.arity, 1, "quantifier domain must be a set");
                let ty = self.ty(domain, env).remove(0);
                // Every assignment of domain atoms to the variables.
                let mut assignments: Vec<Vec<String>> = vec![vec![]];
                for _ in vars {
                    assignments = assignments
                        .iter()
                        .flat_map(|p| dom.tuples.iter().map(move |t| [p.clone(), vec![t[0].clone()]].concat()))
                        .collect();
                }
                let total = assignments.len();
                let mut hits = 0;
                for a in assignments {
                    let base = env.len();
                    for (v, atom) in vars.iter().zip(a) {
                        // A variable's type is the sig of its atom, within the domain type.
                        let sig = self.sig_of_atom(&atom).map(str::to_string);
                        debug_assert!(sig.as_ref().is_some_and(|s| ty.contains(s)));
                        env.push((v.clone(), atom, ty.clone()));
                    }
                    if self.f(body, env) {
                        hits += 1;
                    }
                    env.truncate(base);
                }
                match kind {
                    Quantifier::All => hits == total,
                    Quantifier::Some => hits >= 1,
                    Quantifier::No => hits == 0,
                    Quantifier::Lone => hits <= 1,
                    Quantifier::One => hits == 1,
                }
            }
        }
    }
}

/// Random well-typed formulas over a schema. Expressions have arity 1 or 2.
pub struct FormulaGen<'a> {
    schema: &'a Schema,
    sigs: Vec<String>,
    fields: Vec<String>,
    vars: Vec<String>,
    fresh: usize,
}

impl<'a> FormulaGen<'a> {
    pub fn new(schema: &'a Schema) -> Self {
        FormulaGen {
            schema,
            sigs: schema.sigs().iter().map(|s| s.name.clone()).collect(),
            fields: schema.fields().map(|f| f.name.to_string()).collect(),
            vars: Vec::new(),
            fresh: 0,
        }
    }

    pub fn schema(&self) -> &Schema {
        self.schema
    }

    /// A closed formula whose nesting depth is at most `depth`.
    pub fn formula(&mut self, rng: &mut impl Rng, depth: usize) -> Formula {
        self.vars.clear();
        self.fresh = 0;
        self.f(rng, depth.max(1))
    }

    /// An expression of arity 1 or 2 with no free variables.
    pub fn expr(&mut self, rng: &mut impl Rng, arity: usize, depth: usize) -> Expr {
        self.vars.clear();
        self.e(rng, arity, depth.max(1))
    }

    fn f(&mut self, rng: &mut impl Rng, depth: usize) -> Formula {
        let leaf = depth <= 1 || rng.gen_bool(0.25);
        if leaf {
            let sub = depth.saturating_sub(1).clamp(1, 3);
            return match rng.gen_range(0..10) {
                0..=3 => {
                    let arity = rng.gen_range(1..=2);
                    let ops = [CompareOp::In, CompareOp::NotIn, CompareOp::Eq, CompareOp::NotEq];
                    Formula::Compare(self.e(rng, arity, sub), *ops.choose(rng).unwrap(), self.e(rng, arity, sub))
                }
                4..=7 => {
                    let arity = rng.gen_range(1..=2);
                    Formula::Mult(*Quantifier::ALL.choose(rng).unwrap(), self.e(rng, arity, sub))
                }
                8 => {
                    let op = if rng.gen_bool(0.5) { IntCompareOp::Eq } else { IntCompareOp::NotEq };
                    let k = rng.gen_range(1..=2);
                    let a = IntExpr::Card(self.e(rng, k, sub));
                    let b = if rng.gen_bool(0.5) {
                        IntExpr::Literal(rng.gen_range(0..=4))
                    } else {
                        let k = rng.gen_range(1..=2);
                        IntExpr::Card(self.e(rng, k, sub))
                    };
                    Formula::IntCompare(a, op, b)
                }
                _ => Formula::Mult(*Quantifier::ALL.choose(rng).unwrap(), self.e(rng, 2, sub)),
            };
        }
        let d = depth - 1;
        match rng.gen_range(0..8) {
            0 => Formula::not(self.f(rng, d)),
            1 => Formula::and(self.f(rng, d), self.f(rng, d)),
            2 => Formula::or(self.f(rng, d), self.f(rng, d)),
            3 => Formula::implies(self.f(rng, d), self.f(rng, d)),
            4 => Formula::iff(self.f(rng, d), self.f(rng, d)),
            _ => {
                let domain = self.e(rng, 1, 2);
                let n = if rng.gen_bool(0.7) { 1 } else { 2 };
                let names: Vec<String> = (0..n)
                    .map(|_| {
                        self.fresh += 1;
                        format!("x{}", self.fresh)
                    })
                    .collect();
                let base = self.vars.len();
                self.vars.extend(names.iter().cloned());
                let body = self.f(rng, d);
                self.vars.truncate(base);
                Formula::Quant { kind: *Quantifier::ALL.choose(rng).unwrap(), vars: names, domain, body: Box::new(body) }
            }
        }
    }

    fn unary_leaf(&self, rng: &mut impl Rng) -> Expr {
        match rng.gen_range(0..10) {
            0..=3 if !self.vars.is_empty() => Expr::Var(self.vars.choose(rng).unwrap().clone()),
            0..=5 => Expr::Sig(self.sigs.choose(rng).unwrap().clone()),
            6 | 7 => Expr::Univ,
            8 => Expr::None,
            _ => Expr::Sig(self.sigs.choose(rng).unwrap().clone()),
        }
    }

    fn binary_leaf(&self, rng: &mut impl Rng) -> Expr {
        match rng.gen_range(0..10) {
            0..=6 => Expr::Field(self.fields.choose(rng).unwrap().clone()),
            _ => Expr::Iden,
        }
    }

    fn e(&mut self, rng: &mut impl Rng, arity: usize, depth: usize) -> Expr {
        if depth <= 1 || rng.gen_bool(0.3) {
            return if arity == 1 { self.unary_leaf(rng) } else { self.binary_leaf(rng) };
        }
        let d = depth - 1;
        let setop = |g: &mut Self, rng: &mut _, k: usize| {
            let (a, b) = (g.e(rng, arity, d), g.e(rng, arity, d));
            match k {
                0 => Expr::union(a, b),
                1 => Expr::intersect(a, b),
                _ => Expr::minus(a, b),
            }
        };
        if arity == 1 {
            match rng.gen_range(0..5) {
                0 => Expr::join(self.e(rng, 1, d), self.e(rng, 2, d)),
                1 => Expr::join(self.e(rng, 2, d), self.e(rng, 1, d)),
                k => setop(self, rng, k - 2),
            }
        } else {
            match rng.gen_range(0..9) {
                0 => Expr::product(self.e(rng, 1, d), self.e(rng, 1, d)),
                1 => Expr::join(self.e(rng, 2, d), self.e(rng, 2, d)),
                2 => Expr::closure(self.e(rng, 2, d)),
                3 => Expr::refl_closure(self.e(rng, 2, d)),
                4 => Expr::transpose(self.e(rng, 2, d)),
                k => setop(self, rng, (k - 5) % 3),
            }
        }
    }
}
