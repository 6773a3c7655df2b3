use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::schema::{Multiplicity, Schema};
use super::tuples::{Atom, TupleSet};
use super::RelError;

/// Atom counts per sig, aligned with the schema's sig order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Universe {
    sigs: Vec<(String, usize)>,
}

impl Universe {
    pub fn new(schema: &Schema, counts: &[usize]) -> Result<Self, RelError> {
        if counts.len() != schema.sigs().len() {
            return Err(RelError::UniverseMismatch);
        }
        Ok(Universe {
            sigs: schema
                .sigs()
                .iter()
                .zip(counts)
                .map(|(s, &c)| (s.name.clone(), c))
                .collect(),
        })
    }

    /// Same atom count for every sig.
    pub fn uniform(schema: &Schema, count: usize) -> Self {
        Self::new(schema, &vec![count; schema.sigs().len()]).expect("aligned")
    }

    pub fn counts(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.sigs.iter().map(|(n, c)| (n.as_str(), *c))
    }

    pub fn sig_index(&self, name: &str) -> Option<usize> {
        self.sigs.iter().position(|(n, _)| n == name)
    }

    pub fn sig_count(&self) -> usize {
        self.sigs.len()
    }

    pub fn count(&self, sig: usize) -> usize {
        self.sigs[sig].1
    }

    pub fn atom_count(&self) -> usize {
        self.sigs.iter().map(|(_, c)| c).sum()
    }

    /// Global atom range of a sig.
    pub fn atoms_of(&self, sig: usize) -> Range<Atom> {
        let start: usize = self.sigs[..sig].iter().map(|(_, c)| c).sum();
        start as Atom..(start + self.sigs[sig].1) as Atom
    }

    pub fn sig_of(&self, atom: Atom) -> usize {
        let mut acc = 0usize;
        for (i, (_, c)) in self.sigs.iter().enumerate() {
            acc += c;
            if (atom as usize) < acc {
                return i;
            }
        }
        panic!("atom {atom} outside universe")
    }

    /// `<SigName><index>`, 0-based within the sig.
    pub fn atom_name(&self, atom: Atom) -> String {
        let sig = self.sig_of(atom);
        let local = atom - self.atoms_of(sig).start;
        format!("{}{}", self.sigs[sig].0, local)
    }

    pub fn atom_by_name(&self, name: &str) -> Option<Atom> {
        (0..self.atom_count() as Atom).find(|&a| self.atom_name(a) == name)
    }

    pub fn sig_set(&self, sig: usize) -> TupleSet {
        TupleSet::unary(self.atom_count(), self.atoms_of(sig))
    }

    pub fn univ(&self) -> TupleSet {
        TupleSet::unary(self.atom_count(), 0..self.atom_count() as Atom)
    }
}

/// Every universe with 0..=max_scope atoms per sig, lexicographic in the
/// per-sig counts (first sig most significant).
pub fn enumerate_universes(schema: &Schema, max_scope: usize) -> Vec<Universe> {
    let k = schema.sigs().len();
    let mut out = Vec::new();
    let mut counts = vec![0usize; k];
    loop {
        out.push(Universe::new(schema, &counts).expect("aligned"));
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if counts[i] < max_scope {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
        }
    }
}

/// A concrete valuation of every field over a universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    universe: Universe,
    // Aligned with the schema's field order.
    names: Vec<String>,
    // (source sig, target sig) per field
    field_sigs: Vec<(usize, usize)>,
    relations: Vec<TupleSet>,
}

impl Instance {
    /// Checks tuple bounds and field multiplicities.
    pub fn new(schema: &Schema, universe: Universe, relations: Vec<TupleSet>) -> Result<Self, RelError> {
        if relations.len() != schema.field_count() {
            return Err(RelError::UniverseMismatch);
        }
        let n = universe.atom_count();
        for (field, rel) in schema.fields().zip(&relations) {
            if rel.arity() != 2 || rel.universe_size() != n {
                return Err(RelError::BadTuple(field.name.to_string()));
            }
            let src = universe.atoms_of(field.source);
            let tgt = universe.atoms_of(field.target);
            for t in rel.tuples() {
                if !src.contains(&t[0]) || !tgt.contains(&t[1]) {
                    return Err(RelError::BadTuple(field.name.to_string()));
                }
            }
            let bound_ok = |pred: fn(usize) -> bool| {
                src.clone()
                    .all(|a| pred(rel.tuples().filter(|t| t[0] == a).count()))
            };
            let ok = match field.multiplicity {
                Multiplicity::Set => true,
                Multiplicity::One => bound_ok(|c| c == 1),
                Multiplicity::Lone => bound_ok(|c| c <= 1),
            };
            if !ok {
                return Err(RelError::Multiplicity(field.name.to_string()));
            }
        }
        Ok(Instance {
            universe,
            names: schema.fields().map(|f| f.name.to_string()).collect(),
            field_sigs: schema.fields().map(|f| (f.source, f.target)).collect(),
            relations,
        })
    }

    /// Builds an instance from atom names, e.g. `("r", &[("S0", "S1")])`.
    /// Fields not mentioned are empty.
    pub fn from_named(
        schema: &Schema,
        universe: Universe,
        relations: &[(&str, &[(&str, &str)])],
    ) -> Result<Self, RelError> {
        let n = universe.atom_count();
        let mut rels = vec![TupleSet::empty(2, n); schema.field_count()];
        for (name, pairs) in relations {
            let f = schema
                .field(name)
                .ok_or_else(|| RelError::UnknownField(name.to_string()))?;
            for (a, b) in pairs.iter() {
                let a = universe
                    .atom_by_name(a)
                    .ok_or_else(|| RelError::UnknownAtom(a.to_string()))?;
                let b = universe
                    .atom_by_name(b)
                    .ok_or_else(|| RelError::UnknownAtom(b.to_string()))?;
                rels[f.index].insert(&[a, b]);
            }
        }
        Instance::new(schema, universe, rels)
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn relation(&self, field: usize) -> &TupleSet {
        &self.relations[field]
    }

    pub fn relation_by_name(&self, name: &str) -> Option<&TupleSet> {
        self.field_index(name).map(|i| &self.relations[i])
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Source and target sig indices of a field.
    pub fn field_sigs(&self, field: usize) -> (usize, usize) {
        self.field_sigs[field]
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &TupleSet)> + '_ {
        self.names.iter().map(String::as_str).zip(&self.relations)
    }

    /// Plain data view with atom names, used for JSON records.
    pub fn to_data(&self) -> InstanceData {
        let u = &self.universe;
        InstanceData {
            universe: u.counts().map(|(n, c)| (n.to_string(), c)).collect(),
            relations: self
                .relations()
                .map(|(name, rel)| {
                    let tuples = rel
                        .tuples()
                        .map(|t| t.iter().map(|&a| u.atom_name(a)).collect())
                        .collect();
                    (name.to_string(), tuples)
                })
                .collect(),
        }
    }

    pub fn from_data(schema: &Schema, data: &InstanceData) -> Result<Self, RelError> {
        let counts: Vec<usize> = schema
            .sigs()
            .iter()
            .map(|s| data.universe.get(&s.name).copied().unwrap_or(0))
            .collect();
        let universe = Universe::new(schema, &counts)?;
        let owned: Vec<(String, Vec<(String, String)>)> = data
            .relations
            .iter()
            .map(|(name, tuples)| {
                let pairs = tuples
                    .iter()
                    .map(|t| match t.as_slice() {
                        [a, b] => Ok((a.clone(), b.clone())),
                        _ => Err(RelError::BadTuple(name.clone())),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((name.clone(), pairs))
            })
            .collect::<Result<_, RelError>>()?;
        let borrowed: Vec<Vec<(&str, &str)>> = owned
            .iter()
            .map(|(_, ps)| ps.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect())
            .collect();
        let rels: Vec<(&str, &[(&str, &str)])> = owned
            .iter()
            .zip(&borrowed)
            .map(|((n, _), ps)| (n.as_str(), ps.as_slice()))
            .collect();
        Instance::from_named(schema, universe, &rels)
    }
}

impl fmt::Display for Instance {
    /// ```text
    /// S = {S0, S1}
    /// r = {S0->S1}
    /// ```
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = &self.universe;
        let mut lines = Vec::new();
        for (i, (name, _)) in u.counts().enumerate() {
            let atoms: Vec<String> = u.atoms_of(i).map(|a| u.atom_name(a)).collect();
            lines.push(format!("{name} = {{{}}}", atoms.join(", ")));
        }
        for (name, rel) in self.relations() {
            let tuples: Vec<String> = rel
                .tuples()
                .map(|t| {
                    t.iter()
                        .map(|&a| u.atom_name(a))
                        .collect::<Vec<_>>()
                        .join("->")
                })
                .collect();
            lines.push(format!("{name} = {{{}}}", tuples.join(", ")));
        }
        f.write_str(&lines.join("\n"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceData {
    pub universe: BTreeMap<String, usize>,
    pub relations: BTreeMap<String, Vec<Vec<String>>>,
}

/// Every valuation of the schema's fields over `universe`, in a fixed order:
/// the first field varies slowest; a `set` field walks the subsets of
/// source×target by bitmask (bit i = i-th pair in lexicographic order); a
/// `one`/`lone` field walks per-source-atom choices like an odometer.
pub fn enumerate_instances<'a>(schema: &'a Schema, universe: &Universe) -> InstanceIter<'a> {
    let n = universe.atom_count();
    let fields = schema
        .fields()
        .map(|f| {
            let src: Vec<Atom> = universe.atoms_of(f.source).collect();
            let tgt: Vec<Atom> = universe.atoms_of(f.target).collect();
            FieldSpace::new(f.multiplicity, src, tgt, n)
        })
        .collect::<Vec<_>>();
    let exhausted = fields.iter().any(|f| f.size() == Some(0));
    InstanceIter {
        schema,
        universe: universe.clone(),
        state: vec![0; fields.len()],
        fields,
        done: exhausted,
    }
}

/// Number of instances [`enumerate_instances`] yields, if it fits in a u128.
pub fn instance_count(schema: &Schema, universe: &Universe) -> Option<u128> {
    let n = universe.atom_count();
    schema.fields().try_fold(1u128, |acc, f| {
        let src: Vec<Atom> = universe.atoms_of(f.source).collect();
        let tgt: Vec<Atom> = universe.atoms_of(f.target).collect();
        acc.checked_mul(FieldSpace::new(f.multiplicity, src, tgt, n).size()?)
    })
}

#[derive(Debug, Clone)]
struct FieldSpace {
    mult: Multiplicity,
    src: Vec<Atom>,
    tgt: Vec<Atom>,
    atoms: usize,
}

impl FieldSpace {
    fn new(mult: Multiplicity, src: Vec<Atom>, tgt: Vec<Atom>, atoms: usize) -> Self {
        FieldSpace { mult, src, tgt, atoms }
    }

    // Choices per source atom for one/lone.
    fn radix(&self) -> u128 {
        match self.mult {
            Multiplicity::Set => 2,
            Multiplicity::One => self.tgt.len() as u128,
            Multiplicity::Lone => self.tgt.len() as u128 + 1,
        }
    }

    fn digits(&self) -> u32 {
        match self.mult {
            Multiplicity::Set => (self.src.len() * self.tgt.len()) as u32,
            _ => self.src.len() as u32,
        }
    }

    fn size(&self) -> Option<u128> {
        self.radix().checked_pow(self.digits())
    }

    fn valuation(&self, mut code: u128) -> TupleSet {
        let mut rel = TupleSet::empty(2, self.atoms);
        match self.mult {
            Multiplicity::Set => {
                let w = self.tgt.len();
                for i in 0..self.digits() as usize {
                    if code & 1 == 1 {
                        rel.insert(&[self.src[i / w], self.tgt[i % w]]);
                    }
                    code >>= 1;
                }
            }
            Multiplicity::One | Multiplicity::Lone => {
                let radix = self.radix();
                let offset = u128::from(self.mult == Multiplicity::Lone);
                // Most significant digit = first source atom.
                let mut digits = vec![0u128; self.src.len()];
                for d in digits.iter_mut().rev() {
                    *d = code % radix;
                    code /= radix;
                }
                for (a, d) in self.src.iter().zip(digits) {
                    if d >= offset {
                        rel.insert(&[*a, self.tgt[(d - offset) as usize]]);
                    }
                }
            }
        }
        rel
    }
}

pub struct InstanceIter<'a> {
    schema: &'a Schema,
    universe: Universe,
    fields: Vec<FieldSpace>,
    state: Vec<u128>,
    done: bool,
}

impl Iterator for InstanceIter<'_> {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        if self.done {
            return None;
        }
        let rels = self
            .fields
            .iter()
            .zip(&self.state)
            .map(|(f, &code)| f.valuation(code))
            .collect();
        let inst = Instance {
            universe: self.universe.clone(),
            names: self.schema.fields().map(|f| f.name.to_string()).collect(),
            field_sigs: self.schema.fields().map(|f| (f.source, f.target)).collect(),
            relations: rels,
        };
        // Advance the odometer, last field fastest.
        let mut i = self.fields.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            let size = self.fields[i].size().expect("enumerable field");
            if self.state[i] + 1 < size {
                self.state[i] += 1;
                break;
            }
            self.state[i] = 0;
        }
        Some(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn s_r() -> Schema {
        Schema::single("S", "r")
    }

    #[test]
    fn universe_counts() {
        let one = s_r();
        let sizes: Vec<usize> = enumerate_universes(&one, 3).iter().map(|u| u.atom_count()).collect();
        assert_eq!(sizes, vec![0, 1, 2, 3]);
        assert_eq!(enumerate_universes(&one, 0).len(), 1);
        let two = Schema::parse("sig A { f: set B } sig B {}").unwrap();
        let us = enumerate_universes(&two, 2);
        assert_eq!(us.len(), 9);
        let counts: Vec<(usize, usize)> = us.iter().map(|u| (u.count(0), u.count(1))).collect();
        assert_eq!(counts[..4], [(0, 0), (0, 1), (0, 2), (1, 0)]);
    }

    #[test]
    fn set_field_instance_counts_and_uniqueness() {
        let schema = s_r();
        for (n, expected) in [(0usize, 1usize), (1, 2), (2, 16), (3, 512)] {
            let u = Universe::uniform(&schema, n);
            let all: Vec<Instance> = enumerate_instances(&schema, &u).collect();
            assert_eq!(all.len(), expected);
            let distinct: HashSet<_> = all.iter().cloned().collect();
            assert_eq!(distinct.len(), expected);
            assert_eq!(instance_count(&schema, &u), Some(expected as u128));
        }
    }

    #[test]
    fn first_instance_is_empty_relation() {
        let schema = s_r();
        let u = Universe::uniform(&schema, 2);
        let first = enumerate_instances(&schema, &u).next().unwrap();
        assert!(first.relation(0).is_empty());
        assert_eq!(first.to_string(), "S = {S0, S1}\nr = {}");
    }

    #[test]
    fn one_and_lone_fields_respect_multiplicity() {
        let schema = Schema::parse("sig S { f: one S, g: lone S }").unwrap();
        let u = Universe::uniform(&schema, 2);
        let all: Vec<Instance> = enumerate_instances(&schema, &u).collect();
        // one: 2^2 choices, lone: 3^2 choices
        assert_eq!(all.len(), 4 * 9);
        for inst in &all {
            Instance::new(&schema, inst.universe().clone(), vec![inst.relation(0).clone(), inst.relation(1).clone()])
                .expect("valid instance");
        }
        // `one` over an empty target with a nonempty source has no valuation.
        let empty_target = Schema::parse("sig A { f: one B } sig B {}").unwrap();
        let u = Universe::new(&empty_target, &[1, 0]).unwrap();
        assert_eq!(enumerate_instances(&empty_target, &u).count(), 0);
    }

    #[test]
    fn named_construction_validates() {
        let schema = Schema::single("Node", "link");
        let u = Universe::uniform(&schema, 3);
        let inst = Instance::from_named(&schema, u.clone(), &[("link", &[("Node0", "Node1")])]).unwrap();
        assert_eq!(inst.to_string(), "Node = {Node0, Node1, Node2}\nlink = {Node0->Node1}");
        assert!(Instance::from_named(&schema, u.clone(), &[("link", &[("Node0", "Node7")])]).is_err());
        let data = inst.to_data();
        assert_eq!(Instance::from_data(&schema, &data).unwrap(), inst);

        let f = Schema::parse("sig S { f: lone S }").unwrap();
        let u = Universe::uniform(&f, 2);
        let bad = Instance::from_named(&f, u, &[("f", &[("S0", "S0"), ("S0", "S1")])]);
        assert!(matches!(bad, Err(RelError::Multiplicity(_))));
    }
}
