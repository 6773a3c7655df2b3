use smallvec::SmallVec;

/// Global atom index within a universe.
pub type Atom = u32;

/// Largest tuple space (atoms^arity) a [`TupleSet`] will allocate.
pub const MAX_TUPLE_SPACE: usize = 1 << 22;

/// A set of equal-length atom tuples over a universe of `n` atoms, stored as
/// a dense bitset of `n^arity` bits in lexicographic tuple order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleSet {
    arity: usize,
    atoms: usize,
    bits: SmallVec<[u64; 2]>,
}

fn space(atoms: usize, arity: usize) -> Option<usize> {
    let mut s: usize = 1;
    for _ in 0..arity {
        s = s.checked_mul(atoms)?;
    }
    (s <= MAX_TUPLE_SPACE).then_some(s)
}

impl TupleSet {
    /// Empty set; `None` when the tuple space would be too large.
    pub fn try_empty(arity: usize, atoms: usize) -> Option<Self> {
        let s = space(atoms, arity)?;
        Some(TupleSet {
            arity,
            atoms,
            bits: smallvec::smallvec![0; s.div_ceil(64)],
        })
    }

    pub fn empty(arity: usize, atoms: usize) -> Self {
        Self::try_empty(arity, atoms).expect("tuple space too large")
    }

    pub fn from_tuples<I, T>(arity: usize, atoms: usize, tuples: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[Atom]>,
    {
        let mut s = Self::empty(arity, atoms);
        for t in tuples {
            s.insert(t.as_ref());
        }
        s
    }

    /// Unary set of the given atoms.
    pub fn unary(atoms: usize, members: impl IntoIterator<Item = Atom>) -> Self {
        let mut s = Self::empty(1, atoms);
        for a in members {
            s.set_bit(a as usize);
        }
        s
    }

    pub fn identity(atoms: usize) -> Self {
        let mut s = Self::empty(2, atoms);
        for a in 0..atoms {
            s.set_bit(a * atoms + a);
        }
        s
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn universe_size(&self) -> usize {
        self.atoms
    }

    fn index(&self, tuple: &[Atom]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        tuple
            .iter()
            .fold(0usize, |acc, &a| acc * self.atoms + a as usize)
    }

    fn decode(&self, mut index: usize) -> SmallVec<[Atom; 4]> {
        let mut t: SmallVec<[Atom; 4]> = smallvec::smallvec![0; self.arity];
        for slot in t.iter_mut().rev() {
            *slot = (index % self.atoms) as Atom;
            index /= self.atoms;
        }
        t
    }

    pub(crate) fn set_bit(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn bit(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, tuple: &[Atom]) {
        assert!(tuple.iter().all(|&a| (a as usize) < self.atoms));
        let i = self.index(tuple);
        self.set_bit(i);
    }

    pub fn contains(&self, tuple: &[Atom]) -> bool {
        tuple.len() == self.arity
            && tuple.iter().all(|&a| (a as usize) < self.atoms)
            && self.bit(self.index(tuple))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Raw tuple indices in ascending order.
    pub(crate) fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + tz)
            })
        })
    }

    /// Tuples in lexicographic order.
    pub fn tuples(&self) -> impl Iterator<Item = SmallVec<[Atom; 4]>> + '_ {
        self.indices().map(|i| self.decode(i))
    }

    /// Unary members; panics on non-unary sets.
    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        assert_eq!(self.arity, 1);
        self.indices().map(|i| i as Atom)
    }

    // An empty operand of a different arity is treated as the empty set of
    // the other operand's arity, which is how `none` mixes with relations.
    fn aligned<'a>(&'a self, other: &'a TupleSet) -> Option<(usize, &'a TupleSet, &'a TupleSet)> {
        if self.arity == other.arity {
            Some((self.arity, self, other))
        } else if other.is_empty() || self.is_empty() {
            None
        } else {
            panic!("arity mismatch: {} vs {}", self.arity, other.arity)
        }
    }

    pub fn union(&self, other: &TupleSet) -> TupleSet {
        match self.aligned(other) {
            Some((_, a, b)) => {
                let mut out = a.clone();
                for (x, y) in out.bits.iter_mut().zip(&b.bits) {
                    *x |= y;
                }
                out
            }
            None if self.is_empty() => other.clone(),
            None => self.clone(),
        }
    }

    pub fn intersection(&self, other: &TupleSet) -> TupleSet {
        match self.aligned(other) {
            Some((_, a, b)) => {
                let mut out = a.clone();
                for (x, y) in out.bits.iter_mut().zip(&b.bits) {
                    *x &= y;
                }
                out
            }
            None if self.is_empty() => self.clone(),
            None => other.clone(),
        }
    }

    pub fn difference(&self, other: &TupleSet) -> TupleSet {
        match self.aligned(other) {
            Some((_, a, b)) => {
                let mut out = a.clone();
                for (x, y) in out.bits.iter_mut().zip(&b.bits) {
                    *x &= !y;
                }
                out
            }
            None => self.clone(),
        }
    }

    pub fn is_subset(&self, other: &TupleSet) -> bool {
        match self.aligned(other) {
            Some((_, a, b)) => a.bits.iter().zip(&b.bits).all(|(x, y)| x & !y == 0),
            None => self.is_empty(),
        }
    }

    pub fn set_eq(&self, other: &TupleSet) -> bool {
        match self.aligned(other) {
            Some((_, a, b)) => a.bits == b.bits,
            None => self.is_empty() && other.is_empty(),
        }
    }

    pub fn transpose(&self) -> TupleSet {
        assert_eq!(self.arity, 2);
        let n = self.atoms;
        let mut out = TupleSet::empty(2, n);
        for i in self.indices() {
            out.set_bit((i % n) * n + i / n);
        }
        out
    }

    /// Cartesian product; `None` if the result would be too large.
    pub fn product(&self, other: &TupleSet) -> Option<TupleSet> {
        let mut out = TupleSet::try_empty(self.arity + other.arity, self.atoms)?;
        let width = space(self.atoms, other.arity)?;
        for i in self.indices() {
            for j in other.indices() {
                out.set_bit(i * width + j);
            }
        }
        Some(out)
    }

    /// Relational composition; both arities must be ≥ 1 and sum to ≥ 3.
    pub fn join(&self, other: &TupleSet) -> Option<TupleSet> {
        let arity = (self.arity + other.arity).checked_sub(2).filter(|&a| a >= 1)?;
        let n = self.atoms;
        let mut out = TupleSet::try_empty(arity, n)?;
        if n == 0 {
            return Some(out);
        }
        let tail = space(n, other.arity - 1)?;
        for i in self.indices() {
            let (prefix, last) = (i / n, i % n);
            let lo = last * tail;
            for j in other.indices().skip_while(|&j| j < lo).take_while(|&j| j < lo + tail) {
                out.set_bit(prefix * tail + (j - lo));
            }
        }
        Some(out)
    }

    /// Irreflexive transitive closure of a binary relation (Warshall).
    pub fn closure(&self) -> TupleSet {
        assert_eq!(self.arity, 2);
        let n = self.atoms;
        let mut out = self.clone();
        for k in 0..n {
            for i in 0..n {
                if out.bit(i * n + k) {
                    for j in 0..n {
                        if out.bit(k * n + j) {
                            out.set_bit(i * n + j);
                        }
                    }
                }
            }
        }
        out
    }
}
