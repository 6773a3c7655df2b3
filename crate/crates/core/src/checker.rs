//! Bounded satisfiability and equivalence by exhaustive instance sweep.

use serde::{Deserialize, Serialize};

use crate::eval::{eval_formula, Env};
use crate::parser::{parse_candidate, ParseError};
use crate::relcore::{enumerate_instances, enumerate_universes, Formula, Instance, Schema};

/// Search bound: every sig gets 0..=max_scope atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub max_scope: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { max_scope: 3 }
    }
}

impl CheckConfig {
    pub fn with_scope(max_scope: usize) -> Self {
        CheckConfig { max_scope }
    }
}

/// Every instance within scope, smallest universe first.
pub fn all_instances<'a>(schema: &'a Schema, cfg: &CheckConfig) -> impl Iterator<Item = Instance> + 'a {
    enumerate_universes(schema, cfg.max_scope)
        .into_iter()
        .flat_map(move |u| enumerate_instances(schema, &u).collect::<Vec<_>>())
}

fn holds(f: &Formula, inst: &Instance) -> bool {
    eval_formula(f, inst, &Env::new()).unwrap_or_else(|e| panic!("ill-typed formula `{f}`: {e}"))
}

/// The first `limit` satisfying instances in enumeration order.
///
/// # Panics
/// If `f` is ill-typed; parsed formulas never are.
pub fn find_instances(f: &Formula, schema: &Schema, cfg: &CheckConfig, limit: usize) -> Vec<Instance> {
    all_instances(schema, cfg).filter(|i| holds(f, i)).take(limit).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    Counterexample {
        instance: Instance,
        p_value: bool,
        q_value: bool,
    },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

/// Whether `p` and `q` agree on every instance within scope; otherwise the
/// first instance where they differ.
pub fn check_equivalence(p: &Formula, q: &Formula, schema: &Schema, cfg: &CheckConfig) -> Equivalence {
    for instance in all_instances(schema, cfg) {
        let (p_value, q_value) = (holds(p, &instance), holds(q, &instance));
        if p_value != q_value {
            return Equivalence::Counterexample { instance, p_value, q_value };
        }
    }
    Equivalence::Equivalent
}

/// Outcome of validating one candidate against the ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Correct,
    SyntaxError(ParseError),
    Wrong(Instance),
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Correct => VerdictKind::Correct,
            Verdict::SyntaxError(_) => VerdictKind::SyntaxError,
            Verdict::Wrong(_) => VerdictKind::Wrong,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictKind {
    Correct,
    SyntaxError,
    Wrong,
}

pub fn classify(ground_truth: &Formula, candidate: &str, schema: &Schema, cfg: &CheckConfig) -> Verdict {
    match parse_candidate(candidate, schema) {
        Err(e) => Verdict::SyntaxError(e),
        Ok(f) => match check_equivalence(ground_truth, &f, schema, cfg) {
            Equivalence::Equivalent => Verdict::Correct,
            Equivalence::Counterexample { instance, .. } => Verdict::Wrong(instance),
        },
    }
}

/// Truth value of `f` on every instance within scope, in enumeration order.
pub fn truth_table(f: &Formula, schema: &Schema, cfg: &CheckConfig) -> Vec<bool> {
    all_instances(schema, cfg).map(|i| holds(f, &i)).collect()
}

/// Groups formulas into scope-bounded equivalence classes, as lists of
/// input indices. Classes are ordered by their first member.
pub fn semantic_partition(formulas: &[Formula], schema: &Schema, cfg: &CheckConfig) -> Vec<Vec<usize>> {
    if formulas.is_empty() {
        return Vec::new();
    }
    // Evaluate each formula once per instance; equal truth tables are
    // exactly equivalence within scope.
    let instances: Vec<Instance> = all_instances(schema, cfg).collect();
    let mut tables: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
    for (i, f) in formulas.iter().enumerate() {
        let t: Vec<bool> = instances.iter().map(|inst| holds(f, inst)).collect();
        match tables.iter_mut().find(|(u, _)| *u == t) {
            Some((_, class)) => class.push(i),
            None => tables.push((t, vec![i])),
        }
    }
    tables.into_iter().map(|(_, c)| c).collect()
}

/// A ground truth evaluated once over the whole scope, for checking many
/// candidates against it.
#[derive(Debug, Clone)]
pub struct Reference {
    instances: Vec<Instance>,
    table: Vec<bool>,
}

impl Reference {
    pub fn new(ground_truth: &Formula, schema: &Schema, cfg: &CheckConfig) -> Self {
        let instances: Vec<Instance> = all_instances(schema, cfg).collect();
        let table = instances.iter().map(|i| holds(ground_truth, i)).collect();
        Reference { instances, table }
    }

    /// Same result as [`check_equivalence`] against the ground truth.
    pub fn check(&self, candidate: &Formula) -> Equivalence {
        for (instance, &p_value) in self.instances.iter().zip(&self.table) {
            let q_value = holds(candidate, instance);
            if p_value != q_value {
                return Equivalence::Counterexample { instance: instance.clone(), p_value, q_value };
            }
        }
        Equivalence::Equivalent
    }

    pub fn classify(&self, candidate: &str, schema: &Schema) -> Verdict {
        match parse_candidate(candidate, schema) {
            Err(e) => Verdict::SyntaxError(e),
            Ok(f) => match self.check(&f) {
                Equivalence::Equivalent => Verdict::Correct,
                Equivalence::Counterexample { instance, .. } => Verdict::Wrong(instance),
            },
        }
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }
}
