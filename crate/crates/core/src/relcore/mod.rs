//! Schemas, universes, instances and the formula/expression ASTs.

mod arity;
mod ast;
mod instance;
mod schema;
mod tuples;

pub use arity::{arity_of, check_formula, VarScope};
pub use ast::{CompareOp, Expr, Formula, IntCompareOp, IntExpr, Quantifier};
pub use instance::{
    enumerate_instances, enumerate_universes, instance_count, Instance, InstanceData, InstanceIter,
    Universe,
};
pub use schema::{FieldDecl, FieldInfo, Multiplicity, SigDecl, Schema};
pub use tuples::{Atom, TupleSet, MAX_TUPLE_SPACE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown sig `{0}`")]
    UnknownSig(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("universe does not match schema")]
    UniverseMismatch,
    #[error("tuple of `{0}` outside its sig bounds")]
    BadTuple(String),
    #[error("field `{0}` violates its multiplicity")]
    Multiplicity(String),
    #[error("schema syntax: {0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unresolvable name `{0}`")]
    UnknownName(String),
    #[error("`{0}` applied to an expression of arity {1}; it needs a binary relation")]
    NotBinary(&'static str, usize),
    #[error("cannot join arities {0} and {1}")]
    JoinArity(usize, usize),
    #[error("operands of `{op}` have arities {left} and {right}")]
    ArityMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
    #[error("quantifier domain has arity {0}; only sets of atoms can be quantified over")]
    QuantDomain(usize),
    #[error("expression too large to evaluate")]
    TooLarge,
}
