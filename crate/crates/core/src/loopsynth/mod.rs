//! Loop synthesis from polynomial invariants: templates, the polynomial
//! constraint problem, a small exact solver, and decoding into loops.

pub mod constraints;
pub mod decode;
pub mod solver;
pub mod template;

use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::poly::{Monomial, Polynomial, Rat, Var};

pub use constraints::{build_pcp, gen_c1, gen_c2, set_partitions, C2Case};
pub use decode::{model_to_loop, pack_system, verify_model};
pub use solver::{solve_builtin, solve_builtin_with, Control, SolverConfig};
pub use template::{build_template, SynthesisTemplate, TemplateConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("Unsat: no model within the search space")]
    Unsat,
    #[error("ResourceLimit: search exceeded {0} nodes")]
    ResourceLimit(usize),
    #[error("NonRationalModel: unknown `{0}` has no rational value")]
    NonRationalModel(String),
    #[error("InvalidTemplate: {0}")]
    InvalidTemplate(String),
}

impl SynthError {
    pub fn name(&self) -> &'static str {
        match self {
            SynthError::Unsat => "Unsat",
            SynthError::ResourceLimit(_) => "ResourceLimit",
            SynthError::NonRationalModel(_) => "NonRationalModel",
            SynthError::InvalidTemplate(_) => "InvalidTemplate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    Int,
    Real,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Int => "Int",
            Domain::Real => "Real",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unknown {
    pub var: Var,
    pub domain: Domain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    C1Init,
    C1Shift,
    C2,
    Distinctness,
    Case,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::C1Init => "C1-init",
            Tag::C1Shift => "C1-shift",
            Tag::C2 => "C2",
            Tag::Distinctness => "distinctness",
            Tag::Case => "case",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub poly: Polynomial,
    pub tag: Tag,
}

impl Constraint {
    pub fn new(poly: Polynomial, tag: Tag) -> Self {
        Constraint { poly, tag }
    }
}

/// One conjunctive branch: all shared constraints plus those of a partition
/// of the base monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub equalities: Vec<Constraint>,
    pub disequalities: Vec<Constraint>,
    /// Blocks of base monomials (over exponential variables) sharing a value.
    pub partition: Vec<Vec<Monomial>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pcp {
    pub unknowns: Vec<Unknown>,
    pub cases: Vec<Case>,
}

impl Pcp {
    pub fn to_json(&self) -> Value {
        let unknowns: Vec<Value> = self
            .unknowns
            .iter()
            .map(|u| json!({"name": u.var.name(), "domain": u.domain.as_str()}))
            .collect();
        let cases: Vec<Value> = self
            .cases
            .iter()
            .map(|c| {
                let tags: Vec<String> =
                    c.equalities.iter().chain(&c.disequalities).map(|k| k.tag.to_string()).collect();
                json!({
                    "equalities": c.equalities.iter().map(|k| k.poly.to_string()).collect::<Vec<_>>(),
                    "disequalities": c.disequalities.iter().map(|k| k.poly.to_string()).collect::<Vec<_>>(),
                    "tags": tags,
                })
            })
            .collect();
        json!({"unknowns": unknowns, "cases": cases})
    }
}

/// Values for every unknown, found in case `case`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub case: usize,
    pub values: Vec<(Var, Rat)>,
}

impl Model {
    pub fn get(&self, v: &Var) -> Option<&Rat> {
        self.values.iter().find(|(w, _)| w == v).map(|(_, r)| r)
    }

    pub fn env(&self) -> HashMap<Var, Rat> {
        self.values.iter().cloned().collect()
    }
}
