use std::collections::HashMap;

use num_traits::Zero;

use super::{LoopError, LoopProgram, Stmt};
use crate::linalg::{mat_vec, Matrix};
use crate::poly::{Monomial, Polynomial, Rat, Var};

/// Simultaneous affine update `x(n+1) = A x(n) + b` with `x(0) = init`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceSystem {
    pub vars: Vec<Var>,
    pub matrix: Matrix,
    pub offset: Vec<Rat>,
    /// Polynomials over parameters; constants for a concrete start state.
    pub init: Vec<Polynomial>,
}

impl RecurrenceSystem {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn numeric_init(&self) -> Option<Vec<Rat>> {
        self.init.iter().map(Polynomial::as_constant).collect()
    }

    pub fn parameters(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for p in &self.init {
            for v in p.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn step(&self, state: &[Rat]) -> Vec<Rat> {
        mat_vec(&self.matrix, state)
            .into_iter()
            .zip(&self.offset)
            .map(|(x, b)| x + b)
            .collect()
    }

    pub fn step_symbolic(&self, state: &[Polynomial]) -> Vec<Polynomial> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| {
                let mut acc = Polynomial::constant(b.clone());
                for (a, s) in row.iter().zip(state) {
                    if !a.is_zero() {
                        acc += s.scale(a);
                    }
                }
                acc
            })
            .collect()
    }

    /// `A x + b` as polynomials over the program variables.
    pub fn update_polynomials(&self) -> Vec<Polynomial> {
        let xs: Vec<Polynomial> = self.vars.iter().map(Polynomial::var).collect();
        self.step_symbolic(&xs)
    }

    /// Exact state after `n` steps.
    pub fn interpret(&self, n: usize) -> Result<Vec<Rat>, LoopError> {
        let mut s = self.numeric_init().ok_or_else(|| {
            LoopError::SymbolicInitial(self.parameters().iter().map(|v| v.name().to_string()).collect())
        })?;
        for _ in 0..n {
            s = self.step(&s);
        }
        Ok(s)
    }

    /// States `0..=n`, symbolic in the parameters.
    pub fn trajectory_symbolic(&self, n: usize) -> Vec<Vec<Polynomial>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut s = self.init.clone();
        out.push(s.clone());
        for _ in 0..n {
            s = self.step_symbolic(&s);
            out.push(s.clone());
        }
        out
    }
}

/// Forward-substitutes the sequential body into one simultaneous affine map.
pub fn to_simultaneous(l: &LoopProgram) -> RecurrenceSystem {
    let mut current: HashMap<Var, Polynomial> =
        l.vars.iter().map(|v| (v.clone(), Polynomial::var(v))).collect();
    for stmt in &l.body {
        match stmt {
            Stmt::Assign { lhs, rhs } => {
                let new = rhs.substitute(&current);
                current.insert(lhs.clone(), new);
            }
            Stmt::Parallel { lhs, rhs } => {
                let new: Vec<Polynomial> = rhs.iter().map(|r| r.substitute(&current)).collect();
                for (v, p) in lhs.iter().zip(new) {
                    current.insert(v.clone(), p);
                }
            }
        }
    }
    let matrix = l
        .vars
        .iter()
        .map(|vi| {
            let p = &current[vi];
            l.vars.iter().map(|vj| p.coeff(&Monomial::var(vj))).collect()
        })
        .collect();
    let offset = l.vars.iter().map(|v| current[v].constant_term()).collect();
    RecurrenceSystem { vars: l.vars.clone(), matrix, offset, init: l.init.clone() }
}
