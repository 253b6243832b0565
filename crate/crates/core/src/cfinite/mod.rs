//! Closed forms of affine recurrence systems with rational eigenvalues.

pub mod charpoly;
pub mod lattice;

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{inverse, Matrix};
use crate::loopfront::RecurrenceSystem;
use crate::poly::{fmt_rat, fresh_name, Monomial, Polynomial, Rat, Var, VarKind};

pub use charpoly::{char_poly, CharPoly, UniPoly};
pub use lattice::exponent_relations;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CfiniteError {
    #[error("IrrationalEigenvalue: characteristic polynomial has the factor {0} without rational roots")]
    IrrationalEigenvalue(String),
    #[error("SingularSampleMatrix: sampled states do not determine the closed form")]
    SingularSampleMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSystem {
    pub counter: Var,
    /// Distinct eigenvalues other than 0 and 1, ascending.
    pub roots: Vec<Rat>,
    /// `exp_vars[j]` stands for `roots[j]^n`.
    pub exp_vars: Vec<Var>,
    pub vars: Vec<Var>,
    pub forms: Vec<Polynomial>,
    pub relations: Vec<Polynomial>,
    pub valid_from: usize,
    /// All eigenvalues of the homogenized matrix with multiplicities.
    pub eigenvalues: Vec<(Rat, usize)>,
}

impl ClosedFormSystem {
    pub fn form(&self, v: &Var) -> Option<&Polynomial> {
        self.vars.iter().position(|w| w == v).map(|i| &self.forms[i])
    }

    fn exp_substitution(&self, n: usize) -> HashMap<Var, Polynomial> {
        let mut sigma: HashMap<Var, Polynomial> = self
            .exp_vars
            .iter()
            .zip(&self.roots)
            .map(|(u, l)| (u.clone(), Polynomial::constant(num_traits::pow(l.clone(), n))))
            .collect();
        sigma.insert(self.counter.clone(), Polynomial::int(n as i64));
        sigma
    }

    /// Forms at step `n`, as polynomials over the parameters.
    pub fn eval_at(&self, n: usize) -> Vec<Polynomial> {
        let sigma = self.exp_substitution(n);
        self.forms.iter().map(|f| f.substitute(&sigma)).collect()
    }

    /// Form with each exponential variable written as its power, e.g. `2^n`.
    pub fn display_form(&self, i: usize) -> String {
        let sigma: HashMap<Var, Polynomial> = self
            .exp_vars
            .iter()
            .zip(&self.roots)
            .map(|(u, l)| {
                let base = if l.is_integer() && l > &Rat::zero() {
                    fmt_rat(l)
                } else {
                    format!("({})", fmt_rat(l))
                };
                let name = format!("{base}^{}", self.counter.name());
                (u.clone(), Polynomial::var(&Var::new(name, VarKind::Auxiliary)))
            })
            .collect();
        self.forms[i].substitute(&sigma).to_string()
    }
}

/// Folds the offset into an extra component that stays 1.
pub fn homogenize(sys: &RecurrenceSystem) -> RecurrenceSystem {
    let m = sys.dim();
    let taken: BTreeSet<String> = sys
        .vars
        .iter()
        .map(|v| v.name().to_string())
        .chain(sys.parameters().iter().map(|v| v.name().to_string()))
        .collect();
    let one = Var::new(fresh_name("one", |s| taken.contains(s)), VarKind::Auxiliary);
    let mut matrix: Matrix = sys
        .matrix
        .iter()
        .zip(&sys.offset)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    matrix.push((0..=m).map(|j| if j == m { Rat::one() } else { Rat::zero() }).collect());
    let mut vars = sys.vars.clone();
    vars.push(one);
    let mut init = sys.init.clone();
    init.push(Polynomial::one());
    RecurrenceSystem { vars, matrix, offset: vec![Rat::zero(); m + 1], init }
}

/// Names for the counter and the exponential variables, avoiding `taken`.
fn fresh_symbols(taken: &BTreeSet<String>, r: usize) -> (Var, Vec<Var>) {
    let mut taken = taken.clone();
    let n = fresh_name("n", |s| taken.contains(s));
    taken.insert(n.clone());
    let mut us = Vec::with_capacity(r);
    let mut k = 1;
    while us.len() < r {
        let name = format!("u{k}");
        if !taken.contains(&name) {
            us.push(Var::new(name, VarKind::Exponential));
        }
        k += 1;
    }
    (Var::new(n, VarKind::Counter), us)
}

/// Solves the system into closed forms valid from the returned `valid_from`.
pub fn closed_forms(sys: &RecurrenceSystem) -> Result<ClosedFormSystem, CfiniteError> {
    let h = homogenize(sys);
    let cp = char_poly(&h.matrix);
    if !cp.splits() {
        return Err(CfiniteError::IrrationalEigenvalue(cp.residual.to_string()));
    }
    let nu = cp.multiplicity(&Rat::zero());
    let basis: Vec<(Rat, usize)> = cp.roots.iter().filter(|(l, _)| !l.is_zero()).cloned().collect();
    let roots: Vec<Rat> = basis.iter().map(|(l, _)| l.clone()).filter(|l| !l.is_one()).collect();
    let taken: BTreeSet<String> = sys
        .vars
        .iter()
        .chain(sys.parameters().iter())
        .map(|v| v.name().to_string())
        .collect();
    let (counter, exp_vars) = fresh_symbols(&taken, roots.len());

    // basis functions lambda^n n^k
    let funcs: Vec<(Rat, usize)> = basis.iter().flat_map(|(l, mu)| (0..*mu).map(move |k| (l.clone(), k))).collect();
    let d = funcs.len();
    let sample = |n: usize, (l, k): &(Rat, usize)| -> Rat {
        num_traits::pow(l.clone(), n) * num_traits::pow(Rat::from_integer(n.into()), *k)
    };
    let casorati: Matrix = (0..d).map(|t| funcs.iter().map(|f| sample(nu + t, f)).collect()).collect();
    let inv = if d == 0 { Vec::new() } else { inverse(&casorati).ok_or(CfiniteError::SingularSampleMatrix)? };
    let traj = sys.trajectory_symbolic(nu + d.saturating_sub(1));

    let exp_of = |l: &Rat| -> Option<&Var> { roots.iter().position(|r| r == l).map(|j| &exp_vars[j]) };
    let forms: Vec<Polynomial> = (0..sys.dim())
        .map(|i| {
            let mut f = Polynomial::zero();
            for (row, (l, k)) in inv.iter().zip(&funcs) {
                let mut coeff = Polynomial::zero();
                for (t, w) in row.iter().enumerate() {
                    if !w.is_zero() {
                        coeff += traj[nu + t][i].scale(w);
                    }
                }
                let mut mono = Monomial::pow_of(&counter, *k as u32);
                if let Some(u) = exp_of(l) {
                    mono = mono.mul(&Monomial::var(u));
                }
                f += coeff.mul_monomial(&mono, &Rat::one());
            }
            f
        })
        .collect();
    let relations = exponent_relations(&roots, &exp_vars);
    log::debug!("closed forms: eigenvalues {:?}, valid from {nu}", cp.roots);
    Ok(ClosedFormSystem {
        counter,
        roots,
        exp_vars,
        vars: sys.vars.clone(),
        forms,
        relations,
        valid_from: nu,
        eigenvalues: cp.roots,
    })
}
