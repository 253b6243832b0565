//! Depth-first search over bounded integer values with exact propagation.
//!
//! Propagation repeatedly
//! - checks ground constraints,
//! - forces `v = 0` from an equality that is a single monomial in one variable,
//! - solves the equalities that are linear in the open unknowns by Gaussian
//!   elimination and fixes every uniquely determined unknown,
//! - fixes the unknown of a univariate equality with exactly one admissible root.
//!
//! Branching prefers a univariate equality (its rational roots), then integer
//! unknowns in declaration order with values `0, 1, -1, ..., bound, -bound`.
//! Real unknowns left open after propagation are tried on the same integer
//! grid, so the search is complete only for integer unknowns and for real
//! unknowns that propagation determines.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{Domain, Model, Pcp, SynthError, Unknown};
use crate::cfinite::charpoly::{rational_roots, UniPoly};
use crate::linalg::rref;
use crate::poly::{Monomial, Polynomial, Rat, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub bound: i64,
    pub enumerate_all: bool,
    pub max_models: usize,
    pub node_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { bound: 2, enumerate_all: false, max_models: 1000, node_budget: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
struct State {
    eqs: Vec<Polynomial>,
    neqs: Vec<Polynomial>,
    values: HashMap<Var, Rat>,
}

struct Search<'a> {
    unknowns: &'a [Unknown],
    domains: HashMap<Var, Domain>,
    bound: BigInt,
    grid: Vec<Rat>,
    nodes: usize,
    budget: usize,
    case: usize,
    stopped: bool,
    on_model: &'a mut dyn FnMut(&Model) -> Control,
}

enum Propagated {
    Conflict,
    /// Open univariate equality with several admissible roots.
    Open(Option<(Var, Vec<Rat>)>),
}

fn grid(bound: i64) -> Vec<Rat> {
    let mut out = vec![Rat::zero()];
    for k in 1..=bound {
        out.push(Rat::from_integer(k.into()));
        out.push(Rat::from_integer((-k).into()));
    }
    out
}

impl State {
    fn assign(&mut self, v: &Var, r: &Rat) {
        for p in self.eqs.iter_mut().chain(self.neqs.iter_mut()) {
            if p.contains_var(v) {
                *p = p.assign(v, r);
            }
        }
        self.values.insert(v.clone(), r.clone());
    }
}

impl Search<'_> {
    fn admissible(&self, v: &Var, r: &Rat) -> bool {
        match self.domains[v] {
            Domain::Int => r.is_integer() && r.numer().abs() <= self.bound,
            Domain::Real => true,
        }
    }

    fn univariate_roots(&self, p: &Polynomial, v: &Var) -> Vec<Rat> {
        let deg = p.degree_in(v) as usize;
        let mut coeffs = vec![Rat::zero(); deg + 1];
        for (m, c) in p.terms() {
            coeffs[m.exponent(v) as usize] += c;
        }
        let mut roots: Vec<Rat> = rational_roots(&UniPoly(coeffs))
            .0
            .into_iter()
            .map(|(r, _)| r)
            .filter(|r| self.admissible(v, r))
            .collect();
        // same order as the integer grid
        roots.sort_by_key(|r| (r.abs(), r.is_negative()));
        roots
    }

    /// Unknowns fixed by the equalities that are linear in the open unknowns.
    fn gaussian(&self, eqs: &[Polynomial]) -> Result<Vec<(Var, Rat)>, ()> {
        let linear: Vec<&Polynomial> = eqs.iter().filter(|p| p.total_degree() <= 1).collect();
        if linear.is_empty() {
            return Ok(Vec::new());
        }
        let vars: Vec<Var> = linear.iter().flat_map(|p| p.vars()).collect::<BTreeSet<_>>().into_iter().collect();
        let n = vars.len();
        let mut m: Vec<Vec<Rat>> = linear
            .iter()
            .map(|p| {
                let mut row: Vec<Rat> = vars.iter().map(|v| p.coeff(&Monomial::var(v))).collect();
                row.push(-p.constant_term());
                row
            })
            .collect();
        let pivots = rref(&mut m, n);
        if m.iter().any(|row| row[..n].iter().all(Zero::is_zero) && !row[n].is_zero()) {
            return Err(());
        }
        let mut out = Vec::new();
        for (row, &pc) in m.iter().zip(&pivots) {
            if row[..n].iter().enumerate().all(|(j, x)| j == pc || x.is_zero()) {
                out.push((vars[pc].clone(), row[n].clone()));
            }
        }
        Ok(out)
    }

    fn propagate(&self, st: &mut State) -> Propagated {
        loop {
            let mut i = 0;
            while i < st.eqs.len() {
                if st.eqs[i].is_zero() {
                    st.eqs.swap_remove(i);
                } else if st.eqs[i].is_constant() {
                    return Propagated::Conflict;
                } else {
                    i += 1;
                }
            }
            let mut i = 0;
            while i < st.neqs.len() {
                if st.neqs[i].is_zero() {
                    return Propagated::Conflict;
                } else if st.neqs[i].is_constant() {
                    st.neqs.swap_remove(i);
                } else {
                    i += 1;
                }
            }
            let mut forced: Vec<(Var, Rat)> = Vec::new();
            let mut branch: Option<(Var, Vec<Rat>)> = None;
            for p in &st.eqs {
                let vars = p.vars();
                if vars.len() != 1 {
                    continue;
                }
                let v = vars.into_iter().next().expect("one variable");
                if p.len() == 1 {
                    forced.push((v, Rat::zero()));
                    continue;
                }
                if p.total_degree() < 2 {
                    continue;
                }
                let roots = self.univariate_roots(p, &v);
                match roots.len() {
                    0 => return Propagated::Conflict,
                    1 => forced.push((v, roots[0].clone())),
                    _ => {
                        if branch.as_ref().is_none_or(|(_, r)| roots.len() < r.len()) {
                            branch = Some((v, roots));
                        }
                    }
                }
            }
            if forced.is_empty() {
                match self.gaussian(&st.eqs) {
                    Ok(f) => forced = f,
                    Err(()) => return Propagated::Conflict,
                }
            }
            if forced.is_empty() {
                return Propagated::Open(branch);
            }
            let mut seen: HashMap<Var, Rat> = HashMap::new();
            for (v, r) in forced {
                if !self.admissible(&v, &r) {
                    return Propagated::Conflict;
                }
                if let Some(prev) = seen.get(&v) {
                    if prev != &r {
                        return Propagated::Conflict;
                    }
                    continue;
                }
                st.assign(&v, &r);
                seen.insert(v, r);
            }
        }
    }

    fn pick(&self, st: &State) -> Option<Var> {
        let mentioned: BTreeSet<Var> = st.eqs.iter().chain(&st.neqs).flat_map(|p| p.vars()).collect();
        let open = |u: &&Unknown| !st.values.contains_key(&u.var);
        let find = |dom: Domain, in_constraints: bool| {
            self.unknowns
                .iter()
                .filter(open)
                .find(|u| u.domain == dom && mentioned.contains(&u.var) == in_constraints)
                .map(|u| u.var.clone())
        };
        find(Domain::Int, true)
            .or_else(|| find(Domain::Real, true))
            .or_else(|| find(Domain::Int, false))
            .or_else(|| find(Domain::Real, false))
    }

    fn dfs(&mut self, mut st: State) -> Result<(), SynthError> {
        if self.stopped {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(SynthError::ResourceLimit(self.budget));
        }
        let branch = match self.propagate(&mut st) {
            Propagated::Conflict => return Ok(()),
            Propagated::Open(b) => b,
        };
        let (v, values) = match branch {
            Some(b) => b,
            None => match self.pick(&st) {
                Some(v) => (v, self.grid.clone()),
                None => {
                    let model = Model {
                        case: self.case,
                        values: self.unknowns.iter().map(|u| (u.var.clone(), st.values[&u.var].clone())).collect(),
                    };
                    if (self.on_model)(&model) == Control::Stop {
                        self.stopped = true;
                    }
                    return Ok(());
                }
            },
        };
        for r in values {
            if self.stopped {
                break;
            }
            let mut child = st.clone();
            child.assign(&v, &r);
            self.dfs(child)?;
        }
        Ok(())
    }
}

/// Runs the search case by case, reporting each model to `on_model`.
/// Returns the number of models reported.
pub fn solve_builtin_with(
    pcp: &Pcp,
    cfg: &SolverConfig,
    on_model: &mut dyn FnMut(&Model) -> Control,
) -> Result<usize, SynthError> {
    let mut count = 0;
    let mut counting = |m: &Model| {
        count += 1;
        on_model(m)
    };
    let mut search = Search {
        unknowns: &pcp.unknowns,
        domains: pcp.unknowns.iter().map(|u| (u.var.clone(), u.domain)).collect(),
        bound: BigInt::from(cfg.bound),
        grid: grid(cfg.bound),
        nodes: 0,
        budget: cfg.node_budget,
        case: 0,
        stopped: false,
        on_model: &mut counting,
    };
    for (i, case) in pcp.cases.iter().enumerate() {
        if search.stopped {
            break;
        }
        search.case = i;
        let st = State {
            eqs: case.equalities.iter().map(|c| c.poly.clone()).collect(),
            neqs: case.disequalities.iter().map(|c| c.poly.clone()).collect(),
            values: HashMap::new(),
        };
        search.dfs(st)?;
        log::debug!("case {i}: {} nodes so far", search.nodes);
    }
    drop(search);
    Ok(count)
}

/// First model, or all models up to `max_models` when `enumerate_all` is set.
pub fn solve_builtin(pcp: &Pcp, cfg: &SolverConfig) -> Result<Vec<Model>, SynthError> {
    let mut models = Vec::new();
    solve_builtin_with(pcp, cfg, &mut |m| {
        models.push(m.clone());
        if cfg.enumerate_all && models.len() < cfg.max_models {
            Control::Continue
        } else {
            Control::Stop
        }
    })?;
    if models.is_empty() {
        Err(SynthError::Unsat)
    } else {
        Ok(models)
    }
}
