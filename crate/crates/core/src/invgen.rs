//! Polynomial invariant ideals of affine loops, and invariant checks.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_traits::Zero;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::cfinite::{closed_forms, CfiniteError, ClosedFormSystem};
use crate::groebner::{buchberger, eliminate, intersect_ideals, GroebnerConfig, GroebnerError, IdealBasis};
use crate::loopfront::{to_simultaneous, LoopError, LoopProgram, RecurrenceSystem};
use crate::poly::{fmt_rat, MonomialOrder, Polynomial, Rat, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvgenError {
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Cfinite(#[from] CfiniteError),
    #[error(transparent)]
    Groebner(#[from] GroebnerError),
}

impl InvgenError {
    pub fn name(&self) -> &'static str {
        match self {
            InvgenError::Loop(e) => e.name(),
            InvgenError::Cfinite(CfiniteError::IrrationalEigenvalue(_)) => "IrrationalEigenvalue",
            InvgenError::Cfinite(CfiniteError::SingularSampleMatrix) => "SingularSampleMatrix",
            InvgenError::Groebner(GroebnerError::ResourceLimit(_)) => "ResourceLimit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub eigenvalues: Vec<(Rat, usize)>,
    pub relations: Vec<Polynomial>,
    pub closed_form_time: Duration,
    pub elimination_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub basis: IdealBasis,
    pub closed_forms: ClosedFormSystem,
    pub valid_from: usize,
    pub program_vars: Vec<Var>,
    pub parameters: Vec<Var>,
    pub diagnostics: Diagnostics,
}

impl InvariantReport {
    /// Lex over program variables then parameters; used for printing.
    pub fn display_order(&self) -> MonomialOrder {
        MonomialOrder::lex(self.program_vars.iter().chain(&self.parameters).cloned().collect())
    }

    /// Basis elements with positive leading coefficient, largest lex leader first.
    pub fn invariants(&self) -> Vec<Polynomial> {
        let order = self.display_order();
        let mut out: Vec<Polynomial> = self.basis.generators.iter().map(|g| g.sign_normalized(&order)).collect();
        out.sort_by(|a, b| {
            let la = a.leading_term(&order).map(|t| t.0.clone()).unwrap_or_default();
            let lb = b.leading_term(&order).map(|t| t.0.clone()).unwrap_or_default();
            order.compare(&lb, &la)
        });
        out
    }

    pub fn invariant_strings(&self) -> Vec<String> {
        let order = self.display_order();
        self.invariants().iter().map(|p| p.display_with(&order)).collect()
    }

    pub fn to_json(&self, timings: bool) -> Value {
        let forms: Map<String, Value> = self
            .closed_forms
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name().to_string(), Value::String(self.closed_forms.display_form(i))))
            .collect();
        let mut t = Map::new();
        if timings {
            t.insert("closed_forms".into(), json!(self.diagnostics.closed_form_time.as_secs_f64() * 1e3));
            t.insert("elimination".into(), json!(self.diagnostics.elimination_time.as_secs_f64() * 1e3));
        }
        json!({
            "invariants": self.invariant_strings(),
            "closed_forms": forms,
            "eigenvalues": self.diagnostics.eigenvalues.iter().map(|(l, _)| fmt_rat(l)).collect::<Vec<_>>(),
            "valid_from": self.valid_from,
            "timings_ms": t,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for inv in self.invariant_strings() {
            s.push_str(&inv);
            s.push('\n');
        }
        s
    }
}

pub fn invariant_ideal(l: &LoopProgram) -> Result<InvariantReport, InvgenError> {
    invariant_ideal_with(l, &GroebnerConfig::default())
}

pub fn invariant_ideal_with(l: &LoopProgram, cfg: &GroebnerConfig) -> Result<InvariantReport, InvgenError> {
    system_invariant_ideal(&to_simultaneous(l), cfg)
}

/// Invariant ideal of a recurrence system: eliminates the counter and the
/// exponential variables from the closed forms, then intersects with the
/// states skipped by unrolling.
pub fn system_invariant_ideal(sys: &RecurrenceSystem, cfg: &GroebnerConfig) -> Result<InvariantReport, InvgenError> {
    let started = Instant::now();
    let cf = closed_forms(sys)?;
    let closed_form_time = started.elapsed();
    let params = sys.parameters();
    let keep: Vec<Var> = sys.vars.iter().chain(&params).cloned().collect();
    let mut drop = vec![cf.counter.clone()];
    drop.extend(cf.exp_vars.iter().cloned());

    let mut gens: Vec<Polynomial> =
        sys.vars.iter().zip(&cf.forms).map(|(x, f)| Polynomial::var(x) - f).collect();
    gens.extend(cf.relations.iter().cloned());
    let started = Instant::now();
    let mut basis = eliminate(&gens, &drop, &keep, cfg)?;
    if cf.valid_from > 0 {
        let traj = sys.trajectory_symbolic(cf.valid_from - 1);
        let order = MonomialOrder::grevlex(keep.clone());
        for state in &traj {
            let point: Vec<Polynomial> = sys.vars.iter().zip(state).map(|(x, s)| Polynomial::var(x) - s).collect();
            let point = buchberger(&point, &order, cfg)?;
            basis = intersect_ideals(&basis, &point, cfg)?;
        }
    }
    let elimination_time = started.elapsed();
    log::info!("invariant basis with {} generators", basis.generators.len());
    Ok(InvariantReport {
        basis,
        valid_from: cf.valid_from,
        program_vars: sys.vars.clone(),
        parameters: params,
        diagnostics: Diagnostics {
            eigenvalues: cf.eigenvalues.clone(),
            relations: cf.relations.clone(),
            closed_form_time,
            elimination_time,
        },
        closed_forms: cf,
    })
}

/// `p` holds initially and `p(Ax + b)` reduces to zero modulo `g`.
pub fn check_inductive(p: &Polynomial, sys: &RecurrenceSystem, g: &IdealBasis) -> bool {
    let at_init: HashMap<Var, Polynomial> = sys.vars.iter().cloned().zip(sys.init.iter().cloned()).collect();
    if !p.substitute(&at_init).is_zero() {
        return false;
    }
    let next: HashMap<Var, Polynomial> = sys.vars.iter().cloned().zip(sys.update_polynomials()).collect();
    g.normal_form(&p.substitute(&next)).is_zero()
}

/// First `n <= iters` at which `p` fails on the executed loop.
pub fn first_violation(p: &Polynomial, l: &LoopProgram, iters: usize) -> Result<Option<usize>, LoopError> {
    let init: Option<Vec<Rat>> = l.init.iter().map(Polynomial::as_constant).collect();
    let init = init.ok_or_else(|| LoopError::SymbolicInitial(l.parameters().iter().map(|v| v.name().to_string()).collect()))?;
    let mut state: HashMap<Var, Rat> = l.vars.iter().cloned().zip(init).collect();
    for n in 0..=iters {
        let value = p.eval(&state).map_err(|e| LoopError::UnknownVariable { name: e.0, line: 0 })?;
        if !value.is_zero() {
            return Ok(Some(n));
        }
        if n < iters {
            state = l.execute_body(&state);
        }
    }
    Ok(None)
}

/// `p` vanishes on the first `iters + 1` states, by direct execution.
pub fn oracle_check(p: &Polynomial, l: &LoopProgram, iters: usize) -> Result<bool, LoopError> {
    Ok(first_violation(p, l, iters)?.is_none())
}
