use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use super::template::SynthesisTemplate;
use super::{Model, Pcp, SynthError};
use crate::cfinite::closed_forms;
use crate::loopfront::{LoopProgram, RecurrenceSystem, Stmt};
use crate::poly::{fresh_name, Monomial, Polynomial, Rat, Var};

fn value_of(p: &Polynomial, env: &HashMap<Var, Rat>) -> Result<Rat, SynthError> {
    p.eval(env).map_err(|e| SynthError::NonRationalModel(e.0))
}

/// Sequential loop whose simultaneous form is the model's recurrence.
///
/// Assignments are ordered so that every variable is read before it is
/// overwritten; on a dependency cycle the old value of the smallest blocked
/// variable is saved in a fresh temporary first.
pub fn model_to_loop(t: &SynthesisTemplate, m: &Model) -> Result<LoopProgram, SynthError> {
    let env = m.env();
    let s = t.size();
    let init: Vec<Rat> = t.init.iter().map(|p| value_of(p, &env)).collect::<Result<_, _>>()?;
    let mut matrix: Vec<Vec<Rat>> = Vec::with_capacity(s);
    for row in &t.matrix {
        matrix.push(row.iter().map(|p| value_of(p, &env)).collect::<Result<_, _>>()?);
    }
    let offset: Vec<Rat> = t.offset.iter().map(|p| value_of(p, &env)).collect::<Result<_, _>>()?;

    let noop = |i: usize| {
        offset[i].is_zero() && (0..s).all(|j| if i == j { matrix[i][j].is_one() } else { matrix[i][j].is_zero() })
    };
    let mut remaining: BTreeSet<usize> = (0..s).filter(|&i| !noop(i)).collect();
    // readers[j]: statements still to be emitted that read variable j
    let mut readers: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); s];
    for &i in &remaining {
        for j in 0..s {
            if j != i && !matrix[i][j].is_zero() && remaining.contains(&j) {
                readers[j].insert(i);
            }
        }
    }
    let mut source: Vec<Var> = t.vars.clone();
    let mut temps: Vec<Var> = Vec::new();
    let mut body = Vec::new();
    while !remaining.is_empty() {
        let ready = remaining.iter().copied().find(|&i| readers[i].is_empty());
        let i = match ready {
            Some(i) => i,
            None => {
                let v = *remaining.iter().next().expect("nonempty");
                let taken = |name: &str| t.vars.iter().chain(&temps).any(|w| w.name() == name);
                let tmp = Var::program(fresh_name("t", taken));
                body.push(Stmt::Assign { lhs: tmp.clone(), rhs: Polynomial::var(&t.vars[v]) });
                source[v] = tmp.clone();
                temps.push(tmp);
                readers[v].clear();
                continue;
            }
        };
        let mut rhs = Polynomial::constant(offset[i].clone());
        for j in 0..s {
            if !matrix[i][j].is_zero() {
                let read = if j == i { &t.vars[i] } else { &source[j] };
                rhs += Polynomial::var(read).scale(&matrix[i][j]);
            }
        }
        body.push(Stmt::Assign { lhs: t.vars[i].clone(), rhs });
        remaining.remove(&i);
        for r in readers.iter_mut() {
            r.remove(&i);
        }
    }
    let mut vars = t.vars.clone();
    vars.extend(temps.iter().cloned());
    let mut init: Vec<Polynomial> = init.into_iter().map(Polynomial::constant).collect();
    init.extend(temps.iter().map(|_| Polynomial::zero()));
    Ok(LoopProgram { vars, init, body, guard: None, warnings: Vec::new() })
}

/// Exact re-evaluation of every constraint of the model's case.
pub fn verify_model(pcp: &Pcp, m: &Model) -> bool {
    let Some(case) = pcp.cases.get(m.case) else {
        return false;
    };
    let env = m.env();
    let eqs = case.equalities.iter().all(|c| c.poly.eval(&env).is_ok_and(|v| v.is_zero()));
    let neqs = case.disequalities.iter().all(|c| c.poly.eval(&env).is_ok_and(|v| !v.is_zero()));
    eqs && neqs
}

/// Fills the template from a known recurrence and its closed forms, in the
/// case matching the coincidences among its roots. `None` when the system
/// does not fit the template.
pub fn pack_system(t: &SynthesisTemplate, pcp: &Pcp, sys: &RecurrenceSystem) -> Option<Model> {
    let s = t.size();
    let pos: Vec<usize> =
        t.vars.iter().map(|v| sys.vars.iter().position(|w| w.name() == v.name())).collect::<Option<_>>()?;
    if sys.dim() != s {
        return None;
    }
    let cf = closed_forms(sys).ok()?;
    let init = sys.numeric_init()?;
    let r = t.exp_vars.len();
    if cf.valid_from > 0 || cf.roots.len() > r {
        return None;
    }
    let mut omegas: Vec<Rat> = cf.roots.clone();
    let mut spare = 2i64;
    while omegas.len() < r {
        let cand = Rat::from_integer(spare.into());
        if !omegas.contains(&cand) {
            omegas.push(cand);
        }
        spare += 1;
    }

    let mut values: HashMap<Var, Rat> = HashMap::new();
    let mut set = |p: &Polynomial, v: Rat| -> Option<()> {
        match p.as_constant() {
            Some(c) => (c == v).then_some(()),
            None => {
                let var = p.vars().into_iter().next()?;
                values.insert(var, v);
                Some(())
            }
        }
    };
    for i in 0..s {
        set(&t.init[i], init[pos[i]].clone())?;
        for j in 0..s {
            set(&t.matrix[i][j], sys.matrix[pos[i]][pos[j]].clone())?;
        }
        set(&t.offset[i], sys.offset[pos[i]].clone())?;
    }
    for (w, value) in t.roots[1..].iter().zip(&omegas) {
        set(w, value.clone())?;
    }
    for i in 0..s {
        let form = &cf.forms[pos[i]];
        if form.degree_in(&cf.counter) as usize > t.degree {
            return None;
        }
        for rho in 0..t.roots.len() {
            for k in 0..=t.degree {
                let mut m = Monomial::pow_of(&cf.counter, k as u32);
                if rho > 0 {
                    match cf.exp_vars.get(rho - 1) {
                        Some(u) => m = m.mul(&Monomial::var(u)),
                        None => {
                            values.insert(t.coeffs[i][rho][k].clone(), Rat::zero());
                            continue;
                        }
                    }
                }
                values.insert(t.coeffs[i][rho][k].clone(), form.coeff(&m));
            }
        }
    }

    // the case whose blocks are exactly the classes of equal base values
    let root_of: HashMap<&Var, &Rat> = t.exp_vars.iter().zip(&omegas).collect();
    let base_value = |b: &Monomial| {
        b.factors().fold(Rat::one(), |acc, (u, e)| acc * num_traits::pow(root_of[u].clone(), e as usize))
    };
    let case = pcp.cases.iter().position(|c| {
        let vals: Vec<Vec<Rat>> = c.partition.iter().map(|b| b.iter().map(base_value).collect()).collect();
        let inside = vals.iter().all(|b| b.iter().all(|v| v == &b[0]));
        let apart = (0..vals.len()).all(|i| (i + 1..vals.len()).all(|j| vals[i][0] != vals[j][0]));
        inside && apart
    })?;
    let values = t.unknowns.iter().map(|u| values.get(&u.var).map(|r| (u.var.clone(), r.clone()))).collect::<Option<_>>()?;
    Some(Model { case, values })
}
