//! Buchberger's algorithm over the rationals, with elimination and ideal
//! intersection built on top.
//!
//! Internally polynomials are kept as term lists sorted ascending under the
//! working order, with dense exponent vectors over the order's variables.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::{fresh_name, Monomial, MonomialOrder, Polynomial, Rat, Scheme, Var, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroebnerError {
    #[error("ResourceLimit: Gröbner basis computation exceeded {0} S-pair reductions")]
    ResourceLimit(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct GroebnerConfig {
    /// Maximum number of S-pairs reduced before giving up.
    pub max_steps: usize,
}

impl Default for GroebnerConfig {
    fn default() -> Self {
        GroebnerConfig { max_steps: 200_000 }
    }
}

/// Generators of an ideal together with the order they were computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealBasis {
    pub generators: Vec<Polynomial>,
    pub order: MonomialOrder,
    pub reduced: bool,
}

impl IdealBasis {
    pub fn is_zero_ideal(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.generators.iter().any(|g| !g.is_zero() && g.is_constant())
    }

    pub fn normal_form(&self, p: &Polynomial) -> Polynomial {
        normal_form(p, self)
    }

    pub fn contains(&self, p: &Polynomial) -> bool {
        ideal_member(p, self)
    }
}

type Exps = Vec<u32>;

#[derive(Clone, Debug)]
struct DPoly {
    /// ascending; the leading term is last
    terms: Vec<(Exps, Rat)>,
}

impl DPoly {
    fn from_poly(p: &Polynomial, order: &MonomialOrder) -> Self {
        let mut terms: Vec<(Exps, Rat)> =
            p.terms().map(|(m, c)| (order.dense(m), c.clone())).collect();
        terms.sort_by(|a, b| order.compare_dense(&a.0, &b.0));
        DPoly { terms }
    }

    fn to_poly(&self, order: &MonomialOrder) -> Polynomial {
        let vars = order.variables();
        Polynomial::from_terms(self.terms.iter().map(|(e, c)| {
            (
                Monomial::from_exponents(vars.iter().cloned().zip(e.iter().copied())),
                c.clone(),
            )
        }))
    }

    fn lead(&self) -> &(Exps, Rat) {
        self.terms.last().expect("nonzero polynomial")
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn make_monic(&mut self) {
        if let Some((_, lc)) = self.terms.last() {
            if !lc.is_one() {
                let inv = Rat::one() / lc;
                for (_, c) in self.terms.iter_mut() {
                    *c *= &inv;
                }
            }
        }
    }
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u32], b: &[u32]) -> Exps {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn coprime(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

/// `a - coeff * x^shift * b`, both ascending.
fn sub_scaled(a: &[(Exps, Rat)], coeff: &Rat, shift: &[u32], b: &DPoly, order: &MonomialOrder) -> Vec<(Exps, Rat)> {
    let shifted = b.terms.iter().map(|(e, c)| {
        let e: Exps = e.iter().zip(shift).map(|(x, y)| x + y).collect();
        (e, -(c * coeff))
    });
    let mut out = Vec::with_capacity(a.len() + b.terms.len());
    let mut ai = a.iter().cloned().peekable();
    let mut bi = shifted.peekable();
    loop {
        let ord = match (ai.peek(), bi.peek()) {
            (None, None) => break,
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (Some(x), Some(y)) => order.compare_dense(&x.0, &y.0),
        };
        match ord {
            Ordering::Less => out.push(ai.next().unwrap()),
            Ordering::Greater => out.push(bi.next().unwrap()),
            Ordering::Equal => {
                let (e, c1) = ai.next().unwrap();
                let (_, c2) = bi.next().unwrap();
                let c = c1 + c2;
                if !c.is_zero() {
                    out.push((e, c));
                }
            }
        }
    }
    out
}

/// Full reduction of `p` by `basis`.
fn reduce(p: &DPoly, basis: &[DPoly], order: &MonomialOrder) -> DPoly {
    let mut work = p.terms.clone();
    let mut rem: Vec<(Exps, Rat)> = Vec::new();
    while let Some((m, c)) = work.last().cloned() {
        let divisor = basis.iter().find(|g| !g.is_zero() && divides(&g.lead().0, &m));
        match divisor {
            Some(g) => {
                let (lm, lc) = g.lead();
                let shift: Exps = m.iter().zip(lm).map(|(x, y)| x - y).collect();
                work = sub_scaled(&work, &(&c / lc), &shift, g, order);
            }
            None => {
                work.pop();
                rem.push((m, c));
            }
        }
    }
    rem.reverse();
    DPoly { terms: rem }
}

fn s_poly(f: &DPoly, g: &DPoly, order: &MonomialOrder) -> DPoly {
    let (fm, fc) = f.lead();
    let (gm, gc) = g.lead();
    let l = lcm(fm, gm);
    let sf: Exps = l.iter().zip(fm).map(|(x, y)| x - y).collect();
    let sg: Exps = l.iter().zip(gm).map(|(x, y)| x - y).collect();
    let zero = DPoly { terms: Vec::new() };
    let a = sub_scaled(&zero.terms, &-(Rat::one() / fc), &sf, f, order);
    DPoly { terms: sub_scaled(&a, &(Rat::one() / gc), &sg, g, order) }
}

/// Extends `order` with every variable of `polys` it does not list.
fn working_order<'a>(order: &MonomialOrder, polys: impl IntoIterator<Item = &'a Polynomial>) -> MonomialOrder {
    let mut extra: BTreeSet<Var> = BTreeSet::new();
    for p in polys {
        extra.extend(p.vars().into_iter().filter(|v| order.position(v).is_none()));
    }
    if extra.is_empty() {
        order.clone()
    } else {
        order.extended(extra, Scheme::GrevLex)
    }
}

/// Remainder of `p` modulo `g`: `p - r` lies in the ideal and no term of `r`
/// is divisible by a leading monomial of `g`.
pub fn normal_form(p: &Polynomial, g: &IdealBasis) -> Polynomial {
    let order = working_order(&g.order, g.generators.iter().chain(std::iter::once(p)));
    let basis: Vec<DPoly> = g.generators.iter().map(|q| DPoly::from_poly(q, &order)).collect();
    reduce(&DPoly::from_poly(p, &order), &basis, &order).to_poly(&order)
}

/// S-polynomial of `f` and `g` under `order`.
pub fn s_polynomial(f: &Polynomial, g: &Polynomial, order: &MonomialOrder) -> Polynomial {
    let order = working_order(order, [f, g]);
    s_poly(&DPoly::from_poly(f, &order), &DPoly::from_poly(g, &order), &order).to_poly(&order)
}

pub fn ideal_member(p: &Polynomial, g: &IdealBasis) -> bool {
    normal_form(p, g).is_zero()
}

/// Reduced Gröbner basis of the ideal generated by `gens`.
pub fn buchberger(gens: &[Polynomial], order: &MonomialOrder, cfg: &GroebnerConfig) -> Result<IdealBasis, GroebnerError> {
    let work_order = working_order(order, gens);
    let mut basis: Vec<DPoly> = Vec::new();
    for g in gens {
        let mut d = DPoly::from_poly(g, &work_order);
        if !d.is_zero() {
            d.make_monic();
            basis.push(d);
        }
    }
    // pending pairs, i < j
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pairs.insert((i, j));
        }
    }
    let mut steps = 0usize;
    let is_unit = |b: &[DPoly]| b.iter().any(|d| d.lead().0.iter().all(|e| *e == 0));
    while !pairs.is_empty() && !is_unit(&basis) {
        // normal selection strategy: smallest lcm, ties by index
        let &(i, j) = pairs
            .iter()
            .min_by(|a, b| {
                let la = lcm(&basis[a.0].lead().0, &basis[a.1].lead().0);
                let lb = lcm(&basis[b.0].lead().0, &basis[b.1].lead().0);
                work_order.compare_dense(&la, &lb).then(a.cmp(b))
            })
            .expect("nonempty");
        pairs.remove(&(i, j));
        let (li, lj) = (&basis[i].lead().0, &basis[j].lead().0);
        if coprime(li, lj) {
            continue;
        }
        let l = lcm(li, lj);
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let chain = (0..basis.len()).any(|k| {
            k != i
                && k != j
                && divides(&basis[k].lead().0, &l)
                && !pairs.contains(&key(i, k))
                && !pairs.contains(&key(j, k))
        });
        if chain {
            continue;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(GroebnerError::ResourceLimit(cfg.max_steps));
        }
        let s = s_poly(&basis[i], &basis[j], &work_order);
        let mut r = reduce(&s, &basis, &work_order);
        if !r.is_zero() {
            r.make_monic();
            let k = basis.len();
            basis.push(r);
            for i in 0..k {
                pairs.insert((i, k));
            }
        }
    }
    Ok(IdealBasis {
        generators: finalize(basis, &work_order),
        order: work_order,
        reduced: true,
    })
}

/// Minimizes and inter-reduces, returning monic generators sorted by leading monomial.
fn finalize(mut basis: Vec<DPoly>, order: &MonomialOrder) -> Vec<Polynomial> {
    if let Some(unit) = basis.iter().find(|d| d.lead().0.iter().all(|e| *e == 0)) {
        return vec![unit.to_poly(order).scale(&(Rat::one() / &unit.lead().1))];
    }
    basis.sort_by(|a, b| order.compare_dense(&a.lead().0, &b.lead().0));
    let mut minimal: Vec<DPoly> = Vec::new();
    for d in basis {
        if !minimal.iter().any(|m| divides(&m.lead().0, &d.lead().0)) {
            minimal.push(d);
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for idx in 0..minimal.len() {
        let others: Vec<DPoly> = minimal
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != idx)
            .map(|(_, d)| d.clone())
            .collect();
        let mut r = reduce(&minimal[idx], &others, order);
        r.make_monic();
        out.push(r);
    }
    out.sort_by(|a, b| order.compare_dense(&a.lead().0, &b.lead().0));
    out.iter().map(|d| d.to_poly(order)).collect()
}

/// Reduced basis of `<gens>` intersected with the polynomial ring over `keep`.
///
/// Uses the block order `lex(drop) > grevlex(keep)` and keeps the generators
/// free of `drop`. The returned basis carries the order `grevlex(keep)`.
pub fn eliminate(gens: &[Polynomial], drop: &[Var], keep: &[Var], cfg: &GroebnerConfig) -> Result<IdealBasis, GroebnerError> {
    let drop_set: HashSet<&Var> = drop.iter().collect();
    debug_assert!(keep.iter().all(|v| !drop_set.contains(v)));
    let order = MonomialOrder::block(vec![
        (Scheme::Lex, drop.to_vec()),
        (Scheme::GrevLex, keep.to_vec()),
    ]);
    let gb = buchberger(gens, &order, cfg)?;
    let keep_order = MonomialOrder::grevlex(keep.to_vec());
    let keep_order = working_order(&keep_order, gb.generators.iter().filter(|g| g.vars().iter().all(|v| !drop_set.contains(v))));
    let mut generators: Vec<Polynomial> = gb
        .generators
        .into_iter()
        .filter(|g| g.vars().iter().all(|v| !drop_set.contains(v)))
        .collect();
    generators.sort_by(|a, b| {
        let la = a.leading_term(&keep_order).map(|t| t.0.clone()).unwrap_or_default();
        let lb = b.leading_term(&keep_order).map(|t| t.0.clone()).unwrap_or_default();
        keep_order.compare(&la, &lb)
    });
    Ok(IdealBasis { generators, order: keep_order, reduced: true })
}

/// `<G> ∩ <H>` via eliminating a tag variable from `<t*G, (1-t)*H>`.
pub fn intersect_ideals(g: &IdealBasis, h: &IdealBasis, cfg: &GroebnerConfig) -> Result<IdealBasis, GroebnerError> {
    let mut keep: Vec<Var> = g.order.variables().to_vec();
    for v in h.order.variables() {
        if !keep.contains(v) {
            keep.push(v.clone());
        }
    }
    for p in g.generators.iter().chain(&h.generators) {
        for v in p.vars() {
            if !keep.contains(&v) {
                keep.push(v);
            }
        }
    }
    if g.is_zero_ideal() || h.is_zero_ideal() {
        return Ok(IdealBasis { generators: Vec::new(), order: MonomialOrder::grevlex(keep), reduced: true });
    }
    let taken: HashSet<String> = keep.iter().map(|v| v.name().to_string()).collect();
    let t = Var::new(fresh_name("t", |s| taken.contains(s)), VarKind::Auxiliary);
    let tp = Polynomial::var(&t);
    let one_minus_t = &Polynomial::one() - &tp;
    let gens: Vec<Polynomial> = g
        .generators
        .iter()
        .map(|p| &tp * p)
        .chain(h.generators.iter().map(|p| &one_minus_t * p))
        .collect();
    eliminate(&gens, &[t], &keep, cfg)
}
