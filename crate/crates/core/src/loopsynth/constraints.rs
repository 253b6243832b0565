use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};

use super::template::SynthesisTemplate;
use super::{Case, Constraint, Pcp, SynthError, Tag};
use crate::poly::{Monomial, Polynomial, Rat, Var};

fn binom(n: usize, k: usize) -> Rat {
    let mut r = Rat::one();
    for i in 0..k {
        r = r * Rat::from_integer((n - i).into()) / Rat::from_integer((i + 1).into());
    }
    r
}

fn push_nonzero(out: &mut Vec<Constraint>, poly: Polynomial, tag: Tag) {
    if !poly.is_zero() {
        out.push(Constraint::new(poly, tag));
    }
}

/// Clause set tying the closed-form templates to the recurrence template:
/// initial values, coefficient-wise shift equations, and root side conditions.
/// Returns `(equalities, disequalities)`.
pub fn gen_c1(t: &SynthesisTemplate) -> (Vec<Constraint>, Vec<Constraint>) {
    let s = t.size();
    let d = t.degree;
    let c = |i: usize, rho: usize, k: usize| Polynomial::var(&t.coeffs[i][rho][k]);
    let mut eqs = Vec::new();
    for i in 0..s {
        let mut sum = Polynomial::zero();
        for rho in 0..t.roots.len() {
            sum += c(i, rho, 0);
        }
        push_nonzero(&mut eqs, sum - &t.init[i], Tag::C1Init);
    }
    for i in 0..s {
        for (rho, root) in t.roots.iter().enumerate() {
            for k in 0..=d {
                let mut lhs = Polynomial::zero();
                for kk in k..=d {
                    lhs += c(i, rho, kk).scale(&binom(kk, k));
                }
                let mut e = root * &lhs;
                for j in 0..s {
                    e -= &(&t.matrix[i][j] * &c(j, rho, k));
                }
                if rho == 0 && k == 0 {
                    e -= &t.offset[i];
                }
                push_nonzero(&mut eqs, e, Tag::C1Shift);
            }
        }
    }
    let omegas: Vec<Polynomial> = t.roots[1..].to_vec();
    let mut neqs = Vec::new();
    for w in &omegas {
        push_nonzero(&mut neqs, w.clone(), Tag::Distinctness);
        push_nonzero(&mut neqs, w - &Polynomial::one(), Tag::Distinctness);
    }
    for (j, wj) in omegas.iter().enumerate() {
        for wk in &omegas[j + 1..] {
            push_nonzero(&mut neqs, wj - wk, Tag::Distinctness);
        }
    }
    (eqs, neqs)
}

/// All set partitions of `0..n` as restricted growth strings, finest first.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for b in (0..=max).rev() {
            prefix.push(b);
            rec(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, &mut out);
    out
}

/// Constraints contributed by one partition of the base monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct C2Case {
    pub partition: Vec<Vec<Monomial>>,
    pub equalities: Vec<Constraint>,
    pub disequalities: Vec<Constraint>,
}

/// `lhs - rhs` after cancelling the common factor of two root monomials.
fn cancelled(a: &Monomial, b: &Monomial) -> (Monomial, Monomial) {
    let vars: BTreeSet<Var> = a.vars().chain(b.vars()).cloned().collect();
    let mut la = Vec::new();
    let mut lb = Vec::new();
    for v in vars {
        let (ea, eb) = (a.exponent(&v), b.exponent(&v));
        let g = ea.min(eb);
        la.push((v.clone(), ea - g));
        lb.push((v, eb - g));
    }
    (Monomial::from_exponents(la), Monomial::from_exponents(lb))
}

fn binomial_poly(a: &Monomial, b: &Monomial) -> Polynomial {
    Polynomial::term(Rat::one(), a.clone()) - Polynomial::term(Rat::one(), b.clone())
}

fn single_exponent(m: &Monomial) -> Option<u32> {
    let f: Vec<(&Var, u32)> = m.factors().collect();
    (f.len() == 1).then(|| f[0].1)
}

/// True when `a = b` contradicts nonzero, pairwise distinct roots different from 1.
fn merge_impossible(a: &Monomial, b: &Monomial) -> bool {
    match (a.is_one(), b.is_one()) {
        (true, false) => single_exponent(b).is_some_and(|e| e % 2 == 1),
        (false, true) => single_exponent(a).is_some_and(|e| e % 2 == 1),
        _ => single_exponent(a) == Some(1) && single_exponent(b) == Some(1),
    }
}

/// `a != b` is one of the root side conditions of C1.
fn implied_by_c1(a: &Monomial, b: &Monomial) -> bool {
    let linear = |m: &Monomial| single_exponent(m) == Some(1);
    (a.is_one() && linear(b)) || (b.is_one() && linear(a)) || (linear(a) && linear(b))
}

/// Clause set forcing every basis polynomial to vanish on the closed-form
/// templates, split into one case per consistent coincidence pattern of the
/// base monomials.
pub fn gen_c2(t: &SynthesisTemplate, basis: &[Polynomial]) -> Result<Vec<C2Case>, SynthError> {
    let sigma: HashMap<Var, Polynomial> = t.vars.iter().cloned().zip(t.forms()).collect();
    let mut group: BTreeSet<Var> = t.exp_vars.iter().cloned().collect();
    group.insert(t.counter.clone());
    let to_root: HashMap<Var, Var> = t.exp_vars.iter().cloned().zip(t.omega_vars()).collect();
    let root_monomial = |base: &Monomial| {
        Monomial::from_exponents(base.factors().map(|(u, e)| (to_root[u].clone(), e)))
    };

    // per polynomial: base monomial -> n-degree -> coefficient
    let mut expanded: Vec<BTreeMap<Monomial, BTreeMap<u32, Polynomial>>> = Vec::new();
    let mut bases: BTreeSet<Monomial> = BTreeSet::new();
    for p in basis {
        if let Some(v) = p.vars().into_iter().find(|v| !sigma.contains_key(v)) {
            return Err(SynthError::InvalidTemplate(format!("invariant mentions `{v}` outside the template")));
        }
        let mut per: BTreeMap<Monomial, BTreeMap<u32, Polynomial>> = BTreeMap::new();
        for (key, coeff) in p.substitute(&sigma).collect(&group) {
            let k = key.exponent(&t.counter);
            let (base, _) = key.split(&t.exp_vars.iter().cloned().collect());
            bases.insert(base.clone());
            *per.entry(base).or_default().entry(k).or_default() += coeff;
        }
        expanded.push(per);
    }
    let bases: Vec<Monomial> = bases.into_iter().collect();
    let roots: Vec<Monomial> = bases.iter().map(root_monomial).collect();

    let mut out = Vec::new();
    'partitions: for rgs in set_partitions(bases.len()) {
        let nblocks = rgs.iter().copied().max().map_or(0, |m| m + 1);
        let blocks: Vec<Vec<usize>> =
            (0..nblocks).map(|b| (0..bases.len()).filter(|&i| rgs[i] == b).collect()).collect();
        let mut eqs = Vec::new();
        let mut neqs = Vec::new();
        for block in &blocks {
            for &other in &block[1..] {
                let (l, r) = cancelled(&roots[block[0]], &roots[other]);
                if merge_impossible(&l, &r) {
                    continue 'partitions;
                }
                push_nonzero(&mut eqs, binomial_poly(&l, &r), Tag::Case);
            }
        }
        for (bi, a) in blocks.iter().enumerate() {
            for b in &blocks[bi + 1..] {
                let (l, r) = cancelled(&roots[a[0]], &roots[b[0]]);
                if implied_by_c1(&l, &r) {
                    continue;
                }
                push_nonzero(&mut neqs, binomial_poly(&l, &r), Tag::Case);
            }
        }
        for per in &expanded {
            for block in &blocks {
                let mut by_degree: BTreeMap<u32, Polynomial> = BTreeMap::new();
                for &i in block {
                    if let Some(terms) = per.get(&bases[i]) {
                        for (k, c) in terms {
                            *by_degree.entry(*k).or_default() += c;
                        }
                    }
                }
                for (_, sum) in by_degree.into_iter().rev() {
                    if sum.as_constant().is_some_and(|c| !c.is_zero()) {
                        continue 'partitions;
                    }
                    push_nonzero(&mut eqs, sum, Tag::C2);
                }
            }
        }
        let partition = blocks.iter().map(|b| b.iter().map(|&i| bases[i].clone()).collect()).collect();
        out.push(C2Case { partition, equalities: eqs, disequalities: neqs });
    }
    Ok(out)
}

/// C1 shared by every case, followed by each case's C2 constraints.
pub fn build_pcp(t: &SynthesisTemplate, basis: &[Polynomial]) -> Result<Pcp, SynthError> {
    let (eqs, neqs) = gen_c1(t);
    let cases = gen_c2(t, basis)?
        .into_iter()
        .map(|c| Case {
            equalities: eqs.iter().cloned().chain(c.equalities).collect(),
            disequalities: neqs.iter().cloned().chain(c.disequalities).collect(),
            partition: c.partition,
        })
        .collect();
    Ok(Pcp { unknowns: t.unknowns.clone(), cases })
}
