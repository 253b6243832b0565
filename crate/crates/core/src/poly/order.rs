use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::Range;

use super::{Monomial, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Lex,
    DegLex,
    GrevLex,
}

/// A monomial order given by a variable precedence list split into blocks.
///
/// Blocks are compared left to right, each with its own scheme. Variables
/// missing from the precedence list rank below all listed ones and are
/// compared lexicographically by name.
#[derive(Clone, Debug)]
pub struct MonomialOrder {
    vars: Vec<Var>,
    blocks: Vec<(Scheme, Range<usize>)>,
    index: HashMap<Var, usize>,
}

impl PartialEq for MonomialOrder {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.blocks == other.blocks
    }
}

impl MonomialOrder {
    fn single(scheme: Scheme, vars: Vec<Var>) -> Self {
        let n = vars.len();
        MonomialOrder::block(vec![(scheme, vars)]).with_len_check(n)
    }

    fn with_len_check(self, n: usize) -> Self {
        debug_assert_eq!(self.vars.len(), n, "duplicate variables in order");
        self
    }

    pub fn lex(vars: Vec<Var>) -> Self {
        MonomialOrder::single(Scheme::Lex, vars)
    }

    pub fn deglex(vars: Vec<Var>) -> Self {
        MonomialOrder::single(Scheme::DegLex, vars)
    }

    pub fn grevlex(vars: Vec<Var>) -> Self {
        MonomialOrder::single(Scheme::GrevLex, vars)
    }

    /// Product order: a monomial's restriction to an earlier block dominates.
    pub fn block(blocks: Vec<(Scheme, Vec<Var>)>) -> Self {
        let mut vars = Vec::new();
        let mut ranges = Vec::new();
        let mut index = HashMap::new();
        for (scheme, bvars) in blocks {
            let start = vars.len();
            for v in bvars {
                if !index.contains_key(&v) {
                    index.insert(v.clone(), vars.len());
                    vars.push(v);
                }
            }
            if vars.len() > start {
                ranges.push((scheme, start..vars.len()));
            }
        }
        MonomialOrder { vars, blocks: ranges, index }
    }

    pub fn variables(&self) -> &[Var] {
        &self.vars
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Scheme, &[Var])> {
        self.blocks.iter().map(|(s, r)| (*s, &self.vars[r.clone()]))
    }

    pub fn position(&self, v: &Var) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Same order with the given variables appended as a trailing block.
    pub fn extended(&self, extra: impl IntoIterator<Item = Var>, scheme: Scheme) -> Self {
        let mut blocks: Vec<(Scheme, Vec<Var>)> = self
            .blocks
            .iter()
            .map(|(s, r)| (*s, self.vars[r.clone()].to_vec()))
            .collect();
        let extra: Vec<Var> = extra
            .into_iter()
            .filter(|v| !self.index.contains_key(v))
            .collect();
        blocks.push((scheme, extra));
        MonomialOrder::block(blocks)
    }

    /// Exponent vector over the precedence list.
    pub fn dense(&self, m: &Monomial) -> Vec<u32> {
        let mut out = vec![0; self.vars.len()];
        for (v, e) in m.factors() {
            if let Some(&i) = self.index.get(v) {
                out[i] = e;
            }
        }
        out
    }

    /// Compares dense exponent vectors laid out as by [`MonomialOrder::dense`].
    pub fn compare_dense(&self, a: &[u32], b: &[u32]) -> Ordering {
        for (scheme, r) in &self.blocks {
            let ord = compare_block(*scheme, &a[r.clone()], &b[r.clone()]);
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    }

    pub fn compare(&self, a: &Monomial, b: &Monomial) -> Ordering {
        let ord = self.compare_dense(&self.dense(a), &self.dense(b));
        if ord != Ordering::Equal {
            return ord;
        }
        // unlisted variables: lex with earlier names ranked higher
        let rest = |m: &Monomial| -> Vec<(Var, u32)> {
            m.factors()
                .filter(|(v, _)| !self.index.contains_key(*v))
                .map(|(v, e)| (v.clone(), e))
                .collect()
        };
        let (ra, rb) = (rest(a), rest(b));
        let mut names: Vec<&Var> = ra.iter().chain(rb.iter()).map(|(v, _)| v).collect();
        names.sort();
        names.dedup();
        for v in names {
            let ea = ra.iter().find(|(w, _)| w == v).map_or(0, |p| p.1);
            let eb = rb.iter().find(|(w, _)| w == v).map_or(0, |p| p.1);
            if ea != eb {
                return ea.cmp(&eb);
            }
        }
        Ordering::Equal
    }
}

fn compare_block(scheme: Scheme, a: &[u32], b: &[u32]) -> Ordering {
    match scheme {
        Scheme::Lex => a.cmp(b),
        Scheme::DegLex => {
            let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
            da.cmp(&db).then_with(|| a.cmp(b))
        }
        Scheme::GrevLex => {
            let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
            da.cmp(&db).then_with(|| {
                for (x, y) in a.iter().zip(b).rev() {
                    if x != y {
                        return y.cmp(x);
                    }
                }
                Ordering::Equal
            })
        }
    }
}
