use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::{identity, mat_mul, trace, Matrix};
use crate::poly::{Monomial, Polynomial, Rat, Var, VarKind};

/// Univariate polynomial, coefficients from the constant term upwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly(pub Vec<Rat>);

impl UniPoly {
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.0.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
    }

    fn trim(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    /// Quotient by `(λ - root)`, assuming `root` is a root.
    fn deflate(&self, root: &Rat) -> UniPoly {
        let n = self.0.len();
        let mut q = vec![Rat::zero(); n - 1];
        let mut carry = Rat::zero();
        for i in (1..n).rev() {
            carry = &self.0[i] + carry * root;
            q[i - 1] = carry.clone();
        }
        UniPoly(q)
    }

    pub fn to_polynomial(&self, var: &Var) -> Polynomial {
        Polynomial::from_terms(
            self.0
                .iter()
                .enumerate()
                .map(|(k, c)| (Monomial::pow_of(var, k as u32), c.clone())),
        )
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lambda = Var::new("lambda", VarKind::Auxiliary);
        write!(f, "{}", self.to_polynomial(&lambda))
    }
}

/// Characteristic polynomial with its rational linear factors split off.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coeffs: UniPoly,
    /// Distinct rational roots, ascending, with multiplicities.
    pub roots: Vec<(Rat, usize)>,
    /// Monic factor without rational roots; `[1]` when the polynomial splits.
    pub residual: UniPoly,
}

impl CharPoly {
    pub fn splits(&self) -> bool {
        self.residual.degree() == 0
    }

    pub fn multiplicity(&self, root: &Rat) -> usize {
        self.roots.iter().find(|(r, _)| r == root).map_or(0, |(_, m)| *m)
    }
}

/// `det(λI - A)` by the Faddeev–LeVerrier recurrence.
pub fn characteristic_polynomial(a: &Matrix) -> UniPoly {
    let n = a.len();
    let mut c = vec![Rat::zero(); n + 1];
    c[n] = Rat::one();
    let mut m: Matrix = vec![vec![Rat::zero(); n]; n];
    let id = identity(n);
    for k in 1..=n {
        let am = mat_mul(a, &m);
        m = am
            .iter()
            .zip(&id)
            .map(|(row, irow)| row.iter().zip(irow).map(|(x, i)| x + i * &c[n - k + 1]).collect())
            .collect();
        let t = trace(&mat_mul(a, &m));
        c[n - k] = -t / Rat::from_integer(BigInt::from(k));
    }
    UniPoly(c)
}

pub fn char_poly(a: &Matrix) -> CharPoly {
    let coeffs = characteristic_polynomial(a);
    let (roots, residual) = rational_roots(&coeffs);
    CharPoly { coeffs, roots, residual }
}

/// Positive divisors by trial division.
fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    if n.is_zero() {
        return vec![];
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            let q = &n / &d;
            if q != d {
                large.push(q);
            }
            small.push(d.clone());
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Rational roots by the rational-root theorem, with multiplicities; the
/// remaining factor is returned monic.
pub fn rational_roots(p: &UniPoly) -> (Vec<(Rat, usize)>, UniPoly) {
    let mut p = p.clone().trim();
    let mut roots: Vec<(Rat, usize)> = Vec::new();
    if p.0.iter().all(Zero::is_zero) {
        return (roots, p);
    }
    let mut zero_mult = 0;
    while p.0.len() > 1 && p.0[0].is_zero() {
        p.0.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        roots.push((Rat::zero(), zero_mult));
    }
    if p.degree() > 0 {
        // primitive integer form
        let lcm = p.0.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p.0.iter().map(|c| (c * Rat::from_integer(lcm.clone())).to_integer()).collect();
        let (a0, an) = (&ints[0], ints.last().expect("nonconstant"));
        let qs = divisors(an);
        let mut candidates: Vec<Rat> = Vec::new();
        for num in divisors(a0) {
            for den in &qs {
                for s in [1, -1] {
                    let r = Rat::new(&num * s, den.clone());
                    if !candidates.contains(&r) {
                        candidates.push(r);
                    }
                }
            }
        }
        candidates.sort();
        for r in candidates {
            let mut mult = 0;
            while p.degree() > 0 && p.eval(&r).is_zero() {
                p = p.deflate(&r);
                mult += 1;
            }
            if mult > 0 {
                roots.push((r, mult));
            }
        }
    }
    roots.sort_by(|a, b| a.0.cmp(&b.0));
    let lead = p.0.last().cloned().unwrap_or_else(Rat::one);
    let residual = UniPoly(p.0.iter().map(|c| c / &lead).collect());
    (roots, residual)
}

/// Prime factorisation of a positive integer by trial division.
pub fn factor(n: &BigInt) -> Vec<(BigInt, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(2);
    while &d * &d <= n {
        let mut e = 0;
        while (&n % &d).is_zero() {
            n /= &d;
            e += 1;
        }
        if e > 0 {
            out.push((d.clone(), e));
        }
        d += if d.to_u32() == Some(2) { 1 } else { 2 };
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}
