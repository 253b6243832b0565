use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::charpoly::factor;
use crate::poly::{Monomial, Polynomial, Rat, Var};

/// Extended gcd with `a*x + b*y = g` and `g >= 0`.
fn egcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Basis of the integer kernel `{v : M v = 0}` by unimodular column
/// operations, i.e. a column-style Hermite reduction of `M` tracked in `U`.
pub fn integer_kernel(m: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..cols)
        .map(|i| (0..cols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut p = 0;
    for r in 0..a.len() {
        if p == cols {
            break;
        }
        for j in p + 1..cols {
            if a[r][j].is_zero() {
                continue;
            }
            let (g, x, y) = egcd(&a[r][p], &a[r][j]);
            let (sp, sj) = (&a[r][p] / &g, &a[r][j] / &g);
            // (col_p, col_j) <- (x col_p + y col_j, -sj col_p + sp col_j)
            let combine = |rows: &mut Vec<Vec<BigInt>>| {
                for row in rows.iter_mut() {
                    let (cp, cj) = (row[p].clone(), row[j].clone());
                    row[p] = &x * &cp + &y * &cj;
                    row[j] = -&sj * &cp + &sp * &cj;
                }
            };
            combine(&mut a);
            combine(&mut u);
        }
        if !a[r][p].is_zero() {
            p += 1;
        }
    }
    (p..cols).map(|j| u.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Generators of the lattice `{v : prod roots[j]^v[j] = 1}`, one per row.
pub fn multiplicative_relations(roots: &[Rat]) -> Vec<Vec<BigInt>> {
    let r = roots.len();
    if r == 0 {
        return vec![];
    }
    let mut primes: Vec<BigInt> = Vec::new();
    let mut exps: Vec<Vec<(BigInt, i64)>> = Vec::new();
    for root in roots {
        let mut e: Vec<(BigInt, i64)> = Vec::new();
        for (p, k) in factor(root.numer()) {
            e.push((p, k as i64));
        }
        for (p, k) in factor(root.denom()) {
            e.push((p, -(k as i64)));
        }
        for (p, _) in &e {
            if !primes.contains(p) {
                primes.push(p.clone());
            }
        }
        exps.push(e);
    }
    primes.sort();
    // prime rows, then the sign row with a slack column of 2
    let mut m: Vec<Vec<BigInt>> = primes
        .iter()
        .map(|p| {
            let mut row: Vec<BigInt> = exps
                .iter()
                .map(|e| e.iter().find(|(q, _)| q == p).map_or(BigInt::zero(), |(_, k)| BigInt::from(*k)))
                .collect();
            row.push(BigInt::zero());
            row
        })
        .collect();
    let mut sign: Vec<BigInt> =
        roots.iter().map(|x| if x.is_negative() { BigInt::one() } else { BigInt::zero() }).collect();
    sign.push(BigInt::from(2));
    m.push(sign);
    let mut out: Vec<Vec<BigInt>> = integer_kernel(&m, r + 1)
        .into_iter()
        .map(|mut v| {
            v.pop();
            // last nonzero entry positive
            if v.iter().rev().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
                v.iter_mut().for_each(|x| *x = -x.clone());
            }
            v
        })
        .filter(|v| v.iter().any(|x| !x.is_zero()))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Binomial `prod_{v>0} u^v - prod_{v<0} u^-v`.
pub fn binomial(v: &[BigInt], vars: &[Var]) -> Polynomial {
    let part = |positive: bool| {
        Monomial::from_exponents(vars.iter().zip(v).filter_map(|(u, e)| {
            let e = if positive { e.clone() } else { -e.clone() };
            e.is_positive().then(|| (u.clone(), e.to_u32().expect("exponent fits u32")))
        }))
    };
    Polynomial::term(Rat::one(), part(true)) - Polynomial::term(Rat::one(), part(false))
}

/// Binomial generators of the algebraic relations among `roots[j]^n`.
pub fn exponent_relations(roots: &[Rat], vars: &[Var]) -> Vec<Polynomial> {
    multiplicative_relations(roots).iter().map(|v| binomial(v, vars)).collect()
}
