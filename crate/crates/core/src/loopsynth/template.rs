use std::collections::BTreeMap;

use num_traits::One;

use super::{Domain, SynthError, Unknown};
use crate::poly::{Monomial, Polynomial, Rat, Var, VarKind};

/// Which unknowns are searched over the integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientDomain {
    /// Init, matrix and root unknowns integral; closed-form coefficients rational.
    Integer,
    Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateConfig {
    pub size: usize,
    /// Symbolic roots besides the fixed root 1.
    pub extra_roots: usize,
    /// Highest power of `n` per root; `None` means `size`.
    pub degree: Option<usize>,
    /// Initial values by variable name.
    pub fixed_init: BTreeMap<String, Rat>,
    /// Matrix entries by (row, column); column `size` is the offset.
    pub fixed_entries: BTreeMap<(usize, usize), Rat>,
    pub coefficient_domain: CoefficientDomain,
}

impl TemplateConfig {
    pub fn new(size: usize) -> Self {
        TemplateConfig {
            size,
            extra_roots: 1,
            degree: None,
            fixed_init: BTreeMap::new(),
            fixed_entries: BTreeMap::new(),
            coefficient_domain: CoefficientDomain::Integer,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree.unwrap_or(self.size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisTemplate {
    pub vars: Vec<Var>,
    pub init: Vec<Polynomial>,
    pub matrix: Vec<Vec<Polynomial>>,
    pub offset: Vec<Polynomial>,
    /// `roots[0]` is the constant 1, then one unknown per symbolic root.
    pub roots: Vec<Polynomial>,
    /// `exp_vars[r]` stands for `roots[r + 1]^n`.
    pub exp_vars: Vec<Var>,
    pub counter: Var,
    /// `coeffs[i][rho][k]` multiplies `roots[rho]^n * n^k` in the form of variable `i`.
    pub coeffs: Vec<Vec<Vec<Var>>>,
    pub degree: usize,
    pub unknowns: Vec<Unknown>,
}

const EXTRA_NAMES: [&str; 8] = ["z", "w", "v", "u", "t", "s", "r", "q"];

/// The invariant variables followed by fresh names up to `size`.
pub fn template_vars(vars: &[Var], size: usize) -> Vec<Var> {
    let mut out: Vec<Var> = vars.to_vec();
    let mut pool = EXTRA_NAMES.iter().map(|s| s.to_string()).chain((1..).map(|i| format!("x{i}")));
    while out.len() < size {
        let name = pool.next().expect("unbounded pool");
        if !out.iter().any(|v| v.name() == name) {
            out.push(Var::program(name));
        }
    }
    out
}

impl SynthesisTemplate {
    pub fn size(&self) -> usize {
        self.vars.len()
    }

    /// Exponential part of root `rho`: 1 for the fixed root.
    pub fn exp_monomial(&self, rho: usize) -> Monomial {
        if rho == 0 {
            Monomial::one()
        } else {
            Monomial::var(&self.exp_vars[rho - 1])
        }
    }

    /// Closed-form templates `F_i = sum c_{i,rho,k} u_rho n^k`.
    pub fn forms(&self) -> Vec<Polynomial> {
        self.coeffs
            .iter()
            .map(|per_root| {
                let mut f = Polynomial::zero();
                for (rho, per_k) in per_root.iter().enumerate() {
                    let base = self.exp_monomial(rho);
                    for (k, c) in per_k.iter().enumerate() {
                        let m = base.mul(&Monomial::pow_of(&self.counter, k as u32)).mul(&Monomial::var(c));
                        f.add_term(m, Rat::one());
                    }
                }
                f
            })
            .collect()
    }

    pub fn omega_vars(&self) -> Vec<Var> {
        self.roots[1..].iter().flat_map(|r| r.vars()).collect()
    }
}

pub fn build_template(vars: &[Var], cfg: &TemplateConfig) -> Result<SynthesisTemplate, SynthError> {
    let s = cfg.size;
    if s == 0 || s < vars.len() {
        return Err(SynthError::InvalidTemplate(format!(
            "size {s} is smaller than the {} invariant variables",
            vars.len()
        )));
    }
    let tvars = template_vars(vars, s);
    for name in cfg.fixed_init.keys() {
        if !tvars.iter().any(|v| v.name() == name) {
            return Err(SynthError::InvalidTemplate(format!("fixed initial value for unknown variable `{name}`")));
        }
    }
    for &(i, j) in cfg.fixed_entries.keys() {
        if i >= s || j > s {
            return Err(SynthError::InvalidTemplate(format!("fixed entry ({i}, {j}) outside the {s}x{} matrix", s + 1)));
        }
    }
    let d = cfg.degree();
    let searched = match cfg.coefficient_domain {
        CoefficientDomain::Integer => Domain::Int,
        CoefficientDomain::Rational => Domain::Real,
    };
    let unknown = |name: String, kind: VarKind| Var::new(name, kind);
    let mut unknowns: Vec<Unknown> = Vec::new();

    let init: Vec<Polynomial> = tvars
        .iter()
        .enumerate()
        .map(|(i, v)| match cfg.fixed_init.get(v.name()) {
            Some(c) => Polynomial::constant(c.clone()),
            None => {
                let a = unknown(format!("a{}", i + 1), VarKind::Template);
                unknowns.push(Unknown { var: a.clone(), domain: searched });
                Polynomial::var(&a)
            }
        })
        .collect();

    let mut rows: Vec<Vec<Polynomial>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut row = Vec::with_capacity(s + 1);
        for j in 0..=s {
            row.push(match cfg.fixed_entries.get(&(i, j)) {
                Some(c) => Polynomial::constant(c.clone()),
                None => {
                    let b = unknown(format!("b{}_{}", i + 1, j + 1), VarKind::Template);
                    unknowns.push(Unknown { var: b.clone(), domain: searched });
                    Polynomial::var(&b)
                }
            });
        }
        rows.push(row);
    }
    let offset: Vec<Polynomial> = rows.iter_mut().map(|r| r.pop().expect("offset column")).collect();

    let mut roots = vec![Polynomial::one()];
    let mut exp_vars = Vec::new();
    for k in 1..=cfg.extra_roots {
        let w = unknown(format!("omega{k}"), VarKind::Template);
        unknowns.push(Unknown { var: w.clone(), domain: searched });
        roots.push(Polynomial::var(&w));
        exp_vars.push(Var::new(format!("u{k}"), VarKind::Exponential));
    }

    let coeffs: Vec<Vec<Vec<Var>>> = (0..s)
        .map(|i| {
            (0..roots.len())
                .map(|rho| {
                    (0..=d)
                        .map(|k| {
                            let c = unknown(format!("c{}_{}_{}", i + 1, rho, k), VarKind::Template);
                            unknowns.push(Unknown { var: c.clone(), domain: Domain::Real });
                            c
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(SynthesisTemplate {
        vars: tvars,
        init,
        matrix: rows,
        offset,
        roots,
        exp_vars,
        counter: Var::new("n", VarKind::Counter),
        coeffs,
        degree: d,
        unknowns,
    })
}
