#![allow(dead_code)]

use std::collections::HashMap;

use loopalg::linalg::{inverse, mat_mul, Matrix};
use loopalg::loopfront::{parse_loop, LoopProgram};
use loopalg::poly::{rat, Polynomial, Rat, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["loopalg"];
    full.extend_from_slice(args);
    let code = loopalg::cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Splits `synth` output into loop texts.
pub fn loops_of(report: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in report.lines() {
        if line.starts_with("# loop") {
            out.push(String::new());
        } else if let Some(cur) = out.last_mut() {
            cur.push_str(line);
            cur.push('\n');
        }
    }
    out
}

pub const NAMES: [&str; 3] = ["x", "y", "z"];

pub fn small(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    rat(rng.gen_range(lo..=hi))
}

/// Unit triangular factors with entries in {-1, 0, 1}; their product is unimodular.
fn unimodular(rng: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let mut lower = vec![vec![rat(0); dim]; dim];
    let mut upper = vec![vec![rat(0); dim]; dim];
    for i in 0..dim {
        lower[i][i] = rat(1);
        upper[i][i] = rat(1);
        for j in 0..i {
            lower[i][j] = small(rng, -1, 1);
            upper[j][i] = small(rng, -1, 1);
        }
    }
    mat_mul(&lower, &upper)
}

/// Integer matrix `P T P^-1` with `T` upper triangular, so every eigenvalue is
/// a diagonal entry of `T` drawn from `diag`.
pub fn rational_eigen_matrix(rng: &mut ChaCha8Rng, dim: usize, diag: &[i64]) -> Matrix {
    let mut t = vec![vec![rat(0); dim]; dim];
    for i in 0..dim {
        t[i][i] = rat(diag[rng.gen_range(0..diag.len())]);
        for j in i + 1..dim {
            t[i][j] = small(rng, -1, 1);
        }
    }
    let p = unimodular(rng, dim);
    let p_inv = inverse(&p).expect("unimodular");
    mat_mul(&mat_mul(&p, &t), &p_inv)
}

/// Loop text with a simultaneous update `x := A x + b`.
pub fn loop_text(a: &Matrix, b: &[Rat], init: &[Rat]) -> String {
    let dim = a.len();
    let vars: Vec<Var> = NAMES[..dim].iter().map(Var::program).collect();
    let rhs: Vec<String> = (0..dim)
        .map(|i| {
            let mut p = Polynomial::constant(b[i].clone());
            for j in 0..dim {
                p += Polynomial::var(&vars[j]).scale(&a[i][j]);
            }
            p.to_string()
        })
        .collect();
    let names = NAMES[..dim].join(", ");
    let inits: Vec<String> = init.iter().map(|r| Polynomial::constant(r.clone()).to_string()).collect();
    format!("vars: {names}\n({names}) := ({})\nwhile true:\n    ({names}) := ({})\n", inits.join(", "), rhs.join(", "))
}

pub fn random_loop(rng: &mut ChaCha8Rng, dim: usize, diag: &[i64]) -> (String, LoopProgram) {
    let a = rational_eigen_matrix(rng, dim, diag);
    let b: Vec<Rat> = (0..dim).map(|_| small(rng, -2, 2)).collect();
    let init: Vec<Rat> = (0..dim).map(|_| small(rng, -3, 3)).collect();
    let text = loop_text(&a, &b, &init);
    let l = parse_loop(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    (text, l)
}

/// States 0..=n by executing the loop body.
pub fn execute(l: &LoopProgram, n: usize) -> Vec<Vec<Rat>> {
    let mut state: HashMap<Var, Rat> =
        l.vars.iter().cloned().zip(l.init.iter().map(|p| p.as_constant().expect("numeric init"))).collect();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        out.push(l.vars.iter().map(|v| state[v].clone()).collect());
        if k < n {
            state = l.execute_body(&state);
        }
    }
    out
}
