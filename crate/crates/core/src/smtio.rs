//! SMT-LIB2 serialization of constraint problems and a subprocess solver client.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::loopsynth::{verify_model, Case, Constraint, Control, Domain, Model, Pcp, SynthError};
use crate::poly::{Monomial, Polynomial, Rat};

pub const SOLVER_ENV: &str = "LOOPALG_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3 -in -smt2";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("SolverNotFound: cannot start `{0}`")]
    SolverNotFound(String),
    #[error("SolverProtocolError: {0}")]
    SolverProtocolError(String),
    #[error("Timeout: solver exceeded {0:?}")]
    Timeout(Duration),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl SmtError {
    pub fn name(&self) -> &'static str {
        match self {
            SmtError::SolverNotFound(_) => "SolverNotFound",
            SmtError::SolverProtocolError(_) => "SolverProtocolError",
            SmtError::Timeout(_) => "Timeout",
            SmtError::Synth(e) => e.name(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmtMode {
    PerCase,
    Disjunctive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverSpec {
    pub command: Vec<String>,
    pub timeout: Duration,
    pub logic: String,
}

impl SolverSpec {
    pub fn new(command: &str, timeout: Duration) -> Self {
        SolverSpec {
            command: command.split_whitespace().map(str::to_string).collect(),
            timeout,
            logic: "QF_NRA".into(),
        }
    }

    /// Command from the environment, falling back to z3.
    pub fn from_env(timeout: Duration) -> Self {
        let cmd = std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty());
        SolverSpec::new(cmd.as_deref().unwrap_or(DEFAULT_SOLVER), timeout)
    }
}

fn literal(r: &Rat) -> String {
    let abs = r.abs();
    let body = if abs.is_integer() { abs.numer().to_string() } else { format!("(/ {} {})", abs.numer(), abs.denom()) };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn term(c: &Rat, m: &Monomial) -> String {
    if m.is_one() {
        return literal(c);
    }
    let factors: Vec<&str> = m.factors().flat_map(|(v, e)| std::iter::repeat_n(v.name(), e as usize)).collect();
    let neg = c.is_negative();
    let abs = c.abs();
    let product = if abs.is_one() && factors.len() == 1 {
        factors[0].to_string()
    } else if abs.is_one() {
        format!("(* {})", factors.join(" "))
    } else {
        format!("(* {} {})", literal(&abs), factors.join(" "))
    };
    if neg {
        format!("(- {product})")
    } else {
        product
    }
}

fn sum(p: &Polynomial) -> String {
    let terms: Vec<String> = p.terms().map(|(m, c)| term(c, m)).collect();
    match terms.len() {
        0 => "0".into(),
        1 => terms.into_iter().next().expect("one term"),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

/// `p = 0` with the constant moved to the right-hand side.
fn equation(p: &Polynomial) -> String {
    let c = p.constant_term();
    let mut lhs = p.clone();
    lhs.add_term(Monomial::one(), -c.clone());
    format!("(= {} {})", sum(&lhs), literal(&-c))
}

fn atom(k: &Constraint, equal: bool) -> String {
    if equal {
        equation(&k.poly)
    } else {
        format!("(not {})", equation(&k.poly))
    }
}

fn case_atoms(c: &Case) -> Vec<String> {
    c.equalities.iter().map(|k| atom(k, true)).chain(c.disequalities.iter().map(|k| atom(k, false))).collect()
}

fn header(pcp: &Pcp, logic: &str) -> String {
    let mut out = format!("(set-logic {logic})\n");
    for u in &pcp.unknowns {
        writeln!(out, "(declare-const {} Real)", u.var.name()).expect("string write");
    }
    out
}

fn footer(pcp: &Pcp, out: &mut String) {
    out.push_str("(check-sat)\n");
    if !pcp.unknowns.is_empty() {
        let names: Vec<&str> = pcp.unknowns.iter().map(|u| u.var.name()).collect();
        writeln!(out, "(get-value ({}))", names.join(" ")).expect("string write");
    }
}

/// Excludes an earlier model: some unknown in `vars` must differ.
fn blocking(m: &Model, vars: &[&str]) -> String {
    let parts: Vec<String> = m
        .values
        .iter()
        .filter(|(v, _)| vars.contains(&v.name()))
        .map(|(v, r)| format!("(= {} {})", v.name(), literal(r)))
        .collect();
    match parts.len() {
        0 => "(assert false)\n".into(),
        1 => format!("(assert (not {}))\n", parts[0]),
        _ => format!("(assert (not (and {})))\n", parts.join(" ")),
    }
}

/// Document for one case, with previous models excluded over `block_vars`.
pub fn case_document(pcp: &Pcp, case: usize, logic: &str, exclude: &[Model], block_vars: &[&str]) -> String {
    let mut out = header(pcp, logic);
    for a in case_atoms(&pcp.cases[case]) {
        writeln!(out, "(assert {a})").expect("string write");
    }
    for m in exclude {
        out.push_str(&blocking(m, block_vars));
    }
    footer(pcp, &mut out);
    out
}

/// Single document asserting the disjunction of all cases. Atoms shared by
/// every case are asserted once outside the disjunction.
pub fn disjunctive_document(pcp: &Pcp, logic: &str) -> String {
    let mut out = header(pcp, logic);
    let per_case: Vec<Vec<String>> = pcp.cases.iter().map(case_atoms).collect();
    let shared: Vec<String> = match per_case.first() {
        Some(first) => {
            let mut seen = BTreeSet::new();
            first
                .iter()
                .filter(|a| per_case[1..].iter().all(|c| c.contains(a)) && seen.insert(a.to_string()))
                .cloned()
                .collect()
        }
        None => Vec::new(),
    };
    for a in &shared {
        writeln!(out, "(assert {a})").expect("string write");
    }
    let branches: Vec<String> = per_case
        .iter()
        .map(|atoms| {
            let rest: Vec<&String> = atoms.iter().filter(|a| !shared.contains(a)).collect();
            match rest.len() {
                0 => "true".to_string(),
                1 => rest[0].clone(),
                _ => format!("(and {})", rest.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")),
            }
        })
        .collect();
    match branches.len() {
        0 => out.push_str("(assert false)\n"),
        1 if branches[0] == "true" => {}
        1 => writeln!(out, "(assert {})", branches[0]).expect("string write"),
        _ => writeln!(out, "(assert (or {}))", branches.join(" ")).expect("string write"),
    }
    footer(pcp, &mut out);
    out
}

pub fn emit_smt(pcp: &Pcp, mode: SmtMode) -> Vec<String> {
    match mode {
        SmtMode::PerCase => (0..pcp.cases.len()).map(|i| case_document(pcp, i, "QF_NRA", &[], &[])).collect(),
        SmtMode::Disjunctive => vec![disjunctive_document(pcp, "QF_NRA")],
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverOutcome {
    /// `(name, value)` pairs exactly as printed by the solver.
    Sat(Vec<(String, String)>),
    Unsat,
    Unknown,
}

pub fn run_solver(doc: &str, spec: &SolverSpec) -> Result<SolverOutcome, SmtError> {
    let (program, args) = spec.command.split_first().ok_or_else(|| SmtError::SolverNotFound(String::new()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|_| SmtError::SolverNotFound(spec.command.join(" ")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = doc.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= spec.timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SmtError::Timeout(spec.timeout));
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(SmtError::SolverProtocolError(e.to_string())),
        }
    }
    let _ = writer.join();
    let text = reader.join().unwrap_or_default();
    classify(&text)
}

fn classify(text: &str) -> Result<SolverOutcome, SmtError> {
    let trimmed = text.trim_start();
    let (status, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
    match status {
        "unsat" => Ok(SolverOutcome::Unsat),
        "unknown" => Ok(SolverOutcome::Unknown),
        "sat" => {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(SolverOutcome::Sat(Vec::new()));
            }
            let sexp = parse_sexp(rest)?;
            let Sexp::List(pairs) = sexp else {
                return Err(protocol(rest));
            };
            pairs
                .into_iter()
                .map(|p| match p {
                    Sexp::List(mut kv) if kv.len() == 2 => {
                        let value = kv.pop().expect("two items");
                        match kv.pop().expect("two items") {
                            Sexp::Atom(name) => Ok((name, value.to_string())),
                            other => Err(protocol(&other.to_string())),
                        }
                    }
                    other => Err(protocol(&other.to_string())),
                })
                .collect::<Result<_, _>>()
                .map(SolverOutcome::Sat)
        }
        _ => Err(protocol(text.trim())),
    }
}

fn protocol(text: &str) -> SmtError {
    let short: String = text.chars().take(200).collect();
    SmtError::SolverProtocolError(format!("unexpected response `{short}`"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl std::fmt::Display for Sexp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn parse_sexp(text: &str) -> Result<Sexp, SmtError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut atom = String::new();
    let flush = |atom: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !atom.is_empty() {
            stack.last_mut().expect("open list").push(Sexp::Atom(std::mem::take(atom)));
        }
    };
    for ch in text.chars() {
        match ch {
            '(' => {
                flush(&mut atom, &mut stack);
                stack.push(Vec::new());
            }
            ')' => {
                flush(&mut atom, &mut stack);
                if stack.len() < 2 {
                    return Err(protocol(text));
                }
                let done = stack.pop().expect("nonempty");
                stack.last_mut().expect("outer").push(Sexp::List(done));
            }
            c if c.is_whitespace() => flush(&mut atom, &mut stack),
            c => atom.push(c),
        }
    }
    flush(&mut atom, &mut stack);
    let mut top = stack.pop().filter(|_| stack.is_empty()).ok_or_else(|| protocol(text))?;
    if top.len() != 1 {
        return Err(protocol(text));
    }
    Ok(top.pop().expect("one item"))
}

fn number(atom: &str) -> Option<Rat> {
    if let Some((int, frac)) = atom.split_once('.') {
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Rat::new(digits, scale));
    }
    if atom.bytes().all(|b| b.is_ascii_digit()) && !atom.is_empty() {
        return atom.parse::<BigInt>().ok().map(Rat::from_integer);
    }
    None
}

fn value(s: &Sexp) -> Option<Rat> {
    match s {
        Sexp::Atom(a) => number(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => value(x).map(|v| -v),
            [Sexp::Atom(op), p, q] if op == "/" => {
                let q = value(q)?;
                (!q.is_zero()).then(|| value(p).map(|p| p / q)).flatten()
            }
            _ => None,
        },
    }
}

/// Exact rational value of one printed solver value.
pub fn parse_value(name: &str, raw: &str) -> Result<Rat, SmtError> {
    let sexp = parse_sexp(raw)?;
    value(&sexp).ok_or_else(|| SmtError::Synth(SynthError::NonRationalModel(name.to_string())))
}

/// Model in the PCP's unknown order; the case is the first one whose
/// constraints the values satisfy.
pub fn parse_model(pcp: &Pcp, raw: &[(String, String)], case: Option<usize>) -> Result<Model, SmtError> {
    let mut values = Vec::with_capacity(pcp.unknowns.len());
    for u in &pcp.unknowns {
        let (_, text) = raw
            .iter()
            .find(|(n, _)| n == u.var.name())
            .ok_or_else(|| SmtError::SolverProtocolError(format!("no value for `{}`", u.var.name())))?;
        values.push((u.var.clone(), parse_value(u.var.name(), text)?));
    }
    let mut model = Model { case: case.unwrap_or(0), values };
    if case.is_none() {
        if let Some(i) = (0..pcp.cases.len()).find(|&i| verify_model(pcp, &Model { case: i, ..model.clone() })) {
            model.case = i;
        }
    }
    Ok(model)
}

/// Solves every case in order, reporting each verified model. Models of one
/// case are enumerated by blocking the values of the integer-domain unknowns.
pub fn solve_smt_with(
    pcp: &Pcp,
    spec: &SolverSpec,
    on_model: &mut dyn FnMut(&Model) -> Control,
) -> Result<usize, SmtError> {
    let block_vars: Vec<&str> =
        pcp.unknowns.iter().filter(|u| u.domain == Domain::Int).map(|u| u.var.name()).collect();
    let mut count = 0;
    for case in 0..pcp.cases.len() {
        let mut found: Vec<Model> = Vec::new();
        loop {
            let doc = case_document(pcp, case, &spec.logic, &found, &block_vars);
            let raw = match run_solver(&doc, spec)? {
                SolverOutcome::Sat(raw) => raw,
                SolverOutcome::Unsat => break,
                SolverOutcome::Unknown => {
                    log::warn!("solver returned unknown on case {case}");
                    break;
                }
            };
            let m = parse_model(pcp, &raw, Some(case))?;
            if !verify_model(pcp, &m) {
                return Err(SmtError::SolverProtocolError(format!("model for case {case} fails exact re-evaluation")));
            }
            count += 1;
            if on_model(&m) == Control::Stop {
                return Ok(count);
            }
            if block_vars.is_empty() {
                break;
            }
            found.push(m);
        }
    }
    Ok(count)
}

/// Up to `max_models` verified models; `Unsat` when there are none.
pub fn solve_smt(pcp: &Pcp, spec: &SolverSpec, max_models: usize) -> Result<Vec<Model>, SmtError> {
    let mut models = Vec::new();
    solve_smt_with(pcp, spec, &mut |m| {
        models.push(m.clone());
        if models.len() < max_models {
            Control::Continue
        } else {
            Control::Stop
        }
    })?;
    if models.is_empty() {
        return Err(SmtError::Synth(SynthError::Unsat));
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopsynth::{Tag, Unknown};
    use crate::poly::{parse_polynomial, ratio, Var};

    fn pcp_of(eqs: &[&str], neqs: &[&str]) -> Pcp {
        let k = |s: &&str, tag| Constraint::new(parse_polynomial(s).unwrap(), tag);
        let case = Case {
            equalities: eqs.iter().map(|s| k(s, Tag::C2)).collect(),
            disequalities: neqs.iter().map(|s| k(s, Tag::Case)).collect(),
            partition: Vec::new(),
        };
        let mut names = BTreeSet::new();
        for k in case.equalities.iter().chain(&case.disequalities) {
            names.extend(k.poly.vars());
        }
        let unknowns = names.into_iter().map(|var| Unknown { var, domain: Domain::Real }).collect();
        Pcp { unknowns, cases: vec![case] }
    }

    fn z3() -> Option<SolverSpec> {
        let spec = SolverSpec::new(DEFAULT_SOLVER, Duration::from_secs(20));
        run_solver("(check-sat)\n", &spec).ok().map(|_| spec)
    }

    #[test]
    fn serializes_equalities_and_disequalities() {
        let doc = &emit_smt(&pcp_of(&["a + b"], &["a - 1"]), SmtMode::PerCase)[0];
        assert!(doc.contains("(assert (= (+ a b) 0))"), "{doc}");
        assert!(doc.contains("(assert (not (= a 1)))"), "{doc}");
        assert!(doc.starts_with("(set-logic QF_NRA)\n(declare-const a Real)\n(declare-const b Real)\n"));
        assert!(doc.ends_with("(check-sat)\n(get-value (a b))\n"));
    }

    #[test]
    fn term_forms() {
        let doc = &emit_smt(&pcp_of(&["-7/2*x^2*y + 3 - x"], &[]), SmtMode::PerCase)[0];
        assert!(doc.contains("(= (+ (- x) (- (* (/ 7 2) x x y))) (- 3))"), "{doc}");
    }

    #[test]
    fn empty_pcp_and_determinism() {
        let empty = Pcp { unknowns: Vec::new(), cases: vec![Case { equalities: vec![], disequalities: vec![], partition: vec![] }] };
        let docs = emit_smt(&empty, SmtMode::PerCase);
        assert_eq!(docs, vec!["(set-logic QF_NRA)\n(check-sat)\n".to_string()]);
        assert_eq!(emit_smt(&empty, SmtMode::Disjunctive), docs);
        let p = pcp_of(&["a^2 - 2", "a*b - 1"], &["b"]);
        assert_eq!(emit_smt(&p, SmtMode::Disjunctive), emit_smt(&p, SmtMode::Disjunctive));
        assert_ne!(emit_smt(&p, SmtMode::PerCase), emit_smt(&pcp_of(&["a^2 - 3", "a*b - 1"], &["b"]), SmtMode::PerCase));
    }

    #[test]
    fn disjunction_factors_out_shared_atoms() {
        let mut p = pcp_of(&["a - 1", "b"], &[]);
        let mut other = p.cases[0].clone();
        other.equalities[1] = Constraint::new(parse_polynomial("b - 2").unwrap(), Tag::Case);
        p.cases.push(other);
        let doc = disjunctive_document(&p, "QF_NRA");
        assert!(doc.contains("(assert (= a 1))\n(assert (or (= b 0) (= b 2)))\n"), "{doc}");
    }

    #[test]
    fn parses_solver_values() {
        assert_eq!(parse_value("a", "(/ 7 2)").unwrap(), ratio(7, 2));
        assert_eq!(parse_value("a", "(- (/ 1 3))").unwrap(), ratio(-1, 3));
        assert_eq!(parse_value("a", "(/ 7.0 2.0)").unwrap(), ratio(7, 2));
        assert_eq!(parse_value("a", "1.25").unwrap(), ratio(5, 4));
        assert_eq!(parse_value("a", "(- 4)").unwrap(), ratio(-4, 1));
        let e = parse_value("w", "(root-obj (+ (^ x 2) (- 2)) 2)").unwrap_err();
        assert_eq!(e, SmtError::Synth(SynthError::NonRationalModel("w".into())));
        assert_eq!(parse_value("w", "1.4142?").unwrap_err().name(), "NonRationalModel");
    }

    #[test]
    fn classifies_responses() {
        assert_eq!(classify("unsat\n").unwrap(), SolverOutcome::Unsat);
        assert_eq!(classify("unknown\n").unwrap(), SolverOutcome::Unknown);
        assert_eq!(
            classify("sat\n((x 2)\n (y (- 1.0)))\n").unwrap(),
            SolverOutcome::Sat(vec![("x".into(), "2".into()), ("y".into(), "(- 1.0)".into())])
        );
        assert_eq!(classify("(error \"line 1\")").unwrap_err().name(), "SolverProtocolError");
    }

    #[test]
    fn missing_executable() {
        let spec = SolverSpec::new("/nonexistent/solver-binary -in", Duration::from_secs(1));
        assert_eq!(run_solver("(check-sat)", &spec).unwrap_err().name(), "SolverNotFound");
    }

    #[test]
    fn z3_round_trips() {
        let Some(spec) = z3() else {
            eprintln!("z3 not found; skipping");
            return;
        };
        let doc = "(set-logic QF_NRA)\n(declare-const x Real)\n(assert (= x 2))\n(check-sat)\n(get-value (x))\n";
        assert_eq!(run_solver(doc, &spec).unwrap(), SolverOutcome::Sat(vec![("x".into(), "2.0".into())]));
        let doc = "(set-logic QF_NRA)\n(declare-const x Real)\n(assert (< x x))\n(check-sat)\n";
        assert_eq!(run_solver(doc, &spec).unwrap(), SolverOutcome::Unsat);
        let empty = Pcp { unknowns: Vec::new(), cases: vec![Case { equalities: vec![], disequalities: vec![], partition: vec![] }] };
        assert_eq!(run_solver(&emit_smt(&empty, SmtMode::PerCase)[0], &spec).unwrap(), SolverOutcome::Sat(vec![]));

        let p = pcp_of(&["2*a - 7", "a*b + 1"], &[]);
        let models = solve_smt(&p, &spec, 5).unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].get(&Var::program("a")), Some(&ratio(7, 2)));
        assert_eq!(models[0].get(&Var::program("b")), Some(&ratio(-2, 7)));
        assert!(matches!(solve_smt(&pcp_of(&["a^2 + 1"], &[]), &spec, 5), Err(SmtError::Synth(SynthError::Unsat))));
        let irrational = solve_smt(&pcp_of(&["a^2 - 2"], &[]), &spec, 5).unwrap_err();
        assert_eq!(irrational.name(), "NonRationalModel");
    }
}
