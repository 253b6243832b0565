//! Loop mini-language, invariant files, and the affine recurrence view of a loop.
//!
//! ```text
//! vars: x, z, y
//! (x, z, y) := (0, 0, 0)
//! while y < N:
//!     x := x + z + 1
//!     z := z + 2
//!     y := y + 1
//! ```
//!
//! Guards are kept as raw text and otherwise ignored. Variables without an
//! initial value, and identifiers on the right of an initialisation, are
//! symbolic parameters.

mod recurrence;

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::poly::{fresh_name, parse_polynomial_with, MonomialOrder, Polynomial, Rat, Var, VarKind};

pub use recurrence::{to_simultaneous, RecurrenceSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoopError {
    #[error("SyntaxError at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("NonAffineUpdate: `{0}` is not affine in the program variables")]
    NonAffineUpdate(String),
    #[error("UnknownVariable: `{name}` at line {line}")]
    UnknownVariable { name: String, line: usize },
    #[error("NondetUnsupported: nondeterministic assignment at line {0}")]
    NondetUnsupported(usize),
    #[error("EmptyInvariant: line {0} is the zero polynomial")]
    EmptyInvariant(usize),
    #[error("SymbolicInitial: the initial state depends on parameters {0:?}")]
    SymbolicInitial(Vec<String>),
}

impl LoopError {
    pub fn name(&self) -> &'static str {
        match self {
            LoopError::Syntax { .. } => "SyntaxError",
            LoopError::NonAffineUpdate(_) => "NonAffineUpdate",
            LoopError::UnknownVariable { .. } => "UnknownVariable",
            LoopError::NondetUnsupported(_) => "NondetUnsupported",
            LoopError::EmptyInvariant(_) => "EmptyInvariant",
            LoopError::SymbolicInitial(_) => "SymbolicInitial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign { lhs: Var, rhs: Polynomial },
    /// `(x, y) := (e1, e2)`: all right-hand sides read the pre-state.
    Parallel { lhs: Vec<Var>, rhs: Vec<Polynomial> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopProgram {
    pub vars: Vec<Var>,
    /// Initial value per variable, aligned with `vars`; polynomials over parameters.
    pub init: Vec<Polynomial>,
    pub body: Vec<Stmt>,
    pub guard: Option<String>,
    pub warnings: Vec<String>,
}

impl LoopProgram {
    pub fn parameters(&self) -> Vec<Var> {
        let mut seen = Vec::new();
        for p in &self.init {
            for v in p.vars() {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
        }
        seen
    }

    /// Runs the body once, statement by statement, on a concrete state.
    pub fn execute_body(&self, state: &HashMap<Var, Rat>) -> HashMap<Var, Rat> {
        let mut s = state.clone();
        for stmt in &self.body {
            match stmt {
                Stmt::Assign { lhs, rhs } => {
                    let val = rhs.eval(&s).expect("rhs over program variables");
                    s.insert(lhs.clone(), val);
                }
                Stmt::Parallel { lhs, rhs } => {
                    let vals: Vec<Rat> = rhs.iter().map(|r| r.eval(&s).expect("rhs over program variables")).collect();
                    for (v, val) in lhs.iter().zip(vals) {
                        s.insert(v.clone(), val);
                    }
                }
            }
        }
        s
    }

    fn print_order(&self) -> MonomialOrder {
        MonomialOrder::lex(self.vars.iter().cloned().chain(self.parameters()).collect())
    }
}

impl fmt::Display for LoopProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = self.print_order();
        let names: Vec<&str> = self.vars.iter().map(Var::name).collect();
        writeln!(f, "vars: {}", names.join(", "))?;
        for (v, p) in self.vars.iter().zip(&self.init) {
            writeln!(f, "{v} := {}", p.display_with(&order))?;
        }
        writeln!(f, "while {}:", self.guard.as_deref().unwrap_or("true"))?;
        for stmt in &self.body {
            match stmt {
                Stmt::Assign { lhs, rhs } => writeln!(f, "    {lhs} := {}", rhs.display_with(&order))?,
                Stmt::Parallel { lhs, rhs } => {
                    let l: Vec<&str> = lhs.iter().map(Var::name).collect();
                    let r: Vec<String> = rhs.iter().map(|p| p.display_with(&order)).collect();
                    writeln!(f, "    ({}) := ({})", l.join(", "), r.join(", "))?
                }
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim_end()
}

/// Splits on `sep` outside parentheses.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> LoopError {
    LoopError::Syntax { line, col, message: message.into() }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// `lhs := rhs` where either side may be a parenthesised tuple.
fn split_assignment(text: &str, line: usize) -> Result<(Vec<String>, Vec<String>), LoopError> {
    let Some((lhs, rhs)) = text.split_once(":=") else {
        return Err(syntax(line, 1, "expected `:=`"));
    };
    let (lhs, rhs) = (lhs.trim(), rhs.trim());
    let tuple = |s: &str| -> Option<Vec<String>> {
        let inner = s.strip_prefix('(')?.strip_suffix(')')?;
        // `(x + 1)*y` is not a tuple
        let mut depth = 0;
        for (i, c) in s.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 && i != s.len() - 1 {
                        return None;
                    }
                }
                _ => {}
            }
        }
        Some(split_top_level(inner, ',').into_iter().map(|p| p.trim().to_string()).collect())
    };
    if lhs.starts_with('(') {
        let names = tuple(lhs).ok_or_else(|| syntax(line, 1, "malformed tuple on the left of `:=`"))?;
        let values = tuple(rhs).ok_or_else(|| syntax(line, 1, "expected a tuple on the right of `:=`"))?;
        if names.len() != values.len() {
            return Err(syntax(line, 1, "tuple arity mismatch"));
        }
        Ok((names, values))
    } else {
        Ok((vec![lhs.to_string()], vec![rhs.to_string()]))
    }
}

fn is_nondet(rhs: &str) -> bool {
    let compact: String = rhs.chars().filter(|c| !c.is_whitespace()).collect();
    compact.contains("nondet(")
}

pub fn parse_loop(text: &str) -> Result<LoopProgram, LoopError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut it = lines.into_iter().peekable();

    let (lno, header) = it.next().ok_or_else(|| syntax(1, 1, "empty loop file"))?;
    let decl = header
        .trim()
        .strip_prefix("vars")
        .and_then(|s| s.trim_start().strip_prefix(':'))
        .ok_or_else(|| syntax(lno, 1, "expected `vars: ...`"))?;
    let mut vars: Vec<Var> = Vec::new();
    for name in decl.split(',').map(str::trim) {
        if !is_ident(name) {
            return Err(syntax(lno, 1, format!("invalid variable name `{name}`")));
        }
        let v = Var::program(name);
        if vars.contains(&v) {
            return Err(syntax(lno, 1, format!("variable `{name}` declared twice")));
        }
        vars.push(v);
    }
    let program: HashSet<Var> = vars.iter().cloned().collect();

    let mut init: HashMap<Var, Polynomial> = HashMap::new();
    let mut guard = None;
    for (lno, line) in it.by_ref() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("while") {
            let cond = rest
                .trim()
                .strip_suffix(':')
                .ok_or_else(|| syntax(lno, line.len(), "expected `:` after the loop condition"))?
                .trim();
            guard = Some(cond.to_string());
            break;
        }
        let (names, values) = split_assignment(t, lno)?;
        for (name, value) in names.iter().zip(&values) {
            let v = Var::program(name);
            if !program.contains(&v) {
                return Err(LoopError::UnknownVariable { name: name.clone(), line: lno });
            }
            let p = parse_polynomial_with(value, |id| {
                let w = Var::new(id, VarKind::Parameter);
                if program.contains(&w) {
                    Err(format!("initial value of `{name}` refers to program variable `{id}`"))
                } else {
                    Ok(w)
                }
            })
            .map_err(|e| syntax(lno, e.pos + 1, e.message))?;
            init.insert(v, p);
        }
    }
    let guard = guard.ok_or_else(|| syntax(lno, 1, "missing `while` line"))?;

    let mut body = Vec::new();
    for (lno, line) in it {
        let t = line.trim();
        if t == "end" {
            continue;
        }
        let (names, values) = split_assignment(t, lno)?;
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for (name, value) in names.iter().zip(&values) {
            let v = Var::program(name);
            if !program.contains(&v) {
                return Err(LoopError::UnknownVariable { name: name.clone(), line: lno });
            }
            if is_nondet(value) {
                return Err(LoopError::NondetUnsupported(lno));
            }
            let mut unknown = None;
            let p = parse_polynomial_with(value, |id| {
                let w = Var::program(id);
                if program.contains(&w) {
                    Ok(w)
                } else {
                    unknown.get_or_insert_with(|| id.to_string());
                    Err(format!("unknown variable `{id}`"))
                }
            });
            let p = match (p, unknown) {
                (_, Some(name)) => return Err(LoopError::UnknownVariable { name, line: lno }),
                (Err(e), None) => return Err(syntax(lno, e.pos + 1, e.message)),
                (Ok(p), None) => p,
            };
            if p.total_degree() > 1 {
                return Err(LoopError::NonAffineUpdate(t.to_string()));
            }
            lhs.push(v);
            rhs.push(p);
        }
        if lhs.len() == 1 {
            body.push(Stmt::Assign { lhs: lhs.remove(0), rhs: rhs.remove(0) });
        } else {
            body.push(Stmt::Parallel { lhs, rhs });
        }
    }

    // uninitialised variables become parameters named after them
    let mut taken: HashSet<String> = vars.iter().map(|v| v.name().to_string()).collect();
    for p in init.values() {
        taken.extend(p.vars().iter().map(|v| v.name().to_string()));
    }
    let mut init_vec = Vec::with_capacity(vars.len());
    for v in &vars {
        let p = match init.remove(v) {
            Some(p) => p,
            None => {
                let name = fresh_name(&format!("{}0", v.name()), |s| taken.contains(s));
                taken.insert(name.clone());
                Polynomial::var(&Var::new(name, VarKind::Parameter))
            }
        };
        init_vec.push(p);
    }

    let mut warnings = Vec::new();
    if guard != "true" {
        let msg = format!("loop guard `{guard}` is ignored");
        log::info!("{msg}");
        warnings.push(msg);
    }
    Ok(LoopProgram { vars, init: init_vec, body, guard: Some(guard), warnings })
}

/// One polynomial or `p = q` equation per line; `#` starts a comment.
///
/// With `allowed`, identifiers outside the list are rejected.
pub fn parse_invariants(text: &str, allowed: Option<&[Var]>) -> Result<Vec<Polynomial>, LoopError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lno = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let mut unknown = None;
        let mut parse = |s: &str| {
            parse_polynomial_with(s, |id| {
                let v = Var::program(id);
                match allowed {
                    Some(list) if !list.contains(&v) => {
                        unknown.get_or_insert_with(|| id.to_string());
                        Err(format!("unknown variable `{id}`"))
                    }
                    _ => Ok(v),
                }
            })
        };
        let parsed = match line.split_once('=') {
            Some((l, r)) => parse(l).and_then(|l| parse(r).map(|r| &l - &r)),
            None => parse(line),
        };
        let p = match (parsed, unknown) {
            (_, Some(name)) => return Err(LoopError::UnknownVariable { name, line: lno }),
            (Err(e), None) => return Err(syntax(lno, e.pos + 1, e.message)),
            (Ok(p), None) => p,
        };
        if p.is_zero() {
            return Err(LoopError::EmptyInvariant(lno));
        }
        out.push(p);
    }
    Ok(out)
}

/// Variables of `polys` in order of first appearance in `text`, falling back to name order.
pub fn variables_in_order(text: &str, polys: &[Polynomial]) -> Vec<Var> {
    let mut all: Vec<Var> = Vec::new();
    for p in polys {
        for v in p.vars() {
            if !all.contains(&v) {
                all.push(v);
            }
        }
    }
    let first_pos = |v: &Var| {
        let mut pos = None;
        for (i, _) in text.match_indices(v.name()) {
            let before = text[..i].chars().next_back();
            let after = text[i + v.name().len()..].chars().next();
            let boundary = |c: Option<char>| !matches!(c, Some(c) if c.is_alphanumeric() || c == '_');
            if boundary(before) && boundary(after) {
                pos = Some(i);
                break;
            }
        }
        pos.unwrap_or(usize::MAX)
    };
    all.sort_by_key(|v| (first_pos(v), v.clone()));
    all
}
