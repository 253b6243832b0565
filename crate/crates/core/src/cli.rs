//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 analysis error, 3 unsat.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::groebner::{buchberger, GroebnerConfig};
use crate::invgen::{check_inductive, first_violation, invariant_ideal, invariant_ideal_with, oracle_check};
use crate::loopfront::{parse_invariants, parse_loop, to_simultaneous, variables_in_order, LoopError, LoopProgram};
use crate::loopsynth::template::CoefficientDomain;
use crate::loopsynth::{
    build_pcp, build_template, model_to_loop, solve_builtin_with, Control, Model, Pcp, SolverConfig, SynthError,
    SynthesisTemplate, TemplateConfig,
};
use crate::poly::{parse_polynomial, MonomialOrder, Polynomial, Rat, Var};
use crate::smtio::{self, SmtError, SmtMode, SolverSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;
pub const EXIT_UNSAT: i32 = 3;

/// Steps of the post-synthesis oracle run.
const ROUND_TRIP_ITERS: usize = 30;

#[derive(Parser, Debug)]
#[command(name = "loopalg", version, about = "Polynomial invariants of affine loops and loop synthesis from invariants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Compute the polynomial invariant ideal of a loop.
    Invgen(InvgenArgs),
    /// Synthesize loops that have the given invariants.
    Synth(SynthArgs),
    /// Check candidate invariants against a loop.
    Check(CheckArgs),
    /// Write the constraint problem for a synthesis task without solving it.
    EmitPcp(EmitArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct InvgenArgs {
    pub loop_file: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Include phase timings in the report.
    #[arg(long)]
    pub timings: bool,
    /// S-pair budget for Groebner computations.
    #[arg(long, default_value_t = GroebnerConfig::default().max_steps)]
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Int,
    Rational,
}

#[derive(Args, Debug)]
pub struct TemplateArgs {
    /// Number of loop variables; defaults to the number of invariant variables.
    #[arg(long)]
    pub size: Option<usize>,
    /// Symbolic eigenvalues besides 1.
    #[arg(long, default_value_t = 1)]
    pub roots: usize,
    /// Highest power of n in the closed forms; defaults to the size.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Fixed initial values, e.g. `x=0,y=0`.
    #[arg(long)]
    pub fix_init: Option<String>,
    /// Domain of the init, matrix and eigenvalue unknowns.
    #[arg(long, value_enum, default_value = "int")]
    pub domain: DomainArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Builtin,
    Smt,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    pub invariant_file: PathBuf,
    #[command(flatten)]
    pub template: TemplateArgs,
    #[arg(long, value_enum, default_value = "builtin")]
    pub solver: SolverArg,
    /// Search bound for integer unknowns of the builtin solver.
    #[arg(long, default_value_t = 2)]
    pub bound: i64,
    /// Report every loop found instead of the first.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 1000)]
    pub max_models: usize,
    #[arg(long, default_value_t = 2_000_000)]
    pub node_budget: usize,
    /// External solver command; overrides the LOOPALG_SOLVER environment variable.
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Per-query timeout of the external solver, in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Skip the invariant round-trip check of synthesized loops.
    #[arg(long)]
    pub no_verify: bool,
    /// Also write the synthesized loops to this file.
    #[arg(long)]
    pub emit_loop: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub loop_file: PathBuf,
    #[arg(long = "invariant", required = true)]
    pub invariants: Vec<String>,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PerCase,
    Disjunctive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PcpFormat {
    Smt,
    Json,
}

#[derive(Args, Debug)]
pub struct EmitArgs {
    pub invariant_file: PathBuf,
    #[command(flatten)]
    pub template: TemplateArgs,
    #[arg(long, value_enum, default_value = "per-case")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "smt")]
    pub format: PcpFormat,
    /// Directory for the output files; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Analysis(String),
    Unsat(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Analysis(_) => EXIT_ANALYSIS,
            Failure::Unsat(_) => EXIT_UNSAT,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Analysis(m) | Failure::Unsat(m) => m,
        }
    }
}

impl From<LoopError> for Failure {
    fn from(e: LoopError) -> Self {
        Failure::Analysis(e.to_string())
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Unsat => Failure::Unsat(e.to_string()),
            SynthError::InvalidTemplate(_) => Failure::Usage(e.to_string()),
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

impl From<SmtError> for Failure {
    fn from(e: SmtError) -> Self {
        match e {
            SmtError::Synth(s) => s.into(),
            e => Failure::Analysis(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("IoError: cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("IoError: cannot write {}: {e}", path.display())))
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut buf = String::new();
    let result = match &cli.command {
        Cmd::Invgen(a) => cmd_invgen(a, &mut buf),
        Cmd::Synth(a) => cmd_synth(a, &mut buf, err),
        Cmd::Check(a) => cmd_check(a, &mut buf),
        Cmd::EmitPcp(a) => cmd_emit_pcp(a, &mut buf, err),
    };
    let _ = out.write_all(buf.as_bytes());
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn cmd_invgen(a: &InvgenArgs, out: &mut String) -> Result<(), Failure> {
    let l = parse_loop(&read(&a.loop_file)?)?;
    let cfg = GroebnerConfig { max_steps: a.max_steps };
    let r = invariant_ideal_with(&l, &cfg).map_err(|e| Failure::Analysis(e.to_string()))?;
    match a.format {
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(&r.to_json(a.timings)).expect("json value");
            out.push_str(&json);
            out.push('\n');
        }
        OutputFormat::Text => {
            out.push_str(&r.to_text());
            let cf = &r.closed_forms;
            let _ = writeln!(out, "# closed forms, valid for n >= {}", r.valid_from);
            for (i, v) in l.vars.iter().enumerate() {
                let _ = writeln!(out, "#   {} = {}", v.name(), cf.display_form(i));
            }
            if a.timings {
                let d = &r.diagnostics;
                let _ = writeln!(
                    out,
                    "# closed forms {:.3} ms, elimination {:.3} ms",
                    d.closed_form_time.as_secs_f64() * 1e3,
                    d.elimination_time.as_secs_f64() * 1e3
                );
            }
        }
    }
    Ok(())
}

fn parse_fix_init(spec: &str) -> Result<Vec<(String, Rat)>, Failure> {
    let bad = || Failure::Usage(format!("invalid --fix-init `{spec}`; expected name=value pairs such as x=0,y=1/2"));
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (name, value) = pair.split_once('=').ok_or_else(bad)?;
            let c = parse_polynomial(value.trim()).ok().and_then(|p| p.as_constant()).ok_or_else(bad)?;
            Ok((name.trim().to_string(), c))
        })
        .collect()
}

struct Task {
    invariants: Vec<Polynomial>,
    template: SynthesisTemplate,
    pcp: Pcp,
}

fn prepare(file: &Path, ta: &TemplateArgs) -> Result<Task, Failure> {
    let text = read(file)?;
    let invariants = parse_invariants(&text, None)?;
    if invariants.is_empty() {
        return Err(Failure::Usage(format!("no invariants in {}", file.display())));
    }
    let vars = variables_in_order(&text, &invariants);
    let basis = buchberger(&invariants, &MonomialOrder::grevlex(vars.clone()), &GroebnerConfig::default())
        .map_err(|e| Failure::Analysis(e.to_string()))?;
    if basis.generators.iter().any(Polynomial::is_constant) {
        return Err(Failure::Usage("the invariants generate the unit ideal; no state satisfies them".into()));
    }
    let mut cfg = TemplateConfig::new(ta.size.unwrap_or(vars.len().max(1)));
    cfg.extra_roots = ta.roots;
    cfg.degree = ta.degree;
    cfg.coefficient_domain = match ta.domain {
        DomainArg::Int => CoefficientDomain::Integer,
        DomainArg::Rational => CoefficientDomain::Rational,
    };
    if let Some(spec) = &ta.fix_init {
        cfg.fixed_init.extend(parse_fix_init(spec)?);
    }
    let template = build_template(&vars, &cfg)?;
    let pcp = build_pcp(&template, &invariants)?;
    log::info!("{} unknowns, {} cases", pcp.unknowns.len(), pcp.cases.len());
    Ok(Task { invariants, template, pcp })
}

/// Why a synthesized loop was not reported.
fn round_trip(invariants: &[Polynomial], l: &LoopProgram) -> Result<(), String> {
    let r = invariant_ideal(l).map_err(|e| e.to_string())?;
    for p in invariants {
        if !r.basis.contains(p) {
            return Err(format!("`{p}` is not in the invariant ideal"));
        }
        if !oracle_check(p, l, ROUND_TRIP_ITERS).map_err(|e| e.to_string())? {
            return Err(format!("`{p}` fails on execution"));
        }
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, out: &mut String, err: &mut dyn Write) -> Result<(), Failure> {
    let task = prepare(&a.invariant_file, &a.template)?;
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut accepted: Vec<(usize, String)> = Vec::new();
    let mut rejected = 0usize;
    let mut decode_error: Option<SynthError> = None;
    let mut on_model = |m: &Model| -> Control {
        let l = match model_to_loop(&task.template, m) {
            Ok(l) => l,
            Err(e) => {
                decode_error = Some(e);
                return Control::Continue;
            }
        };
        let text = l.to_string();
        if !seen.insert(text.clone()) {
            return Control::Continue;
        }
        if !a.no_verify {
            if let Err(why) = round_trip(&task.invariants, &l) {
                log::debug!("dropping loop: {why}");
                rejected += 1;
                return Control::Continue;
            }
        }
        accepted.push((m.case, text));
        if a.all && accepted.len() < a.max_models {
            Control::Continue
        } else {
            Control::Stop
        }
    };
    let outcome: Result<usize, Failure> = match a.solver {
        SolverArg::Builtin => {
            let cfg = SolverConfig {
                bound: a.bound,
                enumerate_all: true,
                max_models: a.max_models,
                node_budget: a.node_budget,
            };
            solve_builtin_with(&task.pcp, &cfg, &mut on_model).map_err(Failure::from)
        }
        SolverArg::Smt => {
            let timeout = Duration::from_secs(a.timeout);
            let spec = match &a.solver_cmd {
                Some(cmd) => SolverSpec::new(cmd, timeout),
                None => SolverSpec::from_env(timeout),
            };
            smtio::solve_smt_with(&task.pcp, &spec, &mut on_model).map_err(Failure::from)
        }
    };
    let models = match outcome {
        Ok(n) => n,
        Err(f) if !accepted.is_empty() => {
            let _ = writeln!(err, "warning: search stopped early: {}", f.message());
            0
        }
        Err(f) => return Err(f),
    };
    if accepted.is_empty() {
        if let Some(e) = decode_error {
            return Err(e.into());
        }
        if models == 0 && rejected == 0 {
            return Err(SynthError::Unsat.into());
        }
        return Err(Failure::Analysis(format!(
            "RoundTripFailed: none of the {rejected} synthesized loops passed the invariant check"
        )));
    }
    let mut text = String::new();
    for (i, (case, body)) in accepted.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        let _ = writeln!(text, "# loop {} (case {case})", i + 1);
        text.push_str(body);
    }
    if let Some(path) = &a.emit_loop {
        write_file(path, &text)?;
    }
    out.push_str(&text);
    Ok(())
}

fn cmd_check(a: &CheckArgs, out: &mut String) -> Result<(), Failure> {
    let l = parse_loop(&read(&a.loop_file)?)?;
    let mut allowed: Vec<Var> = l.vars.clone();
    allowed.extend(l.parameters());
    let mut polys = Vec::new();
    for src in &a.invariants {
        let ps = parse_invariants(src, Some(&allowed))?;
        if ps.len() != 1 {
            return Err(Failure::Usage(format!("`{src}` is not a single invariant")));
        }
        polys.push((src.trim().to_string(), ps.into_iter().next().expect("one")));
    }
    let sys = to_simultaneous(&l);
    let gens: Vec<Polynomial> = polys.iter().map(|(_, p)| p.clone()).collect();
    let g = buchberger(&gens, &MonomialOrder::grevlex(allowed.clone()), &GroebnerConfig::default())
        .map_err(|e| Failure::Analysis(e.to_string()))?;
    for (src, p) in &polys {
        let inductive = if check_inductive(p, &sys, &g) { "PASS" } else { "FAIL" };
        let oracle = match first_violation(p, &l, a.iters) {
            Ok(None) => "PASS".to_string(),
            Ok(Some(n)) => format!("FAIL at n={n}"),
            Err(LoopError::SymbolicInitial(_)) => "skipped (symbolic initial values)".to_string(),
            Err(e) => return Err(e.into()),
        };
        let _ = writeln!(out, "{src}: inductive {inductive}, oracle {oracle}");
    }
    Ok(())
}

fn cmd_emit_pcp(a: &EmitArgs, out: &mut String, err: &mut dyn Write) -> Result<(), Failure> {
    let task = prepare(&a.invariant_file, &a.template)?;
    let files: Vec<(String, String)> = match a.format {
        PcpFormat::Json => {
            let json = serde_json::to_string_pretty(&task.pcp.to_json()).expect("json value");
            vec![("pcp.json".into(), json + "\n")]
        }
        PcpFormat::Smt => {
            let mode = match a.mode {
                ModeArg::PerCase => SmtMode::PerCase,
                ModeArg::Disjunctive => SmtMode::Disjunctive,
            };
            let docs = smtio::emit_smt(&task.pcp, mode);
            match mode {
                SmtMode::PerCase => docs.into_iter().enumerate().map(|(i, d)| (format!("case_{i:03}.smt2"), d)).collect(),
                SmtMode::Disjunctive => docs.into_iter().map(|d| ("pcp.smt2".to_string(), d)).collect(),
            }
        }
    };
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::Usage(format!("IoError: cannot create {}: {e}", dir.display())))?;
            for (name, body) in &files {
                write_file(&dir.join(name), body)?;
            }
            let _ = writeln!(err, "wrote {} file(s) to {}", files.len(), dir.display());
        }
        None => {
            for (name, body) in &files {
                if a.format == PcpFormat::Smt {
                    let _ = writeln!(out, "; {name}");
                }
                out.push_str(body);
            }
        }
    }
    Ok(())
}
