//! One function per subcommand. Each returns the text report, the JSON
//! report and the exit status derived from the verdict.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use strongsec::deduce::deduce as deduce_term;
use strongsec::equiv::{brute_equiv, static_equiv};
use strongsec::explore::{explore as explore_process, secrecy_of, ExplorationBounds, ExploreError};
use strongsec::frame::{Frame, FrameError};
use strongsec::passive::{check_passive_transfer, PassiveVerdict};
use strongsec::process::{parse_process_file, Process, ProcessError};
use strongsec::rewrite::normalize_trace;
use strongsec::secrecy::{compute_esets, verdict, Verdict};
use strongsec::syntax::{parse_term, ParseError};
use strongsec::term::Term;
use strongsec::wellformed::{check_extended_well_formed, check_well_formed_frame};

use crate::BoundArgs;

/// Version of the JSON envelope printed with `--json`.
pub const ENVELOPE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Frame { path: PathBuf, source: FrameError },
    #[error("{path}: {source}")]
    Process { path: PathBuf, source: ProcessError },
    #[error("term `{input}`: {source}")]
    Term { input: String, source: ParseError },
    #[error(transparent)]
    FrameOp(#[from] FrameError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Corpus(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub inputs: Vec<InputDigest>,
    pub report: Value,
    pub verdict: String,
    pub human: String,
    pub exit: u8,
}

impl Outcome {
    pub fn envelope(&self, argv: &[String], elapsed: Duration) -> String {
        let v = json!({
            "schema_version": ENVELOPE_SCHEMA_VERSION,
            "command": self.command,
            "argv": argv,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "exit_code": self.exit,
            "elapsed_ms": elapsed.as_millis() as u64,
            "report": self.report,
        });
        serde_json::to_string_pretty(&v).expect("serializable report")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read(path: &Path) -> Result<(String, InputDigest), CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    let digest = InputDigest { path: path.display().to_string(), sha256: sha256_hex(src.as_bytes()) };
    Ok((src, digest))
}

pub fn load_frame(path: &Path) -> Result<(Frame, InputDigest), CliError> {
    let (src, d) = read(path)?;
    let f = Frame::parse(&src).map_err(|source| CliError::Frame { path: path.to_owned(), source })?;
    Ok((f, d))
}

pub fn load_process(path: &Path) -> Result<(Process, InputDigest), CliError> {
    let (src, d) = read(path)?;
    let p = parse_process_file(&src).map_err(|source| CliError::Process { path: path.to_owned(), source })?;
    Ok((p.process, d))
}

pub fn term(src: &str) -> Result<Term, CliError> {
    parse_term(src).map_err(|source| CliError::Term { input: src.to_string(), source })
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable report")
}

fn exit_if(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

pub fn normalize(src: &str, trace: bool) -> Result<Outcome, CliError> {
    let t = term(src)?;
    let (nf, steps) = normalize_trace(&t);
    let mut human = String::new();
    if trace {
        for (i, s) in steps.iter().enumerate() {
            let matcher: Vec<String> = s.matcher.iter().map(|(v, u)| format!("{v} := {u}")).collect();
            writeln!(human, "step {}: {} at {} with {{{}}}", i + 1, s.rule, s.redex_position, matcher.join(", "))
                .unwrap();
        }
    }
    human.push_str(&nf.to_string());
    Ok(Outcome {
        command: "normalize",
        inputs: Vec::new(),
        report: json!({ "input": t.to_string(), "normal_form": nf.to_string(), "steps": steps }),
        verdict: "normalized".into(),
        human,
        exit: 0,
    })
}

pub fn deduce(frame: &Path, src: &str) -> Result<Outcome, CliError> {
    let (f, d) = load_frame(frame)?;
    let t = term(src)?;
    if !t.is_ground() {
        return Err(CliError::Usage(format!("`{t}` has variables; only ground terms can be deduced")));
    }
    let recipe = deduce_term(&f, &t);
    let (verdict, human) = match &recipe {
        Some(r) => ("deducible", format!("{t} is deducible with recipe {r}")),
        None => ("not-deducible", format!("{t} is not deducible")),
    };
    Ok(Outcome {
        command: "deduce",
        inputs: vec![d],
        report: json!({ "term": t.to_string(), "recipe": recipe.map(|r| r.to_string()) }),
        verdict: verdict.into(),
        human,
        exit: exit_if(verdict == "deducible"),
    })
}

pub fn equiv(p1: &Path, p2: &Path, depth: usize, brute: bool) -> Result<Outcome, CliError> {
    let (f1, d1) = load_frame(p1)?;
    let (f2, d2) = load_frame(p2)?;
    let v = if brute { brute_equiv(&f1, &f2, depth)? } else { static_equiv(&f1, &f2, depth)? };
    let mut human = if v.equivalent { "statically equivalent".to_string() } else { "distinguished".to_string() };
    if let Some(w) = &v.witness {
        let side = if w.holds_in_first { "first" } else { "second" };
        write!(human, " by ({} = {}), which holds only in the {side} frame", w.left, w.right).unwrap();
    }
    Ok(Outcome {
        command: "equiv",
        inputs: vec![d1, d2],
        verdict: if v.equivalent { "equivalent" } else { "distinguished" }.into(),
        exit: exit_if(v.equivalent),
        report: to_value(&v),
        human,
    })
}

pub fn check_frame(path: &Path, secret: &str, extended: bool) -> Result<Outcome, CliError> {
    let (f, d) = load_frame(path)?;
    if !f.is_restricted(secret) {
        return Err(CliError::Usage(format!("`{secret}` is not restricted in {}", path.display())));
    }
    let rep = if extended { check_extended_well_formed(&f, secret) } else { check_well_formed_frame(&f, secret) };
    let mut human = format!("{} for {secret}: {}", rep.definition, if rep.passed() { "pass" } else { "fail" });
    for v in &rep.violations {
        write!(human, "\n  {v}").unwrap();
    }
    for w in &rep.warnings {
        write!(human, "\n  warning: {w}").unwrap();
    }
    Ok(Outcome {
        command: "check-frame",
        inputs: vec![d],
        verdict: if rep.passed() { "pass" } else { "fail" }.into(),
        exit: exit_if(rep.passed()),
        report: to_value(&rep),
        human,
    })
}

/// Splits `s` at commas outside parentheses and angle brackets.
pub fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '<' => depth += 1,
            ')' | '>' => depth -= 1,
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

pub fn parse_samples(src: &str) -> Result<Vec<(Term, Term)>, CliError> {
    let mut out = Vec::new();
    for pair in src.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let parts = split_top_level(pair, ',');
        let [a, b] = parts.as_slice() else {
            return Err(CliError::Usage(format!("sample `{pair}` is not a pair `M,M'`")));
        };
        out.push((term(a.trim())?, term(b.trim())?));
    }
    Ok(out)
}

pub fn passive(path: &Path, secret: &str, depth: usize, samples: Option<&str>) -> Result<Outcome, CliError> {
    let (f, d) = load_frame(path)?;
    let samples = samples.map(parse_samples).transpose()?.unwrap_or_default();
    let rep = check_passive_transfer(&f, secret, &samples, depth)?;
    Ok(Outcome {
        command: "passive",
        inputs: vec![d],
        verdict: to_value(&rep.verdict).as_str().unwrap_or_default().to_string(),
        exit: exit_if(rep.verdict == PassiveVerdict::StrongSecrecyHolds),
        human: rep.to_string(),
        report: to_value(&rep),
    })
}

pub fn bounds(b: BoundArgs) -> ExplorationBounds {
    ExplorationBounds { replication_unfoldings: b.unfold, recipe_depth: b.recipe_depth, max_trace_length: b.max_trace }
}

pub fn explore(path: &Path, secret: &str, b: BoundArgs) -> Result<Outcome, CliError> {
    let (p, d) = load_process(path)?;
    let ex = explore_process(&p, secret, bounds(b))?;
    let ev = secrecy_of(&ex);
    let ok = ev.secret_within_bounds();
    Ok(Outcome {
        command: "explore",
        inputs: vec![d],
        verdict: if ok { "secret-within-bounds" } else { "attack-found" }.into(),
        exit: exit_if(ok),
        human: ev.to_string(),
        report: to_value(&ev),
    })
}

pub fn esets(path: &Path, secret: &str) -> Result<Outcome, CliError> {
    let (p, d) = load_process(path)?;
    let es = compute_esets(&p, secret);
    Ok(Outcome {
        command: "esets",
        inputs: vec![d],
        verdict: "computed".into(),
        exit: 0,
        human: es.to_string(),
        report: to_value(&es),
    })
}

pub fn analyze(path: &Path, secret: &str, b: BoundArgs) -> Result<Outcome, CliError> {
    let (p, d) = load_process(path)?;
    let rep = verdict(&p, secret, bounds(b));
    Ok(Outcome {
        command: "analyze",
        inputs: vec![d],
        verdict: rep.verdict.label().into(),
        exit: exit_if(rep.verdict == Verdict::StrongSecrecySupported),
        human: rep.to_string(),
        report: to_value(&rep),
    })
}
