//! Plain processes of the applied pi calculus with name channels: syntax
//! tree, parser and the message sets read by the static analysis.
//!
//! File grammar:
//!
//! ```text
//! file   := decl* proc
//! decl   := "let" ident "=" term ";"            term abbreviation
//!         | "proc" ident ["(" ident,* ")"] "=" proc ";"
//!         | "vars" ident,* ";"                  extra variable identifiers
//! proc   := prefix ("|" prefix)*
//! prefix := "0" | "(" proc ")" | "!" prefix
//!         | "new" ident,+ "." proc
//!         | "in(" ident "," var ")" ["." proc]
//!         | "out(" ident "," term ")" ["." proc]
//!         | "if" term "=" term "then" proc ["else" proc]
//!         | "[" term "=" term "]" ["." proc]
//!         | ident ["(" term,* ")"]              use of a `proc` declaration
//! ```
//!
//! `|` binds weakest; `new`, inputs, outputs and tests scope over everything
//! to their right, while `!` applies to the prefix that follows it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{Mode, ParseError, Parser, Tok};
use crate::term::{Ident, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}, column {column}: channel `{var}` is a variable; channels must be names")]
    VariableChannel { var: String, line: usize, column: usize },
    #[error("variable `{var}` is not bound by an enclosing input")]
    OpenProcess { var: String },
    #[error("line {line}, column {column}: unknown process `{name}`")]
    UnknownProcess { name: String, line: usize, column: usize },
    #[error("line {line}, column {column}: process `{name}` expects {expected} arguments, found {found}")]
    Arity { name: String, expected: usize, found: usize, line: usize, column: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Nil,
    Par(Vec<Process>),
    Repl(Box<Process>),
    New(Ident, Box<Process>),
    In(Ident, Ident, Box<Process>),
    Out(Ident, Term, Box<Process>),
    If(Term, Term, Box<Process>, Box<Process>),
}

impl Process {
    pub fn new_names(names: &[&str], body: Process) -> Process {
        names.iter().rev().fold(body, |p, n| Process::New(Ident::from(*n), Box::new(p)))
    }

    /// Every term occurring in the process, in syntactic order.
    pub fn terms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        match self {
            Process::Nil => {}
            Process::Par(ps) => ps.iter().for_each(|p| p.collect_terms(out)),
            Process::Repl(p) | Process::New(_, p) | Process::In(_, _, p) => p.collect_terms(out),
            Process::Out(_, m, p) => {
                out.push(m);
                p.collect_terms(out);
            }
            Process::If(t, u, p, q) => {
                out.push(t);
                out.push(u);
                p.collect_terms(out);
                q.collect_terms(out);
            }
        }
    }

    /// Names bound by `new`, with multiplicity removed.
    pub fn bound_names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit(&mut |p| {
            if let Process::New(n, _) = p {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Names occurring outside the scope of a `new` for them, channels
    /// included.
    pub fn free_names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.free_names_into(&BTreeSet::new(), &mut out);
        out
    }

    fn free_names_into(&self, bound: &BTreeSet<Ident>, out: &mut BTreeSet<Ident>) {
        let add_term = |t: &Term, out: &mut BTreeSet<Ident>| {
            out.extend(t.free_names().into_iter().filter(|n| !bound.contains(n)));
        };
        match self {
            Process::Nil => {}
            Process::Par(ps) => ps.iter().for_each(|p| p.free_names_into(bound, out)),
            Process::Repl(p) => p.free_names_into(bound, out),
            Process::New(n, p) => {
                let mut b = bound.clone();
                b.insert(n.clone());
                p.free_names_into(&b, out);
            }
            Process::In(c, _, p) => {
                if !bound.contains(c) {
                    out.insert(c.clone());
                }
                p.free_names_into(bound, out);
            }
            Process::Out(c, m, p) => {
                if !bound.contains(c) {
                    out.insert(c.clone());
                }
                add_term(m, out);
                p.free_names_into(bound, out);
            }
            Process::If(t, u, p, q) => {
                add_term(t, out);
                add_term(u, out);
                p.free_names_into(bound, out);
                q.free_names_into(bound, out);
            }
        }
    }

    /// Channel names used by inputs and outputs.
    pub fn channels(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit(&mut |p| match p {
            Process::In(c, _, _) | Process::Out(c, _, _) => {
                out.insert(c.clone());
            }
            _ => {}
        });
        out
    }

    /// Variables that occur without an enclosing input binding them.
    pub fn free_variables(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&BTreeSet::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &BTreeSet<Ident>, out: &mut BTreeSet<Ident>) {
        let add = |t: &Term, out: &mut BTreeSet<Ident>| {
            out.extend(t.variables().into_iter().filter(|v| !bound.contains(v)));
        };
        match self {
            Process::Nil => {}
            Process::Par(ps) => ps.iter().for_each(|p| p.free_vars_into(bound, out)),
            Process::Repl(p) | Process::New(_, p) => p.free_vars_into(bound, out),
            Process::In(_, z, p) => {
                let mut b = bound.clone();
                b.insert(z.clone());
                p.free_vars_into(&b, out);
            }
            Process::Out(_, m, p) => {
                add(m, out);
                p.free_vars_into(bound, out);
            }
            Process::If(t, u, p, q) => {
                add(t, out);
                add(u, out);
                p.free_vars_into(bound, out);
                q.free_vars_into(bound, out);
            }
        }
    }

    /// Pre-order traversal of the syntax tree.
    pub fn visit(&self, f: &mut dyn FnMut(&Process)) {
        f(self);
        match self {
            Process::Nil => {}
            Process::Par(ps) => ps.iter().for_each(|p| p.visit(f)),
            Process::Repl(p) | Process::New(_, p) | Process::In(_, _, p) | Process::Out(_, _, p) => p.visit(f),
            Process::If(_, _, p, q) => {
                p.visit(f);
                q.visit(f);
            }
        }
    }

    /// Whether some output occurs in the process.
    pub fn has_output(&self) -> bool {
        let mut found = false;
        self.visit(&mut |p| found |= matches!(p, Process::Out(..)));
        found
    }

    /// Applies `f` to every term and `g` to every channel and bound name,
    /// without regard to scoping.
    pub fn map(&self, f: &dyn Fn(&Term) -> Term, g: &dyn Fn(&Ident) -> Ident) -> Process {
        match self {
            Process::Nil => Process::Nil,
            Process::Par(ps) => Process::Par(ps.iter().map(|p| p.map(f, g)).collect()),
            Process::Repl(p) => Process::Repl(Box::new(p.map(f, g))),
            Process::New(n, p) => Process::New(g(n), Box::new(p.map(f, g))),
            Process::In(c, z, p) => Process::In(g(c), z.clone(), Box::new(p.map(f, g))),
            Process::Out(c, m, p) => Process::Out(g(c), f(m), Box::new(p.map(f, g))),
            Process::If(t, u, p, q) => Process::If(f(t), f(u), Box::new(p.map(f, g)), Box::new(q.map(f, g))),
        }
    }

    /// Renames a free name everywhere it is not shadowed.
    pub fn rename_free(&self, from: &str, to: &Ident) -> Process {
        let rn = |t: &Term| {
            t.map_leaves(&mut |l| if l.is_name_of(from) { Some(Term::name_ident(to.clone())) } else { None })
        };
        match self {
            Process::Nil => Process::Nil,
            Process::Par(ps) => Process::Par(ps.iter().map(|p| p.rename_free(from, to)).collect()),
            Process::Repl(p) => Process::Repl(Box::new(p.rename_free(from, to))),
            Process::New(n, p) if &**n == from => self.clone(),
            Process::New(n, p) => Process::New(n.clone(), Box::new(p.rename_free(from, to))),
            Process::In(c, z, p) => {
                let c = if &**c == from { to.clone() } else { c.clone() };
                Process::In(c, z.clone(), Box::new(p.rename_free(from, to)))
            }
            Process::Out(c, m, p) => {
                let c = if &**c == from { to.clone() } else { c.clone() };
                Process::Out(c, rn(m), Box::new(p.rename_free(from, to)))
            }
            Process::If(t, u, p, q) => {
                Process::If(rn(t), rn(u), Box::new(p.rename_free(from, to)), Box::new(q.rename_free(from, to)))
            }
        }
    }

    /// Substitutes ground or recipe terms for free variables; inputs
    /// rebinding a variable shadow it.
    pub fn substitute(&self, var: &str, value: &Term) -> Process {
        let sub = |t: &Term| t.map_leaves(&mut |l| if l.is_var_of(var) { Some(value.clone()) } else { None });
        match self {
            Process::Nil => Process::Nil,
            Process::Par(ps) => Process::Par(ps.iter().map(|p| p.substitute(var, value)).collect()),
            Process::Repl(p) => Process::Repl(Box::new(p.substitute(var, value))),
            Process::New(n, p) => Process::New(n.clone(), Box::new(p.substitute(var, value))),
            Process::In(c, z, p) if &**z == var => Process::In(c.clone(), z.clone(), p.clone()),
            Process::In(c, z, p) => Process::In(c.clone(), z.clone(), Box::new(p.substitute(var, value))),
            Process::Out(c, m, p) => Process::Out(c.clone(), sub(m), Box::new(p.substitute(var, value))),
            Process::If(t, u, p, q) => {
                Process::If(sub(t), sub(u), Box::new(p.substitute(var, value)), Box::new(q.substitute(var, value)))
            }
        }
    }

    /// Makes every bound name distinct from the other bound names and from
    /// the free names. When a name is bound several times, the binder under
    /// the fewest replications keeps it (the first one on ties); the others
    /// become `n~1`, `n~2`, ...
    pub fn with_unique_binders(&self) -> Process {
        let free = self.free_names();
        let mut binders: Vec<(Ident, usize, usize)> = Vec::new();
        collect_binders(self, 0, &mut binders);
        let mut by_name: BTreeMap<Ident, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, (n, depth, _)) in binders.iter().enumerate() {
            by_name.entry(n.clone()).or_default().push((*depth, i));
        }
        let mut taken: BTreeSet<Ident> = free.clone();
        taken.extend(by_name.keys().cloned());
        let mut new_name: HashMap<usize, Ident> = HashMap::new();
        for (n, mut occ) in by_name {
            occ.sort();
            let mut counter = 0;
            for (k, &(_, i)) in occ.iter().enumerate() {
                if k == 0 && !free.contains(&n) {
                    new_name.insert(i, n.clone());
                    continue;
                }
                let fresh = loop {
                    counter += 1;
                    let cand: Ident = Ident::from(format!("{n}~{counter}").as_str());
                    if !taken.contains(&cand) {
                        break cand;
                    }
                };
                taken.insert(fresh.clone());
                new_name.insert(i, fresh);
            }
        }
        let mut index = 0;
        rename_binders(self, &BTreeMap::new(), &new_name, &mut index)
    }
}

fn collect_binders(p: &Process, depth: usize, out: &mut Vec<(Ident, usize, usize)>) {
    match p {
        Process::Nil => {}
        Process::Par(ps) => ps.iter().for_each(|q| collect_binders(q, depth, out)),
        Process::Repl(q) => collect_binders(q, depth + 1, out),
        Process::New(n, q) => {
            let i = out.len();
            out.push((n.clone(), depth, i));
            collect_binders(q, depth, out);
        }
        Process::In(_, _, q) | Process::Out(_, _, q) => collect_binders(q, depth, out),
        Process::If(_, _, q, r) => {
            collect_binders(q, depth, out);
            collect_binders(r, depth, out);
        }
    }
}

fn rename_binders(
    p: &Process,
    env: &BTreeMap<Ident, Ident>,
    new_name: &HashMap<usize, Ident>,
    index: &mut usize,
) -> Process {
    let rn_id = |c: &Ident| env.get(c).cloned().unwrap_or_else(|| c.clone());
    let rn =
        |t: &Term| t.map_leaves(&mut |l| l.as_name().and_then(|n| env.get(n)).map(|m| Term::name_ident(m.clone())));
    match p {
        Process::Nil => Process::Nil,
        Process::Par(ps) => Process::Par(ps.iter().map(|q| rename_binders(q, env, new_name, index)).collect()),
        Process::Repl(q) => Process::Repl(Box::new(rename_binders(q, env, new_name, index))),
        Process::New(n, q) => {
            let fresh = new_name[index].clone();
            *index += 1;
            let mut env2 = env.clone();
            env2.insert(n.clone(), fresh.clone());
            Process::New(fresh, Box::new(rename_binders(q, &env2, new_name, index)))
        }
        Process::In(c, z, q) => Process::In(rn_id(c), z.clone(), Box::new(rename_binders(q, env, new_name, index))),
        Process::Out(c, m, q) => Process::Out(rn_id(c), rn(m), Box::new(rename_binders(q, env, new_name, index))),
        Process::If(t, u, q, r) => {
            let q2 = rename_binders(q, env, new_name, index);
            let r2 = rename_binders(r, env, new_name, index);
            Process::If(rn(t), rn(u), Box::new(q2), Box::new(r2))
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_proc(self, f, false)
    }
}

fn write_cont(p: &Process, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Process::Nil => Ok(()),
        _ => {
            f.write_str(".")?;
            write_proc(p, f, true)
        }
    }
}

/// `tight`: the process sits where a `|` would escape its scope.
fn write_proc(p: &Process, f: &mut fmt::Formatter<'_>, tight: bool) -> fmt::Result {
    match p {
        Process::Nil => f.write_str("0"),
        Process::Par(ps) => {
            if tight {
                f.write_str("(")?;
            }
            for (i, q) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(" | ")?;
                }
                write_proc(q, f, true)?;
            }
            if tight {
                f.write_str(")")?;
            }
            Ok(())
        }
        Process::Repl(q) => {
            f.write_str("!")?;
            match **q {
                Process::Nil | Process::Repl(_) | Process::Par(_) => write_proc(q, f, true),
                _ => {
                    f.write_str("(")?;
                    write_proc(q, f, false)?;
                    f.write_str(")")
                }
            }
        }
        Process::New(..) => {
            let mut names = Vec::new();
            let mut cur = p;
            while let Process::New(n, q) = cur {
                names.push(n.to_string());
                cur = q;
            }
            write!(f, "new {}.", names.join(", "))?;
            write_proc(cur, f, tight)
        }
        Process::In(c, z, q) => {
            write!(f, "in({c},{z})")?;
            write_cont(q, f)
        }
        Process::Out(c, m, q) => {
            write!(f, "out({c},{m})")?;
            write_cont(q, f)
        }
        Process::If(t, u, q, r) if **r == Process::Nil => {
            write!(f, "[{t} = {u}]")?;
            write_cont(q, f)
        }
        Process::If(t, u, q, r) => {
            write!(f, "if {t} = {u} then ")?;
            write_proc(q, f, true)?;
            f.write_str(" else ")?;
            write_proc(r, f, true)
        }
    }
}

/// Test shape: a plain equality or a signature check against `ok`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Plain,
    CheckForm,
}

/// A conditional's equality test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Test {
    pub left: Term,
    pub right: Term,
    pub kind: TestKind,
}

impl Test {
    pub fn new(left: Term, right: Term) -> Test {
        let is_check = |t: &Term, u: &Term| t.symbol() == Some(Symbol::Check) && u.is_name_of(crate::term::OK);
        let kind =
            if is_check(&left, &right) || is_check(&right, &left) { TestKind::CheckForm } else { TestKind::Plain };
        Test { left, right, kind }
    }

    /// For a check-form test, the `check(M, N, K)` side.
    pub fn check_side(&self) -> Option<&Term> {
        if self.kind != TestKind::CheckForm {
            return None;
        }
        if self.left.symbol() == Some(Symbol::Check) {
            Some(&self.left)
        } else {
            Some(&self.right)
        }
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} = {}]", self.left, self.right)
    }
}

/// Outputs, test operands and tests of a process.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MessageSets {
    pub outputs: BTreeSet<Term>,
    pub test_operands: BTreeSet<Term>,
    pub tests: BTreeSet<Test>,
}

impl MessageSets {
    /// All messages: outputs and test operands.
    pub fn messages(&self) -> BTreeSet<Term> {
        self.outputs.union(&self.test_operands).cloned().collect()
    }
}

pub fn extract_messages(p: &Process) -> MessageSets {
    let mut sets = MessageSets::default();
    p.visit(&mut |q| match q {
        Process::Out(_, m, _) => {
            sets.outputs.insert(m.clone());
        }
        Process::If(t, u, _, _) => {
            sets.test_operands.insert(t.clone());
            sets.test_operands.insert(u.clone());
            sets.tests.insert(Test::new(t.clone(), u.clone()));
        }
        _ => {}
    });
    sets
}

/// A parsed process file.
#[derive(Debug, Clone)]
pub struct ProcessFile {
    pub process: Process,
    pub abbreviations: Vec<(String, Term)>,
}

struct Definition {
    params: Vec<String>,
    body: Process,
}

struct ProcParser {
    p: Parser,
    lets: BTreeMap<String, Term>,
    procs: BTreeMap<String, Definition>,
    /// Variables bound by enclosing inputs.
    scope: Vec<String>,
    declared_vars: BTreeSet<String>,
}

/// Parses a process file and makes bound names unique.
pub fn parse_process(src: &str) -> Result<Process, ProcessError> {
    Ok(parse_process_file(src)?.process)
}

pub fn parse_process_file(src: &str) -> Result<ProcessFile, ProcessError> {
    let mut pp = ProcParser {
        p: Parser::new(src, Mode::User)?,
        lets: BTreeMap::new(),
        procs: BTreeMap::new(),
        scope: Vec::new(),
        declared_vars: BTreeSet::new(),
    };
    let mut abbreviations = Vec::new();
    loop {
        if pp.p.at_keyword("let") {
            pp.p.next();
            let (name, _) = pp.p.expect_ident()?;
            pp.p.expect(Tok::Eq)?;
            let t = pp.term()?;
            pp.p.expect(Tok::Semi)?;
            abbreviations.push((name.clone(), t.clone()));
            pp.lets.insert(name, t);
        } else if pp.p.at_keyword("vars") {
            pp.p.next();
            loop {
                let (v, _) = pp.p.expect_ident()?;
                pp.declared_vars.insert(v);
                if !pp.p.eat(&Tok::Comma) {
                    break;
                }
            }
            pp.p.expect(Tok::Semi)?;
        } else if pp.p.at_keyword("proc") {
            pp.p.next();
            let (name, _) = pp.p.expect_ident()?;
            let mut params = Vec::new();
            if pp.p.eat(&Tok::LParen) {
                loop {
                    params.push(pp.p.expect_ident()?.0);
                    if !pp.p.eat(&Tok::Comma) {
                        break;
                    }
                }
                pp.p.expect(Tok::RParen)?;
            }
            pp.p.expect(Tok::Eq)?;
            let body = pp.proc()?;
            pp.p.expect(Tok::Semi)?;
            pp.procs.insert(name, Definition { params, body });
        } else {
            break;
        }
    }
    let process = pp.proc()?;
    pp.p.expect_eof()?;
    if let Some(v) = process.free_variables().into_iter().next() {
        return Err(ProcessError::OpenProcess { var: v.to_string() });
    }
    Ok(ProcessFile { process: process.with_unique_binders(), abbreviations })
}

impl ProcParser {
    fn term(&mut self) -> Result<Term, ProcessError> {
        self.p.vars = self.declared_vars.iter().chain(self.scope.iter()).cloned().collect();
        let t = self.p.term()?;
        let lets = &self.lets;
        Ok(t.map_leaves(&mut |l| {
            let id = l.as_name().or_else(|| l.as_var())?;
            lets.get(&**id).cloned()
        }))
    }

    fn channel(&mut self) -> Result<Ident, ProcessError> {
        let (c, tok) = self.p.expect_ident()?;
        self.p.vars = self.declared_vars.iter().chain(self.scope.iter()).cloned().collect();
        if self.p.is_variable_ident(&c) {
            return Err(ProcessError::VariableChannel { var: c, line: tok.line, column: tok.column });
        }
        Ok(Ident::from(c.as_str()))
    }

    fn proc(&mut self) -> Result<Process, ProcessError> {
        let mut parts = vec![self.prefix()?];
        while self.p.eat(&Tok::Bar) {
            parts.push(self.prefix()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Process::Par(parts) })
    }

    fn continuation(&mut self) -> Result<Process, ProcessError> {
        if self.p.eat(&Tok::Dot) {
            self.proc()
        } else {
            Ok(Process::Nil)
        }
    }

    fn prefix(&mut self) -> Result<Process, ProcessError> {
        match self.p.peek().clone() {
            Tok::Number(n) if n == "0" => {
                self.p.next();
                Ok(Process::Nil)
            }
            Tok::LParen => {
                self.p.next();
                let q = self.proc()?;
                self.p.expect(Tok::RParen)?;
                Ok(q)
            }
            Tok::Bang => {
                self.p.next();
                Ok(Process::Repl(Box::new(self.prefix()?)))
            }
            Tok::LBracket => {
                self.p.next();
                let t = self.term()?;
                self.p.expect(Tok::Eq)?;
                let u = self.term()?;
                self.p.expect(Tok::RBracket)?;
                let q = self.continuation()?;
                Ok(Process::If(t, u, Box::new(q), Box::new(Process::Nil)))
            }
            Tok::Ident(kw) if kw == "new" => {
                self.p.next();
                let mut names = Vec::new();
                loop {
                    let (n, tok) = self.p.expect_ident()?;
                    if self.p.is_variable_ident(&n) {
                        return Err(self
                            .p
                            .error_at(&tok, format!("`{n}` is a variable identifier and cannot be restricted"))
                            .into());
                    }
                    names.push(n);
                    if !self.p.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.p.expect(Tok::Dot)?;
                let body = self.proc()?;
                Ok(names.iter().rev().fold(body, |q, n| Process::New(Ident::from(n.as_str()), Box::new(q))))
            }
            Tok::Ident(kw) if kw == "in" => {
                self.p.next();
                self.p.expect(Tok::LParen)?;
                let c = self.channel()?;
                self.p.expect(Tok::Comma)?;
                let (z, _) = self.p.expect_ident()?;
                self.p.expect(Tok::RParen)?;
                self.scope.push(z.clone());
                let q = self.continuation();
                self.scope.pop();
                Ok(Process::In(c, Ident::from(z.as_str()), Box::new(q?)))
            }
            Tok::Ident(kw) if kw == "out" => {
                self.p.next();
                self.p.expect(Tok::LParen)?;
                let c = self.channel()?;
                self.p.expect(Tok::Comma)?;
                let m = self.term()?;
                self.p.expect(Tok::RParen)?;
                let q = self.continuation()?;
                Ok(Process::Out(c, m, Box::new(q)))
            }
            Tok::Ident(kw) if kw == "if" => {
                self.p.next();
                let t = self.term()?;
                self.p.expect(Tok::Eq)?;
                let u = self.term()?;
                if !self.p.at_keyword("then") {
                    return Err(self.p.error_here("expected `then`").into());
                }
                self.p.next();
                let q = self.proc()?;
                let r = if self.p.at_keyword("else") {
                    self.p.next();
                    self.proc()?
                } else {
                    Process::Nil
                };
                Ok(Process::If(t, u, Box::new(q), Box::new(r)))
            }
            Tok::Ident(_) => {
                let (name, tok) = self.p.expect_ident()?;
                let mut args = Vec::new();
                if self.p.eat(&Tok::LParen) {
                    loop {
                        args.push(self.term()?);
                        if !self.p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.p.expect(Tok::RParen)?;
                }
                let def = self.procs.get(&name).ok_or_else(|| ProcessError::UnknownProcess {
                    name: name.clone(),
                    line: tok.line,
                    column: tok.column,
                })?;
                if def.params.len() != args.len() {
                    return Err(ProcessError::Arity {
                        name,
                        expected: def.params.len(),
                        found: args.len(),
                        line: tok.line,
                        column: tok.column,
                    });
                }
                let mut body = def.body.clone();
                for (param, arg) in def.params.iter().zip(&args) {
                    body = instantiate_param(&body, param, arg);
                }
                Ok(body)
            }
            other => Err(self.p.error_here(format!("expected a process, found {other}")).into()),
        }
    }
}

/// Replaces a parameter (name or variable identifier) by an argument term;
/// channel positions accept only name arguments.
fn instantiate_param(body: &Process, param: &str, arg: &Term) -> Process {
    let f = |t: &Term| {
        t.map_leaves(&mut |l| {
            let id = l.as_name().or_else(|| l.as_var())?;
            (&**id == param).then(|| arg.clone())
        })
    };
    let g = |c: &Ident| match arg.as_name() {
        Some(n) if &**c == param => n.clone(),
        _ => c.clone(),
    };
    body.map(&f, &g)
}
