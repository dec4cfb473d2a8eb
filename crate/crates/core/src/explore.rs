//! Bounded exploration of a closed process against the intruder, yielding
//! the standard frames of reachable states together with the outputs and
//! substitutions they were built from.
//!
//! States are kept flattened: parallel components are separate threads,
//! restrictions are hoisted into one set of restricted names, replications
//! are unfolded a fixed number of times with `#k` suffixes on their bound
//! names, and outputs on public channels, restrictions and tests run
//! eagerly. Inputs on public channels branch over adversary recipes;
//! communications on restricted channels branch over partners.
//!
//! Adversary recipes are pattern-directed: every atom (frame handle,
//! attacker constant, free non-channel name of the process) is tried, and
//! compound recipes are built only with the constructors that the
//! destructors applied to the input variable can open.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::deduce::{deduce, saturate, KnowledgeSet};
use crate::frame::Frame;
use crate::process::{extract_messages, Process};
use crate::rewrite::normalize;
use crate::term::{Ident, Position, Substitution, Symbol, Term};

/// Public constants available to the adversary in addition to the free
/// names of the process.
pub const ATTACKER_CONSTANTS: [&str; 2] = ["att0", "att1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExplorationBounds {
    pub replication_unfoldings: usize,
    /// Constructor nesting of adversary recipes; atoms have depth 1.
    pub recipe_depth: usize,
    /// Maximal number of input and output actions along a trace.
    pub max_trace_length: usize,
}

impl Default for ExplorationBounds {
    fn default() -> Self {
        ExplorationBounds { replication_unfoldings: 1, recipe_depth: 2, max_trace_length: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("secret `{0}` is not bound by a restriction of the process")]
    SecretNotBound(String),
    #[error("secret `{0}` is used as a channel")]
    SecretIsChannel(String),
}

/// One step of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    Input { channel: String, variable: String, recipe: Term },
    Output { channel: String, handle: String },
    Test { left: Term, right: Term, holds: bool },
    Comm { channel: String, variable: String },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Input { channel, variable, recipe } => write!(f, "in({channel}, {recipe}) as {variable}"),
            Action::Output { channel, handle } => write!(f, "out({channel}, {handle})"),
            Action::Test { left, right, holds } => {
                write!(f, "[{left} = {right}] {}", if *holds { "then" } else { "else" })
            }
            Action::Comm { channel, variable } => write!(f, "comm({channel}) into {variable}"),
        }
    }
}

/// The value given to a process variable: a recipe applied to the frame
/// for public inputs, a message for communications on restricted channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VarBinding {
    pub variable: String,
    pub value: Term,
    pub recipe: Option<Term>,
}

/// Where a frame binding comes from: `binding = output[variables ↦ values]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub handle: String,
    /// The output as written in the process (replication suffixes removed).
    pub source: Term,
    /// The output of the running copy.
    pub output: Term,
    pub substitution: Vec<VarBinding>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardFrame {
    pub frame: Frame,
    pub provenance: Vec<Provenance>,
    pub trace: Vec<Action>,
}

impl StandardFrame {
    /// Tests evaluated along the trace: `(left, right, holds)`.
    pub fn tests(&self) -> impl Iterator<Item = (&Term, &Term, bool)> {
        self.trace.iter().filter_map(|a| match a {
            Action::Test { left, right, holds } => Some((left, right, *holds)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Exploration {
    pub secret: String,
    pub bounds: ExplorationBounds,
    /// One standard frame per reachable state.
    pub frames: Vec<StandardFrame>,
    pub states: usize,
    /// Some action was cut off by the trace-length bound.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
struct Value {
    term: Term,
    recipe: Option<Term>,
}

#[derive(Clone, Debug)]
struct Thread {
    proc: Arc<Process>,
    env: BTreeMap<Ident, Value>,
}

impl Thread {
    fn with(&self, proc: &Process) -> Thread {
        Thread { proc: Arc::new(proc.clone()), env: self.env.clone() }
    }

    fn instantiate(&self, t: &Term) -> Term {
        t.map_leaves(&mut |l| l.as_var().and_then(|v| self.env.get(v)).map(|val| val.term.clone()))
    }
}

#[derive(Clone, Debug)]
struct State {
    threads: Vec<Thread>,
    bindings: Vec<(Ident, Term)>,
    normal: Vec<Term>,
    provenance: Vec<Provenance>,
    restricted: BTreeSet<Ident>,
    trace: Vec<Action>,
    length: usize,
}

impl State {
    fn frame(&self) -> Frame {
        Frame::new(self.restricted.iter().cloned(), self.bindings.iter().cloned()).expect("ground bindings")
    }

    fn substitution(&self) -> Substitution {
        let mut s = Substitution::new();
        for (h, t) in &self.bindings {
            s.insert(h.clone(), t.clone());
        }
        s
    }

    fn is_public_channel(&self, c: &Ident) -> bool {
        !self.restricted.contains(c)
    }
}

/// What the continuation of an input does to the received value.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Shape {
    Any,
    Pair(Box<Shape>, Box<Shape>),
    /// Opened by `dec` with this key.
    Enc(Term, Box<Shape>),
    /// Opened by `deca` with the private key matching this public key.
    Enca(Term, Box<Shape>),
    Alt(Vec<Shape>),
}

fn merge(a: Shape, b: Shape) -> Shape {
    match (a, b) {
        (Shape::Any, x) | (x, Shape::Any) => x,
        (Shape::Pair(a1, b1), Shape::Pair(a2, b2)) => Shape::Pair(Box::new(merge(*a1, *a2)), Box::new(merge(*b1, *b2))),
        (Shape::Enc(k1, x), Shape::Enc(k2, y)) if k1 == k2 => Shape::Enc(k1, Box::new(merge(*x, *y))),
        (Shape::Enca(k1, x), Shape::Enca(k2, y)) if k1 == k2 => Shape::Enca(k1, Box::new(merge(*x, *y))),
        (Shape::Alt(mut xs), y) | (y, Shape::Alt(mut xs)) => {
            if !xs.contains(&y) {
                xs.push(y);
            }
            Shape::Alt(xs)
        }
        (x, y) if x == y => x,
        (x, y) => Shape::Alt(vec![x, y]),
    }
}

/// Terms of `p` in which the variable `z` is still the one bound by the
/// enclosing input.
fn terms_using(p: &Process, z: &str, out: &mut Vec<Term>) {
    match p {
        Process::Nil => {}
        Process::Par(ps) => ps.iter().for_each(|q| terms_using(q, z, out)),
        Process::Repl(q) | Process::New(_, q) => terms_using(q, z, out),
        Process::In(_, y, _) if &**y == z => {}
        Process::In(_, _, q) => terms_using(q, z, out),
        Process::Out(_, m, q) => {
            out.push(m.clone());
            terms_using(q, z, out);
        }
        Process::If(t, u, q, r) => {
            out.push(t.clone());
            out.push(u.clone());
            terms_using(q, z, out);
            terms_using(r, z, out);
        }
    }
}

fn demand(thread: &Thread, z: &str, cont: &Process) -> Shape {
    let mut terms = Vec::new();
    terms_using(cont, z, &mut terms);
    let var = Term::var(z);
    let mut shape = Shape::Any;
    for t in &terms {
        for p in t.occurrences(&var) {
            shape = merge(shape, demand_at(thread, z, t, &p));
        }
    }
    shape
}

fn demand_at(thread: &Thread, z: &str, t: &Term, p: &Position) -> Shape {
    let Some(parent) = p.parent() else { return Shape::Any };
    if p.steps().last() != Some(&1) {
        return Shape::Any;
    }
    let u = t.subterm_at(&parent).unwrap();
    let key_value = |k: &Term| {
        let v = thread.instantiate(k);
        (v.is_ground() && !k.contains_var(z)).then(|| normalize(&v))
    };
    let above = || Box::new(demand_at(thread, z, t, &parent));
    match u.symbol() {
        Some(Symbol::Proj1) => Shape::Pair(above(), Box::new(Shape::Any)),
        Some(Symbol::Proj2) => Shape::Pair(Box::new(Shape::Any), above()),
        Some(Symbol::Dec) => match key_value(u.arg(1)) {
            Some(k) => Shape::Enc(k, above()),
            None => Shape::Any,
        },
        Some(Symbol::Deca) => match key_value(u.arg(1)) {
            Some(k) if k.symbol() == Some(Symbol::Priv) => {
                Shape::Enca(Term::app(Symbol::Pub, vec![k.arg(0).clone()]), above())
            }
            _ => Shape::Any,
        },
        _ => Shape::Any,
    }
}

/// Recipes with their normalized values.
type Candidate = (Term, Term);

struct Generator<'a> {
    atoms: &'a [Candidate],
    knowledge: Option<KnowledgeSet>,
    frame: &'a State,
}

impl Generator<'_> {
    fn knowledge(&mut self) -> &KnowledgeSet {
        if self.knowledge.is_none() {
            self.knowledge = Some(saturate(&self.frame.frame()));
        }
        self.knowledge.as_ref().unwrap()
    }

    fn generate(&mut self, shape: &Shape, depth: usize, out: &mut Vec<Candidate>) {
        if depth == 0 {
            return;
        }
        out.extend(self.atoms.iter().cloned());
        if depth < 2 {
            return;
        }
        let randomness = Term::name(ATTACKER_CONSTANTS[0]);
        match shape {
            Shape::Any => {}
            Shape::Pair(a, b) => {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                self.generate(a, depth - 1, &mut xs);
                self.generate(b, depth - 1, &mut ys);
                for (rx, vx) in &xs {
                    for (ry, vy) in &ys {
                        out.push((Term::pair(rx.clone(), ry.clone()), Term::pair(vx.clone(), vy.clone())));
                    }
                }
            }
            Shape::Enc(key, a) | Shape::Enca(key, a) => {
                let Some(rk) = self.knowledge().synthesize(key) else { return };
                let f = if matches!(shape, Shape::Enc(..)) { Symbol::Enc } else { Symbol::Enca };
                let mut xs = Vec::new();
                self.generate(a, depth - 1, &mut xs);
                for (rx, vx) in xs {
                    out.push((
                        Term::app(f, vec![rx, rk.clone(), randomness.clone()]),
                        Term::app(f, vec![vx, key.clone(), randomness.clone()]),
                    ));
                }
            }
            Shape::Alt(shapes) => {
                for s in shapes {
                    self.generate(s, depth, out);
                }
            }
        }
    }
}

fn strip_copy_suffix(t: &Term) -> Term {
    t.map_leaves(&mut |l| {
        let n = l.as_name()?;
        let i = n.find('#')?;
        Some(Term::name(&n[..i]))
    })
}

fn rename_copy(p: &Process, k: usize) -> Process {
    let names = p.bound_names();
    if names.is_empty() {
        return p.clone();
    }
    let rename = |n: &Ident| -> Ident {
        if names.contains(n) {
            Ident::from(format!("{n}#{k}").as_str())
        } else {
            n.clone()
        }
    };
    let f = |t: &Term| {
        t.map_leaves(&mut |l| l.as_name().filter(|n| names.contains(*n)).map(|n| Term::name_ident(rename(n))))
    };
    p.map(&f, &rename)
}

fn hash_with<T: Hash>(seed: u64, t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    t.hash(&mut h);
    h.finish()
}

/// A 128-bit fingerprint of a state, insensitive to the order of threads
/// and bindings.
fn fingerprint(st: &State) -> (u64, u64) {
    let mut bindings: Vec<&Term> = st.normal.iter().collect();
    bindings.sort();
    let mut threads: Vec<u64> = st
        .threads
        .iter()
        .map(|th| {
            let env: Vec<(&Ident, Term)> = th.env.iter().map(|(v, val)| (v, normalize(&val.term))).collect();
            hash_with(7, &(&*th.proc, env))
        })
        .collect();
    threads.sort_unstable();
    let key = (bindings, threads, &st.restricted, st.length);
    (hash_with(1, &key), hash_with(2, &key))
}

struct Explorer {
    bounds: ExplorationBounds,
    public_names: Vec<Term>,
    visited: HashSet<(u64, u64)>,
    frames: Vec<StandardFrame>,
    states: usize,
    truncated: bool,
}

impl Explorer {
    /// Runs every deterministic step: parallel splitting, restriction,
    /// replication unfolding, tests and outputs on public channels.
    fn settle(&mut self, st: &mut State) {
        let mut pending: Vec<Thread> = std::mem::take(&mut st.threads);
        pending.reverse();
        let mut blocked = Vec::new();
        while let Some(th) = pending.pop() {
            match &*th.proc {
                Process::Nil => {}
                Process::Par(ps) => pending.extend(ps.iter().rev().map(|q| th.with(q))),
                Process::Repl(q) => {
                    for k in (1..=self.bounds.replication_unfoldings).rev() {
                        pending.push(th.with(&rename_copy(q, k)));
                    }
                }
                Process::New(n, q) => {
                    st.restricted.insert(n.clone());
                    pending.push(th.with(q));
                }
                Process::If(t, u, q, r) => {
                    let left = th.instantiate(t);
                    let right = th.instantiate(u);
                    let holds = normalize(&left) == normalize(&right);
                    st.trace.push(Action::Test { left, right, holds });
                    pending.push(th.with(if holds { q } else { r }));
                }
                Process::Out(c, m, q) if st.is_public_channel(c) => {
                    if st.length >= self.bounds.max_trace_length {
                        self.truncated = true;
                        blocked.push(th);
                        continue;
                    }
                    let handle = Ident::from(format!("y{}", st.bindings.len() + 1).as_str());
                    let value = th.instantiate(m);
                    let substitution = m
                        .variables()
                        .into_iter()
                        .filter_map(|v| {
                            th.env.get(&v).map(|val| VarBinding {
                                variable: v.to_string(),
                                value: val.term.clone(),
                                recipe: val.recipe.clone(),
                            })
                        })
                        .collect();
                    st.provenance.push(Provenance {
                        handle: handle.to_string(),
                        source: strip_copy_suffix(m),
                        output: m.clone(),
                        substitution,
                    });
                    st.normal.push(normalize(&value));
                    st.bindings.push((handle.clone(), value));
                    st.trace.push(Action::Output { channel: c.to_string(), handle: handle.to_string() });
                    st.length += 1;
                    pending.push(th.with(q));
                }
                // nothing after this input is ever observable
                Process::In(c, _, q) if st.is_public_channel(c) && !q.has_output() => {}
                _ => blocked.push(th),
            }
        }
        st.threads = blocked;
    }

    fn record(&mut self, st: &State) {
        self.frames.push(StandardFrame {
            frame: st.frame(),
            provenance: st.provenance.clone(),
            trace: st.trace.clone(),
        });
    }

    fn candidates(&self, st: &State, th: &Thread, z: &str, cont: &Process) -> Vec<Candidate> {
        let mut atoms: Vec<Candidate> =
            st.bindings.iter().zip(&st.normal).map(|((h, _), v)| (Term::var_ident(h.clone()), v.clone())).collect();
        atoms.extend(self.public_names.iter().map(|n| (n.clone(), n.clone())));
        let shape = demand(th, z, cont);
        let mut gen = Generator { atoms: &atoms, knowledge: None, frame: st };
        let mut raw = Vec::new();
        gen.generate(&shape, self.bounds.recipe_depth, &mut raw);
        let mut seen = HashSet::new();
        raw.into_iter().filter(|(_, v)| seen.insert(normalize(v))).collect()
    }

    fn successors(&mut self, st: &State) -> Vec<State> {
        let mut out = Vec::new();
        for (i, th) in st.threads.iter().enumerate() {
            let Process::In(c, z, q) = &*th.proc else { continue };
            if st.is_public_channel(c) {
                if st.length >= self.bounds.max_trace_length {
                    self.truncated = true;
                    continue;
                }
                let sigma = st.substitution();
                for (recipe, _) in self.candidates(st, th, z, q) {
                    let mut next = st.clone();
                    let mut t = th.with(q);
                    t.env.insert(z.clone(), Value { term: recipe.apply(&sigma), recipe: Some(recipe.clone()) });
                    next.threads[i] = t;
                    next.trace.push(Action::Input { channel: c.to_string(), variable: z.to_string(), recipe });
                    next.length += 1;
                    out.push(next);
                }
            } else {
                for (j, other) in st.threads.iter().enumerate() {
                    let Process::Out(c2, m, q2) = &*other.proc else { continue };
                    if c2 != c || i == j {
                        continue;
                    }
                    let mut next = st.clone();
                    let mut t = th.with(q);
                    t.env.insert(z.clone(), Value { term: other.instantiate(m), recipe: None });
                    next.threads[i] = t;
                    next.threads[j] = other.with(q2);
                    next.trace.push(Action::Comm { channel: c.to_string(), variable: z.to_string() });
                    out.push(next);
                }
            }
        }
        out
    }

    fn run(&mut self, initial: State) {
        let mut st = initial;
        self.settle(&mut st);
        self.visited.insert(fingerprint(&st));
        let mut stack = vec![st];
        while let Some(st) = stack.pop() {
            self.states += 1;
            self.record(&st);
            let mut next = Vec::new();
            for mut s in self.successors(&st) {
                self.settle(&mut s);
                if self.visited.insert(fingerprint(&s)) {
                    next.push(s);
                }
            }
            next.reverse();
            stack.extend(next);
        }
    }
}

/// Explores `p` within `bounds`, returning the standard frame of every
/// reachable state.
pub fn explore(p: &Process, s: &str, bounds: ExplorationBounds) -> Result<Exploration, ExploreError> {
    if p.channels().iter().any(|c| &**c == s) {
        return Err(ExploreError::SecretIsChannel(s.to_string()));
    }
    if !p.bound_names().iter().any(|n| &**n == s) {
        return Err(ExploreError::SecretNotBound(s.to_string()));
    }
    let channels = p.channels();
    let mut public: BTreeSet<Ident> = p.free_names().into_iter().filter(|n| !channels.contains(n)).collect();
    public.extend(ATTACKER_CONSTANTS.iter().map(|c| Ident::from(*c)));
    let mut explorer = Explorer {
        bounds,
        public_names: public.into_iter().map(Term::name_ident).collect(),
        visited: HashSet::new(),
        frames: Vec::new(),
        states: 0,
        truncated: false,
    };
    explorer.run(State {
        threads: vec![Thread { proc: Arc::new(p.clone()), env: BTreeMap::new() }],
        bindings: Vec::new(),
        normal: Vec::new(),
        provenance: Vec::new(),
        restricted: BTreeSet::new(),
        trace: Vec::new(),
        length: 0,
    });
    let mut frames = explorer.frames;
    frames.sort_by_cached_key(|f| (f.frame.len(), f.trace.len(), f.frame.to_string()));
    Ok(Exploration { secret: s.to_string(), bounds, frames, states: explorer.states, truncated: explorer.truncated })
}

/// A reachable frame from which the secret is deducible.
#[derive(Debug, Clone, Serialize)]
pub struct Attack {
    pub frame: Frame,
    pub trace: Vec<Action>,
    pub recipe: Term,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecrecyEvidence {
    pub secret: String,
    pub bounds: ExplorationBounds,
    pub states: usize,
    pub frames: usize,
    pub truncated: bool,
    pub attack: Option<Attack>,
}

impl SecrecyEvidence {
    pub fn secret_within_bounds(&self) -> bool {
        self.attack.is_none()
    }
}

impl fmt::Display for SecrecyEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.bounds;
        writeln!(
            f,
            "bounds: {} unfolding(s), recipe depth {}, trace length {}",
            b.replication_unfoldings, b.recipe_depth, b.max_trace_length
        )?;
        writeln!(
            f,
            "states: {}, distinct frames: {}{}",
            self.states,
            self.frames,
            if self.truncated { " (truncated)" } else { "" }
        )?;
        match &self.attack {
            None => write!(f, "{} secret within bounds", self.secret),
            Some(a) => {
                writeln!(f, "attack: {} deducible with recipe {}", self.secret, a.recipe)?;
                writeln!(f, "frame: {}", a.frame)?;
                for step in &a.trace {
                    writeln!(f, "  {step}")?;
                }
                Ok(())
            }
        }
    }
}

/// The normalized bindings of a frame as a sorted multiset; two frames
/// with equal multisets deduce the same terms.
pub fn normal_multiset(f: &Frame) -> Vec<Term> {
    let mut v: Vec<Term> = f.terms().map(normalize).collect();
    v.sort();
    v
}

/// Runs `deduce(φ, s)` on every explored standard frame.
pub fn check_syntactic_secrecy_bounded(
    p: &Process,
    s: &str,
    bounds: ExplorationBounds,
) -> Result<SecrecyEvidence, ExploreError> {
    let ex = explore(p, s, bounds)?;
    Ok(secrecy_of(&ex))
}

/// Deducibility of the secret over an existing exploration.
pub fn secrecy_of(ex: &Exploration) -> SecrecyEvidence {
    let secret = Term::name(&ex.secret);
    let mut checked: HashMap<Vec<Term>, bool> = HashMap::new();
    let mut attack: Option<Attack> = None;
    for sf in &ex.frames {
        let key = normal_multiset(&sf.frame);
        if checked.get(&key) == Some(&false) {
            continue;
        }
        let found = deduce(&sf.frame, &secret);
        checked.insert(key, found.is_some());
        if let Some(recipe) = found {
            if attack.as_ref().is_none_or(|a| sf.trace.len() < a.trace.len()) {
                attack = Some(Attack { frame: sf.frame.clone(), trace: sf.trace.clone(), recipe });
            }
        }
    }
    SecrecyEvidence {
        secret: ex.secret.clone(),
        bounds: ex.bounds,
        states: ex.states,
        frames: checked.len(),
        truncated: ex.truncated,
        attack,
    }
}

/// Checks the standard-frame recurrence for every binding: the source is an
/// output of `p`, the binding is the running output under the recorded
/// substitution, and every recipe is public and only uses earlier handles.
pub fn check_provenance(p: &Process, sf: &StandardFrame) -> Result<(), String> {
    let outputs = extract_messages(p).outputs;
    let bindings = sf.frame.bindings();
    if bindings.len() != sf.provenance.len() {
        return Err("provenance and bindings differ in length".into());
    }
    for (i, ((h, t), prov)) in bindings.iter().zip(&sf.provenance).enumerate() {
        if !outputs.contains(&prov.source) {
            return Err(format!("{h}: {} is not an output of the process", prov.source));
        }
        if strip_copy_suffix(&prov.output) != prov.source {
            return Err(format!("{h}: {} is not a copy of {}", prov.output, prov.source));
        }
        let mut theta = Substitution::new();
        for vb in &prov.substitution {
            theta.insert(Ident::from(vb.variable.as_str()), vb.value.clone());
        }
        if &prov.output.apply(&theta) != t {
            return Err(format!("{h}: binding {t} differs from {} under the recorded substitution", prov.output));
        }
        let earlier = Frame::new(sf.frame.restricted().iter().cloned(), bindings[..i].iter().cloned())
            .map_err(|e| e.to_string())?;
        for vb in &prov.substitution {
            let Some(recipe) = &vb.recipe else { continue };
            if !earlier.is_public_recipe(recipe) {
                return Err(format!("{h}: recipe {recipe} for {} is not public w.r.t. earlier handles", vb.variable));
            }
            if recipe.apply(&earlier.substitution()) != vb.value {
                return Err(format!("{h}: value of {} does not match its recipe {recipe}", vb.variable));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::parse_process;
    use crate::syntax::parse_term;

    fn bounds(depth: usize) -> ExplorationBounds {
        ExplorationBounds { replication_unfoldings: 1, recipe_depth: depth, max_trace_length: 12 }
    }

    #[test]
    fn single_output_yields_one_frame() {
        let p = parse_process("new s. out(c, a)").unwrap();
        let ex = explore(&p, "s", bounds(2)).unwrap();
        assert_eq!(ex.frames.len(), 1);
        assert_eq!(ex.frames[0].frame.len(), 1);
        assert_eq!(secrecy_of(&ex).frames, 1);
    }

    #[test]
    fn hidden_key_process_reaches_secret_under_encryption() {
        let p =
            parse_process("new s, k, r, r2. (out(c, enc(s,k,r)) | in(c, z). out(c, enc(a, dec(z,k), r2)))").unwrap();
        let ex = explore(&p, "s", bounds(2)).unwrap();
        let mut want = vec![parse_term("enc(s,k,r)").unwrap(), parse_term("enc(a,s,r2)").unwrap()];
        want.sort();
        assert!(ex.frames.iter().any(|f| normal_multiset(&f.frame) == want));
        for f in &ex.frames {
            check_provenance(&p, f).unwrap();
        }
        assert!(check_syntactic_secrecy_bounded(&p, "s", bounds(2)).unwrap().secret_within_bounds());
    }

    #[test]
    fn test_on_secret_takes_else_branch() {
        let p = parse_process("new s, k, r. (out(c, enc(s,k,r)) | in(c, z). [dec(z,k) = a]. out(c, ok))").unwrap();
        let ex = explore(&p, "s", bounds(2)).unwrap();
        let tests: Vec<_> = ex.frames.iter().flat_map(|f| f.tests()).collect();
        assert!(tests.iter().any(|(l, r, holds)| normalize(l) == Term::name("s") && r.is_name_of("a") && !holds));
        assert!(ex.frames.iter().all(|f| f.frame.terms().all(|t| !t.is_name_of("ok"))));
    }

    #[test]
    fn direct_leak_is_found() {
        let p = parse_process("new s. out(c, s)").unwrap();
        let ev = check_syntactic_secrecy_bounded(&p, "s", bounds(1)).unwrap();
        assert_eq!(ev.attack.unwrap().recipe, Term::var("y1"));
    }

    #[test]
    fn signature_leaks_through_retrieve() {
        let p = parse_process("new s, a. (out(c, sign(s, priv(a))) | out(c, pub(a)))").unwrap();
        let ev = check_syntactic_secrecy_bounded(&p, "s", bounds(1)).unwrap();
        assert!(ev.attack.unwrap().recipe.contains_symbol(Symbol::Retrieve));
    }

    #[test]
    fn private_channels_communicate_without_the_frame() {
        let p = parse_process("new s, d, k, r. (out(d, s) | in(d, z). out(c, enc(z, k, r)))").unwrap();
        let ex = explore(&p, "s", bounds(1)).unwrap();
        let last = ex.frames.last().unwrap();
        assert_eq!(last.frame.len(), 1);
        assert!(last.trace.iter().any(|a| matches!(a, Action::Comm { .. })));
        assert!(last.provenance[0].substitution[0].recipe.is_none());
    }

    #[test]
    fn replication_copies_get_suffixed_names() {
        let p = parse_process("!(new n. out(c, n))").unwrap();
        let ex = explore(&p, "n", ExplorationBounds { replication_unfoldings: 2, ..bounds(1) }).unwrap();
        let f = ex.frames.last().unwrap();
        let names: BTreeSet<String> = f.frame.terms().map(|t| t.to_string()).collect();
        assert_eq!(names, ["n#1", "n#2"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn pattern_directed_inputs_build_pairs() {
        let p = parse_process("new s. in(c, z). [pi1(z) = a]. [pi2(z) = b]. out(c, ok)").unwrap();
        let ex = explore(&p, "s", bounds(2)).unwrap();
        assert!(ex.frames.iter().any(|f| f.frame.terms().any(|t| t.is_name_of("ok"))));
        let ex1 = explore(&p, "s", bounds(1)).unwrap();
        assert!(ex1.frames.iter().all(|f| f.frame.is_empty()));
    }

    #[test]
    fn trace_bound_sets_truncation() {
        let p = parse_process("new s. (out(c, a) | out(c, b))").unwrap();
        let ex = explore(&p, "s", ExplorationBounds { max_trace_length: 1, ..bounds(1) }).unwrap();
        assert!(ex.truncated);
        assert!(ex.frames.iter().all(|f| f.frame.len() <= 1));
    }

    #[test]
    fn secret_must_be_bound() {
        let p = parse_process("out(c, s)").unwrap();
        assert!(matches!(explore(&p, "s", bounds(1)), Err(ExploreError::SecretNotBound(_))));
    }
}
