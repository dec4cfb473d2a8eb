//! Terms over the fixed cryptographic signature, positions and substitutions.
//!
//! Terms are immutable and share structure through `Arc`, so cloning is cheap
//! and values can cross threads. Equality, ordering and hashing are
//! structural.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a name or a variable.
pub type Ident = Arc<str>;

/// Errors raised by positional term operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid position {position} in term {term}")]
    InvalidPosition { position: String, term: String },
    #[error("cyclic substitution through variable {0}")]
    CyclicSubstitution(String),
}

/// The twelve function symbols of the signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Enc,
    Dec,
    Enca,
    Deca,
    Pub,
    Priv,
    Pair,
    Proj1,
    Proj2,
    Sign,
    Check,
    Retrieve,
}

impl Symbol {
    pub const ALL: [Symbol; 12] = [
        Symbol::Enc,
        Symbol::Dec,
        Symbol::Enca,
        Symbol::Deca,
        Symbol::Pub,
        Symbol::Priv,
        Symbol::Pair,
        Symbol::Proj1,
        Symbol::Proj2,
        Symbol::Sign,
        Symbol::Check,
        Symbol::Retrieve,
    ];

    pub fn arity(self) -> usize {
        match self {
            Symbol::Enc | Symbol::Enca | Symbol::Check => 3,
            Symbol::Dec | Symbol::Deca | Symbol::Pair | Symbol::Sign => 2,
            Symbol::Pub | Symbol::Priv | Symbol::Proj1 | Symbol::Proj2 | Symbol::Retrieve => 1,
        }
    }

    /// Canonical ASCII name.
    pub fn name(self) -> &'static str {
        match self {
            Symbol::Enc => "enc",
            Symbol::Dec => "dec",
            Symbol::Enca => "enca",
            Symbol::Deca => "deca",
            Symbol::Pub => "pub",
            Symbol::Priv => "priv",
            Symbol::Pair => "pair",
            Symbol::Proj1 => "pi1",
            Symbol::Proj2 => "pi2",
            Symbol::Sign => "sign",
            Symbol::Check => "check",
            Symbol::Retrieve => "retrieve",
        }
    }

    /// Accepts the ASCII spellings and the projection sugar.
    pub fn from_name(s: &str) -> Option<Symbol> {
        Some(match s {
            "enc" => Symbol::Enc,
            "dec" => Symbol::Dec,
            "enca" => Symbol::Enca,
            "deca" => Symbol::Deca,
            "pub" => Symbol::Pub,
            "priv" => Symbol::Priv,
            "pair" => Symbol::Pair,
            "pi1" | "proj1" | "π1" | "π₁" => Symbol::Proj1,
            "pi2" | "proj2" | "π2" | "π₂" => Symbol::Proj2,
            "sign" => Symbol::Sign,
            "check" => Symbol::Check,
            "retrieve" => Symbol::Retrieve,
            _ => return None,
        })
    }

    pub fn is_constructor(self) -> bool {
        matches!(self, Symbol::Pair | Symbol::Enc | Symbol::Enca | Symbol::Sign)
    }

    pub fn is_destructor(self) -> bool {
        matches!(self, Symbol::Proj1 | Symbol::Proj2 | Symbol::Dec | Symbol::Deca | Symbol::Check | Symbol::Retrieve)
    }

    /// `enc` or `enca`.
    pub fn is_encryption(self) -> bool {
        matches!(self, Symbol::Enc | Symbol::Enca)
    }

    /// `dec` or `deca`.
    pub fn is_decryption(self) -> bool {
        matches!(self, Symbol::Dec | Symbol::Deca)
    }

    pub fn is_projection(self) -> bool {
        matches!(self, Symbol::Proj1 | Symbol::Proj2)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A node of a term tree.
#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Name(Ident),
    Var(Ident),
    App(Symbol, Vec<Term>),
}

/// An immutable term with structural sharing.
#[derive(Clone, Eq, PartialOrd, Ord)]
pub struct Term(Arc<Node>);

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

/// Head of a term: function symbol, name or variable at the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Symbol(Symbol),
    Name(Ident),
    Var(Ident),
}

/// Identifier of the distinguished marker variable for secret slots.
pub const MARKER: &str = "%x";
/// Identifier of the distinguished hole variable of destructor contexts.
pub const HOLE: &str = "z0";
/// The constant returned by a successful signature check.
pub const OK: &str = "ok";

impl Term {
    pub fn name(id: &str) -> Term {
        Term(Arc::new(Node::Name(Arc::from(id))))
    }

    pub fn var(id: &str) -> Term {
        Term(Arc::new(Node::Var(Arc::from(id))))
    }

    pub fn name_ident(id: Ident) -> Term {
        Term(Arc::new(Node::Name(id)))
    }

    pub fn var_ident(id: Ident) -> Term {
        Term(Arc::new(Node::Var(id)))
    }

    /// Builds `f(args)`. Panics if the arity is wrong, which is a programming error.
    pub fn app(f: Symbol, args: Vec<Term>) -> Term {
        assert_eq!(f.arity(), args.len(), "arity mismatch for {f}");
        Term(Arc::new(Node::App(f, args)))
    }

    pub fn ok() -> Term {
        Term::name(OK)
    }

    pub fn marker() -> Term {
        Term::var(MARKER)
    }

    pub fn hole() -> Term {
        Term::var(HOLE)
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::app(Symbol::Pair, vec![a, b])
    }

    pub fn enc(m: Term, k: Term, r: Term) -> Term {
        Term::app(Symbol::Enc, vec![m, k, r])
    }

    pub fn dec(m: Term, k: Term) -> Term {
        Term::app(Symbol::Dec, vec![m, k])
    }

    pub fn proj1(m: Term) -> Term {
        Term::app(Symbol::Proj1, vec![m])
    }

    pub fn proj2(m: Term) -> Term {
        Term::app(Symbol::Proj2, vec![m])
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn head(&self) -> Head {
        match &*self.0 {
            Node::Name(n) => Head::Name(n.clone()),
            Node::Var(v) => Head::Var(v.clone()),
            Node::App(f, _) => Head::Symbol(*f),
        }
    }

    pub fn symbol(&self) -> Option<Symbol> {
        match &*self.0 {
            Node::App(f, _) => Some(*f),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match &*self.0 {
            Node::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn arg(&self, i: usize) -> &Term {
        &self.args()[i]
    }

    pub fn as_name(&self) -> Option<&Ident> {
        match &*self.0 {
            Node::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Ident> {
        match &*self.0 {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_name(&self) -> bool {
        matches!(&*self.0, Node::Name(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(&*self.0, Node::Var(_))
    }

    pub fn is_name_of(&self, id: &str) -> bool {
        matches!(&*self.0, Node::Name(n) if &**n == id)
    }

    pub fn is_var_of(&self, id: &str) -> bool {
        matches!(&*self.0, Node::Var(v) if &**v == id)
    }

    /// `T|_p`.
    pub fn subterm_at(&self, p: &Position) -> Result<&Term, TermError> {
        let mut t = self;
        for &i in p.steps() {
            let args = t.args();
            if i == 0 || i as usize > args.len() {
                return Err(TermError::InvalidPosition { position: p.to_string(), term: self.to_string() });
            }
            t = &args[i as usize - 1];
        }
        Ok(t)
    }

    /// `U[V]_p`.
    pub fn replace_at(&self, p: &Position, v: Term) -> Result<Term, TermError> {
        self.replace_steps(p.steps(), v)
            .ok_or_else(|| TermError::InvalidPosition { position: p.to_string(), term: self.to_string() })
    }

    fn replace_steps(&self, steps: &[u32], v: Term) -> Option<Term> {
        match steps.split_first() {
            None => Some(v),
            Some((&i, rest)) => match &*self.0 {
                Node::App(f, args) if i >= 1 && (i as usize) <= args.len() => {
                    let mut new_args = args.clone();
                    let k = i as usize - 1;
                    new_args[k] = args[k].replace_steps(rest, v)?;
                    Some(Term::app(*f, new_args))
                }
                _ => None,
            },
        }
    }

    pub fn is_valid_position(&self, p: &Position) -> bool {
        self.subterm_at(p).is_ok()
    }

    /// All positions in pre-order (root first, children left to right).
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut out, &|_| true);
        out
    }

    pub fn var_positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut out, &|t| t.is_var());
        out
    }

    pub fn nonvar_positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut out, &|t| !t.is_var());
        out
    }

    /// Positions of the subterms equal to `target`.
    pub fn occurrences(&self, target: &Term) -> Vec<Position> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut out, &|t| t == target);
        out
    }

    fn collect_positions(&self, cur: &mut Vec<u32>, out: &mut Vec<Position>, keep: &dyn Fn(&Term) -> bool) {
        if keep(self) {
            out.push(Position(cur.clone()));
        }
        for (i, a) in self.args().iter().enumerate() {
            cur.push(i as u32 + 1);
            a.collect_positions(cur, out, keep);
            cur.pop();
        }
    }

    /// Pre-order iterator over all subterm occurrences.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            for a in t.args().iter().rev() {
                stack.push(a);
            }
        }
        out
    }

    /// Simultaneous replacement of the variables in the domain of `sigma`.
    pub fn apply(&self, sigma: &Substitution) -> Term {
        if sigma.is_empty() {
            return self.clone();
        }
        self.map_leaves(&mut |t| match t.as_var() {
            Some(v) => sigma.get(v).cloned(),
            None => None,
        })
    }

    /// Name instantiation `t[s ↦ m]`.
    pub fn instantiate_name(&self, s: &str, m: &Term) -> Term {
        self.map_leaves(&mut |t| if t.is_name_of(s) { Some(m.clone()) } else { None })
    }

    /// Rebuilds the term replacing leaves for which `f` returns a value.
    /// Untouched subtrees keep their sharing.
    pub fn map_leaves(&self, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
        match &*self.0 {
            Node::App(sym, args) => {
                let mut changed = false;
                let new_args: Vec<Term> = args
                    .iter()
                    .map(|a| {
                        let b = a.map_leaves(f);
                        if !b.ptr_eq(a) {
                            changed = true;
                        }
                        b
                    })
                    .collect();
                if changed {
                    Term::app(*sym, new_args)
                } else {
                    self.clone()
                }
            }
            _ => f(self).unwrap_or_else(|| self.clone()),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Some(n) = t.as_name() {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn variables(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Some(v) = t.as_var() {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        for a in self.args() {
            a.visit(f);
        }
    }

    pub fn any(&self, pred: &dyn Fn(&Term) -> bool) -> bool {
        pred(self) || self.args().iter().any(|a| a.any(pred))
    }

    pub fn is_ground(&self) -> bool {
        !self.any(&|t| t.is_var())
    }

    pub fn contains_symbol(&self, f: Symbol) -> bool {
        self.any(&|t| t.symbol() == Some(f))
    }

    pub fn contains_name(&self, n: &str) -> bool {
        self.any(&|t| t.is_name_of(n))
    }

    pub fn contains_var(&self, v: &str) -> bool {
        self.any(&|t| t.is_var_of(v))
    }

    /// `v ≤_st self`.
    pub fn has_subterm(&self, v: &Term) -> bool {
        self.any(&|t| t == v)
    }

    /// `v <_st self`.
    pub fn has_strict_subterm(&self, v: &Term) -> bool {
        self.args().iter().any(|a| a.has_subterm(v))
    }

    /// Publicness w.r.t. a set of restricted names: no restricted name and no `priv`.
    pub fn is_public(&self, restricted: &BTreeSet<Ident>) -> bool {
        !self.any(&|t| match &*t.0 {
            Node::Name(n) => restricted.contains(n),
            Node::App(Symbol::Priv, _) => true,
            _ => false,
        })
    }

    /// Number of symbol, name and variable occurrences.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    /// Height of the tree; leaves have depth 1.
    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    /// Renders mathematical notation: `⟨a, b⟩`, `π₁(t)`, `𝚡`, `z₀`.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        self.write_pretty(&mut s);
        s
    }

    fn write_pretty(&self, out: &mut String) {
        match &*self.0 {
            Node::Name(n) => out.push_str(n),
            Node::Var(v) => out.push_str(&pretty_var(v)),
            Node::App(Symbol::Pair, args) => {
                out.push('⟨');
                args[0].write_pretty(out);
                out.push_str(", ");
                args[1].write_pretty(out);
                out.push('⟩');
            }
            Node::App(f, args) => {
                out.push_str(match f {
                    Symbol::Proj1 => "π₁",
                    Symbol::Proj2 => "π₂",
                    other => other.name(),
                });
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    a.write_pretty(out);
                }
                out.push(')');
            }
        }
    }
}

fn pretty_var(v: &str) -> String {
    if v == MARKER {
        return "𝚡".to_string();
    }
    if v == HOLE {
        return "z₀".to_string();
    }
    if let Some(rest) = v.strip_prefix("z_") {
        if rest.contains('.') {
            return format!("z_{{{}}}", rest.replace('.', "·"));
        }
    }
    v.to_string()
}

impl fmt::Display for Term {
    /// Compact ASCII notation that the parser reads back: `<a,b>`, `pi1(t)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Name(n) => f.write_str(n),
            Node::Var(v) => f.write_str(v),
            Node::App(Symbol::Pair, args) => write!(f, "<{},{}>", args[0], args[1]),
            Node::App(sym, args) => {
                write!(f, "{}(", sym.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A position: a word over positive integers, `ε` being the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(Vec<u32>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn new(steps: Vec<u32>) -> Position {
        assert!(steps.iter().all(|&i| i > 0), "positions are words over positive integers");
        Position(steps)
    }

    pub fn steps(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: u32) -> Position {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    pub fn concat(&self, other: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    /// `self ≤ other` in the prefix order (ancestor or equal).
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Strict ancestor.
    pub fn is_strict_prefix_of(&self, other: &Position) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    /// `self − q`, defined iff `q ≤ self`.
    pub fn minus(&self, q: &Position) -> Option<Position> {
        if q.is_prefix_of(self) {
            Some(Position(self.0[q.0.len()..].to_vec()))
        } else {
            None
        }
    }

    /// All prefixes from the root to `self` inclusive.
    pub fn prefixes(&self) -> Vec<Position> {
        (0..=self.0.len()).map(|k| Position(self.0[..k].to_vec())).collect()
    }

    pub fn parent(&self) -> Option<Position> {
        if self.0.is_empty() {
            None
        } else {
            Some(Position(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// ASCII form with `.` separators; the root prints as `e`.
    pub fn ascii(&self) -> String {
        if self.0.is_empty() {
            "e".to_string()
        } else {
            self.0.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
        }
    }

    /// Parses `1.1.2`, `1·1·2`, `e`, `ε` or the empty string.
    pub fn parse(s: &str) -> Option<Position> {
        let s = s.trim();
        if s.is_empty() || s == "e" || s == "ε" || s == "eps" {
            return Some(Position::root());
        }
        let mut steps = Vec::new();
        for part in s.split(['.', '·']) {
            let i: u32 = part.trim().parse().ok()?;
            if i == 0 {
                return None;
            }
            steps.push(i);
        }
        Some(Position(steps))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
            f.write_str(&parts.join("·"))
        }
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Position {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.ascii())
    }
}

/// A finite, acyclic map from variables to terms applied simultaneously.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Ident, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    /// Builds a substitution, rejecting cyclic bindings.
    pub fn try_from_pairs<I: IntoIterator<Item = (Ident, Term)>>(pairs: I) -> Result<Substitution, TermError> {
        let sigma = Substitution { bindings: pairs.into_iter().collect() };
        sigma.check_acyclic()?;
        Ok(sigma)
    }

    pub fn single(v: &str, t: Term) -> Substitution {
        let mut s = Substitution::new();
        s.bindings.insert(Arc::from(v), t);
        s
    }

    /// Inserts without a cycle check; callers bind variables to ground terms.
    pub fn insert(&mut self, v: Ident, t: Term) {
        self.bindings.insert(v, t);
    }

    pub fn get(&self, v: &str) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &Term)> {
        self.bindings.iter()
    }

    fn check_acyclic(&self) -> Result<(), TermError> {
        // Depth-first search over the "variable occurs in binding of" graph.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: BTreeMap<Ident, Mark> = BTreeMap::new();
        fn dfs(v: &Ident, sigma: &Substitution, marks: &mut BTreeMap<Ident, Mark>) -> Result<(), TermError> {
            match marks.get(v) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Open) => return Err(TermError::CyclicSubstitution(v.to_string())),
                None => {}
            }
            marks.insert(v.clone(), Mark::Open);
            if let Some(t) = sigma.bindings.get(v) {
                for w in t.variables() {
                    if sigma.bindings.contains_key(&w) {
                        dfs(&w, sigma, marks)?;
                    }
                }
            }
            marks.insert(v.clone(), Mark::Done);
            Ok(())
        }
        for v in self.bindings.keys() {
            dfs(v, self, &mut marks)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Term {
        Term::name(s)
    }

    #[test]
    fn arities_follow_the_signature() {
        let expected = [3, 2, 3, 2, 1, 1, 2, 1, 1, 2, 3, 1];
        for (f, a) in Symbol::ALL.iter().zip(expected) {
            assert_eq!(f.arity(), a, "{f}");
        }
        assert!(Symbol::ALL.iter().filter(|f| f.is_constructor()).count() == 4);
        assert!(Symbol::ALL.iter().filter(|f| f.is_destructor()).count() == 6);
        assert!(!Symbol::Pub.is_constructor() && !Symbol::Pub.is_destructor());
        assert!(!Symbol::Priv.is_constructor() && !Symbol::Priv.is_destructor());
    }

    #[test]
    fn subterm_lookup() {
        let t = Term::enc(Term::pair(Term::pair(n("a"), n("b")), n("c")), n("k2"), n("r2"));
        assert_eq!(t.subterm_at(&Position::new(vec![1, 1, 2])).unwrap(), &n("b"));
        assert_eq!(t.subterm_at(&Position::root()).unwrap(), &t);
        assert!(t.subterm_at(&Position::new(vec![4])).is_err());
        assert_eq!(Term::pair(n("a"), n("b")).subterm_at(&Position::new(vec![1])).unwrap(), &n("a"));
    }

    #[test]
    fn replacement() {
        let t = Term::pair(n("a"), n("b"));
        assert_eq!(t.replace_at(&Position::new(vec![2]), n("c")).unwrap(), Term::pair(n("a"), n("c")));
        assert_eq!(n("s").replace_at(&Position::root(), n("m")).unwrap(), n("m"));
        let e = Term::enc(n("s"), n("k"), n("r"));
        assert_eq!(
            e.replace_at(&Position::new(vec![1]), Term::var("x")).unwrap(),
            Term::enc(Term::var("x"), n("k"), n("r"))
        );
        assert!(e.replace_at(&Position::new(vec![1, 1]), n("m")).is_err());
    }

    #[test]
    fn position_sets() {
        assert_eq!(n("a").positions(), vec![Position::root()]);
        let t = Term::enc(Term::var("z"), n("k"), n("r"));
        assert_eq!(t.var_positions(), vec![Position::new(vec![1])]);
        let u = Term::pair(Term::var("z1"), Term::pair(n("a"), Term::var("z2")));
        assert_eq!(u.nonvar_positions(), vec![Position::root(), Position::new(vec![2]), Position::new(vec![2, 1])]);
    }

    #[test]
    fn position_arithmetic() {
        let p = Position::new(vec![1, 2, 3]);
        let q = Position::new(vec![1]);
        assert_eq!(p.minus(&q), Some(Position::new(vec![2, 3])));
        assert_eq!(q.concat(&p.minus(&q).unwrap()), p);
        assert_eq!(q.minus(&p), None);
        assert_eq!(p.to_string(), "1·2·3");
        assert_eq!(Position::root().to_string(), "ε");
        assert_eq!(Position::parse("1.2.3"), Some(p.clone()));
        assert_eq!(Position::parse("1·2·3"), Some(p));
        assert_eq!(Position::parse("ε"), Some(Position::root()));
    }

    #[test]
    fn substitution_application() {
        let sigma = Substitution::single("z", n("k"));
        let t = Term::dec(Term::var("z"), n("k'"));
        assert_eq!(t.apply(&sigma), Term::dec(n("k"), n("k'")));
        assert_eq!(t.apply(&Substitution::new()), t);
        let cyclic = Substitution::try_from_pairs(vec![
            (Arc::from("x"), Term::pair(Term::var("y"), n("a"))),
            (Arc::from("y"), Term::var("x")),
        ]);
        assert!(cyclic.is_err());
    }

    #[test]
    fn names_heads_and_subterms() {
        let t = Term::enc(n("s"), n("k"), n("r"));
        let names: Vec<String> = t.free_names().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, vec!["k", "r", "s"]);
        assert_eq!(Term::pair(n("a"), n("b")).head(), Head::Symbol(Symbol::Pair));
        let sig = Term::app(Symbol::Sign, vec![Term::pair(n("k"), n("n")), Term::app(Symbol::Priv, vec![n("a")])]);
        assert!(sig.has_subterm(&n("k")));
        assert!(!n("k").has_strict_subterm(&n("k")));
    }

    #[test]
    fn publicness() {
        let restricted: BTreeSet<Ident> = [Arc::from("n1")].into_iter().collect();
        assert!(!Term::pair(n("a"), n("n1")).is_public(&restricted));
        assert!(!Term::app(Symbol::Priv, vec![n("a")]).is_public(&BTreeSet::new()));
        let s: BTreeSet<Ident> = [Arc::from("s")].into_iter().collect();
        assert!(Term::enc(n("a"), n("b"), n("c")).is_public(&s));
    }

    #[test]
    fn name_instantiation_leaves_other_terms_alone() {
        let t = Term::enc(n("a"), n("k"), n("r"));
        assert!(t.instantiate_name("s", &n("m")).ptr_eq(&t));
        let u = Term::enc(n("s"), n("k"), n("r"));
        assert_eq!(u.instantiate_name("s", &n("m")), Term::enc(n("m"), n("k"), n("r")));
    }

    #[test]
    fn printers() {
        let t = Term::enc(Term::pair(Term::var("z_1.2"), n("c")), n("k2"), n("r2"));
        assert_eq!(t.to_string(), "enc(<z_1.2,c>,k2,r2)");
        assert_eq!(t.pretty(), "enc(⟨z_{1·2}, c⟩, k2, r2)");
        assert_eq!(Term::proj1(Term::dec(Term::hole(), n("k"))).pretty(), "π₁(dec(z₀, k))");
        assert_eq!(Term::marker().pretty(), "𝚡");
    }
}
