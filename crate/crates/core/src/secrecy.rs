//! Static analysis of a process for a secret name: marked ciphers and their
//! openers, the destructor chains of outputs, the test operands that may
//! compare the secret, and the two syntactic conditions (well-formed
//! process, no test over the secret) under which syntactic secrecy of the
//! process implies its strong secrecy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::deduce::deduce;
use crate::explore::{explore, secrecy_of, Action, ExplorationBounds, SecrecyEvidence, StandardFrame};
use crate::process::{extract_messages, MessageSets, Process, Test, TestKind};
use crate::rewrite::normalize;
use crate::term::{Ident, Position, Substitution, Symbol, Term, HOLE, MARKER};
use crate::wellformed::{check_extended_well_formed, is_probabilistic};

/// Version of the JSON layout of [`ProcessReport`].
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecrecyError {
    #[error("{0} is not headed by enc or enca")]
    NotACipher(String),
    #[error("{0} must contain the marker exactly once, inside the plaintext")]
    MisplacedMarker(String),
    #[error("{symbol} lies between the head of {cipher} and the marker")]
    MalformedCipher { symbol: String, cipher: String },
    #[error("the key of {0} is not of the form pub(t)")]
    AsymmetricKey(String),
}

fn fresh(w: &Position) -> Term {
    Term::var(&format!("z_{}", w.ascii()))
}

fn step(i: u32, rest: &Position) -> Position {
    Position::new(vec![i]).concat(rest)
}

/// Keeps the path `r` of `n` and replaces every pair or signature argument
/// off the path by a fresh variable named after its off-path position.
/// Undefined when the path crosses anything but pairs and signature
/// messages before reaching a destructor.
pub fn prune(n: &Term, r: &Position) -> Option<Term> {
    let Some((&i, rest)) = r.steps().split_first() else {
        return Some(n.clone());
    };
    let rest = Position::new(rest.to_vec());
    let f = n.symbol()?;
    if f.is_destructor() {
        return Some(n.clone());
    }
    match (f, i) {
        (Symbol::Pair, 1) => Some(Term::pair(prune(n.arg(0), &rest)?, fresh(&step(2, &rest)))),
        (Symbol::Pair, 2) => Some(Term::pair(fresh(&step(1, &rest)), prune(n.arg(1), &rest)?)),
        (Symbol::Sign, 1) => Some(Term::app(Symbol::Sign, vec![prune(n.arg(0), &rest)?, fresh(&step(2, &rest))])),
        _ => None,
    }
}

fn head_at(u: &Term, q: &Position) -> Option<Symbol> {
    u.subterm_at(q).ok().and_then(Term::symbol)
}

/// The lowest encryption above the leaf position `p` of `u`, with its
/// plaintext pruned along the path to `p`, and the position of that
/// encryption.
pub fn f_ep(u: &Term, p: &Position) -> Option<(Term, Position)> {
    if !u.subterm_at(p).ok()?.args().is_empty() {
        return None;
    }
    let q = p
        .prefixes()
        .into_iter()
        .rfind(|q| q.is_strict_prefix_of(p) && head_at(u, q).is_some_and(Symbol::is_encryption))?;
    let rest = p.minus(&q.child(1))?;
    let c = u.subterm_at(&q).ok()?;
    let cipher = Term::app(c.symbol()?, vec![prune(c.arg(0), &rest)?, c.arg(1).clone(), c.arg(2).clone()]);
    Some((cipher, q))
}

pub fn f_e(u: &Term, p: &Position) -> Option<Term> {
    f_ep(u, p).map(|(t, _)| t)
}

fn opened(f: Symbol, key: &Term) -> Term {
    Term::app(f, vec![Term::hole(), key.clone()])
}

/// The destructor context around `p`: from the highest destructor other
/// than `check` above `p` down to the lowest decryption above `p`, whose
/// ciphertext argument is replaced by `z₀`.
pub fn f_dp(u: &Term, p: &Position) -> Option<(Term, Position)> {
    u.subterm_at(p).ok()?;
    let above: Vec<Position> = p.prefixes().into_iter().filter(|q| q.is_strict_prefix_of(p)).collect();
    let q = above.iter().find(|q| head_at(u, q).is_some_and(|f| f.is_destructor() && f != Symbol::Check))?.clone();
    let r = above.iter().rev().find(|q| head_at(u, q).is_some_and(Symbol::is_decryption))?;
    let d = u.subterm_at(r).ok()?;
    let v = u.replace_at(r, opened(d.symbol()?, d.arg(1))).ok()?;
    Some((v.subterm_at(&q).ok()?.clone(), q))
}

pub fn f_d(u: &Term, p: &Position) -> Option<Term> {
    f_dp(u, p).map(|(t, _)| t)
}

/// `D₁(…Dₙ)` where every factor is a projection word over `dec_g(z₀, K)`;
/// `D₁` is the outermost factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DestructorChain {
    pub factors: Vec<Term>,
}

impl DestructorChain {
    pub fn decompose(d: &Term) -> Option<DestructorChain> {
        let mut factors = Vec::new();
        let mut cur = d.clone();
        loop {
            let mut projections = Vec::new();
            while let Some(f) = cur.symbol().filter(|f| f.is_projection()) {
                projections.push(f);
                cur = cur.arg(0).clone();
            }
            let g = cur.symbol().filter(|f| f.is_decryption())?;
            let mut factor = opened(g, cur.arg(1));
            for f in projections.into_iter().rev() {
                factor = Term::app(f, vec![factor]);
            }
            factors.push(factor);
            let inner = cur.arg(0).clone();
            if inner.is_var_of(HOLE) {
                return Some(DestructorChain { factors });
            }
            cur = inner;
        }
    }

    pub fn compose(&self) -> Term {
        let mut it = self.factors.iter().rev();
        let mut t = it.next().cloned().unwrap_or_else(Term::hole);
        for f in it {
            t = f.apply(&Substitution::single(HOLE, t));
        }
        t
    }
}

fn factor_key(factor: &Term) -> Option<(Symbol, &Term)> {
    let mut t = factor;
    while t.symbol().is_some_and(Symbol::is_projection) {
        t = t.arg(0);
    }
    let g = t.symbol().filter(|f| f.is_decryption())?;
    Some((g, t.arg(1)))
}

/// The factor decrypts with the key matching the encryption of `e`.
pub fn meets(factor: &Term, e: &Term) -> bool {
    let Some((g, k)) = factor_key(factor) else { return false };
    match (g, e.symbol()) {
        (Symbol::Dec, Some(Symbol::Enc)) => k == e.arg(1),
        (Symbol::Deca, Some(Symbol::Enca)) => {
            k.symbol() == Some(Symbol::Priv) && e.arg(1).symbol() == Some(Symbol::Pub) && k.arg(0) == e.arg(1).arg(0)
        }
        _ => false,
    }
}

/// The factor meets `e` and the marker survives in `Dᵢ(E)↓`.
pub fn reveals(factor: &Term, e: &Term) -> bool {
    meets(factor, e) && normalize(&factor.apply(&Substitution::single(HOLE, e.clone()))).contains_var(MARKER)
}

/// The destructor term that extracts the marker from a marked cipher.
pub fn opener(e: &Term) -> Result<Term, SecrecyError> {
    let f = e.symbol().filter(|f| f.is_encryption()).ok_or_else(|| SecrecyError::NotACipher(e.to_string()))?;
    let (g, key) = match f {
        Symbol::Enc => (Symbol::Dec, e.arg(1).clone()),
        _ => {
            let k = e.arg(1);
            if k.symbol() != Some(Symbol::Pub) {
                return Err(SecrecyError::AsymmetricKey(e.to_string()));
            }
            (Symbol::Deca, Term::app(Symbol::Priv, vec![k.arg(0).clone()]))
        }
    };
    let marks = e.occurrences(&Term::marker());
    let [p] = marks.as_slice() else {
        return Err(SecrecyError::MisplacedMarker(e.to_string()));
    };
    if p.steps().first() != Some(&1) {
        return Err(SecrecyError::MisplacedMarker(e.to_string()));
    }
    let mut t = opened(g, &key);
    let mut cur = e.arg(0);
    for &i in &p.steps()[1..] {
        let hop = match (cur.symbol(), i) {
            (Some(Symbol::Pair), 1) => Symbol::Proj1,
            (Some(Symbol::Pair), 2) => Symbol::Proj2,
            (Some(Symbol::Sign), 1) => Symbol::Retrieve,
            _ => {
                return Err(SecrecyError::MalformedCipher { symbol: cur.to_string(), cipher: e.to_string() });
            }
        };
        t = Term::app(hop, vec![t]);
        cur = cur.arg(i as usize - 1);
    }
    Ok(t)
}

/// Subterms of the openers of `es` that contain a decryption.
pub fn opener_subterm_set<'a>(es: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for e in es {
        let Ok(o) = opener(e) else { continue };
        for u in o.subterms() {
            if u.any(&|v| v.symbol().is_some_and(Symbol::is_decryption)) {
                out.insert(u.clone());
            }
        }
    }
    out
}

/// The elements of `set` that are not strict subterms of another element.
pub fn maximal_terms(set: &BTreeSet<Term>) -> BTreeSet<Term> {
    set.iter().filter(|t| !set.iter().any(|u| u.has_strict_subterm(t))).cloned().collect()
}

/// Strips the suffixes added to bound names by binder renaming (`~i`) and
/// by replication unfolding (`#k`).
pub fn base_name(n: &str) -> &str {
    let cut = n.find(['~', '#']).unwrap_or(n.len());
    &n[..cut]
}

fn strip_names(t: &Term) -> Term {
    t.map_leaves(&mut |l| {
        let n = l.as_name()?;
        let b = base_name(n);
        (b.len() != n.len()).then(|| Term::name(b))
    })
}

/// Renaming-insensitive form: fresh variables renumbered `z1, z2, …` left
/// to right (𝚡 and `z₀` kept), renamed copies of bound names identified.
pub fn canonical(t: &Term) -> Term {
    let mut seen: HashMap<Ident, Term> = HashMap::new();
    strip_names(t).map_leaves(&mut |l| {
        let v = l.as_var()?;
        if &**v == MARKER || &**v == HOLE {
            return None;
        }
        let n = seen.len() + 1;
        Some(seen.entry(v.clone()).or_insert_with(|| Term::var(&format!("z{n}"))).clone())
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkedCipher {
    /// Fresh variables named after their off-path positions.
    pub term: Term,
    pub canonical: Term,
    pub generation: usize,
    pub opener: Term,
}

impl MarkedCipher {
    fn new(term: Term, generation: usize) -> Result<MarkedCipher, SecrecyError> {
        let opener = opener(&term)?;
        Ok(MarkedCipher { canonical: canonical(&term), term, generation, opener })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Generation {
    pub index: usize,
    pub ciphers: Vec<MarkedCipher>,
    /// `⌊Eᵢ⌋`: decryption-carrying subterms of the openers.
    pub openers: Vec<Term>,
    pub max_openers: Vec<Term>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ESets {
    pub secret: String,
    pub outputs: Vec<Term>,
    pub test_operands: Vec<Term>,
    pub generations: Vec<Generation>,
    /// `D_o`: destructor contexts of the variables of outputs.
    pub output_destructors: Vec<Term>,
    /// `M_t^s`: test operands that may compare the secret.
    pub tested: Vec<Term>,
    /// Terms that could not be turned into marked ciphers.
    pub errors: Vec<String>,
}

impl ESets {
    pub fn ciphers(&self) -> impl Iterator<Item = &MarkedCipher> {
        self.generations.iter().flat_map(|g| g.ciphers.iter())
    }

    pub fn generation(&self, i: usize) -> Option<&Generation> {
        self.generations.get(i)
    }
}

/// Groups candidates by canonical form, preferring representatives whose
/// names carry no renaming suffix.
fn dedup_canonical(cands: Vec<Term>) -> Vec<Term> {
    let mut by: BTreeMap<Term, Term> = BTreeMap::new();
    let rank = |t: &Term| (t.free_names().iter().any(|n| base_name(n).len() != n.len()), t.to_string());
    for t in cands {
        let c = canonical(&t);
        match by.get(&c) {
            Some(old) if rank(old) <= rank(&t) => {}
            _ => {
                by.insert(c, t);
            }
        }
    }
    by.into_values().collect()
}

/// `E₀`: every output occurrence of `s` marked and cut at its lowest
/// encryption.
pub fn compute_e0(outputs: &BTreeSet<Term>, s: &str) -> Vec<Term> {
    let secret = Term::name(s);
    let mut cands = Vec::new();
    for m in outputs {
        for p in m.occurrences(&secret) {
            let marked = m.replace_at(&p, Term::marker()).expect("occurrence");
            if let Some(e) = f_e(&marked, &p) {
                cands.push(e);
            }
        }
    }
    dedup_canonical(cands)
}

/// `D_o`: destructor contexts of every variable position of every output.
pub fn compute_do(outputs: &BTreeSet<Term>) -> BTreeSet<Term> {
    outputs.iter().flat_map(|m| m.var_positions().into_iter().filter_map(move |p| f_d(m, &p))).collect()
}

/// `Eᵢ₊₁` from `⌊Eᵢ⌋`: ciphers of outputs whose destructor context under
/// the lowest encryption starts with an opener of the previous generation;
/// the cipher is marked at that destructor.
fn next_generation(outputs: &BTreeSet<Term>, previous: &BTreeSet<Term>) -> Vec<Term> {
    let mut cands = Vec::new();
    for m in outputs {
        for p in m.var_positions() {
            let Some((cipher, p1)) = f_ep(m, &p) else { continue };
            let p2 = p.minus(&p1).expect("cipher above p");
            let Some((d, q)) = f_dp(&cipher, &p2) else { continue };
            let Some(chain) = DestructorChain::decompose(&d) else { continue };
            if !previous.contains(&chain.factors[0]) {
                continue;
            }
            let at = p1.concat(&q);
            let marked = m.replace_at(&at, Term::marker()).expect("valid position");
            if let Some(e) = f_e(&marked, &at) {
                cands.push(e);
            }
        }
    }
    dedup_canonical(cands)
}

fn operands_for_tested(tests: &BTreeSet<Test>) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for t in tests {
        match t.check_side() {
            Some(c) => {
                out.insert(c.arg(0).clone());
                out.insert(c.arg(1).clone());
            }
            None => {
                out.insert(t.left.clone());
                out.insert(t.right.clone());
            }
        }
    }
    out
}

/// Whether the operand `t` may compare the secret.
pub fn is_tested(t: &Term, s: &str, ciphers: &[Term]) -> bool {
    if t.is_name_of(s) {
        return true;
    }
    t.var_positions().iter().any(|p| {
        let Some(chain) = f_d(t, p).and_then(|d| DestructorChain::decompose(&d)) else { return false };
        chain.factors.iter().any(|f| ciphers.iter().any(|e| reveals(f, e)))
    })
}

pub fn compute_esets(p: &Process, s: &str) -> ESets {
    compute_esets_from(&extract_messages(p), s)
}

pub fn compute_esets_from(sets: &MessageSets, s: &str) -> ESets {
    let outputs = &sets.outputs;
    let mut errors = Vec::new();
    let mut generations: Vec<Generation> = Vec::new();
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    let limit = outputs.iter().map(|m| m.positions().len()).sum::<usize>() + 2;
    let mut current = compute_e0(outputs, s);
    loop {
        let index = generations.len();
        assert!(index <= limit, "marked-cipher generations exceed the positions of the outputs");
        let mut ciphers = Vec::new();
        for t in &current {
            match MarkedCipher::new(t.clone(), index) {
                Ok(c) => ciphers.push(c),
                Err(e) => errors.push(e.to_string()),
            }
        }
        let openers = opener_subterm_set(ciphers.iter().map(|c| &c.term));
        let fresh_found = ciphers.iter().any(|c| !seen.contains(&c.canonical));
        seen.extend(ciphers.iter().map(|c| c.canonical.clone()));
        generations.push(Generation {
            index,
            ciphers,
            max_openers: maximal_terms(&openers).into_iter().collect(),
            openers: openers.iter().cloned().collect(),
        });
        if !fresh_found {
            break;
        }
        current = next_generation(outputs, &openers);
    }
    let all: Vec<Term> = generations.iter().flat_map(|g| g.ciphers.iter().map(|c| c.term.clone())).collect();
    let tested = operands_for_tested(&sets.tests).into_iter().filter(|t| is_tested(t, s, &all)).collect();
    ESets {
        secret: s.to_string(),
        outputs: outputs.iter().cloned().collect(),
        test_operands: sets.test_operands.iter().cloned().collect(),
        generations,
        output_destructors: compute_do(outputs).into_iter().collect(),
        tested,
        errors,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub term: String,
    pub position: String,
    pub explanation: String,
}

impl Witness {
    fn at(t: &Term, p: &Position, explanation: String) -> Witness {
        Witness { term: t.to_string(), position: p.to_string(), explanation }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} in {}", self.explanation, self.position, self.term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionResult {
    pub condition: u8,
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

impl ConditionResult {
    fn new(condition: u8, witnesses: Vec<Witness>) -> ConditionResult {
        ConditionResult { condition, passed: witnesses.is_empty(), witnesses }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefinitionReport {
    /// Requirements on the process as a whole (closed, secret bound,
    /// channels other than the secret).
    pub preamble: Vec<Witness>,
    pub conditions: Vec<ConditionResult>,
}

impl DefinitionReport {
    pub fn passed(&self) -> bool {
        self.preamble.is_empty() && self.conditions.iter().all(|c| c.passed)
    }

    pub fn failed_conditions(&self) -> BTreeSet<u8> {
        self.conditions.iter().filter(|c| !c.passed).map(|c| c.condition).collect()
    }

    pub fn first_witness(&self) -> Option<(u8, &Witness)> {
        self.preamble
            .first()
            .map(|w| (0, w))
            .or_else(|| self.conditions.iter().find_map(|c| c.witnesses.first().map(|w| (c.condition, w))))
    }
}

fn positions_where(t: &Term, pred: impl Fn(&Term) -> bool) -> Vec<Position> {
    t.positions().into_iter().filter(|p| pred(t.subterm_at(p).unwrap())).collect()
}

fn has_head(t: &Term, f: Symbol) -> bool {
    t.symbol() == Some(f)
}

/// Operand shape allowed in tests: a name, or `π…(dec_g(…π…(z)…, K))`.
pub fn is_test_shape(t: &Term) -> bool {
    t.is_name() || is_chain_shape(t)
}

fn is_chain_shape(t: &Term) -> bool {
    let mut t = t;
    while t.symbol().is_some_and(Symbol::is_projection) {
        t = t.arg(0);
    }
    t.is_var() || (t.symbol().is_some_and(Symbol::is_decryption) && is_chain_shape(t.arg(0)))
}

/// Checks that `p` is a well-formed process for `s`.
pub fn check_well_formed_process(p: &Process, s: &str) -> DefinitionReport {
    let sets = extract_messages(p);
    let bound = p.bound_names();
    let mut preamble = Vec::new();
    if !bound.contains(s) {
        preamble.push(Witness {
            term: s.into(),
            position: "ε".into(),
            explanation: format!("{s} is not a bound name"),
        });
    }
    if p.channels().contains(s) {
        preamble.push(Witness {
            term: s.into(),
            position: "ε".into(),
            explanation: format!("{s} is used as a channel"),
        });
    }
    for v in p.free_variables() {
        preamble.push(Witness { term: v.to_string(), position: "ε".into(), explanation: "free variable".into() });
    }
    let messages = sets.messages();
    let secret = Term::name(s);

    let mut c1 = Vec::new();
    for t in &messages {
        for q in positions_where(t, |u| has_head(u, Symbol::Retrieve)) {
            c1.push(Witness::at(t, &q, "retrieve occurs".into()));
        }
    }
    for t in &sets.outputs {
        for q in positions_where(t, |u| has_head(u, Symbol::Check)) {
            c1.push(Witness::at(t, &q, "check occurs in an output".into()));
        }
    }
    for test in &sets.tests {
        let allowed = test.check_side();
        for t in [&test.left, &test.right] {
            for q in positions_where(t, |u| has_head(u, Symbol::Check)) {
                if Some(t) == allowed && q.is_root() {
                    continue;
                }
                c1.push(Witness::at(t, &q, format!("check outside the form check(M,N,K) = ok in {test}")));
            }
        }
    }

    let mut c2 = Vec::new();
    for t in &messages {
        for q in positions_where(t, |u| u.symbol().is_some_and(Symbol::is_encryption)) {
            let c = t.subterm_at(&q).unwrap();
            let r = c.arg(2);
            let agent = r.as_name().is_some_and(|n| bound.contains(n) && &**n != s);
            if !agent {
                c2.push(Witness::at(t, &q, format!("randomness {r} is not a bound name other than {s}")));
            } else if !is_probabilistic(t, &q, messages.iter()) {
                c2.push(Witness::at(t, &q, format!("randomness {r} is used outside this encryption")));
            }
        }
    }

    let mut c3 = Vec::new();
    for t in &messages {
        for q in positions_where(t, |u| {
            u.symbol().is_some_and(|f| f.is_encryption() || f.is_decryption() || f == Symbol::Sign)
        }) {
            let k = t.subterm_at(&q).unwrap().arg(1);
            if !k.is_ground() {
                c3.push(Witness::at(t, &q.child(2), format!("key {k} is not closed")));
            }
        }
    }

    let mut c4 = Vec::new();
    for t in &messages {
        for q in positions_where(t, |u| {
            u.symbol().is_some_and(|f| f.is_destructor() || matches!(f, Symbol::Pub | Symbol::Priv))
        }) {
            let u = t.subterm_at(&q).unwrap();
            let below_constructor = u.args().iter().any(|a| a.any(&|v| v.symbol().is_some_and(Symbol::is_constructor)));
            if below_constructor {
                c4.push(Witness::at(t, &q, format!("{} is above a constructor", u.symbol().unwrap())));
            }
            if u.args().iter().any(|a| a.has_subterm(&secret)) {
                c4.push(Witness::at(t, &q, format!("{} is above {s}", u.symbol().unwrap())));
            }
        }
    }

    let mut c5 = Vec::new();
    for test in &sets.tests {
        match (test.kind, test.check_side()) {
            (TestKind::CheckForm, Some(c)) => {
                if !c.arg(2).is_ground() {
                    c5.push(Witness::at(c, &Position::new(vec![3]), format!("key of {test} is not closed")));
                }
                for (i, a) in c.args()[..2].iter().enumerate() {
                    if !is_test_shape(a) {
                        c5.push(Witness::at(
                            c,
                            &Position::new(vec![i as u32 + 1]),
                            format!("operand of {test} has no test shape"),
                        ));
                    }
                }
            }
            _ => {
                for t in [&test.left, &test.right] {
                    if !is_test_shape(t) {
                        c5.push(Witness::at(t, &Position::root(), format!("operand of {test} has no test shape")));
                    }
                }
            }
        }
    }

    DefinitionReport {
        preamble,
        conditions: vec![
            ConditionResult::new(1, c1),
            ConditionResult::new(2, c2),
            ConditionResult::new(3, c3),
            ConditionResult::new(4, c4),
            ConditionResult::new(5, c5),
        ],
    }
}

/// Checks that `p` does not test over `s`, given its marked ciphers.
pub fn check_no_test_over_secret(p: &Process, s: &str, esets: &ESets) -> DefinitionReport {
    let sets = extract_messages(p);
    let restricted = p.bound_names();
    let ciphers: Vec<&MarkedCipher> = esets.ciphers().collect();

    let mut c1 = Vec::new();
    for d in &esets.output_destructors {
        let Some(chain) = DestructorChain::decompose(d) else { continue };
        for (i, f) in chain.factors.iter().enumerate() {
            for e in &ciphers {
                if !reveals(f, &e.term) {
                    continue;
                }
                if i > 0 {
                    c1.push(Witness {
                        term: d.to_string(),
                        position: format!("factor {}", i + 1),
                        explanation: format!("factor {f} opens {} but is not the outermost factor", e.term.pretty()),
                    });
                } else if chain.factors[0].has_strict_subterm(&e.opener) {
                    c1.push(Witness {
                        term: d.to_string(),
                        position: "factor 1".into(),
                        explanation: format!("{} applies a destructor above the opener {}", f, e.opener),
                    });
                }
            }
        }
    }

    let tested: BTreeSet<&Term> = esets.tested.iter().collect();
    let is_guard = |t: &Term| t.as_name().is_some_and(|n| restricted.contains(n) && &**n != s);
    let mut c2 = Vec::new();
    for test in &sets.tests {
        let pairs: Vec<(&Term, &Term)> = match test.check_side() {
            Some(c) => vec![(c.arg(0), c.arg(1)), (c.arg(1), c.arg(0))],
            None => vec![(&test.left, &test.right), (&test.right, &test.left)],
        };
        for (t, other) in pairs {
            if tested.contains(t) && !is_guard(other) {
                c2.push(Witness {
                    term: test.to_string(),
                    position: "ε".into(),
                    explanation: format!("{t} may compare {s} but {other} is not a restricted name"),
                });
            }
        }
    }
    DefinitionReport {
        preamble: Vec::new(),
        conditions: vec![ConditionResult::new(1, c1), ConditionResult::new(2, c2)],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    StrongSecrecySupported,
    TheoremInapplicable { reason: String },
    SyntacticAttackFound { recipe: String, trace: Vec<String> },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::StrongSecrecySupported => "strong-secrecy-supported",
            Verdict::TheoremInapplicable { .. } => "theorem-inapplicable",
            Verdict::SyntacticAttackFound { .. } => "syntactic-attack-found",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::StrongSecrecySupported => write!(f, "strong-secrecy-supported (within bounds)"),
            Verdict::TheoremInapplicable { reason } => write!(f, "theorem-inapplicable: {reason}"),
            Verdict::SyntacticAttackFound { recipe, .. } => write!(f, "syntactic-attack-found: recipe {recipe}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcessReport {
    pub schema_version: u32,
    pub secret: String,
    pub well_formed: DefinitionReport,
    pub no_test_over_secret: DefinitionReport,
    pub esets: ESets,
    /// Both definitions hold, so syntactic and strong secrecy coincide.
    pub theorem_applicable: bool,
    pub evidence: Option<SecrecyEvidence>,
    pub exploration_error: Option<String>,
    pub verdict: Verdict,
}

/// Runs both syntactic checks and the bounded exploration.
pub fn verdict(p: &Process, s: &str, bounds: ExplorationBounds) -> ProcessReport {
    let well_formed = check_well_formed_process(p, s);
    let esets = compute_esets(p, s);
    let no_test = check_no_test_over_secret(p, s, &esets);
    let theorem_applicable = well_formed.passed() && no_test.passed();
    let (evidence, exploration_error) = match explore(p, s, bounds) {
        Ok(ex) => (Some(secrecy_of(&ex)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let attack = evidence.as_ref().and_then(|e| e.attack.as_ref());
    let verdict = if let Some(a) = attack {
        Verdict::SyntacticAttackFound {
            recipe: a.recipe.to_string(),
            trace: a.trace.iter().map(Action::to_string).collect(),
        }
    } else if !theorem_applicable {
        let reason = match well_formed.first_witness() {
            Some((0, w)) => format!("not a well-formed process: {w}"),
            Some((c, w)) => format!("well-formedness condition {c} fails: {w}"),
            None => {
                let (c, w) = no_test.first_witness().expect("a failing condition has a witness");
                format!("no-test-over-secret condition {c} fails: {w}")
            }
        };
        Verdict::TheoremInapplicable { reason }
    } else if let Some(e) = exploration_error.clone() {
        Verdict::TheoremInapplicable { reason: e }
    } else {
        Verdict::StrongSecrecySupported
    };
    ProcessReport {
        schema_version: REPORT_SCHEMA_VERSION,
        secret: s.to_string(),
        well_formed,
        no_test_over_secret: no_test,
        esets,
        theorem_applicable,
        evidence,
        exploration_error,
        verdict,
    }
}

fn write_definition(f: &mut fmt::Formatter<'_>, title: &str, d: &DefinitionReport) -> fmt::Result {
    writeln!(f, "{title}: {}", if d.passed() { "pass" } else { "fail" })?;
    for w in &d.preamble {
        writeln!(f, "  preamble: {w}")?;
    }
    for c in &d.conditions {
        writeln!(f, "  condition {}: {}", c.condition, if c.passed { "pass" } else { "fail" })?;
        for w in &c.witnesses {
            writeln!(f, "    {w}")?;
        }
    }
    Ok(())
}

impl fmt::Display for ESets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ts: &[Term]| ts.iter().map(Term::pretty).collect::<Vec<_>>().join(", ");
        writeln!(f, "M_o = {{{}}}", list(&self.outputs))?;
        writeln!(f, "M_t = {{{}}}", list(&self.test_operands))?;
        writeln!(f, "D_o = {{{}}}", list(&self.output_destructors))?;
        for g in &self.generations {
            let cs: Vec<Term> = g.ciphers.iter().map(|c| c.term.clone()).collect();
            writeln!(f, "E{} = {{{}}}", g.index, list(&cs))?;
            writeln!(f, "⌊E{}⌋ = {{{}}}", g.index, list(&g.openers))?;
            writeln!(f, "max⌊E{}⌋ = {{{}}}", g.index, list(&g.max_openers))?;
        }
        write!(f, "M_t^{} = {{{}}}", self.secret, list(&self.tested))?;
        for e in &self.errors {
            write!(f, "\nwarning: {e}")?;
        }
        Ok(())
    }
}

impl fmt::Display for ProcessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "secret: {}", self.secret)?;
        write_definition(f, "well-formed process", &self.well_formed)?;
        write_definition(f, "does not test over the secret", &self.no_test_over_secret)?;
        writeln!(f, "{}", self.esets)?;
        if self.theorem_applicable {
            writeln!(f, "transfer theorem applicable: syntactic secrecy <=> strong secrecy")?;
        } else {
            writeln!(f, "transfer theorem not applicable")?;
        }
        match (&self.evidence, &self.exploration_error) {
            (Some(e), _) => writeln!(f, "{e}")?,
            (None, Some(err)) => writeln!(f, "exploration failed: {err}")?,
            _ => {}
        }
        write!(f, "verdict: {}", self.verdict)
    }
}

fn matches_instance(pattern: &Term, t: &Term) -> bool {
    if pattern.is_var() {
        return true;
    }
    match (pattern.as_name(), t.as_name()) {
        (Some(a), Some(b)) => return base_name(a) == base_name(b),
        (Some(_), None) | (None, Some(_)) => return false,
        _ => {}
    }
    pattern.symbol().is_some()
        && pattern.symbol() == t.symbol()
        && pattern.args().iter().zip(t.args()).all(|(a, b)| matches_instance(a, b))
}

/// Runtime check of the marked-cipher over-approximation on one explored
/// frame where `s` is not deducible: the normalized frame is extended
/// well-formed and every occurrence of `s`, cut at its lowest encryption,
/// is an instance of some marked cipher. Returns the failures.
pub fn standard_frame_violations(esets: &ESets, sf: &StandardFrame, s: &str) -> Vec<String> {
    let nf = sf.frame.normalized();
    let secret = Term::name(s);
    if deduce(&nf, &secret).is_some() {
        return Vec::new();
    }
    let mut out: Vec<String> = check_extended_well_formed(&nf, s).violations.iter().map(|v| v.to_string()).collect();
    let ciphers: Vec<&MarkedCipher> = esets.ciphers().collect();
    for (h, u) in nf.bindings() {
        for q in u.occurrences(&secret) {
            match f_e(u, &q) {
                None => out.push(format!("{h}: no encryption above {s} at {q} in {u}")),
                Some(v) => {
                    if !ciphers.iter().any(|e| matches_instance(&e.term, &v)) {
                        out.push(format!("{h}: {} is not an instance of a marked cipher", v.pretty()));
                    }
                }
            }
        }
    }
    out
}

/// Replays the tests of a trace with `s` replaced by `m`; returns the tests
/// whose outcome changes.
pub fn test_divergences(sf: &StandardFrame, s: &str, m: &Term) -> Vec<String> {
    sf.tests()
        .filter_map(|(l, r, holds)| {
            let now = normalize(&l.instantiate_name(s, m)) == normalize(&r.instantiate_name(s, m));
            (now != holds).then(|| format!("[{l} = {r}] {holds} becomes {now} under {s} := {m}"))
        })
        .collect()
}
