//! Static equivalence of frames: a saturation-based decision procedure and a
//! depth-bounded exhaustive oracle.
//!
//! Both work on recipe classes: a recipe is mapped to the pair of its normal
//! forms in the two frames, and the frames are equivalent on a recipe set iff
//! "same value in the first frame" and "same value in the second frame"
//! induce the same partition of it.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::deduce::{saturate, KnowledgeSet};
use crate::frame::{Frame, FrameError};
use crate::rewrite::{normalize, root_step};
use crate::term::{Ident, Symbol, Term};

/// A test `(U = V)` holding in exactly one of the two frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "ser_display")]
    pub left: Term,
    #[serde(serialize_with = "ser_display")]
    pub right: Term,
    /// Whether the test holds in the first frame (and fails in the second).
    pub holds_in_first: bool,
}

fn ser_display<S: serde::Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub witness: Option<Witness>,
    /// Number of recipe classes examined.
    pub classes: usize,
}

impl EquivalenceVerdict {
    fn equivalent(classes: usize) -> Self {
        EquivalenceVerdict { equivalent: true, witness: None, classes }
    }

    fn distinguished(w: Witness, classes: usize) -> Self {
        EquivalenceVerdict { equivalent: false, witness: Some(w), classes }
    }
}

/// Recipe classes keyed by their pair of values, with conflict detection.
struct ClassTable {
    frames: [Frame; 2],
    sigmas: [crate::term::Substitution; 2],
    by_pair: HashMap<(Term, Term), usize>,
    by_value: [HashMap<Term, Vec<usize>>; 2],
    classes: Vec<(Term, [Term; 2])>,
}

impl ClassTable {
    fn new(f1: &Frame, f2: &Frame) -> ClassTable {
        let frames = [f1.alpha_renamed(), f2.alpha_renamed()];
        let sigmas = [frames[0].substitution(), frames[1].substitution()];
        ClassTable {
            frames,
            sigmas,
            by_pair: HashMap::new(),
            by_value: [HashMap::new(), HashMap::new()],
            classes: Vec::new(),
        }
    }

    fn eval(&self, recipe: &Term) -> [Term; 2] {
        [normalize(&recipe.apply(&self.sigmas[0])), normalize(&recipe.apply(&self.sigmas[1]))]
    }

    /// Adds a recipe, given its values. Returns a witness if the new class
    /// shares a value with an existing class in exactly one frame.
    fn insert_valued(&mut self, recipe: Term, vals: [Term; 2]) -> Result<Option<usize>, Witness> {
        let key = (vals[0].clone(), vals[1].clone());
        if self.by_pair.contains_key(&key) {
            return Ok(None);
        }
        for (i, val) in vals.iter().enumerate() {
            if let Some(&other) = self.by_value[i].get(val).and_then(|v| v.first()) {
                return Err(Witness { left: self.classes[other].0.clone(), right: recipe, holds_in_first: i == 0 });
            }
        }
        let id = self.classes.len();
        self.by_pair.insert(key, id);
        for (i, v) in vals.iter().enumerate() {
            self.by_value[i].entry(v.clone()).or_default().push(id);
        }
        self.classes.push((recipe, vals));
        Ok(Some(id))
    }

    fn insert(&mut self, recipe: Term) -> Result<Option<usize>, Witness> {
        let vals = self.eval(&recipe);
        self.insert_valued(recipe, vals)
    }

    /// Leaves: handles, free names of both frames and `ok`.
    fn leaves(&self, extra_fresh: bool) -> Vec<Term> {
        let mut out: Vec<Term> = self.frames[0].handles().map(|h| Term::var_ident(h.clone())).collect();
        let mut names: BTreeSet<Ident> = self.frames[0].free_names();
        names.extend(self.frames[1].free_names());
        names.insert(Ident::from(crate::term::OK));
        out.extend(names.into_iter().map(Term::name_ident));
        if extra_fresh {
            out.push(Term::name("#fresh"));
        }
        out
    }
}

/// Decides static equivalence of two frames with the same domain.
///
/// Candidate recipes: handles, free names, the saturated recipes of both
/// frames, then `layers` rounds of (a) rebuilding every known value from
/// synthesized arguments and (b) applying each destructor wherever it
/// reduces in one of the frames. The first class that collapses in one
/// frame but not the other yields the witness.
pub fn static_equiv(f1: &Frame, f2: &Frame, layers: usize) -> Result<EquivalenceVerdict, FrameError> {
    f1.check_same_domain(f2)?;
    let mut table = ClassTable::new(f1, f2);
    let ks = [saturate(&table.frames[0]), saturate(&table.frames[1])];
    match run_decision(&mut table, &ks, layers.max(1)) {
        Ok(()) => Ok(EquivalenceVerdict::equivalent(table.classes.len())),
        Err(w) => Ok(EquivalenceVerdict::distinguished(w, table.classes.len())),
    }
}

fn run_decision(table: &mut ClassTable, ks: &[KnowledgeSet; 2], layers: usize) -> Result<(), Witness> {
    for leaf in table.leaves(false) {
        table.insert(leaf)?;
    }
    // smallest recipes first, so witnesses come out as short as possible
    let mut saturated: Vec<Term> = ks.iter().flat_map(|k| k.entries().iter().map(|(_, r)| r.clone())).collect();
    saturated.sort_by_cached_key(|r| (r.size(), r.to_string()));
    for r in saturated {
        table.insert(r)?;
    }
    let mut processed = 0;
    for _ in 0..layers {
        let end = table.classes.len();
        if processed == end {
            break;
        }
        let mut fresh: Vec<Term> = Vec::new();
        for id in processed..end {
            let (recipe, vals) = table.classes[id].clone();
            for i in 0..2 {
                let k = &ks[i];
                let v = &vals[i];
                let Some(f) = v.symbol() else { continue };
                // rebuild the value from synthesized arguments
                if f != Symbol::Priv {
                    if let Some(args) = v.args().iter().map(|a| k.synthesize(a)).collect::<Option<Vec<_>>>() {
                        fresh.extend(args.iter().cloned());
                        fresh.push(Term::app(f, args));
                    }
                }
                // destructor applications that reduce in frame i
                match f {
                    Symbol::Pair => {
                        fresh.push(Term::proj1(recipe.clone()));
                        fresh.push(Term::proj2(recipe.clone()));
                    }
                    Symbol::Enc => {
                        if let Some(rk) = k.synthesize(v.arg(1)) {
                            fresh.push(Term::dec(recipe.clone(), rk));
                        }
                    }
                    Symbol::Enca => {
                        if v.arg(1).symbol() == Some(Symbol::Pub) {
                            let private = Term::app(Symbol::Priv, vec![v.arg(1).arg(0).clone()]);
                            if let Some(rk) = k.recipe_of(&private) {
                                fresh.push(Term::app(Symbol::Deca, vec![recipe.clone(), rk.clone()]));
                            }
                        }
                    }
                    Symbol::Sign => {
                        fresh.push(Term::app(Symbol::Retrieve, vec![recipe.clone()]));
                        let key = v.arg(1);
                        if key.symbol() == Some(Symbol::Priv) {
                            let public = Term::app(Symbol::Pub, vec![key.arg(0).clone()]);
                            if let (Some(rm), Some(rp)) = (k.synthesize(v.arg(0)), k.synthesize(&public)) {
                                fresh.push(Term::app(Symbol::Check, vec![rm, recipe.clone(), rp]));
                            }
                        }
                    }
                    // a known private key can sign, so the matching public
                    // key becomes testable through check
                    Symbol::Priv => {
                        let public = Term::app(Symbol::Pub, vec![v.arg(0).clone()]);
                        let sig = Term::app(Symbol::Sign, vec![Term::name(crate::term::OK), recipe.clone()]);
                        if let Some(rp) = k.synthesize(&public) {
                            fresh.push(Term::app(Symbol::Check, vec![Term::name(crate::term::OK), sig.clone(), rp]));
                        }
                        for (other, ovals) in &table.classes[..end] {
                            if ovals[i] == public {
                                fresh.push(Term::app(
                                    Symbol::Check,
                                    vec![Term::name(crate::term::OK), sig.clone(), other.clone()],
                                ));
                            }
                        }
                    }
                    Symbol::Pub => {
                        let private = Term::app(Symbol::Priv, vec![v.arg(0).clone()]);
                        for (other, ovals) in &table.classes[..end] {
                            if ovals[i] == private {
                                let sig = Term::app(Symbol::Sign, vec![Term::name(crate::term::OK), other.clone()]);
                                fresh.push(Term::app(
                                    Symbol::Check,
                                    vec![Term::name(crate::term::OK), sig, recipe.clone()],
                                ));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        processed = end;
        for r in fresh {
            table.insert(r)?;
        }
    }
    Ok(())
}

/// Exhaustive oracle: all public tests whose two sides have depth at most
/// `depth` (a leaf has depth 1), over the handles, the free names of both
/// frames, `ok` and one fresh name.
///
/// Layers below `depth` are enumerated in full (one recipe per value pair).
/// The top layer only needs the terms that reduce at the root in some frame
/// and the terms whose value in some frame equals an already known value:
/// any other top-layer term has a fresh head in both frames, so it can only
/// collide with a term of the same shape, and that collision already shows
/// up between their arguments one layer down.
pub fn brute_equiv(f1: &Frame, f2: &Frame, depth: usize) -> Result<EquivalenceVerdict, FrameError> {
    brute(f1, f2, depth, false)
}

/// As [`brute_equiv`] but enumerating the top layer in full as well; only
/// practical for depth 2 or tiny frames.
pub fn brute_equiv_exhaustive(f1: &Frame, f2: &Frame, depth: usize) -> Result<EquivalenceVerdict, FrameError> {
    brute(f1, f2, depth, true)
}

fn brute(f1: &Frame, f2: &Frame, depth: usize, full_top: bool) -> Result<EquivalenceVerdict, FrameError> {
    f1.check_same_domain(f2)?;
    let mut table = ClassTable::new(f1, f2);
    match run_brute(&mut table, depth, full_top) {
        Ok(()) => Ok(EquivalenceVerdict::equivalent(table.classes.len())),
        Err(w) => Ok(EquivalenceVerdict::distinguished(w, table.classes.len())),
    }
}

fn apply_values(f: Symbol, args: &[&[Term; 2]]) -> [Term; 2] {
    let mk = |i: usize| {
        let t = Term::app(f, args.iter().map(|a| a[i].clone()).collect());
        match root_step(&t) {
            Some((v, _)) => v,
            None => t,
        }
    };
    [mk(0), mk(1)]
}

fn run_brute(table: &mut ClassTable, depth: usize, full_top: bool) -> Result<(), Witness> {
    if depth == 0 {
        return Ok(());
    }
    for leaf in table.leaves(true) {
        table.insert(leaf)?;
    }
    // layer_start[d] = first class index of depth d+1
    let mut layer_start = vec![0usize, table.classes.len()];
    let symbols: Vec<Symbol> = Symbol::ALL.iter().copied().filter(|f| *f != Symbol::Priv).collect();
    for d in 2..=depth {
        let below = table.classes.len();
        let prev_start = layer_start[d - 2];
        if d < depth || full_top {
            for &f in &symbols {
                let n = f.arity();
                let mut idx = vec![0usize; n];
                loop {
                    // at least one argument from the previous layer
                    if idx.iter().any(|&i| i >= prev_start) {
                        let recipe = Term::app(f, idx.iter().map(|&i| table.classes[i].0.clone()).collect());
                        let vals = {
                            let args: Vec<&[Term; 2]> = idx.iter().map(|&i| &table.classes[i].1).collect();
                            apply_values(f, &args)
                        };
                        table.insert_valued(recipe, vals)?;
                    }
                    let mut k = 0;
                    while k < n {
                        idx[k] += 1;
                        if idx[k] < below {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == n {
                        break;
                    }
                }
            }
        } else {
            top_layer(table, below)?;
        }
        layer_start.push(table.classes.len());
    }
    Ok(())
}

/// Index-driven generation of the top layer over classes `0..below`.
fn top_layer(table: &mut ClassTable, below: usize) -> Result<(), Witness> {
    let lookup = |table: &ClassTable, i: usize, v: &Term| -> Vec<usize> {
        table.by_value[i].get(v).map(|ids| ids.iter().copied().filter(|&c| c < below).collect()).unwrap_or_default()
    };
    // (a) terms reducing at the root in frame i
    let mut reducing: Vec<(Symbol, Vec<usize>)> = Vec::new();
    for c in 0..below {
        for i in 0..2 {
            let v = table.classes[c].1[i].clone();
            match v.symbol() {
                Some(Symbol::Pair) => {
                    reducing.push((Symbol::Proj1, vec![c]));
                    reducing.push((Symbol::Proj2, vec![c]));
                }
                Some(Symbol::Enc) => {
                    for k in lookup(table, i, v.arg(1)) {
                        reducing.push((Symbol::Dec, vec![c, k]));
                    }
                }
                Some(Symbol::Enca) if v.arg(1).symbol() == Some(Symbol::Pub) => {
                    let private = Term::app(Symbol::Priv, vec![v.arg(1).arg(0).clone()]);
                    for k in lookup(table, i, &private) {
                        reducing.push((Symbol::Deca, vec![c, k]));
                    }
                }
                Some(Symbol::Sign) => {
                    reducing.push((Symbol::Retrieve, vec![c]));
                    if v.arg(1).symbol() == Some(Symbol::Priv) {
                        let public = Term::app(Symbol::Pub, vec![v.arg(1).arg(0).clone()]);
                        let ms = lookup(table, i, v.arg(0));
                        let ps = lookup(table, i, &public);
                        for &m in &ms {
                            for &p in &ps {
                                reducing.push((Symbol::Check, vec![m, c, p]));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
    for (f, args) in reducing {
        let recipe = Term::app(f, args.iter().map(|&i| table.classes[i].0.clone()).collect());
        let vals = {
            let a: Vec<&[Term; 2]> = args.iter().map(|&i| &table.classes[i].1).collect();
            apply_values(f, &a)
        };
        table.insert_valued(recipe, vals)?;
    }
    // (b) terms whose value in frame i equals a known value
    let known = table.classes.len();
    for c in 0..known {
        for i in 0..2 {
            let v = table.classes[c].1[i].clone();
            let Some(f) = v.symbol() else { continue };
            if f == Symbol::Priv {
                continue;
            }
            let choices: Vec<Vec<usize>> = v.args().iter().map(|a| lookup(table, i, a)).collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; choices.len()];
            loop {
                let args: Vec<usize> = idx.iter().zip(&choices).map(|(&j, ch)| ch[j]).collect();
                let recipe = Term::app(f, args.iter().map(|&a| table.classes[a].0.clone()).collect());
                let vals = {
                    let a: Vec<&[Term; 2]> = args.iter().map(|&a| &table.classes[a].1).collect();
                    apply_values(f, &a)
                };
                table.insert_valued(recipe, vals)?;
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn frame(s: &str) -> Frame {
        Frame::parse(s).unwrap()
    }

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn assert_witness_valid(f1: &Frame, f2: &Frame, v: &EquivalenceVerdict) {
        let w = v.witness.as_ref().expect("witness");
        let p1 = f1.passes_test(&w.left, &w.right);
        let p2 = f2.passes_test(&w.left, &w.right);
        assert_ne!(p1, p2, "witness {} = {} must separate the frames", w.left, w.right);
        assert_eq!(p1, w.holds_in_first);
    }

    #[test]
    fn nonce_order_is_observable() {
        let f1 = frame("frame { restrict k, n1, n2, r1; x -> enc(n1,k,r1); y -> <n1,n2>; z -> k; }");
        let f2 = frame("frame { restrict k, n1, n2, r1; x -> enc(n2,k,r2); y -> <n1,n2>; z -> k; }");
        let v = static_equiv(&f1, &f2, 2).unwrap();
        assert!(!v.equivalent);
        assert_witness_valid(&f1, &f2, &v);
        let w = v.witness.unwrap();
        let pair: BTreeSet<Term> = [w.left, w.right].into_iter().collect();
        assert_eq!(pair.len(), 2);
        assert!(pair.contains(&f1.parse_recipe("dec(x,z)").unwrap()));
        assert!(pair.contains(&f1.parse_recipe("pi1(y)").unwrap()));
        let b = brute_equiv(&f1, &f2, 2).unwrap();
        assert!(!b.equivalent);
        assert_witness_valid(&f1, &f2, &b);
    }

    #[test]
    fn reflexive() {
        let f = frame("frame { restrict k, n, r; x -> enc(n,k,r); y -> <n,a>; }");
        assert!(static_equiv(&f, &f, 2).unwrap().equivalent);
        assert!(brute_equiv(&f, &f, 3).unwrap().equivalent);
    }

    #[test]
    fn domain_mismatch() {
        let f = frame("frame { x -> a; }");
        let g = frame("frame { y -> a; }");
        assert!(matches!(static_equiv(&f, &g, 1), Err(FrameError::DomainMismatch(..))));
    }

    #[test]
    fn restricted_names_are_indistinguishable() {
        let f = frame("frame { restrict n; x -> n; }");
        let g = frame("frame { restrict m; x -> m; }");
        assert!(static_equiv(&f, &g, 2).unwrap().equivalent);
        assert!(brute_equiv(&f, &g, 3).unwrap().equivalent);
        let h = frame("frame { x -> n; }");
        let v = static_equiv(&f, &h, 2).unwrap();
        assert!(!v.equivalent);
        assert_witness_valid(&f, &h, &v);
    }

    #[test]
    fn signature_check_distinguishes() {
        let f = frame("frame { restrict s; x -> sign(n,priv(a)); y -> pub(a); }");
        let g = frame("frame { restrict s; x -> sign(n',priv(a)); y -> pub(a); }");
        let v = static_equiv(&f, &g, 2).unwrap();
        assert!(!v.equivalent);
        assert_witness_valid(&f, &g, &v);
        assert!(f.passes_test(&f.parse_recipe("check(n,x,y)").unwrap(), &t("ok")));
        assert!(!g.passes_test(&g.parse_recipe("check(n,x,y)").unwrap(), &t("ok")));
    }

    #[test]
    fn index_driven_top_layer_matches_full_enumeration() {
        let frames = [
            ("frame { restrict k, r; x -> enc(a,k,r); y -> k; }", "frame { restrict k, r; x -> enc(b,k,r); y -> k; }"),
            ("frame { restrict k, r; x -> enc(a,k,r); }", "frame { restrict k, r; x -> enc(b,k,r); }"),
            ("frame { restrict s; x -> <s,a>; }", "frame { restrict s; x -> <a,s>; }"),
            (
                "frame { restrict s; x -> sign(a,priv(s)); y -> pub(s); }",
                "frame { restrict s; x -> sign(b,priv(s)); y -> pub(s); }",
            ),
            ("frame { x -> pi1(s); }", "frame { x -> s; }"),
        ];
        for (a, b) in frames {
            let (f, g) = (frame(a), frame(b));
            let fast = brute_equiv(&f, &g, 2).unwrap();
            let full = brute_equiv_exhaustive(&f, &g, 2).unwrap();
            assert_eq!(fast.equivalent, full.equivalent, "{a} / {b}");
            assert_eq!(fast.equivalent, static_equiv(&f, &g, 2).unwrap().equivalent, "{a} / {b}");
            if !fast.equivalent {
                assert_witness_valid(&f, &g, &fast);
                assert_witness_valid(&f, &g, &full);
            }
        }
    }
}
