//! Intruder deduction: saturation of the frame's knowledge under destructor
//! steps, followed by top-down synthesis of the target.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::frame::Frame;
use crate::rewrite::{normalize, root_step};
use crate::term::{Ident, Symbol, Term};

/// Deducible normal forms with one recipe each.
///
/// Closed under: projections of pairs, `dec` of `enc` with a deducible key,
/// `deca` of `enca` with a deducible private key, and `retrieve` of `sign`.
#[derive(Debug, Clone)]
pub struct KnowledgeSet {
    restricted: BTreeSet<Ident>,
    entries: Vec<(Term, Term)>,
    index: HashMap<Term, usize>,
}

impl KnowledgeSet {
    /// `(normal form, recipe)` pairs in insertion order; frame bindings first.
    pub fn entries(&self) -> &[(Term, Term)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn recipe_of(&self, t: &Term) -> Option<&Term> {
        self.index.get(t).map(|&i| &self.entries[i].1)
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.index.contains_key(t)
    }

    fn add(&mut self, t: Term, recipe: Term) -> bool {
        if self.index.contains_key(&t) {
            return false;
        }
        self.index.insert(t.clone(), self.entries.len());
        self.entries.push((t, recipe));
        true
    }

    /// A recipe for the normal-form term `t`: an entry, a non-restricted
    /// name, or any non-`priv` symbol applied to synthesizable arguments.
    pub fn synthesize(&self, t: &Term) -> Option<Term> {
        if let Some(r) = self.recipe_of(t) {
            return Some(r.clone());
        }
        if let Some(n) = t.as_name() {
            return if self.restricted.contains(n) { None } else { Some(t.clone()) };
        }
        let f = t.symbol()?;
        if f == Symbol::Priv {
            return None;
        }
        let args = t.args().iter().map(|a| self.synthesize(a)).collect::<Option<Vec<_>>>()?;
        Some(Term::app(f, args))
    }
}

/// Saturates the knowledge of `frame`.
pub fn saturate(frame: &Frame) -> KnowledgeSet {
    let mut ks = KnowledgeSet { restricted: frame.restricted().clone(), entries: Vec::new(), index: HashMap::new() };
    for (h, t) in frame.bindings() {
        ks.add(normalize(t), Term::var_ident(h.clone()));
    }
    // Keys may become deducible only after later entries are added, so the
    // whole set is rescanned until nothing changes.
    let mut done: HashSet<usize> = HashSet::new();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < ks.entries.len() {
            if done.contains(&i) {
                i += 1;
                continue;
            }
            let (t, r) = ks.entries[i].clone();
            let finished = match t.symbol() {
                Some(Symbol::Pair) => {
                    changed |= ks.add(t.arg(0).clone(), Term::proj1(r.clone()));
                    changed |= ks.add(t.arg(1).clone(), Term::proj2(r));
                    true
                }
                Some(Symbol::Sign) => {
                    changed |= ks.add(t.arg(0).clone(), Term::app(Symbol::Retrieve, vec![r]));
                    true
                }
                Some(Symbol::Enc) => match ks.synthesize(t.arg(1)) {
                    Some(rk) => {
                        changed |= ks.add(t.arg(0).clone(), Term::dec(r, rk));
                        true
                    }
                    None => false,
                },
                Some(Symbol::Enca) => {
                    let key = t.arg(1);
                    if key.symbol() == Some(Symbol::Pub) {
                        let private = Term::app(Symbol::Priv, vec![key.arg(0).clone()]);
                        match ks.recipe_of(&private).cloned() {
                            Some(rk) => {
                                changed |= ks.add(t.arg(0).clone(), Term::app(Symbol::Deca, vec![r, rk]));
                                true
                            }
                            None => false,
                        }
                    } else {
                        true
                    }
                }
                _ => true,
            };
            if finished {
                done.insert(i);
            }
            i += 1;
        }
        if !changed {
            return ks;
        }
    }
}

/// A recipe `T` with `Tσ =_E m`, or `None` when `φ ⊬ m`.
pub fn deduce(frame: &Frame, m: &Term) -> Option<Term> {
    saturate(frame).synthesize(&normalize(m))
}

/// Brute-force deduction oracle: enumerates recipes by increasing size up
/// to `max_size`, over the frame handles and the free names occurring in the
/// frame or the target, keeping one recipe per value. Only values that are
/// subterms of the normalized frame terms or of the target are kept, which
/// keeps the search small; [`brute_deduce_unpruned`] drops that restriction.
pub fn brute_deduce(frame: &Frame, m: &Term, max_size: usize) -> Option<Term> {
    brute_search(frame, m, Some(max_size), true)
}

/// Pruned enumeration without a size bound, run until no recipe size can
/// yield a new value. Returns a recipe of minimal size.
pub fn brute_deduce_closure(frame: &Frame, m: &Term) -> Option<Term> {
    brute_search(frame, m, None, true)
}

/// As [`brute_deduce`] without the subterm restriction on intermediate values.
pub fn brute_deduce_unpruned(frame: &Frame, m: &Term, max_size: usize) -> Option<Term> {
    brute_search(frame, m, Some(max_size), false)
}

fn brute_search(frame: &Frame, m: &Term, limit: Option<usize>, prune: bool) -> Option<Term> {
    let target = normalize(m);
    let sigma = frame.substitution();
    let mut allowed: HashSet<Term> = HashSet::new();
    for t in frame.terms() {
        for u in normalize(t).subterms() {
            allowed.insert(u.clone());
        }
    }
    for u in target.subterms() {
        allowed.insert(u.clone());
    }
    let keep = |v: &Term| !prune || allowed.contains(v);

    let mut leaves: Vec<Term> = frame.handles().map(|h| Term::var_ident(h.clone())).collect();
    let mut names: BTreeSet<Ident> = frame.free_names();
    names.extend(target.free_names().into_iter().filter(|n| !frame.is_restricted(n)));
    names.insert(Ident::from(crate::term::OK));
    leaves.extend(names.into_iter().map(Term::name_ident));

    let mut seen: HashMap<Term, Term> = HashMap::new();
    let mut by_size: Vec<Vec<(Term, Term)>> = vec![Vec::new(); 2];
    for leaf in leaves {
        let v = normalize(&leaf.apply(&sigma));
        if keep(&v) && !seen.contains_key(&v) {
            seen.insert(v.clone(), leaf.clone());
            if limit != Some(0) {
                by_size[1].push((v, leaf));
            }
        }
    }
    if let Some(r) = seen.get(&target) {
        return Some(r.clone());
    }
    let symbols: Vec<Symbol> = Symbol::ALL.iter().copied().filter(|f| *f != Symbol::Priv).collect();
    let mut largest = 1;
    for size in 2.. {
        match limit {
            Some(l) if size > l => break,
            // one recipe is kept per value, so arguments never exceed the
            // largest stored size
            None if size > 3 * largest + 1 => break,
            _ => {}
        }
        let mut fresh: Vec<(Term, Term)> = Vec::new();
        for &f in &symbols {
            for split in compositions(size - 1, f.arity()) {
                let mut idx = vec![0usize; split.len()];
                if split.iter().any(|&s| by_size.get(s).is_none_or(|b| b.is_empty())) {
                    continue;
                }
                loop {
                    let vals: Vec<Term> = split.iter().zip(&idx).map(|(&s, &i)| by_size[s][i].0.clone()).collect();
                    let app = Term::app(f, vals);
                    let v = match root_step(&app) {
                        Some((v, _)) => v,
                        None => app,
                    };
                    if keep(&v) && !seen.contains_key(&v) {
                        let recs: Vec<Term> = split.iter().zip(&idx).map(|(&s, &i)| by_size[s][i].1.clone()).collect();
                        let r = Term::app(f, recs);
                        seen.insert(v.clone(), r.clone());
                        if v == target {
                            return Some(r);
                        }
                        fresh.push((v, r));
                    }
                    // odometer increment
                    let mut k = 0;
                    loop {
                        if k == idx.len() {
                            break;
                        }
                        idx[k] += 1;
                        if idx[k] < by_size[split[k]].len() {
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
        if !fresh.is_empty() {
            largest = size;
        }
        by_size.push(fresh);
    }
    None
}

/// Ordered ways of writing `total` as a sum of `parts` positive integers.
pub(crate) fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn frame(s: &str) -> Frame {
        Frame::parse(s).unwrap()
    }

    #[test]
    fn key_and_pair_of_keys_from_nested_cipher() {
        let f = frame("frame { restrict k, k', r; x -> enc(k,k',r); y -> k'; }");
        let ks = saturate(&f);
        assert_eq!(ks.recipe_of(&t("k")), Some(&f.parse_recipe("dec(x,y)").unwrap()));
        let r = deduce(&f, &t("pair(k,k)")).unwrap();
        assert_eq!(r, f.parse_recipe("pair(dec(x,y),dec(x,y))").unwrap());
        assert_eq!(f.apply(&r), t("<k,k>"));
        let r = deduce(&f, &t("<k,k'>")).unwrap();
        assert_eq!(f.apply(&r), t("<k,k'>"));
    }

    #[test]
    fn empty_frame_knows_only_public_terms() {
        let f = frame("frame { restrict s; }");
        let ks = saturate(&f);
        assert!(ks.is_empty());
        assert_eq!(deduce(&f, &t("n")), Some(t("n")));
        assert_eq!(deduce(&f, &t("s")), None);
        assert_eq!(deduce(&f, &t("enc(a,pub(b),c)")), Some(t("enc(a,pub(b),c)")));
        assert_eq!(deduce(&f, &t("priv(a)")), None);
    }

    #[test]
    fn undecryptable_cipher_hides_plaintext() {
        let f = frame("frame { restrict s, k, r; x -> enc(s,k,r); }");
        let ks = saturate(&f);
        assert!(!ks.contains(&t("s")));
        assert_eq!(deduce(&f, &t("s")), None);
        assert_eq!(brute_deduce_unpruned(&f, &t("s"), 4), None);
        assert_eq!(brute_deduce(&f, &t("s"), 6), None);
    }

    #[test]
    fn late_key_unlocks_earlier_cipher() {
        let f = frame("frame { restrict s, k, r, r2, k2; x -> enc(s,k,r); y -> enc(k,k2,r2); w -> k2; }");
        let r = deduce(&f, &t("s")).unwrap();
        assert_eq!(f.apply(&r), t("s"));
    }

    #[test]
    fn asymmetric_and_signature_rules() {
        let f = frame("frame { restrict s, r, a; x -> enca(s,pub(a),r); y -> priv(a); }");
        assert_eq!(f.apply(&deduce(&f, &t("s")).unwrap()), t("s"));
        let g = frame("frame { restrict s; x -> sign(s,priv(a)); y -> pub(a); }");
        assert_eq!(deduce(&g, &t("s")), Some(g.parse_recipe("retrieve(x)").unwrap()));
    }

    #[test]
    fn stuck_destructor_terms_are_synthesized() {
        let f = frame("frame { restrict k, r; x -> enc(m,k,r); }");
        let target = t("dec(enc(m,k,r),a)");
        let r = deduce(&f, &target).unwrap();
        assert_eq!(f.apply(&r), target);
    }

    #[test]
    fn oracle_agrees_on_small_examples() {
        let frames = [
            "frame { restrict k, k', r; x -> enc(k,k',r); y -> k'; }",
            "frame { restrict s, k, r; x -> enc(<s,a>,<k,b>,r); y -> k; }",
            "frame { restrict s, a; x -> sign(s,priv(a)); }",
            "frame { restrict s, n; x -> <n, pi1(s)>; }",
        ];
        let targets = ["k", "s", "<k,k>", "a", "pi1(s)", "b", "n"];
        for fs in frames {
            let f = frame(fs);
            for ts in targets {
                let m = t(ts);
                let fast = deduce(&f, &m).is_some();
                assert_eq!(fast, brute_deduce(&f, &m, 7).is_some(), "{fs} ⊢ {ts}");
                if brute_deduce_unpruned(&f, &m, 5).is_some() {
                    assert!(fast, "{fs} ⊢ {ts} unpruned");
                }
            }
        }
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 2).len(), 3);
        assert_eq!(compositions(2, 3).len(), 0);
        assert_eq!(compositions(0, 0), vec![Vec::<usize>::new()]);
    }
}
