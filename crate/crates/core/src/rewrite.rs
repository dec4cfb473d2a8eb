//! The convergent rewrite system for the equational theory, normalization and
//! position tracking across rewriting.
//!
//! Rules (left to right):
//!
//! ```text
//! pi1(<z1,z2>)                         -> z1
//! pi2(<z1,z2>)                         -> z2
//! dec(enc(z1,z2,z3),z2)                -> z1
//! deca(enca(z1,pub(z2),z3),priv(z2))   -> z1
//! check(z1,sign(z1,priv(z2)),pub(z2))  -> ok
//! retrieve(sign(z1,z2))                -> z1
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::parse_term;
use crate::term::{Position, Substitution, Symbol, Term};

/// Errors from the position-tracking functions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("no rule applies at position {0}")]
    NotARedex(String),
    #[error("invalid position {0}")]
    InvalidPosition(String),
}

/// Identifies one of the six rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleId {
    Proj1,
    Proj2,
    Dec,
    Deca,
    Check,
    Retrieve,
}

impl RuleId {
    pub const ALL: [RuleId; 6] =
        [RuleId::Proj1, RuleId::Proj2, RuleId::Dec, RuleId::Deca, RuleId::Check, RuleId::Retrieve];

    pub fn rule(self) -> &'static RewriteRule {
        &rules()[self as usize]
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rule();
        write!(f, "{} -> {}", r.lhs, r.rhs)
    }
}

/// An oriented equation `lhs -> rhs`.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub id: RuleId,
    pub lhs: Term,
    pub rhs: Term,
    /// Position of the right-hand-side variable inside the left-hand side;
    /// absent when the right-hand side is the constant `ok`.
    pub rhs_position: Option<Position>,
}

/// The six rules, in a fixed order.
pub fn rules() -> &'static [RewriteRule] {
    static RULES: OnceLock<Vec<RewriteRule>> = OnceLock::new();
    RULES.get_or_init(|| {
        let mk = |id, lhs: &str, rhs: &str| {
            let lhs = parse_term(lhs).expect("rule lhs");
            let rhs = parse_term(rhs).expect("rule rhs");
            let rhs_position = if rhs.is_var() {
                let occ = lhs.occurrences(&rhs);
                assert_eq!(occ.len(), 1, "rhs variable occurs exactly once in lhs");
                Some(occ[0].clone())
            } else {
                None
            };
            RewriteRule { id, lhs, rhs, rhs_position }
        };
        vec![
            mk(RuleId::Proj1, "pi1(<z1,z2>)", "z1"),
            mk(RuleId::Proj2, "pi2(<z1,z2>)", "z2"),
            mk(RuleId::Dec, "dec(enc(z1,z2,z3),z2)", "z1"),
            mk(RuleId::Deca, "deca(enca(z1,pub(z2),z3),priv(z2))", "z1"),
            mk(RuleId::Check, "check(z1,sign(z1,priv(z2)),pub(z2))", "ok"),
            mk(RuleId::Retrieve, "retrieve(sign(z1,z2))", "z1"),
        ]
    })
}

/// One rewriting step `U|_p = Lθ`, `V = U[Rθ]_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionStep {
    pub redex_position: Position,
    pub rule: RuleId,
    #[serde(serialize_with = "serialize_subst")]
    pub matcher: Substitution,
}

fn serialize_subst<S: serde::Serializer>(sigma: &Substitution, s: S) -> Result<S::Ok, S::Error> {
    let m: BTreeMap<String, String> = sigma.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    m.serialize(s)
}

/// Syntactic first-order matching of `pattern` against `t`.
pub fn match_term(pattern: &Term, t: &Term, theta: &mut Substitution) -> bool {
    if let Some(v) = pattern.as_var() {
        return match theta.get(v) {
            Some(bound) => bound == t,
            None => {
                theta.insert(v.clone(), t.clone());
                true
            }
        };
    }
    match (pattern.symbol(), t.symbol()) {
        (Some(f), Some(g)) if f == g => pattern.args().iter().zip(t.args()).all(|(p, a)| match_term(p, a, theta)),
        (None, None) => pattern == t,
        _ => false,
    }
}

/// Rewrites at the root if some rule applies, returning the contractum.
/// Hand-specialized matching; agrees with [`match_term`] against the rule table.
pub fn root_step(t: &Term) -> Option<(Term, RuleId)> {
    let f = t.symbol()?;
    let a = t.args();
    match f {
        Symbol::Proj1 | Symbol::Proj2 => {
            if a[0].symbol() == Some(Symbol::Pair) {
                let i = if f == Symbol::Proj1 { 0 } else { 1 };
                let id = if f == Symbol::Proj1 { RuleId::Proj1 } else { RuleId::Proj2 };
                return Some((a[0].arg(i).clone(), id));
            }
            None
        }
        Symbol::Dec => {
            if a[0].symbol() == Some(Symbol::Enc) && a[0].arg(1) == &a[1] {
                return Some((a[0].arg(0).clone(), RuleId::Dec));
            }
            None
        }
        Symbol::Deca => {
            let c = &a[0];
            if c.symbol() == Some(Symbol::Enca)
                && c.arg(1).symbol() == Some(Symbol::Pub)
                && a[1].symbol() == Some(Symbol::Priv)
                && c.arg(1).arg(0) == a[1].arg(0)
            {
                return Some((c.arg(0).clone(), RuleId::Deca));
            }
            None
        }
        Symbol::Check => {
            let sig = &a[1];
            if sig.symbol() == Some(Symbol::Sign)
                && sig.arg(1).symbol() == Some(Symbol::Priv)
                && a[2].symbol() == Some(Symbol::Pub)
                && sig.arg(0) == &a[0]
                && sig.arg(1).arg(0) == a[2].arg(0)
            {
                return Some((Term::ok(), RuleId::Check));
            }
            None
        }
        Symbol::Retrieve => {
            if a[0].symbol() == Some(Symbol::Sign) {
                return Some((a[0].arg(0).clone(), RuleId::Retrieve));
            }
            None
        }
        _ => None,
    }
}

/// Normal form. Children are normalized first; a root contraction yields a
/// subterm of normalized arguments (or `ok`), which is already normal.
pub fn normalize(t: &Term) -> Term {
    let args = t.args();
    if args.is_empty() {
        return t.clone();
    }
    let mut changed = false;
    let new_args: Vec<Term> = args
        .iter()
        .map(|a| {
            let b = normalize(a);
            if !b.ptr_eq(a) {
                changed = true;
            }
            b
        })
        .collect();
    let u = if changed { Term::app(t.symbol().unwrap(), new_args) } else { t.clone() };
    match root_step(&u) {
        Some((v, _)) => v,
        None => u,
    }
}

pub fn is_normal(t: &Term) -> bool {
    root_step(t).is_none() && t.args().iter().all(is_normal)
}

/// Equality modulo the equational theory.
pub fn equal_mod_e(u: &Term, v: &Term) -> bool {
    u == v || normalize(u) == normalize(v)
}

/// All redex positions, in pre-order.
pub fn redex_positions(t: &Term) -> Vec<Position> {
    t.positions().into_iter().filter(|p| root_step(t.subterm_at(p).unwrap()).is_some()).collect()
}

/// Contracts the redex at `p`, with step metadata.
pub fn step_at(t: &Term, p: &Position) -> Result<(Term, ReductionStep), RewriteError> {
    let sub = t.subterm_at(p).map_err(|_| RewriteError::InvalidPosition(p.to_string()))?;
    let (contractum, id) = root_step(sub).ok_or_else(|| RewriteError::NotARedex(p.to_string()))?;
    let mut matcher = Substitution::new();
    let matched = match_term(&id.rule().lhs, sub, &mut matcher);
    debug_assert!(matched);
    let v = t.replace_at(p, contractum).expect("valid position");
    Ok((v, ReductionStep { redex_position: p.clone(), rule: id, matcher }))
}

/// Leftmost-innermost redex: the first redex met in a post-order traversal.
pub fn leftmost_innermost_redex(t: &Term) -> Option<Position> {
    fn go(t: &Term, cur: &mut Vec<u32>) -> Option<Position> {
        for (i, a) in t.args().iter().enumerate() {
            cur.push(i as u32 + 1);
            if let Some(p) = go(a, cur) {
                return Some(p);
            }
            cur.pop();
        }
        if root_step(t).is_some() {
            Some(Position::new(cur.clone()))
        } else {
            None
        }
    }
    go(t, &mut Vec::new())
}

/// Rightmost-innermost redex: children visited right to left.
pub fn rightmost_innermost_redex(t: &Term) -> Option<Position> {
    fn go(t: &Term, cur: &mut Vec<u32>) -> Option<Position> {
        for (i, a) in t.args().iter().enumerate().rev() {
            cur.push(i as u32 + 1);
            if let Some(p) = go(a, cur) {
                return Some(p);
            }
            cur.pop();
        }
        if root_step(t).is_some() {
            Some(Position::new(cur.clone()))
        } else {
            None
        }
    }
    go(t, &mut Vec::new())
}

/// One leftmost-innermost step, or `None` if `t` is in normal form.
pub fn reduce_once(t: &Term) -> Option<(Term, ReductionStep)> {
    let p = leftmost_innermost_redex(t)?;
    Some(step_at(t, &p).expect("redex position"))
}

/// The leftmost-innermost reduction sequence to the normal form.
pub fn normalize_trace(t: &Term) -> (Term, Vec<ReductionStep>) {
    let mut cur = t.clone();
    let mut steps = Vec::new();
    while let Some((next, step)) = reduce_once(&cur) {
        steps.push(step);
        cur = next;
    }
    (cur, steps)
}

/// Normalizes by repeatedly contracting the redex picked by `choose` among
/// all current redex positions (given in pre-order).
pub fn normalize_with(t: &Term, choose: &mut dyn FnMut(&[Position]) -> usize) -> (Term, Vec<ReductionStep>) {
    let mut cur = t.clone();
    let mut steps = Vec::new();
    loop {
        let redexes = redex_positions(&cur);
        if redexes.is_empty() {
            return (cur, steps);
        }
        let i = choose(&redexes).min(redexes.len() - 1);
        let (next, step) = step_at(&cur, &redexes[i]).expect("redex");
        steps.push(step);
        cur = next;
    }
}

/// Position of `p` after one rewriting step at `q`; `None` when the
/// occurrence is consumed.
pub fn par1(u: &Term, p: &Position, q: &Position) -> Result<Option<Position>, RewriteError> {
    let sub = u.subterm_at(q).map_err(|_| RewriteError::InvalidPosition(q.to_string()))?;
    let (_, id) = root_step(sub).ok_or_else(|| RewriteError::NotARedex(q.to_string()))?;
    Ok(par1_rule(p, q, id))
}

fn par1_rule(p: &Position, q: &Position, id: RuleId) -> Option<Position> {
    if !q.is_prefix_of(p) {
        return Some(p.clone());
    }
    let qr = q.concat(id.rule().rhs_position.as_ref()?);
    let rest = p.minus(&qr)?;
    Some(q.concat(&rest))
}

/// Follows `p` along a recorded reduction sequence.
pub fn par_along(p: &Position, steps: &[ReductionStep]) -> Option<Position> {
    let mut cur = p.clone();
    for s in steps {
        cur = par1_rule(&cur, &s.redex_position, s.rule)?;
    }
    Some(cur)
}

/// Position of `p` in the normal form of `u` (leftmost-innermost trace).
pub fn par(u: &Term, p: &Position) -> Option<Position> {
    let (_, steps) = normalize_trace(u);
    par_along(p, &steps)
}

/// The unique `p'` with `par(u, p') = p`, if any.
pub fn par_inv(u: &Term, p: &Position) -> Option<Position> {
    let (_, steps) = normalize_trace(u);
    u.positions().into_iter().find(|q| par_along(q, &steps).as_ref() == Some(p))
}

/// `par` for every position of `u`, computed from one trace.
pub fn par_table(u: &Term) -> Vec<(Position, Option<Position>)> {
    let (_, steps) = normalize_trace(u);
    u.positions()
        .into_iter()
        .map(|q| {
            let r = par_along(&q, &steps);
            (q, r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn p(s: &str) -> Position {
        Position::parse(s).unwrap()
    }

    #[test]
    fn six_rules_with_rhs_positions() {
        let rs = rules();
        assert_eq!(rs.len(), 6);
        let qr: Vec<Option<String>> = rs.iter().map(|r| r.rhs_position.as_ref().map(|q| q.ascii())).collect();
        assert_eq!(
            qr,
            vec![
                Some("1.1".into()),
                Some("1.2".into()),
                Some("1.1".into()),
                Some("1.1".into()),
                None,
                Some("1.1".into())
            ]
        );
    }

    #[test]
    fn specialized_matcher_agrees_with_rule_table() {
        let samples = [
            "pi1(<a,b>)",
            "pi2(<a,b>)",
            "dec(enc(m,k,r),k)",
            "dec(enc(m,k,r),k2)",
            "deca(enca(m,pub(a),r),priv(a))",
            "deca(enca(m,pub(a),r),priv(b))",
            "check(m,sign(m,priv(a)),pub(a))",
            "check(m,sign(n,priv(a)),pub(a))",
            "check(m,sign(m,a),pub(a))",
            "retrieve(sign(m,k))",
            "retrieve(m)",
            "pi1(m)",
        ];
        for s in samples {
            let term = t(s);
            let table = rules().iter().find(|r| match_term(&r.lhs, &term, &mut Substitution::new()));
            let fast = root_step(&term).map(|(_, id)| id);
            assert_eq!(table.map(|r| r.id), fast, "{s}");
        }
    }

    #[test]
    fn equations_normalize() {
        assert_eq!(normalize(&t("dec(enc(m,k,r),k)")), t("m"));
        assert_eq!(normalize(&t("check(m, sign(m,priv(a)), pub(a))")), t("ok"));
        assert_eq!(normalize(&t("pi1(pair(pi2(pair(a,b)), c))")), t("b"));
        assert_eq!(normalize(&t("retrieve(sign(m,k))")), t("m"));
        let stuck = t("dec(enc(m,k,r), k')");
        assert_eq!(normalize(&stuck), stuck);
        assert!(reduce_once(&t("pair(a,b)")).is_none());
        assert!(equal_mod_e(&t("deca(enca(m,pub(a),r),priv(a))"), &t("m")));
        assert!(!equal_mod_e(&t("a"), &t("b")));
    }

    #[test]
    fn reduce_once_reports_step() {
        let (v, step) = reduce_once(&t("dec(enc(m,k,r),k)")).unwrap();
        assert_eq!(v, t("m"));
        assert_eq!(step.redex_position, Position::root());
        assert_eq!(step.rule, RuleId::Dec);
        assert_eq!(step.matcher.get("z1"), Some(&t("m")));
        let (_, step) = reduce_once(&t("pi1(<pi2(<a,b>),c>)")).unwrap();
        assert_eq!(step.redex_position, p("1.1"));
    }

    #[test]
    fn par1_cases() {
        let u = t("dec(enc(m,k,r),k)");
        assert_eq!(par1(&u, &p("1.1"), &Position::root()).unwrap(), Some(Position::root()));
        assert_eq!(par1(&u, &p("1.2"), &Position::root()).unwrap(), None);
        assert_eq!(par1(&u, &p("2"), &Position::root()).unwrap(), None);
        let w = t("pair(dec(enc(m,k,r),k), c)");
        assert_eq!(par1(&w, &p("2"), &p("1")).unwrap(), Some(p("2")));
        assert!(matches!(par1(&w, &p("2"), &Position::root()), Err(RewriteError::NotARedex(_))));
        let c = t("check(m,sign(m,priv(a)),pub(a))");
        assert_eq!(par1(&c, &p("1"), &Position::root()).unwrap(), None);
    }

    #[test]
    fn par_and_inverse() {
        let u = t("dec(enc(pair(a,s),k,r),k)");
        assert_eq!(par(&u, &p("1.1.2")), Some(p("2")));
        assert_eq!(par_inv(&u, &p("2")), Some(p("1.1.2")));
        let nf = t("pair(a,b)");
        assert_eq!(par(&nf, &p("2")), Some(p("2")));
        assert_eq!(par_inv(&t("check(m,sign(m,priv(a)),pub(a))"), &Position::root()), None);
    }
}
