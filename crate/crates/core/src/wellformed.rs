//! Well-formedness of frames with respect to a secret name, in the basic
//! form (probabilistic agent encryption, secret never in key position, no
//! destructors) and the extended form used for frames produced by
//! processes.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::frame::Frame;
use crate::rewrite::is_normal;
use crate::term::{Ident, Position, Symbol, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameDefinition {
    WellFormed,
    ExtendedWellFormed,
}

impl fmt::Display for FrameDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameDefinition::WellFormed => write!(f, "well-formed"),
            FrameDefinition::ExtendedWellFormed => write!(f, "extended well-formed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: u8,
    pub handle: String,
    #[serde(serialize_with = "ser_pos")]
    pub position: Position,
    pub explanation: String,
}

fn ser_pos<S: serde::Serializer>(p: &Position, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {} at {}@{}: {}", self.condition, self.handle, self.position, self.explanation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameReport {
    pub definition: FrameDefinition,
    pub secret: String,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl FrameReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failed_conditions(&self) -> BTreeSet<u8> {
        self.violations.iter().map(|v| v.condition).collect()
    }
}

/// Whether the encryption at `q` in `u` is probabilistic w.r.t. `terms`:
/// its randomness occurs only as the third argument of this very
/// encryption.
pub fn is_probabilistic<'a>(u: &Term, q: &Position, terms: impl IntoIterator<Item = &'a Term>) -> bool {
    let cipher = u.subterm_at(q).expect("encryption position");
    let randomness = cipher.arg(2);
    terms.into_iter().all(|v| {
        v.occurrences(randomness).into_iter().all(|p| match (p.parent(), p.steps().last()) {
            (Some(parent), Some(3)) => v.subterm_at(&parent).unwrap() == cipher,
            _ => false,
        })
    })
}

fn is_agent(cipher: &Term, names: &BTreeSet<Ident>, secret: Option<&str>) -> bool {
    cipher.arg(2).as_name().is_some_and(|r| names.contains(r) && Some(&**r) != secret)
}

fn encryption_positions(t: &Term) -> Vec<Position> {
    t.positions().into_iter().filter(|p| t.subterm_at(p).unwrap().symbol().is_some_and(|f| f.is_encryption())).collect()
}

/// Basic well-formedness for secret `s`.
pub fn check_well_formed_frame(frame: &Frame, s: &str) -> FrameReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let restricted = frame.restricted();
    let terms: Vec<&Term> = frame.terms().collect();
    for (h, t) in frame.bindings() {
        for q in encryption_positions(t) {
            let c = t.subterm_at(&q).unwrap();
            if !is_agent(c, restricted, Some(s)) {
                violations.push(Violation {
                    condition: 1,
                    handle: h.to_string(),
                    position: q.clone(),
                    explanation: format!("randomness {} of {} is not a restricted name other than {s}", c.arg(2), c),
                });
            } else if !is_probabilistic(t, &q, terms.iter().copied()) {
                violations.push(Violation {
                    condition: 1,
                    handle: h.to_string(),
                    position: q.clone(),
                    explanation: format!("randomness {} of {} is reused elsewhere in the frame", c.arg(2), c),
                });
            }
        }
        for p in t.positions() {
            let u = t.subterm_at(&p).unwrap();
            let Some(f) = u.symbol() else { continue };
            let guarded: &[usize] = match f {
                Symbol::Enc | Symbol::Enca => &[2, 3],
                Symbol::Sign => &[2],
                Symbol::Pub | Symbol::Priv => &[1],
                _ => &[],
            };
            for &i in guarded {
                if u.arg(i - 1).contains_name(s) {
                    let role = if i == 3 { "randomness" } else { "key" };
                    violations.push(Violation {
                        condition: 2,
                        handle: h.to_string(),
                        position: p.child(i as u32),
                        explanation: format!("{s} occurs in the {role} of {u}"),
                    });
                    if f == Symbol::Enc
                        && i == 2
                        && u.arg(0).as_name().is_some_and(|n| restricted.contains(n) && &**n != s)
                    {
                        warnings.push(format!(
                            "{s} is used as a key for {u}, whose plaintext has no verifiable part; the frame may still keep {s} strongly secret, but the well-formedness conditions reject it"
                        ));
                    }
                }
            }
            if f.is_destructor() {
                violations.push(Violation {
                    condition: 3,
                    handle: h.to_string(),
                    position: p.clone(),
                    explanation: format!("destructor {} occurs in {u}", f.name()),
                });
            }
        }
    }
    FrameReport { definition: FrameDefinition::WellFormed, secret: s.to_string(), violations, warnings }
}

/// Lowest encryption plaintext-above `qs` that is an agent encryption
/// w.r.t. `names \ {s}`.
pub fn lowest_agent_encryption_above(t: &Term, qs: &Position, names: &BTreeSet<Ident>, s: &str) -> Option<Position> {
    qs.prefixes()
        .into_iter()
        .filter(|q| q.is_strict_prefix_of(qs))
        .filter(|q| {
            let u = t.subterm_at(q).unwrap();
            u.symbol().is_some_and(|f| f.is_encryption()) && q.child(1).is_prefix_of(qs) && is_agent(u, names, Some(s))
        })
        .max_by_key(|q| q.len())
}

/// Extended well-formedness for secret `s`.
pub fn check_extended_well_formed(frame: &Frame, s: &str) -> FrameReport {
    let mut violations = Vec::new();
    let restricted = frame.restricted();
    let terms: Vec<&Term> = frame.terms().collect();
    let secret = Term::name(s);
    for (h, t) in frame.bindings() {
        if !is_normal(t) {
            violations.push(Violation {
                condition: 1,
                handle: h.to_string(),
                position: Position::root(),
                explanation: format!("{t} is not in normal form"),
            });
        }
        for q in encryption_positions(t) {
            let c = t.subterm_at(&q).unwrap();
            if is_agent(c, restricted, None) && !is_probabilistic(t, &q, terms.iter().copied()) {
                violations.push(Violation {
                    condition: 2,
                    handle: h.to_string(),
                    position: q.clone(),
                    explanation: format!("agent encryption {c} shares its randomness {}", c.arg(2)),
                });
            }
        }
        for qs in t.occurrences(&secret) {
            match lowest_agent_encryption_above(t, &qs, restricted, s) {
                None => violations.push(Violation {
                    condition: 3,
                    handle: h.to_string(),
                    position: qs.clone(),
                    explanation: format!("no agent encryption has this occurrence of {s} in its plaintext"),
                }),
                Some(q0) => {
                    for q in qs.prefixes() {
                        if q0.is_strict_prefix_of(&q) && q.is_strict_prefix_of(&qs) {
                            let f = t.subterm_at(&q).unwrap().symbol();
                            if !matches!(f, Some(Symbol::Pair) | Some(Symbol::Sign)) {
                                violations.push(Violation {
                                    condition: 4,
                                    handle: h.to_string(),
                                    position: q.clone(),
                                    explanation: format!(
                                        "{} occurs between the agent encryption at {q0} and {s}",
                                        t.subterm_at(&q).unwrap()
                                    ),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    FrameReport {
        definition: FrameDefinition::ExtendedWellFormed,
        secret: s.to_string(),
        violations,
        warnings: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(s: &str) -> Frame {
        Frame::parse(s).unwrap()
    }

    #[test]
    fn shared_randomness_breaks_condition_one() {
        let psi1 = frame("frame { restrict s, k, r; x -> enc(s,k,r); y -> enc(n,k,r); }");
        let rep = check_well_formed_frame(&psi1, "s");
        assert_eq!(rep.failed_conditions(), [1].into_iter().collect());
    }

    #[test]
    fn secret_as_key_breaks_condition_two() {
        let psi2 = frame("frame { restrict s, n; x -> enc(<n,n'>,s,r); }");
        let rep = check_well_formed_frame(&psi2, "s");
        assert!(rep.failed_conditions().contains(&2));
        assert!(rep.violations.iter().any(|v| v.condition == 2 && v.position == Position::new(vec![2])));
        assert!(rep.warnings.is_empty());
        let quiet = frame("frame { restrict s, n, r; x -> enc(n,s,r); }");
        let rep = check_well_formed_frame(&quiet, "s");
        assert_eq!(rep.failed_conditions(), [2].into_iter().collect());
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn destructors_break_condition_three() {
        let psi3 = frame("frame { restrict s; x -> pi1(s); }");
        assert_eq!(check_well_formed_frame(&psi3, "s").failed_conditions(), [3].into_iter().collect());
    }

    #[test]
    fn signatures_pass() {
        let psi4 = frame("frame { restrict s; x -> sign(s,priv(a)); y -> pub(a); }");
        assert!(check_well_formed_frame(&psi4, "s").passed());
    }

    #[test]
    fn extended_examples() {
        let phi = frame(
            "frame { restrict s, k, n; x -> pi1(enc(a,enc(<b,s>,k,n),n'')); y -> enc(a,k',n'); z -> enc(b,k',n'); }",
        );
        assert!(check_extended_well_formed(&phi, "s").passed());
        let phi2 = frame("frame { restrict n; y -> enc(a,k,n); z -> enc(b,k,n); }");
        assert_eq!(check_extended_well_formed(&phi2, "s").failed_conditions(), [2].into_iter().collect());
        let phi3 = frame("frame { restrict n; x -> enc(a,s,n); }");
        assert_eq!(check_extended_well_formed(&phi3, "s").failed_conditions(), [3].into_iter().collect());
        let phi4 = frame("frame { restrict s, k, n; x -> enc(pi1(s),k,n); }");
        assert_eq!(check_extended_well_formed(&phi4, "s").failed_conditions(), [4].into_iter().collect());
    }
}
