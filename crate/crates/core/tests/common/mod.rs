//! Random generators shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use strongsec::frame::Frame;
use strongsec::term::{Ident, Symbol, Term};

pub const NAMES: [&str; 6] = ["a", "b", "k", "n", "m", "r"];

fn name(rng: &mut impl Rng, pool: &[&str]) -> Term {
    Term::name(pool.choose(rng).unwrap())
}

/// Random term of depth at most `depth`, biased towards redexes so that
/// rewriting has something to do.
pub fn random_term(rng: &mut impl Rng, depth: usize) -> Term {
    if depth <= 1 || rng.gen_bool(0.15) {
        return name(rng, &NAMES);
    }
    let d = depth - 1;
    match rng.gen_range(0..14) {
        0 => {
            let inner = Term::pair(random_term(rng, d.saturating_sub(1)), random_term(rng, d.saturating_sub(1)));
            if rng.gen_bool(0.5) {
                Term::proj1(inner)
            } else {
                Term::proj2(inner)
            }
        }
        1 => {
            let k = random_term(rng, 2);
            let key2 = if rng.gen_bool(0.8) { k.clone() } else { random_term(rng, 2) };
            let c = Term::enc(random_term(rng, d.saturating_sub(1)), k, name(rng, &NAMES));
            Term::dec(c, key2)
        }
        2 => {
            let x = name(rng, &NAMES);
            let y = if rng.gen_bool(0.8) { x.clone() } else { name(rng, &NAMES) };
            let c = Term::app(
                Symbol::Enca,
                vec![random_term(rng, d.saturating_sub(1)), Term::app(Symbol::Pub, vec![x]), name(rng, &NAMES)],
            );
            Term::app(Symbol::Deca, vec![c, Term::app(Symbol::Priv, vec![y])])
        }
        3 => {
            let m = random_term(rng, d.saturating_sub(1).min(3));
            let x = name(rng, &NAMES);
            let m2 = if rng.gen_bool(0.8) { m.clone() } else { random_term(rng, 2) };
            let sig = Term::app(Symbol::Sign, vec![m2, Term::app(Symbol::Priv, vec![x.clone()])]);
            Term::app(Symbol::Check, vec![m, sig, Term::app(Symbol::Pub, vec![x])])
        }
        4 => {
            let sig = Term::app(Symbol::Sign, vec![random_term(rng, d.saturating_sub(1)), random_term(rng, 2)]);
            Term::app(Symbol::Retrieve, vec![sig])
        }
        _ => {
            let f = *Symbol::ALL.choose(rng).unwrap();
            let args = (0..f.arity()).map(|_| random_term(rng, d)).collect();
            Term::app(f, args)
        }
    }
}

/// A random ground term containing at least one redex.
pub fn random_reducible_term(rng: &mut impl Rng, depth: usize) -> Term {
    loop {
        let t = random_term(rng, depth);
        if strongsec::rewrite::reduce_once(&t).is_some() {
            return t;
        }
    }
}

const FRAME_RESTRICTED: [&str; 6] = ["s", "k1", "k2", "n1", "r1", "r2"];
const FRAME_FREE: [&str; 3] = ["a", "b", "c"];

fn frame_name(rng: &mut impl Rng) -> Term {
    if rng.gen_bool(0.65) {
        name(rng, &FRAME_RESTRICTED)
    } else {
        name(rng, &FRAME_FREE)
    }
}

fn frame_term(rng: &mut impl Rng, depth: usize, destructors: bool) -> Term {
    if depth <= 1 || rng.gen_bool(0.25) {
        return frame_name(rng);
    }
    let d = depth - 1;
    let pick = rng.gen_range(0..10);
    match pick {
        0..=2 => Term::pair(frame_term(rng, d, destructors), frame_term(rng, d, destructors)),
        3..=5 => Term::enc(frame_term(rng, d, destructors), frame_name(rng), name(rng, &["r1", "r2", "c"])),
        6 => Term::app(
            Symbol::Enca,
            vec![
                frame_term(rng, d, destructors),
                Term::app(Symbol::Pub, vec![name(rng, &["k1", "a"])]),
                name(rng, &["r1", "r2"]),
            ],
        ),
        7 => {
            if rng.gen_bool(0.5) {
                Term::app(Symbol::Priv, vec![name(rng, &["k1", "a"])])
            } else {
                Term::app(Symbol::Pub, vec![name(rng, &["k1", "a"])])
            }
        }
        8 => Term::app(
            Symbol::Sign,
            vec![frame_term(rng, d, destructors), Term::app(Symbol::Priv, vec![name(rng, &["k1", "a"])])],
        ),
        _ => {
            if destructors {
                match rng.gen_range(0..3) {
                    0 => Term::proj1(frame_term(rng, d, destructors)),
                    1 => Term::dec(frame_term(rng, d, destructors), frame_name(rng)),
                    _ => Term::app(Symbol::Retrieve, vec![frame_term(rng, d, destructors)]),
                }
            } else {
                frame_name(rng)
            }
        }
    }
}

/// Random frame with up to `max_bindings` bindings of depth at most `depth`.
pub fn random_frame(rng: &mut impl Rng, max_bindings: usize, depth: usize) -> Frame {
    let n = rng.gen_range(1..=max_bindings);
    let handles = ["x", "y", "w", "v"];
    let mut bindings: Vec<(Ident, Term)> = Vec::new();
    for h in handles.iter().take(n) {
        let destructors = rng.gen_bool(0.3);
        bindings.push((Ident::from(*h), frame_term(rng, depth, destructors)));
    }
    Frame::new(FRAME_RESTRICTED.iter().map(|s| Ident::from(*s)), bindings).unwrap()
}

/// A random deduction target over the frame's vocabulary.
pub fn random_target(rng: &mut impl Rng, frame: &Frame) -> Term {
    let subterms: Vec<Term> = frame
        .terms()
        .flat_map(|t| strongsec::rewrite::normalize(t).subterms().into_iter().cloned().collect::<Vec<_>>())
        .collect();
    match rng.gen_range(0..4) {
        0 | 1 if !subterms.is_empty() => subterms.choose(rng).unwrap().clone(),
        2 if !subterms.is_empty() => Term::pair(subterms.choose(rng).unwrap().clone(), frame_name(rng)),
        _ => frame_name(rng),
    }
}

/// Two frames over the same handles obtained by instantiating a shared
/// skeleton with two different values for `s`, occasionally perturbed.
pub fn random_frame_pair(rng: &mut impl Rng, max_bindings: usize, depth: usize) -> (Frame, Frame) {
    let base = random_frame(rng, max_bindings, depth);
    let values = ["a", "b", "n1", "k1"];
    let v1 = Term::name(values.choose(rng).unwrap());
    let v2 = Term::name(values.choose(rng).unwrap());
    let inst = |v: &Term| {
        let bindings: Vec<(Ident, Term)> =
            base.bindings().iter().map(|(h, t)| (h.clone(), t.instantiate_name("s", v))).collect();
        Frame::new(base.restricted().iter().cloned(), bindings).unwrap()
    };
    let f1 = inst(&v1);
    let mut f2 = inst(&v2);
    if rng.gen_bool(0.2) {
        // replace one binding by a fresh random term
        let i = rng.gen_range(0..f2.len());
        let mut bindings: Vec<(Ident, Term)> = f2.bindings().to_vec();
        bindings[i].1 = frame_term(rng, depth, false);
        f2 = Frame::new(f2.restricted().iter().cloned(), bindings).unwrap();
    }
    (f1, f2)
}

/// A frame satisfying the well-formedness conditions for `s`: constructors
/// only, every encryption with its own restricted randomness, and `s` only
/// in plaintext positions. Keys are drawn so that `s` is sometimes
/// deducible (public key, or key disclosed by another binding).
pub fn random_well_formed_frame(rng: &mut impl Rng, max_bindings: usize, depth: usize) -> Frame {
    let mut counter = 0usize;
    let n = rng.gen_range(1..=max_bindings);
    let handles = ["x", "y", "w", "v"];
    let mut restricted: Vec<Ident> = ["s", "k1", "k2", "n1"].iter().map(|s| Ident::from(*s)).collect();
    let mut bindings = Vec::new();
    for h in handles.iter().take(n) {
        let t = wf_term(rng, depth, &mut counter, &mut restricted);
        bindings.push((Ident::from(*h), t));
    }
    Frame::new(restricted, bindings).unwrap()
}

fn wf_key(rng: &mut impl Rng) -> Term {
    name(rng, &["k1", "k2", "a", "n1"])
}

fn wf_term(rng: &mut impl Rng, depth: usize, counter: &mut usize, restricted: &mut Vec<Ident>) -> Term {
    if depth <= 1 || rng.gen_bool(0.25) {
        return name(rng, &["s", "s", "n1", "k1", "k2", "a", "b"]);
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 | 1 => Term::pair(wf_term(rng, d, counter, restricted), wf_term(rng, d, counter, restricted)),
        2..=4 => {
            let m = wf_term(rng, d, counter, restricted);
            *counter += 1;
            let r = format!("r{counter}");
            restricted.push(Ident::from(r.as_str()));
            Term::enc(m, wf_key(rng), Term::name(&r))
        }
        5 => Term::app(
            Symbol::Sign,
            vec![wf_term(rng, d, counter, restricted), Term::app(Symbol::Priv, vec![name(rng, &["k1", "a"])])],
        ),
        _ => {
            let m = wf_term(rng, d, counter, restricted);
            *counter += 1;
            let r = format!("r{counter}");
            restricted.push(Ident::from(r.as_str()));
            Term::app(Symbol::Enca, vec![m, Term::app(Symbol::Pub, vec![name(rng, &["k1", "a"])]), Term::name(&r)])
        }
    }
}
