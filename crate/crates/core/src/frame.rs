//! Frames `νñ.σ`: restricted names plus handle bindings recording what the
//! intruder has observed, with test evaluation and instantiation of a secret.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::rewrite::normalize;
use crate::syntax::{Mode, ParseError, Parser, Tok};
use crate::term::{Ident, Substitution, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("binding of `{0}` is not ground")]
    NotGround(String),
    #[error("handle `{0}` is bound twice")]
    DuplicateHandle(String),
    #[error("frames have different domains: {0} vs {1}")]
    DomainMismatch(String, String),
    #[error("`{0}` is not public")]
    NotPublic(String),
    #[error("`{0}` is restricted in the frame")]
    NameClash(String),
    #[error("`{0}` is not a restricted name of the frame")]
    NotRestricted(String),
    #[error("recipe `{recipe}` uses `{var}`, which is not a handle of the frame")]
    UnknownHandle { recipe: String, var: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A frame `νñ.{y1 ↦ M1, …, yl ↦ Ml}` with ground bindings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    restricted: BTreeSet<Ident>,
    bindings: Vec<(Ident, Term)>,
}

impl Frame {
    pub fn new<R, B>(restricted: R, bindings: B) -> Result<Frame, FrameError>
    where
        R: IntoIterator<Item = Ident>,
        B: IntoIterator<Item = (Ident, Term)>,
    {
        let restricted: BTreeSet<Ident> = restricted.into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (h, t) in bindings {
            if !t.is_ground() {
                return Err(FrameError::NotGround(h.to_string()));
            }
            if !seen.insert(h.clone()) {
                return Err(FrameError::DuplicateHandle(h.to_string()));
            }
            out.push((h, t));
        }
        Ok(Frame { restricted, bindings: out })
    }

    /// Convenience constructor from string slices; panics on non-ground input.
    pub fn from_parts(restricted: &[&str], bindings: &[(&str, Term)]) -> Frame {
        Frame::new(
            restricted.iter().map(|s| Ident::from(*s)),
            bindings.iter().map(|(h, t)| (Ident::from(*h), t.clone())),
        )
        .expect("well-typed frame")
    }

    pub fn restricted(&self) -> &BTreeSet<Ident> {
        &self.restricted
    }

    pub fn is_restricted(&self, n: &str) -> bool {
        self.restricted.contains(n)
    }

    pub fn bindings(&self) -> &[(Ident, Term)] {
        &self.bindings
    }

    pub fn handles(&self) -> impl Iterator<Item = &Ident> {
        self.bindings.iter().map(|(h, _)| h)
    }

    pub fn handle_names(&self) -> Vec<String> {
        self.handles().map(|h| h.to_string()).collect()
    }

    pub fn domain(&self) -> BTreeSet<Ident> {
        self.handles().cloned().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.bindings.iter().map(|(_, t)| t)
    }

    pub fn get(&self, handle: &str) -> Option<&Term> {
        self.bindings.iter().find(|(h, _)| &**h == handle).map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn substitution(&self) -> Substitution {
        let mut s = Substitution::new();
        for (h, t) in &self.bindings {
            s.insert(h.clone(), t.clone());
        }
        s
    }

    /// Names occurring in the bindings and not restricted.
    pub fn free_names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        for t in self.terms() {
            out.extend(t.free_names());
        }
        out.retain(|n| !self.restricted.contains(n));
        out
    }

    /// All names occurring in the bindings.
    pub fn names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        for t in self.terms() {
            out.extend(t.free_names());
        }
        out
    }

    /// Appends a binding (used when an output reaches the intruder).
    pub fn extend(&self, handle: Ident, t: Term) -> Result<Frame, FrameError> {
        let mut f = self.clone();
        if f.get(&handle).is_some() {
            return Err(FrameError::DuplicateHandle(handle.to_string()));
        }
        if !t.is_ground() {
            return Err(FrameError::NotGround(handle.to_string()));
        }
        f.bindings.push((handle, t));
        Ok(f)
    }

    pub fn with_restricted(&self, extra: impl IntoIterator<Item = Ident>) -> Frame {
        let mut f = self.clone();
        f.restricted.extend(extra);
        f
    }

    /// The frame with every binding normalized.
    pub fn normalized(&self) -> Frame {
        Frame {
            restricted: self.restricted.clone(),
            bindings: self.bindings.iter().map(|(h, t)| (h.clone(), normalize(t))).collect(),
        }
    }

    /// `φ[s ↦ M]`.
    pub fn instantiate(&self, s: &str, m: &Term) -> Result<Frame, FrameError> {
        if !self.restricted.contains(s) {
            return Err(FrameError::NotRestricted(s.to_string()));
        }
        if m.contains_symbol(Symbol::Priv) || !m.is_ground() {
            return Err(FrameError::NotPublic(m.to_string()));
        }
        if let Some(n) = m.free_names().into_iter().find(|n| self.restricted.contains(n)) {
            return Err(FrameError::NameClash(n.to_string()));
        }
        Ok(Frame {
            restricted: self.restricted.clone(),
            bindings: self.bindings.iter().map(|(h, t)| (h.clone(), t.instantiate_name(s, m))).collect(),
        })
    }

    /// The substitution with restricted names renamed to `#r0, #r1, …`
    /// (in sorted order), so that no user-written name can capture them.
    pub fn renamed_substitution(&self) -> Substitution {
        let renaming: BTreeMap<&str, Term> =
            self.restricted.iter().enumerate().map(|(i, n)| (&**n, Term::name(&format!("#r{i}")))).collect();
        let mut s = Substitution::new();
        for (h, t) in &self.bindings {
            let t2 = t.map_leaves(&mut |leaf| leaf.as_name().and_then(|n| renaming.get(&**n).cloned()));
            s.insert(h.clone(), t2);
        }
        s
    }

    /// The same frame with restricted names renamed to `#r0, #r1, …`; user
    /// input can never mention these names, so every name in a recipe is free.
    pub fn alpha_renamed(&self) -> Frame {
        let sigma = self.renamed_substitution();
        Frame {
            restricted: (0..self.restricted.len()).map(|i| Ident::from(format!("#r{i}").as_str())).collect(),
            bindings: self.bindings.iter().map(|(h, _)| (h.clone(), sigma.get(h).unwrap().clone())).collect(),
        }
    }

    /// Checks that `recipe` only uses handles of the frame as variables and
    /// is priv-free.
    pub fn check_recipe(&self, recipe: &Term) -> Result<(), FrameError> {
        if let Some(v) = recipe.variables().into_iter().find(|v| self.get(v).is_none()) {
            return Err(FrameError::UnknownHandle { recipe: recipe.to_string(), var: v.to_string() });
        }
        if recipe.contains_symbol(Symbol::Priv) {
            return Err(FrameError::NotPublic(recipe.to_string()));
        }
        Ok(())
    }

    /// Whether `recipe` is public w.r.t. the frame: priv-free and mentioning
    /// no restricted name.
    pub fn is_public_recipe(&self, recipe: &Term) -> bool {
        recipe.is_public(&self.restricted) && recipe.variables().iter().all(|v| self.get(v).is_some())
    }

    /// Applies σ to `recipe` without renaming and normalizes.
    pub fn apply(&self, recipe: &Term) -> Term {
        normalize(&recipe.apply(&self.substitution()))
    }

    /// `(U = V)φ`: restricted names are α-renamed apart from the test first.
    pub fn passes_test(&self, u: &Term, v: &Term) -> bool {
        let sigma = self.renamed_substitution();
        normalize(&u.apply(&sigma)) == normalize(&v.apply(&sigma))
    }

    /// Parses the frame file format:
    /// `frame { restrict s, k, r; x -> enc(s,k,r); y -> k; }`.
    pub fn parse(src: &str) -> Result<Frame, FrameError> {
        let mut p = Parser::new(src, Mode::User)?;
        let (kw, tok) = p.expect_ident()?;
        if kw != "frame" {
            return Err(p.error_at(&tok, "expected `frame`").into());
        }
        p.expect(Tok::LBrace)?;
        let mut restricted = Vec::new();
        let mut bindings = Vec::new();
        let mut seen = BTreeSet::new();
        while *p.peek() != Tok::RBrace {
            if p.at_keyword("restrict") || p.at_keyword("new") {
                p.next();
                if *p.peek() != Tok::Semi {
                    loop {
                        let (n, _) = p.expect_ident()?;
                        restricted.push(Ident::from(n.as_str()));
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                p.expect(Tok::Semi)?;
                continue;
            }
            let (h, tok) = p.expect_ident()?;
            if Symbol::from_name(&h).is_some() {
                return Err(p.error_at(&tok, format!("`{h}` is a function symbol, not a handle")).into());
            }
            if !seen.insert(h.clone()) {
                return Err(p.error_at(&tok, format!("handle `{h}` is bound twice")).into());
            }
            p.expect(Tok::Arrow)?;
            let t = p.term()?;
            if !t.is_ground() {
                let v = t.variables().into_iter().next().unwrap();
                return Err(p
                    .error_at(&tok, format!("binding of `{h}` mentions variable `{v}`; frame terms must be ground"))
                    .into());
            }
            bindings.push((Ident::from(h.as_str()), t));
            if !p.eat(&Tok::Semi) && *p.peek() != Tok::RBrace {
                return Err(p.error_here("expected `;` or `}`").into());
            }
        }
        p.expect(Tok::RBrace)?;
        p.expect_eof()?;
        Frame::new(restricted, bindings)
    }

    /// Parses a recipe whose variables are this frame's handles.
    pub fn parse_recipe(&self, src: &str) -> Result<Term, FrameError> {
        let names = self.handle_names();
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let t = crate::syntax::parse_term_with_vars(src, &vars)?;
        self.check_recipe(&t)?;
        Ok(t)
    }

    /// Same-domain check used by equivalence procedures.
    pub fn check_same_domain(&self, other: &Frame) -> Result<(), FrameError> {
        if self.domain() != other.domain() {
            let show = |f: &Frame| f.handle_names().join(",");
            return Err(FrameError::DomainMismatch(show(self), show(other)));
        }
        Ok(())
    }

    /// Mathematical rendering: `νs, k.{x ↦ enc(s, k, r)}`.
    pub fn pretty(&self) -> String {
        let names: Vec<&str> = self.restricted.iter().map(|n| &**n).collect();
        let binds: Vec<String> = self.bindings.iter().map(|(h, t)| format!("{h} ↦ {}", t.pretty())).collect();
        format!("ν{}.{{{}}}", names.join(", "), binds.join(", "))
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "frame {{ restrict ")?;
        let names: Vec<&str> = self.restricted.iter().map(|n| &**n).collect();
        write!(f, "{};", names.join(", "))?;
        for (h, t) in &self.bindings {
            write!(f, " {h} -> {t};")?;
        }
        write!(f, " }}")
    }
}

impl serde::Serialize for Frame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let restricted: Vec<&str> = self.restricted.iter().map(|n| &**n).collect();
        let bindings: Vec<(&str, &Term)> = self.bindings.iter().map(|(h, t)| (&**h, t)).collect();
        let mut st = s.serialize_struct("Frame", 2)?;
        st.serialize_field("restricted", &restricted)?;
        st.serialize_field("bindings", &bindings)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn example_frames() -> (Frame, Frame) {
        let f1 = Frame::parse("frame { restrict k, n1, n2, r1; x -> enc(n1,k,r1); y -> <n1,n2>; z -> k; }").unwrap();
        let f2 = Frame::parse("frame { restrict k, n1, n2, r1; x -> enc(n2,k,r2); y -> <n1,n2>; z -> k; }").unwrap();
        (f1, f2)
    }

    #[test]
    fn parse_and_display_round_trip() {
        let f = Frame::parse("frame { restrict s, k, r; x -> enc(s,k,r); y -> k; }").unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.is_restricted("s"));
        assert_eq!(Frame::parse(&f.to_string()).unwrap(), f);
        assert_eq!(f.pretty(), "νk, r, s.{x ↦ enc(s, k, r), y ↦ k}");
    }

    #[test]
    fn parse_errors() {
        assert!(Frame::parse("frame { x -> enc(z,k,r); }").is_err());
        assert!(Frame::parse("frame { x -> a; x -> b; }").is_err());
        assert!(Frame::parse("frame { x -> a").is_err());
    }

    #[test]
    fn tests_from_the_static_equivalence_example() {
        let (f1, f2) = example_frames();
        let u = f1.parse_recipe("dec(x,z)").unwrap();
        let v = f1.parse_recipe("pi1(y)").unwrap();
        assert!(f1.passes_test(&u, &v));
        assert!(!f2.passes_test(&u, &v));
        let x = f1.parse_recipe("x").unwrap();
        assert!(f1.passes_test(&x, &x));
    }

    #[test]
    fn restricted_names_are_renamed_apart_from_tests() {
        let f = Frame::parse("frame { restrict n; x -> n; }").unwrap();
        let x = f.parse_recipe("x").unwrap();
        assert!(!f.passes_test(&x, &t("n")));
        let g = Frame::parse("frame { x -> n; }").unwrap();
        assert!(g.passes_test(&x, &t("n")));
    }

    #[test]
    fn instantiation() {
        let f = Frame::parse("frame { restrict s, k, r; x -> enc(s,k,r); }").unwrap();
        let g = f.instantiate("s", &t("a")).unwrap();
        assert_eq!(g.get("x"), Some(&t("enc(a,k,r)")));
        assert_eq!(g.restricted(), f.restricted());
        assert!(matches!(f.instantiate("s", &t("priv(a)")), Err(FrameError::NotPublic(_))));
        assert!(matches!(f.instantiate("s", &t("k")), Err(FrameError::NameClash(_))));
        assert!(matches!(f.instantiate("a", &t("b")), Err(FrameError::NotRestricted(_))));
    }

    #[test]
    fn key_position_instantiation_enables_a_test() {
        let psi2 = Frame::parse("frame { restrict s, n; x -> enc(<n,n'>,s,r); }").unwrap();
        let g = psi2.instantiate("s", &t("k")).unwrap();
        let u = g.parse_recipe("pi2(dec(x,k))").unwrap();
        assert!(g.passes_test(&u, &t("n'")));
        let h = psi2.instantiate("s", &t("k'")).unwrap();
        assert!(!h.passes_test(&u, &t("n'")));
    }

    #[test]
    fn recipe_must_use_known_handles() {
        let f = Frame::parse("frame { x -> a; }").unwrap();
        assert!(f.parse_recipe("pair(x, w)").is_ok());
        let g = Frame::parse("frame { x -> a; }").unwrap();
        assert!(g.check_recipe(&t("pair(z9, a)")).is_err());
        assert!(g.check_recipe(&t("priv(a)")).is_err());
    }
}
