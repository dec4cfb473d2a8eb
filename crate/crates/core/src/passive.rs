//! Strong secrecy against a passive attacker: a well-formed frame that does
//! not reveal its secret keeps it strongly secret. Sampled instantiations
//! are checked for static equivalence as evidence.

use std::fmt;

use serde::Serialize;

use crate::deduce::deduce;
use crate::equiv::{static_equiv, EquivalenceVerdict};
use crate::frame::{Frame, FrameError};
use crate::term::Term;
use crate::wellformed::{check_well_formed_frame, FrameReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassiveVerdict {
    StrongSecrecyHolds,
    NotStronglySecret,
    NotWellFormed,
}

impl fmt::Display for PassiveVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PassiveVerdict::StrongSecrecyHolds => "strong secrecy holds",
            PassiveVerdict::NotStronglySecret => "not strongly secret",
            PassiveVerdict::NotWellFormed => "not well-formed: transfer theorem inapplicable",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleResult {
    pub left: String,
    pub right: String,
    pub result: EquivalenceVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct PassiveReport {
    pub secret: String,
    pub well_formed: FrameReport,
    /// Recipe deducing the secret, if any.
    pub recipe: Option<String>,
    /// `(T, n₁)`: holds once the secret is `n₁` and fails once it is `n₂`.
    pub distinguishing_test: Option<(String, String)>,
    pub samples: Vec<SampleResult>,
    pub verdict: PassiveVerdict,
}

/// Two public names `n1, n2, …` unused by the frame.
fn fresh_pair(frame: &Frame) -> (Term, Term) {
    let mut names = frame.names();
    names.extend(frame.restricted().iter().cloned());
    let mut fresh = (1..).map(|i| format!("n{i}")).filter(|n| !names.contains(n.as_str())).map(|n| Term::name(&n));
    (fresh.next().unwrap(), fresh.next().unwrap())
}

/// Passive transfer check for `s` in `phi`. With no samples, a pair of
/// fresh public names is used.
pub fn check_passive_transfer(
    phi: &Frame,
    s: &str,
    samples: &[(Term, Term)],
    depth: usize,
) -> Result<PassiveReport, FrameError> {
    if !phi.is_restricted(s) {
        return Err(FrameError::NotRestricted(s.to_string()));
    }
    let well_formed = check_well_formed_frame(phi, s);
    let recipe = deduce(phi, &Term::name(s));
    let defaults = [fresh_pair(phi)];
    let n1 = defaults[0].0.clone();
    let samples = if samples.is_empty() { &defaults[..] } else { samples };
    let mut results = Vec::new();
    for (m, m2) in samples {
        let result = static_equiv(&phi.instantiate(s, m)?, &phi.instantiate(s, m2)?, depth)?;
        results.push(SampleResult { left: m.to_string(), right: m2.to_string(), result });
    }
    let verdict = if recipe.is_some() {
        PassiveVerdict::NotStronglySecret
    } else if !well_formed.passed() {
        PassiveVerdict::NotWellFormed
    } else {
        PassiveVerdict::StrongSecrecyHolds
    };
    Ok(PassiveReport {
        secret: s.to_string(),
        well_formed,
        distinguishing_test: recipe.as_ref().map(|r| (r.to_string(), n1.to_string())),
        recipe: recipe.map(|r| r.to_string()),
        samples: results,
        verdict,
    })
}

impl fmt::Display for PassiveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "well-formed for {}: {}", self.secret, if self.well_formed.passed() { "yes" } else { "no" })?;
        for v in &self.well_formed.violations {
            writeln!(f, "  {v}")?;
        }
        match (&self.recipe, &self.distinguishing_test) {
            (Some(r), Some((u, v))) => {
                writeln!(f, "{} deducible with recipe {r}; test ({u} = {v}) distinguishes", self.secret)?
            }
            _ => writeln!(f, "{} not deducible", self.secret)?,
        }
        for sample in &self.samples {
            let r = &sample.result;
            write!(
                f,
                "{} vs {}: {}",
                sample.left,
                sample.right,
                if r.equivalent { "equivalent" } else { "distinguished" }
            )?;
            if let Some(w) = &r.witness {
                write!(f, " by ({} = {})", w.left, w.right)?;
            }
            writeln!(f)?;
        }
        write!(f, "verdict: {}", self.verdict)
    }
}
