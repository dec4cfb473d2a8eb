//! Corpus self-test: every manifest entry is analyzed, checked against the
//! expectations transcribed in `manifest.json`, and diffed against its
//! golden file in `goldens/`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use strongsec::equiv::static_equiv;
use strongsec::explore::ExplorationBounds;
use strongsec::passive::check_passive_transfer;
use strongsec::secrecy::{canonical, verdict, ESets};
use strongsec::syntax::parse_internal_term;
use strongsec::term::Term;
use strongsec::wellformed::{check_extended_well_formed, check_well_formed_frame};

use crate::commands::{load_frame, load_process, term, CliError, Outcome};

#[derive(Debug, Deserialize)]
pub struct Manifest {
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Process,
    Frame,
    ExtendedFrame,
}

#[derive(Debug, Deserialize)]
pub struct Entry {
    pub name: String,
    pub kind: Kind,
    pub file: String,
    pub secret: String,
    #[serde(default)]
    pub expect: Expect,
}

/// Values taken from the worked examples; absent fields are not checked.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub verdict: Option<String>,
    pub well_formed_failures: Option<Vec<u8>>,
    pub no_test_failures: Option<Vec<u8>>,
    pub generations: Option<Vec<Vec<String>>>,
    pub openers: Option<Vec<Vec<String>>>,
    pub max_openers: Option<Vec<Vec<String>>>,
    pub output_destructors: Option<Vec<String>>,
    pub tested: Option<Vec<String>>,
    pub instantiation: Option<(String, String)>,
    pub witness: Option<(String, String)>,
}

fn internal(src: &str) -> Result<Term, CliError> {
    parse_internal_term(src).map_err(|e| CliError::Corpus(format!("manifest term `{src}`: {e}")))
}

fn canonical_set<'a>(ts: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Term> {
    ts.into_iter().map(canonical).collect()
}

fn expected_set(srcs: &[String]) -> Result<BTreeSet<Term>, CliError> {
    srcs.iter().map(|s| internal(s).map(|t| canonical(&t))).collect()
}

fn show(set: &BTreeSet<Term>) -> String {
    set.iter().map(Term::to_string).collect::<Vec<_>>().join(", ")
}

fn compare_set(what: &str, got: &BTreeSet<Term>, want: &BTreeSet<Term>, out: &mut Vec<String>) {
    if got != want {
        let missing: BTreeSet<Term> = want.difference(got).cloned().collect();
        let extra: BTreeSet<Term> = got.difference(want).cloned().collect();
        out.push(format!("{what}: missing {{{}}}, unexpected {{{}}}", show(&missing), show(&extra)));
    }
}

fn compare_generations(
    what: &str,
    es: &ESets,
    want: &[Vec<String>],
    pick: impl Fn(usize) -> Vec<Term>,
    out: &mut Vec<String>,
) -> Result<(), CliError> {
    if es.generations.len() != want.len() {
        out.push(format!("{what}: {} generations, expected {}", es.generations.len(), want.len()));
    }
    for (i, w) in want.iter().enumerate().take(es.generations.len()) {
        compare_set(&format!("{what}[{i}]"), &canonical_set(&pick(i)), &expected_set(w)?, out);
    }
    Ok(())
}

fn process_entry(dir: &Path, e: &Entry, mismatches: &mut Vec<String>) -> Result<Value, CliError> {
    let (p, _) = load_process(&dir.join(&e.file))?;
    let rep = verdict(&p, &e.secret, ExplorationBounds::default());
    let es = &rep.esets;
    let x = &e.expect;
    if let Some(v) = &x.verdict {
        if v != rep.verdict.label() {
            mismatches.push(format!("verdict {}, expected {v}", rep.verdict.label()));
        }
    }
    let wf: Vec<u8> = rep.well_formed.failed_conditions().into_iter().collect();
    let nt: Vec<u8> = rep.no_test_over_secret.failed_conditions().into_iter().collect();
    if x.well_formed_failures.as_ref().is_some_and(|w| *w != wf) {
        mismatches
            .push(format!("well-formedness failures {wf:?}, expected {:?}", x.well_formed_failures.as_ref().unwrap()));
    }
    if x.no_test_failures.as_ref().is_some_and(|w| *w != nt) {
        mismatches
            .push(format!("no-test-over-secret failures {nt:?}, expected {:?}", x.no_test_failures.as_ref().unwrap()));
    }
    if let Some(w) = &x.generations {
        compare_generations(
            "E",
            es,
            w,
            |i| es.generations[i].ciphers.iter().map(|c| c.term.clone()).collect(),
            mismatches,
        )?;
    }
    if let Some(w) = &x.openers {
        compare_generations("openers", es, w, |i| es.generations[i].openers.clone(), mismatches)?;
    }
    if let Some(w) = &x.max_openers {
        compare_generations("max openers", es, w, |i| es.generations[i].max_openers.clone(), mismatches)?;
    }
    if let Some(w) = &x.output_destructors {
        compare_set("D_o", &canonical_set(&es.output_destructors), &expected_set(w)?, mismatches);
    }
    if let Some(w) = &x.tested {
        compare_set("M_t^s", &canonical_set(&es.tested), &expected_set(w)?, mismatches);
    }
    let strs = |ts: &[Term]| ts.iter().map(Term::to_string).collect::<Vec<_>>();
    let generations: Vec<Value> = es
        .generations
        .iter()
        .map(|g| {
            json!({
                "ciphers": g.ciphers.iter().map(|c| json!({
                    "term": c.term.to_string(),
                    "canonical": c.canonical.to_string(),
                    "opener": c.opener.to_string(),
                })).collect::<Vec<_>>(),
                "openers": strs(&g.openers),
                "max_openers": strs(&g.max_openers),
            })
        })
        .collect();
    Ok(json!({
        "name": e.name,
        "secret": e.secret,
        "verdict": rep.verdict.label(),
        "well_formed_failures": wf,
        "no_test_failures": nt,
        "generations": generations,
        "output_destructors": strs(&es.output_destructors),
        "tested": strs(&es.tested),
        "exploration": rep.evidence.as_ref().map(|ev| json!({
            "states": ev.states,
            "frames": ev.frames,
            "truncated": ev.truncated,
            "secret_within_bounds": ev.secret_within_bounds(),
        })),
    }))
}

fn frame_entry(dir: &Path, e: &Entry, mismatches: &mut Vec<String>) -> Result<Value, CliError> {
    let (f, _) = load_frame(&dir.join(&e.file))?;
    let x = &e.expect;
    if e.kind == Kind::ExtendedFrame {
        let rep = check_extended_well_formed(&f, &e.secret);
        let failed: Vec<u8> = rep.failed_conditions().into_iter().collect();
        if x.well_formed_failures.as_ref().is_some_and(|w| *w != failed) {
            mismatches
                .push(format!("extended failures {failed:?}, expected {:?}", x.well_formed_failures.as_ref().unwrap()));
        }
        return Ok(json!({ "name": e.name, "extended_failures": failed }));
    }
    let wf: Vec<u8> = check_well_formed_frame(&f, &e.secret).failed_conditions().into_iter().collect();
    if x.well_formed_failures.as_ref().is_some_and(|w| *w != wf) {
        mismatches
            .push(format!("well-formedness failures {wf:?}, expected {:?}", x.well_formed_failures.as_ref().unwrap()));
    }
    let mut out = json!({ "name": e.name, "well_formed_failures": wf });
    if let Some((m1, m2)) = &x.instantiation {
        let (m1, m2) = (term(m1)?, term(m2)?);
        let (f1, f2) = (f.instantiate(&e.secret, &m1)?, f.instantiate(&e.secret, &m2)?);
        let v = static_equiv(&f1, &f2, 2)?;
        if v.equivalent {
            mismatches.push(format!("instantiations {m1} and {m2} are not distinguished"));
        }
        out["distinguished"] = json!(!v.equivalent);
        out["witness"] = json!(v.witness.as_ref().map(|w| [w.left.to_string(), w.right.to_string()]));
        if let Some((u, w)) = &x.witness {
            let (u, w) = (f.parse_recipe(u)?, f.parse_recipe(w)?);
            if f1.passes_test(&u, &w) == f2.passes_test(&u, &w) {
                mismatches.push(format!("test ({u} = {w}) does not separate {m1} from {m2}"));
            }
            out["expected_witness_separates"] = json!(f1.passes_test(&u, &w) != f2.passes_test(&u, &w));
        }
        let passive = check_passive_transfer(&f, &e.secret, &[(m1, m2)], 2)?;
        out["passive_verdict"] = serde_json::to_value(passive.verdict).unwrap();
    }
    Ok(out)
}

/// Lists the top-level fields where two summaries differ.
fn diff_fields(got: &Value, want: &Value) -> Vec<String> {
    match (got.as_object(), want.as_object()) {
        (Some(g), Some(w)) => {
            let keys: BTreeSet<&String> = g.keys().chain(w.keys()).collect();
            keys.into_iter()
                .filter(|k| g.get(*k) != w.get(*k))
                .map(|k| {
                    format!(
                        "{k}: got {}, golden {}",
                        g.get(k).map_or("-".into(), Value::to_string),
                        w.get(k).map_or("-".into(), Value::to_string)
                    )
                })
                .collect()
        }
        _ => vec!["golden is not an object".into()],
    }
}

pub fn selftest(dir: &Path, only: Option<&str>, update: bool) -> Result<Outcome, CliError> {
    let manifest_path = dir.join("manifest.json");
    let (src, digest) = crate::commands::read(&manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&src).map_err(|e| CliError::Corpus(format!("{}: {e}", manifest_path.display())))?;
    let entries: Vec<&Entry> = manifest.entries.iter().filter(|e| only.is_none_or(|n| n == e.name)).collect();
    if entries.is_empty() {
        return Err(CliError::Usage(format!("no corpus entry named `{}`", only.unwrap_or_default())));
    }
    let goldens = dir.join("goldens");
    let mut human = String::new();
    let mut results = Vec::new();
    let mut all_ok = true;
    for e in entries {
        let mut mismatches = Vec::new();
        let summary = match e.kind {
            Kind::Process => process_entry(dir, e, &mut mismatches)?,
            Kind::Frame | Kind::ExtendedFrame => frame_entry(dir, e, &mut mismatches)?,
        };
        let golden_path = goldens.join(format!("{}.json", e.name));
        let rendered = serde_json::to_string_pretty(&summary).unwrap() + "\n";
        let mut golden_notes = Vec::new();
        if update {
            let old = std::fs::read_to_string(&golden_path).ok();
            if old.as_deref() != Some(rendered.as_str()) {
                std::fs::create_dir_all(&goldens).map_err(|source| CliError::Io { path: goldens.clone(), source })?;
                std::fs::write(&golden_path, &rendered)
                    .map_err(|source| CliError::Io { path: golden_path.clone(), source })?;
                golden_notes.push(format!("wrote {}", golden_path.display()));
            }
        } else {
            match std::fs::read_to_string(&golden_path) {
                Ok(g) => {
                    let want: Value = serde_json::from_str(&g)
                        .map_err(|err| CliError::Corpus(format!("{}: {err}", golden_path.display())))?;
                    for d in diff_fields(&summary, &want) {
                        mismatches.push(format!("golden mismatch, {d}"));
                    }
                }
                Err(_) => {
                    mismatches.push(format!("no golden at {} (run with --update-goldens)", golden_path.display()))
                }
            }
        }
        let ok = mismatches.is_empty();
        all_ok &= ok;
        writeln!(human, "{} {}", if ok { "PASS" } else { "FAIL" }, e.name).unwrap();
        for m in mismatches.iter().chain(&golden_notes) {
            writeln!(human, "    {m}").unwrap();
        }
        results.push(json!({ "name": e.name, "passed": ok, "mismatches": mismatches, "summary": summary }));
    }
    let passed = results.iter().filter(|r| r["passed"] == json!(true)).count();
    write!(human, "{passed}/{} entries pass", results.len()).unwrap();
    Ok(Outcome {
        command: "corpus",
        inputs: vec![digest],
        verdict: if all_ok { "pass" } else { "fail" }.into(),
        exit: if all_ok { 0 } else { 1 },
        report: json!({ "entries": results }),
        human,
    })
}
